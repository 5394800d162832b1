#include "permdet/apk/batch.hpp"

#include <algorithm>
#include <fstream>

#include "permdet/apk/axml.hpp"
#include "permdet/apk/permissions.hpp"
#include "permdet/apk/zip.hpp"
#include "permdet/corpus/corpus_io.hpp"
#include "permdet/corpus/record.hpp"
#include "permdet/util/hash.hpp"

namespace permdet::apk {

namespace {

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open");
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return data;
}

std::string join_tokens(const std::vector<std::string>& perms) {
    std::string text;
    for (size_t i = 0; i < perms.size(); ++i) {
        if (i) text += ' ';
        text += perms[i];
    }
    return text;
}

}  // namespace

ExtractionSummary batch_extract(const std::filesystem::path& apk_dir,
                                const std::filesystem::path& out_csv) {
    ExtractionSummary summary;
    corpus::Records records;

    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (auto it = std::filesystem::directory_iterator(apk_dir, ec);
         !ec && it != std::filesystem::directory_iterator(); ++it) {
        if (it->is_regular_file()) files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        try {
            auto bytes = read_file(path);
            ZipReader reader(bytes);
            const ZipEntryMeta* manifest = reader.find("AndroidManifest.xml");
            if (!manifest) {
                ++summary.no_manifest;
                summary.failures.push_back(path.filename().string() +
                                           ": no AndroidManifest.xml");
                continue;
            }
            auto manifest_bytes = reader.read(*manifest);
            ManifestDocument doc = parse_axml(manifest_bytes);
            PermissionList perms = extract_permissions(doc);

            corpus::CorpusRecord rec;
            rec.id = util::sha256_hex(bytes);
            rec.text = join_tokens(perms.permissions);
            rec.label = corpus::Label::Unlabeled;
            records.push_back(std::move(rec));
            ++summary.ok;
        } catch (const std::exception& e) {
            ++summary.failed;
            summary.failures.push_back(path.filename().string() + ": " + e.what());
        }
    }

    // Deterministic output regardless of directory iteration order.
    std::sort(records.begin(), records.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    corpus::write_corpus(out_csv, records);
    return summary;
}

}  // namespace permdet::apk
