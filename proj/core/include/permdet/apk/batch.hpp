#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace permdet::apk {

struct ExtractionSummary {
    size_t ok = 0;
    size_t failed = 0;       // unreadable / bad archive / bad manifest
    size_t no_manifest = 0;  // valid archive without AndroidManifest.xml
    std::vector<std::string> failures;  // "path: reason", one per problem file
};

// Walks `apk_dir`, extracts the permission list of every APK, and writes one
// `id,text,label` CSV row per successfully parsed file (label left empty).
// Rows are sorted by id; per-file failures are recorded, never abort the
// batch. Throws OutputUnwritable only.
ExtractionSummary batch_extract(const std::filesystem::path& apk_dir,
                                const std::filesystem::path& out_csv);

}  // namespace permdet::apk
