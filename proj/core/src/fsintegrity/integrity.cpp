#include "permdet/fsintegrity/integrity.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "permdet/util/hash.hpp"
#include "permdet/util/rng.hpp"

namespace permdet::fsintegrity {

namespace {

std::string iso8601_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// Recursive glob match with '*' (any run, crossing '/') and '?'.
bool glob_match(const char* pat, const char* str) {
    while (*pat) {
        if (*pat == '*') {
            while (*pat == '*') ++pat;
            if (!*pat) return true;
            for (const char* s = str; *s; ++s)
                if (glob_match(pat, s)) return true;
            return false;
        }
        if (!*str) return false;
        if (*pat != '?' && *pat != *str) return false;
        ++pat;
        ++str;
    }
    return !*str;
}

bool matches_any(const std::string& path, const std::vector<std::string>& globs) {
    if (globs.empty()) return true;
    for (const auto& g : globs)
        if (glob_match(g.c_str(), path.c_str())) return true;
    return false;
}

// Realistic-looking leading bytes per sentinel format; the remainder is
// seeded pseudorandom content.
std::vector<uint8_t> sentinel_content(const std::string& format, uint64_t seed,
                                      size_t index) {
    util::Rng rng(util::splitmix64(seed ^ util::fnv1a64(format) ^ (index * 0x9e37ULL)));
    std::vector<uint8_t> bytes;
    auto append = [&](const std::string& s) {
        bytes.insert(bytes.end(), s.begin(), s.end());
    };
    if (format == "apk" || format == "docx")
        append("PK\x03\x04");
    else if (format == "sh")
        append("#!/bin/sh\n# canary\n");
    else if (format == "py")
        append("# canary module\nCANARY = \"");
    size_t body = 256 + rng.index(256);
    for (size_t i = 0; i < body; ++i)
        bytes.push_back(static_cast<uint8_t>(rng.uniform(256)));
    if (format == "py") append("\"\n");
    return bytes;
}

}  // namespace

std::vector<std::filesystem::path> create_sentinels(const SentinelSpec& spec) {
    if (spec.formats.empty() || spec.count_per_format == 0)
        throw std::invalid_argument("sentinel spec needs formats and count >= 1");
    std::error_code ec;
    std::filesystem::create_directories(spec.target_dir, ec);
    std::vector<std::filesystem::path> created;
    for (const auto& format : spec.formats) {
        for (size_t i = 0; i < spec.count_per_format; ++i) {
            auto name = "sentinel_" + format + "_" + std::to_string(i) + "." + format;
            auto path = spec.target_dir / name;
            auto content = sentinel_content(format, spec.seed, i);
            std::ofstream out(path, std::ios::binary);
            if (!out) throw TargetUnwritable("cannot write " + path.string());
            out.write(reinterpret_cast<const char*>(content.data()),
                      static_cast<std::streamsize>(content.size()));
            if (!out) throw TargetUnwritable("write failed for " + path.string());
            created.push_back(path);
        }
    }
    return created;
}

SnapshotManifest snapshot(const std::filesystem::path& root,
                          const std::vector<std::string>& include_globs) {
    std::error_code ec;
    auto it = std::filesystem::recursive_directory_iterator(
        root, std::filesystem::directory_options::skip_permission_denied, ec);
    if (ec) throw RootUnreadable(root.string() + ": " + ec.message());

    SnapshotManifest manifest;
    manifest.created_at = iso8601_now();
    manifest.root = root.string();

    for (const auto& entry : it) {
        std::string rel = std::filesystem::relative(entry.path(), root).generic_string();
        if (!matches_any(rel, include_globs)) continue;
        if (entry.is_symlink()) {
            auto target = std::filesystem::read_symlink(entry.path(), ec);
            if (ec) continue;
            std::string t = target.generic_string();
            SnapshotEntry se;
            se.path = rel;
            se.size = t.size();
            se.sha256 = util::sha256_hex(
                std::span(reinterpret_cast<const uint8_t*>(t.data()), t.size()));
            manifest.entries.push_back(std::move(se));
        } else if (entry.is_regular_file()) {
            SnapshotEntry se;
            se.path = rel;
            se.size = entry.file_size(ec);
            if (ec) continue;
            se.sha256 = util::sha256_hex_file(entry.path());
            manifest.entries.push_back(std::move(se));
        }
    }
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const SnapshotEntry& a, const SnapshotEntry& b) {
                  return a.path < b.path;
              });
    return manifest;
}

void save_manifest(const SnapshotManifest& manifest,
                   const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["created_at"] = manifest.created_at;
    j["root"] = manifest.root;
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : manifest.entries)
        entries.push_back(nlohmann::ordered_json{
            {"path", e.path}, {"size", e.size}, {"sha256", e.sha256}});
    j["entries"] = std::move(entries);
    std::ofstream out(path);
    if (!out) throw TargetUnwritable("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

SnapshotManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RootUnreadable("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    SnapshotManifest manifest;
    manifest.created_at = j.at("created_at").get<std::string>();
    manifest.root = j.at("root").get<std::string>();
    for (const auto& je : j.at("entries")) {
        SnapshotEntry e;
        e.path = je.at("path").get<std::string>();
        e.size = je.at("size").get<uint64_t>();
        e.sha256 = je.at("sha256").get<std::string>();
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

DiffReport diff(const SnapshotManifest& before, const SnapshotManifest& after) {
    DiffReport report;
    // Both entry lists are sorted by path; walk them together.
    size_t i = 0, j = 0;
    while (i < before.entries.size() || j < after.entries.size()) {
        if (j >= after.entries.size() ||
            (i < before.entries.size() &&
             before.entries[i].path < after.entries[j].path)) {
            report.missing.push_back(before.entries[i].path);
            ++i;
        } else if (i >= before.entries.size() ||
                   after.entries[j].path < before.entries[i].path) {
            report.added.push_back(after.entries[j].path);
            ++j;
        } else {
            if (before.entries[i].sha256 != after.entries[j].sha256)
                report.modified.push_back(before.entries[i].path);
            ++i;
            ++j;
        }
    }
    return report;
}

void save_diff(const DiffReport& report, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["modified"] = report.modified;
    j["missing"] = report.missing;
    j["added"] = report.added;
    std::ofstream out(path);
    if (!out) throw TargetUnwritable("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace permdet::fsintegrity
