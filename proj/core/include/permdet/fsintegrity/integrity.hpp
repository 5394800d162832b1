#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace permdet::fsintegrity {

struct TargetUnwritable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RootUnreadable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Canary files dropped before running an app under test; a changed hash
// afterwards is the tamper signal.
struct SentinelSpec {
    std::vector<std::string> formats = {"apk", "py", "docx", "sh", "bak"};
    size_t count_per_format = 1;
    std::filesystem::path target_dir;
    uint64_t seed = 0;
};

// Content is deterministic per (seed, format, index); same seed -> byte
// identical files.
std::vector<std::filesystem::path> create_sentinels(const SentinelSpec& spec);

struct SnapshotEntry {
    std::string path;  // relative to root, '/'-separated
    uint64_t size = 0;
    std::string sha256;  // lowercase hex; symlinks hash their target path
};

struct SnapshotManifest {
    std::string created_at;  // ISO-8601 UTC
    std::string root;
    std::vector<SnapshotEntry> entries;  // sorted by path, unique
};

// Hashes every regular file under root whose relative path matches one of
// the globs ('*' and '?', '*' crosses directory separators; empty list =
// everything). Symlinks are recorded by target path, never followed.
SnapshotManifest snapshot(const std::filesystem::path& root,
                          const std::vector<std::string>& include_globs = {});

void save_manifest(const SnapshotManifest& manifest,
                   const std::filesystem::path& path);
SnapshotManifest load_manifest(const std::filesystem::path& path);

struct DiffReport {
    std::vector<std::string> modified;  // same path, different hash
    std::vector<std::string> missing;   // in before only
    std::vector<std::string> added;     // in after only

    bool empty() const { return modified.empty() && missing.empty() && added.empty(); }
};

DiffReport diff(const SnapshotManifest& before, const SnapshotManifest& after);

void save_diff(const DiffReport& report, const std::filesystem::path& path);

}  // namespace permdet::fsintegrity
