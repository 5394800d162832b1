#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace permdet::apk {

struct NotAxml : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TruncatedChunk : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadStringIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr uint32_t kNoEntry = 0xFFFFFFFF;

// Typed-value dataType bytes we care about.
constexpr uint8_t kTypeString = 0x03;

struct StringPool {
    enum class Encoding { Utf16le, Utf8 };
    std::vector<std::string> strings;  // decoded to UTF-8
    Encoding encoding = Encoding::Utf16le;
    bool sorted_flag = false;

    const std::string& at(uint32_t idx) const {
        if (idx >= strings.size()) throw BadStringIndex("string index " + std::to_string(idx));
        return strings[idx];
    }
};

struct AxmlAttribute {
    uint32_t ns_idx = kNoEntry;
    uint32_t name_idx = kNoEntry;
    uint32_t raw_value_idx = kNoEntry;
    uint8_t value_type = 0;
    uint32_t value_data = 0;
    // From the resource map, aligned by attribute-name index.
    std::optional<uint32_t> resource_id;
};

struct AxmlElement {
    std::string ns;    // namespace URI, empty when none
    std::string name;
    std::vector<AxmlAttribute> attributes;
    std::vector<size_t> children;  // indices into ManifestDocument::elements
};

// Decoded binary-XML tree. `elements` is an arena in start-tag (document)
// order; `roots` indexes the top-level elements.
struct ManifestDocument {
    StringPool pool;
    std::vector<AxmlElement> elements;
    std::vector<size_t> roots;
    std::vector<uint32_t> resource_map;
    size_t warnings = 0;

    bool has_resource_map() const { return !resource_map.empty(); }
    const AxmlElement* root() const {
        return roots.empty() ? nullptr : &elements[roots.front()];
    }
};

// Decodes an AndroidManifest.xml binary-XML buffer. Unknown chunk types are
// skipped by chunkSize; malformed attributes are skipped and counted in
// `warnings` rather than failing the parse.
ManifestDocument parse_axml(std::span<const uint8_t> bytes);

}  // namespace permdet::apk
