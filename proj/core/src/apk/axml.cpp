#include "permdet/apk/axml.hpp"

#include "permdet/util/bytes.hpp"

namespace permdet::apk {

namespace {

constexpr uint16_t kResXmlType = 0x0003;
constexpr uint16_t kResStringPoolType = 0x0001;
constexpr uint16_t kResXmlResourceMapType = 0x0180;
constexpr uint16_t kResXmlStartNamespace = 0x0100;
constexpr uint16_t kResXmlEndNamespace = 0x0101;
constexpr uint16_t kResXmlStartElement = 0x0102;
constexpr uint16_t kResXmlEndElement = 0x0103;
constexpr uint16_t kResXmlCdata = 0x0104;

constexpr uint32_t kUtf8Flag = 0x00000100;
constexpr uint32_t kSortedFlag = 0x00000001;

struct ChunkHeader {
    uint16_t type = 0;
    uint16_t header_size = 0;
    uint32_t size = 0;
    size_t start = 0;  // absolute offset of the chunk in the buffer
};

void append_utf8(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Decodes one string-pool entry. Bad offsets or lengths yield an empty
// string and bump the warning tally; chunk-level bounds were already checked.
std::string decode_pool_string(std::span<const uint8_t> pool_data, uint32_t offset,
                               bool utf8, size_t& warnings) {
    if (offset >= pool_data.size()) {
        ++warnings;
        return {};
    }
    const uint8_t* p = pool_data.data() + offset;
    size_t avail = pool_data.size() - offset;
    std::string out;
    if (utf8) {
        // Dual length prefix: UTF-16 length then byte length, each one byte
        // with a high-bit extension to two bytes.
        size_t pos = 0;
        auto read_len = [&]() -> std::optional<uint32_t> {
            if (pos >= avail) return std::nullopt;
            uint32_t len = p[pos++];
            if (len & 0x80) {
                if (pos >= avail) return std::nullopt;
                len = ((len & 0x7F) << 8) | p[pos++];
            }
            return len;
        };
        auto u16_len = read_len();
        auto byte_len = read_len();
        if (!u16_len || !byte_len || pos + *byte_len > avail) {
            ++warnings;
            return {};
        }
        out.assign(reinterpret_cast<const char*>(p + pos), *byte_len);
    } else {
        if (avail < 2) {
            ++warnings;
            return {};
        }
        uint32_t len = util::read_u16le(p);
        size_t pos = 2;
        if (len & 0x8000) {
            if (avail < 4) {
                ++warnings;
                return {};
            }
            len = ((len & 0x7FFF) << 16) | util::read_u16le(p + 2);
            pos = 4;
        }
        if (pos + static_cast<size_t>(len) * 2 > avail) {
            ++warnings;
            return {};
        }
        out.reserve(len);
        for (uint32_t i = 0; i < len; ++i) {
            uint32_t cu = util::read_u16le(p + pos + i * 2);
            if (cu >= 0xD800 && cu <= 0xDBFF && i + 1 < len) {
                uint32_t lo = util::read_u16le(p + pos + (i + 1) * 2);
                if (lo >= 0xDC00 && lo <= 0xDFFF) {
                    cu = 0x10000 + ((cu - 0xD800) << 10) + (lo - 0xDC00);
                    ++i;
                }
            }
            append_utf8(out, cu);
        }
    }
    return out;
}

StringPool parse_string_pool(std::span<const uint8_t> chunk, size_t& warnings) {
    util::ByteReader r(chunk, 8);  // past chunk header
    uint32_t string_count = r.u32();
    r.skip(4);  // style count (styles are not used in manifests)
    uint32_t flags = r.u32();
    uint32_t strings_start = r.u32();
    r.skip(4);  // styles start

    StringPool pool;
    pool.encoding = (flags & kUtf8Flag) ? StringPool::Encoding::Utf8
                                        : StringPool::Encoding::Utf16le;
    pool.sorted_flag = (flags & kSortedFlag) != 0;

    if (string_count > chunk.size() / 4)
        throw TruncatedChunk("string pool count overruns chunk");
    if (strings_start > chunk.size())
        throw TruncatedChunk("string data offset overruns chunk");

    std::span<const uint8_t> string_data = chunk.subspan(strings_start);
    bool utf8 = pool.encoding == StringPool::Encoding::Utf8;
    pool.strings.reserve(string_count);
    for (uint32_t i = 0; i < string_count; ++i) {
        uint32_t off = r.u32();
        pool.strings.push_back(decode_pool_string(string_data, off, utf8, warnings));
    }
    return pool;
}

std::string resolve_name(const StringPool& pool, uint32_t idx) {
    // Element names must resolve; a bad index is a structural error.
    return pool.at(idx);
}

std::string resolve_optional(const StringPool& pool, uint32_t idx) {
    if (idx == kNoEntry || idx >= pool.strings.size()) return {};
    return pool.strings[idx];
}

}  // namespace

ManifestDocument parse_axml(std::span<const uint8_t> bytes) {
    if (bytes.size() < 8) throw NotAxml("buffer too small for chunk header");
    uint16_t type = util::read_u16le(bytes.data());
    uint16_t header_size = util::read_u16le(bytes.data() + 2);
    uint32_t file_size = util::read_u32le(bytes.data() + 4);
    if (type != kResXmlType) throw NotAxml("magic is not RES_XML_TYPE");
    if (file_size > bytes.size() || header_size > file_size)
        throw TruncatedChunk("file chunkSize overruns buffer");
    if (header_size < 8) throw TruncatedChunk("file headerSize below chunk header");

    ManifestDocument doc;
    std::vector<size_t> stack;  // open elements, indices into doc.elements

    size_t offset = header_size;
    const size_t end = file_size;
    while (offset < end) {
        if (offset + 8 > end) throw TruncatedChunk("trailing bytes shorter than chunk header");
        ChunkHeader h;
        h.type = util::read_u16le(bytes.data() + offset);
        h.header_size = util::read_u16le(bytes.data() + offset + 2);
        h.size = util::read_u32le(bytes.data() + offset + 4);
        h.start = offset;
        if (h.size < 8 || h.header_size < 8 || h.header_size > h.size)
            throw TruncatedChunk("chunk sizes inconsistent");
        if (offset + h.size > end) throw TruncatedChunk("chunkSize overruns buffer");
        std::span<const uint8_t> chunk = bytes.subspan(offset, h.size);

        try {
            switch (h.type) {
                case kResStringPoolType:
                    doc.pool = parse_string_pool(chunk, doc.warnings);
                    break;
                case kResXmlResourceMapType: {
                    size_t count = (h.size - h.header_size) / 4;
                    doc.resource_map.clear();
                    doc.resource_map.reserve(count);
                    util::ByteReader r(chunk, h.header_size);
                    for (size_t i = 0; i < count; ++i) doc.resource_map.push_back(r.u32());
                    break;
                }
                case kResXmlStartElement: {
                    // Node header is lineNumber + comment after the chunk
                    // header; the attrExt block follows at header_size.
                    util::ByteReader r(chunk, h.header_size);
                    size_t ext_start = r.pos();
                    uint32_t ns_idx = r.u32();
                    uint32_t name_idx = r.u32();
                    uint16_t attr_start = r.u16();
                    uint16_t attr_size = r.u16();
                    uint16_t attr_count = r.u16();
                    r.skip(6);  // id/class/style indexes

                    AxmlElement elem;
                    elem.ns = resolve_optional(doc.pool, ns_idx);
                    elem.name = resolve_name(doc.pool, name_idx);
                    if (attr_size >= 20 &&
                        static_cast<size_t>(attr_count) * attr_size <=
                            h.size - h.header_size) {
                        for (uint16_t i = 0; i < attr_count; ++i) {
                            size_t pos = ext_start + attr_start +
                                         static_cast<size_t>(i) * attr_size;
                            if (pos + 20 > chunk.size()) {
                                ++doc.warnings;
                                break;
                            }
                            util::ByteReader ar(chunk, pos);
                            AxmlAttribute attr;
                            attr.ns_idx = ar.u32();
                            attr.name_idx = ar.u32();
                            attr.raw_value_idx = ar.u32();
                            ar.skip(2);  // typed value size
                            ar.skip(1);  // res0
                            attr.value_type = ar.u8();
                            attr.value_data = ar.u32();
                            if (attr.name_idx < doc.resource_map.size())
                                attr.resource_id = doc.resource_map[attr.name_idx];
                            elem.attributes.push_back(attr);
                        }
                    } else if (attr_count > 0) {
                        ++doc.warnings;
                    }

                    size_t idx = doc.elements.size();
                    doc.elements.push_back(std::move(elem));
                    if (stack.empty())
                        doc.roots.push_back(idx);
                    else
                        doc.elements[stack.back()].children.push_back(idx);
                    stack.push_back(idx);
                    break;
                }
                case kResXmlEndElement: {
                    if (stack.empty())
                        ++doc.warnings;  // stray end tag
                    else
                        stack.pop_back();
                    break;
                }
                case kResXmlStartNamespace:
                case kResXmlEndNamespace:
                case kResXmlCdata:
                    break;  // carried by element ns indices / ignored
                default:
                    break;  // unknown chunk: skip by chunkSize
            }
        } catch (const util::TruncatedData&) {
            throw TruncatedChunk("chunk body overruns its declared size");
        }
        offset += h.size;
    }
    // Unclosed elements: tree is still usable, note the damage.
    doc.warnings += stack.size();
    return doc;
}

}  // namespace permdet::apk
