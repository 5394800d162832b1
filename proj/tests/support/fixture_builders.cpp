#include "fixture_builders.hpp"

#include <zlib.h>

#include <cstring>
#include <stdexcept>

namespace testsupport {

namespace {

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
}
void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

std::vector<uint8_t> chunk(uint16_t type, const std::vector<uint8_t>& header_extra,
                           const std::vector<uint8_t>& body,
                           std::optional<uint16_t> header_size = std::nullopt) {
    std::vector<uint8_t> out;
    put_u16(out, type);
    put_u16(out, header_size.value_or(static_cast<uint16_t>(8 + header_extra.size())));
    put_u32(out, static_cast<uint32_t>(8 + header_extra.size() + body.size()));
    out.insert(out.end(), header_extra.begin(), header_extra.end());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::vector<uint8_t> string_pool(const std::vector<std::string>& strings, bool utf8) {
    std::vector<uint8_t> data;
    std::vector<uint32_t> offsets;
    for (const auto& s : strings) {
        offsets.push_back(static_cast<uint32_t>(data.size()));
        if (utf8) {
            data.push_back(static_cast<uint8_t>(s.size()));  // utf16 length
            data.push_back(static_cast<uint8_t>(s.size()));  // byte length
            data.insert(data.end(), s.begin(), s.end());
            data.push_back(0);
        } else {
            put_u16(data, static_cast<uint16_t>(s.size()));
            for (char c : s) put_u16(data, static_cast<uint16_t>(c));
            put_u16(data, 0);
        }
    }
    while (data.size() % 4) data.push_back(0);

    std::vector<uint8_t> header_extra;
    put_u32(header_extra, static_cast<uint32_t>(strings.size()));
    put_u32(header_extra, 0);                                   // style count
    put_u32(header_extra, utf8 ? 0x00000100u : 0u);             // flags
    put_u32(header_extra, static_cast<uint32_t>(28 + 4 * strings.size()));
    put_u32(header_extra, 0);                                   // styles start

    std::vector<uint8_t> body;
    for (uint32_t off : offsets) put_u32(body, off);
    body.insert(body.end(), data.begin(), data.end());
    return chunk(0x0001, header_extra, body, 28);
}

std::vector<uint8_t> node_extra() {
    std::vector<uint8_t> e;
    put_u32(e, 1);           // line number
    put_u32(e, 0xFFFFFFFF);  // comment
    return e;
}

std::vector<uint8_t> start_element(uint32_t name_idx, const std::vector<TestAttr>& attrs,
                                   uint32_t ns_idx = 0xFFFFFFFF) {
    std::vector<uint8_t> body;
    put_u32(body, ns_idx);
    put_u32(body, name_idx);
    put_u16(body, 20);  // attr start
    put_u16(body, 20);  // attr size
    put_u16(body, static_cast<uint16_t>(attrs.size()));
    put_u16(body, 0);
    put_u16(body, 0);
    put_u16(body, 0);
    for (const auto& a : attrs) {
        put_u32(body, a.ns);
        put_u32(body, a.name);
        put_u32(body, a.raw);
        put_u16(body, 8);  // typed value size
        body.push_back(0);  // res0
        body.push_back(a.type);
        put_u32(body, a.data);
    }
    return chunk(0x0102, node_extra(), body, 16);
}

std::vector<uint8_t> end_element(uint32_t name_idx, uint32_t ns_idx = 0xFFFFFFFF) {
    std::vector<uint8_t> body;
    put_u32(body, ns_idx);
    put_u32(body, name_idx);
    return chunk(0x0103, node_extra(), body, 16);
}

}  // namespace

std::vector<uint8_t> build_manifest(const TestManifestSpec& spec) {
    std::vector<std::string> strings;
    auto intern = [&](const std::string& s) -> uint32_t {
        for (size_t i = 0; i < strings.size(); ++i)
            if (strings[i] == s) return static_cast<uint32_t>(i);
        strings.push_back(s);
        return static_cast<uint32_t>(strings.size() - 1);
    };

    const std::string ns_uri = "http://schemas.android.com/apk/res/android";
    std::string name_literal = spec.obfuscate_name ? "q0_obf" : "name";
    uint32_t name_idx = 0;
    if (spec.resource_map) name_idx = intern(name_literal);
    uint32_t ns_idx = intern(ns_uri);
    uint32_t prefix_idx = intern("android");
    uint32_t manifest_idx = intern("manifest");
    uint32_t uses_idx = intern("uses-permission");
    uint32_t uses23_idx = intern("uses-permission-sdk-23");
    if (!spec.resource_map) name_idx = intern(name_literal);
    std::vector<uint32_t> perm_idx;
    for (const auto& p : spec.permissions) perm_idx.push_back(intern(p));

    std::vector<std::vector<uint8_t>> chunks;
    chunks.push_back(string_pool(strings, spec.utf8_pool));
    if (spec.resource_map) {
        std::vector<uint8_t> body;
        put_u32(body, 0x01010003);
        chunks.push_back(chunk(0x0180, {}, body));
    }
    if (spec.unknown_chunk) {
        std::vector<uint8_t> body = {0xde, 0xad, 0xbe, 0xef};
        chunks.push_back(chunk(0x00FF, {}, body));
    }
    {
        std::vector<uint8_t> body;
        put_u32(body, prefix_idx);
        put_u32(body, ns_idx);
        chunks.push_back(chunk(0x0100, node_extra(), body, 16));
    }
    chunks.push_back(start_element(manifest_idx, {}));
    for (size_t i = 0; i < perm_idx.size(); ++i) {
        bool sdk23 = std::find(spec.sdk23.begin(), spec.sdk23.end(), i) != spec.sdk23.end();
        uint32_t elem = sdk23 ? uses23_idx : uses_idx;
        TestAttr attr;
        attr.ns = ns_idx;
        attr.name = name_idx;
        attr.raw = perm_idx[i];
        attr.type = 0x03;
        attr.data = perm_idx[i];
        chunks.push_back(start_element(elem, {attr}));
        chunks.push_back(end_element(elem));
    }
    chunks.push_back(end_element(manifest_idx));
    {
        std::vector<uint8_t> body;
        put_u32(body, prefix_idx);
        put_u32(body, ns_idx);
        chunks.push_back(chunk(0x0101, node_extra(), body, 16));
    }

    std::vector<uint8_t> doc;
    put_u16(doc, 0x0003);
    put_u16(doc, 8);
    size_t total = 8;
    for (const auto& c : chunks) total += c.size();
    put_u32(doc, static_cast<uint32_t>(total));
    for (const auto& c : chunks) doc.insert(doc.end(), c.begin(), c.end());
    return doc;
}

std::vector<uint8_t> build_zip(const std::vector<ZipEntrySpec>& entries) {
    struct Central {
        std::string name;
        uint16_t method;
        uint32_t crc;
        uint32_t csize;
        uint32_t usize;
        uint32_t offset;
    };
    std::vector<uint8_t> out;
    std::vector<Central> centrals;

    for (const auto& e : entries) {
        uint32_t crc = static_cast<uint32_t>(
            ::crc32(::crc32(0L, Z_NULL, 0), e.data.data(),
                    static_cast<uInt>(e.data.size())));
        std::vector<uint8_t> payload;
        uint16_t method = 0;
        if (e.deflate) {
            method = 8;
            payload.resize(compressBound(static_cast<uLong>(e.data.size())) + 16);
            z_stream zs{};
            deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8,
                         Z_DEFAULT_STRATEGY);
            zs.next_in = const_cast<Bytef*>(e.data.data());
            zs.avail_in = static_cast<uInt>(e.data.size());
            zs.next_out = payload.data();
            zs.avail_out = static_cast<uInt>(payload.size());
            if (deflate(&zs, Z_FINISH) != Z_STREAM_END)
                throw std::runtime_error("test zip: deflate failed");
            payload.resize(payload.size() - zs.avail_out);
            deflateEnd(&zs);
        } else {
            payload = e.data;
        }

        Central c{e.name, method, crc, static_cast<uint32_t>(payload.size()),
                  static_cast<uint32_t>(e.data.size()),
                  static_cast<uint32_t>(out.size())};
        centrals.push_back(c);

        put_u32(out, 0x04034b50);
        put_u16(out, 20);      // version needed
        put_u16(out, 0);       // flags
        put_u16(out, method);
        put_u16(out, 0);       // time
        put_u16(out, 0);       // date
        put_u32(out, crc);
        put_u32(out, c.csize);
        put_u32(out, c.usize);
        put_u16(out, static_cast<uint16_t>(e.name.size()));
        put_u16(out, 0);       // extra len
        out.insert(out.end(), e.name.begin(), e.name.end());
        out.insert(out.end(), payload.begin(), payload.end());
    }

    uint32_t cd_start = static_cast<uint32_t>(out.size());
    for (const auto& c : centrals) {
        put_u32(out, 0x02014b50);
        put_u16(out, 20);  // version made by
        put_u16(out, 20);  // version needed
        put_u16(out, 0);   // flags
        put_u16(out, c.method);
        put_u16(out, 0);   // time
        put_u16(out, 0);   // date
        put_u32(out, c.crc);
        put_u32(out, c.csize);
        put_u32(out, c.usize);
        put_u16(out, static_cast<uint16_t>(c.name.size()));
        put_u16(out, 0);   // extra
        put_u16(out, 0);   // comment
        put_u16(out, 0);   // disk
        put_u16(out, 0);   // internal attrs
        put_u32(out, 0);   // external attrs
        put_u32(out, c.offset);
        out.insert(out.end(), c.name.begin(), c.name.end());
    }
    uint32_t cd_size = static_cast<uint32_t>(out.size()) - cd_start;

    put_u32(out, 0x06054b50);
    put_u16(out, 0);  // disk
    put_u16(out, 0);  // cd disk
    put_u16(out, static_cast<uint16_t>(centrals.size()));
    put_u16(out, static_cast<uint16_t>(centrals.size()));
    put_u32(out, cd_size);
    put_u32(out, cd_start);
    put_u16(out, 0);  // comment length
    return out;
}

std::vector<uint8_t> str_bytes(const std::string& s) {
    return std::vector<uint8_t>(s.begin(), s.end());
}

}  // namespace testsupport
