#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "permdet/apk/axml.hpp"
#include "permdet/apk/batch.hpp"
#include "permdet/apk/permissions.hpp"
#include "permdet/apk/zip.hpp"
#include "permdet/corpus/corpus_io.hpp"
#include "permdet/util/hash.hpp"
#include "permdet/util/rng.hpp"
#include "support/fixture_builders.hpp"

using namespace permdet;
using testsupport::TestManifestSpec;

namespace {

std::vector<std::string> perms_of(const std::vector<uint8_t>& manifest) {
    auto doc = apk::parse_axml(manifest);
    return apk::extract_permissions(doc).permissions;
}

std::filesystem::path make_temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("permdet_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& p, const std::vector<uint8_t>& data) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
}

}  // namespace

TEST_CASE("zip: stored and deflated entries round-trip with matching crc") {
    std::vector<uint8_t> text;
    for (int i = 0; i < 2000; ++i) text.push_back(static_cast<uint8_t>('a' + i % 7));
    auto zip = testsupport::build_zip({
        {"stored.txt", testsupport::str_bytes("plain payload"), false},
        {"deflated.bin", text, true},
    });

    auto stored = apk::read_apk_entry(zip, "stored.txt");
    CHECK(std::string(stored.begin(), stored.end()) == "plain payload");
    auto inflated = apk::read_apk_entry(zip, "deflated.bin");
    CHECK(inflated == text);

    apk::ZipReader reader(zip);
    for (const auto& meta : reader.entries()) {
        auto bytes = reader.read(meta);
        CHECK(bytes.size() == meta.uncompressed_size);
        CHECK(util::crc32_of(bytes) == meta.crc32);
    }
}

TEST_CASE("zip: error taxonomy") {
    auto zip = testsupport::build_zip({{"a.txt", testsupport::str_bytes("x"), false}});
    CHECK_THROWS_AS(apk::read_apk_entry(zip, "nope.xml"), apk::EntryNotFound);

    auto truncated = zip;
    truncated.resize(truncated.size() - 8);  // destroys the EOCD
    CHECK_THROWS_AS(apk::read_apk_entry(truncated, "a.txt"), apk::BadArchive);

    CHECK_THROWS_AS(apk::read_apk_entry(std::vector<uint8_t>{}, "a.txt"),
                    apk::BadArchive);

    // Unsupported compression method: patch both method fields (local header
    // offset 8, central entry offset cd_start+10).
    auto bad_method = testsupport::build_zip(
        {{"m", testsupport::str_bytes("data"), false}});
    apk::ZipReader probe(bad_method);
    auto meta = probe.entries().front();
    bad_method[meta.local_header_offset + 8] = 99;
    for (size_t i = 0; i + 4 < bad_method.size(); ++i) {
        if (bad_method[i] == 0x50 && bad_method[i + 1] == 0x4b &&
            bad_method[i + 2] == 0x01 && bad_method[i + 3] == 0x02) {
            bad_method[i + 10] = 99;
            break;
        }
    }
    CHECK_THROWS_AS(apk::read_apk_entry(bad_method, "m"), apk::UnsupportedMethod);

    // Flip a payload byte of a stored entry: crc must catch it.
    auto corrupt = testsupport::build_zip(
        {{"c", testsupport::str_bytes("payload-bytes"), false}});
    apk::ZipReader probe2(corrupt);
    auto meta2 = probe2.entries().front();
    corrupt[meta2.local_header_offset + 30 + meta2.name.size()] ^= 0xFF;
    CHECK_THROWS_AS(apk::read_apk_entry(corrupt, "c"), apk::CrcMismatch);
}

TEST_CASE("axml: minimal manifest parses to a manifest root") {
    TestManifestSpec spec;
    auto doc = apk::parse_axml(testsupport::build_manifest(spec));
    REQUIRE(doc.root() != nullptr);
    CHECK(doc.root()->name == "manifest");
    CHECK(doc.root()->children.empty());
    CHECK(apk::extract_permissions(doc).permissions.empty());
}

TEST_CASE("axml: utf8 and utf16 pools decode to identical documents") {
    TestManifestSpec u16;
    u16.permissions = {"android.permission.INTERNET", "android.permission.SEND_SMS"};
    TestManifestSpec u8 = u16;
    u8.utf8_pool = true;

    auto doc16 = apk::parse_axml(testsupport::build_manifest(u16));
    auto doc8 = apk::parse_axml(testsupport::build_manifest(u8));
    CHECK(doc16.pool.encoding == apk::StringPool::Encoding::Utf16le);
    CHECK(doc8.pool.encoding == apk::StringPool::Encoding::Utf8);
    CHECK(doc16.pool.strings == doc8.pool.strings);
    REQUIRE(doc16.elements.size() == doc8.elements.size());
    for (size_t i = 0; i < doc16.elements.size(); ++i) {
        CHECK(doc16.elements[i].name == doc8.elements[i].name);
        CHECK(doc16.elements[i].children == doc8.elements[i].children);
    }
    CHECK(apk::extract_permissions(doc16).permissions ==
          apk::extract_permissions(doc8).permissions);
}

TEST_CASE("axml: unknown chunk types are skipped") {
    TestManifestSpec plain;
    plain.permissions = {"android.permission.CAMERA"};
    TestManifestSpec with_unknown = plain;
    with_unknown.unknown_chunk = true;
    CHECK(perms_of(testsupport::build_manifest(plain)) ==
          perms_of(testsupport::build_manifest(with_unknown)));
}

TEST_CASE("axml: error taxonomy") {
    std::vector<uint8_t> not_axml = {0x01, 0x00, 0x08, 0x00, 0x08, 0, 0, 0};
    CHECK_THROWS_AS(apk::parse_axml(not_axml), apk::NotAxml);

    TestManifestSpec spec;
    spec.permissions = {"android.permission.INTERNET"};
    auto good = testsupport::build_manifest(spec);
    // Claim a bigger file than the buffer.
    auto overrun = good;
    overrun[4] = static_cast<uint8_t>((good.size() + 100) & 0xff);
    overrun[5] = static_cast<uint8_t>(((good.size() + 100) >> 8) & 0xff);
    CHECK_THROWS_AS(apk::parse_axml(overrun), apk::TruncatedChunk);
}

TEST_CASE("permissions: document order, dedupe, sdk23, empty") {
    TestManifestSpec spec;
    spec.permissions = {"android.permission.INTERNET", "android.permission.SEND_SMS"};
    CHECK(perms_of(testsupport::build_manifest(spec)) ==
          std::vector<std::string>{"android.permission.INTERNET",
                                   "android.permission.SEND_SMS"});

    TestManifestSpec dup;
    dup.permissions = {"android.permission.INTERNET", "android.permission.INTERNET"};
    CHECK(perms_of(testsupport::build_manifest(dup)) ==
          std::vector<std::string>{"android.permission.INTERNET"});

    TestManifestSpec sdk23;
    sdk23.permissions = {"android.permission.INTERNET",
                         "android.permission.BODY_SENSORS"};
    sdk23.sdk23 = {1};
    auto got = perms_of(testsupport::build_manifest(sdk23));
    CHECK(got == std::vector<std::string>{"android.permission.INTERNET",
                                          "android.permission.BODY_SENSORS"});
}

TEST_CASE("permissions: resource-id matching survives obfuscated names") {
    TestManifestSpec spec;
    spec.permissions = {"android.permission.SEND_SMS"};
    spec.resource_map = true;
    spec.obfuscate_name = true;
    CHECK(perms_of(testsupport::build_manifest(spec)) ==
          std::vector<std::string>{"android.permission.SEND_SMS"});
}

TEST_CASE("property: builder round-trip over random manifests") {
    util::Rng rng(20260809);
    const char* pool[] = {"android.permission.INTERNET",
                          "android.permission.SEND_SMS",
                          "android.permission.READ_CONTACTS",
                          "android.permission.CAMERA",
                          "android.permission.ACCESS_FINE_LOCATION",
                          "android.permission.RECEIVE_BOOT_COMPLETED"};
    for (int trial = 0; trial < 60; ++trial) {
        TestManifestSpec spec;
        size_t n = rng.index(8);
        for (size_t i = 0; i < n; ++i)
            spec.permissions.push_back(pool[rng.index(std::size(pool))]);
        spec.utf8_pool = rng.bernoulli(0.5);
        spec.resource_map = rng.bernoulli(0.5);
        spec.unknown_chunk = rng.bernoulli(0.3);

        std::vector<std::string> expected;
        for (const auto& p : spec.permissions)
            if (std::find(expected.begin(), expected.end(), p) == expected.end())
                expected.push_back(p);

        CHECK(perms_of(testsupport::build_manifest(spec)) == expected);
    }
}

TEST_CASE("property: truncation fuzz never crashes the parser") {
    TestManifestSpec spec;
    spec.permissions = {"android.permission.INTERNET", "android.permission.SEND_SMS"};
    spec.resource_map = true;
    auto bytes = testsupport::build_manifest(spec);
    for (size_t cut = 0; cut <= bytes.size(); ++cut) {
        std::vector<uint8_t> prefix(bytes.begin(),
                                    bytes.begin() + static_cast<long>(cut));
        try {
            auto doc = apk::parse_axml(prefix);
            (void)apk::extract_permissions(doc);
        } catch (const apk::NotAxml&) {
        } catch (const apk::TruncatedChunk&) {
        } catch (const apk::BadStringIndex&) {
        }
    }
    // Light mutation fuzz on top of truncation.
    util::Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        auto mutated = bytes;
        size_t flips = 1 + rng.index(4);
        for (size_t i = 0; i < flips; ++i)
            mutated[rng.index(mutated.size())] ^= static_cast<uint8_t>(rng.uniform(256));
        try {
            auto doc = apk::parse_axml(mutated);
            (void)apk::extract_permissions(doc);
        } catch (const apk::NotAxml&) {
        } catch (const apk::TruncatedChunk&) {
        } catch (const apk::BadStringIndex&) {
        }
    }
}

TEST_CASE("batch_extract: counts, isolation, id-sorted csv") {
    auto dir = make_temp_dir("batch");
    auto out_csv = dir / "out.csv";

    TestManifestSpec m1;
    m1.permissions = {"android.permission.INTERNET"};
    TestManifestSpec m2;
    m2.permissions = {"android.permission.SEND_SMS", "android.permission.CAMERA"};
    TestManifestSpec m3;  // no permissions

    auto mk_apk = [](const TestManifestSpec& s) {
        return testsupport::build_zip(
            {{"AndroidManifest.xml", testsupport::build_manifest(s), true}});
    };
    write_file(dir / "a.apk", mk_apk(m1));
    write_file(dir / "b.apk", mk_apk(m2));
    write_file(dir / "c.apk", mk_apk(m3));
    write_file(dir / "broken.apk", {0x50, 0x4b, 0x01, 0x02, 0xff});
    write_file(dir / "nomanifest.apk",
               testsupport::build_zip({{"other.txt", testsupport::str_bytes("x"), false}}));

    auto summary = apk::batch_extract(dir, out_csv);
    CHECK(summary.ok == 3);
    CHECK(summary.failed == 1);
    CHECK(summary.no_manifest == 1);

    auto records = corpus::read_corpus(out_csv);
    REQUIRE(records.size() == 3);
    for (size_t i = 1; i < records.size(); ++i) CHECK(records[i - 1].id < records[i].id);
    for (const auto& r : records) {
        CHECK(r.id.size() == 64);
        CHECK(r.label == corpus::Label::Unlabeled);
    }

    // Empty directory: header-only csv.
    auto empty_dir = make_temp_dir("batch_empty");
    auto summary2 = apk::batch_extract(empty_dir, empty_dir / "out.csv");
    CHECK(summary2.ok == 0);
    CHECK(summary2.failed == 0);
    CHECK(corpus::read_corpus(empty_dir / "out.csv").empty());

    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(empty_dir);
}
