#!/usr/bin/env python3
"""Builds fixture APKs with known manifests and freezes reference outputs.

The binary-XML builder and the reference decoder below are independent
implementations of the chunk layout: every fixture is decoded back by the
reference decoder and the result is asserted against the intended permission
list before it is written to expected.json.
"""

import json
import struct
import sys
import zipfile
import zlib
from pathlib import Path

RES_XML_TYPE = 0x0003
RES_STRING_POOL_TYPE = 0x0001
RES_XML_RESOURCE_MAP_TYPE = 0x0180
RES_XML_START_NAMESPACE = 0x0100
RES_XML_END_NAMESPACE = 0x0101
RES_XML_START_ELEMENT = 0x0102
RES_XML_END_ELEMENT = 0x0103

UTF8_FLAG = 0x00000100
TYPE_STRING = 0x03
NO_ENTRY = 0xFFFFFFFF

ANDROID_NS = "http://schemas.android.com/apk/res/android"
NAME_RES_ID = 0x01010003


# ---------------------------------------------------------------- builder

def chunk(ctype, header_extra, body, header_size=None):
    if header_size is None:
        header_size = 8 + len(header_extra)
    total = 8 + len(header_extra) + len(body)
    return struct.pack("<HHI", ctype, header_size, total) + header_extra + body


def build_string_pool(strings, utf8):
    offsets = []
    data = b""
    for s in strings:
        offsets.append(len(data))
        if utf8:
            raw = s.encode("utf-8")
            assert len(s) < 0x80 and len(raw) < 0x80
            data += struct.pack("<BB", len(s), len(raw)) + raw + b"\x00"
        else:
            raw = s.encode("utf-16-le")
            assert len(s) < 0x8000
            data += struct.pack("<H", len(s)) + raw + b"\x00\x00"
    while len(data) % 4:
        data += b"\x00"
    strings_start = 28 + 4 * len(strings)
    flags = UTF8_FLAG if utf8 else 0
    header_extra = struct.pack("<IIIII", len(strings), 0, flags, strings_start, 0)
    body = b"".join(struct.pack("<I", off) for off in offsets) + data
    return chunk(RES_STRING_POOL_TYPE, header_extra, body, header_size=28)


def node_header(line=1):
    return struct.pack("<II", line, NO_ENTRY)


def start_namespace(prefix_idx, uri_idx):
    return chunk(RES_XML_START_NAMESPACE, node_header(),
                 struct.pack("<II", prefix_idx, uri_idx), header_size=16)


def end_namespace(prefix_idx, uri_idx):
    return chunk(RES_XML_END_NAMESPACE, node_header(),
                 struct.pack("<II", prefix_idx, uri_idx), header_size=16)


def start_element(name_idx, attrs, ns_idx=NO_ENTRY):
    body = struct.pack("<IIHHHHHH", ns_idx, name_idx, 20, 20, len(attrs), 0, 0, 0)
    for a in attrs:
        body += struct.pack("<IIIHBBI", a["ns"], a["name"], a["raw"], 8, 0,
                            a["type"], a["data"])
    return chunk(RES_XML_START_ELEMENT, node_header(), body, header_size=16)


def end_element(name_idx, ns_idx=NO_ENTRY):
    return chunk(RES_XML_END_ELEMENT, node_header(),
                 struct.pack("<II", ns_idx, name_idx), header_size=16)


def resource_map(ids):
    return chunk(RES_XML_RESOURCE_MAP_TYPE, b"",
                 b"".join(struct.pack("<I", i) for i in ids))


def axml_document(chunks):
    body = b"".join(chunks)
    return struct.pack("<HHI", RES_XML_TYPE, 8, 8 + len(body)) + body


def build_manifest(permissions, utf8=False, with_resource_map=False,
                   unknown_chunk=False, obfuscate_name=False,
                   sdk23_indices=()):
    """AXML manifest declaring `permissions` in order (duplicates allowed)."""
    strings = []

    def intern(s):
        if s in strings:
            return strings.index(s)
        strings.append(s)
        return len(strings) - 1

    # With a resource map, mapped attribute-name strings must occupy the
    # low pool indices the map covers.
    name_literal = "zzz_obf" if obfuscate_name else "name"
    if with_resource_map:
        name_idx = intern(name_literal)
    ns_idx = intern(ANDROID_NS)
    prefix_idx = intern("android")
    manifest_idx = intern("manifest")
    package_idx = intern("package")
    pkg_value_idx = intern("com.example.fixture")
    uses_perm_idx = intern("uses-permission")
    uses_perm23_idx = intern("uses-permission-sdk-23")
    if not with_resource_map:
        name_idx = intern(name_literal)
    perm_indices = [intern(p) for p in permissions]

    chunks = [build_string_pool(strings, utf8)]
    if with_resource_map:
        chunks.append(resource_map([NAME_RES_ID]))
    if unknown_chunk:
        chunks.append(chunk(0x00FF, b"", b"\xde\xad\xbe\xef"))
    chunks.append(start_namespace(prefix_idx, ns_idx))
    chunks.append(start_element(manifest_idx, [
        # package attribute has no namespace
        {"ns": NO_ENTRY, "name": package_idx, "raw": pkg_value_idx,
         "type": TYPE_STRING, "data": pkg_value_idx},
    ]))
    for i, pidx in enumerate(perm_indices):
        elem_idx = uses_perm23_idx if i in sdk23_indices else uses_perm_idx
        chunks.append(start_element(elem_idx, [
            {"ns": ns_idx, "name": name_idx, "raw": pidx,
             "type": TYPE_STRING, "data": pidx},
        ]))
        chunks.append(end_element(elem_idx))
    chunks.append(end_element(manifest_idx))
    chunks.append(end_namespace(prefix_idx, ns_idx))
    return axml_document(chunks)


# ------------------------------------------------------- reference decoder

def decode_pool(buf, off):
    count, _styles, flags, strings_start, _ss = struct.unpack_from("<IIIII", buf, off + 8)
    utf8 = bool(flags & UTF8_FLAG)
    offsets = [struct.unpack_from("<I", buf, off + 28 + 4 * i)[0] for i in range(count)]
    base = off + strings_start
    out = []
    for so in offsets:
        p = base + so
        if utf8:
            ulen = buf[p]; p += 1
            if ulen & 0x80:
                p += 1
            blen = buf[p]; p += 1
            if blen & 0x80:
                blen = ((blen & 0x7F) << 8) | buf[p]; p += 1
            out.append(buf[p:p + blen].decode("utf-8"))
        else:
            ln = struct.unpack_from("<H", buf, p)[0]; p += 2
            if ln & 0x8000:
                ln = ((ln & 0x7FFF) << 16) | struct.unpack_from("<H", buf, p)[0]
                p += 2
            out.append(buf[p:p + 2 * ln].decode("utf-16-le"))
    return out


def reference_permissions(buf):
    """Independent decode: permission list per the documented contract."""
    ctype, hsize, fsize = struct.unpack_from("<HHI", buf, 0)
    assert ctype == RES_XML_TYPE and fsize <= len(buf)
    pool, res_map = [], []
    perms, seen = [], set()
    off = hsize
    while off < fsize:
        t, hs, size = struct.unpack_from("<HHI", buf, off)
        if t == RES_STRING_POOL_TYPE:
            pool = decode_pool(buf, off)
        elif t == RES_XML_RESOURCE_MAP_TYPE:
            res_map = [struct.unpack_from("<I", buf, off + hs + 4 * i)[0]
                       for i in range((size - hs) // 4)]
        elif t == RES_XML_START_ELEMENT:
            ns, name, astart, asize, acount = struct.unpack_from("<IIHHH", buf, off + hs)
            elem = pool[name]
            if elem in ("uses-permission", "uses-permission-sdk-23"):
                for i in range(acount):
                    ap = off + hs + astart + i * asize
                    ans, aname, araw, _sz, _r0, atype, adata = \
                        struct.unpack_from("<IIIHBBI", buf, ap)
                    if res_map and aname < len(res_map):
                        matched = res_map[aname] == NAME_RES_ID
                    else:
                        matched = (pool[aname] == "name" and ans != NO_ENTRY
                                   and pool[ans] == ANDROID_NS)
                    if not matched or atype != TYPE_STRING:
                        continue
                    idx = araw if araw != NO_ENTRY else adata
                    value = pool[idx]
                    if value and value not in seen:
                        seen.add(value)
                        perms.append(value)
                    break
        off += size
    return perms


# ------------------------------------------------------------------- main

def write_apk(path, manifest, extra_entries=(), manifest_compress=True):
    with zipfile.ZipFile(path, "w") as zf:
        method = zipfile.ZIP_DEFLATED if manifest_compress else zipfile.ZIP_STORED
        zf.writestr("AndroidManifest.xml", manifest, compress_type=method)
        for name, data, compress in extra_entries:
            zf.writestr(name, data,
                        compress_type=zipfile.ZIP_DEFLATED if compress
                        else zipfile.ZIP_STORED)
    with zipfile.ZipFile(path) as zf:
        info = zf.getinfo("AndroidManifest.xml")
        entries = [{"name": i.filename, "size": i.file_size, "crc32": i.CRC,
                    "compressed": i.compress_type == zipfile.ZIP_DEFLATED}
                   for i in zf.infolist()]
    return {"manifest_size": info.file_size, "manifest_crc32": info.CRC,
            "entries": entries}


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixtures = []

    cases = [
        {
            "name": "utf16_basic.apk",
            "permissions": ["android.permission.INTERNET",
                            "android.permission.SEND_SMS"],
            "kwargs": {"utf8": False},
            "compress": True,
            "extra": [("res/dummy.txt", b"hello fixture", True),
                      ("assets/raw.bin", bytes(range(64)), False)],
        },
        {
            "name": "utf8_dup_perms.apk",
            # INTERNET declared twice; expected list is deduplicated.
            "permissions": ["android.permission.INTERNET",
                            "android.permission.READ_CONTACTS",
                            "android.permission.INTERNET",
                            "android.permission.ACCESS_FINE_LOCATION"],
            "kwargs": {"utf8": True, "sdk23_indices": (3,)},
            "compress": False,
            "extra": [],
        },
        {
            "name": "resmap_obfuscated.apk",
            "permissions": ["android.permission.SEND_SMS",
                            "android.permission.RECEIVE_BOOT_COMPLETED",
                            "android.permission.WRITE_EXTERNAL_STORAGE"],
            "kwargs": {"with_resource_map": True, "obfuscate_name": True,
                       "unknown_chunk": True},
            "compress": True,
            "extra": [("classes.dex", b"dex\n035\x00" + b"\x00" * 32, True)],
        },
        {
            "name": "no_permissions.apk",
            "permissions": [],
            "kwargs": {"utf8": False},
            "compress": True,
            "extra": [],
        },
    ]

    for case in cases:
        manifest = build_manifest(case["permissions"], **case["kwargs"])
        # Expected = declared order, deduplicated, first occurrence kept.
        expected, seen = [], set()
        for p in case["permissions"]:
            if p not in seen:
                seen.add(p)
                expected.append(p)
        decoded = reference_permissions(manifest)
        assert decoded == expected, (case["name"], decoded, expected)

        meta = write_apk(out / case["name"], manifest, case["extra"],
                         case["compress"])
        fixtures.append({"apk": case["name"], "permissions": expected, **meta})
        (out / (case["name"] + ".axml")).write_bytes(manifest)

    # A corrupt archive: EOCD destroyed.
    good = (out / "utf16_basic.apk").read_bytes()
    (out / "corrupt.apk").write_bytes(good[: len(good) - 10])

    (out / "expected.json").write_text(json.dumps({"fixtures": fixtures}, indent=2))
    print(f"wrote {len(fixtures)} fixtures to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
