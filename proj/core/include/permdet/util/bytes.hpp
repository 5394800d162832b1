#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>

namespace permdet::util {

struct TruncatedData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline uint16_t read_u16le(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

inline uint32_t read_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline uint64_t read_u64le(const uint8_t* p) {
    uint64_t lo = read_u32le(p);
    uint64_t hi = read_u32le(p + 4);
    return lo | (hi << 32);
}

// Bounds-checked cursor over a byte buffer. Every read throws TruncatedData
// instead of running past the end.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data, size_t pos = 0)
        : data_(data), pos_(pos) {}

    size_t pos() const { return pos_; }
    size_t size() const { return data_.size(); }
    size_t remaining() const { return pos_ <= data_.size() ? data_.size() - pos_ : 0; }

    void seek(size_t pos) {
        if (pos > data_.size()) throw TruncatedData("seek past end of buffer");
        pos_ = pos;
    }
    void skip(size_t n) { seek(checked_add(pos_, n)); }

    bool can_read(size_t n) const { return n <= remaining(); }

    uint8_t u8() {
        require(1);
        return data_[pos_++];
    }
    uint16_t u16() {
        require(2);
        uint16_t v = read_u16le(data_.data() + pos_);
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        require(4);
        uint32_t v = read_u32le(data_.data() + pos_);
        pos_ += 4;
        return v;
    }
    std::span<const uint8_t> bytes(size_t n) {
        require(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    uint8_t peek_u8(size_t off = 0) const {
        if (!can_read(off + 1)) throw TruncatedData("peek past end of buffer");
        return data_[pos_ + off];
    }

private:
    void require(size_t n) const {
        if (!can_read(n)) throw TruncatedData("read past end of buffer");
    }
    static size_t checked_add(size_t a, size_t b) {
        size_t r = a + b;
        if (r < a) throw TruncatedData("offset overflow");
        return r;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace permdet::util
