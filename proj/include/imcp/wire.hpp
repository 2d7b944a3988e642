#ifndef IMCP_WIRE_HPP
#define IMCP_WIRE_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "imcp/errors.hpp"

namespace imcp::wire {

// Big-endian primitives shared by the blob container, the Huffman stream
// header and the model checkpoint format.

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_u16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline void put_u64be(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline void put_f32be(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    put_u32be(out, bits);
}

inline void put_f64le(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 0; shift < 64; shift += 8)
        out.push_back(static_cast<std::uint8_t>(bits >> shift));
}

// Bounds-checked sequential reader. Throws DecodeError with the byte offset
// of the failure so corrupt streams are diagnosable.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool exhausted() const { return pos_ == bytes_.size(); }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw DecodeError(std::string("truncated input: need ") + std::to_string(n) +
                              " byte(s) for " + what + " at offset " + std::to_string(pos_));
    }

    std::uint8_t u8(const char* what) {
        require(1, what);
        return bytes_[pos_++];
    }

    std::uint16_t u16be(const char* what) {
        require(2, what);
        std::uint16_t v = static_cast<std::uint16_t>((bytes_[pos_] << 8) | bytes_[pos_ + 1]);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32be(const char* what) {
        require(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
        pos_ += 4;
        return v;
    }

    std::uint64_t u64be(const char* what) {
        require(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | bytes_[pos_ + i];
        pos_ += 8;
        return v;
    }

    float f32be(const char* what) {
        return std::bit_cast<float>(u32be(what));
    }

    double f64le(const char* what) {
        require(8, what);
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes_[pos_ + i];
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }

    std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
        require(n, what);
        auto view = bytes_.subspan(pos_, n);
        pos_ += n;
        return view;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace imcp::wire

#endif
