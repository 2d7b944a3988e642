#ifndef IMCP_HUFFMAN_HPP
#define IMCP_HUFFMAN_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "imcp/errors.hpp"

namespace imcp {

// Canonical Huffman coder over byte symbols.
//
// Stream layout (all integers big-endian, bits packed MSB-first):
//   symbol_count  u16
//   (symbol u8, code_length u8) x symbol_count   -- canonical order
//   original_len  u64
//   bit-packed payload, zero-padded to a byte boundary
//
// Tree construction breaks frequency ties by the smallest symbol value in
// each subtree, so the table is a pure function of the input bytes. A
// single-symbol alphabet is assigned a 1-bit code.
std::vector<std::uint8_t> huffman_encode(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> huffman_decode(std::span<const std::uint8_t> stream);

// Code length per symbol (0 = symbol absent). Exposed for table inspection.
std::array<std::uint8_t, 256> huffman_code_lengths(std::span<const std::uint8_t> data);

} // namespace imcp

#endif
