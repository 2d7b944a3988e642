#ifndef IMCP_CODECS_HPP
#define IMCP_CODECS_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "imcp/image.hpp"

namespace imcp {

enum class CodecId : std::uint8_t {
    huffman = 0,
    predictive = 1,
    dct = 2,
    ae_embedding = 3,
};

const char* codec_name(CodecId id);
CodecId codec_from_name(std::string_view name); // throws ValidationError

// Self-describing compressed container. Serialized layout (big-endian):
//   magic "IMCP" | version u8 = 0x01 | codec_id u8 | width u32 | height u32 |
//   channels u8 | quality u8 (0 for lossless) | payload_len u64 | payload
struct EncodedBlob {
    CodecId codec_id = CodecId::huffman;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint8_t channels = 0;
    std::uint8_t quality = 0;
    std::vector<std::uint8_t> payload;

    std::size_t serialized_size() const { return 24 + payload.size(); }
};

inline constexpr std::uint8_t kBlobVersion = 0x01;

std::vector<std::uint8_t> serialize_blob(const EncodedBlob& blob);
EncodedBlob parse_blob(std::span<const std::uint8_t> bytes);

// Entropy-only image codec: Huffman over the raw interleaved samples.
EncodedBlob huffman_encode_image(const Image& image);
Image huffman_decode_image(const EncodedBlob& blob);

// Lossless predictive codec. Per channel, each sample is predicted by its
// left neighbor; the first column predicts from the row above and the origin
// is stored verbatim. Residuals (mod 256) are Huffman-coded channel-major.
EncodedBlob predictive_encode(const Image& image);
Image predictive_decode(const EncodedBlob& blob);

// Lossy transform codec: per channel, 8x8 orthonormal DCT-II over blocks of
// the edge-replicated image, quality-scaled quantization with
// round-half-away-from-zero, zig-zag scan, zero-run-length records, then
// Huffman over the record stream. Decoding clamps to [0,255].
//
// Run-length record layout per block: (run u8, value i16 big-endian) for each
// nonzero coefficient, where run counts skipped zeros; (0, 0) ends the block.
EncodedBlob dct_encode(const Image& image, std::uint8_t quality);
Image dct_decode(const EncodedBlob& blob);

// Quality-scaled 8x8 quantization divisors, row-major, all entries >= 1.
// quality in [1,100]: scale = 5000/q below 50, else 200 - 2q, applied as
// floor(base * scale / 100).
std::array<int, 64> quant_table(std::uint8_t quality);

// Orthonormal 8x8 DCT-II and its inverse, exposed for verification.
void dct_forward_8x8(const double in[64], double out[64]);
void dct_inverse_8x8(const double in[64], double out[64]);

struct RdPoint {
    std::uint8_t quality = 0;
    double bitrate_bpp = 0.0;
    double psnr_db = 0.0;
};

// One rate/distortion point per quality, via dct_encode/decode. The bitrate
// counts the full serialized blob.
std::vector<RdPoint> rate_distortion_sweep(const Image& image,
                                           std::span<const std::uint8_t> qualities);

} // namespace imcp

#endif
