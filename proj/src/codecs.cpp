#include "imcp/codecs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imcp/huffman.hpp"
#include "imcp/metrics.hpp"
#include "imcp/wire.hpp"

namespace imcp {

const char* codec_name(CodecId id) {
    switch (id) {
    case CodecId::huffman: return "huffman";
    case CodecId::predictive: return "predictive";
    case CodecId::dct: return "dct";
    case CodecId::ae_embedding: return "ae_embedding";
    }
    return "unknown";
}

CodecId codec_from_name(std::string_view name) {
    if (name == "huffman") return CodecId::huffman;
    if (name == "predictive") return CodecId::predictive;
    if (name == "dct") return CodecId::dct;
    if (name == "ae_embedding") return CodecId::ae_embedding;
    throw ValidationError("unknown codec '" + std::string(name) + "'");
}

std::vector<std::uint8_t> serialize_blob(const EncodedBlob& blob) {
    std::vector<std::uint8_t> out;
    out.reserve(blob.serialized_size());
    for (char ch : {'I', 'M', 'C', 'P'}) out.push_back(static_cast<std::uint8_t>(ch));
    wire::put_u8(out, kBlobVersion);
    wire::put_u8(out, static_cast<std::uint8_t>(blob.codec_id));
    wire::put_u32be(out, blob.width);
    wire::put_u32be(out, blob.height);
    wire::put_u8(out, blob.channels);
    wire::put_u8(out, blob.quality);
    wire::put_u64be(out, blob.payload.size());
    out.insert(out.end(), blob.payload.begin(), blob.payload.end());
    return out;
}

EncodedBlob parse_blob(std::span<const std::uint8_t> bytes) {
    wire::Reader reader(bytes);
    const auto magic = reader.bytes(4, "blob magic");
    if (!std::equal(magic.begin(), magic.end(), "IMCP"))
        throw DecodeError("bad blob magic (expected \"IMCP\")");
    const std::uint8_t version = reader.u8("blob version");
    if (version != kBlobVersion)
        throw DecodeError("unsupported blob version " + std::to_string(version));
    EncodedBlob blob;
    const std::uint8_t codec = reader.u8("codec id");
    if (codec > static_cast<std::uint8_t>(CodecId::ae_embedding))
        throw DecodeError("unknown codec id " + std::to_string(codec));
    blob.codec_id = static_cast<CodecId>(codec);
    blob.width = reader.u32be("width");
    blob.height = reader.u32be("height");
    blob.channels = reader.u8("channels");
    blob.quality = reader.u8("quality");
    const std::uint64_t payload_len = reader.u64be("payload length");
    if (payload_len != reader.remaining())
        throw DecodeError("blob payload length mismatch: header says " +
                          std::to_string(payload_len) + ", " +
                          std::to_string(reader.remaining()) + " byte(s) present");
    const auto payload = reader.bytes(payload_len, "payload");
    blob.payload.assign(payload.begin(), payload.end());
    if (blob.width < 1 || blob.height < 1)
        throw DecodeError("blob dimensions must be >= 1");
    if (blob.channels != 1 && blob.channels != 3)
        throw DecodeError("blob channels must be 1 or 3");
    return blob;
}

namespace {

EncodedBlob make_blob(CodecId id, const Image& image, std::uint8_t quality,
                      std::vector<std::uint8_t> payload) {
    EncodedBlob blob;
    blob.codec_id = id;
    blob.width = image.width;
    blob.height = image.height;
    blob.channels = static_cast<std::uint8_t>(image.channels);
    blob.quality = quality;
    blob.payload = std::move(payload);
    return blob;
}

void require_codec(const EncodedBlob& blob, CodecId expected) {
    if (blob.codec_id != expected)
        throw ValidationError(std::string("blob codec is '") + codec_name(blob.codec_id) +
                              "', expected '" + codec_name(expected) + "'");
}

} // namespace

EncodedBlob huffman_encode_image(const Image& image) {
    image.validate();
    return make_blob(CodecId::huffman, image, 0, huffman_encode(image.samples));
}

Image huffman_decode_image(const EncodedBlob& blob) {
    require_codec(blob, CodecId::huffman);
    Image image;
    image.width = blob.width;
    image.height = blob.height;
    image.channels = blob.channels;
    image.samples = huffman_decode(blob.payload);
    if (image.samples.size() != image.sample_count())
        throw DecodeError("huffman blob decoded to " + std::to_string(image.samples.size()) +
                          " byte(s), expected " + std::to_string(image.sample_count()));
    return image;
}

EncodedBlob predictive_encode(const Image& image) {
    image.validate();
    std::vector<std::uint8_t> residuals;
    residuals.reserve(image.sample_count());
    for (std::uint32_t c = 0; c < image.channels; ++c) {
        for (std::uint32_t y = 0; y < image.height; ++y) {
            for (std::uint32_t x = 0; x < image.width; ++x) {
                const std::uint8_t value = image.at(x, y, c);
                std::uint8_t pred = 0;
                if (x > 0)
                    pred = image.at(x - 1, y, c);
                else if (y > 0)
                    pred = image.at(x, y - 1, c);
                residuals.push_back(static_cast<std::uint8_t>(value - pred)); // mod 256
            }
        }
    }
    return make_blob(CodecId::predictive, image, 0, huffman_encode(residuals));
}

Image predictive_decode(const EncodedBlob& blob) {
    require_codec(blob, CodecId::predictive);
    const std::vector<std::uint8_t> residuals = huffman_decode(blob.payload);
    Image image;
    image.width = blob.width;
    image.height = blob.height;
    image.channels = blob.channels;
    image.samples.assign(image.sample_count(), 0);
    if (residuals.size() != image.sample_count())
        throw DecodeError("predictive blob decoded to " + std::to_string(residuals.size()) +
                          " residual(s), expected " + std::to_string(image.sample_count()));
    std::size_t i = 0;
    for (std::uint32_t c = 0; c < image.channels; ++c) {
        for (std::uint32_t y = 0; y < image.height; ++y) {
            for (std::uint32_t x = 0; x < image.width; ++x) {
                std::uint8_t pred = 0;
                if (x > 0)
                    pred = image.at(x - 1, y, c);
                else if (y > 0)
                    pred = image.at(x, y - 1, c);
                image.at(x, y, c) = static_cast<std::uint8_t>(pred + residuals[i++]);
            }
        }
    }
    return image;
}

// ---------------------------------------------------------------------------
// DCT transform codec
// ---------------------------------------------------------------------------

namespace {

// JPEG Annex K luminance divisors, applied to every channel.
constexpr std::array<int, 64> kBaseQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,  //
    12, 12, 14, 19, 26,  58,  60,  55,  //
    14, 13, 16, 24, 40,  57,  69,  56,  //
    14, 17, 22, 29, 51,  87,  80,  62,  //
    18, 22, 37, 56, 68,  109, 103, 77,  //
    24, 35, 55, 64, 81,  104, 113, 92,  //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
};

constexpr std::array<int, 64> kZigZag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  //
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28, //
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, //
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
};

// Orthonormal DCT-II basis: C[0][j] = 1/sqrt(8), C[i][j] = 1/2 cos((2j+1) i pi / 16).
struct DctBasis {
    double c[8][8];
    DctBasis() {
        const double pi = std::acos(-1.0);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                c[i][j] = (i == 0 ? std::sqrt(1.0 / 8.0)
                                  : 0.5 * std::cos((2 * j + 1) * i * pi / 16.0));
    }
};

const DctBasis& basis() {
    static const DctBasis b;
    return b;
}

int round_half_away(double v) {
    return static_cast<int>(v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

} // namespace

void dct_forward_8x8(const double in[64], double out[64]) {
    const auto& C = basis().c;
    double tmp[64];
    // tmp = C * in
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 8; ++k) acc += C[i][k] * in[k * 8 + j];
            tmp[i * 8 + j] = acc;
        }
    // out = tmp * C^T
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 8; ++k) acc += tmp[i * 8 + k] * C[j][k];
            out[i * 8 + j] = acc;
        }
}

void dct_inverse_8x8(const double in[64], double out[64]) {
    const auto& C = basis().c;
    double tmp[64];
    // tmp = C^T * in
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 8; ++k) acc += C[k][i] * in[k * 8 + j];
            tmp[i * 8 + j] = acc;
        }
    // out = tmp * C
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 8; ++k) acc += tmp[i * 8 + k] * C[k][j];
            out[i * 8 + j] = acc;
        }
}

std::array<int, 64> quant_table(std::uint8_t quality) {
    if (quality < 1 || quality > 100)
        throw ValidationError("quality must be in [1,100], got " + std::to_string(quality));
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> table{};
    for (int i = 0; i < 64; ++i)
        table[static_cast<std::size_t>(i)] =
            std::max(1, kBaseQuant[static_cast<std::size_t>(i)] * scale / 100);
    return table;
}

EncodedBlob dct_encode(const Image& image, std::uint8_t quality) {
    image.validate();
    const std::array<int, 64> qt = quant_table(quality);

    const std::uint32_t wp = (image.width + 7) / 8;
    const std::uint32_t hp = (image.height + 7) / 8;

    std::vector<std::uint8_t> records;
    double block[64], coeffs[64];
    for (std::uint32_t c = 0; c < image.channels; ++c) {
        for (std::uint32_t by = 0; by < hp; ++by) {
            for (std::uint32_t bx = 0; bx < wp; ++bx) {
                // Edge-replicated 8x8 gather.
                for (int y = 0; y < 8; ++y) {
                    const std::uint32_t sy =
                        std::min(by * 8 + static_cast<std::uint32_t>(y), image.height - 1);
                    for (int x = 0; x < 8; ++x) {
                        const std::uint32_t sx =
                            std::min(bx * 8 + static_cast<std::uint32_t>(x), image.width - 1);
                        block[y * 8 + x] = static_cast<double>(image.at(sx, sy, c));
                    }
                }
                dct_forward_8x8(block, coeffs);

                int quantized[64];
                for (int i = 0; i < 64; ++i) {
                    const std::size_t pos = static_cast<std::size_t>(kZigZag[i]);
                    quantized[i] = round_half_away(coeffs[pos] / qt[pos]);
                }

                int run = 0;
                for (int i = 0; i < 64; ++i) {
                    if (quantized[i] == 0) {
                        ++run;
                        continue;
                    }
                    records.push_back(static_cast<std::uint8_t>(run));
                    const auto v = static_cast<std::int16_t>(quantized[i]);
                    records.push_back(static_cast<std::uint8_t>(static_cast<std::uint16_t>(v) >> 8));
                    records.push_back(static_cast<std::uint8_t>(static_cast<std::uint16_t>(v)));
                    run = 0;
                }
                records.insert(records.end(), {0, 0, 0}); // end-of-block
            }
        }
    }
    return make_blob(CodecId::dct, image, quality, huffman_encode(records));
}

Image dct_decode(const EncodedBlob& blob) {
    require_codec(blob, CodecId::dct);
    const std::array<int, 64> qt = quant_table(blob.quality);
    const std::vector<std::uint8_t> records = huffman_decode(blob.payload);

    const std::uint32_t wp = (blob.width + 7) / 8;
    const std::uint32_t hp = (blob.height + 7) / 8;

    Image image;
    image.width = blob.width;
    image.height = blob.height;
    image.channels = blob.channels;
    image.samples.assign(image.sample_count(), 0);

    std::size_t pos = 0;
    auto next_byte = [&records, &pos]() -> std::uint8_t {
        if (pos >= records.size())
            throw DecodeError("malformed DCT blob: truncated record stream");
        return records[pos++];
    };

    double coeffs[64], block[64];
    for (std::uint32_t c = 0; c < image.channels; ++c) {
        for (std::uint32_t by = 0; by < hp; ++by) {
            for (std::uint32_t bx = 0; bx < wp; ++bx) {
                int zz[64] = {};
                int idx = 0;
                for (;;) {
                    const int run = next_byte();
                    const std::uint16_t hi = next_byte();
                    const std::uint16_t lo = next_byte();
                    const auto value = static_cast<std::int16_t>((hi << 8) | lo);
                    if (run == 0 && value == 0) break; // end-of-block
                    idx += run;
                    if (idx >= 64)
                        throw DecodeError("malformed DCT blob: coefficient index overflow");
                    zz[idx++] = value;
                }
                for (int i = 0; i < 64; ++i) {
                    const std::size_t p = static_cast<std::size_t>(kZigZag[i]);
                    coeffs[p] = static_cast<double>(zz[i]) * qt[p];
                }
                dct_inverse_8x8(coeffs, block);
                for (int y = 0; y < 8; ++y) {
                    const std::uint32_t dy = by * 8 + static_cast<std::uint32_t>(y);
                    if (dy >= image.height) break;
                    for (int x = 0; x < 8; ++x) {
                        const std::uint32_t dx = bx * 8 + static_cast<std::uint32_t>(x);
                        if (dx >= image.width) break;
                        const long v = std::lround(block[y * 8 + x]);
                        image.at(dx, dy, c) =
                            static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255));
                    }
                }
            }
        }
    }
    if (pos != records.size())
        throw DecodeError("malformed DCT blob: " + std::to_string(records.size() - pos) +
                          " trailing record byte(s)");
    return image;
}

std::vector<RdPoint> rate_distortion_sweep(const Image& image,
                                           std::span<const std::uint8_t> qualities) {
    if (qualities.empty())
        throw ValidationError("rate_distortion_sweep requires a non-empty quality list");
    image.validate();
    std::vector<RdPoint> points;
    points.reserve(qualities.size());
    for (const std::uint8_t q : qualities) {
        const EncodedBlob blob = dct_encode(image, q);
        const Image decoded = dct_decode(blob);
        RdPoint p;
        p.quality = q;
        p.bitrate_bpp = bitrate_bpp(serialize_blob(blob).size(), image.pixel_count());
        p.psnr_db = psnr(image, decoded);
        points.push_back(p);
    }
    return points;
}

} // namespace imcp
