#include <doctest.h>

#include <cmath>
#include <random>

#include "imcp/codecs.hpp"
#include "imcp/huffman.hpp"
#include "imcp/metrics.hpp"
#include "imcp/raster.hpp"

using namespace imcp;

namespace {

Image random_image(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, std::uint32_t c) {
    Image img(w, h, c);
    for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng() & 0xFF);
    return img;
}

Image textured_scene(std::uint64_t seed, std::uint32_t side = 64) {
    SceneSpec spec;
    spec.seed = seed;
    spec.width = side;
    spec.height = side;
    spec.object_count = 4;
    spec.background = BackgroundTexture::gradient;
    return generate_scene(spec).image;
}

} // namespace

TEST_CASE("blob container round-trips and validates") {
    EncodedBlob blob;
    blob.codec_id = CodecId::dct;
    blob.width = 17;
    blob.height = 9;
    blob.channels = 3;
    blob.quality = 80;
    blob.payload = {1, 2, 3, 4, 5};

    auto bytes = serialize_blob(blob);
    CHECK(bytes.size() == blob.serialized_size());
    const EncodedBlob back = parse_blob(bytes);
    CHECK(back.codec_id == blob.codec_id);
    CHECK(back.width == blob.width);
    CHECK(back.height == blob.height);
    CHECK(back.channels == blob.channels);
    CHECK(back.quality == blob.quality);
    CHECK(back.payload == blob.payload);

    SUBCASE("bad magic") {
        bytes[0] = 'X';
        CHECK_THROWS_AS(parse_blob(bytes), DecodeError);
    }
    SUBCASE("bad version") {
        bytes[4] = 9;
        CHECK_THROWS_AS(parse_blob(bytes), DecodeError);
    }
    SUBCASE("payload length mismatch") {
        bytes.pop_back();
        CHECK_THROWS_AS(parse_blob(bytes), DecodeError);
    }
    SUBCASE("unknown codec id") {
        bytes[5] = 42;
        CHECK_THROWS_AS(parse_blob(bytes), DecodeError);
    }
}

TEST_CASE("codec names round-trip") {
    for (CodecId id : {CodecId::huffman, CodecId::predictive, CodecId::dct, CodecId::ae_embedding})
        CHECK(codec_from_name(codec_name(id)) == id);
    CHECK_THROWS_AS(codec_from_name("jpeg2000"), ValidationError);
}

TEST_CASE("predictive residual rule") {
    // Row [10, 12, 11, 11]: origin verbatim, then left-neighbor deltas mod 256.
    Image img(4, 1, 1);
    img.samples = {10, 12, 11, 11};
    const EncodedBlob blob = predictive_encode(img);
    const std::vector<std::uint8_t> residuals = huffman_decode(blob.payload);
    CHECK(residuals == std::vector<std::uint8_t>{10, 2, 255, 0});
    CHECK(predictive_decode(blob) == img);
}

TEST_CASE("predictive first column predicts from the row above") {
    Image img(2, 3, 1);
    img.samples = {50, 60, //
                   55, 70, //
                   40, 90};
    const EncodedBlob blob = predictive_encode(img);
    const std::vector<std::uint8_t> residuals = huffman_decode(blob.payload);
    // (50), 60-50; 55-50, 70-55; 40-55 (mod 256), 90-40
    CHECK(residuals == std::vector<std::uint8_t>{50, 10, 5, 15, 241, 50});
    CHECK(predictive_decode(blob) == img);
}

TEST_CASE("predictive coding shrinks constant images") {
    const Image constant(64, 64, 3, 123);
    const EncodedBlob blob = predictive_encode(constant);
    // Residuals collapse to a two-symbol alphabet, so the Huffman stream costs
    // one bit per sample plus its table: far below a byte per sample.
    CHECK(blob.payload.size() * 4 < constant.sample_count());
    CHECK(predictive_decode(blob) == constant);
}

TEST_CASE("lossless codecs round-trip random images") {
    std::mt19937_64 rng(1001);
    for (int trial = 0; trial < 25; ++trial) {
        const std::uint32_t w = 1 + static_cast<std::uint32_t>(rng() % 48);
        const std::uint32_t h = 1 + static_cast<std::uint32_t>(rng() % 48);
        const std::uint32_t c = (rng() & 1) ? 3 : 1;
        const Image img = random_image(rng, w, h, c);
        CHECK(predictive_decode(predictive_encode(img)) == img);
        CHECK(huffman_decode_image(huffman_encode_image(img)) == img);
    }
    const Image img32 = random_image(rng, 32, 32, 3);
    CHECK(predictive_decode(parse_blob(serialize_blob(predictive_encode(img32)))) == img32);
}

TEST_CASE("quantization table scaling") {
    const auto q50 = quant_table(50);
    CHECK(q50[0] == 16); // base table unchanged at quality 50
    const auto q100 = quant_table(100);
    for (int v : q100) CHECK(v == 1);
    const auto q1 = quant_table(1);
    for (std::size_t i = 0; i < 64; ++i) CHECK(q1[i] >= q50[i]);
    CHECK_THROWS_AS(quant_table(0), ValidationError);
    CHECK_THROWS_AS(quant_table(101), ValidationError);
}

TEST_CASE("orthonormal DCT: constant block concentrates in DC") {
    double block[64], coeffs[64];
    for (double& v : block) v = 37.0;
    dct_forward_8x8(block, coeffs);
    CHECK(coeffs[0] == doctest::Approx(8.0 * 37.0).epsilon(1e-12));
    for (int i = 1; i < 64; ++i) CHECK(coeffs[i] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("DCT forward/inverse reconstructs within 1e-6") {
    std::mt19937_64 rng(88);
    for (int trial = 0; trial < 50; ++trial) {
        double block[64], coeffs[64], back[64];
        for (double& v : block) v = static_cast<double>(rng() % 256);
        dct_forward_8x8(block, coeffs);
        dct_inverse_8x8(coeffs, back);
        for (int i = 0; i < 64; ++i) CHECK(back[i] == doctest::Approx(block[i]).epsilon(1e-6));
    }
}

TEST_CASE("dct codec at quality 100 is near-lossless") {
    const Image img = textured_scene(11);
    const EncodedBlob blob = dct_encode(img, 100);
    const Image decoded = dct_decode(blob);
    CHECK(psnr(img, decoded) >= 40.0);
}

TEST_CASE("dct handles non-multiple-of-8 dimensions") {
    std::mt19937_64 rng(4242);
    const Image img = random_image(rng, 13, 21, 3);
    const Image decoded = dct_decode(dct_encode(img, 90));
    CHECK(decoded.width == img.width);
    CHECK(decoded.height == img.height);
    // Smooth content reconstructs closely even off-grid.
    const Image flat(13, 21, 3, 200);
    CHECK(psnr(flat, dct_decode(dct_encode(flat, 90))) >= 40.0);
}

TEST_CASE("dct encoded size grows with quality") {
    const Image img = textured_scene(23);
    const auto size25 = dct_encode(img, 25).payload.size();
    const auto size75 = dct_encode(img, 75).payload.size();
    const auto size95 = dct_encode(img, 95).payload.size();
    CHECK(size25 < size75);
    CHECK(size75 < size95);
}

TEST_CASE("dct decode rejects malformed blobs") {
    const Image img = textured_scene(5, 16);
    EncodedBlob blob = dct_encode(img, 50);

    SUBCASE("wrong codec id") {
        blob.codec_id = CodecId::predictive;
        CHECK_THROWS_AS(dct_decode(blob), ValidationError);
    }
    SUBCASE("corrupt payload") {
        blob.payload.resize(blob.payload.size() / 2);
        CHECK_THROWS_AS(dct_decode(blob), DecodeError);
    }
    SUBCASE("out-of-range quality") {
        const Image small(8, 8, 1, 0);
        CHECK_THROWS_AS(dct_encode(small, 0), ValidationError);
        CHECK_THROWS_AS(dct_encode(small, 101), ValidationError);
    }
}

TEST_CASE("rate-distortion sweep properties") {
    const Image img = textured_scene(31);

    const std::uint8_t single[] = {50};
    const auto one = rate_distortion_sweep(img, single);
    REQUIRE(one.size() == 1);
    CHECK(one[0].bitrate_bpp > 0.0);

    const std::uint8_t sorted_q[] = {10, 30, 50, 70, 90, 100};
    const auto sweep = rate_distortion_sweep(img, sorted_q);
    for (std::size_t i = 1; i < sweep.size(); ++i)
        CHECK(sweep[i].bitrate_bpp >= sweep[i - 1].bitrate_bpp);
    CHECK(sweep.back().psnr_db >= sweep.front().psnr_db);

    CHECK_THROWS_AS(rate_distortion_sweep(img, {}), ValidationError);
}
