#ifndef IMCP_IMAGE_HPP
#define IMCP_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "imcp/errors.hpp"

namespace imcp {

// 8-bit raster, row-major, channel-interleaved. channels is 1 (grayscale)
// or 3 (RGB). samples.size() == width * height * channels always holds for
// a validated image.
struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 1;
    std::vector<std::uint8_t> samples;

    Image() = default;
    Image(std::uint32_t w, std::uint32_t h, std::uint32_t c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          samples(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t sample_count() const { return pixel_count() * channels; }

    std::uint8_t at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const {
        return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t& at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) {
        return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool operator==(const Image&) const = default;

    void validate() const {
        if (width < 1 || height < 1)
            throw ValidationError("image dimensions must be >= 1");
        if (channels != 1 && channels != 3)
            throw ValidationError("image channels must be 1 or 3");
        if (samples.size() != sample_count())
            throw ValidationError("image sample buffer size does not match dimensions");
    }
};

// Pixel box, min-inclusive / max-exclusive. Coordinates may be negative or
// out of range before clipping.
struct BoundingBox {
    std::int32_t x_min = 0;
    std::int32_t y_min = 0;
    std::int32_t x_max = 0;
    std::int32_t y_max = 0;

    std::int64_t width() const { return static_cast<std::int64_t>(x_max) - x_min; }
    std::int64_t height() const { return static_cast<std::int64_t>(y_max) - y_min; }
    std::int64_t area() const { return width() * height(); }
    bool positive_area() const { return x_min < x_max && y_min < y_max; }

    bool operator==(const BoundingBox&) const = default;
};

// One detection record as ingested from annotation files.
struct Annotation {
    std::string image_id;
    BoundingBox box;
    std::string class_name;
    double confidence = 0.0;

    bool operator==(const Annotation&) const = default;
};

enum class BackgroundTexture : std::uint8_t { flat = 0, gradient = 1, noise = 2 };

// Recipe for a deterministic synthetic scene: identical specs produce
// bit-identical images and annotation lists.
struct SceneSpec {
    std::uint64_t seed = 0;
    std::uint32_t width = 256;
    std::uint32_t height = 256;
    std::uint32_t channels = 3;
    std::uint32_t object_count = 0;
    BackgroundTexture background = BackgroundTexture::flat;
};

struct Scene {
    Image image;
    std::vector<Annotation> annotations;
};

} // namespace imcp

#endif
