#include "imcp/raster.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <json.hpp>

namespace imcp {

namespace {

bool is_pnm_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

[[noreturn]] void header_error(const std::string& what, std::size_t offset) {
    throw DecodeError("malformed PNM header: " + what + " at byte offset " +
                      std::to_string(offset));
}

// Skips whitespace and '#' comment lines between header tokens.
void skip_separators(std::span<const std::uint8_t> b, std::size_t& pos) {
    while (pos < b.size()) {
        if (is_pnm_space(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
}

std::uint64_t parse_header_int(std::span<const std::uint8_t> b, std::size_t& pos,
                               const char* field) {
    skip_separators(b, pos);
    if (pos >= b.size()) header_error(std::string("missing ") + field, pos);
    if (b[pos] < '0' || b[pos] > '9') header_error(std::string("non-numeric ") + field, pos);
    std::uint64_t value = 0;
    while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
        value = value * 10 + (b[pos] - '0');
        if (value > 0xFFFFFFFFull) header_error(std::string(field) + " out of range", pos);
        ++pos;
    }
    return value;
}

} // namespace

Image read_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        header_error("magic must be P5 or P6", 0);
    const std::uint32_t channels = bytes[1] == '5' ? 1 : 3;
    std::size_t pos = 2;

    const std::uint64_t width = parse_header_int(bytes, pos, "width");
    const std::uint64_t height = parse_header_int(bytes, pos, "height");
    const std::size_t maxval_pos = pos;
    const std::uint64_t maxval = parse_header_int(bytes, pos, "maxval");
    if (width < 1 || height < 1) header_error("dimensions must be >= 1", maxval_pos);
    if (maxval != 255)
        throw DecodeError("unsupported PNM maxval " + std::to_string(maxval) +
                          " (expected 255) at byte offset " + std::to_string(maxval_pos));

    // Exactly one whitespace byte separates the header from the binary body.
    if (pos >= bytes.size() || !is_pnm_space(bytes[pos]))
        header_error("missing whitespace before body", pos);
    ++pos;

    const std::size_t expected = static_cast<std::size_t>(width) * height * channels;
    if (bytes.size() - pos < expected)
        throw DecodeError("truncated PNM body: expected " + std::to_string(expected) +
                          " sample byte(s), found " + std::to_string(bytes.size() - pos) +
                          " at byte offset " + std::to_string(pos));

    Image image;
    image.width = static_cast<std::uint32_t>(width);
    image.height = static_cast<std::uint32_t>(height);
    image.channels = channels;
    image.samples.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + expected));
    return image;
}

std::vector<std::uint8_t> write_pnm(const Image& image) {
    image.validate();
    std::string header = (image.channels == 1 ? "P5\n" : "P6\n");
    header += std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out;
    out.reserve(header.size() + image.samples.size());
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), image.samples.begin(), image.samples.end());
    return out;
}

Image crop(const Image& image, const BoundingBox& box) {
    image.validate();
    const std::int64_t x0 = std::max<std::int64_t>(box.x_min, 0);
    const std::int64_t y0 = std::max<std::int64_t>(box.y_min, 0);
    const std::int64_t x1 = std::min<std::int64_t>(box.x_max, image.width);
    const std::int64_t y1 = std::min<std::int64_t>(box.y_max, image.height);
    if (x0 >= x1 || y0 >= y1)
        throw ValidationError("empty intersection between crop box and image bounds");

    Image out(static_cast<std::uint32_t>(x1 - x0), static_cast<std::uint32_t>(y1 - y0),
              image.channels);
    const std::size_t row_bytes = out.width * static_cast<std::size_t>(image.channels);
    for (std::int64_t y = y0; y < y1; ++y) {
        const std::uint8_t* src =
            image.samples.data() +
            (static_cast<std::size_t>(y) * image.width + static_cast<std::size_t>(x0)) *
                image.channels;
        std::copy_n(src, row_bytes,
                    out.samples.data() + static_cast<std::size_t>(y - y0) * row_bytes);
    }
    return out;
}

Image resize_nearest(const Image& image, std::uint32_t new_w, std::uint32_t new_h) {
    image.validate();
    if (new_w < 1 || new_h < 1)
        throw ValidationError("resize target dimensions must be >= 1");
    Image out(new_w, new_h, image.channels);
    for (std::uint32_t y = 0; y < new_h; ++y) {
        const std::uint32_t sy =
            static_cast<std::uint32_t>(static_cast<std::uint64_t>(y) * image.height / new_h);
        for (std::uint32_t x = 0; x < new_w; ++x) {
            const std::uint32_t sx =
                static_cast<std::uint32_t>(static_cast<std::uint64_t>(x) * image.width / new_w);
            for (std::uint32_t c = 0; c < image.channels; ++c)
                out.at(x, y, c) = image.at(sx, sy, c);
        }
    }
    return out;
}

namespace {

// Thin deterministic wrapper: mt19937_64 is fully specified by the standard,
// and the derived draws below avoid std::uniform_*_distribution whose output
// is implementation-defined.
class SceneRng {
public:
    explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, n). Modulo bias is negligible for scene-sized ranges.
    std::uint32_t below(std::uint32_t n) {
        return n == 0 ? 0 : static_cast<std::uint32_t>(next() % n);
    }

    std::uint32_t range(std::uint32_t lo, std::uint32_t hi) { // inclusive bounds
        return lo + below(hi - lo + 1);
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

const char* const kClassPalette[] = {"vehicle", "building", "aircraft", "vessel"};

void fill_background(Image& img, const SceneSpec& spec, SceneRng& rng) {
    switch (spec.background) {
    case BackgroundTexture::flat: {
        const std::uint8_t g = static_cast<std::uint8_t>(rng.range(70, 170));
        std::fill(img.samples.begin(), img.samples.end(), g);
        break;
    }
    case BackgroundTexture::gradient: {
        const bool horizontal = (rng.next() & 1) != 0;
        const double g0 = rng.range(20, 100);
        const double g1 = rng.range(150, 230);
        for (std::uint32_t y = 0; y < img.height; ++y) {
            for (std::uint32_t x = 0; x < img.width; ++x) {
                const std::uint32_t i = horizontal ? x : y;
                const std::uint32_t n = horizontal ? img.width : img.height;
                const double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
                const std::uint8_t v = static_cast<std::uint8_t>(std::lround(g0 + (g1 - g0) * t));
                for (std::uint32_t c = 0; c < img.channels; ++c) img.at(x, y, c) = v;
            }
        }
        break;
    }
    case BackgroundTexture::noise:
        for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng.below(256));
        break;
    }
}

bool boxes_overlap(const BoundingBox& a, const BoundingBox& b) {
    return a.x_min < b.x_max && b.x_min < a.x_max && a.y_min < b.y_max && b.y_min < a.y_max;
}

void paint_object(Image& img, const BoundingBox& box, bool ellipse,
                  const std::uint8_t color[3]) {
    if (ellipse) {
        const double cx = (box.x_min + box.x_max - 1) / 2.0;
        const double cy = (box.y_min + box.y_max - 1) / 2.0;
        const double rx = std::max(0.5, (box.width() - 1) / 2.0);
        const double ry = std::max(0.5, (box.height() - 1) / 2.0);
        for (std::int32_t y = box.y_min; y < box.y_max; ++y) {
            for (std::int32_t x = box.x_min; x < box.x_max; ++x) {
                const double dx = (x - cx) / rx;
                const double dy = (y - cy) / ry;
                if (dx * dx + dy * dy <= 1.0)
                    for (std::uint32_t c = 0; c < img.channels; ++c)
                        img.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), c) =
                            color[c];
            }
        }
    } else {
        for (std::int32_t y = box.y_min; y < box.y_max; ++y)
            for (std::int32_t x = box.x_min; x < box.x_max; ++x)
                for (std::uint32_t c = 0; c < img.channels; ++c)
                    img.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), c) =
                        color[c];
    }
}

} // namespace

Scene generate_scene(const SceneSpec& spec) {
    if (spec.width < 1 || spec.height < 1)
        throw ValidationError("scene dimensions must be >= 1");
    if (spec.channels != 1 && spec.channels != 3)
        throw ValidationError("scene channels must be 1 or 3");

    SceneRng rng(spec.seed);
    Scene scene;
    scene.image = Image(spec.width, spec.height, spec.channels);
    fill_background(scene.image, spec, rng);

    if (spec.object_count == 0) return scene;

    const std::uint32_t min_dim = 4;
    if (spec.width < min_dim || spec.height < min_dim)
        throw ValidationError("scene too small to place objects");
    const std::uint32_t max_w = std::max(min_dim, spec.width / 4);
    const std::uint32_t max_h = std::max(min_dim, spec.height / 4);

    // Evenly spaced base intensities keep object fills pairwise distinct.
    const std::uint32_t spacing = std::max<std::uint32_t>(1, 216 / spec.object_count);
    const std::uint32_t intensity_offset = rng.below(216);

    const std::string image_id = "scene-" + std::to_string(spec.seed);
    std::vector<BoundingBox> placed;
    constexpr int kRetryBudget = 128;

    for (std::uint32_t i = 0; i < spec.object_count; ++i) {
        BoundingBox box;
        bool ok = false;
        for (int attempt = 0; attempt < kRetryBudget && !ok; ++attempt) {
            const std::uint32_t w = rng.range(min_dim, max_w);
            const std::uint32_t h = rng.range(min_dim, max_h);
            const std::uint32_t x0 = rng.below(spec.width - w + 1);
            const std::uint32_t y0 = rng.below(spec.height - h + 1);
            box = BoundingBox{static_cast<std::int32_t>(x0), static_cast<std::int32_t>(y0),
                              static_cast<std::int32_t>(x0 + w), static_cast<std::int32_t>(y0 + h)};
            ok = std::none_of(placed.begin(), placed.end(),
                              [&](const BoundingBox& p) { return boxes_overlap(box, p); });
        }
        if (!ok)
            throw ValidationError("could not place object " + std::to_string(i) +
                                  " without overlap within the retry budget");
        placed.push_back(box);

        const std::uint8_t base =
            static_cast<std::uint8_t>(16 + (i * spacing + intensity_offset) % 216);
        const std::uint8_t color[3] = {base, static_cast<std::uint8_t>(base + 85),
                                       static_cast<std::uint8_t>(base + 170)};
        const std::uint8_t gray[3] = {base, base, base};
        const bool ellipse = (rng.next() & 1) != 0;
        paint_object(scene.image, box, ellipse, spec.channels == 3 ? color : gray);

        Annotation ann;
        ann.image_id = image_id;
        ann.box = box;
        ann.class_name = kClassPalette[rng.below(4)];
        ann.confidence = 0.6 + 0.4 * rng.unit();
        scene.annotations.push_back(std::move(ann));
    }
    return scene;
}

std::vector<Scene> generate_corpus(std::uint64_t seed, std::size_t count, std::uint32_t side) {
    std::vector<Scene> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SceneSpec spec;
        spec.seed = seed + i;
        spec.width = side;
        spec.height = side;
        spec.channels = 3;
        spec.object_count = static_cast<std::uint32_t>(2 + i % 5);
        spec.background = BackgroundTexture::gradient;
        out.push_back(generate_scene(spec));
    }
    return out;
}

namespace {

[[noreturn]] void annotation_error(std::size_t line_no, const std::string& what) {
    throw DecodeError("annotations line " + std::to_string(line_no) + ": " + what);
}

} // namespace

std::vector<Annotation> read_annotations(std::span<const std::uint8_t> bytes) {
    std::vector<Annotation> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= bytes.size()) {
        std::size_t end = start;
        while (end < bytes.size() && bytes[end] != '\n') ++end;
        ++line_no;
        std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                         bytes.begin() + static_cast<std::ptrdiff_t>(end));
        start = end + 1;
        if (end == bytes.size() && line.empty()) break;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        const nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded()) annotation_error(line_no, "malformed JSON record");
        if (!record.is_object()) annotation_error(line_no, "record is not a JSON object");

        Annotation ann;
        if (!record.contains("image_id") || !record["image_id"].is_string())
            annotation_error(line_no, "missing or non-string image_id");
        ann.image_id = record["image_id"].get<std::string>();

        if (!record.contains("bbox") || !record["bbox"].is_array() || record["bbox"].size() != 4)
            annotation_error(line_no, "bbox must be an array of 4 integers");
        for (const auto& v : record["bbox"])
            if (!v.is_number_integer()) annotation_error(line_no, "bbox entries must be integers");
        ann.box.x_min = record["bbox"][0].get<std::int32_t>();
        ann.box.y_min = record["bbox"][1].get<std::int32_t>();
        ann.box.x_max = record["bbox"][2].get<std::int32_t>();
        ann.box.y_max = record["bbox"][3].get<std::int32_t>();
        if (!ann.box.positive_area())
            annotation_error(line_no, "bbox must satisfy x_min < x_max and y_min < y_max");

        if (!record.contains("class_name") || !record["class_name"].is_string())
            annotation_error(line_no, "missing or non-string class_name");
        ann.class_name = record["class_name"].get<std::string>();
        if (ann.class_name.empty()) annotation_error(line_no, "class_name must be non-empty");

        if (!record.contains("confidence") || !record["confidence"].is_number())
            annotation_error(line_no, "missing or non-numeric confidence");
        ann.confidence = record["confidence"].get<double>();
        if (!(ann.confidence >= 0.0 && ann.confidence <= 1.0))
            annotation_error(line_no, "confidence out of [0,1]");

        out.push_back(std::move(ann));
    }
    return out;
}

std::vector<std::uint8_t> write_annotations(const std::vector<Annotation>& annotations) {
    std::string text;
    for (const auto& ann : annotations) {
        nlohmann::json record;
        record["image_id"] = ann.image_id;
        record["bbox"] = {ann.box.x_min, ann.box.y_min, ann.box.x_max, ann.box.y_max};
        record["class_name"] = ann.class_name;
        record["confidence"] = ann.confidence;
        text += record.dump();
        text += '\n';
    }
    return {text.begin(), text.end()};
}

} // namespace imcp
