#ifndef IMCP_RASTER_HPP
#define IMCP_RASTER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "imcp/image.hpp"

namespace imcp {

// Binary PNM (P5 grayscale / P6 RGB, maxval 255) is the raw interchange
// format. write_pnm emits the canonical header "P{5|6}\n<w> <h>\n255\n";
// read_pnm additionally accepts standard whitespace and '#' comments, so
// write_pnm(read_pnm(b)) == b holds for canonical-header files.
Image read_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_pnm(const Image& image);

// Copies the intersection of `box` and the image bounds. Out-of-range
// coordinates clip silently; an empty intersection is an error.
Image crop(const Image& image, const BoundingBox& box);

// Nearest-neighbor resampling; source index is floor(i * src / dst).
Image resize_nearest(const Image& image, std::uint32_t new_w, std::uint32_t new_h);

// Deterministic synthetic scene: `object_count` non-overlapping rectangles
// and ellipses of pairwise-distinct intensities on the chosen background,
// with one exact-box annotation per object.
Scene generate_scene(const SceneSpec& spec);

// Training/benchmark corpus: `count` RGB scenes on gradient backgrounds,
// scene i seeded with seed+i and holding 2 + i%5 objects. Deterministic,
// so every tool that says "--synthetic N" means the same images.
std::vector<Scene> generate_corpus(std::uint64_t seed, std::size_t count, std::uint32_t side);

// JSON-lines annotations, one object per line:
//   {"image_id": "...", "bbox": [x_min, y_min, x_max, y_max],
//    "class_name": "...", "confidence": 0.87}
// Boxes are validated (positive area, confidence in [0,1]) but not clipped.
std::vector<Annotation> read_annotations(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_annotations(const std::vector<Annotation>& annotations);

} // namespace imcp

#endif
