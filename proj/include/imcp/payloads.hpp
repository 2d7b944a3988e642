#ifndef IMCP_PAYLOADS_HPP
#define IMCP_PAYLOADS_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "imcp/image.hpp"

namespace imcp {

struct Model; // autoencoder.hpp

// Ordered by transmission priority rank: smaller enum value = higher priority
// when byte sizes tie.
enum class PayloadKind : std::uint8_t {
    caption = 0,
    cutout = 1,
    ae_embedding = 2,
    lossy_image = 3,
    lossless_image = 4,
    raw_image = 5,
};

const char* payload_kind_name(PayloadKind kind);
PayloadKind payload_kind_from_name(std::string_view name); // throws ValidationError

// One transmission unit. bytes holds the exact on-the-wire serialization:
// UTF-8 text for captions, a blob container for encoded images/cutouts, PNM
// for raw images.
struct Payload {
    PayloadKind kind = PayloadKind::caption;
    std::vector<std::uint8_t> bytes;
    std::string source_image_id;
    std::map<std::string, std::string> meta;

    std::size_t byte_size() const { return bytes.size(); }
    std::string text() const { return std::string(bytes.begin(), bytes.end()); }
};

struct CutoutExtraction {
    std::vector<Payload> payloads;
    std::size_t skipped = 0; // boxes with empty image intersection
};

// One predictive-lossless cutout per annotation at or above min_confidence.
// Boxes are clipped to the image; a confident box with no intersection is
// counted in `skipped` rather than failing the batch. The clipped box, class
// and confidence land in payload meta.
CutoutExtraction extract_cutouts(const Image& image, std::span<const Annotation> annotations,
                                 double min_confidence = 0.5);

// Deterministic template caption: "<n1> <class1>(s), <n2> <class2>(s), ...
// detected." with classes ordered by count descending then name ascending,
// and an 's' appended when a count is not 1. No annotations produce
// "no objects detected.". Input order never matters.
Payload generate_caption(std::span<const Annotation> annotations, std::string_view image_id);
std::string caption_sentence(std::span<const Annotation> annotations);

struct PackageMethod {
    enum class Kind : std::uint8_t { raw, lossless, dct, ae };

    Kind kind = Kind::raw;
    std::uint8_t quality = 0;    // dct only
    const Model* model = nullptr; // ae only

    static PackageMethod raw() { return {Kind::raw, 0, nullptr}; }
    static PackageMethod lossless() { return {Kind::lossless, 0, nullptr}; }
    static PackageMethod dct(std::uint8_t quality) { return {Kind::dct, quality, nullptr}; }
    static PackageMethod ae(const Model& model) { return {Kind::ae, 0, &model}; }
};

// Wraps one image as a payload: raw -> PNM bytes, lossless -> predictive
// blob, dct -> transform blob at the given quality, ae -> quantized embedding
// blob (image side must match the model input). Byte accounting includes all
// container bytes.
Payload package_image(const Image& image, std::string_view image_id, const PackageMethod& method);

struct ManifestEntry {
    PayloadKind kind = PayloadKind::caption;
    std::uint64_t byte_size = 0;
    double ratio_pct = 0.0;
    std::map<std::string, std::string> meta;

    bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
    std::string image_id;
    std::vector<ManifestEntry> entries;

    bool operator==(const Manifest&) const = default;
};

// JSON manifest over a payload set. ratio_pct compares each payload against
// the raw_image payload when present, otherwise against the largest payload.
std::string build_manifest(std::span<const Payload> payloads);
Manifest parse_manifest(std::string_view json_text);

} // namespace imcp

#endif
