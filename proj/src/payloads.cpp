#include "imcp/payloads.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "imcp/autoencoder.hpp"
#include "imcp/codecs.hpp"
#include "imcp/metrics.hpp"
#include "imcp/raster.hpp"

namespace imcp {

const char* payload_kind_name(PayloadKind kind) {
    switch (kind) {
    case PayloadKind::caption: return "caption";
    case PayloadKind::cutout: return "cutout";
    case PayloadKind::ae_embedding: return "ae_embedding";
    case PayloadKind::lossy_image: return "lossy_image";
    case PayloadKind::lossless_image: return "lossless_image";
    case PayloadKind::raw_image: return "raw_image";
    }
    throw ValidationError("unknown payload kind value");
}

PayloadKind payload_kind_from_name(std::string_view name) {
    for (PayloadKind k : {PayloadKind::caption, PayloadKind::cutout, PayloadKind::ae_embedding,
                          PayloadKind::lossy_image, PayloadKind::lossless_image,
                          PayloadKind::raw_image})
        if (name == payload_kind_name(k)) return k;
    throw ValidationError("unknown payload kind '" + std::string(name) + "'");
}

CutoutExtraction extract_cutouts(const Image& image, std::span<const Annotation> annotations,
                                 double min_confidence) {
    image.validate();
    CutoutExtraction out;
    const auto w = static_cast<std::int64_t>(image.width);
    const auto h = static_cast<std::int64_t>(image.height);
    for (const Annotation& ann : annotations) {
        if (ann.confidence < min_confidence) continue;
        BoundingBox clipped;
        clipped.x_min = static_cast<std::int32_t>(std::clamp<std::int64_t>(ann.box.x_min, 0, w));
        clipped.x_max = static_cast<std::int32_t>(std::clamp<std::int64_t>(ann.box.x_max, 0, w));
        clipped.y_min = static_cast<std::int32_t>(std::clamp<std::int64_t>(ann.box.y_min, 0, h));
        clipped.y_max = static_cast<std::int32_t>(std::clamp<std::int64_t>(ann.box.y_max, 0, h));
        if (!clipped.positive_area()) {
            ++out.skipped;
            continue;
        }
        Payload p;
        p.kind = PayloadKind::cutout;
        p.bytes = serialize_blob(predictive_encode(crop(image, clipped)));
        p.source_image_id = ann.image_id;
        p.meta["class_name"] = ann.class_name;
        p.meta["confidence"] = format_shortest(ann.confidence);
        p.meta["x_min"] = std::to_string(clipped.x_min);
        p.meta["y_min"] = std::to_string(clipped.y_min);
        p.meta["x_max"] = std::to_string(clipped.x_max);
        p.meta["y_max"] = std::to_string(clipped.y_max);
        out.payloads.push_back(std::move(p));
    }
    return out;
}

std::string caption_sentence(std::span<const Annotation> annotations) {
    if (annotations.empty()) return "no objects detected.";
    std::map<std::string, std::size_t> counts;
    for (const Annotation& ann : annotations) ++counts[ann.class_name];

    std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::string sentence;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (i > 0) sentence += ", ";
        sentence += std::to_string(ordered[i].second) + " " + ordered[i].first;
        if (ordered[i].second != 1) sentence += 's';
    }
    sentence += " detected.";
    return sentence;
}

Payload generate_caption(std::span<const Annotation> annotations, std::string_view image_id) {
    const std::string sentence = caption_sentence(annotations);
    Payload p;
    p.kind = PayloadKind::caption;
    p.bytes.assign(sentence.begin(), sentence.end());
    p.source_image_id = std::string(image_id);
    p.meta["object_count"] = std::to_string(annotations.size());
    return p;
}

Payload package_image(const Image& image, std::string_view image_id,
                      const PackageMethod& method) {
    image.validate();
    Payload p;
    p.source_image_id = std::string(image_id);
    switch (method.kind) {
    case PackageMethod::Kind::raw: {
        p.kind = PayloadKind::raw_image;
        p.bytes = write_pnm(image);
        p.meta["format"] = image.channels == 3 ? "P6" : "P5";
        break;
    }
    case PackageMethod::Kind::lossless: {
        p.kind = PayloadKind::lossless_image;
        p.bytes = serialize_blob(predictive_encode(image));
        p.meta["codec"] = codec_name(CodecId::predictive);
        break;
    }
    case PackageMethod::Kind::dct: {
        p.kind = PayloadKind::lossy_image;
        p.bytes = serialize_blob(dct_encode(image, method.quality));
        p.meta["codec"] = codec_name(CodecId::dct);
        p.meta["quality"] = std::to_string(static_cast<int>(method.quality));
        break;
    }
    case PackageMethod::Kind::ae: {
        if (method.model == nullptr)
            throw ValidationError("ae packaging requires a model");
        p.kind = PayloadKind::ae_embedding;
        p.bytes = serialize_blob(encode_embedding(*method.model, image));
        p.meta["codec"] = codec_name(CodecId::ae_embedding);
        p.meta["blocks"] = std::to_string(method.model->config.blocks);
        p.meta["embedding_side"] = std::to_string(embedding_side(method.model->config));
        break;
    }
    }
    return p;
}

std::string build_manifest(std::span<const Payload> payloads) {
    if (payloads.empty()) throw ValidationError("cannot build a manifest from zero payloads");

    // Ratio baseline: the raw payload when present, otherwise the largest.
    std::uint64_t baseline = 0;
    for (const Payload& p : payloads) baseline = std::max<std::uint64_t>(baseline, p.byte_size());
    for (const Payload& p : payloads)
        if (p.kind == PayloadKind::raw_image) {
            baseline = p.byte_size();
            break;
        }
    if (baseline == 0) throw ValidationError("cannot build a manifest: all payloads are empty");

    nlohmann::ordered_json doc;
    doc["image_id"] = payloads.front().source_image_id;
    doc["payloads"] = nlohmann::ordered_json::array();
    for (const Payload& p : payloads) {
        nlohmann::ordered_json entry;
        entry["kind"] = payload_kind_name(p.kind);
        entry["byte_size"] = p.byte_size();
        entry["ratio_pct"] = compression_ratio_bytes(baseline, p.byte_size());
        entry["meta"] = p.meta;
        doc["payloads"].push_back(std::move(entry));
    }
    return doc.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view json_text) {
    const nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw DecodeError("malformed manifest JSON");
    try {
        Manifest m;
        m.image_id = doc.at("image_id").get<std::string>();
        for (const auto& entry : doc.at("payloads")) {
            ManifestEntry e;
            e.kind = payload_kind_from_name(entry.at("kind").get<std::string>());
            e.byte_size = entry.at("byte_size").get<std::uint64_t>();
            e.ratio_pct = entry.at("ratio_pct").get<double>();
            e.meta = entry.at("meta").get<std::map<std::string, std::string>>();
            m.entries.push_back(std::move(e));
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw DecodeError(std::string("manifest field error: ") + ex.what());
    }
}

} // namespace imcp
