// Python bindings for the imcp core. Images cross the boundary as numpy
// uint8 arrays shaped (h, w) or (h, w, 3); compressed blobs, checkpoints and
// PNM files as `bytes`.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>
#include <optional>

#include "imcp/autoencoder.hpp"
#include "imcp/codecs.hpp"
#include "imcp/delivery.hpp"
#include "imcp/errors.hpp"
#include "imcp/metrics.hpp"
#include "imcp/payloads.hpp"
#include "imcp/raster.hpp"

namespace py = pybind11;
using namespace imcp;

namespace {

Image array_to_image(const py::array& array) {
    auto buf = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>::ensure(array);
    if (!buf) throw ValidationError("expected an array convertible to uint8");
    std::uint32_t channels = 1;
    if (buf.ndim() == 3) {
        channels = static_cast<std::uint32_t>(buf.shape(2));
    } else if (buf.ndim() != 2) {
        throw ValidationError("image array must have shape (h, w) or (h, w, c)");
    }
    Image image(static_cast<std::uint32_t>(buf.shape(1)), static_cast<std::uint32_t>(buf.shape(0)),
                channels);
    image.validate();
    std::memcpy(image.samples.data(), buf.data(), image.sample_count());
    return image;
}

py::array image_to_array(const Image& image) {
    image.validate();
    py::array_t<std::uint8_t> out;
    if (image.channels == 1)
        out = py::array_t<std::uint8_t>({static_cast<py::ssize_t>(image.height),
                                         static_cast<py::ssize_t>(image.width)});
    else
        out = py::array_t<std::uint8_t>({static_cast<py::ssize_t>(image.height),
                                         static_cast<py::ssize_t>(image.width),
                                         static_cast<py::ssize_t>(image.channels)});
    std::memcpy(out.mutable_data(), image.samples.data(), image.sample_count());
    return out;
}

std::vector<std::uint8_t> bytes_to_vector(const py::bytes& data) {
    const std::string_view view = data;
    return {view.begin(), view.end()};
}

py::bytes vector_to_bytes(const std::vector<std::uint8_t>& data) {
    return py::bytes(reinterpret_cast<const char*>(data.data()), data.size());
}

std::vector<Image> arrays_to_images(const std::vector<py::array>& arrays) {
    std::vector<Image> images;
    images.reserve(arrays.size());
    for (const py::array& a : arrays) images.push_back(array_to_image(a));
    return images;
}

py::dict quality_to_dict(const QualityReport& q) {
    py::dict d;
    d["mse"] = q.mse;
    d["psnr_db"] = q.psnr_db;
    d["ssim"] = q.ssim;
    d["bytes_original"] = q.bytes_original;
    d["bytes_encoded"] = q.bytes_encoded;
    d["compression_ratio_pct"] = q.compression_ratio_pct;
    d["bitrate_bpp"] = q.bitrate_bpp;
    return d;
}

py::dict report_to_dict(const TrainingReport& r) {
    py::dict d;
    d["blocks"] = r.blocks;
    d["train_mse"] = r.train_mse;
    d["val_mse"] = r.val_mse;
    d["train_quality"] = quality_to_dict(r.train_quality);
    d["test_quality"] = quality_to_dict(r.test_quality);
    d["parameter_count"] = r.parameter_count;
    d["embedding_side"] = r.embedding_side;
    d["compression_ratio_pct"] = r.compression_ratio_pct;
    d["converged"] = r.converged;
    return d;
}

py::dict timeline_to_dict(const DeliveryTimeline& timeline) {
    py::list entries;
    for (const TimelineEntry& e : timeline.entries) {
        py::dict d;
        d["index"] = e.index;
        d["kind"] = payload_kind_name(e.kind);
        d["byte_size"] = e.byte_size;
        d["start_s"] = e.start_s;
        d["arrival_s"] = e.arrival_s;
        d["cumulative_bytes"] = e.cumulative_bytes;
        entries.append(d);
    }
    py::dict out;
    out["entries"] = entries;
    out["total_duration_s"] = timeline.total_duration_s;
    return out;
}

ModelConfig config_from_kwargs(std::uint32_t blocks, std::uint32_t input_side,
                               std::uint32_t image_channels, std::uint32_t base_width,
                               std::uint64_t seed, const std::string& skip_mode) {
    ModelConfig config;
    config.blocks = blocks;
    config.input_side = input_side;
    config.image_channels = image_channels;
    config.base_width = base_width;
    config.seed = seed;
    if (skip_mode == "paper")
        config.skip_mode = SkipMode::paper;
    else if (skip_mode == "codec_honest")
        config.skip_mode = SkipMode::codec_honest;
    else
        throw ValidationError("skip_mode must be 'paper' or 'codec_honest'");
    validate_config(config);
    return config;
}

// Owns a Model; the python-facing constructor goes through build_model so the
// weight layout always matches a validated config.
class PyModel {
public:
    explicit PyModel(Model model) : model_(std::move(model)) {}

    py::dict config() const {
        py::dict d;
        d["blocks"] = model_.config.blocks;
        d["input_side"] = model_.config.input_side;
        d["image_channels"] = model_.config.image_channels;
        d["base_width"] = model_.config.base_width;
        d["seed"] = model_.config.seed;
        d["skip_mode"] =
            model_.config.skip_mode == SkipMode::paper ? "paper" : "codec_honest";
        return d;
    }

    std::size_t parameter_count() const { return model_.parameter_count(); }
    std::uint32_t embedding_side() const { return imcp::embedding_side(model_.config); }

    py::tuple forward_image(const py::array& array) const {
        const Tensor batch = image_to_tensor(array_to_image(array));
        ForwardResult result = forward(model_, batch);
        py::array recon = image_to_array(tensor_to_image(result.reconstruction));
        const Tensor& emb = result.embedding;
        py::array_t<double> embedding({static_cast<py::ssize_t>(emb.c),
                                       static_cast<py::ssize_t>(emb.h),
                                       static_cast<py::ssize_t>(emb.w)});
        std::memcpy(embedding.mutable_data(), emb.data.data(), emb.size() * sizeof(double));
        return py::make_tuple(recon, embedding);
    }

    py::bytes encode(const py::array& array) const {
        return vector_to_bytes(serialize_blob(encode_embedding(model_, array_to_image(array))));
    }

    py::array decode(const py::bytes& blob_bytes) const {
        const EncodedBlob blob = parse_blob(bytes_to_vector(blob_bytes));
        return image_to_array(decode_embedding(model_, blob));
    }

    py::bytes save() const { return vector_to_bytes(save_model(model_)); }

    const Model& raw() const { return model_; }

private:
    Model model_;
};

py::dict annotation_to_dict(const Annotation& a) {
    py::dict d;
    d["image_id"] = a.image_id;
    d["bbox"] = py::make_tuple(a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max);
    d["class_name"] = a.class_name;
    d["confidence"] = a.confidence;
    return d;
}

Annotation annotation_from_dict(const py::dict& d) {
    Annotation a;
    a.image_id = py::cast<std::string>(d["image_id"]);
    auto box = py::cast<std::vector<std::int32_t>>(d["bbox"]);
    if (box.size() != 4) throw ValidationError("bbox must have 4 entries");
    a.box = {box[0], box[1], box[2], box[3]};
    a.class_name = py::cast<std::string>(d["class_name"]);
    a.confidence = py::cast<double>(d["confidence"]);
    return a;
}

std::vector<Annotation> annotations_from_list(const py::list& list) {
    std::vector<Annotation> out;
    out.reserve(list.size());
    for (const auto& item : list) out.push_back(annotation_from_dict(py::cast<py::dict>(item)));
    return out;
}

py::tuple scene_to_tuple(const Scene& scene) {
    py::list anns;
    for (const Annotation& a : scene.annotations) anns.append(annotation_to_dict(a));
    return py::make_tuple(image_to_array(scene.image), anns);
}

} // namespace

PYBIND11_MODULE(_imcp, m) {
    m.doc() = "compression-and-delivery toolkit for low-bandwidth imagery";

    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    // DecodeError derives from ValidationError; register the child first so
    // its translator wins.
    auto validation = py::register_exception<ValidationError>(m, "ValidationError",
                                                              PyExc_ValueError);
    py::register_exception<DecodeError>(m, "DecodeError", validation.ptr());

    // raster
    m.def("read_pnm", [](const py::bytes& data) {
        return image_to_array(read_pnm(bytes_to_vector(data)));
    }, py::arg("data"), "Parse P5/P6 PNM bytes into a uint8 array.");
    m.def("write_pnm", [](const py::array& image) {
        return vector_to_bytes(write_pnm(array_to_image(image)));
    }, py::arg("image"), "Serialize a uint8 array as canonical binary PNM.");
    m.def("crop", [](const py::array& image, std::int32_t x_min, std::int32_t y_min,
                     std::int32_t x_max, std::int32_t y_max) {
        return image_to_array(crop(array_to_image(image), {x_min, y_min, x_max, y_max}));
    }, py::arg("image"), py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"));
    m.def("resize_nearest", [](const py::array& image, std::uint32_t width, std::uint32_t height) {
        return image_to_array(resize_nearest(array_to_image(image), width, height));
    }, py::arg("image"), py::arg("width"), py::arg("height"));
    m.def("generate_scene", [](std::uint64_t seed, std::uint32_t width, std::uint32_t height,
                               std::uint32_t channels, std::uint32_t object_count,
                               const std::string& background) {
        SceneSpec spec;
        spec.seed = seed;
        spec.width = width;
        spec.height = height;
        spec.channels = channels;
        spec.object_count = object_count;
        if (background == "flat") spec.background = BackgroundTexture::flat;
        else if (background == "gradient") spec.background = BackgroundTexture::gradient;
        else if (background == "noise") spec.background = BackgroundTexture::noise;
        else throw ValidationError("background must be flat, gradient or noise");
        return scene_to_tuple(generate_scene(spec));
    }, py::arg("seed"), py::arg("width") = 256, py::arg("height") = 256, py::arg("channels") = 3,
       py::arg("object_count") = 0, py::arg("background") = "gradient",
       "Deterministic synthetic scene; returns (image, annotations).");
    m.def("generate_corpus", [](std::uint64_t seed, std::size_t count, std::uint32_t side) {
        py::list out;
        for (const Scene& scene : generate_corpus(seed, count, side))
            out.append(scene_to_tuple(scene));
        return out;
    }, py::arg("seed"), py::arg("count"), py::arg("side") = 256);
    m.def("read_annotations", [](const py::bytes& data) {
        py::list out;
        for (const Annotation& a : read_annotations(bytes_to_vector(data)))
            out.append(annotation_to_dict(a));
        return out;
    }, py::arg("data"), "Parse JSON-lines annotations.");
    m.def("write_annotations", [](const py::list& annotations) {
        return vector_to_bytes(write_annotations(annotations_from_list(annotations)));
    }, py::arg("annotations"));

    // metrics
    m.def("mse", [](const py::array& a, const py::array& b) {
        return mse(array_to_image(a), array_to_image(b));
    }, py::arg("a"), py::arg("b"));
    m.def("psnr", [](const py::array& a, const py::array& b, double max_value) {
        return psnr(array_to_image(a), array_to_image(b), max_value);
    }, py::arg("a"), py::arg("b"), py::arg("max_value") = 255.0);
    m.def("ssim", [](const py::array& a, const py::array& b) {
        return ssim(array_to_image(a), array_to_image(b));
    }, py::arg("a"), py::arg("b"));
    m.def("compression_ratio_bytes", &compression_ratio_bytes, py::arg("original_bytes"),
          py::arg("encoded_bytes"));
    m.def("compression_ratio_spatial", &compression_ratio_spatial, py::arg("input_side"),
          py::arg("output_side"));
    m.def("bitrate_bpp", &bitrate_bpp, py::arg("encoded_bytes"), py::arg("pixel_count"));

    // codecs
    m.def("encode_image", [](const py::array& image, const std::string& codec,
                             std::uint32_t quality) {
        const Image img = array_to_image(image);
        EncodedBlob blob;
        switch (codec_from_name(codec)) {
        case CodecId::huffman: blob = huffman_encode_image(img); break;
        case CodecId::predictive: blob = predictive_encode(img); break;
        case CodecId::dct:
            if (quality < 1 || quality > 100)
                throw ValidationError("quality must be in [1,100]");
            blob = dct_encode(img, static_cast<std::uint8_t>(quality));
            break;
        default:
            throw ValidationError("encode_image supports huffman, predictive and dct");
        }
        return vector_to_bytes(serialize_blob(blob));
    }, py::arg("image"), py::arg("codec") = "predictive", py::arg("quality") = 75,
       "Compress to a self-describing blob; codec is huffman, predictive or dct.");
    m.def("decode_image", [](const py::bytes& data) {
        const EncodedBlob blob = parse_blob(bytes_to_vector(data));
        switch (blob.codec_id) {
        case CodecId::huffman: return image_to_array(huffman_decode_image(blob));
        case CodecId::predictive: return image_to_array(predictive_decode(blob));
        case CodecId::dct: return image_to_array(dct_decode(blob));
        default:
            throw ValidationError("blob requires a model; use Model.decode");
        }
    }, py::arg("data"));
    m.def("blob_info", [](const py::bytes& data) {
        const EncodedBlob blob = parse_blob(bytes_to_vector(data));
        py::dict d;
        d["codec"] = codec_name(blob.codec_id);
        d["width"] = blob.width;
        d["height"] = blob.height;
        d["channels"] = blob.channels;
        d["quality"] = blob.quality;
        d["payload_bytes"] = blob.payload.size();
        d["serialized_bytes"] = blob.serialized_size();
        return d;
    }, py::arg("data"));

    // payloads
    py::class_<Payload>(m, "Payload")
        .def_property_readonly("kind",
                               [](const Payload& p) { return payload_kind_name(p.kind); })
        .def_property_readonly("data", [](const Payload& p) { return vector_to_bytes(p.bytes); })
        .def_readonly("source_image_id", &Payload::source_image_id)
        .def_readonly("meta", &Payload::meta)
        .def_property_readonly("byte_size", &Payload::byte_size)
        .def("text", &Payload::text)
        .def("__repr__", [](const Payload& p) {
            return "<Payload " + std::string(payload_kind_name(p.kind)) + ", " +
                   std::to_string(p.byte_size()) + " bytes>";
        });

    m.def("caption_sentence", [](const py::list& annotations) {
        return caption_sentence(annotations_from_list(annotations));
    }, py::arg("annotations"));
    m.def("generate_caption", [](const py::list& annotations, const std::string& image_id) {
        return generate_caption(annotations_from_list(annotations), image_id);
    }, py::arg("annotations"), py::arg("image_id"));
    m.def("extract_cutouts", [](const py::array& image, const py::list& annotations,
                                double min_confidence) {
        CutoutExtraction extraction =
            extract_cutouts(array_to_image(image), annotations_from_list(annotations),
                            min_confidence);
        return py::make_tuple(std::move(extraction.payloads), extraction.skipped);
    }, py::arg("image"), py::arg("annotations"), py::arg("min_confidence") = 0.5,
       "Returns (payloads, skipped_count).");
    m.def("package_image", [](const py::array& image, const std::string& image_id,
                              const std::string& method, std::uint32_t quality,
                              const PyModel* model) {
        const Image img = array_to_image(image);
        if (method == "raw") return package_image(img, image_id, PackageMethod::raw());
        if (method == "lossless") return package_image(img, image_id, PackageMethod::lossless());
        if (method == "dct") {
            if (quality < 1 || quality > 100)
                throw ValidationError("quality must be in [1,100]");
            return package_image(img, image_id,
                                 PackageMethod::dct(static_cast<std::uint8_t>(quality)));
        }
        if (method == "ae") {
            if (!model) throw ValidationError("method 'ae' requires a model");
            return package_image(img, image_id, PackageMethod::ae(model->raw()));
        }
        throw ValidationError("method must be raw, lossless, dct or ae");
    }, py::arg("image"), py::arg("image_id"), py::arg("method"), py::arg("quality") = 75,
       py::arg("model") = nullptr);
    m.def("make_payload", [](const std::string& kind, std::size_t byte_size) {
        Payload p;
        p.kind = payload_kind_from_name(kind);
        p.bytes.assign(byte_size, 0);
        return p;
    }, py::arg("kind"), py::arg("byte_size"),
       "Filler payload for delivery planning experiments.");
    m.def("build_manifest", [](const std::vector<Payload>& payloads) {
        return build_manifest(payloads);
    }, py::arg("payloads"));

    // delivery
    m.def("simulate", [](const std::vector<Payload>& payloads, double bytes_per_second,
                         double latency_s, const std::string& policy) {
        const LinkModel link{bytes_per_second, latency_s};
        TransmissionPlan plan;
        if (policy == "hierarchical") plan = plan_hierarchical(payloads);
        else if (policy == "raw_first") plan = plan_raw_first(payloads);
        else if (policy == "as_given") plan = plan_as_given(payloads);
        else throw ValidationError("policy must be hierarchical, raw_first or as_given");
        const DeliveryTimeline timeline = simulate(plan, link);
        py::dict out = timeline_to_dict(timeline);
        try {
            out["time_to_first_intelligence_s"] = time_to_first_intelligence(timeline);
        } catch (const ValidationError&) {
            out["time_to_first_intelligence_s"] = std::numeric_limits<double>::infinity();
        }
        return out;
    }, py::arg("payloads"), py::arg("bytes_per_second"), py::arg("latency_s") = 0.0,
       py::arg("policy") = "hierarchical");
    m.def("compare_policies", [](const std::vector<Payload>& payloads, double bytes_per_second,
                                 double latency_s) {
        py::list rows;
        for (const PolicyOutcome& row : compare_policies(payloads, {bytes_per_second, latency_s}).rows) {
            py::dict d;
            d["policy"] = row.policy;
            d["time_to_first_intelligence_s"] = row.time_to_first_intelligence_s;
            d["total_duration_s"] = row.total_duration_s;
            rows.append(d);
        }
        return rows;
    }, py::arg("payloads"), py::arg("bytes_per_second"), py::arg("latency_s") = 0.0);

    // autoencoder
    py::class_<PyModel>(m, "Model")
        .def(py::init([](std::uint32_t blocks, std::uint32_t input_side,
                         std::uint32_t image_channels, std::uint32_t base_width,
                         std::uint64_t seed, const std::string& skip_mode) {
            return PyModel(build_model(config_from_kwargs(blocks, input_side, image_channels,
                                                          base_width, seed, skip_mode)));
        }), py::arg("blocks") = 5, py::arg("input_side") = 256, py::arg("image_channels") = 3,
            py::arg("base_width") = 16, py::arg("seed") = 0,
            py::arg("skip_mode") = "codec_honest")
        .def_property_readonly("config", &PyModel::config)
        .def_property_readonly("parameter_count", &PyModel::parameter_count)
        .def_property_readonly("embedding_side", &PyModel::embedding_side)
        .def("forward", &PyModel::forward_image, py::arg("image"),
             "Returns (reconstruction, embedding) for one image.")
        .def("encode", &PyModel::encode, py::arg("image"),
             "Quantized embedding blob bytes (codec_honest models).")
        .def("decode", &PyModel::decode, py::arg("blob"))
        .def("save", &PyModel::save, "Checkpoint bytes.")
        .def_static("load", [](const py::bytes& data) {
            return PyModel(load_model(bytes_to_vector(data)));
        }, py::arg("data"));

    m.def("train", [](const std::vector<py::array>& dataset, std::uint32_t blocks,
                      std::uint32_t input_side, std::uint32_t image_channels,
                      std::uint32_t base_width, std::uint64_t model_seed,
                      const std::string& skip_mode, std::uint32_t epochs,
                      std::uint32_t batch_size, double val_split, double learning_rate,
                      std::uint64_t seed) {
        const ModelConfig config = config_from_kwargs(blocks, input_side, image_channels,
                                                      base_width, model_seed, skip_mode);
        TrainConfig tc;
        tc.epochs = epochs;
        tc.batch_size = batch_size;
        tc.val_split = val_split;
        tc.learning_rate = learning_rate;
        tc.seed = seed;
        TrainOutcome outcome = train(config, tc, arrays_to_images(dataset));
        return py::make_tuple(PyModel(std::move(outcome.model)), report_to_dict(outcome.report));
    }, py::arg("dataset"), py::arg("blocks") = 5, py::arg("input_side") = 256,
       py::arg("image_channels") = 3, py::arg("base_width") = 16, py::arg("model_seed") = 0,
       py::arg("skip_mode") = "codec_honest", py::arg("epochs") = 50, py::arg("batch_size") = 25,
       py::arg("val_split") = 0.2, py::arg("learning_rate") = 1e-3, py::arg("seed") = 0,
       "Returns (model, report).");
}
