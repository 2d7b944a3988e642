// imcp: compression and delivery experiments for low-bandwidth imagery.
//
// Exit codes: 0 success, 1 I/O failure, 2 validation/decode failure,
// 3 numerical failure. --format selects the stdout rendering only; with
// --out-dir every command additionally writes its canonical artifacts
// (CSV tables, JSON reports, blobs, checkpoints) plus run_config.json.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "imcp/autoencoder.hpp"
#include "imcp/codecs.hpp"
#include "imcp/delivery.hpp"
#include "imcp/errors.hpp"
#include "imcp/metrics.hpp"
#include "imcp/payloads.hpp"
#include "imcp/raster.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace imcp;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string format = "json";

    bool csv() const { return format == "csv"; }
};

// ---------------------------------------------------------------- file I/O

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
    if (in.bad()) throw IoError("read failed on '" + path + "'");
    return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed on '" + path + "'");
}

void write_text(const std::string& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Image load_image(const std::string& path) { return read_pnm(read_file(path)); }

// Resolves out_dir/name, creating the directory on first use.
std::string artifact_path(const GlobalOpts& g, const std::string& name) {
    std::error_code ec;
    fs::create_directories(g.out_dir, ec);
    if (ec) throw IoError("cannot create out dir '" + g.out_dir + "': " + ec.message());
    return (fs::path(g.out_dir) / name).string();
}

void emit_text(const GlobalOpts& g, const std::string& name, const std::string& text) {
    if (!g.out_dir.empty()) write_text(artifact_path(g, name), text);
}

void emit_bytes(const GlobalOpts& g, const std::string& name,
                std::span<const std::uint8_t> bytes) {
    if (!g.out_dir.empty()) write_file(artifact_path(g, name), bytes);
}

// ------------------------------------------------------------- JSON pieces

// Infinities have no JSON literal; follow the metrics convention ("inf").
json json_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json base_config(const GlobalOpts& g, const char* command) {
    json cfg;
    cfg["command"] = command;
    cfg["seed"] = g.seed;
    cfg["format"] = g.format;
    cfg["out_dir"] = g.out_dir;
    return cfg;
}

void finish(const GlobalOpts& g, const json& config, const json& body_json,
            const std::string& body_csv, const std::string& artifact_stem) {
    json envelope;
    envelope["config"] = config;
    for (const auto& [key, value] : body_json.items()) envelope[key] = value;
    const std::string rendered = envelope.dump(2) + "\n";
    if (!g.out_dir.empty()) {
        write_text(artifact_path(g, "run_config.json"), config.dump(2) + "\n");
        write_text(artifact_path(g, artifact_stem + ".json"), rendered);
    }
    std::cout << (g.csv() ? body_csv : rendered);
}

json quality_to_json(const QualityReport& r) { return json::parse(quality_report_to_json(r)); }

std::string quality_to_csv_row(const QualityReport& r) {
    std::string out = "mse,psnr_db,ssim,bytes_original,bytes_encoded,"
                      "compression_ratio_pct,bitrate_bpp\n";
    out += format_shortest(r.mse) + ",";
    out += format_shortest(r.psnr_db) + ",";
    out += format_shortest(r.ssim) + ",";
    out += std::to_string(r.bytes_original) + ",";
    out += std::to_string(r.bytes_encoded) + ",";
    out += format_shortest(r.compression_ratio_pct) + ",";
    out += format_shortest(r.bitrate_bpp) + "\n";
    return out;
}

// --------------------------------------------------------- dataset loading

std::vector<Image> load_dataset_dir(const std::string& dir) {
    std::vector<std::string> paths;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        const std::string ext = entry.path().extension().string();
        if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") paths.push_back(entry.path().string());
    }
    if (ec) throw IoError("cannot list dataset dir '" + dir + "': " + ec.message());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw ValidationError("dataset dir '" + dir + "' holds no PNM files");
    std::vector<Image> images;
    images.reserve(paths.size());
    for (const std::string& p : paths) images.push_back(load_image(p));
    return images;
}

struct DatasetOpts {
    std::string dataset_dir;
    std::uint32_t synthetic = 0;

    void add_flags(CLI::App* sub) {
        auto* dir = sub->add_option("--dataset", dataset_dir, "directory of PNM training images");
        auto* syn = sub->add_option("--synthetic", synthetic,
                                    "generate N synthetic scenes instead of reading a dataset");
        dir->excludes(syn);
    }

    std::vector<Image> load(std::uint64_t seed, std::uint32_t side) const {
        if (!dataset_dir.empty()) return load_dataset_dir(dataset_dir);
        if (synthetic == 0)
            throw ValidationError("need --dataset or --synthetic N to supply images");
        std::vector<Image> images;
        for (Scene& scene : generate_corpus(seed, synthetic, side))
            images.push_back(std::move(scene.image));
        return images;
    }
};

struct TrainFlags {
    std::uint32_t input_side = 64;
    std::uint32_t base_width = 16;
    std::string skip_mode = "codec_honest";
    TrainConfig tc;

    void add_flags(CLI::App* sub) {
        sub->add_option("--input-side", input_side, "square image side")->capture_default_str();
        sub->add_option("--base-width", base_width, "channel width of the first encoder block")
            ->capture_default_str();
        sub->add_option("--skip-mode", skip_mode, "skip connections: codec_honest or paper")
            ->check(CLI::IsMember({"codec_honest", "paper"}))
            ->capture_default_str();
        sub->add_option("--epochs", tc.epochs)->capture_default_str();
        sub->add_option("--batch-size", tc.batch_size)->capture_default_str();
        sub->add_option("--val-split", tc.val_split)->capture_default_str();
        sub->add_option("--lr", tc.learning_rate, "Adam learning rate")->capture_default_str();
    }

    ModelConfig model_config(std::uint32_t blocks, std::uint8_t channels,
                             std::uint64_t seed) const {
        ModelConfig mc;
        mc.blocks = blocks;
        mc.input_side = input_side;
        mc.image_channels = channels;
        mc.base_width = base_width;
        mc.seed = seed;
        mc.skip_mode = skip_mode == "paper" ? SkipMode::paper : SkipMode::codec_honest;
        return mc;
    }

    json to_json() const {
        json j;
        j["input_side"] = input_side;
        j["base_width"] = base_width;
        j["skip_mode"] = skip_mode;
        j["epochs"] = tc.epochs;
        j["batch_size"] = tc.batch_size;
        j["val_split"] = tc.val_split;
        j["learning_rate"] = tc.learning_rate;
        return j;
    }
};

json report_to_json(const TrainingReport& r) {
    json j;
    j["blocks"] = r.blocks;
    j["parameter_count"] = r.parameter_count;
    j["embedding_side"] = r.embedding_side;
    j["compression_ratio_pct"] = r.compression_ratio_pct;
    j["converged"] = r.converged;
    j["final_train_mse"] = r.train_mse.empty() ? json(nullptr) : json(r.train_mse.back());
    j["final_val_mse"] = r.val_mse.empty() ? json(nullptr) : json(r.val_mse.back());
    j["train_quality"] = quality_to_json(r.train_quality);
    j["test_quality"] = quality_to_json(r.test_quality);
    return j;
}

// --------------------------------------------------------------- commands

void cmd_metrics(const GlobalOpts& g, const std::string& a_path, const std::string& b_path) {
    const std::vector<std::uint8_t> a_bytes = read_file(a_path);
    const std::vector<std::uint8_t> b_bytes = read_file(b_path);
    const Image a = read_pnm(a_bytes);
    const Image b = read_pnm(b_bytes);

    QualityReport r;
    r.mse = mse(a, b);
    r.psnr_db = psnr_from_mse(r.mse);
    r.ssim = ssim(a, b);
    r.bytes_original = a_bytes.size();
    r.bytes_encoded = b_bytes.size();
    r.compression_ratio_pct = compression_ratio_bytes(r.bytes_original, r.bytes_encoded);
    r.bitrate_bpp = bitrate_bpp(r.bytes_encoded, a.pixel_count());

    json config = base_config(g, "metrics");
    config["image_a"] = a_path;
    config["image_b"] = b_path;
    json body;
    body["report"] = quality_to_json(r);
    const std::string csv = quality_to_csv_row(r);
    emit_text(g, "metrics.csv", csv);
    finish(g, config, body, csv, "metrics");
}

std::uint8_t checked_quality(std::uint32_t quality) {
    if (quality < 1 || quality > 100)
        throw ValidationError("quality must be in [1,100], got " + std::to_string(quality));
    return static_cast<std::uint8_t>(quality);
}

void cmd_codec(const GlobalOpts& g, const std::string& mode, const std::string& codec_name_arg,
               std::uint32_t quality, bool quality_given, const std::string& in_path,
               const std::string& out_path) {
    json config = base_config(g, "codec");
    config["mode"] = mode;
    config["input"] = in_path;
    config["output"] = out_path;

    std::uint64_t bytes_in = 0, bytes_out = 0, pnm_bytes = 0, blob_bytes = 0;
    std::size_t pixels = 0;

    if (mode == "encode") {
        const CodecId codec = codec_from_name(codec_name_arg);
        if (codec == CodecId::ae_embedding)
            throw ValidationError("the ae_embedding codec needs a model; see train/report/pipeline");
        if (quality_given && codec != CodecId::dct)
            throw ValidationError("--quality only applies to the dct codec");
        const std::vector<std::uint8_t> in_bytes = read_file(in_path);
        const Image image = read_pnm(in_bytes);
        EncodedBlob blob;
        switch (codec) {
        case CodecId::huffman: blob = huffman_encode_image(image); break;
        case CodecId::predictive: blob = predictive_encode(image); break;
        default: blob = dct_encode(image, checked_quality(quality)); break;
        }
        const std::vector<std::uint8_t> out_bytes = serialize_blob(blob);
        write_file(out_path, out_bytes);
        bytes_in = pnm_bytes = in_bytes.size();
        bytes_out = blob_bytes = out_bytes.size();
        pixels = image.pixel_count();
        config["codec"] = codec_name(codec);
        config["quality"] = quality;
    } else {
        const std::vector<std::uint8_t> in_bytes = read_file(in_path);
        const EncodedBlob blob = parse_blob(in_bytes);
        if (!codec_name_arg.empty() && codec_from_name(codec_name_arg) != blob.codec_id)
            throw ValidationError(std::string("blob holds a ") + codec_name(blob.codec_id) +
                                  " stream, not " + codec_name_arg);
        Image image;
        switch (blob.codec_id) {
        case CodecId::huffman: image = huffman_decode_image(blob); break;
        case CodecId::predictive: image = predictive_decode(blob); break;
        case CodecId::dct: image = dct_decode(blob); break;
        default:
            throw ValidationError("the ae_embedding codec needs a model; see report/pipeline");
        }
        const std::vector<std::uint8_t> out_bytes = write_pnm(image);
        write_file(out_path, out_bytes);
        bytes_in = blob_bytes = in_bytes.size();
        bytes_out = pnm_bytes = out_bytes.size();
        pixels = image.pixel_count();
        config["codec"] = codec_name(blob.codec_id);
        config["quality"] = blob.quality;
    }

    json body;
    body["bytes_in"] = bytes_in;
    body["bytes_out"] = bytes_out;
    body["compression_ratio_pct"] = compression_ratio_bytes(pnm_bytes, blob_bytes);
    body["bitrate_bpp"] = bitrate_bpp(blob_bytes, pixels);

    std::string csv = "bytes_in,bytes_out,compression_ratio_pct,bitrate_bpp\n";
    csv += std::to_string(bytes_in) + "," + std::to_string(bytes_out) + ",";
    csv += format_shortest(body["compression_ratio_pct"].get<double>()) + ",";
    csv += format_shortest(body["bitrate_bpp"].get<double>()) + "\n";
    emit_text(g, "codec.csv", csv);
    finish(g, config, body, csv, "codec");
}

void cmd_caption(const GlobalOpts& g, const std::string& ann_path, std::string image_id) {
    std::vector<Annotation> annotations = read_annotations(read_file(ann_path));
    if (!image_id.empty()) {
        std::erase_if(annotations, [&](const Annotation& a) { return a.image_id != image_id; });
    } else if (!annotations.empty()) {
        image_id = annotations.front().image_id;
    } else {
        image_id = "unknown";
    }
    const Payload p = generate_caption(annotations, image_id);

    json config = base_config(g, "caption");
    config["annotations"] = ann_path;
    config["image_id"] = image_id;
    json body;
    body["caption"] = p.text();
    body["byte_size"] = p.byte_size();
    body["object_count"] = annotations.size();

    std::string csv = "image_id,byte_size,caption\n";
    csv += image_id + "," + std::to_string(p.byte_size()) + ",\"" + p.text() + "\"\n";
    emit_text(g, "caption.txt", p.text() + "\n");
    finish(g, config, body, csv, "caption");
}

void cmd_cutout(const GlobalOpts& g, const std::string& image_path, const std::string& ann_path,
                double min_confidence, bool decode) {
    if (g.out_dir.empty())
        throw ValidationError("cutout writes files; pass --out-dir");
    const Image image = load_image(image_path);
    const std::vector<Annotation> annotations = read_annotations(read_file(ann_path));
    const CutoutExtraction got = extract_cutouts(image, annotations, min_confidence);

    json config = base_config(g, "cutout");
    config["image"] = image_path;
    config["annotations"] = ann_path;
    config["min_confidence"] = min_confidence;
    config["decode"] = decode;

    json listing = json::array();
    std::string csv = "index,file,class_name,confidence,byte_size\n";
    for (std::size_t i = 0; i < got.payloads.size(); ++i) {
        const Payload& p = got.payloads[i];
        char name[64];
        std::snprintf(name, sizeof(name), "cutout_%03zu_%s.%s", i,
                      p.meta.at("class_name").c_str(), decode ? "ppm" : "blob");
        if (decode) {
            emit_bytes(g, name, write_pnm(predictive_decode(parse_blob(p.bytes))));
        } else {
            emit_bytes(g, name, p.bytes);
        }
        json row;
        row["file"] = name;
        row["class_name"] = p.meta.at("class_name");
        row["confidence"] = p.meta.at("confidence");
        row["byte_size"] = p.byte_size();
        row["box"] = {p.meta.at("x_min"), p.meta.at("y_min"), p.meta.at("x_max"),
                      p.meta.at("y_max")};
        listing.push_back(row);
        csv += std::to_string(i) + "," + name + "," + p.meta.at("class_name") + "," +
               p.meta.at("confidence") + "," + std::to_string(p.byte_size()) + "\n";
    }

    json body;
    body["count"] = got.payloads.size();
    body["skipped"] = got.skipped;
    body["cutouts"] = listing;
    emit_text(g, "cutouts.csv", csv);
    finish(g, config, body, csv, "cutouts");
}

std::vector<Payload> payloads_from_specs(const std::vector<std::string>& specs) {
    std::vector<Payload> out;
    for (const std::string& s : specs) {
        const std::size_t colon = s.rfind(':');
        if (colon == std::string::npos)
            throw ValidationError("payload spec '" + s + "' is not kind:bytes");
        const PayloadKind kind = payload_kind_from_name(s.substr(0, colon));
        std::uint64_t size = 0;
        try {
            size = std::stoull(s.substr(colon + 1));
        } catch (const std::exception&) {
            throw ValidationError("payload spec '" + s + "' has a bad byte count");
        }
        if (size == 0) throw ValidationError("payload spec '" + s + "' must be >= 1 byte");
        Payload p;
        p.kind = kind;
        p.bytes.assign(size, 0);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Payload> payloads_from_manifest(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    const Manifest m = parse_manifest(std::string(bytes.begin(), bytes.end()));
    std::vector<Payload> out;
    for (const ManifestEntry& e : m.entries) {
        Payload p;
        p.kind = e.kind;
        p.bytes.assign(e.byte_size, 0);
        p.source_image_id = m.image_id;
        p.meta = e.meta;
        out.push_back(std::move(p));
    }
    return out;
}

json timeline_to_json(const DeliveryTimeline& t) {
    json rows = json::array();
    for (const TimelineEntry& e : t.entries) {
        json row;
        row["index"] = e.index;
        row["kind"] = payload_kind_name(e.kind);
        row["byte_size"] = e.byte_size;
        row["start_s"] = e.start_s;
        row["arrival_s"] = e.arrival_s;
        row["cumulative_bytes"] = e.cumulative_bytes;
        rows.push_back(row);
    }
    return rows;
}

json policies_to_json(const PolicyReport& report) {
    json rows = json::array();
    for (const PolicyOutcome& row : report.rows) {
        json r;
        r["policy"] = row.policy;
        r["time_to_first_intelligence_s"] = json_number(row.time_to_first_intelligence_s);
        r["total_duration_s"] = json_number(row.total_duration_s);
        rows.push_back(r);
    }
    return rows;
}

void cmd_simulate(const GlobalOpts& g, const std::string& manifest_path,
                  const std::vector<std::string>& payload_specs, double bandwidth_bps,
                  double latency_s, const std::string& policy) {
    std::vector<Payload> payloads;
    if (!manifest_path.empty()) payloads = payloads_from_manifest(manifest_path);
    auto extra = payloads_from_specs(payload_specs);
    payloads.insert(payloads.end(), std::make_move_iterator(extra.begin()),
                    std::make_move_iterator(extra.end()));
    if (payloads.empty())
        throw ValidationError("nothing to simulate; pass --manifest or --payload kind:bytes");

    const LinkModel link{bandwidth_bps, latency_s};
    json config = base_config(g, "simulate");
    config["manifest"] = manifest_path;
    config["bandwidth_bps"] = bandwidth_bps;
    config["latency_s"] = latency_s;
    config["policy"] = policy;
    config["payload_count"] = payloads.size();

    json body;
    std::string csv;
    if (policy == "compare") {
        const PolicyReport report = compare_policies(payloads, link);
        csv = policy_report_to_csv(report);
        body["policies"] = policies_to_json(report);
        emit_text(g, "policies.csv", csv);
    } else {
        TransmissionPlan plan;
        if (policy == "hierarchical") plan = plan_hierarchical(payloads);
        else if (policy == "raw_first") plan = plan_raw_first(payloads);
        else plan = plan_as_given(payloads);
        const DeliveryTimeline t = simulate(plan, link);
        csv = timeline_to_csv(t);
        body["timeline"] = timeline_to_json(t);
        body["total_duration_s"] = json_number(t.total_duration_s);
        double ttfi = std::numeric_limits<double>::infinity();
        try {
            ttfi = time_to_first_intelligence(t);
        } catch (const ValidationError&) {
        }
        body["time_to_first_intelligence_s"] = json_number(ttfi);
        emit_text(g, "timeline.csv", csv);
    }
    finish(g, config, body, csv, "simulate");
}

void cmd_train(const GlobalOpts& g, const DatasetOpts& data, TrainFlags& flags,
               std::uint32_t blocks, const std::string& model_out) {
    const std::vector<Image> dataset = data.load(g.seed, flags.input_side);
    const std::uint8_t channels = dataset.empty() ? 3 : dataset.front().channels;
    const ModelConfig mc = flags.model_config(blocks, channels, g.seed);
    TrainConfig tc = flags.tc;
    tc.seed = g.seed;

    const TrainOutcome outcome = train(mc, tc, dataset);

    json config = base_config(g, "train");
    config["blocks"] = blocks;
    config["dataset"] = data.dataset_dir;
    config["synthetic"] = data.synthetic;
    config["model"] = flags.to_json();
    json body;
    body["report"] = report_to_json(outcome.report);

    const std::vector<std::uint8_t> checkpoint = save_model(outcome.model);
    std::string saved_to;
    if (!model_out.empty()) {
        write_file(model_out, checkpoint);
        saved_to = model_out;
    } else if (!g.out_dir.empty()) {
        saved_to = artifact_path(g, "model.ae");
        write_file(saved_to, checkpoint);
    }
    body["model_path"] = saved_to;

    QualitySummaryRow row;
    row.blocks = static_cast<int>(blocks);
    row.psnr_train = outcome.report.train_quality.psnr_db;
    row.ssim_train = outcome.report.train_quality.ssim;
    row.psnr_test = outcome.report.test_quality.psnr_db;
    row.ssim_test = outcome.report.test_quality.ssim;
    row.output_size = static_cast<int>(outcome.report.embedding_side);
    row.compression_pct = outcome.report.compression_ratio_pct;
    const std::string csv = quality_summary_to_csv({&row, 1});

    emit_text(g, "curves.csv", curves_to_csv(outcome.report));
    emit_text(g, "train.csv", csv);
    finish(g, config, body, csv, "train");
}

void cmd_ablate(const GlobalOpts& g, const DatasetOpts& data, TrainFlags& flags,
                std::vector<std::uint32_t>& blocks, bool plan_only) {
    if (blocks.empty()) throw ValidationError("ablation needs at least one --blocks entry");

    std::vector<TrainingReport> reports;
    if (plan_only) {
        // Size/compression columns are pure arithmetic; no training happens
        // and the quality columns render as nan.
        for (std::uint32_t b : blocks) {
            const ModelConfig mc = flags.model_config(b, 3, g.seed);
            validate_config(mc);
            TrainingReport r;
            r.blocks = b;
            r.parameter_count = build_model(mc).parameter_count();
            r.embedding_side = embedding_side(mc);
            r.compression_ratio_pct =
                compression_ratio_spatial(mc.input_side, r.embedding_side);
            const double nan = std::numeric_limits<double>::quiet_NaN();
            r.train_quality.psnr_db = r.train_quality.ssim = nan;
            r.test_quality.psnr_db = r.test_quality.ssim = nan;
            reports.push_back(std::move(r));
        }
    } else {
        const std::vector<Image> dataset = data.load(g.seed, flags.input_side);
        const std::uint8_t channels = dataset.empty() ? 3 : dataset.front().channels;
        const ModelConfig base = flags.model_config(blocks.front(), channels, g.seed);
        TrainConfig tc = flags.tc;
        tc.seed = g.seed;
        reports = run_ablation(base, tc, blocks, dataset);
    }

    json config = base_config(g, "ablate");
    config["blocks"] = blocks;
    config["plan_only"] = plan_only;
    config["dataset"] = data.dataset_dir;
    config["synthetic"] = data.synthetic;
    config["model"] = flags.to_json();

    const std::string csv = ablation_to_csv(reports);
    json table = json::array();
    for (const TrainingReport& r : reports) table.push_back(report_to_json(r));
    json body;
    body["table"] = table;

    emit_text(g, "ablation.csv", csv);
    if (!plan_only && !g.out_dir.empty())
        for (const TrainingReport& r : reports)
            write_text(artifact_path(g, "curves_b" + std::to_string(r.blocks) + ".csv"),
                       curves_to_csv(r));
    finish(g, config, body, csv, "ablate");
}

void cmd_pipeline(const GlobalOpts& g, const std::string& image_path, const std::string& ann_path,
                  bool synthetic, std::uint32_t input_side, std::uint32_t objects,
                  const std::string& model_path, std::uint32_t quality, double min_confidence,
                  double bandwidth_bps, double latency_s) {
    Image image;
    std::vector<Annotation> annotations;
    std::string image_id;
    if (synthetic) {
        SceneSpec spec;
        spec.seed = g.seed;
        spec.width = input_side;
        spec.height = input_side;
        spec.object_count = objects;
        spec.background = BackgroundTexture::gradient;
        Scene scene = generate_scene(spec);
        image = std::move(scene.image);
        annotations = std::move(scene.annotations);
        image_id = "scene-" + std::to_string(g.seed);
    } else {
        if (image_path.empty())
            throw ValidationError("pipeline needs --image or --synthetic");
        image = load_image(image_path);
        if (!ann_path.empty()) annotations = read_annotations(read_file(ann_path));
        image_id = fs::path(image_path).stem().string();
    }

    std::vector<Payload> payloads;
    payloads.push_back(generate_caption(annotations, image_id));
    CutoutExtraction cuts = extract_cutouts(image, annotations, min_confidence);
    for (Payload& p : cuts.payloads) payloads.push_back(std::move(p));

    bool ae_included = false;
    if (!model_path.empty()) {
        const Model model = load_model(read_file(model_path));
        payloads.push_back(package_image(image, image_id, PackageMethod::ae(model)));
        ae_included = true;
    } else {
        std::cerr << "note: no --model checkpoint given; skipping the ae_embedding payload\n";
    }
    payloads.push_back(package_image(image, image_id, PackageMethod::dct(checked_quality(quality))));
    payloads.push_back(package_image(image, image_id, PackageMethod::lossless()));
    payloads.push_back(package_image(image, image_id, PackageMethod::raw()));

    const std::string manifest_text = build_manifest(payloads);
    const LinkModel link{bandwidth_bps, latency_s};
    const DeliveryTimeline timeline = simulate(plan_hierarchical(payloads), link);
    const PolicyReport policies = compare_policies(payloads, link);

    json config = base_config(g, "pipeline");
    config["image"] = synthetic ? "synthetic" : image_path;
    config["annotations"] = ann_path;
    config["input_side"] = input_side;
    config["objects"] = objects;
    config["model"] = model_path;
    config["quality"] = quality;
    config["min_confidence"] = min_confidence;
    config["bandwidth_bps"] = bandwidth_bps;
    config["latency_s"] = latency_s;

    json body;
    body["image_id"] = image_id;
    body["ae_included"] = ae_included;
    body["skipped_cutouts"] = cuts.skipped;
    body["manifest"] = json::parse(manifest_text);
    body["time_to_first_intelligence_s"] = json_number(time_to_first_intelligence(timeline));
    body["total_duration_s"] = json_number(timeline.total_duration_s);
    body["policies"] = policies_to_json(policies);

    const std::string policy_csv = policy_report_to_csv(policies);
    emit_text(g, "manifest.json", manifest_text);
    emit_text(g, "timeline.csv", timeline_to_csv(timeline));
    emit_text(g, "policies.csv", policy_csv);
    finish(g, config, body, policy_csv, "pipeline");
}

void cmd_report(const GlobalOpts& g, const std::string& image_path, bool synthetic,
                std::uint32_t input_side, const std::string& model_path, std::uint32_t blocks,
                std::uint32_t base_width) {
    Image image;
    if (synthetic) {
        SceneSpec spec;
        spec.seed = g.seed;
        spec.width = input_side;
        spec.height = input_side;
        spec.object_count = 3;
        spec.background = BackgroundTexture::gradient;
        image = generate_scene(spec).image;
    } else {
        if (image_path.empty()) throw ValidationError("report needs --image or --synthetic");
        image = load_image(image_path);
    }

    Model model;
    bool trained = false;
    if (!model_path.empty()) {
        model = load_model(read_file(model_path));
        trained = true;
    } else {
        ModelConfig mc;
        mc.blocks = blocks;
        mc.input_side = image.width;
        mc.image_channels = image.channels;
        mc.base_width = base_width;
        mc.seed = g.seed;
        model = build_model(mc);
    }

    const EncodedBlob ae_blob = encode_embedding(model, image);
    const Image ae_recon = decode_embedding(model, ae_blob);
    const std::uint64_t ae_bytes = ae_blob.serialized_size();
    const std::uint64_t raw_bytes = image.sample_count();

    // Pick the dct quality whose blob lands closest to the AE byte budget.
    std::uint8_t best_q = 1;
    std::uint64_t best_gap = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t best_bytes = 0;
    for (int q = 1; q <= 100; ++q) {
        const std::uint64_t size = dct_encode(image, static_cast<std::uint8_t>(q)).serialized_size();
        const std::uint64_t gap = size > ae_bytes ? size - ae_bytes : ae_bytes - size;
        if (gap < best_gap) {
            best_gap = gap;
            best_q = static_cast<std::uint8_t>(q);
            best_bytes = size;
        }
    }
    const Image dct_recon = dct_decode(dct_encode(image, best_q));

    const double ae_psnr = psnr(image, ae_recon);
    const double dct_psnr = psnr(image, dct_recon);

    json config = base_config(g, "report");
    config["image"] = synthetic ? "synthetic" : image_path;
    config["model"] = model_path;
    config["trained_checkpoint"] = trained;
    config["blocks"] = model.config.blocks;
    config["input_side"] = model.config.input_side;

    json body;
    json ae;
    ae["bytes"] = ae_bytes;
    ae["compression_ratio_pct"] = compression_ratio_bytes(raw_bytes, ae_bytes);
    ae["psnr_db"] = json_number(ae_psnr);
    json dct;
    dct["quality"] = best_q;
    dct["bytes"] = best_bytes;
    dct["compression_ratio_pct"] = compression_ratio_bytes(raw_bytes, best_bytes);
    dct["psnr_db"] = json_number(dct_psnr);
    body["ae"] = ae;
    body["dct"] = dct;
    body["psnr_change_pct"] = json_number(100.0 * (ae_psnr - dct_psnr) / dct_psnr);

    std::string csv = "method,quality,bytes,compression_ratio_pct,psnr_db\n";
    csv += "ae_embedding," + std::to_string(model.config.blocks) + "," + std::to_string(ae_bytes) +
           "," + format_shortest(compression_ratio_bytes(raw_bytes, ae_bytes)) + "," +
           format_shortest(ae_psnr) + "\n";
    csv += "dct," + std::to_string(best_q) + "," + std::to_string(best_bytes) + "," +
           format_shortest(compression_ratio_bytes(raw_bytes, best_bytes)) + "," +
           format_shortest(dct_psnr) + "\n";
    emit_text(g, "report.csv", csv);
    finish(g, config, body, csv, "report");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compression and delivery toolkit for low-bandwidth imagery"};
    app.require_subcommand(1);
    GlobalOpts g;
    app.add_option("--seed", g.seed, "seed for every randomized step")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "directory for artifact files");
    app.add_option("--format", g.format, "stdout rendering")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "quality metrics between two PNM images");
    metrics_cmd->fallthrough();
    std::string metrics_a, metrics_b;
    metrics_cmd->add_option("image_a", metrics_a, "reference image")->required();
    metrics_cmd->add_option("image_b", metrics_b, "image under test")->required();
    metrics_cmd->callback([&] { cmd_metrics(g, metrics_a, metrics_b); });

    // codec
    auto* codec_cmd = app.add_subcommand("codec", "encode or decode one image");
    codec_cmd->fallthrough();
    std::string codec_mode, codec_name_arg, codec_in, codec_out;
    std::uint32_t codec_quality = 75;
    codec_cmd->add_option("mode", codec_mode, "encode or decode")
        ->required()
        ->check(CLI::IsMember({"encode", "decode"}));
    codec_cmd->add_option("input", codec_in, "input file")->required();
    codec_cmd->add_option("output", codec_out, "output file")->required();
    auto* codec_opt = codec_cmd->add_option("--codec", codec_name_arg,
                                            "huffman, predictive or dct (encode only)");
    auto* quality_opt =
        codec_cmd->add_option("--quality", codec_quality, "dct quality 1-100")->capture_default_str();
    codec_cmd->callback([&] {
        if (codec_mode == "encode" && codec_opt->count() == 0)
            throw ValidationError("encode needs --codec");
        cmd_codec(g, codec_mode, codec_name_arg, codec_quality, quality_opt->count() > 0, codec_in,
                  codec_out);
    });

    // caption
    auto* caption_cmd = app.add_subcommand("caption", "template caption from annotations");
    caption_cmd->fallthrough();
    std::string caption_ann, caption_id;
    caption_cmd->add_option("--annotations", caption_ann, "JSON-lines annotation file")->required();
    caption_cmd->add_option("--image-id", caption_id, "restrict to one image id");
    caption_cmd->callback([&] { cmd_caption(g, caption_ann, caption_id); });

    // cutout
    auto* cutout_cmd = app.add_subcommand("cutout", "extract detection cutouts as blobs");
    cutout_cmd->fallthrough();
    std::string cutout_image, cutout_ann;
    double cutout_conf = 0.5;
    bool cutout_decode = false;
    cutout_cmd->add_option("--image", cutout_image, "source PNM image")->required();
    cutout_cmd->add_option("--annotations", cutout_ann, "JSON-lines annotation file")->required();
    cutout_cmd->add_option("--min-confidence", cutout_conf)->capture_default_str();
    cutout_cmd->add_flag("--decode", cutout_decode, "write PPM files instead of blobs");
    cutout_cmd->callback([&] { cmd_cutout(g, cutout_image, cutout_ann, cutout_conf, cutout_decode); });

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "deterministic link simulation");
    sim_cmd->fallthrough();
    std::string sim_manifest, sim_policy = "hierarchical";
    std::vector<std::string> sim_payloads;
    double sim_bandwidth = 10000.0, sim_latency = 0.0;
    sim_cmd->add_option("--manifest", sim_manifest, "manifest JSON from the pipeline command");
    sim_cmd->add_option("--payload", sim_payloads, "extra payload as kind:bytes (repeatable)");
    sim_cmd->add_option("--bandwidth-bps", sim_bandwidth, "link bytes per second")
        ->capture_default_str();
    sim_cmd->add_option("--latency-s", sim_latency, "fixed per-payload latency")
        ->capture_default_str();
    sim_cmd->add_option("--policy", sim_policy, "hierarchical, raw_first, as_given or compare")
        ->check(CLI::IsMember({"hierarchical", "raw_first", "as_given", "compare"}))
        ->capture_default_str();
    sim_cmd->callback(
        [&] { cmd_simulate(g, sim_manifest, sim_payloads, sim_bandwidth, sim_latency, sim_policy); });

    // train
    auto* train_cmd = app.add_subcommand("train", "train one autoencoder");
    train_cmd->fallthrough();
    DatasetOpts train_data;
    TrainFlags train_flags;
    std::uint32_t train_blocks = 3;
    std::string train_model_out;
    train_data.add_flags(train_cmd);
    train_flags.add_flags(train_cmd);
    train_cmd->add_option("--blocks", train_blocks, "downsampling block count")
        ->capture_default_str();
    train_cmd->add_option("--model-out", train_model_out, "checkpoint path");
    train_cmd->callback([&] { cmd_train(g, train_data, train_flags, train_blocks, train_model_out); });

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "train across block counts, Table-1 layout");
    ablate_cmd->fallthrough();
    DatasetOpts ablate_data;
    TrainFlags ablate_flags;
    std::vector<std::uint32_t> ablate_blocks = {0, 1, 2, 3, 4, 5};
    bool plan_only = false;
    ablate_data.add_flags(ablate_cmd);
    ablate_flags.add_flags(ablate_cmd);
    ablate_cmd->add_option("--blocks", ablate_blocks, "comma-separated block counts")
        ->delimiter(',')
        ->capture_default_str();
    ablate_cmd->add_flag("--plan-only", plan_only,
                         "emit size/compression columns without training");
    ablate_cmd->callback([&] { cmd_ablate(g, ablate_data, ablate_flags, ablate_blocks, plan_only); });

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "payload build, manifest and delivery run");
    pipe_cmd->fallthrough();
    std::string pipe_image, pipe_ann, pipe_model;
    bool pipe_synthetic = false;
    std::uint32_t pipe_side = 256, pipe_objects = 3;
    std::uint32_t pipe_quality = 75;
    double pipe_conf = 0.5, pipe_bandwidth = 10000.0, pipe_latency = 0.0;
    pipe_cmd->add_option("--image", pipe_image, "source PNM image");
    pipe_cmd->add_option("--annotations", pipe_ann, "JSON-lines annotation file");
    pipe_cmd->add_flag("--synthetic", pipe_synthetic, "use a generated scene instead of --image");
    pipe_cmd->add_option("--input-side", pipe_side, "synthetic scene side")->capture_default_str();
    pipe_cmd->add_option("--objects", pipe_objects, "synthetic object count")->capture_default_str();
    pipe_cmd->add_option("--model", pipe_model, "autoencoder checkpoint for the ae payload");
    pipe_cmd->add_option("--quality", pipe_quality, "dct quality")->capture_default_str();
    pipe_cmd->add_option("--min-confidence", pipe_conf)->capture_default_str();
    pipe_cmd->add_option("--bandwidth-bps", pipe_bandwidth)->capture_default_str();
    pipe_cmd->add_option("--latency-s", pipe_latency)->capture_default_str();
    pipe_cmd->callback([&] {
        cmd_pipeline(g, pipe_image, pipe_ann, pipe_synthetic, pipe_side, pipe_objects, pipe_model,
                     pipe_quality, pipe_conf, pipe_bandwidth, pipe_latency);
    });

    // report
    auto* report_cmd = app.add_subcommand("report", "AE vs DCT quality at matched byte budget");
    report_cmd->fallthrough();
    std::string report_image, report_model;
    bool report_synthetic = false;
    std::uint32_t report_side = 64, report_blocks = 3, report_width = 16;
    report_cmd->add_option("--image", report_image, "source PNM image");
    report_cmd->add_flag("--synthetic", report_synthetic, "use a generated scene");
    report_cmd->add_option("--input-side", report_side, "synthetic scene side")
        ->capture_default_str();
    report_cmd->add_option("--model", report_model, "autoencoder checkpoint");
    report_cmd->add_option("--blocks", report_blocks, "blocks for a fresh (untrained) model")
        ->capture_default_str();
    report_cmd->add_option("--base-width", report_width)->capture_default_str();
    report_cmd->callback([&] {
        cmd_report(g, report_image, report_synthetic, report_side, report_model, report_blocks,
                   report_width);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) { // covers DecodeError
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
