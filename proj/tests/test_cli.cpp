#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "imcp/autoencoder.hpp"
#include "imcp/codecs.hpp"
#include "imcp/delivery.hpp"
#include "imcp/metrics.hpp"
#include "imcp/payloads.hpp"
#include "imcp/raster.hpp"

using namespace imcp;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path scratch_root() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() / ("imcp_cli_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path scratch_dir(const std::string& name) {
    fs::path p = scratch_root() / name;
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> slurp_bytes(const fs::path& path) {
    const std::string text = slurp(path);
    return {text.begin(), text.end()};
}

void spit(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    if (!bytes.empty())
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out_file = scratch_root() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err_file = scratch_root() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string command = std::string(IMCP_CLI_PATH) + " " + args + " >" + out_file.string() +
                                " 2>" + err_file.string();
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

Scene test_scene(std::uint64_t seed, std::uint32_t side, std::uint32_t objects) {
    SceneSpec spec;
    spec.seed = seed;
    spec.width = side;
    spec.height = side;
    spec.object_count = objects;
    spec.background = BackgroundTexture::gradient;
    return generate_scene(spec);
}

} // namespace

TEST_CASE("cli usage errors") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("metrics --help").exit_code == 0);
}

TEST_CASE("cli metrics") {
    const fs::path dir = scratch_dir("metrics");
    const Scene scene = test_scene(21, 32, 2);
    spit(dir / "a.ppm", write_pnm(scene.image));
    const Image lossy = dct_decode(dct_encode(scene.image, 60));
    spit(dir / "b.ppm", write_pnm(lossy));

    SUBCASE("identical images give infinite psnr") {
        const CliResult r = run_cli("metrics " + (dir / "a.ppm").string() + " " +
                                    (dir / "a.ppm").string());
        REQUIRE(r.exit_code == 0);
        const json doc = json::parse(r.out);
        CHECK(doc["report"]["psnr_db"] == "inf");
        CHECK(doc["report"]["ssim"] == 1.0);
        CHECK(doc["report"]["mse"] == 0.0);
        CHECK(doc["config"]["command"] == "metrics");
    }
    SUBCASE("values match the library to 1e-9") {
        const CliResult r = run_cli("metrics " + (dir / "a.ppm").string() + " " +
                                    (dir / "b.ppm").string());
        REQUIRE(r.exit_code == 0);
        const json doc = json::parse(r.out);
        CHECK(doc["report"]["mse"].get<double>() ==
              doctest::Approx(mse(scene.image, lossy)).epsilon(1e-9));
        CHECK(doc["report"]["psnr_db"].get<double>() ==
              doctest::Approx(psnr(scene.image, lossy)).epsilon(1e-9));
        CHECK(doc["report"]["ssim"].get<double>() ==
              doctest::Approx(ssim(scene.image, lossy)).epsilon(1e-9));
    }
    SUBCASE("csv format emits one header and one row") {
        const CliResult r = run_cli("metrics --format csv " + (dir / "a.ppm").string() + " " +
                                    (dir / "b.ppm").string());
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.rfind("mse,psnr_db,ssim,", 0) == 0);
        CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);
    }
    SUBCASE("global flags work after the subcommand name") {
        const CliResult r = run_cli("metrics " + (dir / "a.ppm").string() + " " +
                                    (dir / "a.ppm").string() + " --format csv");
        CHECK(r.exit_code == 0);
        CHECK(r.out.rfind("mse,", 0) == 0);
    }
    SUBCASE("dimension mismatch exits 2") {
        spit(dir / "small.ppm", write_pnm(test_scene(3, 16, 0).image));
        const CliResult r = run_cli("metrics " + (dir / "a.ppm").string() + " " +
                                    (dir / "small.ppm").string());
        CHECK(r.exit_code == 2);
        CHECK(!r.err.empty());
    }
    SUBCASE("missing file exits 1") {
        const CliResult r = run_cli("metrics " + (dir / "absent.ppm").string() + " " +
                                    (dir / "a.ppm").string());
        CHECK(r.exit_code == 1);
    }
}

TEST_CASE("cli codec") {
    const fs::path dir = scratch_dir("codec");
    const Scene scene = test_scene(33, 48, 3);
    spit(dir / "in.ppm", write_pnm(scene.image));

    SUBCASE("predictive encode/decode is bit-exact") {
        const CliResult enc = run_cli("codec encode --codec predictive " +
                                      (dir / "in.ppm").string() + " " + (dir / "p.blob").string());
        REQUIRE(enc.exit_code == 0);
        const json enc_doc = json::parse(enc.out);
        CHECK(enc_doc["bytes_out"].get<std::uint64_t>() == fs::file_size(dir / "p.blob"));

        const CliResult dec = run_cli("codec decode " + (dir / "p.blob").string() + " " +
                                      (dir / "out.ppm").string());
        REQUIRE(dec.exit_code == 0);
        CHECK(slurp(dir / "out.ppm") == slurp(dir / "in.ppm"));
    }
    SUBCASE("dct ratio shrinks as quality drops") {
        const CliResult q95 = run_cli("codec encode --codec dct --quality 95 " +
                                      (dir / "in.ppm").string() + " " + (dir / "q95.blob").string());
        const CliResult q5 = run_cli("codec encode --codec dct --quality 5 " +
                                     (dir / "in.ppm").string() + " " + (dir / "q5.blob").string());
        REQUIRE(q95.exit_code == 0);
        REQUIRE(q5.exit_code == 0);
        CHECK(json::parse(q5.out)["compression_ratio_pct"].get<double>() <
              json::parse(q95.out)["compression_ratio_pct"].get<double>());
    }
    SUBCASE("unknown codec exits 2") {
        const CliResult r = run_cli("codec encode --codec middleout " + (dir / "in.ppm").string() +
                                    " " + (dir / "x.blob").string());
        CHECK(r.exit_code == 2);
    }
    SUBCASE("quality flag on a lossless codec exits 2") {
        const CliResult r = run_cli("codec encode --codec predictive --quality 9 " +
                                    (dir / "in.ppm").string() + " " + (dir / "x.blob").string());
        CHECK(r.exit_code == 2);
    }
    SUBCASE("decode with mismatched --codec assertion exits 2") {
        REQUIRE(run_cli("codec encode --codec predictive " + (dir / "in.ppm").string() + " " +
                        (dir / "p2.blob").string())
                    .exit_code == 0);
        const CliResult r = run_cli("codec decode --codec dct " + (dir / "p2.blob").string() + " " +
                                    (dir / "y.ppm").string());
        CHECK(r.exit_code == 2);
    }
    SUBCASE("garbage blob exits 2") {
        spit(dir / "junk.blob", write_pnm(scene.image));
        const CliResult r = run_cli("codec decode " + (dir / "junk.blob").string() + " " +
                                    (dir / "z.ppm").string());
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("cli caption") {
    const fs::path dir = scratch_dir("caption");
    const Scene scene = test_scene(5, 64, 4);
    spit(dir / "ann.jsonl", write_annotations(scene.annotations));
    spit(dir / "empty.jsonl", std::vector<std::uint8_t>{});

    SUBCASE("matches the library sentence") {
        const CliResult r = run_cli("caption --annotations " + (dir / "ann.jsonl").string());
        REQUIRE(r.exit_code == 0);
        const json doc = json::parse(r.out);
        CHECK(doc["caption"] == caption_sentence(scene.annotations));
        CHECK(doc["byte_size"].get<std::size_t>() ==
              caption_sentence(scene.annotations).size());
    }
    SUBCASE("no annotations") {
        const CliResult r = run_cli("caption --annotations " + (dir / "empty.jsonl").string());
        REQUIRE(r.exit_code == 0);
        CHECK(json::parse(r.out)["caption"] == "no objects detected.");
    }
    SUBCASE("artifacts include the raw text") {
        const fs::path out = scratch_dir("caption_out");
        const CliResult r = run_cli("caption --annotations " + (dir / "ann.jsonl").string() +
                                    " --out-dir " + out.string());
        REQUIRE(r.exit_code == 0);
        CHECK(slurp(out / "caption.txt") == caption_sentence(scene.annotations) + "\n");
        CHECK(fs::exists(out / "run_config.json"));
    }
}

TEST_CASE("cli cutout") {
    const fs::path dir = scratch_dir("cutout");
    const Scene scene = test_scene(7, 64, 3);
    spit(dir / "img.ppm", write_pnm(scene.image));
    spit(dir / "ann.jsonl", write_annotations(scene.annotations));

    SUBCASE("writes one decodable blob per confident annotation") {
        const fs::path out = scratch_dir("cutout_out");
        const CliResult r = run_cli("cutout --image " + (dir / "img.ppm").string() +
                                    " --annotations " + (dir / "ann.jsonl").string() +
                                    " --min-confidence 0 --out-dir " + out.string());
        REQUIRE(r.exit_code == 0);
        const json doc = json::parse(r.out);
        REQUIRE(doc["count"].get<std::size_t>() == scene.annotations.size());
        for (const json& row : doc["cutouts"]) {
            const Image cut =
                predictive_decode(parse_blob(slurp_bytes(out / row["file"].get<std::string>())));
            CHECK(cut.pixel_count() > 0);
        }
    }
    SUBCASE("--decode writes readable PPM chips") {
        const fs::path out = scratch_dir("cutout_ppm");
        const CliResult r = run_cli("cutout --image " + (dir / "img.ppm").string() +
                                    " --annotations " + (dir / "ann.jsonl").string() +
                                    " --min-confidence 0 --decode --out-dir " + out.string());
        REQUIRE(r.exit_code == 0);
        const json doc = json::parse(r.out);
        const Annotation& first = scene.annotations.front();
        const Image chip =
            read_pnm(slurp_bytes(out / doc["cutouts"][0]["file"].get<std::string>()));
        CHECK(chip == crop(scene.image, first.box));
    }
    SUBCASE("without --out-dir it exits 2") {
        const CliResult r = run_cli("cutout --image " + (dir / "img.ppm").string() +
                                    " --annotations " + (dir / "ann.jsonl").string());
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("cli simulate") {
    SUBCASE("worked example timeline is exact") {
        const CliResult r = run_cli(
            "simulate --payload caption:100 --payload lossy_image:10000 "
            "--payload raw_image:1000000 --bandwidth-bps 10000 --latency-s 0 "
            "--policy as_given --format csv");
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.find(",0.01,") != std::string::npos);
        CHECK(r.out.find(",1.01,") != std::string::npos);
        CHECK(r.out.find(",101.01,") != std::string::npos);
        const DeliveryTimeline parsed = timeline_from_csv(r.out);
        REQUIRE(parsed.entries.size() == 3);
        CHECK(parsed.entries[2].arrival_s == 101.01);
    }
    SUBCASE("compare policy emits the three-row table") {
        const CliResult r = run_cli(
            "simulate --payload caption:100 --payload raw_image:1000000 "
            "--bandwidth-bps 10000 --latency-s 0.5 --policy compare --format csv");
        REQUIRE(r.exit_code == 0);
        const PolicyReport report = policy_report_from_csv(r.out);
        REQUIRE(report.rows.size() == 3);
        CHECK(report.rows[0].policy == "hierarchical");
        CHECK(report.rows[0].time_to_first_intelligence_s <=
              report.rows[1].time_to_first_intelligence_s);
    }
    SUBCASE("bad payload specs exit 2") {
        CHECK(run_cli("simulate --payload caption").exit_code == 2);
        CHECK(run_cli("simulate --payload caption:zero").exit_code == 2);
        CHECK(run_cli("simulate --payload postcard:10").exit_code == 2);
    }
    SUBCASE("zero bandwidth exits 2") {
        CHECK(run_cli("simulate --payload caption:10 --bandwidth-bps 0").exit_code == 2);
    }
}

TEST_CASE("cli ablate plan-only table") {
    const CliResult r =
        run_cli("ablate --plan-only --blocks 0,1,2,3,4,5 --input-side 256 --format csv");
    REQUIRE(r.exit_code == 0);
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < r.out.size()) {
        const std::size_t end = r.out.find('\n', pos);
        lines.push_back(r.out.substr(pos, end - pos));
        pos = end + 1;
    }
    REQUIRE(lines.size() == 7);
    CHECK(lines[0] == "Blocks,PSNR Train,SSIM Train,PSNR Test,SSIM Test,Output Size,Compression");
    const char* expected[6] = {"100.00", "25.00", "6.25", "1.56", "0.39", "0.10"};
    for (int b = 0; b < 6; ++b) {
        const std::string& row = lines[static_cast<std::size_t>(b) + 1];
        CHECK(row.substr(row.rfind(',') + 1) == expected[b]);
    }
    // byte-identical on a rerun
    const CliResult again =
        run_cli("ablate --plan-only --blocks 0,1,2,3,4,5 --input-side 256 --format csv");
    CHECK(again.out == r.out);
}

TEST_CASE("cli train then ablate on a tiny synthetic corpus") {
    const fs::path out = scratch_dir("train_out");
    const std::string train_args =
        "train --synthetic 24 --input-side 16 --blocks 1 --base-width 2 --epochs 2 "
        "--batch-size 6 --seed 11 --model-out " +
        (out / "m.ae").string();
    const CliResult r = run_cli(train_args);
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc["report"]["blocks"] == 1);
    CHECK(doc["report"]["embedding_side"] == 8);
    CHECK(doc["model_path"] == (out / "m.ae").string());

    const Model model = load_model(slurp_bytes(out / "m.ae"));
    CHECK(model.config.blocks == 1);
    CHECK(model.config.input_side == 16);
    CHECK(model.parameter_count() == doc["report"]["parameter_count"].get<std::size_t>());

    SUBCASE("ablate artifacts and rerun determinism") {
        const fs::path dir_a = scratch_dir("ablate_a");
        const fs::path dir_b = scratch_dir("ablate_b");
        const std::string base =
            "ablate --synthetic 24 --input-side 16 --blocks 0,1 --base-width 2 --epochs 2 "
            "--batch-size 6 --seed 11 --format csv --out-dir ";
        const CliResult run_a = run_cli(base + dir_a.string());
        const CliResult run_b = run_cli(base + dir_b.string());
        REQUIRE(run_a.exit_code == 0);
        REQUIRE(run_b.exit_code == 0);
        CHECK(run_a.out == run_b.out);
        CHECK(slurp(dir_a / "ablation.csv") == slurp(dir_b / "ablation.csv"));
        CHECK(slurp(dir_a / "curves_b0.csv") == slurp(dir_b / "curves_b0.csv"));
        CHECK(fs::exists(dir_a / "curves_b1.csv"));
        CHECK(run_a.out.rfind("Blocks,PSNR Train,", 0) == 0);
    }
    SUBCASE("pipeline consumes the checkpoint") {
        const fs::path pipe_dir = scratch_dir("pipeline_model");
        const CliResult p = run_cli("pipeline --synthetic --input-side 16 --objects 2 --seed 11 "
                                    "--model " +
                                    (out / "m.ae").string() + " --out-dir " + pipe_dir.string());
        REQUIRE(p.exit_code == 0);
        const json pd = json::parse(p.out);
        CHECK(pd["ae_included"] == true);
        bool saw_ae = false;
        for (const json& e : pd["manifest"]["payloads"])
            if (e["kind"] == "ae_embedding") saw_ae = true;
        CHECK(saw_ae);
    }
}

TEST_CASE("cli pipeline without a model") {
    const fs::path out = scratch_dir("pipeline_plain");
    const CliResult r = run_cli("pipeline --synthetic --input-side 64 --objects 3 --seed 9 "
                                "--bandwidth-bps 10000 --latency-s 0.01 --out-dir " +
                                out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.err.find("skipping the ae_embedding") != std::string::npos);
    const json doc = json::parse(r.out);
    CHECK(doc["ae_included"] == false);

    SUBCASE("caption arrives first in the hierarchical timeline") {
        const DeliveryTimeline timeline = timeline_from_csv(slurp(out / "timeline.csv"));
        REQUIRE(!timeline.entries.empty());
        CHECK(timeline.entries.front().kind == PayloadKind::caption);
    }
    SUBCASE("timeline matches a library re-simulation of the manifest") {
        const Manifest manifest = parse_manifest(slurp(out / "manifest.json"));
        std::vector<Payload> payloads;
        for (const ManifestEntry& e : manifest.entries) {
            Payload p;
            p.kind = e.kind;
            p.bytes.assign(e.byte_size, 0);
            payloads.push_back(std::move(p));
        }
        const DeliveryTimeline expected = simulate(plan_hierarchical(payloads), {10000.0, 0.01});
        const DeliveryTimeline got = timeline_from_csv(slurp(out / "timeline.csv"));
        REQUIRE(got.entries.size() == expected.entries.size());
        for (std::size_t i = 0; i < got.entries.size(); ++i) {
            CHECK(got.entries[i].kind == expected.entries[i].kind);
            CHECK(got.entries[i].arrival_s == expected.entries[i].arrival_s);
        }
    }
    SUBCASE("manifest reports the raw payload at 100 percent") {
        const Manifest manifest = parse_manifest(slurp(out / "manifest.json"));
        bool saw_raw = false;
        for (const ManifestEntry& e : manifest.entries)
            if (e.kind == PayloadKind::raw_image) {
                saw_raw = true;
                CHECK(e.ratio_pct == 100.0);
            }
        CHECK(saw_raw);
    }
    SUBCASE("zero-object scene still captions first") {
        const fs::path empty_out = scratch_dir("pipeline_empty");
        const CliResult e = run_cli("pipeline --synthetic --input-side 64 --objects 0 --seed 4 "
                                    "--out-dir " +
                                    empty_out.string());
        REQUIRE(e.exit_code == 0);
        const json doc_e = json::parse(e.out);
        CHECK(doc_e["manifest"]["payloads"][0]["kind"] == "caption");
        const DeliveryTimeline timeline = timeline_from_csv(slurp(empty_out / "timeline.csv"));
        CHECK(timeline.entries.front().kind == PayloadKind::caption);
        CHECK(timeline.entries.front().byte_size ==
              std::string("no objects detected.").size());
    }
}

TEST_CASE("cli report emits both psnr numbers") {
    const CliResult r = run_cli("report --synthetic --input-side 32 --blocks 2 --base-width 4 "
                                "--seed 3");
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc["ae"]["psnr_db"].is_number());
    CHECK(doc["dct"]["psnr_db"].is_number());
    CHECK(doc["dct"]["quality"].get<int>() >= 1);
    CHECK(doc["dct"]["quality"].get<int>() <= 100);
    CHECK(doc["ae"]["bytes"].get<std::uint64_t>() > 0);

    SUBCASE("csv rendering carries one row per method") {
        const CliResult c = run_cli("report --synthetic --input-side 32 --blocks 2 --base-width 4 "
                                    "--seed 3 --format csv");
        REQUIRE(c.exit_code == 0);
        CHECK(c.out.rfind("method,quality,bytes,compression_ratio_pct,psnr_db\n", 0) == 0);
        CHECK(std::count(c.out.begin(), c.out.end(), '\n') == 3);
        CHECK(c.out.find("ae_embedding,") != std::string::npos);
        CHECK(c.out.find("dct,") != std::string::npos);
    }
}
