// Acceptance gate: one pass/fail line per criterion, nonzero exit when any
// criterion fails. The slow criterion (desk-scale training) prints progress
// through its detail string; everything else is seconds.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "imcp/autoencoder.hpp"
#include "imcp/codecs.hpp"
#include "imcp/delivery.hpp"
#include "imcp/huffman.hpp"
#include "imcp/metrics.hpp"
#include "imcp/payloads.hpp"
#include "imcp/raster.hpp"

using namespace imcp;
using json = nlohmann::ordered_json;

namespace {

struct CriterionFail {
    std::string reason;
};

void require(bool ok, const std::string& reason) {
    if (!ok) throw CriterionFail{reason};
}

std::string fmt(double v, int decimals = 2) { return format_fixed(v, decimals); }

// ------------------------------------------------------------- CLI runner

#ifdef IMCP_CLI_PATH
struct CliRun {
    int code = -1;
    std::string out;
};

CliRun run_cli(const std::string& args) {
    const std::string cmd = std::string(IMCP_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    require(pipe != nullptr, "cannot spawn the cli");
    CliRun run;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) run.out.append(buf, n);
    const int status = pclose(pipe);
    run.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return run;
}
#endif

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// --------------------------------------------------------------- criteria

// 1. `ablate --plan-only` reproduces Table 1's Compression column exactly.
std::string check_compression_table() {
#ifndef IMCP_CLI_PATH
    throw CriterionFail{"cli binary not built"};
#else
    const CliRun run =
        run_cli("ablate --plan-only --blocks 0,1,2,3,4,5 --input-side 256 --format csv");
    require(run.code == 0, "ablate exited with " + std::to_string(run.code));
    const std::vector<std::string> lines = split_lines(run.out);
    require(lines.size() == 7, "expected 7 csv lines, got " + std::to_string(lines.size()));
    require(lines[0] == "Blocks,PSNR Train,SSIM Train,PSNR Test,SSIM Test,Output Size,Compression",
            "header mismatch: " + lines[0]);
    const char* expected[6] = {"100.00", "25.00", "6.25", "1.56", "0.39", "0.10"};
    for (int b = 0; b < 6; ++b) {
        const std::string& row = lines[static_cast<std::size_t>(b) + 1];
        const std::string cell = row.substr(row.rfind(',') + 1);
        require(cell == expected[b],
                "row " + std::to_string(b) + " compression " + cell + " != " + expected[b]);
    }
    return "100.00/25.00/6.25/1.56/0.39/0.10 %";
#endif
}

// 2. Desk-scale training reproduces the Table 1 quality-vs-compression trend.
std::string check_table1_trend() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Image> dataset;
    for (Scene& scene : generate_corpus(2026, 200, 64)) dataset.push_back(std::move(scene.image));

    ModelConfig mc;
    mc.input_side = 64;
    mc.image_channels = 3;
    mc.seed = 7;
    TrainConfig tc; // defaults: 50 epochs, batch 25, val 0.2, lr 1e-3
    tc.seed = 7;

    const std::uint32_t blocks[] = {1, 2, 3};
    const std::vector<TrainingReport> reports = run_ablation(mc, tc, blocks, dataset);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double p1 = reports[0].test_quality.psnr_db;
    const double p2 = reports[1].test_quality.psnr_db;
    const double p3 = reports[2].test_quality.psnr_db;
    const std::string detail =
        "psnr test " + fmt(p1) + " > " + fmt(p2) + " > " + fmt(p3) + " dB in " + fmt(elapsed, 0) + "s";
    require(p1 > p2 && p2 > p3, "not strictly decreasing: " + detail);
    require(elapsed <= 600.0, "over the 10-minute budget: " + detail);
    return detail;
}

// 3. Paper-scale model stays under one million parameters.
std::string check_parameter_budget() {
    const Model model = build_model(ModelConfig{});
    require(model.parameter_count() < 1000000,
            std::to_string(model.parameter_count()) + " parameters");
    return std::to_string(model.parameter_count()) + " parameters";
}

// 4. Analytic gradients agree with central finite differences.
std::string check_gradients() {
    double worst = 0.0;
    const double eps = 1e-5;
    for (SkipMode mode : {SkipMode::codec_honest, SkipMode::paper}) {
        ModelConfig mc;
        mc.blocks = 1;
        mc.input_side = 8;
        mc.image_channels = 1;
        mc.base_width = 2;
        mc.seed = 99;
        mc.skip_mode = mode;
        Model model = build_model(mc);
        // Zero-init biases leave ReLU-dead regions exactly on the kink, where
        // central differences are invalid; jitter to a differentiable point.
        std::mt19937_64 jitter(5);
        for (Tensor* t : parameter_tensors(model))
            for (double& v : t->data)
                v += (jitter() & 1 ? 1.0 : -1.0) *
                     (0.01 + 0.04 * (static_cast<double>(jitter() >> 11) * 0x1.0p-53));

        Tensor batch(2, 1, 8, 8);
        std::mt19937_64 rng(4242);
        for (double& v : batch.data)
            v = 0.05 + 0.90 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);

        std::vector<Tensor> grads;
        compute_gradients(model, batch, grads);
        const auto params = parameter_tensors(model);
        for (std::size_t ti = 0; ti < params.size(); ++ti) {
            Tensor& p = *params[ti];
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double saved = p.data[k];
                p.data[k] = saved + eps;
                const double up = loss_mse(forward(model, batch).reconstruction, batch);
                p.data[k] = saved - eps;
                const double down = loss_mse(forward(model, batch).reconstruction, batch);
                p.data[k] = saved;
                const double fd = (up - down) / (2.0 * eps);
                const double got = grads[ti].data[k];
                // guarded relative error; the floor keeps dead units from 0/0
                const double rel =
                    std::abs(got - fd) / std::max({std::abs(got), std::abs(fd), 1e-4});
                worst = std::max(worst, rel);
            }
        }
    }
    require(worst < 1e-4, "max relative error " + std::to_string(worst));
    std::ostringstream detail;
    detail << "max relative error " << worst;
    return detail.str();
}

// 5. Huffman and predictive codecs are exact; Huffman sits in [H, H+1).
std::string check_lossless_roundtrips() {
    std::mt19937_64 rng(1001);
    double worst_gap = 0.0;

    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t len = 2 + rng() % 4095;
        const int alphabet = 2 + static_cast<int>(rng() % 255);
        std::vector<std::uint8_t> data(len);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng() % alphabet);
        if (std::all_of(data.begin(), data.end(), [&](std::uint8_t b) { return b == data[0]; }))
            data.back() = static_cast<std::uint8_t>(data[0] ^ 1);

        require(huffman_decode(huffman_encode(data)) == data,
                "huffman mismatch on trial " + std::to_string(trial));

        std::array<std::size_t, 256> freq{};
        for (std::uint8_t b : data) ++freq[b];
        const auto lengths = huffman_code_lengths(data);
        double avg_bits = 0.0, entropy = 0.0;
        for (int s = 0; s < 256; ++s) {
            if (freq[s] == 0) continue;
            const double p = static_cast<double>(freq[s]) / static_cast<double>(len);
            avg_bits += p * lengths[static_cast<std::size_t>(s)];
            entropy -= p * std::log2(p);
        }
        require(avg_bits >= entropy - 1e-9 && avg_bits < entropy + 1.0,
                "avg " + std::to_string(avg_bits) + " bits outside [H, H+1) for H = " +
                    std::to_string(entropy));
        worst_gap = std::max(worst_gap, avg_bits - entropy);
    }

    for (int trial = 0; trial < 500; ++trial) {
        const auto w = static_cast<std::uint32_t>(1 + rng() % 40);
        const auto h = static_cast<std::uint32_t>(1 + rng() % 40);
        const std::uint8_t c = (rng() % 2) ? 3 : 1;
        Image image(w, h, c);
        for (auto& s : image.samples) s = static_cast<std::uint8_t>(rng() % 256);
        require(predictive_decode(predictive_encode(image)) == image,
                "predictive mismatch on trial " + std::to_string(trial));
    }
    return "1000 round-trips exact, worst avg-vs-entropy gap " + fmt(worst_gap, 3) + " bits";
}

// 6. DCT codec quality anchors and size monotonicity.
std::string check_dct_sanity() {
    std::vector<Image> corpus;
    for (Scene& scene : generate_corpus(555, 12, 64)) corpus.push_back(std::move(scene.image));
    for (int i = 0; i < 4; ++i) {
        SceneSpec spec;
        spec.seed = 900 + static_cast<std::uint64_t>(i);
        spec.width = 64;
        spec.height = 64;
        spec.object_count = 3;
        spec.background = BackgroundTexture::noise;
        corpus.push_back(generate_scene(spec).image);
    }

    const std::uint8_t qualities[] = {5, 25, 50, 75, 95};
    std::array<double, 5> mean_size{};
    double mean_psnr75 = 0.0;
    for (const Image& image : corpus) {
        for (std::size_t qi = 0; qi < 5; ++qi)
            mean_size[qi] += static_cast<double>(dct_encode(image, qualities[qi]).serialized_size());
        require(dct_encode(image, 5).serialized_size() <= dct_encode(image, 95).serialized_size(),
                "q5 blob larger than q95");
        const double q100 = psnr(image, dct_decode(dct_encode(image, 100)));
        require(q100 >= 40.0, "quality-100 psnr " + fmt(q100) + " dB < 40");
        mean_psnr75 += psnr(image, dct_decode(dct_encode(image, 75)));
    }
    mean_psnr75 /= static_cast<double>(corpus.size());
    require(mean_psnr75 >= 30.0 && mean_psnr75 <= 50.0,
            "quality-75 mean psnr " + fmt(mean_psnr75) + " dB outside [30, 50]");
    for (std::size_t qi = 1; qi < 5; ++qi)
        require(mean_size[qi - 1] <= mean_size[qi], "mean blob size not monotone in quality");
    return "q75 mean " + fmt(mean_psnr75) + " dB, sizes monotone over q {5,25,50,75,95}";
}

// 7. Metrics agree with naive reference implementations.
std::string check_metric_oracles() {
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint8_t c = (trial % 2) ? 3 : 1;
        Image a(16, 16, c), b(16, 16, c);
        for (auto& s : a.samples) s = static_cast<std::uint8_t>(rng() % 256);
        for (auto& s : b.samples) s = static_cast<std::uint8_t>(rng() % 256);

        double naive_mse = 0.0;
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
            naive_mse += d * d;
        }
        naive_mse /= static_cast<double>(a.samples.size());
        const double naive_psnr = 10.0 * std::log10(255.0 * 255.0 / naive_mse);

        // direct sliding-window SSIM, population statistics
        double ssim_sum = 0.0;
        std::size_t windows = 0;
        constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
        constexpr double kC2 = (0.03 * 255) * (0.03 * 255);
        for (std::uint8_t ch = 0; ch < c; ++ch)
            for (std::uint32_t y = 0; y + 8 <= 16; ++y)
                for (std::uint32_t x = 0; x + 8 <= 16; ++x) {
                    double ma = 0, mb = 0;
                    for (std::uint32_t dy = 0; dy < 8; ++dy)
                        for (std::uint32_t dx = 0; dx < 8; ++dx) {
                            ma += a.at(x + dx, y + dy, ch);
                            mb += b.at(x + dx, y + dy, ch);
                        }
                    ma /= 64.0;
                    mb /= 64.0;
                    double va = 0, vb = 0, cov = 0;
                    for (std::uint32_t dy = 0; dy < 8; ++dy)
                        for (std::uint32_t dx = 0; dx < 8; ++dx) {
                            const double da = a.at(x + dx, y + dy, ch) - ma;
                            const double db = b.at(x + dx, y + dy, ch) - mb;
                            va += da * da;
                            vb += db * db;
                            cov += da * db;
                        }
                    va /= 64.0;
                    vb /= 64.0;
                    cov /= 64.0;
                    ssim_sum += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                                ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
                    ++windows;
                }
        const double naive_ssim = ssim_sum / static_cast<double>(windows);

        worst = std::max(worst, std::abs(mse(a, b) - naive_mse));
        worst = std::max(worst, std::abs(psnr(a, b) - naive_psnr));
        worst = std::max(worst, std::abs(ssim(a, b) - naive_ssim));
    }
    require(worst < 1e-9, "worst deviation " + std::to_string(worst));
    std::ostringstream detail;
    detail << "worst deviation " << worst;
    return detail.str();
}

// 8. Template captions stay under 98 bytes (< 0.05% of a raw 256x256x3).
std::string check_caption_size() {
    auto make = [](const char* cls, int n, std::vector<Annotation>& out) {
        for (int i = 0; i < n; ++i) {
            Annotation ann;
            ann.image_id = "img";
            ann.class_name = cls;
            ann.confidence = 0.9;
            ann.box = {0, 0, 4, 4};
            out.push_back(ann);
        }
    };
    std::size_t worst = 0;
    std::vector<Annotation> dense;
    make("building", 999, dense);
    make("aircraft", 999, dense);
    make("vessel", 999, dense);
    worst = std::max(worst, generate_caption(dense, "img").byte_size());

    std::vector<Annotation> mixed;
    make("car", 12, mixed);
    make("building", 7, mixed);
    make("aircraft", 3, mixed);
    worst = std::max(worst, generate_caption(mixed, "img").byte_size());
    worst = std::max(worst, generate_caption({}, "img").byte_size());

    require(worst < 98, "caption reached " + std::to_string(worst) + " bytes");
    const double pct = compression_ratio_bytes(196608, worst);
    require(pct < 0.05, "caption ratio " + fmt(pct, 4) + "% >= 0.05%");
    return "worst 3-class caption " + std::to_string(worst) + " bytes = " + fmt(pct, 4) +
           "% of raw";
}

// 9. Hierarchical ordering is ttfi-optimal over all permutations.
std::string check_delivery_optimality() {
    // worked example, exact arithmetic
    {
        std::vector<Payload> payloads;
        const std::pair<PayloadKind, std::size_t> spec[] = {
            {PayloadKind::caption, 100},
            {PayloadKind::lossy_image, 10000},
            {PayloadKind::raw_image, 1000000},
        };
        for (const auto& [kind, size] : spec) {
            Payload p;
            p.kind = kind;
            p.bytes.assign(size, 0);
            payloads.push_back(std::move(p));
        }
        const DeliveryTimeline t = simulate(plan_as_given(payloads), {10000.0, 0.0});
        require(t.entries[0].arrival_s == 0.01 && t.entries[1].arrival_s == 1.01 &&
                    t.entries[2].arrival_s == 101.01,
                "worked example arrivals are not exact");
    }

    std::mt19937_64 rng(31337);
    auto in = [&rng](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<Payload> payloads;
        auto add = [&payloads](PayloadKind kind, std::size_t size) {
            Payload p;
            p.kind = kind;
            p.bytes.assign(size, 0);
            payloads.push_back(std::move(p));
        };
        add(PayloadKind::raw_image, in(100000, 200000));
        add(PayloadKind::caption, in(20, 80));
        add(PayloadKind::lossless_image, in(30000, 80000));
        add(PayloadKind::cutout, in(200, 800));
        add(PayloadKind::lossy_image, in(5000, 20000));
        add(PayloadKind::ae_embedding, in(1000, 4000));
        std::shuffle(payloads.begin(), payloads.end(), rng);

        const LinkModel link{10000.0, 0.5};
        std::vector<std::size_t> order(payloads.size());
        std::iota(order.begin(), order.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        double total_lo = std::numeric_limits<double>::infinity();
        double total_hi = -std::numeric_limits<double>::infinity();
        do {
            std::vector<Payload> perm;
            for (std::size_t i : order) perm.push_back(payloads[i]);
            const DeliveryTimeline t = simulate(plan_as_given(perm), link);
            best = std::min(best, time_to_first_intelligence(t));
            total_lo = std::min(total_lo, t.total_duration_s);
            total_hi = std::max(total_hi, t.total_duration_s);
        } while (std::next_permutation(order.begin(), order.end()));

        const double hier =
            time_to_first_intelligence(simulate(plan_hierarchical(payloads), link));
        require(hier == best, "hierarchical ttfi " + std::to_string(hier) +
                                  " != brute-force best " + std::to_string(best));
        require(total_hi - total_lo <= 1e-9 * total_hi, "total duration varies across orders");
    }
    return "720 permutations x 3 payload sets, worked example exact";
}

// 10. The AE-vs-DCT comparison report exists with both PSNR numbers.
std::string check_comparison_report() {
#ifndef IMCP_CLI_PATH
    throw CriterionFail{"cli binary not built"};
#else
    const CliRun run = run_cli("report --synthetic --input-side 64 --blocks 3 --seed 7");
    require(run.code == 0, "report exited with " + std::to_string(run.code));
    json doc;
    try {
        doc = json::parse(run.out);
    } catch (const std::exception& e) {
        throw CriterionFail{std::string("stdout is not JSON: ") + e.what()};
    }
    require(doc.contains("ae") && doc["ae"].contains("psnr_db") && doc["ae"]["psnr_db"].is_number(),
            "ae psnr missing");
    require(doc.contains("dct") && doc["dct"].contains("psnr_db") &&
                doc["dct"]["psnr_db"].is_number(),
            "dct psnr missing");
    return "ae " + fmt(doc["ae"]["psnr_db"].get<double>()) + " dB vs dct(q" +
           std::to_string(doc["dct"]["quality"].get<int>()) + ") " +
           fmt(doc["dct"]["psnr_db"].get<double>()) + " dB at matched bytes";
#endif
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<std::string()> run;
    };
    const Criterion criteria[] = {
        {"compression-ratio-table", check_compression_table},
        {"table1-quality-trend", check_table1_trend},
        {"parameter-budget", check_parameter_budget},
        {"gradient-check", check_gradients},
        {"lossless-round-trips", check_lossless_roundtrips},
        {"dct-codec-sanity", check_dct_sanity},
        {"metric-oracles", check_metric_oracles},
        {"caption-size", check_caption_size},
        {"delivery-optimality", check_delivery_optimality},
        {"ae-vs-dct-report", check_comparison_report},
    };

    int failures = 0;
    int index = 0;
    for (const Criterion& criterion : criteria) {
        ++index;
        std::string verdict, detail;
        try {
            detail = criterion.run();
            verdict = "PASS";
        } catch (const CriterionFail& f) {
            verdict = "FAIL";
            detail = f.reason;
            ++failures;
        } catch (const std::exception& e) {
            verdict = "FAIL";
            detail = std::string("unexpected error: ") + e.what();
            ++failures;
        }
        std::printf("%s %2d %-24s %s\n", verdict.c_str(), index, criterion.name, detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
