#include "imcp/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace imcp {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    a.validate();
    b.validate();
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw ValidationError("image dimension mismatch: " + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + "x" + std::to_string(a.channels) +
                              " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                              "x" + std::to_string(b.channels));
}

} // namespace

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.samples.size());
}

double psnr_from_mse(double mse_value, double max_value) {
    if (mse_value < 0.0) throw ValidationError("mse must be non-negative");
    if (max_value <= 0.0) throw ValidationError("psnr max_value must be positive");
    if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_value * max_value / mse_value);
}

double psnr(const Image& a, const Image& b, double max_value) {
    return psnr_from_mse(mse(a, b), max_value);
}

namespace {

constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

// Per-channel SSIM via summed-area tables. All accumulated quantities are
// integer-valued, so the table sums are exact in double precision.
double ssim_channel(const Image& a, const Image& b, std::uint32_t channel) {
    const std::size_t W = a.width, H = a.height;
    const std::size_t tw = W + 1;
    std::vector<double> sa(tw * (H + 1), 0.0), sb(sa), saa(sa), sbb(sa), sab(sa);

    for (std::size_t y = 0; y < H; ++y) {
        double row_a = 0.0, row_b = 0.0, row_aa = 0.0, row_bb = 0.0, row_ab = 0.0;
        for (std::size_t x = 0; x < W; ++x) {
            const double va = a.samples[(y * W + x) * a.channels + channel];
            const double vb = b.samples[(y * W + x) * b.channels + channel];
            row_a += va;
            row_b += vb;
            row_aa += va * va;
            row_bb += vb * vb;
            row_ab += va * vb;
            const std::size_t i = (y + 1) * tw + (x + 1);
            const std::size_t up = y * tw + (x + 1);
            sa[i] = sa[up] + row_a;
            sb[i] = sb[up] + row_b;
            saa[i] = saa[up] + row_aa;
            sbb[i] = sbb[up] + row_bb;
            sab[i] = sab[up] + row_ab;
        }
    }

    auto window_sum = [tw](const std::vector<double>& t, std::size_t x, std::size_t y) {
        const std::size_t k = kSsimWindow;
        return t[(y + k) * tw + (x + k)] - t[y * tw + (x + k)] - t[(y + k) * tw + x] +
               t[y * tw + x];
    };

    constexpr double n = static_cast<double>(kSsimWindow * kSsimWindow);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y + kSsimWindow <= H; ++y) {
        for (std::size_t x = 0; x + kSsimWindow <= W; ++x) {
            const double mu_a = window_sum(sa, x, y) / n;
            const double mu_b = window_sum(sb, x, y) / n;
            const double var_a = window_sum(saa, x, y) / n - mu_a * mu_a;
            const double var_b = window_sum(sbb, x, y) / n - mu_b * mu_b;
            const double cov = window_sum(sab, x, y) / n - mu_a * mu_b;
            const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
            const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
            acc += num / den;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

} // namespace

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b);
    if (a.width < kSsimWindow || a.height < kSsimWindow)
        throw ValidationError("image smaller than the SSIM window (" +
                              std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) +
                              ")");
    double acc = 0.0;
    for (std::uint32_t c = 0; c < a.channels; ++c) acc += ssim_channel(a, b, c);
    return acc / a.channels;
}

double compression_ratio_spatial(std::uint32_t input_side, std::uint32_t output_side) {
    if (input_side == 0 || output_side == 0)
        throw ValidationError("compression_ratio_spatial requires non-zero sides");
    if (output_side > input_side)
        throw ValidationError("output side must not exceed input side");
    const double r = static_cast<double>(output_side) / static_cast<double>(input_side);
    return 100.0 * r * r;
}

double compression_ratio_bytes(std::uint64_t original_bytes, std::uint64_t encoded_bytes) {
    if (original_bytes == 0)
        throw ValidationError("compression_ratio_bytes requires original_bytes > 0");
    return 100.0 * static_cast<double>(encoded_bytes) / static_cast<double>(original_bytes);
}

double bitrate_bpp(std::uint64_t encoded_bytes, std::uint64_t pixel_count) {
    if (pixel_count == 0) throw ValidationError("bitrate_bpp requires pixel_count > 0");
    return 8.0 * static_cast<double>(encoded_bytes) / static_cast<double>(pixel_count);
}

std::string quality_report_to_json(const QualityReport& report) {
    nlohmann::json j;
    j["mse"] = report.mse;
    if (std::isinf(report.psnr_db))
        j["psnr_db"] = "inf";
    else
        j["psnr_db"] = report.psnr_db;
    j["ssim"] = report.ssim;
    j["bytes_original"] = report.bytes_original;
    j["bytes_encoded"] = report.bytes_encoded;
    j["compression_ratio_pct"] = report.compression_ratio_pct;
    j["bitrate_bpp"] = report.bitrate_bpp;
    return j.dump();
}

QualityReport quality_report_from_json(std::string_view json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw DecodeError("malformed quality report JSON");
    QualityReport r;
    r.mse = j.at("mse").get<double>();
    if (j.at("psnr_db").is_string()) {
        if (j.at("psnr_db").get<std::string>() != "inf")
            throw DecodeError("unrecognized psnr_db string value");
        r.psnr_db = std::numeric_limits<double>::infinity();
    } else {
        r.psnr_db = j.at("psnr_db").get<double>();
    }
    r.ssim = j.at("ssim").get<double>();
    r.bytes_original = j.at("bytes_original").get<std::uint64_t>();
    r.bytes_encoded = j.at("bytes_encoded").get<std::uint64_t>();
    r.compression_ratio_pct = j.at("compression_ratio_pct").get<double>();
    r.bitrate_bpp = j.at("bitrate_bpp").get<double>();
    return r;
}

std::string format_fixed(double value, int decimals) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string format_shortest(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string quality_summary_to_csv(std::span<const QualitySummaryRow> rows) {
    std::string out{kQualitySummaryCsvHeader};
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.blocks) + ",";
        out += format_fixed(r.psnr_train, 4) + ",";
        out += format_fixed(r.ssim_train, 4) + ",";
        out += format_fixed(r.psnr_test, 4) + ",";
        out += format_fixed(r.ssim_test, 4) + ",";
        out += std::to_string(r.output_size) + ",";
        out += format_fixed(r.compression_pct, 2) + "\n";
    }
    return out;
}

namespace {

double parse_csv_double(const std::string& token, std::size_t line_no) {
    if (token == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw DecodeError("CSV line " + std::to_string(line_no) + ": bad number '" + token + "'");
    }
}

} // namespace

std::vector<QualitySummaryRow> quality_summary_from_csv(std::string_view csv_text) {
    std::istringstream in{std::string(csv_text)};
    std::string line;
    std::vector<QualitySummaryRow> rows;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            saw_header = true; // header is positional; both spellings accepted
            continue;
        }
        std::vector<std::string> tokens;
        std::string token;
        std::istringstream ls(line);
        while (std::getline(ls, token, ',')) tokens.push_back(token);
        if (tokens.size() != 7)
            throw DecodeError("CSV line " + std::to_string(line_no) + ": expected 7 columns, got " +
                              std::to_string(tokens.size()));
        QualitySummaryRow r;
        r.blocks = static_cast<int>(parse_csv_double(tokens[0], line_no));
        r.psnr_train = parse_csv_double(tokens[1], line_no);
        r.ssim_train = parse_csv_double(tokens[2], line_no);
        r.psnr_test = parse_csv_double(tokens[3], line_no);
        r.ssim_test = parse_csv_double(tokens[4], line_no);
        r.output_size = static_cast<int>(parse_csv_double(tokens[5], line_no));
        r.compression_pct = parse_csv_double(tokens[6], line_no);
        rows.push_back(r);
    }
    return rows;
}

} // namespace imcp
