#ifndef IMCP_METRICS_HPP
#define IMCP_METRICS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "imcp/image.hpp"

namespace imcp {

// Quality/size summary for one encoded representation of an image.
// psnr_db is +infinity when mse == 0; JSON and CSV render that as "inf".
struct QualityReport {
    double mse = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::uint64_t bytes_original = 0;
    std::uint64_t bytes_encoded = 0;
    double compression_ratio_pct = 0.0;
    double bitrate_bpp = 0.0;
};

// Mean squared difference over raw 0-255 samples, double precision.
double mse(const Image& a, const Image& b);

// 10*log10(max_value^2 / mse); +infinity for identical images.
double psnr(const Image& a, const Image& b, double max_value = 255.0);
double psnr_from_mse(double mse_value, double max_value = 255.0);

// Mean of local SSIM over sliding 8x8 uniform windows (stride 1), computed
// per channel and averaged. C1 = (0.01*255)^2, C2 = (0.03*255)^2.
double ssim(const Image& a, const Image& b);

inline constexpr int kSsimWindow = 8;

// 100 * (output_side / input_side)^2 -- the spatial form used for embeddings.
double compression_ratio_spatial(std::uint32_t input_side, std::uint32_t output_side);

// 100 * encoded / original -- the byte form used for file comparisons.
double compression_ratio_bytes(std::uint64_t original_bytes, std::uint64_t encoded_bytes);

// Average bits spent per image pixel.
double bitrate_bpp(std::uint64_t encoded_bytes, std::uint64_t pixel_count);

// Flat JSON object; infinite PSNR serializes as the string "inf".
std::string quality_report_to_json(const QualityReport& report);
QualityReport quality_report_from_json(std::string_view json_text);

// Machine-readable row summarizing one train/test evaluation pair, ordered
// like the ablation table columns.
struct QualitySummaryRow {
    int blocks = 0;
    double psnr_train = 0.0;
    double ssim_train = 0.0;
    double psnr_test = 0.0;
    double ssim_test = 0.0;
    int output_size = 0;
    double compression_pct = 0.0;
};

inline constexpr std::string_view kQualitySummaryCsvHeader =
    "blocks,psnr_train,ssim_train,psnr_test,ssim_test,output_size,compression_pct";

std::string quality_summary_to_csv(std::span<const QualitySummaryRow> rows);
// Accepts either the machine-readable header above or the display header
// used by the ablation table; columns are positional.
std::vector<QualitySummaryRow> quality_summary_from_csv(std::string_view csv_text);

// Fixed-decimal rendering shared by the CSV writers ("inf" for +infinity).
std::string format_fixed(double value, int decimals);

// Shortest decimal that parses back to the identical double ("inf"/"-inf"
// for infinities); used where round-trip exactness matters.
std::string format_shortest(double value);

} // namespace imcp

#endif
