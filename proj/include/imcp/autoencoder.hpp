#ifndef IMCP_AUTOENCODER_HPP
#define IMCP_AUTOENCODER_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imcp/codecs.hpp"
#include "imcp/image.hpp"
#include "imcp/metrics.hpp"
#include "imcp/tensor.hpp"

namespace imcp {

// `paper` wires additive skips from each encoder block output to the
// matching decoder block input, as drawn in the source architecture; that
// routes information around the bottleneck, so a model meant to be used as a
// transmission codec (encode/decode_embedding) must use `codec_honest`.
enum class SkipMode : std::uint8_t { paper = 0, codec_honest = 1 };

struct ModelConfig {
    std::uint32_t blocks = 5;        // B in [0,5]
    std::uint32_t input_side = 256;  // power of two, divisible by 2^B
    std::uint32_t image_channels = 3;
    std::uint32_t base_width = 16;
    std::uint64_t seed = 0;          // weight initialization stream
    SkipMode skip_mode = SkipMode::codec_honest;

    bool operator==(const ModelConfig&) const = default;
};

void validate_config(const ModelConfig& config); // throws ValidationError

std::uint32_t embedding_side(const ModelConfig& config); // input_side / 2^B

// Encoder channel width for block i: min(base_width * 2^i, 64).
std::uint32_t block_width(const ModelConfig& config, std::uint32_t i);

struct ConvLayer {
    Tensor weight; // (out_c, in_c, k, k)
    Tensor bias;   // (1, out_c, 1, 1)
    int stride = 1;
};

// Layer stack, in checkpoint order: encoder blocks (3x3 stride-2 conv +
// ReLU), linear 1x1 bottleneck down to image_channels, linear 1x1 expansion
// back to decoder width (absent at B=0), decoder blocks (nearest 2x upsample
// + 3x3 conv + ReLU), and a final 3x3 conv + sigmoid.
struct Model {
    ModelConfig config;
    std::vector<ConvLayer> encoder;
    ConvLayer bottleneck;
    ConvLayer expand;
    std::vector<ConvLayer> decoder;
    ConvLayer output;

    bool has_expand() const { return config.blocks >= 1; }
    std::size_t parameter_count() const;
};

// He fan-in normal initialization, zero biases, deterministic in config.seed.
Model build_model(const ModelConfig& config);

// Weight/bias tensors in checkpoint order.
std::vector<Tensor*> parameter_tensors(Model& model);
std::vector<const Tensor*> parameter_tensors(const Model& model);

struct ForwardResult {
    Tensor reconstruction; // same shape as the batch, values in (0,1)
    Tensor embedding;      // (n, image_channels, s, s)
};

// batch shape (n, image_channels, input_side, input_side), values in [0,1].
ForwardResult forward(const Model& model, const Tensor& batch);

// Mean squared difference over all elements.
double loss_mse(const Tensor& a, const Tensor& b);

// Analytic gradients of loss_mse(forward(batch).reconstruction, batch) with
// respect to every parameter, in parameter_tensors order. Returns the loss.
double compute_gradients(const Model& model, const Tensor& batch, std::vector<Tensor>& grads);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<double> m, v; // first/second moment, flat parameter order
};

void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state,
               double learning_rate);

// One optimization step on a batch; throws NumericError on non-finite loss.
double backward_and_step(Model& model, const Tensor& batch, AdamState& state,
                         double learning_rate);

struct TrainConfig {
    std::uint32_t epochs = 50;
    std::uint32_t batch_size = 25;
    double val_split = 0.20;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0; // split/shuffle stream

    bool operator==(const TrainConfig&) const = default;
};

struct TrainingReport {
    std::uint32_t blocks = 0;
    std::vector<double> train_mse; // one entry per epoch
    std::vector<double> val_mse;
    QualityReport train_quality; // on 8-bit re-quantized reconstructions
    QualityReport test_quality;  // held-out split
    std::size_t parameter_count = 0;
    std::uint32_t embedding_side = 0;
    double compression_ratio_pct = 0.0; // spatial ratio, 100/4^B
    bool converged = false;             // final val MSE <= half of epoch-1 val MSE
};

struct TrainOutcome {
    Model model;
    TrainingReport report;
};

// Deterministic: seeded shuffled split (val_split held out), mini-batch Adam,
// bit-identical curves for identical seeds. Dataset images must all be
// input_side square with image_channels channels, size >= 2 * batch_size.
TrainOutcome train(const ModelConfig& model_config, const TrainConfig& train_config,
                   std::span<const Image> dataset);

// One train() per block count, same seeds and dataset.
std::vector<TrainingReport> run_ablation(const ModelConfig& base, const TrainConfig& train_config,
                                         std::span<const std::uint32_t> blocks,
                                         std::span<const Image> dataset);

// CSV with the ablation table header:
// Blocks,PSNR Train,SSIM Train,PSNR Test,SSIM Test,Output Size,Compression
std::string ablation_to_csv(std::span<const TrainingReport> reports);

// CSV: epoch,train_mse,val_mse (epoch is 1-based).
std::string curves_to_csv(const TrainingReport& report);

// Embedding as a transmission codec (codec_honest models only): 8-bit linear
// quantization with float32 min/max up front, payload size
// image_channels * s^2 + 8. decode runs only the decoder half.
EncodedBlob encode_embedding(const Model& model, const Image& image);
Image decode_embedding(const Model& model, const EncodedBlob& blob);

// Checkpoint: "AEMD" magic, version byte, config fields, then parameter
// tensors in declaration order (u32 shape header + float64 little-endian).
std::vector<std::uint8_t> save_model(const Model& model);
Model load_model(std::span<const std::uint8_t> bytes);

Tensor image_to_tensor(const Image& image); // (1,c,h,w), samples / 255
Image tensor_to_image(const Tensor& tensor, std::size_t index = 0);
Tensor make_batch(std::span<const Image> images, std::span<const std::size_t> indices);

} // namespace imcp

#endif
