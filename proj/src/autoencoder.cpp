#include "imcp/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "imcp/nn_ops.hpp"
#include "imcp/wire.hpp"

namespace imcp {

namespace {

constexpr std::uint32_t kWidthCap = 64;
constexpr std::uint32_t kMaxBlocks = 5;
constexpr std::uint8_t kCheckpointVersion = 1;

// Deterministic Box-Muller over a fixed 53-bit uniform; std::normal_distribution
// is implementation-defined, which would break cross-run checkpoint tests.
class GaussRng {
public:
    explicit GaussRng(std::uint64_t seed) : eng_(seed) {}

    double normal() {
        const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; // (0,1]
        const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;         // [0,1)
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 eng_;
};

std::uint64_t rng_below(std::mt19937_64& eng, std::uint64_t bound) {
    // rejection sampling; unbiased and portable
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = eng();
    } while (x >= limit);
    return x % bound;
}

ConvLayer make_layer(std::uint32_t out_c, std::uint32_t in_c, std::uint32_t k, int stride,
                     GaussRng& rng) {
    ConvLayer layer;
    layer.weight = Tensor(out_c, in_c, k, k);
    layer.bias = Tensor(1, out_c, 1, 1);
    layer.stride = stride;
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
    for (double& v : layer.weight.data) v = stddev * rng.normal();
    return layer;
}

void relu_in_place(Tensor& t) {
    for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

void sigmoid_in_place(Tensor& t) {
    for (double& v : t.data) v = 1.0 / (1.0 + std::exp(-v));
}

struct Activations {
    std::vector<Tensor> enc_act; // post-ReLU encoder block outputs
    Tensor embedding;            // linear bottleneck output
    std::vector<Tensor> dec_up;  // decoder conv inputs (post-upsample)
    std::vector<Tensor> dec_act; // post-ReLU decoder block outputs
    Tensor reconstruction;
};

void validate_batch(const Model& model, const Tensor& batch) {
    const auto& cfg = model.config;
    if (batch.n < 1 || batch.c != cfg.image_channels || batch.h != cfg.input_side ||
        batch.w != cfg.input_side)
        throw ValidationError("batch shape (" + std::to_string(batch.n) + "," +
                              std::to_string(batch.c) + "," + std::to_string(batch.h) + "," +
                              std::to_string(batch.w) + ") does not match model input (" +
                              std::to_string(cfg.image_channels) + "," +
                              std::to_string(cfg.input_side) + "," +
                              std::to_string(cfg.input_side) + ")");
    for (double v : batch.data)
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError("batch values must lie in [0,1]");
}

Tensor run_encoder(const Model& model, const Tensor& batch, Activations* acts) {
    const Tensor* x = &batch;
    Tensor current;
    for (std::size_t i = 0; i < model.encoder.size(); ++i) {
        current = conv2d_forward(*x, model.encoder[i].weight, model.encoder[i].bias, 2);
        relu_in_place(current);
        if (acts) {
            acts->enc_act.push_back(std::move(current));
            x = &acts->enc_act.back();
        } else {
            x = &current;
        }
    }
    return conv2d_forward(*x, model.bottleneck.weight, model.bottleneck.bias, 1);
}

Tensor run_decoder(const Model& model, const Tensor& embedding,
                   const std::vector<Tensor>* skips, Activations* acts) {
    const std::uint32_t blocks = model.config.blocks;
    Tensor x;
    if (blocks == 0) {
        x = embedding;
    } else {
        x = conv2d_forward(embedding, model.expand.weight, model.expand.bias, 1);
        for (std::uint32_t j = 0; j < blocks; ++j) {
            if (skips) add_inplace(x, (*skips)[blocks - 1 - j]);
            Tensor up = upsample2x_forward(x);
            const Tensor* conv_in = &up;
            if (acts) {
                acts->dec_up.push_back(std::move(up));
                conv_in = &acts->dec_up.back();
            }
            x = conv2d_forward(*conv_in, model.decoder[j].weight, model.decoder[j].bias, 1);
            relu_in_place(x);
            if (acts) acts->dec_act.push_back(x);
        }
    }
    Tensor out = conv2d_forward(x, model.output.weight, model.output.bias, 1);
    sigmoid_in_place(out);
    return out;
}

Activations run_forward(const Model& model, const Tensor& batch) {
    Activations acts;
    acts.embedding = run_encoder(model, batch, &acts);
    const std::vector<Tensor>* skips =
        model.config.skip_mode == SkipMode::paper ? &acts.enc_act : nullptr;
    acts.reconstruction = run_decoder(model, acts.embedding, skips, &acts);
    return acts;
}

void accumulate(Tensor& target, Tensor&& contribution) {
    if (target.size() == 0)
        target = std::move(contribution);
    else
        add_inplace(target, contribution);
}

} // namespace

void validate_config(const ModelConfig& config) {
    if (config.blocks > kMaxBlocks)
        throw ValidationError("blocks must be in [0," + std::to_string(kMaxBlocks) + "]");
    if (config.image_channels != 1 && config.image_channels != 3)
        throw ValidationError("image_channels must be 1 or 3");
    if (config.base_width < 1) throw ValidationError("base_width must be >= 1");
    if (config.input_side < 1 || (config.input_side & (config.input_side - 1)) != 0)
        throw ValidationError("input_side must be a power of two");
    if (config.input_side >> config.blocks == 0)
        throw ValidationError("input_side not divisible by 2^blocks");
}

std::uint32_t embedding_side(const ModelConfig& config) {
    validate_config(config);
    return config.input_side >> config.blocks;
}

std::uint32_t block_width(const ModelConfig& config, std::uint32_t i) {
    const std::uint64_t raw = static_cast<std::uint64_t>(config.base_width) << i;
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(raw, kWidthCap));
}

Model build_model(const ModelConfig& config) {
    validate_config(config);
    Model model;
    model.config = config;
    GaussRng rng(config.seed);

    const std::uint32_t channels = config.image_channels;
    std::uint32_t in_c = channels;
    for (std::uint32_t i = 0; i < config.blocks; ++i) {
        const std::uint32_t out_c = block_width(config, i);
        model.encoder.push_back(make_layer(out_c, in_c, 3, 2, rng));
        in_c = out_c;
    }
    model.bottleneck = make_layer(channels, in_c, 1, 1, rng);
    if (config.blocks >= 1) model.expand = make_layer(in_c, channels, 1, 1, rng);

    std::uint32_t cur = config.blocks >= 1 ? in_c : channels;
    for (std::uint32_t j = 0; j < config.blocks; ++j) {
        const int src = std::max<int>(static_cast<int>(config.blocks) - 2 - static_cast<int>(j), 0);
        const std::uint32_t out_c = block_width(config, static_cast<std::uint32_t>(src));
        model.decoder.push_back(make_layer(out_c, cur, 3, 1, rng));
        cur = out_c;
    }
    model.output = make_layer(channels, cur, 3, 1, rng);
    return model;
}

std::vector<Tensor*> parameter_tensors(Model& model) {
    std::vector<Tensor*> out;
    const auto push = [&](ConvLayer& l) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    };
    for (ConvLayer& l : model.encoder) push(l);
    push(model.bottleneck);
    if (model.has_expand()) push(model.expand);
    for (ConvLayer& l : model.decoder) push(l);
    push(model.output);
    return out;
}

std::vector<const Tensor*> parameter_tensors(const Model& model) {
    const auto mutable_list = parameter_tensors(const_cast<Model&>(model));
    return {mutable_list.begin(), mutable_list.end()};
}

std::size_t Model::parameter_count() const {
    std::size_t total = 0;
    for (const Tensor* t : parameter_tensors(*this)) total += t->size();
    return total;
}

ForwardResult forward(const Model& model, const Tensor& batch) {
    validate_batch(model, batch);
    Activations acts = run_forward(model, batch);
    return {std::move(acts.reconstruction), std::move(acts.embedding)};
}

double loss_mse(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ValidationError("loss tensor shape mismatch");
    if (a.size() == 0) throw ValidationError("loss over empty tensors");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double compute_gradients(const Model& model, const Tensor& batch, std::vector<Tensor>& grads) {
    validate_batch(model, batch);
    const Activations acts = run_forward(model, batch);
    const std::uint32_t blocks = model.config.blocks;
    const double loss = loss_mse(acts.reconstruction, batch);

    // dLoss/dreconstruction for mean squared error
    Tensor g = acts.reconstruction;
    const double scale = 2.0 / static_cast<double>(g.size());
    for (std::size_t i = 0; i < g.data.size(); ++i)
        g.data[i] = scale * (acts.reconstruction.data[i] - batch.data[i]);
    sigmoid_backward_inplace(g, acts.reconstruction);

    std::vector<Tensor> enc_gw(blocks), enc_gb(blocks), dec_gw(blocks), dec_gb(blocks);
    Tensor bot_gw, bot_gb, exp_gw, exp_gb, out_gw, out_gb;
    std::vector<Tensor> enc_grad(blocks); // accumulated grads at encoder activations

    const Tensor& final_in = blocks >= 1 ? acts.dec_act.back() : acts.embedding;
    Tensor g_prev;
    conv2d_backward(final_in, model.output.weight, 1, g, g_prev, out_gw, out_gb);
    g = std::move(g_prev);

    Tensor g_embedding;
    if (blocks >= 1) {
        for (std::uint32_t jj = 0; jj < blocks; ++jj) {
            const std::uint32_t j = blocks - 1 - jj;
            relu_backward_inplace(g, acts.dec_act[j]);
            Tensor g_up;
            conv2d_backward(acts.dec_up[j], model.decoder[j].weight, 1, g, g_up, dec_gw[j],
                            dec_gb[j]);
            Tensor g_pre = upsample2x_backward(g_up);
            if (model.config.skip_mode == SkipMode::paper)
                accumulate(enc_grad[blocks - 1 - j], Tensor(g_pre));
            g = std::move(g_pre);
        }
        conv2d_backward(acts.embedding, model.expand.weight, 1, g, g_embedding, exp_gw, exp_gb);
    } else {
        g_embedding = std::move(g);
    }

    const Tensor& bottleneck_in = blocks >= 1 ? acts.enc_act.back() : batch;
    Tensor g_bottleneck_in;
    conv2d_backward(bottleneck_in, model.bottleneck.weight, 1, g_embedding, g_bottleneck_in,
                    bot_gw, bot_gb);
    if (blocks >= 1) {
        accumulate(enc_grad[blocks - 1], std::move(g_bottleneck_in));
        for (std::uint32_t ii = 0; ii < blocks; ++ii) {
            const std::uint32_t i = blocks - 1 - ii;
            relu_backward_inplace(enc_grad[i], acts.enc_act[i]);
            const Tensor& conv_in = i == 0 ? batch : acts.enc_act[i - 1];
            Tensor g_in;
            conv2d_backward(conv_in, model.encoder[i].weight, 2, enc_grad[i], g_in, enc_gw[i],
                            enc_gb[i]);
            if (i > 0) accumulate(enc_grad[i - 1], std::move(g_in));
        }
    }

    grads.clear();
    for (std::uint32_t i = 0; i < blocks; ++i) {
        grads.push_back(std::move(enc_gw[i]));
        grads.push_back(std::move(enc_gb[i]));
    }
    grads.push_back(std::move(bot_gw));
    grads.push_back(std::move(bot_gb));
    if (blocks >= 1) {
        grads.push_back(std::move(exp_gw));
        grads.push_back(std::move(exp_gb));
    }
    for (std::uint32_t j = 0; j < blocks; ++j) {
        grads.push_back(std::move(dec_gw[j]));
        grads.push_back(std::move(dec_gb[j]));
    }
    grads.push_back(std::move(out_gw));
    grads.push_back(std::move(out_gb));
    return loss;
}

void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state,
               double learning_rate) {
    const auto params = parameter_tensors(model);
    if (grads.size() != params.size())
        throw ValidationError("gradient list does not match parameter list");
    std::size_t total = 0;
    for (const Tensor* p : params) total += p->size();
    if (state.m.empty()) {
        state.m.assign(total, 0.0);
        state.v.assign(total, 0.0);
    } else if (state.m.size() != total || state.v.size() != total) {
        throw ValidationError("optimizer state does not match parameter count");
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    std::size_t offset = 0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        Tensor& p = *params[t];
        const Tensor& gt = grads[t];
        if (!p.same_shape(gt)) throw ValidationError("gradient tensor shape mismatch");
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double gv = gt.data[i];
            double& m = state.m[offset + i];
            double& v = state.v[offset + i];
            m = state.beta1 * m + (1.0 - state.beta1) * gv;
            v = state.beta2 * v + (1.0 - state.beta2) * gv * gv;
            p.data[i] -= learning_rate * (m / bc1) / (std::sqrt(v / bc2) + state.epsilon);
        }
        offset += p.data.size();
    }
}

double backward_and_step(Model& model, const Tensor& batch, AdamState& state,
                         double learning_rate) {
    std::vector<Tensor> grads;
    const double loss = compute_gradients(model, batch, grads);
    if (!std::isfinite(loss))
        throw NumericError("non-finite training loss at optimizer step " +
                           std::to_string(state.step + 1));
    adam_step(model, grads, state, learning_rate);
    return loss;
}

Tensor image_to_tensor(const Image& image) {
    image.validate();
    Tensor t(1, image.channels, image.height, image.width);
    for (std::uint32_t c = 0; c < image.channels; ++c) {
        double* plane = t.plane(0, c);
        for (std::uint32_t y = 0; y < image.height; ++y)
            for (std::uint32_t x = 0; x < image.width; ++x)
                plane[y * image.width + x] = image.at(x, y, c) / 255.0;
    }
    return t;
}

Image tensor_to_image(const Tensor& tensor, std::size_t index) {
    if (index >= tensor.n) throw ValidationError("tensor batch index out of range");
    if (tensor.c != 1 && tensor.c != 3)
        throw ValidationError("tensor channel count is not an image channel count");
    Image img(static_cast<std::uint32_t>(tensor.w), static_cast<std::uint32_t>(tensor.h),
              static_cast<std::uint32_t>(tensor.c));
    for (std::size_t c = 0; c < tensor.c; ++c) {
        const double* plane = tensor.plane(index, c);
        for (std::size_t y = 0; y < tensor.h; ++y)
            for (std::size_t x = 0; x < tensor.w; ++x) {
                const long q = std::lround(plane[y * tensor.w + x] * 255.0);
                img.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                       static_cast<std::uint32_t>(c)) =
                    static_cast<std::uint8_t>(std::clamp<long>(q, 0, 255));
            }
    }
    return img;
}

Tensor make_batch(std::span<const Image> images, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ValidationError("empty batch");
    const Image& first = images[indices[0]];
    Tensor batch(indices.size(), first.channels, first.height, first.width);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const Image& img = images[indices[k]];
        if (img.width != first.width || img.height != first.height ||
            img.channels != first.channels)
            throw ValidationError("batch images must share dimensions");
        for (std::uint32_t c = 0; c < img.channels; ++c) {
            double* plane = batch.plane(k, c);
            for (std::uint32_t y = 0; y < img.height; ++y)
                for (std::uint32_t x = 0; x < img.width; ++x)
                    plane[y * img.width + x] = img.at(x, y, c) / 255.0;
        }
    }
    return batch;
}

namespace {

QualityReport evaluate_quality(const Model& model, std::span<const Image> dataset,
                               std::span<const std::size_t> indices,
                               std::uint32_t batch_size) {
    const auto& cfg = model.config;
    const std::uint32_t s = cfg.input_side >> cfg.blocks;
    double mse_acc = 0.0, psnr_acc = 0.0, ssim_acc = 0.0;
    for (std::size_t pos = 0; pos < indices.size(); pos += batch_size) {
        const std::size_t count = std::min<std::size_t>(batch_size, indices.size() - pos);
        const Tensor batch = make_batch(dataset, indices.subspan(pos, count));
        const ForwardResult r = forward(model, batch);
        for (std::size_t k = 0; k < count; ++k) {
            const Image rec = tensor_to_image(r.reconstruction, k);
            const Image& orig = dataset[indices[pos + k]];
            const double m = mse(orig, rec);
            mse_acc += m;
            psnr_acc += psnr_from_mse(m);
            ssim_acc += ssim(orig, rec);
        }
    }
    const double n = static_cast<double>(indices.size());
    QualityReport q;
    q.mse = mse_acc / n;
    q.psnr_db = psnr_acc / n;
    q.ssim = ssim_acc / n;
    q.bytes_original = static_cast<std::uint64_t>(cfg.input_side) * cfg.input_side *
                       cfg.image_channels;
    q.bytes_encoded = static_cast<std::uint64_t>(cfg.image_channels) * s * s + 8;
    q.compression_ratio_pct = compression_ratio_bytes(q.bytes_original, q.bytes_encoded);
    q.bitrate_bpp = bitrate_bpp(q.bytes_encoded,
                                static_cast<std::uint64_t>(cfg.input_side) * cfg.input_side);
    return q;
}

} // namespace

TrainOutcome train(const ModelConfig& model_config, const TrainConfig& train_config,
                   std::span<const Image> dataset) {
    validate_config(model_config);
    if (train_config.epochs < 1) throw ValidationError("epochs must be >= 1");
    if (train_config.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(train_config.val_split > 0.0 && train_config.val_split < 1.0))
        throw ValidationError("val_split must lie in (0,1)");
    if (!(train_config.learning_rate >= 0.0) || !std::isfinite(train_config.learning_rate))
        throw ValidationError("learning_rate must be finite and >= 0");
    if (dataset.size() < 2u * train_config.batch_size)
        throw ValidationError("dataset too small: " + std::to_string(dataset.size()) +
                              " images, need at least " +
                              std::to_string(2u * train_config.batch_size));
    for (const Image& img : dataset) {
        img.validate();
        if (img.width != model_config.input_side || img.height != model_config.input_side ||
            img.channels != model_config.image_channels)
            throw ValidationError("dataset image dimensions do not match model config");
    }

    std::mt19937_64 eng(train_config.seed);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[rng_below(eng, i + 1)]);

    const std::size_t val_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(static_cast<double>(dataset.size()) * train_config.val_split)));
    if (val_count >= dataset.size()) throw ValidationError("validation split leaves no training data");
    const std::size_t train_count = dataset.size() - val_count;
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + train_count);
    const std::vector<std::size_t> val_idx(order.begin() + train_count, order.end());

    Model model = build_model(model_config);
    AdamState state;
    TrainingReport report;
    report.blocks = model_config.blocks;
    report.parameter_count = model.parameter_count();
    report.embedding_side = model_config.input_side >> model_config.blocks;
    report.compression_ratio_pct =
        compression_ratio_spatial(model_config.input_side, report.embedding_side);

    for (std::uint32_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        for (std::size_t i = train_idx.size() - 1; i > 0; --i)
            std::swap(train_idx[i], train_idx[rng_below(eng, i + 1)]);

        double train_acc = 0.0;
        for (std::size_t pos = 0; pos < train_idx.size(); pos += train_config.batch_size) {
            const std::size_t count =
                std::min<std::size_t>(train_config.batch_size, train_idx.size() - pos);
            const Tensor batch =
                make_batch(dataset, std::span<const std::size_t>(train_idx).subspan(pos, count));
            const double loss = backward_and_step(model, batch, state, train_config.learning_rate);
            train_acc += loss * static_cast<double>(count);
        }
        report.train_mse.push_back(train_acc / static_cast<double>(train_count));

        double val_acc = 0.0;
        for (std::size_t pos = 0; pos < val_idx.size(); pos += train_config.batch_size) {
            const std::size_t count =
                std::min<std::size_t>(train_config.batch_size, val_idx.size() - pos);
            const Tensor batch =
                make_batch(dataset, std::span<const std::size_t>(val_idx).subspan(pos, count));
            const ForwardResult r = forward(model, batch);
            val_acc += loss_mse(r.reconstruction, batch) * static_cast<double>(count);
        }
        const double val_mse = val_acc / static_cast<double>(val_count);
        if (!std::isfinite(val_mse))
            throw NumericError("non-finite validation loss after epoch " +
                               std::to_string(epoch + 1));
        report.val_mse.push_back(val_mse);
    }

    report.converged = report.val_mse.back() <= 0.5 * report.val_mse.front();
    report.train_quality = evaluate_quality(model, dataset, train_idx, train_config.batch_size);
    report.test_quality = evaluate_quality(model, dataset, val_idx, train_config.batch_size);
    return {std::move(model), std::move(report)};
}

std::vector<TrainingReport> run_ablation(const ModelConfig& base, const TrainConfig& train_config,
                                         std::span<const std::uint32_t> blocks,
                                         std::span<const Image> dataset) {
    if (blocks.empty()) throw ValidationError("ablation needs at least one block count");
    std::vector<TrainingReport> reports;
    for (std::uint32_t b : blocks) {
        ModelConfig cfg = base;
        cfg.blocks = b;
        reports.push_back(train(cfg, train_config, dataset).report);
    }
    return reports;
}

std::string ablation_to_csv(std::span<const TrainingReport> reports) {
    std::string out = "Blocks,PSNR Train,SSIM Train,PSNR Test,SSIM Test,Output Size,Compression\n";
    for (const TrainingReport& r : reports) {
        out += std::to_string(r.blocks) + ",";
        out += format_fixed(r.train_quality.psnr_db, 4) + ",";
        out += format_fixed(r.train_quality.ssim, 4) + ",";
        out += format_fixed(r.test_quality.psnr_db, 4) + ",";
        out += format_fixed(r.test_quality.ssim, 4) + ",";
        out += std::to_string(r.embedding_side) + ",";
        out += format_fixed(r.compression_ratio_pct, 2) + "\n";
    }
    return out;
}

std::string curves_to_csv(const TrainingReport& report) {
    std::string out = "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < report.train_mse.size(); ++e) {
        out += std::to_string(e + 1) + ",";
        out += format_shortest(report.train_mse[e]) + ",";
        out += format_shortest(report.val_mse[e]) + "\n";
    }
    return out;
}

EncodedBlob encode_embedding(const Model& model, const Image& image) {
    if (model.config.skip_mode != SkipMode::codec_honest)
        throw ValidationError("embedding codec requires codec_honest skip mode");
    image.validate();
    if (image.width != model.config.input_side || image.height != model.config.input_side ||
        image.channels != model.config.image_channels)
        throw ValidationError("image dimensions do not match model input");

    const Tensor x = image_to_tensor(image);
    const Tensor emb = run_encoder(model, x, nullptr);

    double lo = emb.data[0], hi = emb.data[0];
    for (double v : emb.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw NumericError("embedding contains non-finite values");

    const float lo_f = static_cast<float>(lo);
    const float hi_f = static_cast<float>(hi);
    const double base = static_cast<double>(lo_f);
    const double range = static_cast<double>(hi_f) - base;

    EncodedBlob blob;
    blob.codec_id = CodecId::ae_embedding;
    blob.width = image.width;
    blob.height = image.height;
    blob.channels = static_cast<std::uint8_t>(image.channels);
    blob.quality = 0;
    wire::put_f32be(blob.payload, lo_f);
    wire::put_f32be(blob.payload, hi_f);
    for (double v : emb.data) {
        long q = range > 0.0 ? std::lround((v - base) / range * 255.0) : 0;
        blob.payload.push_back(static_cast<std::uint8_t>(std::clamp<long>(q, 0, 255)));
    }
    return blob;
}

Image decode_embedding(const Model& model, const EncodedBlob& blob) {
    if (model.config.skip_mode != SkipMode::codec_honest)
        throw ValidationError("embedding codec requires codec_honest skip mode");
    if (blob.codec_id != CodecId::ae_embedding)
        throw ValidationError("blob codec is not ae_embedding");
    const auto& cfg = model.config;
    if (blob.width != cfg.input_side || blob.height != cfg.input_side ||
        blob.channels != cfg.image_channels)
        throw ValidationError("blob dimensions do not match model input");
    const std::uint32_t s = cfg.input_side >> cfg.blocks;
    const std::size_t expected = static_cast<std::size_t>(cfg.image_channels) * s * s + 8;
    if (blob.payload.size() != expected)
        throw ValidationError("embedding payload size " + std::to_string(blob.payload.size()) +
                              " does not match model block count (expected " +
                              std::to_string(expected) + ")");

    wire::Reader reader(blob.payload);
    const double base = static_cast<double>(reader.f32be("embedding min"));
    const double top = static_cast<double>(reader.f32be("embedding max"));
    const double range = top - base;
    Tensor emb(1, cfg.image_channels, s, s);
    for (double& v : emb.data)
        v = base + static_cast<double>(reader.u8("embedding sample")) / 255.0 * range;

    const Tensor rec = run_decoder(model, emb, nullptr, nullptr);
    return tensor_to_image(rec, 0);
}

std::vector<std::uint8_t> save_model(const Model& model) {
    std::vector<std::uint8_t> out;
    for (char ch : {'A', 'E', 'M', 'D'}) out.push_back(static_cast<std::uint8_t>(ch));
    wire::put_u8(out, kCheckpointVersion);
    wire::put_u8(out, static_cast<std::uint8_t>(model.config.blocks));
    wire::put_u32be(out, model.config.input_side);
    wire::put_u8(out, static_cast<std::uint8_t>(model.config.image_channels));
    wire::put_u32be(out, model.config.base_width);
    wire::put_u64be(out, model.config.seed);
    wire::put_u8(out, static_cast<std::uint8_t>(model.config.skip_mode));
    for (const Tensor* t : parameter_tensors(model)) {
        wire::put_u32be(out, static_cast<std::uint32_t>(t->n));
        wire::put_u32be(out, static_cast<std::uint32_t>(t->c));
        wire::put_u32be(out, static_cast<std::uint32_t>(t->h));
        wire::put_u32be(out, static_cast<std::uint32_t>(t->w));
        for (double v : t->data) wire::put_f64le(out, v);
    }
    return out;
}

Model load_model(std::span<const std::uint8_t> bytes) {
    wire::Reader reader(bytes);
    const auto magic = reader.bytes(4, "checkpoint magic");
    if (magic[0] != 'A' || magic[1] != 'E' || magic[2] != 'M' || magic[3] != 'D')
        throw DecodeError("bad checkpoint magic");
    if (reader.u8("checkpoint version") != kCheckpointVersion)
        throw DecodeError("unsupported checkpoint version");

    ModelConfig config;
    config.blocks = reader.u8("blocks");
    config.input_side = reader.u32be("input_side");
    config.image_channels = reader.u8("image_channels");
    config.base_width = reader.u32be("base_width");
    config.seed = reader.u64be("seed");
    const std::uint8_t mode = reader.u8("skip_mode");
    if (mode > 1) throw DecodeError("unknown skip mode in checkpoint");
    config.skip_mode = static_cast<SkipMode>(mode);
    validate_config(config);

    Model model = build_model(config);
    for (Tensor* t : parameter_tensors(model)) {
        const std::size_t n = reader.u32be("tensor dim"), c = reader.u32be("tensor dim"),
                          h = reader.u32be("tensor dim"), w = reader.u32be("tensor dim");
        if (n != t->n || c != t->c || h != t->h || w != t->w)
            throw DecodeError("checkpoint tensor shape mismatch");
        for (double& v : t->data) v = reader.f64le("tensor value");
    }
    if (!reader.exhausted()) throw DecodeError("trailing bytes after checkpoint tensors");
    return model;
}

} // namespace imcp
