#include "imcp/nn_ops.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace imcp {

namespace {

void check_conv_args(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride) {
    if (weight.h != weight.w || (weight.h != 1 && weight.h != 3))
        throw ValidationError("conv kernel must be 1x1 or 3x3");
    if (input.c != weight.c)
        throw ValidationError("conv input channels " + std::to_string(input.c) +
                              " do not match weight channels " + std::to_string(weight.c));
    if (stride != 1 && stride != 2)
        throw ValidationError("conv stride must be 1 or 2");
    if (bias && (bias->n != 1 || bias->c != weight.n || bias->h != 1 || bias->w != 1))
        throw ValidationError("conv bias shape must be (1, out_c, 1, 1)");
    if (input.h < 1 || input.w < 1)
        throw ValidationError("conv input is empty");
}

} // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride) {
    check_conv_args(input, weight, &bias, stride);
    const std::size_t k = weight.h;
    const std::size_t oh = (input.h - 1) / stride + 1;
    const std::size_t ow = (input.w - 1) / stride + 1;
    Tensor out(input.n, weight.n, oh, ow);
    const std::size_t us = static_cast<std::size_t>(stride);

    for (std::size_t ni = 0; ni < input.n; ++ni) {
        for (std::size_t co = 0; co < weight.n; ++co) {
            double* op = out.plane(ni, co);
            const double b = bias.data[co];
            for (std::size_t i = 0, sz = out.plane_size(); i < sz; ++i) op[i] = b;

            if (k == 1) {
                for (std::size_t ci = 0; ci < input.c; ++ci) {
                    const double wv = weight.at(co, ci, 0, 0);
                    const double* ip = input.plane(ni, ci);
                    if (stride == 1) {
                        for (std::size_t i = 0, sz = out.plane_size(); i < sz; ++i)
                            op[i] += wv * ip[i];
                    } else {
                        for (std::size_t y = 0; y < oh; ++y) {
                            const double* irow = ip + (y * 2) * input.w;
                            double* orow = op + y * ow;
                            for (std::size_t x = 0; x < ow; ++x) orow[x] += wv * irow[x * 2];
                        }
                    }
                }
                continue;
            }

            // 3x3: fuse the kx taps into one stencil pass per (ci, ky) row so
            // each input row is streamed once instead of three times.
            for (std::size_t ci = 0; ci < input.c; ++ci) {
                const double* ip = input.plane(ni, ci);
                const double* w9 = weight.plane(co, ci);
                for (std::size_t y = 0; y < oh; ++y) {
                    double* orow = op + y * ow;
                    for (std::size_t ky = 0; ky < 3; ++ky) {
                        const long iy = static_cast<long>(y * us + ky) - 1;
                        if (iy < 0 || iy >= static_cast<long>(input.h)) continue;
                        const double* irow = ip + static_cast<std::size_t>(iy) * input.w;
                        const double w0 = w9[ky * 3], w1 = w9[ky * 3 + 1], w2 = w9[ky * 3 + 2];
                        // full-tap x range: 1 <= x*stride - 1 and x*stride + 1 < input.w
                        const std::size_t x_full_end =
                            input.w >= 2 ? std::min(ow, (input.w - 2) / us + 1) : 0;
                        std::size_t x = 0;
                        if (x == 0 && x < ow) { // left edge: no kx=0 tap
                            double acc = w1 * irow[0];
                            if (input.w > 1) acc += w2 * irow[1];
                            orow[0] += acc;
                            x = 1;
                        }
                        if (stride == 1) {
                            for (; x < x_full_end; ++x)
                                orow[x] += w0 * irow[x - 1] + w1 * irow[x] + w2 * irow[x + 1];
                        } else {
                            for (; x < x_full_end; ++x)
                                orow[x] += w0 * irow[2 * x - 1] + w1 * irow[2 * x] +
                                           w2 * irow[2 * x + 1];
                        }
                        for (; x < ow; ++x) { // right edge: kx=2 tap clipped
                            const std::size_t sx = x * us;
                            double acc = w0 * irow[sx - 1] + w1 * irow[sx];
                            if (sx + 1 < input.w) acc += w2 * irow[sx + 1];
                            orow[x] += acc;
                        }
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& input, const Tensor& weight, int stride,
                     const Tensor& grad_out, Tensor& grad_input, Tensor& grad_weight,
                     Tensor& grad_bias) {
    check_conv_args(input, weight, nullptr, stride);
    const std::size_t k = weight.h;
    const std::size_t oh = (input.h - 1) / stride + 1;
    const std::size_t ow = (input.w - 1) / stride + 1;
    if (grad_out.n != input.n || grad_out.c != weight.n || grad_out.h != oh || grad_out.w != ow)
        throw ValidationError("conv grad_out shape mismatch");

    grad_input = Tensor(input.n, input.c, input.h, input.w);
    grad_weight = Tensor(weight.n, weight.c, k, k);
    grad_bias = Tensor(1, weight.n, 1, 1);

    for (std::size_t ni = 0; ni < input.n; ++ni) {
        for (std::size_t co = 0; co < weight.n; ++co) {
            const double* gp = grad_out.plane(ni, co);
            double bsum = 0.0;
            for (std::size_t i = 0, sz = grad_out.plane_size(); i < sz; ++i) bsum += gp[i];
            grad_bias.data[co] += bsum;

            if (k == 1) {
                for (std::size_t ci = 0; ci < input.c; ++ci) {
                    const double* ip = input.plane(ni, ci);
                    double* gip = grad_input.plane(ni, ci);
                    const double wv = weight.at(co, ci, 0, 0);
                    double wsum = 0.0;
                    if (stride == 1) {
                        for (std::size_t i = 0, sz = grad_out.plane_size(); i < sz; ++i) {
                            wsum += gp[i] * ip[i];
                            gip[i] += wv * gp[i];
                        }
                    } else {
                        for (std::size_t y = 0; y < oh; ++y) {
                            const double* irow = ip + (y * 2) * input.w;
                            double* girow = gip + (y * 2) * input.w;
                            const double* grow = gp + y * ow;
                            for (std::size_t x = 0; x < ow; ++x) {
                                wsum += grow[x] * irow[x * 2];
                                girow[x * 2] += wv * grow[x];
                            }
                        }
                    }
                    grad_weight.at(co, ci, 0, 0) += wsum;
                }
                continue;
            }

            // 3x3: one fused pass per (ci, ky) for the weight sums, and a
            // gather-form stencil per input row for grad_input (mirrored
            // taps), so no pass streams the planes more than once.
            const std::size_t us = static_cast<std::size_t>(stride);
            for (std::size_t ci = 0; ci < input.c; ++ci) {
                const double* ip = input.plane(ni, ci);
                double* gip = grad_input.plane(ni, ci);
                const double* w9 = weight.plane(co, ci);
                double* gw9 = grad_weight.plane(co, ci);

                for (std::size_t y = 0; y < oh; ++y) {
                    const double* grow = gp + y * ow;
                    for (std::size_t ky = 0; ky < 3; ++ky) {
                        const long iy = static_cast<long>(y * us + ky) - 1;
                        if (iy < 0 || iy >= static_cast<long>(input.h)) continue;
                        const double* irow = ip + static_cast<std::size_t>(iy) * input.w;
                        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
                        const std::size_t x_full_end =
                            input.w >= 2 ? std::min(ow, (input.w - 2) / us + 1) : 0;
                        std::size_t x = 0;
                        if (x < ow) {
                            s1 += grow[0] * irow[0];
                            if (input.w > 1) s2 += grow[0] * irow[1];
                            x = 1;
                        }
                        for (; x < x_full_end; ++x) {
                            const std::size_t sx = x * us;
                            s0 += grow[x] * irow[sx - 1];
                            s1 += grow[x] * irow[sx];
                            s2 += grow[x] * irow[sx + 1];
                        }
                        for (; x < ow; ++x) {
                            const std::size_t sx = x * us;
                            s0 += grow[x] * irow[sx - 1];
                            s1 += grow[x] * irow[sx];
                            if (sx + 1 < input.w) s2 += grow[x] * irow[sx + 1];
                        }
                        gw9[ky * 3] += s0;
                        gw9[ky * 3 + 1] += s1;
                        gw9[ky * 3 + 2] += s2;
                    }
                }

                if (stride == 1) {
                    for (std::size_t iy = 0; iy < input.h; ++iy) {
                        double* girow = gip + iy * input.w;
                        for (std::size_t ky = 0; ky < 3; ++ky) {
                            const long oyr = static_cast<long>(iy) + 1 - static_cast<long>(ky);
                            if (oyr < 0 || oyr >= static_cast<long>(oh)) continue;
                            const double* grow = gp + static_cast<std::size_t>(oyr) * ow;
                            const double w0 = w9[ky * 3], w1 = w9[ky * 3 + 1],
                                         w2 = w9[ky * 3 + 2];
                            const std::size_t iw = input.w;
                            double acc = w1 * grow[0];
                            if (iw > 1) acc += w0 * grow[1];
                            girow[0] += acc;
                            for (std::size_t ix = 1; ix + 1 < iw; ++ix)
                                girow[ix] += w0 * grow[ix + 1] + w1 * grow[ix] + w2 * grow[ix - 1];
                            if (iw > 1) girow[iw - 1] += w1 * grow[iw - 1] + w2 * grow[iw - 2];
                        }
                    }
                } else {
                    for (std::size_t iy = 0; iy < input.h; ++iy) {
                        double* girow = gip + iy * input.w;
                        // parity picks which taps can reach this input row
                        for (std::size_t ky = iy % 2 == 0 ? 1 : 0; ky < 3; ky += 2) {
                            const long oyr =
                                (static_cast<long>(iy) + 1 - static_cast<long>(ky)) / 2;
                            if (oyr < 0 || oyr >= static_cast<long>(oh)) continue;
                            const double* grow = gp + static_cast<std::size_t>(oyr) * ow;
                            const double w0 = w9[ky * 3], w1 = w9[ky * 3 + 1],
                                         w2 = w9[ky * 3 + 2];
                            for (std::size_t ix = 0; ix < input.w; ix += 2)
                                girow[ix] += w1 * grow[ix / 2];
                            for (std::size_t ix = 1; ix < input.w; ix += 2) {
                                double acc = w2 * grow[(ix - 1) / 2];
                                const std::size_t xp = (ix + 1) / 2;
                                if (xp < ow) acc += w0 * grow[xp];
                                girow[ix] += acc;
                            }
                        }
                    }
                }
            }
        }
    }
}

Tensor upsample2x_forward(const Tensor& input) {
    Tensor out(input.n, input.c, input.h * 2, input.w * 2);
    for (std::size_t ni = 0; ni < input.n; ++ni) {
        for (std::size_t ci = 0; ci < input.c; ++ci) {
            const double* ip = input.plane(ni, ci);
            double* op = out.plane(ni, ci);
            for (std::size_t y = 0; y < input.h; ++y) {
                const double* irow = ip + y * input.w;
                double* orow = op + (y * 2) * out.w;
                for (std::size_t x = 0; x < input.w; ++x) {
                    orow[2 * x] = irow[x];
                    orow[2 * x + 1] = irow[x];
                }
                std::memcpy(orow + out.w, orow, out.w * sizeof(double));
            }
        }
    }
    return out;
}

Tensor upsample2x_backward(const Tensor& grad_out) {
    if (grad_out.h % 2 != 0 || grad_out.w % 2 != 0)
        throw ValidationError("upsample gradient dimensions must be even");
    Tensor out(grad_out.n, grad_out.c, grad_out.h / 2, grad_out.w / 2);
    for (std::size_t ni = 0; ni < grad_out.n; ++ni) {
        for (std::size_t ci = 0; ci < grad_out.c; ++ci) {
            const double* gp = grad_out.plane(ni, ci);
            double* op = out.plane(ni, ci);
            for (std::size_t y = 0; y < out.h; ++y) {
                const double* g0 = gp + (y * 2) * grad_out.w;
                const double* g1 = g0 + grad_out.w;
                double* orow = op + y * out.w;
                for (std::size_t x = 0; x < out.w; ++x)
                    orow[x] = g0[2 * x] + g0[2 * x + 1] + g1[2 * x] + g1[2 * x + 1];
            }
        }
    }
    return out;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

void relu_backward_inplace(Tensor& grad, const Tensor& activated) {
    if (!grad.same_shape(activated)) throw ValidationError("relu gradient shape mismatch");
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (activated.data[i] <= 0.0) grad.data[i] = 0.0;
}

Tensor sigmoid_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

void sigmoid_backward_inplace(Tensor& grad, const Tensor& output) {
    if (!grad.same_shape(output)) throw ValidationError("sigmoid gradient shape mismatch");
    for (std::size_t i = 0; i < grad.data.size(); ++i) {
        const double y = output.data[i];
        grad.data[i] *= y * (1.0 - y);
    }
}

void add_inplace(Tensor& target, const Tensor& addend) {
    if (!target.same_shape(addend)) throw ValidationError("tensor add shape mismatch");
    for (std::size_t i = 0; i < target.data.size(); ++i) target.data[i] += addend.data[i];
}

} // namespace imcp
