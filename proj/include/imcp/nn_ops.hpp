#ifndef IMCP_NN_OPS_HPP
#define IMCP_NN_OPS_HPP

#include "imcp/tensor.hpp"

namespace imcp {

// Zero-padded 2D convolution (padding (k-1)/2, so spatial size maps h ->
// ceil(h/stride)). weight shape (out_c, in_c, k, k) with k in {1,3}; bias
// shape (1, out_c, 1, 1); stride 1 or 2.
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride);

// Accumulates nothing: grad_input/grad_weight/grad_bias are (re)sized and
// overwritten. input and weight must be the forward-pass operands.
void conv2d_backward(const Tensor& input, const Tensor& weight, int stride,
                     const Tensor& grad_out, Tensor& grad_input, Tensor& grad_weight,
                     Tensor& grad_bias);

// Nearest-neighbor 2x upsampling and its adjoint (2x2 gradient pooling).
Tensor upsample2x_forward(const Tensor& input);
Tensor upsample2x_backward(const Tensor& grad_out);

Tensor relu_forward(const Tensor& input);
// grad *= (activated > 0); `activated` is relu_forward's output.
void relu_backward_inplace(Tensor& grad, const Tensor& activated);

Tensor sigmoid_forward(const Tensor& input);
// grad *= y * (1 - y); `output` is sigmoid_forward's output.
void sigmoid_backward_inplace(Tensor& grad, const Tensor& output);

void add_inplace(Tensor& target, const Tensor& addend);

} // namespace imcp

#endif
