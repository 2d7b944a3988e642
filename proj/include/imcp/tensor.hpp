#ifndef IMCP_TENSOR_HPP
#define IMCP_TENSOR_HPP

#include <cstddef>
#include <vector>

#include "imcp/errors.hpp"

namespace imcp {

// Dense NCHW tensor of doubles. Row-major: index = ((n*C + c)*H + y)*W + x.
struct Tensor {
    std::size_t n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_, double fill = 0.0)
        : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t plane_size() const { return h * w; }

    bool same_shape(const Tensor& other) const {
        return n == other.n && c == other.c && h == other.h && w == other.w;
    }

    double* plane(std::size_t ni, std::size_t ci) {
        return data.data() + (ni * c + ci) * plane_size();
    }
    const double* plane(std::size_t ni, std::size_t ci) const {
        return data.data() + (ni * c + ci) * plane_size();
    }

    double& at(std::size_t ni, std::size_t ci, std::size_t y, std::size_t x) {
        return data[((ni * c + ci) * h + y) * w + x];
    }
    double at(std::size_t ni, std::size_t ci, std::size_t y, std::size_t x) const {
        return data[((ni * c + ci) * h + y) * w + x];
    }

    void fill(double value) { data.assign(data.size(), value); }

    bool operator==(const Tensor&) const = default;
};

} // namespace imcp

#endif
