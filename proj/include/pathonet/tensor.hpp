#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathonet {

// Dense n-dimensional array, row-major. Activations are laid out N x C x H x W,
// convolution kernels Cout x Cin x K x K. Values are float in the shipped
// pipeline; the double instantiation exists for oracle-grade arithmetic.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;

    explicit TensorT(std::vector<int> s) : shape(std::move(s)), data(checked_count(shape)) {}

    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != checked_count(shape))
            throw std::invalid_argument("tensor: data length does not match shape");
    }

    static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }

    static TensorT full(std::vector<int> s, T value) {
        TensorT t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }

    std::size_t size() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }

    int dim(int i) const {
        if (i < 0 || i >= rank()) throw std::out_of_range("tensor: dim index");
        return shape[static_cast<std::size_t>(i)];
    }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    // Flat offset for a 4-d tensor.
    std::size_t idx4(int n, int c, int y, int x) const {
        return ((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x;
    }

    std::size_t idx3(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x;
    }

    T& at4(int n, int c, int y, int x) { return data[idx4(n, c, y, x)]; }
    T at4(int n, int c, int y, int x) const { return data[idx4(n, c, y, x)]; }
    T& at3(int c, int y, int x) { return data[idx3(c, y, x)]; }
    T at3(int c, int y, int x) const { return data[idx3(c, y, x)]; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void check_finite(const char* what) const {
        if (!all_finite()) throw std::runtime_error(std::string(what) + ": non-finite value");
    }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

private:
    static std::size_t checked_count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int e : s) {
            if (e <= 0) throw std::invalid_argument("tensor: non-positive extent");
            n *= static_cast<std::size_t>(e);
        }
        return n;
    }
};

using Tensor = TensorT<float>;

// Geometry of one 2-d convolution. dilation spreads the kernel taps D pixels
// apart, giving a receptive span of 1 + (K-1)*D per axis without extra weights.
struct ConvSpec {
    int kernel = 3;
    int dilation = 1;
    int stride = 1;
    int padding = 0;
    int in_channels = 0;
    int out_channels = 0;
    bool has_bias = true;

    void validate() const {
        if (kernel <= 0 || kernel % 2 == 0) throw std::invalid_argument("conv: kernel must be positive odd");
        if (dilation <= 0) throw std::invalid_argument("conv: dilation must be positive");
        if (stride <= 0) throw std::invalid_argument("conv: stride must be positive");
        if (padding < 0) throw std::invalid_argument("conv: padding must be non-negative");
        if (in_channels <= 0 || out_channels <= 0) throw std::invalid_argument("conv: channel counts must be positive");
    }

    int receptive_span() const { return 1 + (kernel - 1) * dilation; }

    // Padding that keeps the spatial size at stride 1.
    int same_padding() const { return dilation * (kernel - 1) / 2; }

    int out_size(int in) const {
        int span = dilation * (kernel - 1) + 1;
        int num = in + 2 * padding - span;
        if (num < 0) throw std::invalid_argument("conv: input smaller than receptive span");
        return num / stride + 1;
    }

    static ConvSpec make(int k, int d, int in_ch, int out_ch, bool bias = true) {
        ConvSpec s;
        s.kernel = k;
        s.dilation = d;
        s.in_channels = in_ch;
        s.out_channels = out_ch;
        s.has_bias = bias;
        s.padding = s.same_padding();
        s.validate();
        return s;
    }
};

}  // namespace pathonet
