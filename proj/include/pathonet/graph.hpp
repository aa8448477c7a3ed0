#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pathonet/parallel.hpp"
#include "pathonet/tensor.hpp"

namespace pathonet {

namespace detail {

inline int ceil_div(int a, int b) {
    // b > 0
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

inline int floor_div(int a, int b) {
    return a >= 0 ? a / b : -(((-a) + b - 1) / b);
}

// Valid output range [lo, hi) so that pos = i*stride - pad + tap*dilation stays in [0, extent).
inline void tap_bounds(int out_extent, int in_extent, int stride, int pad, int tap, int dilation,
                       int& lo, int& hi) {
    int off = tap * dilation - pad;
    lo = std::max(0, ceil_div(-off, stride));
    hi = std::min(out_extent, floor_div(in_extent - 1 - off, stride) + 1);
    if (hi < lo) hi = lo;
}

// out[n,o,y,x] = bias[o] + sum_{c,u,v} in[n,c,y*s-p+u*D,x*s-p+v*D] * w[o,c,u,v].
// Accumulates in double, stores T.
template <typename T>
TensorT<T> conv_forward(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>* bias,
                        const ConvSpec& spec) {
    spec.validate();
    if (in.rank() != 4) throw std::invalid_argument("conv: input must be NxCxHxW, got " + in.shape_str());
    if (in.dim(1) != spec.in_channels)
        throw std::invalid_argument("conv: input has " + std::to_string(in.dim(1)) + " channels, spec expects " +
                                    std::to_string(spec.in_channels));
    std::vector<int> wshape = {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel};
    if (w.shape != wshape) throw std::invalid_argument("conv: weights must be CoutxCinxKxK, got " + w.shape_str());
    if (spec.has_bias) {
        if (!bias || bias->shape != std::vector<int>{spec.out_channels})
            throw std::invalid_argument("conv: bias shape mismatch");
    } else if (bias) {
        throw std::invalid_argument("conv: bias given but spec.has_bias is false");
    }
    in.check_finite("conv input");

    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int K = spec.kernel, D = spec.dilation, s = spec.stride, p = spec.padding;
    const int O = spec.out_channels;
    const int Ho = spec.out_size(H), Wo = spec.out_size(W);

    TensorT<T> out({N, O, Ho, Wo});
    const std::size_t plane_in = static_cast<std::size_t>(H) * W;
    const std::size_t plane_out = static_cast<std::size_t>(Ho) * Wo;

    parallel_for(static_cast<std::size_t>(N) * O, [&](std::size_t item) {
        const int n = static_cast<int>(item) / O;
        const int o = static_cast<int>(item) % O;
        std::vector<double> acc(plane_out, bias ? static_cast<double>(bias->data[o]) : 0.0);
        const T* wo = w.data.data() + static_cast<std::size_t>(o) * C * K * K;
        for (int c = 0; c < C; ++c) {
            const T* in_plane = in.data.data() + (static_cast<std::size_t>(n) * C + c) * plane_in;
            for (int u = 0; u < K; ++u) {
                int y_lo, y_hi;
                tap_bounds(Ho, H, s, p, u, D, y_lo, y_hi);
                for (int v = 0; v < K; ++v) {
                    const double wv = wo[(static_cast<std::size_t>(c) * K + u) * K + v];
                    if (wv == 0.0) continue;
                    int x_lo, x_hi;
                    tap_bounds(Wo, W, s, p, v, D, x_lo, x_hi);
                    const int xoff = v * D - p;
                    for (int y = y_lo; y < y_hi; ++y) {
                        const int yi = y * s - p + u * D;
                        const T* row = in_plane + static_cast<std::size_t>(yi) * W;
                        double* arow = acc.data() + static_cast<std::size_t>(y) * Wo;
                        if (s == 1) {
                            const T* src = row + xoff;
                            for (int x = x_lo; x < x_hi; ++x) arow[x] += wv * src[x];
                        } else {
                            for (int x = x_lo; x < x_hi; ++x) arow[x] += wv * row[x * s + xoff];
                        }
                    }
                }
            }
        }
        T* orow = out.data.data() + item * plane_out;
        for (std::size_t i = 0; i < plane_out; ++i) orow[i] = static_cast<T>(acc[i]);
    });
    return out;
}

template <typename T>
void conv_backward(const TensorT<T>& in, const TensorT<T>& w, const ConvSpec& spec, const TensorT<T>& gout,
                   TensorT<T>* din, TensorT<T>* dw, TensorT<T>* dbias) {
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int K = spec.kernel, D = spec.dilation, s = spec.stride, p = spec.padding;
    const int O = spec.out_channels;
    const int Ho = gout.dim(2), Wo = gout.dim(3);
    const std::size_t plane_in = static_cast<std::size_t>(H) * W;
    const std::size_t plane_out = static_cast<std::size_t>(Ho) * Wo;

    if (dbias) {
        for (int o = 0; o < O; ++o) {
            double acc = 0.0;
            for (int n = 0; n < N; ++n) {
                const T* g = gout.data.data() + (static_cast<std::size_t>(n) * O + o) * plane_out;
                for (std::size_t i = 0; i < plane_out; ++i) acc += g[i];
            }
            dbias->data[o] += static_cast<T>(acc);
        }
    }

    if (dw) {
        parallel_for(static_cast<std::size_t>(O) * C, [&](std::size_t item) {
            const int o = static_cast<int>(item) / C;
            const int c = static_cast<int>(item) % C;
            T* wslot = dw->data.data() + (static_cast<std::size_t>(o) * C + c) * K * K;
            for (int u = 0; u < K; ++u) {
                int y_lo, y_hi;
                tap_bounds(Ho, H, s, p, u, D, y_lo, y_hi);
                for (int v = 0; v < K; ++v) {
                    int x_lo, x_hi;
                    tap_bounds(Wo, W, s, p, v, D, x_lo, x_hi);
                    const int xoff = v * D - p;
                    double acc = 0.0;
                    for (int n = 0; n < N; ++n) {
                        const T* g_plane = gout.data.data() + (static_cast<std::size_t>(n) * O + o) * plane_out;
                        const T* in_plane = in.data.data() + (static_cast<std::size_t>(n) * C + c) * plane_in;
                        for (int y = y_lo; y < y_hi; ++y) {
                            const int yi = y * s - p + u * D;
                            const T* grow = g_plane + static_cast<std::size_t>(y) * Wo;
                            const T* irow = in_plane + static_cast<std::size_t>(yi) * W;
                            if (s == 1) {
                                const T* src = irow + xoff;
                                for (int x = x_lo; x < x_hi; ++x) acc += static_cast<double>(grow[x]) * src[x];
                            } else {
                                for (int x = x_lo; x < x_hi; ++x) acc += static_cast<double>(grow[x]) * irow[x * s + xoff];
                            }
                        }
                    }
                    wslot[static_cast<std::size_t>(u) * K + v] += static_cast<T>(acc);
                }
            }
        });
    }

    if (din) {
        parallel_for(static_cast<std::size_t>(N) * C, [&](std::size_t item) {
            const int n = static_cast<int>(item) / C;
            const int c = static_cast<int>(item) % C;
            std::vector<double> acc(plane_in, 0.0);
            for (int o = 0; o < O; ++o) {
                const T* g_plane = gout.data.data() + (static_cast<std::size_t>(n) * O + o) * plane_out;
                const T* wo = w.data.data() + (static_cast<std::size_t>(o) * C + c) * K * K;
                for (int u = 0; u < K; ++u) {
                    int y_lo, y_hi;
                    tap_bounds(Ho, H, s, p, u, D, y_lo, y_hi);
                    for (int v = 0; v < K; ++v) {
                        const double wv = wo[static_cast<std::size_t>(u) * K + v];
                        if (wv == 0.0) continue;
                        int x_lo, x_hi;
                        tap_bounds(Wo, W, s, p, v, D, x_lo, x_hi);
                        const int xoff = v * D - p;
                        for (int y = y_lo; y < y_hi; ++y) {
                            const int yi = y * s - p + u * D;
                            const T* grow = g_plane + static_cast<std::size_t>(y) * Wo;
                            double* arow = acc.data() + static_cast<std::size_t>(yi) * W;
                            if (s == 1) {
                                double* dst = arow + xoff;
                                for (int x = x_lo; x < x_hi; ++x) dst[x] += wv * grow[x];
                            } else {
                                for (int x = x_lo; x < x_hi; ++x) arow[x * s + xoff] += wv * grow[x];
                            }
                        }
                    }
                }
            }
            T* drow = din->data.data() + (static_cast<std::size_t>(n) * C + c) * plane_in;
            for (std::size_t i = 0; i < plane_in; ++i) drow[i] += static_cast<T>(acc[i]);
        });
    }
}

}  // namespace detail

// Reverse-mode tape over the fixed operator set the network needs.
// Nodes are append-only, so descending id order is a valid reverse
// topological order and backward() is deterministic.
template <typename T>
class GraphT {
public:
    struct Value {
        int id = -1;
    };

    GraphT() = default;
    GraphT(const GraphT&) = delete;
    GraphT& operator=(const GraphT&) = delete;

    Value leaf(TensorT<T> v, bool needs_grad = false) {
        v.check_finite("leaf");
        return push(std::move(v), needs_grad, {});
    }

    const TensorT<T>& value(Value v) const { return node(v.id).val; }

    // Gradient of the last backward() target w.r.t. this node.
    const TensorT<T>& grad(Value v) const {
        const Node& n = node(v.id);
        if (n.grad.data.empty()) throw std::runtime_error("graph: gradient not computed for node");
        return n.grad;
    }

    Value conv2d(Value input, const ConvSpec& spec, Value weights, std::optional<Value> bias = std::nullopt) {
        if (spec.has_bias && !bias) throw std::invalid_argument("conv: spec.has_bias set but no bias value");
        const TensorT<T>* b = bias ? &node(bias->id).val : nullptr;
        TensorT<T> out = detail::conv_forward(node(input.id).val, node(weights.id).val, b, spec);
        out.check_finite("conv output");
        bool ng = needs(input) || needs(weights) || (bias && needs(*bias));
        int in_id = input.id, w_id = weights.id, b_id = bias ? bias->id : -1;
        return push(std::move(out), ng, [this, in_id, w_id, b_id, spec](int self) {
            const TensorT<T>& g = node(self).grad;
            const TensorT<T>& in = node(in_id).val;
            const TensorT<T>& w = node(w_id).val;
            TensorT<T>* din = needs_buf(in_id);
            TensorT<T>* dw = needs_buf(w_id);
            TensorT<T>* db = b_id >= 0 ? needs_buf(b_id) : nullptr;
            detail::conv_backward(in, w, spec, g, din, dw, db);
        });
    }

    Value max_pool2(Value input) {
        const TensorT<T>& in = node(input.id).val;
        if (in.rank() != 4) throw std::invalid_argument("max_pool2: input must be NxCxHxW");
        const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
        if (H % 2 != 0 || W % 2 != 0) throw std::invalid_argument("max_pool2: spatial dims must be even");
        TensorT<T> out({N, C, H / 2, W / 2});
        auto arg = std::make_shared<std::vector<std::int64_t>>(out.size());
        const int Ho = H / 2, Wo = W / 2;
        std::size_t oi = 0;
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < Ho; ++y)
                    for (int x = 0; x < Wo; ++x, ++oi) {
                        T best{};
                        std::int64_t best_at = -1;
                        int best_slot = 0;
                        for (int u = 0; u < 2; ++u)
                            for (int v = 0; v < 2; ++v) {
                                std::size_t ii = in.idx4(n, c, 2 * y + u, 2 * x + v);
                                T cand = in.data[ii];
                                if (best_at < 0 || cand > best) {  // first occurrence wins ties
                                    best = cand;
                                    best_at = static_cast<std::int64_t>(ii);
                                    best_slot = 2 * u + v;
                                }
                            }
                        out.data[oi] = best;
                        (*arg)[oi] = best_at;
                        sig_mix(static_cast<std::uint64_t>(best_slot) + 5);
                    }
        int in_id = input.id;
        return push(std::move(out), needs(input), [this, in_id, arg](int self) {
            TensorT<T>* din = needs_buf(in_id);
            if (!din) return;
            const TensorT<T>& g = node(self).grad;
            for (std::size_t i = 0; i < g.size(); ++i) din->data[(*arg)[i]] += g.data[i];
        });
    }

    // 2x2 stride-2 transposed convolution; weights are Cin x Cout x 2 x 2.
    Value upsample2(Value input, Value weights) {
        const TensorT<T>& in = node(input.id).val;
        const TensorT<T>& w = node(weights.id).val;
        if (in.rank() != 4) throw std::invalid_argument("upsample2: input must be NxCxHxW");
        if (w.rank() != 4 || w.dim(2) != 2 || w.dim(3) != 2 || w.dim(0) != in.dim(1))
            throw std::invalid_argument("upsample2: weights must be CinxCoutx2x2 matching input channels");
        const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
        const int O = w.dim(1);
        TensorT<T> out({N, O, 2 * H, 2 * W});
        const std::size_t plane_in = static_cast<std::size_t>(H) * W;
        const std::size_t plane_out = plane_in * 4;
        parallel_for(static_cast<std::size_t>(N) * O, [&](std::size_t item) {
            const int n = static_cast<int>(item) / O;
            const int o = static_cast<int>(item) % O;
            std::vector<double> acc(plane_out, 0.0);
            for (int c = 0; c < C; ++c) {
                const T* ip = in.data.data() + (static_cast<std::size_t>(n) * C + c) * plane_in;
                const T* wp = w.data.data() + (static_cast<std::size_t>(c) * O + o) * 4;
                for (int y = 0; y < H; ++y) {
                    const T* irow = ip + static_cast<std::size_t>(y) * W;
                    for (int u = 0; u < 2; ++u) {
                        double* arow = acc.data() + (static_cast<std::size_t>(2 * y + u)) * (2 * W);
                        const double w0 = wp[u * 2 + 0], w1 = wp[u * 2 + 1];
                        for (int x = 0; x < W; ++x) {
                            arow[2 * x] += w0 * irow[x];
                            arow[2 * x + 1] += w1 * irow[x];
                        }
                    }
                }
            }
            T* op = out.data.data() + item * plane_out;
            for (std::size_t i = 0; i < plane_out; ++i) op[i] = static_cast<T>(acc[i]);
        });
        out.check_finite("upsample2 output");
        int in_id = input.id, w_id = weights.id;
        return push(std::move(out), needs(input) || needs(weights), [this, in_id, w_id](int self) {
            const TensorT<T>& g = node(self).grad;
            const TensorT<T>& in = node(in_id).val;
            const TensorT<T>& w = node(w_id).val;
            const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
            const int O = w.dim(1);
            const std::size_t plane_in = static_cast<std::size_t>(H) * W;
            const std::size_t plane_out = plane_in * 4;
            if (TensorT<T>* din = needs_buf(in_id)) {
                parallel_for(static_cast<std::size_t>(N) * C, [&](std::size_t item) {
                    const int n = static_cast<int>(item) / C;
                    const int c = static_cast<int>(item) % C;
                    T* dp = din->data.data() + item * plane_in;
                    for (int y = 0; y < H; ++y)
                        for (int x = 0; x < W; ++x) {
                            double acc = 0.0;
                            for (int o = 0; o < O; ++o) {
                                const T* gp = g.data.data() + (static_cast<std::size_t>(n) * O + o) * plane_out;
                                const T* wp = w.data.data() + (static_cast<std::size_t>(c) * O + o) * 4;
                                for (int u = 0; u < 2; ++u)
                                    for (int v = 0; v < 2; ++v)
                                        acc += static_cast<double>(wp[u * 2 + v]) *
                                               gp[(static_cast<std::size_t>(2 * y + u)) * (2 * W) + 2 * x + v];
                            }
                            dp[static_cast<std::size_t>(y) * W + x] += static_cast<T>(acc);
                        }
                });
            }
            if (TensorT<T>* dw = needs_buf(w_id)) {
                parallel_for(static_cast<std::size_t>(C) * O, [&](std::size_t item) {
                    const int c = static_cast<int>(item) / O;
                    const int o = static_cast<int>(item) % O;
                    T* wslot = dw->data.data() + item * 4;
                    for (int u = 0; u < 2; ++u)
                        for (int v = 0; v < 2; ++v) {
                            double acc = 0.0;
                            for (int n = 0; n < N; ++n) {
                                const T* ip = in.data.data() + (static_cast<std::size_t>(n) * C + c) * plane_in;
                                const T* gp = g.data.data() + (static_cast<std::size_t>(n) * O + o) * plane_out;
                                for (int y = 0; y < H; ++y) {
                                    const T* irow = ip + static_cast<std::size_t>(y) * W;
                                    const T* grow = gp + (static_cast<std::size_t>(2 * y + u)) * (2 * W) + v;
                                    for (int x = 0; x < W; ++x) acc += static_cast<double>(irow[x]) * grow[2 * x];
                                }
                            }
                            wslot[u * 2 + v] += static_cast<T>(acc);
                        }
                });
            }
        });
    }

    Value relu(Value input) {
        const TensorT<T>& in = node(input.id).val;
        TensorT<T> out = in;
        for (T& v : out.data) {
            if (v < T(0)) v = T(0);
            sig_mix(v > T(0) ? 2u : 1u);
        }
        int in_id = input.id;
        return push(std::move(out), needs(input), [this, in_id](int self) {
            TensorT<T>* din = needs_buf(in_id);
            if (!din) return;
            const TensorT<T>& g = node(self).grad;
            const TensorT<T>& in = node(in_id).val;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (in.data[i] > T(0)) din->data[i] += g.data[i];  // subgradient at 0 is 0
        });
    }

    Value add(Value a, Value b) {
        const TensorT<T>& ta = node(a.id).val;
        const TensorT<T>& tb = node(b.id).val;
        if (!ta.same_shape(tb))
            throw std::invalid_argument("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
        TensorT<T> out = ta;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
        out.check_finite("add output");
        int a_id = a.id, b_id = b.id;
        return push(std::move(out), needs(a) || needs(b), [this, a_id, b_id](int self) {
            const TensorT<T>& g = node(self).grad;
            if (TensorT<T>* da = needs_buf(a_id))
                for (std::size_t i = 0; i < g.size(); ++i) da->data[i] += g.data[i];
            if (TensorT<T>* db = needs_buf(b_id))
                for (std::size_t i = 0; i < g.size(); ++i) db->data[i] += g.data[i];
        });
    }

    // Residual for the encoder blocks: concatenates the input with itself
    // along channels, so out[:, :C] == out[:, C:] == in.
    Value duplicate_channels(Value input) {
        const TensorT<T>& in = node(input.id).val;
        if (in.rank() != 4) throw std::invalid_argument("duplicate_channels: input must be NxCxHxW");
        const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
        TensorT<T> out({N, 2 * C, H, W});
        const std::size_t block = static_cast<std::size_t>(C) * H * W;
        for (int n = 0; n < N; ++n) {
            const T* src = in.data.data() + static_cast<std::size_t>(n) * block;
            T* dst = out.data.data() + static_cast<std::size_t>(n) * 2 * block;
            std::copy(src, src + block, dst);
            std::copy(src, src + block, dst + block);
        }
        int in_id = input.id;
        return push(std::move(out), needs(input), [this, in_id, block, N](int self) {
            TensorT<T>* din = needs_buf(in_id);
            if (!din) return;
            const TensorT<T>& g = node(self).grad;
            for (int n = 0; n < N; ++n) {
                const T* ga = g.data.data() + static_cast<std::size_t>(n) * 2 * block;
                T* dst = din->data.data() + static_cast<std::size_t>(n) * block;
                for (std::size_t i = 0; i < block; ++i) dst[i] += ga[i] + ga[block + i];
            }
        });
    }

    // Mean squared error over all elements; result is a 1-element tensor.
    Value mse(Value pred, Value target) {
        const TensorT<T>& tp = node(pred.id).val;
        const TensorT<T>& tt = node(target.id).val;
        if (!tp.same_shape(tt))
            throw std::invalid_argument("mse: shape mismatch " + tp.shape_str() + " vs " + tt.shape_str());
        double acc = 0.0;
        for (std::size_t i = 0; i < tp.size(); ++i) {
            double d = static_cast<double>(tp.data[i]) - static_cast<double>(tt.data[i]);
            acc += d * d;
        }
        TensorT<T> out({1});
        out.data[0] = static_cast<T>(acc / static_cast<double>(tp.size()));
        out.check_finite("mse output");
        int p_id = pred.id, t_id = target.id;
        return push(std::move(out), needs(pred) || needs(target), [this, p_id, t_id](int self) {
            const TensorT<T>& g = node(self).grad;
            const TensorT<T>& tp = node(p_id).val;
            const TensorT<T>& tt = node(t_id).val;
            const double scale = 2.0 * static_cast<double>(g.data[0]) / static_cast<double>(tp.size());
            if (TensorT<T>* dp = needs_buf(p_id))
                for (std::size_t i = 0; i < tp.size(); ++i)
                    dp->data[i] += static_cast<T>(scale * (static_cast<double>(tp.data[i]) - tt.data[i]));
            if (TensorT<T>* dt = needs_buf(t_id))
                for (std::size_t i = 0; i < tp.size(); ++i)
                    dt->data[i] -= static_cast<T>(scale * (static_cast<double>(tp.data[i]) - tt.data[i]));
        });
    }

    // Reverse pass from loss (any single node). Gradients accumulate into the
    // grad buffers of every node with needs_grad on the path.
    void backward(Value loss) {
        Node& ln = node(loss.id);
        if (!ln.needs_grad) throw std::invalid_argument("backward: loss does not depend on any gradient leaf");
        ensure_grad(loss.id);
        if (ln.grad.size() != 1) throw std::invalid_argument("backward: loss must be a single element");
        ln.grad.data[0] = T(1);
        for (int id = loss.id; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (n.back && !n.grad.data.empty()) {
                n.back(id);
                n.grad.check_finite("backward gradient");
            }
        }
    }

    std::size_t node_count() const { return nodes_.size(); }

    // Hash of every ReLU sign and pool argmax seen by this graph's forwards,
    // in op order. Two evaluations of the same wiring land in the same smooth
    // piece of the function exactly when their signatures agree; finite
    // difference probes use this to reject kink-straddling intervals.
    std::uint64_t activation_signature() const { return act_sig_; }

private:
    struct Node {
        TensorT<T> val;
        TensorT<T> grad;  // empty until touched by backward
        bool needs_grad = false;
        std::function<void(int)> back;  // empty for leaves
    };

    std::vector<Node> nodes_;
    std::uint64_t act_sig_ = 1469598103934665603ull;

    void sig_mix(std::uint64_t v) { act_sig_ = (act_sig_ ^ v) * 1099511628211ull; }

    Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

    bool needs(Value v) const { return node(v.id).needs_grad; }

    void ensure_grad(int id) {
        Node& n = node(id);
        if (n.grad.data.empty()) n.grad = TensorT<T>::zeros(n.val.shape);
    }

    // Gradient buffer for a parent, or nullptr when that parent does not need one.
    TensorT<T>* needs_buf(int id) {
        Node& n = node(id);
        if (!n.needs_grad) return nullptr;
        ensure_grad(id);
        return &n.grad;
    }

    Value push(TensorT<T> val, bool needs_grad, std::function<void(int)> back) {
        nodes_.push_back(Node{std::move(val), {}, needs_grad, std::move(back)});
        return Value{static_cast<int>(nodes_.size()) - 1};
    }
};

using Graph = GraphT<float>;
using GraphValue = Graph::Value;

}  // namespace pathonet
