#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pathonet/tensor.hpp"

namespace pathonet {

// Step decay: lr(epoch) = base * 0.1^floor(epoch / drop_every), epochs counted from 0.
struct LrSchedule {
    double base_lr = 1e-4;
    int drop_every = 10;

    double lr(int epoch) const {
        if (epoch < 0) throw std::invalid_argument("lr schedule: negative epoch");
        if (drop_every <= 0) throw std::invalid_argument("lr schedule: drop_every must be positive");
        return base_lr * std::pow(0.1, static_cast<double>(epoch / drop_every));
    }
};

// Adam with bias correction. One state per parameter tensor; moments are kept
// in double so long runs do not lose the small-update tail.
template <typename T>
struct AdamStateT {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;  // number of updates applied
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamStateT(std::size_t param_count)
        : m(param_count, 0.0), v(param_count, 0.0) {}
};

using AdamState = AdamStateT<float>;

// In-place update of one parameter tensor. Call once per tensor per step with
// the same lr, then advance each state's step counter (done here).
template <typename T>
void adam_step(TensorT<T>& param, const TensorT<T>& grad, AdamStateT<T>& state, double lr) {
    if (param.size() != grad.size()) throw std::invalid_argument("adam: param/grad size mismatch");
    if (param.size() != state.m.size()) throw std::invalid_argument("adam: state size mismatch");
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = static_cast<double>(grad.data[i]);
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        param.data[i] = static_cast<T>(static_cast<double>(param.data[i]) -
                                       lr * mhat / (std::sqrt(vhat) + state.eps));
    }
}

}  // namespace pathonet
