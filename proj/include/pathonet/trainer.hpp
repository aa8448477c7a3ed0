#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathonet/dataset.hpp"
#include "pathonet/graph.hpp"
#include "pathonet/model.hpp"
#include "pathonet/optim.hpp"

namespace pathonet {

struct TrainSample {
    Tensor image;  // 3xHxW, values in [0,1]
    Tensor label;  // 3xHxW density map, raw scale
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 1;
    LrSchedule schedule;
    std::uint64_t seed = 0;
    bool augment = true;  // six symmetry variants per sample, resampled each epoch
    long max_steps = 0;   // stop after this many optimizer steps; 0 = no cap

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("train: epoch count must be positive");
        if (batch_size < 1) throw std::invalid_argument("train: batch size must be positive");
        if (max_steps < 0) throw std::invalid_argument("train: negative step cap");
    }
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
    long steps = 0;  // optimizer steps taken this epoch
};

namespace detail {

inline void check_sample(const TrainSample& s, std::size_t i) {
    const auto bad = [&](const std::string& why) {
        throw std::invalid_argument("train: sample " + std::to_string(i) + " " + why);
    };
    if (s.image.rank() != 3 || s.image.dim(0) != 3) bad("image must be 3xHxW");
    if (s.label.shape != s.image.shape) bad("label shape must match the image");
    if (s.image.dim(1) % 8 != 0 || s.image.dim(2) % 8 != 0)
        bad("height and width must be divisible by 8");
}

inline Tensor stack_batch(const std::vector<Tensor>& items) {
    if (items.empty()) throw std::invalid_argument("stack_batch: empty batch");
    const Tensor& first = items.front();
    if (first.rank() != 3) throw std::invalid_argument("stack_batch: items must be CxHxW");
    for (const Tensor& t : items)
        if (!t.same_shape(first))
            throw std::invalid_argument("stack_batch: mixed shapes " + first.shape_str() +
                                        " vs " + t.shape_str());
    Tensor out({static_cast<int>(items.size()), first.dim(0), first.dim(1), first.dim(2)});
    std::size_t off = 0;
    for (const Tensor& t : items) {
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
        off += t.size();
    }
    return out;
}

}  // namespace detail

// One Adam update on a batch; returns the batch MSE. Optimizer states must be
// aligned with model.params.
inline double train_step(ModelParams& model, std::vector<AdamState>& opt, const Tensor& images,
                         const Tensor& labels, double lr) {
    if (opt.size() != model.params.size())
        throw std::invalid_argument("train: optimizer state count mismatch");
    GraphT<float> g;
    auto input = g.leaf(images);
    auto target = g.leaf(labels);
    auto fb = build_forward(g, model, input, /*params_need_grad=*/true);
    auto loss = g.mse(fb.output, target);
    g.backward(loss);
    for (std::size_t i = 0; i < model.params.size(); ++i)
        adam_step(model.params[i].tensor, g.grad(fb.param_values[i]), opt[i], lr);
    return static_cast<double>(g.value(loss).data[0]);
}

// Mean MSE over the plain (un-augmented) samples with the current weights.
inline double dataset_loss(const ModelParams& model, const std::vector<TrainSample>& data) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        detail::check_sample(data[i], i);
        GraphT<float> g;
        auto input = g.leaf(detail::stack_batch({data[i].image}));
        auto target = g.leaf(detail::stack_batch({data[i].label}));
        auto fb = build_forward(g, model, input, /*params_need_grad=*/false);
        acc += static_cast<double>(g.value(g.mse(fb.output, target)).data[0]);
    }
    return acc / static_cast<double>(data.size());
}

// Epoch loop: each epoch visits every sample/variant pair once in a seeded
// shuffled order, batching as configured. Logs one line per epoch with the
// learning rate from the schedule and the mean step loss.
inline std::vector<EpochLog> train(ModelParams& model, const std::vector<TrainSample>& data,
                                   const TrainConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    for (std::size_t i = 0; i < data.size(); ++i) {
        detail::check_sample(data[i], i);
        if (cfg.augment && data[i].image.dim(1) != data[i].image.dim(2))
            throw std::invalid_argument("train: augmentation needs square tiles, sample " +
                                        std::to_string(i) + " is " + data[i].image.shape_str());
    }

    std::vector<AdamState> opt;
    opt.reserve(model.params.size());
    for (const auto& p : model.params) opt.emplace_back(p.tensor.size());

    struct Item {
        int sample;
        Dihedral variant;
    };
    std::vector<Item> items;
    for (std::size_t s = 0; s < data.size(); ++s) {
        if (cfg.augment) {
            for (Dihedral d : kAugmentVariants) items.push_back({static_cast<int>(s), d});
        } else {
            items.push_back({static_cast<int>(s), Dihedral::identity});
        }
    }

    std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed));
    std::vector<EpochLog> logs;
    long steps_done = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(items.begin(), items.end(), rng);
        const double lr = cfg.schedule.lr(epoch);
        double loss_acc = 0.0;
        long epoch_steps = 0;
        for (std::size_t at = 0; at < items.size();) {
            if (cfg.max_steps > 0 && steps_done >= cfg.max_steps) break;
            std::vector<Tensor> imgs, labs;
            for (int b = 0; b < cfg.batch_size && at < items.size(); ++b, ++at) {
                const Item& it = items[at];
                const TrainSample& s = data[static_cast<std::size_t>(it.sample)];
                imgs.push_back(apply_dihedral(s.image, it.variant));
                labs.push_back(apply_dihedral(s.label, it.variant));
            }
            loss_acc += train_step(model, opt, detail::stack_batch(imgs),
                                   detail::stack_batch(labs), lr);
            ++steps_done;
            ++epoch_steps;
        }
        if (epoch_steps == 0) break;
        EpochLog el;
        el.epoch = epoch;
        el.lr = lr;
        el.mean_loss = loss_acc / static_cast<double>(epoch_steps);
        el.steps = epoch_steps;
        logs.push_back(el);
        if (log) (*log) << "epoch " << epoch << " lr " << lr << " loss " << el.mean_loss << "\n";
        if (cfg.max_steps > 0 && steps_done >= cfg.max_steps) break;
    }
    return logs;
}

}  // namespace pathonet
