#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathonet/graph.hpp"
#include "pathonet/tensor.hpp"

namespace pathonet {

inline constexpr int kDefaultBaseWidth = 24;

template <typename T>
struct NamedTensorT {
    std::string name;
    TensorT<T> tensor;
};

// One learnable layer of the network plan. Parameter tensors derive from this:
// conv contributes name.w (and name.b when biased), upsample contributes name.w.
struct LayerSpec {
    enum class Kind { conv, upsample };
    Kind kind = Kind::conv;
    std::string name;
    ConvSpec conv;           // kind == conv
    int up_in = 0, up_out = 0;  // kind == upsample (2x2 stride-2 transposed conv)
};

// Stem, three downsampling residual blocks, bottleneck block, three upsampling
// stages with skip adapters and residual blocks, 1x1 head. Layer order here is
// the canonical parameter order for init, checkpoints, and gradient reads.
inline std::vector<LayerSpec> pathonet_plan(const std::vector<int>& widths) {
    if (widths.size() != 4) throw std::invalid_argument("model: need 4 channel widths");
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (widths[i] <= 0) throw std::invalid_argument("model: widths must be positive");
        if (i > 0 && widths[i] != 2 * widths[i - 1])
            throw std::invalid_argument("model: each width must double the previous one");
    }
    const int w1 = widths[0], w2 = widths[1], w3 = widths[2], w4 = widths[3];
    std::vector<LayerSpec> plan;
    auto conv = [&](const std::string& name, int k, int d, int in, int out) {
        plan.push_back(LayerSpec{LayerSpec::Kind::conv, name, ConvSpec::make(k, d, in, out), 0, 0});
    };
    auto up = [&](const std::string& name, int in, int out) {
        plan.push_back(LayerSpec{LayerSpec::Kind::upsample, name, {}, in, out});
    };
    auto enc_block = [&](const std::string& name, int in, int out) {
        conv(name + ".a1", 3, 1, in, out);
        conv(name + ".a2", 3, 1, out, out);
        conv(name + ".b1", 3, 4, in, out);
        conv(name + ".b2", 3, 4, out, out);
    };
    auto dec_block = [&](const std::string& name, int ch) {
        conv(name + ".a1", 3, 1, ch, ch);
        conv(name + ".a2", 3, 1, ch, ch);
        conv(name + ".b1", 3, 4, ch, ch);
        conv(name + ".b2", 3, 4, ch, ch);
        conv(name + ".proj", 1, 1, ch, ch);
    };

    conv("stem.conv1", 3, 1, 3, w1);
    conv("stem.conv2", 3, 1, w1, w1);
    enc_block("enc1", w1, w2);
    enc_block("enc2", w2, w3);
    enc_block("enc3", w3, w4);
    dec_block("decb", w4);
    up("up3", w4, w3);
    conv("skip3", 1, 1, w4, w3);
    dec_block("dec3", w3);
    up("up2", w3, w2);
    conv("skip2", 1, 1, w3, w2);
    dec_block("dec2", w2);
    up("up1", w2, w1);
    conv("skip1", 1, 1, w2, w1);
    dec_block("dec1", w1);
    conv("head.conv1", 1, 1, w1, w1);
    conv("head.conv2", 1, 1, w1, w1);
    conv("head.conv3", 1, 1, w1, 3);
    return plan;
}

inline std::vector<int> widths_from_base(int base_width) {
    return {base_width, 2 * base_width, 4 * base_width, 8 * base_width};
}

// Two-path residual block: path A is two plain 3x3 convolutions, path B two
// dilation-4 3x3 convolutions, and the residual is the channel-duplicated
// input (encoder, out = 2*in) or a 1x1 projection of it (decoder).
struct RdimSpecs {
    bool encoder = true;
    ConvSpec a1, a2, b1, b2, proj;

    static RdimSpecs make(bool encoder, int in_ch, int out_ch) {
        if (encoder && out_ch != 2 * in_ch)
            throw std::invalid_argument("rdim: encoder blocks double their channel count");
        RdimSpecs s;
        s.encoder = encoder;
        s.a1 = ConvSpec::make(3, 1, in_ch, out_ch);
        s.a2 = ConvSpec::make(3, 1, out_ch, out_ch);
        s.b1 = ConvSpec::make(3, 4, in_ch, out_ch);
        s.b2 = ConvSpec::make(3, 4, out_ch, out_ch);
        if (!encoder) s.proj = ConvSpec::make(1, 1, in_ch, out_ch);
        return s;
    }

    // weight/bias tensor count in wire order a1,a2,b1,b2[,proj]
    std::size_t param_count() const { return encoder ? 8 : 10; }
};

template <typename T>
typename GraphT<T>::Value wire_rdim(GraphT<T>& g, const RdimSpecs& s,
                                    const std::vector<typename GraphT<T>::Value>& params,
                                    typename GraphT<T>::Value input) {
    if (params.size() != s.param_count())
        throw std::invalid_argument("rdim: expected " + std::to_string(s.param_count()) + " parameter tensors");
    auto conv = [&](const ConvSpec& c, typename GraphT<T>::Value x, std::size_t at) {
        return g.relu(g.conv2d(x, c, params[at], params[at + 1]));
    };
    auto a = conv(s.a2, conv(s.a1, input, 0), 2);
    auto b = conv(s.b2, conv(s.b1, input, 4), 6);
    auto res = s.encoder ? g.duplicate_channels(input) : conv(s.proj, input, 8);
    return g.add(g.add(a, b), res);
}

template <typename T>
struct RdimBlockT {
    RdimSpecs specs;
    std::vector<TensorT<T>> params;  // wire order: a1.w a1.b a2.w a2.b b1.w b1.b b2.w b2.b [proj.w proj.b]
};

// One block on one CxHxW input, spatial size preserved.
template <typename T>
TensorT<T> rdim_forward(const RdimBlockT<T>& block, const TensorT<T>& input) {
    if (input.rank() != 3 || input.dim(0) != block.specs.a1.in_channels)
        throw std::invalid_argument("rdim: input must be CxHxW with C == in_channels");
    GraphT<T> g;
    std::vector<typename GraphT<T>::Value> vs;
    for (const auto& p : block.params) vs.push_back(g.leaf(p));
    TensorT<T> batched({1, input.dim(0), input.dim(1), input.dim(2)}, input.data);
    auto y = wire_rdim(g, block.specs, vs, g.leaf(batched));
    const TensorT<T>& o = g.value(y);
    return TensorT<T>({o.dim(1), o.dim(2), o.dim(3)}, o.data);
}

template <typename T>
struct ModelParamsT {
    int base_width = 0;
    std::vector<NamedTensorT<T>> params;  // canonical order

    const TensorT<T>& get(const std::string& name) const {
        for (const auto& p : params)
            if (p.name == name) return p.tensor;
        throw std::invalid_argument("model: no parameter named " + name);
    }
    TensorT<T>& get(const std::string& name) {
        for (auto& p : params)
            if (p.name == name) return p.tensor;
        throw std::invalid_argument("model: no parameter named " + name);
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.tensor.size();
        return n;
    }

    // Text form stored in checkpoints; regenerated on load and compared verbatim.
    std::string descriptor() const {
        std::ostringstream os;
        os << "pathonet 1\n";
        os << "base_width " << base_width << "\n";
        for (const auto& p : params) {
            os << "param " << p.name;
            for (int d : p.tensor.shape) os << " " << d;
            os << "\n";
        }
        return os.str();
    }
};

using ModelParams = ModelParamsT<float>;

template <typename T>
ModelParamsT<T> build_pathonet(const std::vector<int>& widths, std::uint64_t seed) {
    ModelParamsT<T> model;
    model.base_width = widths.empty() ? 0 : widths[0];
    std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto he_fill = [&](TensorT<T>& t, int fan_in) {
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (T& v : t.data) v = static_cast<T>(normal(rng) * scale);
    };
    for (const LayerSpec& layer : pathonet_plan(widths)) {
        if (layer.kind == LayerSpec::Kind::conv) {
            const ConvSpec& c = layer.conv;
            TensorT<T> w({c.out_channels, c.in_channels, c.kernel, c.kernel});
            he_fill(w, c.in_channels * c.kernel * c.kernel);
            model.params.push_back({layer.name + ".w", std::move(w)});
            if (c.has_bias)
                model.params.push_back({layer.name + ".b", TensorT<T>::zeros({c.out_channels})});
        } else {
            TensorT<T> w({layer.up_in, layer.up_out, 2, 2});
            // stride-2 2x2 kernels touch each output once per input channel
            he_fill(w, layer.up_in);
            model.params.push_back({layer.name + ".w", std::move(w)});
        }
    }
    return model;
}

template <typename T>
ModelParamsT<T> build_pathonet(int base_width, std::uint64_t seed) {
    return build_pathonet<T>(widths_from_base(base_width), seed);
}

// Parameter tensor names for a plan, canonical order.
inline std::vector<std::string> param_names(const std::vector<LayerSpec>& plan) {
    std::vector<std::string> names;
    for (const LayerSpec& l : plan) {
        names.push_back(l.name + ".w");
        if (l.kind == LayerSpec::Kind::conv && l.conv.has_bias) names.push_back(l.name + ".b");
    }
    return names;
}

// Wires the network graph from already-created parameter leaves (canonical
// order). Shared by inference, training, and gradient-audit code paths.
template <typename T>
typename GraphT<T>::Value wire_pathonet(GraphT<T>& g, const std::vector<LayerSpec>& plan,
                                        const std::vector<typename GraphT<T>::Value>& param_leaves,
                                        typename GraphT<T>::Value input) {
    using Value = typename GraphT<T>::Value;
    const std::vector<std::string> names = param_names(plan);
    if (names.size() != param_leaves.size())
        throw std::invalid_argument("model: expected " + std::to_string(names.size()) + " parameter leaves");
    auto leaf_of = [&](const std::string& name) -> Value {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return param_leaves[i];
        throw std::invalid_argument("model: no parameter named " + name);
    };
    auto spec_of = [&](const std::string& name) -> const LayerSpec& {
        for (const auto& l : plan)
            if (l.name == name) return l;
        throw std::invalid_argument("model: no layer named " + name);
    };
    // all convolutions are ReLU-activated except the final head projection
    auto conv = [&](const std::string& name, Value x, bool act = true) {
        const ConvSpec& c = spec_of(name).conv;
        Value y = g.conv2d(x, c, leaf_of(name + ".w"), leaf_of(name + ".b"));
        return act ? g.relu(y) : y;
    };
    auto up = [&](const std::string& name, Value x) {
        return g.relu(g.upsample2(x, leaf_of(name + ".w")));
    };
    auto block = [&](const std::string& name, Value x, bool encoder) {
        const int in_ch = spec_of(name + ".a1").conv.in_channels;
        const int out_ch = spec_of(name + ".a1").conv.out_channels;
        RdimSpecs rs = RdimSpecs::make(encoder, in_ch, out_ch);
        std::vector<Value> ps;
        for (const char* part : {".a1", ".a2", ".b1", ".b2", ".proj"}) {
            if (encoder && std::string(part) == ".proj") break;
            ps.push_back(leaf_of(name + part + ".w"));
            ps.push_back(leaf_of(name + part + ".b"));
        }
        return wire_rdim(g, rs, ps, x);
    };
    auto enc_block = [&](const std::string& name, Value x) { return block(name, x, true); };
    auto dec_block = [&](const std::string& name, Value x) { return block(name, x, false); };

    Value s = conv("stem.conv2", conv("stem.conv1", input));
    Value e1 = enc_block("enc1", s);
    Value e2 = enc_block("enc2", g.max_pool2(e1));
    Value e3 = enc_block("enc3", g.max_pool2(e2));
    Value d0 = dec_block("decb", g.max_pool2(e3));
    Value d3 = dec_block("dec3", g.add(up("up3", d0), conv("skip3", e3)));
    Value d2 = dec_block("dec2", g.add(up("up2", d3), conv("skip2", e2)));
    Value d1 = dec_block("dec1", g.add(up("up1", d2), conv("skip1", e1)));
    Value h = conv("head.conv2", conv("head.conv1", d1));
    return conv("head.conv3", h, /*act=*/false);
}

template <typename T>
struct ForwardBuildT {
    typename GraphT<T>::Value output;
    std::vector<typename GraphT<T>::Value> param_values;  // same order as ModelParamsT::params
};

// Wires the network into g. With params_need_grad, gradients of every
// parameter are available from param_values after backward().
template <typename T>
ForwardBuildT<T> build_forward(GraphT<T>& g, const ModelParamsT<T>& model,
                               typename GraphT<T>::Value input, bool params_need_grad) {
    ForwardBuildT<T> out;
    out.param_values.reserve(model.params.size());
    for (const auto& p : model.params) out.param_values.push_back(g.leaf(p.tensor, params_need_grad));
    std::vector<LayerSpec> plan = pathonet_plan(widths_from_base(model.base_width));
    out.output = wire_pathonet(g, plan, out.param_values, input);
    return out;
}

// Inference on one CxHxW image (C=3, H and W divisible by 8); returns CxHxW.
template <typename T>
TensorT<T> forward(const ModelParamsT<T>& model, const TensorT<T>& image) {
    if (image.rank() != 3 || image.dim(0) != 3)
        throw std::invalid_argument("forward: image must be 3xHxW, got " + image.shape_str());
    if (image.dim(1) % 8 != 0 || image.dim(2) % 8 != 0)
        throw std::invalid_argument("forward: spatial dims must be divisible by 8");
    TensorT<T> batched({1, 3, image.dim(1), image.dim(2)}, image.data);
    GraphT<T> g;
    auto in = g.leaf(batched, false);
    auto built = build_forward(g, model, in, false);
    const TensorT<T>& o = g.value(built.output);
    return TensorT<T>({o.dim(1), o.dim(2), o.dim(3)}, o.data);
}

}  // namespace pathonet
