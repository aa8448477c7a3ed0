#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathonet/density.hpp"
#include "pathonet/model.hpp"
#include "pathonet/tensor.hpp"

namespace pathonet {

// Checkpoint layout: "PNET", u32 version, u32 descriptor length, descriptor
// text, then each parameter tensor's float32 data in canonical order. The
// descriptor carries names and shapes, so a checkpoint is self-describing.
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const ModelParams& model, const std::string& path) {
    static_assert(sizeof(float) == 4);
    const std::string desc = model.descriptor();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
    os.write("PNET", 4);
    detail::put_u32(os, kCheckpointVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(desc.size()));
    os.write(desc.data(), static_cast<std::streamsize>(desc.size()));
    for (const auto& p : model.params)
        os.write(reinterpret_cast<const char*>(p.tensor.data.data()),
                 static_cast<std::streamsize>(p.tensor.data.size() * sizeof(float)));
    os.flush();
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4] = {};
    if (!is.read(magic, 4) || std::memcmp(magic, "PNET", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const std::uint32_t version = detail::get_u32(is, "version");
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t desc_len = detail::get_u32(is, "descriptor length");
    if (desc_len == 0 || desc_len > 1u << 20)
        throw std::runtime_error("checkpoint: implausible descriptor length in " + path);
    std::string desc(desc_len, '\0');
    if (!is.read(desc.data(), desc_len))
        throw std::runtime_error("checkpoint: truncated descriptor in " + path);

    ModelParams model;
    std::istringstream ds(desc);
    std::string line;
    int lineno = 0;
    while (std::getline(ds, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string head;
        ls >> head;
        if (head == "pathonet") {
            int v = -1;
            ls >> v;
            if (!ls || v != 1)
                throw std::runtime_error("checkpoint: unsupported descriptor header in " + path);
        } else if (head == "base_width") {
            ls >> model.base_width;
            if (!ls) throw std::runtime_error("checkpoint: bad base_width in " + path);
        } else if (head == "param") {
            NamedTensorT<float> p;
            ls >> p.name;
            std::vector<int> shape;
            int d;
            while (ls >> d) shape.push_back(d);
            if (p.name.empty() || shape.empty())
                throw std::runtime_error("checkpoint: bad param line " + std::to_string(lineno) +
                                         " in " + path);
            p.tensor = Tensor::zeros(shape);
            model.params.push_back(std::move(p));
        } else if (!head.empty()) {
            throw std::runtime_error("checkpoint: unknown descriptor entry '" + head + "' in " +
                                     path);
        }
    }
    if (model.params.empty())
        throw std::runtime_error("checkpoint: descriptor lists no parameters in " + path);

    for (auto& p : model.params)
        if (!is.read(reinterpret_cast<char*>(p.tensor.data.data()),
                     static_cast<std::streamsize>(p.tensor.data.size() * sizeof(float))))
            throw std::runtime_error("checkpoint: truncated data in " + path);
    char probe;
    if (is.read(&probe, 1)) throw std::runtime_error("checkpoint: trailing data in " + path);

    // The regenerated descriptor must match what was stored, byte for byte.
    if (model.descriptor() != desc)
        throw std::runtime_error("checkpoint: descriptor does not round-trip in " + path);
    for (const auto& p : model.params) p.tensor.check_finite(("parameter " + p.name).c_str());
    return model;
}

}  // namespace pathonet
