#pragma once

#include <cctype>
#include <cstdlib>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathonet/density.hpp"
#include "pathonet/metrics.hpp"
#include "pathonet/optim.hpp"
#include "pathonet/postprocess.hpp"

namespace pathonet {

// Every tunable of the pipeline in one flat document. Files hold "key value"
// lines; precedence is defaults, then file, then PATHONET_* environment
// variables, then command-line flags.
struct RunConfig {
    int base_width = 24;

    float sigma2 = 9.0f;
    float peak = 255.0f;
    float center_value = 2250.0f;

    float threshold_immunopositive = 120.0f;
    float threshold_immunonegative = 180.0f;
    float threshold_lymphocyte = 40.0f;
    float min_separation = 5.0f;
    std::string seed_source = "distance_transform";

    double match_radius = 6.0;

    int epochs = 100;
    int batch_size = 1;
    double base_lr = 1e-4;
    int lr_drop_every = 10;
    bool augment = true;
    long max_steps = 0;

    int tile = 256;
    double train_fraction = 0.8;

    long seed = -1;  // unset; randomized subcommands demand an explicit value
    int threads = 0;  // 0 = logical cores

    LabelRenderConfig label_config() const {
        LabelRenderConfig c;
        c.sigma2 = sigma2;
        c.peak = peak;
        c.center_value = center_value;
        c.validate();
        return c;
    }

    PostprocessConfig postprocess_config() const {
        PostprocessConfig c;
        c.thresholds = {threshold_immunopositive, threshold_immunonegative,
                        threshold_lymphocyte};
        c.min_separation = min_separation;
        if (seed_source == "distance_transform")
            c.seed_source = SeedSource::distance_transform;
        else if (seed_source == "density_map")
            c.seed_source = SeedSource::density_map;
        else
            throw std::invalid_argument("config: seed_source must be distance_transform or "
                                        "density_map, got '" + seed_source + "'");
        c.validate();
        return c;
    }

    MatchConfig match_config() const {
        MatchConfig c;
        c.radius = match_radius;
        c.validate();
        return c;
    }

    LrSchedule lr_schedule() const {
        LrSchedule s;
        s.base_lr = base_lr;
        s.drop_every = lr_drop_every;
        if (s.base_lr <= 0.0) throw std::invalid_argument("config: base_lr must be positive");
        if (s.drop_every < 1) throw std::invalid_argument("config: lr_drop_every must be >= 1");
        return s;
    }

    void validate() const {
        if (base_width < 1) throw std::invalid_argument("config: base_width must be >= 1");
        label_config();
        postprocess_config();
        match_config();
        lr_schedule();
        if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
        if (max_steps < 0) throw std::invalid_argument("config: max_steps must be >= 0");
        if (tile < 32) throw std::invalid_argument("config: tile must be >= 32");
        if (train_fraction < 0.0 || train_fraction > 1.0)
            throw std::invalid_argument("config: train_fraction must be in [0,1]");
        if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
    }
};

namespace detail {

inline bool parse_bool_token(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw std::invalid_argument("config: bad boolean '" + s + "' for " + key);
}

template <typename T>
T parse_number_token(const std::string& s, const std::string& key) {
    std::istringstream is(s);
    T v{};
    is >> v;
    if (!is || is.peek() != std::istream::traits_type::eof())
        throw std::invalid_argument("config: bad value '" + s + "' for " + key);
    return v;
}

}  // namespace detail

struct RunConfigKey {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> apply;
};

inline const std::vector<RunConfigKey>& runconfig_keys() {
    auto num = [](auto member) {
        return [member](RunConfig& rc, const std::string& v) {
            rc.*member = detail::parse_number_token<std::decay_t<decltype(rc.*member)>>(
                v, "value");
        };
    };
    static const std::vector<RunConfigKey> keys = {
        {"base_width", num(&RunConfig::base_width)},
        {"sigma2", num(&RunConfig::sigma2)},
        {"peak", num(&RunConfig::peak)},
        {"center_value", num(&RunConfig::center_value)},
        {"threshold_immunopositive", num(&RunConfig::threshold_immunopositive)},
        {"threshold_immunonegative", num(&RunConfig::threshold_immunonegative)},
        {"threshold_lymphocyte", num(&RunConfig::threshold_lymphocyte)},
        {"min_separation", num(&RunConfig::min_separation)},
        {"seed_source", [](RunConfig& rc, const std::string& v) { rc.seed_source = v; }},
        {"match_radius", num(&RunConfig::match_radius)},
        {"epochs", num(&RunConfig::epochs)},
        {"batch_size", num(&RunConfig::batch_size)},
        {"base_lr", num(&RunConfig::base_lr)},
        {"lr_drop_every", num(&RunConfig::lr_drop_every)},
        {"augment",
         [](RunConfig& rc, const std::string& v) {
             rc.augment = detail::parse_bool_token(v, "augment");
         }},
        {"max_steps", num(&RunConfig::max_steps)},
        {"tile", num(&RunConfig::tile)},
        {"train_fraction", num(&RunConfig::train_fraction)},
        {"seed", num(&RunConfig::seed)},
        {"threads", num(&RunConfig::threads)},
    };
    return keys;
}

inline void apply_runconfig_entry(RunConfig& rc, const std::string& key,
                                  const std::string& value) {
    for (const auto& k : runconfig_keys()) {
        if (k.name == key) {
            try {
                k.apply(rc, value);
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument("config: bad value '" + value + "' for key '" +
                                            key + "'");
            }
            return;
        }
    }
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

// "key value" per line; blank lines and # comments are skipped.
inline void parse_runconfig(std::istream& in, RunConfig& rc, const std::string& origin) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        std::string value, extra;
        if (!(ls >> value))
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": key '" + key + "' has no value");
        if (ls >> extra)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": trailing content after value for '" + key + "'");
        try {
            apply_runconfig_entry(rc, key, value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " +
                                        e.what());
        }
    }
}

// PATHONET_<KEY> (key upper-cased) overrides the matching entry when set.
inline void apply_env_overrides(
    RunConfig& rc,
    const std::function<const char*(const std::string&)>& getenv_fn = [](const std::string& n) {
        return std::getenv(n.c_str());
    }) {
    for (const auto& k : runconfig_keys()) {
        std::string env_name = "PATHONET_";
        for (char c : k.name)
            env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = getenv_fn(env_name)) apply_runconfig_entry(rc, k.name, v);
    }
}

}  // namespace pathonet
