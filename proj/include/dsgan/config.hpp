#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsgan/adversary.hpp"
#include "dsgan/data.hpp"
#include "dsgan/encoder.hpp"
#include "dsgan/eval.hpp"
#include "dsgan/pretrain.hpp"

namespace dsgan {

// bad config or missing input -> CLI exit code 2
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat "section.key = value" run configuration. Every field has a default;
// unknown keys are rejected. The parsed file is copied verbatim into the
// run's output directory for provenance.
struct RunConfig {
    std::uint64_t seed = 1;
    std::vector<std::string> relations;  // empty = every relation found in P

    EncoderConfig encoder;
    SynthConfig synth;
    PretrainConfig pretrain;
    AdversaryConfig adversary;
    DownstreamConfig downstream;

    std::size_t bag_size = 64;
    double clean_threshold = 0.5;
    std::size_t eval_seeds = 5;
    std::size_t experiment_m = 0;  // 0 = |P|/2
    // The positive-set experiment compares learning speed, so it trains in
    // the early regime where set composition still matters; the downstream
    // AUC comparison trains closer to convergence.
    DownstreamConfig experiment_downstream{4, 32, 0.02};

    std::string data_dir;         // dataset directory (synth output or external)
    std::string checkpoints_dir;  // pretrain output, train input
    std::string train_dir;        // train output, clean/eval/experiment input
    std::string clean_dir;        // cleaned dataset, eval input

    // fixed per-phase seed offsets so phases rerun independently
    std::uint64_t synth_seed() const { return seed; }
    std::uint64_t pretrain_d_seed() const { return seed + 1; }
    std::uint64_t pretrain_g_seed() const { return seed + 2; }
    std::uint64_t bag_seed() const { return seed + 3; }
    std::uint64_t adversary_seed() const { return seed + 4; }
    std::uint64_t eval_seed(std::size_t i) const { return seed + 100 + i; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
inline T parse_number(const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    T out;
    std::string rest;
    ss >> out;
    bool ok = !ss.fail();
    ss >> rest;
    if (!ok || !rest.empty() || value.empty())
        throw InputError("config: bad value for " + key + ": '" + value + "'");
    return out;
}

}  // namespace detail

inline void apply_config_line(RunConfig& cfg, const std::string& key,
                              const std::string& value) {
    using Setter = std::function<void(RunConfig&, const std::string&)>;
    auto num = [](auto member) {
        return [member](RunConfig& c, const std::string& v) {
            using T = std::decay_t<decltype(c.*member)>;
            c.*member = detail::parse_number<T>("", v);
        };
    };
    auto sub = [](auto submember, auto member) {
        return [submember, member](RunConfig& c, const std::string& v) {
            using T = std::decay_t<decltype((c.*submember).*member)>;
            (c.*submember).*member = detail::parse_number<T>("", v);
        };
    };
    static const std::map<std::string, Setter> setters = {
        {"seed", num(&RunConfig::seed)},
        {"bag_size", num(&RunConfig::bag_size)},
        {"cleaner.threshold", num(&RunConfig::clean_threshold)},
        {"eval.seeds", num(&RunConfig::eval_seeds)},
        {"experiment.m", num(&RunConfig::experiment_m)},
        {"experiment.epochs",
         sub(&RunConfig::experiment_downstream, &DownstreamConfig::epochs)},
        {"experiment.batch_size",
         sub(&RunConfig::experiment_downstream, &DownstreamConfig::batch_size)},
        {"experiment.lr",
         sub(&RunConfig::experiment_downstream, &DownstreamConfig::lr)},
        {"paths.data", [](RunConfig& c, const std::string& v) { c.data_dir = v; }},
        {"paths.checkpoints",
         [](RunConfig& c, const std::string& v) { c.checkpoints_dir = v; }},
        {"paths.train", [](RunConfig& c, const std::string& v) { c.train_dir = v; }},
        {"paths.clean", [](RunConfig& c, const std::string& v) { c.clean_dir = v; }},
        {"relations",
         [](RunConfig& c, const std::string& v) {
             c.relations.clear();
             std::istringstream ss(v);
             std::string r;
             while (std::getline(ss, r, ',')) {
                 r = detail::trim(r);
                 if (!r.empty()) c.relations.push_back(r);
             }
         }},
        {"encoder.word_dim", sub(&RunConfig::encoder, &EncoderConfig::word_dim)},
        {"encoder.position_dim", sub(&RunConfig::encoder, &EncoderConfig::position_dim)},
        {"encoder.window", sub(&RunConfig::encoder, &EncoderConfig::window)},
        {"encoder.kernels", sub(&RunConfig::encoder, &EncoderConfig::kernels)},
        {"encoder.max_distance", sub(&RunConfig::encoder, &EncoderConfig::max_distance)},
        {"encoder.vocab_size", sub(&RunConfig::encoder, &EncoderConfig::vocab_size)},
        {"synth.relations", sub(&RunConfig::synth, &SynthConfig::relations)},
        {"synth.instances_per_split",
         sub(&RunConfig::synth, &SynthConfig::instances_per_split)},
        {"synth.noise_rate", sub(&RunConfig::synth, &SynthConfig::noise_rate)},
        {"synth.vocab_size", sub(&RunConfig::synth, &SynthConfig::vocab_size)},
        {"synth.background_tokens",
         sub(&RunConfig::synth, &SynthConfig::background_tokens)},
        {"synth.len_min", sub(&RunConfig::synth, &SynthConfig::len_min)},
        {"synth.len_max", sub(&RunConfig::synth, &SynthConfig::len_max)},
        {"synth.signal_strength", sub(&RunConfig::synth, &SynthConfig::signal_strength)},
        {"pretrain.max_epochs", sub(&RunConfig::pretrain, &PretrainConfig::max_epochs)},
        {"pretrain.batch_size", sub(&RunConfig::pretrain, &PretrainConfig::batch_size)},
        {"pretrain.lr", sub(&RunConfig::pretrain, &PretrainConfig::lr)},
        {"pretrain.target_accuracy",
         sub(&RunConfig::pretrain, &PretrainConfig::target_accuracy)},
        {"pretrain.target_mean_prob",
         sub(&RunConfig::pretrain, &PretrainConfig::target_mean_prob)},
        {"pretrain.heldout_fraction",
         sub(&RunConfig::pretrain, &PretrainConfig::heldout_fraction)},
        {"pretrain.eval_every_batches",
         sub(&RunConfig::pretrain, &PretrainConfig::eval_every_batches)},
        {"adversary.eta", sub(&RunConfig::adversary, &AdversaryConfig::eta)},
        {"adversary.baseline_decay",
         sub(&RunConfig::adversary, &AdversaryConfig::baseline_decay)},
        {"adversary.lr_g", sub(&RunConfig::adversary, &AdversaryConfig::lr_G)},
        {"adversary.lr_d", sub(&RunConfig::adversary, &AdversaryConfig::lr_D)},
        {"adversary.max_epochs", sub(&RunConfig::adversary, &AdversaryConfig::max_epochs)},
        {"adversary.patience", sub(&RunConfig::adversary, &AdversaryConfig::patience)},
        {"eval.epochs", sub(&RunConfig::downstream, &DownstreamConfig::epochs)},
        {"eval.batch_size", sub(&RunConfig::downstream, &DownstreamConfig::batch_size)},
        {"eval.lr", sub(&RunConfig::downstream, &DownstreamConfig::lr)},
    };
    auto it = setters.find(key);
    if (it == setters.end()) throw InputError("config: unknown key '" + key + "'");
    try {
        it->second(cfg, value);
    } catch (const InputError&) {
        throw InputError("config: bad value for " + key + ": '" + value + "'");
    }
}

inline RunConfig parse_config(std::istream& is) {
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) +
                             ": expected key = value");
        apply_config_line(cfg, detail::trim(t.substr(0, eq)),
                          detail::trim(t.substr(eq + 1)));
    }
    // keep encoder vocab in sync with synthetic vocab unless set explicitly
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot read config file " + path.string());
    return parse_config(is);
}

}  // namespace dsgan
