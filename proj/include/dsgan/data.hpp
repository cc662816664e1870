#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsgan/rng.hpp"

namespace dsgan {

struct TruthAccess;

// One distantly-labeled sentence. The hidden ground-truth flag exists only
// for synthetic data and is reachable only through TruthAccess, which the
// training path never touches.
class Instance {
public:
    std::string id;
    std::pair<std::string, std::string> pair_id;  // (head entity, tail entity)
    std::string relation;                          // relation name or "NA"
    std::vector<std::size_t> tokens;
    std::size_t head_pos = 0;
    std::size_t tail_pos = 0;

    std::string pair_key() const { return pair_id.first + "\t" + pair_id.second; }

private:
    // nullopt = unknown (real data); true = true positive, false = false positive
    std::optional<bool> truth_;
    friend struct TruthAccess;
};

// Evaluation-only accessor for the planted ground truth.
struct TruthAccess {
    static std::optional<bool> get(const Instance& ins) { return ins.truth_; }
    static void set(Instance& ins, bool true_positive) { ins.truth_ = true_positive; }
    static void clear(Instance& ins) { ins.truth_.reset(); }
};

struct DatasetSplits {
    std::vector<Instance> P;        // noisy positive set
    std::vector<Instance> N_G;      // generator-pretraining negatives
    std::vector<Instance> N_D;      // discriminator negatives
    std::vector<Instance> heldout;  // labeled probes; relation "NA" = negative
};

struct BagSequence {
    std::vector<std::vector<Instance>> bags;
    std::uint64_t seed = 0;
};

struct SynthConfig {
    std::size_t relations = 1;
    std::size_t instances_per_split = 2000;  // |P| = |N_G| = |N_D| = |heldout|
    double noise_rate = 0.3;                 // fraction of P that is false positive
    std::size_t vocab_size = 8000;
    std::size_t background_tokens = 512;  // size of the shared background block
    std::size_t len_min = 8;
    std::size_t len_max = 12;
    std::size_t signal_strength = 3;  // relation-indicative tokens per true positive
    std::uint64_t seed = 1;
};

inline std::pair<std::size_t, std::size_t> truth_stats(const std::vector<Instance>& ins) {
    std::size_t tp = 0, fp = 0;
    for (const auto& i : ins) {
        auto t = TruthAccess::get(i);
        if (!t) throw std::runtime_error("truth_stats: instance " + i.id + " has no truth flag");
        (*t ? tp : fp)++;
    }
    return {tp, fp};
}

// ---------------------------------------------------------------------------
// Bag construction: seeded shuffle of P, then consecutive chunks. The same
// sequence is reused for every adversarial epoch.
// ---------------------------------------------------------------------------

inline BagSequence make_bags(const std::vector<Instance>& P, std::size_t bag_size,
                             std::uint64_t seed) {
    if (P.empty()) throw std::invalid_argument("make_bags: empty positive set");
    if (bag_size < 1) throw std::invalid_argument("make_bags: bag_size must be >= 1");
    std::vector<Instance> shuffled = P;
    Rng rng(seed);
    rng.shuffle(shuffled);
    BagSequence seq;
    seq.seed = seed;
    for (std::size_t i = 0; i < shuffled.size(); i += bag_size) {
        std::size_t end = std::min(i + bag_size, shuffled.size());
        seq.bags.emplace_back(shuffled.begin() + i, shuffled.begin() + end);
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Synthetic dataset with planted ground truth. Vocabulary layout: index 0 is
// padding/unknown, then one 16-token signal block per relation, then two
// entity-mention tokens per pair of P, then a fixed block of common
// background tokens (common enough that a single background word carries no
// class information). True positives carry signal tokens near their entities;
// false positives and negatives get no signal tokens, so within a sentence
// nothing marks a false positive.
// Noise is planted at the entity-pair level: all sentences of a noisy pair
// are false.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kSignalBlock = 16;

inline std::string synth_relation_name(std::size_t r) {
    return "rel_" + std::to_string(r);
}

namespace detail {

struct SynthLayout {
    std::size_t background_base = 0;  // entity tokens sit between signal and this
    std::size_t background_tokens = 0;
};

inline std::size_t background_token(const SynthLayout& lay, Rng& rng) {
    return lay.background_base + rng.below(lay.background_tokens);
}

inline std::size_t signal_token(std::size_t relation, Rng& rng) {
    return 1 + relation * kSignalBlock + rng.below(kSignalBlock);
}

// Entity mentions are tokens too: every sentence of a pair carries the same
// head and tail token at its entity positions, like real text does.
struct PairTokens {
    std::size_t head = 0, tail = 0;
};

inline Instance make_sentence(const SynthConfig& cfg, const SynthLayout& lay, Rng& rng,
                              const std::string& id, const std::string& head,
                              const std::string& tail, PairTokens mention,
                              const std::string& relation, bool with_signal,
                              std::size_t signal_relation) {
    Instance ins;
    ins.id = id;
    ins.pair_id = {head, tail};
    ins.relation = relation;
    std::size_t n = cfg.len_min + rng.below(cfg.len_max - cfg.len_min + 1);
    ins.tokens.resize(n);
    for (auto& t : ins.tokens) t = background_token(lay, rng);
    ins.head_pos = rng.below(n);
    do {
        ins.tail_pos = rng.below(n);
    } while (ins.tail_pos == ins.head_pos);
    ins.tokens[ins.head_pos] = mention.head;
    ins.tokens[ins.tail_pos] = mention.tail;
    if (with_signal) {
        // signal tokens land within +-2 tokens of either entity; retry when a
        // draw collides with an entity slot so every sentence keeps its signal
        static const int offsets[4] = {-2, -1, 1, 2};
        for (std::size_t s = 0; s < cfg.signal_strength; ++s) {
            for (int attempt = 0; attempt < 16; ++attempt) {
                std::size_t anchor = rng.bernoulli(0.5) ? ins.head_pos : ins.tail_pos;
                int off = offsets[rng.below(4)];
                std::int64_t pos = static_cast<std::int64_t>(anchor) + off;
                if (pos < 0) pos = 0;
                if (pos >= static_cast<std::int64_t>(n)) pos = static_cast<std::int64_t>(n) - 1;
                auto upos = static_cast<std::size_t>(pos);
                if (upos == ins.head_pos || upos == ins.tail_pos) continue;
                ins.tokens[upos] = signal_token(signal_relation, rng);
                break;
            }
        }
    }
    return ins;
}

}  // namespace detail

inline DatasetSplits synth_generate(const SynthConfig& cfg) {
    if (cfg.relations < 1 || cfg.instances_per_split < 1)
        throw std::invalid_argument("synth_generate: empty config");
    if (cfg.noise_rate < 0.0 || cfg.noise_rate >= 0.5)
        throw std::invalid_argument("synth_generate: noise_rate must be in [0, 0.5)");
    if (cfg.len_min < 3 || cfg.len_max < cfg.len_min)
        throw std::invalid_argument("synth_generate: bad sentence length range");

    Rng rng(cfg.seed);

    // First pass: plan the pair partition of P so the entity-mention token
    // region can be sized before any sentence is emitted. Each pair in P gets
    // two tokens of its own; mentions thus recur across a pair's sentences.
    struct PlannedPair {
        std::size_t relation = 0;
        std::size_t size = 0;
        bool true_positive = true;
    };
    std::vector<PlannedPair> plan;
    const std::size_t total_fp = static_cast<std::size_t>(
        std::llround(cfg.noise_rate * static_cast<double>(cfg.instances_per_split)));
    std::size_t fp_left = total_fp;
    std::size_t p_left = cfg.instances_per_split;
    for (std::size_t r = 0; r < cfg.relations; ++r) {
        std::size_t quota = cfg.instances_per_split / cfg.relations;
        if (r == cfg.relations - 1) quota = p_left;
        p_left -= quota;
        std::size_t fp_quota = std::min(fp_left, r == cfg.relations - 1
                                                     ? fp_left
                                                     : total_fp / cfg.relations);
        fp_left -= fp_quota;
        std::size_t tp_quota = quota - fp_quota;
        auto plan_pairs = [&](std::size_t count, bool true_positive) {
            while (count > 0) {
                std::size_t size = std::min<std::size_t>(1 + rng.below(3), count);
                plan.push_back({r, size, true_positive});
                count -= size;
            }
        };
        plan_pairs(tp_quota, true);
        plan_pairs(fp_quota, false);
    }

    detail::SynthLayout lay;
    lay.background_tokens = cfg.background_tokens;
    std::size_t entity_base = 1 + cfg.relations * kSignalBlock;
    lay.background_base = entity_base + 2 * plan.size();
    if (cfg.background_tokens < 64)
        throw std::invalid_argument("synth_generate: background_tokens must be >= 64");
    if (cfg.vocab_size < lay.background_base + cfg.background_tokens)
        throw std::invalid_argument(
            "synth_generate: vocab too small for disjoint signal, entity and "
            "background blocks");

    DatasetSplits out;
    std::size_t next_id = 0;
    std::size_t next_pair = 0;
    auto fresh_id = [&] {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "s%06zu", next_id++);
        return std::string(buf);
    };

    for (std::size_t pi = 0; pi < plan.size(); ++pi) {
        const auto& pp = plan[pi];
        std::string head = "h" + std::to_string(next_pair);
        std::string tail = "t" + std::to_string(next_pair);
        ++next_pair;
        detail::PairTokens mention{entity_base + 2 * pi, entity_base + 2 * pi + 1};
        for (std::size_t s = 0; s < pp.size; ++s) {
            Instance ins = detail::make_sentence(cfg, lay, rng, fresh_id(), head, tail,
                                                 mention,
                                                 synth_relation_name(pp.relation),
                                                 pp.true_positive, pp.relation);
            TruthAccess::set(ins, pp.true_positive);
            out.P.push_back(std::move(ins));
        }
    }

    // negatives and held-out probes mention background-token entities
    auto emit_negatives = [&](std::vector<Instance>& dst, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            std::string head = "h" + std::to_string(next_pair);
            std::string tail = "t" + std::to_string(next_pair);
            ++next_pair;
            detail::PairTokens mention{detail::background_token(lay, rng),
                                       detail::background_token(lay, rng)};
            Instance ins = detail::make_sentence(cfg, lay, rng, fresh_id(), head, tail,
                                                 mention, "NA", false, 0);
            TruthAccess::set(ins, false);
            dst.push_back(std::move(ins));
        }
    };
    emit_negatives(out.N_G, cfg.instances_per_split);
    emit_negatives(out.N_D, cfg.instances_per_split);

    // held-out probes: half signal positives (round-robin over relations), half NA
    std::size_t pos_count = cfg.instances_per_split / 2;
    for (std::size_t i = 0; i < pos_count; ++i) {
        std::size_t r = i % cfg.relations;
        std::string head = "h" + std::to_string(next_pair);
        std::string tail = "t" + std::to_string(next_pair);
        ++next_pair;
        detail::PairTokens mention{detail::background_token(lay, rng),
                                   detail::background_token(lay, rng)};
        Instance ins = detail::make_sentence(cfg, lay, rng, fresh_id(), head, tail,
                                             mention, synth_relation_name(r), true, r);
        TruthAccess::set(ins, true);
        out.heldout.push_back(std::move(ins));
    }
    emit_negatives(out.heldout, cfg.instances_per_split - pos_count);
    return out;
}

// ---------------------------------------------------------------------------
// Dataset directory: P.jsonl, NG.jsonl, ND.jsonl, heldout.jsonl plus a
// truth.tsv sidecar ("id<TAB>tp|fp") that only evaluation code consumes.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json instance_to_json(const Instance& ins) {
    return nlohmann::json{{"id", ins.id},
                          {"pair_id", {ins.pair_id.first, ins.pair_id.second}},
                          {"relation", ins.relation},
                          {"tokens", ins.tokens},
                          {"head_pos", ins.head_pos},
                          {"tail_pos", ins.tail_pos}};
}

inline Instance instance_from_json(const nlohmann::json& j) {
    Instance ins;
    ins.id = j.at("id").get<std::string>();
    auto pair = j.at("pair_id");
    ins.pair_id = {pair.at(0).get<std::string>(), pair.at(1).get<std::string>()};
    ins.relation = j.at("relation").get<std::string>();
    ins.tokens = j.at("tokens").get<std::vector<std::size_t>>();
    ins.head_pos = j.at("head_pos").get<std::size_t>();
    ins.tail_pos = j.at("tail_pos").get<std::size_t>();
    if (ins.head_pos == ins.tail_pos || ins.head_pos >= ins.tokens.size() ||
        ins.tail_pos >= ins.tokens.size())
        throw std::runtime_error("instance " + ins.id + ": bad entity positions");
    return ins;
}

inline void write_jsonl(const std::filesystem::path& path,
                        const std::vector<Instance>& ins) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    for (const auto& i : ins) os << instance_to_json(i).dump() << "\n";
}

inline std::vector<Instance> read_jsonl(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::vector<Instance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(instance_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": " + e.what());
        }
    }
    return out;
}

}  // namespace detail

inline void save_dataset(const DatasetSplits& splits, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    detail::write_jsonl(dir / "P.jsonl", splits.P);
    detail::write_jsonl(dir / "NG.jsonl", splits.N_G);
    detail::write_jsonl(dir / "ND.jsonl", splits.N_D);
    detail::write_jsonl(dir / "heldout.jsonl", splits.heldout);
    std::ofstream truth(dir / "truth.tsv", std::ios::binary);
    auto dump_truth = [&](const std::vector<Instance>& ins) {
        for (const auto& i : ins)
            if (auto t = TruthAccess::get(i))
                truth << i.id << "\t" << (*t ? "tp" : "fp") << "\n";
    };
    dump_truth(splits.P);
    dump_truth(splits.N_G);
    dump_truth(splits.N_D);
    dump_truth(splits.heldout);
}

inline DatasetSplits load_dataset(const std::filesystem::path& dir,
                                  bool with_truth = true) {
    DatasetSplits splits;
    splits.P = detail::read_jsonl(dir / "P.jsonl");
    splits.N_G = detail::read_jsonl(dir / "NG.jsonl");
    splits.N_D = detail::read_jsonl(dir / "ND.jsonl");
    splits.heldout = detail::read_jsonl(dir / "heldout.jsonl");

    std::set<std::string> seen;
    auto check_ids = [&](const std::vector<Instance>& ins, const char* name) {
        for (const auto& i : ins)
            if (!seen.insert(i.id).second)
                throw std::runtime_error(std::string("duplicate instance id ") + i.id +
                                         " in " + name);
    };
    check_ids(splits.P, "P");
    check_ids(splits.N_G, "N_G");  // also rejects N_G/N_D overlap by id
    check_ids(splits.N_D, "N_D");
    check_ids(splits.heldout, "heldout");

    if (with_truth && std::filesystem::exists(dir / "truth.tsv")) {
        std::map<std::string, bool> flags;
        std::ifstream is(dir / "truth.tsv");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto tab = line.find('\t');
            std::string tag = tab == std::string::npos ? "" : line.substr(tab + 1);
            if (tab == std::string::npos || (tag != "tp" && tag != "fp"))
                throw std::runtime_error("truth.tsv:" + std::to_string(lineno) +
                                         ": malformed line");
            flags[line.substr(0, tab)] = (tag == "tp");
        }
        auto apply = [&](std::vector<Instance>& ins) {
            for (auto& i : ins) {
                auto it = flags.find(i.id);
                if (it != flags.end()) TruthAccess::set(i, it->second);
            }
        };
        apply(splits.P);
        apply(splits.N_G);
        apply(splits.N_D);
        apply(splits.heldout);
    }
    return splits;
}

// Vocabulary file: "token<TAB>index" lines.
inline std::map<std::string, std::size_t> load_vocab(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read vocabulary " + path.string());
    std::map<std::string, std::size_t> vocab;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected token<TAB>index");
        vocab[line.substr(0, tab)] = std::stoul(line.substr(tab + 1));
    }
    return vocab;
}

}  // namespace dsgan
