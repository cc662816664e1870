#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsgan/data.hpp"
#include "dsgan/encoder.hpp"
#include "dsgan/params.hpp"
#include "dsgan/rng.hpp"

namespace dsgan {

struct PretrainConfig {
    std::size_t max_epochs = 200;
    std::size_t batch_size = 32;
    double lr = 0.2;
    double target_accuracy = 0.90;   // discriminator stop criterion
    double target_mean_prob = 0.90;  // generator overfit criterion
    double heldout_fraction = 0.1;
    std::size_t eval_every_batches = 20;  // criterion check granularity
};

struct PretrainError : std::runtime_error {
    double best = 0.0;
    PretrainError(const std::string& what, double best_value)
        : std::runtime_error(what), best(best_value) {}
};

struct DiscriminatorPretrain {
    SentenceModel model;
    ParamSnapshot initial;  // reloaded at the start of every adversarial epoch
    double accuracy = 0.0;
};

namespace detail {

inline double heldout_accuracy(const SentenceModel& m,
                               const std::vector<const Instance*>& pos,
                               const std::vector<const Instance*>& neg) {
    std::size_t correct = 0;
    for (const auto* p : pos) correct += (m.predict_prob(*p) >= 0.5);
    for (const auto* n : neg) correct += (m.predict_prob(*n) < 0.5);
    return static_cast<double>(correct) / static_cast<double>(pos.size() + neg.size());
}

inline double mean_prob(const SentenceModel& m, const std::vector<Instance>& ins) {
    double total = 0.0;
    for (const auto& i : ins) total += m.predict_prob(i);
    return total / static_cast<double>(ins.size());
}

}  // namespace detail

// Shared pretraining loop: positives get label 1, negatives label 0,
// balanced half/half batches. `measure` returns the stop metric; it is
// probed every eval_every_batches so training stops close to the target
// instead of overshooting by a whole epoch.
template <typename Measure>
inline double pretrain_loop(SentenceModel& model, const std::vector<Instance>& pos,
                            const std::vector<Instance>& neg, const PretrainConfig& cfg,
                            double target, Rng& rng, Measure measure,
                            const char* what) {
    if (pos.empty() || neg.empty())
        throw std::invalid_argument(std::string(what) + ": empty training split");

    std::vector<const Instance*> pos_ptr, neg_ptr;
    pos_ptr.reserve(pos.size());
    neg_ptr.reserve(neg.size());
    for (const auto& i : pos) pos_ptr.push_back(&i);
    for (const auto& i : neg) neg_ptr.push_back(&i);

    const std::size_t half = std::max<std::size_t>(1, cfg.batch_size / 2);
    double best = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(pos_ptr);
        rng.shuffle(neg_ptr);
        std::size_t steps = std::max(pos_ptr.size(), neg_ptr.size()) / half;
        steps = std::max<std::size_t>(steps, 1);
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<const Instance*> batch;
            std::vector<int> labels;
            for (std::size_t j = 0; j < half; ++j) {
                batch.push_back(pos_ptr[(s * half + j) % pos_ptr.size()]);
                labels.push_back(1);
            }
            for (std::size_t j = 0; j < half; ++j) {
                batch.push_back(neg_ptr[(s * half + j) % neg_ptr.size()]);
                labels.push_back(0);
            }
            model.supervised_step(batch, labels, cfg.lr,
                                  1.0 / static_cast<double>(batch.size()));
            if ((s + 1) % cfg.eval_every_batches == 0 || s + 1 == steps) {
                double metric = measure();
                best = std::max(best, metric);
                if (metric >= target) return metric;
            }
        }
    }
    throw PretrainError(std::string(what) + ": target " + std::to_string(target) +
                            " not reached within " + std::to_string(cfg.max_epochs) +
                            " epochs (best " + std::to_string(best) + ")",
                        best);
}

// Discriminator: P vs N_D with a held-out accuracy criterion. Returns the
// trained model plus the snapshot Algorithm 1 reloads every epoch.
inline DiscriminatorPretrain pretrain_discriminator(const std::vector<Instance>& P,
                                                    const std::vector<Instance>& N_D,
                                                    const PretrainConfig& cfg,
                                                    const EncoderConfig& enc_cfg,
                                                    std::uint64_t seed) {
    if (P.empty() || N_D.empty())
        throw std::invalid_argument("pretrain_discriminator: empty split");
    if (cfg.heldout_fraction <= 0.0 || cfg.heldout_fraction >= 0.5)
        throw std::invalid_argument("pretrain_discriminator: heldout_fraction out of range");

    Rng rng(seed);
    SentenceModel model(enc_cfg, rng);

    std::vector<Instance> pos = P, neg = N_D;
    rng.shuffle(pos);
    rng.shuffle(neg);
    auto split = [&](std::vector<Instance>& v) {
        std::size_t held = std::max<std::size_t>(
            1, static_cast<std::size_t>(cfg.heldout_fraction * static_cast<double>(v.size())));
        std::vector<Instance> heldout(v.end() - static_cast<std::ptrdiff_t>(held), v.end());
        v.resize(v.size() - held);
        return heldout;
    };
    std::vector<Instance> held_pos = split(pos);
    std::vector<Instance> held_neg = split(neg);
    std::vector<const Instance*> hp, hn;
    for (const auto& i : held_pos) hp.push_back(&i);
    for (const auto& i : held_neg) hn.push_back(&i);

    DiscriminatorPretrain out;
    double acc = pretrain_loop(
        model, pos, neg, cfg, cfg.target_accuracy, rng,
        [&] { return detail::heldout_accuracy(model, hp, hn); }, "pretrain_discriminator");
    out.model = std::move(model);
    out.initial = snapshot(out.model.params);
    out.accuracy = acc;
    return out;
}

// Generator: overfit P (label 1) against the disjoint negative set N_G until
// the mean predicted probability over all of P reaches the target.
inline SentenceModel pretrain_generator(const std::vector<Instance>& P,
                                        const std::vector<Instance>& N_G,
                                        const PretrainConfig& cfg,
                                        const EncoderConfig& enc_cfg,
                                        std::uint64_t seed) {
    if (P.empty() || N_G.empty())
        throw std::invalid_argument("pretrain_generator: empty split");
    Rng rng(seed);
    SentenceModel model(enc_cfg, rng);
    pretrain_loop(
        model, P, N_G, cfg, cfg.target_mean_prob, rng,
        [&] { return detail::mean_prob(model, P); }, "pretrain_generator");
    return model;
}

}  // namespace dsgan
