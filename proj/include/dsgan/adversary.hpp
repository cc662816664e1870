#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsgan/data.hpp"
#include "dsgan/encoder.hpp"
#include "dsgan/params.hpp"
#include "dsgan/rng.hpp"

namespace dsgan {

struct AdversaryConfig {
    double eta = 1.0;             // scale on reward r2
    double baseline_decay = 0.9;  // EMA decay for baseline b1
    // Nominal learning rates; the discriminator loss carries a 1/|P| factor,
    // so the effective per-sample step is lr_D / |P|. Sized for |P| ~ 2000.
    double lr_G = 0.2;
    double lr_D = 50.0;
    std::size_t max_epochs = 30;
    std::size_t patience = 3;  // epochs without a new ACC_D minimum before stopping
};

struct RewardState {
    double b1 = 0.5;  // EMA of mean p_D over generated sets
    // p_tilde_history[epoch][bag]; row k is completed before row k+1 starts
    std::vector<std::vector<double>> p_tilde_history;
};

struct BagMetrics {
    double acc_nd = 0.0;   // accuracy on N_D after this bag's D update
    double p_tilde = 0.0;  // mean p_D over N_D after this bag's D update
    double r1 = 0.0;
    double r2 = 0.0;
    std::size_t t_size = 0;
    std::size_t f_size = 0;
};

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    std::vector<BagMetrics> bags;
    double end_acc = 0.0;  // ACC_D on N_D at epoch end
};

struct RunReport {
    std::vector<EpochMetrics> epochs;
    std::size_t best_epoch = 0;  // 1-based, global minimum end_acc
    ParamSnapshot best_generator;
};

// Each index enters T independently with its own probability; F is the rest.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
sample_generated_set(const std::vector<double>& probs, Rng& rng) {
    std::vector<std::size_t> t, f;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (rng.bernoulli(probs[j]))
            t.push_back(j);
        else
            f.push_back(j);
    }
    return {std::move(t), std::move(f)};
}

// One descent step: generated samples labeled 0, the rest labeled 1,
// loss scaled by 1/|P| as in Algorithm 1.
inline double discriminator_step(SentenceModel& d, const std::vector<const Instance*>& t,
                                 const std::vector<const Instance*>& f, double lr_d,
                                 std::size_t total_p_size) {
    if (t.empty() && f.empty()) return 0.0;
    std::vector<const Instance*> batch;
    std::vector<int> labels;
    batch.reserve(t.size() + f.size());
    for (const auto* s : t) {
        batch.push_back(s);
        labels.push_back(0);
    }
    for (const auto* s : f) {
        batch.push_back(s);
        labels.push_back(1);
    }
    return d.supervised_step(batch, labels, lr_d,
                             1.0 / static_cast<double>(total_p_size));
}

inline double reward_r1(const std::vector<double>& pd_on_t, double b1) {
    if (pd_on_t.empty()) throw std::invalid_argument("reward_r1: empty generated set");
    double mean = 0.0;
    for (double p : pd_on_t) mean += p;
    return mean / static_cast<double>(pd_on_t.size()) - b1;
}

struct NegProbe {
    double p_tilde = 0.0;   // mean p_D over N_D
    double accuracy = 0.0;  // fraction with p_D < 0.5
};

inline NegProbe avg_neg_prob(const SentenceModel& d, const std::vector<Instance>& n_d) {
    if (n_d.empty()) throw std::invalid_argument("avg_neg_prob: empty N_D");
    NegProbe probe;
    std::size_t below = 0;
    for (const auto& ins : n_d) {
        double p = d.predict_prob(ins);
        probe.p_tilde += p;
        below += (p < 0.5);
    }
    probe.p_tilde /= static_cast<double>(n_d.size());
    probe.accuracy = static_cast<double>(below) / static_cast<double>(n_d.size());
    return probe;
}

// r2 for bag i of epoch k: eta * (p_tilde - max over epochs 1..k-1 at bag i);
// zero in epoch 1 where the max ranges over nothing. Appends p_tilde to the
// history row for epoch k.
inline double reward_r2(double p_tilde, std::size_t bag_index, std::size_t epoch,
                        RewardState& state, double eta) {
    if (epoch < 1 || epoch > state.p_tilde_history.size())
        throw std::invalid_argument("reward_r2: history row for epoch not prepared");
    auto& row = state.p_tilde_history[epoch - 1];
    if (bag_index != row.size())
        throw std::invalid_argument("reward_r2: bag index out of order");
    for (std::size_t m = 0; m + 1 < epoch; ++m)
        if (bag_index >= state.p_tilde_history[m].size())
            throw std::invalid_argument("reward_r2: incomplete prior epoch history");
    double r2 = 0.0;
    if (epoch > 1) {
        double b2 = -1.0;
        for (std::size_t m = 0; m + 1 < epoch; ++m)
            b2 = std::max(b2, state.p_tilde_history[m][bag_index]);
        r2 = eta * (p_tilde - b2);
    }
    row.push_back(p_tilde);
    return r2;
}

// One ascent step on (r/|T|) * sum log p_G(s_j).
inline void generator_step(SentenceModel& g, const std::vector<const Instance*>& t,
                           double r, double lr_g) {
    if (t.empty()) throw std::invalid_argument("generator_step: empty generated set");
    const double scale = r / static_cast<double>(t.size());
    SentenceModel::Cache cache;
    for (const auto* s : t) {
        double p = g.forward(*s, cache);
        // d(log p)/d logit = 1 - p
        g.backward(cache, scale * (1.0 - p));
    }
    sgd_apply(g.params, SgdConfig{lr_g}, SgdDirection::ascent);
}

// Algorithm 1 lines 7-13 for one bag. The reward uses the discriminator
// after its update for this bag. With an empty T the discriminator still
// trains on F but the reward and generator update are skipped.
inline BagMetrics run_bag(SentenceModel& g, SentenceModel& d,
                          const std::vector<Instance>& bag,
                          const std::vector<Instance>& n_d, RewardState& state,
                          const AdversaryConfig& cfg, std::size_t bag_index,
                          std::size_t epoch, Rng& rng, std::size_t total_p_size) {
    std::vector<double> probs(bag.size());
    for (std::size_t j = 0; j < bag.size(); ++j) probs[j] = g.predict_prob(bag[j]);

    auto [t_idx, f_idx] = sample_generated_set(probs, rng);
    std::vector<const Instance*> t, f;
    for (std::size_t j : t_idx) t.push_back(&bag[j]);
    for (std::size_t j : f_idx) f.push_back(&bag[j]);

    discriminator_step(d, t, f, cfg.lr_D, total_p_size);
    NegProbe probe = avg_neg_prob(d, n_d);

    BagMetrics m;
    m.t_size = t.size();
    m.f_size = f.size();
    m.acc_nd = probe.accuracy;
    m.p_tilde = probe.p_tilde;

    if (!t.empty()) {
        std::vector<double> pd_on_t(t.size());
        for (std::size_t j = 0; j < t.size(); ++j) pd_on_t[j] = d.predict_prob(*t[j]);
        m.r1 = reward_r1(pd_on_t, state.b1);
        m.r2 = reward_r2(probe.p_tilde, bag_index, epoch, state, cfg.eta);
        generator_step(g, t, m.r1 + m.r2, cfg.lr_G);
        double mean_pd = m.r1 + state.b1;
        state.b1 = cfg.baseline_decay * state.b1 + (1.0 - cfg.baseline_decay) * mean_pd;
    } else {
        // keep the history row complete for later epochs' b2
        state.p_tilde_history[epoch - 1].push_back(probe.p_tilde);
    }
    return m;
}

// Algorithm 1 in full. D reloads d_initial at the start of every epoch; the
// bag sequence is fixed across epochs; training stops once the epoch-end
// ACC_D has not reached a new minimum for `patience` consecutive epochs.
// Returns the generator snapshot from the minimum-ACC_D epoch.
inline RunReport run(const BagSequence& bags, const std::vector<Instance>& n_d,
                     SentenceModel& g, SentenceModel& d, const ParamSnapshot& d_initial,
                     const AdversaryConfig& cfg, std::uint64_t seed) {
    if (bags.bags.empty()) throw std::invalid_argument("run: empty bag sequence");
    std::size_t total_p = 0;
    for (const auto& b : bags.bags) total_p += b.size();

    Rng rng(seed);
    RewardState state;
    RunReport report;
    double best_acc = 2.0;
    std::size_t since_new_min = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        restore(d.params, d_initial);
        state.p_tilde_history.emplace_back();
        EpochMetrics em;
        em.epoch = epoch;
        for (std::size_t i = 0; i < bags.bags.size(); ++i)
            em.bags.push_back(run_bag(g, d, bags.bags[i], n_d, state, cfg, i, epoch,
                                      rng, total_p));
        em.end_acc = avg_neg_prob(d, n_d).accuracy;
        report.epochs.push_back(std::move(em));

        if (report.epochs.back().end_acc < best_acc) {
            best_acc = report.epochs.back().end_acc;
            report.best_epoch = epoch;
            report.best_generator = snapshot(g.params);
            since_new_min = 0;
        } else {
            ++since_new_min;
            if (since_new_min >= cfg.patience) break;
        }
    }
    return report;
}

// CSV with one row per (epoch, bag) and one epoch-end row per epoch.
inline void write_run_csv(const RunReport& report, std::ostream& os) {
    os << "epoch,bag,acc_ND,p_tilde,r1,r2,t_size\n";
    char buf[160];
    for (const auto& em : report.epochs) {
        for (std::size_t i = 0; i < em.bags.size(); ++i) {
            const auto& b = em.bags[i];
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.10g,%.10g,%.10g,%.10g,%zu\n",
                          em.epoch, i, b.acc_nd, b.p_tilde, b.r1, b.r2, b.t_size);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "%zu,end,%.10g,,,,\n", em.epoch, em.end_acc);
        os << buf;
    }
}

}  // namespace dsgan
