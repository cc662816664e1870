#pragma once

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsgan/cleaner.hpp"
#include "dsgan/data.hpp"
#include "dsgan/encoder.hpp"
#include "dsgan/rng.hpp"
#include "dsgan/stats.hpp"

namespace dsgan {

// Downstream classifier settings; both conditions of a comparison always
// train with the same values so only the data differs.
struct DownstreamConfig {
    std::size_t epochs = 4;
    std::size_t batch_size = 32;
    double lr = 0.05;
};

namespace detail {

// Fixed-epoch balanced training of the shared encoder as a binary
// relation classifier. No early stop, so both comparison arms get the
// exact same schedule.
inline SentenceModel train_downstream(const std::vector<const Instance*>& pos,
                                      const std::vector<const Instance*>& neg,
                                      const DownstreamConfig& cfg,
                                      const EncoderConfig& enc_cfg, std::uint64_t seed,
                                      std::vector<double>* per_epoch_train_acc = nullptr) {
    if (pos.empty() || neg.empty())
        throw std::invalid_argument("train_downstream: empty class");
    Rng rng(seed);
    SentenceModel model(enc_cfg, rng);
    std::vector<const Instance*> p = pos, n = neg;
    const std::size_t half = std::max<std::size_t>(1, cfg.batch_size / 2);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(p);
        rng.shuffle(n);
        std::size_t steps = std::max<std::size_t>(1, std::max(p.size(), n.size()) / half);
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<const Instance*> batch;
            std::vector<int> labels;
            for (std::size_t j = 0; j < half; ++j) {
                batch.push_back(p[(s * half + j) % p.size()]);
                labels.push_back(1);
            }
            for (std::size_t j = 0; j < half; ++j) {
                batch.push_back(n[(s * half + j) % n.size()]);
                labels.push_back(0);
            }
            model.supervised_step(batch, labels, cfg.lr,
                                  1.0 / static_cast<double>(batch.size()));
        }
        if (per_epoch_train_acc) {
            std::size_t correct = 0;
            for (const auto* i : pos) correct += (model.predict_prob(*i) >= 0.5);
            for (const auto* i : neg) correct += (model.predict_prob(*i) < 0.5);
            per_epoch_train_acc->push_back(static_cast<double>(correct) /
                                           static_cast<double>(pos.size() + neg.size()));
        }
    }
    return model;
}

inline std::vector<const Instance*> ptrs(const std::vector<Instance>& v) {
    std::vector<const Instance*> out;
    out.reserve(v.size());
    for (const auto& i : v) out.push_back(&i);
    return out;
}

}  // namespace detail

// AUC of one condition: train on (P label 1, N_D label 0), score heldout
// where relation != "NA" is the positive class.
inline double condition_auc(const DatasetSplits& splits, const DownstreamConfig& cfg,
                            const EncoderConfig& enc_cfg, std::uint64_t seed) {
    SentenceModel model = detail::train_downstream(detail::ptrs(splits.P),
                                                   detail::ptrs(splits.N_D), cfg,
                                                   enc_cfg, seed);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& ins : splits.heldout) {
        scores.push_back(model.predict_prob(ins));
        labels.push_back(ins.relation != "NA" ? 1 : 0);
    }
    return auc(pr_curve(scores, labels));
}

struct ComparisonResult {
    std::vector<std::uint64_t> seeds;
    std::vector<double> auc_baseline;
    std::vector<double> auc_cleaned;
    double mean_baseline = 0.0;
    double mean_cleaned = 0.0;
    TTestResult ttest;
};

// Per-seed AUC pairs on raw vs cleaned data aggregated with a paired t-test.
// Both conditions must share the held-out set.
inline ComparisonResult downstream_compare(const DatasetSplits& raw,
                                           const DatasetSplits& cleaned,
                                           const std::vector<std::uint64_t>& seeds,
                                           const DownstreamConfig& cfg,
                                           const EncoderConfig& enc_cfg) {
    if (seeds.size() < 2)
        throw std::invalid_argument("downstream_compare: need at least 2 seeds");
    if (raw.heldout.size() != cleaned.heldout.size())
        throw std::invalid_argument("downstream_compare: held-out sets differ");
    ComparisonResult result;
    result.seeds = seeds;
    for (std::uint64_t s : seeds) {
        result.auc_baseline.push_back(condition_auc(raw, cfg, enc_cfg, s));
        result.auc_cleaned.push_back(condition_auc(cleaned, cfg, enc_cfg, s));
    }
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    result.mean_baseline = mean(result.auc_baseline);
    result.mean_cleaned = mean(result.auc_cleaned);
    result.ttest = paired_t_test(result.auc_cleaned, result.auc_baseline);
    return result;
}

struct QualityResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
};

// Precision/recall/F1 of the generator as a true-positive identifier
// against the planted ground truth.
inline QualityResult generator_quality(const SentenceModel& g,
                                       const std::vector<Instance>& p_with_truth,
                                       double threshold = 0.5) {
    QualityResult q;
    for (const auto& ins : p_with_truth) {
        auto truth = TruthAccess::get(ins);
        if (!truth)
            throw std::runtime_error("generator_quality: instance " + ins.id +
                                     " has no truth flag");
        bool predicted = classify_positive(g, ins, threshold);
        if (predicted && *truth) ++q.tp;
        if (predicted && !*truth) ++q.fp;
        if (!predicted && *truth) ++q.fn;
    }
    q.precision = q.tp + q.fp == 0 ? 0.0
                                   : static_cast<double>(q.tp) /
                                         static_cast<double>(q.tp + q.fp);
    q.recall = q.tp + q.fn == 0 ? 0.0
                                : static_cast<double>(q.tp) /
                                      static_cast<double>(q.tp + q.fn);
    q.f1 = q.precision + q.recall == 0.0
               ? 0.0
               : 2.0 * q.precision * q.recall / (q.precision + q.recall);
    return q;
}

struct PositiveSetExperiment {
    // conditions in fixed order: dsgan, pretrained, random
    std::vector<std::string> conditions{"dsgan", "pretrained", "random"};
    // curves[condition][seed][epoch] = training accuracy
    std::vector<std::vector<std::vector<double>>> curves;
    std::vector<double> final_acc_mean;  // per condition, mean over seeds
};

// Three same-size positive sets (generator top-m, pretrained top-m, random
// m-subset) paired with the same negatives, trained identically; records
// the per-epoch training-accuracy curves.
inline PositiveSetExperiment positive_set_experiment(
    const std::vector<Instance>& P, const SentenceModel& g_dsgan,
    const SentenceModel& g_pretrained, const std::vector<Instance>& negatives,
    std::size_t size_m, const std::vector<std::uint64_t>& seeds,
    const DownstreamConfig& cfg, const EncoderConfig& enc_cfg) {
    if (size_m > P.size())
        throw std::invalid_argument("positive_set_experiment: m exceeds |P|");
    if (size_m == 0) throw std::invalid_argument("positive_set_experiment: m must be > 0");

    auto top_m = [&](const SentenceModel& model) {
        std::vector<std::pair<double, std::size_t>> scored;
        scored.reserve(P.size());
        for (std::size_t i = 0; i < P.size(); ++i)
            scored.emplace_back(model.predict_prob(P[i]), i);
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<const Instance*> out;
        for (std::size_t i = 0; i < size_m; ++i) out.push_back(&P[scored[i].second]);
        return out;
    };

    std::vector<const Instance*> dsgan_set = top_m(g_dsgan);
    std::vector<const Instance*> pre_set = top_m(g_pretrained);
    std::vector<const Instance*> neg = detail::ptrs(negatives);

    PositiveSetExperiment result;
    result.curves.assign(3, {});
    for (std::uint64_t seed : seeds) {
        // random condition re-drawn per seed
        std::vector<const Instance*> random_set = detail::ptrs(P);
        Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
        rng.shuffle(random_set);
        random_set.resize(size_m);

        const std::vector<const Instance*>* sets[3] = {&dsgan_set, &pre_set, &random_set};
        for (std::size_t c = 0; c < 3; ++c) {
            std::vector<double> curve;
            detail::train_downstream(*sets[c], neg, cfg, enc_cfg, seed, &curve);
            result.curves[c].push_back(std::move(curve));
        }
    }
    for (std::size_t c = 0; c < 3; ++c) {
        double total = 0.0;
        for (const auto& curve : result.curves[c]) total += curve.back();
        result.final_acc_mean.push_back(total / static_cast<double>(seeds.size()));
    }
    return result;
}

// ---------------------------------------------------------------------------
// CSV emitters
// ---------------------------------------------------------------------------

inline void write_pr_csv(const PrCurve& curve, std::ostream& os) {
    os << "recall,precision\n";
    char buf[64];
    for (const auto& pt : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", pt.recall, pt.precision);
        os << buf;
    }
}

inline void write_comparison_csv(const ComparisonResult& r, std::ostream& os) {
    os << "seed,auc_baseline,auc_cleaned\n";
    char buf[96];
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%llu,%.10g,%.10g\n",
                      static_cast<unsigned long long>(r.seeds[i]), r.auc_baseline[i],
                      r.auc_cleaned[i]);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "mean,%.10g,%.10g\n", r.mean_baseline, r.mean_cleaned);
    os << buf;
    std::snprintf(buf, sizeof(buf), "ttest,%.10g,%.10g\n", r.ttest.t, r.ttest.p);
    os << buf;
}

inline void write_experiment_csv(const PositiveSetExperiment& r, std::ostream& os) {
    os << "condition,seed_index,epoch,train_accuracy\n";
    char buf[96];
    for (std::size_t c = 0; c < r.conditions.size(); ++c)
        for (std::size_t s = 0; s < r.curves[c].size(); ++s)
            for (std::size_t e = 0; e < r.curves[c][s].size(); ++e) {
                std::snprintf(buf, sizeof(buf), ",%zu,%zu,%.10g\n", s, e,
                              r.curves[c][s][e]);
                os << r.conditions[c] << buf;
            }
    for (std::size_t c = 0; c < r.conditions.size(); ++c) {
        std::snprintf(buf, sizeof(buf), ",mean,final,%.10g\n", r.final_acc_mean[c]);
        os << r.conditions[c] << buf;
    }
}

}  // namespace dsgan
