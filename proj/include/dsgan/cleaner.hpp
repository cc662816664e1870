#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "dsgan/data.hpp"
#include "dsgan/encoder.hpp"

namespace dsgan {

enum class CleanDecision { kept, redistributed };

struct PairReport {
    std::string pair_key;
    CleanDecision decision = CleanDecision::kept;
    std::vector<double> probs;  // p_G per sentence of the pair
    double min_p = 1.0, max_p = 0.0, mean_p = 0.0;
};

struct CleanReport {
    std::vector<PairReport> pairs;
    std::size_t positive_before = 0, negative_before = 0;
    std::size_t positive_after = 0, negative_after = 0;
};

inline bool classify_positive(const SentenceModel& g, const Instance& ins,
                              double threshold = 0.5) {
    return g.predict_prob(ins) >= threshold;
}

struct RedistributeResult {
    std::vector<Instance> positives;
    std::vector<Instance> negatives;
    CleanReport report;
};

// An entity pair moves to the negative set (relabeled "NA") iff every one
// of its sentences classifies negative; decisions are per-pair, and the
// instance multiset is conserved.
inline RedistributeResult redistribute(const std::vector<Instance>& positives,
                                       const std::vector<Instance>& negatives,
                                       const SentenceModel& g, double threshold = 0.5) {
    // group by pair, preserving first-seen order
    std::vector<std::string> order;
    std::map<std::string, std::vector<const Instance*>> groups;
    for (const auto& ins : positives) {
        auto key = ins.pair_key();
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(&ins);
    }

    RedistributeResult out;
    out.negatives = negatives;
    out.report.positive_before = positives.size();
    out.report.negative_before = negatives.size();

    for (const auto& key : order) {
        const auto& members = groups[key];
        PairReport pr;
        pr.pair_key = key;
        bool any_positive = false;
        double sum = 0.0;
        for (const auto* ins : members) {
            double p = g.predict_prob(*ins);
            pr.probs.push_back(p);
            pr.min_p = std::min(pr.min_p, p);
            pr.max_p = std::max(pr.max_p, p);
            sum += p;
            any_positive = any_positive || (p >= threshold);
        }
        pr.mean_p = sum / static_cast<double>(members.size());
        pr.decision = any_positive ? CleanDecision::kept : CleanDecision::redistributed;
        for (const auto* ins : members) {
            if (any_positive) {
                out.positives.push_back(*ins);
            } else {
                Instance moved = *ins;
                moved.relation = "NA";
                out.negatives.push_back(std::move(moved));
            }
        }
        out.report.pairs.push_back(std::move(pr));
    }
    out.report.positive_after = out.positives.size();
    out.report.negative_after = out.negatives.size();
    return out;
}

inline void write_clean_csv(const CleanReport& report, std::ostream& os) {
    os << "pair_id,decision,min_p,max_p,mean_p,sentences\n";
    char buf[96];
    for (const auto& pr : report.pairs) {
        std::string key = pr.pair_key;
        std::replace(key.begin(), key.end(), '\t', '|');
        std::snprintf(buf, sizeof(buf), ",%s,%.10g,%.10g,%.10g,%zu\n",
                      pr.decision == CleanDecision::kept ? "kept" : "redistributed",
                      pr.min_p, pr.max_p, pr.mean_p, pr.probs.size());
        os << key << buf;
    }
}

}  // namespace dsgan
