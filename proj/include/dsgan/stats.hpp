#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dsgan {

struct PrPoint {
    double recall;
    double precision;
};

struct PrCurve {
    std::vector<PrPoint> points;
};

// Descending-score sweep; ties broken by stable input order. Point i is
// (TP/positives, TP/(i+1)) after taking the first i+1 scores.
inline PrCurve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("pr_curve: scores/labels length mismatch");
    std::size_t positives = 0;
    for (int y : labels) positives += (y != 0);
    if (positives == 0) throw std::invalid_argument("pr_curve: no positive labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    PrCurve curve;
    curve.points.reserve(scores.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        tp += (labels[order[i]] != 0);
        curve.points.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                                static_cast<double>(tp) / static_cast<double>(i + 1)});
    }
    return curve;
}

// Trapezoidal area over recall, anchored at (0, first precision).
inline double auc(const PrCurve& curve) {
    if (curve.points.empty()) throw std::invalid_argument("auc: empty curve");
    double area = 0.0;
    double prev_r = 0.0;
    double prev_p = curve.points.front().precision;
    for (const auto& pt : curve.points) {
        area += (pt.recall - prev_r) * 0.5 * (pt.precision + prev_p);
        prev_r = pt.recall;
        prev_p = pt.precision;
    }
    return area;
}

// ---------------------------------------------------------------------------
// Paired two-sided t-test with the t CDF evaluated through the regularized
// incomplete beta function (continued fraction), so no external stats
// dependency is needed.
// ---------------------------------------------------------------------------

namespace detail {

inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 200;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

// regularized incomplete beta I_x(a, b)
inline double betainc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    double front = std::exp(ln_beta + a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// two-sided p for |T| >= |t| with T ~ t(df)
inline double t_sf_two_sided(double t, double df) {
    double x = df / (df + t * t);
    return detail::betainc(df / 2.0, 0.5, x);
}

struct TTestResult {
    double t;
    double p;
    bool zero_variance = false;
};

inline TTestResult paired_t_test(const std::vector<double>& a,
                                 const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("paired_t_test: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("paired_t_test: need at least 2 pairs");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    double var = ss / static_cast<double>(n - 1);
    if (var == 0.0) {
        // degenerate: identical differences
        if (mean == 0.0) return {0.0, 1.0, true};
        return {mean > 0 ? HUGE_VAL : -HUGE_VAL, 0.0, true};
    }
    double se = std::sqrt(var / static_cast<double>(n));
    double t = mean / se;
    return {t, t_sf_two_sided(t, static_cast<double>(n - 1)), false};
}

}  // namespace dsgan
