#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dsgan/params.hpp"
#include "dsgan/rng.hpp"

namespace dsgan {

// Compares the analytic gradient left in `params` grad buffers against
// central finite differences of `loss`. `loss` must be a deterministic
// forward pass over the current parameter values and must not touch the
// gradient buffers. Above `max_coords` coordinates a seeded subsample is
// checked instead of every coordinate.
inline double grad_check(const std::function<double()>& loss,
                         const std::function<void()>& compute_grads,
                         ParamSet& params, double h,
                         std::size_t max_coords = 1000,
                         std::uint64_t subsample_seed = 17) {
    params.zero_grads();
    compute_grads();

    struct Coord {
        std::size_t entry;
        std::size_t index;
    };
    std::vector<Coord> coords;
    std::size_t total = 0;
    for (const auto& e : params.entries()) total += e.value.data.size();
    if (total <= max_coords) {
        for (std::size_t ei = 0; ei < params.entries().size(); ++ei)
            for (std::size_t i = 0; i < params.entries()[ei].value.data.size(); ++i)
                coords.push_back({ei, i});
    } else {
        Rng rng(subsample_seed);
        for (std::size_t s = 0; s < max_coords; ++s) {
            std::size_t flat = rng.below(total);
            std::size_t ei = 0;
            while (flat >= params.entries()[ei].value.data.size()) {
                flat -= params.entries()[ei].value.data.size();
                ++ei;
            }
            coords.push_back({ei, flat});
        }
    }

    double worst = 0.0;
    for (const auto& c : coords) {
        double analytic = params.entries()[c.entry].grad.data[c.index];
        double& v = params.entries()[c.entry].value.data[c.index];
        double saved = v;
        v = saved + h;
        double up = loss();
        v = saved - h;
        double down = loss();
        v = saved;
        double numeric = (up - down) / (2.0 * h);
        double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    params.zero_grads();
    return worst;
}

}  // namespace dsgan
