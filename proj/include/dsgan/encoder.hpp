#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsgan/data.hpp"
#include "dsgan/layers.hpp"
#include "dsgan/params.hpp"
#include "dsgan/rng.hpp"

namespace dsgan {

struct EncoderConfig {
    std::size_t word_dim = 50;      // d_e
    std::size_t position_dim = 5;   // d_p
    std::size_t window = 3;         // c_w
    std::size_t kernels = 100;      // c_k
    std::size_t max_distance = 30;  // positions clamp to [-max, +max]
    std::size_t vocab_size = 8000;

    std::size_t feature_dim() const { return word_dim + 2 * position_dim; }
    std::size_t position_rows() const { return 2 * max_distance + 1; }
};

// clamp(token - entity, -max, +max) + max, in [0, 2*max]
inline std::size_t position_index(std::int64_t token_pos, std::int64_t entity_pos,
                                  std::size_t max_distance) {
    std::int64_t m = static_cast<std::int64_t>(max_distance);
    std::int64_t d = token_pos - entity_pos;
    if (d < -m) d = -m;
    if (d > m) d = m;
    return static_cast<std::size_t>(d + m);
}

// Word + position embeddings -> windowed conv + max pool + tanh -> sigmoid.
// The same architecture serves the generator, the discriminator and the
// downstream evaluator.
class SentenceModel {
public:
    EncoderConfig config;
    ParamSet params;

    SentenceModel() = default;

    SentenceModel(const EncoderConfig& cfg, Rng& rng) : config(cfg) {
        auto xavier = [&](std::size_t fan_in, std::size_t fan_out) {
            return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        };
        auto init = [&](Tensor& t, double bound) {
            for (auto& v : t.data) v = rng.uniform(-bound, bound);
        };
        Tensor word({cfg.vocab_size, cfg.word_dim});
        init(word, 0.25);
        params.add("word_emb", std::move(word));
        Tensor pos_h({cfg.position_rows(), cfg.position_dim});
        init(pos_h, 0.25);
        params.add("pos_head_emb", std::move(pos_h));
        Tensor pos_t({cfg.position_rows(), cfg.position_dim});
        init(pos_t, 0.25);
        params.add("pos_tail_emb", std::move(pos_t));

        std::size_t kw = cfg.window * cfg.feature_dim();
        Tensor conv_w({cfg.kernels, kw});
        init(conv_w, xavier(kw, cfg.kernels));
        params.add("conv_w", std::move(conv_w));
        params.add("conv_b", Tensor({cfg.kernels}));
        Tensor out_w({cfg.kernels});
        init(out_w, xavier(cfg.kernels, 1));
        params.add("out_w", std::move(out_w));
        params.add("out_b", Tensor({1}));
    }

    struct Cache {
        std::vector<std::size_t> word_idx, head_idx, tail_idx;
        Tensor features;  // n x feature_dim
        ConvPoolCache conv;
        Tensor pooled;  // c_k
        AffineSigmoidCache out;
    };

    // Row t = [word_emb(token_t), pos_head_emb(t-head), pos_tail_emb(t-tail)]
    Tensor featurize(const Instance& ins, Cache* cache = nullptr) const {
        const std::size_t n = ins.tokens.size();
        if (n == 0) throw std::invalid_argument("featurize: empty sentence " + ins.id);
        if (ins.head_pos >= n || ins.tail_pos >= n)
            throw std::out_of_range("featurize: entity position out of range in " + ins.id);
        const Tensor& word = params.value("word_emb");
        const Tensor& pos_h = params.value("pos_head_emb");
        const Tensor& pos_t = params.value("pos_tail_emb");
        const std::size_t d_e = config.word_dim;
        const std::size_t d_p = config.position_dim;

        std::vector<std::size_t> widx(n), hidx(n), tidx(n);
        for (std::size_t t = 0; t < n; ++t) {
            if (ins.tokens[t] >= config.vocab_size)
                throw std::out_of_range("featurize: token id " +
                                        std::to_string(ins.tokens[t]) +
                                        " out of range in " + ins.id);
            widx[t] = ins.tokens[t];
            hidx[t] = position_index(static_cast<std::int64_t>(t),
                                     static_cast<std::int64_t>(ins.head_pos),
                                     config.max_distance);
            tidx[t] = position_index(static_cast<std::int64_t>(t),
                                     static_cast<std::int64_t>(ins.tail_pos),
                                     config.max_distance);
        }

        Tensor feat({n, config.feature_dim()});
        for (std::size_t t = 0; t < n; ++t) {
            double* row = feat.row(t);
            const double* w = word.row(widx[t]);
            for (std::size_t j = 0; j < d_e; ++j) row[j] = w[j];
            const double* ph = pos_h.row(hidx[t]);
            for (std::size_t j = 0; j < d_p; ++j) row[d_e + j] = ph[j];
            const double* pt = pos_t.row(tidx[t]);
            for (std::size_t j = 0; j < d_p; ++j) row[d_e + d_p + j] = pt[j];
        }
        if (cache) {
            cache->word_idx = std::move(widx);
            cache->head_idx = std::move(hidx);
            cache->tail_idx = std::move(tidx);
        }
        return feat;
    }

    double forward(const Instance& ins, Cache& cache) const {
        cache.features = featurize(ins, &cache);
        cache.pooled = conv1d_maxpool(cache.features, params.value("conv_w"),
                                      params.value("conv_b"), config.window,
                                      &cache.conv);
        return affine_sigmoid(cache.pooled, params.value("out_w"),
                              params.value("out_b").data[0], &cache.out);
    }

    double predict_prob(const Instance& ins) const {
        Cache cache;
        return forward(ins, cache);
    }

    // Accumulates dL/dtheta into the gradient buffers given dL/dlogit.
    void backward(const Cache& cache, double d_logit) {
        const std::size_t d_e = config.word_dim;
        const std::size_t d_p = config.position_dim;
        const std::size_t n = cache.features.rows();

        Tensor pooled_grad({config.kernels});
        double& out_b_grad = params.grad("out_b").data[0];
        affine_sigmoid_backward(cache.pooled, params.value("out_w"), d_logit,
                                pooled_grad, params.grad("out_w"), out_b_grad);

        Tensor feat_grad({n, config.feature_dim()});
        conv1d_maxpool_backward(cache.features, params.value("conv_w"), config.window,
                                cache.conv, pooled_grad, feat_grad,
                                params.grad("conv_w"), params.grad("conv_b"));

        Tensor& word_g = params.grad("word_emb");
        Tensor& pos_h_g = params.grad("pos_head_emb");
        Tensor& pos_t_g = params.grad("pos_tail_emb");
        for (std::size_t t = 0; t < n; ++t) {
            const double* row = feat_grad.row(t);
            double* w = word_g.row(cache.word_idx[t]);
            for (std::size_t j = 0; j < d_e; ++j) w[j] += row[j];
            double* ph = pos_h_g.row(cache.head_idx[t]);
            for (std::size_t j = 0; j < d_p; ++j) ph[j] += row[d_e + j];
            double* pt = pos_t_g.row(cache.tail_idx[t]);
            for (std::size_t j = 0; j < d_p; ++j) pt[j] += row[d_e + d_p + j];
        }
    }

    // One descent step on loss_scale * sum of per-instance cross-entropy.
    // Returns the pre-step mean loss.
    double supervised_step(const std::vector<const Instance*>& batch,
                           const std::vector<int>& labels, double lr,
                           double loss_scale) {
        if (batch.empty()) throw std::invalid_argument("supervised_step: empty batch");
        if (batch.size() != labels.size())
            throw std::invalid_argument("supervised_step: batch/label size mismatch");
        double total = 0.0;
        Cache cache;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            double p = forward(*batch[i], cache);
            BceResult bce = bce_loss(p, labels[i]);
            total += bce.loss;
            backward(cache, loss_scale * bce.d_logit);
        }
        double mean = total / static_cast<double>(batch.size());
        if (!std::isfinite(mean)) throw std::runtime_error("supervised_step: non-finite loss");
        sgd_apply(params, SgdConfig{lr}, SgdDirection::descent);
        return mean;
    }
};

// Optional pretrained-embedding file: one "token v1 ... v_de" line per token.
// Tokens missing from the vocabulary are skipped; vocabulary entries missing
// from the file keep their random initialization.
inline std::size_t load_pretrained_embeddings(SentenceModel& model,
                                              const std::map<std::string, std::size_t>& vocab,
                                              const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read embeddings " + path.string());
    Tensor& table = model.params.value("word_emb");
    const std::size_t d_e = model.config.word_dim;
    std::string line;
    std::size_t loaded = 0, lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        auto it = vocab.find(token);
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (vals.size() != d_e)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(d_e) + " floats");
        if (it == vocab.end()) continue;
        if (it->second >= table.rows())
            throw std::runtime_error("embedding index out of range for token " + token);
        for (std::size_t j = 0; j < d_e; ++j) table.at(it->second, j) = vals[j];
        ++loaded;
    }
    return loaded;
}

}  // namespace dsgan
