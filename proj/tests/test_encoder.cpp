#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dsgan/encoder.hpp"
#include "dsgan/grad_check.hpp"
#include "dsgan/rng.hpp"

using namespace dsgan;

namespace {

Instance make_instance(std::vector<std::size_t> tokens, std::size_t head,
                       std::size_t tail) {
    Instance ins;
    ins.id = "t0";
    ins.pair_id = {"h", "t"};
    ins.relation = "rel_0";
    ins.tokens = std::move(tokens);
    ins.head_pos = head;
    ins.tail_pos = tail;
    return ins;
}

EncoderConfig small_config() {
    EncoderConfig cfg;
    cfg.word_dim = 6;
    cfg.position_dim = 2;
    cfg.window = 3;
    cfg.kernels = 4;
    cfg.max_distance = 5;
    cfg.vocab_size = 20;
    return cfg;
}

}  // namespace

TEST_CASE("position index is clamped and centered") {
    CHECK(position_index(7, 7, 30) == 30);
    CHECK(position_index(50, 5, 30) == 60);
    CHECK(position_index(5, 50, 30) == 0);
}

TEST_CASE("position index is monotone and saturating") {
    std::size_t prev = 0;
    for (std::int64_t d = -40; d <= 40; ++d) {
        std::size_t idx = position_index(d, 0, 30);
        CHECK(idx >= prev);
        CHECK(idx <= 60);
        prev = idx;
    }
}

TEST_CASE("featurize concatenates word and position segments") {
    EncoderConfig cfg = small_config();
    Rng rng(1);
    SentenceModel model(cfg, rng);
    // marker values per source table
    model.params.value("word_emb").fill(1.0);
    model.params.value("pos_head_emb").fill(2.0);
    model.params.value("pos_tail_emb").fill(3.0);

    Instance ins = make_instance({4, 5, 6}, 0, 2);
    Tensor feat = model.featurize(ins);
    REQUIRE(feat.shape == std::vector<std::size_t>{3, 10});
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t j = 0; j < 6; ++j) CHECK(feat.at(t, j) == 1.0);
        for (std::size_t j = 6; j < 8; ++j) CHECK(feat.at(t, j) == 2.0);
        for (std::size_t j = 8; j < 10; ++j) CHECK(feat.at(t, j) == 3.0);
    }
}

TEST_CASE("featurize with zero tables gives zero rows") {
    EncoderConfig cfg = small_config();
    Rng rng(1);
    SentenceModel model(cfg, rng);
    for (auto& e : model.params.entries()) e.value.fill(0.0);
    Instance ins = make_instance({1, 2}, 0, 1);
    Tensor feat = model.featurize(ins);
    for (double v : feat.data) CHECK(v == 0.0);
}

TEST_CASE("featurize rejects out-of-range ids and positions") {
    EncoderConfig cfg = small_config();
    Rng rng(1);
    SentenceModel model(cfg, rng);
    CHECK_THROWS(model.featurize(make_instance({25, 1}, 0, 1)));
    Instance bad = make_instance({1, 2}, 0, 1);
    bad.head_pos = 9;
    CHECK_THROWS(model.featurize(bad));
}

TEST_CASE("zero output layer predicts one half for any instance") {
    EncoderConfig cfg = small_config();
    Rng rng(2);
    SentenceModel model(cfg, rng);
    model.params.value("out_w").fill(0.0);
    model.params.value("out_b").fill(0.0);
    CHECK(model.predict_prob(make_instance({1, 2, 3, 4}, 1, 3)) == 0.5);
}

TEST_CASE("predict_prob is deterministic and in (0,1)") {
    EncoderConfig cfg = small_config();
    Rng rng(3);
    SentenceModel model(cfg, rng);
    Instance ins = make_instance({3, 1, 4, 1, 5}, 0, 4);
    double a = model.predict_prob(ins);
    double b = model.predict_prob(ins);
    CHECK(a == b);
    CHECK(a > 0.0);
    CHECK(a < 1.0);
}

TEST_CASE("sentences shorter than the window are still valid") {
    EncoderConfig cfg = small_config();
    Rng rng(4);
    SentenceModel model(cfg, rng);
    double p = model.predict_prob(make_instance({1, 2}, 0, 1));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
}

TEST_CASE("end-to-end gradient matches finite differences") {
    EncoderConfig cfg = small_config();
    Rng rng(5);
    SentenceModel model(cfg, rng);
    Instance ins = make_instance({3, 7, 2, 9, 11, 4}, 1, 4);

    auto loss = [&] {
        double p = model.predict_prob(ins);
        return bce_loss(p, 1).loss;
    };
    auto grads = [&] {
        SentenceModel::Cache cache;
        double p = model.forward(ins, cache);
        model.backward(cache, bce_loss(p, 1).d_logit);
    };
    CHECK(grad_check(loss, grads, model.params, 1e-5) < 1e-4);
}

TEST_CASE("supervised step converges on a separable toy set") {
    EncoderConfig cfg = small_config();
    Rng rng(6);
    SentenceModel model(cfg, rng);

    std::vector<Instance> instances;
    std::vector<int> labels;
    for (std::size_t i = 0; i < 10; ++i) {
        // positives carry token 2, negatives token 12
        bool pos = i < 5;
        instances.push_back(make_instance({pos ? 2u : 12u, 3, pos ? 2u : 12u, 5}, 1, 3));
        instances.back().id = "toy" + std::to_string(i);
        labels.push_back(pos ? 1 : 0);
    }
    std::vector<const Instance*> batch;
    for (const auto& i : instances) batch.push_back(&i);

    double mean_loss = 1.0;
    for (int step = 0; step < 400 && mean_loss >= 0.05; ++step)
        mean_loss = model.supervised_step(batch, labels, 0.5, 0.1);
    CHECK(mean_loss < 0.05);
}

TEST_CASE("supervised step with zero lr leaves parameters unchanged") {
    EncoderConfig cfg = small_config();
    Rng rng(7);
    SentenceModel model(cfg, rng);
    ParamSnapshot before = snapshot(model.params);
    Instance ins = make_instance({1, 2, 3}, 0, 2);
    model.supervised_step({&ins}, {1}, 0.0, 1.0);
    for (std::size_t i = 0; i < before.entries.size(); ++i)
        CHECK(model.params.entries()[i].value.data == before.entries[i].second.data);
}

TEST_CASE("loss scale doubles the parameter delta exactly") {
    EncoderConfig cfg = small_config();
    Instance ins = make_instance({1, 2, 3, 4}, 0, 2);

    auto delta = [&](double scale) {
        Rng rng(8);
        SentenceModel model(cfg, rng);
        ParamSnapshot before = snapshot(model.params);
        model.supervised_step({&ins}, {1}, 0.1, scale);
        std::vector<double> d;
        for (std::size_t e = 0; e < before.entries.size(); ++e)
            for (std::size_t i = 0; i < before.entries[e].second.data.size(); ++i)
                d.push_back(model.params.entries()[e].value.data[i] -
                            before.entries[e].second.data[i]);
        return d;
    };
    auto d1 = delta(1.0);
    auto d2 = delta(2.0);
    for (std::size_t i = 0; i < d1.size(); ++i)
        CHECK_THAT(d2[i], Catch::Matchers::WithinAbs(2.0 * d1[i], 1e-12));
}

TEST_CASE("batch order does not change the update") {
    EncoderConfig cfg = small_config();
    Instance a = make_instance({1, 2, 3}, 0, 2);
    Instance b = make_instance({4, 5, 6, 7}, 1, 3);

    auto run_once = [&](bool swapped) {
        Rng rng(9);
        SentenceModel model(cfg, rng);
        std::vector<const Instance*> batch =
            swapped ? std::vector<const Instance*>{&b, &a}
                    : std::vector<const Instance*>{&a, &b};
        std::vector<int> labels = swapped ? std::vector<int>{0, 1}
                                          : std::vector<int>{1, 0};
        model.supervised_step(batch, labels, 0.1, 0.5);
        return snapshot(model.params);
    };
    ParamSnapshot x = run_once(false);
    ParamSnapshot y = run_once(true);
    for (std::size_t i = 0; i < x.entries.size(); ++i)
        for (std::size_t j = 0; j < x.entries[i].second.data.size(); ++j)
            CHECK_THAT(y.entries[i].second.data[j],
                       Catch::Matchers::WithinAbs(x.entries[i].second.data[j], 1e-12));
}
