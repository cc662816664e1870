#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dsgan/adversary.hpp"
#include "dsgan/data.hpp"
#include "dsgan/encoder.hpp"

using namespace dsgan;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.word_dim = 6;
    cfg.position_dim = 2;
    cfg.window = 3;
    cfg.kernels = 4;
    cfg.max_distance = 5;
    cfg.vocab_size = 60;
    return cfg;
}

std::vector<Instance> tiny_instances(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Instance> out;
    for (std::size_t i = 0; i < n; ++i) {
        Instance ins;
        ins.id = "i" + std::to_string(i);
        ins.pair_id = {"h" + std::to_string(i), "t" + std::to_string(i)};
        ins.relation = "rel_0";
        std::size_t len = 5 + rng.below(4);
        for (std::size_t t = 0; t < len; ++t) ins.tokens.push_back(1 + rng.below(58));
        ins.head_pos = 0;
        ins.tail_pos = 1 + rng.below(len - 1);
        out.push_back(std::move(ins));
    }
    return out;
}

}  // namespace

TEST_CASE("sampling boundaries") {
    Rng rng(1);
    auto [t1, f1] = sample_generated_set({1.0, 1.0, 1.0}, rng);
    CHECK(t1.size() == 3);
    CHECK(f1.empty());
    auto [t0, f0] = sample_generated_set({0.0, 0.0}, rng);
    CHECK(t0.empty());
    CHECK(f0.size() == 2);
}

TEST_CASE("sampling matches its probabilities in the large") {
    Rng rng(77);
    std::vector<double> probs(10000, 0.5);
    auto [t, f] = sample_generated_set(probs, rng);
    double frac = double(t.size()) / double(probs.size());
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
    CHECK(t.size() + f.size() == probs.size());
}

TEST_CASE("reward r1 values") {
    CHECK_THAT(reward_r1({0.8, 0.6}, 0.5), Catch::Matchers::WithinAbs(0.2, 1e-12));
    CHECK_THAT(reward_r1({0.5, 0.5}, 0.5), Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(reward_r1({0.1}, 0.5), Catch::Matchers::WithinAbs(-0.4, 1e-12));
    REQUIRE_THROWS(reward_r1({}, 0.5));
}

TEST_CASE("reward r2 uses the per-bag-index historical maximum") {
    RewardState state;
    state.p_tilde_history = {{0.3}, {0.35}, {}};

    SECTION("epoch one returns zero") {
        RewardState fresh;
        fresh.p_tilde_history = {{}};
        CHECK(reward_r2(0.7, 0, 1, fresh, 1.0) == 0.0);
        CHECK(fresh.p_tilde_history[0] == std::vector<double>{0.7});
    }
    SECTION("gain over the historical maximum") {
        CHECK_THAT(reward_r2(0.4, 0, 3, state, 1.0),
                   Catch::Matchers::WithinAbs(0.05, 1e-12));
    }
    SECTION("drop below the maximum scaled by eta") {
        CHECK_THAT(reward_r2(0.2, 0, 3, state, 2.0),
                   Catch::Matchers::WithinAbs(-0.3, 1e-12));
    }
    SECTION("bag index out of order is rejected") {
        REQUIRE_THROWS(reward_r2(0.4, 1, 3, state, 1.0));
    }
}

TEST_CASE("avg_neg_prob of a zero output layer is exactly one half") {
    Rng rng(3);
    SentenceModel d(tiny_config(), rng);
    d.params.value("out_w").fill(0.0);
    d.params.value("out_b").fill(0.0);
    auto n_d = tiny_instances(20, 5);
    NegProbe probe = avg_neg_prob(d, n_d);
    CHECK(probe.p_tilde == 0.5);
    CHECK(probe.accuracy == 0.0);  // p < 0.5 is strict
    NegProbe again = avg_neg_prob(d, n_d);
    CHECK(again.p_tilde == probe.p_tilde);
    REQUIRE_THROWS(avg_neg_prob(d, {}));
}

TEST_CASE("discriminator step with empty generated set is a plain positive step") {
    Rng rng(4);
    SentenceModel d(tiny_config(), rng);
    auto bag = tiny_instances(4, 6);
    std::vector<const Instance*> f;
    for (const auto& i : bag) f.push_back(&i);
    double before_mean = 0;
    for (const auto& i : bag) before_mean += d.predict_prob(i);
    discriminator_step(d, {}, f, 0.5, 4);
    double after_mean = 0;
    for (const auto& i : bag) after_mean += d.predict_prob(i);
    CHECK(after_mean > before_mean);  // label-1 descent raises p_D on F
    CHECK(discriminator_step(d, {}, {}, 0.5, 4) == 0.0);  // no-op
}

TEST_CASE("discriminator step delta scales linearly in one over P") {
    auto bag = tiny_instances(3, 7);
    std::vector<const Instance*> f;
    for (const auto& i : bag) f.push_back(&i);
    auto delta = [&](std::size_t total_p) {
        Rng rng(8);
        SentenceModel d(tiny_config(), rng);
        double before = d.params.value("out_b").data[0];
        discriminator_step(d, {}, f, 0.1, total_p);
        return d.params.value("out_b").data[0] - before;
    };
    CHECK_THAT(delta(10), Catch::Matchers::WithinAbs(2.0 * delta(20), 1e-12));
}

TEST_CASE("repeated discriminator steps push p_D on T below one half") {
    Rng rng(9);
    SentenceModel d(tiny_config(), rng);
    auto bag = tiny_instances(4, 10);
    std::vector<const Instance*> t;
    for (const auto& i : bag) t.push_back(&i);
    for (int step = 0; step < 300; ++step) discriminator_step(d, t, {}, 1.0, 4);
    for (const auto& i : bag) CHECK(d.predict_prob(i) < 0.5);
}

TEST_CASE("generator step with zero reward changes nothing") {
    Rng rng(11);
    SentenceModel g(tiny_config(), rng);
    auto bag = tiny_instances(3, 12);
    std::vector<const Instance*> t;
    for (const auto& i : bag) t.push_back(&i);
    ParamSnapshot before = snapshot(g.params);
    generator_step(g, t, 0.0, 0.1);
    for (std::size_t e = 0; e < before.entries.size(); ++e)
        CHECK(g.params.entries()[e].value.data == before.entries[e].second.data);
}

TEST_CASE("positive reward increases p_G on a singleton set") {
    Rng rng(13);
    SentenceModel g(tiny_config(), rng);
    auto bag = tiny_instances(1, 14);
    double before = g.predict_prob(bag[0]);
    generator_step(g, {&bag[0]}, 0.5, 0.01);
    CHECK(g.predict_prob(bag[0]) > before);
}

TEST_CASE("policy gradient estimator is unbiased on an enumerated bag") {
    // Frozen discriminator, b1 = 0, bag of three. The expected sampled
    // update of a probe parameter, enumerated exactly over all 2^3 sampling
    // outcomes with per-sample reward p_D(s_j), must equal the gradient of
    // E[sum_T p_D] = sum_j p_G(j) p_D(j).
    Rng rng(15);
    EncoderConfig cfg = tiny_config();
    SentenceModel g(cfg, rng);
    SentenceModel d(cfg, rng);
    auto bag = tiny_instances(3, 16);

    std::vector<double> pd(3);
    for (int j = 0; j < 3; ++j) pd[j] = d.predict_prob(bag[j]);

    // expected update of the probe coordinate: sum_j p_G(j) * u_j where u_j
    // is the update from the outcome weight of instance j alone
    ParamSnapshot start = snapshot(g.params);
    auto probe = [&]() -> double& { return g.params.value("out_b").data[0]; };
    const double probe_start = probe();
    double expected_update = 0.0;
    for (int j = 0; j < 3; ++j) {
        double pg = g.predict_prob(bag[j]);
        generator_step(g, {&bag[j]}, pd[j], 1.0);
        expected_update += pg * (probe() - probe_start);
        restore(g.params, start);
    }

    // enumeration oracle: E(theta) over all 8 outcomes, differentiated by
    // central differences on the probe coordinate
    auto enumerated_expectation = [&] {
        std::vector<double> pg(3);
        for (int j = 0; j < 3; ++j) pg[j] = g.predict_prob(bag[j]);
        double e = 0.0;
        for (int mask = 0; mask < 8; ++mask) {
            double prob = 1.0, value = 0.0;
            for (int j = 0; j < 3; ++j) {
                if (mask & (1 << j)) {
                    prob *= pg[j];
                    value += pd[j];
                } else {
                    prob *= 1.0 - pg[j];
                }
            }
            e += prob * value;
        }
        return e;
    };
    const double h = 1e-6;
    probe() = probe_start + h;
    double up = enumerated_expectation();
    probe() = probe_start - h;
    double down = enumerated_expectation();
    probe() = probe_start;
    double analytic = (up - down) / (2 * h);

    CHECK_THAT(expected_update, Catch::Matchers::WithinAbs(analytic, 1e-6));
}

TEST_CASE("run_bag partitions the bag and records metrics") {
    Rng rng(17);
    EncoderConfig cfg = tiny_config();
    SentenceModel g(cfg, rng), d(cfg, rng);
    auto bag = tiny_instances(8, 18);
    auto n_d = tiny_instances(10, 19);
    RewardState state;
    state.p_tilde_history.emplace_back();
    AdversaryConfig acfg;
    Rng run_rng(20);
    BagMetrics m = run_bag(g, d, bag, n_d, state, acfg, 0, 1, run_rng, 8);
    CHECK(m.t_size + m.f_size == bag.size());
    CHECK(m.r2 == 0.0);  // epoch 1
    CHECK(state.p_tilde_history[0].size() == 1);
}

TEST_CASE("run is deterministic and isolates epochs") {
    Rng rng(21);
    EncoderConfig cfg = tiny_config();
    auto p = tiny_instances(24, 22);
    auto n_d = tiny_instances(16, 23);
    BagSequence bags = make_bags(p, 8, 3);

    auto make_models = [&] {
        Rng r(25);
        SentenceModel g(cfg, r), d(cfg, r);
        return std::pair{std::move(g), std::move(d)};
    };

    AdversaryConfig one;
    one.max_epochs = 1;
    one.patience = 10;
    auto [g1, d1] = make_models();
    ParamSnapshot d_init = snapshot(d1.params);
    RunReport r1 = run(bags, n_d, g1, d1, d_init, one, 99);
    REQUIRE(r1.epochs.size() == 1);
    CHECK(r1.best_epoch == 1);

    AdversaryConfig three = one;
    three.max_epochs = 3;
    auto [g3, d3] = make_models();
    RunReport r3 = run(bags, n_d, g3, d3, d_init, three, 99);
    REQUIRE(r3.epochs.size() >= 1);

    // epoch 1 identical across the two runs: same rng stream, same D reload
    REQUIRE(r3.epochs[0].bags.size() == r1.epochs[0].bags.size());
    for (std::size_t i = 0; i < r1.epochs[0].bags.size(); ++i) {
        CHECK(r3.epochs[0].bags[i].p_tilde == r1.epochs[0].bags[i].p_tilde);
        CHECK(r3.epochs[0].bags[i].t_size == r1.epochs[0].bags[i].t_size);
    }
    CHECK(r3.epochs[0].end_acc == r1.epochs[0].end_acc);

    // r2 is zero for every bag of epoch 1, and best epoch has minimum acc
    for (const auto& b : r3.epochs[0].bags) CHECK(b.r2 == 0.0);
    for (const auto& e : r3.epochs)
        CHECK(r3.epochs[r3.best_epoch - 1].end_acc <= e.end_acc);

    // full determinism of a rerun
    auto [g3b, d3b] = make_models();
    RunReport r3b = run(bags, n_d, g3b, d3b, d_init, three, 99);
    REQUIRE(r3b.epochs.size() == r3.epochs.size());
    for (std::size_t e = 0; e < r3.epochs.size(); ++e)
        CHECK(r3b.epochs[e].end_acc == r3.epochs[e].end_acc);
    for (std::size_t i = 0; i < r3.best_generator.entries.size(); ++i)
        CHECK(r3b.best_generator.entries[i].second.data ==
              r3.best_generator.entries[i].second.data);
}

TEST_CASE("stopping rule respects patience") {
    Rng rng(31);
    EncoderConfig cfg = tiny_config();
    auto p = tiny_instances(16, 32);
    auto n_d = tiny_instances(12, 33);
    BagSequence bags = make_bags(p, 8, 3);
    Rng r(34);
    SentenceModel g(cfg, r), d(cfg, r);
    ParamSnapshot d_init = snapshot(d.params);
    AdversaryConfig acfg;
    acfg.max_epochs = 50;
    acfg.patience = 2;
    RunReport report = run(bags, n_d, g, d, d_init, acfg, 35);
    // either the cap was hit or the last `patience` epochs made no new minimum
    if (report.epochs.size() < acfg.max_epochs) {
        double best = report.epochs[report.best_epoch - 1].end_acc;
        CHECK(report.epochs.size() - report.best_epoch == acfg.patience);
        for (std::size_t e = report.best_epoch; e < report.epochs.size(); ++e)
            CHECK(report.epochs[e].end_acc >= best);
    }
}
