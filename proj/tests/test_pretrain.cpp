#include <catch2/catch_amalgamated.hpp>

#include "dsgan/data.hpp"
#include "dsgan/pretrain.hpp"

using namespace dsgan;

namespace {

EncoderConfig small_encoder(std::size_t vocab) {
    EncoderConfig cfg;
    cfg.word_dim = 10;
    cfg.position_dim = 2;
    cfg.window = 3;
    cfg.kernels = 8;
    cfg.max_distance = 10;
    cfg.vocab_size = vocab;
    return cfg;
}

DatasetSplits small_dataset(std::uint64_t seed = 1) {
    SynthConfig cfg;
    cfg.instances_per_split = 160;
    cfg.vocab_size = 400;
    cfg.background_tokens = 128;
    cfg.noise_rate = 0.25;
    cfg.seed = seed;
    return synth_generate(cfg);
}

}  // namespace

TEST_CASE("discriminator pretraining reaches its accuracy target") {
    DatasetSplits splits = small_dataset();
    PretrainConfig cfg;
    auto out = pretrain_discriminator(splits.P, splits.N_D, cfg,
                                      small_encoder(400), 7);
    CHECK(out.accuracy >= cfg.target_accuracy);
    REQUIRE(out.initial.entries.size() == out.model.params.entries().size());
    // the snapshot captures the trained state, reloadable bit for bit
    for (std::size_t i = 0; i < out.initial.entries.size(); ++i)
        CHECK(out.initial.entries[i].second.data ==
              out.model.params.entries()[i].value.data);
}

TEST_CASE("generator pretraining overfits the positive set") {
    DatasetSplits splits = small_dataset(2);
    PretrainConfig cfg;
    SentenceModel g = pretrain_generator(splits.P, splits.N_G, cfg,
                                         small_encoder(400), 9);
    double mean = 0.0;
    for (const auto& ins : splits.P) mean += g.predict_prob(ins);
    mean /= static_cast<double>(splits.P.size());
    CHECK(mean >= cfg.target_mean_prob);
}

TEST_CASE("pretraining is deterministic given the seed") {
    DatasetSplits splits = small_dataset(3);
    PretrainConfig cfg;
    auto a = pretrain_discriminator(splits.P, splits.N_D, cfg, small_encoder(400), 11);
    auto b = pretrain_discriminator(splits.P, splits.N_D, cfg, small_encoder(400), 11);
    CHECK(a.accuracy == b.accuracy);
    for (std::size_t i = 0; i < a.initial.entries.size(); ++i)
        CHECK(a.initial.entries[i].second.data == b.initial.entries[i].second.data);
}

TEST_CASE("inseparable data raises an error carrying the best metric") {
    // positives and negatives drawn from the same distribution
    DatasetSplits splits = small_dataset(4);
    std::vector<Instance> pos(splits.N_D.begin(), splits.N_D.begin() + 40);
    std::vector<Instance> neg(splits.N_D.begin() + 40, splits.N_D.begin() + 80);
    for (auto& i : pos) i.relation = "rel_0";
    PretrainConfig cfg;
    cfg.max_epochs = 3;
    try {
        pretrain_discriminator(pos, neg, cfg, small_encoder(400), 13);
        FAIL("expected PretrainError");
    } catch (const PretrainError& e) {
        CHECK(e.best > 0.0);
        CHECK(e.best < 1.0);
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("not reached"));
    }
}

TEST_CASE("empty splits are rejected") {
    DatasetSplits splits = small_dataset(5);
    PretrainConfig cfg;
    REQUIRE_THROWS(pretrain_discriminator({}, splits.N_D, cfg, small_encoder(400), 1));
    REQUIRE_THROWS(pretrain_generator(splits.P, {}, cfg, small_encoder(400), 1));
    cfg.heldout_fraction = 0.6;
    REQUIRE_THROWS(pretrain_discriminator(splits.P, splits.N_D, cfg,
                                          small_encoder(400), 1));
}
