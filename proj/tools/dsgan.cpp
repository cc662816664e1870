// dsgan: synthetic-data generation, pretraining, adversarial training,
// dataset cleaning and evaluation as one pipeline of subcommands. Every
// command is deterministic given (config, seed) and writes its artifacts
// under --out.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsgan/adversary.hpp"
#include "dsgan/cleaner.hpp"
#include "dsgan/config.hpp"
#include "dsgan/data.hpp"
#include "dsgan/encoder.hpp"
#include "dsgan/eval.hpp"
#include "dsgan/pretrain.hpp"

namespace fs = std::filesystem;
using namespace dsgan;

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed_override = -1;
    std::string relation_filter;
};

struct Ctx {
    RunConfig cfg;
    fs::path out;
    CliArgs args;

    fs::path data_dir() const {
        return cfg.data_dir.empty() ? out / "dataset" : fs::path(cfg.data_dir);
    }
    fs::path checkpoints_dir() const {
        return cfg.checkpoints_dir.empty() ? out / "checkpoints"
                                           : fs::path(cfg.checkpoints_dir);
    }
    fs::path train_dir() const {
        return cfg.train_dir.empty() ? out / "train" : fs::path(cfg.train_dir);
    }
    fs::path clean_dir() const {
        return cfg.clean_dir.empty() ? out / "cleaned" : fs::path(cfg.clean_dir);
    }
};

Ctx make_ctx(const CliArgs& args) {
    Ctx ctx;
    ctx.cfg = load_config(args.config_path);
    if (args.seed_override >= 0)
        ctx.cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    ctx.out = args.out_dir;
    ctx.args = args;
    fs::create_directories(ctx.out);
    fs::copy_file(args.config_path, ctx.out / "config.copy",
                  fs::copy_options::overwrite_existing);
    return ctx;
}

DatasetSplits load_data(const Ctx& ctx) {
    if (!fs::exists(ctx.data_dir() / "P.jsonl"))
        throw InputError("dataset not found at " + ctx.data_dir().string());
    return load_dataset(ctx.data_dir());
}

std::vector<std::string> relation_list(const Ctx& ctx, const DatasetSplits& splits) {
    std::set<std::string> found;
    for (const auto& ins : splits.P) found.insert(ins.relation);
    std::vector<std::string> rels;
    if (!ctx.args.relation_filter.empty()) {
        if (!found.count(ctx.args.relation_filter))
            throw InputError("relation not present in dataset: " + ctx.args.relation_filter);
        rels.push_back(ctx.args.relation_filter);
    } else if (!ctx.cfg.relations.empty()) {
        for (const auto& r : ctx.cfg.relations) {
            if (!found.count(r)) throw InputError("relation not present in dataset: " + r);
            rels.push_back(r);
        }
    } else {
        rels.assign(found.begin(), found.end());  // sorted, deterministic
    }
    return rels;
}

std::vector<Instance> filter_relation(const std::vector<Instance>& v,
                                      const std::string& rel) {
    std::vector<Instance> out;
    for (const auto& i : v)
        if (i.relation == rel) out.push_back(i);
    return out;
}

EncoderConfig encoder_config(const Ctx& ctx, const DatasetSplits& splits) {
    EncoderConfig enc = ctx.cfg.encoder;
    std::size_t bound = 0;
    auto scan = [&](const std::vector<Instance>& v) {
        for (const auto& i : v)
            for (std::size_t t : i.tokens) bound = std::max(bound, t + 1);
    };
    scan(splits.P);
    scan(splits.N_G);
    scan(splits.N_D);
    scan(splits.heldout);
    enc.vocab_size = std::max(enc.vocab_size, bound);
    return enc;
}

SentenceModel model_from_checkpoint(const EncoderConfig& enc, const fs::path& path) {
    if (!fs::exists(path)) throw InputError("checkpoint not found: " + path.string());
    ParamSnapshot snap = load_checkpoint(path);
    EncoderConfig cfg = enc;
    for (const auto& [name, t] : snap.entries)
        if (name == "word_emb") cfg.vocab_size = t.rows();
    Rng rng(0);
    SentenceModel model(cfg, rng);
    restore(model.params, snap);
    return model;
}

void write_summary(const Ctx& ctx, const std::string& name,
                   const std::vector<std::string>& lines) {
    std::ofstream os(ctx.out / name);
    for (const auto& l : lines) os << l << "\n";
}

// ---------------------------------------------------------------------------

int cmd_synth(const Ctx& ctx) {
    SynthConfig scfg = ctx.cfg.synth;
    scfg.seed = ctx.cfg.synth_seed();
    DatasetSplits splits = synth_generate(scfg);
    save_dataset(splits, ctx.out / "dataset");
    auto [tp, fp] = truth_stats(splits.P);
    write_summary(ctx, "synth_summary.txt",
                  {"P=" + std::to_string(splits.P.size()),
                   "N_G=" + std::to_string(splits.N_G.size()),
                   "N_D=" + std::to_string(splits.N_D.size()),
                   "heldout=" + std::to_string(splits.heldout.size()),
                   "true_positives=" + std::to_string(tp),
                   "false_positives=" + std::to_string(fp)});
    return 0;
}

int cmd_pretrain(const Ctx& ctx) {
    DatasetSplits splits = load_data(ctx);
    EncoderConfig enc = encoder_config(ctx, splits);
    fs::create_directories(ctx.checkpoints_dir());
    std::ofstream report(ctx.out / "pretrain_report.csv");
    report << "relation,discriminator_accuracy,generator_mean_prob\n";
    for (const auto& rel : relation_list(ctx, splits)) {
        std::vector<Instance> p = filter_relation(splits.P, rel);
        if (p.empty()) throw InputError("no positive instances for relation " + rel);
        DiscriminatorPretrain d = pretrain_discriminator(p, splits.N_D, ctx.cfg.pretrain,
                                                         enc, ctx.cfg.pretrain_d_seed());
        SentenceModel g = pretrain_generator(p, splits.N_G, ctx.cfg.pretrain, enc,
                                             ctx.cfg.pretrain_g_seed());
        double mean_pg = 0.0;
        for (const auto& ins : p) mean_pg += g.predict_prob(ins);
        mean_pg /= static_cast<double>(p.size());
        save_checkpoint(d.initial, (ctx.checkpoints_dir() / (rel + ".discriminator.ckpt")).string());
        save_checkpoint(snapshot(g.params), (ctx.checkpoints_dir() / (rel + ".generator.ckpt")).string());
        char buf[64];
        std::snprintf(buf, sizeof(buf), ",%.6f,%.6f\n", d.accuracy, mean_pg);
        report << rel << buf;
    }
    return 0;
}

int cmd_train(const Ctx& ctx) {
    DatasetSplits splits = load_data(ctx);
    EncoderConfig enc = encoder_config(ctx, splits);
    fs::create_directories(ctx.train_dir());
    std::vector<std::string> summary;
    for (const auto& rel : relation_list(ctx, splits)) {
        std::vector<Instance> p = filter_relation(splits.P, rel);
        SentenceModel g = model_from_checkpoint(
            enc, ctx.checkpoints_dir() / (rel + ".generator.ckpt"));
        SentenceModel d = model_from_checkpoint(
            enc, ctx.checkpoints_dir() / (rel + ".discriminator.ckpt"));
        ParamSnapshot d_init = snapshot(d.params);
        BagSequence bags = make_bags(p, ctx.cfg.bag_size, ctx.cfg.bag_seed());
        RunReport report = run(bags, splits.N_D, g, d, d_init, ctx.cfg.adversary,
                               ctx.cfg.adversary_seed());
        std::ofstream csv(ctx.train_dir() / (rel + ".run.csv"));
        write_run_csv(report, csv);
        save_checkpoint(report.best_generator,
                        (ctx.train_dir() / (rel + ".generator.ckpt")).string());
        summary.push_back(rel + ": epochs=" + std::to_string(report.epochs.size()) +
                          " best_epoch=" + std::to_string(report.best_epoch) +
                          " best_acc=" + std::to_string(report.epochs[report.best_epoch - 1].end_acc));
    }
    write_summary(ctx, "train_summary.txt", summary);
    return 0;
}

int cmd_clean(const Ctx& ctx) {
    DatasetSplits splits = load_data(ctx);
    EncoderConfig enc = encoder_config(ctx, splits);
    DatasetSplits cleaned;
    cleaned.N_G = splits.N_G;
    cleaned.N_D = splits.N_D;
    cleaned.heldout = splits.heldout;
    std::ofstream csv(ctx.out / "clean_report.csv");
    std::size_t before = splits.P.size() + splits.N_D.size();
    std::vector<std::string> summary;
    for (const auto& rel : relation_list(ctx, splits)) {
        std::vector<Instance> p = filter_relation(splits.P, rel);
        SentenceModel g =
            model_from_checkpoint(enc, ctx.train_dir() / (rel + ".generator.ckpt"));
        RedistributeResult res =
            redistribute(p, {}, g, ctx.cfg.clean_threshold);
        for (auto& ins : res.positives) cleaned.P.push_back(std::move(ins));
        for (auto& ins : res.negatives) cleaned.N_D.push_back(std::move(ins));
        write_clean_csv(res.report, csv);
        summary.push_back(rel + ": kept=" + std::to_string(res.report.positive_after) +
                          " redistributed=" + std::to_string(res.report.negative_after));
    }
    std::size_t after = cleaned.P.size() + cleaned.N_D.size();
    if (before != after)
        throw std::runtime_error("cleaning changed the instance count: " +
                                 std::to_string(before) + " -> " + std::to_string(after));
    summary.push_back("size_conserved: " + std::to_string(before) + " == " +
                      std::to_string(after));
    save_dataset(cleaned, ctx.clean_dir());
    write_summary(ctx, "clean_summary.txt", summary);
    return 0;
}

int cmd_eval(const Ctx& ctx) {
    if (ctx.cfg.eval_seeds < 2) throw InputError("eval.seeds must be at least 2");
    DatasetSplits raw = load_data(ctx);
    if (!fs::exists(ctx.clean_dir() / "P.jsonl"))
        throw InputError("cleaned dataset not found at " + ctx.clean_dir().string());
    DatasetSplits cleaned = load_dataset(ctx.clean_dir());
    EncoderConfig enc = encoder_config(ctx, raw);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < ctx.cfg.eval_seeds; ++i)
        seeds.push_back(ctx.cfg.eval_seed(i));
    ComparisonResult result =
        downstream_compare(raw, cleaned, seeds, ctx.cfg.downstream, enc);
    std::ofstream csv(ctx.out / "eval.csv");
    write_comparison_csv(result, csv);
    write_summary(ctx, "eval_summary.txt",
                  {"auc_baseline_mean=" + std::to_string(result.mean_baseline),
                   "auc_cleaned_mean=" + std::to_string(result.mean_cleaned),
                   "t=" + std::to_string(result.ttest.t),
                   "p=" + std::to_string(result.ttest.p)});
    return 0;
}

int cmd_experiment(const Ctx& ctx) {
    DatasetSplits splits = load_data(ctx);
    EncoderConfig enc = encoder_config(ctx, splits);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < ctx.cfg.eval_seeds; ++i)
        seeds.push_back(ctx.cfg.eval_seed(i));
    std::ofstream csv(ctx.out / "experiment.csv");
    std::vector<std::string> summary;
    for (const auto& rel : relation_list(ctx, splits)) {
        std::vector<Instance> p = filter_relation(splits.P, rel);
        std::size_t m = ctx.cfg.experiment_m ? ctx.cfg.experiment_m : p.size() / 2;
        if (m > p.size())
            throw InputError("experiment.m exceeds |P| for relation " + rel);
        SentenceModel g_dsgan =
            model_from_checkpoint(enc, ctx.train_dir() / (rel + ".generator.ckpt"));
        SentenceModel g_pre = model_from_checkpoint(
            enc, ctx.checkpoints_dir() / (rel + ".generator.ckpt"));
        PositiveSetExperiment result = positive_set_experiment(
            p, g_dsgan, g_pre, splits.N_D, m, seeds, ctx.cfg.experiment_downstream, enc);
        write_experiment_csv(result, csv);
        summary.push_back(rel + ": dsgan=" + std::to_string(result.final_acc_mean[0]) +
                          " pretrained=" + std::to_string(result.final_acc_mean[1]) +
                          " random=" + std::to_string(result.final_acc_mean[2]) +
                          (m == p.size() ? " (m == |P|: identical sets)" : ""));
    }
    write_summary(ctx, "experiment_summary.txt", summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DSGAN adversarial denoising pipeline"};
    app.require_subcommand(1);

    CliArgs args;
    std::map<std::string, int (*)(const Ctx&)> handlers = {
        {"synth", cmd_synth},   {"pretrain", cmd_pretrain}, {"train", cmd_train},
        {"clean", cmd_clean},   {"eval", cmd_eval},         {"experiment", cmd_experiment}};
    std::map<std::string, const char*> descriptions = {
        {"synth", "generate a synthetic dataset with planted ground truth"},
        {"pretrain", "pre-train the discriminator and the overfit generator"},
        {"train", "run the adversarial training loop"},
        {"clean", "redistribute generator-rejected entity pairs into the negative set"},
        {"eval", "compare downstream AUC on raw vs cleaned data"},
        {"experiment", "three-way positive-set quality experiment"}};
    for (auto& [name, fn] : handlers) {
        CLI::App* sub = app.add_subcommand(name, descriptions[name]);
        sub->add_option("--config", args.config_path, "run configuration file")
            ->required();
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed_override, "master seed override");
        sub->add_option("--relation", args.relation_filter, "restrict to one relation");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        for (auto& [name, fn] : handlers)
            if (app.get_subcommand(name)->parsed()) return fn(make_ctx(args));
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
