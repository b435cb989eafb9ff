// Command-line front end: dataset generation, corruption, single-model
// training, checkpoint evaluation, and the full experiment grid.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "vegan/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitConfigError = 2;

struct GlobalOpts {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    int threads = 1;
    bool quiet = false;
};

json load_config_or_empty(const GlobalOpts& g) {
    if (g.config.empty()) return json::object();
    return vegan::load_config_file(g.config);
}

void info(const GlobalOpts& g, const std::string& msg) {
    if (!g.quiet) std::cerr << msg << "\n";
}

int cmd_generate(const GlobalOpts& g, const std::string& kind) {
    json cfg = load_config_or_empty(g);
    vegan::GeneratorConfig gen;
    std::string resolved_kind = kind;
    if (cfg.contains("dataset")) {
        const auto& ds = cfg.at("dataset");
        if (resolved_kind.empty())
            resolved_kind = vegan::detail::optional_or<std::string>(ds, "kind", "ihdp_like");
        gen = resolved_kind == "acic_like" ? vegan::GeneratorConfig::acic_like_defaults()
                                           : vegan::GeneratorConfig::ihdp_like_defaults();
        gen.n_samples = vegan::detail::optional_or<std::size_t>(ds, "n_samples", gen.n_samples);
        gen.n_features = vegan::detail::optional_or<std::size_t>(ds, "n_features", gen.n_features);
        gen.n_binary = vegan::detail::optional_or<std::size_t>(ds, "n_binary", gen.n_binary);
        gen.selection_bias_strength = vegan::detail::optional_or<double>(
            ds, "selection_bias_strength", gen.selection_bias_strength);
    } else {
        if (resolved_kind.empty()) resolved_kind = "ihdp_like";
        gen = resolved_kind == "acic_like" ? vegan::GeneratorConfig::acic_like_defaults()
                                           : vegan::GeneratorConfig::ihdp_like_defaults();
    }
    if (resolved_kind != "ihdp_like" && resolved_kind != "acic_like")
        throw vegan::ConfigError("config: unknown dataset kind '" + resolved_kind + "'");
    if (g.seed_set) gen.seed = g.seed;
    const vegan::CausalDataset ds = vegan::generate(gen);
    const std::string out = g.out.empty() ? "dataset.csv" : g.out;
    vegan::save_csv(ds, out);
    info(g, "wrote " + std::to_string(ds.n()) + " rows to " + out);
    return kExitOk;
}

int cmd_corrupt(const GlobalOpts& g, const std::string& in_path, double cl,
                const std::vector<std::string>& targets, double noise_variance) {
    vegan::CausalDataset ds = vegan::load_csv(in_path);
    vegan::CorruptionSpec spec;
    spec.cl = cl;
    spec.target_features = targets;
    spec.noise_variance = noise_variance;
    spec.seed = g.seed;
    const auto means = vegan::column_means(ds);
    const vegan::CausalDataset out_ds = vegan::corrupt(ds, spec, means);
    const std::string out = g.out.empty() ? "corrupted.csv" : g.out;
    vegan::save_csv(out_ds, out);
    info(g, "wrote corrupted dataset to " + out);
    return kExitOk;
}

vegan::CausalDataset dataset_from_config(const json& cfg, std::uint64_t seed) {
    vegan::ExperimentConfig probe;  // reuse the dataset-section parsing
    json wrapper = cfg;
    wrapper["models"] = json::array({"vegan"});
    wrapper["seeds"] = json::array({seed});
    if (!wrapper.contains("corruption")) wrapper["corruption"] = {{"cls", {0.1}}};
    probe = vegan::experiment_config_from_json(wrapper);
    return vegan::detail::materialize_dataset(probe.dataset, seed);
}

int cmd_train(const GlobalOpts& g) {
    if (g.config.empty()) throw vegan::ConfigError("config: train requires --config");
    const json cfg = vegan::load_config_file(g.config);
    const auto model_name = vegan::detail::require<std::string>(cfg, "model");
    const vegan::ModelKind kind = vegan::model_kind_from_string(model_name);

    vegan::TrainConfig tc = vegan::train_config_from_json(
        cfg.contains("train") ? cfg.at("train") : json::object());
    tc.seed = g.seed_set ? g.seed : vegan::detail::optional_or<std::uint64_t>(cfg, "seed", 0);

    vegan::CausalDataset raw = dataset_from_config(cfg, tc.seed);
    const vegan::CausalDataset train_set = vegan::preprocess(raw, vegan::PreprocSpec{});

    std::optional<vegan::Tensor> runtime_X;
    const auto runtime_csv = vegan::detail::optional_or<std::string>(cfg, "runtime_csv", "");
    if (!runtime_csv.empty()) runtime_X = vegan::load_csv(runtime_csv).X;

    info(g, "training " + model_name + " on " + std::to_string(train_set.n()) + " rows");
    vegan::TrainLog log;
    const vegan::AnyModel model =
        vegan::detail::train_model(kind, train_set, runtime_X, tc, log);

    const std::string out_dir = g.out.empty() ? "." : g.out;
    fs::create_directories(out_dir);
    const json ckpt = std::visit(
        [&](const auto& m) { return vegan::checkpoint_json(m, tc.arch); }, model);
    vegan::save_checkpoint(ckpt, (fs::path(out_dir) / "checkpoint.json").string());
    vegan::write_trainlog_csv(log, (fs::path(out_dir) / "trainlog.csv").string());
    info(g, "wrote checkpoint.json and trainlog.csv to " + out_dir);
    return kExitOk;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& ckpt_path, const std::string& data_path,
                 const std::string& mu0_col, const std::string& mu1_col) {
    const vegan::AnyModel model = vegan::load_checkpoint(ckpt_path);
    vegan::CsvSchema schema;
    schema.mu0_col = mu0_col;
    schema.mu1_col = mu1_col;
    const vegan::CausalDataset ds = vegan::load_csv(data_path, schema);
    const vegan::MetricsReport r = vegan::evaluate_model(model, ds, g.seed);
    json out = {{"sqrt_pehe", r.sqrt_pehe},
                {"eps_cate", r.eps_cate},
                {"n_eval", r.n_eval},
                {"seed", r.seed}};
    if (g.out.empty()) {
        std::cout << out.dump(2) << "\n";
    } else {
        std::ofstream f(g.out);
        if (!f) throw vegan::HarnessError("evaluate: cannot write '" + g.out + "'");
        f << out.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_experiment(const GlobalOpts& g) {
    if (g.config.empty()) throw vegan::ConfigError("config: experiment requires --config");
    const json raw = vegan::load_config_file(g.config);
    vegan::ExperimentConfig cfg = vegan::experiment_config_from_json(raw);
    if (!g.out.empty()) cfg.output_dir = g.out;
    if (g.seed_set) cfg.experiment_seed = g.seed;
    info(g, "running grid: " + std::to_string(cfg.models.size()) + " models x " +
                std::to_string(cfg.corruption_levels.size()) + " cls x " +
                std::to_string(cfg.seeds.size()) + " seeds");
    vegan::ExperimentReport report = vegan::run_experiment(cfg, g.threads);
    report.config_echo = raw;
    vegan::emit_report(report, cfg.output_dir);
    info(g, "report written to " + cfg.output_dir);
    if (report.any_failed()) {
        for (const auto& c : report.cells)
            if (c.failed)
                std::cerr << "cell failed: " << c.model << " cl=" << c.cl << " seed=" << c.seed
                          << ": " << c.error << "\n";
        return kExitPartialFailure;
    }
    return kExitOk;
}

int cmd_report(const GlobalOpts& g, const std::string& in_path) {
    std::ifstream f(in_path);
    if (!f) throw vegan::HarnessError("report: cannot open '" + in_path + "'");
    json j;
    f >> j;
    const vegan::ExperimentReport report = vegan::report_from_json(j);
    const std::string out = g.out.empty() ? "." : g.out;
    vegan::emit_report(report, out);
    info(g, "re-rendered report to " + out);
    return report.any_failed() ? kExitPartialFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual prediction under runtime domain corruption"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config, "TOML or JSON config file");
    auto* seed_opt = app.add_option("--seed", g.seed, "Override random seed");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--threads", g.threads, "Max parallel runs")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", g.quiet, "Suppress progress output");

    auto* gen_cmd = app.add_subcommand("generate", "Emit a synthetic dataset CSV");
    std::string gen_kind;
    gen_cmd->add_option("--kind", gen_kind, "ihdp_like or acic_like");

    auto* cor_cmd = app.add_subcommand("corrupt", "Apply runtime corruption to a CSV");
    std::string cor_in;
    double cor_cl = 0.0;
    double cor_nv = 0.1;
    std::vector<std::string> cor_targets;
    cor_cmd->add_option("--in", cor_in, "Input dataset CSV")->required();
    cor_cmd->add_option("--cl", cor_cl, "Corruption level in [0, 1]")->required();
    cor_cmd->add_option("--targets", cor_targets, "Target feature names (default: all)");
    cor_cmd->add_option("--noise-variance", cor_nv, "Shift noise variance");

    auto* train_cmd = app.add_subcommand("train", "Train one model; writes checkpoint + log");

    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_data, eval_mu0 = "mu0", eval_mu1 = "mu1";
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint JSON")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset CSV with true outcome columns")
        ->required();
    eval_cmd->add_option("--mu0-col", eval_mu0, "Column with true control outcome");
    eval_cmd->add_option("--mu1-col", eval_mu1, "Column with true treated outcome");

    auto* exp_cmd = app.add_subcommand("experiment", "Run the full (model x cl x seed) grid");

    auto* rep_cmd = app.add_subcommand("report", "Re-render report files from stored JSON");
    std::string rep_in;
    rep_cmd->add_option("--in", rep_in, "Stored report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    g.seed_set = seed_opt->count() > 0;

    try {
        if (gen_cmd->parsed()) return cmd_generate(g, gen_kind);
        if (cor_cmd->parsed()) return cmd_corrupt(g, cor_in, cor_cl, cor_targets, cor_nv);
        if (train_cmd->parsed()) return cmd_train(g);
        if (eval_cmd->parsed()) return cmd_evaluate(g, eval_ckpt, eval_data, eval_mu0, eval_mu1);
        if (exp_cmd->parsed()) return cmd_experiment(g);
        if (rep_cmd->parsed()) return cmd_report(g, rep_in);
    } catch (const vegan::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartialFailure;
    }
    return kExitOk;
}
