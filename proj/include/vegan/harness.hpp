#pragma once

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "vegan/checkpoint.hpp"
#include "vegan/config.hpp"
#include "vegan/corruption.hpp"
#include "vegan/metrics.hpp"
#include "vegan/trainer.hpp"

namespace vegan {

struct HarnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t cl_bits(double cl) {
    std::uint64_t b = 0;
    std::memcpy(&b, &cl, sizeof(b));
    return b;
}

inline std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Latent representation used for the MMD diagnostics: posterior mean for the
/// VEGAN family, extractor features for the TARNet family.
inline Tensor latent_representation(const VeganModel& m, const Tensor& X) {
    return encode(m, X).mu->value;
}

inline Tensor latent_representation(const TarnetModel& m, const Tensor& X) {
    return tarnet_features(m, X)->value;
}

inline Tensor latent_representation(const AnyModel& m, const Tensor& X) {
    return std::visit([&](const auto& model) { return latent_representation(model, X); }, m);
}

/// Metrics for one trained model on one evaluation set with known effects.
inline MetricsReport evaluate_model(const AnyModel& model, const CausalDataset& eval_set,
                                    std::uint64_t seed) {
    if (wiped_out(eval_set))
        throw HarnessError(
            "evaluate: all covariates are zero; full corruption wipes out every variable and "
            "prediction is infeasible");
    const auto pred = predict_ite(model, eval_set.X);
    const auto tau = eval_set.true_tau();
    MetricsReport r;
    r.sqrt_pehe = pehe(pred.tau_hat, tau);
    r.eps_cate = eps_cate(pred.tau_hat, tau);
    r.n_eval = eval_set.n();
    r.seed = seed;
    return r;
}

// ---------------------------------------------------------------------------
// Experiment grid
// ---------------------------------------------------------------------------

struct RunCell {
    std::string model;
    double cl = 0.0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    MetricsReport in_sample;   // uncorrupted training split
    MetricsReport out_sample;  // corrupted test split
    double volatility_pct = 0.0;
    double train_ms = 0.0;  // timing, reported separately from the main files
    double per_epoch_ms = 0.0;
};

struct ExperimentReport {
    nlohmann::json config_echo;
    std::vector<std::string> models;
    std::vector<double> cls;
    std::vector<std::uint64_t> seeds;
    std::map<std::uint64_t, std::uint64_t> dataset_hashes;  // seed -> covariate hash
    std::vector<RunCell> cells;  // model-major, then cl, then seed

    bool any_failed() const {
        for (const auto& c : cells)
            if (c.failed) return true;
        return false;
    }

    std::vector<const RunCell*> cell_group(const std::string& model, double cl) const {
        std::vector<const RunCell*> out;
        for (const auto& c : cells)
            if (c.model == model && c.cl == cl && !c.failed) out.push_back(&c);
        return out;
    }
};

namespace detail {

inline CausalDataset materialize_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    if (spec.kind == "csv") return load_csv(spec.csv_path, spec.csv_schema);
    GeneratorConfig gen = spec.generator;
    gen.seed = seed;
    return generate(gen);
}

struct PreparedRun {
    CausalDataset train;
    CausalDataset test;
    Preprocessor prep;
    std::vector<double> train_means;
    std::uint64_t dataset_hash = 0;
};

inline PreparedRun prepare_run(const ExperimentConfig& cfg, std::uint64_t seed) {
    PreparedRun out;
    const CausalDataset raw = materialize_dataset(cfg.dataset, seed);
    out.dataset_hash = fnv1a(raw.X.data.data(), raw.X.data.size() * sizeof(double));
    auto [train_raw, test_raw] = split(raw, cfg.split_ratio, seed);
    out.prep.fit(train_raw, cfg.preproc);
    out.train = out.prep.apply(train_raw);
    out.test = out.prep.apply(test_raw);
    out.train_means = column_means(out.train);
    return out;
}

inline bool uses_runtime(ModelKind k) {
    return k == ModelKind::Vegan || k == ModelKind::TarnetPlus;
}

inline AnyModel train_model(ModelKind kind, const CausalDataset& train,
                            const std::optional<Tensor>& runtime_X, const TrainConfig& tc,
                            TrainLog& log_out) {
    switch (kind) {
        case ModelKind::Vegan: {
            auto [m, log] = train_vegan(train, runtime_X, tc);
            log_out = std::move(log);
            return m;
        }
        case ModelKind::VeganI: {
            auto [m, log] = train_vegan_i(train, tc);
            log_out = std::move(log);
            return m;
        }
        case ModelKind::Tarnet: {
            auto [m, log] = train_tarnet(train, tc);
            log_out = std::move(log);
            return m;
        }
        case ModelKind::TarnetPlus: {
            auto [m, log] = train_tarnet_plus(train, runtime_X, tc);
            log_out = std::move(log);
            return m;
        }
    }
    throw HarnessError("unknown model kind");
}

inline Tensor treated_control_split(const CausalDataset& ds, const Tensor& latents, int group) {
    std::size_t count = 0;
    for (int t : ds.t) count += static_cast<std::size_t>(t == group);
    Tensor out = Tensor::zeros({count, latents.cols()});
    std::size_t k = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        if (ds.t[i] != group) continue;
        for (std::size_t j = 0; j < latents.cols(); ++j) out.at(k, j) = latents.at(i, j);
        ++k;
    }
    return out;
}

}  // namespace detail

/// MMD between two samples after jointly standardizing each column over the
/// pooled rows. Makes latent diagnostics comparable across models and
/// training stages whose representations differ in overall scale.
inline double standardized_mmd(const Tensor& A, const Tensor& B, double bandwidth = -1.0) {
    if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols())
        throw HarnessError("standardized_mmd: expects rank-2 inputs with equal column counts");
    const std::size_t d = A.cols();
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    const double n = static_cast<double>(A.rows() + B.rows());
    for (const Tensor* t : {&A, &B})
        for (std::size_t i = 0; i < t->rows(); ++i)
            for (std::size_t j = 0; j < d; ++j) mean[j] += t->at(i, j);
    for (auto& m : mean) m /= n;
    for (const Tensor* t : {&A, &B})
        for (std::size_t i = 0; i < t->rows(); ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double c = t->at(i, j) - mean[j];
                var[j] += c * c;
            }
    Tensor As = A, Bs = B;
    for (std::size_t j = 0; j < d; ++j) {
        double sd = std::sqrt(var[j] / n);
        if (sd < 1e-12) sd = 1.0;
        for (std::size_t i = 0; i < As.rows(); ++i) As.at(i, j) = (A.at(i, j) - mean[j]) / sd;
        for (std::size_t i = 0; i < Bs.rows(); ++i) Bs.at(i, j) = (B.at(i, j) - mean[j]) / sd;
    }
    return mmd_rbf(As, Bs, bandwidth);
}

/// MMD between latent representations of treated and control training rows.
inline double latent_treated_control_mmd(const AnyModel& model, const CausalDataset& train) {
    const Tensor lat = latent_representation(model, train.X);
    const Tensor a = detail::treated_control_split(train, lat, 1);
    const Tensor b = detail::treated_control_split(train, lat, 0);
    return standardized_mmd(a, b);
}

inline double latent_train_runtime_mmd(const AnyModel& model, const CausalDataset& train,
                                       const Tensor& runtime_X) {
    const Tensor a = latent_representation(model, train.X);
    const Tensor b = latent_representation(model, runtime_X);
    return standardized_mmd(a, b);
}

/// Full (model x corruption level x seed) grid. Runtime-transductive models
/// are retrained per corruption level; the others train once per seed.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, int threads = 1) {
    cfg.validate();
    ExperimentReport report;
    for (auto m : cfg.models) report.models.push_back(to_string(m));
    report.cls = cfg.corruption_levels;
    report.seeds = cfg.seeds;

    const std::size_t n_models = cfg.models.size();
    const std::size_t n_cls = cfg.corruption_levels.size();
    const std::size_t n_seeds = cfg.seeds.size();
    report.cells.resize(n_models * n_cls * n_seeds);

    std::mutex hash_mutex;

    // One unit of work = one (model, seed): inner loop over corruption levels
    // so that non-transductive models are trained only once.
    const std::size_t n_units = n_models * n_seeds;
    auto run_unit = [&](std::size_t unit) {
        const std::size_t mi = unit / n_seeds;
        const std::size_t si = unit % n_seeds;
        const ModelKind kind = cfg.models[mi];
        const std::uint64_t seed = cfg.seeds[si];

        detail::PreparedRun prep;
        try {
            prep = detail::prepare_run(cfg, seed);
        } catch (const std::exception& e) {
            for (std::size_t ci = 0; ci < n_cls; ++ci) {
                auto& cell = report.cells[(mi * n_cls + ci) * n_seeds + si];
                cell.model = to_string(kind);
                cell.cl = cfg.corruption_levels[ci];
                cell.seed = seed;
                cell.failed = true;
                cell.error = e.what();
            }
            return;
        }
        {
            std::lock_guard<std::mutex> lock(hash_mutex);
            report.dataset_hashes[seed] = prep.dataset_hash;
        }

        TrainConfig tc = cfg.train;
        tc.seed = seed;

        std::optional<AnyModel> shared_model;  // for non-transductive models
        double shared_train_ms = 0.0, shared_epoch_ms = 0.0;

        for (std::size_t ci = 0; ci < n_cls; ++ci) {
            const double cl = cfg.corruption_levels[ci];
            auto& cell = report.cells[(mi * n_cls + ci) * n_seeds + si];
            cell.model = to_string(kind);
            cell.cl = cl;
            cell.seed = seed;
            try {
                CorruptionSpec cspec;
                cspec.target_features = cfg.corruption_targets;
                cspec.cl = cl;
                cspec.noise_variance = cfg.noise_variance;
                cspec.seed = mix_seed(cfg.experiment_seed, seed, detail::cl_bits(cl));
                const CausalDataset corrupted_test = corrupt(prep.test, cspec, prep.train_means);

                AnyModel model = [&]() -> AnyModel {
                    if (detail::uses_runtime(kind)) {
                        TrainLog log;
                        const auto t0 = std::chrono::steady_clock::now();
                        AnyModel m = detail::train_model(kind, prep.train, corrupted_test.X, tc,
                                                         log);
                        cell.train_ms = std::chrono::duration<double, std::milli>(
                                            std::chrono::steady_clock::now() - t0)
                                            .count();
                        cell.per_epoch_ms =
                            cell.train_ms / static_cast<double>(log.epochs.size());
                        return m;
                    }
                    if (!shared_model) {
                        TrainLog log;
                        const auto t0 = std::chrono::steady_clock::now();
                        shared_model =
                            detail::train_model(kind, prep.train, std::nullopt, tc, log);
                        shared_train_ms = std::chrono::duration<double, std::milli>(
                                              std::chrono::steady_clock::now() - t0)
                                              .count();
                        shared_epoch_ms =
                            shared_train_ms / static_cast<double>(log.epochs.size());
                    }
                    cell.train_ms = shared_train_ms;
                    cell.per_epoch_ms = shared_epoch_ms;
                    return *shared_model;
                }();

                cell.in_sample = evaluate_model(model, prep.train, seed);
                cell.out_sample = evaluate_model(model, corrupted_test, seed);
                const double mmd_tc =
                    MetricsReport::floor_mmd(latent_treated_control_mmd(model, prep.train));
                cell.in_sample.mmd_treated_control = mmd_tc;
                cell.out_sample.mmd_treated_control = mmd_tc;
                cell.out_sample.mmd_train_runtime = MetricsReport::floor_mmd(
                    latent_train_runtime_mmd(model, prep.train, corrupted_test.X));
                cell.volatility_pct = volatility(cell.in_sample.sqrt_pehe,
                                                 cell.out_sample.sqrt_pehe);
                cell.out_sample.volatility_pct = cell.volatility_pct;
            } catch (const std::exception& e) {
                cell.failed = true;
                cell.error = e.what();
            }
        }
    };

    if (threads <= 1) {
        for (std::size_t u = 0; u < n_units; ++u) run_unit(u);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex next_mutex;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&]() {
                while (true) {
                    std::size_t u;
                    {
                        std::lock_guard<std::mutex> lock(next_mutex);
                        if (next >= n_units) return;
                        u = next++;
                    }
                    run_unit(u);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const ExperimentReport& r) {
    nlohmann::json j;
    j["config"] = r.config_echo;
    j["models"] = r.models;
    j["cls"] = r.cls;
    j["seeds"] = r.seeds;
    nlohmann::json hashes = nlohmann::json::object();
    for (const auto& [seed, hash] : r.dataset_hashes) hashes[std::to_string(seed)] = hash;
    j["dataset_hashes"] = hashes;
    // eps_cate below is the absolute error of the estimated average effect.
    j["metric_definitions"] = {
        {"sqrt_pehe", "sqrt of mean squared error of per-row effect estimates"},
        {"eps_cate", "absolute error of the estimated average effect"},
        {"volatility_pct", "100 * |in_sample - corrupted| / in_sample on sqrt_pehe"}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json cj;
        cj["model"] = c.model;
        cj["cl"] = c.cl;
        cj["seed"] = c.seed;
        cj["failed"] = c.failed;
        if (c.failed) {
            cj["error"] = c.error;
        } else {
            cj["in_sample"] = {{"sqrt_pehe", c.in_sample.sqrt_pehe},
                               {"eps_cate", c.in_sample.eps_cate},
                               {"mmd_treated_control", c.in_sample.mmd_treated_control},
                               {"n_eval", c.in_sample.n_eval}};
            cj["out_sample"] = {{"sqrt_pehe", c.out_sample.sqrt_pehe},
                                {"eps_cate", c.out_sample.eps_cate},
                                {"mmd_treated_control", c.out_sample.mmd_treated_control},
                                {"mmd_train_runtime", c.out_sample.mmd_train_runtime.value_or(0.0)},
                                {"n_eval", c.out_sample.n_eval}};
            cj["volatility_pct"] = c.volatility_pct;
        }
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
    ExperimentReport r;
    r.config_echo = j.at("config");
    r.models = j.at("models").get<std::vector<std::string>>();
    r.cls = j.at("cls").get<std::vector<double>>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& [k, v] : j.at("dataset_hashes").items())
        r.dataset_hashes[std::stoull(k)] = v.get<std::uint64_t>();
    for (const auto& cj : j.at("cells")) {
        RunCell c;
        c.model = cj.at("model").get<std::string>();
        c.cl = cj.at("cl").get<double>();
        c.seed = cj.at("seed").get<std::uint64_t>();
        c.failed = cj.at("failed").get<bool>();
        if (c.failed) {
            c.error = cj.at("error").get<std::string>();
        } else {
            const auto& in = cj.at("in_sample");
            c.in_sample.sqrt_pehe = in.at("sqrt_pehe").get<double>();
            c.in_sample.eps_cate = in.at("eps_cate").get<double>();
            c.in_sample.mmd_treated_control = in.at("mmd_treated_control").get<double>();
            c.in_sample.n_eval = in.at("n_eval").get<std::size_t>();
            c.in_sample.seed = c.seed;
            const auto& out = cj.at("out_sample");
            c.out_sample.sqrt_pehe = out.at("sqrt_pehe").get<double>();
            c.out_sample.eps_cate = out.at("eps_cate").get<double>();
            c.out_sample.mmd_treated_control = out.at("mmd_treated_control").get<double>();
            c.out_sample.mmd_train_runtime = out.at("mmd_train_runtime").get<double>();
            c.out_sample.n_eval = out.at("n_eval").get<std::size_t>();
            c.out_sample.seed = c.seed;
            c.volatility_pct = cj.at("volatility_pct").get<double>();
            c.out_sample.volatility_pct = c.volatility_pct;
        }
        r.cells.push_back(std::move(c));
    }
    return r;
}

struct CellAggregate {
    Aggregate out_sqrt_pehe;
    Aggregate out_eps_cate;
    Aggregate in_sqrt_pehe;
    Aggregate mmd_treated_control;
    Aggregate mmd_train_runtime;
    double volatility_pct = 0.0;  // from across-seed mean errors
};

inline CellAggregate aggregate_cell(const ExperimentReport& r, const std::string& model,
                                    double cl) {
    std::vector<double> outs, cates, ins, mmd_tc, mmd_tr;
    for (const auto* c : r.cell_group(model, cl)) {
        outs.push_back(c->out_sample.sqrt_pehe);
        cates.push_back(c->out_sample.eps_cate);
        ins.push_back(c->in_sample.sqrt_pehe);
        mmd_tc.push_back(c->out_sample.mmd_treated_control);
        mmd_tr.push_back(c->out_sample.mmd_train_runtime.value_or(0.0));
    }
    CellAggregate a;
    a.out_sqrt_pehe = aggregate(outs);
    a.out_eps_cate = aggregate(cates);
    a.in_sqrt_pehe = aggregate(ins);
    a.mmd_treated_control = aggregate(mmd_tc);
    a.mmd_train_runtime = aggregate(mmd_tr);
    if (a.in_sqrt_pehe.count > 0 && a.in_sqrt_pehe.mean > 0.0)
        a.volatility_pct = volatility(a.in_sqrt_pehe.mean, a.out_sqrt_pehe.mean);
    return a;
}

/// Writes report.json plus per-metric CSV tables and a markdown summary.
/// Timing data goes to a separate timings.csv so the main files are
/// byte-stable across runs.
inline void emit_report(const ExperimentReport& r, const std::string& out_dir) {
    if (r.cells.empty()) throw HarnessError("report: empty grid");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(fs::path(out_dir) / name);
        if (!f) throw HarnessError("report: cannot write '" + name + "' in '" + out_dir + "'");
        return f;
    };

    {
        auto f = open("report.json");
        f << report_to_json(r).dump(2) << "\n";
    }
    {
        auto pehe_f = open("sqrt_pehe.csv");
        auto cate_f = open("eps_cate.csv");
        auto vol_f = open("volatility.csv");
        auto mmd_f = open("mmd.csv");
        pehe_f << "model,cl,mean,stderr\n";
        cate_f << "model,cl,mean,stderr\n";
        vol_f << "model,cl,delta_pct\n";
        mmd_f << "model,cl,mmd_treated_control,mmd_train_runtime\n";
        for (const auto& model : r.models) {
            for (double cl : r.cls) {
                const auto a = aggregate_cell(r, model, cl);
                if (a.out_sqrt_pehe.count == 0) continue;
                const std::string prefix = model + "," + detail::fmt_double(cl) + ",";
                pehe_f << prefix << detail::fmt_double(a.out_sqrt_pehe.mean) << ","
                       << detail::fmt_double(a.out_sqrt_pehe.stderr_) << "\n";
                cate_f << prefix << detail::fmt_double(a.out_eps_cate.mean) << ","
                       << detail::fmt_double(a.out_eps_cate.stderr_) << "\n";
                vol_f << prefix << detail::fmt_double(a.volatility_pct) << "\n";
                mmd_f << prefix << detail::fmt_double(a.mmd_treated_control.mean) << ","
                      << detail::fmt_double(a.mmd_train_runtime.mean) << "\n";
            }
        }
    }
    {
        auto f = open("timings.csv");
        f << "model,cl,seed,train_ms,per_epoch_ms\n";
        for (const auto& c : r.cells) {
            if (c.failed) continue;
            f << c.model << "," << detail::fmt_double(c.cl) << "," << c.seed << ","
              << detail::fmt_double(c.train_ms) << "," << detail::fmt_double(c.per_epoch_ms)
              << "\n";
        }
    }
    {
        auto f = open("report.md");
        f << "# Experiment report\n\n";
        f << "eps_cate is the absolute error of the estimated average effect; volatility is\n"
             "100 * |in-sample - corrupted| / in-sample on sqrt PEHE.\n\n";
        f << "## Out-of-sample sqrt PEHE (mean +- stderr over seeds)\n\n";
        f << "| model |";
        for (double cl : r.cls) f << " cl=" << cl << " |";
        f << "\n|---|";
        for (std::size_t i = 0; i < r.cls.size(); ++i) f << "---|";
        f << "\n";
        for (const auto& model : r.models) {
            f << "| " << model << " |";
            for (double cl : r.cls) {
                const auto a = aggregate_cell(r, model, cl);
                if (a.out_sqrt_pehe.count == 0) {
                    f << " failed |";
                } else {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), " %.3f ± %.3f |", a.out_sqrt_pehe.mean,
                                  a.out_sqrt_pehe.stderr_);
                    f << buf;
                }
            }
            f << "\n";
        }
        f << "\n## Volatility (delta %)\n\n| model |";
        for (double cl : r.cls) f << " cl=" << cl << " |";
        f << "\n|---|";
        for (std::size_t i = 0; i < r.cls.size(); ++i) f << "---|";
        f << "\n";
        for (const auto& model : r.models) {
            f << "| " << model << " |";
            for (double cl : r.cls) {
                const auto a = aggregate_cell(r, model, cl);
                if (a.out_sqrt_pehe.count == 0) {
                    f << " failed |";
                } else {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), " %.2f |", a.volatility_pct);
                    f << buf;
                }
            }
            f << "\n";
        }
        f << "\n## Config\n\n```json\n" << r.config_echo.dump(2) << "\n```\n";
    }
}

}  // namespace vegan
