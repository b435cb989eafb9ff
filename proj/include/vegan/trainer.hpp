#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "vegan/dataset.hpp"
#include "vegan/networks.hpp"
#include "vegan/nn.hpp"

namespace vegan {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    OptimizerKind optimizer = OptimizerKind::Adam;
    ArchConfig arch;
    std::uint64_t seed = 0;
    bool use_runtime_da = true;
    int d_steps_per_g_step = 1;

    void validate() const {
        if (batch_size < 4 || batch_size % 2 != 0)
            throw TrainError("train config: batch size must be even and >= 4");
        if (epochs < 1) throw TrainError("train config: epochs must be >= 1");
        if (d_steps_per_g_step < 1) throw TrainError("train config: d steps must be >= 1");
    }
};

struct EpochLog {
    double reconstruction = 0.0;
    std::optional<double> d_delta_bce;
    std::optional<double> d_beta_bce;
    double generator_loss = 0.0;
    double wall_ms = 0.0;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
};

inline void write_trainlog_csv(const TrainLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw TrainError("trainlog: cannot write '" + path + "'");
    out << "epoch,reconstruction,d_delta_bce,d_beta_bce,generator_loss,wall_time_ms\n";
    out.precision(10);
    for (std::size_t e = 0; e < log.epochs.size(); ++e) {
        const auto& r = log.epochs[e];
        out << e << "," << r.reconstruction << ",";
        if (r.d_delta_bce) out << *r.d_delta_bce;
        out << ",";
        if (r.d_beta_bce) out << *r.d_beta_bce;
        out << "," << r.generator_loss << "," << r.wall_ms << "\n";
    }
}

// ---------------------------------------------------------------------------
// Balanced batching
// ---------------------------------------------------------------------------

/// m/2 treated rows followed by m/2 control rows, drawn uniformly with
/// replacement within each group, plus m fresh standard-normal noise vectors.
struct Batch {
    Tensor X;        // m x d, treated half first
    Tensor y1;       // m/2 x 1, factual outcomes of treated rows
    Tensor y0;       // m/2 x 1
    Tensor noise;    // m x latent_dim
};

inline Batch sample_balanced_batch(const CausalDataset& train, std::size_t m,
                                   std::size_t latent_dim, Rng& rng) {
    if (m < 2 || m % 2 != 0) throw TrainError("batch: size must be even and >= 2");
    std::vector<std::size_t> treated, control;
    for (std::size_t i = 0; i < train.n(); ++i)
        (train.t[i] == 1 ? treated : control).push_back(i);
    if (treated.empty() || control.empty())
        throw TrainError("batch: a treatment group is empty");
    const std::size_t half = m / 2;
    Batch b;
    b.X = Tensor::zeros({m, train.d()});
    b.y1 = Tensor::zeros({half, 1});
    b.y0 = Tensor::zeros({half, 1});
    for (std::size_t k = 0; k < half; ++k) {
        const std::size_t i = treated[rng.index(treated.size())];
        for (std::size_t j = 0; j < train.d(); ++j) b.X.at(k, j) = train.X.at(i, j);
        b.y1.at(k, 0) = train.y[i];
    }
    for (std::size_t k = 0; k < half; ++k) {
        const std::size_t i = control[rng.index(control.size())];
        for (std::size_t j = 0; j < train.d(); ++j) b.X.at(half + k, j) = train.X.at(i, j);
        b.y0.at(k, 0) = train.y[i];
    }
    b.noise = Tensor::zeros({m, latent_dim});
    for (auto& v : b.noise.data) v = rng.normal();
    return b;
}

namespace detail {

inline Tensor sample_runtime_rows(const Tensor& runtime_X, std::size_t m, Rng& rng) {
    Tensor out = Tensor::zeros({m, runtime_X.cols()});
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = rng.index(runtime_X.rows());
        for (std::size_t j = 0; j < runtime_X.cols(); ++j) out.at(k, j) = runtime_X.at(i, j);
    }
    return out;
}

struct Averager {
    double sum = 0.0;
    std::size_t count = 0;
    void add(double v) { sum += v; ++count; }
    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

struct OutcomeScaler {
    double mean = 0.0;
    double std = 1.0;
};

/// Outcomes are standardized for training so the reconstruction term does not
/// drown the adversarial terms; predictions are mapped back at inference.
inline OutcomeScaler standardize_outcomes(CausalDataset& train) {
    OutcomeScaler s;
    double acc = 0.0;
    for (double v : train.y) acc += v;
    s.mean = acc / static_cast<double>(train.y.size());
    double ss = 0.0;
    for (double v : train.y) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(train.y.size()));
    if (s.std < 1e-8) s.std = 1.0;
    for (double& v : train.y) v = (v - s.mean) / s.std;
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// VEGAN training (covers the VEGAN_I ablation via runtime_X = nullopt)
// ---------------------------------------------------------------------------

inline std::pair<VeganModel, TrainLog> train_vegan(const CausalDataset& train,
                                                   const std::optional<Tensor>& runtime_X,
                                                   const TrainConfig& cfg) {
    cfg.validate();
    const bool with_runtime = runtime_X.has_value() && cfg.use_runtime_da;
    if (with_runtime && runtime_X->cols() != train.d())
        throw TrainError("train: runtime covariate width mismatch");

    VeganModel model = build_vegan(train.d(), cfg.arch, mix_seed(cfg.seed, 0x1717));
    Rng rng(mix_seed(cfg.seed, 0x7247));

    CausalDataset train_std = train;
    const auto scaler = detail::standardize_outcomes(train_std);
    model.y_mean = scaler.mean;
    model.y_std = scaler.std;

    Optimizer opt_delta(cfg.optimizer, model.d_delta.params(), cfg.learning_rate, cfg.weight_decay);
    Optimizer opt_beta(cfg.optimizer, model.d_beta.params(), cfg.learning_rate, cfg.weight_decay);
    Optimizer opt_phi(cfg.optimizer, model.phi_params(), cfg.learning_rate, cfg.weight_decay);
    Optimizer opt_psi1(cfg.optimizer, model.psi1.params(), cfg.learning_rate, cfg.weight_decay);
    Optimizer opt_psi0(cfg.optimizer, model.psi0.params(), cfg.learning_rate, cfg.weight_decay);

    const std::size_t l = cfg.arch.latent_dim;
    const std::size_t m = cfg.batch_size;
    const std::size_t half = m / 2;
    const std::size_t batches = (train.n() + m - 1) / m;

    TrainLog log;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochLog el;
        detail::Averager recon_avg, dd_avg, db_avg, gen_avg;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            try {
                Batch batch;
                LatentSample enc;
                std::optional<LatentSample> enc_tr;
                for (int ds = 0; ds < cfg.d_steps_per_g_step; ++ds) {
                    batch = sample_balanced_batch(train_std, m, l, rng);
                    Tensor eps = sample_eps(m, l, rng);
                    enc = encode(model, batch.X, &eps);

                    // Discriminator updates see the latents as constants.
                    Var z_detached = make_const(enc.z->value);
                    Var l_dd = loss_d_delta(model, make_const(batch.noise), z_detached);
                    opt_delta.zero_grad();
                    backward(l_dd);
                    opt_delta.step();
                    dd_avg.add(l_dd->value.scalar_value());

                    if (with_runtime) {
                        Tensor x_tr = detail::sample_runtime_rows(*runtime_X, m, rng);
                        Tensor eps_tr = sample_eps(m, l, rng);
                        enc_tr = encode(model, x_tr, &eps_tr);
                        Var l_db = loss_d_beta(model.d_beta, z_detached,
                                               make_const(enc_tr->z->value));
                        opt_beta.zero_grad();
                        backward(l_db);
                        opt_beta.step();
                        db_avg.add(l_db->value.scalar_value());
                    }
                }

                // Generator/decoder update against the freshly stepped
                // discriminators, reusing the last encode graph.
                Var z_treated = slice_rows(enc.z, 0, half);
                Var z_control = slice_rows(enc.z, half, half);
                const Var* z_tr_ptr = enc_tr ? &enc_tr->z : nullptr;
                auto parts = loss_generator(model, z_treated, make_const(batch.y1), z_control,
                                            make_const(batch.y0), enc.z, z_tr_ptr);
                opt_phi.zero_grad();
                opt_psi1.zero_grad();
                opt_psi0.zero_grad();
                backward(parts.total);
                opt_phi.step();
                opt_psi1.step();
                opt_psi0.step();
                recon_avg.add(parts.reconstruction->value.scalar_value());
                gen_avg.add(parts.total->value.scalar_value());
            } catch (const NumericDomainError& e) {
                throw TrainError("training diverged at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(bi) + ": " + e.what());
            }
        }
        el.reconstruction = recon_avg.mean();
        el.d_delta_bce = dd_avg.mean();
        if (with_runtime) el.d_beta_bce = db_avg.mean();
        el.generator_loss = gen_avg.mean();
        el.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               t0)
                         .count();
        log.epochs.push_back(el);
    }
    return {std::move(model), std::move(log)};
}

inline std::pair<VeganModel, TrainLog> train_vegan_i(const CausalDataset& train,
                                                     const TrainConfig& cfg) {
    return train_vegan(train, std::nullopt, cfg);
}

// ---------------------------------------------------------------------------
// TARNet / TARNet+ training
// ---------------------------------------------------------------------------

inline std::pair<TarnetModel, TrainLog> train_tarnet_impl(const CausalDataset& train,
                                                          const std::optional<Tensor>& runtime_X,
                                                          const TrainConfig& cfg) {
    cfg.validate();
    const bool with_runtime = runtime_X.has_value() && cfg.use_runtime_da;
    if (with_runtime && runtime_X->cols() != train.d())
        throw TrainError("train: runtime covariate width mismatch");

    TarnetModel model = build_tarnet(train.d(), cfg.arch, mix_seed(cfg.seed, 0x7a47));
    Rng rng(mix_seed(cfg.seed, 0x7248));

    CausalDataset train_std = train;
    const auto scaler = detail::standardize_outcomes(train_std);
    model.y_mean = scaler.mean;
    model.y_std = scaler.std;

    Optimizer opt_beta(cfg.optimizer, model.d_beta.params(), cfg.learning_rate, cfg.weight_decay);
    Optimizer opt_ext(cfg.optimizer, model.extractor_params(), cfg.learning_rate,
                      cfg.weight_decay);
    Optimizer opt_psi1(cfg.optimizer, model.psi1.params(), cfg.learning_rate, cfg.weight_decay);
    Optimizer opt_psi0(cfg.optimizer, model.psi0.params(), cfg.learning_rate, cfg.weight_decay);

    const std::size_t m = cfg.batch_size;
    const std::size_t half = m / 2;
    const std::size_t batches = (train.n() + m - 1) / m;

    TrainLog log;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochLog el;
        detail::Averager recon_avg, db_avg, gen_avg;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            try {
                Batch batch;
                Var h;
                std::optional<Var> h_tr;
                for (int ds = 0; ds < cfg.d_steps_per_g_step; ++ds) {
                    batch = sample_balanced_batch(train_std, m, cfg.arch.latent_dim, rng);
                    h = tarnet_features(model, batch.X);
                    if (with_runtime) {
                        Tensor x_tr = detail::sample_runtime_rows(*runtime_X, m, rng);
                        h_tr = tarnet_features(model, x_tr);
                        Var l_db = loss_d_beta(model.d_beta, make_const(h->value),
                                               make_const((*h_tr)->value));
                        opt_beta.zero_grad();
                        backward(l_db);
                        opt_beta.step();
                        db_avg.add(l_db->value.scalar_value());
                    } else if (ds > 0) {
                        break;  // no discriminator to iterate
                    }
                }

                Var h_treated = slice_rows(h, 0, half);
                Var h_control = slice_rows(h, half, half);
                const Var* h_tr_ptr = h_tr ? &*h_tr : nullptr;
                auto parts = loss_tarnet(model, h_treated, make_const(batch.y1), h_control,
                                         make_const(batch.y0), h, h_tr_ptr);
                opt_ext.zero_grad();
                opt_psi1.zero_grad();
                opt_psi0.zero_grad();
                backward(parts.total);
                opt_ext.step();
                opt_psi1.step();
                opt_psi0.step();
                recon_avg.add(parts.reconstruction->value.scalar_value());
                gen_avg.add(parts.total->value.scalar_value());
            } catch (const NumericDomainError& e) {
                throw TrainError("training diverged at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(bi) + ": " + e.what());
            }
        }
        el.reconstruction = recon_avg.mean();
        if (with_runtime) el.d_beta_bce = db_avg.mean();
        el.generator_loss = gen_avg.mean();
        el.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               t0)
                         .count();
        log.epochs.push_back(el);
    }
    return {std::move(model), std::move(log)};
}

inline std::pair<TarnetModel, TrainLog> train_tarnet(const CausalDataset& train,
                                                     const TrainConfig& cfg) {
    return train_tarnet_impl(train, std::nullopt, cfg);
}

inline std::pair<TarnetModel, TrainLog> train_tarnet_plus(const CausalDataset& train,
                                                          const std::optional<Tensor>& runtime_X,
                                                          const TrainConfig& cfg) {
    return train_tarnet_impl(train, runtime_X, cfg);
}

}  // namespace vegan
