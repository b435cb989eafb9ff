#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "vegan/nn.hpp"
#include "vegan/rng.hpp"
#include "vegan/tensor.hpp"

namespace vegan {

constexpr double kSigmaFloor = 1e-4;
constexpr double kProbClamp = 1e-7;

/// Architecture knobs; defaults follow the tuned module sizes.
struct ArchConfig {
    std::vector<std::size_t> extractor_widths = {100, 100, 100};
    std::vector<std::size_t> decoder_widths = {200, 200};
    std::vector<std::size_t> discriminator_widths = {100, 100};
    std::size_t latent_dim = 20;
};

namespace detail {

inline MlpSpec widths_spec(std::size_t in, const std::vector<std::size_t>& hidden,
                           std::size_t out, OutputActivation out_act) {
    MlpSpec spec;
    spec.layer_sizes.push_back(in);
    for (auto w : hidden) spec.layer_sizes.push_back(w);
    spec.layer_sizes.push_back(out);
    spec.output_activation = out_act;
    return spec;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// VEGAN
// ---------------------------------------------------------------------------

struct VeganModel {
    std::size_t input_dim = 0;
    std::size_t latent_dim = 0;
    // Outcome standardization fitted by the trainer; identity until trained.
    double y_mean = 0.0;
    double y_std = 1.0;
    Mlp g_phi;       // d -> extractor widths, ELU throughout
    Mlp mlp_mu;      // extractor out -> l
    Mlp mlp_sigma;   // extractor out -> l, softplus + floor
    Mlp psi1, psi0;  // l -> decoder widths -> 1
    Mlp d_delta, d_beta;  // l -> disc widths -> 1, sigmoid output

    std::vector<Var> phi_params() const {
        std::vector<Var> out = g_phi.params();
        for (auto& p : mlp_mu.params()) out.push_back(p);
        for (auto& p : mlp_sigma.params()) out.push_back(p);
        return out;
    }

    std::vector<Var> all_params() const {
        std::vector<Var> out = phi_params();
        for (const Mlp* m : {&psi1, &psi0, &d_delta, &d_beta})
            for (auto& p : m->params()) out.push_back(p);
        return out;
    }
};

inline VeganModel build_vegan(std::size_t input_dim, const ArchConfig& arch, std::uint64_t seed) {
    VeganModel m;
    m.input_dim = input_dim;
    m.latent_dim = arch.latent_dim;
    const std::size_t h = arch.extractor_widths.back();
    std::vector<std::size_t> ext_hidden(arch.extractor_widths.begin(),
                                        arch.extractor_widths.end() - 1);
    m.g_phi = build_mlp(detail::widths_spec(input_dim, ext_hidden, h, OutputActivation::Identity),
                        mix_seed(seed, 1), "g_phi");
    m.mlp_mu = build_mlp(detail::widths_spec(h, {}, arch.latent_dim, OutputActivation::Identity),
                         mix_seed(seed, 2), "mlp_mu");
    m.mlp_sigma = build_mlp(
        detail::widths_spec(h, {}, arch.latent_dim, OutputActivation::Softplus),
        mix_seed(seed, 3), "mlp_sigma");
    m.psi1 = build_mlp(detail::widths_spec(arch.latent_dim, arch.decoder_widths, 1,
                                           OutputActivation::Identity),
                       mix_seed(seed, 4), "psi1");
    m.psi0 = build_mlp(detail::widths_spec(arch.latent_dim, arch.decoder_widths, 1,
                                           OutputActivation::Identity),
                       mix_seed(seed, 5), "psi0");
    m.d_delta = build_mlp(detail::widths_spec(arch.latent_dim, arch.discriminator_widths, 1,
                                              OutputActivation::Sigmoid),
                          mix_seed(seed, 6), "d_delta");
    m.d_beta = build_mlp(detail::widths_spec(arch.latent_dim, arch.discriminator_widths, 1,
                                             OutputActivation::Sigmoid),
                         mix_seed(seed, 7), "d_beta");
    return m;
}

/// One encoded batch; z = mu + sigma .* eps holds exactly.
struct LatentSample {
    Var mu;
    Var sigma;
    Tensor eps;
    Var z;
};

/// eps == nullptr means deterministic encoding (z = mu).
inline LatentSample encode(const VeganModel& m, const Tensor& X, const Tensor* eps = nullptr) {
    if (X.cols() != m.input_dim)
        throw DimensionError("encode: input has " + std::to_string(X.cols()) +
                             " columns, model expects " + std::to_string(m.input_dim));
    LatentSample out;
    Var h = elu(mlp_forward(m.g_phi, make_const(X)));
    out.mu = mlp_forward(m.mlp_mu, h);
    out.sigma = add_scalar(mlp_forward(m.mlp_sigma, h), kSigmaFloor);
    if (eps) {
        if (eps->shape != out.mu->value.shape)
            throw DimensionError("encode: eps shape mismatch");
        out.eps = *eps;
        out.z = add(out.mu, mul(out.sigma, make_const(out.eps)));
    } else {
        out.eps = Tensor::zeros(out.mu->value.shape);
        out.z = out.mu;
    }
    return out;
}

inline Tensor sample_eps(std::size_t rows, std::size_t latent_dim, Rng& rng) {
    Tensor eps = Tensor::zeros({rows, latent_dim});
    for (auto& v : eps.data) v = rng.normal();
    return eps;
}

/// Closed-form KL(q || N(0, I)) averaged over the batch; diagnostic only,
/// never part of any training objective.
inline double diagnostic_kl(const LatentSample& s) {
    const Tensor& mu = s.mu->value;
    const Tensor& sg = s.sigma->value;
    double kl = 0.0;
    for (std::size_t i = 0; i < mu.numel(); ++i) {
        const double m = mu.data[i], v = sg.data[i];
        kl += 0.5 * (m * m + v * v - 1.0 - 2.0 * std::log(v));
    }
    return kl / static_cast<double>(mu.rows());
}

struct ItePrediction {
    std::vector<double> y0_hat;
    std::vector<double> y1_hat;
    std::vector<double> tau_hat;
};

namespace detail {

inline ItePrediction prediction_from(const Var& y0, const Var& y1, double y_mean, double y_std) {
    ItePrediction p;
    const std::size_t n = y0->value.rows();
    p.y0_hat.resize(n);
    p.y1_hat.resize(n);
    p.tau_hat.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.y0_hat[i] = y0->value.at(i, 0) * y_std + y_mean;
        p.y1_hat[i] = y1->value.at(i, 0) * y_std + y_mean;
        p.tau_hat[i] = p.y1_hat[i] - p.y0_hat[i];
    }
    return p;
}

}  // namespace detail

/// Deterministic inference: z is the posterior mean (no sampling).
inline ItePrediction predict_ite(const VeganModel& m, const Tensor& X) {
    const LatentSample s = encode(m, X);
    return detail::prediction_from(mlp_forward(m.psi0, s.z), mlp_forward(m.psi1, s.z), m.y_mean,
                                   m.y_std);
}

// ---------------------------------------------------------------------------
// TARNet family
// ---------------------------------------------------------------------------

struct TarnetModel {
    std::size_t input_dim = 0;
    std::size_t feature_dim = 0;
    double y_mean = 0.0;
    double y_std = 1.0;
    Mlp extractor;  // d -> extractor widths, deterministic
    Mlp psi1, psi0;
    Mlp d_beta;  // used only by the TARNet+ variant

    std::vector<Var> extractor_params() const { return extractor.params(); }

    std::vector<Var> all_params() const {
        std::vector<Var> out = extractor.params();
        for (const Mlp* m : {&psi1, &psi0, &d_beta})
            for (auto& p : m->params()) out.push_back(p);
        return out;
    }
};

inline TarnetModel build_tarnet(std::size_t input_dim, const ArchConfig& arch,
                                std::uint64_t seed) {
    TarnetModel m;
    m.input_dim = input_dim;
    m.feature_dim = arch.extractor_widths.back();
    std::vector<std::size_t> ext_hidden(arch.extractor_widths.begin(),
                                        arch.extractor_widths.end() - 1);
    m.extractor = build_mlp(
        detail::widths_spec(input_dim, ext_hidden, m.feature_dim, OutputActivation::Identity),
        mix_seed(seed, 11), "extractor");
    m.psi1 = build_mlp(detail::widths_spec(m.feature_dim, arch.decoder_widths, 1,
                                           OutputActivation::Identity),
                       mix_seed(seed, 12), "psi1");
    m.psi0 = build_mlp(detail::widths_spec(m.feature_dim, arch.decoder_widths, 1,
                                           OutputActivation::Identity),
                       mix_seed(seed, 13), "psi0");
    m.d_beta = build_mlp(detail::widths_spec(m.feature_dim, arch.discriminator_widths, 1,
                                             OutputActivation::Sigmoid),
                         mix_seed(seed, 14), "d_beta");
    return m;
}

inline Var tarnet_features(const TarnetModel& m, const Tensor& X) {
    if (X.cols() != m.input_dim)
        throw DimensionError("tarnet: input width mismatch");
    return elu(mlp_forward(m.extractor, make_const(X)));
}

inline ItePrediction predict_ite(const TarnetModel& m, const Tensor& X) {
    const Var h = tarnet_features(m, X);
    return detail::prediction_from(mlp_forward(m.psi0, h), mlp_forward(m.psi1, h), m.y_mean,
                                   m.y_std);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Gaussian likelihood with unit variance reduces to half squared error.
inline Var loss_reconstruction_group(const Var& y_hat, const Var& y) {
    if (y_hat->value.numel() == 0 || y->value.numel() == 0)
        throw ContractError("reconstruction: empty group in batch");
    if (y_hat->value.numel() != y->value.numel())
        throw DimensionError("reconstruction: prediction/target length mismatch");
    return mul_scalar(mean(square(sub(y_hat, y))), 0.5);
}

inline Var mean_log_prob(const Var& p) {
    return mean(log_op(clamp(p, kProbClamp, 1.0 - kProbClamp)));
}

inline Var mean_log_one_minus_prob(const Var& p) {
    Var one_minus = sub(make_const(Tensor::full(p->value.shape, 1.0)), p);
    return mean(log_op(clamp(one_minus, kProbClamp, 1.0 - kProbClamp)));
}

/// BCE for the prior discriminator: Gaussian noise labelled 1, source
/// latents labelled 0. Inputs are the discriminator outputs.
inline Var bce_real_fake(const Var& d_real, const Var& d_fake) {
    if (d_real->value.rows() != d_fake->value.rows())
        throw DimensionError("bce: bucket sizes differ");
    return neg(add(mean_log_prob(d_real), mean_log_one_minus_prob(d_fake)));
}

inline Var loss_d_delta(const VeganModel& m, const Var& noise, const Var& z_sr) {
    return bce_real_fake(mlp_forward(m.d_delta, noise), mlp_forward(m.d_delta, z_sr));
}

/// Training latents are "real", runtime latents "fake".
inline Var loss_d_beta(const Mlp& d_beta, const Var& z_sr, const Var& z_tr) {
    return bce_real_fake(mlp_forward(d_beta, z_sr), mlp_forward(d_beta, z_tr));
}

/// Generator terms given fixed discriminators: reconstruction plus the
/// deception terms (non-saturating for the prior game). The D_beta terms are
/// present only when a runtime latent batch is supplied.
struct GeneratorLossParts {
    Var total;
    Var reconstruction;
};

inline GeneratorLossParts loss_generator(const VeganModel& m, const Var& z_sr_treated,
                                         const Var& y_treated, const Var& z_sr_control,
                                         const Var& y_control, const Var& z_sr_full,
                                         const Var* z_tr) {
    GeneratorLossParts parts;
    parts.reconstruction =
        add(loss_reconstruction_group(mlp_forward(m.psi1, z_sr_treated), y_treated),
            loss_reconstruction_group(mlp_forward(m.psi0, z_sr_control), y_control));
    Var total = sub(parts.reconstruction, mean_log_prob(mlp_forward(m.d_delta, z_sr_full)));
    if (z_tr) {
        total = sub(total, mean_log_one_minus_prob(mlp_forward(m.d_beta, z_sr_full)));
        total = sub(total, mean_log_prob(mlp_forward(m.d_beta, *z_tr)));
    }
    parts.total = total;
    return parts;
}

/// TARNet / TARNet+ objective over deterministic extractor features.
inline GeneratorLossParts loss_tarnet(const TarnetModel& m, const Var& h_treated,
                                      const Var& y_treated, const Var& h_control,
                                      const Var& y_control, const Var& h_full,
                                      const Var* h_runtime) {
    GeneratorLossParts parts;
    parts.reconstruction =
        add(loss_reconstruction_group(mlp_forward(m.psi1, h_treated), y_treated),
            loss_reconstruction_group(mlp_forward(m.psi0, h_control), y_control));
    Var total = parts.reconstruction;
    if (h_runtime) {
        total = sub(total, mean_log_one_minus_prob(mlp_forward(m.d_beta, h_full)));
        total = sub(total, mean_log_prob(mlp_forward(m.d_beta, *h_runtime)));
    }
    parts.total = total;
    return parts;
}

using AnyModel = std::variant<VeganModel, TarnetModel>;

inline ItePrediction predict_ite(const AnyModel& m, const Tensor& X) {
    return std::visit([&](const auto& model) { return predict_ite(model, X); }, m);
}

}  // namespace vegan
