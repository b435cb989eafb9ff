#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vegan/rng.hpp"
#include "vegan/tensor.hpp"

namespace vegan {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FeatureKind { Continuous, Binary };

/// Covariates with treatments, factual outcomes and (when synthetic) the
/// ground-truth potential-outcome means.
struct CausalDataset {
    Tensor X;  // N x d
    std::vector<int> t;
    std::vector<double> y;
    std::vector<double> mu0;  // empty when ground truth unknown
    std::vector<double> mu1;
    std::vector<FeatureKind> feature_kinds;
    std::vector<std::string> feature_names;

    std::size_t n() const { return X.rows(); }
    std::size_t d() const { return X.cols(); }
    bool has_ground_truth() const { return !mu0.empty() && !mu1.empty(); }

    std::vector<double> true_tau() const {
        if (!has_ground_truth()) throw DataError("dataset: no ground-truth potential outcomes");
        std::vector<double> tau(n());
        for (std::size_t i = 0; i < n(); ++i) tau[i] = mu1[i] - mu0[i];
        return tau;
    }

    std::size_t count_treated() const {
        return static_cast<std::size_t>(std::count(t.begin(), t.end(), 1));
    }

    std::size_t feature_index(const std::string& name) const {
        for (std::size_t j = 0; j < feature_names.size(); ++j)
            if (feature_names[j] == name) return j;
        throw DataError("dataset: unknown feature '" + name + "'");
    }

    void validate() const {
        if (t.size() != n() || y.size() != n()) throw DataError("dataset: column length mismatch");
        if (feature_kinds.size() != d() || feature_names.size() != d())
            throw DataError("dataset: feature metadata length mismatch");
        for (int v : t)
            if (v != 0 && v != 1) throw DataError("dataset: treatment must be 0/1");
        const std::size_t n1 = count_treated();
        if (n1 == 0 || n1 == n()) throw DataError("dataset: one treatment group is empty");
        if (has_ground_truth() && (mu0.size() != n() || mu1.size() != n()))
            throw DataError("dataset: ground-truth length mismatch");
    }
};

inline std::vector<double> column_means(const CausalDataset& ds) {
    std::vector<double> m(ds.d(), 0.0);
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < ds.d(); ++j) m[j] += ds.X.at(i, j);
    for (auto& v : m) v /= static_cast<double>(ds.n());
    return m;
}

// ---------------------------------------------------------------------------
// Preprocessing: zeros are reserved for runtime missingness, so continuous
// columns go to a strictly positive interval and binary columns to {-1, +1}.
// ---------------------------------------------------------------------------

struct PreprocSpec {
    double lo = 0.05;
    double hi = 1.0;

    void validate() const {
        if (lo <= 0.0) throw DataError("preproc: lower bound must be positive");
        if (hi <= lo) throw DataError("preproc: upper bound must exceed lower bound");
    }
};

/// Column mapping fitted on the training split and reused on test data.
class Preprocessor {
public:
    Preprocessor() = default;

    void fit(const CausalDataset& ds, const PreprocSpec& spec) {
        spec.validate();
        spec_ = spec;
        kinds_ = ds.feature_kinds;
        col_min_.assign(ds.d(), 0.0);
        col_max_.assign(ds.d(), 0.0);
        for (std::size_t j = 0; j < ds.d(); ++j) {
            double lo = ds.X.at(0, j), hi = lo;
            for (std::size_t i = 1; i < ds.n(); ++i) {
                lo = std::min(lo, ds.X.at(i, j));
                hi = std::max(hi, ds.X.at(i, j));
            }
            col_min_[j] = lo;
            col_max_[j] = hi;
        }
        fitted_ = true;
    }

    bool fitted() const { return fitted_; }
    const PreprocSpec& spec() const { return spec_; }

    /// Train-time values land in [lo, hi] / {-1,+1}; out-of-range test values
    /// are not clamped, and any exact zero is nudged by +1e-6.
    CausalDataset apply(const CausalDataset& ds) const {
        if (!fitted_) throw DataError("preproc: apply before fit");
        if (ds.d() != kinds_.size()) throw DataError("preproc: column count mismatch");
        CausalDataset out = ds;
        for (std::size_t j = 0; j < ds.d(); ++j) {
            if (kinds_[j] == FeatureKind::Binary) {
                for (std::size_t i = 0; i < ds.n(); ++i) {
                    const double v = ds.X.at(i, j);
                    out.X.at(i, j) = (v <= col_min_[j]) ? -1.0 : 1.0;
                }
            } else {
                const double range = col_max_[j] - col_min_[j];
                const double mid = 0.5 * (spec_.lo + spec_.hi);
                for (std::size_t i = 0; i < ds.n(); ++i) {
                    double v;
                    if (range == 0.0) {
                        v = mid;  // constant column: mapped to interval midpoint
                    } else {
                        v = spec_.lo +
                            (ds.X.at(i, j) - col_min_[j]) / range * (spec_.hi - spec_.lo);
                    }
                    if (v == 0.0) v = 1e-6;
                    out.X.at(i, j) = v;
                }
            }
        }
        return out;
    }

private:
    bool fitted_ = false;
    PreprocSpec spec_;
    std::vector<FeatureKind> kinds_;
    std::vector<double> col_min_;
    std::vector<double> col_max_;
};

inline CausalDataset preprocess(const CausalDataset& raw, const PreprocSpec& spec) {
    Preprocessor p;
    p.fit(raw, spec);
    return p.apply(raw);
}

// ---------------------------------------------------------------------------
// Synthetic generators with known potential outcomes
// ---------------------------------------------------------------------------

enum class ResponseSurface { IhdpLike, AcicLike };

struct GeneratorConfig {
    std::size_t n_samples = 747;
    std::size_t n_features = 25;
    std::size_t n_binary = 19;
    std::uint64_t seed = 0;
    double selection_bias_strength = 1.0;
    ResponseSurface response_surface = ResponseSurface::IhdpLike;

    static GeneratorConfig ihdp_like_defaults(std::uint64_t seed = 0) {
        GeneratorConfig cfg;
        cfg.seed = seed;
        return cfg;
    }

    static GeneratorConfig acic_like_defaults(std::uint64_t seed = 0) {
        GeneratorConfig cfg;
        cfg.n_samples = 1000;
        cfg.n_features = 200;
        cfg.n_binary = 50;
        cfg.seed = seed;
        cfg.response_surface = ResponseSurface::AcicLike;
        return cfg;
    }

    void validate() const {
        if (n_samples < 20) throw DataError("generator: need at least 20 samples");
        if (n_binary > n_features) throw DataError("generator: n_binary exceeds n_features");
    }
};

/// The 7 columns used as the privacy-sensitive corruption targets on the
/// IHDP-like benchmark (2 continuous + 5 binary).
inline std::vector<std::string> ihdp_private_targets() {
    return {"momage", "work_dur", "sex", "twin", "b_marr", "cig", "drugs"};
}

namespace detail {

inline std::vector<std::string> ihdp_feature_names(std::size_t n_cont, std::size_t n_bin) {
    const std::vector<std::string> cont_named = {"momage", "work_dur"};
    const std::vector<std::string> bin_named = {"sex", "twin", "b_marr", "cig", "drugs"};
    std::vector<std::string> names;
    for (std::size_t j = 0; j < n_cont; ++j)
        names.push_back(j < cont_named.size() ? cont_named[j] : "xc" + std::to_string(j));
    for (std::size_t j = 0; j < n_bin; ++j)
        names.push_back(j < bin_named.size() ? bin_named[j] : "xb" + std::to_string(j));
    return names;
}

/// Draws treatments from a logistic selection model; resamples the projection
/// up to 10 times if either group ends up with fewer than 5 units.
inline std::vector<int> draw_treatments(const Tensor& X, double bias_strength, Rng& rng) {
    const std::size_t n = X.rows(), d = X.cols();
    for (int attempt = 0; attempt < 10; ++attempt) {
        std::vector<double> gamma(d);
        for (auto& g : gamma) g = rng.normal() / std::sqrt(static_cast<double>(d));
        std::vector<int> t(n);
        std::size_t n1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double logit = 0.0;
            for (std::size_t j = 0; j < d; ++j) logit += X.at(i, j) * gamma[j];
            logit *= bias_strength;
            const double p = 1.0 / (1.0 + std::exp(-logit));
            t[i] = rng.bernoulli(p) ? 1 : 0;
            n1 += static_cast<std::size_t>(t[i]);
        }
        if (n1 >= 5 && n - n1 >= 5) return t;
    }
    throw DataError("generator: degenerate treatment split after 10 resamples");
}

}  // namespace detail

inline CausalDataset gen_ihdp_like(const GeneratorConfig& cfg) {
    cfg.validate();
    if (cfg.response_surface != ResponseSurface::IhdpLike)
        throw DataError("gen_ihdp_like: config requests a different surface");
    Rng rng(mix_seed(cfg.seed, 0x1d4d));
    const std::size_t n = cfg.n_samples, d = cfg.n_features;
    const std::size_t n_cont = d - cfg.n_binary;

    CausalDataset ds;
    ds.X = Tensor::zeros({n, d});
    ds.feature_names = detail::ihdp_feature_names(n_cont, cfg.n_binary);
    for (std::size_t j = 0; j < d; ++j)
        ds.feature_kinds.push_back(j < n_cont ? FeatureKind::Continuous : FeatureKind::Binary);

    std::vector<double> bern_p(cfg.n_binary);
    for (auto& p : bern_p) p = rng.uniform(0.2, 0.8);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n_cont; ++j) ds.X.at(i, j) = rng.normal();
        for (std::size_t j = 0; j < cfg.n_binary; ++j)
            ds.X.at(i, n_cont + j) = rng.bernoulli(bern_p[j]) ? 1.0 : 0.0;
    }

    // Exponential/linear response surface with sparse coefficients.
    const double beta_vals[] = {0.0, 0.1, 0.2, 0.3, 0.4};
    std::vector<double> beta(d);
    for (auto& b : beta) {
        const double u = rng.uniform();
        b = u < 0.6 ? 0.0 : beta_vals[1 + static_cast<int>((u - 0.6) / 0.1)];
    }

    ds.mu0.resize(n);
    ds.mu1.resize(n);
    std::vector<double> xb(n);
    for (std::size_t i = 0; i < n; ++i) {
        double lin = 0.0, shifted = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            lin += ds.X.at(i, j) * beta[j];
            shifted += (ds.X.at(i, j) + 0.5) * beta[j];
        }
        xb[i] = lin;
        ds.mu0[i] = std::exp(shifted);
    }
    // omega calibrates the mean true effect on this sample to exactly 4.
    double mean_xb = std::accumulate(xb.begin(), xb.end(), 0.0) / static_cast<double>(n);
    double mean_mu0 = std::accumulate(ds.mu0.begin(), ds.mu0.end(), 0.0) / static_cast<double>(n);
    const double omega = mean_xb - mean_mu0 - 4.0;
    for (std::size_t i = 0; i < n; ++i) ds.mu1[i] = xb[i] - omega;

    ds.t = detail::draw_treatments(ds.X, cfg.selection_bias_strength, rng);
    ds.y.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        ds.y[i] = (ds.t[i] == 1 ? ds.mu1[i] : ds.mu0[i]) + rng.normal();
    ds.validate();
    return ds;
}

inline CausalDataset gen_acic_like(const GeneratorConfig& cfg) {
    cfg.validate();
    if (cfg.response_surface != ResponseSurface::AcicLike)
        throw DataError("gen_acic_like: config requests a different surface");
    Rng rng(mix_seed(cfg.seed, 0xac1c));
    const std::size_t n = cfg.n_samples, d = cfg.n_features;
    const std::size_t n_cont = d - cfg.n_binary;

    CausalDataset ds;
    ds.X = Tensor::zeros({n, d});
    for (std::size_t j = 0; j < d; ++j) {
        ds.feature_names.push_back("f" + std::to_string(j));
        ds.feature_kinds.push_back(j < n_cont ? FeatureKind::Continuous : FeatureKind::Binary);
    }

    std::vector<double> bern_p(cfg.n_binary);
    for (auto& p : bern_p) p = rng.uniform(0.2, 0.8);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n_cont; ++j) ds.X.at(i, j) = rng.normal();
        for (std::size_t j = 0; j < cfg.n_binary; ++j)
            ds.X.at(i, n_cont + j) = rng.bernoulli(bern_p[j]) ? 1.0 : 0.0;
    }

    // Sparse signal: 20 active continuous features, linear plus 10 pairwise
    // interaction terms; heterogeneous bounded effect tau in [0.1, 0.5].
    const std::size_t n_active = std::min<std::size_t>(20, n_cont);
    std::vector<std::size_t> active(n_active);
    for (std::size_t k = 0; k < n_active; ++k) active[k] = k;
    std::vector<double> w(n_active);
    for (auto& v : w) v = rng.uniform(-0.2, 0.2);
    struct Pair { std::size_t a, b; double c; };
    std::vector<Pair> pairs;
    for (int k = 0; k < 10 && n_active >= 2; ++k)
        pairs.push_back({active[rng.index(n_active)], active[rng.index(n_active)],
                         rng.uniform(-0.1, 0.1)});
    std::vector<double> kappa(n_active);
    for (auto& v : kappa) v = rng.normal() / std::sqrt(static_cast<double>(n_active));

    ds.mu0.resize(n);
    ds.mu1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double f = 0.0, xk = 0.0;
        for (std::size_t k = 0; k < n_active; ++k) {
            f += ds.X.at(i, active[k]) * w[k];
            xk += ds.X.at(i, active[k]) * kappa[k];
        }
        for (const auto& pr : pairs) f += pr.c * ds.X.at(i, pr.a) * ds.X.at(i, pr.b);
        ds.mu0[i] = f;
        ds.mu1[i] = f + 0.3 + 0.2 * std::sin(xk);
    }

    ds.t = detail::draw_treatments(ds.X, cfg.selection_bias_strength, rng);
    ds.y.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        ds.y[i] = (ds.t[i] == 1 ? ds.mu1[i] : ds.mu0[i]) + 0.05 * rng.normal();
    ds.validate();
    return ds;
}

inline CausalDataset generate(const GeneratorConfig& cfg) {
    return cfg.response_surface == ResponseSurface::IhdpLike ? gen_ihdp_like(cfg)
                                                             : gen_acic_like(cfg);
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

inline CausalDataset take_rows(const CausalDataset& ds, const std::vector<std::size_t>& idx) {
    CausalDataset out;
    out.X = Tensor::zeros({idx.size(), ds.d()});
    out.feature_kinds = ds.feature_kinds;
    out.feature_names = ds.feature_names;
    out.t.resize(idx.size());
    out.y.resize(idx.size());
    if (ds.has_ground_truth()) {
        out.mu0.resize(idx.size());
        out.mu1.resize(idx.size());
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::size_t i = idx[k];
        for (std::size_t j = 0; j < ds.d(); ++j) out.X.at(k, j) = ds.X.at(i, j);
        out.t[k] = ds.t[i];
        out.y[k] = ds.y[i];
        if (ds.has_ground_truth()) {
            out.mu0[k] = ds.mu0[i];
            out.mu1[k] = ds.mu1[i];
        }
    }
    return out;
}

/// Random permutation split; train gets floor(N * ratio) rows. Reshuffles up
/// to 10 times if a treatment group would be empty in the training part.
inline std::pair<CausalDataset, CausalDataset> split(const CausalDataset& ds, double ratio,
                                                     std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) throw DataError("split: ratio must be in (0, 1)");
    const std::size_t n = ds.n();
    const std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));
    if (n_train == 0 || n_train == n) throw DataError("split: degenerate split size");
    Rng rng(mix_seed(seed, 0x5b17));
    for (int attempt = 0; attempt < 10; ++attempt) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
        std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + n_train);
        std::vector<std::size_t> test_idx(perm.begin() + n_train, perm.end());
        std::size_t n1 = 0;
        for (auto i : train_idx) n1 += static_cast<std::size_t>(ds.t[i]);
        if (n1 == 0 || n1 == n_train) continue;
        return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
    }
    throw DataError("split: could not keep both treatment groups in train after 10 shuffles");
}

// ---------------------------------------------------------------------------
// CSV I/O (RFC-4180 style, header required)
// ---------------------------------------------------------------------------

struct CsvSchema {
    std::string treatment_col = "t";
    std::string outcome_col = "y";
    std::string mu0_col;  // optional
    std::string mu1_col;
    /// Columns forced to a kind regardless of inference.
    std::vector<std::pair<std::string, FeatureKind>> kind_overrides;
};

namespace detail {

inline std::vector<std::string> parse_csv_line(const std::string& line, std::size_t lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c == '\r') {
            // tolerate CRLF
        } else {
            cur += c;
        }
    }
    if (quoted) throw DataError("csv: unterminated quote at line " + std::to_string(lineno));
    fields.push_back(cur);
    return fields;
}

inline double parse_cell(const std::string& s, std::size_t lineno, const std::string& col) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError("csv: non-numeric value '" + s + "' in column '" + col + "' at line " +
                        std::to_string(lineno));
    }
}

}  // namespace detail

inline CausalDataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw DataError("csv: empty file '" + path + "'");
    const auto header = detail::parse_csv_line(line, 1);

    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        return std::nullopt;
    };
    const auto t_col = find_col(schema.treatment_col);
    if (!t_col) throw DataError("csv: missing treatment column '" + schema.treatment_col + "'");
    const auto y_col = find_col(schema.outcome_col);
    if (!y_col) throw DataError("csv: missing outcome column '" + schema.outcome_col + "'");
    std::optional<std::size_t> mu0_col, mu1_col;
    if (!schema.mu0_col.empty()) {
        mu0_col = find_col(schema.mu0_col);
        if (!mu0_col) throw DataError("csv: missing column '" + schema.mu0_col + "'");
    }
    if (!schema.mu1_col.empty()) {
        mu1_col = find_col(schema.mu1_col);
        if (!mu1_col) throw DataError("csv: missing column '" + schema.mu1_col + "'");
    }

    std::vector<std::size_t> feature_cols;
    std::vector<std::string> feature_names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == *t_col || j == *y_col) continue;
        if (mu0_col && j == *mu0_col) continue;
        if (mu1_col && j == *mu1_col) continue;
        feature_cols.push_back(j);
        feature_names.push_back(header[j]);
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> t;
    std::vector<double> y, mu0, mu1;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::parse_csv_line(line, lineno);
        if (fields.size() != header.size())
            throw DataError("csv: expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()) + " at line " + std::to_string(lineno));
        std::vector<double> row;
        for (std::size_t k = 0; k < feature_cols.size(); ++k)
            row.push_back(detail::parse_cell(fields[feature_cols[k]], lineno, feature_names[k]));
        rows.push_back(std::move(row));
        const double tv = detail::parse_cell(fields[*t_col], lineno, schema.treatment_col);
        if (tv != 0.0 && tv != 1.0)
            throw DataError("csv: treatment must be 0/1 at line " + std::to_string(lineno));
        t.push_back(static_cast<int>(tv));
        y.push_back(detail::parse_cell(fields[*y_col], lineno, schema.outcome_col));
        if (mu0_col) mu0.push_back(detail::parse_cell(fields[*mu0_col], lineno, schema.mu0_col));
        if (mu1_col) mu1.push_back(detail::parse_cell(fields[*mu1_col], lineno, schema.mu1_col));
    }
    if (rows.empty()) throw DataError("csv: no data rows in '" + path + "'");

    CausalDataset ds;
    ds.X = Tensor::zeros({rows.size(), feature_cols.size()});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < feature_cols.size(); ++j) ds.X.at(i, j) = rows[i][j];
    ds.t = std::move(t);
    ds.y = std::move(y);
    ds.mu0 = std::move(mu0);
    ds.mu1 = std::move(mu1);
    ds.feature_names = feature_names;

    // Kind inference: at most two distinct values means binary.
    for (std::size_t j = 0; j < ds.d(); ++j) {
        std::set<double> distinct;
        for (std::size_t i = 0; i < ds.n() && distinct.size() <= 2; ++i)
            distinct.insert(ds.X.at(i, j));
        ds.feature_kinds.push_back(distinct.size() <= 2 ? FeatureKind::Binary
                                                        : FeatureKind::Continuous);
    }
    for (const auto& [name, kind] : schema.kind_overrides)
        ds.feature_kinds[ds.feature_index(name)] = kind;

    ds.validate();
    return ds;
}

inline void save_csv(const CausalDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot write '" + path + "'");
    for (const auto& name : ds.feature_names) out << name << ",";
    out << "t,y";
    if (ds.has_ground_truth()) out << ",mu0,mu1";
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.d(); ++j) out << ds.X.at(i, j) << ",";
        out << ds.t[i] << "," << ds.y[i];
        if (ds.has_ground_truth()) out << "," << ds.mu0[i] << "," << ds.mu1[i];
        out << "\n";
    }
}

}  // namespace vegan
