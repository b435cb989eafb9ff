#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vegan/dataset.hpp"
#include "vegan/trainer.hpp"

namespace vegan {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Minimal TOML subset -> JSON. Supports [section] / [a.b] headers, bare keys,
// strings, numbers, booleans, single-line arrays, inline tables and comments.
// ---------------------------------------------------------------------------

namespace toml {

namespace detail {

inline void skip_ws(const std::string& s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline nlohmann::json parse_value(const std::string& s, std::size_t& i, std::size_t lineno);

inline nlohmann::json parse_array(const std::string& s, std::size_t& i, std::size_t lineno) {
    nlohmann::json arr = nlohmann::json::array();
    ++i;  // '['
    skip_ws(s, i);
    if (i < s.size() && s[i] == ']') {
        ++i;
        return arr;
    }
    while (true) {
        arr.push_back(parse_value(s, i, lineno));
        skip_ws(s, i);
        if (i < s.size() && s[i] == ',') {
            ++i;
            skip_ws(s, i);
            if (i < s.size() && s[i] == ']') {  // trailing comma
                ++i;
                return arr;
            }
            continue;
        }
        if (i < s.size() && s[i] == ']') {
            ++i;
            return arr;
        }
        throw ConfigError("toml: malformed array at line " + std::to_string(lineno));
    }
}

inline std::string parse_bare_key(const std::string& s, std::size_t& i, std::size_t lineno) {
    std::size_t start = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' ||
                            s[i] == '-' || s[i] == '.'))
        ++i;
    if (i == start) throw ConfigError("toml: expected key at line " + std::to_string(lineno));
    return s.substr(start, i - start);
}

inline nlohmann::json parse_inline_table(const std::string& s, std::size_t& i,
                                         std::size_t lineno) {
    nlohmann::json obj = nlohmann::json::object();
    ++i;  // '{'
    skip_ws(s, i);
    if (i < s.size() && s[i] == '}') {
        ++i;
        return obj;
    }
    while (true) {
        const std::string key = parse_bare_key(s, i, lineno);
        skip_ws(s, i);
        if (i >= s.size() || s[i] != '=')
            throw ConfigError("toml: expected '=' in inline table at line " +
                              std::to_string(lineno));
        ++i;
        skip_ws(s, i);
        obj[key] = parse_value(s, i, lineno);
        skip_ws(s, i);
        if (i < s.size() && s[i] == ',') {
            ++i;
            skip_ws(s, i);
            continue;
        }
        if (i < s.size() && s[i] == '}') {
            ++i;
            return obj;
        }
        throw ConfigError("toml: malformed inline table at line " + std::to_string(lineno));
    }
}

inline nlohmann::json parse_value(const std::string& s, std::size_t& i, std::size_t lineno) {
    skip_ws(s, i);
    if (i >= s.size()) throw ConfigError("toml: missing value at line " + std::to_string(lineno));
    const char c = s[i];
    if (c == '[') return parse_array(s, i, lineno);
    if (c == '{') return parse_inline_table(s, i, lineno);
    if (c == '"') {
        std::string out;
        ++i;
        while (i < s.size() && s[i] != '"') {
            if (s[i] == '\\' && i + 1 < s.size()) {
                ++i;
                switch (s[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default:
                        throw ConfigError("toml: unknown escape at line " +
                                          std::to_string(lineno));
                }
            } else {
                out += s[i];
            }
            ++i;
        }
        if (i >= s.size())
            throw ConfigError("toml: unterminated string at line " + std::to_string(lineno));
        ++i;
        return out;
    }
    // bare token: bool or number
    std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '}' && s[i] != ' ' &&
           s[i] != '\t' && s[i] != '#')
        ++i;
    const std::string tok = s.substr(start, i - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    try {
        if (tok.find_first_of(".eE") == std::string::npos) {
            std::size_t pos = 0;
            const long long v = std::stoll(tok, &pos);
            if (pos == tok.size()) return v;
        }
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("toml: cannot parse value '" + tok + "' at line " + std::to_string(lineno));
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

}  // namespace detail

inline nlohmann::json parse(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* section = &root;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = detail::strip_comment(raw);
        std::size_t i = 0;
        detail::skip_ws(line, i);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (i >= line.size()) continue;
        if (line[i] == '[') {
            ++i;
            const std::string path = detail::parse_bare_key(line, i, lineno);
            if (i >= line.size() || line[i] != ']')
                throw ConfigError("toml: malformed section header at line " +
                                  std::to_string(lineno));
            section = &root;
            std::size_t p = 0;
            while (p != std::string::npos) {
                const std::size_t dot = path.find('.', p);
                const std::string part =
                    dot == std::string::npos ? path.substr(p) : path.substr(p, dot - p);
                section = &(*section)[part];
                p = dot == std::string::npos ? std::string::npos : dot + 1;
            }
            continue;
        }
        const std::string key = detail::parse_bare_key(line, i, lineno);
        detail::skip_ws(line, i);
        if (i >= line.size() || line[i] != '=')
            throw ConfigError("toml: expected '=' after key '" + key + "' at line " +
                              std::to_string(lineno));
        ++i;
        (*section)[key] = detail::parse_value(line, i, lineno);
    }
    return root;
}

}  // namespace toml

/// Reads a TOML or JSON config file; format chosen by first non-space char.
inline nlohmann::json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '{') {
            try {
                return nlohmann::json::parse(text);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("config: invalid JSON: ") + e.what());
            }
        }
        break;
    }
    return toml::parse(text);
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class ModelKind { Vegan, VeganI, Tarnet, TarnetPlus };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Vegan: return "vegan";
        case ModelKind::VeganI: return "vegan_i";
        case ModelKind::Tarnet: return "tarnet";
        case ModelKind::TarnetPlus: return "tarnet_plus";
    }
    return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "vegan") return ModelKind::Vegan;
    if (s == "vegan_i") return ModelKind::VeganI;
    if (s == "tarnet") return ModelKind::Tarnet;
    if (s == "tarnet_plus") return ModelKind::TarnetPlus;
    throw ConfigError("config: unknown model '" + s + "'");
}

struct DatasetSpec {
    std::string kind = "ihdp_like";  // ihdp_like | acic_like | csv
    GeneratorConfig generator;
    std::string csv_path;
    CsvSchema csv_schema;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    PreprocSpec preproc;
    std::vector<double> corruption_levels;
    std::vector<std::string> corruption_targets;  // empty means all
    double noise_variance = 0.1;
    std::vector<ModelKind> models;
    std::vector<std::uint64_t> seeds;
    TrainConfig train;
    double split_ratio = 0.75;
    std::uint64_t experiment_seed = 0;
    std::string output_dir = "out";

    void validate() const {
        if (models.empty()) throw ConfigError("config: need at least one model");
        if (seeds.empty()) throw ConfigError("config: need at least one seed");
        if (corruption_levels.empty()) throw ConfigError("config: need at least one cl");
        for (double cl : corruption_levels)
            if (cl < 0.0 || cl > 1.0) throw ConfigError("config: cl must be in [0, 1]");
        train.validate();
    }
};

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("config: missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: bad value for key '" + key + "'");
    }
}

template <typename T>
T optional_or(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: bad value for key '" + key + "'");
    }
}

}  // namespace detail

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.epochs = detail::optional_or<std::size_t>(j, "epochs", cfg.epochs);
    cfg.batch_size = detail::optional_or<std::size_t>(j, "batch_size", cfg.batch_size);
    cfg.learning_rate = detail::optional_or<double>(j, "learning_rate", cfg.learning_rate);
    cfg.weight_decay = detail::optional_or<double>(j, "weight_decay", cfg.weight_decay);
    const std::string opt = detail::optional_or<std::string>(j, "optimizer", "adam");
    if (opt == "adam")
        cfg.optimizer = OptimizerKind::Adam;
    else if (opt == "sgd")
        cfg.optimizer = OptimizerKind::Sgd;
    else
        throw ConfigError("config: unknown optimizer '" + opt + "'");
    cfg.arch.latent_dim = detail::optional_or<std::size_t>(j, "latent_dim", cfg.arch.latent_dim);
    cfg.arch.extractor_widths = detail::optional_or<std::vector<std::size_t>>(
        j, "extractor_widths", cfg.arch.extractor_widths);
    cfg.arch.decoder_widths =
        detail::optional_or<std::vector<std::size_t>>(j, "decoder_widths", cfg.arch.decoder_widths);
    cfg.arch.discriminator_widths = detail::optional_or<std::vector<std::size_t>>(
        j, "discriminator_widths", cfg.arch.discriminator_widths);
    cfg.use_runtime_da = detail::optional_or<bool>(j, "use_runtime_da", cfg.use_runtime_da);
    cfg.d_steps_per_g_step =
        detail::optional_or<int>(j, "d_steps_per_g_step", cfg.d_steps_per_g_step);
    return cfg;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;

    const auto& ds = j.contains("dataset") ? j.at("dataset") : nlohmann::json::object();
    cfg.dataset.kind = detail::optional_or<std::string>(ds, "kind", "ihdp_like");
    if (cfg.dataset.kind == "ihdp_like") {
        cfg.dataset.generator = GeneratorConfig::ihdp_like_defaults();
    } else if (cfg.dataset.kind == "acic_like") {
        cfg.dataset.generator = GeneratorConfig::acic_like_defaults();
    } else if (cfg.dataset.kind == "csv") {
        cfg.dataset.csv_path = detail::require<std::string>(ds, "path");
        cfg.dataset.csv_schema.treatment_col =
            detail::optional_or<std::string>(ds, "treatment_col", "t");
        cfg.dataset.csv_schema.outcome_col =
            detail::optional_or<std::string>(ds, "outcome_col", "y");
        cfg.dataset.csv_schema.mu0_col = detail::optional_or<std::string>(ds, "mu0_col", "");
        cfg.dataset.csv_schema.mu1_col = detail::optional_or<std::string>(ds, "mu1_col", "");
    } else {
        throw ConfigError("config: unknown dataset kind '" + cfg.dataset.kind + "'");
    }
    auto& gen = cfg.dataset.generator;
    gen.n_samples = detail::optional_or<std::size_t>(ds, "n_samples", gen.n_samples);
    gen.n_features = detail::optional_or<std::size_t>(ds, "n_features", gen.n_features);
    gen.n_binary = detail::optional_or<std::size_t>(ds, "n_binary", gen.n_binary);
    gen.selection_bias_strength =
        detail::optional_or<double>(ds, "selection_bias_strength", gen.selection_bias_strength);

    if (j.contains("preproc")) {
        cfg.preproc.lo = detail::optional_or<double>(j.at("preproc"), "lo", cfg.preproc.lo);
        cfg.preproc.hi = detail::optional_or<double>(j.at("preproc"), "hi", cfg.preproc.hi);
    }

    const auto& corr = j.contains("corruption") ? j.at("corruption") : nlohmann::json::object();
    cfg.corruption_levels = detail::require<std::vector<double>>(corr, "cls");
    cfg.corruption_targets =
        detail::optional_or<std::vector<std::string>>(corr, "targets", {});
    cfg.noise_variance = detail::optional_or<double>(corr, "noise_variance", 0.1);

    for (const auto& m : detail::require<std::vector<std::string>>(j, "models"))
        cfg.models.push_back(model_kind_from_string(m));
    cfg.seeds = detail::require<std::vector<std::uint64_t>>(j, "seeds");

    cfg.train = train_config_from_json(j.contains("train") ? j.at("train")
                                                           : nlohmann::json::object());
    cfg.split_ratio = detail::optional_or<double>(j, "split_ratio", 0.75);
    cfg.experiment_seed = detail::optional_or<std::uint64_t>(j, "experiment_seed", 0);
    cfg.output_dir = detail::optional_or<std::string>(j, "output_dir", "out");
    cfg.validate();
    return cfg;
}

}  // namespace vegan
