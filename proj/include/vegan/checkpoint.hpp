#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vegan/networks.hpp"

namespace vegan {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline nlohmann::json params_to_json(const std::vector<Var>& params) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : params) {
        nlohmann::json entry;
        entry["name"] = p->name;
        entry["shape"] = p->value.shape;
        entry["data"] = p->value.data;
        arr.push_back(std::move(entry));
    }
    return arr;
}

inline void params_from_json(const nlohmann::json& arr, const std::vector<Var>& params) {
    if (arr.size() != params.size())
        throw CheckpointError("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& entry = arr[i];
        if (entry.at("name").get<std::string>() != params[i]->name)
            throw CheckpointError("checkpoint: parameter order mismatch at '" +
                                  params[i]->name + "'");
        auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        auto data = entry.at("data").get<std::vector<double>>();
        if (shape != params[i]->value.shape)
            throw CheckpointError("checkpoint: shape mismatch for '" + params[i]->name + "'");
        params[i]->value.data = std::move(data);
        params[i]->value.check_finite("checkpoint load");
    }
}

inline nlohmann::json arch_to_json(const ArchConfig& a) {
    return {{"extractor_widths", a.extractor_widths},
            {"decoder_widths", a.decoder_widths},
            {"discriminator_widths", a.discriminator_widths},
            {"latent_dim", a.latent_dim}};
}

inline ArchConfig arch_from_json(const nlohmann::json& j) {
    ArchConfig a;
    a.extractor_widths = j.at("extractor_widths").get<std::vector<std::size_t>>();
    a.decoder_widths = j.at("decoder_widths").get<std::vector<std::size_t>>();
    a.discriminator_widths = j.at("discriminator_widths").get<std::vector<std::size_t>>();
    a.latent_dim = j.at("latent_dim").get<std::size_t>();
    return a;
}

}  // namespace detail

inline nlohmann::json checkpoint_json(const VeganModel& m, const ArchConfig& arch) {
    return {{"kind", "vegan"},
            {"input_dim", m.input_dim},
            {"y_mean", m.y_mean},
            {"y_std", m.y_std},
            {"arch", detail::arch_to_json(arch)},
            {"params", detail::params_to_json(m.all_params())}};
}

inline nlohmann::json checkpoint_json(const TarnetModel& m, const ArchConfig& arch) {
    return {{"kind", "tarnet"},
            {"input_dim", m.input_dim},
            {"y_mean", m.y_mean},
            {"y_std", m.y_std},
            {"arch", detail::arch_to_json(arch)},
            {"params", detail::params_to_json(m.all_params())}};
}

inline void save_checkpoint(const nlohmann::json& ckpt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("checkpoint: cannot write '" + path + "'");
    out << ckpt.dump();
}

inline AnyModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("checkpoint: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    const auto kind = j.at("kind").get<std::string>();
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    const ArchConfig arch = detail::arch_from_json(j.at("arch"));
    if (kind == "vegan") {
        VeganModel m = build_vegan(input_dim, arch, 0);
        m.y_mean = j.value("y_mean", 0.0);
        m.y_std = j.value("y_std", 1.0);
        detail::params_from_json(j.at("params"), m.all_params());
        return m;
    }
    if (kind == "tarnet") {
        TarnetModel m = build_tarnet(input_dim, arch, 0);
        m.y_mean = j.value("y_mean", 0.0);
        m.y_std = j.value("y_std", 1.0);
        detail::params_from_json(j.at("params"), m.all_params());
        return m;
    }
    throw CheckpointError("checkpoint: unknown model kind '" + kind + "'");
}

}  // namespace vegan
