#pragma once

#include "errors.hpp"
#include "estimation.hpp"
#include "filter_bounds.hpp"
#include "kalman.hpp"
#include "model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace lds {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// A model together with the Jordan structure it was built from, if any.
struct ModelSpec {
    StateSpaceModel model;
    std::optional<JordanSpec> jordan;
};

/// Either a top-left k×k block or an explicit boolean pattern.
struct MaskSpec {
    std::optional<long> top_left_k;
    std::optional<BoolMatrix> free;

    ParamMask build(Eigen::Index dim) const {
        if (top_left_k) return top_left_mask(dim, *top_left_k);
        if (free->rows() != dim) throw ValidationError("explicit mask does not match d_X");
        return ParamMask(*free);
    }
    /// Value written to the `param` column: k for top-left masks, d_M otherwise.
    double param() const { return top_left_k ? static_cast<double>(*top_left_k) : static_cast<double>(free->count()); }
};

struct ExperimentConfig {
    std::string experiment;
    std::optional<ModelSpec> model;    // also P for `kl`
    std::optional<ModelSpec> model_q;  // Q for `kl`
    std::vector<long> horizons;
    std::vector<MaskSpec> masks;
    std::vector<long> windows;
    std::vector<double> window_rule_c;
    long m = 200;
    std::uint64_t master_seed = 0;
    double ridge = 0.0;
    Padding padding = Padding::zero;
    long covariance_cap = 4000;
    long horizon = 0;  // `kl` and `simulate`
    std::vector<long> lemma_n{3, 10, 50, 200};
    std::vector<long> lemma_h{1, 2, 5, 20};
    std::vector<double> lemma_rho{0.0, 0.382, 0.9, 1.0};
    double tol = 1e-8;
    std::vector<std::string> formats{"csv", "json", "svg"};
    std::string config_hash;
};

namespace detail {

inline Matrix matrix_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.empty()) throw ValidationError(std::string(name) + " must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
            throw ValidationError(std::string(name) + " rows must have equal length");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace detail

inline JordanSpec jordan_spec_from_json(const json& j) {
    if (!j.is_array()) throw ValidationError("Jordan spec must be an array of {\"eig\", \"size\"}");
    JordanSpec spec;
    for (const auto& b : j) spec.blocks.push_back({b.at("eig").get<double>(), b.at("size").get<int>()});
    spec.validate();
    return spec;
}

inline json jordan_spec_to_json(const JordanSpec& spec) {
    json out = json::array();
    for (const auto& b : spec.blocks) out.push_back({{"eig", b.eig}, {"size", b.size}});
    return out;
}

/// Parses a model object. Types: "jordan", "random_walk", "explicit".
inline ModelSpec model_from_json(const json& j) {
    const auto type = j.value("type", std::string("jordan"));
    if (type == "jordan") {
        const auto spec = jordan_spec_from_json(j.at("blocks"));
        const double sw = j.value("sigma_w", 1.0);
        const double sv = j.value("sigma_v", 0.0);
        const double si = j.value("sigma_init", sw);
        const auto obs = j.value("observation", std::string("full"));
        if (obs != "full" && obs != "scalar") throw ValidationError("observation must be \"full\" or \"scalar\"");
        auto model = make_jordan_system(spec, sw, sv, si, obs == "full" ? ObservationMode::full_state : ObservationMode::scalar);
        if (j.value("init", std::string()) == "steady_state") model = with_steady_state_init(model);
        return {model, spec};
    }
    if (type == "random_walk") {
        const double q = j.value("q", 1.0);
        const double r = j.value("r", 1.0);
        const auto& init = j.contains("init") ? j.at("init") : json("steady_state");
        if (init.is_string()) {
            if (init.get<std::string>() != "steady_state") throw ValidationError("init must be \"steady_state\" or a variance");
            return {with_steady_state_init(make_random_walk(q, r, q)), std::nullopt};
        }
        return {make_random_walk(q, r, init.get<double>()), std::nullopt};
    }
    if (type == "explicit") {
        const Matrix a = detail::matrix_from_json(j.at("A"), "A");
        const Matrix c = detail::matrix_from_json(j.at("C"), "C");
        const Matrix sw = detail::matrix_from_json(j.at("Sigma_W"), "Sigma_W");
        const Matrix sv = detail::matrix_from_json(j.at("Sigma_V"), "Sigma_V");
        const auto& init = j.at("Sigma_init");
        if (init.is_string()) {
            if (init.get<std::string>() != "steady_state") throw ValidationError("Sigma_init must be a matrix or \"steady_state\"");
            return {with_steady_state_init(StateSpaceModel(a, c, sw, sv, sw)), std::nullopt};
        }
        return {StateSpaceModel(a, c, sw, sv, detail::matrix_from_json(init, "Sigma_init")), std::nullopt};
    }
    throw ValidationError("unknown model type \"" + type + "\"");
}

/// Masks serialise as {"type":"top_left","k":int} or {"type":"explicit","free":[[bool]]}.
inline MaskSpec mask_from_json(const json& j) {
    const auto type = j.value("type", std::string("top_left"));
    if (type == "top_left") return {j.at("k").get<long>(), std::nullopt};
    if (type == "explicit") {
        const auto& rows = j.at("free");
        const auto n = static_cast<Eigen::Index>(rows.size());
        BoolMatrix free(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (static_cast<Eigen::Index>(rows[i].size()) != n) throw ValidationError("explicit mask must be square");
            for (Eigen::Index k = 0; k < n; ++k) free(i, k) = rows[i][k].get<bool>();
        }
        return {std::nullopt, free};
    }
    throw ValidationError("unknown mask type \"" + type + "\"");
}

namespace detail {

inline ModelSpec resolve_model(const json& j, const std::filesystem::path& base) {
    if (j.is_string()) {
        const auto path = base / j.get<std::string>();
        if (!std::filesystem::exists(path)) throw IoError("referenced model file not found: " + path.string());
        auto doc = read_json_file(path);
        return model_from_json(doc.contains("model") ? doc.at("model") : doc);
    }
    return model_from_json(j);
}

template <typename T>
std::vector<T> list_or_scalar(const json& j) {
    if (j.is_array()) return j.get<std::vector<T>>();
    return {j.get<T>()};
}

}  // namespace detail

/// Builds an ExperimentConfig from a parsed document. Relative model paths are
/// resolved against `base`; `seed_override` replaces master_seed.
inline ExperimentConfig config_from_json(json doc, const std::filesystem::path& base = ".",
                                         std::optional<std::uint64_t> seed_override = std::nullopt) {
    try {
        ExperimentConfig c;
        if (seed_override) doc["master_seed"] = *seed_override;
        c.experiment = doc.at("experiment").get<std::string>();
        c.master_seed = doc.value("master_seed", std::uint64_t{0});
        c.m = doc.value("m", 200L);
        c.ridge = doc.value("ridge", 0.0);
        if (doc.contains("tolerances")) {
            const auto& t = doc.at("tolerances");
            c.covariance_cap = t.value("covariance_cap", c.covariance_cap);
            c.tol = t.value("tol", c.tol);
        }
        c.tol = doc.value("tol", c.tol);
        const auto padding = doc.value("padding", std::string("zero"));
        if (padding != "zero" && padding != "skip_warmup") throw ValidationError("padding must be zero or skip_warmup");
        c.padding = padding == "zero" ? Padding::zero : Padding::skip_warmup;
        if (doc.contains("formats")) c.formats = doc.at("formats").get<std::vector<std::string>>();
        if (doc.contains("model")) c.model = detail::resolve_model(doc.at("model"), base);
        if (doc.contains("model_p")) c.model = detail::resolve_model(doc.at("model_p"), base);
        if (doc.contains("model_q")) c.model_q = detail::resolve_model(doc.at("model_q"), base);
        c.horizon = doc.value("T", 0L);
        if (doc.contains("grid")) {
            const auto& g = doc.at("grid");
            if (g.contains("T")) c.horizons = detail::list_or_scalar<long>(g.at("T"));
            if (g.contains("k"))
                for (long k : detail::list_or_scalar<long>(g.at("k"))) c.masks.push_back({k, std::nullopt});
            if (g.contains("masks"))
                for (const auto& mj : g.at("masks")) c.masks.push_back(mask_from_json(mj));
            if (g.contains("h")) c.windows = detail::list_or_scalar<long>(g.at("h"));
            if (g.contains("h_rule")) c.window_rule_c = detail::list_or_scalar<double>(g.at("h_rule").at("c"));
        }
        if (doc.contains("n")) c.lemma_n = detail::list_or_scalar<long>(doc.at("n"));
        if (doc.contains("h")) c.lemma_h = detail::list_or_scalar<long>(doc.at("h"));
        if (doc.contains("rho")) c.lemma_rho = detail::list_or_scalar<double>(doc.at("rho"));

        const auto& e = c.experiment;
        if (e == "jordan-sweep") {
            if (!c.model) throw ValidationError("jordan-sweep needs a model");
            if (!c.model->model.is_full_observation()) throw ValidationError("jordan-sweep needs a full-observation model");
            if (c.horizons.empty() || c.masks.empty()) throw ValidationError("jordan-sweep needs non-empty T and k/mask grids");
            if (c.m < 1) throw ValidationError("m must be >= 1");
            for (const auto& mask : c.masks) mask.build(c.model->model.state_dim());
        } else if (e == "filter-sweep") {
            if (!c.model) throw ValidationError("filter-sweep needs a model");
            if (c.horizons.empty() || (c.windows.empty() && c.window_rule_c.empty()))
                throw ValidationError("filter-sweep needs non-empty T and h (or h_rule) grids");
        } else if (e == "kl") {
            if (!c.model || !c.model_q) throw ValidationError("kl needs model_p and model_q");
            if (c.horizon < 1) throw ValidationError("kl needs T >= 1");
        } else if (e == "simulate") {
            if (!c.model) throw ValidationError("simulate needs a model");
            if (c.horizon < 1 || c.m < 1) throw ValidationError("simulate needs T >= 1 and m >= 1");
        } else if (e == "dare") {
            if (!c.model) throw ValidationError("dare needs a model");
        } else if (e == "verify-lemmas") {
            if (c.lemma_n.empty() || c.lemma_h.empty() || c.lemma_rho.empty())
                throw ValidationError("verify-lemmas needs non-empty n, h, rho lists");
        } else {
            throw ValidationError("unknown experiment \"" + e + "\"");
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(doc.dump())));
        c.config_hash = buf;
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (!std::filesystem::exists(path)) throw IoError("config not found: " + path.string());
    return config_from_json(detail::read_json_file(path), path.parent_path(), seed_override);
}

}  // namespace lds
