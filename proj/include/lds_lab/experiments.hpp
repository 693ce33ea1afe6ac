#pragma once

#include "config.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "filter_bounds.hpp"
#include "kalman.hpp"
#include "lemmas.hpp"
#include "parallel.hpp"
#include "risk_kl.hpp"
#include "simulate.hpp"
#include "svg.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace lds {

struct SweepRow {
    std::string experiment;
    std::uint64_t seed = 0;
    long horizon = 0;
    double param = 0.0;
    std::string metric;
    double value = 0.0;
    std::string flag;  ///< non-empty ("overflow", "cap_exceeded", ...) replaces the value

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepResult {
    std::string experiment;
    std::string config_hash;
    std::string version = kVersion;
    std::vector<SweepRow> rows;

    friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

/// Per-grid-point seed; depends on the master seed and T only, so every mask at
/// a given horizon sees the same trajectories and removing a grid point leaves
/// the other rows untouched.
inline std::uint64_t grid_seed(std::uint64_t master_seed, long horizon) {
    return mix_key({master_seed, static_cast<std::uint64_t>(Stream::grid), static_cast<std::uint64_t>(horizon)});
}

/// For each (mask, T): exact best-in-class per-step risk, Monte Carlo
/// least-squares per-step risk from m trajectories, and the unstable-mode
/// thresholds of the Jordan spec.
inline SweepResult run_jordan_sweep(const ExperimentConfig& cfg, unsigned threads = 1) {
    const auto& spec = *cfg.model;
    const auto& model = spec.model;
    std::optional<UnstableThresholds> thresholds;
    if (spec.jordan) thresholds = unstable_thresholds(*spec.jordan);

    const std::size_t nt = cfg.horizons.size();
    const std::size_t points = cfg.masks.size() * nt;
    std::vector<std::vector<SweepRow>> slots(points);
    parallel_for(points, threads, [&](std::size_t idx) {
        const auto& mask_spec = cfg.masks[idx / nt];
        const long horizon = cfg.horizons[idx % nt];
        const std::uint64_t seed = grid_seed(cfg.master_seed, horizon);
        const double param = mask_spec.param();
        auto row = [&](const std::string& metric, double value, std::string flag = {}) {
            slots[idx].push_back({cfg.experiment, seed, horizon, param, metric, value, std::move(flag)});
        };
        const auto mask = mask_spec.build(model.state_dim());
        try {
            row("analytic_per_step", analytic_best_in_class(model, mask, horizon).per_step_risk);
        } catch (const OverflowError&) {
            row("analytic_per_step", 0.0, "overflow");
        }
        const auto mc = estimate_and_evaluate(model, mask, horizon, cfg.m, seed, cfg.ridge);
        if (mc.overflowed)
            row("mc_per_step", 0.0, "overflow");
        else
            row("mc_per_step", mc.per_step_risk);
        row("d_M", static_cast<double>(mask.parameter_count()));
        if (thresholds) {
            row("d_star_sq", static_cast<double>(thresholds->d_star_sq));
            row("d_star_sq_minus", static_cast<double>(thresholds->d_star_sq_minus));
        }
    });
    SweepResult out{cfg.experiment, cfg.config_hash, kVersion, {}};
    for (auto& s : slots) out.rows.insert(out.rows.end(), s.begin(), s.end());
    return out;
}

/// For each (h, T): exact excess of the best length-h filter, the per-step
/// relaxation and the Schur-complement bound. With an h rule the param column
/// holds c and h = max(1, ⌊c·ln T⌋) is reported as metric `h`.
inline SweepResult run_filter_sweep(const ExperimentConfig& cfg, unsigned threads = 1) {
    const auto& model = cfg.model->model;
    const auto ssf = solve_dare(model);
    const bool by_rule = cfg.windows.empty();
    const std::size_t np = by_rule ? cfg.window_rule_c.size() : cfg.windows.size();
    const std::size_t nt = cfg.horizons.size();
    std::vector<std::vector<SweepRow>> slots(np * nt);
    parallel_for(np * nt, threads, [&](std::size_t idx) {
        const long horizon = cfg.horizons[idx % nt];
        const double param = by_rule ? cfg.window_rule_c[idx / nt] : static_cast<double>(cfg.windows[idx / nt]);
        const long h = by_rule ? std::max(1L, static_cast<long>(std::floor(param * std::log(static_cast<double>(horizon)))))
                               : cfg.windows[idx / nt];
        auto row = [&](const std::string& metric, double value, std::string flag = {}) {
            slots[idx].push_back({cfg.experiment, cfg.master_seed, horizon, param, metric, value, std::move(flag)});
        };
        static const char* metrics[] = {"excess_total", "excess_per_step", "relaxed_sum",
                                        "relaxed_per_step", "schur_bound", "schur_per_step"};
        if (by_rule) row("h", static_cast<double>(h));
        std::string flag;
        if (horizon * model.obs_dim() > cfg.covariance_cap)
            flag = "cap_exceeded";
        else if (h > horizon - 1)
            flag = "window_exceeds_horizon";
        if (!flag.empty()) {
            for (const char* m : metrics) row(m, 0.0, flag);
            return;
        }
        try {
            const double steps = static_cast<double>(horizon - 1);
            const auto exact = optimal_truncated_filter(model, horizon, h, cfg.padding, cfg.covariance_cap);
            double relaxed = 0.0;
            for (double v : per_step_relaxed_bound(model, horizon, h, cfg.covariance_cap)) relaxed += v;
            const double schur = schur_lower_bound(model, horizon, h, cfg.covariance_cap);
            row(metrics[0], exact.excess_total);
            row(metrics[1], exact.excess_per_step);
            row(metrics[2], relaxed);
            row(metrics[3], relaxed / steps);
            row(metrics[4], schur);
            row(metrics[5], schur / steps);
        } catch (const OverflowError&) {
            for (const char* m : metrics) row(m, 0.0, "overflow");
        }
    });
    SweepResult out{cfg.experiment, cfg.config_hash, kVersion, {}};
    out.rows.push_back({cfg.experiment, cfg.master_seed, 0, 0.0, "rho", ssf.rho, {}});
    for (auto& s : slots) out.rows.insert(out.rows.end(), s.begin(), s.end());
    return out;
}

inline SimulationResult run_simulate(const ExperimentConfig& cfg, unsigned threads = 1) {
    return simulate(cfg.model->model, cfg.horizon, cfg.m, cfg.master_seed, threads);
}

inline json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

inline json dare_report(const StateSpaceModel& model) {
    const auto f = solve_dare(model);
    return {{"Sigma_ss", matrix_to_json(f.sigma_ss)},
            {"L", matrix_to_json(f.gain)},
            {"rho", f.rho},
            {"innovation_cov", matrix_to_json(f.innovation_cov)}};
}

/// Full-observation formula when both models observe the state, joint
/// Gaussian formula otherwise.
inline json kl_report(const ExperimentConfig& cfg) {
    const auto& p = cfg.model->model;
    const auto& q = cfg.model_q->model;
    const bool full = p.is_full_observation() && q.is_full_observation();
    const auto r = full ? gaussian_kl_full_obs(p, q, cfg.horizon) : gaussian_kl_hidden(p, q, cfg.horizon, cfg.covariance_cap);
    return {{"method", full ? "full_observation" : "joint_gaussian"},
            {"T", r.horizon},
            {"total_kl", r.total_kl},
            {"mean_term", r.mean_term},
            {"cov_term", r.cov_term},
            {"prediction_risk_lb", r.prediction_risk_lb}};
}

inline json lemma_check_to_json(const LemmaCheck& c) {
    return {{"n", c.n},
            {"h", c.h},
            {"rho", c.rho},
            {"r22_inv_rel_err", c.r22_inv_rel_err},
            {"cross_term_rel_err", c.cross_term_rel_err},
            {"q11_rel_err", c.q11_rel_err},
            {"q_cross_rel_err", c.q_cross_rel_err},
            {"passed", c.passed}};
}

/// Every (N, h, ρ) on the grid with h < N.
inline std::vector<LemmaCheck> run_verify_lemmas(const std::vector<long>& ns, const std::vector<long>& hs,
                                                 const std::vector<double>& rhos, double tol) {
    std::vector<LemmaCheck> out;
    for (long n : ns)
        for (long h : hs)
            if (h >= 1 && h < n)
                for (double rho : rhos) out.push_back(verify_lemmas(n, h, rho, tol));
    return out;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Columns experiment,seed,T,param,metric,value in that order.
inline std::string to_csv(const SweepResult& r) {
    std::string out = "experiment,seed,T,param,metric,value\n";
    for (const auto& row : r.rows) {
        out += row.experiment + ',' + std::to_string(row.seed) + ',' + std::to_string(row.horizon) + ',' +
               detail::shortest(row.param) + ',' + row.metric + ',' +
               (row.flag.empty() ? detail::shortest(row.value) : row.flag) + '\n';
    }
    return out;
}

inline json to_json(const SweepResult& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json j = {{"experiment", row.experiment}, {"seed", row.seed}, {"T", row.horizon},
                  {"param", row.param},           {"metric", row.metric}};
        if (row.flag.empty())
            j["value"] = row.value;
        else {
            j["value"] = nullptr;
            j["flag"] = row.flag;
        }
        rows.push_back(std::move(j));
    }
    return {{"experiment", r.experiment}, {"config_hash", r.config_hash}, {"version", r.version}, {"rows", rows}};
}

inline SweepResult sweep_from_json(const json& j) {
    SweepResult r;
    r.experiment = j.at("experiment").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.version = j.at("version").get<std::string>();
    for (const auto& row : j.at("rows")) {
        SweepRow s;
        s.experiment = row.at("experiment").get<std::string>();
        s.seed = row.at("seed").get<std::uint64_t>();
        s.horizon = row.at("T").get<long>();
        s.param = row.at("param").get<double>();
        s.metric = row.at("metric").get<std::string>();
        if (row.at("value").is_null())
            s.flag = row.at("flag").get<std::string>();
        else
            s.value = row.at("value").get<double>();
        r.rows.push_back(std::move(s));
    }
    return r;
}

/// Metrics charted for each experiment (per-step quantities against T).
inline std::vector<std::string> charted_metrics(const std::string& experiment) {
    if (experiment == "jordan-sweep") return {"analytic_per_step", "mc_per_step"};
    if (experiment == "filter-sweep") return {"excess_per_step", "relaxed_per_step", "schur_per_step"};
    return {};
}

/// One series per param value, in order of first appearance.
inline std::string sweep_chart(const SweepResult& r, const std::string& metric) {
    std::vector<ChartSeries> series;
    std::map<double, std::size_t> index;
    const char* prefix = r.experiment == "jordan-sweep" ? "k=" : (r.experiment == "filter-sweep" ? "h=" : "param=");
    for (const auto& row : r.rows) {
        if (row.metric != metric) continue;
        auto [it, inserted] = index.try_emplace(row.param, series.size());
        if (inserted) series.push_back({prefix + detail::shortest(row.param), {}});
        series[it->second].points.emplace_back(static_cast<double>(row.horizon), row.flag.empty() ? row.value : NAN);
    }
    return render_log_chart(r.experiment + ": " + metric, "T", metric, series);
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

/// Writes <stem>.csv, <stem>.json and <stem>_<metric>.svg per requested format.
inline std::vector<std::filesystem::path> emit_outputs(const SweepResult& r, const std::filesystem::path& dir,
                                                       const std::vector<std::string>& formats,
                                                       const std::string& stem) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    for (const auto& f : formats) {
        if (f == "csv") {
            written.push_back(dir / (stem + ".csv"));
            detail::write_text(written.back(), to_csv(r));
        } else if (f == "json") {
            written.push_back(dir / (stem + ".json"));
            detail::write_text(written.back(), to_json(r).dump(2) + "\n");
        } else if (f == "svg") {
            for (const auto& metric : charted_metrics(r.experiment)) {
                written.push_back(dir / (stem + "_" + metric + ".svg"));
                detail::write_text(written.back(), sweep_chart(r, metric));
            }
        } else {
            throw ValidationError("unknown output format \"" + f + "\"");
        }
    }
    return written;
}

}  // namespace lds
