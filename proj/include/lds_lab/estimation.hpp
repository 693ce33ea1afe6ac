#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "simulate.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lds {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Masked-linear hypothesis class: A(θ) equals `fixed_values` outside `free`,
/// and the free entries are the parameters θ.
class ParamMask {
public:
    ParamMask(BoolMatrix free, Matrix fixed_values) : free_(std::move(free)), fixed_(std::move(fixed_values)) {
        if (free_.rows() != free_.cols() || free_.rows() < 1)
            throw ValidationError("mask must be square with d_X >= 1");
        if (fixed_.rows() != free_.rows() || fixed_.cols() != free_.cols())
            throw ValidationError("fixed values must match the mask shape");
        for (Eigen::Index i = 0; i < free_.rows(); ++i)
            for (Eigen::Index j = 0; j < free_.cols(); ++j)
                if (free_(i, j) && fixed_(i, j) != 0.0)
                    throw ValidationError("fixed values must be zero at free positions");
    }

    /// Free pattern with every non-free entry clamped to zero.
    explicit ParamMask(BoolMatrix free) : ParamMask(free, Matrix::Zero(free.rows(), free.cols())) {}

    const BoolMatrix& free() const noexcept { return free_; }
    const Matrix& fixed_values() const noexcept { return fixed_; }
    Eigen::Index dim() const noexcept { return free_.rows(); }
    long parameter_count() const { return static_cast<long>(free_.count()); }

    std::vector<Eigen::Index> free_columns(Eigen::Index row) const {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < free_.cols(); ++j)
            if (free_(row, j)) cols.push_back(j);
        return cols;
    }

private:
    BoolMatrix free_;
    Matrix fixed_;
};

inline ParamMask top_left_mask(Eigen::Index dim, Eigen::Index k) {
    if (k < 1 || k > dim) throw ValidationError("top-left block size k must be in [1, d_X]");
    BoolMatrix free = BoolMatrix::Constant(dim, dim, false);
    free.topLeftCorner(k, k).setConstant(true);
    return ParamMask(free);
}

struct EstimateReport {
    Matrix a_hat;
    double per_step_risk = 0.0;  ///< total_risk / (T - 1)
    double total_risk = 0.0;
    long horizon = 0;
    long m = 0;
    std::uint64_t seed = 0;
    bool overflowed = false;
};

namespace detail {

inline std::vector<Eigen::Index> complement(const std::vector<Eigen::Index>& cols, Eigen::Index n) {
    std::vector<Eigen::Index> out;
    std::size_t p = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (p < cols.size() && cols[p] == j)
            ++p;
        else
            out.push_back(j);
    }
    return out;
}

inline Matrix select(const Matrix& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
    return out;
}

}  // namespace detail

/// G_T = Σ_{t=1}^{T-1} Γ_t, the Gram matrix of the population risk.
inline Matrix risk_gram(const StateSpaceModel& model, long horizon) {
    if (horizon < 2) throw ValidationError("risk needs T >= 2");
    const auto gammas = state_covariance(model, horizon - 1);
    Matrix g = Matrix::Zero(model.state_dim(), model.state_dim());
    for (std::size_t t = 0; t < gammas.size(); ++t) {
        g += gammas[t];
        if (!all_finite_below(g)) throw OverflowError("risk Gram overflow", static_cast<long>(t + 1));
    }
    return g;
}

/// Σ_{t=1}^{T-1} E‖(Â − A) X_t‖² = tr(Δ G_T Δᵀ).
inline double population_risk(const Matrix& a_hat, const Matrix& a_true, const Matrix& gram) {
    const Matrix delta = a_hat - a_true;
    return std::max(0.0, (delta * gram * delta.transpose()).trace());
}

/// Row-wise least squares over the free entries of each row, non-free entries
/// clamped to the mask's fixed values:
///   min Σ_traj Σ_{t=1}^{T-1} (X_{t+1,i} − A_i X_t)² + ridge ‖free part of A_i‖².
inline Matrix least_squares_masked(const TrajectoryBatch& states, const ParamMask& mask, double ridge = 0.0) {
    if (states.kind() != TrajectoryKind::states) throw ValidationError("least squares needs a state batch");
    if (states.dim() != mask.dim()) throw ValidationError("mask dimension does not match the state dimension");
    if (states.horizon() < 2) throw ValidationError("least squares needs T >= 2");
    if (!(ridge >= 0.0)) throw ValidationError("ridge must be non-negative");
    const auto n = mask.dim();
    // Full second moments, accumulated in a fixed (trajectory, time) order.
    Matrix xx = Matrix::Zero(n, n);  // Σ X_t X_tᵀ
    Matrix yx = Matrix::Zero(n, n);  // Σ X_{t+1} X_tᵀ
    for (long i = 0; i < states.count(); ++i)
        for (long t = 0; t + 1 < states.horizon(); ++t) {
            const auto x = states.point(i, t);
            const auto y = states.point(i, t + 1);
            xx.noalias() += x * x.transpose();
            yx.noalias() += y * x.transpose();
        }
    if (!all_finite_below(xx) || !all_finite_below(yx)) throw OverflowError("least-squares Gram overflow", states.horizon());

    Matrix a_hat = mask.fixed_values();
    for (Eigen::Index row = 0; row < n; ++row) {
        const auto free = mask.free_columns(row);
        if (free.empty()) continue;
        const auto fixed = detail::complement(free, n);
        const std::vector<Eigen::Index> all_rows{row};
        Matrix gram = detail::select(xx, free, free);
        gram.diagonal().array() += ridge;
        // Target X_{t+1,i} − Σ_{j fixed} a_ij X_{t,j}, correlated with the free coordinates.
        Vector rhs = detail::select(yx, all_rows, free).transpose();
        if (!fixed.empty()) {
            const Vector fixed_row = detail::select(mask.fixed_values(), all_rows, fixed).transpose();
            rhs -= detail::select(xx, free, fixed) * fixed_row;
        }
        const auto sol = spd_solve(gram, rhs);
        if (!sol) throw RankDeficiencyError("singular least-squares Gram; add a ridge or more trajectories", row);
        for (std::size_t j = 0; j < free.size(); ++j) a_hat(row, free[j]) = (*sol)(static_cast<Eigen::Index>(j), 0);
    }
    return a_hat;
}

struct BestInClass {
    Matrix a_opt;
    double total_risk = 0.0;
    double per_step_risk = 0.0;
};

/// Square-root factor F of the risk Gram, G_T = F Fᵀ, from
///   G_T = Σ_{k=0}^{T-3} (T-2-k) A^k Σ_W A^{k,ᵀ} + Σ_{k=0}^{T-2} A^k Σ_init A^{k,ᵀ}.
inline Matrix risk_gram_factor(const StateSpaceModel& model, long horizon) {
    if (horizon < 2) throw ValidationError("risk needs T >= 2");
    const auto n = model.state_dim();
    const Matrix lw = psd_factor(model.sigma_w());
    const Matrix li = psd_factor(model.sigma_init());
    Matrix f(n, 2 * n * (horizon - 1));
    Matrix power = Matrix::Identity(n, n);
    for (long k = 0; k <= horizon - 2; ++k) {
        f.block(0, 2 * n * k, n, n) = std::sqrt(static_cast<double>(horizon - 2 - k)) * power * lw;
        f.block(0, 2 * n * k + n, n, n) = power * li;
        power = model.A() * power;
        if (!all_finite_below(power)) throw OverflowError("risk Gram overflow", k + 2);
    }
    return f;
}

/// Exact minimizer of the population risk over the masked class, row by row.
/// With c the fixed-minus-true entries of a row and S its free columns, the
/// row risk is min_x ‖F_Sᵀ x + F_S̄ᵀ c‖² (the Schur complement
/// cᵀ(G_S̄S̄ − G_S̄S G_SS⁻¹ G_SS̄)c), solved by QR on the factor so that Grams
/// with condition numbers near 1/eps stay tractable.
inline BestInClass analytic_best_in_class(const StateSpaceModel& model, const ParamMask& mask, long horizon) {
    if (!model.is_full_observation()) throw ValidationError("best-in-class risk needs a full-observation model");
    if (mask.dim() != model.state_dim()) throw ValidationError("mask dimension does not match the model");
    const auto n = model.state_dim();
    const Matrix factor = risk_gram_factor(model, horizon);
    const Matrix& a_true = model.A();
    Matrix a_opt = mask.fixed_values();
    double total = 0.0;
    for (Eigen::Index row = 0; row < n; ++row) {
        const auto free = mask.free_columns(row);
        const auto fixed = detail::complement(free, n);
        Vector c(static_cast<Eigen::Index>(fixed.size()));
        for (std::size_t j = 0; j < fixed.size(); ++j)
            c(static_cast<Eigen::Index>(j)) = mask.fixed_values()(row, fixed[j]) - a_true(row, fixed[j]);
        if (c.size() == 0 || c.isZero(0.0)) {
            for (auto j : free) a_opt(row, j) = a_true(row, j);
            continue;
        }
        Vector target = Vector::Zero(factor.cols());  // −F_S̄ᵀ c
        for (std::size_t j = 0; j < fixed.size(); ++j)
            target -= c(static_cast<Eigen::Index>(j)) * factor.row(fixed[j]).transpose();
        if (free.empty()) {
            total += target.squaredNorm();
            continue;
        }
        Matrix design(factor.cols(), static_cast<Eigen::Index>(free.size()));
        for (std::size_t j = 0; j < free.size(); ++j) design.col(static_cast<Eigen::Index>(j)) = factor.row(free[j]).transpose();
        Eigen::ColPivHouseholderQR<Matrix> qr(design);
        if (qr.rank() < design.cols()) throw RankDeficiencyError("singular population Gram", row);
        const Vector shift = qr.solve(target);
        total += (design * shift - target).squaredNorm();
        for (std::size_t j = 0; j < free.size(); ++j)
            a_opt(row, free[j]) = a_true(row, free[j]) + shift(static_cast<Eigen::Index>(j));
    }
    BestInClass out;
    out.a_opt = a_opt;
    out.total_risk = total;
    out.per_step_risk = total / static_cast<double>(horizon - 1);
    return out;
}

/// Simulates m trajectories, fits the masked least-squares estimate and scores
/// it with the exact population risk. Overflow is reported in the flag.
inline EstimateReport estimate_and_evaluate(const StateSpaceModel& model, const ParamMask& mask, long horizon, long m,
                                            std::uint64_t seed, double ridge = 0.0, unsigned threads = 1) {
    EstimateReport report;
    report.horizon = horizon;
    report.m = m;
    report.seed = seed;
    try {
        const auto sim = simulate(model, horizon, m, seed, threads);
        report.a_hat = least_squares_masked(sim.states, mask, ridge);
        report.total_risk = population_risk(report.a_hat, model.A(), risk_gram(model, horizon));
        report.per_step_risk = report.total_risk / static_cast<double>(horizon - 1);
        if (!std::isfinite(report.total_risk)) report.overflowed = true;
    } catch (const OverflowError&) {
        report.overflowed = true;
    }
    return report;
}

struct UnstableThresholds {
    long d_star_sq = 0;        ///< Σ over |λ| ≥ 1 of (algebraic multiplicity)²
    long d_star_sq_minus = 0;  ///< d_star_sq − Σ multiplicities
};

inline UnstableThresholds unstable_thresholds(const JordanSpec& spec) {
    spec.validate();
    std::map<double, long> multiplicity;
    for (const auto& b : spec.blocks)
        if (std::abs(b.eig) >= 1.0) multiplicity[b.eig] += b.size;
    UnstableThresholds out;
    long linear = 0;
    for (const auto& [eig, mult] : multiplicity) {
        out.d_star_sq += mult * mult;
        linear += mult;
    }
    out.d_star_sq_minus = out.d_star_sq - linear;
    return out;
}

}  // namespace lds
