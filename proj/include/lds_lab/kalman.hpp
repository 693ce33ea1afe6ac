#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"

#include <cmath>
#include <vector>

namespace lds {

struct SteadyStateFilter {
    Matrix sigma_ss;        ///< one-step predictor covariance at the Riccati fixed point
    Matrix gain;            ///< L = A Σ Cᵀ (C Σ Cᵀ + Σ_V)⁻¹
    Matrix a_cl;            ///< A − L C
    double rho = 0.0;       ///< spectral radius of A_cl
    Matrix innovation_cov;  ///< C Σ Cᵀ + Σ_V
    int iterations = 0;
};

/// One application of the filter Riccati map
///   f(Σ) = A Σ Aᵀ + Σ_W − A Σ Cᵀ (C Σ Cᵀ + Σ_V)⁻¹ C Σ Aᵀ.
inline Matrix riccati_map(const StateSpaceModel& model, const Matrix& sigma) {
    const Matrix& a = model.A();
    const Matrix& c = model.C();
    const Matrix s = c * sigma * c.transpose() + model.sigma_v();
    const Matrix asc = a * sigma * c.transpose();
    return symmetrized(a * sigma * a.transpose() + model.sigma_w() - asc * s.llt().solve(asc.transpose()));
}

/// Observability Gram Σ_{i<d_X} (C Aⁱ)ᵀ(C Aⁱ) has full numerical rank.
inline bool is_observable(const StateSpaceModel& model, double tol = 1e-10) {
    const auto n = model.state_dim();
    Matrix row = model.C();
    Matrix gram = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gram += row.transpose() * row;
        row = row * model.A();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().maxCoeff();
    return top > 0.0 && es.eigenvalues().minCoeff() > tol * top;
}

/// Spectral radius as the limit of ‖Mⁿ‖^{1/n}, n = `power`, with per-step
/// renormalisation so the power never under- or overflows.
inline double spectral_radius_power_norm(const Matrix& m, int power = 200) {
    Matrix p = Matrix::Identity(m.rows(), m.cols());
    double log_norm = 0.0;
    for (int n = 1; n <= power; ++n) {
        p = m * p;
        const double s = p.operatorNorm();
        if (s == 0.0) return 0.0;
        log_norm += std::log(s);
        p /= s;
    }
    return std::exp(log_norm / power);
}

/// Fixed-point iteration of the Riccati map from Σ = Σ_W until the change between
/// iterates is at most tol·max(1, ‖Σ‖).
inline SteadyStateFilter solve_dare(const StateSpaceModel& model, double tol = 1e-14, int max_iter = 1'000'000) {
    if (min_eigenvalue(model.sigma_v()) <= 0.0) throw ValidationError("DARE needs Sigma_V positive definite");
    if (!is_observable(model)) throw ValidationError("DARE needs (C, A) observable");
    Matrix sigma = model.sigma_w();
    int iter = 0;
    for (;;) {
        if (iter == max_iter) throw ConvergenceError("Riccati iteration did not converge");
        Matrix next = riccati_map(model, sigma);
        ++iter;
        if (!all_finite_below(next)) throw ConvergenceError("Riccati iteration diverged");
        const double change = (next - sigma).norm();
        sigma = std::move(next);
        if (change <= tol * std::max(1.0, sigma.norm())) break;
    }
    SteadyStateFilter f;
    f.sigma_ss = sigma;
    f.innovation_cov = symmetrized(model.C() * sigma * model.C().transpose() + model.sigma_v());
    f.gain = f.innovation_cov.llt().solve(model.C() * sigma * model.A().transpose()).transpose();
    f.a_cl = model.A() - f.gain * model.C();
    f.rho = spectral_radius_power_norm(f.a_cl);
    f.iterations = iter;
    return f;
}

/// Coefficients of the steady-state one-step predictor
///   E[Y_t | Y_{1:t-1}] = Σ_{k=1}^{t-1} M_k Y_{t-k},  M_k = C A_cl^{k-1} L.
inline std::vector<Matrix> filter_coeffs(const StateSpaceModel& model, const SteadyStateFilter& ssf, long count) {
    if (count < 1) throw ValidationError("need at least one filter coefficient");
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(count));
    Matrix state_map = ssf.gain;  // A_cl^{k-1} L
    for (long k = 1; k <= count; ++k) {
        out.push_back(model.C() * state_map);
        state_map = ssf.a_cl * state_map;
    }
    return out;
}

/// Innovation impulse response K_0 = I, K_j = C A^{j-1} L: under steady-state
/// initialisation Y_t = Σ_{s≤t} K_{t-s} e_s with e_s i.i.d. N(0, innovation_cov).
inline std::vector<Matrix> innovation_response(const StateSpaceModel& model, const SteadyStateFilter& ssf,
                                               long count) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(count) + 1);
    out.push_back(Matrix::Identity(model.obs_dim(), model.obs_dim()));
    Matrix state_map = ssf.gain;
    for (long j = 1; j <= count; ++j) {
        out.push_back(model.C() * state_map);
        state_map = model.A() * state_map;
        if (!all_finite_below(state_map)) throw OverflowError("innovation response overflow", j);
    }
    return out;
}

inline bool has_steady_state_init(const StateSpaceModel& model, const SteadyStateFilter& ssf, double rel_tol = 1e-8) {
    return (model.sigma_init() - ssf.sigma_ss).norm() <= rel_tol * std::max(1.0, ssf.sigma_ss.norm());
}

/// One-step prediction error covariances for t = 1..T. Constant when the
/// initial covariance is Σ_ss; anything else raises InexactRepresentationError.
inline std::vector<Matrix> kalman_prediction_mse(const StateSpaceModel& model, long horizon) {
    if (horizon < 1) throw ValidationError("horizon T must be >= 1");
    const auto ssf = solve_dare(model);
    if (!has_steady_state_init(model, ssf))
        throw InexactRepresentationError("Sigma_init differs from Sigma_ss; the time-invariant predictor is inexact");
    return std::vector<Matrix>(static_cast<std::size_t>(horizon), ssf.innovation_cov);
}

/// Copy of `model` with Σ_init replaced by its Riccati fixed point.
inline StateSpaceModel with_steady_state_init(const StateSpaceModel& model) {
    return model.with_sigma_init(solve_dare(model).sigma_ss);
}

}  // namespace lds
