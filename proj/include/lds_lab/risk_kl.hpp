#pragma once

#include "errors.hpp"
#include "estimation.hpp"
#include "linalg.hpp"
#include "model.hpp"

#include <cmath>

namespace lds {

/// KL(P‖Q) of the laws of Y_{1:T} in nats, split by the chain rule into the
/// conditional-mean part and the conditional-covariance part.
struct KLReport {
    double total_kl = 0.0;
    double mean_term = 0.0;
    double cov_term = 0.0;
    double prediction_risk_lb = 0.0;  ///< Σ_t E_P‖E_P[Y_t|past] − E_Q[Y_t|past]‖²
    long horizon = 0;
};

namespace detail {

/// ½[tr(Q⁻¹P) − log det(Q⁻¹P) − d] for SPD P, Q.
inline double gaussian_cov_kl(const Matrix& p, const Matrix& q, const char* what) {
    Eigen::LLT<Matrix> lq(q), lp(p);
    if (lq.info() != Eigen::Success) throw NumericalError(std::string("singular ") + what + " under Q");
    if (lp.info() != Eigen::Success) throw NumericalError(std::string("singular ") + what + " under P (infinite KL)");
    const double logdet_q = 2.0 * lq.matrixLLT().diagonal().array().log().sum();
    const double logdet_p = 2.0 * lp.matrixLLT().diagonal().array().log().sum();
    return 0.5 * (lq.solve(p).trace() - (logdet_p - logdet_q) - static_cast<double>(p.rows()));
}

}  // namespace detail

/// Fully observed models (C = I, Σ_V = 0): transition terms for t = 1..T-1 plus
/// the X_1 term, which vanishes when both models share Σ_init.
inline KLReport gaussian_kl_full_obs(const StateSpaceModel& p, const StateSpaceModel& q, long horizon) {
    if (!p.is_full_observation() || !q.is_full_observation())
        throw ValidationError("full-observation KL needs C = I and Sigma_V = 0");
    if (p.state_dim() != q.state_dim()) throw ValidationError("models must share d_X");
    if (horizon < 1) throw ValidationError("horizon T must be >= 1");
    Eigen::LLT<Matrix> wq(q.sigma_w());
    if (wq.info() != Eigen::Success) throw NumericalError("singular Sigma_W under Q");

    KLReport r;
    r.horizon = horizon;
    if (horizon >= 2) {
        const Matrix gram = risk_gram(p, horizon);
        const Matrix delta = p.A() - q.A();
        const Matrix weighted = delta * gram * delta.transpose();
        r.prediction_risk_lb = std::max(0.0, weighted.trace());
        r.mean_term = 0.5 * std::max(0.0, wq.solve(weighted).trace());
        r.cov_term = static_cast<double>(horizon - 1) * detail::gaussian_cov_kl(p.sigma_w(), q.sigma_w(), "Sigma_W");
    }
    if (p.sigma_init() != q.sigma_init())
        r.cov_term += detail::gaussian_cov_kl(p.sigma_init(), q.sigma_init(), "Sigma_init");
    r.total_kl = r.mean_term + r.cov_term;
    return r;
}

/// Hidden-state models, through the joint Gaussians of Y_{1:T}. With Cholesky
/// factors Cov_P = G Gᵀ and Cov_Q = H Hᵀ, U = H⁻¹G is block lower triangular:
/// its off-diagonal blocks carry the conditional-mean mismatch and its diagonal
/// blocks the per-step conditional covariance ratio.
inline KLReport gaussian_kl_hidden(const StateSpaceModel& p, const StateSpaceModel& q, long horizon,
                                   long cap = 4000) {
    if (p.obs_dim() != q.obs_dim()) throw ValidationError("models must share d_Y");
    const auto d = p.obs_dim();
    const Matrix cov_p = output_covariance(p, horizon, {.cap = cap});
    const Matrix cov_q = output_covariance(q, horizon, {.cap = cap});
    Eigen::LLT<Matrix> lp(cov_p), lq(cov_q);
    if (lq.info() != Eigen::Success) throw NumericalError("Cov_Q(Y_{1:T}) is not positive definite");
    if (lp.info() != Eigen::Success) throw NumericalError("Cov_P(Y_{1:T}) is singular (infinite KL)");
    const Matrix g = lp.matrixL();
    const Matrix h = lq.matrixL();
    const Matrix u = h.triangularView<Eigen::Lower>().solve(g);

    KLReport r;
    r.horizon = horizon;
    double off_diag = 0.0;
    for (long t = 0; t < horizon; ++t) {
        const auto ut = u.block(t * d, t * d, d, d);
        r.cov_term += 0.5 * (ut.squaredNorm() - 2.0 * ut.diagonal().array().abs().log().sum() - static_cast<double>(d));
        // E_P‖Ŷ_P − Ŷ_Q‖² over block row t: ‖H_tt U_t,<t‖² (U_t,<t is the mean mismatch in Q-whitened units).
        if (t > 0) {
            const Matrix ht = h.block(t * d, t * d, d, d);
            const auto mismatch = u.block(t * d, 0, d, t * d);
            off_diag += mismatch.squaredNorm();
            r.prediction_risk_lb += (ht * mismatch).squaredNorm();
        }
    }
    r.mean_term = 0.5 * std::max(0.0, off_diag);
    r.total_kl = r.mean_term + r.cov_term;
    return r;
}

}  // namespace lds
