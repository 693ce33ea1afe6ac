#pragma once

#include "errors.hpp"
#include "kalman.hpp"
#include "linalg.hpp"
#include "model.hpp"

#include <Eigen/QR>

#include <cmath>
#include <iostream>
#include <vector>

namespace lds {

/// Time-invariant length-h linear filter f_t(Y_{1:t-1}) = Σ_{k=1}^{h} F_k Y_{t-k}.
struct FilterHypothesis {
    long h = 0;
    std::vector<Matrix> taps;  ///< F_1..F_h

    void validate() const {
        if (h < 1 || static_cast<long>(taps.size()) != h) throw ValidationError("filter needs h >= 1 taps");
        for (const auto& f : taps)
            if (!f.allFinite()) throw ValidationError("filter taps must be finite");
    }
};

/// How Y_{t-k} with t − k ≤ 0 is treated in the summed risk.
enum class Padding {
    zero,         ///< Y_s := 0 for s ≤ 0, sum over t = 1..T-1
    skip_warmup,  ///< sum only over t = h+1..T-1
};

struct TruncatedFilterResult {
    FilterHypothesis filter;
    double excess_total = 0.0;
    double excess_per_step = 0.0;
};

namespace detail {

struct WindowFit {
    std::vector<Matrix> taps;
    double residual = 0.0;
};

/// Weighted least squares in innovation coordinates. With Y_t = Σ_{s≤t} K_{t-s} e_s,
/// the error of a length-h filter against the steady-state predictor has
/// coefficient R_j = Σ_{k≤min(h,j)} F_k K_{j-k} − K_j on the innovation j steps
/// back, so the risk is Σ_j w_j tr(R_j S R_jᵀ). Rows with zero weight are
/// dropped. Solved by column-pivoted QR, and the residual is measured directly
/// instead of as a difference of second moments.
inline WindowFit fit_window(const std::vector<Matrix>& response, const Matrix& innovation_cov, long h,
                            const std::vector<double>& weights) {
    const auto d = innovation_cov.rows();
    const Matrix half = innovation_cov.llt().matrixL().transpose();  // S = halfᵀ half
    long rows = 0;
    for (double w : weights)
        if (w > 0.0) ++rows;
    Matrix design = Matrix::Zero(rows * d, h * d);
    Matrix rhs(rows * d, d);
    long r = 0;
    for (std::size_t jj = 0; jj < weights.size(); ++jj) {
        if (weights[jj] <= 0.0) continue;
        const long j = static_cast<long>(jj) + 1;
        const double sw = std::sqrt(weights[jj]);
        for (long k = 1; k <= std::min(h, j); ++k)
            design.block(r * d, (k - 1) * d, d, d) = sw * half * response[static_cast<std::size_t>(j - k)].transpose();
        rhs.block(r * d, 0, d, d) = sw * half * response[static_cast<std::size_t>(j)].transpose();
        ++r;
    }
    WindowFit fit;
    fit.taps.assign(static_cast<std::size_t>(h), Matrix::Zero(d, d));
    if (rows == 0) return fit;
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    const Matrix x = qr.solve(rhs);
    for (long k = 0; k < h; ++k) fit.taps[static_cast<std::size_t>(k)] = x.block(k * d, 0, d, d).transpose();
    fit.residual = (design * x - rhs).squaredNorm();
    return fit;
}

inline SteadyStateFilter require_steady_state(const StateSpaceModel& model, long horizon, long h, long cap) {
    if (horizon < 2) throw ValidationError("filter bounds need T >= 2");
    if (h < 1 || h > horizon - 1) throw ValidationError("window h must be in [1, T-1]");
    if (horizon * model.obs_dim() > cap)
        throw ValidationError("T*d_Y = " + std::to_string(horizon * model.obs_dim()) + " exceeds covariance cap " +
                              std::to_string(cap));
    auto ssf = solve_dare(model);
    if (!has_steady_state_init(model, ssf)) throw ValidationError("filter bounds need Sigma_init = Sigma_ss");
    return ssf;
}

}  // namespace detail

/// min over shared F_{1:h} of Σ_{t=1}^{T-1} E‖Σ_k F_k Y_{t-k} − E[Y_t | Y_{1:t-1}]‖².
///
/// By orthogonality the excess equals MSE(F) minus the innovation MSE; in
/// innovation coordinates that difference is the weighted residual of
/// detail::fit_window with w_j = #{t : t-1 ≥ j} (fewer under skip_warmup).
inline TruncatedFilterResult optimal_truncated_filter(const StateSpaceModel& model, long horizon, long h,
                                                      Padding padding = Padding::zero, long cap = 4000) {
    const auto ssf = detail::require_steady_state(model, horizon, h, cap);
    const auto response = innovation_response(model, ssf, horizon);
    std::vector<double> weights(static_cast<std::size_t>(std::max<long>(horizon - 2, 0)));
    const long first_t = padding == Padding::zero ? 1 : h + 1;
    for (long j = 1; j <= horizon - 2; ++j) {
        const long lo = std::max(j + 1, first_t);
        weights[static_cast<std::size_t>(j - 1)] = static_cast<double>(std::max<long>(0, horizon - 1 - lo + 1));
    }
    const auto fit = detail::fit_window(response, ssf.innovation_cov, h, weights);
    TruncatedFilterResult out;
    out.filter = {h, fit.taps};
    out.excess_total = fit.residual;
    const long steps = padding == Padding::zero ? horizon - 1 : std::max<long>(1, horizon - 1 - h);
    out.excess_per_step = out.excess_total / static_cast<double>(steps);
    return out;
}

/// Element t-1 holds min over F (chosen afresh for this t) of
/// E‖Σ_k F_k Y_{t-k} − E[Y_t | Y_{1:t-1}]‖², for t = 1..T-1.
inline std::vector<double> per_step_relaxed_bound(const StateSpaceModel& model, long horizon, long h,
                                                  long cap = 4000) {
    const auto ssf = detail::require_steady_state(model, horizon, h, cap);
    const auto response = innovation_response(model, ssf, horizon);
    std::vector<double> out(static_cast<std::size_t>(horizon - 1), 0.0);
    for (long t = 1; t <= horizon - 1; ++t) {
        if (h >= t - 1) continue;  // the window spans the whole past
        const std::vector<double> weights(static_cast<std::size_t>(t - 1), 1.0);
        out[static_cast<std::size_t>(t - 1)] = detail::fit_window(response, ssf.innovation_cov, h, weights).residual;
    }
    return out;
}

/// Lower bound through the noise-free output covariance R = Cov(C X_{1:T-1}):
/// for each t the Schur complement of R restricted to the past of t, out-of-window
/// block conditioned on the window, contracted with the out-of-window Kalman
/// coefficients M_{h+1..t-1}. Summed over t = 1..T-1.
inline double schur_lower_bound(const StateSpaceModel& model, long horizon, long h, long cap = 4000) {
    const auto ssf = detail::require_steady_state(model, horizon, h, cap);
    if (horizon < 3) return 0.0;
    const auto d = model.obs_dim();
    const Matrix r = output_covariance(model, horizon - 1, {.observation_noise = false, .cap = cap});
    const auto coeffs = filter_coeffs(model, ssf, horizon - 2);
    double total = 0.0;
    for (long t = 2; t <= horizon - 1; ++t) {
        const long past = t - 1;
        if (past <= h) continue;
        const long n_out = past - h;  // times 1..n_out are outside the window
        Matrix m_out(d, n_out * d);
        for (long s = 1; s <= n_out; ++s) m_out.block(0, (s - 1) * d, d, d) = coeffs[static_cast<std::size_t>(t - s - 1)];
        const auto r_oo = r.block(0, 0, n_out * d, n_out * d);
        const auto r_ow = r.block(0, n_out * d, n_out * d, h * d);
        Matrix r_ww = r.block(n_out * d, n_out * d, h * d, h * d);
        const Matrix p = m_out * r_ow;
        Eigen::LLT<Matrix> llt(r_ww);
        if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
            std::clog << "lds: warning: near-singular window covariance at t=" << t << ", regularizing by 1e-12*I\n";
            r_ww.diagonal().array() += 1e-12;
            llt.compute(r_ww);
        }
        const Matrix q = m_out * r_oo * m_out.transpose() - p * llt.solve(p.transpose());
        total += std::max(0.0, q.trace());
    }
    return total;
}

}  // namespace lds
