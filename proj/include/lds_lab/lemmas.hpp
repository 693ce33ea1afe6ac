#pragma once

#include "errors.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cmath>

namespace lds {

/// L is the N×N lower-triangular all-ones matrix and R = L Lᵀ (so R_ij =
/// min(i, j), the covariance of a unit random walk). Block 1 is the leading h
/// coordinates, block 2 the trailing N−h; with this split L₂₁L₂₁ᵀ = h·𝟙𝟙ᵀ.
struct ToeplitzBlocks {
    long n = 0;
    long h = 0;
    Matrix lower;
    Matrix r;

    static ToeplitzBlocks build(long n, long h) {
        if (h < 1 || h >= n) throw ValidationError("lemma split needs 1 <= h < N");
        ToeplitzBlocks b{n, h, Matrix::Zero(n, n), Matrix()};
        b.lower.triangularView<Eigen::Lower>().setOnes();
        b.r = b.lower * b.lower.transpose();
        return b;
    }

    auto r11() const { return r.topLeftCorner(h, h); }
    auto r12() const { return r.topRightCorner(h, n - h); }
    auto r21() const { return r.bottomLeftCorner(n - h, h); }
    auto r22() const { return r.bottomRightCorner(n - h, n - h); }
};

struct ToeplitzClosedForms {
    Matrix r22_inv;     ///< (N−h)×(N−h)
    Matrix cross_term;  ///< R₁₂ R₂₂⁻¹ R₂₁, h×h
};

/// R₂₂ = h𝟙𝟙ᵀ + L₂₂L₂₂ᵀ. (L₂₂L₂₂ᵀ)⁻¹ is the second-difference matrix (2 on
/// the diagonal except 1 in the last slot, −1 off it) and maps 𝟙 to e₁, so
/// Sherman-Morrison only lowers its (1,1) entry by h/(h+1). The cross term is
/// (1/(h+1)) v vᵀ with v = (1, …, h).
inline ToeplitzClosedForms lemma_toeplitz_closed_forms(long n, long h) {
    if (h < 1 || h >= n) throw ValidationError("lemma split needs 1 <= h < N");
    const long k = n - h;
    ToeplitzClosedForms out;
    out.r22_inv = Matrix::Zero(k, k);
    for (long i = 0; i < k; ++i) {
        out.r22_inv(i, i) = i + 1 < k ? 2.0 : 1.0;
        if (i + 1 < k) out.r22_inv(i, i + 1) = out.r22_inv(i + 1, i) = -1.0;
    }
    out.r22_inv(0, 0) -= static_cast<double>(h) / static_cast<double>(h + 1);
    const Vector v = Vector::LinSpaced(h, 1.0, static_cast<double>(h));
    out.cross_term = v * v.transpose() / static_cast<double>(h + 1);
    return out;
}

inline ToeplitzClosedForms lemma_toeplitz_brute_force(long n, long h) {
    const auto b = ToeplitzBlocks::build(n, h);
    const Matrix r22 = b.r22();
    Eigen::LLT<Matrix> llt(r22);
    ToeplitzClosedForms out;
    out.r22_inv = llt.solve(Matrix::Identity(n - h, n - h));
    out.cross_term = b.r12() * llt.solve(Matrix(b.r21()));
    return out;
}

struct LemmaQuadratics {
    double q11 = 0.0;     ///< θᵀ R₁₁ θ
    double q_cross = 0.0; ///< θᵀ R₁₂ R₂₂⁻¹ R₂₁ θ
};

/// θ = (ρ^{h-1}, …, ρ, 1) ∈ ℝʰ (0⁰ = 1). Closed forms
///   q11 = Σ_{l=1}^{h} (Σ_{j=1}^{h-l+1} ρ^{j-1})²,
///   q_cross = (Σ_{j=1}^{h} j ρ^{h-j})² / (h+1).
inline LemmaQuadratics lemma_quadratic_forms(double rho, long n, long h) {
    if (h < 1 || h >= n) throw ValidationError("lemma split needs 1 <= h < N");
    LemmaQuadratics out;
    for (long l = 1; l <= h; ++l) {
        double partial = 0.0;
        for (long j = 1; j <= h - l + 1; ++j) partial += std::pow(rho, static_cast<double>(j - 1));
        out.q11 += partial * partial;
    }
    double weighted = 0.0;
    for (long j = 1; j <= h; ++j) weighted += static_cast<double>(j) * std::pow(rho, static_cast<double>(h - j));
    out.q_cross = weighted * weighted / static_cast<double>(h + 1);
    return out;
}

inline LemmaQuadratics lemma_quadratic_brute_force(double rho, long n, long h) {
    const auto b = ToeplitzBlocks::build(n, h);
    Vector theta(h);
    for (long i = 0; i < h; ++i) theta(i) = std::pow(rho, static_cast<double>(h - 1 - i));
    const Matrix r22 = b.r22();
    const Vector r21_theta = b.r21() * theta;
    LemmaQuadratics out;
    out.q11 = theta.dot(b.r11() * theta);
    out.q_cross = r21_theta.dot(r22.llt().solve(r21_theta));
    return out;
}

struct LemmaCheck {
    long n = 0;
    long h = 0;
    double rho = 0.0;
    double r22_inv_rel_err = 0.0;
    double cross_term_rel_err = 0.0;
    double q11_rel_err = 0.0;
    double q_cross_rel_err = 0.0;
    bool passed = false;
};

inline double relative_error(const Matrix& value, const Matrix& reference) {
    const double scale = std::max(reference.cwiseAbs().maxCoeff(), 1e-300);
    return (value - reference).cwiseAbs().maxCoeff() / scale;
}

inline double relative_error(double value, double reference) {
    return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

/// Compares every closed form against the dense computation on explicit L.
inline LemmaCheck verify_lemmas(long n, long h, double rho, double tol) {
    const auto closed = lemma_toeplitz_closed_forms(n, h);
    const auto dense = lemma_toeplitz_brute_force(n, h);
    const auto q_closed = lemma_quadratic_forms(rho, n, h);
    const auto q_dense = lemma_quadratic_brute_force(rho, n, h);
    LemmaCheck c{n, h, rho};
    c.r22_inv_rel_err = relative_error(closed.r22_inv, dense.r22_inv);
    c.cross_term_rel_err = relative_error(closed.cross_term, dense.cross_term);
    c.q11_rel_err = relative_error(q_closed.q11, q_dense.q11);
    c.q_cross_rel_err = relative_error(q_closed.q_cross, q_dense.q_cross);
    c.passed = std::max({c.r22_inv_rel_err, c.cross_term_rel_err, c.q11_rel_err, c.q_cross_rel_err}) <= tol;
    return c;
}

}  // namespace lds
