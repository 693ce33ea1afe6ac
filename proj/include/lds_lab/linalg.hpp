#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>

namespace lds {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Entries beyond this magnitude are treated as overflow.
inline constexpr double kMagnitudeCap = 1e300;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool all_finite_below(const Matrix& m, double cap = kMagnitudeCap) {
    return m.allFinite() && (m.size() == 0 || m.cwiseAbs().maxCoeff() <= cap);
}

inline double min_eigenvalue(const Matrix& sym) {
    if (sym.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(sym), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Returns F with F Fᵀ = Σ, via symmetric eigendecomposition with negative
/// eigenvalues clipped to zero. Accepts rank-deficient (including zero) Σ.
inline Matrix psd_factor(const Matrix& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(sigma));
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

/// Cholesky solve of G x = b after symmetric diagonal equilibration. Returns
/// nullopt when G is not numerically positive definite. Equilibration keeps
/// Grams whose coordinates live on very different scales (polynomially or
/// exponentially growing states) solvable to full relative accuracy.
inline std::optional<Matrix> spd_solve(const Matrix& gram, const Matrix& rhs, double rcond_floor = 1e-15) {
    const Eigen::Index n = gram.rows();
    if (n == 0) return Matrix(0, rhs.cols());
    const Vector diag = gram.diagonal();
    if (!(diag.array() > 0.0).all() || !diag.allFinite()) return std::nullopt;
    const Vector scale = diag.cwiseSqrt().cwiseInverse();
    const Matrix scaled = scale.asDiagonal() * symmetrized(gram) * scale.asDiagonal();
    Eigen::LLT<Matrix> llt(scaled);
    if (llt.info() != Eigen::Success || !(llt.rcond() > rcond_floor)) return std::nullopt;
    Matrix x = llt.solve(scale.asDiagonal() * rhs);
    return Matrix(scale.asDiagonal() * x);
}

/// Coefficients c_0..c_n of det(λI − A) = Σ c_k λ^k (c_n = 1), by
/// Faddeev-LeVerrier. Only used for small matrices.
inline Vector characteristic_polynomial(const Matrix& a) {
    const Eigen::Index n = a.rows();
    Vector c = Vector::Zero(n + 1);
    c(n) = 1.0;
    Matrix m = Matrix::Zero(n, n);
    const Matrix id = Matrix::Identity(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        m = a * m + c(n - k + 1) * id;
        c(n - k) = -(a * m).trace() / static_cast<double>(k);
    }
    return c;
}

inline double condition_number(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

}  // namespace lds
