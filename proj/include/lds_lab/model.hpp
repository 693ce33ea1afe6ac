#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lds {

/// Linear-Gaussian state-space model
///
///   X_1 ~ N(0, Σ_init),  X_{t+1} = A X_t + W_{t+1},  Y_t = C X_t + V_t
///
/// with W ~ N(0, Σ_W), V ~ N(0, Σ_V) mutually independent. Immutable once built.
class StateSpaceModel {
public:
    StateSpaceModel(Matrix a, Matrix c, Matrix sigma_w, Matrix sigma_v, Matrix sigma_init)
        : a_(std::move(a)), c_(std::move(c)), sigma_w_(std::move(sigma_w)), sigma_v_(std::move(sigma_v)),
          sigma_init_(std::move(sigma_init)) {
        validate();
    }

    const Matrix& A() const noexcept { return a_; }
    const Matrix& C() const noexcept { return c_; }
    const Matrix& sigma_w() const noexcept { return sigma_w_; }
    const Matrix& sigma_v() const noexcept { return sigma_v_; }
    const Matrix& sigma_init() const noexcept { return sigma_init_; }
    Eigen::Index state_dim() const noexcept { return a_.rows(); }
    Eigen::Index obs_dim() const noexcept { return c_.rows(); }

    /// C = I and Σ_V = 0: the learner sees the state itself.
    bool is_full_observation() const {
        return obs_dim() == state_dim() && c_.isIdentity(0.0) && sigma_v_.isZero(0.0);
    }

    StateSpaceModel with_A(Matrix a) const { return {std::move(a), c_, sigma_w_, sigma_v_, sigma_init_}; }
    StateSpaceModel with_sigma_init(Matrix s) const { return {a_, c_, sigma_w_, sigma_v_, std::move(s)}; }

    /// FNV-1a over dimensions and raw matrix bytes, as 16 hex digits.
    std::string fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto feed = [&h](const void* p, std::size_t n) {
            const auto* b = static_cast<const unsigned char*>(p);
            for (std::size_t i = 0; i < n; ++i) {
                h ^= b[i];
                h *= 0x100000001b3ULL;
            }
        };
        for (const Matrix* m : {&a_, &c_, &sigma_w_, &sigma_v_, &sigma_init_}) {
            const std::int64_t dims[2] = {m->rows(), m->cols()};
            feed(dims, sizeof dims);
            feed(m->data(), sizeof(double) * static_cast<std::size_t>(m->size()));
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

private:
    static void check_covariance(const Matrix& s, Eigen::Index n, const char* name) {
        if (s.rows() != n || s.cols() != n)
            throw ValidationError(std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
        if (!s.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
        if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ValidationError(std::string(name) + " is not symmetric");
        if (min_eigenvalue(s) < -1e-10) throw ValidationError(std::string(name) + " is not positive semi-definite");
    }

    void validate() const {
        const auto dx = a_.rows();
        if (dx < 1 || a_.cols() != dx) throw ValidationError("A must be square with d_X >= 1");
        if (c_.rows() < 1 || c_.cols() != dx) throw ValidationError("C must be d_Y x d_X with d_Y >= 1");
        if (!a_.allFinite() || !c_.allFinite()) throw ValidationError("A and C must be finite");
        check_covariance(sigma_w_, dx, "Sigma_W");
        check_covariance(sigma_v_, c_.rows(), "Sigma_V");
        check_covariance(sigma_init_, dx, "Sigma_init");
    }

    Matrix a_, c_, sigma_w_, sigma_v_, sigma_init_;
};

struct JordanBlock {
    double eig;
    int size;
    friend bool operator==(const JordanBlock&, const JordanBlock&) = default;
};

/// Real Jordan structure, blocks laid out along the diagonal in order.
struct JordanSpec {
    std::vector<JordanBlock> blocks;

    int dimension() const {
        int n = 0;
        for (const auto& b : blocks) n += b.size;
        return n;
    }

    void validate() const {
        if (blocks.empty()) throw ValidationError("Jordan spec has no blocks");
        for (const auto& b : blocks) {
            if (b.size < 1) throw ValidationError("Jordan block sizes must be >= 1");
            if (!std::isfinite(b.eig)) throw ValidationError("Jordan eigenvalues must be finite");
        }
    }

    /// Block-diagonal matrix, each block λ on the diagonal and 1 on the superdiagonal.
    Matrix matrix() const {
        validate();
        const int n = dimension();
        Matrix a = Matrix::Zero(n, n);
        int offset = 0;
        for (const auto& b : blocks) {
            for (int i = 0; i < b.size; ++i) {
                a(offset + i, offset + i) = b.eig;
                if (i + 1 < b.size) a(offset + i, offset + i + 1) = 1.0;
            }
            offset += b.size;
        }
        return a;
    }

    friend bool operator==(const JordanSpec&, const JordanSpec&) = default;
};

enum class ObservationMode { full_state, scalar };

/// Σ_W = σ_w² I, Σ_init = σ_init² I. Full-state mode observes X directly
/// (C = I, Σ_V = 0). Scalar mode observes the sum of each block's leading
/// coordinate with Σ_V = σ_v².
inline StateSpaceModel make_jordan_system(const JordanSpec& spec, double sigma_w, double sigma_v, double sigma_init,
                                          ObservationMode mode = ObservationMode::full_state) {
    spec.validate();
    if (!(sigma_w >= 0.0) || !(sigma_v >= 0.0) || !(sigma_init >= 0.0))
        throw ValidationError("noise scales must be non-negative");
    const Matrix a = spec.matrix();
    const auto n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    if (mode == ObservationMode::full_state)
        return {a, id, sigma_w * sigma_w * id, Matrix::Zero(n, n), sigma_init * sigma_init * id};
    Matrix c = Matrix::Zero(1, n);
    int offset = 0;
    for (const auto& b : spec.blocks) {
        c(0, offset) = 1.0;
        offset += b.size;
    }
    return {a, c, sigma_w * sigma_w * id, Matrix::Constant(1, 1, sigma_v * sigma_v), sigma_init * sigma_init * id};
}

/// Scalar A = C = 1 random walk with process variance q and observation variance r.
inline StateSpaceModel make_random_walk(double q, double r, double sigma_init_var) {
    if (!(q >= 0.0) || !(r >= 0.0) || !(sigma_init_var >= 0.0))
        throw ValidationError("random walk variances must be non-negative");
    const Matrix one = Matrix::Ones(1, 1);
    return {one, one, q * one, r * one, sigma_init_var * one};
}

/// Γ_1..Γ_T with Γ_1 = Σ_init and Γ_{t+1} = A Γ_t Aᵀ + Σ_W (element t-1 holds Γ_t).
inline std::vector<Matrix> state_covariance(const StateSpaceModel& model, long horizon) {
    if (horizon < 1) throw ValidationError("horizon T must be >= 1");
    std::vector<Matrix> gammas;
    gammas.reserve(static_cast<std::size_t>(horizon));
    gammas.push_back(model.sigma_init());
    for (long t = 2; t <= horizon; ++t) {
        Matrix next = symmetrized(model.A() * gammas.back() * model.A().transpose() + model.sigma_w());
        if (!all_finite_below(next)) throw OverflowError("state covariance overflow", t);
        gammas.push_back(std::move(next));
    }
    return gammas;
}

struct OutputCovarianceOptions {
    bool observation_noise = true;  ///< false gives Cov(C X_{1:T}) without Σ_V
    long cap = 4000;                ///< maximum T·d_Y
};

/// Cov(Y_{1:T}) as a (T·d_Y)² matrix; block (s,t), s ≤ t, is C Γ_s (A^{t-s})ᵀ Cᵀ + δ_st Σ_V.
inline Matrix output_covariance(const StateSpaceModel& model, long horizon, OutputCovarianceOptions opts = {}) {
    const auto dy = model.obs_dim();
    if (horizon < 1) throw ValidationError("horizon T must be >= 1");
    if (horizon * dy > opts.cap)
        throw ValidationError("T*d_Y = " + std::to_string(horizon * dy) + " exceeds covariance cap " +
                              std::to_string(opts.cap));
    const auto gammas = state_covariance(model, horizon);
    const Matrix& a = model.A();
    const Matrix& c = model.C();
    Matrix cov(horizon * dy, horizon * dy);
    for (long s = 0; s < horizon; ++s) {
        // cross = Cov(X_s, X_t) = Γ_s (A^{t-s})ᵀ, advanced by right-multiplying Aᵀ.
        Matrix cross = gammas[static_cast<std::size_t>(s)];
        for (long t = s; t < horizon; ++t) {
            if (t > s) cross = cross * a.transpose();
            if (!all_finite_below(cross)) throw OverflowError("output covariance overflow", t + 1);
            Matrix block = c * cross * c.transpose();
            if (t == s && opts.observation_noise) block += model.sigma_v();
            cov.block(s * dy, t * dy, dy, dy) = block;
            cov.block(t * dy, s * dy, dy, dy) = block.transpose();
        }
    }
    return cov;
}

/// Replaces A by P⁻¹ A P with P drawn i.i.d. N(0,1) until cond(P) ≤ κ_max.
/// `forced_p` bypasses the draw. The spectrum is checked through the
/// characteristic polynomial coefficients.
inline StateSpaceModel random_similarity(const StateSpaceModel& model, std::uint64_t seed, double kappa_max,
                                         const std::optional<Matrix>& forced_p = std::nullopt) {
    if (!(kappa_max > 1.0)) throw ValidationError("conditioning cap must exceed 1");
    const auto n = model.state_dim();
    Matrix p;
    if (forced_p) {
        p = *forced_p;
        if (p.rows() != n || p.cols() != n) throw ValidationError("forced P has wrong shape");
    } else {
        bool found = false;
        for (std::uint64_t attempt = 0; attempt < 100 && !found; ++attempt) {
            CounterNormal normal(mix_key({seed, static_cast<std::uint64_t>(Stream::similarity), attempt}));
            p.resize(n, n);
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < n; ++i) p(i, j) = normal();
            found = condition_number(p) <= kappa_max;
        }
        if (!found)
            throw NumericalError("100 consecutive draws of P exceeded the conditioning cap; try a larger cap");
    }
    Eigen::PartialPivLU<Matrix> lu(p);
    const Matrix conjugated = lu.solve(model.A() * p);
    const Vector before = characteristic_polynomial(model.A());
    const Vector after = characteristic_polynomial(conjugated);
    for (Eigen::Index k = 0; k < before.size(); ++k)
        if (std::abs(before(k) - after(k)) > 1e-6 * std::max(1.0, std::abs(before(k))))
            throw NumericalError("similarity transform did not preserve the spectrum");
    return model.with_A(conjugated);
}

}  // namespace lds
