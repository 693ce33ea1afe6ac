#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lds {

enum class TrajectoryKind { states, observations };

inline const char* to_string(TrajectoryKind k) { return k == TrajectoryKind::states ? "states" : "observations"; }

/// m trajectories of length T in dimension d, stored row-major as [traj][t][dim].
/// Time index t is 0-based in memory and stands for time t+1.
class TrajectoryBatch {
public:
    TrajectoryBatch(long m, long horizon, long dim, TrajectoryKind kind, std::uint64_t seed, std::string model_hash)
        : m_(m), horizon_(horizon), dim_(dim), kind_(kind), seed_(seed), model_hash_(std::move(model_hash)),
          data_(static_cast<std::size_t>(m * horizon * dim), 0.0) {
        if (m < 1 || horizon < 1 || dim < 1) throw ValidationError("trajectory batch needs m, T, d >= 1");
    }

    long count() const noexcept { return m_; }
    long horizon() const noexcept { return horizon_; }
    long dim() const noexcept { return dim_; }
    TrajectoryKind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& model_hash() const noexcept { return model_hash_; }
    const std::vector<double>& data() const noexcept { return data_; }

    double& at(long traj, long t, long d) { return data_[index(traj, t, d)]; }
    double at(long traj, long t, long d) const { return data_[index(traj, t, d)]; }

    /// The d-vector at (traj, t) as a read-only view.
    Eigen::Map<const Vector> point(long traj, long t) const {
        return {data_.data() + index(traj, t, 0), dim_};
    }
    Eigen::Map<Vector> point(long traj, long t) { return {data_.data() + index(traj, t, 0), dim_}; }

    friend bool operator==(const TrajectoryBatch&, const TrajectoryBatch&) = default;

private:
    std::size_t index(long traj, long t, long d) const {
        return static_cast<std::size_t>((traj * horizon_ + t) * dim_ + d);
    }

    long m_, horizon_, dim_;
    TrajectoryKind kind_;
    std::uint64_t seed_;
    std::string model_hash_;
    std::vector<double> data_;
};

struct SimulationResult {
    TrajectoryBatch states;
    TrajectoryBatch observations;
};

/// Draws m independent trajectories. The noise vector for (trajectory, time,
/// stream) comes from its own counter-based generator keyed on the seed, so the
/// output is bit-identical for any thread count.
inline SimulationResult simulate(const StateSpaceModel& model, long horizon, long m, std::uint64_t seed,
                                 unsigned threads = 1) {
    if (horizon < 1 || m < 1) throw ValidationError("simulate needs T >= 1 and m >= 1");
    const auto dx = model.state_dim();
    const auto dy = model.obs_dim();
    const std::string hash = model.fingerprint();
    SimulationResult out{TrajectoryBatch(m, horizon, dx, TrajectoryKind::states, seed, hash),
                         TrajectoryBatch(m, horizon, dy, TrajectoryKind::observations, seed, hash)};
    const Matrix f_init = psd_factor(model.sigma_init());
    const Matrix f_w = psd_factor(model.sigma_w());
    const Matrix f_v = psd_factor(model.sigma_v());

    auto draw = [seed](Stream s, long traj, long t, Eigen::Index n) {
        CounterNormal normal(mix_key({seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(traj),
                                      static_cast<std::uint64_t>(t)}));
        Vector z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = normal();
        return z;
    };

    std::vector<long> first_bad(static_cast<std::size_t>(m), 0);
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
        const long traj = static_cast<long>(i);
        Vector x = f_init * draw(Stream::init, traj, 1, dx);
        for (long t = 1; t <= horizon; ++t) {
            if (t > 1) x = model.A() * x + f_w * draw(Stream::process, traj, t, dx);
            const Vector y = model.C() * x + f_v * draw(Stream::observation, traj, t, dy);
            if (!all_finite_below(x) || !all_finite_below(y)) {
                first_bad[i] = t;
                return;
            }
            out.states.point(traj, t - 1) = x;
            out.observations.point(traj, t - 1) = y;
        }
    });
    long worst = 0;
    for (long t : first_bad)
        if (t > 0 && (worst == 0 || t < worst)) worst = t;
    if (worst > 0) throw OverflowError("simulation produced non-finite values", worst);
    return out;
}

/// Row-major CSV `traj,t,dim,value` (traj and dim 0-based, t 1-based) plus a
/// JSON sidecar {seed, model_hash, T, m, d, kind} at `<csv_path>.json`.
inline void write_trajectory_csv(const TrajectoryBatch& batch, const std::string& csv_path) {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + csv_path);
    csv << "traj,t,dim,value\n";
    char buf[128];
    for (long i = 0; i < batch.count(); ++i)
        for (long t = 0; t < batch.horizon(); ++t)
            for (long d = 0; d < batch.dim(); ++d) {
                std::snprintf(buf, sizeof buf, "%ld,%ld,%ld,%.17g\n", i, t + 1, d, batch.at(i, t, d));
                csv << buf;
            }
    if (!csv) throw IoError("failed writing " + csv_path);

    const nlohmann::json sidecar = {{"seed", batch.seed()},       {"model_hash", batch.model_hash()},
                                    {"T", batch.horizon()},       {"m", batch.count()},
                                    {"d", batch.dim()},           {"kind", to_string(batch.kind())}};
    const std::string side_path = csv_path + ".json";
    std::ofstream side(side_path, std::ios::binary);
    if (!side) throw IoError("cannot write " + side_path);
    side << sidecar.dump(2) << "\n";
    if (!side) throw IoError("failed writing " + side_path);
}

}  // namespace lds
