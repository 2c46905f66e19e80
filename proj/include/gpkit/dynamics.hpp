#pragma once

// Recurrent GP dynamical models: GP-SSM (state feedback through
// xi_t = [x_t; u_t]) and GP-NOE (feedback of the model's own past outputs
// through zeta_t = [y_{t-n_out+1}; ...; y_t; u_{t-n_in+1}; ...; u_t]).

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "gpkit/error.hpp"
#include "gpkit/gaussian.hpp"
#include "gpkit/gpr.hpp"

namespace gpkit {

/// Linear-Gaussian output map y_t = C x_t + v, v ~ N(0, R).
struct OutputMap {
    MatrixXd c;
    MatrixXd r;

    static OutputMap identity(Index n_x) { return {MatrixXd::Identity(n_x, n_x), MatrixXd::Zero(n_x, n_x)}; }
};

class SsmModel {
public:
    SsmModel(TrainedGP gp, Index n_x, Index n_u, std::optional<OutputMap> output_map = std::nullopt)
        : gp_(std::move(gp)), n_x_(n_x), n_u_(n_u), map_(output_map ? std::move(*output_map) : OutputMap::identity(n_x)) {
        if (n_x_ < 1 || n_u_ < 0) { throw InvalidArgument("SsmModel: n_x must be positive and n_u nonnegative"); }
        detail::require_dims(gp_.input_dim() == n_x_ + n_u_, "SsmModel: GP input dimension must be n_x + n_u");
        detail::require_dims(gp_.n_outputs() == n_x_, "SsmModel: GP needs one output per state");
        detail::require_dims(map_.c.cols() == n_x_, "SsmModel: C must have n_x columns");
        detail::require_dims(map_.r.rows() == map_.c.rows() && map_.r.cols() == map_.c.rows(),
                             "SsmModel: R must be square with one row per output");
        if (!map_.r.isZero(0.0)) { (void)cholesky(map_.r); }
    }

    [[nodiscard]] const TrainedGP& gp() const noexcept { return gp_; }
    [[nodiscard]] Index n_x() const noexcept { return n_x_; }
    [[nodiscard]] Index n_u() const noexcept { return n_u_; }
    [[nodiscard]] const OutputMap& output_map() const noexcept { return map_; }

private:
    TrainedGP gp_;
    Index n_x_;
    Index n_u_;
    OutputMap map_;
};

class NoeModel {
public:
    NoeModel(TrainedGP gp, Index n_in, Index n_out, Index n_y, Index n_u)
        : gp_(std::move(gp)), n_in_(n_in), n_out_(n_out), n_y_(n_y), n_u_(n_u) {
        if (n_in_ < 1 || n_out_ < 1 || n_y_ < 1 || n_u_ < 0) {
            throw InvalidArgument("NoeModel: n_in, n_out and n_y must be positive");
        }
        detail::require_dims(gp_.input_dim() == n_out_ * n_y_ + n_in_ * n_u_,
                             "NoeModel: GP input dimension must be n_out*n_y + n_in*n_u");
        detail::require_dims(gp_.n_outputs() == n_y_, "NoeModel: GP needs one output per system output");
    }

    [[nodiscard]] const TrainedGP& gp() const noexcept { return gp_; }
    [[nodiscard]] Index n_in() const noexcept { return n_in_; }
    [[nodiscard]] Index n_out() const noexcept { return n_out_; }
    [[nodiscard]] Index n_y() const noexcept { return n_y_; }
    [[nodiscard]] Index n_u() const noexcept { return n_u_; }

private:
    TrainedGP gp_;
    Index n_in_;
    Index n_out_;
    Index n_y_;
    Index n_u_;
};

struct RolloutMode {
    enum class Kind { MeanPropagation, MonteCarlo };

    Kind kind = Kind::MeanPropagation;
    Index n_paths = 0;
    std::uint64_t seed = 0;

    static RolloutMode mean() { return {}; }
    static RolloutMode monte_carlo(Index n_paths, std::uint64_t seed) { return {Kind::MonteCarlo, n_paths, seed}; }
};

/// Per-step mean and variance of the rolled-out state (SSM) or output (NOE),
/// one row per step. For Monte-Carlo rollouts these are sample statistics
/// over the paths; `paths` then holds every path (path-major, T x dim each).
/// `output_traj` is C times the state mean (SSM only; plus noise in MC mode).
struct Rollout {
    MatrixXd mean_traj;
    MatrixXd var_traj;
    MatrixXd output_traj;
    RolloutMode mode;
    std::vector<MatrixXd> paths;
};

inline Dataset build_ssm_dataset(const MatrixXd& x_traj, const MatrixXd& u_traj, double noise = 0.0) {
    const Index t = x_traj.cols() - 1;
    if (t < 1) { throw TrajectoryTooShort("build_ssm_dataset: need at least two states"); }
    detail::require_dims(u_traj.cols() >= t, "build_ssm_dataset: need one input per transition");
    const Index nx = x_traj.rows();
    const Index nu = u_traj.rows();
    Dataset d{MatrixXd(nx + nu, t), MatrixXd(t, nx), VectorXd::Constant(nx, noise)};
    d.x.topRows(nx) = x_traj.leftCols(t);
    d.x.bottomRows(nu) = u_traj.leftCols(t);
    d.y = x_traj.rightCols(t).transpose();
    return d;
}

namespace detail {

// zeta_t for time index t, given column-indexed output and input histories.
inline VectorXd noe_regressor(const MatrixXd& y, Index y_last, const MatrixXd& u, Index u_last, Index n_in, Index n_out) {
    const Index ny = y.rows();
    const Index nu = u.rows();
    VectorXd z(n_out * ny + n_in * nu);
    for (Index j = 0; j < n_out; ++j) { z.segment(j * ny, ny) = y.col(y_last - n_out + 1 + j); }
    for (Index j = 0; j < n_in; ++j) { z.segment(n_out * ny + j * nu, nu) = u.col(u_last - n_in + 1 + j); }
    return z;
}

}  // namespace detail

/// Pairs (zeta_t, y_{t+1}) for every t with a full regressor history.
inline Dataset build_noe_dataset(const MatrixXd& y_traj, const MatrixXd& u_traj, Index n_in, Index n_out,
                                 double noise = 0.0) {
    if (n_in < 1 || n_out < 1) { throw InvalidArgument("build_noe_dataset: n_in and n_out must be positive"); }
    const Index n = y_traj.cols();
    const Index first = std::max(n_in, n_out) - 1;
    const Index count = n - 1 - first;
    if (count < 1) { throw TrajectoryTooShort("build_noe_dataset: trajectory shorter than the regressor history"); }
    detail::require_dims(u_traj.cols() >= n - 1, "build_noe_dataset: need an input for every transition");
    const Index ny = y_traj.rows();
    Dataset d{MatrixXd(n_out * ny + n_in * u_traj.rows(), count), MatrixXd(count, ny), VectorXd::Constant(ny, noise)};
    for (Index i = 0; i < count; ++i) {
        const Index t = first + i;
        d.x.col(i) = detail::noe_regressor(y_traj, t, u_traj, t, n_in, n_out);
        d.y.row(i) = y_traj.col(t + 1).transpose();
    }
    return d;
}

namespace detail {

inline void check_mode(const RolloutMode& mode) {
    if (mode.kind == RolloutMode::Kind::MonteCarlo && mode.n_paths < 1) {
        throw InvalidArgument("rollout: Monte-Carlo mode needs n_paths >= 1");
    }
}

inline void path_statistics(Rollout& r) {
    const auto np = static_cast<double>(r.paths.size());
    r.mean_traj = MatrixXd::Zero(r.paths.front().rows(), r.paths.front().cols());
    for (const auto& p : r.paths) { r.mean_traj += p; }
    r.mean_traj /= np;
    r.var_traj = MatrixXd::Zero(r.mean_traj.rows(), r.mean_traj.cols());
    if (r.paths.size() > 1) {
        for (const auto& p : r.paths) { r.var_traj += (p - r.mean_traj).cwiseAbs2(); }
        r.var_traj /= (np - 1.0);
    }
}

}  // namespace detail

/// Simulates the GP-SSM for u_seq.cols() steps from x0. Mean propagation
/// feeds back the predicted mean and records the one-step latent variance;
/// Monte-Carlo samples each transition from its diagonal predictive Gaussian.
inline Rollout ssm_rollout(const SsmModel& m, const VectorXd& x0, const MatrixXd& u_seq, const RolloutMode& mode) {
    detail::check_mode(mode);
    detail::require_dims(x0.size() == m.n_x(), "ssm_rollout: x0 must have n_x entries");
    detail::require_dims(u_seq.rows() == m.n_u(), "ssm_rollout: u_seq must have n_u rows");
    const Index horizon = u_seq.cols();
    const Index nx = m.n_x();
    const MatrixXd& c = m.output_map().c;

    Rollout r;
    r.mode = mode;
    VectorXd xi(nx + m.n_u());

    if (mode.kind == RolloutMode::Kind::MeanPropagation) {
        r.mean_traj.resize(horizon, nx);
        r.var_traj.resize(horizon, nx);
        VectorXd x = x0;
        for (Index t = 0; t < horizon; ++t) {
            xi.head(nx) = x;
            xi.tail(m.n_u()) = u_seq.col(t);
            const Prediction p = predict_point(m.gp(), xi);
            x = p.mean.row(0).transpose();
            r.mean_traj.row(t) = p.mean.row(0);
            r.var_traj.row(t) = p.variance.row(0);
        }
        r.output_traj = r.mean_traj * c.transpose();
        return r;
    }

    const bool output_noise = !m.output_map().r.isZero(0.0);
    const MatrixXd r_lower = output_noise ? cholesky(m.output_map().r).lower() : MatrixXd();
    MatrixXd y_sum = MatrixXd::Zero(horizon, c.rows());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index p = 0; p < mode.n_paths; ++p) {
        Rng rng = make_rng(mode.seed, static_cast<std::uint64_t>(p));
        MatrixXd path(horizon, nx);
        VectorXd x = x0;
        for (Index t = 0; t < horizon; ++t) {
            xi.head(nx) = x;
            xi.tail(m.n_u()) = u_seq.col(t);
            const Prediction pr = predict_point(m.gp(), xi);
            for (Index j = 0; j < nx; ++j) { x(j) = pr.mean(0, j) + std::sqrt(pr.variance(0, j)) * normal(rng); }
            path.row(t) = x.transpose();
            VectorXd y = c * x;
            if (output_noise) {
                VectorXd eta(c.rows());
                for (Index j = 0; j < eta.size(); ++j) { eta(j) = normal(rng); }
                y += r_lower * eta;
            }
            y_sum.row(t) += y.transpose();
        }
        r.paths.push_back(std::move(path));
    }
    detail::path_statistics(r);
    r.output_traj = y_sum / static_cast<double>(mode.n_paths);
    return r;
}

/// Simulates the GP-NOE model. y_init holds the n_out seed outputs (oldest
/// first). u_seq holds inputs u_{t0-n_in+1}, ..., so the horizon is
/// u_seq.cols() - n_in + 1. Only the model's own predictions are fed back.
inline Rollout noe_rollout(const NoeModel& m, const MatrixXd& y_init, const MatrixXd& u_seq, const RolloutMode& mode) {
    detail::check_mode(mode);
    detail::require_dims(y_init.rows() == m.n_y() && y_init.cols() == m.n_out(),
                         "noe_rollout: y_init must be n_y x n_out");
    detail::require_dims(u_seq.rows() == m.n_u(), "noe_rollout: u_seq must have n_u rows");
    if (u_seq.cols() < m.n_in()) { throw TrajectoryTooShort("noe_rollout: u_seq shorter than n_in"); }
    const Index horizon = u_seq.cols() - m.n_in() + 1;
    const Index ny = m.n_y();

    auto run = [&](Rng* rng, MatrixXd& mean_out, MatrixXd* var_out) {
        MatrixXd hist(ny, m.n_out() + horizon);
        hist.leftCols(m.n_out()) = y_init;
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index h = 0; h < horizon; ++h) {
            const Index last = m.n_out() - 1 + h;
            const VectorXd zeta = detail::noe_regressor(hist, last, u_seq, m.n_in() - 1 + h, m.n_in(), m.n_out());
            const Prediction p = predict_point(m.gp(), zeta);
            for (Index j = 0; j < ny; ++j) {
                double y = p.mean(0, j);
                if (rng != nullptr) { y += std::sqrt(p.variance(0, j)) * normal(*rng); }
                hist(j, last + 1) = y;
            }
            if (var_out != nullptr) { var_out->row(h) = p.variance.row(0); }
        }
        mean_out = hist.rightCols(horizon).transpose();
    };

    Rollout r;
    r.mode = mode;
    if (mode.kind == RolloutMode::Kind::MeanPropagation) {
        r.var_traj.resize(horizon, ny);
        run(nullptr, r.mean_traj, &r.var_traj);
        r.output_traj = r.mean_traj;
        return r;
    }
    for (Index p = 0; p < mode.n_paths; ++p) {
        Rng rng = make_rng(mode.seed, static_cast<std::uint64_t>(p));
        MatrixXd path;
        run(&rng, path, nullptr);
        r.paths.push_back(std::move(path));
    }
    detail::path_statistics(r);
    r.output_traj = r.mean_traj;
    return r;
}

}  // namespace gpkit
