#pragma once

// Dense multivariate Gaussians: Cholesky with jitter escalation,
// conditioning, marginals, log-density and seeded sampling.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gpkit/error.hpp"

namespace gpkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)

/// Multipliers of mean(diag) tried in order until a factorization succeeds.
inline constexpr std::array<double, 5> kJitterLadder = {0.0, 1e-12, 1e-10, 1e-8, 1e-6};

/// Lower Cholesky factor L with L * L^T = A + jitter_used * I.
class CholeskyFactor {
public:
    CholeskyFactor() = default;
    CholeskyFactor(MatrixXd lower, double jitter_used)
        : lower_(std::move(lower)), jitter_used_(jitter_used) {}

    [[nodiscard]] const MatrixXd& lower() const noexcept { return lower_; }
    [[nodiscard]] double jitter_used() const noexcept { return jitter_used_; }
    [[nodiscard]] Index size() const noexcept { return lower_.rows(); }

    /// L^{-1} b
    template<typename Derived>
    [[nodiscard]] MatrixXd solve_lower(const Eigen::MatrixBase<Derived>& b) const {
        detail::require_dims(b.rows() == size(), "cholesky solve: row count mismatch");
        return lower_.triangularView<Eigen::Lower>().solve(b);
    }

    /// (L L^T)^{-1} b
    template<typename Derived>
    [[nodiscard]] MatrixXd solve(const Eigen::MatrixBase<Derived>& b) const {
        MatrixXd y = solve_lower(b);
        lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(y);
        return y;
    }

    [[nodiscard]] VectorXd solve_vec(const VectorXd& b) const { return solve(b); }

    [[nodiscard]] double log_det() const {
        return 2.0 * lower_.diagonal().array().log().sum();
    }

    [[nodiscard]] MatrixXd reconstruct() const { return lower_ * lower_.transpose(); }

private:
    MatrixXd lower_;
    double jitter_used_ = 0.0;
};

/// Factorizes a symmetric matrix (lower triangle is read), escalating the
/// diagonal jitter through kJitterLadder scaled by mean(diag). A zero or
/// negative mean diagonal falls back to a unit scale.
inline CholeskyFactor cholesky(const MatrixXd& a) {
    detail::require_dims(a.rows() == a.cols(), "cholesky: matrix must be square");
    const Index n = a.rows();
    if (n == 0) { return {}; }
    if (!a.allFinite()) { throw NotPSD("cholesky: matrix has non-finite entries"); }

    double scale = a.diagonal().mean();
    if (!(scale > 0.0)) { scale = 1.0; }

    for (double step : kJitterLadder) {
        const double jitter = step * scale;
        MatrixXd shifted = a;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<MatrixXd> llt(shifted);
        if (llt.info() != Eigen::Success) { continue; }
        MatrixXd lower = llt.matrixL();
        if ((lower.diagonal().array() > 0.0).all() && lower.allFinite()) {
            return {std::move(lower), jitter};
        }
    }
    throw NotPSD("cholesky: factorization failed at maximum jitter (n = " + std::to_string(n) + ")");
}

/// Mean vector and symmetric covariance.
class Gaussian {
public:
    Gaussian(VectorXd mean, MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
        detail::require_dims(cov_.rows() == cov_.cols(), "Gaussian: covariance must be square");
        detail::require_dims(mean_.size() == cov_.rows(), "Gaussian: mean/covariance size mismatch");
        if (!mean_.allFinite() || !cov_.allFinite()) {
            throw InvalidArgument("Gaussian: non-finite mean or covariance");
        }
        if (cov_.size() > 0) {
            const double scale = cov_.cwiseAbs().maxCoeff();
            if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
                throw InvalidArgument("Gaussian: covariance is not symmetric");
            }
        }
    }

    [[nodiscard]] const VectorXd& mean() const noexcept { return mean_; }
    [[nodiscard]] const MatrixXd& cov() const noexcept { return cov_; }
    [[nodiscard]] Index dim() const noexcept { return mean_.size(); }

private:
    VectorXd mean_;
    MatrixXd cov_;
};

namespace detail {

inline void check_indices(const std::vector<Index>& idx, Index n, const char* who) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (Index i : idx) {
        if (i < 0 || i >= n) { throw IndexOutOfRange(std::string(who) + ": index out of range"); }
        if (seen[static_cast<std::size_t>(i)]) {
            throw InvalidArgument(std::string(who) + ": duplicate index");
        }
        seen[static_cast<std::size_t>(i)] = true;
    }
}

inline std::vector<Index> complement(const std::vector<Index>& idx, Index n) {
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (Index i : idx) { taken[static_cast<std::size_t>(i)] = true; }
    std::vector<Index> rest;
    for (Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) { rest.push_back(i); }
    }
    return rest;
}

}  // namespace detail

/// Marginal over the given indices, in the order given.
inline Gaussian marginal(const Gaussian& g, const std::vector<Index>& idx) {
    detail::check_indices(idx, g.dim(), "marginal");
    const Eigen::Map<const Eigen::Matrix<Index, Eigen::Dynamic, 1>> sel(idx.data(), static_cast<Index>(idx.size()));
    return {g.mean()(sel), g.cov()(sel, sel)};
}

/// Conditions `joint` on x[obs_idx] = obs_val. The result is the Gaussian over
/// the remaining indices in ascending order:
///   mean = mu_2 + S_21 S_11^{-1} (x_1 - mu_1),  cov = S_22 - S_21 S_11^{-1} S_12.
inline Gaussian condition(const Gaussian& joint, const std::vector<Index>& obs_idx, const VectorXd& obs_val) {
    const Index n = joint.dim();
    detail::require_dims(static_cast<Index>(obs_idx.size()) == obs_val.size(),
                         "condition: observed index/value count mismatch");
    detail::require_dims(static_cast<Index>(obs_idx.size()) < n,
                         "condition: must leave at least one unobserved index");
    detail::check_indices(obs_idx, n, "condition");

    const std::vector<Index> free_idx = detail::complement(obs_idx, n);
    const Eigen::Map<const Eigen::Matrix<Index, Eigen::Dynamic, 1>> o(obs_idx.data(), static_cast<Index>(obs_idx.size()));
    const Eigen::Map<const Eigen::Matrix<Index, Eigen::Dynamic, 1>> f(free_idx.data(), static_cast<Index>(free_idx.size()));

    const MatrixXd s11 = joint.cov()(o, o);
    const MatrixXd s12 = joint.cov()(o, f);
    const MatrixXd s22 = joint.cov()(f, f);

    if (obs_idx.empty()) { return {joint.mean()(f), s22}; }

    const CholeskyFactor chol = cholesky(s11);
    const VectorXd resid = obs_val - joint.mean()(o);
    const VectorXd w = chol.solve_lower(resid);
    const MatrixXd v = chol.solve_lower(s12);  // L^{-1} S_12

    VectorXd mean = joint.mean()(f) + v.transpose() * w;
    MatrixXd cov = s22 - v.transpose() * v;
    cov = 0.5 * (cov + cov.transpose());
    return {std::move(mean), std::move(cov)};
}

/// Log-density of x under g.
inline double logpdf(const Gaussian& g, const VectorXd& x) {
    detail::require_dims(x.size() == g.dim(), "logpdf: dimension mismatch");
    const Index n = g.dim();
    if (n == 0) { return 0.0; }
    const CholeskyFactor chol = cholesky(g.cov());
    const VectorXd w = chol.solve_lower(x - g.mean());
    return -0.5 * w.squaredNorm() - 0.5 * chol.log_det() - 0.5 * static_cast<double>(n) * kLog2Pi;
}

/// Engine used for every seeded draw in the library.
using Rng = std::mt19937_64;

/// Deterministic generator for stream `stream` of a seeded computation, so
/// restarts and Monte-Carlo paths can be drawn independently of each other.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

/// `count` i.i.d. draws (one per row) of mean + L * eps.
inline MatrixXd sample(const Gaussian& g, Index count, std::uint64_t seed) {
    if (count < 1) { throw InvalidArgument("sample: count must be >= 1"); }
    const Index n = g.dim();
    MatrixXd out(count, n);
    if (n == 0) { return out; }
    const CholeskyFactor chol = cholesky(g.cov());
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd eps(n);
    for (Index r = 0; r < count; ++r) {
        for (Index j = 0; j < n; ++j) { eps(j) = normal(rng); }
        out.row(r) = (g.mean() + chol.lower().triangularView<Eigen::Lower>() * eps).transpose();
    }
    return out;
}

}  // namespace gpkit
