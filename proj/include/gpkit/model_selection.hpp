#pragma once

// Hyperparameter selection: negative log marginal likelihood with analytic
// gradient, multi-start projected gradient descent, and leave-one-out CV.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "gpkit/error.hpp"
#include "gpkit/gaussian.hpp"
#include "gpkit/gpr.hpp"
#include "gpkit/kernels.hpp"

namespace gpkit {

/// NLL = data_fit + complexity + constant, where
///   data_fit   = 1/2 y^T (K + s^2 I)^{-1} y,
///   complexity = 1/2 log|K + s^2 I|,
///   constant   = n_D/2 log(2 pi).
struct NllTerms {
    double value = 0.0;
    double data_fit = 0.0;
    double complexity = 0.0;
    double constant = 0.0;
};

namespace detail {

inline void require_single_output(const Dataset& data, const char* who) {
    data.validate();
    detail::require_dims(data.n_y() == 1, std::string(who) + ": single-output dataset required");
}

inline MatrixXd noisy_gram(const KernelSpec& k, const MatrixXd& x, double sigma_n) {
    MatrixXd kn = gram(k, x);
    kn.diagonal().array() += sigma_n * sigma_n;
    return kn;
}

}  // namespace detail

inline NllTerms nll(const Dataset& data, const KernelSpec& k, double sigma_n, const MeanSpec& mean = MeanSpec::zero()) {
    detail::require_single_output(data, "nll");
    if (data.n_d() < 1) { throw InvalidArgument("nll: need at least one training point"); }
    detail::require_dims(k.input_dim() == data.n_z(), "nll: kernel input_dim does not match data");

    const CholeskyFactor chol = cholesky(detail::noisy_gram(k, data.x, sigma_n));
    const VectorXd resid = data.y.col(0).array() - mean.value(0);
    NllTerms t;
    t.data_fit = 0.5 * chol.solve_lower(resid).squaredNorm();
    t.complexity = 0.5 * chol.log_det();
    t.constant = 0.5 * static_cast<double>(data.n_d()) * kLog2Pi;
    t.value = t.data_fit + t.complexity + t.constant;
    return t;
}

/// Gradient of the NLL in log-parameters: (d/dlog phi_1, ..., d/dlog sigma_n).
/// Uses dNLL/dtheta = 1/2 tr((K~^{-1} - alpha alpha^T) dK~/dtheta).
inline VectorXd nll_grad(const Dataset& data, const KernelSpec& k, double sigma_n,
                         const MeanSpec& mean = MeanSpec::zero()) {
    detail::require_single_output(data, "nll_grad");
    if (data.n_d() < 1) { throw InvalidArgument("nll_grad: need at least one training point"); }
    detail::require_dims(k.input_dim() == data.n_z(), "nll_grad: kernel input_dim does not match data");

    const Index n = data.n_d();
    const CholeskyFactor chol = cholesky(detail::noisy_gram(k, data.x, sigma_n));
    const VectorXd resid = data.y.col(0).array() - mean.value(0);
    const VectorXd alpha = chol.solve_vec(resid);
    const MatrixXd inner = chol.solve(MatrixXd::Identity(n, n)) - alpha * alpha.transpose();

    const auto dk = gram_grads(k, data.x);
    VectorXd g(k.num_params() + 1);
    for (Index p = 0; p < k.num_params(); ++p) {
        g(p) = 0.5 * inner.cwiseProduct(dk[static_cast<std::size_t>(p)]).sum();
    }
    g(k.num_params()) = 0.5 * inner.trace() * 2.0 * sigma_n * sigma_n;
    return g;
}

struct OptimConfig {
    int restarts = 10;
    std::uint64_t seed = 0;
    int max_iters = 200;
    double grad_tol = 1e-6;
    /// Per-parameter natural-log bounds over (log phi..., log sigma_n). When
    /// empty, [-5, 5] is used for every parameter.
    VectorXd log_lo;
    VectorXd log_hi;
};

struct RestartRecord {
    VectorXd start;  // log-parameters
    VectorXd final;  // log-parameters
    double final_nll = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool failed = false;
};

struct HyperResult {
    VectorXd phi_star;
    double sigma_star = 0.0;
    double nll_star = std::numeric_limits<double>::infinity();
    std::vector<RestartRecord> restart_trace;
};

namespace detail {

struct NllObjective {
    const Dataset& data;
    const KernelSpec& templ;

    [[nodiscard]] KernelSpec kernel_at(const VectorXd& theta) const {
        return templ.with_phi(theta.head(theta.size() - 1).array().exp().matrix());
    }

    // NLL at theta; nullopt when the Gram matrix cannot be factorized.
    [[nodiscard]] std::optional<double> value(const VectorXd& theta) const {
        try {
            return nll(data, kernel_at(theta), std::exp(theta(theta.size() - 1))).value;
        } catch (const NotPSD&) {
            return std::nullopt;
        }
    }

    [[nodiscard]] VectorXd grad(const VectorXd& theta) const {
        return nll_grad(data, kernel_at(theta), std::exp(theta(theta.size() - 1)));
    }
};

inline VectorXd project(const VectorXd& theta, const VectorXd& lo, const VectorXd& hi) {
    return theta.cwiseMax(lo).cwiseMin(hi);
}

// Projected gradient descent with Armijo backtracking (c = 1e-4, halving).
inline RestartRecord descend(const NllObjective& obj, VectorXd theta, const VectorXd& lo, const VectorXd& hi,
                             const OptimConfig& cfg) {
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxHalvings = 60;

    RestartRecord rec;
    rec.start = theta;
    auto f = obj.value(theta);
    if (!f) {
        rec.failed = true;
        rec.final = theta;
        return rec;
    }
    double step = 1.0;
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        const VectorXd g = obj.grad(theta);
        if (!g.allFinite()) { break; }
        // Projected-gradient stationarity measure.
        if ((theta - project(theta - g, lo, hi)).norm() <= cfg.grad_tol) { break; }

        bool accepted = false;
        for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
            const VectorXd trial = project(theta - step * g, lo, hi);
            const VectorXd delta = theta - trial;
            if (delta.squaredNorm() == 0.0) { break; }
            const auto ft = obj.value(trial);
            if (ft && *ft <= *f - kArmijo * g.dot(delta)) {
                theta = trial;
                f = ft;
                accepted = true;
                break;
            }
        }
        if (!accepted) { break; }
        step = std::min(step * 2.0, 1e3);
    }
    rec.final = theta;
    rec.final_nll = *f;
    rec.iterations = it;
    return rec;
}

}  // namespace detail

/// Minimizes the NLL over log(phi) and log(sigma_n) from `cfg.restarts`
/// uniform starts inside the log-bounds. Restart r draws its start from the
/// stream (cfg.seed, r), so the result is deterministic per seed.
inline HyperResult optimize(const Dataset& data, const KernelSpec& family, const OptimConfig& cfg = {}) {
    detail::require_single_output(data, "optimize");
    if (data.n_d() < 2) { throw InvalidArgument("optimize: need at least two training points"); }
    if (cfg.restarts < 1 || cfg.max_iters < 1 || !(cfg.grad_tol > 0.0)) {
        throw InvalidArgument("optimize: restarts, max_iters and grad_tol must be positive");
    }
    if (family.num_params() == 0) { throw InvalidArgument("optimize: kernel has no hyperparameters"); }

    const Index np = family.num_params() + 1;
    const VectorXd lo = cfg.log_lo.size() == 0 ? VectorXd::Constant(np, -5.0) : cfg.log_lo;
    const VectorXd hi = cfg.log_hi.size() == 0 ? VectorXd::Constant(np, 5.0) : cfg.log_hi;
    detail::require_dims(lo.size() == np && hi.size() == np, "optimize: one log-bound per parameter required");
    if (!(lo.array() < hi.array()).all()) { throw InvalidArgument("optimize: log_lo must be < log_hi"); }

    const detail::NllObjective obj{data, family};
    HyperResult res;
    std::optional<std::size_t> best;
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(r));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        VectorXd start(np);
        for (Index j = 0; j < np; ++j) { start(j) = lo(j) + (hi(j) - lo(j)) * unif(rng); }
        res.restart_trace.push_back(detail::descend(obj, start, lo, hi, cfg));
        const auto& rec = res.restart_trace.back();
        if (!rec.failed && (!best || rec.final_nll < res.restart_trace[*best].final_nll)) {
            best = res.restart_trace.size() - 1;
        }
    }
    if (!best) { throw OptimFailed("optimize: every start failed to factorize"); }

    const RestartRecord& b = res.restart_trace[*best];
    res.phi_star = b.final.head(np - 1).array().exp();
    res.sigma_star = std::exp(b.final(np - 1));
    res.nll_star = b.final_nll;
    return res;
}

/// Log predictive density of y_i under the model fitted without point i.
/// The predictive variance includes sigma_n^2; the constant is 1/2 log(2 pi).
inline double loo_logpred(const Dataset& data, const KernelSpec& k, double sigma_n, Index i,
                          const MeanSpec& mean = MeanSpec::zero()) {
    detail::require_single_output(data, "loo_logpred");
    if (data.n_d() < 2) { throw InvalidArgument("loo_logpred: need at least two training points"); }
    if (i < 0 || i >= data.n_d()) { throw IndexOutOfRange("loo_logpred: point index out of range"); }

    Dataset rest = data.without(i);
    rest.noise(0) = sigma_n;
    const TrainedGP gp = fit(rest, k, mean);
    const Prediction p = predict(gp, data.x.col(i));
    const double mu = p.mean(0, 0);
    const double var = p.variance_with_noise(0, 0);
    if (!(var > 0.0)) { throw NotPSD("loo_logpred: zero predictive variance (sigma_n = 0 at a duplicated input?)"); }
    const double r = data.y(i, 0) - mu;
    return -0.5 * std::log(var) - r * r / (2.0 * var) - 0.5 * kLog2Pi;
}

/// Sum of loo_logpred over all training points.
inline double loo_sum(const Dataset& data, const KernelSpec& k, double sigma_n, const MeanSpec& mean = MeanSpec::zero()) {
    double total = 0.0;
    for (Index i = 0; i < data.n_d(); ++i) { total += loo_logpred(data, k, sigma_n, i, mean); }
    return total;
}

}  // namespace gpkit
