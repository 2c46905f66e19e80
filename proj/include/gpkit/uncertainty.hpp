#pragma once

// Model-error quantification for a fitted GP: robust c-sigma bands, scenario
// sampling from the joint posterior, information gain and the
// information-theoretic beta-sigma bound.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "gpkit/error.hpp"
#include "gpkit/gaussian.hpp"
#include "gpkit/gpr.hpp"
#include "gpkit/kernels.hpp"

namespace gpkit {

enum class BoundMethod { Robust, InfoTheoretic };

struct BoundParams {
    double c = 0.0;  // Robust
    double delta = 0.0;
    double rkhs_norm_bound = 0.0;
    double gamma_max = 0.0;
    double beta = 0.0;
    Index n_d = 0;
};

/// Error envelope center +/- halfwidth at the columns of `points`.
struct BoundReport {
    BoundMethod method = BoundMethod::Robust;
    MatrixXd points;
    VectorXd center;
    VectorXd halfwidth;
    BoundParams params;
};

/// n_scen joint posterior draws (rows) over the columns of `points`.
struct ScenarioBundle {
    MatrixXd points;
    MatrixXd samples;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_output(const TrainedGP& model, Index output, const char* who) {
    if (output < 0 || output >= model.n_outputs()) { throw IndexOutOfRange(std::string(who) + ": output index out of range"); }
}

inline BoundReport std_band(const TrainedGP& model, const MatrixXd& zstar, Index output, double scale) {
    const Prediction p = predict(model, zstar);
    BoundReport r;
    r.points = zstar;
    r.center = p.mean.col(output);
    r.halfwidth = scale * p.variance.col(output).array().sqrt();
    return r;
}

}  // namespace detail

/// halfwidth = c * posterior standard deviation.
inline BoundReport robust_bound(const TrainedGP& model, const MatrixXd& zstar, double c, Index output = 0) {
    detail::check_output(model, output, "robust_bound");
    if (!(c > 0.0)) { throw InvalidArgument("robust_bound: c must be > 0"); }
    BoundReport r = detail::std_band(model, zstar, output, c);
    r.method = BoundMethod::Robust;
    r.params.c = c;
    r.params.n_d = model.dataset().n_d();
    return r;
}

inline ScenarioBundle scenario_sample(const TrainedGP& model, const MatrixXd& zstar, Index n_scen, std::uint64_t seed,
                                      Index output = 0) {
    if (n_scen < 1) { throw InvalidArgument("scenario_sample: n_scen must be >= 1"); }
    const Gaussian joint = joint_posterior(model, zstar, output);
    return {zstar, sample(joint, n_scen, seed), seed};
}

/// 1/2 log|I + sigma_n^{-2} K(x, x)|.
inline double info_gain(const KernelSpec& k, const MatrixXd& x, double sigma_n) {
    if (!(sigma_n > 0.0)) { throw InvalidArgument("info_gain: sigma_n must be > 0"); }
    if (x.cols() == 0) { return 0.0; }
    MatrixXd a = gram(k, x) / (sigma_n * sigma_n);
    a.diagonal().array() += 1.0;
    return 0.5 * cholesky(a).log_det();
}

struct InfoGainResult {
    double gamma_max = 0.0;
    std::vector<Index> chosen;
    std::vector<double> increments;  // gain added by each greedy step
};

/// Greedy forward selection of `subset_size` candidate columns maximizing the
/// information gain. Each step adds the candidate with the largest
/// determinant increment 1/2 log(1 + sigma_n^{-2} var(x | chosen)); ties go
/// to the lowest index.
inline InfoGainResult max_info_gain_greedy(const KernelSpec& k, const MatrixXd& candidates, Index subset_size,
                                           double sigma_n) {
    if (!(sigma_n > 0.0)) { throw InvalidArgument("max_info_gain_greedy: sigma_n must be > 0"); }
    if (subset_size < 1 || subset_size > candidates.cols()) {
        throw InvalidArgument("max_info_gain_greedy: subset_size must be in [1, candidate count]");
    }
    const Index n = candidates.cols();
    const double s2 = sigma_n * sigma_n;
    const MatrixXd kall = gram(k, candidates);

    InfoGainResult res;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (Index step = 0; step < subset_size; ++step) {
        CholeskyFactor chol;
        const auto m = static_cast<Index>(res.chosen.size());
        if (m > 0) {
            MatrixXd ks = kall(res.chosen, res.chosen);
            ks.diagonal().array() += s2;
            chol = cholesky(ks);
        }
        Index best = -1;
        double best_var = -1.0;
        for (Index j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) { continue; }
            double var = kall(j, j);
            if (m > 0) {
                const VectorXd kj = kall(res.chosen, j);
                var -= chol.solve_lower(kj).squaredNorm();
            }
            if (var > best_var) {
                best_var = var;
                best = j;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        res.chosen.push_back(best);
        res.increments.push_back(0.5 * std::log1p(std::max(0.0, best_var) / s2));
    }
    res.gamma_max = info_gain(k, candidates(Eigen::all, res.chosen), sigma_n);
    return res;
}

/// beta = sqrt(2 ||f||^2 + 300 gamma_max ln^3((n_D + 1) / (1 - delta))).
inline double beta(double rkhs_norm_bound, double gamma_max, Index n_d, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) { throw InvalidDelta("beta: delta must lie in (0, 1)"); }
    if (rkhs_norm_bound < 0.0 || gamma_max < 0.0 || n_d < 0) {
        throw InvalidArgument("beta: norm bound, gamma_max and n_D must be nonnegative");
    }
    const double l = std::log((static_cast<double>(n_d) + 1.0) / (1.0 - delta));
    return std::sqrt(2.0 * rkhs_norm_bound * rkhs_norm_bound + 300.0 * gamma_max * l * l * l);
}

/// halfwidth = beta * posterior standard deviation.
inline BoundReport info_bound(const TrainedGP& model, const MatrixXd& zstar, double rkhs_norm_bound, double gamma_max,
                              double delta, Index output = 0) {
    detail::check_output(model, output, "info_bound");
    const Index nd = model.dataset().n_d();
    const double b = beta(rkhs_norm_bound, gamma_max, nd, delta);
    BoundReport r = detail::std_band(model, zstar, output, b);
    r.method = BoundMethod::InfoTheoretic;
    r.params.delta = delta;
    r.params.rkhs_norm_bound = rkhs_norm_bound;
    r.params.gamma_max = gamma_max;
    r.params.beta = b;
    r.params.n_d = nd;
    return r;
}

}  // namespace gpkit
