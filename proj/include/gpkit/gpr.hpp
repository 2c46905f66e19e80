#pragma once

// Exact Gaussian-process regression with independent outputs.

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "gpkit/error.hpp"
#include "gpkit/gaussian.hpp"
#include "gpkit/kernels.hpp"

namespace gpkit {

/// Training data. Inputs are the columns of x (n_z x n_D); outputs are the
/// rows of y (n_D x n_y); noise holds the observation noise std per output.
struct Dataset {
    MatrixXd x;
    MatrixXd y;
    VectorXd noise;

    [[nodiscard]] Index n_d() const noexcept { return x.cols(); }
    [[nodiscard]] Index n_z() const noexcept { return x.rows(); }
    [[nodiscard]] Index n_y() const noexcept { return y.cols(); }

    void validate() const {
        detail::require_dims(x.cols() == y.rows(), "Dataset: input column count must equal output row count");
        detail::require_dims(noise.size() == y.cols(), "Dataset: one noise level per output required");
        if (x.rows() < 1) { throw InvalidArgument("Dataset: input dimension must be positive"); }
        if (y.cols() < 1) { throw InvalidArgument("Dataset: at least one output required"); }
        if (!x.allFinite() || !y.allFinite() || !noise.allFinite()) {
            throw InvalidArgument("Dataset: NaN or Inf entry");
        }
        if ((noise.array() < 0.0).any()) { throw InvalidArgument("Dataset: noise must be >= 0"); }
    }

    /// Single-output view of output column i.
    [[nodiscard]] Dataset output(Index i) const {
        if (i < 0 || i >= n_y()) { throw IndexOutOfRange("Dataset::output: index out of range"); }
        return {x, y.col(i), VectorXd::Constant(1, noise(i))};
    }

    /// Copy with training point i removed.
    [[nodiscard]] Dataset without(Index i) const {
        if (i < 0 || i >= n_d()) { throw IndexOutOfRange("Dataset::without: index out of range"); }
        Dataset out{MatrixXd(n_z(), n_d() - 1), MatrixXd(n_d() - 1, n_y()), noise};
        const Index tail = n_d() - i - 1;
        out.x.leftCols(i) = x.leftCols(i);
        out.x.rightCols(tail) = x.rightCols(tail);
        out.y.topRows(i) = y.topRows(i);
        out.y.bottomRows(tail) = y.bottomRows(tail);
        return out;
    }
};

inline Dataset single_output(MatrixXd x, VectorXd y, double noise) {
    return {std::move(x), std::move(y), VectorXd::Constant(1, noise)};
}

/// Prior mean: zero, one constant shared by all outputs, or one constant per output.
struct MeanSpec {
    enum class Kind { Zero, Constant, PerDimension };

    Kind kind = Kind::Zero;
    VectorXd values;

    static MeanSpec zero() { return {}; }
    static MeanSpec constant(double c) { return {Kind::Constant, VectorXd::Constant(1, c)}; }
    static MeanSpec per_dimension(VectorXd v) { return {Kind::PerDimension, std::move(v)}; }

    [[nodiscard]] double value(Index output) const {
        switch (kind) {
            case Kind::Zero: return 0.0;
            case Kind::Constant: return values(0);
            case Kind::PerDimension:
                if (output < 0 || output >= values.size()) { throw IndexOutOfRange("MeanSpec: output index out of range"); }
                return values(output);
        }
        return 0.0;
    }

    void validate(Index n_y) const {
        if (!values.allFinite()) { throw InvalidArgument("MeanSpec: non-finite value"); }
        if (kind == Kind::Constant && values.size() != 1) { throw InvalidArgument("MeanSpec: constant needs one value"); }
        if (kind == Kind::PerDimension && values.size() != n_y) {
            throw DimensionMismatch("MeanSpec: per-dimension mean needs one value per output");
        }
    }

    friend bool operator==(const MeanSpec& a, const MeanSpec& b) {
        return a.kind == b.kind && a.values.size() == b.values.size() && a.values == b.values;
    }
};

/// Posterior summary at n* test points for every output (n* x n_y).
struct Prediction {
    MatrixXd mean;
    MatrixXd variance;
    MatrixXd variance_with_noise;
};

class TrainedGP;
TrainedGP fit(const Dataset& data, const std::vector<KernelSpec>& kernels, const MeanSpec& mean);

/// Fitted model: per output, the Cholesky factor of K + sigma_n^2 I and the
/// representer weights alpha = (K + sigma_n^2 I)^{-1} (y - m).
class TrainedGP {
public:
    [[nodiscard]] const std::vector<KernelSpec>& kernels() const noexcept { return kernels_; }
    [[nodiscard]] const KernelSpec& kernel(Index output) const { return kernels_.at(check_output(output)); }
    [[nodiscard]] const MeanSpec& mean() const noexcept { return mean_; }
    [[nodiscard]] const Dataset& dataset() const noexcept { return data_; }
    [[nodiscard]] const CholeskyFactor& chol(Index output) const { return chol_.at(check_output(output)); }
    [[nodiscard]] const VectorXd& alpha(Index output) const { return alpha_.at(check_output(output)); }
    [[nodiscard]] Index n_outputs() const noexcept { return static_cast<Index>(kernels_.size()); }
    [[nodiscard]] Index input_dim() const noexcept { return data_.n_z(); }
    [[nodiscard]] double noise(Index output) const { return data_.noise(check_output(output)); }

private:
    friend TrainedGP fit(const Dataset&, const std::vector<KernelSpec>&, const MeanSpec&);
    TrainedGP() = default;

    [[nodiscard]] std::size_t check_output(Index output) const {
        if (output < 0 || output >= n_outputs()) { throw IndexOutOfRange("TrainedGP: output index out of range"); }
        return static_cast<std::size_t>(output);
    }

    std::vector<KernelSpec> kernels_;
    MeanSpec mean_;
    Dataset data_;
    std::vector<CholeskyFactor> chol_;
    std::vector<VectorXd> alpha_;
};

/// Fits one independent GP per output column. An empty dataset yields the prior.
inline TrainedGP fit(const Dataset& data, const std::vector<KernelSpec>& kernels, const MeanSpec& mean) {
    data.validate();
    mean.validate(data.n_y());
    detail::require_dims(static_cast<Index>(kernels.size()) == data.n_y(), "fit: need one kernel per output");
    for (const auto& k : kernels) {
        detail::require_dims(k.input_dim() == data.n_z(), "fit: kernel input_dim does not match data");
    }

    TrainedGP gp;
    gp.kernels_ = kernels;
    gp.mean_ = mean;
    gp.data_ = data;
    for (Index i = 0; i < data.n_y(); ++i) {
        MatrixXd k = gram(kernels[static_cast<std::size_t>(i)], data.x);
        k.diagonal().array() += data.noise(i) * data.noise(i);
        CholeskyFactor chol = cholesky(k);
        const VectorXd resid = data.y.col(i).array() - mean.value(i);
        gp.alpha_.push_back(data.n_d() > 0 ? chol.solve_vec(resid) : VectorXd());
        gp.chol_.push_back(std::move(chol));
    }
    return gp;
}

inline TrainedGP fit(const Dataset& data, const KernelSpec& kernel, const MeanSpec& mean = MeanSpec::zero()) {
    return fit(data, std::vector<KernelSpec>(static_cast<std::size_t>(std::max<Index>(data.n_y(), 1)), kernel), mean);
}

namespace detail {

inline double clamp_variance(double v, double prior) {
    if (v >= 0.0) { return v; }
    if (v >= -1e-10 * std::max(1.0, prior)) { return 0.0; }
    throw InternalConsistency("posterior variance " + std::to_string(v) + " is negative beyond tolerance");
}

}  // namespace detail

/// Posterior mean and latent variance at the columns of zstar (n_z x n*).
inline Prediction predict(const TrainedGP& model, const MatrixXd& zstar) {
    detail::require_dims(zstar.rows() == model.input_dim(), "predict: test point dimension mismatch");
    const Index ns = zstar.cols();
    const Index ny = model.n_outputs();
    Prediction out{MatrixXd(ns, ny), MatrixXd(ns, ny), MatrixXd(ns, ny)};
    const Dataset& data = model.dataset();

    for (Index i = 0; i < ny; ++i) {
        const KernelSpec& k = model.kernel(i);
        const double m = model.mean().value(i);
        const double s2 = data.noise(i) * data.noise(i);
        MatrixXd v;
        VectorXd mean = VectorXd::Constant(ns, m);
        if (data.n_d() > 0) {
            const MatrixXd ks = cross_matrix(k, data.x, zstar);  // n_D x n*
            mean += ks.transpose() * model.alpha(i);
            v = model.chol(i).solve_lower(ks);
        }
        for (Index j = 0; j < ns; ++j) {
            const double prior = eval(k, zstar.col(j), zstar.col(j));
            const double reduction = data.n_d() > 0 ? v.col(j).squaredNorm() : 0.0;
            const double var = detail::clamp_variance(prior - reduction, prior);
            out.mean(j, i) = mean(j);
            out.variance(j, i) = var;
            out.variance_with_noise(j, i) = var + s2;
        }
    }
    return out;
}

inline Prediction predict_point(const TrainedGP& model, const VectorXd& z) { return predict(model, MatrixXd(z)); }

/// Full posterior over f at every column of zstar, for one output.
inline Gaussian joint_posterior(const TrainedGP& model, const MatrixXd& zstar, Index output) {
    if (output < 0 || output >= model.n_outputs()) { throw IndexOutOfRange("joint_posterior: output index out of range"); }
    if (zstar.cols() < 1) { throw InvalidArgument("joint_posterior: need at least one test point"); }
    detail::require_dims(zstar.rows() == model.input_dim(), "joint_posterior: test point dimension mismatch");

    const KernelSpec& k = model.kernel(output);
    const Dataset& data = model.dataset();
    VectorXd mean = VectorXd::Constant(zstar.cols(), model.mean().value(output));
    MatrixXd cov = gram(k, zstar);
    if (data.n_d() > 0) {
        const MatrixXd ks = cross_matrix(k, data.x, zstar);
        mean += ks.transpose() * model.alpha(output);
        const MatrixXd v = model.chol(output).solve_lower(ks);
        cov -= v.transpose() * v;
        cov = 0.5 * (cov + cov.transpose());
    }
    return {std::move(mean), std::move(cov)};
}

struct WeightSpaceResult {
    double mean = 0.0;
    double variance = 0.0;
};

/// Bayesian linear regression f(z) = z^T w, w ~ N(0, prior_cov):
///   A = sigma_n^{-2} X X^T + prior_cov^{-1},
///   mean = sigma_n^{-2} z^T A^{-1} X y,  variance = z^T A^{-1} z.
inline WeightSpaceResult weight_space_predict(const Dataset& data, const VectorXd& zstar, const MatrixXd& prior_cov) {
    data.validate();
    detail::require_dims(data.n_y() == 1, "weight_space_predict: single output only");
    detail::require_dims(zstar.size() == data.n_z(), "weight_space_predict: test point dimension mismatch");
    detail::require_dims(prior_cov.rows() == data.n_z() && prior_cov.cols() == data.n_z(),
                         "weight_space_predict: prior covariance must be n_z x n_z");
    const double sn = data.noise(0);
    if (!(sn > 0.0)) { throw InvalidArgument("weight_space_predict: noise must be > 0"); }

    const Index nz = data.n_z();
    const MatrixXd prior_inv = cholesky(prior_cov).solve(MatrixXd::Identity(nz, nz));
    MatrixXd a = data.x * data.x.transpose() / (sn * sn) + prior_inv;
    a = 0.5 * (a + a.transpose());
    const CholeskyFactor chol = cholesky(a);
    const VectorXd xy = data.n_d() > 0 ? VectorXd(data.x * data.y.col(0)) : VectorXd::Zero(nz);
    const VectorXd a_inv_z = chol.solve_vec(zstar);
    return {a_inv_z.dot(xy) / (sn * sn), zstar.dot(a_inv_z)};
}

}  // namespace gpkit
