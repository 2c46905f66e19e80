#pragma once

// Finite kernel expansions f(.) = sum_i alpha_i k(c_i, .) as RKHS elements.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <utility>

#include "gpkit/error.hpp"
#include "gpkit/gpr.hpp"
#include "gpkit/kernels.hpp"

namespace gpkit {

class RkhsElement {
public:
    RkhsElement(KernelSpec kernel, MatrixXd centers, VectorXd coeffs)
        : kernel_(std::move(kernel)), centers_(std::move(centers)), coeffs_(std::move(coeffs)) {
        detail::require_dims(centers_.cols() == coeffs_.size(), "RkhsElement: one coefficient per center required");
        detail::require_dims(centers_.cols() == 0 || centers_.rows() == kernel_.input_dim(),
                             "RkhsElement: center dimension does not match kernel");
        if (!centers_.allFinite() || !coeffs_.allFinite()) { throw InvalidArgument("RkhsElement: non-finite entry"); }
    }

    /// The posterior mean of one output minus its constant prior mean.
    static RkhsElement from_posterior(const TrainedGP& model, Index output) {
        return {model.kernel(output), model.dataset().x, model.alpha(output)};
    }

    [[nodiscard]] const KernelSpec& kernel() const noexcept { return kernel_; }
    [[nodiscard]] const MatrixXd& centers() const noexcept { return centers_; }
    [[nodiscard]] const VectorXd& coeffs() const noexcept { return coeffs_; }

    [[nodiscard]] RkhsElement scaled(double c) const { return {kernel_, centers_, c * coeffs_}; }

private:
    KernelSpec kernel_;
    MatrixXd centers_;
    VectorXd coeffs_;
};

inline double evaluate(const RkhsElement& f, const VectorXd& z) {
    detail::require_dims(z.size() == f.kernel().input_dim(), "evaluate: point dimension mismatch");
    if (f.coeffs().size() == 0) { return 0.0; }
    return f.coeffs().dot(cross(f.kernel(), z, f.centers()));
}

/// ||f||^2 = alpha^T K alpha.
inline double norm_sq(const RkhsElement& f) {
    if (f.coeffs().size() == 0) { return 0.0; }
    const MatrixXd k = gram(f.kernel(), f.centers());
    const double v = f.coeffs().dot(k * f.coeffs());
    const double scale = std::max(1.0, f.coeffs().cwiseAbs().maxCoeff() * f.coeffs().cwiseAbs().maxCoeff() *
                                           k.cwiseAbs().maxCoeff());
    if (v < -1e-10 * scale) { throw NotPSD("norm_sq: negative quadratic form, kernel is not positive definite here"); }
    return v;
}

/// Coordinates of f in the feature basis (z1^2, sqrt(2) z1 z2, z2^2) of the
/// homogeneous degree-2 polynomial kernel on R^2.
inline Eigen::Vector3d poly2_features(const RkhsElement& f) {
    const KernelSpec& k = f.kernel();
    if (k.family() != KernelFamily::Polynomial || k.degree() != 2 || k.phi()(0) != 0.0 || k.input_dim() != 2) {
        throw UnsupportedKernel("poly2 feature map needs the polynomial kernel with p = 2, phi_1 = 0, n_z = 2");
    }
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (Index i = 0; i < f.coeffs().size(); ++i) {
        const double a = f.centers()(0, i);
        const double b = f.centers()(1, i);
        c += f.coeffs()(i) * Eigen::Vector3d(a * a, std::numbers::sqrt2 * a * b, b * b);
    }
    return c;
}

inline double poly2_feature_norm_sq(const RkhsElement& f) { return poly2_features(f).squaredNorm(); }

/// d(z, z2) = sqrt(k(z,z) - 2 k(z,z2) + k(z2,z2)).
inline double kernel_distance(const KernelSpec& k, const VectorXd& z, const VectorXd& z2) {
    const double d2 = eval(k, z, z) - 2.0 * eval(k, z, z2) + eval(k, z2, z2);
    if (d2 < 0.0) {
        if (d2 >= -1e-10) { return 0.0; }
        throw NotPSD("kernel_distance: negative squared distance");
    }
    return std::sqrt(d2);
}

struct LipschitzCheck {
    double lhs = 0.0;  // |f(z) - f(z2)|
    double rhs = 0.0;  // ||f|| d(z, z2)
};

inline LipschitzCheck lipschitz_check(const RkhsElement& f, const VectorXd& z, const VectorXd& z2) {
    const double lhs = std::abs(evaluate(f, z) - evaluate(f, z2));
    const double d = kernel_distance(f.kernel(), z, z2);
    if (d == 0.0 && lhs > 0.0) {
        throw DegenerateDistance("lipschitz_check: zero kernel distance between points with different values");
    }
    return {lhs, std::sqrt(std::max(0.0, norm_sq(f))) * d};
}

}  // namespace gpkit
