#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpkit/error.hpp"
#include "gpkit/gaussian.hpp"

namespace gpkit {

enum class KernelFamily {
    Constant,
    Linear,
    Polynomial,
    Matern,
    SquaredExponential,
    RationalQuadratic,
    SquaredExponentialARD,
};

inline std::string_view family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::Constant: return "constant";
        case KernelFamily::Linear: return "linear";
        case KernelFamily::Polynomial: return "polynomial";
        case KernelFamily::Matern: return "matern";
        case KernelFamily::SquaredExponential: return "se";
        case KernelFamily::RationalQuadratic: return "rq";
        case KernelFamily::SquaredExponentialARD: return "se_ard";
    }
    return "unknown";
}

inline std::optional<KernelFamily> parse_family(std::string_view name) {
    if (name == "constant") { return KernelFamily::Constant; }
    if (name == "linear") { return KernelFamily::Linear; }
    if (name == "polynomial" || name == "poly") { return KernelFamily::Polynomial; }
    if (name == "matern") { return KernelFamily::Matern; }
    if (name == "se" || name == "squared_exponential") { return KernelFamily::SquaredExponential; }
    if (name == "rq" || name == "rational_quadratic") { return KernelFamily::RationalQuadratic; }
    if (name == "se_ard" || name == "se-ard") { return KernelFamily::SquaredExponentialARD; }
    return std::nullopt;
}

/// True for the families that depend on z - z' only.
inline bool is_stationary(KernelFamily f) {
    return f == KernelFamily::Matern || f == KernelFamily::SquaredExponential ||
           f == KernelFamily::RationalQuadratic || f == KernelFamily::SquaredExponentialARD ||
           f == KernelFamily::Constant;
}

inline constexpr int kMaxMaternDegree = 30;

/// Kernel family plus hyperparameters.
///
/// phi[0] is the signal amplitude phi_1 (k(z, z) = phi_1^2 for stationary
/// families); phi[1] is the lengthscale, or phi[1..n_z] the per-dimension
/// lengthscales for SE-ARD. The Linear kernel z^T z' + phi_1^2 accepts an
/// empty phi (phi_1 = 0) or a single offset. Matern uses the half-integer
/// order p + 1/2 with p = degree.
class KernelSpec {
public:
    KernelSpec(KernelFamily family, VectorXd phi, int degree, Index input_dim)
        : family_(family), phi_(std::move(phi)), degree_(degree), input_dim_(input_dim) {
        validate();
    }

    static KernelSpec constant(double amp, Index input_dim = 1) {
        return {KernelFamily::Constant, VectorXd::Constant(1, amp), 0, input_dim};
    }
    static KernelSpec linear(Index input_dim, std::optional<double> offset = std::nullopt) {
        return {KernelFamily::Linear, offset ? VectorXd::Constant(1, *offset) : VectorXd(0), 0, input_dim};
    }
    static KernelSpec polynomial(int degree, double offset, Index input_dim) {
        return {KernelFamily::Polynomial, VectorXd::Constant(1, offset), degree, input_dim};
    }
    static KernelSpec matern(int p, double amp, double lengthscale, Index input_dim = 1) {
        return {KernelFamily::Matern, (VectorXd(2) << amp, lengthscale).finished(), p, input_dim};
    }
    static KernelSpec se(double amp, double lengthscale, Index input_dim = 1) {
        return {KernelFamily::SquaredExponential, (VectorXd(2) << amp, lengthscale).finished(), 0, input_dim};
    }
    static KernelSpec rq(int p, double amp, double lengthscale, Index input_dim = 1) {
        return {KernelFamily::RationalQuadratic, (VectorXd(2) << amp, lengthscale).finished(), p, input_dim};
    }
    static KernelSpec se_ard(double amp, const VectorXd& lengthscales) {
        VectorXd phi(1 + lengthscales.size());
        phi << amp, lengthscales;
        return {KernelFamily::SquaredExponentialARD, std::move(phi), 0, lengthscales.size()};
    }

    [[nodiscard]] KernelFamily family() const noexcept { return family_; }
    [[nodiscard]] const VectorXd& phi() const noexcept { return phi_; }
    [[nodiscard]] int degree() const noexcept { return degree_; }
    [[nodiscard]] Index input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] Index num_params() const noexcept { return phi_.size(); }

    /// Same family and shape with new hyperparameters.
    [[nodiscard]] KernelSpec with_phi(VectorXd phi) const { return {family_, std::move(phi), degree_, input_dim_}; }

    /// Number of hyperparameters the family expects (Linear: 0, optionally 1).
    static Index expected_params(KernelFamily family, Index input_dim) {
        switch (family) {
            case KernelFamily::Constant:
            case KernelFamily::Polynomial: return 1;
            case KernelFamily::Linear: return 0;
            case KernelFamily::Matern:
            case KernelFamily::SquaredExponential:
            case KernelFamily::RationalQuadratic: return 2;
            case KernelFamily::SquaredExponentialARD: return 1 + input_dim;
        }
        return 0;
    }

    friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
        return a.family_ == b.family_ && a.degree_ == b.degree_ && a.input_dim_ == b.input_dim_ &&
               a.phi_.size() == b.phi_.size() && a.phi_ == b.phi_;
    }

private:
    void validate() const {
        const std::string name(family_name(family_));
        if (input_dim_ < 1) { throw InvalidArgument(name + " kernel: input_dim must be positive"); }
        const Index want = expected_params(family_, input_dim_);
        const bool linear_offset = family_ == KernelFamily::Linear && phi_.size() == 1;
        if (phi_.size() != want && !linear_offset) {
            throw InvalidArgument(name + " kernel: expected " + std::to_string(want) + " hyperparameters, got " +
                                  std::to_string(phi_.size()));
        }
        if (!phi_.allFinite()) { throw InvalidArgument(name + " kernel: non-finite hyperparameter"); }
        if (phi_.size() > 0 && phi_(0) < 0.0) { throw InvalidArgument(name + " kernel: phi_1 must be >= 0"); }
        for (Index i = 1; i < phi_.size(); ++i) {
            if (!(phi_(i) > 0.0)) { throw InvalidArgument(name + " kernel: lengthscales must be > 0"); }
        }
        switch (family_) {
            case KernelFamily::Polynomial:
            case KernelFamily::RationalQuadratic:
                if (degree_ < 1) { throw InvalidArgument(name + " kernel: degree must be >= 1"); }
                break;
            case KernelFamily::Matern:
                if (degree_ < 0 || degree_ > kMaxMaternDegree) {
                    throw InvalidArgument("matern kernel: p must be in [0, " + std::to_string(kMaxMaternDegree) + "]");
                }
                break;
            default: break;
        }
    }

    KernelFamily family_;
    VectorXd phi_;
    int degree_ = 0;
    Index input_dim_ = 1;
};

namespace detail {

inline void check_point(const KernelSpec& k, Index dim, const char* who) {
    if (dim != k.input_dim()) {
        throw DimensionMismatch(std::string(who) + ": expected input dimension " + std::to_string(k.input_dim()) +
                                ", got " + std::to_string(dim));
    }
}

// Weights of the half-integer Matern series:
// w_i = p!/(2p)! * (p+i)!/(i!(p-i)!),  i = 0..p.
inline std::vector<double> matern_weights(int p) {
    std::vector<double> w(static_cast<std::size_t>(p) + 1);
    const double base = std::lgamma(p + 1.0) - std::lgamma(2.0 * p + 1.0);
    for (int i = 0; i <= p; ++i) {
        w[static_cast<std::size_t>(i)] =
            std::exp(base + std::lgamma(p + i + 1.0) - std::lgamma(i + 1.0) - std::lgamma(p - i + 1.0));
    }
    return w;
}

// Returns g(u) = exp(-a u) * sum_i w_i (2 a u)^{p-i} and, if requested,
// -u * g'(u), with a = sqrt(2p + 1) and u = r / lengthscale.
inline double matern_shape(int p, double u, double* neg_u_dgdu) {
    const double a = std::sqrt(2.0 * p + 1.0);
    const auto w = matern_weights(p);
    double s = 0.0;
    double u_ds = 0.0;
    for (int i = 0; i <= p; ++i) {
        const int power = p - i;
        const double term = w[static_cast<std::size_t>(i)] * std::pow(2.0 * a * u, power);
        s += term;
        u_ds += power * term;
    }
    const double e = std::exp(-a * u);
    if (neg_u_dgdu != nullptr) { *neg_u_dgdu = e * (a * u * s - u_ds); }
    return e * s;
}

template<typename A, typename B>
double eval_unchecked(const KernelSpec& k, const Eigen::MatrixBase<A>& z, const Eigen::MatrixBase<B>& z2) {
    const VectorXd& phi = k.phi();
    switch (k.family()) {
        case KernelFamily::Constant: return phi(0) * phi(0);
        case KernelFamily::Linear: {
            const double off = phi.size() == 1 ? phi(0) * phi(0) : 0.0;
            return z.dot(z2) + off;
        }
        case KernelFamily::Polynomial: return std::pow(z.dot(z2) + phi(0) * phi(0), k.degree());
        case KernelFamily::Matern: {
            const double r = (z - z2).norm();
            return phi(0) * phi(0) * matern_shape(k.degree(), r / phi(1), nullptr);
        }
        case KernelFamily::SquaredExponential: {
            const double r2 = (z - z2).squaredNorm();
            return phi(0) * phi(0) * std::exp(-r2 / (2.0 * phi(1) * phi(1)));
        }
        case KernelFamily::RationalQuadratic: {
            const double r2 = (z - z2).squaredNorm();
            const double p = k.degree();
            return phi(0) * phi(0) * std::exp(-p * std::log1p(r2 / (2.0 * p * phi(1) * phi(1))));
        }
        case KernelFamily::SquaredExponentialARD: {
            const auto scaled = (z - z2).array() / phi.tail(phi.size() - 1).array();
            return phi(0) * phi(0) * std::exp(-scaled.square().sum());
        }
    }
    return 0.0;
}

}  // namespace detail

/// k(z, z2).
template<typename A, typename B>
double eval(const KernelSpec& k, const Eigen::MatrixBase<A>& z, const Eigen::MatrixBase<B>& z2) {
    detail::check_point(k, z.size(), "kernel eval");
    detail::check_point(k, z2.size(), "kernel eval");
    return detail::eval_unchecked(k, z, z2);
}

/// Gram matrix over the columns of x (n_z x m). The upper triangle is
/// computed and mirrored.
inline MatrixXd gram(const KernelSpec& k, const MatrixXd& x) {
    detail::check_point(k, x.rows(), "gram");
    const Index m = x.cols();
    MatrixXd out(m, m);
    for (Index j = 0; j < m; ++j) {
        for (Index l = j; l < m; ++l) {
            out(j, l) = detail::eval_unchecked(k, x.col(j), x.col(l));
            out(l, j) = out(j, l);
        }
    }
    return out;
}

/// Matrix with entry (i, j) = k(a_i, b_j).
inline MatrixXd cross_matrix(const KernelSpec& k, const MatrixXd& a, const MatrixXd& b) {
    detail::check_point(k, a.rows(), "cross");
    detail::check_point(k, b.rows(), "cross");
    MatrixXd out(a.cols(), b.cols());
    for (Index i = 0; i < a.cols(); ++i) {
        for (Index j = 0; j < b.cols(); ++j) { out(i, j) = detail::eval_unchecked(k, a.col(i), b.col(j)); }
    }
    return out;
}

/// Vector of k(zstar, x_i) over the columns of x.
inline VectorXd cross(const KernelSpec& k, const VectorXd& zstar, const MatrixXd& x) {
    detail::check_point(k, zstar.size(), "cross");
    if (x.cols() > 0) { detail::check_point(k, x.rows(), "cross"); }
    VectorXd out(x.cols());
    for (Index i = 0; i < x.cols(); ++i) { out(i) = detail::eval_unchecked(k, zstar, x.col(i)); }
    return out;
}

/// Partial derivatives of k(z, z2) with respect to log(phi_i), one per
/// hyperparameter (empty for the plain Linear kernel).
template<typename A, typename B>
VectorXd grad_phi(const KernelSpec& k, const Eigen::MatrixBase<A>& z, const Eigen::MatrixBase<B>& z2) {
    detail::check_point(k, z.size(), "grad_phi");
    detail::check_point(k, z2.size(), "grad_phi");
    const VectorXd& phi = k.phi();
    VectorXd g = VectorXd::Zero(phi.size());
    switch (k.family()) {
        case KernelFamily::Constant: g(0) = 2.0 * phi(0) * phi(0); break;
        case KernelFamily::Linear:
            if (phi.size() == 1) { g(0) = 2.0 * phi(0) * phi(0); }
            break;
        case KernelFamily::Polynomial: {
            const double base = z.dot(z2) + phi(0) * phi(0);
            const int p = k.degree();
            g(0) = p * std::pow(base, p - 1) * 2.0 * phi(0) * phi(0);
            break;
        }
        case KernelFamily::Matern: {
            const double r = (z - z2).norm();
            double dshape = 0.0;
            const double shape = detail::matern_shape(k.degree(), r / phi(1), &dshape);
            g(0) = 2.0 * phi(0) * phi(0) * shape;
            g(1) = phi(0) * phi(0) * dshape;
            break;
        }
        case KernelFamily::SquaredExponential: {
            const double r2 = (z - z2).squaredNorm();
            const double l2 = phi(1) * phi(1);
            const double val = phi(0) * phi(0) * std::exp(-r2 / (2.0 * l2));
            g(0) = 2.0 * val;
            g(1) = val * r2 / l2;
            break;
        }
        case KernelFamily::RationalQuadratic: {
            const double r2 = (z - z2).squaredNorm();
            const double p = k.degree();
            const double q = r2 / (2.0 * p * phi(1) * phi(1));
            const double val = phi(0) * phi(0) * std::exp(-p * std::log1p(q));
            g(0) = 2.0 * val;
            g(1) = 2.0 * p * q * val / (1.0 + q);
            break;
        }
        case KernelFamily::SquaredExponentialARD: {
            const VectorXd d = z - z2;
            const auto ls = phi.tail(phi.size() - 1).array();
            const double val = phi(0) * phi(0) * std::exp(-(d.array() / ls).square().sum());
            g(0) = 2.0 * val;
            g.tail(phi.size() - 1) = 2.0 * val * (d.array() / ls).square().matrix();
            break;
        }
    }
    return g;
}

/// dK/dlog(phi_i) for every hyperparameter, over the columns of x.
inline std::vector<MatrixXd> gram_grads(const KernelSpec& k, const MatrixXd& x) {
    detail::check_point(k, x.rows(), "gram_grads");
    const Index m = x.cols();
    std::vector<MatrixXd> out(static_cast<std::size_t>(k.num_params()), MatrixXd(m, m));
    for (Index j = 0; j < m; ++j) {
        for (Index l = j; l < m; ++l) {
            const VectorXd g = grad_phi(k, x.col(j), x.col(l));
            for (Index p = 0; p < g.size(); ++p) {
                out[static_cast<std::size_t>(p)](j, l) = g(p);
                out[static_cast<std::size_t>(p)](l, j) = g(p);
            }
        }
    }
    return out;
}

/// sum_ij k(x_i, x_j) c_i c_j; nonnegative for a positive definite kernel.
inline double validate_psd(const KernelSpec& k, const MatrixXd& x, const VectorXd& c) {
    detail::require_dims(c.size() == x.cols(), "validate_psd: coefficient count must match column count");
    if (c.size() == 0) { return 0.0; }
    return c.dot(gram(k, x) * c);
}

}  // namespace gpkit
