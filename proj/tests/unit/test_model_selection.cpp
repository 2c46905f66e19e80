#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace gpkit;

namespace {

Dataset random_dataset(oracle::Gen& g, Index nz, Index n) {
    return single_output(g.matrix(nz, n, -2, 2), g.vector(n, -1, 1), g.uniform(0.05, 0.5));
}

VectorXd log_params(const KernelSpec& k, double sigma_n) {
    VectorXd t(k.num_params() + 1);
    t << k.phi().array().log().matrix(), std::log(sigma_n);
    return t;
}

// Data drawn from an SE GP with amplitude 1, lengthscale `ls` on [0, 10].
Dataset se_prior_data(std::uint64_t seed, Index n, double ls, double sigma_n) {
    oracle::Gen g(seed);
    const MatrixXd x = g.matrix(1, n, 0, 10);
    return single_output(x, oracle::draw_prior(g, KernelSpec::se(1.0, ls), x, sigma_n), sigma_n);
}

}  // namespace

TEST(Nll, SinglePointClosedForms) {
    const auto k = KernelSpec::constant(1.0);
    const auto t0 = nll(single_output(MatrixXd::Zero(1, 1), VectorXd::Zero(1), 0.0), k, 0.0);
    EXPECT_NEAR(t0.value, 0.9189385332046727, 1e-12);
    EXPECT_NEAR(t0.data_fit, 0.0, 1e-15);
    EXPECT_NEAR(t0.complexity, 0.0, 1e-15);
    const auto t1 = nll(single_output(MatrixXd::Zero(1, 1), VectorXd::Ones(1), 0.0), k, 0.0);
    EXPECT_NEAR(t1.value, 1.4189385332046727, 1e-12);
    EXPECT_NEAR(t1.data_fit, 0.5, 1e-15);
}

TEST(Nll, EqualsNegativeGaussianLogDensity) {
    oracle::Gen g(31);
    for (int t = 0; t < 50; ++t) {
        const Index n = g.integer(1, 6);
        const Dataset d = random_dataset(g, 2, n);
        const auto k = g.kernel(oracle::all_families()[static_cast<std::size_t>(g.integer(0, 6))], 2);
        const double m = g.uniform(-0.5, 0.5);
        MatrixXd cov = gram(k, d.x);
        cov.diagonal().array() += d.noise(0) * d.noise(0);
        const auto terms = nll(d, k, d.noise(0), MeanSpec::constant(m));
        EXPECT_NEAR(terms.value, -logpdf(Gaussian(VectorXd::Constant(n, m), cov), d.y.col(0)), 1e-10);
        EXPECT_NEAR(terms.value, -oracle::dense_logpdf(VectorXd::Constant(n, m), cov, d.y.col(0)), 1e-9);
        EXPECT_NEAR(terms.value, terms.data_fit + terms.complexity + terms.constant, 1e-14);
    }
}

TEST(Nll, ErrorPaths) {
    EXPECT_THROW(nll(single_output(MatrixXd(1, 0), VectorXd(0), 0.1), KernelSpec::se(1, 1), 0.1), InvalidArgument);
    Dataset two = single_output(MatrixXd::Zero(1, 2), VectorXd::Zero(2), 0.1);
    two.y = MatrixXd::Zero(2, 2);
    two.noise = VectorXd::Constant(2, 0.1);
    EXPECT_THROW(nll(two, KernelSpec::se(1, 1), 0.1), DimensionMismatch);
}

TEST(NllGrad, MatchesFiniteDifferences) {
    oracle::Gen g(32);
    const std::vector<KernelFamily> fams = {KernelFamily::SquaredExponential, KernelFamily::Matern,
                                            KernelFamily::RationalQuadratic, KernelFamily::SquaredExponentialARD,
                                            KernelFamily::Constant, KernelFamily::Polynomial, KernelFamily::Linear};
    for (int t = 0; t < 100; ++t) {
        const auto f = fams[static_cast<std::size_t>(t) % fams.size()];
        const Dataset d = random_dataset(g, 2, g.integer(2, 8));
        const auto k = g.kernel(f, 2);
        const double sn = d.noise(0);
        const VectorXd analytic = nll_grad(d, k, sn);
        const VectorXd fd = oracle::central_diff(
            [&](const VectorXd& th) {
                const VectorXd phi = th.head(th.size() - 1).array().exp();
                return nll(d, k.with_phi(phi), std::exp(th(th.size() - 1))).value;
            },
            log_params(k, sn));
        ASSERT_EQ(analytic.size(), fd.size());
        for (Index i = 0; i < fd.size(); ++i) {
            EXPECT_NEAR(analytic(i), fd(i), 1e-5 * std::max(1e-3, std::abs(fd(i)))) << family_name(f) << " param " << i;
        }
    }
}

TEST(NllGrad, ZeroKernelNoiseDerivative) {
    // K = 0: NLL = 1/2 y^T y / s^2 + n log s + const, so dNLL/dlog s = -y^T y / s^2 + n.
    MatrixXd x(1, 3);
    x << 0, 1, 2;
    VectorXd y(3);
    y << 0.3, -0.2, 0.5;
    const double s = 0.4;
    const VectorXd g = nll_grad(single_output(x, y, s), KernelSpec::constant(0.0), s);
    EXPECT_NEAR(g(1), -y.squaredNorm() / (s * s) + 3.0, 1e-12);
    EXPECT_EQ(g(0), 0.0);
}

TEST(Optimize, RecoversGeneratingLengthscale) {
    const double ls = 1.5;
    const Dataset d = se_prior_data(2024, 30, ls, 0.1);
    OptimConfig cfg;
    cfg.seed = 1;
    const auto res = optimize(d, KernelSpec::se(1, 1), cfg);
    EXPECT_NEAR(std::log(res.phi_star(1)), std::log(ls), 0.5);
    EXPECT_EQ(res.restart_trace.size(), 10u);
    for (const auto& r : res.restart_trace) {
        if (r.failed) { continue; }
        EXPECT_LE(res.nll_star, r.final_nll);
        const VectorXd phi = r.start.head(2).array().exp();
        EXPECT_LE(res.nll_star, nll(d, KernelSpec::se(phi(0), phi(1)), std::exp(r.start(2))).value);
    }
    const auto grad = nll_grad(d, KernelSpec::se(res.phi_star(0), res.phi_star(1)), res.sigma_star);
    EXPECT_LT(grad.norm(), 1e-3);
}

TEST(Optimize, DeterministicPerSeed) {
    const Dataset d = se_prior_data(7, 15, 1.0, 0.1);
    OptimConfig cfg;
    cfg.seed = 99;
    cfg.restarts = 3;
    const auto a = optimize(d, KernelSpec::matern(1, 1, 1), cfg);
    const auto b = optimize(d, KernelSpec::matern(1, 1, 1), cfg);
    EXPECT_TRUE((a.phi_star.array() == b.phi_star.array()).all());
    EXPECT_EQ(a.sigma_star, b.sigma_star);
    EXPECT_EQ(a.nll_star, b.nll_star);
    for (std::size_t r = 0; r < a.restart_trace.size(); ++r) {
        EXPECT_TRUE((a.restart_trace[r].start.array() == b.restart_trace[r].start.array()).all());
    }
}

TEST(Optimize, RespectsBoundsAndValidatesConfig) {
    const Dataset d = se_prior_data(8, 10, 1.0, 0.1);
    OptimConfig cfg;
    cfg.restarts = 2;
    cfg.log_lo = VectorXd::Constant(3, -1.0);
    cfg.log_hi = VectorXd::Constant(3, 0.5);
    const auto res = optimize(d, KernelSpec::se(1, 1), cfg);
    for (const auto& r : res.restart_trace) {
        EXPECT_TRUE((r.final.array() >= -1.0).all() && (r.final.array() <= 0.5).all());
    }
    cfg.log_hi = VectorXd::Constant(3, -2.0);
    EXPECT_THROW(optimize(d, KernelSpec::se(1, 1), cfg), InvalidArgument);
    cfg.log_hi = VectorXd::Constant(2, 1.0);
    EXPECT_THROW(optimize(d, KernelSpec::se(1, 1), cfg), DimensionMismatch);
    EXPECT_THROW(optimize(single_output(MatrixXd::Zero(1, 1), VectorXd::Zero(1), 0.1), KernelSpec::se(1, 1)),
                 InvalidArgument);
}

TEST(Loo, MatchesClosedFormAndRefit) {
    oracle::Gen g(33);
    for (int t = 0; t < 30; ++t) {
        const Index n = g.integer(2, 12);
        const Dataset d = random_dataset(g, 1, n);
        const auto k = g.kernel(oracle::all_families()[static_cast<std::size_t>(g.integer(3, 6))], 1);
        const VectorXd cf = oracle::closed_form_loo(k, d.x, d.y.col(0), d.noise(0));
        for (Index i = 0; i < n; ++i) { EXPECT_NEAR(loo_logpred(d, k, d.noise(0), i), cf(i), 1e-8); }
        EXPECT_NEAR(loo_sum(d, k, d.noise(0)), cf.sum(), 1e-8);
    }
}

TEST(Loo, MatchesConditioningPipeline) {
    oracle::Gen g(34);
    for (int t = 0; t < 20; ++t) {
        const Index n = g.integer(2, 8);
        const Dataset d = random_dataset(g, 2, n);
        const auto k = g.kernel(KernelFamily::SquaredExponential, 2);
        const Index i = g.integer(0, n - 1);
        MatrixXd cov = gram(k, d.x);
        cov.diagonal().array() += d.noise(0) * d.noise(0);
        std::vector<Index> obs;
        VectorXd vals(n - 1);
        for (Index j = 0; j < n; ++j) {
            if (j != i) {
                vals(static_cast<Index>(obs.size())) = d.y(j, 0);
                obs.push_back(j);
            }
        }
        const Gaussian c = condition(Gaussian(VectorXd::Zero(n), cov), obs, vals);
        EXPECT_NEAR(loo_logpred(d, k, d.noise(0), i), logpdf(c, d.y.row(i).transpose()), 1e-10);
    }
}

TEST(Loo, SymmetricPairAndDuplicates) {
    MatrixXd x(1, 2);
    x << -1, 1;
    const auto k = KernelSpec::se(1, 1);
    const Dataset sym = single_output(x, VectorXd::Constant(2, 0.4), 0.1);
    EXPECT_NEAR(loo_logpred(sym, k, 0.1, 0), loo_logpred(sym, k, 0.1, 1), 1e-14);
    EXPECT_NEAR(loo_sum(sym, k, 0.1), 2.0 * loo_logpred(sym, k, 0.1, 0), 1e-14);

    MatrixXd xd(1, 4);
    xd << 0, 0, 3, 6;
    VectorXd yd(4);
    yd << 0.5, 0.5, 0.0, 2.0;
    const Dataset dup = single_output(xd, yd, 0.1);
    EXPECT_GT(loo_logpred(dup, k, 0.1, 0), loo_logpred(dup, k, 0.1, 3));
    EXPECT_THROW(loo_logpred(dup, k, 0.1, 4), IndexOutOfRange);
}

TEST(Loo, TrueHyperparametersBeatOversmoothing) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset d = se_prior_data(seed, 20, 1.0, 0.1);
        EXPECT_GE(loo_sum(d, KernelSpec::se(1, 1.0), 0.1), loo_sum(d, KernelSpec::se(1, 100.0), 0.1)) << seed;
    }
}
