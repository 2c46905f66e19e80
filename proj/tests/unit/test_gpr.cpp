#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"

using namespace gpkit;

namespace {

Dataset example_data() {
    MatrixXd x(1, 4);
    x << 1, 3, 6, 10;
    VectorXd y(4);
    y << 0, -0.3, 0.3, -0.2;
    return single_output(x, y, 0.0498);
}

KernelSpec example_kernel() { return KernelSpec::se(0.3679, 2.7183); }

// Posterior at z* = 5 for the example inputs, from explicit inversion.
constexpr double kExampleMean = 0.07213465906499504;
constexpr double kExampleVar = 0.0039487259945926445;

/// Condition the joint N([m; m], [[K**, K*X], [KX*, KX + s^2 I]]) on the outputs.
Gaussian joint_condition(const KernelSpec& k, const Dataset& d, const MatrixXd& zs, double prior_mean) {
    const Index n = d.n_d();
    const Index ns = zs.cols();
    MatrixXd all(d.n_z(), ns + n);
    all << zs, d.x;
    MatrixXd cov = oracle::dense_gram(k, all, all);
    cov.bottomRightCorner(n, n).diagonal().array() += d.noise(0) * d.noise(0);
    const Gaussian joint(VectorXd::Constant(ns + n, prior_mean), cov);
    std::vector<Index> obs;
    for (Index i = 0; i < n; ++i) { obs.push_back(ns + i); }
    return condition(joint, obs, d.y.col(0));
}

}  // namespace

TEST(DatasetTest, ValidationAndSlicing) {
    Dataset d{MatrixXd::Zero(1, 3), MatrixXd::Zero(2, 1), VectorXd::Zero(1)};
    EXPECT_THROW(d.validate(), DimensionMismatch);
    Dataset e = example_data();
    e.noise(0) = -1.0;
    EXPECT_THROW(e.validate(), InvalidArgument);
    e = example_data();
    e.y(1, 0) = std::nan("");
    EXPECT_THROW(e.validate(), InvalidArgument);

    const Dataset w = example_data().without(1);
    ASSERT_EQ(w.n_d(), 3);
    EXPECT_EQ(w.x(0, 1), 6.0);
    EXPECT_EQ(w.y(1, 0), 0.3);
    EXPECT_THROW(example_data().without(4), IndexOutOfRange);
}

TEST(Fit, ExampleResidualInvariant) {
    const Dataset d = example_data();
    const auto gp = fit(d, example_kernel());
    MatrixXd k = gram(example_kernel(), d.x);
    k.diagonal().array() += d.noise(0) * d.noise(0);
    EXPECT_LE((k * gp.alpha(0) - d.y.col(0)).norm(), 1e-8 * d.y.norm());
    EXPECT_LT((gp.chol(0).reconstruct() - k).norm() / k.norm(), 1e-8);
}

TEST(Fit, DuplicateInputsWithNoise) {
    MatrixXd x(1, 3);
    x << 1, 1, 2;
    VectorXd y(3);
    y << 0.5, 0.5, -0.1;
    EXPECT_NO_THROW(fit(single_output(x, y, 0.1), KernelSpec::se(1, 1)));
}

TEST(Fit, ErrorPaths) {
    EXPECT_THROW(fit(example_data(), KernelSpec::se(1, 1, 2)), DimensionMismatch);
    Dataset two = example_data();
    two.y = MatrixXd::Zero(4, 2);
    two.noise = VectorXd::Constant(2, 0.1);
    EXPECT_THROW(fit(two, std::vector<KernelSpec>{example_kernel()}, MeanSpec::zero()), DimensionMismatch);
    EXPECT_THROW(fit(two, example_kernel(), MeanSpec::per_dimension(VectorXd::Zero(3))), DimensionMismatch);
}

TEST(Predict, ExamplePointAgainstDenseOracle) {
    const Dataset d = example_data();
    const auto p = predict(fit(d, example_kernel()), MatrixXd::Constant(1, 1, 5.0));
    const auto o = oracle::dense_posterior(example_kernel(), d.x, d.y.col(0), 0.0498, VectorXd::Constant(1, 5.0));
    EXPECT_NEAR(p.mean(0, 0), o.mean, 1e-12);
    EXPECT_NEAR(p.variance(0, 0), o.var, 1e-12);
    EXPECT_NEAR(p.mean(0, 0), kExampleMean, 1e-12);
    EXPECT_NEAR(p.variance(0, 0), kExampleVar, 1e-12);
    EXPECT_NEAR(p.variance_with_noise(0, 0), kExampleVar + 0.0498 * 0.0498, 1e-12);
}

TEST(Predict, NoiselessInterpolation) {
    Dataset d = example_data();
    d.noise(0) = 0.0;
    const auto p = predict(fit(d, example_kernel()), d.x);
    for (Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(p.mean(i, 0), d.y(i, 0), 1e-8);
        EXPECT_NEAR(p.variance(i, 0), 0.0, 1e-8);
    }
}

TEST(Predict, EmptyDatasetIsPrior) {
    const Dataset d = single_output(MatrixXd(1, 0), VectorXd(0), 0.1);
    const auto k = KernelSpec::se(0.8, 1.0);
    const auto p = predict(fit(d, k), MatrixXd::Constant(1, 3, 2.0));
    for (Index j = 0; j < 3; ++j) {
        EXPECT_EQ(p.mean(j, 0), 0.0);
        EXPECT_DOUBLE_EQ(p.variance(j, 0), 0.64);
    }
    const auto pc = predict(fit(d, k, MeanSpec::constant(1.5)), MatrixXd::Constant(1, 1, 0.0));
    EXPECT_EQ(pc.mean(0, 0), 1.5);
}

TEST(Predict, ConstantMeanShiftsPosterior) {
    oracle::Gen g(12);
    const MatrixXd x = g.matrix(2, 6, -2, 2);
    const VectorXd y = g.vector(6, -1, 1);
    const auto k = KernelSpec::matern(1, 1.0, 1.2, 2);
    const auto gp = fit(single_output(x, y, 0.1), k, MeanSpec::constant(0.7));
    const VectorXd z = g.vector(2, -2, 2);
    const auto o = oracle::dense_posterior(k, x, y, 0.1, z, 0.7);
    const auto p = predict_point(gp, z);
    EXPECT_NEAR(p.mean(0, 0), o.mean, 1e-10);
    EXPECT_NEAR(p.variance(0, 0), o.var, 1e-10);
}

TEST(Predict, DimensionMismatch) {
    EXPECT_THROW(predict(fit(example_data(), example_kernel()), MatrixXd::Zero(2, 1)), DimensionMismatch);
}

TEST(Predict, MultiOutputEqualsIndependentFits) {
    oracle::Gen g(13);
    const MatrixXd x = g.matrix(2, 8, -2, 2);
    Dataset d{x, g.matrix(8, 3, -1, 1), (VectorXd(3) << 0.05, 0.1, 0.2).finished()};
    const std::vector<KernelSpec> ks = {KernelSpec::se(1, 1, 2), KernelSpec::matern(2, 0.5, 0.7, 2),
                                        KernelSpec::rq(2, 1.2, 0.9, 2)};
    const VectorXd means = (VectorXd(3) << 0.1, -0.2, 0.0).finished();
    const MatrixXd zs = g.matrix(2, 5, -2, 2);
    const auto multi = predict(fit(d, ks, MeanSpec::per_dimension(means)), zs);
    ASSERT_EQ(multi.mean.cols(), 3);
    for (Index i = 0; i < 3; ++i) {
        const auto single = predict(fit(d.output(i), ks[static_cast<std::size_t>(i)], MeanSpec::constant(means(i))), zs);
        EXPECT_TRUE((multi.mean.col(i).array() == single.mean.col(0).array()).all());
        EXPECT_TRUE((multi.variance.col(i).array() == single.variance.col(0).array()).all());
    }
}

TEST(Predict, PermutationInvariance) {
    oracle::Gen g(14);
    const MatrixXd x = g.matrix(1, 7, 0, 10);
    const VectorXd y = g.vector(7, -1, 1);
    std::vector<Index> perm = {3, 0, 6, 2, 5, 1, 4};
    const MatrixXd xp = x(Eigen::all, perm);
    const VectorXd yp = y(perm);
    const auto k = KernelSpec::se(1, 1.5);
    const MatrixXd zs = g.matrix(1, 20, 0, 10);
    const auto a = predict(fit(single_output(x, y, 0.05), k), zs);
    const auto b = predict(fit(single_output(xp, yp, 0.05), k), zs);
    EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.variance - b.variance).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Predict, AgreesWithJointConditioning) {
    oracle::Gen g(15);
    for (int t = 0; t < 50; ++t) {
        const Index n = g.integer(1, 8);
        const auto k = g.kernel(oracle::all_families()[static_cast<std::size_t>(g.integer(3, 6))], 1);
        const Dataset d = single_output(g.matrix(1, n, -3, 3), g.vector(n, -1, 1), g.uniform(0.05, 0.3));
        const double m = g.uniform(-0.5, 0.5);
        const MatrixXd zs = g.matrix(1, 3, -3, 3);
        const auto p = predict(fit(d, k, MeanSpec::constant(m)), zs);
        const Gaussian c = joint_condition(k, d, zs, m);
        for (Index j = 0; j < 3; ++j) {
            EXPECT_NEAR(p.mean(j, 0), c.mean()(j), 1e-10);
            EXPECT_NEAR(p.variance(j, 0), c.cov()(j, j), 1e-10);
        }
    }
}

TEST(Predict, VarianceContractionProperties) {
    oracle::Gen g(16);
    for (int t = 0; t < 100; ++t) {
        const Index n = g.integer(1, 8);
        const auto k = g.kernel(oracle::all_families()[static_cast<std::size_t>(g.integer(0, 6))], 2);
        const Dataset d = single_output(g.matrix(2, n, -2, 2), g.vector(n, -1, 1), g.uniform(0.01, 0.5));
        const MatrixXd zs = g.matrix(2, 5, -3, 3);
        const auto before = predict(fit(d, k), zs);
        Dataset bigger = d;
        bigger.x.conservativeResize(2, n + 1);
        bigger.x.col(n) = g.vector(2, -2, 2);
        bigger.y.conservativeResize(n + 1, 1);
        bigger.y(n, 0) = g.uniform(-1, 1);
        const auto after = predict(fit(bigger, k), zs);
        for (Index j = 0; j < 5; ++j) {
            EXPECT_LE(before.variance(j, 0), eval(k, zs.col(j), zs.col(j)) + 1e-10);
            EXPECT_LE(after.variance(j, 0), before.variance(j, 0) + 1e-8);
        }
    }
}

TEST(JointPosterior, ConsistentWithPredict) {
    const auto gp = fit(example_data(), example_kernel());
    const MatrixXd zs = (MatrixXd(1, 5) << 0.0, 2.5, 5.0, 7.5, 11.0).finished();
    const Gaussian j = joint_posterior(gp, zs, 0);
    const auto p = predict(gp, zs);
    for (Index i = 0; i < 5; ++i) {
        EXPECT_NEAR(j.mean()(i), p.mean(i, 0), 1e-10);
        EXPECT_NEAR(j.cov()(i, i), p.variance(i, 0), 1e-10);
    }
    const Gaussian single = joint_posterior(gp, MatrixXd::Constant(1, 1, 5.0), 0);
    EXPECT_NEAR(single.mean()(0), p.mean(2, 0), 1e-14);
}

TEST(JointPosterior, FarApartPointsDecorrelate) {
    const auto gp = fit(single_output(MatrixXd(1, 0), VectorXd(0), 0.1), KernelSpec::se(0.9, 0.5));
    const Gaussian j = joint_posterior(gp, (MatrixXd(1, 2) << 0.0, 100.0).finished(), 0);
    EXPECT_NEAR(j.cov()(0, 0), 0.81, 1e-14);
    EXPECT_NEAR(j.cov()(1, 1), 0.81, 1e-14);
    EXPECT_LE(std::abs(j.cov()(0, 1)), 1e-6);
}

TEST(JointPosterior, ErrorPaths) {
    const auto gp = fit(example_data(), example_kernel());
    EXPECT_THROW(joint_posterior(gp, MatrixXd::Zero(1, 1), 1), IndexOutOfRange);
    EXPECT_THROW(joint_posterior(gp, MatrixXd::Zero(1, 0), 0), InvalidArgument);
}

TEST(WeightSpace, ScalarArithmetic) {
    const auto r = weight_space_predict(single_output(MatrixXd::Ones(1, 1), VectorXd::Ones(1), 1.0), VectorXd::Ones(1),
                                        MatrixXd::Identity(1, 1));
    EXPECT_DOUBLE_EQ(r.mean, 0.5);
    EXPECT_DOUBLE_EQ(r.variance, 0.5);
}

TEST(WeightSpace, NoDataIsPrior) {
    MatrixXd sp(2, 2);
    sp << 2, 0.5, 0.5, 1;
    const VectorXd z = (VectorXd(2) << 0.3, -1.1).finished();
    const auto r = weight_space_predict(single_output(MatrixXd(2, 0), VectorXd(0), 0.2), z, sp);
    EXPECT_NEAR(r.mean, 0.0, 1e-15);
    EXPECT_NEAR(r.variance, z.dot(sp * z), 1e-12);
}

TEST(WeightSpace, EqualsLinearKernelGp) {
    oracle::Gen g(17);
    for (int t = 0; t < 20; ++t) {
        const Index nz = g.integer(1, 3);
        const Index n = g.integer(1, 10);
        const Dataset d = single_output(g.matrix(nz, n, -2, 2), g.vector(n, -1, 1), g.uniform(0.1, 1.0));
        const VectorXd z = g.vector(nz, -2, 2);
        const auto w = weight_space_predict(d, z, MatrixXd::Identity(nz, nz));
        const auto p = predict_point(fit(d, KernelSpec::linear(nz)), z);
        EXPECT_NEAR(w.mean, p.mean(0, 0), 1e-8);
        EXPECT_NEAR(w.variance, p.variance(0, 0), 1e-8);
    }
    EXPECT_THROW(weight_space_predict(single_output(MatrixXd::Ones(1, 1), VectorXd::Ones(1), 0.0), VectorXd::Ones(1),
                                      MatrixXd::Identity(1, 1)),
                 InvalidArgument);
}
