// gpkit command-line driver.
//
// Exit codes: 0 success, 1 runtime error (JSON on stderr), 2 usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "gpkit/gpkit.hpp"

namespace {

using gpkit::Index;
using gpkit::MatrixXd;
using gpkit::VectorXd;
using gpkit::io::format_double;
using gpkit::io::json;

std::vector<double> parse_list(const std::string& s, const std::string& flag) {
    std::vector<double> out;
    if (s.empty()) { return out; }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto v = gpkit::io::detail::parse_number(gpkit::io::detail::trim(item));
        if (!v) { throw gpkit::InvalidArgument(flag + ": '" + item + "' is not a number"); }
        out.push_back(*v);
    }
    return out;
}

VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct KernelOpts {
    std::string name = "se";
    std::string phi;
    int degree = -1;

    void add(CLI::App* app, bool required = true) {
        auto* k = app->add_option("--kernel", name,
                                  "Kernel family: constant, linear, poly|polyN, matern|maternN, se, rq, se-ard");
        if (required) { k->required(); }
        app->add_option("--phi", phi, "Comma-separated hyperparameters (amplitude, lengthscale(s))");
        app->add_option("--degree", degree, "Polynomial degree / Matern order p / RQ exponent");
    }

    /// With `unit_default`, a missing --phi becomes all ones (a template for optimize).
    [[nodiscard]] gpkit::KernelSpec build(Index input_dim, std::optional<VectorXd> fallback_phi = std::nullopt,
                                          bool unit_default = false) const {
        std::string fam = name;
        int deg = degree;
        static const std::regex with_degree(R"((poly|matern|rq)(\d+))");
        std::smatch m;
        if (std::regex_match(name, m, with_degree)) {
            fam = m[1].str();
            if (deg < 0) { deg = std::stoi(m[2].str()); }
        }
        const auto family = gpkit::parse_family(fam);
        if (!family) { throw gpkit::UnsupportedKernel("unknown kernel '" + name + "'"); }
        VectorXd p = to_vec(parse_list(phi, "--phi"));
        if (phi.empty()) {
            if (fallback_phi) {
                p = *fallback_phi;
            } else if (unit_default) {
                p = VectorXd::Ones(gpkit::KernelSpec::expected_params(*family, input_dim));
            } else if (*family == gpkit::KernelFamily::Polynomial) {
                p = VectorXd::Zero(1);
            }
        }
        if (deg < 0) {
            deg = *family == gpkit::KernelFamily::Polynomial || *family == gpkit::KernelFamily::RationalQuadratic ? 1 : 0;
        }
        return {*family, p, deg, input_dim};
    }
};

MatrixXd read_points(const std::string& path, Index n_z);

// Test locations: --at, --grid or --points.
struct PointOpts {
    std::string at;
    std::string grid;
    std::string points_csv;

    void add(CLI::App* app) {
        app->add_option("--at", at, "Comma-separated coordinates (grouped by input dimension)");
        app->add_option("--grid", grid, "lo,hi,n (every dimension) or lo1,hi1,lo2,hi2,n (2D)");
        app->add_option("--points", points_csv, "CSV with x1.. columns, one point per row");
    }

    [[nodiscard]] MatrixXd resolve(Index n_z) const {
        const int given = !at.empty() + !grid.empty() + !points_csv.empty();
        if (given != 1) { throw gpkit::InvalidArgument("exactly one of --at, --grid, --points is required"); }
        if (!at.empty()) {
            const auto v = parse_list(at, "--at");
            if (v.empty() || v.size() % static_cast<std::size_t>(n_z) != 0) {
                throw gpkit::DimensionMismatch("--at: value count must be a multiple of the input dimension");
            }
            return Eigen::Map<const MatrixXd>(v.data(), n_z, static_cast<Index>(v.size()) / n_z);
        }
        if (!grid.empty()) { return make_grid(parse_list(grid, "--grid"), n_z); }
        return read_points(points_csv, n_z);
    }

    static MatrixXd make_grid(const std::vector<double>& g, Index n_z) {
        if (n_z > 2) { throw gpkit::InvalidArgument("--grid supports 1D and 2D inputs only"); }
        VectorXd lo(n_z);
        VectorXd hi(n_z);
        double n_raw = 0.0;
        if (g.size() == 3) {
            lo.setConstant(g[0]);
            hi.setConstant(g[1]);
            n_raw = g[2];
        } else if (g.size() == 5 && n_z == 2) {
            lo << g[0], g[2];
            hi << g[1], g[3];
            n_raw = g[4];
        } else {
            throw gpkit::InvalidArgument("--grid: expected lo,hi,n or lo1,hi1,lo2,hi2,n");
        }
        const auto n = static_cast<Index>(n_raw);
        if (n < 2 || static_cast<double>(n) != n_raw) { throw gpkit::InvalidArgument("--grid: n must be an integer >= 2"); }
        if (!(lo.array() < hi.array()).all()) { throw gpkit::InvalidArgument("--grid: lo must be < hi"); }
        const VectorXd a = VectorXd::LinSpaced(n, lo(0), hi(0));
        if (n_z == 1) { return a.transpose(); }
        const VectorXd b = VectorXd::LinSpaced(n, lo(1), hi(1));
        MatrixXd out(2, n * n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) { out.col(i * n + j) << a(i), b(j); }
        }
        return out;
    }
};

MatrixXd read_points(const std::string& path, Index n_z) {
    const auto tab = gpkit::io::read_csv(path);
    (void)tab.require("x1");
    const MatrixXd pts = tab.columns(tab.numbered("x"));
    if (n_z > 0 && pts.rows() != n_z) {
        throw gpkit::DimensionMismatch("'" + path + "' has " + std::to_string(pts.rows()) + " x columns, expected " +
                                       std::to_string(n_z));
    }
    return pts;
}

void write_point_header(std::ostream& out, Index n_z) {
    if (n_z == 1) {
        out << "z";
    } else {
        for (Index i = 0; i < n_z; ++i) { out << (i ? "," : "") << "z" << i + 1; }
    }
}

void write_point(std::ostream& out, const MatrixXd& pts, Index j) {
    for (Index i = 0; i < pts.rows(); ++i) { out << (i ? "," : "") << format_double(pts(i, j)); }
}

json vec_json(const VectorXd& v) { return gpkit::io::vec_to_json(v); }

json nll_json(const gpkit::NllTerms& t) {
    return {{"nll", t.value},
            {"log_likelihood", -t.value},
            {"data_fit", t.data_fit},
            {"complexity", t.complexity},
            {"constant", t.constant}};
}

Index output_index(int one_based, Index n_outputs) {
    if (one_based < 1 || one_based > n_outputs) {
        throw gpkit::IndexOutOfRange("--output must be between 1 and " + std::to_string(n_outputs));
    }
    return one_based - 1;
}

// Single-output dataset/kernel/noise, either from a model file or from
// --data + kernel flags + --noise.
struct ProblemOpts {
    std::string model;
    std::string data;
    std::string noise;
    int output = 1;
    KernelOpts kernel;

    void add(CLI::App* app) {
        app->add_option("--model", model, "Model JSON (uses its data, kernel and noise)");
        app->add_option("--data", data, "Dataset CSV (x1.., y1..)");
        app->add_option("--noise", noise, "Noise standard deviation sigma_n");
        app->add_option("--output", output, "Output column (1-based)");
        kernel.add(app, false);
    }

    struct Problem {
        gpkit::Dataset data;
        gpkit::KernelSpec kernel;
        double sigma_n;
        gpkit::MeanSpec mean;
    };

    [[nodiscard]] Problem resolve() const {
        if (model.empty() == data.empty()) { throw gpkit::InvalidArgument("exactly one of --model, --data is required"); }
        if (!model.empty()) {
            const auto gp = gpkit::io::load_model(model);
            const Index o = output_index(output, gp.n_outputs());
            const gpkit::Dataset d = gp.dataset().output(o);
            return {d, gp.kernel(o), d.noise(0), gpkit::MeanSpec::constant(gp.mean().value(o))};
        }
        const auto all = gpkit::io::load_dataset_csv(data);
        const Index o = output_index(output, all.n_y());
        gpkit::Dataset d = all.output(o);
        const auto nv = parse_list(noise, "--noise");
        if (nv.size() != 1) { throw gpkit::InvalidArgument("--noise: one value required with --data"); }
        d.noise(0) = nv[0];
        return {d, kernel.build(d.n_z()), nv[0], gpkit::MeanSpec::zero()};
    }
};

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct FitCmd {
    std::string data;
    std::string trajectory;
    std::string dyn = "ssm";
    Index n_in = 1;
    Index n_out = 1;
    std::string noise = "0";
    std::string mean;
    std::string out;
    KernelOpts kernel;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("fit", "Fit a GP and write the model JSON");
        c->add_option("--data", data, "Dataset CSV (x1.., y1..)");
        c->add_option("--trajectory", trajectory, "Trajectory CSV (t, x*/y*, u*) for dynamical models");
        c->add_option("--dyn", dyn, "Regressor structure for --trajectory: ssm or noe")->check(CLI::IsMember({"ssm", "noe"}));
        c->add_option("--n-in", n_in, "NOE input lags");
        c->add_option("--n-out", n_out, "NOE output lags");
        c->add_option("--noise", noise, "Noise std per output (one value is broadcast)");
        c->add_option("--mean", mean, "Constant prior mean (one value, or one per output)");
        c->add_option("--out", out, "Model JSON path (stdout when omitted)");
        kernel.add(c);
        c->callback([this] { run(); });
    }

    void run() const {
        if (data.empty() == trajectory.empty()) { throw gpkit::InvalidArgument("exactly one of --data, --trajectory is required"); }
        const VectorXd nv = to_vec(parse_list(noise, "--noise"));
        gpkit::Dataset d;
        if (!data.empty()) {
            d = gpkit::io::load_dataset_csv(data, nv);
        } else {
            const auto tr = gpkit::io::load_trajectory_csv(trajectory);
            d = dyn == "ssm" ? gpkit::build_ssm_dataset(tr.states, tr.inputs)
                             : gpkit::build_noe_dataset(tr.states, tr.inputs, n_in, n_out);
            d.noise = nv.size() == 1 ? VectorXd::Constant(d.n_y(), nv(0)) : nv;
        }
        gpkit::MeanSpec m = gpkit::MeanSpec::zero();
        if (!mean.empty()) {
            const auto mv = parse_list(mean, "--mean");
            m = mv.size() == 1 ? gpkit::MeanSpec::constant(mv[0]) : gpkit::MeanSpec::per_dimension(to_vec(mv));
        }
        const auto gp = gpkit::fit(d, std::vector<gpkit::KernelSpec>(static_cast<std::size_t>(d.n_y()), kernel.build(d.n_z())), m);
        if (out.empty()) {
            std::cout << gpkit::io::model_to_string(gp);
        } else {
            gpkit::io::save_model(out, gp);
        }
    }
};

struct PredictCmd {
    std::string model;
    PointOpts points;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("predict", "Posterior mean, variance and 2-sigma band as CSV");
        c->add_option("--model", model, "Model JSON")->required();
        points.add(c);
        c->callback([this] { run(); });
    }

    void run() const {
        const auto gp = gpkit::io::load_model(model);
        const MatrixXd z = points.resolve(gp.input_dim());
        const auto p = gpkit::predict(gp, z);
        const Index ny = gp.n_outputs();
        write_point_header(std::cout, gp.input_dim());
        for (Index o = 0; o < ny; ++o) {
            const std::string sfx = ny == 1 ? "" : std::to_string(o + 1);
            std::cout << ",mean" << sfx << ",var" << sfx << ",lower2s" << sfx << ",upper2s" << sfx;
        }
        std::cout << "\n";
        for (Index j = 0; j < z.cols(); ++j) {
            write_point(std::cout, z, j);
            for (Index o = 0; o < ny; ++o) {
                const double mu = p.mean(j, o);
                const double sd = std::sqrt(p.variance(j, o));
                std::cout << "," << format_double(mu) << "," << format_double(p.variance(j, o)) << ","
                          << format_double(mu - 2.0 * sd) << "," << format_double(mu + 2.0 * sd);
            }
            std::cout << "\n";
        }
    }
};

struct SampleCmd {
    std::string model;
    PointOpts points;
    Index n_scen = 5;
    std::uint64_t seed = 0;
    int output = 1;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("sample", "Joint posterior sample functions (scenario approach) as CSV");
        c->add_option("--model", model, "Model JSON")->required();
        points.add(c);
        c->add_option("--n-scen", n_scen, "Number of sample functions")->check(CLI::PositiveNumber);
        c->add_option("--seed", seed, "RNG seed");
        c->add_option("--output", output, "Output column (1-based)");
        c->callback([this] { run(); });
    }

    void run() const {
        const auto gp = gpkit::io::load_model(model);
        const MatrixXd z = points.resolve(gp.input_dim());
        const auto b = gpkit::scenario_sample(gp, z, n_scen, seed, output_index(output, gp.n_outputs()));
        write_point_header(std::cout, gp.input_dim());
        for (Index s = 0; s < n_scen; ++s) { std::cout << ",s" << s + 1; }
        std::cout << "\n";
        for (Index j = 0; j < z.cols(); ++j) {
            write_point(std::cout, z, j);
            for (Index s = 0; s < n_scen; ++s) { std::cout << "," << format_double(b.samples(s, j)); }
            std::cout << "\n";
        }
    }
};

struct LoglikCmd {
    ProblemOpts problem;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("loglik", "Negative log marginal likelihood, its terms and gradient (JSON)");
        problem.add(c);
        c->callback([this] { run(); });
    }

    void run() const {
        const auto p = problem.resolve();
        json j = nll_json(gpkit::nll(p.data, p.kernel, p.sigma_n, p.mean));
        j["gradient_log_params"] = vec_json(gpkit::nll_grad(p.data, p.kernel, p.sigma_n, p.mean));
        j["n_d"] = p.data.n_d();
        std::cout << j.dump(2) << "\n";
    }
};

struct LooCmd {
    ProblemOpts problem;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("loo", "Leave-one-out log predictive probabilities (JSON)");
        problem.add(c);
        c->callback([this] { run(); });
    }

    void run() const {
        const auto p = problem.resolve();
        json terms = json::array();
        double total = 0.0;
        for (Index i = 0; i < p.data.n_d(); ++i) {
            const double v = gpkit::loo_logpred(p.data, p.kernel, p.sigma_n, i, p.mean);
            terms.push_back(v);
            total += v;
        }
        std::cout << json{{"loo_sum", total}, {"terms", terms}, {"n_d", p.data.n_d()}}.dump(2) << "\n";
    }
};

struct OptimizeCmd {
    std::string data;
    int output = 1;
    KernelOpts kernel;
    gpkit::OptimConfig cfg;
    std::string log_lo;
    std::string log_hi;
    std::string out;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("optimize", "Multi-start NLL minimization over log(phi), log(sigma_n) (JSON)");
        c->add_option("--data", data, "Dataset CSV")->required();
        c->add_option("--output", output, "Output column (1-based)");
        kernel.add(c);
        c->add_option("--restarts", cfg.restarts, "Random restarts")->check(CLI::PositiveNumber);
        c->add_option("--seed", cfg.seed, "RNG seed");
        c->add_option("--max-iters", cfg.max_iters, "Iterations per restart")->check(CLI::PositiveNumber);
        c->add_option("--grad-tol", cfg.grad_tol, "Projected-gradient tolerance");
        c->add_option("--log-lo", log_lo, "Lower log-bound (one value or one per parameter)");
        c->add_option("--log-hi", log_hi, "Upper log-bound (one value or one per parameter)");
        c->add_option("--out", out, "Write the optimized model JSON here");
        c->callback([this] { run(); });
    }

    void run() {
        const auto all = gpkit::io::load_dataset_csv(data);
        const gpkit::Dataset d = all.output(output_index(output, all.n_y()));
        // phi values only fix the shape; optimize draws its own starts.
        const auto templ = kernel.build(d.n_z(), std::nullopt, true);
        const Index np = templ.num_params() + 1;
        auto bounds = [np](const std::string& s, double dflt) {
            const auto v = parse_list(s, "--log-lo/--log-hi");
            if (v.empty()) { return VectorXd::Constant(np, dflt).eval(); }
            if (v.size() == 1) { return VectorXd::Constant(np, v[0]).eval(); }
            return to_vec(v);
        };
        cfg.log_lo = bounds(log_lo, -5.0);
        cfg.log_hi = bounds(log_hi, 5.0);
        const auto res = gpkit::optimize(d, templ, cfg);
        const auto best_kernel = templ.with_phi(res.phi_star);
        json trace = json::array();
        for (const auto& r : res.restart_trace) {
            trace.push_back({{"start", vec_json(r.start)},
                             {"final", vec_json(r.final)},
                             {"final_nll", r.failed ? json(nullptr) : json(r.final_nll)},
                             {"iterations", r.iterations}});
        }
        gpkit::Dataset fitted = d;
        fitted.noise(0) = res.sigma_star;
        json j = nll_json(gpkit::nll(fitted, best_kernel, res.sigma_star));
        j["phi"] = vec_json(res.phi_star);
        j["sigma_n"] = res.sigma_star;
        j["kernel"] = gpkit::io::kernel_to_json(best_kernel);
        j["restarts"] = trace;
        std::cout << j.dump(2) << "\n";
        if (!out.empty()) { gpkit::io::save_model(out, gpkit::fit(fitted, best_kernel)); }
    }
};

struct RkhsNormCmd {
    KernelOpts kernel;
    std::string centers;
    std::string alpha;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("rkhs-norm", "Squared RKHS norm alpha^T K alpha of a kernel expansion");
        kernel.add(c);
        c->add_option("--centers", centers, "CSV with x1.. columns, one center per row")->required();
        c->add_option("--alpha", alpha, "Comma-separated expansion coefficients")->required();
        c->callback([this] { run(); });
    }

    void run() const {
        const MatrixXd ctr = read_points(centers, 0);
        const gpkit::RkhsElement f(kernel.build(ctr.rows()), ctr, to_vec(parse_list(alpha, "--alpha")));
        std::cout << format_double(gpkit::norm_sq(f)) << "\n";
    }
};

struct BoundCmd {
    std::string model;
    PointOpts points;
    std::string method = "robust";
    double c = 2.0;
    double delta = 0.9;
    double rkhs_bound = -1.0;
    double gamma_max = -1.0;
    std::string candidates;
    Index subset_size = 0;
    int output = 1;

    void add(CLI::App& root) {
        auto* cmd = root.add_subcommand("bound", "Model-error envelope as BoundReport JSON");
        cmd->add_option("--model", model, "Model JSON")->required();
        points.add(cmd);
        cmd->add_option("--method", method, "robust or info")->check(CLI::IsMember({"robust", "info"}));
        cmd->add_option("--c", c, "Robust: multiple of the posterior standard deviation");
        cmd->add_option("--delta", delta, "Info: probability level in (0, 1)");
        cmd->add_option("--rkhs-bound", rkhs_bound, "Info: upper bound on the RKHS norm of the true function");
        cmd->add_option("--gamma-max", gamma_max, "Info: maximum information gain (skips the greedy search)");
        cmd->add_option("--candidates", candidates, "Info: CSV of candidate inputs for the greedy gamma_max search");
        cmd->add_option("--subset-size", subset_size, "Info: points selected by the search (default n_D + 1)");
        cmd->add_option("--output", output, "Output column (1-based)");
        cmd->callback([this] { run(); });
    }

    void run() const {
        const auto gp = gpkit::io::load_model(model);
        const Index o = output_index(output, gp.n_outputs());
        const MatrixXd z = points.resolve(gp.input_dim());
        if (method == "robust") {
            std::cout << gpkit::io::bound_to_json(gpkit::robust_bound(gp, z, c, o)).dump(2) << "\n";
            return;
        }
        if (rkhs_bound < 0.0) { throw gpkit::InvalidArgument("--rkhs-bound is required for --method info"); }
        double gamma = gamma_max;
        json extra;
        if (gamma < 0.0) {
            if (candidates.empty()) { throw gpkit::InvalidArgument("--method info needs --gamma-max or --candidates"); }
            const MatrixXd cand = read_points(candidates, gp.input_dim());
            const Index k = subset_size > 0 ? subset_size : std::min<Index>(gp.dataset().n_d() + 1, cand.cols());
            const auto g = gpkit::max_info_gain_greedy(gp.kernel(o), cand, k, gp.noise(o));
            gamma = g.gamma_max;
            extra = json{{"chosen", g.chosen}, {"subset_size", k}};
        }
        json j = gpkit::io::bound_to_json(gpkit::info_bound(gp, z, rkhs_bound, gamma, delta, o));
        if (!extra.is_null()) { j["gamma_search"] = extra; }
        std::cout << j.dump(2) << "\n";
    }
};

struct GramCmd {
    KernelOpts kernel;
    std::string points_csv;
    std::string at;
    double noise = 0.0;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("gram", "Gram matrix (or cross-covariances with --at) as CSV");
        kernel.add(c);
        c->add_option("--points", points_csv, "CSV with x1.. columns (a dataset CSV works)")->required();
        c->add_option("--at", at, "Test points: print k(z*, X) rows instead of K(X, X)");
        c->add_option("--noise", noise, "Add noise^2 to the Gram diagonal");
        c->callback([this] { run(); });
    }

    void run() const {
        const MatrixXd x = read_points(points_csv, 0);
        const auto k = kernel.build(x.rows());
        MatrixXd out;
        if (at.empty()) {
            out = gpkit::gram(k, x);
            out.diagonal().array() += noise * noise;
        } else {
            PointOpts p;
            p.at = at;
            out = gpkit::cross_matrix(k, p.resolve(x.rows()), x);
        }
        for (Index j = 0; j < out.cols(); ++j) { std::cout << (j ? "," : "") << "k" << j + 1; }
        std::cout << "\n";
        for (Index i = 0; i < out.rows(); ++i) {
            for (Index j = 0; j < out.cols(); ++j) { std::cout << (j ? "," : "") << format_double(out(i, j)); }
            std::cout << "\n";
        }
    }
};

struct SimulateCmd {
    std::string mode = "ssm";
    std::string model;
    std::string u_csv;
    std::string x0;
    Index horizon = 0;
    std::string prop = "mean";
    std::uint64_t seed = 0;
    Index paths = 100;
    Index n_in = 1;
    Index n_out = 1;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("simulate", "Multi-step GP-SSM / GP-NOE rollout as CSV");
        c->add_option("--mode", mode, "ssm or noe")->check(CLI::IsMember({"ssm", "noe"}));
        c->add_option("--model", model, "Model JSON")->required();
        c->add_option("--u", u_csv, "Input trajectory CSV (t, u1..)");
        c->add_option("--x0", x0, "Initial state (ssm) or n_out seed outputs, oldest first (noe)")->required();
        c->add_option("--horizon", horizon, "Number of steps")->required()->check(CLI::PositiveNumber);
        c->add_option("--prop", prop, "mean or mc")->check(CLI::IsMember({"mean", "mc"}));
        c->add_option("--seed", seed, "RNG seed (mc)");
        c->add_option("--paths", paths, "Monte-Carlo paths (mc)")->check(CLI::PositiveNumber);
        c->add_option("--n-in", n_in, "NOE input lags");
        c->add_option("--n-out", n_out, "NOE output lags");
        c->callback([this] { run(); });
    }

    void run() const {
        const auto gp = gpkit::io::load_model(model);
        const auto rmode = prop == "mean" ? gpkit::RolloutMode::mean() : gpkit::RolloutMode::monte_carlo(paths, seed);
        const VectorXd init = to_vec(parse_list(x0, "--x0"));
        MatrixXd u = u_csv.empty() ? MatrixXd(0, 0) : gpkit::io::load_trajectory_csv(u_csv).inputs;
        const Index ny = gp.n_outputs();
        const Index nu = mode == "ssm" ? gp.input_dim() - ny : u.rows();
        const Index need = mode == "ssm" ? horizon : n_in - 1 + horizon;
        if (u_csv.empty()) { u = MatrixXd::Zero(nu, need); }
        if (u.rows() != nu) { throw gpkit::DimensionMismatch("--u: expected " + std::to_string(nu) + " input columns"); }
        if (u.cols() < need) {
            throw gpkit::TrajectoryTooShort("--u: need " + std::to_string(need) + " rows for this horizon");
        }

        gpkit::Rollout r;
        const char* prefix = "x";
        if (mode == "ssm") {
            r = gpkit::ssm_rollout(gpkit::SsmModel(gp, ny, nu), init, u.leftCols(need), rmode);
        } else {
            prefix = "y";
            if (init.size() != ny * n_out) { throw gpkit::DimensionMismatch("--x0: expected n_y * n_out values"); }
            const MatrixXd y_init = Eigen::Map<const MatrixXd>(init.data(), ny, n_out);
            r = gpkit::noe_rollout(gpkit::NoeModel(gp, n_in, n_out, ny, nu), y_init, u.leftCols(need), rmode);
        }
        std::cout << "t";
        for (Index i = 0; i < ny; ++i) { std::cout << "," << prefix << i + 1; }
        for (Index i = 0; i < ny; ++i) { std::cout << ",var_" << prefix << i + 1; }
        if (mode == "ssm") {
            for (Index i = 0; i < r.output_traj.cols(); ++i) { std::cout << ",y" << i + 1; }
        }
        std::cout << "\n";
        for (Index t = 0; t < r.mean_traj.rows(); ++t) {
            std::cout << t + 1;
            for (Index i = 0; i < ny; ++i) { std::cout << "," << format_double(r.mean_traj(t, i)); }
            for (Index i = 0; i < ny; ++i) { std::cout << "," << format_double(r.var_traj(t, i)); }
            if (mode == "ssm") {
                for (Index i = 0; i < r.output_traj.cols(); ++i) { std::cout << "," << format_double(r.output_traj(t, i)); }
            }
            std::cout << "\n";
        }
    }
};

void report_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gpkit: Gaussian-process regression toolkit"};
    app.require_subcommand(1);

    FitCmd fit;
    PredictCmd predict;
    SampleCmd sample;
    LoglikCmd loglik;
    LooCmd loo;
    OptimizeCmd optimize;
    RkhsNormCmd rkhs;
    BoundCmd bound;
    GramCmd gram;
    SimulateCmd simulate;
    fit.add(app);
    predict.add(app);
    sample.add(app);
    loglik.add(app);
    loo.add(app);
    optimize.add(app);
    rkhs.add(app);
    bound.add(app);
    gram.add(app);
    simulate.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << "\n";
        report_error("UsageError", e.what());
        return 2;
    } catch (const gpkit::Error& e) {
        report_error(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error("RuntimeError", e.what());
        return 1;
    }
    return 0;
}
