#include <catch2/catch.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "sstecg/svm.hpp"

using namespace sstecg;

namespace {

// Dense QP oracle for the weighted soft-margin dual: projected gradient with
// the exact Euclidean projection onto the box intersected with y^T a = 0.
// Independent of the SMO path (full Gram matrix, no working sets).
struct QpOracle {
    Eigen::VectorXd alpha;
    double objective = 0;
};

Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& v, const std::vector<int>& y,
                                       const std::vector<double>& box) {
    const int n = static_cast<int>(v.size());
    auto clipped = [&](double nu) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) {
            x(i) = std::clamp(v(i) - nu * y[static_cast<size_t>(i)], 0.0,
                              box[static_cast<size_t>(i)]);
        }
        return x;
    };
    auto residual = [&](double nu) {
        const Eigen::VectorXd x = clipped(nu);
        double r = 0;
        for (int i = 0; i < n; ++i) r += y[static_cast<size_t>(i)] * x(i);
        return r;
    };
    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < n; ++i) {
        lo = std::min(lo, -std::abs(v(i)) - box[static_cast<size_t>(i)]);
        hi = std::max(hi, std::abs(v(i)) + box[static_cast<size_t>(i)]);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return clipped(0.5 * (lo + hi));
}

QpOracle solve_qp_oracle(const Eigen::MatrixXd& x, const std::vector<int>& y, double c,
                         double gamma, const std::map<int, double>& weights,
                         int iters = 200000) {
    const int n = static_cast<int>(x.rows());
    Eigen::MatrixXd q(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double d2 = (x.row(i) - x.row(j)).squaredNorm();
            q(i, j) = y[static_cast<size_t>(i)] * y[static_cast<size_t>(j)] *
                      std::exp(-gamma * d2);
        }
    }
    std::vector<double> box(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int cls = y[static_cast<size_t>(i)];
        const auto it = weights.find(cls);
        box[static_cast<size_t>(i)] = c * (it == weights.end() ? 1.0 : it->second);
    }

    // power iteration for a step size 1/L
    Eigen::VectorXd pv = Eigen::VectorXd::Ones(n).normalized();
    for (int it = 0; it < 50; ++it) pv = (q * pv).normalized();
    const double lip = std::max(1e-9, pv.dot(q * pv));

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd grad = q * alpha - ones;
        alpha = project_box_hyperplane(alpha - grad / lip, y, box);
    }
    QpOracle res;
    res.alpha = alpha;
    res.objective = 0.5 * alpha.dot(q * alpha) - alpha.sum();
    return res;
}

// run the production solver on the same standardized-free problem
ml::SmoResult run_smo(const Eigen::MatrixXd& x, const std::vector<int>& y, double c, double gamma,
                      const std::map<int, double>& weights, double tol = 1e-4) {
    std::vector<double> box(y.size());
    std::vector<int> pm(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
        pm[i] = y[i];
        const auto it = weights.find(y[i]);
        box[i] = c * (it == weights.end() ? 1.0 : it->second);
    }
    ml::detail::RbfKernel kernel(x, gamma, 64 << 20);
    return ml::smo_solve(kernel, pm, box, tol, 10'000'000);
}

}  // namespace

TEST_CASE("smo matches the dense QP oracle on random small problems", "[svm]") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> uc(0.5, 20.0);
    std::uniform_real_distribution<double> ug(0.3, 3.0);
    std::uniform_real_distribution<double> uw(0.5, 4.0);
    std::uniform_int_distribution<int> un(6, 20);
    std::uniform_int_distribution<int> ud(2, 4);

    for (int trial = 0; trial < 10; ++trial) {
        const int n = un(rng), d = ud(rng);
        Eigen::MatrixXd x(n, d);
        std::vector<int> y(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) x(i, j) = g(rng);
            y[static_cast<size_t>(i)] = i % 2 == 0 ? 1 : -1;  // both classes present
        }
        const double c = uc(rng), gamma = ug(rng);
        const std::map<int, double> weights = {{1, uw(rng)}, {-1, uw(rng)}};

        const auto smo = run_smo(x, y, c, gamma, weights);
        const auto oracle = solve_qp_oracle(x, y, c, gamma, weights);

        REQUIRE(smo.kkt_gap <= 1e-3);
        const double denom = std::max(1.0, std::abs(oracle.objective));
        REQUIRE(std::abs(smo.objective - oracle.objective) / denom < 1e-4);

        // dual feasibility: box plus equality constraint
        double eq = 0, amax = 0;
        for (int i = 0; i < n; ++i) {
            const double cap =
                c * weights.at(y[static_cast<size_t>(i)]);
            REQUIRE(smo.alpha(i) >= -1e-12);
            REQUIRE(smo.alpha(i) <= cap + 1e-12);
            eq += smo.alpha(i) * y[static_cast<size_t>(i)];
            amax = std::max(amax, std::abs(smo.alpha(i)));
        }
        REQUIRE(std::abs(eq) <= 1e-6 * std::max(1.0, amax * n));
    }
}

TEST_CASE("RBF separates the XOR pattern and matches the QP oracle", "[svm]") {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 1, 1, 0, 1, 1, 0;
    const std::vector<int> y_raw = {1, 1, -1, -1};

    const auto smo = run_smo(x, y_raw, 10.0, 1.0, {});
    const auto oracle = solve_qp_oracle(x, y_raw, 10.0, 1.0, {});
    REQUIRE(std::abs(smo.objective - oracle.objective) /
                std::max(1.0, std::abs(oracle.objective)) <
            1e-4);

    const std::vector<int> labels = {0, 0, 1, 1};
    ml::SvmParams p;
    p.C = 10.0;
    p.gamma = 1.0;
    const auto model = ml::svm_train(x, labels, p);
    for (int i = 0; i < 4; ++i) {
        REQUIRE(ml::svm_predict(model, x.row(i)) == labels[static_cast<size_t>(i)]);
    }
}

TEST_CASE("well-separated blobs train to perfect accuracy", "[svm]") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.5);
    const int per = 30;
    Eigen::MatrixXd x(2 * per, 2);
    std::vector<int> y;
    for (int i = 0; i < per; ++i) {
        x(i, 0) = g(rng) - 5.0;
        x(i, 1) = g(rng) - 5.0;
        y.push_back(0);
    }
    for (int i = 0; i < per; ++i) {
        x(per + i, 0) = g(rng) + 5.0;
        x(per + i, 1) = g(rng) + 5.0;
        y.push_back(1);
    }
    ml::SvmParams p;
    p.C = 2.0;
    p.gamma = 0.5;
    const auto model = ml::svm_train(x, y, p);
    for (int i = 0; i < 2 * per; ++i) {
        REQUIRE(ml::svm_predict(model, x.row(i)) == y[static_cast<size_t>(i)]);
    }

    // a strongly interior point keeps its blob label
    Eigen::VectorXd probe(2);
    probe << -5.0, -5.0;
    REQUIRE(ml::svm_predict(model, probe) == 0);
}

TEST_CASE("binary decision function flips sign exactly at its zero crossing", "[svm]") {
    Eigen::MatrixXd x(6, 1);
    x << -3, -2, -1, 1, 2, 3;
    const std::vector<int> y = {0, 0, 0, 1, 1, 1};
    ml::SvmParams p;
    p.C = 5.0;
    p.gamma = 0.8;
    const auto model = ml::svm_train(x, y, p);
    REQUIRE(model.pairs.size() == 1);

    // sweep along the line between the innermost points of each class
    double prev_d = 0;
    bool crossed = false;
    for (double t = -1.0; t <= 1.0; t += 0.01) {
        Eigen::VectorXd q(1);
        q << t;
        const Eigen::VectorXd qs = model.standardizer.apply_row(q);
        const double d = model.decision(model.pairs[0], qs);
        const int pred = ml::svm_predict(model, q);
        REQUIRE(pred == (d > 0 ? model.pairs[0].class_pos : model.pairs[0].class_neg));
        if (t > -1.0 && d * prev_d < 0) crossed = true;
        prev_d = d;
    }
    REQUIRE(crossed);
}

TEST_CASE("merged prediction from two identical models equals the single model", "[svm]") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(40, 3);
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = g(rng) + (i % 4);
        y.push_back(i % 4);
    }
    ml::SvmParams p;
    p.C = 3.0;
    p.gamma = 0.7;
    const auto model = ml::svm_train(x, y, p);
    for (int i = 0; i < 40; ++i) {
        const int single = ml::svm_predict(model, x.row(i));
        const int merged = ml::svm_predict_merged(model, model, x.row(i), x.row(i));
        REQUIRE(merged == single);
    }
}

TEST_CASE("training errors are reported by class and for bad inputs", "[svm]") {
    Eigen::MatrixXd x(3, 1);
    x << 0, 1, 2;
    const std::vector<int> y = {0, 0, 1};  // class 1 has a single sample
    REQUIRE_THROWS_WITH(ml::svm_train(x, y, {}), Catch::Matchers::Contains("class 1"));

    Eigen::MatrixXd bad(4, 1);
    bad << 0, 1, 2, std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(ml::svm_train(bad, {0, 0, 1, 1}, {}), InvalidArgument);

    Eigen::MatrixXd ok(4, 1);
    ok << 0, 1, 2, 3;
    const auto model = ml::svm_train(ok, {0, 0, 1, 1}, {});
    Eigen::VectorXd nanq(1);
    nanq << std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(ml::svm_predict(model, nanq), InvalidArgument);
}

TEST_CASE("predictions are invariant to affine feature rescaling", "[svm]") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 1.0);
    const int n = 60;
    Eigen::MatrixXd x(n, 2);
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        const int cls = i % 3;
        x(i, 0) = g(rng) + 2.5 * cls;
        x(i, 1) = g(rng) - 1.5 * cls;
        y.push_back(cls);
    }
    ml::SvmParams p;
    p.C = 4.0;
    p.gamma = 1.1;
    const auto base = ml::svm_train(x, y, p);

    Eigen::MatrixXd scaled = x;
    scaled.col(0) = 4.0 * x.col(0).array() + 0.5;  // power-of-two scale keeps fp exact
    scaled.col(1) = 0.25 * x.col(1).array() - 2.0;
    const auto refit = ml::svm_train(scaled, y, p);

    std::mt19937_64 rng2(77);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd q(2);
        q << g(rng2) * 2, g(rng2) * 2;
        Eigen::VectorXd qs(2);
        qs << 4.0 * q(0) + 0.5, 0.25 * q(1) - 2.0;
        REQUIRE(ml::svm_predict(base, q) == ml::svm_predict(refit, qs));
    }
}

TEST_CASE("grid search basics", "[svm]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.4);
    const int per = 25;
    Eigen::MatrixXd x(2 * per, 2);
    std::vector<int> y;
    for (int i = 0; i < 2 * per; ++i) {
        const int cls = i < per ? 0 : 1;
        x(i, 0) = g(rng) + (cls ? 4.0 : -4.0);
        x(i, 1) = g(rng);
        y.push_back(cls);
    }

    SECTION("a one-point grid returns that point") {
        ml::GridSpec grid;
        grid.c_values = {2.5};
        grid.gamma_values = {0.7};
        grid.weight_sets = {{{0, 1.0}, {1, 2.0}}};
        const auto res = ml::grid_search_cv(x, y, grid, 5, 1);
        REQUIRE(res.best.C == 2.5);
        REQUIRE(res.best.gamma == 0.7);
        REQUIRE(res.best.class_weights.at(1) == 2.0);
        REQUIRE(res.evaluated.size() == 1);
    }

    SECTION("separable data reaches full cross-validated accuracy") {
        ml::GridSpec grid;
        grid.c_values = {10.0};
        grid.gamma_values = {0.5};
        const auto res = ml::grid_search_cv(x, y, grid, 5, 1);
        REQUIRE(res.best_score == Approx(1.0));
    }

    SECTION("deterministic given a seed") {
        ml::GridSpec grid;
        grid.c_values = {1.0, 10.0};
        grid.gamma_values = {0.5, 2.0};
        const auto a = ml::grid_search_cv(x, y, grid, 5, 42);
        const auto b = ml::grid_search_cv(x, y, grid, 5, 42);
        REQUIRE(a.best.C == b.best.C);
        REQUIRE(a.best.gamma == b.best.gamma);
        REQUIRE(a.best_score == b.best_score);
    }
}

TEST_CASE("an exhausted iteration budget raises a convergence error", "[svm]") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(20, 2);
    std::vector<int> y(20);
    for (int i = 0; i < 20; ++i) {
        x(i, 0) = g(rng);
        x(i, 1) = g(rng);
        y[static_cast<size_t>(i)] = i % 2 == 0 ? 1 : -1;
    }
    std::vector<double> box(20, 5.0);
    ml::detail::RbfKernel kernel(x, 1.0, 16 << 20);
    REQUIRE_THROWS_AS(ml::smo_solve(kernel, y, box, 1e-9, 2), ConvergenceError);
}

TEST_CASE("grid search rejects an empty grid", "[svm]") {
    Eigen::MatrixXd x(8, 1);
    x << 0, 1, 2, 3, 10, 11, 12, 13;
    const std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
    REQUIRE_THROWS_AS(ml::grid_search_cv(x, y, ml::GridSpec{}, 2, 1), InvalidArgument);
}

TEST_CASE("stratified folds reject classes smaller than the fold count", "[svm]") {
    const std::vector<int> y = {0, 0, 0, 0, 0, 1, 1};
    REQUIRE_THROWS_AS(ml::stratified_folds(y, 5, 1), DataError);

    const std::vector<int> ok = {0, 0, 0, 1, 1, 1};
    const auto folds = ml::stratified_folds(ok, 3, 1);
    // every fold holds exactly one sample of each class
    std::map<int, std::map<int, int>> count;
    for (size_t i = 0; i < ok.size(); ++i) count[folds[i]][ok[i]] += 1;
    for (const auto& [f, per_class] : count) {
        REQUIRE(per_class.at(0) == 1);
        REQUIRE(per_class.at(1) == 1);
    }
}
