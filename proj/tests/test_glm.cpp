#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "adequate/errors.hpp"
#include "adequate/glm.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace adequate;

namespace {

struct Problem {
    BinaryMatrix x;
    std::vector<std::uint8_t> y;
};

// Labels from a sparse logistic model so the path has something to find.
Problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t p, double density, double signal) {
    std::bernoulli_distribution on(density);
    std::vector<std::vector<RowIndex>> cols(p);
    std::vector<double> eta(n, -1.0);
    std::normal_distribution<double> coef(0.0, signal);
    for (std::size_t j = 0; j < p; ++j) {
        const double b = j % 3 == 0 ? coef(rng) : 0.0;
        for (RowIndex i = 0; i < n; ++i) {
            if (on(rng)) {
                cols[j].push_back(i);
                eta[i] += b;
            }
        }
    }
    std::vector<std::uint8_t> y(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta[i])) ? 1 : 0;
    y[0] = 1;
    y[1] = 0;
    return {BinaryMatrix(n, std::move(cols)), std::move(y)};
}

std::vector<double> gradient(const Problem& pr, const FittedModel& m) {
    const auto risk = predict_risk(m, pr.x);
    std::vector<double> g(pr.x.cols(), 0.0);
    for (std::size_t j = 0; j < pr.x.cols(); ++j) {
        for (auto r : pr.x.column(j)) g[j] += pr.y[r] - risk[r];
        g[j] /= static_cast<double>(pr.y.size());
    }
    return g;
}

void check_kkt(const Problem& pr, const FittedModel& m, double lambda, double tol) {
    const auto g = gradient(pr, m);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double b = m.coefficient(static_cast<std::uint32_t>(j));
        if (b == 0.0) {
            CHECK(std::abs(g[j]) <= lambda + tol);
        } else {
            CHECK(std::abs(g[j] - lambda * (b > 0 ? 1.0 : -1.0)) <= tol);
        }
    }
}

}  // namespace

TEST_CASE("lambda at or above lambda_max gives the intercept-only model") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        auto pr = random_problem(rng, 80, 6, 0.3, 1.0);
        // oracle: gradient of the loss at the intercept-only solution
        const double ybar = static_cast<double>(std::count(pr.y.begin(), pr.y.end(), 1)) / 80.0;
        double lmax = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            double s = 0.0;
            for (auto r : pr.x.column(j)) s += pr.y[r] - ybar;
            lmax = std::max(lmax, std::abs(s / 80.0));
        }
        CHECK(lambda_max(pr.x, pr.y) == doctest::Approx(lmax).epsilon(1e-14));
        for (double scale : {1.0, 1.5}) {
            auto m = fit_lasso_logistic(pr.x, pr.y, scale * lmax);
            CHECK(m.n_nonzero == 0);
            CHECK(m.converged);
            CHECK(m.intercept == doctest::Approx(std::log(ybar / (1 - ybar))).epsilon(1e-9));
        }
    }
}

TEST_CASE("unpenalized fit on separable data does not converge") {
    BinaryMatrix x(4, {{0, 1}});
    const std::vector<std::uint8_t> y{1, 1, 0, 0};
    auto m = fit_lasso_logistic(x, y, 0.0);
    CHECK_FALSE(m.converged);
    CHECK(m.n_iterations == 10000);
    CHECK(m.coefficient(0) > 5.0);
}

TEST_CASE("small dense instance matches the proximal-gradient oracle") {
    std::mt19937_64 rng(20);
    auto pr = random_problem(rng, 20, 3, 0.5, 1.5);
    const double lmax = lambda_max(pr.x, pr.y);
    REQUIRE(lmax > 0.0);
    const auto dense = oracle::to_dense(pr.x);
    for (double frac : {0.5, 0.2, 0.05}) {
        const double lambda = frac * lmax;
        auto ref = oracle::lasso_proximal(dense, pr.y, lambda);
        SolverOptions tight;
        tight.tolerance = 1e-10;
        auto m = fit_lasso_logistic(pr.x, pr.y, lambda, std::nullopt, tight);
        CHECK(m.converged);
        CHECK(std::abs(m.intercept - ref.intercept) < 1e-6);
        for (std::uint32_t j = 0; j < 3; ++j) CHECK(std::abs(m.coefficient(j) - ref.beta[j]) < 1e-6);
        // default tolerance still lands on the same objective
        auto loose = fit_lasso_logistic(pr.x, pr.y, lambda);
        CHECK(std::abs(penalized_objective(pr.x, pr.y, loose, lambda) - ref.objective) < 1e-6);
    }
}

TEST_CASE("KKT conditions hold at converged solutions") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 40 + rng() % 160;
        const std::size_t p = 2 + rng() % 30;
        auto pr = random_problem(rng, n, p, 0.15, 1.2);
        const double lmax = lambda_max(pr.x, pr.y);
        if (lmax == 0.0) continue;
        const double lambda = lmax * std::pow(10.0, -2.0 * std::uniform_real_distribution<double>(0, 1)(rng));
        auto m = fit_lasso_logistic(pr.x, pr.y, lambda);
        REQUIRE(m.converged);
        check_kkt(pr, m, lambda, 1e-4);
        CHECK(m.n_nonzero == m.coefficients.size());
        for (const auto& c : m.coefficients) CHECK(c.value != 0.0);
    }
}

TEST_CASE("objective never increases with more cycles") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        auto pr = random_problem(rng, 150, 20, 0.2, 1.5);
        const double lambda = 0.05 * lambda_max(pr.x, pr.y);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t budget = 1; budget <= 40; ++budget) {
            SolverOptions o;
            o.max_cycles = budget;
            auto m = fit_lasso_logistic(pr.x, pr.y, lambda, std::nullopt, o);
            const double obj = penalized_objective(pr.x, pr.y, m, lambda);
            CHECK(obj <= prev + 1e-14);
            prev = obj;
        }
    }
}

TEST_CASE("warm-started path and cold fit reach the same objective") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        auto pr = random_problem(rng, 200, 25, 0.15, 1.2);
        const auto grid = lambda_grid(lambda_max(pr.x, pr.y), 50, 1e-3);
        LassoLogistic path(pr.x, pr.y);
        for (std::size_t k = 0; k < grid.size(); k += 7) {
            for (std::size_t i = (k == 0 ? 0 : k - 6); i <= k; ++i) path.fit(grid[i]);
            auto warm = path.fit(grid[k]);
            auto cold = fit_lasso_logistic(pr.x, pr.y, grid[k]);
            CHECK(std::abs(penalized_objective(pr.x, pr.y, warm, grid[k]) -
                           penalized_objective(pr.x, pr.y, cold, grid[k])) < 1e-8);
        }
    }
}

TEST_CASE("nonzero count grows along a descending path") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        auto pr = random_problem(rng, 300, 15, 0.1, 1.0);
        const auto grid = lambda_grid(lambda_max(pr.x, pr.y), 50, 1e-2);
        LassoLogistic path(pr.x, pr.y);
        std::size_t prev = 0;
        for (double l : grid) {
            auto m = path.fit(l);
            CHECK(m.n_nonzero >= prev);
            prev = m.n_nonzero;
        }
    }
}

TEST_CASE("lambda_grid") {
    auto g = lambda_grid(2.0, 50, 1e-4);
    REQUIRE(g.size() == 50);
    CHECK(g.front() == 2.0);
    CHECK(g.back() == doctest::Approx(2e-4));
    for (std::size_t k = 1; k < g.size(); ++k) {
        CHECK(g[k] < g[k - 1]);
        CHECK(g[k] / g[k - 1] == doctest::Approx(g[1] / g[0]));
    }
    CHECK(lambda_grid(0.0, 50, 1e-4) == std::vector<double>{0.0});
}

TEST_CASE("stratified folds") {
    const std::vector<std::uint8_t> y{0, 1, 0, 0, 1, 0, 0, 1, 0};
    auto folds = stratified_folds(y, 3, 17);
    std::vector<int> events(3, 0);
    std::vector<int> sizes(3, 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        events[folds[i]] += y[i];
        ++sizes[folds[i]];
    }
    CHECK(events == std::vector<int>{1, 1, 1});
    CHECK(sizes == std::vector<int>{3, 3, 3});
    CHECK(stratified_folds(y, 3, 17) == folds);

    const std::vector<std::uint8_t> two{1, 0, 1, 0, 0};
    CHECK_THROWS_WITH_AS(stratified_folds(two, 3, 1), doctest::Contains("fold construction"), Error);
}

TEST_CASE("cross-validation is deterministic and selects from its grid") {
    std::mt19937_64 rng(31);
    auto pr = random_problem(rng, 400, 20, 0.1, 1.5);
    CvOptions o;
    o.seed = 77;
    auto a = select_lambda_cv(pr.x, pr.y, o);
    auto b = select_lambda_cv(pr.x, pr.y, o);
    CHECK(a == b);
    REQUIRE(a.lambda_grid.size() == 50);
    CHECK(a.lambda_grid.front() == lambda_max(pr.x, pr.y));
    CHECK(a.selected_lambda == a.lambda_grid[a.selected_index]);
    for (double v : a.mean_oof_loglik) CHECK(v <= a.mean_oof_loglik[a.selected_index]);
    auto m = refit_selected(pr.x, pr.y, a);
    CHECK(m.lambda == a.selected_lambda);
    CHECK(m == refit_selected(pr.x, pr.y, a));
}

TEST_CASE("pure-noise designs select sparse models") {
    std::vector<std::size_t> counts;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::bernoulli_distribution on(0.1);
        std::bernoulli_distribution event(0.1);
        const std::size_t n = 1000;
        std::vector<std::vector<RowIndex>> cols(30);
        for (auto& c : cols) {
            for (RowIndex i = 0; i < n; ++i) {
                if (on(rng)) c.push_back(i);
            }
        }
        std::vector<std::uint8_t> y(n);
        for (auto& v : y) v = event(rng);
        BinaryMatrix x(n, std::move(cols));
        CvOptions o;
        o.seed = seed;
        auto cv = select_lambda_cv(x, y, o);
        counts.push_back(refit_selected(x, y, cv).n_nonzero);
    }
    std::nth_element(counts.begin(), counts.begin() + 10, counts.end());
    CHECK(counts[10] <= 2);
}

TEST_CASE("predict_risk") {
    BinaryMatrix x(3, {{0, 2}, {1}});
    FittedModel zero;
    zero.n_features = 2;
    for (double r : predict_risk(zero, x)) CHECK(r == 0.5);

    FittedModel third;
    third.intercept = std::log(1.0 / 3.0);
    for (double r : predict_risk(third, x)) CHECK(r == doctest::Approx(0.25).epsilon(1e-15));

    FittedModel m;
    m.coefficients = {{0, 0.4}};
    const auto before = predict_risk(m, x);
    m.coefficients = {{0, 0.5}};
    const auto after = predict_risk(m, x);
    CHECK(after[0] > before[0]);
    CHECK(after[2] > before[2]);
    CHECK(after[1] == before[1]);

    FittedModel unknown;
    unknown.coefficients = {{5, 1.0}};
    CHECK_THROWS_AS(predict_risk(unknown, x), InputError);
}

TEST_CASE("model text round trip") {
    std::mt19937_64 rng(4);
    auto pr = random_problem(rng, 200, 12, 0.2, 1.5);
    auto m = fit_lasso_logistic(pr.x, pr.y, 0.01 * lambda_max(pr.x, pr.y));
    std::stringstream s;
    write_model(m, s);
    CHECK(s.str().rfind("intercept ", 0) == 0);
    auto back = read_model(s);
    CHECK(back == m);

    std::istringstream bad("intercept 0\nbogus line\n");
    CHECK_THROWS_AS(read_model(bad), InputError);
}

TEST_CASE("constant columns in a subset keep a zero coefficient") {
    BinaryMatrix x(6, {{}, {0, 1, 2, 3, 4, 5}, {0, 2, 4}});
    const std::vector<std::uint8_t> y{1, 0, 1, 0, 0, 0};
    auto m = fit_lasso_logistic(x, y, 1e-3);
    CHECK(m.coefficient(0) == 0.0);
    CHECK(std::isfinite(m.intercept));
}
