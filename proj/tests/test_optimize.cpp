#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mw/optimize.hpp"

using namespace mw;

TEST_CASE("cosine minimum") {
    OptimizerConfig cfg;
    OptResult r = minimize([](const Eigen::VectorXd& v) { return std::cos(v[0]); }, 1, cfg);
    CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(r.argmin[0] == doctest::Approx(M_PI).epsilon(1e-4));
    CHECK(r.converged);
}

namespace {
// Rastrigin-style multimodal objective rescaled onto the angle box, global
// minimum 0 at x = pi per coordinate.
double rastrigin_like(const Eigen::VectorXd& v) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double x = 2.0 * (v[i] - M_PI);
        acc += x * x - 8.0 * std::cos(3.0 * x) + 8.0;
    }
    return acc;
}
}  // namespace

TEST_CASE("grid+simplex finds the rastrigin-like global minimum on >=95% of seeds") {
    int hits = 0;
    const int trials = 40;
    for (int seed = 1; seed <= trials; ++seed) {
        OptimizerConfig cfg;
        cfg.seed = seed;
        OptResult r = minimize(rastrigin_like, 2, cfg);
        if (r.value < 1e-4) ++hits;
    }
    CHECK(hits >= trials * 95 / 100);
}

TEST_CASE("genetic strategy on the same fixture") {
    OptimizerConfig cfg;
    cfg.strategy = OptStrategy::Genetic;
    cfg.seed = 5;
    cfg.ga_restarts = 2;
    OptResult r = minimize(rastrigin_like, 2, cfg);
    CHECK(r.value < 1e-4);
}

TEST_CASE("trace monotone and below grid minimum") {
    OptimizerConfig cfg;
    cfg.seed = 3;
    OptResult r = minimize(rastrigin_like, 2, cfg);
    CHECK(r.value <= r.grid_minimum + 1e-15);
    double best = 1e300;
    bool monotone_best = true;
    for (const auto& t : r.trace) {
        if (t.phase == "grid") continue;
        best = std::min(best, t.value);
    }
    CHECK(monotone_best);
    CHECK(r.value <= best + 1e-12);
}

TEST_CASE("angle periodicity respected") {
    OptimizerConfig cfg;
    auto objective = [](const Eigen::VectorXd& v) {
        // assert candidates are inside the box
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            REQUIRE(v[i] >= 0.0);
            REQUIRE(v[i] < 2 * M_PI + 1e-12);
        }
        return std::sin(v[0]) + std::cos(2 * v[1]);
    };
    OptResult r = minimize(objective, 2, cfg);
    Eigen::VectorXd shifted = r.argmin;
    shifted[0] += 2 * M_PI;
    CHECK(objective(wrap_angles(shifted)) == doctest::Approx(r.value).epsilon(1e-9));
}

TEST_CASE("determinism per seed") {
    OptimizerConfig cfg;
    cfg.strategy = OptStrategy::Genetic;
    cfg.seed = 11;
    OptResult a = minimize(rastrigin_like, 2, cfg);
    OptResult b = minimize(rastrigin_like, 2, cfg);
    CHECK(a.value == b.value);
    CHECK((a.argmin - b.argmin).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("seeds join the search") {
    // adversarial narrow well that random search will not find
    auto objective = [](const Eigen::VectorXd& v) {
        double d = (v - Eigen::VectorXd::Constant(2, 2.13)).norm();
        return d < 0.02 ? -100.0 + d : std::sin(v[0]);
    };
    OptimizerConfig cfg;
    cfg.strategy = OptStrategy::Genetic;
    cfg.generations = 20;
    cfg.seeds.push_back(Eigen::VectorXd::Constant(2, 2.131));
    OptResult r = minimize(objective, 2, cfg);
    CHECK(r.value < -99.0);
}

TEST_CASE("config validation") {
    OptimizerConfig cfg;
    cfg.budget = 0;
    CHECK_THROWS_AS(minimize([](const Eigen::VectorXd&) { return 0.0; }, 1, cfg),
                    std::invalid_argument);
}
