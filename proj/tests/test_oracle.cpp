#include <cmath>

#include "agnosticq/oracle.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agnosticq;
using namespace agnosticq::testutil;

namespace {

// Exhaustive grid maximization of |dtheta^T phi| over the feasible box, the
// reference for the exact two-ellipsoid solver.
double grid_oracle_2d(const Eigen::MatrixXd& gram, double c2, const Eigen::VectorXd& target,
                      double step = 1e-3) {
    double best = 0.0;
    for (double x = -2.0; x <= 2.0 + 1e-12; x += step) {
        for (double y = -2.0; y <= 2.0 + 1e-12; y += step) {
            if (x * x + y * y > 4.0) continue;
            const double quad = gram(0, 0) * x * x + 2.0 * gram(0, 1) * x * y +
                                gram(1, 1) * y * y;
            if (quad > c2) continue;
            best = std::max(best, std::abs(x * target[0] + y * target[1]));
        }
    }
    return best;
}

FeatureMap two_action_features(const Eigen::VectorXd& phi0, const Eigen::VectorXd& phi1) {
    FeatureMap f;
    f.d = static_cast<int>(phi0.size());
    f.phi = {{{phi0, phi1}}};
    return f;
}

}  // namespace

TEST_CASE("finite oracle maximizes pairwise disagreement") {
    // f1 and f2 disagree by 0.3 at action 0 and by 0.5 at action 1
    auto cls = bandit_class({{0.1, 0.1}, {0.4, 0.6}});
    Dataset empty;
    SUBCASE("vacuous constraint picks the larger disagreement") {
        auto ans = max_uncertainty_finite({0, 0}, 0.1, empty, cls, 2);
        CHECK(ans.action == 1);
        CHECK(ans.uncertainty == doctest::Approx(0.5));
        CHECK(ans.witness_f1 == 0);
        CHECK(ans.witness_f2 == 1);
    }
    SUBCASE("singleton class reports zero everywhere") {
        auto single = bandit_class({{0.1, 0.9}});
        auto ans = max_uncertainty_finite({0, 0}, 0.1, empty, single, 2);
        CHECK(ans.uncertainty == 0.0);
    }
    SUBCASE("violated constraint leaves only identical pairs") {
        const double dp = 0.1;
        Dataset data;
        data.append({0, 0}, 0, 0.0);
        // |f1-f2| = 0.3 at the dataset point = 3 dp, so sum = 9 dp^2 |Y|
        auto ans = max_uncertainty_finite({0, 0}, dp, data, cls, 2);
        CHECK(ans.uncertainty == 0.0);
        CHECK(ans.witness_f1 == ans.witness_f2);
    }
    SUBCASE("returned witnesses satisfy the constraint") {
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::vector<double>> vals(3, std::vector<double>(4));
            for (auto& row : vals)
                for (double& v : row) v = rng.uniform(0.0, 1.0);
            auto c = bandit_class(vals);
            Dataset data;
            const int n = static_cast<int>(rng.uniform_index(4));
            for (int i = 0; i < n; ++i)
                data.append({0, 0}, static_cast<int>(rng.uniform_index(4)), 0.0);
            const double dp = rng.uniform(0.0, 0.5);
            auto ans = max_uncertainty_finite({0, 0}, dp, data, c, 4);
            double sum = 0.0;
            for (const auto& e : data.entries()) {
                const double diff =
                    c.eval(ans.witness_f1, e.state, e.action) - c.eval(ans.witness_f2, e.state, e.action);
                sum += diff * diff;
            }
            if (!data.empty())
                CHECK(sum / data.size() <= dp * dp + 1e-9 * data.size());
            // dominance: no explicitly feasible pair/action beats it
            for (int f1 = 0; f1 < 3; ++f1)
                for (int f2 = 0; f2 < 3; ++f2) {
                    double s2 = 0.0;
                    for (const auto& e : data.entries()) {
                        const double diff =
                            c.eval(f1, e.state, e.action) - c.eval(f2, e.state, e.action);
                        s2 += diff * diff;
                    }
                    if (!data.empty() && s2 > dp * dp * data.size()) continue;
                    for (int a = 0; a < 4; ++a)
                        CHECK(std::abs(c.eval(f1, {0, 0}, a) - c.eval(f2, {0, 0}, a)) <=
                              ans.uncertainty + 1e-12);
                }
        }
    }
    SUBCASE("appending data never increases the uncertainty") {
        Rng rng(9);
        auto c = bandit_class({{0.2, 0.8, 0.5}, {0.7, 0.1, 0.55}, {0.25, 0.75, 0.4}});
        Dataset data;
        double prev = max_uncertainty_finite({0, 0}, 0.2, data, c, 3).uncertainty;
        for (int i = 0; i < 6; ++i) {
            data.append({0, 0}, static_cast<int>(rng.uniform_index(3)), 0.0);
            const double now = max_uncertainty_finite({0, 0}, 0.2, data, c, 3).uncertainty;
            CHECK(now <= prev + 1e-12);
            prev = now;
        }
    }
}

TEST_CASE("dataset label discipline") {
    Dataset d;
    d.append({0, 0}, 1, 0.5);
    CHECK_NOTHROW(d.append({0, 0}, 1, 0.5));                       // identical label
    CHECK_THROWS_AS(d.append({0, 0}, 1, 0.6), std::logic_error);   // conflicting label
    CHECK_THROWS_AS(d.append({0, 0}, 1, 0.5, false), std::logic_error);  // repeats barred
}

TEST_CASE("linear oracle closed forms") {
    SUBCASE("empty dataset binds only the norm ball") {
        Eigen::VectorXd phi0(2), phi1(2);
        phi0 << 0.3, 0.4;
        phi1 << 0.1, 0.0;
        LinearClass cls{two_action_features(phi0, phi1), 1.0};
        Dataset empty;
        auto ans = max_uncertainty_linear({0, 0}, 0.1, empty, cls, 2);
        CHECK(ans.action == 0);
        CHECK(ans.uncertainty == doctest::Approx(2.0 * phi0.norm()));
        auto grid = grid_oracle_2d(Eigen::MatrixXd::Zero(2, 2), 1.0, phi0);
        CHECK(ans.uncertainty == doctest::Approx(grid).epsilon(1e-2));
    }
    SUBCASE("zero feature reports zero") {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(2), e1(2);
        e1 << 1.0, 0.0;
        LinearClass cls{two_action_features(z, e1), 1.0};
        Dataset empty;
        auto ans = max_uncertainty_linear({0, 0}, 0.1, empty, cls, 1);
        CHECK(ans.uncertainty == 0.0);
    }
    SUBCASE("kernel directions saturate the norm bound") {
        Eigen::VectorXd e1(2), e2(2);
        e1 << 1.0, 0.0;
        e2 << 0.0, 1.0;
        LinearClass cls{two_action_features(e1, e2), 1.0};
        Dataset data;
        data.append({0, 0}, 0, 0.7);  // feature e1
        auto ans = max_uncertainty_linear({0, 0}, 0.1, data, cls, 2);
        CHECK(ans.action == 1);
        CHECK(ans.uncertainty == doctest::Approx(2.0).epsilon(1e-9));
        // grid confirmation on the e2 query
        Eigen::MatrixXd gram = e1 * e1.transpose();
        CHECK(grid_oracle_2d(gram, 0.01, e2) == doctest::Approx(2.0).epsilon(1e-2));
    }
    SUBCASE("witness feasibility") {
        Rng rng(13);
        for (int trial = 0; trial < 40; ++trial) {
            Eigen::VectorXd phi0(2), phi1(2), data_phi(2);
            phi0 << rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7);
            phi1 << rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7);
            LinearClass cls{two_action_features(phi0, phi1), 1.0};
            Dataset data;
            const int n = 1 + static_cast<int>(rng.uniform_index(3));
            for (int i = 0; i < n; ++i) data.append({0, 0}, static_cast<int>(rng.uniform_index(2)), 0.0);
            const double dp = rng.uniform(0.01, 0.4);
            auto ans = max_uncertainty_linear({0, 0}, dp, data, cls, 2);
            Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(2, 2);
            for (const auto& e : data.entries()) {
                const auto& f = cls.features.at(e.state, e.action);
                gram += f * f.transpose();
            }
            const auto& dt = ans.witness_delta_theta;
            REQUIRE(dt.size() == 2);
            CHECK(dt.dot(gram * dt) / data.size() <= dp * dp + 1e-9 * data.size());
            CHECK(dt.norm() <= 2.0 + 1e-9);
            CHECK(std::abs(dt.dot(cls.features.at({0, 0}, ans.action))) ==
                  doctest::Approx(ans.uncertainty).epsilon(1e-9));
        }
    }
}

TEST_CASE("linear oracle agrees with dense grid search") {
    Rng rng(21);
    for (int trial = 0; trial < 15; ++trial) {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(2, 2);
        const int n = 1 + static_cast<int>(rng.uniform_index(3));
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd v(2);
            v << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
            gram += v * v.transpose();
        }
        Eigen::VectorXd target(2);
        target << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
        const double dp = rng.uniform(0.0, 0.5);
        const double c2 = n * dp * dp;
        const double exact = max_linear_disagreement(gram, c2, target);
        const double grid = grid_oracle_2d(gram, c2, target, 2e-3);
        if (grid > 1e-6)
            CHECK(std::abs(exact - grid) / grid <= 1e-2);
        else
            CHECK(exact <= 2e-3);
    }
}

TEST_CASE("dominance against random feasible offsets") {
    Rng rng(31);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd v(3);
        v << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
        gram += v * v.transpose();
    }
    Eigen::VectorXd target(3);
    target << 0.4, -0.3, 0.2;
    const double c2 = 4 * 0.15 * 0.15;
    const double exact = max_linear_disagreement(gram, c2, target);
    int feasible_draws = 0;
    while (feasible_draws < 10000) {
        Eigen::VectorXd d(3);
        d << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2);
        if (d.norm() > 2.0 || d.dot(gram * d) > c2) continue;
        ++feasible_draws;
        CHECK(std::abs(d.dot(target)) <= exact + 1e-9);
    }
}
