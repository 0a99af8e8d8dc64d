#include <cmath>

#include "agnosticq/mdp.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agnosticq;
using namespace agnosticq::testutil;

TEST_CASE("solve_dp on a one-level bandit") {
    auto truth = solve_dp(bandit({0.9, 0.1}));
    CHECK(truth.v_star[0][0] == doctest::Approx(0.9));
    CHECK(truth.gap == doctest::Approx(0.8));
    CHECK(truth.pi_star[0][0] == std::vector<int>{0});
}

TEST_CASE("solve_dp matches policy enumeration on the chain") {
    const auto mdp = chain_mdp();
    const auto truth = solve_dp(mdp);
    CHECK(truth.q_star[0][0][0] == doctest::Approx(0.5));
    CHECK(truth.q_star[0][0][1] == doctest::Approx(0.3));
    CHECK(truth.v_star[0][0] == doctest::Approx(0.5));
    CHECK(truth.gap == doctest::Approx(0.05));

    const auto naive = naive_ground_truth(mdp);
    CHECK(truth.gap == doctest::Approx(naive.gap).epsilon(1e-12));
    for (int h = 0; h < mdp.horizon; ++h)
        for (int s = 0; s < mdp.level_widths[h]; ++s) {
            CHECK(truth.v_star[h][s] == doctest::Approx(naive.v[h][s]).epsilon(1e-12));
            for (int a = 0; a < mdp.action_counts[h][s]; ++a)
                CHECK(truth.q_star[h][s][a] == doctest::Approx(naive.q[h][s][a]).epsilon(1e-12));
        }
}

TEST_CASE("empty gap infimum is infinite") {
    auto truth = solve_dp(bandit({0.4, 0.4}));
    CHECK(std::isinf(truth.gap));
    CHECK(truth.pi_star[0][0] == std::vector<int>{0, 1});
}

TEST_CASE("validation rejects broken structures") {
    auto m = chain_mdp();
    SUBCASE("transition out of range") {
        m.next[0][0][1] = 7;
        CHECK_THROWS_AS(solve_dp(m), std::invalid_argument);
    }
    SUBCASE("path sum above one") {
        m.rewards[0][0][0] = RewardSpec::deterministic(0.7);  // 0.7 + 0.5 = 1.2
        CHECK_THROWS_AS(solve_dp(m), std::invalid_argument);
    }
    SUBCASE("path sum below zero") {
        m.rewards[1][1][1] = RewardSpec::deterministic(-0.5);
        CHECK_THROWS_AS(solve_dp(m), std::invalid_argument);
    }
    SUBCASE("two-point support outside the unit interval") {
        m.rewards[0][0][0] = RewardSpec::two_point(-0.1, 0.3, 0.5);
        CHECK_THROWS_AS(solve_dp(m), std::invalid_argument);
    }
}

TEST_CASE("rollout walks the unique path") {
    const auto mdp = chain_mdp();
    const auto truth = solve_dp(mdp);
    EpisodeAccount account;
    const Policy opt = greedy_policy(mdp, truth);

    auto traj = rollout(mdp, opt, account);
    CHECK(traj.total_reward == doctest::Approx(0.5));
    CHECK(traj.steps.size() == 2);
    CHECK(account.episodes_started == 1);
    CHECK(account.env_steps == 1);

    SUBCASE("optimal rollout reproduces V* exactly") {
        CHECK(traj.total_reward == truth.v_star[0][0]);
    }
    SUBCASE("deterministic rewards give identical trajectories") {
        auto traj2 = rollout(mdp, opt, account);
        REQUIRE(traj2.steps.size() == traj.steps.size());
        for (std::size_t i = 0; i < traj.steps.size(); ++i) {
            CHECK(traj2.steps[i].state == traj.steps[i].state);
            CHECK(traj2.steps[i].action == traj.steps[i].action);
            CHECK(traj2.steps[i].reward == traj.steps[i].reward);
        }
    }
    SUBCASE("all-zero rewards roll out to zero") {
        auto zero = bandit({0.0, 0.0});
        EpisodeAccount acc2;
        Policy p{{1}};
        CHECK(rollout(zero, p, acc2).total_reward == 0.0);
    }
    SUBCASE("undefined policy throws") {
        Policy broken = make_unset_policy(mdp);
        broken[0][0] = 0;  // level-1 states left unset
        EpisodeAccount acc3;
        CHECK_THROWS_AS(rollout(mdp, broken, acc3), std::invalid_argument);
    }
}

TEST_CASE("gen_mdp hits the target gap and reproduces bit-exactly") {
    SUBCASE("single-level example") {
        auto m = gen_mdp(0, 1, {1}, 2, 0.3);
        CHECK(solve_dp(m).gap == doctest::Approx(0.3).epsilon(1e-9));
    }
    SUBCASE("same seed, same bytes") {
        auto a = gen_mdp(42, 3, {1, 2, 2}, 3, 0.25);
        auto b = gen_mdp(42, 3, {1, 2, 2}, 3, 0.25);
        CHECK(dump_json17(a.to_json()) == dump_json17(b.to_json()));
        auto c = gen_mdp(43, 3, {1, 2, 2}, 3, 0.25);
        CHECK(dump_json17(a.to_json()) != dump_json17(c.to_json()));
    }
    SUBCASE("infeasible gaps are rejected") {
        CHECK_THROWS_AS(gen_mdp(0, 1, {1}, 2, 2.0), std::invalid_argument);
        CHECK_THROWS_AS(gen_mdp(0, 2, {1, 1}, 1, 0.3), std::invalid_argument);
        CHECK_THROWS_AS(gen_mdp(0, 2, {1, 1}, 2, 0.8, 0.5), std::invalid_argument);
    }
}

TEST_CASE("generated instances satisfy the solver invariants") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(mix_seed(seed, 99));
        const int H = rng.uniform_int(1, 5);
        std::vector<int> widths(H);
        for (int& w : widths) w = rng.uniform_int(1, 3);
        const int actions = rng.uniform_int(2, 4);
        const double gap = rng.uniform(0.05, 0.5);
        const auto mdp = gen_mdp(seed, H, widths, actions, gap, 0.9);
        const auto truth = solve_dp(mdp);

        CHECK(truth.gap == doctest::Approx(gap).epsilon(1e-9));

        // Bellman consistency at every pair
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < widths[h]; ++s)
                for (int a = 0; a < actions; ++a) {
                    double rhs = mdp.rewards[h][s][a].mean();
                    if (h < H - 1) rhs += truth.v_star[h + 1][mdp.next[h][s][a]];
                    CHECK(std::abs(truth.q_star[h][s][a] - rhs) <= 1e-12);
                }

        // the optimal rollout attains V*(s1) exactly
        EpisodeAccount acc;
        CHECK(rollout(mdp, greedy_policy(mdp, truth), acc).total_reward ==
              truth.v_star[0][mdp.initial_state]);
    }
}

TEST_CASE("gap scales linearly with the rewards") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto mdp = gen_mdp(seed, 3, {1, 2, 2}, 2, 0.3, 0.9);
        const double base_gap = solve_dp(mdp).gap;
        for (double c : {0.5, 0.25, 1.0}) {
            auto scaled = mdp;
            for (auto& level : scaled.rewards)
                for (auto& state : level)
                    for (auto& r : state) r = RewardSpec::deterministic(r.det * c);
            CHECK(solve_dp(scaled).gap == doctest::Approx(c * base_gap).epsilon(1e-12));
        }
    }
}

TEST_CASE("two-point reward wrapping") {
    SUBCASE("symmetric case") {
        auto noisy = gen_stochastic_rewards(bandit({0.5, 0.2}), 7, TwoPointNoise::fixed(0.1));
        const auto& r = noisy.rewards[0][0][0];
        CHECK(r.lo == doctest::Approx(0.4));
        CHECK(r.hi == doctest::Approx(0.6));
        CHECK(r.p_hi == doctest::Approx(0.5));
        CHECK(r.mean() == doctest::Approx(0.5));
    }
    SUBCASE("zero width degenerates to the deterministic reward") {
        auto noisy = gen_stochastic_rewards(bandit({0.37, 0.0}), 7, TwoPointNoise::fixed(0.0));
        const auto& r = noisy.rewards[0][0][0];
        CHECK(r.lo == r.hi);
        CHECK(r.mean() == doctest::Approx(0.37));
        CHECK_FALSE(r.stochastic());
    }
    SUBCASE("clamping keeps the mean") {
        auto noisy = gen_stochastic_rewards(bandit({0.05, 0.0}), 7, TwoPointNoise::fixed(0.2));
        const auto& r = noisy.rewards[0][0][0];
        CHECK(r.lo == doctest::Approx(0.0));
        CHECK(r.hi == doctest::Approx(0.25));
        CHECK(r.mean() == doctest::Approx(0.05));
    }
    SUBCASE("negative means have no bounded support") {
        DeterministicMdp m = chain_mdp();
        m.rewards[0][0][0] = RewardSpec::deterministic(-0.1);
        m.rewards[1][0][0] = RewardSpec::deterministic(0.5);
        CHECK_THROWS_AS(gen_stochastic_rewards(m, 7, TwoPointNoise::fixed(0.05)),
                        std::invalid_argument);
    }
    SUBCASE("noise that can push a path sum above one is rejected") {
        DeterministicMdp m = chain_mdp();
        m.rewards[0][0][0] = RewardSpec::deterministic(0.5);  // highs: 0.6 + 0.6 = 1.2
        CHECK_THROWS_AS(gen_stochastic_rewards(m, 7, TwoPointNoise::fixed(0.1)),
                        std::invalid_argument);
    }
    SUBCASE("empirical mean concentrates") {
        auto noisy = gen_stochastic_rewards(bandit({0.5, 0.2}), 7, TwoPointNoise::fixed(0.1));
        Env env(noisy, 1234);
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += env.sample_reward({0, 0}, 0);
        CHECK(std::abs(sum / n - 0.5) <= 3.0 * std::sqrt(0.25 / n));
        CHECK(env.account().reward_samples_drawn == n);
    }
}

TEST_CASE("serialization round trip and 17-digit reals") {
    CHECK(format_real17(0.1) == "0.10000000000000001");
    auto m = gen_mdp(5, 3, {1, 2, 1}, 2, 0.2, 0.9);
    auto noisy = gen_stochastic_rewards(m, 8, TwoPointNoise{0.01, 0.05});
    for (const auto& mdp : {m, noisy}) {
        const std::string bytes = dump_json17(mdp.to_json());
        auto back = DeterministicMdp::from_json(Json::parse(bytes));
        CHECK(dump_json17(back.to_json()) == bytes);
    }
}
