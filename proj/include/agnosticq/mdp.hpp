#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "agnosticq/json_io.hpp"
#include "agnosticq/rng.hpp"

namespace agnosticq {

// A state in a layered MDP: level in [0, horizon) and a dense index within
// the level. Levels are disjoint by construction.
struct StateId {
    int level = 0;
    int index = 0;
    friend bool operator==(const StateId&, const StateId&) = default;
    friend auto operator<=>(const StateId&, const StateId&) = default;
};

// Per-(state, action) reward: either a fixed value or a two-point
// distribution on {lo, hi} with P(hi) = p_hi.
struct RewardSpec {
    enum class Kind { Det, TwoPoint };
    Kind kind = Kind::Det;
    double det = 0.0;
    double lo = 0.0, hi = 0.0, p_hi = 0.0;

    static RewardSpec deterministic(double r) { return RewardSpec{Kind::Det, r, 0, 0, 0}; }
    static RewardSpec two_point(double lo, double hi, double p_hi) {
        return RewardSpec{Kind::TwoPoint, 0, lo, hi, p_hi};
    }
    double mean() const { return kind == Kind::Det ? det : lo + p_hi * (hi - lo); }
    double max_support() const { return kind == Kind::Det ? det : hi; }
    double min_support() const { return kind == Kind::Det ? det : lo; }
    bool stochastic() const { return kind == Kind::TwoPoint && hi > lo; }
};

// Layered deterministic transition system over levels 0..horizon-1. All
// containers are indexed [level][state][action]; transitions exist for
// levels below horizon-1 and always land one level down.
struct DeterministicMdp {
    int horizon = 0;
    std::vector<int> level_widths;                      // states per level
    std::vector<std::vector<int>> action_counts;        // [level][state]
    std::vector<std::vector<std::vector<int>>> next;    // [level][state][action], levels 0..H-2
    std::vector<std::vector<std::vector<RewardSpec>>> rewards;
    int initial_state = 0;                              // index into level 0

    int num_actions(StateId s) const { return action_counts[s.level][s.index]; }
    StateId successor(StateId s, int a) const { return {s.level + 1, next[s.level][s.index][a]}; }
    const RewardSpec& reward(StateId s, int a) const { return rewards[s.level][s.index][a]; }
    bool has_stochastic_rewards() const;
    int num_state_action_pairs() const;

    // Throws std::invalid_argument when any structural invariant fails:
    // index ranges, two-point supports within [0,1], or any realizable
    // trajectory reward sum outside [0,1].
    void validate() const;

    Json to_json() const;
    static DeterministicMdp from_json(const Json& j);
};

constexpr double kInfiniteGap = std::numeric_limits<double>::infinity();

// Exact Q*, V*, argmax sets and the optimality gap, from backward induction
// over reward means.
struct GroundTruth {
    std::vector<std::vector<std::vector<double>>> q_star;  // [level][state][action]
    std::vector<std::vector<double>> v_star;               // [level][state]
    std::vector<std::vector<std::vector<int>>> pi_star;    // sorted optimal action sets
    double gap = kInfiniteGap;

    double q(StateId s, int a) const { return q_star[s.level][s.index][a]; }
    double v(StateId s) const { return v_star[s.level][s.index]; }
    bool is_optimal(StateId s, int a) const;
};

// Monotone interaction counters owned by a single run.
struct EpisodeAccount {
    std::int64_t episodes_started = 0;
    std::int64_t env_steps = 0;
    std::int64_t reward_samples_drawn = 0;
};

// Actions with value v_star - q_star <= tie_tol are treated as optimal and
// excluded from the gap infimum; this absorbs float noise from the backward
// sums without affecting generated instances, whose gaps are well separated.
GroundTruth solve_dp(const DeterministicMdp& mdp, double tie_tol = 1e-12);

// Deterministic policy: action per [level][state], -1 = unset.
using Policy = std::vector<std::vector<int>>;

Policy make_unset_policy(const DeterministicMdp& mdp);

// Lowest-index optimal action everywhere.
Policy greedy_policy(const DeterministicMdp& mdp, const GroundTruth& truth);

// True iff every state on the trajectory induced by `policy` from the
// initial state has its action inside the optimal argmax set.
bool policy_matches_optimal(const DeterministicMdp& mdp, const GroundTruth& truth,
                            const Policy& policy);

struct Step {
    StateId state;
    int action = 0;
    double reward = 0.0;
};

struct Trajectory {
    std::vector<Step> steps;
    double total_reward = 0.0;
};

// Walks the unique path from the initial state under `policy`. Stochastic
// rewards require `rng`. The total is accumulated back-to-front so that on
// an optimal deterministic path it reproduces the solver's V* bit for bit.
Trajectory rollout(const DeterministicMdp& mdp, const Policy& policy, EpisodeAccount& account,
                   Rng* rng = nullptr);

// Synthesizes a deterministic-reward MDP whose optimality gap equals
// target_gap to within 1e-9 and whose every path reward sum is at most
// max_path_sum (and at least 0, per-step rewards in [0,1]). Transitions are
// drawn pseudo-randomly; identical seeds give identical instances.
DeterministicMdp gen_mdp(std::uint64_t seed, int horizon, const std::vector<int>& level_widths,
                         int actions_per_state, double target_gap, double max_path_sum = 1.0);

// Two-point reward noise around each deterministic mean. A width is drawn
// per pair from [width_lo, width_hi] (equal bounds = fixed width); supports
// are clamped to [0,1] and probabilities preserve the mean exactly.
struct TwoPointNoise {
    double width_lo = 0.0;
    double width_hi = 0.0;
    static TwoPointNoise fixed(double w) { return {w, w}; }
};

DeterministicMdp gen_stochastic_rewards(const DeterministicMdp& mdp, std::uint64_t seed,
                                        const TwoPointNoise& noise);

// Single-run interaction surface handed to agents: transition and reward
// access plus counters; never exposes ground truth.
class Env {
public:
    Env(const DeterministicMdp& mdp, std::uint64_t reward_seed = 0)
        : mdp_(&mdp), rng_(reward_seed) {}
    Env(DeterministicMdp&&, std::uint64_t = 0) = delete;  // the MDP must outlive the handle

    const DeterministicMdp& mdp() const { return *mdp_; }
    int horizon() const { return mdp_->horizon; }
    StateId initial_state() const { return {0, mdp_->initial_state}; }
    int num_actions(StateId s) const { return mdp_->num_actions(s); }

    StateId next(StateId s, int a) {
        check_deadline();
        ++account_.env_steps;
        return mdp_->successor(s, a);
    }

    // Deterministic reward read; throws if the pair is stochastic.
    double det_reward(StateId s, int a) const;

    // One draw from the reward distribution at (s, a).
    double sample_reward(StateId s, int a);

    EpisodeAccount& account() { return account_; }
    const EpisodeAccount& account() const { return account_; }

    void set_deadline_ms(std::int64_t wall_ms);

private:
    void check_deadline() const;

    const DeterministicMdp* mdp_;
    EpisodeAccount account_;
    Rng rng_;
    std::int64_t deadline_ms_ = -1;
    std::int64_t start_ms_ = 0;
};

// Raised when a run exceeds its wall-clock budget.
struct TrialTimeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace agnosticq
