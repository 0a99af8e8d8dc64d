#include "agnosticq/mdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace agnosticq {

namespace {

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

bool DeterministicMdp::has_stochastic_rewards() const {
    for (const auto& level : rewards)
        for (const auto& state : level)
            for (const auto& r : state)
                if (r.stochastic()) return true;
    return false;
}

int DeterministicMdp::num_state_action_pairs() const {
    int n = 0;
    for (const auto& level : action_counts)
        for (int k : level) n += k;
    return n;
}

void DeterministicMdp::validate() const {
    require(horizon >= 1, "horizon must be >= 1");
    require(static_cast<int>(level_widths.size()) == horizon, "level_widths size != horizon");
    require(static_cast<int>(action_counts.size()) == horizon, "action_counts size != horizon");
    require(static_cast<int>(rewards.size()) == horizon, "rewards size != horizon");
    require(static_cast<int>(next.size()) == std::max(0, horizon - 1), "transition table size != horizon-1");
    for (int h = 0; h < horizon; ++h) {
        require(level_widths[h] >= 1, "empty level");
        require(static_cast<int>(action_counts[h].size()) == level_widths[h], "action_counts shape");
        require(static_cast<int>(rewards[h].size()) == level_widths[h], "rewards shape");
        for (int s = 0; s < level_widths[h]; ++s) {
            const int k = action_counts[h][s];
            require(k >= 1, "state with no actions");
            require(static_cast<int>(rewards[h][s].size()) == k, "rewards shape");
            for (const auto& r : rewards[h][s]) {
                if (r.kind == RewardSpec::Kind::TwoPoint) {
                    require(r.lo >= 0.0 && r.hi <= 1.0 && r.lo <= r.hi,
                            "two-point support outside [0,1]");
                    require(r.p_hi >= 0.0 && r.p_hi <= 1.0, "two-point probability outside [0,1]");
                }
            }
            if (h < horizon - 1) {
                require(static_cast<int>(next[h].size()) == level_widths[h] &&
                            static_cast<int>(next[h][s].size()) == k,
                        "transition table shape");
                for (int a = 0; a < k; ++a)
                    require(next[h][s][a] >= 0 && next[h][s][a] < level_widths[h + 1],
                            "transition skips the level structure");
            }
        }
    }
    require(initial_state >= 0 && initial_state < level_widths[0], "initial_state out of range");

    // Every realizable trajectory from the initial state must have its
    // reward sum inside [0,1], regardless of which supports are realized.
    std::vector<std::vector<double>> hi(horizon), lo(horizon);
    for (int h = horizon - 1; h >= 0; --h) {
        hi[h].assign(level_widths[h], 0.0);
        lo[h].assign(level_widths[h], 0.0);
        for (int s = 0; s < level_widths[h]; ++s) {
            double best_hi = -std::numeric_limits<double>::infinity();
            double worst_lo = std::numeric_limits<double>::infinity();
            for (int a = 0; a < action_counts[h][s]; ++a) {
                const auto& r = rewards[h][s][a];
                double add_hi = 0.0, add_lo = 0.0;
                if (h < horizon - 1) {
                    add_hi = hi[h + 1][next[h][s][a]];
                    add_lo = lo[h + 1][next[h][s][a]];
                }
                best_hi = std::max(best_hi, r.max_support() + add_hi);
                worst_lo = std::min(worst_lo, r.min_support() + add_lo);
            }
            hi[h][s] = best_hi;
            lo[h][s] = worst_lo;
        }
    }
    require(hi[0][initial_state] <= 1.0 + 1e-9, "a trajectory reward sum can exceed 1");
    require(lo[0][initial_state] >= -1e-9, "a trajectory reward sum can fall below 0");
}

Json DeterministicMdp::to_json() const {
    Json j;
    j["horizon"] = horizon;
    j["levels"] = level_widths;
    j["actions"] = action_counts;
    j["transitions"] = next;
    Json rw = Json::array();
    for (const auto& level : rewards) {
        Json jl = Json::array();
        for (const auto& state : level) {
            Json js = Json::array();
            for (const auto& r : state) {
                if (r.kind == RewardSpec::Kind::Det) {
                    js.push_back(Json{{"det", r.det}});
                } else {
                    js.push_back(Json{{"twopoint", Json{{"lo", r.lo}, {"hi", r.hi}, {"p_hi", r.p_hi}}}});
                }
            }
            jl.push_back(std::move(js));
        }
        rw.push_back(std::move(jl));
    }
    j["rewards"] = std::move(rw);
    j["initial_state"] = initial_state;
    return j;
}

DeterministicMdp DeterministicMdp::from_json(const Json& j) {
    DeterministicMdp m;
    m.horizon = j.at("horizon").get<int>();
    m.level_widths = j.at("levels").get<std::vector<int>>();
    m.action_counts = j.at("actions").get<std::vector<std::vector<int>>>();
    m.next = j.at("transitions").get<std::vector<std::vector<std::vector<int>>>>();
    m.initial_state = j.at("initial_state").get<int>();
    for (const auto& jl : j.at("rewards")) {
        std::vector<std::vector<RewardSpec>> level;
        for (const auto& js : jl) {
            std::vector<RewardSpec> state;
            for (const auto& jr : js) {
                if (jr.contains("det")) {
                    state.push_back(RewardSpec::deterministic(jr.at("det").get<double>()));
                } else {
                    const auto& t = jr.at("twopoint");
                    state.push_back(RewardSpec::two_point(t.at("lo").get<double>(),
                                                          t.at("hi").get<double>(),
                                                          t.at("p_hi").get<double>()));
                }
            }
            level.push_back(std::move(state));
        }
        m.rewards.push_back(std::move(level));
    }
    m.validate();
    return m;
}

bool GroundTruth::is_optimal(StateId s, int a) const {
    const auto& set = pi_star[s.level][s.index];
    return std::binary_search(set.begin(), set.end(), a);
}

GroundTruth solve_dp(const DeterministicMdp& mdp, double tie_tol) {
    mdp.validate();
    const int H = mdp.horizon;
    GroundTruth t;
    t.q_star.resize(H);
    t.v_star.resize(H);
    t.pi_star.resize(H);
    double gap = kInfiniteGap;
    for (int h = H - 1; h >= 0; --h) {
        const int width = mdp.level_widths[h];
        t.q_star[h].resize(width);
        t.v_star[h].assign(width, 0.0);
        t.pi_star[h].resize(width);
        for (int s = 0; s < width; ++s) {
            const int k = mdp.action_counts[h][s];
            auto& q = t.q_star[h][s];
            q.resize(k);
            for (int a = 0; a < k; ++a) {
                double val = mdp.rewards[h][s][a].mean();
                if (h < H - 1) val += t.v_star[h + 1][mdp.next[h][s][a]];
                q[a] = val;
            }
            const double v = *std::max_element(q.begin(), q.end());
            t.v_star[h][s] = v;
            for (int a = 0; a < k; ++a) {
                const double deficit = v - q[a];
                if (deficit <= tie_tol) {
                    t.pi_star[h][s].push_back(a);
                } else {
                    gap = std::min(gap, deficit);
                }
            }
        }
    }
    t.gap = gap;
    return t;
}

Policy make_unset_policy(const DeterministicMdp& mdp) {
    Policy p(mdp.horizon);
    for (int h = 0; h < mdp.horizon; ++h) p[h].assign(mdp.level_widths[h], -1);
    return p;
}

Policy greedy_policy(const DeterministicMdp& mdp, const GroundTruth& truth) {
    Policy p = make_unset_policy(mdp);
    for (int h = 0; h < mdp.horizon; ++h)
        for (int s = 0; s < mdp.level_widths[h]; ++s)
            p[h][s] = truth.pi_star[h][s].front();
    return p;
}

bool policy_matches_optimal(const DeterministicMdp& mdp, const GroundTruth& truth,
                            const Policy& policy) {
    StateId s{0, mdp.initial_state};
    for (int h = 0; h < mdp.horizon; ++h) {
        const int a = policy[s.level][s.index];
        if (a < 0 || a >= mdp.num_actions(s)) return false;
        if (!truth.is_optimal(s, a)) return false;
        if (h < mdp.horizon - 1) s = mdp.successor(s, a);
    }
    return true;
}

Trajectory rollout(const DeterministicMdp& mdp, const Policy& policy, EpisodeAccount& account,
                   Rng* rng) {
    ++account.episodes_started;
    Trajectory traj;
    StateId s{0, mdp.initial_state};
    for (int h = 0; h < mdp.horizon; ++h) {
        const int a = policy[s.level][s.index];
        if (a < 0 || a >= mdp.num_actions(s))
            throw std::invalid_argument("policy undefined at a reached state");
        const auto& spec = mdp.reward(s, a);
        double r;
        if (spec.stochastic()) {
            if (!rng) throw std::invalid_argument("stochastic rewards need an rng");
            ++account.reward_samples_drawn;
            r = rng->bernoulli(spec.p_hi) ? spec.hi : spec.lo;
        } else {
            r = spec.mean();
        }
        traj.steps.push_back({s, a, r});
        if (h < mdp.horizon - 1) {
            s = mdp.successor(s, a);
            ++account.env_steps;
        }
    }
    double total = 0.0;
    for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) total = it->reward + total;
    traj.total_reward = total;
    return traj;
}

DeterministicMdp gen_mdp(std::uint64_t seed, int horizon, const std::vector<int>& level_widths,
                         int actions_per_state, double target_gap, double max_path_sum) {
    require(horizon >= 1, "horizon must be >= 1");
    require(static_cast<int>(level_widths.size()) == horizon, "level_widths size != horizon");
    for (int w : level_widths) require(w >= 1, "level widths must be positive");
    require(actions_per_state >= 1, "action count must be positive");
    require(target_gap > 0.0 && target_gap <= 1.0, "target_gap must lie in (0, 1]");
    require(max_path_sum > 0.0 && max_path_sum <= 1.0, "max_path_sum must lie in (0, 1]");
    require(target_gap <= max_path_sum + 1e-15,
            "infeasible: target_gap exceeds the path-sum budget");
    require(actions_per_state >= 2,
            "infeasible: a finite gap needs at least two actions per state");

    DeterministicMdp m;
    m.horizon = horizon;
    m.level_widths = level_widths;
    m.initial_state = 0;
    m.action_counts.resize(horizon);
    m.rewards.resize(horizon);
    for (int h = 0; h < horizon; ++h) {
        m.action_counts[h].assign(level_widths[h], actions_per_state);
        m.rewards[h].resize(level_widths[h]);
    }

    Rng trans_rng(mix_seed(seed, 1));
    m.next.resize(horizon - 1);
    for (int h = 0; h + 1 < horizon; ++h) {
        m.next[h].resize(level_widths[h]);
        for (int s = 0; s < level_widths[h]; ++s) {
            m.next[h][s].resize(actions_per_state);
            for (int a = 0; a < actions_per_state; ++a)
                m.next[h][s][a] = static_cast<int>(trans_rng.uniform_index(level_widths[h + 1]));
        }
    }

    // Per-level deficit caps: a level with cap D contributes an optimal-path
    // potential of D * gap, and its suboptimal actions fall short of the
    // level value by whole multiples of the gap. Caps are budgeted so that
    // every path sum stays within max_path_sum.
    Rng plan_rng(mix_seed(seed, 2));
    const double g = target_gap;
    std::vector<int> caps(horizon, 0);
    double budget = max_path_sum;
    std::vector<int> order(horizon);
    std::iota(order.begin(), order.end(), 0);
    for (int h = horizon - 1; h > 0; --h)
        std::swap(order[h], order[plan_rng.uniform_index(h + 1)]);
    for (int h : order) {
        if (budget >= g - 1e-15) {
            caps[h] = 1;
            budget -= g;
        }
    }
    for (int h : order) {
        if (caps[h] == 1 && budget >= g - 1e-15 && plan_rng.bernoulli(0.5)) {
            caps[h] = 2;
            budget -= g;
        }
    }

    int pin_level = -1;
    for (int h = 0; h < horizon; ++h)
        if (caps[h] >= 1) { pin_level = h; break; }
    require(pin_level >= 0, "infeasible: no level can host the target gap");

    Rng deficit_rng(mix_seed(seed, 3));
    bool pinned = false;
    for (int h = 0; h < horizon; ++h) {
        const int cap = caps[h];
        for (int s = 0; s < level_widths[h]; ++s) {
            auto& rw = m.rewards[h][s];
            rw.assign(actions_per_state, RewardSpec::deterministic(0.0));
            if (cap == 0) continue;
            const int best = static_cast<int>(deficit_rng.uniform_index(actions_per_state));
            for (int a = 0; a < actions_per_state; ++a) {
                int deficit = 0;
                if (a != best) deficit = deficit_rng.uniform_int(1, cap);
                if (!pinned && h == pin_level && a != best) {
                    deficit = 1;
                    pinned = true;
                }
                rw[a] = RewardSpec::deterministic((cap - deficit) * g);
            }
        }
    }

    m.validate();
    return m;
}

DeterministicMdp gen_stochastic_rewards(const DeterministicMdp& mdp, std::uint64_t seed,
                                        const TwoPointNoise& noise) {
    require(!mdp.has_stochastic_rewards(), "input must have deterministic rewards");
    require(noise.width_lo >= 0.0 && noise.width_hi >= noise.width_lo, "invalid noise widths");
    DeterministicMdp out = mdp;
    Rng rng(mix_seed(seed, 4));
    for (int h = 0; h < out.horizon; ++h) {
        for (int s = 0; s < out.level_widths[h]; ++s) {
            for (auto& r : out.rewards[h][s]) {
                const double mean = r.mean();
                require(mean >= 0.0 && mean <= 1.0,
                        "reward mean outside [0,1]: no bounded two-point support");
                const double w = noise.width_hi > noise.width_lo
                                     ? rng.uniform(noise.width_lo, noise.width_hi)
                                     : noise.width_lo;
                const double lo = std::max(0.0, mean - w);
                const double hi = std::min(1.0, mean + w);
                if (hi - lo < 1e-15) {
                    r = RewardSpec::two_point(mean, mean, 1.0);
                } else {
                    r = RewardSpec::two_point(lo, hi, (mean - lo) / (hi - lo));
                }
            }
        }
    }
    out.validate();  // rejects noise that pushes some path sum outside [0,1]
    return out;
}

double Env::det_reward(StateId s, int a) const {
    const auto& r = mdp_->reward(s, a);
    if (r.stochastic())
        throw std::logic_error("det_reward called on a stochastic reward");
    return r.mean();
}

double Env::sample_reward(StateId s, int a) {
    if ((account_.reward_samples_drawn & 0xFFF) == 0) check_deadline();
    ++account_.reward_samples_drawn;
    const auto& r = mdp_->reward(s, a);
    if (r.kind == RewardSpec::Kind::Det) return r.det;
    return rng_.bernoulli(r.p_hi) ? r.hi : r.lo;
}

void Env::set_deadline_ms(std::int64_t wall_ms) {
    deadline_ms_ = wall_ms;
    start_ms_ = now_ms();
}

void Env::check_deadline() const {
    if (deadline_ms_ > 0 && now_ms() - start_ms_ > deadline_ms_)
        throw TrialTimeout("trial exceeded its wall-clock budget");
}

}  // namespace agnosticq
