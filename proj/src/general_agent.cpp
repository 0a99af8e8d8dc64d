#include "agnosticq/general_agent.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace agnosticq {

double FittedFn::eval(const AnyClass& cls, StateId s, int a) const {
    if (const auto* fin = std::get_if<FiniteClass>(&cls)) return fin->eval(index, s, a);
    return std::get<LinearClass>(cls).eval(theta, s, a);
}

FittedFn least_squares_fit(const Dataset& data, const AnyClass& cls) {
    FittedFn fit;
    if (const auto* fin = std::get_if<FiniteClass>(&cls)) {
        fit.index = 0;
        if (data.empty()) return fit;
        double best = std::numeric_limits<double>::infinity();
        for (int f = 0; f < fin->size(); ++f) {
            double res = 0.0;
            for (const auto& e : data.entries()) {
                const double r = fin->eval(f, e.state, e.action) - e.label;
                res += r * r;
            }
            if (res < best) {
                best = res;
                fit.index = f;
            }
        }
        return fit;
    }
    const auto& lin = std::get<LinearClass>(cls);
    fit.theta = Eigen::VectorXd::Zero(lin.features.d);
    if (data.empty()) return fit;
    Eigen::MatrixXd A(data.size(), lin.features.d);
    Eigen::VectorXd b(data.size());
    for (int i = 0; i < data.size(); ++i) {
        const auto& e = data.entries()[i];
        A.row(i) = lin.features.at(e.state, e.action);
        b[i] = e.label;
    }
    fit.theta = A.completeOrthogonalDecomposition().solve(b);
    const double nrm = fit.theta.norm();
    if (nrm > lin.norm_bound) {
        fit.theta *= lin.norm_bound / nrm;
        fit.projected = true;
    }
    return fit;
}

std::int64_t sample_count(int horizon, double delta_r, double p, std::int64_t dim_e_value) {
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    if (!(delta_r > 0.0)) throw std::invalid_argument("delta_r must be positive");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    if (dim_e_value < 1) throw std::invalid_argument("dim_e_value must be positive");
    const double h = static_cast<double>(horizon);
    const double x = h * h / (2.0 * delta_r * delta_r) *
                     std::log(18.0 * static_cast<double>(dim_e_value) * h / p);
    return static_cast<std::int64_t>(std::ceil(x));
}

double estimate_reward(Env& env, StateId s, int a, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("sample count must be at least 1");
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double r = env.sample_reward(s, a);
        if (r < 0.0 || r > 1.0)
            throw std::runtime_error("environment contract violation: reward sample outside [0,1]");
        sum += r;
    }
    return sum / static_cast<double>(n);
}

namespace {

struct GeneralRun {
    Env& env;
    const AnyClass& cls;
    double rho, delta, oracle_tol, guard;
    bool stochastic;
    std::int64_t n_samples = 0;
    int cap;

    Dataset data;
    FittedFn fitted;
    Policy policy;
    GeneralRunStats stats;
    std::map<std::pair<StateId, int>, double> r_hat;

    GeneralRun(Env& e, const AnyClass& c, double rho_, double delta_, double oracle_tol_,
               bool stochastic_)
        : env(e), cls(c), rho(rho_), delta(delta_), oracle_tol(oracle_tol_),
          guard(std::abs(rho_ / 2.0 - delta_)), stochastic(stochastic_),
          cap(e.mdp().num_state_action_pairs()), policy(make_unset_policy(e.mdp())) {
        fitted = least_squares_fit(data, cls);  // "initialize f arbitrarily"
    }

    OracleAnswer oracle(StateId s) {
        ++stats.oracle_calls;
        const int k = env.num_actions(s);
        if (const auto* fin = std::get_if<FiniteClass>(&cls))
            return max_uncertainty_finite(s, oracle_tol, data, *fin, k);
        return max_uncertainty_linear(s, oracle_tol, data, std::get<LinearClass>(cls), k);
    }

    // reward read: exact for the deterministic agent, estimated (and
    // remembered) for the stochastic one
    double reward(StateId s, int a, bool fresh) {
        if (!stochastic) return env.det_reward(s, a);
        const auto key = std::make_pair(s, a);
        auto it = r_hat.find(key);
        if (it != r_hat.end() && !fresh) return it->second;
        ++stats.estimate_events;
        stats.reward_samples += n_samples;
        const double est = estimate_reward(env, s, a, n_samples);
        r_hat[key] = est;
        return est;
    }

    double explore(StateId s, int depth) {
        if (depth > env.horizon())
            throw std::logic_error("recursion deeper than the horizon: level structure violated");
        ++stats.explore_calls;
        const bool last_level = s.level == env.horizon() - 1;

        OracleAnswer ans = oracle(s);
        while (ans.uncertainty > guard) {
            if (data.size() >= cap)
                throw std::logic_error(
                    "dataset exceeded |S x A| entries: the oracle failed to shrink");
            const int a = ans.action;
            const double r = reward(s, a, /*fresh=*/true);
            double label;
            if (last_level) {
                label = r;
            } else {
                label = explore(env.next(s, a), depth + 1) + r;
            }
            data.append(s, a, label, /*allow_repeats=*/!stochastic);
            ++stats.y_size;
            ans = oracle(s);
        }

        fitted = least_squares_fit(data, cls);
        if (fitted.projected) ++stats.projected_fits;
        const int k = env.num_actions(s);
        DecisionRecord rec{s, std::vector<double>(k)};
        int best = 0;
        for (int a = 0; a < k; ++a) {
            rec.fitted_q[a] = fitted.eval(cls, s, a);
            if (rec.fitted_q[a] > rec.fitted_q[best]) best = a;
        }
        stats.decisions.push_back(std::move(rec));
        policy[s.level][s.index] = best;

        double ret;
        if (last_level) {
            ret = reward(s, best, /*fresh=*/false);
        } else {
            ret = reward(s, best, /*fresh=*/false) + explore(env.next(s, best), depth + 1);
        }
        stats.explore_returns.push_back({s, ret});
        return ret;
    }

    GeneralRunResult run() {
        ++env.account().episodes_started;
        stats.value_at_root = explore(env.initial_state(), 1);
        stats.learned_policy = policy;
        stats.dataset = data;
        return {policy, std::move(stats)};
    }
};

void validate_common(Env& env, const AnyClass& cls, double rho, double delta) {
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
    if (delta < 0.0) throw std::invalid_argument("delta must be non-negative");
    if (delta >= rho / 2.0)
        throw std::invalid_argument("refused: delta >= rho/2 violates every premise");
    // the class must cover the whole state-action space
    const auto dom = std::visit([](const auto& c) { return c.domain(); }, cls);
    if (static_cast<int>(dom.size()) != env.mdp().num_state_action_pairs())
        throw std::invalid_argument("function class shape does not match the MDP");
}

}  // namespace

GeneralRunResult learn_general(Env& env, const AnyClass& cls, double rho, double delta) {
    validate_common(env, cls, rho, delta);
    if (env.mdp().has_stochastic_rewards())
        throw std::invalid_argument("learn_general requires deterministic rewards");
    GeneralRun run(env, cls, rho, delta, 2.0 * delta, /*stochastic=*/false);
    return run.run();
}

GeneralRunResult learn_stochastic(Env& env, const AnyClass& cls, double rho, double delta,
                                  const StochasticConfig& cfg) {
    validate_common(env, cls, rho, delta);
    GeneralRun run(env, cls, rho, delta, 2.0 * (delta + cfg.delta_r), /*stochastic=*/true);
    run.n_samples = cfg.n_samples(env.horizon());
    return run.run();
}

}  // namespace agnosticq
