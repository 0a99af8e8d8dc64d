#include "agnosticq/linear_agent.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <stdexcept>

namespace agnosticq {

CovarianceState::CovarianceState(int d, double rho, int refactor_every)
    : C(Eigen::MatrixXd::Identity(d, d) * (rho * rho / 16.0)),
      y_vec(Eigen::VectorXd::Zero(d)),
      ridge(rho * rho / 16.0),
      dim(d),
      refactor_interval(refactor_every) {
    if (d < 1) throw std::invalid_argument("dimension must be positive");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
    llt.compute(C);
}

GateResult uncertainty_gate(const CovarianceState& state, const Eigen::VectorXd& phi) {
    if (phi.size() != state.dim) throw std::invalid_argument("feature dimension mismatch");
    const double value = phi.dot(state.llt.solve(phi));
    return {value, value <= 1.0};
}

double predict_q(const CovarianceState& state, const Eigen::VectorXd& phi) {
    if (phi.size() != state.dim) throw std::invalid_argument("feature dimension mismatch");
    return phi.dot(state.llt.solve(state.y_vec));
}

CovarianceState add_datum(const CovarianceState& state, const Eigen::VectorXd& phi,
                          double q_value) {
    if (phi.size() != state.dim) throw std::invalid_argument("feature dimension mismatch");
    CovarianceState out = state;
    out.C += phi * phi.transpose();
    out.y_vec += phi * q_value;
    if (++out.additions_since_refactor >= out.refactor_interval) {
        out.llt.compute(out.C);
        out.additions_since_refactor = 0;
    } else {
        out.llt.rankUpdate(phi, 1.0);
    }
    return out;
}

namespace {

struct LinearRun {
    Env& env;
    const FeatureMap& features;
    CovarianceState cov;
    Policy policy;
    LinearRunStats stats;
    bool memoize;
    std::map<StateId, double> memo;

    LinearRun(Env& e, const FeatureMap& f, double rho, const LinearAgentOptions& opt)
        : env(e), features(f), cov(f.d, rho, opt.refactor_interval),
          policy(make_unset_policy(e.mdp())), memoize(opt.memoize) {}

    double explore(StateId s, int depth) {
        if (depth > env.horizon())
            throw std::logic_error("recursion deeper than the horizon: level structure violated");
        if (memoize) {
            auto it = memo.find(s);
            if (it != memo.end()) return it->second;
        }
        ++stats.explore_calls;
        const int k = env.num_actions(s);
        const bool last_level = s.level == env.horizon() - 1;
        std::vector<double> qhat(k);
        for (int a = 0; a < k; ++a) {
            const Eigen::VectorXd& phi = features.at(s, a);
            const GateResult gate = uncertainty_gate(cov, phi);
            if (gate.pass) {
                qhat[a] = predict_q(cov, phi);
                stats.predictions.push_back({s, a, qhat[a]});
            } else {
                ++stats.recur_line_executions;
                double label;
                if (last_level) {
                    label = env.det_reward(s, a);
                } else {
                    const StateId nxt = env.next(s, a);
                    label = explore(nxt, depth + 1) + env.det_reward(s, a);
                }
                // det(C) grows by 1 + gate.value >= 2 on every gated addition
                assert(gate.value > 1.0);
                cov = add_datum(cov, phi, label);
                ++stats.data_additions;
                stats.additions.push_back({s, a, label});
                qhat[a] = label;
            }
        }
        int best = 0;
        for (int a = 1; a < k; ++a)
            if (qhat[a] > qhat[best]) best = a;
        policy[s.level][s.index] = best;

        double ret;
        if (last_level) {
            ret = env.det_reward(s, best);
        } else {
            ret = env.det_reward(s, best) + explore(env.next(s, best), depth + 1);
        }
        stats.explore_returns.push_back({s, ret});
        if (memoize) memo[s] = ret;
        return ret;
    }
};

}  // namespace

LinearRunResult learn_linear(Env& env, const FeatureMap& features, double rho,
                             const LinearAgentOptions& options) {
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
    if (env.mdp().has_stochastic_rewards())
        throw std::invalid_argument("learn_linear requires deterministic rewards");
    features.validate();

    LinearRun run(env, features, rho, options);
    ++env.account().episodes_started;
    run.stats.value_at_root = run.explore(env.initial_state(), 1);
    run.stats.learned_policy = run.policy;
    return {std::move(run.policy), std::move(run.stats)};
}

}  // namespace agnosticq
