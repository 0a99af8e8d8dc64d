#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "agnosticq/funclass.hpp"
#include "agnosticq/mdp.hpp"
#include "agnosticq/oracle.hpp"

namespace agnosticq {

// Result of a least-squares fit over a function class.
struct FittedFn {
    int index = -1;              // finite classes
    Eigen::VectorXd theta;       // linear classes
    bool projected = false;      // linear fit was rescaled onto the unit ball

    double eval(const AnyClass& cls, StateId s, int a) const;
};

// argmin over the class of the summed squared residuals on the dataset.
// Finite classes: exact enumeration, ties to the lowest index. Linear
// classes: minimum-norm ordinary least squares, rescaled onto the unit ball
// when the solution leaves it. Empty dataset: the first class member
// (index 0, respectively theta = 0).
FittedFn least_squares_fit(const Dataset& data, const AnyClass& cls);

// Fitted values per action at the moment a policy entry was set; kept so
// tests can audit the fit accuracy against ground truth.
struct DecisionRecord {
    StateId state;
    std::vector<double> fitted_q;
};

struct GeneralRunStats {
    std::int64_t y_size = 0;
    std::int64_t oracle_calls = 0;
    std::int64_t explore_calls = 0;
    std::int64_t reward_samples = 0;
    std::int64_t estimate_events = 0;
    std::int64_t projected_fits = 0;
    Policy learned_policy;
    double value_at_root = 0.0;
    Dataset dataset;
    std::vector<DecisionRecord> decisions;
    std::vector<std::pair<StateId, double>> explore_returns;
};

struct GeneralRunResult {
    Policy policy;
    GeneralRunStats stats;
};

// Oracle-guided recursion for an arbitrary function class, deterministic
// rewards. Explores while the maximum dataset-consistent disagreement at the
// state exceeds |rho/2 - delta|; the oracle tolerance is 2*delta.
// Configurations with delta >= rho/2 are refused. Dataset growth beyond
// |S x A| entries aborts the run (the feasible set can only shrink, so this
// indicates an oracle defect).
GeneralRunResult learn_general(Env& env, const AnyClass& cls, double rho, double delta);

// ceil(H^2 / (2 delta_r^2) * ln(18 * dim_e * H / p)): per-estimate sample
// count for the stochastic-reward variant.
std::int64_t sample_count(int horizon, double delta_r, double p, std::int64_t dim_e_value);

// Empirical mean of n fresh draws at (s, a); throws if a draw leaves [0,1].
double estimate_reward(Env& env, StateId s, int a, std::int64_t n);

struct StochasticConfig {
    double delta_r = 0.0;       // reward-estimation tolerance
    double p = 0.0;             // failure probability
    std::int64_t dim_e_value = 1;
    std::int64_t n_samples(int horizon) const { return sample_count(horizon, delta_r, p, dim_e_value); }
};

// Stochastic-reward variant: every reward read becomes the empirical mean
// of n fresh samples, estimated once per pair and kept in a table (the
// return line reuses the stored estimate, estimating on demand when the
// chosen action was never explored). Oracle tolerance 2*(delta + delta_r);
// the loop guard stays |rho/2 - delta|.
GeneralRunResult learn_stochastic(Env& env, const AnyClass& cls, double rho, double delta,
                                  const StochasticConfig& cfg);

}  // namespace agnosticq
