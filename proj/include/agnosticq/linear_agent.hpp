#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "agnosticq/funclass.hpp"
#include "agnosticq/mdp.hpp"

namespace agnosticq {

// Ridge-initialized covariance C = (rho^2/16) I + sum phi phi^T together
// with the response vector Y = sum phi * label. Solves go through a
// Cholesky factor that is rank-one-updated per addition and fully
// refactored every refactor_interval additions.
struct CovarianceState {
    Eigen::MatrixXd C;
    Eigen::VectorXd y_vec;
    double ridge = 0.0;
    int dim = 0;
    Eigen::LLT<Eigen::MatrixXd> llt;
    int additions_since_refactor = 0;
    int refactor_interval = 64;

    CovarianceState(int d, double rho, int refactor_every = 64);
};

// phi^T C^-1 phi via a linear solve (C is never inverted); pass = value <= 1.
struct GateResult {
    double value = 0.0;
    bool pass = false;
};
GateResult uncertainty_gate(const CovarianceState& state, const Eigen::VectorXd& phi);

// phi^T C^-1 Y via a linear solve.
double predict_q(const CovarianceState& state, const Eigen::VectorXd& phi);

// Rank-one update of C and Y. The determinant grows by 1 + gate value, at
// least 2 whenever the caller only adds gate-failed data.
CovarianceState add_datum(const CovarianceState& state, const Eigen::VectorXd& phi,
                          double q_value);

struct Observation {
    StateId state;
    int action = 0;
    double value = 0.0;
};

struct LinearRunStats {
    std::int64_t recur_line_executions = 0;
    std::int64_t data_additions = 0;
    std::int64_t explore_calls = 0;
    Policy learned_policy;
    double value_at_root = 0.0;
    // audit trails for the post-hoc invariant checks
    std::vector<Observation> additions;
    std::vector<Observation> predictions;
    std::vector<std::pair<StateId, double>> explore_returns;
};

struct LinearAgentOptions {
    bool memoize = false;  // cache per-state explore returns (changes counters only)
    int refactor_interval = 64;
};

// The recursion-based linear-class learner: per action, either trust the
// least-squares prediction (gate passes) or recurse into the successor and
// store the exact label. Deterministic rewards only.
struct LinearRunResult {
    Policy policy;
    LinearRunStats stats;
};
LinearRunResult learn_linear(Env& env, const FeatureMap& features, double rho,
                             const LinearAgentOptions& options = {});

}  // namespace agnosticq
