#pragma once

#include <Eigen/Core>
#include <vector>

#include "agnosticq/funclass.hpp"
#include "agnosticq/mdp.hpp"

namespace agnosticq {

struct DatasetEntry {
    StateId state;
    int action = 0;
    double label = 0.0;
};

// Append-only run dataset. In deterministic runs a repeated (state, action)
// must carry the same label to 1e-12; the stochastic agent never repeats a
// pair, so repeats there are rejected outright.
class Dataset {
public:
    void append(StateId s, int a, double label, bool allow_repeats = true);
    const std::vector<DatasetEntry>& entries() const { return entries_; }
    int size() const { return static_cast<int>(entries_.size()); }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<DatasetEntry> entries_;
};

// Action of maximal pairwise disagreement subject to dataset consistency.
// `uncertainty` is the absolute disagreement |f1(s,a) - f2(s,a)| of the
// returned witnesses (the loop guards and the counting argument all compare
// unsquared quantities).
struct OracleAnswer {
    int action = 0;
    double uncertainty = 0.0;
    int witness_f1 = -1, witness_f2 = -1;  // finite classes
    Eigen::VectorXd witness_delta_theta;   // linear classes: f1 - f2 as a parameter offset
};

// Exhaustive maximization over actions and function pairs. The consistency
// constraint (mean squared disagreement over the dataset at most
// delta_prime^2) is vacuous on an empty dataset. Ties break to the lowest
// action index, then the lowest (f1, f2) pair in lexicographic order.
OracleAnswer max_uncertainty_finite(StateId s, double delta_prime, const Dataset& data,
                                    const FiniteClass& cls, int num_actions);

// Linear-class oracle: for each action maximizes |dtheta^T phi(s,a)| over
// { dtheta : dtheta^T G dtheta <= |Y| delta_prime^2, ||dtheta|| <= 2 } with
// G the dataset feature second-moment sum. Solved exactly through the
// eigendecomposition of G (ball-only, ellipsoid-only, or both-active via a
// monotone one-dimensional root find).
OracleAnswer max_uncertainty_linear(StateId s, double delta_prime, const Dataset& data,
                                    const LinearClass& cls, int num_actions);

// Largest |dtheta^T target| subject to dtheta^T G dtheta <= c2 and
// ||dtheta|| <= 2; also used by tests to cross-check against grid search.
double max_linear_disagreement(const Eigen::MatrixXd& gram, double c2,
                               const Eigen::VectorXd& target, Eigen::VectorXd* argmax = nullptr);

}  // namespace agnosticq
