#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "agnosticq/mdp.hpp"

namespace agnosticq {

// Value table over all state-action pairs, indexed like the MDP containers.
using QTable = std::vector<std::vector<std::vector<double>>>;

using SaPair = std::pair<StateId, int>;

// Feature extractor phi(s, a) in R^d with ||phi||_2 <= 1 everywhere.
struct FeatureMap {
    int d = 0;
    std::vector<std::vector<std::vector<Eigen::VectorXd>>> phi;  // [level][state][action]

    const Eigen::VectorXd& at(StateId s, int a) const { return phi[s.level][s.index][a]; }
    std::vector<SaPair> domain() const;
    void validate() const;

    Json to_json() const;
    static FeatureMap from_json(const Json& j);
};

// { theta^T phi : ||theta||_2 <= norm_bound }, norm_bound fixed at 1.
struct LinearClass {
    FeatureMap features;
    double norm_bound = 1.0;

    double eval(const Eigen::VectorXd& theta, StateId s, int a) const {
        return theta.dot(features.at(s, a));
    }
    std::vector<SaPair> domain() const { return features.domain(); }
};

// Explicit list of value tables.
struct FiniteClass {
    std::vector<QTable> functions;

    int size() const { return static_cast<int>(functions.size()); }
    double eval(int fn, StateId s, int a) const {
        return functions[fn][s.level][s.index][a];
    }
    std::vector<SaPair> domain() const;

    Json to_json() const;
    static FiniteClass from_json(const Json& j);
};

using AnyClass = std::variant<FiniteClass, LinearClass>;

struct ApproxErrorReport {
    double delta = 0.0;
    bool upper_bound = false;       // true when delta came from the bisection solver
    int witness_index = -1;         // finite classes
    Eigen::VectorXd witness_theta;  // linear classes
};

// Exact enumerated minimum of sup|f - Q*| over the class members.
ApproxErrorReport compute_approx_error(const FiniteClass& cls, const GroundTruth& truth);

// Upper bound on inf_theta sup|theta^T phi - Q*| over the unit ball, from a
// bisection on the target level with a projected-gradient feasibility solve
// per level; bisection tolerance 1e-6. The reported delta is the realized
// sup error of the returned witness, so it is always a valid upper bound.
ApproxErrorReport compute_approx_error(const LinearClass& cls, const GroundTruth& truth);

ApproxErrorReport compute_approx_error(const AnyClass& cls, const GroundTruth& truth);

// Builds a feature map together with a witness theta_star such that
// |theta_star^T phi(s,a) - Q*(s,a)| <= delta_target at every pair, with
// ||theta_star|| <= 1 and ||phi|| <= 1. Throws when max|Q*| + delta_target
// exceeds 1 (no unit-norm witness can exist under unit-norm features).
struct LinearInstance {
    FeatureMap features;
    Eigen::VectorXd theta_star;
    double witness_sup_error = 0.0;
};
LinearInstance gen_linear_features(const GroundTruth& truth, int d, double delta_target,
                                   std::uint64_t seed);

// Finite class containing one table within sup-distance delta_target of Q*
// plus m-1 bounded random perturbations of Q*.
FiniteClass gen_finite_class(const GroundTruth& truth, int class_size, double delta_target,
                             std::uint64_t seed);

// Dependence of Definition-style pairwise-disagreement type: (s,a) depends
// on the predecessors iff every function pair whose summed squared
// disagreement over the predecessors is at most eps^2 also disagrees by at
// most eps at (s,a).
bool is_eps_dependent(const SaPair& pair, const std::vector<SaPair>& predecessors,
                      const FiniteClass& cls, double eps);

// Exact length of the longest sequence over `domain` in which every element
// is eps'-independent of its predecessors for a common eps' >= eps. The
// eps' quantifier is decided exactly: each candidate element contributes a
// union of half-open eps' intervals [sqrt(prefix disagreement), pointwise
// disagreement), and a sequence is valid iff the intersection over its
// elements is nonempty. Guard: |domain| <= 12.
int eluder_dim_bruteforce(const FiniteClass& cls, const std::vector<SaPair>& domain, double eps);

// First-fit greedy sequence under the same validity test; a lower bound on
// the exact dimension, with no domain-size guard.
int eluder_dim_greedy(const FiniteClass& cls, const std::vector<SaPair>& domain, double eps);

}  // namespace agnosticq
