#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agnosticq/funclass.hpp"
#include "agnosticq/general_agent.hpp"
#include "agnosticq/linear_agent.hpp"
#include "agnosticq/mdp.hpp"

namespace agnosticq {

// Closed-form premise and bound evaluations. log_base applies wherever the
// counting argument takes a logarithm (default natural).
double log_with_base(double x, const std::string& base);
double lemma1_bound(int d, double rho, const std::string& log_base = "e");
bool linear_premise(double rho, double delta, int d, const std::string& log_base = "e");
double linear_delta_max(double rho, int d, const std::string& log_base = "e");
bool general_premise(double rho, double delta, std::int64_t dim_e);       // rho >= 6*sqrt(2)*delta*sqrt(dim)
bool lemma2_premise(double rho, double delta, std::int64_t dim_e, double c);
double general_delta_max(double rho, std::int64_t dim_e);
double lemma2_delta_max(double rho, std::int64_t dim_e, double c);
bool stochastic_premise(double rho, double delta, double delta_r, std::int64_t dim_e);

// Linear classes have no exact finite-domain dimension here; the harness
// accepts a user-supplied value or this asymptotic estimate with an
// explicit constant: ceil(c * d * ln(1/eps)).
std::int64_t linear_eluder_estimate(int d, double eps, double c = 1.0);

// One sweep configuration; parsed from JSON with flag overrides on top.
struct ExperimentConfig {
    std::string mode = "linear";  // linear | general | stochastic | eluder
    int trials = 50;
    std::uint64_t master_seed = 0;

    // instance synthesis
    int h_min = 2, h_max = 6;
    int width_min = 1, width_max = 4;
    int action_min = 2, action_max = 5;
    int d_min = 4, d_max = 10;
    int class_size = 4;
    double rho_min = 0.1, rho_max = 0.5;
    double max_path_sum = 0.9;

    // approximation error: fixed target, or a fraction of the premise cap
    double delta_target = 0.0;
    double delta_frac_of_max = -1.0;  // >= 0 switches to fraction mode

    // agent / analysis parameters
    double lemma2_c = 18.0;
    std::string log_base = "e";
    bool memoize = false;
    double delta_r = 0.0;        // stochastic: 0 = use the remark configuration
    double p = 0.1;
    std::int64_t dim_e_override = -1;
    double noise_width = 0.3;    // stochastic reward two-point half-width
    double success_threshold = 0.85;

    // eluder mode
    double eps_min = 0.05, eps_max = 0.5;

    // execution
    int parallelism = 1;
    std::int64_t wall_budget_ms = 0;  // 0 = unlimited
    bool timings = false;             // emit wall_ms (breaks byte determinism)
    int max_pairs_bruteforce = 12;

    Json to_json() const;
    static ExperimentConfig from_json(const Json& j);
    void validate() const;
};

struct TrialRow {
    std::uint64_t seed = 0;
    int H = 0, d = 0, m = 0, n_pairs = 0;
    double realized_rho = 0.0, realized_delta = 0.0, delta_r = 0.0;
    std::int64_t dim_e = 0;
    bool premise_satisfied = false;
    bool matched_pi_star = false;
    bool success = false;
    double value_at_root = 0.0, v_star_root = 0.0;
    std::int64_t recur_line_executions = 0, data_additions = 0, y_size = 0, oracle_calls = 0,
                 explore_calls = 0, reward_samples = 0, estimate_events = 0, env_steps = 0;
    double bound_data_additions = 0.0, bound_y_size = 0.0;
    double max_return_error = 0.0, max_label_error = 0.0, max_fit_error = 0.0;
    // eluder mode: dimensions at eps_small < eps_large plus the two checks
    double eps_small = 0.0, eps_large = 0.0;
    std::int64_t dim_at_small = 0, dim_at_large = 0, greedy_at_small = 0;
    bool mono_ok = true, greedy_le_ok = true;
    std::int64_t wall_ms = 0;
    std::string error;
};

struct Report {
    ExperimentConfig config;
    std::vector<TrialRow> rows;

    int successes() const;
    int premise_rows() const;
    Json to_json() const;
    static Report from_json(const Json& j);
};

// Runs one trial per seed: synthesize the instance, compute ground truth
// and realized (rho, delta), run the configured agent, and record outcome,
// counters and evaluated bounds. Deterministic for a fixed config.
Report run_sweep(const ExperimentConfig& config);

// Fixed-column CSV (header row mandatory, reals at 17 significant digits).
std::string report_to_csv(const Report& report);
std::string report_to_pretty_json(const Report& report);

struct VerifyLine {
    std::string name;
    double bound = 0.0;
    double observed = 0.0;
    bool pass = false;
    std::vector<std::uint64_t> offending_seeds;
};

struct VerifySummary {
    std::vector<VerifyLine> lines;
    bool overall = true;
    std::string to_string() const;
};

// Re-evaluates every applicable closed-form bound and success claim against
// the report rows. Rows whose premise flag is false are never asserted on.
VerifySummary verify_bounds(const Report& report);

}  // namespace agnosticq
