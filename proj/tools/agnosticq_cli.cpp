#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "agnosticq/harness.hpp"

using namespace agnosticq;

namespace {

std::uint64_t env_master_seed() {
    const char* s = std::getenv("AGNOSTICQ_SEED");
    return s ? std::strtoull(s, nullptr, 10) : 0;
}

void emit(const Json& j, const std::string& out_path) {
    const std::string text = dump_json17(j, 2);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text_file(out_path, text);
    }
}

Json policy_to_json(const Policy& p) {
    Json j = Json::array();
    for (const auto& level : p) j.push_back(level);
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agnosticq: recursion-based exploration agents on deterministic episodic MDPs"};
    app.require_subcommand(1);

    // ---- gen -------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate an MDP (and optionally features / a class)");
    std::uint64_t gen_seed = env_master_seed();
    int gen_h = 3, gen_actions = 2;
    std::vector<int> gen_widths;
    double gen_gap = 0.3, gen_max_path = 0.9;
    double gen_noise_w = -1.0;
    std::uint64_t gen_noise_seed = 0;
    std::string gen_out, gen_features_out, gen_theta_out, gen_class_out;
    int gen_features_d = 0, gen_class_m = 0;
    double gen_features_delta = 0.0, gen_class_delta = 0.0;
    gen->add_option("--seed", gen_seed, "generator seed (default: AGNOSTICQ_SEED)");
    gen->add_option("--horizon", gen_h, "number of levels")->required();
    gen->add_option("--widths", gen_widths, "states per level, e.g. --widths 1,2,2")
        ->delimiter(',')
        ->required();
    gen->add_option("--actions", gen_actions, "actions per state");
    gen->add_option("--gap", gen_gap, "target optimality gap");
    gen->add_option("--max-path-sum", gen_max_path, "reward budget along any path");
    gen->add_option("--stochastic-width", gen_noise_w, "wrap rewards in two-point noise");
    gen->add_option("--noise-seed", gen_noise_seed, "seed for the noise widths");
    gen->add_option("--out", gen_out, "MDP output file (stdout otherwise)");
    gen->add_option("--features-d", gen_features_d, "emit a linear feature map of this dimension");
    gen->add_option("--features-delta", gen_features_delta, "feature-map approximation error");
    gen->add_option("--features-out", gen_features_out, "feature map output file");
    gen->add_option("--theta-out", gen_theta_out, "witness parameter output file");
    gen->add_option("--class-size", gen_class_m, "emit a finite class of this size");
    gen->add_option("--class-delta", gen_class_delta, "finite-class approximation error");
    gen->add_option("--class-out", gen_class_out, "finite class output file");

    // ---- solve -----------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "exact ground truth by backward induction");
    std::string solve_mdp, solve_out;
    solve->add_option("--mdp", solve_mdp)->required();
    solve->add_option("--out", solve_out);

    // ---- learn-linear ----------------------------------------------------
    auto* ll = app.add_subcommand("learn-linear", "run the linear-class agent");
    std::string ll_mdp, ll_features, ll_out, ll_log_base = "e";
    double ll_rho = 0.0;
    bool ll_memoize = false;
    ll->add_option("--mdp", ll_mdp)->required();
    ll->add_option("--features", ll_features)->required();
    ll->add_option("--rho", ll_rho)->required();
    ll->add_flag("--memoize", ll_memoize);
    ll->add_option("--log-base", ll_log_base, "log base for the reported bound (e|2|10)");
    ll->add_option("--out", ll_out);

    // ---- learn-general ---------------------------------------------------
    auto* lg = app.add_subcommand("learn-general", "run the general-class agent");
    std::string lg_mdp, lg_class, lg_out;
    double lg_rho = 0.0, lg_delta = 0.0;
    lg->add_option("--mdp", lg_mdp)->required();
    lg->add_option("--class", lg_class)->required();
    lg->add_option("--rho", lg_rho)->required();
    lg->add_option("--delta", lg_delta)->required();
    lg->add_option("--out", lg_out);

    // ---- learn-stochastic --------------------------------------------------
    auto* ls = app.add_subcommand("learn-stochastic", "run the stochastic-reward agent");
    std::string ls_mdp, ls_class, ls_out;
    double ls_rho = 0.0, ls_delta = 0.0, ls_delta_r = 0.0, ls_p = 0.1;
    std::int64_t ls_dim_e = -1;
    std::uint64_t ls_seed = env_master_seed();
    ls->add_option("--mdp", ls_mdp)->required();
    ls->add_option("--class", ls_class)->required();
    ls->add_option("--rho", ls_rho)->required();
    ls->add_option("--delta", ls_delta)->required();
    ls->add_option("--delta-r", ls_delta_r)->required();
    ls->add_option("--p", ls_p);
    ls->add_option("--dim-e", ls_dim_e, "eluder dimension (computed when the domain is small)");
    ls->add_option("--seed", ls_seed, "reward stream seed");
    ls->add_option("--out", ls_out);

    // ---- eluder ------------------------------------------------------------
    auto* el = app.add_subcommand("eluder", "eluder dimension of a finite class");
    std::string el_class, el_out;
    double el_eps = 0.0;
    el->add_option("--class", el_class)->required();
    el->add_option("--eps", el_eps)->required();
    el->add_option("--out", el_out);

    // ---- sweep -------------------------------------------------------------
    auto* sw = app.add_subcommand("sweep", "run a seeded experiment sweep");
    std::string sw_config, sw_prefix = "report", sw_mode;
    std::int64_t sw_trials = -1;
    bool sw_seed_given = false;
    std::uint64_t sw_seed = 0;
    sw->add_option("--config", sw_config, "config JSON file");
    sw->add_option("--out-prefix", sw_prefix, "writes <prefix>.csv and <prefix>.json");
    sw->add_option("--mode", sw_mode, "override: linear|general|stochastic|eluder");
    sw->add_option("--trials", sw_trials, "override trial count");
    sw->add_option("--seed", sw_seed, "override master seed")->each([&](const std::string&) {
        sw_seed_given = true;
    });

    // ---- verify ------------------------------------------------------------
    auto* vf = app.add_subcommand("verify", "re-check bounds and success claims of a report");
    std::string vf_report;
    vf->add_option("--report", vf_report)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            DeterministicMdp mdp =
                gen_mdp(gen_seed, gen_h, gen_widths, gen_actions, gen_gap, gen_max_path);
            if (gen_noise_w >= 0.0)
                mdp = gen_stochastic_rewards(mdp, gen_noise_seed, TwoPointNoise::fixed(gen_noise_w));
            emit(mdp.to_json(), gen_out);
            if (gen_features_d > 0 || gen_class_m > 0) {
                GroundTruth truth = solve_dp(mdp);
                if (gen_features_d > 0) {
                    auto lin = gen_linear_features(truth, gen_features_d, gen_features_delta,
                                                   mix_seed(gen_seed, 101));
                    emit(lin.features.to_json(), gen_features_out);
                    if (!gen_theta_out.empty()) {
                        Json jt = Json::array();
                        for (int i = 0; i < lin.theta_star.size(); ++i)
                            jt.push_back(lin.theta_star[i]);
                        emit(jt, gen_theta_out);
                    }
                }
                if (gen_class_m > 0) {
                    auto cls = gen_finite_class(truth, gen_class_m, gen_class_delta,
                                                mix_seed(gen_seed, 102));
                    emit(cls.to_json(), gen_class_out);
                }
            }
        } else if (solve->parsed()) {
            DeterministicMdp mdp = DeterministicMdp::from_json(load_json_file(solve_mdp));
            GroundTruth truth = solve_dp(mdp);
            Json j;
            j["gap"] = truth.gap;
            j["v_star_root"] = truth.v({0, mdp.initial_state});
            j["v_star"] = truth.v_star;
            j["q_star"] = truth.q_star;
            j["pi_star"] = truth.pi_star;
            emit(j, solve_out);
        } else if (ll->parsed()) {
            DeterministicMdp mdp = DeterministicMdp::from_json(load_json_file(ll_mdp));
            FeatureMap features = FeatureMap::from_json(load_json_file(ll_features));
            GroundTruth truth = solve_dp(mdp);
            Env env(mdp);
            auto res = learn_linear(env, features, ll_rho, {ll_memoize, 64});
            Json j;
            j["policy"] = policy_to_json(res.policy);
            j["recur_line_executions"] = res.stats.recur_line_executions;
            j["data_additions"] = res.stats.data_additions;
            j["matched_pi_star"] = policy_matches_optimal(mdp, truth, res.policy);
            j["value_at_root"] = res.stats.value_at_root;
            j["bound_data_additions"] = lemma1_bound(features.d, ll_rho, ll_log_base);
            emit(j, ll_out);
        } else if (lg->parsed()) {
            DeterministicMdp mdp = DeterministicMdp::from_json(load_json_file(lg_mdp));
            FiniteClass cls = FiniteClass::from_json(load_json_file(lg_class));
            GroundTruth truth = solve_dp(mdp);
            Env env(mdp);
            auto res = learn_general(env, AnyClass{cls}, lg_rho, lg_delta);
            Json j;
            j["policy"] = policy_to_json(res.policy);
            j["y_size"] = res.stats.y_size;
            j["oracle_calls"] = res.stats.oracle_calls;
            j["reward_samples"] = res.stats.reward_samples;
            j["matched_pi_star"] = policy_matches_optimal(mdp, truth, res.policy);
            j["value_at_root"] = res.stats.value_at_root;
            emit(j, lg_out);
        } else if (ls->parsed()) {
            DeterministicMdp mdp = DeterministicMdp::from_json(load_json_file(ls_mdp));
            FiniteClass cls = FiniteClass::from_json(load_json_file(ls_class));
            GroundTruth truth = solve_dp(mdp);
            StochasticConfig cfg;
            cfg.delta_r = ls_delta_r;
            cfg.p = ls_p;
            if (ls_dim_e >= 1) {
                cfg.dim_e_value = ls_dim_e;
            } else {
                const auto dom = cls.domain();
                if (dom.size() > 12)
                    throw std::invalid_argument(
                        "domain too large for brute-force dim_E; pass --dim-e");
                cfg.dim_e_value =
                    std::max<std::int64_t>(1, eluder_dim_bruteforce(cls, dom, ls_rho / 4.0));
            }
            Env env(mdp, mix_seed(ls_seed, 31));
            auto res = learn_stochastic(env, AnyClass{cls}, ls_rho, ls_delta, cfg);
            Json j;
            j["policy"] = policy_to_json(res.policy);
            j["y_size"] = res.stats.y_size;
            j["oracle_calls"] = res.stats.oracle_calls;
            j["reward_samples"] = res.stats.reward_samples;
            j["estimate_events"] = res.stats.estimate_events;
            j["n_per_estimate"] = cfg.n_samples(mdp.horizon);
            j["dim_e_value"] = cfg.dim_e_value;
            j["matched_pi_star"] = policy_matches_optimal(mdp, truth, res.policy);
            j["value_at_root"] = res.stats.value_at_root;
            emit(j, ls_out);
        } else if (el->parsed()) {
            FiniteClass cls = FiniteClass::from_json(load_json_file(el_class));
            const auto dom = cls.domain();
            Json j;
            j["dim_bruteforce"] = eluder_dim_bruteforce(cls, dom, el_eps);
            j["dim_greedy"] = eluder_dim_greedy(cls, dom, el_eps);
            j["domain_size"] = static_cast<int>(dom.size());
            emit(j, el_out);
        } else if (sw->parsed()) {
            Json raw = sw_config.empty() ? Json::object() : load_json_file(sw_config);
            if (!raw.contains("master_seed")) raw["master_seed"] = env_master_seed();
            ExperimentConfig cfg = ExperimentConfig::from_json(raw);
            if (!sw_mode.empty()) cfg.mode = sw_mode;
            if (sw_trials > 0) cfg.trials = static_cast<int>(sw_trials);
            if (sw_seed_given) cfg.master_seed = sw_seed;
            cfg.validate();
            Report report = run_sweep(cfg);
            write_text_file(sw_prefix + ".csv", report_to_csv(report));
            write_text_file(sw_prefix + ".json", report_to_pretty_json(report));
            VerifySummary summary = verify_bounds(report);
            std::cout << summary.to_string();
            return summary.overall ? 0 : 1;
        } else if (vf->parsed()) {
            Report report = Report::from_json(load_json_file(vf_report));
            VerifySummary summary = verify_bounds(report);
            std::cout << summary.to_string();
            return summary.overall ? 0 : 1;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 0;
}
