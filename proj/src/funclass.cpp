#include "agnosticq/funclass.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agnosticq {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

template <typename Table>
std::vector<SaPair> domain_of(const Table& t) {
    std::vector<SaPair> out;
    for (int h = 0; h < static_cast<int>(t.size()); ++h)
        for (int s = 0; s < static_cast<int>(t[h].size()); ++s)
            for (int a = 0; a < static_cast<int>(t[h][s].size()); ++a)
                out.push_back({StateId{h, s}, a});
    return out;
}

}  // namespace

std::vector<SaPair> FeatureMap::domain() const { return domain_of(phi); }
std::vector<SaPair> FiniteClass::domain() const {
    require(!functions.empty(), "empty function class");
    return domain_of(functions.front());
}

void FeatureMap::validate() const {
    for (const auto& level : phi)
        for (const auto& state : level)
            for (const auto& v : state) {
                require(v.size() == d, "feature vector has wrong dimension");
                require(v.norm() <= 1.0 + 1e-12, "feature norm exceeds 1");
            }
}

Json FeatureMap::to_json() const {
    Json j;
    j["d"] = d;
    Json table = Json::array();
    for (const auto& level : phi) {
        Json jl = Json::array();
        for (const auto& state : level) {
            Json js = Json::array();
            for (const auto& v : state) {
                Json jv = Json::array();
                for (int i = 0; i < v.size(); ++i) jv.push_back(v[i]);
                js.push_back(std::move(jv));
            }
            jl.push_back(std::move(js));
        }
        table.push_back(std::move(jl));
    }
    j["phi"] = std::move(table);
    return j;
}

FeatureMap FeatureMap::from_json(const Json& j) {
    FeatureMap m;
    m.d = j.at("d").get<int>();
    for (const auto& jl : j.at("phi")) {
        std::vector<std::vector<Eigen::VectorXd>> level;
        for (const auto& js : jl) {
            std::vector<Eigen::VectorXd> state;
            for (const auto& jv : js) {
                Eigen::VectorXd v(jv.size());
                for (std::size_t i = 0; i < jv.size(); ++i) v[static_cast<int>(i)] = jv[i].get<double>();
                state.push_back(std::move(v));
            }
            level.push_back(std::move(state));
        }
        m.phi.push_back(std::move(level));
    }
    m.validate();
    return m;
}

Json FiniteClass::to_json() const {
    Json arr = Json::array();
    for (const auto& fn : functions) arr.push_back(fn);
    return arr;
}

FiniteClass FiniteClass::from_json(const Json& j) {
    FiniteClass c;
    for (const auto& jf : j) c.functions.push_back(jf.get<QTable>());
    require(!c.functions.empty(), "empty function class");
    return c;
}

ApproxErrorReport compute_approx_error(const FiniteClass& cls, const GroundTruth& truth) {
    require(!cls.functions.empty(), "empty function class");
    ApproxErrorReport rep;
    rep.delta = std::numeric_limits<double>::infinity();
    for (int f = 0; f < cls.size(); ++f) {
        double sup = 0.0;
        for (const auto& [s, a] : cls.domain())
            sup = std::max(sup, std::abs(cls.eval(f, s, a) - truth.q(s, a)));
        if (sup < rep.delta) {
            rep.delta = sup;
            rep.witness_index = f;
        }
    }
    return rep;
}

namespace {

// Feasibility of sup_i |theta^T x_i - y_i| <= level over the unit ball:
// minimizes the squared hinge excess by accelerated projected gradient and
// declares feasible when the excess reaches ~0. Returns the best iterate.
struct FeasibilityResult {
    bool feasible = false;
    Eigen::VectorXd theta;
};

FeasibilityResult sup_fit_feasible(const std::vector<Eigen::VectorXd>& xs,
                                   const std::vector<double>& ys, double level,
                                   const Eigen::VectorXd& warm, double lipschitz) {
    const int d = static_cast<int>(warm.size());
    const int n = static_cast<int>(xs.size());
    Eigen::VectorXd theta = warm, momentum = warm;
    double t_prev = 1.0;
    const double step = 1.0 / std::max(lipschitz, 1e-12);
    double f_best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best = warm;
    for (int iter = 0; iter < 4000; ++iter) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < n; ++i) {
            const double r = momentum.dot(xs[i]) - ys[i];
            const double excess = std::abs(r) - level;
            if (excess > 0.0) grad += (2.0 * excess * (r > 0 ? 1.0 : -1.0)) * xs[i];
        }
        Eigen::VectorXd theta_next = momentum - step * grad;
        const double nrm = theta_next.norm();
        if (nrm > 1.0) theta_next /= nrm;
        // objective at the new point for the stopping test
        double f_next = 0.0;
        for (int i = 0; i < n; ++i) {
            const double excess = std::abs(theta_next.dot(xs[i]) - ys[i]) - level;
            if (excess > 0.0) f_next += excess * excess;
        }
        if (f_next < f_best) {
            f_best = f_next;
            best = theta_next;
        }
        if (f_best <= 1e-18) break;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
        momentum = theta_next + ((t_prev - 1.0) / t_next) * (theta_next - theta);
        theta = theta_next;
        t_prev = t_next;
    }
    return {f_best <= 1e-16, best};
}

double sup_error(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys,
                 const Eigen::VectorXd& theta) {
    double sup = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        sup = std::max(sup, std::abs(theta.dot(xs[i]) - ys[i]));
    return sup;
}

}  // namespace

ApproxErrorReport compute_approx_error(const LinearClass& cls, const GroundTruth& truth) {
    const auto dom = cls.features.domain();
    const int d = cls.features.d;
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    xs.reserve(dom.size());
    for (const auto& [s, a] : dom) {
        xs.push_back(cls.features.at(s, a));
        ys.push_back(truth.q(s, a));
    }

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd A(static_cast<int>(xs.size()), d);
    Eigen::VectorXd b(static_cast<int>(xs.size()));
    for (int i = 0; i < static_cast<int>(xs.size()); ++i) {
        gram += xs[i] * xs[i].transpose();
        A.row(i) = xs[i];
        b[i] = ys[i];
    }
    const double lipschitz =
        2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff();

    // start from the min-norm least-squares fit projected onto the ball
    Eigen::VectorXd theta = A.completeOrthogonalDecomposition().solve(b);
    if (theta.norm() > 1.0) theta /= theta.norm();

    double hi = sup_error(xs, ys, theta);
    double lo = 0.0;
    Eigen::VectorXd witness = theta;
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        auto res = sup_fit_feasible(xs, ys, mid, witness, lipschitz);
        if (res.feasible) {
            witness = res.theta;
            hi = std::min(hi, sup_error(xs, ys, witness));
        } else {
            lo = mid;
        }
        if (hi <= lo) break;
    }

    ApproxErrorReport rep;
    rep.delta = sup_error(xs, ys, witness);
    rep.upper_bound = true;
    rep.witness_theta = witness;
    return rep;
}

ApproxErrorReport compute_approx_error(const AnyClass& cls, const GroundTruth& truth) {
    return std::visit([&](const auto& c) { return compute_approx_error(c, truth); }, cls);
}

LinearInstance gen_linear_features(const GroundTruth& truth, int d, double delta_target,
                                   std::uint64_t seed) {
    require(d >= 2, "feature dimension must be at least 2");
    require(delta_target >= 0.0, "delta_target must be non-negative");
    double max_abs_q = 0.0;
    for (const auto& level : truth.q_star)
        for (const auto& state : level)
            for (double q : state) max_abs_q = std::max(max_abs_q, std::abs(q));

    double sigma = max_abs_q + delta_target;
    require(sigma <= 1.0 + 1e-12,
            "infeasible: max|Q*| + delta_target exceeds 1, no unit-norm witness exists");
    if (sigma < 1e-12) sigma = 1.0;

    LinearInstance out;
    out.theta_star = Eigen::VectorXd::Zero(d);
    out.theta_star[0] = sigma;
    out.features.d = d;

    Rng rng(mix_seed(seed, 5));
    out.features.phi.resize(truth.q_star.size());
    double sup = 0.0;
    for (std::size_t h = 0; h < truth.q_star.size(); ++h) {
        out.features.phi[h].resize(truth.q_star[h].size());
        for (std::size_t s = 0; s < truth.q_star[h].size(); ++s) {
            for (double q : truth.q_star[h][s]) {
                const double b = (2.0 * rng.uniform() - 1.0) * delta_target;
                Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
                v[0] = (q + b) / sigma;
                Eigen::VectorXd tail(d - 1);
                for (int i = 0; i < d - 1; ++i) tail[i] = rng.normal();
                const double tail_cap = std::sqrt(std::max(0.0, 1.0 - v[0] * v[0]));
                const double tail_norm = tail.norm();
                if (tail_norm > 1e-12 && tail_cap > 0.0)
                    v.tail(d - 1) = tail * (tail_cap * rng.uniform(0.3, 0.9) / tail_norm);
                out.features.phi[h][s].push_back(std::move(v));
                sup = std::max(sup,
                               std::abs(out.theta_star.dot(out.features.phi[h][s].back()) - q));
            }
        }
    }
    out.features.validate();
    out.witness_sup_error = sup;
    return out;
}

FiniteClass gen_finite_class(const GroundTruth& truth, int class_size, double delta_target,
                             std::uint64_t seed) {
    require(class_size >= 1, "class size must be at least 1");
    require(delta_target >= 0.0, "delta_target must be non-negative");
    Rng rng(mix_seed(seed, 6));
    const int witness_slot = static_cast<int>(rng.uniform_index(class_size));
    FiniteClass cls;
    for (int f = 0; f < class_size; ++f) {
        const double amp = f == witness_slot ? delta_target : rng.uniform(0.08, 0.35);
        QTable table = truth.q_star;
        for (auto& level : table)
            for (auto& state : level)
                for (double& q : state) q += (2.0 * rng.uniform() - 1.0) * amp;
        cls.functions.push_back(std::move(table));
    }
    return cls;
}

bool is_eps_dependent(const SaPair& pair, const std::vector<SaPair>& predecessors,
                      const FiniteClass& cls, double eps) {
    require(eps > 0.0, "eps must be positive");
    const double eps2 = eps * eps;
    const int m = cls.size();
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            double sum = 0.0;
            for (const auto& [ps, pa] : predecessors) {
                const double diff = cls.eval(i, ps, pa) - cls.eval(j, ps, pa);
                sum += diff * diff;
            }
            if (sum > eps2) continue;  // premise fails, implication vacuous
            const double here = cls.eval(i, pair.first, pair.second) - cls.eval(j, pair.first, pair.second);
            if (here * here > eps2) return false;
        }
    }
    return true;
}

namespace {

// Half-open intervals [lo, hi), kept sorted and disjoint.
using Intervals = std::vector<std::pair<double, double>>;

Intervals intersect(const Intervals& a, const Intervals& b) {
    Intervals out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double lo = std::max(a[i].first, b[j].first);
        const double hi = std::min(a[i].second, b[j].second);
        if (lo < hi) out.push_back({lo, hi});
        (a[i].second < b[j].second ? i : j) += 1;
    }
    return out;
}

// Precomputed |f_i - f_j| per unordered pair per domain point.
struct DiffTable {
    int n_points = 0;
    std::vector<std::vector<double>> diffs;  // [pair][point]

    DiffTable(const FiniteClass& cls, const std::vector<SaPair>& domain) {
        n_points = static_cast<int>(domain.size());
        const int m = cls.size();
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                std::vector<double> row(n_points);
                for (int p = 0; p < n_points; ++p)
                    row[p] = std::abs(cls.eval(i, domain[p].first, domain[p].second) -
                                      cls.eval(j, domain[p].first, domain[p].second));
                diffs.push_back(std::move(row));
            }
    }

    // Union over function pairs of the eps' ranges under which `point` is
    // independent of the prefix: [sqrt(prefix sum), diff at point).
    Intervals admissible(int point, const std::vector<double>& prefix_sums) const {
        Intervals raw;
        for (std::size_t pr = 0; pr < diffs.size(); ++pr) {
            const double hi = diffs[pr][point];
            // the backtracking add/remove round trips can leave -1e-17 residue
            const double lo = std::sqrt(std::max(0.0, prefix_sums[pr]));
            if (hi > lo) raw.push_back({lo, hi});
        }
        std::sort(raw.begin(), raw.end());
        Intervals merged;
        for (const auto& iv : raw) {
            if (!merged.empty() && iv.first <= merged.back().second)
                merged.back().second = std::max(merged.back().second, iv.second);
            else
                merged.push_back(iv);
        }
        return merged;
    }
};

struct EluderSearch {
    const DiffTable& table;
    int best = 0;
    std::uint64_t nodes = 0;
    static constexpr std::uint64_t kNodeBudget = 20'000'000;

    void dfs(std::vector<char>& used, int length, const Intervals& valid,
             std::vector<double>& prefix_sums) {
        best = std::max(best, length);
        if (++nodes > kNodeBudget)
            throw std::runtime_error("eluder search exceeded its node budget");
        int remaining = 0;
        for (char u : used) remaining += u ? 0 : 1;
        if (length + remaining <= best) return;
        for (int p = 0; p < table.n_points; ++p) {
            if (used[p]) continue;
            Intervals next = intersect(valid, table.admissible(p, prefix_sums));
            if (next.empty()) continue;
            used[p] = 1;
            for (std::size_t pr = 0; pr < table.diffs.size(); ++pr) {
                const double dv = table.diffs[pr][p];
                prefix_sums[pr] += dv * dv;
            }
            dfs(used, length + 1, next, prefix_sums);
            for (std::size_t pr = 0; pr < table.diffs.size(); ++pr) {
                const double dv = table.diffs[pr][p];
                prefix_sums[pr] -= dv * dv;
            }
            used[p] = 0;
        }
    }
};

}  // namespace

int eluder_dim_bruteforce(const FiniteClass& cls, const std::vector<SaPair>& domain, double eps) {
    require(eps > 0.0, "eps must be positive");
    require(domain.size() <= 12, "eluder_dim_bruteforce domain guard: at most 12 pairs");
    require(!cls.functions.empty(), "empty function class");
    if (cls.size() == 1 || domain.empty()) return 0;
    DiffTable table(cls, domain);
    EluderSearch search{table};
    std::vector<char> used(domain.size(), 0);
    std::vector<double> prefix_sums(table.diffs.size(), 0.0);
    Intervals valid{{eps, std::numeric_limits<double>::infinity()}};
    search.dfs(used, 0, valid, prefix_sums);
    return search.best;
}

int eluder_dim_greedy(const FiniteClass& cls, const std::vector<SaPair>& domain, double eps) {
    require(eps > 0.0, "eps must be positive");
    require(!cls.functions.empty(), "empty function class");
    if (cls.size() == 1 || domain.empty()) return 0;
    DiffTable table(cls, domain);
    std::vector<double> prefix_sums(table.diffs.size(), 0.0);
    Intervals valid{{eps, std::numeric_limits<double>::infinity()}};
    int length = 0;
    for (int p = 0; p < table.n_points; ++p) {
        Intervals next = intersect(valid, table.admissible(p, prefix_sums));
        if (next.empty()) continue;
        valid = std::move(next);
        for (std::size_t pr = 0; pr < table.diffs.size(); ++pr) {
            const double dv = table.diffs[pr][p];
            prefix_sums[pr] += dv * dv;
        }
        ++length;
    }
    return length;
}

}  // namespace agnosticq
