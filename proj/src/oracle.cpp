#include "agnosticq/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace agnosticq {

void Dataset::append(StateId s, int a, double label, bool allow_repeats) {
    for (const auto& e : entries_) {
        if (e.state == s && e.action == a) {
            if (!allow_repeats)
                throw std::logic_error("dataset repeat: the exploration loop revisited a pair");
            if (std::abs(e.label - label) > 1e-12)
                throw std::logic_error("dataset repeat with a conflicting label");
        }
    }
    entries_.push_back({s, a, label});
}

OracleAnswer max_uncertainty_finite(StateId s, double delta_prime, const Dataset& data,
                                    const FiniteClass& cls, int num_actions) {
    if (delta_prime < 0.0) throw std::invalid_argument("delta_prime must be non-negative");
    const int m = cls.size();
    const double cap = delta_prime * delta_prime;

    // Pair feasibility is independent of the queried action.
    std::vector<std::pair<int, int>> feasible;
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            double sum = 0.0;
            for (const auto& e : data.entries()) {
                const double diff = cls.eval(i, e.state, e.action) - cls.eval(j, e.state, e.action);
                sum += diff * diff;
            }
            if (data.empty() || sum <= cap * data.size()) feasible.push_back({i, j});
        }
    }

    OracleAnswer best;
    best.action = 0;
    best.uncertainty = -1.0;
    for (int a = 0; a < num_actions; ++a) {
        for (const auto& [i, j] : feasible) {
            const double u = std::abs(cls.eval(i, s, a) - cls.eval(j, s, a));
            if (u > best.uncertainty) {
                best = OracleAnswer{a, u, i, j, {}};
            }
        }
    }
    if (best.uncertainty < 0.0) best = OracleAnswer{0, 0.0, 0, 0, {}};  // unreachable: (i,i) is feasible
    return best;
}

double max_linear_disagreement(const Eigen::MatrixXd& gram, double c2,
                               const Eigen::VectorXd& target, Eigen::VectorXd* argmax) {
    const int d = static_cast<int>(target.size());
    if (argmax) *argmax = Eigen::VectorXd::Zero(d);
    const double p_norm = target.norm();
    if (p_norm < 1e-300) return 0.0;

    // Ball-only candidate: if the ellipsoid admits it, it is the optimum.
    Eigen::VectorXd ball = (2.0 / p_norm) * target;
    if (ball.dot(gram * ball) <= c2 * (1.0 + 1e-12) + 1e-300) {
        if (argmax) *argmax = ball;
        return 2.0 * p_norm;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    const double lam_max = lam.maxCoeff();
    const double lam_tol = 1e-12 * std::max(lam_max, 1.0);
    Eigen::VectorXd pt = eig.eigenvectors().transpose() * target;

    double null_sq = 0.0, range_sq = 0.0;
    for (int i = 0; i < d; ++i) {
        if (lam[i] <= lam_tol) null_sq += pt[i] * pt[i];
        else range_sq += pt[i] * pt[i];
    }

    // Degenerate ellipsoid: only kernel directions are admissible.
    if (c2 <= 0.0) {
        if (null_sq < 1e-300) return 0.0;
        if (argmax) {
            Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
            for (int i = 0; i < d; ++i)
                if (lam[i] <= lam_tol) dir[i] = pt[i];
            *argmax = eig.eigenvectors() * dir * (2.0 / std::sqrt(null_sq));
        }
        return 2.0 * std::sqrt(null_sq);
    }

    // Ellipsoid-only candidate, available when the target lies in the range.
    if (null_sq <= 1e-24 * std::max(range_sq, 1.0)) {
        double quad = 0.0, quad2 = 0.0;  // p^T G^+ p and p^T G^+ G^+ p
        for (int i = 0; i < d; ++i) {
            if (lam[i] <= lam_tol) continue;
            quad += pt[i] * pt[i] / lam[i];
            quad2 += pt[i] * pt[i] / (lam[i] * lam[i]);
        }
        if (quad > 0.0 && c2 * quad2 / quad <= 4.0 * (1.0 + 1e-12)) {
            const double val = std::sqrt(c2 * quad);
            if (argmax) {
                Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
                for (int i = 0; i < d; ++i)
                    if (lam[i] > lam_tol) dir[i] = pt[i] / lam[i];
                *argmax = eig.eigenvectors() * dir * (std::sqrt(c2 / quad));
            }
            return val;
        }
    }

    // Both constraints active. The direction family (G + nu I)^-1 p sweeps
    // the KKT solutions; the constraint ratio r(nu) rises monotonically with
    // nu, so bisect for r(nu) = c2 / 4.
    const double target_ratio = c2 / 4.0;
    auto ratio = [&](double nu) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < d; ++i) {
            const double w = pt[i] / (lam[i] + nu);
            num += lam[i] * w * w;
            den += w * w;
        }
        return num / den;
    };
    double lo = 1e-18 * std::max(lam_max, 1.0), hi = 1e18 * std::max(lam_max, 1.0);
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (ratio(mid) < target_ratio) lo = mid;
        else hi = mid;
    }
    const double nu = std::sqrt(lo * hi);
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) dir[i] = pt[i] / (lam[i] + nu);
    const double scale = 2.0 / dir.norm();
    const double value = scale * pt.dot(dir);
    if (argmax) *argmax = eig.eigenvectors() * dir * scale;
    return value;
}

OracleAnswer max_uncertainty_linear(StateId s, double delta_prime, const Dataset& data,
                                    const LinearClass& cls, int num_actions) {
    if (delta_prime < 0.0) throw std::invalid_argument("delta_prime must be non-negative");
    const int d = cls.features.d;
    OracleAnswer best;
    best.action = 0;
    best.uncertainty = -1.0;

    if (data.empty()) {
        // Vacuous constraint: the norm ball alone binds.
        for (int a = 0; a < num_actions; ++a) {
            const auto& p = cls.features.at(s, a);
            const double u = 2.0 * p.norm();
            if (u > best.uncertainty) {
                best.action = a;
                best.uncertainty = u;
                best.witness_delta_theta =
                    p.norm() > 1e-300 ? Eigen::VectorXd((2.0 / p.norm()) * p)
                                      : Eigen::VectorXd::Zero(d);
            }
        }
        return best;
    }

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    for (const auto& e : data.entries()) {
        const auto& phi = cls.features.at(e.state, e.action);
        gram += phi * phi.transpose();
    }
    const double c2 = static_cast<double>(data.size()) * delta_prime * delta_prime;

    for (int a = 0; a < num_actions; ++a) {
        Eigen::VectorXd arg;
        const double u = max_linear_disagreement(gram, c2, cls.features.at(s, a), &arg);
        if (u > best.uncertainty) {
            best.action = a;
            best.uncertainty = u;
            best.witness_delta_theta = arg;
        }
    }
    return best;
}

}  // namespace agnosticq
