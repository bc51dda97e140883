#include "obmimo/nnls.hpp"

#include "obmimo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace obmimo {

namespace {

// The warm start may activate a large fraction of the columns on wide
// problems; cap the seeded support so the first restricted factorization
// stays bounded. The active-set phase grows the support further if needed.
constexpr int kWarmSupportCap = 128;

void validate_problem(const NnlsProblem& p) {
    if (p.design.rows() < 1 || p.design.cols() < 1)
        throw DimensionMismatch("nnls: design matrix must be nonempty");
    if (p.target.size() != p.design.rows())
        throw DimensionMismatch("nnls: target length does not match design rows");
    if (!p.design.allFinite() || !p.target.allFinite())
        throw NonFinite("nnls: design or target contains a non-finite value");
    if (!(p.tolerance > 0.0))
        throw std::invalid_argument("nnls: tolerance must be positive");
    if (p.max_iterations < 0)
        throw std::invalid_argument("nnls: max_iterations must be >= 0");
}

// Least squares on the active columns, ascending index order.
RVec restricted_ls(const RMat& a, const RVec& b, const std::vector<int>& passive) {
    RMat ap(a.rows(), Eigen::Index(passive.size()));
    for (std::size_t k = 0; k < passive.size(); ++k)
        ap.col(Eigen::Index(k)) = a.col(passive[k]);
    return ap.colPivHouseholderQr().solve(b);
}

} // namespace

NnlsSolution nnls_solve(const NnlsProblem& p) {
    validate_problem(p);
    const RMat& a = p.design;
    const RVec& b = p.target;
    const int n = int(a.cols());
    const int max_iter = p.max_iterations > 0 ? p.max_iterations : 10 * n;

    const double grad_scale = (a.transpose() * b).cwiseAbs().maxCoeff();
    const double kkt_tol =
        p.tolerance * std::max(grad_scale, std::numeric_limits<double>::min());

    RVec x = RVec::Zero(n);

    // Projected-gradient sweeps. Exact line search along the projected
    // direction; each sweep is one step plus a clip to the nonnegative cone.
    for (int sweep = 0; sweep < 3; ++sweep) {
        const RVec g = a.transpose() * (a * x - b);
        RVec d = RVec::Zero(n);
        for (int i = 0; i < n; ++i)
            if (x(i) > 0.0 || g(i) < 0.0)
                d(i) = -g(i);
        const double d2 = d.squaredNorm();
        if (d2 <= 0.0)
            break;
        const double ad2 = (a * d).squaredNorm();
        if (ad2 <= 0.0)
            break;
        x = (x + (d2 / ad2) * d).cwiseMax(0.0);
    }

    std::vector<char> in_passive(n, 0);
    std::vector<int> passive;
    {
        std::vector<int> support;
        for (int i = 0; i < n; ++i)
            if (x(i) > 0.0)
                support.push_back(i);
        if (int(support.size()) > kWarmSupportCap) {
            std::partial_sort(support.begin(), support.begin() + kWarmSupportCap,
                              support.end(),
                              [&x](int l, int r) { return x(l) != x(r) ? x(l) > x(r) : l < r; });
            for (std::size_t k = kWarmSupportCap; k < support.size(); ++k)
                x(support[k]) = 0.0;
            support.resize(kWarmSupportCap);
            std::sort(support.begin(), support.end());
        }
        passive = std::move(support);
        for (int i : passive)
            in_passive[i] = 1;
    }

    NnlsSolution sol;
    int iter = 0;
    bool hit_cap = false;
    std::vector<char> banned(n, 0);

    // Inner feasibility loop of Lawson-Hanson: solve on the passive set,
    // step-clip toward the solution, drop coordinates pinned at zero.
    // Returns false when the iteration budget runs out.
    auto feasibility_loop = [&]() -> bool {
        while (!passive.empty()) {
            const RVec z = restricted_ls(a, b, passive);
            bool all_pos = true;
            for (Eigen::Index k = 0; k < z.size(); ++k)
                if (z(k) <= 0.0) {
                    all_pos = false;
                    break;
                }
            if (all_pos) {
                x.setZero();
                for (std::size_t k = 0; k < passive.size(); ++k)
                    x(passive[k]) = z(Eigen::Index(k));
                return true;
            }
            double alpha = std::numeric_limits<double>::infinity();
            std::size_t pinned = 0;
            for (std::size_t k = 0; k < passive.size(); ++k) {
                if (z(Eigen::Index(k)) <= 0.0) {
                    const double xi = x(passive[k]);
                    const double step = xi / (xi - z(Eigen::Index(k)));
                    if (step < alpha) {
                        alpha = step;
                        pinned = k;
                    }
                }
            }
            if (!std::isfinite(alpha))
                alpha = 0.0;
            for (std::size_t k = 0; k < passive.size(); ++k) {
                const int i = passive[k];
                x(i) += alpha * (z(Eigen::Index(k)) - x(i));
            }
            // The step-limiting coordinate lands at zero up to roundoff;
            // pin it exactly so it leaves the passive set this pass.
            x(passive[pinned]) = 0.0;
            std::vector<int> kept;
            for (std::size_t k = 0; k < passive.size(); ++k) {
                const int i = passive[k];
                if (x(i) <= 0.0) {
                    x(i) = 0.0;
                    in_passive[i] = 0;
                } else {
                    kept.push_back(i);
                }
            }
            passive = std::move(kept);
            if (++iter >= max_iter)
                return false;
        }
        x.setZero();
        return true;
    };

    // Restore the active-set invariant on the warm-started support.
    if (!passive.empty() && !feasibility_loop())
        hit_cap = true;

    while (!hit_cap) {
        const RVec w = a.transpose() * (b - a * x);
        int t = -1;
        double w_best = kkt_tol;
        for (int i = 0; i < n; ++i) {
            if (in_passive[i] || banned[i])
                continue;
            if (w(i) > w_best) {
                w_best = w(i);
                t = i;
            }
        }
        if (t < 0)
            break;
        if (++iter >= max_iter) {
            hit_cap = true;
            break;
        }
        in_passive[t] = 1;
        passive.insert(std::lower_bound(passive.begin(), passive.end(), t), t);
        const RVec x_before = x;
        if (!feasibility_loop()) {
            hit_cap = true;
            break;
        }
        if (in_passive[t] == 0 && (x - x_before).cwiseAbs().maxCoeff() == 0.0) {
            // The new column was rejected without progress (a numerically
            // degenerate direction); exclude it until the iterate moves.
            banned[t] = 1;
        } else {
            std::fill(banned.begin(), banned.end(), 0);
        }
    }

    sol.x = x;
    sol.status = hit_cap ? NnlsStatus::max_iterations : NnlsStatus::converged;
    sol.objective = (a * x - b).squaredNorm();
    sol.iterations = iter;
    return sol;
}

bool nnls_kkt_satisfied(const NnlsProblem& p, const RVec& x) {
    validate_problem(p);
    if (x.size() != p.design.cols())
        throw DimensionMismatch("nnls_kkt_satisfied: solution length mismatch");
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x(i) < 0.0)
            throw NegativeCoefficient("nnls_kkt_satisfied: negative coordinate");
    const RVec g = p.design.transpose() * (p.design * x - p.target);
    const double scale = std::max((p.design.transpose() * p.target).cwiseAbs().maxCoeff(),
                                  std::numeric_limits<double>::min());
    const double tol = p.tolerance * scale;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) > 0.0) {
            if (std::abs(g(i)) > tol)
                return false;
        } else if (g(i) < -tol) {
            return false;
        }
    }
    return true;
}

} // namespace obmimo
