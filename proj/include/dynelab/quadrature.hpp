#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include <dynelab/common.hpp>
#include <dynelab/stats.hpp>

namespace dynelab {

struct QuadratureConfig {
    int nodes = 12;           // Gauss-Legendre nodes per panel, per dimension
    int max_refine = 3;       // panel-halving rounds tried for convergence
    double trunc_eps = 1e-10; // cumulative-mass cutoff for infinite supports
    double tol = 1e-6;        // target absolute tolerance on the result

    void validate() const {
        if (nodes < 2 || nodes > 64) throw InvalidParameter("quadrature nodes must be in [2, 64]");
        if (max_refine < 0 || max_refine > 8) throw InvalidParameter("max_refine must be in [0, 8]");
        if (!(tol > 0.0)) throw InvalidParameter("quadrature tolerance must be positive");
        if (!(trunc_eps > 0.0) || trunc_eps >= 0.5)
            throw InvalidParameter("truncation epsilon must lie in (0, 0.5)");
    }
};

struct GaussRule {
    std::vector<double> nodes;   // on (-1, 1)
    std::vector<double> weights;
};

/// Gauss-Legendre rule of order n, Newton iteration on P_n roots.
inline const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) <= 4.0 * std::abs(x) * 2.3e-16) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

/// Sorted panel edges over one integration axis.
///
/// Mandatory breakpoints are kept as edges so integrands stay smooth inside
/// every panel; geometric grading resolves exponential boundary layers at
/// either end (initial width `grade_*`, widths growing by 3x inward).
class PanelAxis {
public:
    PanelAxis(double a, double b, const std::vector<double>& breaks,
              double grade_lo, double grade_hi, int splits) {
        const double range = b - a;
        if (!(range > 0.0)) return;
        const double tol = range * 1e-13;
        edges_.push_back(a);
        for (double x : breaks)
            if (x > a + tol && x < b - tol) edges_.push_back(x);
        edges_.push_back(b);
        std::sort(edges_.begin(), edges_.end());
        dedup(tol);

        if (grade_lo > 0.0) grade_end(edges_[0], edges_[1], grade_lo, tol, true);
        if (grade_hi > 0.0) grade_end(edges_[edges_.size() - 2], edges_.back(), grade_hi, tol, false);
        std::sort(edges_.begin(), edges_.end());
        dedup(tol);

        for (int s = 0; s < splits; ++s) {
            std::vector<double> fine;
            fine.reserve(edges_.size() * 2);
            for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
                fine.push_back(edges_[i]);
                fine.push_back(0.5 * (edges_[i] + edges_[i + 1]));
            }
            fine.push_back(edges_.back());
            edges_ = std::move(fine);
        }
    }

    bool empty() const { return edges_.size() < 2; }

    template <typename F>
    double integrate(F&& f, const GaussRule& rule) const {
        if (empty()) return 0.0;
        CompensatedSum acc;
        for (std::size_t p = 0; p + 1 < edges_.size(); ++p) {
            const double mid = 0.5 * (edges_[p] + edges_[p + 1]);
            const double half = 0.5 * (edges_[p + 1] - edges_[p]);
            for (std::size_t j = 0; j < rule.nodes.size(); ++j)
                acc.add(half * rule.weights[j] * f(mid + half * rule.nodes[j]));
        }
        return acc.value();
    }

    const std::vector<double>& edges() const { return edges_; }

private:
    void dedup(double tol) {
        std::size_t out = 1;
        for (std::size_t i = 1; i < edges_.size(); ++i)
            if (edges_[i] - edges_[out - 1] > tol) edges_[out++] = edges_[i];
        edges_.resize(out);
    }

    void grade_end(double lo, double hi, double h0, double tol, bool from_lo) {
        const double len = hi - lo;
        h0 = std::max(h0, len * 1e-12);
        if (h0 >= 0.5 * len) return;
        double h = h0;
        // widths h0, 3 h0, 9 h0, ... marching inward from the graded end
        for (int i = 0; i < 48 && h < 0.5 * len - tol; ++i) {
            edges_.push_back(from_lo ? lo + h : hi - h);
            h *= 3.0;
        }
    }

    std::vector<double> edges_;
};

} // namespace dynelab
