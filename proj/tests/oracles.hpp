#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "adequate/sparse.hpp"

namespace oracle {

// Mann-Whitney by enumerating every (event, non-event) pair.
inline double auroc_pairs(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            pairs += 1.0;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

using Dense = std::vector<std::vector<double>>;  // row-major n x P

inline Dense to_dense(const adequate::BinaryMatrix& x) {
    Dense d(x.rows(), std::vector<double>(x.cols(), 0.0));
    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (auto r : x.column(j)) d[r][j] = 1.0;
    }
    return d;
}

inline double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

struct LassoSolution {
    double intercept = 0.0;
    std::vector<double> beta;
    double objective = 0.0;
    std::size_t iterations = 0;
};

inline double lasso_objective(const Dense& x, const std::vector<std::uint8_t>& y, double b0,
                              const std::vector<double>& beta, double lambda) {
    const std::size_t n = x.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = b0;
        for (std::size_t j = 0; j < beta.size(); ++j) eta += x[i][j] * beta[j];
        loss += softplus(eta) - (y[i] ? eta : 0.0);
    }
    double l1 = 0.0;
    for (double b : beta) l1 += std::abs(b);
    return loss / static_cast<double>(n) + lambda * l1;
}

// Accelerated proximal gradient (FISTA with the gradient restart test) with
// the fixed step 1/L, L = ||[1 X]||_2^2 / (4n) from power iteration. Stops
// once the proximal-gradient step from the extrapolated point moves no
// coordinate by more than `tol`.
inline LassoSolution lasso_proximal(const Dense& x, const std::vector<std::uint8_t>& y, double lambda,
                                    double tol = 1e-10, std::size_t max_iter = 2000000) {
    const std::size_t n = x.size();
    const std::size_t p = x.empty() ? 0 : x[0].size();
    // nonzero pattern per column, so each product costs O(nnz)
    std::vector<std::vector<std::size_t>> rows(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            if (x[i][j] != 0.0) rows[j].push_back(i);
        }
    }
    const auto apply = [&](double v0, const std::vector<double>& v, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), v0);
        for (std::size_t j = 0; j < p; ++j) {
            for (auto i : rows[j]) out[i] += x[i][j] * v[j];
        }
    };
    const auto apply_t = [&](const std::vector<double>& u, double& g0, std::vector<double>& g) {
        g0 = 0.0;
        for (double t : u) g0 += t;
        for (std::size_t j = 0; j < p; ++j) {
            g[j] = 0.0;
            for (auto i : rows[j]) g[j] += x[i][j] * u[i];
        }
    };

    // power iteration on A'A, A = [1 X]
    std::vector<double> v(p, 1.0);
    double v0 = 1.0;
    double sigma2 = 0.0;
    std::vector<double> av(n);
    std::vector<double> w(p);
    for (int it = 0; it < 500; ++it) {
        apply(v0, v, av);
        double w0 = 0.0;
        apply_t(av, w0, w);
        double norm = w0 * w0;
        for (double t : w) norm += t * t;
        norm = std::sqrt(norm);
        sigma2 = norm;
        v0 = w0 / norm;
        for (std::size_t k = 0; k < p; ++k) v[k] = w[k] / norm;
    }
    const double step = 4.0 * static_cast<double>(n) / (1.02 * sigma2);
    const double thr = step * lambda;
    const double inv_n = 1.0 / static_cast<double>(n);

    double b0 = 0.0;
    std::vector<double> beta(p, 0.0);
    double zb0 = 0.0;
    std::vector<double> zbeta(p, 0.0);
    std::vector<double> nbeta(p);
    std::vector<double> eta(n);
    std::vector<double> resid(n);
    std::vector<double> g(p);
    double t = 1.0;
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        apply(zb0, zbeta, eta);
        for (std::size_t i = 0; i < n; ++i) resid[i] = 1.0 / (1.0 + std::exp(-eta[i])) - y[i];
        double g0 = 0.0;
        apply_t(resid, g0, g);
        const double nb0 = zb0 - step * g0 * inv_n;
        double move = std::abs(nb0 - zb0);
        for (std::size_t j = 0; j < p; ++j) {
            const double u = zbeta[j] - step * g[j] * inv_n;
            nbeta[j] = u > thr ? u - thr : (u < -thr ? u + thr : 0.0);
            move = std::max(move, std::abs(nbeta[j] - zbeta[j]));
        }
        if (move < tol) {
            b0 = nb0;
            beta = nbeta;
            break;
        }
        // restart momentum when it points against the last step
        double dot = (zb0 - nb0) * (nb0 - b0);
        for (std::size_t j = 0; j < p; ++j) dot += (zbeta[j] - nbeta[j]) * (nbeta[j] - beta[j]);
        if (dot > 0.0) t = 1.0;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double mom = (t - 1.0) / t_next;
        zb0 = nb0 + mom * (nb0 - b0);
        for (std::size_t j = 0; j < p; ++j) zbeta[j] = nbeta[j] + mom * (nbeta[j] - beta[j]);
        b0 = nb0;
        beta = nbeta;
        t = t_next;
    }
    LassoSolution sol;
    sol.intercept = b0;
    sol.beta = beta;
    sol.objective = lasso_objective(x, y, b0, beta, lambda);
    sol.iterations = it;
    return sol;
}

// Smallest integer x in [1, n_max] with f(x) >= target, f increasing: a
// real-valued bisection to 1e-9 then a ceiling.
inline std::size_t bisect_crossing(const std::function<double(double)>& f, double target, std::size_t n_max) {
    double lo = 1.0;
    double hi = static_cast<double>(n_max);
    if (f(lo) >= target) return 1;
    while (hi - lo > 1e-9 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) >= target ? hi : lo) = mid;
    }
    return std::min<std::size_t>(n_max, static_cast<std::size_t>(std::ceil(hi)));
}
}  // namespace oracle
