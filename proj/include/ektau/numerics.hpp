#pragma once
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ektau/linalg.hpp"

namespace ektau {

// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
// Returns weights w so that f^(m)(x0) ~ sum_i w[i] f(nodes[i]).
inline std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, int m) {
    const int n = static_cast<int>(nodes.size());
    if (n < m + 1) throw std::runtime_error("fd_weights: not enough nodes");
    std::vector<std::vector<double>> c(static_cast<size_t>(n),
                                       std::vector<double>(static_cast<size_t>(m + 1), 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = nodes[static_cast<size_t>(i)] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = nodes[static_cast<size_t>(i)] - nodes[static_cast<size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[static_cast<size_t>(i)][static_cast<size_t>(k)] =
                        c1 * (k * c[static_cast<size_t>(i - 1)][static_cast<size_t>(k - 1)] -
                              c5 * c[static_cast<size_t>(i - 1)][static_cast<size_t>(k)]) / c2;
                c[static_cast<size_t>(i)][0] = -c1 * c5 * c[static_cast<size_t>(i - 1)][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[static_cast<size_t>(j)][static_cast<size_t>(k)] =
                    (c4 * c[static_cast<size_t>(j)][static_cast<size_t>(k)] -
                     k * c[static_cast<size_t>(j)][static_cast<size_t>(k - 1)]) / c3;
            c[static_cast<size_t>(j)][0] = c4 * c[static_cast<size_t>(j)][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<size_t>(i)] = c[static_cast<size_t>(i)][static_cast<size_t>(m)];
    return w;
}

// Stencil offsets (in units of the step) for a derivative of order m with the
// requested accuracy at grid row i of an n-row non-periodic direction.
// Centered where possible, biased near the edges.
inline std::vector<int> stencil_offsets(int i, int n, int m, int accuracy) {
    int width = m + accuracy;           // node count: centered stencils may drop one
    if ((m + accuracy) % 2 == 1) width = m + accuracy;  // biased width
    int half = (width - 1) / 2;
    // Prefer the symmetric stencil of m+accuracy-1 nodes when it exists.
    int cwidth = ((m % 2) == 0) ? (m + accuracy - 1) : (m + accuracy - 1);
    if (cwidth % 2 == 0) cwidth += 1;
    int chalf = (cwidth - 1) / 2;
    std::vector<int> off;
    if (i - chalf >= 0 && i + chalf < n) {
        for (int k = -chalf; k <= chalf; ++k) off.push_back(k);
        return off;
    }
    if (width > n) throw std::runtime_error("stencil_offsets: grid too small");
    int lo = i - half;
    if (lo < 0) lo = 0;
    if (lo + width > n) lo = n - width;
    for (int k = 0; k < width; ++k) off.push_back(lo + k - i);
    return off;
}

// Derivative of regularly sampled data along one index of a grid row.
// fetch(j) must return the sample at absolute index j (periodic fetch wraps).
inline double grid_derivative(const std::function<double(int)>& fetch, int i, int n,
                              double h, int m, int accuracy, bool periodic) {
    std::vector<int> off;
    if (periodic) {
        int cwidth = m + accuracy - 1;
        if (cwidth % 2 == 0) cwidth += 1;
        int chalf = (cwidth - 1) / 2;
        for (int k = -chalf; k <= chalf; ++k) off.push_back(k);
    } else {
        off = stencil_offsets(i, n, m, accuracy);
    }
    std::vector<double> nodes(off.size());
    for (size_t k = 0; k < off.size(); ++k) nodes[k] = off[k] * h;
    std::vector<double> w = fd_weights(0.0, nodes, m);
    double s = 0.0;
    for (size_t k = 0; k < off.size(); ++k) {
        int j = i + off[k];
        if (periodic) j = ((j % n) + n) % n;
        s += w[k] * fetch(j);
    }
    return s;
}

// Gauss-Legendre nodes and weights on [a, b].
struct QuadRule {
    std::vector<double> nodes, weights;
};

inline QuadRule gauss_legendre(int n, double a, double b) {
    QuadRule q;
    q.nodes.resize(static_cast<size_t>(n));
    q.weights.resize(static_cast<size_t>(n));
    const double eps = 1e-15;
    int mhalf = (n + 1) / 2;
    for (int i = 0; i < mhalf; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < eps) break;
        }
        double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
        q.nodes[static_cast<size_t>(i)] = xm - xl * x;
        q.nodes[static_cast<size_t>(n - 1 - i)] = xm + xl * x;
        double w = 2.0 * xl / ((1.0 - x * x) * pp * pp);
        q.weights[static_cast<size_t>(i)] = w;
        q.weights[static_cast<size_t>(n - 1 - i)] = w;
    }
    return q;
}

// Least-squares quadratic surface fit z ~ a0 + a1 u + a2 v + a3 u^2 + a4 uv + a5 v^2
// over sample triples (u, v, z). Used for sub-grid localization of zeros.
struct Quad2Fit {
    std::array<double, 6> a{};
    double eval(double u, double v) const {
        return a[0] + a[1] * u + a[2] * v + a[3] * u * u + a[4] * u * v + a[5] * v * v;
    }
    // Stationary point; returns false when the quadratic part is singular.
    bool stationary(double& u, double& v) const {
        Mat2 H;
        H.m[0][0] = 2.0 * a[3];
        H.m[0][1] = a[4];
        H.m[1][0] = a[4];
        H.m[1][1] = 2.0 * a[5];
        if (std::abs(H.det()) < 1e-14) return false;
        auto s = solve2(H, -a[1], -a[2]);
        u = s[0];
        v = s[1];
        return true;
    }
};

inline Quad2Fit fit_quadratic_2d(const std::vector<std::array<double, 3>>& pts) {
    std::vector<std::vector<double>> AtA(6, std::vector<double>(6, 0.0));
    std::vector<double> Atb(6, 0.0);
    for (const auto& p : pts) {
        double u = p[0], v = p[1], z = p[2];
        double row[6] = {1.0, u, v, u * u, u * v, v * v};
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) AtA[static_cast<size_t>(i)][static_cast<size_t>(j)] += row[i] * row[j];
            Atb[static_cast<size_t>(i)] += row[i] * z;
        }
    }
    auto sol = solve_dense(AtA, Atb);
    Quad2Fit f;
    for (int i = 0; i < 6; ++i) f.a[static_cast<size_t>(i)] = sol[static_cast<size_t>(i)];
    return f;
}

// Fitted convergence order from a residual ladder (one value per rung, step
// halved between rungs). Residuals at or below the floor are treated as
// converged; returns a large sentinel when every rung sits at the floor.
constexpr double kOrderConverged = 99.0;

inline double fitted_order(const std::vector<double>& residuals, double floor_value) {
    std::vector<double> ratios;
    for (size_t i = 0; i + 1 < residuals.size(); ++i) {
        double r0 = residuals[i], r1 = residuals[i + 1];
        if (r0 <= floor_value || r1 <= floor_value) continue;
        if (r1 <= 0.0) continue;
        ratios.push_back(std::log2(r0 / r1));
    }
    if (ratios.empty()) return kOrderConverged;
    double s = 0.0;
    for (double r : ratios) s += r;
    return s / static_cast<double>(ratios.size());
}

}  // namespace ektau
