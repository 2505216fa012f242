#include "ektau/identity_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ektau/numerics.hpp"

namespace ektau {

namespace {

struct Accum {
    double max_abs = 0.0;
    double sum_sq = 0.0;
    int n = 0;
    void add(double r) {
        double a = std::fabs(r);
        max_abs = std::max(max_abs, a);
        sum_sq += a * a;
        ++n;
    }
};

ResidualReport finish(std::string name, const ImmersedSurface& S, const Accum& acc) {
    ResidualReport rep;
    rep.identity = std::move(name);
    rep.max_abs = acc.max_abs;
    rep.l2 = acc.n > 0 ? std::sqrt(acc.sum_sq / acc.n) : 0.0;
    rep.samples = acc.n;
    rep.resolution_u = S.nu;
    rep.resolution_v = S.nv;
    return rep;
}

double comp_norm2(const FrameData& f, double a, double b) {
    return a * a * f.E + 2.0 * a * b * f.F + b * b * f.G;
}

// Matrix of the field derivative v -> nabla_v X in the coordinate basis,
// entries M[c][a] = (nabla_{e_a} X)^c, from grid differences plus symbols.
void field_derivative_matrix(const ImmersedSurface& S, int i, int j, int accuracy,
                             double M[2][2]) {
    auto fx1 = [&](int a, int b) { return S.at(a, b).x1; };
    auto fx2 = [&](int a, int b) { return S.at(a, b).x2; };
    double gamma[2][2][2];
    surface_christoffel(S, i, j, gamma, accuracy);
    const FrameData& f = S.at(i, j);
    for (int a = 0; a < 2; ++a) {
        double d1 = surface_scalar_derivative(S, fx1, i, j, a, 1, accuracy);
        double d2 = surface_scalar_derivative(S, fx2, i, j, a, 1, accuracy);
        M[0][a] = d1 + gamma[0][a][0] * f.x1 + gamma[0][a][1] * f.x2;
        M[1][a] = d2 + gamma[1][a][0] * f.x1 + gamma[1][a][1] * f.x2;
    }
}

// Quadrature over the surface evaluating two integrands in one sweep,
// recomputing frames at profile Gauss nodes when the grid abuts poles.
void integrate_two(const ImmersedSurface& S,
                   const std::function<double(const FrameData&)>& f1,
                   const std::function<double(const FrameData&)>& f2, double& I1,
                   double& I2) {
    const SurfaceDomain& dom = S.dom;
    if (!dom.periodic_v) throw std::runtime_error("integral formula requires a closed surface");
    I1 = 0.0;
    I2 = 0.0;
    if (dom.pole_lo || dom.pole_hi) {
        if (!S.eval)
            throw std::runtime_error(
                "integral formula needs the generating maps on a pole-bounded grid");
        QuadRule rule = gauss_legendre(S.nu, dom.u0, dom.u1);
        for (int i = 0; i < S.nu; ++i) {
            for (int j = 0; j < S.nv; ++j) {
                FrameData fr = compute_frame(*S.eval, rule.nodes[i], S.v_of(j));
                double w = rule.weights[i] * S.dv * fr.sqrt_det;
                I1 += w * f1(fr);
                I2 += w * f2(fr);
            }
        }
        return;
    }
    if (!dom.periodic_u) throw std::runtime_error("integral formula requires a closed surface");
    for (const FrameData& fr : S.frames) {
        double w = S.du * S.dv * fr.sqrt_det;
        I1 += w * f1(fr);
        I2 += w * f2(fr);
    }
}

ResidualReport integral_report(const ImmersedSurface& S, std::string name,
                               const std::function<double(const FrameData&)>& integrand) {
    double lhs = 0.0, area = 0.0;
    integrate_two(S, integrand, [](const FrameData&) { return 1.0; }, lhs, area);
    ResidualReport rep;
    rep.identity = std::move(name);
    rep.integral = lhs / area;
    rep.max_abs = std::fabs(rep.integral);
    rep.l2 = rep.max_abs;
    rep.samples = S.nu * S.nv;
    rep.resolution_u = S.nu;
    rep.resolution_v = S.nv;
    return rep;
}

double field_sq(const FrameData& f) { return comp_norm2(f, f.x1, f.x2); }

double max_field_sq(const ImmersedSurface& S) {
    double m = 0.0;
    for (const auto& f : S.frames) m = std::max(m, field_sq(f));
    return m;
}

}  // namespace

ResidualReport check_covariant_X(const ImmersedSurface& S, int accuracy) {
    const Geometry& geo = *S.geo;
    double tau = geo.params().tau;
    Accum acc;
    for (int i = 0; i < S.nu; ++i) {
        for (int j = 0; j < S.nv; ++j) {
            const FrameData& f = S.at(i, j);
            double M[2][2];
            field_derivative_matrix(S, i, j, accuracy, M);
            double r2 = 0.0;
            for (int a = 0; a < 2; ++a) {
                const AVec& w = a == 0 ? f.t_u : f.t_v;
                AVec cr = geo.cross(f.p, w, f.normal);
                auto cc = tangent_components(f, geo, cr);
                double R0 = M[0][a] - tau * f.vert_c * cc[0] - f.vert_c * f.shape.m[0][a];
                double R1 = M[1][a] - tau * f.vert_c * cc[1] - f.vert_c * f.shape.m[1][a];
                r2 += comp_norm2(f, R0, R1);
            }
            acc.add(std::sqrt(r2));
        }
    }
    return finish("tangential-field-derivative", S, acc);
}

ResidualReport check_divergence_pair(const ImmersedSurface& S, int accuracy) {
    const Geometry& geo = *S.geo;
    double tau = geo.params().tau;
    auto fbu = [&](int a, int b) {  // covector component of X along u
        const FrameData& f = S.at(a, b);
        return f.x1 * f.E + f.x2 * f.F;
    };
    auto fbv = [&](int a, int b) {
        const FrameData& f = S.at(a, b);
        return f.x1 * f.F + f.x2 * f.G;
    };
    Accum acc;
    for (int i = 0; i < S.nu; ++i) {
        for (int j = 0; j < S.nv; ++j) {
            const FrameData& f = S.at(i, j);
            double M[2][2];
            field_derivative_matrix(S, i, j, accuracy, M);
            double div = M[0][0] + M[1][1];
            acc.add(div - 2.0 * f.vert_c * f.mean_h);

            double curl = surface_scalar_derivative(S, fbv, i, j, 0, 1, accuracy) -
                          surface_scalar_derivative(S, fbu, i, j, 1, 1, accuracy);
            AVec cr = geo.cross(f.p, f.t_u, f.normal);
            acc.add(curl - 2.0 * tau * f.vert_c * geo.metric_dot(f.p, cr, f.t_v));
        }
    }
    return finish("divergence-and-rotation", S, acc);
}

ResidualReport check_gradient_C(const ImmersedSurface& S, int accuracy) {
    const Geometry& geo = *S.geo;
    double tau = geo.params().tau;
    auto fc = [&](int a, int b) { return S.at(a, b).vert_c; };
    Accum acc;
    for (int i = 0; i < S.nu; ++i) {
        for (int j = 0; j < S.nv; ++j) {
            const FrameData& f = S.at(i, j);
            double cu = surface_scalar_derivative(S, fc, i, j, 0, 1, accuracy);
            double cv = surface_scalar_derivative(S, fc, i, j, 1, 1, accuracy);
            double det = f.E * f.G - f.F * f.F;
            double g0 = (f.G * cu - f.F * cv) / det;  // raised gradient components
            double g1 = (f.E * cv - f.F * cu) / det;
            AVec cr = geo.cross(f.p, f.x_amb, f.normal);
            auto cc = tangent_components(f, geo, cr);
            double a0 = f.shape.m[0][0] * f.x1 + f.shape.m[0][1] * f.x2;
            double a1 = f.shape.m[1][0] * f.x1 + f.shape.m[1][1] * f.x2;
            double R0 = g0 - tau * cc[0] + a0;
            double R1 = g1 - tau * cc[1] + a1;
            acc.add(std::sqrt(comp_norm2(f, R0, R1)));
        }
    }
    return finish("vertical-gradient", S, acc);
}

ResidualReport check_curvature_consistency(const ImmersedSurface& S) {
    Accum acc;
    for (const auto& f : S.frames) acc.add(f.k_int - f.k_ext);
    return finish("curvature-consistency", S, acc);
}

ResidualReport integral_formula(const ImmersedSurface& S) {
    double coeff = S.geo->params().k4t2();
    return integral_report(S, "curvature-integral", [coeff](const FrameData& f) {
        double c2 = f.vert_c * f.vert_c;
        return f.k_ext * (1.0 - 3.0 * c2) + 2.0 * coeff * c2 * c2;
    });
}

ResidualReport product_integral_formula(const ImmersedSurface& S) {
    if (S.geo->params().tau != 0.0)
        throw std::runtime_error("product integral formula requires an untwisted geometry");
    return integral_report(S, "product-curvature-integral", [](const FrameData& f) {
        double c2 = f.vert_c * f.vert_c;
        return f.k_ext * (1.0 - 3.0 * c2) + 2.0 * f.k_base * c2 * c2;
    });
}

IndexReport index_analysis(const ImmersedSurface& S) {
    const Geometry& geo = *S.geo;
    double tau = geo.params().tau;
    IndexReport rep;
    bool sphere_like = S.dom.pole_lo && S.dom.pole_hi;
    if (sphere_like)
        rep.euler_characteristic = 2;
    else if (S.dom.periodic_u && S.dom.periodic_v)
        rep.euler_characteristic = 0;
    else
        throw std::runtime_error("index analysis needs a closed surface grid");

    if (max_field_sq(S) < 1e-18) {
        rep.field_trivial = true;  // identically vertical normal; no isolated zeros
        return rep;
    }

    double h = std::max(S.du, S.dv);
    double eps_zero = 1e-3 * h;
    auto q = [&](int i, int j) { return field_sq(S.at(i, j)); };

    auto record_zero = [&](double u, double v, int i0, int j_avg, bool at_pole) {
        ZeroRecord z;
        z.u = u;
        z.v = v;
        z.at_pole = at_pole;
        // Two-way determinant at the nearest grid samples: direct grid
        // differences of the field against the curvature expression.
        double dsum = 0.0, fsum = 0.0;
        int n = 0;
        int jlo = at_pole ? 0 : j_avg, jhi = at_pole ? S.nv : j_avg + 1;
        for (int j = jlo; j < jhi; ++j) {
            double M[2][2];
            field_derivative_matrix(S, i0, j, 2, M);
            dsum += M[0][0] * M[1][1] - M[0][1] * M[1][0];
            const FrameData& f = S.at(i0, j);
            fsum += f.k_ext - (f.k_base - 4.0 * tau * tau);
            ++n;
        }
        z.det_grad = dsum / n;
        z.det_formula = fsum / n;
        z.degenerate = std::fabs(z.det_grad) < kDegenerateTol;
        if (z.degenerate)
            rep.degenerate = true;
        else
            z.index = z.det_grad > 0.0 ? 1 : -1;
        rep.zeros.push_back(z);
    };

    // A rotation pole is a single point of the surface: detect a zero there by
    // extrapolating the row-averaged field magnitude onto the axis.
    auto pole_zero = [&](bool lo) {
        double qbar[3];
        for (int k = 0; k < 3; ++k) {
            int i = lo ? k : S.nu - 1 - k;
            double s = 0.0;
            for (int j = 0; j < S.nv; ++j) s += q(i, j);
            qbar[k] = s / S.nv;
        }
        if (!(qbar[0] < qbar[1] && qbar[1] < qbar[2])) return;
        double u_pole = lo ? S.dom.u0 : S.dom.u1;
        double us[3];
        for (int k = 0; k < 3; ++k) us[k] = S.u_of(lo ? k : S.nu - 1 - k) - u_pole;
        // quadratic through the three row means, evaluated on the axis
        std::vector<std::vector<double>> Amat(3, std::vector<double>(3));
        std::vector<double> b(3);
        for (int k = 0; k < 3; ++k) {
            Amat[k] = {1.0, us[k], us[k] * us[k]};
            b[k] = qbar[k];
        }
        auto sol = solve_dense(Amat, b);
        double q_axis = std::max(sol[0], 0.0);
        if (std::sqrt(q_axis) >= eps_zero) return;
        record_zero(u_pole, 0.0, lo ? 0 : S.nu - 1, 0, true);
    };
    if (sphere_like) {
        pole_zero(true);
        pole_zero(false);
    }

    // Interior scan: strict grid minima of |X|^2, refined by quadratic fits.
    int i_lo = sphere_like ? 2 : 0, i_hi = sphere_like ? S.nu - 2 : S.nu;
    double pre_gate = 25.0 * h * h;
    for (int i = i_lo; i < i_hi; ++i) {
        for (int j = 0; j < S.nv; ++j) {
            double q0 = q(i, j);
            if (q0 >= pre_gate) continue;
            bool strict = true;
            for (int di = -1; di <= 1 && strict; ++di) {
                for (int dj = -1; dj <= 1 && strict; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    int ii = i + di;
                    if (S.dom.periodic_u)
                        ii = (ii + S.nu) % S.nu;
                    else
                        ii = std::clamp(ii, 0, S.nu - 1);
                    int jj = (j + dj + S.nv) % S.nv;
                    if (ii == i && jj == j) continue;
                    if (!(q0 < q(ii, jj))) strict = false;
                }
            }
            if (!strict) continue;

            std::vector<std::array<double, 3>> pts;
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    int ii = i + di;
                    if (S.dom.periodic_u) ii = (ii + S.nu) % S.nu;
                    int jj = (j + dj + S.nv) % S.nv;
                    pts.push_back({di * S.du, dj * S.dv, q(ii, jj)});
                }
            }
            double su = 0.0, sv = 0.0;
            Quad2Fit fit = fit_quadratic_2d(pts);
            if (fit.stationary(su, sv)) {
                su = std::clamp(su, -S.du, S.du);
                sv = std::clamp(sv, -S.dv, S.dv);
            } else {
                su = sv = 0.0;
            }
            double u_star = S.u_of(i) + su, v_star = S.v_of(j) + sv;
            double q_star = fit.eval(su, sv);
            if (S.eval) {
                // one finer derivative-free refit around the candidate
                double hu = S.du / 8.0, hv = S.dv / 8.0;
                std::vector<std::array<double, 3>> fine;
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        FrameData fr =
                            frame_first_order_at(*S.eval, u_star + di * hu, v_star + dj * hv);
                        fine.push_back({di * hu, dj * hv, field_sq(fr)});
                    }
                }
                Quad2Fit refit = fit_quadratic_2d(fine);
                double ru = 0.0, rv = 0.0;
                if (refit.stationary(ru, rv)) {
                    ru = std::clamp(ru, -S.du, S.du);
                    rv = std::clamp(rv, -S.dv, S.dv);
                    u_star += ru;
                    v_star += rv;
                }
                q_star = field_sq(frame_first_order_at(*S.eval, u_star, v_star));
            }
            if (std::sqrt(std::max(q_star, 0.0)) >= eps_zero) continue;
            bool dup = false;
            for (const auto& z : rep.zeros) {
                double duw = std::fabs(z.u - u_star), dvw = std::fabs(z.v - v_star);
                if (S.dom.periodic_u) duw = std::min(duw, S.dom.u1 - S.dom.u0 - duw);
                dvw = std::min(dvw, S.dom.v1 - S.dom.v0 - dvw);
                if (z.at_pole || (duw < 2.0 * S.du && dvw < 2.0 * S.dv)) dup = true;
            }
            if (dup) continue;
            record_zero(u_star, v_star, i, j, false);
        }
    }

    for (const auto& z : rep.zeros) rep.index_sum += z.index;
    return rep;
}

ResidualReport hessian_check_at_extremes(const ImmersedSurface& S) {
    ResidualReport rep;
    rep.identity = "pole-hessian";
    rep.resolution_u = S.nu;
    rep.resolution_v = S.nv;
    if (!(S.dom.pole_lo || S.dom.pole_hi)) return rep;
    if (max_field_sq(S) < 1e-18) return rep;  // identically vertical: exempt

    double tau = S.geo->params().tau;
    auto fc = [&](int a, int b) { return S.at(a, b).vert_c; };
    Accum acc;
    std::vector<int> rows;
    if (S.dom.pole_lo) rows.push_back(0);
    if (S.dom.pole_hi) rows.push_back(S.nu - 1);
    for (int i : rows) {
        for (int j = 0; j < S.nv; ++j) {
            const FrameData& f = S.at(i, j);
            if (1.0 - f.vert_c * f.vert_c >= kPoleBand) continue;
            double gamma[2][2][2];
            surface_christoffel(S, i, j, gamma, 2);
            double cu = surface_scalar_derivative(S, fc, i, j, 0, 1, 2);
            double cv = surface_scalar_derivative(S, fc, i, j, 1, 1, 2);
            double cuu = surface_scalar_derivative(S, fc, i, j, 0, 2, 2);
            double cvv = surface_scalar_derivative(S, fc, i, j, 1, 2, 2);
            auto fcv = [&](int a, int b) {
                return surface_scalar_derivative(S, fc, a, b, 1, 1, 2);
            };
            double cuv = surface_scalar_derivative(S, fcv, i, j, 0, 1, 2);
            double H00 = cuu - gamma[0][0][0] * cu - gamma[1][0][0] * cv;
            double H01 = cuv - gamma[0][0][1] * cu - gamma[1][0][1] * cv;
            double H11 = cvv - gamma[0][1][1] * cu - gamma[1][1][1] * cv;
            double det_g = f.E * f.G - f.F * f.F;
            double det_endo = (H00 * H11 - H01 * H01) / det_g;
            double gap = f.k_ext - (f.k_base - 4.0 * tau * tau);
            acc.add(det_endo - gap * gap);
        }
    }
    return finish("pole-hessian", S, acc);
}

std::vector<ScreenVerdict> screen_theorems(const ImmersedSurface& S) {
    const ManifoldParams& mp = S.geo->params();
    double k4t2 = mp.k4t2(), tau2 = mp.tau * mp.tau;
    double k_max = -1e300, k_min = 1e300, abs_k = 0.0, abs_c = 0.0;
    double c_sum = 0.0, c_sq = 0.0, min_gap = 1e300;
    for (const auto& f : S.frames) {
        k_max = std::max(k_max, f.k_ext);
        k_min = std::min(k_min, f.k_ext);
        abs_k = std::max(abs_k, std::fabs(f.k_ext));
        abs_c = std::max(abs_c, std::fabs(f.vert_c));
        c_sum += f.vert_c;
        c_sq += f.vert_c * f.vert_c;
        min_gap = std::min(min_gap, 1.0 - f.vert_c * f.vert_c);
    }
    int n = static_cast<int>(S.frames.size());
    double c_mean = c_sum / n;
    double c_var = std::max(c_sq / n - c_mean * c_mean, 0.0);
    double k_range = k_max - k_min;

    std::vector<ScreenVerdict> out;
    char buf[256];
    auto push = [&](const char* clause, const char* verdict, std::string detail) {
        out.push_back({clause, verdict, std::move(detail)});
    };
    auto fmt2 = [&](const char* pat, double a, double b) {
        std::snprintf(buf, sizeof buf, pat, a, b);
        return std::string(buf);
    };

    bool flat = abs_k < kFlatTol;
    bool vertical_free = abs_c < kVertTol;

    // Flat compact surfaces must be everywhere tangent to the unit Killing field.
    if (flat)
        push("flat-forces-fiber-invariance", vertical_free ? "PASS" : "FAIL",
             fmt2("max|K|=%.3g, max|C|=%.3g", abs_k, abs_c));
    else
        push("flat-forces-fiber-invariance", "NOT-APPLICABLE",
             fmt2("max|K|=%.3g exceeds the flatness tolerance %.1g", abs_k, kFlatTol));

    // Constant vertical component forces C = 0 (outside untwisted slices).
    if (c_var < 1e-10) {
        if (mp.tau == 0.0 && min_gap < 1e-10)
            push("constant-vertical-component", "NOT-APPLICABLE",
                 "vertical normal everywhere: an untwisted slice, exempt by convention");
        else if (mp.tau == 0.0 && std::fabs(mp.kappa) < 1e-14)
            push("constant-vertical-component", "NOT-APPLICABLE",
                 "flat untwisted product: no curvature coefficient to force the value");
        else
            push("constant-vertical-component", vertical_free ? "PASS" : "FAIL",
                 fmt2("var(C)=%.3g, max|C|=%.3g", c_var, abs_c));
    } else {
        push("constant-vertical-component", "NOT-APPLICABLE",
             fmt2("var(C)=%.3g: the vertical component is not constant", c_var, 0.0));
    }

    // Curvature-band clauses: each pins K to zero and the instance to a fiber torus.
    bool band1 = k4t2 > 0.0 && k_min >= -kFlatTol &&
                 k_max < std::max(k4t2, tau2) - kFlatTol;
    if (band1)
        push("band-positive-bundle-curvature", flat && vertical_free ? "PASS" : "FAIL",
             fmt2("K range [%.3g, %.3g] inside [0, max(k-4t^2, t^2))", k_min, k_max));
    else
        push("band-positive-bundle-curvature", "NOT-APPLICABLE",
             fmt2("K range [%.3g, %.3g] outside the clause band", k_min, k_max));

    bool band2 = k_min > k4t2 + kFlatTol && k_max <= kFlatTol;
    if (band2)
        push("band-nonpositive-curvature", flat && vertical_free ? "PASS" : "FAIL",
             fmt2("K range [%.3g, %.3g] inside (k-4t^2, 0]", k_min, k_max));
    else
        push("band-nonpositive-curvature", "NOT-APPLICABLE",
             fmt2("K range [%.3g, %.3g] outside the clause band", k_min, k_max));

    bool band3 = k4t2 < 0.0 && k_min >= -kFlatTol && k_max < mp.kappa - 3.0 * tau2 - kFlatTol;
    if (band3)
        push("band-negative-bundle-curvature", flat && vertical_free ? "PASS" : "FAIL",
             fmt2("K range [%.3g, %.3g] inside [0, kappa-3tau^2)", k_min, k_max));
    else
        push("band-negative-bundle-curvature", "NOT-APPLICABLE",
             fmt2("K range [%.3g, %.3g] outside the clause band", k_min, k_max));

    // Exclusion range: no compact surface may live entirely below min(0, k-4t^2).
    if (k_max < std::min(0.0, k4t2) - kFlatTol)
        push("excluded-curvature-range", "FAIL",
             fmt2("max K=%.3g sits below the exclusion threshold %.3g", k_max,
                  std::min(0.0, k4t2)));
    else
        push("excluded-curvature-range", "NOT-APPLICABLE",
             fmt2("max K=%.3g is not below the exclusion threshold %.3g", k_max,
                  std::min(0.0, k4t2)));

    // Constant-curvature classification: constant K in the open bands is either
    // zero (fiber torus) or, for negative bundle curvature, equal to k-4t^2.
    if (k_range < kFlatTol) {
        double K = 0.5 * (k_max + k_min);
        bool in_band = (k4t2 > 0.0 && K < std::max(k4t2, tau2) - kFlatTol) ||
                       (k4t2 < 0.0 && K < std::max(mp.kappa - 3.0 * tau2, 0.0) - kFlatTol);
        if (in_band) {
            bool ok = (std::fabs(K) < kFlatTol && vertical_free) ||
                      (k4t2 < 0.0 && std::fabs(K - k4t2) < kFlatTol);
            push("constant-curvature-classification", ok ? "PASS" : "FAIL",
                 fmt2("constant K=%.3g against k-4t^2=%.3g", K, k4t2));
        } else {
            push("constant-curvature-classification", "NOT-APPLICABLE",
                 fmt2("constant K=%.3g outside the classified bands", K, 0.0));
        }
    } else {
        push("constant-curvature-classification", "NOT-APPLICABLE",
             fmt2("K range %.3g: curvature is not constant", k_range, 0.0));
    }
    return out;
}

LadderResult residual_ladder(const std::function<ImmersedSurface(int)>& build,
                             const std::function<double(const ImmersedSurface&)>& measure,
                             const std::vector<int>& rungs, double floor_value) {
    LadderResult out;
    for (int r : rungs) {
        ImmersedSurface S = build(r);
        out.resolutions.push_back(r);
        out.residuals.push_back(measure(S));
    }
    out.order = fitted_order(out.residuals, floor_value);
    return out;
}

}  // namespace ektau
