#include "ektau/surface_calculus.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ektau/numerics.hpp"

namespace ektau {

namespace {

constexpr double kShapeStep = 1e-3;   // parameter step per 2*pi of range
constexpr double kRegularity = 1e-8;  // immersion degeneracy threshold

// Differential of the radial projection onto the unit sphere applied to w at P;
// w_inout becomes the projected vector, the return value is the unit point.
AVec project_unit_sphere(const AVec& P, AVec& w_inout) {
    double nn = enorm(P);
    AVec q = (1.0 / nn) * P;
    q.n = 4;
    AVec w = w_inout;
    w -= edot(w, q) * q;
    w_inout = (1.0 / nn) * w;
    w_inout.n = 4;
    return q;
}

struct PointSample {
    AVec p, pu, pv;
};

PointSample sample_closures(const SurfaceEvaluator& ev, double u, double v) {
    PointSample s;
    s.p = ev.position(u, v);
    s.pu = ev.deriv_u(u, v);
    s.pv = ev.deriv_v(u, v);
    if (ev.geo->dim() == 4) {
        AVec P = s.p;
        s.p = project_unit_sphere(P, s.pu);
        AVec pv = s.pv;
        project_unit_sphere(P, pv);
        s.pv = pv;
    }
    return s;
}

double base_curvature(const Geometry& geo, const AVec& p) {
    const Chart& ch = geo.chart();
    if (ch.kind == ChartKind::ProductSplit && ch.base == ProductBase::Polar)
        return ch.profile->kbar(p[0]);
    return geo.params().kappa;
}

// First-order frame data from position and tangents already stored in f.
void fill_first_order(const Geometry& geo, FrameData& f) {
    f.E = geo.metric_dot(f.p, f.t_u, f.t_u);
    f.F = geo.metric_dot(f.p, f.t_u, f.t_v);
    f.G = geo.metric_dot(f.p, f.t_v, f.t_v);
    AVec nr = geo.cross(f.p, f.t_u, f.t_v);
    double nn = geo.metric_norm(f.p, nr);
    double scale = std::sqrt(std::max(f.E * f.G, 1e-300));
    if (nn <= kRegularity * scale) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "degenerate immersion at (u, v) = (%.6g, %.6g)", f.u,
                      f.v);
        throw std::runtime_error(msg);
    }
    f.normal = (1.0 / nn) * nr;
    f.sqrt_det = std::sqrt(std::max(f.E * f.G - f.F * f.F, 0.0));
    AVec xi = geo.killing_at(f.p);
    f.vert_c = geo.metric_dot(f.p, f.normal, xi);
    f.x_amb = xi - f.vert_c * f.normal;
    Mat2 I;
    I.m[0][0] = f.E;
    I.m[0][1] = I.m[1][0] = f.F;
    I.m[1][1] = f.G;
    auto comp = solve2(I, geo.metric_dot(f.p, f.x_amb, f.t_u),
                       geo.metric_dot(f.p, f.x_amb, f.t_v));
    f.x1 = comp[0];
    f.x2 = comp[1];
    f.k_base = base_curvature(geo, f.p);
}

// Shape operator from normal fields sampled along the two parameter curves.
void fill_shape(const Geometry& geo, FrameData& f, const std::function<AVec(double)>& curve_u,
                const std::function<AVec(double)>& normal_u,
                const std::function<AVec(double)>& curve_v,
                const std::function<AVec(double)>& normal_v, double h_u, double h_v) {
    AVec dNu = geo.covariant_derivative_curve(f.p, f.t_u, curve_u, normal_u, h_u, 4);
    AVec dNv = geo.covariant_derivative_curve(f.p, f.t_v, curve_v, normal_v, h_v, 4);
    Mat2 I;
    I.m[0][0] = f.E;
    I.m[0][1] = I.m[1][0] = f.F;
    I.m[1][1] = f.G;
    auto tangential = [&](AVec w) {
        w -= geo.metric_dot(f.p, w, f.normal) * f.normal;
        return solve2(I, geo.metric_dot(f.p, w, f.t_u), geo.metric_dot(f.p, w, f.t_v));
    };
    auto cu = tangential(-1.0 * dNu);
    auto cv = tangential(-1.0 * dNv);
    f.shape.m[0][0] = cu[0];
    f.shape.m[1][0] = cu[1];
    f.shape.m[0][1] = cv[0];
    f.shape.m[1][1] = cv[1];
    f.mean_h = 0.5 * f.shape.trace();
    const ManifoldParams& mp = geo.params();
    // Gauss relation with the base curvature at this sample, so profiles with
    // varying base curvature stay consistent; constant-curvature charts have
    // k_base equal to kappa and reduce to the usual constant coefficient.
    double coeff = f.k_base - 4.0 * mp.tau * mp.tau;
    f.k_ext = f.shape.det() + mp.tau * mp.tau + coeff * f.vert_c * f.vert_c;
}

double pole_limited_step(const SurfaceDomain& dom, double u, double base_step) {
    double h = base_step;
    if (dom.pole_lo) h = std::min(h, 0.25 * (u - dom.u0));
    if (dom.pole_hi) h = std::min(h, 0.25 * (dom.u1 - u));
    if (h <= 0.0) throw std::runtime_error("frame step collapsed at a pole");
    return h;
}

// Intrinsic curvature of a rotationally symmetric pole-to-pole grid via the
// meridian arclength profile: K = -(sqrt G)'' / sqrt G, with stencil rows
// mirrored across the poles. The general two-variable formula divides by the
// fourth power of the vanishing area density at pole rows and loses there;
// this reduction stays conditioned. Returns false when the grid is not
// recognizably rotational so the caller can fall back.
bool rotational_intrinsic_pass(ImmersedSurface& S) {
    if (!(S.dom.pole_lo && S.dom.pole_hi) || !S.eval) return false;
    const int nu = S.nu, nv = S.nv;
    double scale = 0.0;
    for (const auto& f : S.frames) scale = std::max({scale, std::fabs(f.E), std::fabs(f.G)});
    double band = 1e-9 * scale;
    std::vector<double> sg(static_cast<size_t>(nu));
    for (int i = 0; i < nu; ++i) {
        double elo = S.at(i, 0).E, ehi = elo, glo = S.at(i, 0).G, ghi = glo, fmax = 0.0;
        double acc = 0.0;
        for (int j = 0; j < nv; ++j) {
            const FrameData& f = S.at(i, j);
            elo = std::min(elo, f.E);
            ehi = std::max(ehi, f.E);
            glo = std::min(glo, f.G);
            ghi = std::max(ghi, f.G);
            fmax = std::max(fmax, std::fabs(f.F));
            acc += std::sqrt(std::max(f.G, 0.0));
        }
        if (ehi - elo > band || ghi - glo > band || fmax > band) return false;
        sg[static_cast<size_t>(i)] = acc / nv;
    }
    // meridian arclength of each row by per-interval Simpson on sqrt(E)
    auto speed = [&](double u) {
        PointSample s = sample_closures(*S.eval, u, S.dom.v0);
        return std::sqrt(S.geo->metric_dot(s.p, s.pu, s.pu));
    };
    auto panel = [&](double a, double b) {
        QuadRule rule = gauss_legendre(3, a, b);  // interior nodes clear the poles
        double s = 0.0;
        for (size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * speed(rule.nodes[k]);
        return s;
    };
    std::vector<double> w(static_cast<size_t>(nu));
    double acc = panel(S.dom.u0, S.u_of(0));
    w[0] = acc;
    for (int i = 1; i < nu; ++i) {
        acc += panel(S.u_of(i - 1), S.u_of(i));
        w[static_cast<size_t>(i)] = acc;
    }
    double wtop = acc + panel(S.u_of(nu - 1), S.dom.u1);

    for (int i = 0; i < nu; ++i) {
        std::vector<double> nodes(5), vals(5);
        for (int k = -2; k <= 2; ++k) {
            int r = i + k;
            double wr, vr;
            // the signed profile sqrt(G) continues oddly through a pole
            if (r < 0) {
                wr = -w[static_cast<size_t>(-1 - r)];
                vr = -sg[static_cast<size_t>(-1 - r)];
            } else if (r >= nu) {
                wr = 2.0 * wtop - w[static_cast<size_t>(2 * nu - 1 - r)];
                vr = -sg[static_cast<size_t>(2 * nu - 1 - r)];
            } else {
                wr = w[static_cast<size_t>(r)];
                vr = sg[static_cast<size_t>(r)];
            }
            nodes[static_cast<size_t>(k + 2)] = wr - w[static_cast<size_t>(i)];
            vals[static_cast<size_t>(k + 2)] = vr;
        }
        std::vector<double> wt = fd_weights(0.0, nodes, 2);
        double d2 = 0.0;
        for (int k = 0; k < 5; ++k) d2 += wt[static_cast<size_t>(k)] * vals[static_cast<size_t>(k)];
        double kint = -d2 / sg[static_cast<size_t>(i)];
        for (int j = 0; j < nv; ++j) S.at(i, j).k_int = kint;
    }
    return true;
}

// Intrinsic Gauss curvature of the sampled first fundamental form (Brioschi).
void intrinsic_gauss_pass(ImmersedSurface& S) {
    if (rotational_intrinsic_pass(S)) return;
    const int nu = S.nu, nv = S.nv;
    auto fetchE = [&](int i, int j) { return S.at(i, j).E; };
    auto fetchF = [&](int i, int j) { return S.at(i, j).F; };
    auto fetchG = [&](int i, int j) { return S.at(i, j).G; };
    // F_v over the whole grid feeds the mixed derivative
    std::vector<double> Fv(static_cast<size_t>(nu) * static_cast<size_t>(nv));
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j)
            Fv[static_cast<size_t>(i * nv + j)] =
                surface_scalar_derivative(S, fetchF, i, j, 1, 1, 4);
    auto fetchFv = [&](int i, int j) { return Fv[static_cast<size_t>(i * nv + j)]; };

    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            FrameData& f = S.at(i, j);
            double Eu = surface_scalar_derivative(S, fetchE, i, j, 0, 1, 4);
            double Ev = surface_scalar_derivative(S, fetchE, i, j, 1, 1, 4);
            double Gu = surface_scalar_derivative(S, fetchG, i, j, 0, 1, 4);
            double Gv = surface_scalar_derivative(S, fetchG, i, j, 1, 1, 4);
            double Fu = surface_scalar_derivative(S, fetchF, i, j, 0, 1, 4);
            double Evv = surface_scalar_derivative(S, fetchE, i, j, 1, 2, 4);
            double Guu = surface_scalar_derivative(S, fetchG, i, j, 0, 2, 4);
            double Fuv = surface_scalar_derivative(S, fetchFv, i, j, 0, 1, 4);

            Mat3 M1, M2;
            M1.m[0][0] = -0.5 * Evv + Fuv - 0.5 * Guu;
            M1.m[0][1] = 0.5 * Eu;
            M1.m[0][2] = Fu - 0.5 * Ev;
            M1.m[1][0] = fetchFv(i, j) - 0.5 * Gu;
            M1.m[1][1] = f.E;
            M1.m[1][2] = f.F;
            M1.m[2][0] = 0.5 * Gv;
            M1.m[2][1] = f.F;
            M1.m[2][2] = f.G;

            M2.m[0][0] = 0.0;
            M2.m[0][1] = 0.5 * Ev;
            M2.m[0][2] = 0.5 * Gu;
            M2.m[1][0] = 0.5 * Ev;
            M2.m[1][1] = f.E;
            M2.m[1][2] = f.F;
            M2.m[2][0] = 0.5 * Gu;
            M2.m[2][1] = f.F;
            M2.m[2][2] = f.G;

            double den = f.E * f.G - f.F * f.F;
            f.k_int = (M1.det() - M2.det()) / (den * den);
        }
}

int wrap_index(int i, int n) { return ((i % n) + n) % n; }

// Shape operators for grids without closures: normals at neighboring nodes
// stand in for the normal field along the parameter curves.
void grid_shape_pass(ImmersedSurface& S) {
    const Geometry& geo = *S.geo;
    for (int i = 0; i < S.nu; ++i)
        for (int j = 0; j < S.nv; ++j) {
            FrameData& f = S.at(i, j);
            auto curve_u = [&](double t) {
                int k = static_cast<int>(std::lround(t / S.du));
                return S.at(wrap_index(i + k, S.nu), j).p;
            };
            auto normal_u = [&](double t) {
                int k = static_cast<int>(std::lround(t / S.du));
                return S.at(wrap_index(i + k, S.nu), j).normal;
            };
            auto curve_v = [&](double t) {
                int k = static_cast<int>(std::lround(t / S.dv));
                return S.at(i, wrap_index(j + k, S.nv)).p;
            };
            auto normal_v = [&](double t) {
                int k = static_cast<int>(std::lround(t / S.dv));
                return S.at(i, wrap_index(j + k, S.nv)).normal;
            };
            fill_shape(geo, f, curve_u, normal_u, curve_v, normal_v, S.du, S.dv);
        }
}

}  // namespace

FrameData frame_first_order_at(const SurfaceEvaluator& ev, double u, double v) {
    FrameData f;
    f.u = u;
    f.v = v;
    PointSample s = sample_closures(ev, u, v);
    f.p = s.p;
    f.t_u = s.pu;
    f.t_v = s.pv;
    fill_first_order(*ev.geo, f);
    return f;
}

FrameData compute_frame(const SurfaceEvaluator& ev, double u, double v) {
    const Geometry& geo = *ev.geo;
    FrameData f = frame_first_order_at(ev, u, v);
    double range_u = ev.dom.u1 - ev.dom.u0;
    double range_v = ev.dom.v1 - ev.dom.v0;
    double h_u = pole_limited_step(ev.dom, u, kShapeStep * range_u / (2.0 * M_PI));
    double h_v = kShapeStep * range_v / (2.0 * M_PI);
    auto curve_u = [&](double t) { return sample_closures(ev, u + t, v).p; };
    auto normal_u = [&](double t) { return frame_first_order_at(ev, u + t, v).normal; };
    auto curve_v = [&](double t) { return sample_closures(ev, u, v + t).p; };
    auto normal_v = [&](double t) { return frame_first_order_at(ev, u, v + t).normal; };
    fill_shape(geo, f, curve_u, normal_u, curve_v, normal_v, h_u, h_v);
    return f;
}

ImmersedSurface build_surface(std::shared_ptr<const SurfaceEvaluator> ev, int nu, int nv) {
    if (nu < 8 || nv < 8) throw std::invalid_argument("build_surface: grid too small");
    ImmersedSurface S;
    S.geo = ev->geo;
    S.eval = ev;
    S.dom = ev->dom;
    S.name = ev->name;
    S.nu = nu;
    S.nv = nv;
    S.du = (S.dom.u1 - S.dom.u0) / nu;
    S.dv = (S.dom.v1 - S.dom.v0) / nv;
    S.frames.resize(static_cast<size_t>(nu) * static_cast<size_t>(nv));
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) S.at(i, j) = compute_frame(*ev, S.u_of(i), S.v_of(j));
    intrinsic_gauss_pass(S);
    return S;
}

double surface_scalar_derivative(const ImmersedSurface& S,
                                 const std::function<double(int, int)>& fetch, int i, int j,
                                 int dir, int m, int accuracy) {
    if (dir == 0) {
        auto line = [&](int ii) { return fetch(ii, j); };
        return grid_derivative(line, i, S.nu, S.du, m, accuracy, S.dom.periodic_u);
    }
    auto line = [&](int jj) { return fetch(i, jj); };
    return grid_derivative(line, j, S.nv, S.dv, m, accuracy, S.dom.periodic_v);
}

void surface_christoffel(const ImmersedSurface& S, int i, int j, double gamma[2][2][2],
                         int accuracy) {
    auto fetchE = [&](int a, int b) { return S.at(a, b).E; };
    auto fetchF = [&](int a, int b) { return S.at(a, b).F; };
    auto fetchG = [&](int a, int b) { return S.at(a, b).G; };
    // DI[k][r][c] = derivative along k of I_{rc}
    double DI[2][2][2];
    for (int k = 0; k < 2; ++k) {
        DI[k][0][0] = surface_scalar_derivative(S, fetchE, i, j, k, 1, accuracy);
        DI[k][0][1] = DI[k][1][0] = surface_scalar_derivative(S, fetchF, i, j, k, 1, accuracy);
        DI[k][1][1] = surface_scalar_derivative(S, fetchG, i, j, k, 1, accuracy);
    }
    const FrameData& f = S.at(i, j);
    double det = f.E * f.G - f.F * f.F;
    double inv[2][2] = {{f.G / det, -f.F / det}, {-f.F / det, f.E / det}};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = b; c < 2; ++c) {
                double s = 0.0;
                for (int d = 0; d < 2; ++d)
                    s += inv[a][d] * (DI[b][d][c] + DI[c][d][b] - DI[d][b][c]);
                gamma[a][b][c] = 0.5 * s;
                gamma[a][c][b] = gamma[a][b][c];
            }
}

std::array<double, 2> tangent_components(const FrameData& f, const Geometry& geo,
                                         const AVec& w) {
    AVec wt = w - geo.metric_dot(f.p, w, f.normal) * f.normal;
    Mat2 I;
    I.m[0][0] = f.E;
    I.m[0][1] = I.m[1][0] = f.F;
    I.m[1][1] = f.G;
    return solve2(I, geo.metric_dot(f.p, wt, f.t_u), geo.metric_dot(f.p, wt, f.t_v));
}

double integrate_pointwise(const SurfaceEvaluator& ev, int nu, int nv,
                           const std::function<double(const FrameData&)>& f) {
    const SurfaceDomain& dom = ev.dom;
    double dv = (dom.v1 - dom.v0) / nv;
    double total = 0.0;
    if (dom.pole_lo || dom.pole_hi) {
        QuadRule rule = gauss_legendre(nu, dom.u0, dom.u1);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nv; ++j) {
                FrameData fr = compute_frame(ev, rule.nodes[static_cast<size_t>(i)],
                                             dom.v0 + j * dv);
                total += rule.weights[static_cast<size_t>(i)] * dv * f(fr) * fr.sqrt_det;
            }
        return total;
    }
    double du = (dom.u1 - dom.u0) / nu;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            FrameData fr = compute_frame(ev, dom.u0 + i * du, dom.v0 + j * dv);
            total += du * dv * f(fr) * fr.sqrt_det;
        }
    return total;
}

double integrate_grid(const ImmersedSurface& S,
                      const std::function<double(const FrameData&)>& f) {
    if (S.dom.pole_lo || S.dom.pole_hi)
        throw std::logic_error(
            "integrate_grid: pole-to-pole grids integrate through their closures");
    double total = 0.0;
    for (const FrameData& fr : S.frames) total += f(fr) * fr.sqrt_det;
    return total * S.du * S.dv;
}

double surface_area(const ImmersedSurface& S) {
    if (S.dom.pole_lo || S.dom.pole_hi) {
        if (!S.eval) throw std::logic_error("surface_area: missing closures for pole grid");
        return integrate_pointwise(*S.eval, S.nu, S.nv,
                                   [](const FrameData&) { return 1.0; });
    }
    return integrate_grid(S, [](const FrameData&) { return 1.0; });
}

void export_grid_csv(const ImmersedSurface& S, const std::string& path) {
    if (S.dom.pole_lo || S.dom.pole_hi)
        throw std::logic_error("export_grid_csv: only doubly periodic grids are portable");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_grid_csv: cannot open " + path);
    char line[512];
    std::snprintf(line, sizeof line, "# grid nu=%d nv=%d u0=%.17g du=%.17g v0=%.17g dv=%.17g dim=%d\n",
                  S.nu, S.nv, S.dom.u0, S.du, S.dom.v0, S.dv, S.geo->dim());
    out << line;
    out << (S.geo->dim() == 4 ? "u_index,v_index,c0,c1,c2,c3\n" : "u_index,v_index,c0,c1,c2\n");
    for (int i = 0; i < S.nu; ++i)
        for (int j = 0; j < S.nv; ++j) {
            const AVec& p = S.at(i, j).p;
            if (S.geo->dim() == 4)
                std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", i, j, p[0],
                              p[1], p[2], p[3]);
            else
                std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g,%.17g\n", i, j, p[0], p[1],
                              p[2]);
            out << line;
        }
}

ImmersedSurface import_grid_csv(std::shared_ptr<const Geometry> geo, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("import_grid_csv: cannot open " + path);
    std::string meta;
    std::getline(in, meta);
    ImmersedSurface S;
    S.geo = geo;
    int dim = 0;
    if (std::sscanf(meta.c_str(), "# grid nu=%d nv=%d u0=%lf du=%lf v0=%lf dv=%lf dim=%d",
                    &S.nu, &S.nv, &S.dom.u0, &S.du, &S.dom.v0, &S.dv, &dim) != 7)
        throw std::runtime_error("import_grid_csv: malformed metadata line");
    if (dim != geo->dim())
        throw std::runtime_error("import_grid_csv: chart dimension mismatch");
    if (S.nu < 8 || S.nv < 8) throw std::runtime_error("import_grid_csv: grid too small");
    S.dom.u1 = S.dom.u0 + S.nu * S.du;
    S.dom.v1 = S.dom.v0 + S.nv * S.dv;
    S.dom.periodic_u = S.dom.periodic_v = true;
    S.name = "imported";
    std::string header;
    std::getline(in, header);
    S.frames.resize(static_cast<size_t>(S.nu) * static_cast<size_t>(S.nv));
    std::vector<char> seen(S.frames.size(), 0);
    std::string row;
    while (std::getline(in, row)) {
        if (row.empty()) continue;
        int i = 0, j = 0;
        double c[4] = {0, 0, 0, 0};
        int got = std::sscanf(row.c_str(), "%d,%d,%lf,%lf,%lf,%lf", &i, &j, &c[0], &c[1], &c[2],
                              &c[3]);
        if (got != 2 + dim) throw std::runtime_error("import_grid_csv: malformed row: " + row);
        if (i < 0 || i >= S.nu || j < 0 || j >= S.nv)
            throw std::runtime_error("import_grid_csv: node index out of range");
        FrameData& f = S.at(i, j);
        f.u = S.u_of(i);
        f.v = S.v_of(j);
        f.p = (dim == 4) ? AVec(c[0], c[1], c[2], c[3]) : AVec(c[0], c[1], c[2]);
        if (dim == 4) f.p = geo->normalize_point(f.p);
        seen[static_cast<size_t>(i * S.nv + j)] = 1;
    }
    for (char s : seen)
        if (!s) throw std::runtime_error("import_grid_csv: grid has missing nodes");

    // parameter derivatives of the sampled positions, then frames
    for (int i = 0; i < S.nu; ++i)
        for (int j = 0; j < S.nv; ++j) {
            FrameData& f = S.at(i, j);
            AVec tu = AVec::zero(dim), tv = AVec::zero(dim);
            for (int k = 0; k < dim; ++k) {
                auto fu = [&](int ii) { return S.at(wrap_index(ii, S.nu), j).p[k]; };
                auto fv = [&](int jj) { return S.at(i, wrap_index(jj, S.nv)).p[k]; };
                tu[k] = grid_derivative(fu, i, S.nu, S.du, 1, 4, true);
                tv[k] = grid_derivative(fv, j, S.nv, S.dv, 1, 4, true);
            }
            if (dim == 4) {
                AVec P = f.p;
                project_unit_sphere(P, tu);
                project_unit_sphere(P, tv);
            }
            f.t_u = tu;
            f.t_v = tv;
        }
    for (int i = 0; i < S.nu; ++i)
        for (int j = 0; j < S.nv; ++j) fill_first_order(*geo, S.at(i, j));
    grid_shape_pass(S);
    intrinsic_gauss_pass(S);
    return S;
}

}  // namespace ektau
