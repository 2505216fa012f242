#include <cmath>
#include <cstdio>
#include <memory>

#include "doctest.h"
#include "ektau/numerics.hpp"
#include "ektau/surface_calculus.hpp"

using namespace ektau;

namespace {

// Torus of revolution about the fiber axis of the flat product chart.
// Closed forms: principal curvatures 1/rho and cos(u)/(R + rho cos u) with
// respect to the inward normal produced by the frame orientation.
SurfaceEvaluator revolution_torus(double R, double rho) {
    auto geo = std::make_shared<Geometry>(ManifoldParams::unchecked(0.0, 0.0),
                                          Chart::product_conformal());
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom = SurfaceDomain{};  // doubly periodic over [0, 2pi)^2
    ev.name = "revolution-torus";
    ev.position = [=](double u, double v) {
        double w = R + rho * std::cos(u);
        return AVec(w * std::cos(v), w * std::sin(v), rho * std::sin(u));
    };
    ev.deriv_u = [=](double u, double v) {
        return AVec(-rho * std::sin(u) * std::cos(v), -rho * std::sin(u) * std::sin(v),
                    rho * std::cos(u));
    };
    ev.deriv_v = [=](double u, double v) {
        double w = R + rho * std::cos(u);
        return AVec(-w * std::sin(v), w * std::cos(v), 0.0);
    };
    return ev;
}

// Fiber-invariant torus over a latitude circle in an embedded round-fibration
// sphere, split rho^2 + sigma^2 = 1.
SurfaceEvaluator latitude_fiber_torus(std::shared_ptr<const Geometry> geo, double rho) {
    double sigma = std::sqrt(1.0 - rho * rho);
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom = SurfaceDomain{};
    ev.name = "latitude-fiber-torus";
    ev.position = [=](double u, double v) {
        return AVec(rho * std::cos(v), rho * std::sin(v), sigma * std::cos(v - u),
                    sigma * std::sin(v - u));
    };
    ev.deriv_u = [=](double u, double v) {
        return AVec(0.0, 0.0, sigma * std::sin(v - u), -sigma * std::cos(v - u));
    };
    ev.deriv_v = [=](double u, double v) {
        return AVec(-rho * std::sin(v), rho * std::cos(v), -sigma * std::sin(v - u),
                    sigma * std::cos(v - u));
    };
    return ev;
}

// Rotational sphere in the polar product chart over the round base of
// curvature 1: meridian (r, t) = (u, eps cos u), u in (0, pi).
SurfaceEvaluator eccentric_sphere(double eps) {
    auto geo = std::make_shared<Geometry>(
        ManifoldParams::checked(1.0, 0.0),
        Chart::product_polar(PolarProfile::round_sphere(1.0)));
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom.u0 = 0.0;
    ev.dom.u1 = M_PI;
    ev.dom.periodic_u = false;
    ev.dom.pole_lo = ev.dom.pole_hi = true;
    ev.name = "eccentric-sphere";
    ev.position = [=](double u, double v) { return AVec(u, v, eps * std::cos(u)); };
    ev.deriv_u = [=](double u, double) { return AVec(1.0, 0.0, -eps * std::sin(u)); };
    ev.deriv_v = [=](double, double) { return AVec(0.0, 1.0, 0.0); };
    return ev;
}

SurfaceEvaluator slice_sphere_kappa2(double t0) {
    double kap = 2.0;
    auto geo = std::make_shared<Geometry>(
        ManifoldParams::checked(kap, 0.0),
        Chart::product_polar(PolarProfile::round_sphere(kap)));
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom.u0 = 0.0;
    ev.dom.u1 = geo->chart().profile->r_max;
    ev.dom.periodic_u = false;
    ev.dom.pole_lo = ev.dom.pole_hi = true;
    ev.name = "slice-sphere";
    ev.position = [=](double u, double v) { return AVec(u, v, t0); };
    ev.deriv_u = [](double, double) { return AVec(1.0, 0.0, 0.0); };
    ev.deriv_v = [](double, double) { return AVec(0.0, 1.0, 0.0); };
    return ev;
}

double max_over_grid(const ImmersedSurface& S, const std::function<double(const FrameData&)>& f) {
    double m = 0.0;
    for (const auto& fr : S.frames) m = std::max(m, std::fabs(f(fr)));
    return m;
}

}  // namespace

TEST_SUITE("surfaces") {

TEST_CASE("revolution torus reproduces closed-form frame data") {
    const double R = 2.0, rho = 0.7;
    auto ev = std::make_shared<SurfaceEvaluator>(revolution_torus(R, rho));
    ImmersedSurface S = build_surface(ev, 96, 96);

    double emax = 0, cmax = 0, smax = 0, xmax = 0, kmax = 0, hmax = 0, unit = 0, adj = 0;
    for (int i = 0; i < S.nu; ++i) {
        for (int j = 0; j < S.nv; ++j) {
            const FrameData& f = S.at(i, j);
            double cu = std::cos(f.u), su = std::sin(f.u);
            double w = R + rho * cu;
            emax = std::max({emax, std::fabs(f.E - rho * rho), std::fabs(f.F),
                             std::fabs(f.G - w * w)});
            cmax = std::max(cmax, std::fabs(f.vert_c + su));
            double k1 = 1.0 / rho, k2 = cu / w;
            smax = std::max({smax, std::fabs(f.shape.m[0][0] - k1), std::fabs(f.shape.m[1][0]),
                             std::fabs(f.shape.m[0][1]), std::fabs(f.shape.m[1][1] - k2)});
            hmax = std::max(hmax, std::fabs(f.mean_h - 0.5 * (k1 + k2)));
            kmax = std::max(kmax, std::fabs(f.k_ext - cu / (rho * w)));
            xmax = std::max({xmax, std::fabs(f.x1 - cu / rho), std::fabs(f.x2)});
            double nx = f.x1 * f.x1 * f.E + 2 * f.x1 * f.x2 * f.F + f.x2 * f.x2 * f.G;
            unit = std::max(unit, std::fabs(nx + f.vert_c * f.vert_c - 1.0));
            // self-adjointness: I * A must be symmetric
            double ia01 = f.E * f.shape.m[0][1] + f.F * f.shape.m[1][1];
            double ia10 = f.F * f.shape.m[0][0] + f.G * f.shape.m[1][0];
            adj = std::max(adj, std::fabs(ia01 - ia10));
        }
    }
    CHECK(emax < 1e-12);
    CHECK(cmax < 1e-12);
    CHECK(smax < 1e-9);
    CHECK(hmax < 1e-9);
    CHECK(kmax < 1e-9);
    CHECK(xmax < 1e-10);
    CHECK(unit < 1e-9);
    CHECK(adj < 1e-7);

    // intrinsic curvature from the grid matches the closed form at 4th order
    double kiref = max_over_grid(S, [&](const FrameData& f) {
        return f.k_int - std::cos(f.u) / (rho * (R + rho * std::cos(f.u)));
    });
    CHECK(kiref < 2e-5);
    CHECK(max_over_grid(S, [](const FrameData& f) { return f.k_int - f.k_ext; }) < 2e-5);

    CHECK(surface_area(S) == doctest::Approx(4.0 * M_PI * M_PI * R * rho).epsilon(1e-10));
    double areaq = integrate_pointwise(*ev, 96, 96, [](const FrameData&) { return 1.0; });
    CHECK(areaq == doctest::Approx(4.0 * M_PI * M_PI * R * rho).epsilon(1e-10));
}

TEST_CASE("revolution torus grid derivative and symbols") {
    const double R = 2.0, rho = 0.7;
    auto ev = std::make_shared<SurfaceEvaluator>(revolution_torus(R, rho));
    ImmersedSurface S = build_surface(ev, 96, 96);

    double dmax = 0, dvmax = 0;
    auto fetch = [&](int i, int j) { return S.at(i, j).vert_c; };
    for (int i = 0; i < S.nu; ++i) {
        for (int j = 0; j < S.nv; ++j) {
            double d = surface_scalar_derivative(S, fetch, i, j, 0, 1, 4);
            dmax = std::max(dmax, std::fabs(d + std::cos(S.u_of(i))));
            dvmax = std::max(dvmax, std::fabs(surface_scalar_derivative(S, fetch, i, j, 1, 1, 4)));
        }
    }
    CHECK(dmax < 3e-6);
    CHECK(dvmax < 1e-12);

    double g4[2][2][2], g2[2][2][2];
    double e4 = 0, e2 = 0;
    for (int i = 0; i < S.nu; i += 7) {
        for (int j = 0; j < S.nv; j += 11) {
            surface_christoffel(S, i, j, g4, 4);
            surface_christoffel(S, i, j, g2, 2);
            double u = S.u_of(i), su = std::sin(u), cu = std::cos(u);
            double w = R + rho * cu;
            double ref[2][2][2] = {};
            ref[0][1][1] = w * su / rho;        // u over vv
            ref[1][0][1] = ref[1][1][0] = -rho * su / w;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c) {
                        e4 = std::max(e4, std::fabs(g4[a][b][c] - ref[a][b][c]));
                        e2 = std::max(e2, std::fabs(g2[a][b][c] - ref[a][b][c]));
                    }
        }
    }
    CHECK(e4 < 1e-4);
    CHECK(e2 < 1e-2);
}

TEST_CASE("slice sphere is totally geodesic with curvature of the base") {
    auto ev = std::make_shared<SurfaceEvaluator>(slice_sphere_kappa2(0.3));
    ImmersedSurface S = build_surface(ev, 48, 48);

    double amax = 0;
    for (const auto& f : S.frames)
        amax = std::max({amax, std::fabs(f.shape.m[0][0]), std::fabs(f.shape.m[0][1]),
                         std::fabs(f.shape.m[1][0]), std::fabs(f.shape.m[1][1])});
    CHECK(amax < 1e-11);
    CHECK(max_over_grid(S, [](const FrameData& f) { return f.k_ext - 2.0; }) < 1e-11);
    CHECK(max_over_grid(S, [](const FrameData& f) { return f.vert_c - 1.0; }) < 1e-12);
    CHECK(max_over_grid(S, [](const FrameData& f) { return f.u <= 1.2 ? f.k_int - 2.0 : 0.0; })
          < 2e-4);
    CHECK(max_over_grid(S, [&](const FrameData& f) {
              return ev->geo->metric_norm(f.p, f.x_amb);
          }) < 1e-12);

    // area of the full base surface of curvature 2
    double area = integrate_pointwise(*ev, 64, 16, [](const FrameData&) { return 1.0; });
    CHECK(area == doctest::Approx(2.0 * M_PI).epsilon(1e-12));
    CHECK_THROWS(integrate_grid(S, [](const FrameData&) { return 1.0; }));
    CHECK_THROWS(export_grid_csv(S, "/tmp/ektau_pole.csv"));
}

TEST_CASE("eccentric rotational sphere matches meridian curvature formulas") {
    const double eps = 0.2;
    auto ev = std::make_shared<SurfaceEvaluator>(eccentric_sphere(eps));
    ImmersedSurface S = build_surface(ev, 48, 48);

    double smax = 0, cmax = 0, kmax = 0, unit = 0;
    for (const auto& f : S.frames) {
        double su = std::sin(f.u), cu = std::cos(f.u);
        double s2 = 1.0 + eps * eps * su * su, s = std::sqrt(s2);
        double km = -eps * cu / (s2 * s);
        double kp = -eps * cu / s;
        smax = std::max({smax, std::fabs(f.shape.m[0][0] - km), std::fabs(f.shape.m[1][0]),
                         std::fabs(f.shape.m[0][1]), std::fabs(f.shape.m[1][1] - kp)});
        cmax = std::max(cmax, std::fabs(f.vert_c - 1.0 / s));
        kmax = std::max(kmax, std::fabs(f.k_ext - (km * kp + 1.0 / s2)));
        double nx = f.x1 * f.x1 * f.E + 2 * f.x1 * f.x2 * f.F + f.x2 * f.x2 * f.G;
        unit = std::max(unit, std::fabs(nx + f.vert_c * f.vert_c - 1.0));
    }
    CHECK(smax < 1e-9);
    CHECK(cmax < 1e-12);
    CHECK(kmax < 1e-9);
    CHECK(unit < 1e-9);

    // grid curvature tracks the shape-operator curvature away from pole rows
    double agree = 0;
    for (int i = 4; i < S.nu - 4; ++i)
        for (int j = 0; j < S.nv; ++j)
            agree = std::max(agree, std::fabs(S.at(i, j).k_int - S.at(i, j).k_ext));
    CHECK(agree < 2e-4);
}

TEST_CASE("embedded fiber torus is flat with unit vertical tangent") {
    auto geo = std::make_shared<Geometry>(ManifoldParams::checked(4.0, 0.8),
                                          Chart::berger_embedded());
    const double rho = std::sqrt(0.65);
    auto ev = std::make_shared<SurfaceEvaluator>(latitude_fiber_torus(geo, rho));
    ImmersedSurface S = build_surface(ev, 96, 96);

    double tau = 0.8;
    CHECK(max_over_grid(S, [](const FrameData& f) { return f.vert_c; }) < 1e-10);
    CHECK(max_over_grid(S, [&](const FrameData& f) { return f.shape.det() + tau * tau; })
          < 1e-8);
    CHECK(max_over_grid(S, [](const FrameData& f) { return f.k_ext; }) < 1e-8);
    CHECK(max_over_grid(S, [](const FrameData& f) { return f.k_int; }) < 2e-5);
    double adj = 0, unit = 0;
    for (const auto& f : S.frames) {
        double ia01 = f.E * f.shape.m[0][1] + f.F * f.shape.m[1][1];
        double ia10 = f.F * f.shape.m[0][0] + f.G * f.shape.m[1][0];
        adj = std::max(adj, std::fabs(ia01 - ia10));
        double nx = f.x1 * f.x1 * f.E + 2 * f.x1 * f.x2 * f.F + f.x2 * f.x2 * f.G;
        unit = std::max(unit, std::fabs(nx + f.vert_c * f.vert_c - 1.0));
    }
    CHECK(adj < 1e-7);
    CHECK(unit < 1e-9);

    // twice the mean curvature equals the base-circle geodesic curvature
    double z0 = rho * rho - (1.0 - rho * rho);
    double kg = std::sqrt(4.0) * z0 / std::sqrt(1.0 - z0 * z0);
    CHECK(max_over_grid(S, [&](const FrameData& f) {
              return std::fabs(2.0 * f.mean_h) - std::fabs(kg);
          }) < 1e-8);
}

TEST_CASE("intrinsic curvature pass converges at fourth order") {
    const double R = 2.0, rho = 0.7;
    auto ev = std::make_shared<SurfaceEvaluator>(revolution_torus(R, rho));
    std::vector<double> errs;
    for (int n : {24, 48, 96}) {
        ImmersedSurface S = build_surface(ev, n, n);
        errs.push_back(max_over_grid(S, [](const FrameData& f) { return f.k_int - f.k_ext; }));
    }
    double order = fitted_order(errs, 1e-12);
    CHECK((order > 3.4 || order == kOrderConverged));
}

TEST_CASE("grid export and import round-trips frames") {
    auto geo = std::make_shared<Geometry>(ManifoldParams::checked(4.0, 0.8),
                                          Chart::berger_embedded());
    auto ev = std::make_shared<SurfaceEvaluator>(latitude_fiber_torus(geo, std::sqrt(0.65)));
    ImmersedSurface S = build_surface(ev, 128, 128);
    const char* path = "/tmp/ektau_roundtrip.csv";
    export_grid_csv(S, path);
    ImmersedSurface T = import_grid_csv(geo, path);
    std::remove(path);

    REQUIRE(T.nu == S.nu);
    REQUIRE(T.nv == S.nv);
    double pmax = 0, gmax = 0, cmax = 0, kimax = 0, kemax = 0;
    for (int i = 0; i < S.nu; ++i) {
        for (int j = 0; j < S.nv; ++j) {
            const FrameData& a = S.at(i, j);
            const FrameData& b = T.at(i, j);
            for (int k = 0; k < 4; ++k) pmax = std::max(pmax, std::fabs(a.p[k] - b.p[k]));
            gmax = std::max({gmax, std::fabs(a.E - b.E), std::fabs(a.F - b.F),
                             std::fabs(a.G - b.G)});
            cmax = std::max(cmax, std::fabs(a.vert_c - b.vert_c));
            kimax = std::max(kimax, std::fabs(a.k_int - b.k_int));
            kemax = std::max(kemax, std::fabs(a.k_ext - b.k_ext));
        }
    }
    CHECK(pmax < 1e-14);
    CHECK(gmax < 1e-6);
    CHECK(cmax < 1e-6);
    CHECK(kimax < 1e-4);
    CHECK(kemax < 1e-2);
}

}  // TEST_SUITE
