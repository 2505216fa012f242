#include "ektau/hopf_builder.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ektau {

namespace {

AVec cross3(const AVec& a, const AVec& b) {
    return AVec(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0]);
}

Quat imag_quat(const AVec& v) { return Quat(0.0, v[0], v[1], v[2]); }

// Image of a unit quaternion under the fiber projection q -> conj(q) i q.
AVec fiber_image(const Quat& q) {
    return AVec(q.w * q.w + q.x * q.x - q.y * q.y - q.z * q.z,
                2.0 * (q.x * q.y - q.w * q.z), 2.0 * (q.w * q.y + q.x * q.z));
}

// Unit quaternion whose conjugation carries the first axis to the unit vector n.
Quat frame_to(const AVec& n) {
    AVec i_axis(1.0, 0.0, 0.0);
    double c = std::max(-1.0, std::min(1.0, n[0]));
    AVec ax = cross3(i_axis, n);
    double s = std::sqrt(std::max(0.0, edot(ax, ax)));
    if (s < 1e-14) {
        if (c > 0.0) return Quat(1.0, 0.0, 0.0, 0.0);
        return Quat(0.0, 0.0, -1.0, 0.0);  // any axis orthogonal to the first
    }
    double theta = std::atan2(s, c);
    ax = (1.0 / s) * ax;
    double ch = std::cos(0.5 * theta), sh = std::sin(0.5 * theta);
    return Quat(ch, -sh * ax[0], -sh * ax[1], -sh * ax[2]);
}

struct LiftTable {
    double T = 0.0, h = 0.0, alpha = 0.0;
    std::vector<Quat> c, c1, c2;
};

// Quintic two-point Hermite basis (value, slope, curvature at both ends) and
// its derivative with respect to the segment variable s in [0, 1].
void hermite5(double s, double H[6], double D[6]) {
    double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    H[0] = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    H[1] = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    H[2] = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    H[3] = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    H[4] = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    H[5] = 0.5 * s3 - s4 + 0.5 * s5;
    D[0] = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    D[1] = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    D[2] = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    D[3] = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    D[4] = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    D[5] = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
}

// Integrate the fiber lift dc/dt = c * (dn x n)/2 once around the base curve.
LiftTable lift_curve(const BaseCurve& curve, int M) {
    if (M < 64) M = 64;
    LiftTable tab;
    tab.T = curve.period;
    tab.h = tab.T / M;
    tab.c.resize(static_cast<size_t>(M) + 1);
    tab.c1.resize(static_cast<size_t>(M) + 1);
    tab.c2.resize(static_cast<size_t>(M) + 1);

    AVec n0 = curve.n(0.0);
    AVec nT = curve.n(tab.T);
    AVec gap = nT - n0;
    if (std::sqrt(edot(gap, gap)) > 1e-10)
        throw std::runtime_error("base curve is not closed");

    auto omega = [&](double t) { return imag_quat(cross3(curve.dn(t), curve.n(t))); };
    auto rhs = [&](double t, const Quat& c) { return 0.5 * (c * omega(t)); };

    Quat c = frame_to((1.0 / std::sqrt(edot(n0, n0))) * n0);
    for (int k = 0; k <= M; ++k) {
        double t = k * tab.h;
        AVec nk = curve.n(t);
        AVec dnk = curve.dn(t);
        if (std::sqrt(edot(dnk, dnk)) < 1e-8)
            throw std::runtime_error("base curve is not regular");
        Quat om = omega(t);
        Quat omdot = imag_quat(cross3(curve.ddn(t), nk));
        tab.c[static_cast<size_t>(k)] = c;
        tab.c1[static_cast<size_t>(k)] = 0.5 * (c * om);
        tab.c2[static_cast<size_t>(k)] = 0.25 * (c * (om * om)) + 0.5 * (c * omdot);
        if ((k & 127) == 0) {
            AVec img = fiber_image(c);
            AVec drift = img - nk;
            if (std::sqrt(edot(drift, drift)) > 1e-8)
                throw std::runtime_error("fiber lift drifted off the base curve");
        }
        if (k == M) break;
        Quat k1 = rhs(t, c);
        Quat k2 = rhs(t + 0.5 * tab.h, c + (0.5 * tab.h) * k1);
        Quat k3 = rhs(t + 0.5 * tab.h, c + (0.5 * tab.h) * k2);
        Quat k4 = rhs(t + tab.h, c + tab.h * k3);
        c = c + (tab.h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        c = c.normalized();
    }

    Quat hol = tab.c[static_cast<size_t>(M)] * tab.c[0].conj();
    if (std::fabs(hol.y) > 1e-8 || std::fabs(hol.z) > 1e-8)
        throw std::runtime_error("fiber lift failed to close along the fiber");
    tab.alpha = std::atan2(hol.x, hol.w);
    return tab;
}

// Interpolated lift value and u-derivative with the holonomy twist applied.
void lift_eval(const LiftTable& tab, double u, Quat& value, Quat& deriv) {
    double uw = u - tab.T * std::floor(u / tab.T);
    int M = static_cast<int>(tab.c.size()) - 1;
    int k = std::min(static_cast<int>(uw / tab.h), M - 1);
    double s = (uw - k * tab.h) / tab.h;
    double H[6], D[6];
    hermite5(s, H, D);
    const Quat &a = tab.c[static_cast<size_t>(k)], &b = tab.c[static_cast<size_t>(k) + 1];
    const Quat &a1 = tab.c1[static_cast<size_t>(k)], &b1 = tab.c1[static_cast<size_t>(k) + 1];
    const Quat &a2 = tab.c2[static_cast<size_t>(k)], &b2 = tab.c2[static_cast<size_t>(k) + 1];
    double h = tab.h, h2 = h * h;
    Quat cv = H[0] * a + (H[1] * h) * a1 + (H[2] * h2) * a2 + H[3] * b + (H[4] * h) * b1 +
              (H[5] * h2) * b2;
    Quat cd = (1.0 / h) * (D[0] * a + (D[1] * h) * a1 + (D[2] * h2) * a2 + D[3] * b +
                           (D[4] * h) * b1 + (D[5] * h2) * b2);
    double rate = tab.alpha / tab.T;
    Quat phase = quat_exp_i(-rate * uw);
    Quat iota(0.0, 1.0, 0.0, 0.0);
    value = phase * cv;
    deriv = phase * (cd - rate * (iota * cv));
}

void require_chart(const Geometry& geo, ChartKind kind, const char* what) {
    if (geo.chart().kind != kind) {
        char msg[96];
        std::snprintf(msg, sizeof msg, "%s requires a different chart family", what);
        throw std::invalid_argument(msg);
    }
}

}  // namespace

BaseCurve BaseCurve::equator() {
    BaseCurve c = latitude(0.0);
    c.name = "equator";
    return c;
}

BaseCurve BaseCurve::latitude(double height) {
    if (std::fabs(height) >= 1.0)
        throw std::invalid_argument("latitude height must lie in (-1, 1)");
    double rho = std::sqrt(1.0 - height * height);
    BaseCurve c;
    c.name = "latitude(" + std::to_string(height) + ")";
    c.n = [=](double t) { return AVec(height, rho * std::cos(t), rho * std::sin(t)); };
    c.dn = [=](double t) { return AVec(0.0, -rho * std::sin(t), rho * std::cos(t)); };
    c.ddn = [=](double t) { return AVec(0.0, -rho * std::cos(t), -rho * std::sin(t)); };
    return c;
}

BaseCurve BaseCurve::wave(int mode, double amplitude) {
    if (mode < 1) throw std::invalid_argument("wave mode must be positive");
    if (std::fabs(amplitude) >= 0.99)
        throw std::invalid_argument("wave amplitude must lie in (-0.99, 0.99)");
    double a = amplitude;
    double m = mode;
    BaseCurve c;
    c.name = "wave(" + std::to_string(mode) + ", " + std::to_string(amplitude) + ")";
    auto zf = [=](double t) { return a * std::sin(m * t); };
    auto zd = [=](double t) { return a * m * std::cos(m * t); };
    auto zdd = [=](double t) { return -a * m * m * std::sin(m * t); };
    c.n = [=](double t) {
        double z = zf(t), r = std::sqrt(1.0 - z * z);
        return AVec(z, r * std::cos(t), r * std::sin(t));
    };
    c.dn = [=](double t) {
        double z = zf(t), dz = zd(t);
        double r = std::sqrt(1.0 - z * z), dr = -z * dz / r;
        return AVec(dz, dr * std::cos(t) - r * std::sin(t), dr * std::sin(t) + r * std::cos(t));
    };
    c.ddn = [=](double t) {
        double z = zf(t), dz = zd(t), ddz = zdd(t);
        double r = std::sqrt(1.0 - z * z), dr = -z * dz / r;
        double ddr = -(dz * dz + z * ddz) / r - z * z * dz * dz / (r * r * r);
        double ct = std::cos(t), st = std::sin(t);
        return AVec(ddz, ddr * ct - 2.0 * dr * st - r * ct, ddr * st + 2.0 * dr * ct - r * st);
    };
    return c;
}

BaseCurve BaseCurve::from_samples(const std::vector<AVec>& points, double period) {
    const int M = static_cast<int>(points.size());
    if (M < 4) throw std::invalid_argument("sampled curve needs at least 4 points");
    double h = period / M;
    // periodic cubic spline per component: second derivatives from the cyclic
    // tridiagonal system sig[k-1] + 4 sig[k] + sig[k+1] = 6 d2y[k] / h^2
    auto comp_spline = [&](int d) {
        std::vector<std::vector<double>> A(static_cast<size_t>(M),
                                           std::vector<double>(static_cast<size_t>(M), 0.0));
        std::vector<double> b(static_cast<size_t>(M));
        for (int k = 0; k < M; ++k) {
            int km = (k + M - 1) % M, kp = (k + 1) % M;
            A[static_cast<size_t>(k)][static_cast<size_t>(km)] += 1.0;
            A[static_cast<size_t>(k)][static_cast<size_t>(k)] += 4.0;
            A[static_cast<size_t>(k)][static_cast<size_t>(kp)] += 1.0;
            b[static_cast<size_t>(k)] =
                6.0 * (points[static_cast<size_t>(km)][d] - 2.0 * points[static_cast<size_t>(k)][d] +
                       points[static_cast<size_t>(kp)][d]) /
                (h * h);
        }
        return solve_dense(A, b);
    };
    auto sx = std::make_shared<std::vector<std::vector<double>>>();
    sx->push_back(comp_spline(0));
    sx->push_back(comp_spline(1));
    sx->push_back(comp_spline(2));
    auto pts = std::make_shared<std::vector<AVec>>(points);

    // raw spline value/derivatives, then radial projection onto the sphere
    auto raw = [pts, sx, h, period, M](double t, int order) {
        double tw = t - period * std::floor(t / period);
        int k = std::min(static_cast<int>(tw / h), M - 1);
        int kp = (k + 1) % M;
        double A = (h * (k + 1) - tw) / h, B = 1.0 - A;
        AVec out(0.0, 0.0, 0.0);
        for (int d = 0; d < 3; ++d) {
            double yk = (*pts)[static_cast<size_t>(k)][d], yp = (*pts)[static_cast<size_t>(kp)][d];
            double sk = (*sx)[static_cast<size_t>(d)][static_cast<size_t>(k)];
            double sp = (*sx)[static_cast<size_t>(d)][static_cast<size_t>(kp)];
            if (order == 0)
                out[d] = A * yk + B * yp +
                         ((A * A * A - A) * sk + (B * B * B - B) * sp) * h * h / 6.0;
            else if (order == 1)
                out[d] = (yp - yk) / h +
                         (-(3.0 * A * A - 1.0) * sk + (3.0 * B * B - 1.0) * sp) * h / 6.0;
            else
                out[d] = A * sk + B * sp;
        }
        return out;
    };

    BaseCurve c;
    c.period = period;
    c.name = "sampled(" + std::to_string(M) + ")";
    c.n = [raw](double t) {
        AVec s = raw(t, 0);
        return (1.0 / std::sqrt(edot(s, s))) * s;
    };
    c.dn = [raw](double t) {
        AVec s = raw(t, 0), ds = raw(t, 1);
        double nu = std::sqrt(edot(s, s)), nd = edot(s, ds) / nu;
        return (1.0 / nu) * ds - (nd / (nu * nu)) * s;
    };
    c.ddn = [raw](double t) {
        AVec s = raw(t, 0), ds = raw(t, 1), dds = raw(t, 2);
        double nu = std::sqrt(edot(s, s));
        double nd = edot(s, ds) / nu;
        double ndd = (edot(ds, ds) + edot(s, dds)) / nu - nd * nd / nu;
        AVec out = (1.0 / nu) * dds - (2.0 * nd / (nu * nu)) * ds -
                   (ndd / (nu * nu)) * s + (2.0 * nd * nd / (nu * nu * nu)) * s;
        return out;
    };
    return c;
}

PlaneCurve PlaneCurve::circle(double radius) {
    if (radius <= 0.0) throw std::invalid_argument("circle radius must be positive");
    PlaneCurve c;
    c.name = "circle(" + std::to_string(radius) + ")";
    c.c = [=](double t) { return AVec(radius * std::cos(t), radius * std::sin(t), 0.0); };
    c.dc = [=](double t) { return AVec(-radius * std::sin(t), radius * std::cos(t), 0.0); };
    return c;
}

PlaneCurve PlaneCurve::ellipse(double a, double b) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("ellipse axes must be positive");
    PlaneCurve c;
    c.name = "ellipse(" + std::to_string(a) + ", " + std::to_string(b) + ")";
    c.c = [=](double t) { return AVec(a * std::cos(t), b * std::sin(t), 0.0); };
    c.dc = [=](double t) { return AVec(-a * std::sin(t), b * std::cos(t), 0.0); };
    return c;
}

SurfaceEvaluator make_hopf_torus(std::shared_ptr<const Geometry> geo, const BaseCurve& curve,
                                 int lift_nodes) {
    require_chart(*geo, ChartKind::BergerEmbedded, "fiber torus construction");
    auto tab = std::make_shared<LiftTable>(lift_curve(curve, lift_nodes));

    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom.u0 = 0.0;
    ev.dom.u1 = tab->T;
    ev.dom.v0 = 0.0;
    ev.dom.v1 = 2.0 * M_PI;
    ev.dom.periodic_u = ev.dom.periodic_v = true;
    ev.name = "hopf-torus(" + curve.name + ")";
    ev.position = [tab](double u, double v) {
        Quat c, cd;
        lift_eval(*tab, u, c, cd);
        return (quat_exp_i(v) * c).to_vec();
    };
    ev.deriv_u = [tab](double u, double v) {
        Quat c, cd;
        lift_eval(*tab, u, c, cd);
        return (quat_exp_i(v) * cd).to_vec();
    };
    ev.deriv_v = [tab](double u, double v) {
        Quat c, cd;
        lift_eval(*tab, u, c, cd);
        return (Quat(0.0, 1.0, 0.0, 0.0) * (quat_exp_i(v) * c)).to_vec();
    };
    return ev;
}

SurfaceEvaluator make_fiber_cylinder(std::shared_ptr<const Geometry> geo,
                                     const PlaneCurve& curve, double fiber_period) {
    require_chart(*geo, ChartKind::BCV, "fiber cylinder construction");
    if (geo->params().tau == 0.0)
        throw std::invalid_argument("fiber cylinder requires a twisted bundle (tau != 0)");
    if (fiber_period <= 0.0)
        throw std::invalid_argument("fiber cylinder requires a positive fiber period");
    auto c = curve.c, dc = curve.dc;
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom.u0 = 0.0;
    ev.dom.u1 = curve.period;
    ev.dom.v0 = 0.0;
    ev.dom.v1 = fiber_period;
    ev.dom.periodic_u = ev.dom.periodic_v = true;
    ev.name = "hopf-cylinder(" + curve.name + ")";
    ev.position = [c](double u, double v) {
        AVec b = c(u);
        return AVec(b[0], b[1], v);
    };
    ev.deriv_u = [dc](double u, double) {
        AVec b = dc(u);
        return AVec(b[0], b[1], 0.0);
    };
    ev.deriv_v = [](double, double) { return AVec(0.0, 0.0, 1.0); };
    return ev;
}

SurfaceEvaluator make_product_torus(std::shared_ptr<const Geometry> geo,
                                    const PlaneCurve& curve) {
    require_chart(*geo, ChartKind::ProductSplit, "product torus construction");
    if (geo->chart().base != ProductBase::Conformal)
        throw std::invalid_argument("product torus needs the conformal product chart");
    auto c = curve.c, dc = curve.dc;
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom.u0 = 0.0;
    ev.dom.u1 = curve.period;
    ev.dom.v0 = 0.0;
    ev.dom.v1 = geo->chart().fiber_circumference;
    ev.dom.periodic_u = ev.dom.periodic_v = true;
    ev.name = "product-torus(" + curve.name + ")";
    ev.position = [c](double u, double v) {
        AVec b = c(u);
        return AVec(b[0], b[1], v);
    };
    ev.deriv_u = [dc](double u, double) {
        AVec b = dc(u);
        return AVec(b[0], b[1], 0.0);
    };
    ev.deriv_v = [](double, double) { return AVec(0.0, 0.0, 1.0); };
    return ev;
}

SurfaceEvaluator make_rotational_sphere(std::shared_ptr<const Geometry> geo,
                                        double eccentricity) {
    require_chart(*geo, ChartKind::ProductSplit, "rotational sphere construction");
    if (geo->chart().base != ProductBase::Polar)
        throw std::invalid_argument("rotational sphere needs a polar product chart");
    double rmax = geo->chart().profile->r_max;
    double slope = rmax / M_PI;
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom.u0 = 0.0;
    ev.dom.u1 = M_PI;
    ev.dom.v0 = 0.0;
    ev.dom.v1 = 2.0 * M_PI;
    ev.dom.periodic_u = false;
    ev.dom.periodic_v = true;
    ev.dom.pole_lo = ev.dom.pole_hi = true;
    ev.name = "rotational-sphere(" + std::to_string(eccentricity) + ")";
    ev.position = [=](double u, double v) {
        return AVec(slope * u, v, eccentricity * std::cos(u));
    };
    ev.deriv_u = [=](double u, double) {
        return AVec(slope, 0.0, -eccentricity * std::sin(u));
    };
    ev.deriv_v = [](double, double) { return AVec(0.0, 1.0, 0.0); };
    return ev;
}

SurfaceEvaluator make_slice_sphere(std::shared_ptr<const Geometry> geo, double height) {
    require_chart(*geo, ChartKind::ProductSplit, "slice sphere construction");
    if (geo->chart().base != ProductBase::Polar)
        throw std::invalid_argument("slice sphere needs a polar product chart");
    double rmax = geo->chart().profile->r_max;
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom.u0 = 0.0;
    ev.dom.u1 = rmax;
    ev.dom.v0 = 0.0;
    ev.dom.v1 = 2.0 * M_PI;
    ev.dom.periodic_u = false;
    ev.dom.periodic_v = true;
    ev.dom.pole_lo = ev.dom.pole_hi = true;
    ev.name = "slice-sphere(" + std::to_string(height) + ")";
    ev.position = [=](double u, double v) { return AVec(u, v, height); };
    ev.deriv_u = [](double, double) { return AVec(1.0, 0.0, 0.0); };
    ev.deriv_v = [](double, double) { return AVec(0.0, 1.0, 0.0); };
    return ev;
}

SurfaceEvaluator make_graph_torus(std::shared_ptr<const Geometry> geo, double radius,
                                  double amplitude, double fiber_len) {
    require_chart(*geo, ChartKind::ProductSplit, "graph torus construction");
    if (geo->chart().base != ProductBase::Polar)
        throw std::invalid_argument("graph torus needs a polar product chart");
    double rmax = geo->chart().profile->r_max;
    if (radius - std::fabs(amplitude) <= 0.0 || radius + std::fabs(amplitude) >= rmax)
        throw std::invalid_argument("graph torus radius band leaves the chart");
    if (fiber_len <= 0.0) throw std::invalid_argument("graph torus fiber length must be positive");
    double om = 2.0 * M_PI / fiber_len;
    SurfaceEvaluator ev;
    ev.geo = geo;
    ev.dom.u0 = 0.0;
    ev.dom.u1 = 2.0 * M_PI;
    ev.dom.v0 = 0.0;
    ev.dom.v1 = fiber_len;
    ev.dom.periodic_u = ev.dom.periodic_v = true;
    ev.name = "graph-torus(" + std::to_string(radius) + ", " + std::to_string(amplitude) + ")";
    ev.position = [=](double u, double v) {
        return AVec(radius + amplitude * std::cos(om * v), u, v);
    };
    ev.deriv_u = [](double, double) { return AVec(0.0, 1.0, 0.0); };
    ev.deriv_v = [=](double, double v) {
        return AVec(-amplitude * om * std::sin(om * v), 0.0, 1.0);
    };
    return ev;
}

SurfaceEvaluator make_perturbed(const SurfaceEvaluator& base, double amplitude, int mode) {
    if (mode < 1) throw std::invalid_argument("perturbation mode must be positive");
    auto bp = std::make_shared<SurfaceEvaluator>(base);
    const SurfaceDomain d = base.dom;
    double lu = d.u1 - d.u0, lv = d.v1 - d.v0;
    // pole-to-pole profiles get a bump vanishing at both poles
    double fu = (d.periodic_u ? 2.0 * M_PI : M_PI) * mode / lu;
    double fv = 2.0 * M_PI * mode / lv;
    double u0 = d.u0, v0 = d.v0;
    const double h1 = 1e-5;  // inner step for the normal's parameter derivative

    auto bump = [=](double u, double v) {
        return amplitude * std::sin(fu * (u - u0)) * std::cos(fv * (v - v0));
    };
    auto bump_u = [=](double u, double v) {
        return amplitude * fu * std::cos(fu * (u - u0)) * std::cos(fv * (v - v0));
    };
    auto bump_v = [=](double u, double v) {
        return -amplitude * fv * std::sin(fu * (u - u0)) * std::sin(fv * (v - v0));
    };
    auto normal_at = [bp](double u, double v) {
        return frame_first_order_at(*bp, u, v).normal;
    };

    SurfaceEvaluator ev;
    ev.geo = base.geo;
    ev.dom = d;
    char tag[64];
    std::snprintf(tag, sizeof tag, " + bump(%g, %d)", amplitude, mode);
    ev.name = base.name + tag;
    ev.position = [bp, bump, normal_at](double u, double v) {
        return bp->position(u, v) + bump(u, v) * normal_at(u, v);
    };
    ev.deriv_u = [bp, bump, bump_u, normal_at, h1](double u, double v) {
        AVec dn = (1.0 / (2.0 * h1)) * (normal_at(u + h1, v) - normal_at(u - h1, v));
        return bp->deriv_u(u, v) + bump_u(u, v) * normal_at(u, v) + bump(u, v) * dn;
    };
    ev.deriv_v = [bp, bump, bump_v, normal_at, h1](double u, double v) {
        AVec dn = (1.0 / (2.0 * h1)) * (normal_at(u, v + h1) - normal_at(u, v - h1));
        return bp->deriv_v(u, v) + bump_v(u, v) * normal_at(u, v) + bump(u, v) * dn;
    };
    return ev;
}

SurfaceRecipe SurfaceRecipe::parse(const std::string& text) {
    SurfaceRecipe r;
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            char msg[64];
            std::snprintf(msg, sizeof msg, "recipe line %d: expected key = value", ln);
            throw std::runtime_error(msg);
        }
        auto trim = [](std::string s) {
            size_t b = s.find_first_not_of(" \t\r");
            size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) {
            char msg[64];
            std::snprintf(msg, sizeof msg, "recipe line %d: empty key or value", ln);
            throw std::runtime_error(msg);
        }
        if (!kv.emplace(key, val).second)
            throw std::runtime_error("recipe: duplicate key " + key);
    }

    auto take = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) return std::string();
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto num = [&](const char* key, double& slot) {
        std::string v = take(key);
        if (v.empty()) return;
        try {
            size_t used = 0;
            slot = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw std::runtime_error(std::string("recipe: bad number for ") + key);
        }
    };
    auto integer = [&](const char* key, int& slot) {
        double d = static_cast<double>(slot);
        num(key, d);
        if (d != std::floor(d)) throw std::runtime_error(std::string("recipe: ") + key + " must be an integer");
        slot = static_cast<int>(d);
    };

    std::string fam = take("family");
    if (fam.empty()) throw std::runtime_error("recipe: missing family");
    r.family = fam;
    num("kappa", r.kappa);
    num("tau", r.tau);
    integer("resolution", r.resolution_u);
    integer("resolution_v", r.resolution_v);
    std::string cv = take("curve");
    if (!cv.empty()) r.curve = cv;
    num("height", r.height);
    r.curve_height = r.height;
    num("curve_height", r.curve_height);
    integer("curve_mode", r.curve_mode);
    num("curve_amplitude", r.curve_amplitude);
    num("radius", r.radius);
    num("radius_b", r.radius_b);
    num("eccentricity", r.eccentricity);
    num("wobble", r.wobble);
    num("fiber_period", r.fiber_period);
    std::string pf = take("profile");
    if (!pf.empty()) r.profile = pf;
    num("oval_b", r.oval_b);
    num("amplitude", r.amplitude);
    integer("mode", r.mode);
    integer("lift_nodes", r.lift_nodes);
    if (!kv.empty()) throw std::runtime_error("recipe: unknown key " + kv.begin()->first);
    if (r.resolution_u < 8) throw std::runtime_error("recipe: resolution must be at least 8");
    return r;
}

SurfaceRecipe SurfaceRecipe::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("recipe: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool recipe_is_sphere(const SurfaceRecipe& r) {
    return r.family == "slice_sphere" || r.family == "rotational_sphere";
}

SurfaceEvaluator build_from_recipe(const SurfaceRecipe& r) {
    ManifoldParams mp = ManifoldParams::checked(r.kappa, r.tau);
    auto polar_chart = [&]() {
        PolarProfile prof = r.profile == "oval" ? PolarProfile::oval(r.oval_b)
                                                : PolarProfile::round_sphere(r.kappa);
        if (r.profile != "oval" && r.profile != "round")
            throw std::runtime_error("recipe: unknown profile " + r.profile);
        return Chart::product_polar(prof, r.fiber_period);
    };

    SurfaceEvaluator ev;
    if (r.family == "hopf_torus") {
        auto geo = std::make_shared<Geometry>(mp, Chart::berger_embedded());
        BaseCurve curve = BaseCurve::equator();
        if (r.curve == "latitude")
            curve = BaseCurve::latitude(r.curve_height);
        else if (r.curve == "wave")
            curve = BaseCurve::wave(r.curve_mode, r.curve_amplitude);
        else if (r.curve != "equator")
            throw std::runtime_error("recipe: unknown base curve " + r.curve);
        int nodes = r.lift_nodes > 0 ? r.lift_nodes : 8 * r.resolution_u;
        ev = make_hopf_torus(geo, curve, nodes);
    } else if (r.family == "hopf_cylinder" || r.family == "product_torus") {
        PlaneCurve curve = r.curve == "ellipse"
                               ? PlaneCurve::ellipse(r.radius, r.radius_b > 0.0 ? r.radius_b : r.radius)
                               : PlaneCurve::circle(r.radius);
        if (r.curve != "circle" && r.curve != "ellipse")
            throw std::runtime_error("recipe: unknown base curve " + r.curve);
        if (r.family == "hopf_cylinder") {
            auto geo = std::make_shared<Geometry>(mp, Chart::bcv());
            ev = make_fiber_cylinder(geo, curve, r.fiber_period);
        } else {
            auto geo = std::make_shared<Geometry>(mp, Chart::product_conformal(r.fiber_period));
            ev = make_product_torus(geo, curve);
        }
    } else if (r.family == "slice_sphere") {
        auto geo = std::make_shared<Geometry>(mp, polar_chart());
        ev = make_slice_sphere(geo, r.height);
    } else if (r.family == "rotational_sphere") {
        auto geo = std::make_shared<Geometry>(mp, polar_chart());
        ev = make_rotational_sphere(geo, r.eccentricity);
    } else if (r.family == "graph_torus") {
        auto geo = std::make_shared<Geometry>(mp, polar_chart());
        ev = make_graph_torus(geo, r.radius, r.wobble, r.fiber_period);
    } else {
        throw std::runtime_error("recipe: unknown family " + r.family);
    }

    if (r.amplitude != 0.0) {
        if (r.mode < 1) throw std::runtime_error("recipe: perturbation needs mode >= 1");
        ev = make_perturbed(ev, r.amplitude, r.mode);
    }
    return ev;
}

}  // namespace ektau
