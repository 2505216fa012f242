#include "ektau/model_spaces.hpp"

#include <cmath>
#include <stdexcept>

#include "ektau/numerics.hpp"

namespace ektau {

namespace {

double gate_tolerance(double kappa, double tau) {
    double s = std::max(1.0, std::max(std::abs(kappa), 4.0 * tau * tau));
    return 1e-12 * s;
}

AVec axis4(int l) {
    AVec e = AVec::zero(4);
    e[l] = 1.0;
    return e;
}

double det4(const AVec& a, const AVec& b, const AVec& c, const AVec& d) {
    double m[4][4];
    for (int i = 0; i < 4; ++i) {
        m[i][0] = a[i];
        m[i][1] = b[i];
        m[i][2] = c[i];
        m[i][3] = d[i];
    }
    double det = 0.0;
    for (int j = 0; j < 4; ++j) {
        int c0 = (j == 0) ? 1 : 0;
        int c1 = (j <= 1) ? 2 : 1;
        int c2 = (j <= 2) ? 3 : 2;
        double minor = m[1][c0] * (m[2][c1] * m[3][c2] - m[2][c2] * m[3][c1]) -
                       m[1][c1] * (m[2][c0] * m[3][c2] - m[2][c2] * m[3][c0]) +
                       m[1][c2] * (m[2][c0] * m[3][c1] - m[2][c1] * m[3][c0]);
        det += ((j % 2 == 0) ? 1.0 : -1.0) * m[0][j] * minor;
    }
    return det;
}

// Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
void christoffel_from_derivs(const Mat3& g, const Mat3 dg[3], double gamma[3][3][3]) {
    Mat3 ginv = g.inverse();
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                double s = 0.0;
                for (int l = 0; l < 3; ++l)
                    s += ginv.m[k][l] *
                         (dg[i].m[j][l] + dg[j].m[i][l] - dg[l].m[i][j]);
                gamma[k][i][j] = 0.5 * s;
                gamma[k][j][i] = gamma[k][i][j];
            }
}

// Conformal factor of the base model M^2(kappa): 1/(1 + kappa r^2/4).
double conformal_lambda(double kappa, double x, double y) {
    double den = 1.0 + 0.25 * kappa * (x * x + y * y);
    if (den <= 1e-12) throw std::domain_error("point outside chart domain");
    return 1.0 / den;
}

// Metric of the cylindrical-type chart
//   g = lambda^2 (dx^2 + dy^2) + (dz + tau lambda (y dx - x dy))^2.
void bcv_metric(double kappa, double tau, double x, double y, Mat3& g) {
    double lam = conformal_lambda(kappa, x, y);
    double t2 = tau * tau;
    g = Mat3{};
    g.m[0][0] = lam * lam * (1.0 + t2 * y * y);
    g.m[1][1] = lam * lam * (1.0 + t2 * x * x);
    g.m[0][1] = g.m[1][0] = -t2 * lam * lam * x * y;
    g.m[0][2] = g.m[2][0] = tau * lam * y;
    g.m[1][2] = g.m[2][1] = -tau * lam * x;
    g.m[2][2] = 1.0;
}

// Metric and its coordinate derivatives.
void bcv_components(double kappa, double tau, double x, double y, Mat3& g, Mat3 dg[3]) {
    bcv_metric(kappa, tau, x, y, g);
    double lam = conformal_lambda(kappa, x, y);
    double lx = -0.5 * kappa * x * lam * lam;
    double ly = -0.5 * kappa * y * lam * lam;
    double t2 = tau * tau;

    dg[0] = Mat3{};
    dg[0].m[0][0] = 2.0 * lam * lx * (1.0 + t2 * y * y);
    dg[0].m[1][1] = 2.0 * lam * lx * (1.0 + t2 * x * x) + 2.0 * t2 * x * lam * lam;
    dg[0].m[0][1] = dg[0].m[1][0] = -t2 * (2.0 * lam * lx * x * y + lam * lam * y);
    dg[0].m[0][2] = dg[0].m[2][0] = tau * lx * y;
    dg[0].m[1][2] = dg[0].m[2][1] = -tau * (lx * x + lam);

    dg[1] = Mat3{};
    dg[1].m[0][0] = 2.0 * lam * ly * (1.0 + t2 * y * y) + 2.0 * t2 * y * lam * lam;
    dg[1].m[1][1] = 2.0 * lam * ly * (1.0 + t2 * x * x);
    dg[1].m[0][1] = dg[1].m[1][0] = -t2 * (2.0 * lam * ly * x * y + lam * lam * x);
    dg[1].m[0][2] = dg[1].m[2][0] = tau * (ly * y + lam);
    dg[1].m[1][2] = dg[1].m[2][1] = -tau * ly * x;

    dg[2] = Mat3{};
}

}  // namespace

ManifoldParams ManifoldParams::checked(double kappa, double tau) {
    if (std::abs(kappa - 4.0 * tau * tau) <= gate_tolerance(kappa, tau))
        throw std::invalid_argument(
            "ManifoldParams: kappa - 4 tau^2 = 0 is outside the admissible family");
    return ManifoldParams{kappa, tau};
}

ManifoldParams ManifoldParams::unchecked(double kappa, double tau) {
    return ManifoldParams{kappa, tau};
}

Family classify(const ManifoldParams& p) {
    if (p.tau != 0.0) {
        if (p.kappa > 1e-14) return Family::Berger;
        if (p.kappa < -1e-14) return Family::SL2Type;
        return Family::Heisenberg;
    }
    return Family::Product;
}

std::string family_name(Family f) {
    switch (f) {
        case Family::Berger: return "berger";
        case Family::Heisenberg: return "heisenberg";
        case Family::SL2Type: return "sl2type";
        case Family::Product: return "product";
    }
    return "unknown";
}

PolarProfile PolarProfile::round_sphere(double kappa) {
    if (kappa <= 0.0) throw std::invalid_argument("round_sphere profile needs kappa > 0");
    double rk = std::sqrt(kappa);
    PolarProfile p;
    p.f = [rk](double r) { return std::sin(rk * r) / rk; };
    p.fp = [rk](double r) { return std::cos(rk * r); };
    p.fpp = [rk](double r) { return -rk * std::sin(rk * r); };
    p.r_max = M_PI / rk;
    p.name = "round";
    return p;
}

PolarProfile PolarProfile::oval(double b) {
    if (b <= -1.0 || b >= 1.0 / 6.0)
        throw std::invalid_argument("oval profile needs b in (-1, 1/6) for positive pole curvature");
    PolarProfile p;
    p.f = [b](double r) {
        double s = std::sin(r);
        return s * (1.0 + b * s * s);
    };
    p.fp = [b](double r) {
        double s = std::sin(r), c = std::cos(r);
        return c * (1.0 + 3.0 * b * s * s);
    };
    p.fpp = [b](double r) {
        double s = std::sin(r), c = std::cos(r);
        return -s * (1.0 + 3.0 * b * s * s) + 6.0 * b * s * c * c;
    };
    p.r_max = M_PI;
    p.name = "oval";
    return p;
}

EmbeddedFrame::EmbeddedFrame(const ManifoldParams& params, const AVec& p)
    : params_(params), p_(p) {
    if (p.n != 4) throw std::invalid_argument("EmbeddedFrame: point must have 4 components");
    int imax = 0;
    for (int i = 1; i < 4; ++i)
        if (std::abs(p[i]) > std::abs(p[imax])) imax = i;
    int a = 0;
    for (int i = 0; i < 4 && a < 3; ++i) {
        if (i == imax) continue;
        AVec v = axis4(i);
        v -= edot(v, p_) * p_;
        for (int b = 0; b < a; ++b) v -= edot(v, t_[static_cast<size_t>(b)]) * t_[static_cast<size_t>(b)];
        double nrm = enorm(v);
        if (nrm < 1e-8) throw std::runtime_error("EmbeddedFrame: degenerate basis");
        AVec& slot = t_[static_cast<size_t>(a)];
        slot.n = 4;
        for (int k = 0; k < 4; ++k) slot[k] = v[k] / nrm;
        ++a;
    }
}

AVec EmbeddedFrame::point_at(const std::array<double, 3>& s) const {
    AVec P = p_;
    for (int a = 0; a < 3; ++a) P += s[static_cast<size_t>(a)] * t_[static_cast<size_t>(a)];
    return (1.0 / enorm(P)) * P;
}

std::array<double, 3> EmbeddedFrame::coords_of(const AVec& q) const {
    double den = edot(q, p_);
    if (den <= 0.1) throw std::runtime_error("EmbeddedFrame: point outside local chart");
    std::array<double, 3> s;
    for (int a = 0; a < 3; ++a) s[static_cast<size_t>(a)] = edot(q, t_[static_cast<size_t>(a)]) / den;
    return s;
}

std::array<AVec, 3> EmbeddedFrame::coord_basis(const std::array<double, 3>& s) const {
    AVec P = p_;
    for (int a = 0; a < 3; ++a) P += s[static_cast<size_t>(a)] * t_[static_cast<size_t>(a)];
    double nn = enorm(P);
    double inv = 1.0 / nn, inv3 = inv * inv * inv;
    std::array<AVec, 3> B;
    for (int a = 0; a < 3; ++a) {
        B[static_cast<size_t>(a)] = inv * t_[static_cast<size_t>(a)] - (s[static_cast<size_t>(a)] * inv3) * P;
    }
    return B;
}

std::array<double, 3> EmbeddedFrame::vector_components(const std::array<double, 3>& s,
                                                       const AVec& w) const {
    auto B = coord_basis(s);
    Mat3 G;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) G.m[a][b] = edot(B[static_cast<size_t>(a)], B[static_cast<size_t>(b)]);
    Mat3 Gi = G.inverse();
    double rhs[3];
    for (int a = 0; a < 3; ++a) rhs[a] = edot(B[static_cast<size_t>(a)], w);
    std::array<double, 3> x{};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) x[static_cast<size_t>(a)] += Gi.m[a][b] * rhs[b];
    return x;
}

Mat3 EmbeddedFrame::metric(const std::array<double, 3>& s) const {
    AVec q = point_at(s);
    auto B = coord_basis(s);
    double kappa = params_.kappa, tau = params_.tau;
    double mu = 4.0 * tau * tau / kappa - 1.0;
    AVec V(-q[1], q[0], -q[3], q[2]);
    Mat3 G;
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            double d = edot(B[static_cast<size_t>(a)], B[static_cast<size_t>(b)]) +
                       mu * edot(B[static_cast<size_t>(a)], V) * edot(B[static_cast<size_t>(b)], V);
            G.m[a][b] = G.m[b][a] = (4.0 / kappa) * d;
        }
    return G;
}

void EmbeddedFrame::christoffel(const std::array<double, 3>& s, double gamma[3][3][3],
                                double step) const {
    Mat3 G = metric(s);
    Mat3 dG[3];
    for (int d = 0; d < 3; ++d) {
        std::array<double, 3> sm2 = s, sm1 = s, sp1 = s, sp2 = s;
        sm2[static_cast<size_t>(d)] -= 2.0 * step;
        sm1[static_cast<size_t>(d)] -= step;
        sp1[static_cast<size_t>(d)] += step;
        sp2[static_cast<size_t>(d)] += 2.0 * step;
        Mat3 Gm2 = metric(sm2), Gm1 = metric(sm1), Gp1 = metric(sp1), Gp2 = metric(sp2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                dG[d].m[i][j] = (Gm2.m[i][j] - 8.0 * Gm1.m[i][j] + 8.0 * Gp1.m[i][j] -
                                 Gp2.m[i][j]) / (12.0 * step);
    }
    christoffel_from_derivs(G, dG, gamma);
}

Geometry::Geometry(ManifoldParams params, Chart chart)
    : params_(params), chart_(std::move(chart)) {
    switch (chart_.kind) {
        case ChartKind::BCV:
            break;
        case ChartKind::BergerEmbedded:
            if (params_.kappa <= 0.0)
                throw std::invalid_argument("embedded sphere chart requires kappa > 0");
            if (params_.tau == 0.0)
                throw std::invalid_argument("embedded sphere chart requires tau != 0");
            break;
        case ChartKind::ProductSplit:
            if (params_.tau != 0.0)
                throw std::invalid_argument("product chart requires tau = 0");
            if (chart_.base == ProductBase::Polar &&
                (!chart_.profile || chart_.profile->r_max <= 0.0))
                throw std::invalid_argument("polar product chart requires a base profile");
            break;
    }
}

bool Geometry::in_domain(const AVec& p) const {
    switch (chart_.kind) {
        case ChartKind::BCV:
            return 1.0 + 0.25 * params_.kappa * (p[0] * p[0] + p[1] * p[1]) > 1e-12;
        case ChartKind::BergerEmbedded:
            return p.n == 4 && std::abs(enorm(p) - 1.0) < 1e-9;
        case ChartKind::ProductSplit:
            if (chart_.base == ProductBase::Conformal)
                return 1.0 + 0.25 * params_.kappa * (p[0] * p[0] + p[1] * p[1]) > 1e-12;
            return p[0] > 0.0 && p[0] < chart_.profile->r_max;
    }
    return false;
}

AVec Geometry::normalize_point(const AVec& p) const {
    if (chart_.kind != ChartKind::BergerEmbedded) return p;
    double nrm = enorm(p);
    if (nrm < 0.5 || nrm > 2.0)
        throw std::domain_error("point too far from the unit sphere to renormalize");
    AVec q = (1.0 / nrm) * p;
    q.n = 4;
    return q;
}

AVec Geometry::hopf_field(const AVec& p) const {
    return AVec(-p[1], p[0], -p[3], p[2]);
}

double Geometry::orientation_sign() const {
    if (chart_.kind == ChartKind::BergerEmbedded) return params_.tau >= 0.0 ? 1.0 : -1.0;
    return 1.0;
}

double Geometry::metric_dot(const AVec& p, const AVec& u, const AVec& v) const {
    switch (chart_.kind) {
        case ChartKind::BergerEmbedded: {
            double kappa = params_.kappa, tau = params_.tau;
            double mu = 4.0 * tau * tau / kappa - 1.0;
            AVec V = hopf_field(p);
            return (4.0 / kappa) * (edot(u, v) + mu * edot(u, V) * edot(v, V));
        }
        case ChartKind::BCV: {
            Mat3 g;
            bcv_metric(params_.kappa, params_.tau, p[0], p[1], g);
            double s = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) s += g.m[i][j] * u[i] * v[j];
            return s;
        }
        case ChartKind::ProductSplit: {
            if (chart_.base == ProductBase::Conformal) {
                double lam = conformal_lambda(params_.kappa, p[0], p[1]);
                return lam * lam * (u[0] * v[0] + u[1] * v[1]) + u[2] * v[2];
            }
            if (!in_domain(p)) throw std::domain_error("point outside chart domain");
            double f = chart_.profile->f(p[0]);
            return u[0] * v[0] + f * f * u[1] * v[1] + u[2] * v[2];
        }
    }
    throw std::logic_error("unreachable");
}

double Geometry::metric_norm(const AVec& p, const AVec& u) const {
    return std::sqrt(std::max(0.0, metric_dot(p, u, u)));
}

void Geometry::metric_components(const AVec& p, Mat3& g, Mat3 dg[3]) const {
    switch (chart_.kind) {
        case ChartKind::BCV:
            bcv_components(params_.kappa, params_.tau, p[0], p[1], g, dg);
            return;
        case ChartKind::ProductSplit:
            if (chart_.base == ProductBase::Conformal) {
                bcv_components(params_.kappa, 0.0, p[0], p[1], g, dg);
                return;
            }
            {
                if (!in_domain(p)) throw std::domain_error("point outside chart domain");
                double f = chart_.profile->f(p[0]);
                double fp = chart_.profile->fp(p[0]);
                g = Mat3{};
                g.m[0][0] = 1.0;
                g.m[1][1] = f * f;
                g.m[2][2] = 1.0;
                dg[0] = Mat3{};
                dg[0].m[1][1] = 2.0 * f * fp;
                dg[1] = Mat3{};
                dg[2] = Mat3{};
                return;
            }
        case ChartKind::BergerEmbedded:
            throw std::logic_error("metric_components: not a coordinate chart");
    }
}

void Geometry::christoffel(const AVec& p, double gamma[3][3][3]) const {
    Mat3 g;
    Mat3 dg[3];
    metric_components(p, g, dg);
    christoffel_from_derivs(g, dg, gamma);
}

MetricData Geometry::metric_at(const AVec& p, double h_conn) const {
    if (!in_domain(p)) throw std::domain_error("point outside chart domain");
    MetricData md;
    if (chart_.kind == ChartKind::BergerEmbedded) {
        EmbeddedFrame fr(params_, p);
        md.g = fr.metric({0.0, 0.0, 0.0});
        fr.christoffel({0.0, 0.0, 0.0}, md.gamma, h_conn);
        md.local_frame = true;
        for (int a = 0; a < 3; ++a) md.frame[a] = fr.basis(a);
    } else {
        Mat3 dg[3];
        metric_components(p, md.g, dg);
        christoffel_from_derivs(md.g, dg, md.gamma);
    }
    double det = md.g.det();
    if (det <= 0.0) throw std::domain_error("metric degenerate at chart point");
    md.sqrt_det_g = std::sqrt(det);
    return md;
}

AVec Geometry::killing_at(const AVec& p) const {
    if (chart_.kind == ChartKind::BergerEmbedded) {
        double scale = params_.kappa / (4.0 * params_.tau);
        AVec v = scale * hopf_field(p);
        v.n = 4;
        return v;
    }
    return AVec(0.0, 0.0, 1.0);
}

AVec Geometry::cross(const AVec& p, const AVec& u, const AVec& v) const {
    if (chart_.kind == ChartKind::BergerEmbedded) {
        double kappa = params_.kappa, tau = params_.tau;
        double sgn = orientation_sign();
        AVec c = AVec::zero(4);
        for (int l = 0; l < 4; ++l) c[l] = sgn * det4(u, v, axis4(l), p);
        AVec V = hopf_field(p);
        AVec ct = c - edot(c, p) * p;
        double cv = edot(ct, V);
        AVec ch = ct - cv * V;
        // metric dual of the volume pairing: horizontal and vertical parts
        // scale by the inverse metric factors, with density 16|tau|/kappa^2.
        double at = std::abs(tau);
        AVec r = (4.0 * at / kappa) * ch + (cv / at) * V;
        r.n = 4;
        return r;
    }
    Mat3 g;
    Mat3 dg[3];
    metric_components(p, g, dg);
    double sq = std::sqrt(g.det());
    // covariant components: sqrt(det g) eps_ijk u^i v^j
    AVec cov(u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]);
    cov = sq * cov;
    Mat3 gi = g.inverse();
    AVec r(0, 0, 0);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) r[k] += gi.m[k][l] * cov[l];
    return r;
}

AVec Geometry::covariant_derivative_curve(const AVec& p, const AVec& tangent,
                                          const std::function<AVec(double)>& curve,
                                          const std::function<AVec(double)>& field_on_curve,
                                          double h, int accuracy, double h_conn) const {
    std::vector<double> nodes;
    if (accuracy >= 4)
        nodes = {-2.0 * h, -h, h, 2.0 * h};
    else
        nodes = {-h, h};
    std::vector<double> w = fd_weights(0.0, nodes, 1);

    if (chart_.kind == ChartKind::BergerEmbedded) {
        EmbeddedFrame fr(params_, p);
        std::array<double, 3> deriv{0.0, 0.0, 0.0};
        for (size_t k = 0; k < nodes.size(); ++k) {
            AVec q = curve(nodes[k]);
            auto s = fr.coords_of(q);
            auto comp = fr.vector_components(s, field_on_curve(nodes[k]));
            for (int a = 0; a < 3; ++a) deriv[static_cast<size_t>(a)] += w[k] * comp[static_cast<size_t>(a)];
        }
        double gamma[3][3][3];
        fr.christoffel({0.0, 0.0, 0.0}, gamma, h_conn);
        std::array<double, 3> W{}, F0{};
        for (int a = 0; a < 3; ++a) W[static_cast<size_t>(a)] = edot(tangent, fr.basis(a));
        F0 = fr.vector_components({0.0, 0.0, 0.0}, field_on_curve(0.0));
        AVec out = AVec::zero(4);
        for (int c = 0; c < 3; ++c) {
            double val = deriv[static_cast<size_t>(c)];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    val += gamma[c][a][b] * W[static_cast<size_t>(a)] * F0[static_cast<size_t>(b)];
            out += val * fr.basis(c);
        }
        out.n = 4;
        return out;
    }

    AVec deriv(0, 0, 0);
    for (size_t k = 0; k < nodes.size(); ++k) {
        AVec f = field_on_curve(nodes[k]);
        for (int i = 0; i < 3; ++i) deriv[i] += w[k] * f[i];
    }
    double gamma[3][3][3];
    christoffel(p, gamma);
    AVec F0 = field_on_curve(0.0);
    AVec out(0, 0, 0);
    for (int k = 0; k < 3; ++k) {
        double val = deriv[k];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) val += gamma[k][i][j] * tangent[i] * F0[j];
        out[k] = val;
    }
    return out;
}

AVec Geometry::covariant_derivative(const AVec& p, const AVec& W, const VectorField& field,
                                    double h, int accuracy, double h_conn) const {
    if (chart_.kind == ChartKind::BergerEmbedded) {
        auto curve = [&](double t) {
            AVec q = p + t * W;
            double nrm = enorm(q);
            q = (1.0 / nrm) * q;
            q.n = 4;
            return q;
        };
        auto f = [&](double t) { return field(curve(t)); };
        return covariant_derivative_curve(p, W, curve, f, h, accuracy, h_conn);
    }
    auto curve = [&](double t) { return p + t * W; };
    auto f = [&](double t) { return field(curve(t)); };
    return covariant_derivative_curve(p, W, curve, f, h, accuracy, h_conn);
}

double Geometry::killing_identity_residual(const AVec& p, const AVec& W, double h,
                                           int accuracy) const {
    // One declared step governs the whole evaluation, so refining h refines
    // the connection coefficients along with the field stencil.
    VectorField xi = [this](const AVec& q) { return killing_at(q); };
    AVec lhs = covariant_derivative(p, W, xi, h, accuracy, h);
    AVec rhs = params_.tau * cross(p, W, killing_at(p));
    return metric_norm(p, lhs - rhs);
}

AVec Geometry::submersion(const AVec& p) const {
    switch (chart_.kind) {
        case ChartKind::BCV:
        case ChartKind::ProductSplit: {
            AVec b(p[0], p[1], 0.0);
            b.n = 2;
            return b;
        }
        case ChartKind::BergerEmbedded: {
            double z1r = p[0], z1i = p[1], z2r = p[2], z2i = p[3];
            double scale = 1.0 / std::sqrt(params_.kappa);
            AVec b(scale * (z1r * z1r + z1i * z1i - z2r * z2r - z2i * z2i),
                   scale * 2.0 * (z1r * z2r + z1i * z2i),
                   scale * 2.0 * (z1i * z2r - z1r * z2i));
            return b;
        }
    }
    throw std::logic_error("unreachable");
}

AVec Geometry::submersion_differential(const AVec& p, const AVec& w, double h) const {
    if (chart_.kind != ChartKind::BergerEmbedded) {
        AVec b(w[0], w[1], 0.0);
        b.n = 2;
        return b;
    }
    auto at = [&](double t) {
        AVec q = p + t * w;
        q = (1.0 / enorm(q)) * q;
        q.n = 4;
        return submersion(q);
    };
    AVec fp = at(h), fm = at(-h);
    AVec d = (1.0 / (2.0 * h)) * (fp - fm);
    d.n = 3;
    return d;
}

double Geometry::base_dot(const AVec& base_point, const AVec& u, const AVec& v) const {
    switch (chart_.kind) {
        case ChartKind::BCV:
            return [&] {
                double lam = conformal_lambda(params_.kappa, base_point[0], base_point[1]);
                return lam * lam * (u[0] * v[0] + u[1] * v[1]);
            }();
        case ChartKind::ProductSplit:
            if (chart_.base == ProductBase::Conformal) {
                double lam = conformal_lambda(params_.kappa, base_point[0], base_point[1]);
                return lam * lam * (u[0] * v[0] + u[1] * v[1]);
            } else {
                double f = chart_.profile->f(base_point[0]);
                return u[0] * v[0] + f * f * u[1] * v[1];
            }
        case ChartKind::BergerEmbedded:
            return u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    }
    throw std::logic_error("unreachable");
}

namespace {

// R(u,w)w contracted against u for given Christoffel data and derivatives.
double sectional_contract(const Mat3& g, const double gamma[3][3][3],
                          const double dgamma[3][3][3][3], const double u[3],
                          const double w[3]) {
    double R[3] = {0.0, 0.0, 0.0};
    for (int l = 0; l < 3; ++l) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) {
                    double term = dgamma[i][l][j][k] - dgamma[j][l][i][k];
                    for (int m = 0; m < 3; ++m)
                        term += gamma[l][i][m] * gamma[m][j][k] -
                                gamma[l][j][m] * gamma[m][i][k];
                    acc += u[i] * w[j] * w[k] * term;
                }
        R[l] = acc;
    }
    auto dot = [&](const double a[3], const double b[3]) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) s += g.m[i][j] * a[i] * b[j];
        return s;
    };
    double num = 0.0;
    for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m) num += g.m[l][m] * R[l] * u[m];
    double den = dot(u, u) * dot(w, w) - dot(u, w) * dot(u, w);
    return num / den;
}

}  // namespace

double Geometry::sectional_curvature(const AVec& p, const AVec& u, const AVec& w) const {
    if (chart_.kind == ChartKind::BergerEmbedded) {
        EmbeddedFrame fr(params_, p);
        const double h_out = 3e-3;
        const double h_conn = 1e-5;
        double gamma0[3][3][3];
        fr.christoffel({0.0, 0.0, 0.0}, gamma0, h_conn);
        double dgamma[3][3][3][3];
        for (int d = 0; d < 3; ++d) {
            double gm2[3][3][3], gm1[3][3][3], gp1[3][3][3], gp2[3][3][3];
            std::array<double, 3> s{0.0, 0.0, 0.0};
            s[static_cast<size_t>(d)] = -2.0 * h_out;
            fr.christoffel(s, gm2, h_conn);
            s[static_cast<size_t>(d)] = -h_out;
            fr.christoffel(s, gm1, h_conn);
            s[static_cast<size_t>(d)] = h_out;
            fr.christoffel(s, gp1, h_conn);
            s[static_cast<size_t>(d)] = 2.0 * h_out;
            fr.christoffel(s, gp2, h_conn);
            for (int l = 0; l < 3; ++l)
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        dgamma[d][l][i][j] = (gm2[l][i][j] - 8.0 * gm1[l][i][j] +
                                              8.0 * gp1[l][i][j] - gp2[l][i][j]) /
                                             (12.0 * h_out);
        }
        Mat3 G = fr.metric({0.0, 0.0, 0.0});
        double u3[3], w3[3];
        for (int a = 0; a < 3; ++a) {
            u3[a] = edot(u, fr.basis(a));
            w3[a] = edot(w, fr.basis(a));
        }
        return sectional_contract(G, gamma0, dgamma, u3, w3);
    }

    const double h_out = 1e-3;
    double gamma0[3][3][3];
    christoffel(p, gamma0);
    double dgamma[3][3][3][3];
    for (int d = 0; d < 3; ++d) {
        double gm2[3][3][3], gm1[3][3][3], gp1[3][3][3], gp2[3][3][3];
        AVec q = p;
        q[d] = p[d] - 2.0 * h_out;
        christoffel(q, gm2);
        q[d] = p[d] - h_out;
        christoffel(q, gm1);
        q[d] = p[d] + h_out;
        christoffel(q, gp1);
        q[d] = p[d] + 2.0 * h_out;
        christoffel(q, gp2);
        for (int l = 0; l < 3; ++l)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    dgamma[d][l][i][j] = (gm2[l][i][j] - 8.0 * gm1[l][i][j] +
                                          8.0 * gp1[l][i][j] - gp2[l][i][j]) /
                                         (12.0 * h_out);
    }
    Mat3 g;
    Mat3 dg[3];
    metric_components(p, g, dg);
    double u3[3] = {u[0], u[1], u[2]};
    double w3[3] = {w[0], w[1], w[2]};
    return sectional_contract(g, gamma0, dgamma, u3, w3);
}

}  // namespace ektau
