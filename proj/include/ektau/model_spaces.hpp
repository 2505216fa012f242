#pragma once
#include <functional>
#include <memory>
#include <string>

#include "ektau/linalg.hpp"

namespace ektau {

// Parameter pair (kappa, tau) of a homogeneous 3-space with 4-dimensional
// isometry group: base curvature kappa, bundle curvature tau. The checked
// constructor rejects kappa - 4 tau^2 = 0 (round space forms have a larger
// isometry group and are outside the family); the unchecked constructor
// exists for limit-case smoke tests only.
struct ManifoldParams {
    double kappa = 0.0;
    double tau = 0.0;

    static ManifoldParams checked(double kappa, double tau);
    static ManifoldParams unchecked(double kappa, double tau);

    double k4t2() const { return kappa - 4.0 * tau * tau; }
};

enum class Family { Berger, Heisenberg, SL2Type, Product };

Family classify(const ManifoldParams& p);
std::string family_name(Family f);

// Rotationally symmetric base profile for product geometries: the base
// surface carries the metric dr^2 + f(r)^2 dphi^2 on (0, r_max), with
// Gauss curvature -f''/f.
struct PolarProfile {
    std::function<double(double)> f, fp, fpp;
    double r_max = 0.0;
    std::string name;

    double kbar(double r) const { return -fpp(r) / f(r); }

    // Round base of constant curvature kappa > 0 (f = sin(sqrt(k) r)/sqrt(k)).
    static PolarProfile round_sphere(double kappa);
    // Oval of revolution, f = sin r (1 + b sin^2 r) on (0, pi); curvature varies.
    static PolarProfile oval(double b);
};

enum class ChartKind { BCV, BergerEmbedded, ProductSplit };
enum class ProductBase { Conformal, Polar };

struct Chart {
    ChartKind kind = ChartKind::BCV;
    // ProductSplit only:
    ProductBase base = ProductBase::Conformal;
    std::shared_ptr<const PolarProfile> profile;  // Polar base
    double fiber_circumference = 2.0 * M_PI;      // 0 means a line fiber

    static Chart bcv() { return Chart{ChartKind::BCV, ProductBase::Conformal, nullptr, 0.0}; }
    static Chart berger_embedded() {
        return Chart{ChartKind::BergerEmbedded, ProductBase::Conformal, nullptr, 0.0};
    }
    static Chart product_conformal(double fiber_circ = 2.0 * M_PI) {
        return Chart{ChartKind::ProductSplit, ProductBase::Conformal, nullptr, fiber_circ};
    }
    static Chart product_polar(PolarProfile profile, double fiber_circ = 2.0 * M_PI) {
        return Chart{ChartKind::ProductSplit, ProductBase::Polar,
                     std::make_shared<const PolarProfile>(std::move(profile)), fiber_circ};
    }
};

// Metric data at a point: components, Christoffel symbols and volume density
// in the chart basis (coordinate charts) or in an orthonormal-at-p local
// frame (embedded chart).
struct MetricData {
    Mat3 g;
    double gamma[3][3][3] = {};  // gamma[k][i][j], symmetric in i,j
    double sqrt_det_g = 0.0;
    bool local_frame = false;
    AVec frame[3];  // embedded chart: ambient vectors of the local frame
};

using VectorField = std::function<AVec(const AVec&)>;

// Local tangent-frame chart of the embedded Berger sphere around a point:
// q(s) = (p + s_a t_a)/|p + s_a t_a| with t an orthonormal tangent basis.
class EmbeddedFrame {
  public:
    EmbeddedFrame(const ManifoldParams& params, const AVec& p);

    const AVec& origin() const { return p_; }
    const AVec& basis(int a) const { return t_[static_cast<size_t>(a)]; }

    AVec point_at(const std::array<double, 3>& s) const;
    // Gnomonic chart coordinates of a nearby point.
    std::array<double, 3> coords_of(const AVec& q) const;
    // Coordinate basis vectors at chart position s.
    std::array<AVec, 3> coord_basis(const std::array<double, 3>& s) const;
    // Components of a tangent vector at q(s) in the coordinate basis.
    std::array<double, 3> vector_components(const std::array<double, 3>& s, const AVec& w) const;
    // Metric components G_ab(s).
    Mat3 metric(const std::array<double, 3>& s) const;
    // Christoffel symbols at chart position s by centered differences of G.
    void christoffel(const std::array<double, 3>& s, double gamma[3][3][3], double step) const;

  private:
    ManifoldParams params_;
    AVec p_;
    std::array<AVec, 3> t_;
};

// A model space together with a concrete chart. All geometric operations:
// metric, Killing field, vector cross product, ambient covariant derivative,
// the fibration onto the base surface, and sectional curvature samples.
class Geometry {
  public:
    Geometry(ManifoldParams params, Chart chart);

    const ManifoldParams& params() const { return params_; }
    const Chart& chart() const { return chart_; }
    int dim() const { return chart_.kind == ChartKind::BergerEmbedded ? 4 : 3; }

    // Chart domain test; metric evaluation throws outside the domain.
    bool in_domain(const AVec& p) const;
    // Embedded chart: renormalize onto the unit sphere. Identity elsewhere.
    AVec normalize_point(const AVec& p) const;

    double metric_dot(const AVec& p, const AVec& u, const AVec& v) const;
    double metric_norm(const AVec& p, const AVec& u) const;
    MetricData metric_at(const AVec& p, double h_conn = 1e-5) const;

    // Unit vertical Killing field.
    AVec killing_at(const AVec& p) const;

    // Metric vector cross product u ^ v for the chart orientation.
    AVec cross(const AVec& p, const AVec& u, const AVec& v) const;

    // Covariant derivative of a vector field along the direction W at p,
    // by centered differences of the field with step h. The connection
    // coefficients use their own step h_conn so that a coarse field stencil
    // does not coarsen them; pass h_conn = h to tie the whole evaluation to
    // one declared step.
    AVec covariant_derivative(const AVec& p, const AVec& W, const VectorField& field,
                              double h, int accuracy = 2, double h_conn = 1e-5) const;

    // Covariant derivative along an explicit curve with known tangent at 0;
    // field_on_curve(t) is the field at curve parameter t, curve(0) = p.
    AVec covariant_derivative_curve(const AVec& p, const AVec& tangent,
                                    const std::function<AVec(double)>& curve,
                                    const std::function<AVec(double)>& field_on_curve,
                                    double h, int accuracy = 2, double h_conn = 1e-5) const;

    // Residual of the Killing derivative identity at (p, W): the covariant
    // derivative of the vertical field minus tau (W ^ xi). Returns the
    // metric norm of the difference.
    double killing_identity_residual(const AVec& p, const AVec& W, double h,
                                     int accuracy = 2) const;

    // Fibration onto the base surface. Returns 2 components (conformal or
    // polar base coordinates) or 3 (embedded base sphere in R^3).
    AVec submersion(const AVec& p) const;
    AVec submersion_differential(const AVec& p, const AVec& w, double h = 1e-5) const;
    // Base metric pairing at a base point returned by submersion().
    double base_dot(const AVec& base_point, const AVec& u, const AVec& v) const;

    // Sectional curvature of the tangent plane spanned by u, w.
    double sectional_curvature(const AVec& p, const AVec& u, const AVec& w) const;

    // Chart Christoffel symbols (coordinate charts only).
    void christoffel(const AVec& p, double gamma[3][3][3]) const;

    // Chart-basis metric and its coordinate derivatives (coordinate charts only).
    void metric_components(const AVec& p, Mat3& g, Mat3 dg[3]) const;

  private:
    ManifoldParams params_;
    Chart chart_;

    AVec hopf_field(const AVec& p) const;  // V(p), embedded chart
    double orientation_sign() const;
};

}  // namespace ektau
