#pragma once
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ektau/linalg.hpp"
#include "ektau/model_spaces.hpp"

namespace ektau {

// Parameter domain of an immersed surface patch. The u-interval either closes
// periodically or ends in rotation poles (offset grids keep nodes interior);
// the v-interval is periodic for every supported family.
struct SurfaceDomain {
    double u0 = 0.0, u1 = 2.0 * M_PI;
    double v0 = 0.0, v1 = 2.0 * M_PI;
    bool periodic_u = true;
    bool periodic_v = true;
    bool pole_lo = false, pole_hi = false;
};

// Closure-backed immersion: position and first parameter derivatives at any
// (u, v) in the domain. All higher-order data is produced by small-step
// differencing of these closures.
struct SurfaceEvaluator {
    std::shared_ptr<const Geometry> geo;
    SurfaceDomain dom;
    std::string name;
    std::function<AVec(double, double)> position;
    std::function<AVec(double, double)> deriv_u;
    std::function<AVec(double, double)> deriv_v;
};

// Pointwise frame of an immersed surface: tangent basis, unit normal, first
// fundamental form, shape operator, and the tangential/normal split of the
// ambient vertical field.
struct FrameData {
    double u = 0.0, v = 0.0;
    AVec p, t_u, t_v;      // position and parameter tangents
    AVec normal;           // unit normal (cross of the tangents)
    double E = 0, F = 0, G = 0;
    double sqrt_det = 0;   // area density sqrt(EG - F^2)
    Mat2 shape;            // shape operator in the (t_u, t_v) basis
    double mean_h = 0;     // mean curvature (half trace of the shape operator)
    double vert_c = 0;     // vertical component of the normal
    AVec x_amb;            // tangential part of the vertical field (ambient)
    double x1 = 0, x2 = 0; // its components in the (t_u, t_v) basis
    double k_ext = 0;      // Gauss curvature assembled from the shape operator
    double k_int = 0;      // intrinsic Gauss curvature (grid pass)
    double k_base = 0;     // base-surface curvature under the point
};

// Sampled surface: an nu x nv grid of frames with the chart geometry and the
// originating closures (null for grids imported from files).
struct ImmersedSurface {
    std::shared_ptr<const Geometry> geo;
    std::shared_ptr<const SurfaceEvaluator> eval;  // may be null
    SurfaceDomain dom;
    std::string name;
    int nu = 0, nv = 0;
    double du = 0.0, dv = 0.0;
    std::vector<FrameData> frames;

    FrameData& at(int i, int j) { return frames[static_cast<size_t>(i * nv + j)]; }
    const FrameData& at(int i, int j) const { return frames[static_cast<size_t>(i * nv + j)]; }
    // u-coordinate of grid row i (offset half a step off poles), v of column j
    double u_of(int i) const { return dom.u0 + (dom.periodic_u ? i : i + 0.5) * du; }
    double v_of(int j) const { return dom.v0 + j * dv; }
};

// Frame of the immersion at one parameter point, entirely from the closures.
FrameData compute_frame(const SurfaceEvaluator& ev, double u, double v);

// First-order slice of the same: tangents, normal, fundamental form, and the
// vertical split, without the shape-operator stencils.
FrameData frame_first_order_at(const SurfaceEvaluator& ev, double u, double v);

// Sample the immersion on an nu x nv grid and run the intrinsic passes.
ImmersedSurface build_surface(std::shared_ptr<const SurfaceEvaluator> ev, int nu, int nv);

// Derivative of a per-node scalar along grid direction dir (0 = u, 1 = v)
// of order m with the requested accuracy, honoring the surface topology.
double surface_scalar_derivative(const ImmersedSurface& S,
                                 const std::function<double(int, int)>& fetch, int i, int j,
                                 int dir, int m, int accuracy);

// Levi-Civita symbols of the induced metric at a grid node, from centered
// differences of the first fundamental form.
void surface_christoffel(const ImmersedSurface& S, int i, int j, double gamma[2][2][2],
                         int accuracy = 2);

// Components of a tangent ambient vector in the (t_u, t_v) basis.
std::array<double, 2> tangent_components(const FrameData& f, const Geometry& geo,
                                         const AVec& w);

// Integral of a frame functional over the surface: spectral trapezoid sums in
// periodic directions, Gauss-Legendre across pole-to-pole profiles. The
// integrand receives a fully populated pointwise frame.
double integrate_pointwise(const SurfaceEvaluator& ev, int nu, int nv,
                           const std::function<double(const FrameData&)>& f);

// Grid-sampled integral (trapezoid weights; doubly periodic surfaces only).
double integrate_grid(const ImmersedSurface& S,
                      const std::function<double(const FrameData&)>& f);

// Total area.
double surface_area(const ImmersedSurface& S);

// Grid exchange as CSV (doubly periodic grids): a metadata line, a header
// line, then one row of chart coordinates per node.
void export_grid_csv(const ImmersedSurface& S, const std::string& path);
ImmersedSurface import_grid_csv(std::shared_ptr<const Geometry> geo, const std::string& path);

}  // namespace ektau
