#pragma once
#include <functional>
#include <memory>
#include <string>

#include "ektau/surface_calculus.hpp"

namespace ektau {

// Closed curve on the unit base 2-sphere with two derivatives; the first
// component is the height above the fibration's distinguished axis.
struct BaseCurve {
    std::function<AVec(double)> n, dn, ddn;
    double period = 2.0 * M_PI;
    std::string name;

    static BaseCurve equator();
    static BaseCurve latitude(double height);
    // latitude circle modulated by a height wave of the given mode
    static BaseCurve wave(int mode, double amplitude);
    // periodic cubic spline through sampled sphere points, then radially
    // projected back onto the unit sphere with exact derivatives
    static BaseCurve from_samples(const std::vector<AVec>& points, double period = 2.0 * M_PI);
};

// Closed curve in the conformal base plane of a cylindrical chart.
struct PlaneCurve {
    std::function<AVec(double)> c, dc;
    double period = 2.0 * M_PI;
    std::string name;

    static PlaneCurve circle(double radius);
    static PlaneCurve ellipse(double a, double b);
};

// Full fiber preimage of a closed base curve in an embedded round-fibration
// sphere: both parameter directions close up; the u-direction follows the
// base curve, the v-direction runs along the fibers.
SurfaceEvaluator make_hopf_torus(std::shared_ptr<const Geometry> geo, const BaseCurve& curve,
                                 int lift_nodes = 4096);

// Fiber preimage of a closed plane curve in a cylindrical chart with tau != 0,
// compactified in the fiber direction by the declared period.
SurfaceEvaluator make_fiber_cylinder(std::shared_ptr<const Geometry> geo,
                                     const PlaneCurve& curve, double fiber_period);

// Vertical torus over a closed plane curve in a product chart (tau = 0).
SurfaceEvaluator make_product_torus(std::shared_ptr<const Geometry> geo,
                                    const PlaneCurve& curve);

// Rotational sphere in a polar product chart: meridian r grows linearly to
// the profile edge while the height traces eccentricity * cos(u).
SurfaceEvaluator make_rotational_sphere(std::shared_ptr<const Geometry> geo,
                                        double eccentricity);

// Constant-height slice sphere in a polar product chart (totally geodesic).
SurfaceEvaluator make_slice_sphere(std::shared_ptr<const Geometry> geo, double height = 0.0);

// Torus graphed over the fiber cylinder of a polar product chart: the radial
// coordinate oscillates along the fiber.
SurfaceEvaluator make_graph_torus(std::shared_ptr<const Geometry> geo, double radius,
                                  double amplitude, double fiber_len = 2.0 * M_PI);

// Normal-direction perturbation of a closure-backed surface. The bump
// vanishes at poles and respects periodicity in both directions.
SurfaceEvaluator make_perturbed(const SurfaceEvaluator& base, double amplitude, int mode);

// One surface described as key = value text: the family, the space
// parameters, the base curve or profile, grid resolution, and an optional
// perturbation. Unknown keys are rejected.
struct SurfaceRecipe {
    std::string family;  // hopf_torus | hopf_cylinder | product_torus |
                         // slice_sphere | rotational_sphere | graph_torus
    double kappa = 4.0, tau = 0.8;
    int resolution_u = 256, resolution_v = 0;  // 0: derived from the family
    std::string curve = "equator";             // equator | latitude | wave | circle | ellipse
    double curve_height = 0.0;                 // latitude height in (-1, 1)
    int curve_mode = 3;
    double curve_amplitude = 0.15;
    double radius = 1.0, radius_b = 0.0;       // plane circle / ellipse axes
    double height = 0.0;                       // slice height
    double eccentricity = 0.2;                 // rotational profile scale
    double wobble = 0.25;                      // graph torus radial amplitude
    double fiber_period = 2.0 * M_PI;          // fiber length for quotients/products
    std::string profile = "round";             // round | oval
    double oval_b = 0.1;
    double amplitude = 0.0;                    // perturbation (0 = none)
    int mode = 0;
    int lift_nodes = 0;                        // 0: eight times resolution_u

    static SurfaceRecipe parse(const std::string& text);
    static SurfaceRecipe parse_file(const std::string& path);
};

// Instantiate the geometry and evaluator a recipe describes.
SurfaceEvaluator build_from_recipe(const SurfaceRecipe& r);

// Is the u-direction a pole-to-pole profile for this family?
bool recipe_is_sphere(const SurfaceRecipe& r);

}  // namespace ektau
