#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ektau/surface_calculus.hpp"

namespace ektau {

// Pointwise / integral residual of one verified identity over a surface grid.
struct ResidualReport {
    std::string identity;
    double max_abs = 0.0;
    double l2 = 0.0;  // root-mean-square over samples
    int samples = 0;
    double integral = std::numeric_limits<double>::quiet_NaN();
    int resolution_u = 0;
    int resolution_v = 0;
    double order = std::numeric_limits<double>::quiet_NaN();  // filled by ladder runs
};

// One located zero of the tangential field X.
struct ZeroRecord {
    double u = 0.0;
    double v = 0.0;  // collapsed coordinate 0 for zeros sitting on a rotation pole
    double det_grad = 0.0;     // det of the field derivative, from grid differences
    double det_formula = 0.0;  // the curvature expression it must match
    int index = 0;             // +1 / -1, or 0 when degenerate
    bool at_pole = false;
    bool degenerate = false;
};

struct IndexReport {
    std::vector<ZeroRecord> zeros;
    int index_sum = 0;
    int euler_characteristic = 0;
    bool degenerate = false;
    bool field_trivial = false;  // X vanishes identically; counting does not apply
};

struct ScreenVerdict {
    std::string clause;
    std::string verdict;  // "PASS", "FAIL", or "NOT-APPLICABLE"
    std::string detail;
};

// Pointwise identities, measured grid-natively at the given stencil accuracy.
ResidualReport check_covariant_X(const ImmersedSurface& S, int accuracy = 2);
ResidualReport check_divergence_pair(const ImmersedSurface& S, int accuracy = 2);
ResidualReport check_gradient_C(const ImmersedSurface& S, int accuracy = 2);

// Intrinsic-vs-extrinsic curvature agreement (both fields already on the grid).
ResidualReport check_curvature_consistency(const ImmersedSurface& S);

// Integral identities; the report's `integral` field carries the area-normalized
// left-hand side. The second form reads the varying base curvature field and is
// defined only for untwisted product geometries.
ResidualReport integral_formula(const ImmersedSurface& S);
ResidualReport product_integral_formula(const ImmersedSurface& S);

// Zero/index census of the tangential field X with the two-way determinant check.
IndexReport index_analysis(const ImmersedSurface& S);

// Second-derivative determinant of C against its curvature expression at
// samples hugging the rotation poles (where C^2 -> 1). Empty when no samples
// qualify or the field is identically vertical.
ResidualReport hessian_check_at_extremes(const ImmersedSurface& S);

// Numeric screening of the classification statements on this instance.
std::vector<ScreenVerdict> screen_theorems(const ImmersedSurface& S);

// Refinement-ladder plumbing: rebuild at each resolution, measure, fit a
// convergence order (kOrderConverged when the residual sits on the floor).
struct LadderResult {
    std::vector<int> resolutions;
    std::vector<double> residuals;
    double order = 0.0;
};
LadderResult residual_ladder(const std::function<ImmersedSurface(int)>& build,
                             const std::function<double(const ImmersedSurface&)>& measure,
                             const std::vector<int>& rungs, double floor_value = 1e-11);

// Shared screening tolerances.
inline constexpr double kFlatTol = 1e-6;
inline constexpr double kVertTol = 1e-6;
inline constexpr double kDegenerateTol = 1e-6;
inline constexpr double kPoleBand = 1e-4;

}  // namespace ektau
