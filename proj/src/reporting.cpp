#include "ektau/reporting.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ektau/numerics.hpp"
#include "json.hpp"

namespace ektau {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kKillingStep = 1e-4;
constexpr int kKillingPairs = 100;

std::string num(double x) {
    if (!std::isfinite(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

AVec random_bcv_point(SplitMix64& rng, double kappa) {
    for (;;) {
        AVec p(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-1.0, 1.0));
        if (1.0 + 0.25 * kappa * (p[0] * p[0] + p[1] * p[1]) > 0.2) return p;
    }
}

AVec random_vec3(SplitMix64& rng) {
    return AVec(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
}

AVec random_sphere_point(SplitMix64& rng) {
    for (;;) {
        AVec p(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
               rng.uniform(-1.0, 1.0));
        double nrm = enorm(p);
        if (nrm > 0.3 && nrm < 1.0) {
            AVec q = (1.0 / nrm) * p;
            q.n = 4;
            return q;
        }
    }
}

AVec random_sphere_tangent(SplitMix64& rng, const AVec& p) {
    for (;;) {
        AVec v(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
               rng.uniform(-1.0, 1.0));
        v -= edot(v, p) * p;
        double nrm = enorm(v);
        if (nrm > 0.2) {
            AVec u = (1.0 / nrm) * v;
            u.n = 4;
            return u;
        }
    }
}

// Random point admissible for a polar product chart.
AVec random_polar_point(SplitMix64& rng, const Chart& chart) {
    double r_max = chart.profile ? chart.profile->r_max : M_PI;
    return AVec(rng.uniform(0.1 * r_max, 0.9 * r_max), rng.uniform(0.0, 2.0 * M_PI),
                rng.uniform(-1.0, 1.0));
}

// Area from the grid frames; the profile direction uses its midpoint rows.
double grid_area(const ImmersedSurface& S) {
    double a = 0.0;
    for (const auto& f : S.frames) a += f.sqrt_det;
    return a * S.du * S.dv;
}

ImmersedSurface build_recipe_surface(const SurfaceRecipe& r) {
    SurfaceEvaluator ev = build_from_recipe(r);
    int nu = r.resolution_u;
    int nv = r.resolution_v > 0 ? r.resolution_v : (recipe_is_sphere(r) ? nu / 2 : nu);
    return build_surface(std::make_shared<SurfaceEvaluator>(std::move(ev)), nu, nv);
}

struct IdentityRow {
    std::string name;
    double value = 0.0;      // the number compared against the bar
    double max_abs = 0.0;
    double l2 = 0.0;
    int samples = 0;
    double integral = std::numeric_limits<double>::quiet_NaN();
    double order = std::numeric_limits<double>::quiet_NaN();
    double tolerance = 0.0;
    bool pass = true;
    bool applicable = true;
    std::string note;
};

IdentityRow row_from(const ResidualReport& rep, double value, double tol) {
    IdentityRow row;
    row.name = rep.identity;
    row.value = value;
    row.max_abs = rep.max_abs;
    row.l2 = rep.l2;
    row.samples = rep.samples;
    row.integral = rep.integral;
    row.order = rep.order;
    row.tolerance = tol;
    row.pass = value < tol;
    return row;
}

void append_csv_row(std::string& csv, const std::string& hash, const std::string& surface,
                    const IdentityRow& row, int nu, int nv) {
    csv += hash + "," + surface + "," + row.name + "," + std::to_string(nu) + "," +
           std::to_string(nv) + "," + num(row.max_abs) + "," + num(row.l2) + "," +
           std::to_string(row.samples) + "," + num(row.integral) + "," + num(row.order) +
           "," + num(row.tolerance) + "," + (row.pass ? "1" : "0") + "\n";
}

ordered_json json_from(const IdentityRow& row) {
    ordered_json j;
    j["identity"] = row.name;
    j["value"] = row.value;
    j["max_abs"] = row.max_abs;
    j["l2"] = row.l2;
    j["samples"] = row.samples;
    if (std::isfinite(row.integral)) j["integral"] = row.integral;
    if (std::isfinite(row.order)) j["order"] = row.order;
    j["tolerance"] = row.tolerance;
    j["pass"] = row.pass;
    if (!row.note.empty()) j["note"] = row.note;
    return j;
}

std::map<std::string, double> effective_tolerances(const RunConfig& cfg) {
    auto tols = default_tolerances();
    for (const auto& [k, v] : cfg.tolerances) {
        if (!tols.count(k))
            throw std::invalid_argument("unknown tolerance name: " + k);
        tols[k] = v;
    }
    return tols;
}

ordered_json surface_block(const SurfaceRecipe& r, const ImmersedSurface& S) {
    ordered_json j;
    j["name"] = S.eval ? S.eval->name : S.name;
    j["family"] = r.family;
    j["kappa"] = r.kappa;
    j["tau"] = r.tau;
    j["bundle_discriminant"] = r.kappa - 4.0 * r.tau * r.tau;
    j["resolution_u"] = S.nu;
    j["resolution_v"] = S.nv;
    j["area"] = grid_area(S);
    return j;
}

}  // namespace

std::map<std::string, double> default_tolerances() {
    return {
        {"killing", 1e-6},
        {"tangential-field-derivative", 1e-2},
        {"divergence-and-rotation", 1e-2},
        {"vertical-gradient", 1e-2},
        {"curvature-consistency", 1e-4},
        {"curvature-integral", 1e-6},
        {"product-curvature-integral", 1e-6},
        {"pole-hessian", 5e-4},
        {"ladder-order", 1.5},
    };
}

std::string recipe_fingerprint(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

KillingCheck killing_spot_check(const Geometry& geo, int pairs, double step, int accuracy,
                                std::uint64_t seed) {
    SplitMix64 rng(seed);
    KillingCheck out;
    out.pairs = pairs;
    out.step = step;
    for (int k = 0; k < pairs; ++k) {
        AVec p, w;
        if (geo.chart().kind == ChartKind::BergerEmbedded) {
            p = random_sphere_point(rng);
            w = random_sphere_tangent(rng, p);
        } else if (geo.chart().kind == ChartKind::ProductSplit &&
                   geo.chart().base == ProductBase::Polar) {
            p = random_polar_point(rng, geo.chart());
            w = random_vec3(rng);
        } else {
            p = random_bcv_point(rng, geo.params().kappa);
            w = random_vec3(rng);
        }
        out.max_residual =
            std::max(out.max_residual, geo.killing_identity_residual(p, w, step, accuracy));
    }
    return out;
}

CommandOutcome run_verify(const std::string& recipe_text, const RunConfig& cfg) {
    auto tols = effective_tolerances(cfg);
    SurfaceRecipe recipe = SurfaceRecipe::parse(recipe_text);
    ImmersedSurface S = build_recipe_surface(recipe);
    std::string hash = recipe_fingerprint(recipe_text);
    const std::string& sname = S.eval->name;

    CommandOutcome out;
    std::vector<IdentityRow> rows;

    KillingCheck kc = killing_spot_check(*S.geo, kKillingPairs, kKillingStep, 2, cfg.seed);
    {
        IdentityRow row;
        row.name = "killing";
        row.value = row.max_abs = kc.max_residual;
        row.l2 = kc.max_residual;
        row.samples = kc.pairs;
        row.tolerance = tols.at("killing");
        row.pass = row.value < row.tolerance;
        rows.push_back(row);
    }

    auto push = [&](const ResidualReport& rep, double value) {
        rows.push_back(row_from(rep, value, tols.at(rep.identity)));
    };
    auto push_max = [&](const ResidualReport& rep) { push(rep, rep.max_abs); };
    push_max(check_covariant_X(S));
    push_max(check_divergence_pair(S));
    push_max(check_gradient_C(S));
    push_max(check_curvature_consistency(S));
    ResidualReport ir = integral_formula(S);
    push(ir, std::fabs(ir.integral));
    if (S.geo->params().tau == 0.0) {
        ResidualReport pr = product_integral_formula(S);
        push(pr, std::fabs(pr.integral));
    }
    ResidualReport hs = hessian_check_at_extremes(S);
    if (hs.samples > 0) {
        push(hs, hs.max_abs);
    } else if (S.dom.pole_lo || S.dom.pole_hi) {
        IdentityRow row;
        row.name = "pole-hessian";
        row.applicable = false;
        row.note = "no qualifying pole samples";
        row.tolerance = tols.at("pole-hessian");
        rows.push_back(row);
    }

    IndexReport idx = index_analysis(S);
    bool index_pass = idx.field_trivial || idx.degenerate ||
                      idx.index_sum == idx.euler_characteristic;
    auto screens = screen_theorems(S);

    for (const auto& row : rows)
        if (row.applicable && !row.pass) out.failed.push_back(row.name);
    if (!index_pass) out.failed.push_back("index-sum");
    for (const auto& v : screens)
        if (v.verdict == "FAIL") out.failed.push_back("screen:" + v.clause);
    out.exit_code = out.failed.empty() ? 0 : 1;

    ordered_json j;
    j["command"] = "verify";
    j["recipe_hash"] = hash;
    j["seed"] = cfg.seed;
    j["surface"] = surface_block(recipe, S);
    j["killing_step"] = kc.step;
    j["identities"] = ordered_json::array();
    for (const auto& row : rows) j["identities"].push_back(json_from(row));
    {
        ordered_json ji;
        ji["euler_characteristic"] = idx.euler_characteristic;
        ji["zero_count"] = static_cast<int>(idx.zeros.size());
        ji["index_sum"] = idx.index_sum;
        ji["field_trivial"] = idx.field_trivial;
        ji["degenerate"] = idx.degenerate;
        ji["pass"] = index_pass;
        ji["zeros"] = ordered_json::array();
        for (const auto& z : idx.zeros) {
            ordered_json jz;
            jz["u"] = z.u;
            jz["v"] = z.v;
            jz["at_pole"] = z.at_pole;
            jz["det_grad"] = z.det_grad;
            jz["det_formula"] = z.det_formula;
            jz["index"] = z.index;
            jz["degenerate"] = z.degenerate;
            ji["zeros"].push_back(jz);
        }
        j["index"] = ji;
    }
    j["screens"] = ordered_json::array();
    for (const auto& v : screens) {
        ordered_json js;
        js["clause"] = v.clause;
        js["verdict"] = v.verdict;
        js["detail"] = v.detail;
        j["screens"].push_back(js);
    }
    j["failures"] = out.failed;
    j["exit"] = out.exit_code;
    out.json = j.dump(2) + "\n";

    out.csv = "recipe_hash,surface,identity,nu,nv,max_abs,l2,samples,integral,order,tolerance,pass\n";
    for (const auto& row : rows) append_csv_row(out.csv, hash, sname, row, S.nu, S.nv);
    return out;
}

CommandOutcome run_ladder(const std::string& recipe_text, const RunConfig& cfg) {
    if (cfg.ladder.size() < 3)
        throw std::invalid_argument("a refinement ladder needs at least three resolutions");
    for (size_t i = 0; i + 1 < cfg.ladder.size(); ++i)
        if (cfg.ladder[i + 1] <= cfg.ladder[i])
            throw std::invalid_argument("ladder resolutions must be strictly increasing");
    auto tols = effective_tolerances(cfg);
    double order_bar = tols.at("ladder-order");

    SurfaceRecipe recipe = SurfaceRecipe::parse(recipe_text);
    // Pin the generating maps across rungs so only the measuring grid refines.
    if (recipe.lift_nodes == 0) recipe.lift_nodes = 8 * cfg.ladder.back();
    std::string hash = recipe_fingerprint(recipe_text);

    struct Series {
        std::string name;
        std::vector<double> residuals;
        double order = 0.0;
        bool pass = true;
    };
    std::vector<Series> series = {{"tangential-field-derivative", {}, 0.0, true},
                                  {"divergence-and-rotation", {}, 0.0, true},
                                  {"vertical-gradient", {}, 0.0, true},
                                  {"curvature-consistency", {}, 0.0, true},
                                  {"curvature-integral", {}, 0.0, true}};
    std::string sname;
    for (int rung : cfg.ladder) {
        SurfaceRecipe r = recipe;
        r.resolution_u = rung;
        r.resolution_v = 0;
        ImmersedSurface S = build_recipe_surface(r);
        sname = S.eval->name;
        series[0].residuals.push_back(check_covariant_X(S).max_abs);
        series[1].residuals.push_back(check_divergence_pair(S).max_abs);
        series[2].residuals.push_back(check_gradient_C(S).max_abs);
        series[3].residuals.push_back(check_curvature_consistency(S).max_abs);
        series[4].residuals.push_back(std::fabs(integral_formula(S).integral));
    }
    for (auto& s : series) {
        s.order = fitted_order(s.residuals, 1e-11);
        s.pass = s.order >= order_bar || s.order == kOrderConverged;
    }

    // The ambient derivative law refines in its stencil step, not the grid.
    Series killing{"killing", {}, 0.0, true};
    {
        SurfaceRecipe r = recipe;
        r.resolution_u = cfg.ladder.front();
        r.resolution_v = 0;
        SurfaceEvaluator ev = build_from_recipe(r);
        for (double step : {4.0 * kKillingStep, 2.0 * kKillingStep, kKillingStep})
            killing.residuals.push_back(
                killing_spot_check(*ev.geo, kKillingPairs, step, 2, cfg.seed).max_residual);
        killing.order = fitted_order(killing.residuals, 1e-12);
        killing.pass = killing.order >= order_bar || killing.order == kOrderConverged;
    }
    series.insert(series.begin(), killing);

    CommandOutcome out;
    for (const auto& s : series)
        if (!s.pass) out.failed.push_back(s.name);
    out.exit_code = out.failed.empty() ? 0 : 1;

    ordered_json j;
    j["command"] = "ladder";
    j["recipe_hash"] = hash;
    j["seed"] = cfg.seed;
    j["surface"] = sname;
    j["rungs"] = cfg.ladder;
    j["order_bar"] = order_bar;
    j["identities"] = ordered_json::array();
    for (const auto& s : series) {
        ordered_json js;
        js["identity"] = s.name;
        js["residuals"] = s.residuals;
        js["order"] = s.order;
        js["converged_floor"] = (s.order == kOrderConverged);
        js["pass"] = s.pass;
        j["identities"].push_back(js);
    }
    j["failures"] = out.failed;
    j["exit"] = out.exit_code;
    out.json = j.dump(2) + "\n";

    out.csv = "recipe_hash,surface,identity,rung,residual,order,pass\n";
    for (const auto& s : series)
        for (size_t k = 0; k < s.residuals.size(); ++k)
            out.csv += hash + "," + sname + "," + s.name + "," +
                       std::to_string(k < cfg.ladder.size() ? cfg.ladder[k] : 0) + "," +
                       num(s.residuals[k]) + "," + num(s.order) + "," +
                       (s.pass ? "1" : "0") + "\n";
    return out;
}

CommandOutcome run_sweep(const std::string& recipe_text, const RunConfig& cfg) {
    if (cfg.sweep_kappa.empty() || cfg.sweep_tau.empty())
        throw std::invalid_argument("sweep needs --sweep-kappa and --sweep-tau value lists");
    auto tols = effective_tolerances(cfg);
    SurfaceRecipe base = SurfaceRecipe::parse(recipe_text);
    std::string hash = recipe_fingerprint(recipe_text);

    CommandOutcome out;
    ordered_json rows = ordered_json::array();
    out.csv =
        "recipe_hash,kappa,tau,bundle_discriminant,tau_sq,kappa_minus_3tau_sq,built,"
        "k_min,k_max,c_max,integral_abs,screen_failures,note\n";

    for (double kappa : cfg.sweep_kappa) {
        for (double tau : cfg.sweep_tau) {
            double k4t2 = kappa - 4.0 * tau * tau;
            double tau2 = tau * tau, k3t2 = kappa - 3.0 * tau * tau;
            ordered_json row;
            row["kappa"] = kappa;
            row["tau"] = tau;
            row["bundle_discriminant"] = k4t2;
            row["tau_sq"] = tau2;
            row["kappa_minus_3tau_sq"] = k3t2;
            std::string note;
            bool built = false;
            double k_min = 0.0, k_max = 0.0, c_max = 0.0, integral_abs = 0.0;
            int screen_failures = 0;
            try {
                SurfaceRecipe r = base;
                r.kappa = kappa;
                r.tau = tau;
                ImmersedSurface S = build_recipe_surface(r);
                built = true;
                k_min = 1e300;
                k_max = -1e300;
                for (const auto& f : S.frames) {
                    k_min = std::min(k_min, f.k_ext);
                    k_max = std::max(k_max, f.k_ext);
                    c_max = std::max(c_max, std::fabs(f.vert_c));
                }
                integral_abs = std::fabs(integral_formula(S).integral);
                for (const auto& v : screen_theorems(S))
                    if (v.verdict == "FAIL") ++screen_failures;
                if (integral_abs >= tols.at("curvature-integral")) {
                    char tag[96];
                    std::snprintf(tag, sizeof tag, "integral:kappa=%g,tau=%g", kappa, tau);
                    out.failed.push_back(tag);
                }
                if (screen_failures > 0) {
                    char tag[96];
                    std::snprintf(tag, sizeof tag, "screen:kappa=%g,tau=%g", kappa, tau);
                    out.failed.push_back(tag);
                }
            } catch (const std::exception& e) {
                note = e.what();
            }
            row["built"] = built;
            if (built) {
                row["k_min"] = k_min;
                row["k_max"] = k_max;
                row["c_max"] = c_max;
                row["integral_abs"] = integral_abs;
                row["screen_failures"] = screen_failures;
            } else {
                row["note"] = note;
            }
            rows.push_back(row);
            out.csv += hash + "," + num(kappa) + "," + num(tau) + "," + num(k4t2) + "," +
                       num(tau2) + "," + num(k3t2) + "," + (built ? "1" : "0") + "," +
                       (built ? num(k_min) : "") + "," + (built ? num(k_max) : "") + "," +
                       (built ? num(c_max) : "") + "," + (built ? num(integral_abs) : "") +
                       "," + (built ? std::to_string(screen_failures) : "") + ",\"" + note +
                       "\"\n";
        }
    }
    out.exit_code = out.failed.empty() ? 0 : 1;

    ordered_json j;
    j["command"] = "sweep";
    j["recipe_hash"] = hash;
    j["seed"] = cfg.seed;
    j["rows"] = rows;
    j["failures"] = out.failed;
    j["exit"] = out.exit_code;
    out.json = j.dump(2) + "\n";
    return out;
}

int run_cli(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    int worst = 0;
    for (const std::string& path : cfg.recipes) {
        std::ifstream in(path);
        if (!in) {
            err << "cannot read recipe file: " << path << "\n";
            return 2;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        CommandOutcome res;
        try {
            if (cfg.command == "verify")
                res = run_verify(buf.str(), cfg);
            else if (cfg.command == "ladder")
                res = run_ladder(buf.str(), cfg);
            else if (cfg.command == "sweep")
                res = run_sweep(buf.str(), cfg);
            else {
                err << "unknown command: " << cfg.command << "\n";
                return 2;
            }
        } catch (const std::exception& e) {
            err << path << ": " << e.what() << "\n";
            return 2;
        }
        if (cfg.emit_json) out << res.json;
        if (!cfg.out_dir.empty()) {
            std::filesystem::create_directories(cfg.out_dir);
            std::string stem = std::filesystem::path(path).stem().string();
            if (cfg.emit_json) {
                std::ofstream f(cfg.out_dir + "/" + stem + "-" + cfg.command + ".json");
                f << res.json;
            }
            if (cfg.emit_csv) {
                std::ofstream f(cfg.out_dir + "/" + stem + "-" + cfg.command + ".csv");
                f << res.csv;
            }
        }
        if (!res.failed.empty()) {
            err << path << ": failed:";
            for (const auto& name : res.failed) err << " " << name;
            err << "\n";
        }
        worst = std::max(worst, res.exit_code);
    }
    return worst;
}

}  // namespace ektau
