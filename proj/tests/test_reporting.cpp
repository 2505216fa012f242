#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ektau/model_spaces.hpp"
#include "ektau/reporting.hpp"
#include "json.hpp"

using namespace ektau;
using nlohmann::ordered_json;

namespace {

std::string read_recipe(const char* name) {
    std::ifstream in(std::string(EKTAU_RECIPE_DIR) + "/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig base_config(const char* command) {
    RunConfig cfg;
    cfg.command = command;
    return cfg;
}

}  // namespace

TEST_SUITE("reporting") {

TEST_CASE("tolerance defaults cover every reported gate") {
    auto tols = default_tolerances();
    CHECK(tols.at("killing") == 1e-6);
    CHECK(tols.at("tangential-field-derivative") == 1e-2);
    CHECK(tols.at("divergence-and-rotation") == 1e-2);
    CHECK(tols.at("vertical-gradient") == 1e-2);
    CHECK(tols.at("curvature-consistency") == 1e-4);
    CHECK(tols.at("curvature-integral") == 1e-6);
    CHECK(tols.at("product-curvature-integral") == 1e-6);
    CHECK(tols.at("pole-hessian") == 5e-4);
    CHECK(tols.at("ladder-order") == 1.5);
    CHECK(tols.size() == 9);
}

TEST_CASE("recipe fingerprints are frozen, hex, and text-sensitive") {
    // Value derived independently from the 64-bit FNV-1a recurrence.
    std::string text = "family = slice_sphere\nkappa = 2\n";
    CHECK(recipe_fingerprint(text) == "fa7d4620a564dc2e");
    CHECK(recipe_fingerprint(text).size() == 16);
    CHECK(recipe_fingerprint(text) == recipe_fingerprint(text));
    CHECK(recipe_fingerprint(text) != recipe_fingerprint(text + " "));
    for (char c : recipe_fingerprint(text)) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
}

TEST_CASE("parallel-field spot check is tight in every geometry family") {
    struct Case {
        ManifoldParams mp;
        Chart chart;
    };
    const Case cases[] = {
        {ManifoldParams::checked(4.0, 0.8), Chart::berger_embedded()},
        {ManifoldParams::checked(0.0, 0.5), Chart::bcv()},
        {ManifoldParams::checked(-1.0, 0.5), Chart::bcv()},
        {ManifoldParams::checked(1.0, 0.0), Chart::product_conformal()},
        {ManifoldParams::checked(2.0, 0.0), Chart::product_polar(PolarProfile::round_sphere(2.0))},
    };
    for (const auto& c : cases) {
        Geometry geo(c.mp, c.chart);
        KillingCheck kc = killing_spot_check(geo, 25, 1e-4, 2, 11);
        CAPTURE(c.mp.kappa);
        CAPTURE(c.mp.tau);
        CHECK(kc.pairs == 25);
        CHECK(kc.step == 1e-4);
        CHECK(kc.max_residual < 1e-6);
    }
}

TEST_CASE("verification of a fiber torus produces a clean ordered report") {
    auto cfg = base_config("verify");
    auto out = run_verify(read_recipe("hopf_wave.recipe"), cfg);
    CHECK(out.exit_code == 0);
    CHECK(out.failed.empty());

    auto doc = ordered_json::parse(out.json);
    std::vector<std::string> keys;
    for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"command", "recipe_hash", "seed", "surface",
                                           "killing_step", "identities", "index", "screens",
                                           "failures", "exit"});
    CHECK(doc["command"] == "verify");
    CHECK(doc["recipe_hash"].get<std::string>().size() == 16);
    CHECK(doc["surface"]["family"] == "hopf_torus");
    CHECK(doc["surface"]["kappa"] == 4.0);
    CHECK(doc["surface"]["tau"] == 0.8);
    CHECK(doc["surface"]["resolution_u"] == 64);
    CHECK(doc["surface"]["area"].get<double>() > 0.0);
    std::vector<std::string> names;
    for (const auto& row : doc["identities"]) {
        names.push_back(row["identity"].get<std::string>());
        CAPTURE(names.back());
        CHECK(row["pass"] == true);
    }
    // Twisted bundle without poles: no product-integral and no pole rows.
    CHECK(names == std::vector<std::string>{"killing", "tangential-field-derivative",
                                            "divergence-and-rotation", "vertical-gradient",
                                            "curvature-consistency", "curvature-integral"});
    CHECK(doc["index"]["index_sum"] == 0);
    CHECK(doc["index"]["euler_characteristic"] == 0);
    CHECK(doc["failures"].empty());
    CHECK(doc["exit"] == 0);

    std::istringstream csv(out.csv);
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "recipe_hash,surface,identity,nu,nv,max_abs,l2,samples,integral,order,tolerance,pass");
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(doc["identities"].size()));
}

TEST_CASE("slice verification reports a trivial field with exempt screens") {
    auto cfg = base_config("verify");
    auto out = run_verify(read_recipe("slice_sphere.recipe"), cfg);
    CHECK(out.exit_code == 0);
    auto doc = ordered_json::parse(out.json);
    CHECK(doc["index"]["field_trivial"] == true);
    bool saw_product_row = false;
    for (const auto& row : doc["identities"])
        if (row["identity"] == "product-curvature-integral") saw_product_row = true;
    CHECK(saw_product_row);
    REQUIRE(!doc["screens"].empty());
    for (const auto& s : doc["screens"]) {
        CAPTURE(s["clause"].get<std::string>());
        CHECK(s["verdict"] == "NOT-APPLICABLE");
    }
}

TEST_CASE("reports are byte-identical for a fixed seed") {
    auto cfg = base_config("verify");
    cfg.seed = 7;
    auto text = read_recipe("perturbed_hopf.recipe");
    auto first = run_verify(text, cfg);
    auto second = run_verify(text, cfg);
    CHECK(first.exit_code == 0);
    CHECK(first.json == second.json);
    CHECK(first.csv == second.csv);
}

TEST_CASE("ladder fits clean slopes and validates rung lists") {
    auto cfg = base_config("ladder");
    cfg.ladder = {32, 64, 128};
    auto text = read_recipe("graph_torus.recipe");
    auto out = run_ladder(text, cfg);
    CHECK(out.exit_code == 0);
    CHECK(out.failed.empty());
    auto doc = ordered_json::parse(out.json);
    CHECK(doc["rungs"] == std::vector<int>{32, 64, 128});
    CHECK(doc["identities"].size() >= 5);
    for (const auto& row : doc["identities"]) {
        CAPTURE(row["identity"].get<std::string>());
        CHECK(row["pass"] == true);
        CHECK(row["residuals"].size() == 3);
    }

    cfg.ladder = {64};
    CHECK_THROWS_AS(run_ladder(text, cfg), std::invalid_argument);
    cfg.ladder = {64, 32, 128};
    CHECK_THROWS_AS(run_ladder(text, cfg), std::invalid_argument);
}

TEST_CASE("sweep excludes the degenerate axis with computed thresholds") {
    auto cfg = base_config("sweep");
    cfg.sweep_kappa = {4.0};
    cfg.sweep_tau = {1.0, 0.8};
    auto text = read_recipe("hopf_wave.recipe");
    auto out = run_sweep(text, cfg);
    CHECK(out.exit_code == 0);
    CHECK(out.failed.empty());
    auto doc = ordered_json::parse(out.json);
    REQUIRE(doc["rows"].size() == 2);

    const auto& gated = doc["rows"][0];
    CHECK(gated["kappa"] == 4.0);
    CHECK(gated["tau"] == 1.0);
    CHECK(gated["bundle_discriminant"] == 0.0);
    CHECK(gated["tau_sq"] == 1.0);
    CHECK(gated["kappa_minus_3tau_sq"] == 1.0);
    CHECK(gated["built"] == false);
    CHECK(!gated["note"].get<std::string>().empty());

    const auto& live = doc["rows"][1];
    CHECK(live["built"] == true);
    CHECK(live["k_max"].get<double>() < 1e-6);
    CHECK(live["c_max"].get<double>() < 1e-6);

    cfg.sweep_tau.clear();
    CHECK_THROWS_AS(run_sweep(text, cfg), std::invalid_argument);
}

TEST_CASE("tightened tolerance turns into a reported failure") {
    auto cfg = base_config("verify");
    cfg.tolerances["curvature-consistency"] = 1e-12;
    auto out = run_verify(read_recipe("hopf_wave.recipe"), cfg);
    CHECK(out.exit_code == 1);
    REQUIRE(!out.failed.empty());
    bool named = false;
    for (const auto& f : out.failed)
        if (f == "curvature-consistency") named = true;
    CHECK(named);
    auto doc = ordered_json::parse(out.json);
    CHECK(doc["exit"] == 1);
    CHECK(!doc["failures"].empty());
    CHECK(out.csv.find(",0\n") != std::string::npos);

    cfg.tolerances.clear();
    cfg.tolerances["no-such-gate"] = 1.0;
    CHECK_THROWS_AS(run_verify(read_recipe("hopf_wave.recipe"), cfg), std::invalid_argument);
}

TEST_CASE("command driver writes report files and signals configuration faults") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "ektau-report-test";
    fs::remove_all(dir);

    auto cfg = base_config("verify");
    cfg.recipes = {std::string(EKTAU_RECIPE_DIR) + "/slice_sphere.recipe"};
    cfg.out_dir = dir.string();
    std::ostringstream out, err;
    CHECK(run_cli(cfg, out, err) == 0);
    CHECK(fs::exists(dir / "slice_sphere-verify.json"));
    CHECK(fs::exists(dir / "slice_sphere-verify.csv"));
    std::ifstream jf(dir / "slice_sphere-verify.json");
    auto doc = ordered_json::parse(jf);
    CHECK(doc["exit"] == 0);
    CHECK(!out.str().empty());

    fs::path broken = dir / "broken.recipe";
    {
        std::ofstream bf(broken);
        bf << "family = hopf_torus\nkappa = 4\ntau = 1\n";
    }
    std::ostringstream out2, err2;
    cfg.recipes = {broken.string()};
    CHECK(run_cli(cfg, out2, err2) == 2);
    CHECK(err2.str().find("broken.recipe") != std::string::npos);

    std::ostringstream out3, err3;
    cfg.recipes = {(dir / "missing.recipe").string()};
    CHECK(run_cli(cfg, out3, err3) == 2);
    CHECK(!err3.str().empty());

    fs::remove_all(dir);
}

}  // TEST_SUITE
