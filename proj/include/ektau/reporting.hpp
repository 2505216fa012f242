#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ektau/hopf_builder.hpp"
#include "ektau/identity_verifier.hpp"

namespace ektau {

// Parsed command-line invocation.
struct RunConfig {
    std::string command;  // verify | ladder | sweep
    std::vector<std::string> recipes;
    std::vector<int> ladder = {64, 128, 256};
    std::map<std::string, double> tolerances;  // overrides merged over defaults
    std::string out_dir;                       // empty: no files written
    bool emit_json = true;
    bool emit_csv = true;
    std::uint64_t seed = 1;
    std::vector<double> sweep_kappa, sweep_tau;
};

// Pinned default pass bars, overridable per run with --tol NAME=VALUE.
std::map<std::string, double> default_tolerances();

// FNV-1a fingerprint of the recipe text, for report provenance.
std::string recipe_fingerprint(const std::string& text);

// Ambient Killing-derivative law spot-checked over seeded random
// point/direction pairs drawn from the geometry's chart.
struct KillingCheck {
    double max_residual = 0.0;
    int pairs = 0;
    double step = 0.0;
};
KillingCheck killing_spot_check(const Geometry& geo, int pairs, double step, int accuracy,
                                std::uint64_t seed);

// Result of one command on one recipe: deterministic report bodies plus the
// names of whatever failed.
struct CommandOutcome {
    std::string json;
    std::string csv;
    std::vector<std::string> failed;
    int exit_code = 0;  // 0 pass, 1 identity failure
};

CommandOutcome run_verify(const std::string& recipe_text, const RunConfig& cfg);
CommandOutcome run_ladder(const std::string& recipe_text, const RunConfig& cfg);
CommandOutcome run_sweep(const std::string& recipe_text, const RunConfig& cfg);

// Front end used by the executable: reads recipe files, streams reports to
// `out`, writes report files when an output directory is set. Configuration
// problems (unreadable/invalid recipes, inadmissible parameters, bad flag
// combinations) come back as exit code 2, identity failures as 1.
int run_cli(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace ektau
