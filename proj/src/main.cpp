#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ektau/reporting.hpp"

int main(int argc, char** argv) {
    ektau::RunConfig cfg;
    CLI::App app{"identity verification for surfaces in fibered homogeneous 3-geometries"};
    app.require_subcommand(1);

    std::vector<std::string> tol_args;
    std::string format = "json,csv";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("recipes", cfg.recipes, "recipe file(s)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--ladder", cfg.ladder, "refinement resolutions, e.g. 64,128,256")
            ->delimiter(',');
        sub->add_option("--out", cfg.out_dir, "directory to write report files into");
        sub->add_option("--format", format, "comma list drawn from {json,csv}");
        sub->add_option("--tol", tol_args, "tolerance override NAME=VALUE (repeatable)");
        sub->add_option("--seed", cfg.seed, "seed for randomized sample checks");
    };
    add_common(app.add_subcommand("verify", "run every applicable identity check"));
    add_common(app.add_subcommand("ladder", "fit convergence orders over a resolution ladder"));
    CLI::App* sweep =
        app.add_subcommand("sweep", "tabulate identity results across parameter ranges");
    add_common(sweep);
    sweep->add_option("--sweep-kappa", cfg.sweep_kappa, "base curvature values")
        ->delimiter(',');
    sweep->add_option("--sweep-tau", cfg.sweep_tau, "bundle curvature values")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    cfg.command = app.get_subcommands().front()->get_name();
    cfg.emit_json = format.find("json") != std::string::npos;
    cfg.emit_csv = format.find("csv") != std::string::npos;
    if (!cfg.emit_json && !cfg.emit_csv) {
        std::cerr << "--format must include json or csv\n";
        return 2;
    }
    for (const std::string& t : tol_args) {
        auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "--tol expects NAME=VALUE, got: " << t << "\n";
            return 2;
        }
        try {
            size_t used = 0;
            double val = std::stod(t.substr(eq + 1), &used);
            if (used != t.size() - eq - 1) throw std::invalid_argument(t);
            cfg.tolerances[t.substr(0, eq)] = val;
        } catch (const std::exception&) {
            std::cerr << "--tol expects a numeric value, got: " << t << "\n";
            return 2;
        }
    }
    return ektau::run_cli(cfg, std::cout, std::cerr);
}
