#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace rollover;

int main(int argc, char** argv) {
    CLI::App app{"Multi-tenor roll-over risk model: calibration, pricing and validation"};
    app.require_subcommand(1);

    cli::CalibrateOptions cal;
    std::string seed_text;
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate one day's quotes and write a report");
    calibrate->add_option("--quotes", cal.quotes, "Quote file (.csv or .json)")->required();
    calibrate->add_option("--config", cal.config, "key = value configuration file");
    calibrate->add_option("--out", cal.out, "Report file (JSON)")->required();
    calibrate->add_option("--residuals", cal.residuals, "Residual table (CSV); default <out>.residuals.csv");
    calibrate->add_option("--seed", cal.seed, "Optimizer seed, overrides the config");
    calibrate->add_option("--stages", cal.stages, "all, or a comma list of ois,basis,d0,cds,liquidity");

    std::string model_path;
    std::vector<std::string> instruments;
    auto* price = app.add_subcommand("price", "Price instruments off a model or calibration report");
    price->add_option("--model", model_path, "Model or calibration report (JSON)")->required();
    price->add_option("--instrument,-i", instruments,
                      "ois:T | irs:T[:float[:fixed]] | basis:T:short:long | libor:tenor | fra:start:end | "
                      "caplet:start:end:strike | cds:T:bank")
        ->required();

    cli::ValidateOptions val;
    auto* validate = app.add_subcommand("validate", "Closed-form vs ODE and analytic vs Monte Carlo checks");
    validate->add_option("--model", val.model, "Model or calibration report (JSON)")->required();
    validate->add_option("--mc-paths", val.mc_paths, "Monte Carlo paths")->capture_default_str();
    validate->add_option("--steps-per-year", val.steps_per_year, "Monte Carlo time steps per year")->capture_default_str();
    validate->add_option("--seed", val.seed, "Monte Carlo seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::ok : cli::input_error;
    }

    if (*calibrate) return cli::cmd_calibrate(cal, std::cout, std::cerr);
    if (*price) return cli::cmd_price(model_path, instruments, std::cout, std::cerr);
    return cli::cmd_validate(val, std::cout, std::cerr);
}
