// Batch entry point: dataset simulation, K cross-validation, estimation,
// one-step forecasting, rolling backtest and benchmark reporting.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "invfor/pipeline.hpp"

namespace {

invfor::ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return invfor::ExperimentConfig::defaults();
    return invfor::ExperimentConfig::from_file(path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forecasting price-responsive aggregate load by inverse optimization"};
    app.require_subcommand(1);

    std::string config_path, dataset, out, model_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> k;
    std::optional<std::size_t> blocks;
    std::vector<std::string> report_inputs;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Key-value config file")->envname("INVFOR_CONFIG");
        cmd->add_option("--seed", seed, "Override the config seed")->envname("INVFOR_SEED");
        cmd->add_option("--blocks", blocks, "Override the block count")->envname("INVFOR_BLOCKS");
    };

    CLI::App* sim = app.add_subcommand("simulate", "Simulate the building fleet into flex/no-flex dataset CSVs");
    add_common(sim);
    sim->add_option("--out", out, "Output directory")->default_val("data")->envname("INVFOR_OUT");

    CLI::App* cv = app.add_subcommand("cv", "Cross-validate the penalty parameter K");
    add_common(cv);
    cv->add_option("--dataset", dataset, "Dataset CSV")->required()->envname("INVFOR_DATASET");
    cv->add_option("--out", out, "Curve CSV (k,rmse rows)")->envname("INVFOR_OUT");

    CLI::App* est = app.add_subcommand("estimate", "Fit a model on the latest training window");
    add_common(est);
    est->add_option("--dataset", dataset, "Dataset CSV")->required()->envname("INVFOR_DATASET");
    est->add_option("--k", k, "Penalty parameter K")->required()->envname("INVFOR_K");
    est->add_option("--out", out, "Model file to write")->required()->envname("INVFOR_OUT");

    CLI::App* fc = app.add_subcommand("forecast", "One-step forecasts with a previously fitted model");
    add_common(fc);
    fc->add_option("--dataset", dataset, "Dataset CSV")->required()->envname("INVFOR_DATASET");
    fc->add_option("--model", model_path, "Model file")->required()->envname("INVFOR_MODEL");
    fc->add_option("--out", out, "Forecast CSV")->envname("INVFOR_OUT");

    CLI::App* bt = app.add_subcommand("backtest", "Rolling one-step backtest against ARMAX and persistence");
    add_common(bt);
    bt->add_option("--dataset", dataset, "Dataset CSV")->required()->envname("INVFOR_DATASET");
    bt->add_option("--k", k, "Penalty parameter K")->required()->envname("INVFOR_K");
    bt->add_option("--out", out, "Report CSV")->envname("INVFOR_OUT");

    CLI::App* rep = app.add_subcommand("report", "Summarize backtest reports into a benchmark table");
    rep->add_option("--out", out, "Summary CSV")->envname("INVFOR_OUT");
    rep->add_option("reports", report_inputs, "Backtest report CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        invfor::ExperimentConfig cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (blocks) cfg.blocks = *blocks;
        cfg.validate();

        if (sim->parsed()) {
            const auto result = invfor::cmd_simulate(cfg, out);
            std::cout << "wrote " << result.flex_path << " and " << result.noflex_path << "\n";
        } else if (cv->parsed()) {
            const auto result = invfor::cmd_cv(cfg, dataset, out);
            std::cout << "best_k " << invfor::format_double(result.best_k) << "\n";
            for (const auto& [kk, rmse] : result.curve)
                std::cout << invfor::format_double(kk) << ' ' << invfor::format_double(rmse) << "\n";
        } else if (est->parsed()) {
            invfor::cmd_estimate(cfg, dataset, *k, out);
            std::cout << "wrote " << out << "\n";
        } else if (fc->parsed()) {
            const auto model = invfor::read_model_file(model_path);
            invfor::cmd_forecast(cfg, dataset, model, out);
            if (!out.empty()) std::cout << "wrote " << out << "\n";
        } else if (bt->parsed()) {
            const auto report = invfor::cmd_backtest(cfg, dataset, *k, out);
            std::cout << "armax_order " << report.armax_p << ' ' << report.armax_q << "\n";
            std::cout << "invfor nrmse " << invfor::format_double(report.invfor.nrmse) << " smape "
                      << invfor::format_double(report.invfor.smape) << "\n";
            std::cout << "armax nrmse " << invfor::format_double(report.armax.nrmse) << " smape "
                      << invfor::format_double(report.armax.smape) << "\n";
            std::cout << "persistence nrmse " << invfor::format_double(report.persistence.nrmse)
                      << " smape " << invfor::format_double(report.persistence.smape) << "\n";
        } else if (rep->parsed()) {
            const auto rows = invfor::cmd_report(report_inputs, out);
            for (const auto& r : rows)
                std::cout << r.model << ' ' << r.dataset << ' ' << invfor::format_double(r.nrmse)
                          << ' ' << invfor::format_double(r.smape) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
