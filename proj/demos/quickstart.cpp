// Minimal end-to-end walk: simulate a small flexible fleet, cross-validate
// K, fit the model and print a few one-step forecasts next to the truth.

#include <cstdio>
#include <iostream>

#include "invfor/pipeline.hpp"

int main() {
    using namespace invfor;

    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.buildings = 4;
    cfg.sim_hours = 560;
    cfg.blocks = 6;
    cfg.train_hours = 360;
    cfg.validation_hours = 96;
    cfg.spec.hour_indicators = 12;
    cfg.spec.load_lags = {1, 2, 24};
    cfg.spec.price_lags = {1, 2, 24};
    cfg.k_grid = {0.0, 0.3, 0.6, 0.9, 0.98};
    cfg.seed = 7;

    const std::size_t span = cfg.sim_hours + cfg.warmup_hours + cfg.empc_horizon;
    const TimeSeriesTable inputs = synthetic_inputs(default_sim_start(), span, cfg.seed, cfg.synth);
    const auto fleet = generate_population(cfg.building(), cfg.buildings, cfg.perturb_scale, cfg.seed);

    DatasetOptions opts;
    opts.mode = ComfortMode::Flex;
    opts.horizon = cfg.empc_horizon;
    opts.warmup_hours = cfg.warmup_hours;
    opts.policy = cfg.policy;
    const TimeSeriesTable data = build_dataset(fleet, inputs, opts);
    std::cout << "simulated " << data.size() << " hours of aggregate load\n";

    const CvResult cv = cross_validate_k(data, cfg.spec, cfg.k_grid, cfg.train_hours,
                                         cfg.validation_hours, cfg.blocks, cfg.first_block_offset);
    std::cout << "cross-validated K = " << cv.best_k << "\n";

    const RegressorMatrix Z = build_regressors(data, cfg.spec);
    const std::span<const double> loads(data.load.data() + Z.offset, Z.hours);
    const std::span<const double> prices(data.price.data() + Z.offset, Z.hours);
    const RegressorMatrix Ztr = Z.slice(0, cfg.train_hours);
    const EstimatedModel model = fit_model(loads.subspan(0, cfg.train_hours),
                                           prices.subspan(0, cfg.train_hours), Ztr, cfg.spec,
                                           cv.best_k, cfg.blocks, cfg.first_block_offset);

    std::cout << "hour        actual   forecast\n";
    for (std::size_t t = cfg.train_hours; t < cfg.train_hours + 12; ++t) {
        const double f = forecast_one_step(model.bounds, model.utilities, Z.column(t), prices[t]);
        std::printf("%-8s %8.3f %10.3f\n", format_hour(data.stamp(Z.offset + t)).substr(11, 5).c_str(),
                    loads[t], f);
    }
    return 0;
}
