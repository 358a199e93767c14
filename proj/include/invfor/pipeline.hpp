#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "invfor/benchmarks.hpp"
#include "invfor/config.hpp"
#include "invfor/estimation.hpp"
#include "invfor/model_io.hpp"
#include "invfor/series.hpp"
#include "invfor/simulator.hpp"

namespace invfor {

/// Simulation epoch when generating synthetic inputs (a winter week start
/// keeps the heating season realistic).
inline HourStamp default_sim_start() { return detail::days_from_civil(2016, 1, 1) * 24; }

struct SimulateResult {
    std::string flex_path;
    std::string noflex_path;
};

/// Simulates the fleet under both comfort modes and writes the two dataset
/// CSVs.  Deterministic per seed: rerunning produces byte-identical files.
inline SimulateResult cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::size_t span = cfg.sim_hours + cfg.warmup_hours + cfg.empc_horizon;
    TimeSeriesTable inputs;
    if (!cfg.weather_csv.empty()) {
        inputs = read_series_csv(cfg.weather_csv, false);
        if (inputs.size() < span)
            throw InsufficientHistory("weather file shorter than sim_hours + warmup + horizon");
    } else {
        inputs = synthetic_inputs(default_sim_start(), span, cfg.seed, cfg.synth);
    }
    const auto fleet = generate_population(cfg.building(), cfg.buildings, cfg.perturb_scale, cfg.seed);

    DatasetOptions opts;
    opts.horizon = cfg.empc_horizon;
    opts.warmup_hours = cfg.warmup_hours;
    opts.policy = cfg.policy;
    opts.per_building_columns = cfg.per_building_columns;

    std::filesystem::create_directories(out_dir);
    SimulateResult result;
    opts.mode = ComfortMode::Flex;
    const TimeSeriesTable flex = build_dataset(fleet, inputs, opts);
    result.flex_path = (std::filesystem::path(out_dir) / "flex.csv").string();
    write_series_csv(result.flex_path, flex, cfg.per_building_columns);
    opts.mode = ComfortMode::NoFlex;
    const TimeSeriesTable noflex = build_dataset(fleet, inputs, opts);
    result.noflex_path = (std::filesystem::path(out_dir) / "noflex.csv").string();
    write_series_csv(result.noflex_path, noflex, cfg.per_building_columns);
    return result;
}

/// Cross-validates K on the dataset and writes the (K, RMSE) curve.
inline CvResult cmd_cv(const ExperimentConfig& cfg, const std::string& dataset_path,
                       const std::string& out_csv = {}) {
    const TimeSeriesTable table = read_series_csv(dataset_path, true);
    CvResult cv = cross_validate_k(table, cfg.spec, cfg.k_grid, cfg.train_hours,
                                   cfg.validation_hours, cfg.blocks, cfg.first_block_offset);
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw IoError("cannot write '" + out_csv + "'");
        out << "k,rmse\n";
        for (const auto& [k, r] : cv.curve) out << format_double(k) << ',' << format_double(r) << '\n';
    }
    return cv;
}

/// Fits one model on the most recent training window and writes it out.
inline EstimatedModel cmd_estimate(const ExperimentConfig& cfg, const std::string& dataset_path,
                                   double k, const std::string& out_model = {}) {
    const TimeSeriesTable table = read_series_csv(dataset_path, true);
    const RegressorMatrix Z = build_regressors(table, cfg.spec);
    if (Z.hours < cfg.train_hours) throw InsufficientHistory("dataset shorter than the training window");
    const std::size_t from = Z.hours - cfg.train_hours;
    const RegressorMatrix Ztr = Z.slice(from, cfg.train_hours);
    const std::span<const double> loads(table.load.data() + Z.offset + from, cfg.train_hours);
    const std::span<const double> prices(table.price.data() + Z.offset + from, cfg.train_hours);
    EstimatedModel model =
        fit_model(loads, prices, Ztr, cfg.spec, k, cfg.blocks, cfg.first_block_offset);
    if (!out_model.empty()) write_model_file(out_model, model);
    return model;
}

/// One-step forecasts over every usable hour of the dataset with a fixed,
/// previously estimated model.  Output columns: timestamp, actual, forecast.
inline std::vector<double> cmd_forecast(const ExperimentConfig& cfg, const std::string& dataset_path,
                                        const EstimatedModel& model, const std::string& out_csv = {}) {
    (void)cfg;
    const TimeSeriesTable table = read_series_csv(dataset_path, true);
    const RegressorMatrix Z = build_regressors(table, model.spec);
    std::vector<double> forecasts(Z.hours);
    for (std::size_t t = 0; t < Z.hours; ++t) {
        const auto z = Z.column(t);
        forecasts[t] = forecast_one_step(model.bounds, model.utilities, z, table.price[Z.offset + t]);
    }
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw IoError("cannot write '" + out_csv + "'");
        out << "timestamp,actual,forecast\n";
        for (std::size_t t = 0; t < Z.hours; ++t)
            out << format_hour(table.stamp(Z.offset + t)) << ',' << format_double(table.load[Z.offset + t])
                << ',' << format_double(forecasts[t]) << '\n';
    }
    return forecasts;
}

namespace detail {

// The benchmark design shares the inverse model's information set: hour
// indicators (one level dropped so the intercept stays full rank),
// weather, lagged prices, and the hour-t price.  Lagged loads enter
// through the ARMAX autoregressive terms rather than as columns.
inline RegressorMatrix armax_design(const TimeSeriesTable& table, const RegressorSpec& spec,
                                    std::size_t offset, std::size_t hours) {
    RegressorSpec exo = spec;
    exo.load_lags.clear();
    RegressorMatrix base = build_regressors(table, exo);
    const std::size_t skip = exo.hour_indicators > 0 ? 1 : 0;  // drop the last indicator level

    RegressorMatrix out;
    out.offset = offset;
    out.hours = hours;
    out.regressors = base.regressors - skip + 1;
    out.data.resize(out.regressors * hours);
    const std::size_t rel = offset - base.offset;
    std::size_t r_out = 0;
    for (std::size_t r = 0; r < base.regressors; ++r) {
        if (skip == 1 && r + 1 == static_cast<std::size_t>(exo.hour_indicators)) continue;
        for (std::size_t t = 0; t < hours; ++t) out.data[r_out * hours + t] = base.at(r, rel + t);
        ++r_out;
    }
    for (std::size_t t = 0; t < hours; ++t) out.data[r_out * hours + t] = table.price[offset + t];
    return out;
}

} // namespace detail

/// Per-hour record of a rolling backtest.
struct BacktestRecord {
    HourStamp stamp = 0;
    double actual = 0.0;
    double invfor = 0.0;
    double armax = 0.0;
    double persistence = 0.0;
    double pmin = 0.0;
    double pmax = 0.0;
    std::vector<double> utilities;  // evaluated marginal utilities per block
};

struct BacktestReport {
    std::vector<BacktestRecord> records;
    MetricsReport invfor;
    MetricsReport armax;
    MetricsReport persistence;
    int armax_p = 0;
    int armax_q = 0;
};

/// Rolling-origin backtest: for each of the last `backtest_hours` usable
/// hours, refit every model on the trailing training window (fixed-length
/// sliding window) and forecast one step ahead with the hour's price.  The
/// inverse model and the ARMAX run on identical information sets; ARMAX
/// orders are selected once on the first window.
inline BacktestReport cmd_backtest(const ExperimentConfig& cfg, const std::string& dataset_path,
                                   double k, const std::string& out_csv = {}) {
    const TimeSeriesTable table = read_series_csv(dataset_path, true);
    const RegressorMatrix Z = build_regressors(table, cfg.spec);
    if (Z.hours < cfg.train_hours + cfg.backtest_hours)
        throw InsufficientHistory("dataset shorter than training plus backtest windows");
    const std::size_t first = Z.hours - cfg.backtest_hours;
    const std::span<const double> loads(table.load.data() + Z.offset, Z.hours);
    const std::span<const double> prices(table.price.data() + Z.offset, Z.hours);

    // ARMAX order selection on the first training window
    const std::size_t w0 = first - cfg.train_hours;
    const RegressorMatrix ZA0 =
        detail::armax_design(table, cfg.spec, Z.offset + w0, cfg.train_hours);
    const auto [P, Q] = select_order_aicc(loads.subspan(w0, cfg.train_hours), ZA0, cfg.armax_p_max,
                                          cfg.armax_q_max);

    BacktestReport report;
    report.armax_p = P;
    report.armax_q = Q;
    report.records.reserve(cfg.backtest_hours);

    for (std::size_t t = first; t < Z.hours; ++t) {
        const std::size_t w = t - cfg.train_hours;

        // benchmark fits run alongside the inverse estimation
        auto armax_future = std::async(std::launch::async, [&]() {
            // window plus the forecast hour, so the design covers both
            const RegressorMatrix ZA =
                detail::armax_design(table, cfg.spec, Z.offset + w, cfg.train_hours + 1);
            const std::span<const double> wloads = loads.subspan(w, cfg.train_hours + 1);
            const ArmaxModel m = fit_armax(wloads.first(cfg.train_hours),
                                           ZA.slice(0, cfg.train_hours), P, Q);
            return armax_one_step(m, wloads, ZA, cfg.train_hours, cfg.train_hours + 1)[0];
        });

        const RegressorMatrix Ztr = Z.slice(w, cfg.train_hours);
        const EstimatedModel model =
            fit_model(loads.subspan(w, cfg.train_hours), prices.subspan(w, cfg.train_hours), Ztr,
                      cfg.spec, k, cfg.blocks, cfg.first_block_offset);

        BacktestRecord rec;
        rec.stamp = table.stamp(Z.offset + t);
        rec.actual = loads[t];
        const auto z = Z.column(t);
        rec.invfor = forecast_one_step(model.bounds, model.utilities, z, prices[t]);
        const auto cb = evaluate_bounds(model.bounds, z);
        rec.pmin = cb.pmin;
        rec.pmax = cb.pmax;
        rec.utilities = evaluate_utilities(model.utilities, z);
        rec.persistence = loads[t - 1];
        rec.armax = armax_future.get();
        report.records.push_back(std::move(rec));
    }

    std::vector<double> actual, fi, fa, fp;
    for (const auto& r : report.records) {
        actual.push_back(r.actual);
        fi.push_back(r.invfor);
        fa.push_back(r.armax);
        fp.push_back(r.persistence);
    }
    report.invfor = compute_metrics(fi, actual);
    report.armax = compute_metrics(fa, actual);
    report.persistence = compute_metrics(fp, actual);

    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw IoError("cannot write '" + out_csv + "'");
        out << "timestamp,actual,invfor,armax,persistence,pmin,pmax";
        for (std::size_t b = 0; b < cfg.blocks; ++b) out << ",u_" << b + 1;
        out << '\n';
        for (const auto& r : report.records) {
            out << format_hour(r.stamp) << ',' << format_double(r.actual) << ','
                << format_double(r.invfor) << ',' << format_double(r.armax) << ','
                << format_double(r.persistence) << ',' << format_double(r.pmin) << ','
                << format_double(r.pmax);
            for (double u : r.utilities) out << ',' << format_double(u);
            out << '\n';
        }
    }
    return report;
}

/// One summary row per (model, dataset).
struct ReportRow {
    std::string model;
    std::string dataset;
    double nrmse = 0.0;
    double smape = 0.0;
};

/// Reads backtest report CSVs and emits the benchmark summary table.  The
/// dataset label is the report's file stem.
inline std::vector<ReportRow> cmd_report(const std::vector<std::string>& report_paths,
                                         const std::string& out_csv = {}) {
    if (report_paths.empty()) throw ConfigError("report: no input files");
    std::vector<ReportRow> rows;
    for (const auto& path : report_paths) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path + "'");
        std::string line;
        if (!std::getline(in, line)) throw IoError(path + ": empty report");
        const auto header = detail::split_csv_line(line);
        if (header.size() < 5 || header[1] != "actual" || header[2] != "invfor" ||
            header[3] != "armax" || header[4] != "persistence")
            throw IoError(path + ": not a backtest report");
        std::vector<double> actual, fi, fa, fp;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto fields = detail::split_csv_line(line);
            if (fields.size() < 5) throw IoError(path + ":" + std::to_string(lineno) + ": short row");
            actual.push_back(detail::parse_field_double(fields[1], path, lineno));
            fi.push_back(detail::parse_field_double(fields[2], path, lineno));
            fa.push_back(detail::parse_field_double(fields[3], path, lineno));
            fp.push_back(detail::parse_field_double(fields[4], path, lineno));
        }
        if (actual.empty()) throw IoError(path + ": report has no data rows");
        const std::string dataset = std::filesystem::path(path).stem().string();
        const auto add = [&](const char* model, std::span<const double> f) {
            ReportRow row;
            row.model = model;
            row.dataset = dataset;
            row.nrmse = nrmse(f, actual);
            row.smape = smape(f, actual);
            rows.push_back(std::move(row));
        };
        add("persistence", fp);
        add("armax", fa);
        add("invfor", fi);
    }
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw IoError("cannot write '" + out_csv + "'");
        out << "model,dataset,nrmse,smape\n";
        for (const auto& r : rows)
            out << r.model << ',' << r.dataset << ',' << format_double(r.nrmse) << ','
                << format_double(r.smape) << '\n';
    }
    return rows;
}

} // namespace invfor
