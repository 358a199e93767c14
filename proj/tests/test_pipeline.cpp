#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "invfor/pipeline.hpp"

using namespace invfor;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_config() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.buildings = 2;
    cfg.sim_hours = 420;
    cfg.warmup_hours = 24;
    cfg.empc_horizon = 12;
    cfg.blocks = 4;
    cfg.train_hours = 240;
    cfg.validation_hours = 48;
    cfg.backtest_hours = 6;
    cfg.spec.hour_indicators = 6;
    cfg.spec.load_lags = {1, 2};
    cfg.spec.price_lags = {1};
    cfg.k_grid = {0.0, 0.5, 0.9};
    cfg.armax_p_max = 2;
    cfg.armax_q_max = 1;
    cfg.seed = 99;
    return cfg;
}

} // namespace

TEST_CASE("simulate is deterministic per seed and byte identical on rerun") {
    const auto cfg = small_config();
    const std::string d1 = temp_dir("invfor_sim_a");
    const std::string d2 = temp_dir("invfor_sim_b");
    const auto r1 = cmd_simulate(cfg, d1);
    const auto r2 = cmd_simulate(cfg, d2);
    CHECK(slurp(r1.flex_path) == slurp(r2.flex_path));
    CHECK(slurp(r1.noflex_path) == slurp(r2.noflex_path));

    auto other = cfg;
    other.seed = 123;
    const std::string d3 = temp_dir("invfor_sim_c");
    const auto r3 = cmd_simulate(other, d3);
    CHECK(slurp(r1.flex_path) != slurp(r3.flex_path));

    const TimeSeriesTable flex = read_series_csv(r1.flex_path, true);
    CHECK(flex.size() == cfg.sim_hours);
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
    std::filesystem::remove_all(d3);
}

TEST_CASE("a zero-building fleet produces an all-zero load column") {
    auto cfg = small_config();
    cfg.buildings = 0;
    cfg.sim_hours = 120;
    const std::string dir = temp_dir("invfor_sim_zero");
    const auto r = cmd_simulate(cfg, dir);
    const TimeSeriesTable t = read_series_csv(r.flex_path, true);
    for (double v : t.load) CHECK(v == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("missing weather file names the path") {
    auto cfg = small_config();
    cfg.weather_csv = "/nonexistent/weather.csv";
    CHECK_THROWS_WITH(cmd_simulate(cfg, temp_dir("invfor_sim_err")),
                      Catch::Matchers::ContainsSubstring("/nonexistent/weather.csv"));
}

TEST_CASE("pipeline end to end on a small simulated dataset") {
    const auto cfg = small_config();
    const std::string dir = temp_dir("invfor_e2e");
    const auto sim = cmd_simulate(cfg, dir);

    const CvResult cv = cmd_cv(cfg, sim.flex_path, dir + "/curve.csv");
    CHECK(cv.curve.size() == cfg.k_grid.size());
    const std::string curve = slurp(dir + "/curve.csv");
    CHECK(curve.rfind("k,rmse\n", 0) == 0);

    const EstimatedModel model = cmd_estimate(cfg, sim.flex_path, cv.best_k, dir + "/model.txt");
    const EstimatedModel loaded = read_model_file(dir + "/model.txt");
    CHECK(loaded.blocks == cfg.blocks);
    CHECK(loaded.k == cv.best_k);
    CHECK(loaded.fingerprint == model.fingerprint);

    const auto forecasts = cmd_forecast(cfg, sim.flex_path, loaded, dir + "/forecast.csv");
    CHECK(forecasts.size() > 0);
    const std::string fc = slurp(dir + "/forecast.csv");
    CHECK(fc.rfind("timestamp,actual,forecast\n", 0) == 0);

    const BacktestReport report = cmd_backtest(cfg, sim.flex_path, cv.best_k, dir + "/report.csv");
    CHECK(report.records.size() == cfg.backtest_hours);
    // per-hour records carry the evaluated bounds and utility blocks
    for (const auto& rec : report.records) {
        CHECK(rec.pmin <= rec.pmax + 1e-9);
        CHECK(rec.utilities.size() == cfg.blocks);
        CHECK(rec.invfor >= rec.pmin - 1e-9);
        CHECK(rec.invfor <= rec.pmax + 1e-9);
    }

    // information hygiene: persistence must equal the previous actual load
    const TimeSeriesTable table = read_series_csv(sim.flex_path, true);
    const RegressorMatrix Z = build_regressors(table, cfg.spec);
    for (std::size_t i = 0; i < report.records.size(); ++i) {
        const std::size_t t = Z.offset + Z.hours - cfg.backtest_hours + i;
        CHECK(report.records[i].actual == table.load[t]);
        CHECK(report.records[i].persistence == table.load[t - 1]);
    }

    const auto rows = cmd_report({dir + "/report.csv"}, dir + "/summary.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].model == "persistence");
    CHECK(rows[1].model == "armax");
    CHECK(rows[2].model == "invfor");
    CHECK(rows[2].dataset == "report");
    const std::string summary = slurp(dir + "/summary.csv");
    CHECK(summary.rfind("model,dataset,nrmse,smape\n", 0) == 0);

    std::filesystem::remove_all(dir);
}

TEST_CASE("backtest of length one produces a single record") {
    auto cfg = small_config();
    cfg.backtest_hours = 1;
    const std::string dir = temp_dir("invfor_bt1");
    const auto sim = cmd_simulate(cfg, dir);
    const auto report = cmd_backtest(cfg, sim.flex_path, 0.9);
    CHECK(report.records.size() == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("backtest refuses datasets shorter than train plus backtest") {
    auto cfg = small_config();
    cfg.train_hours = 5000;
    const std::string dir = temp_dir("invfor_btshort");
    const auto sim = cmd_simulate(small_config(), dir);
    CHECK_THROWS_AS(cmd_backtest(cfg, sim.flex_path, 0.5), InsufficientHistory);
    std::filesystem::remove_all(dir);
}

TEST_CASE("report treats identical forecasts identically and rejects empty input") {
    const std::string dir = temp_dir("invfor_report");
    const std::string path = dir + "/twins.csv";
    {
        std::ofstream out(path);
        out << "timestamp,actual,invfor,armax,persistence,pmin,pmax\n";
        out << "2016-01-01T00:00:00Z,10,9,9,8,0,20\n";
        out << "2016-01-01T01:00:00Z,12,13,13,10,0,20\n";
    }
    const auto rows = cmd_report({path});
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].nrmse == rows[2].nrmse);  // armax row equals invfor row
    CHECK(rows[1].smape == rows[2].smape);

    CHECK_THROWS_AS(cmd_report({}), ConfigError);

    const std::string empty_path = dir + "/empty.csv";
    {
        std::ofstream out(empty_path);
        out << "timestamp,actual,invfor,armax,persistence,pmin,pmax\n";
    }
    CHECK_THROWS_AS(cmd_report({empty_path}), IoError);

    // perfect forecasts give zero metrics
    const std::string perfect = dir + "/perfect.csv";
    {
        std::ofstream out(perfect);
        out << "timestamp,actual,invfor,armax,persistence,pmin,pmax\n";
        out << "2016-01-01T00:00:00Z,10,10,10,10,0,20\n";
        out << "2016-01-01T01:00:00Z,12,12,12,12,0,20\n";
    }
    for (const auto& row : cmd_report({perfect})) {
        CHECK(row.nrmse == 0.0);
        CHECK(row.smape == 0.0);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("the benchmark design avoids the dummy-variable trap") {
    const auto cfg = small_config();
    const std::string dir = temp_dir("invfor_design");
    const auto sim = cmd_simulate(cfg, dir);
    const TimeSeriesTable table = read_series_csv(sim.flex_path, true);
    const RegressorMatrix Z = build_regressors(table, cfg.spec);
    // one dropped hour indicator, no load lags, plus the hour-t price
    const RegressorMatrix ZA = detail::armax_design(table, cfg.spec, Z.offset, Z.hours);
    CHECK(ZA.regressors == cfg.spec.count() - cfg.spec.load_lags.size());
    const std::span<const double> loads(table.load.data() + Z.offset, Z.hours);
    CHECK_NOTHROW(fit_armax(loads, ZA, 2, 0));
    std::filesystem::remove_all(dir);
}
