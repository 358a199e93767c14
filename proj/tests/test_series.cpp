#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "invfor/config.hpp"
#include "invfor/model_io.hpp"
#include "invfor/series.hpp"

using namespace invfor;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("hour stamps format and parse round trip") {
    CHECK(format_hour(0) == "1970-01-01T00:00:00Z");
    const HourStamp h = parse_hour("2016-03-01T13:00:00Z");
    CHECK(format_hour(h) == "2016-03-01T13:00:00Z");
    for (HourStamp s : {HourStamp{1}, HourStamp{403225}, HourStamp{-17}, HourStamp{876000}})
        CHECK(parse_hour(format_hour(s)) == s);
    CHECK_THROWS_AS(parse_hour("2016-03-01T13:30:00Z"), IoError);
    CHECK_THROWS_AS(parse_hour("yesterday"), IoError);
}

TEST_CASE("dataset CSV round trip is byte stable") {
    TimeSeriesTable t;
    t.start = parse_hour("2016-01-05T00:00:00Z");
    t.price = {30.25, 28.5, 31.125};
    t.load = {55.5, 54.0, 60.75};
    t.temp_ambient = {-1.5, 0.0, 2.25};
    t.solar = {0.0, 120.5, 300.0};

    const std::string path = temp_path("invfor_roundtrip.csv");
    write_series_csv(path, t);
    const std::string once = slurp(path);
    const TimeSeriesTable back = read_series_csv(path, true);
    CHECK(back.start == t.start);
    CHECK(back.price == t.price);
    CHECK(back.load == t.load);
    CHECK(back.temp_ambient == t.temp_ambient);
    CHECK(back.solar == t.solar);
    write_series_csv(path, back);
    CHECK(slurp(path) == once);
    std::remove(path.c_str());
}

TEST_CASE("timestamp gaps are a hard error") {
    const std::string path = temp_path("invfor_gap.csv");
    {
        std::ofstream out(path);
        out << "timestamp,price,load,temp_ambient,solar\n";
        out << "2016-01-01T00:00:00Z,10,5,0,0\n";
        out << "2016-01-01T02:00:00Z,10,5,0,0\n";  // skipped an hour
    }
    CHECK_THROWS_AS(read_series_csv(path, true), IoError);
    std::remove(path.c_str());
}

TEST_CASE("missing files and bad headers are reported with the path") {
    CHECK_THROWS_WITH(read_series_csv("/nonexistent/p.csv", true),
                      Catch::Matchers::ContainsSubstring("/nonexistent/p.csv"));
    const std::string path = temp_path("invfor_badheader.csv");
    {
        std::ofstream out(path);
        out << "time,cost\n1,2\n";
    }
    CHECK_THROWS_AS(read_series_csv(path, true), IoError);
    std::remove(path.c_str());
}

TEST_CASE("input CSVs may omit the load column unless required") {
    const std::string path = temp_path("invfor_weather.csv");
    {
        std::ofstream out(path);
        out << "timestamp,price,temp_ambient,solar\n";
        out << "2016-01-01T00:00:00Z,10,0,0\n";
        out << "2016-01-01T01:00:00Z,11,1,0\n";
    }
    const TimeSeriesTable t = read_series_csv(path, false);
    CHECK_FALSE(t.has_load());
    CHECK(t.size() == 2);
    CHECK_THROWS_AS(read_series_csv(path, true), IoError);
    std::remove(path.c_str());
}

TEST_CASE("key-value config parsing") {
    std::istringstream in(
        "# comment\n"
        "blocks = 8\n"
        "k_grid = 0, 0.5, 0.98  # inline comment\n"
        "use_solar = false\n"
        "load_lags = 1,2,24\n"
        "rho = 55.5\n");
    const auto kv = KeyValueFile::parse_stream(in);
    CHECK(kv.get_int("blocks", 0) == 8);
    CHECK(kv.get_double("rho", 0.0) == 55.5);
    CHECK(kv.get_bool("use_solar", true) == false);
    CHECK(kv.get_double_list("k_grid", {}) == std::vector<double>{0.0, 0.5, 0.98});
    CHECK(kv.get_int_list("load_lags", {}) == std::vector<int>{1, 2, 24});
    CHECK(kv.get_int("missing", 42) == 42);

    std::istringstream bad("blocks eight\n");
    CHECK_THROWS_AS(KeyValueFile::parse_stream(bad), ConfigError);
    std::istringstream badnum("blocks = eight\n");
    CHECK_THROWS_AS(KeyValueFile::parse_stream(badnum).get_int("blocks", 0), ConfigError);
}

TEST_CASE("experiment config applies defaults and validates") {
    std::istringstream in(
        "buildings = 5\n"
        "blocks = 6\n"
        "train_hours = 200\n");
    const auto cfg = ExperimentConfig::from_kv(KeyValueFile::parse_stream(in));
    CHECK(cfg.buildings == 5);
    CHECK(cfg.blocks == 6);
    CHECK(cfg.train_hours == 200);
    CHECK(cfg.validation_hours == 168);       // default
    CHECK(cfg.spec.count() == 38);            // default regressor set
    CHECK(cfg.first_block_offset == 200.0);   // default utility offset

    std::istringstream bad("blocks = 1\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(KeyValueFile::parse_stream(bad)), ConfigError);
    std::istringstream badk("k_grid = 0.5, 1.5\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(KeyValueFile::parse_stream(badk)), ConfigError);
}

TEST_CASE("model files round trip") {
    EstimatedModel m;
    m.blocks = 3;
    m.k = 0.98;
    m.first_block_offset = 200.0;
    m.spec.hour_indicators = 12;
    m.spec.ambient_temperature = true;
    m.spec.solar_irradiance = false;
    m.spec.load_lags = {1, 24};
    m.spec.price_lags = {1};
    m.fingerprint = 0xdeadbeefcafe1234ull;
    const std::size_t R = m.spec.count();
    for (std::size_t r = 0; r < R; ++r) {
        m.bounds.alpha_lo.push_back(0.125 * static_cast<double>(r));
        m.bounds.alpha_hi.push_back(-0.5 + static_cast<double>(r));
        m.utilities.alpha_u.push_back(1.0 / (1.0 + static_cast<double>(r)));
    }
    m.bounds.mu_lo = 12.5;
    m.bounds.mu_hi = 47.25;
    m.utilities.mu_u = {400.0, 60.0, 35.5};

    std::stringstream buf;
    write_model(buf, m);
    const EstimatedModel back = read_model(buf);
    CHECK(back.blocks == m.blocks);
    CHECK(back.k == m.k);
    CHECK(back.spec.hour_indicators == 12);
    CHECK(back.spec.load_lags == m.spec.load_lags);
    CHECK(back.fingerprint == m.fingerprint);
    CHECK(back.bounds.mu_lo == m.bounds.mu_lo);
    CHECK(back.bounds.alpha_hi == m.bounds.alpha_hi);
    CHECK(back.utilities.mu_u == m.utilities.mu_u);
    CHECK(back.utilities.alpha_u == m.utilities.alpha_u);

    std::stringstream bad("invfor-model 99\n");
    CHECK_THROWS_AS(read_model(bad), ConfigError);
}

TEST_CASE("shortest round-trip double formatting") {
    for (double v : {0.1, 1.0 / 3.0, 12345.6789, -0.0001, 55.5}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(2.0) == "2");
}
