#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "invfor/errors.hpp"
#include "invfor/estimation.hpp"
#include "invfor/simulator.hpp"

namespace invfor {

/// Flat `key = value` configuration file; '#' starts a comment.
class KeyValueFile {
public:
    KeyValueFile() = default;

    static KeyValueFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config '" + path + "'");
        return parse_stream(in, path);
    }

    static KeyValueFile parse_stream(std::istream& in, const std::string& what = "<stream>") {
        KeyValueFile kv;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                if (b == std::string::npos) return std::string();
                const auto e = s.find_last_not_of(" \t\r");
                return s.substr(b, e - b + 1);
            };
            if (trim(line).empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(what + ":" + std::to_string(lineno) + ": expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(what + ":" + std::to_string(lineno) + ": empty key");
            kv.values_[key] = value;
        }
        return kv;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_double(key, it->second);
    }

    long get_int(const std::string& key, long fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        long v;
        const auto& s = it->second;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError("config key '" + key + "': bad integer '" + s + "'");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("config key '" + key + "': bad boolean '" + it->second + "'");
    }

    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_list<double>(key, it->second);
    }

    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_list<int>(key, it->second);
    }

private:
    static double parse_double(const std::string& key, const std::string& s) {
        double v;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError("config key '" + key + "': bad number '" + s + "'");
        return v;
    }

    template <class T>
    static std::vector<T> parse_list(const std::string& key, const std::string& s) {
        std::vector<T> out;
        std::string item;
        std::stringstream ss(s);
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b == std::string::npos) throw ConfigError("config key '" + key + "': empty list item");
            item = item.substr(b, e - b + 1);
            T v{};
            auto res = std::from_chars(item.data(), item.data() + item.size(), v);
            if (res.ec != std::errc() || res.ptr != item.data() + item.size())
                throw ConfigError("config key '" + key + "': bad list item '" + item + "'");
            out.push_back(v);
        }
        if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
        return out;
    }

    std::map<std::string, std::string> values_;
};

/// Everything the batch pipeline needs; every paper-underspecified constant
/// lives here with its default.
struct ExperimentConfig {
    // simulation
    std::size_t buildings = 20;
    double perturb_scale = 0.02;  // variance fraction of |a|
    std::size_t sim_hours = 840;  // dataset length after warmup
    std::size_t empc_horizon = 24;
    std::size_t warmup_hours = 48;
    double rho = 100.0;
    double x_max = 5.0;
    ComfortPolicy policy;
    std::uint64_t seed = 1;
    std::string weather_csv;  // optional; synthetic inputs when empty
    bool per_building_columns = false;
    SyntheticInputOptions synth;

    // estimation
    std::size_t blocks = 20;
    double first_block_offset = 200.0;
    std::vector<double> k_grid;
    RegressorSpec spec;
    std::size_t train_hours = 505;
    std::size_t validation_hours = 168;
    std::size_t backtest_hours = 120;

    // benchmarks
    int armax_p_max = 6;
    int armax_q_max = 2;

    static std::vector<double> default_k_grid() {
        std::vector<double> g;
        for (int i = 0; i <= 19; ++i) g.push_back(0.05 * i);
        g.push_back(0.98);
        g.push_back(0.99);
        return g;
    }

    static ExperimentConfig defaults() {
        ExperimentConfig c;
        c.k_grid = default_k_grid();
        c.spec.hour_indicators = 24;
        c.spec.ambient_temperature = true;
        c.spec.solar_irradiance = true;
        c.spec.load_lags = {1, 2, 3, 24, 25, 26};
        c.spec.price_lags = {1, 2, 3, 24, 25, 26};
        return c;
    }

    static ExperimentConfig from_file(const std::string& path) {
        return from_kv(KeyValueFile::parse_file(path));
    }

    static ExperimentConfig from_kv(const KeyValueFile& kv) {
        ExperimentConfig c = defaults();
        c.buildings = static_cast<std::size_t>(kv.get_int("buildings", static_cast<long>(c.buildings)));
        c.perturb_scale = kv.get_double("perturb_scale", c.perturb_scale);
        c.sim_hours = static_cast<std::size_t>(kv.get_int("sim_hours", static_cast<long>(c.sim_hours)));
        c.empc_horizon = static_cast<std::size_t>(kv.get_int("empc_horizon", static_cast<long>(c.empc_horizon)));
        c.warmup_hours = static_cast<std::size_t>(kv.get_int("warmup_hours", static_cast<long>(c.warmup_hours)));
        c.rho = kv.get_double("rho", c.rho);
        c.x_max = kv.get_double("x_max", c.x_max);
        c.policy.setpoint = kv.get_double("setpoint", c.policy.setpoint);
        c.policy.flex_halfwidth = kv.get_double("flex_halfwidth", c.policy.flex_halfwidth);
        c.policy.night_setback = kv.get_double("night_setback", c.policy.night_setback);
        c.policy.night_start = static_cast<int>(kv.get_int("night_start", c.policy.night_start));
        c.policy.night_end = static_cast<int>(kv.get_int("night_end", c.policy.night_end));
        c.policy.water_init = kv.get_double("water_init", c.policy.water_init);
        c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(c.seed)));
        c.weather_csv = kv.get_string("weather_csv", c.weather_csv);
        c.per_building_columns = kv.get_bool("per_building_columns", c.per_building_columns);
        c.synth.temp_mean = kv.get_double("synth_temp_mean", c.synth.temp_mean);
        c.synth.temp_amplitude = kv.get_double("synth_temp_amplitude", c.synth.temp_amplitude);
        c.synth.solar_peak = kv.get_double("synth_solar_peak", c.synth.solar_peak);
        c.synth.price_mean = kv.get_double("synth_price_mean", c.synth.price_mean);
        c.synth.price_amplitude = kv.get_double("synth_price_amplitude", c.synth.price_amplitude);
        c.synth.price_noise = kv.get_double("synth_price_noise", c.synth.price_noise);

        c.blocks = static_cast<std::size_t>(kv.get_int("blocks", static_cast<long>(c.blocks)));
        c.first_block_offset = kv.get_double("first_block_offset", c.first_block_offset);
        c.k_grid = kv.get_double_list("k_grid", c.k_grid);
        c.spec.hour_indicators = static_cast<int>(kv.get_int("hour_indicators", c.spec.hour_indicators));
        c.spec.ambient_temperature = kv.get_bool("use_temperature", c.spec.ambient_temperature);
        c.spec.solar_irradiance = kv.get_bool("use_solar", c.spec.solar_irradiance);
        c.spec.load_lags = kv.get_int_list("load_lags", c.spec.load_lags);
        c.spec.price_lags = kv.get_int_list("price_lags", c.spec.price_lags);
        c.train_hours = static_cast<std::size_t>(kv.get_int("train_hours", static_cast<long>(c.train_hours)));
        c.validation_hours =
            static_cast<std::size_t>(kv.get_int("validation_hours", static_cast<long>(c.validation_hours)));
        c.backtest_hours =
            static_cast<std::size_t>(kv.get_int("backtest_hours", static_cast<long>(c.backtest_hours)));
        c.armax_p_max = static_cast<int>(kv.get_int("armax_p_max", c.armax_p_max));
        c.armax_q_max = static_cast<int>(kv.get_int("armax_q_max", c.armax_q_max));
        c.validate();
        return c;
    }

    void validate() const {
        if (blocks < 2) throw ConfigError("blocks must be at least 2");
        if (train_hours == 0 || validation_hours == 0 || backtest_hours == 0)
            throw ConfigError("window lengths must be positive");
        if (empc_horizon == 0) throw ConfigError("empc_horizon must be positive");
        if (perturb_scale < 0) throw ConfigError("perturb_scale must be nonnegative");
        for (double k : k_grid)
            if (k < 0.0 || k >= 1.0) throw ConfigError("k_grid values must lie in [0, 1)");
        spec.validate();
    }

    BuildingParams building() const {
        BuildingParams b = default_building();
        b.x_max = x_max;
        b.rho = rho;
        return b;
    }
};

} // namespace invfor
