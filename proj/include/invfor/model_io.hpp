#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "invfor/estimation.hpp"
#include "invfor/series.hpp"

namespace invfor {

/// Serializes an estimated model as a versioned plain-text document.
/// Format (stable across releases):
///   invfor-model 1
///   blocks <B>
///   k <K>
///   first_block_offset <offset>
///   hour_indicators <n>
///   ambient_temperature 0|1
///   solar_irradiance 0|1
///   load_lags <n> [lag...]
///   price_lags <n> [lag...]
///   fingerprint <hex>
///   bounds <mu_lo> <mu_hi>
///   bound_slopes <R> then R lines: <alpha_lo> <alpha_hi>
///   utility_intercepts <B> then B lines: <mu_u>
///   utility_slopes <R> then R lines: <alpha_u>
///   end
inline void write_model(std::ostream& out, const EstimatedModel& m) {
    out << "invfor-model 1\n";
    out << "blocks " << m.blocks << '\n';
    out << "k " << format_double(m.k) << '\n';
    out << "first_block_offset " << format_double(m.first_block_offset) << '\n';
    out << "hour_indicators " << m.spec.hour_indicators << '\n';
    out << "ambient_temperature " << (m.spec.ambient_temperature ? 1 : 0) << '\n';
    out << "solar_irradiance " << (m.spec.solar_irradiance ? 1 : 0) << '\n';
    out << "load_lags " << m.spec.load_lags.size();
    for (int lag : m.spec.load_lags) out << ' ' << lag;
    out << '\n';
    out << "price_lags " << m.spec.price_lags.size();
    for (int lag : m.spec.price_lags) out << ' ' << lag;
    out << '\n';
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(m.fingerprint));
    out << "fingerprint " << hex << '\n';
    out << "bounds " << format_double(m.bounds.mu_lo) << ' ' << format_double(m.bounds.mu_hi) << '\n';
    out << "bound_slopes " << m.bounds.arity() << '\n';
    for (std::size_t r = 0; r < m.bounds.arity(); ++r)
        out << format_double(m.bounds.alpha_lo[r]) << ' ' << format_double(m.bounds.alpha_hi[r]) << '\n';
    out << "utility_intercepts " << m.utilities.blocks() << '\n';
    for (double v : m.utilities.mu_u) out << format_double(v) << '\n';
    out << "utility_slopes " << m.utilities.arity() << '\n';
    for (double v : m.utilities.alpha_u) out << format_double(v) << '\n';
    out << "end\n";
}

inline void write_model_file(const std::string& path, const EstimatedModel& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_model(out, m);
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace detail {

inline std::string expect_key(std::istream& in, const std::string& key, const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(what + ": truncated model file");
    if (line.rfind(key + " ", 0) != 0 && line != key)
        throw ConfigError(what + ": expected '" + key + "', got '" + line + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
}

} // namespace detail

inline EstimatedModel read_model(std::istream& in) {
    std::string header;
    std::getline(in, header);
    if (header != "invfor-model 1") throw ConfigError("unsupported model file version: '" + header + "'");
    EstimatedModel m;
    m.blocks = std::stoul(detail::expect_key(in, "blocks", "model"));
    m.k = std::stod(detail::expect_key(in, "k", "model"));
    m.first_block_offset = std::stod(detail::expect_key(in, "first_block_offset", "model"));
    m.spec.hour_indicators = std::stoi(detail::expect_key(in, "hour_indicators", "model"));
    m.spec.ambient_temperature = detail::expect_key(in, "ambient_temperature", "model") == "1";
    m.spec.solar_irradiance = detail::expect_key(in, "solar_irradiance", "model") == "1";
    auto read_lags = [&](const char* key) {
        std::istringstream ss(detail::expect_key(in, key, "model"));
        std::size_t n;
        ss >> n;
        std::vector<int> lags(n);
        for (auto& lag : lags)
            if (!(ss >> lag)) throw ConfigError("model: truncated lag list");
        return lags;
    };
    m.spec.load_lags = read_lags("load_lags");
    m.spec.price_lags = read_lags("price_lags");
    m.fingerprint = std::stoull(detail::expect_key(in, "fingerprint", "model"), nullptr, 16);
    {
        std::istringstream ss(detail::expect_key(in, "bounds", "model"));
        if (!(ss >> m.bounds.mu_lo >> m.bounds.mu_hi)) throw ConfigError("model: bad bounds line");
    }
    const std::size_t rb = std::stoul(detail::expect_key(in, "bound_slopes", "model"));
    for (std::size_t r = 0; r < rb; ++r) {
        double lo, hi;
        if (!(in >> lo >> hi)) throw ConfigError("model: truncated bound slopes");
        m.bounds.alpha_lo.push_back(lo);
        m.bounds.alpha_hi.push_back(hi);
    }
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    const std::size_t nb = std::stoul(detail::expect_key(in, "utility_intercepts", "model"));
    for (std::size_t b = 0; b < nb; ++b) {
        double v;
        if (!(in >> v)) throw ConfigError("model: truncated utility intercepts");
        m.utilities.mu_u.push_back(v);
    }
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    const std::size_t ru = std::stoul(detail::expect_key(in, "utility_slopes", "model"));
    for (std::size_t r = 0; r < ru; ++r) {
        double v;
        if (!(in >> v)) throw ConfigError("model: truncated utility slopes");
        m.utilities.alpha_u.push_back(v);
    }
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    detail::expect_key(in, "end", "model");
    if (m.bounds.arity() != m.spec.count() || m.utilities.arity() != m.spec.count() ||
        m.utilities.blocks() != m.blocks)
        throw ConfigError("model: inconsistent dimensions");
    return m;
}

inline EstimatedModel read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_model(in);
}

} // namespace invfor
