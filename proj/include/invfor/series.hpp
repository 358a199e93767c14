#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "invfor/errors.hpp"

namespace invfor {

/// Hours since the Unix epoch; the only time unit in this library.
using HourStamp = std::int64_t;

namespace detail {

// Howard Hinnant's civil-date algorithms.
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

} // namespace detail

/// "YYYY-MM-DDTHH:00:00Z" for an hour stamp.
inline std::string format_hour(HourStamp h) {
    std::int64_t days = h / 24;
    int hod = static_cast<int>(h % 24);
    if (hod < 0) {
        hod += 24;
        days -= 1;
    }
    int y;
    unsigned m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00:00Z", y, m, d, hod);
    return buf;
}

/// Parses an ISO-8601 UTC hourly timestamp; minutes and seconds must be zero.
inline HourStamp parse_hour(std::string_view s) {
    int y, hod, minute, second;
    unsigned m, d;
    if (std::sscanf(std::string(s).c_str(), "%d-%u-%uT%d:%d:%dZ", &y, &m, &d, &hod,
                    &minute, &second) != 6 ||
        minute != 0 || second != 0 || hod < 0 || hod > 23 || m < 1 || m > 12 || d < 1 ||
        d > 31) {
        throw IoError("bad timestamp '" + std::string(s) + "' (expect YYYY-MM-DDTHH:00:00Z)");
    }
    return detail::days_from_civil(y, m, d) * 24 + hod;
}

/// Shortest round-trip decimal rendering of a double (deterministic output).
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Aligned hourly records of price, measured load and weather.  Rows are
/// contiguous hours starting at `start`; a gap in an input file is an error.
struct TimeSeriesTable {
    HourStamp start = 0;
    std::vector<double> price;
    std::vector<double> load;
    std::vector<double> temp_ambient;
    std::vector<double> solar;
    // optional extra columns (e.g. per-building loads), written after the
    // fixed schema when requested
    std::vector<std::pair<std::string, std::vector<double>>> extra;

    std::size_t size() const { return price.size(); }
    bool has_load() const { return !load.empty(); }
    HourStamp stamp(std::size_t t) const { return start + static_cast<HourStamp>(t); }
    int hour_of_day(std::size_t t) const {
        HourStamp h = stamp(t) % 24;
        return static_cast<int>(h < 0 ? h + 24 : h);
    }

    /// Rows [from, from+len) as a new table (extra columns included).
    TimeSeriesTable slice(std::size_t from, std::size_t len) const {
        if (from + len > size()) throw InsufficientHistory("slice beyond table end");
        TimeSeriesTable out;
        out.start = stamp(from);
        auto cut = [&](const std::vector<double>& v) {
            return v.empty() ? std::vector<double>()
                             : std::vector<double>(v.begin() + from, v.begin() + from + len);
        };
        out.price = cut(price);
        out.load = cut(load);
        out.temp_ambient = cut(temp_ambient);
        out.solar = cut(solar);
        for (const auto& [name, col] : extra) out.extra.emplace_back(name, cut(col));
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_field_double(const std::string& s, const std::string& path, std::size_t lineno) {
    double v;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError(path + ":" + std::to_string(lineno) + ": bad numeric field '" + s + "'");
    return v;
}

} // namespace detail

/// Reads a CSV with header `timestamp,price[,load],temp_ambient,solar[,...]`.
/// `require_load` distinguishes simulator inputs (price + weather only) from
/// datasets that carry the measured load.
inline TimeSeriesTable read_series_csv(const std::string& path, bool require_load) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    auto header = detail::split_csv_line(line);
    std::size_t ncol = header.size();
    if (ncol < 4 || header[0] != "timestamp" || header[1] != "price")
        throw IoError(path + ": unexpected header '" + line + "'");
    bool with_load = header[2] == "load";
    if (require_load && !with_load) throw IoError(path + ": missing load column");
    std::size_t wcol = with_load ? 3 : 2;
    if (header[wcol] != "temp_ambient" || header[wcol + 1] != "solar")
        throw IoError(path + ": unexpected header '" + line + "'");

    TimeSeriesTable table;
    for (std::size_t c = wcol + 2; c < ncol; ++c) table.extra.emplace_back(header[c], std::vector<double>());

    std::size_t lineno = 1;
    bool first = true;
    HourStamp prev = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != ncol)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(ncol) + " fields, got " + std::to_string(fields.size()));
        HourStamp h = parse_hour(fields[0]);
        if (first) {
            table.start = h;
            first = false;
        } else if (h != prev + 1) {
            throw IoError(path + ":" + std::to_string(lineno) +
                          ": timestamp gap (hourly series must be contiguous)");
        }
        prev = h;
        std::size_t c = 1;
        table.price.push_back(detail::parse_field_double(fields[c++], path, lineno));
        if (with_load) table.load.push_back(detail::parse_field_double(fields[c++], path, lineno));
        table.temp_ambient.push_back(detail::parse_field_double(fields[c++], path, lineno));
        table.solar.push_back(detail::parse_field_double(fields[c++], path, lineno));
        for (auto& [name, col] : table.extra) col.push_back(detail::parse_field_double(fields[c++], path, lineno));
    }
    if (first) throw IoError(path + ": no data rows");
    return table;
}

inline void write_series_csv(const std::string& path, const TimeSeriesTable& table,
                             bool include_extra = false) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "timestamp,price";
    if (table.has_load()) out << ",load";
    out << ",temp_ambient,solar";
    if (include_extra)
        for (const auto& [name, col] : table.extra) out << ',' << name;
    out << '\n';
    for (std::size_t t = 0; t < table.size(); ++t) {
        out << format_hour(table.stamp(t)) << ',' << format_double(table.price[t]);
        if (table.has_load()) out << ',' << format_double(table.load[t]);
        out << ',' << format_double(table.temp_ambient[t]) << ',' << format_double(table.solar[t]);
        if (include_extra)
            for (const auto& [name, col] : table.extra) out << ',' << format_double(col[t]);
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace invfor
