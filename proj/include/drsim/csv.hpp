// CSV serialization for traces and summaries.
//
// Numbers are written in the shortest text form that round-trips to the
// same double (std::to_chars), so re-parsing an emitted file reproduces
// the in-memory values bit for bit. Files are UTF-8 with a header row and
// LF line endings.
#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "drsim/errors.hpp"
#include "drsim/simulator.hpp"

namespace drsim {
namespace csv {

inline constexpr const char* kTraceHeader =
    "t,p,Q,xi,shock,D,a_hat,b_hat,qhat,r_policy,r_oracle,profit_realized,regret_cum";

/// Shortest round-trip representation of a double ("nan"/"inf" included).
inline std::string format(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view field, const std::string& where) {
    double v = 0.0;
    // from_chars accepts "nan"/"inf" but not a leading '+'.
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ConfigError("csv: " + where + ": not a number: '" + std::string(field) + "'");
    return v;
}

inline std::size_t parse_index(std::string_view field, const std::string& where) {
    std::size_t v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ConfigError("csv: " + where + ": not an index: '" + std::string(field) + "'");
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

/// Strip one trailing '\r' so CRLF input parses too.
inline std::string_view chomp(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline void write_trace(std::ostream& out, const EpisodeTrace& trace) {
    out << kTraceHeader << '\n';
    std::string line;
    for (const TraceRow& r : trace.rows) {
        line.clear();
        line += std::to_string(r.t);
        line += ',';
        line += format(r.p);
        line += ',';
        line += format(r.Q);
        line += ',';
        line += std::to_string(r.xi);
        line += ',';
        line += format(r.shock);
        line += ',';
        line += format(r.D);
        line += ',';
        line += format(r.a_hat);
        line += ',';
        line += format(r.b_hat);
        line += ',';
        line += format(r.qhat);
        line += ',';
        line += format(r.r_policy);
        line += ',';
        line += format(r.r_oracle);
        line += ',';
        line += format(r.profit_realized);
        line += ',';
        line += format(r.regret_cum);
        line += '\n';
        out << line;
    }
}

inline EpisodeTrace read_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || chomp(line) != kTraceHeader)
        throw ConfigError("csv: missing or unexpected trace header");
    EpisodeTrace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = chomp(line);
        if (body.empty()) continue;
        const auto f = split_fields(body);
        if (f.size() != 13)
            throw ConfigError("csv: line " + std::to_string(line_no) + ": expected 13 fields");
        const std::string where = "line " + std::to_string(line_no);
        TraceRow r;
        r.t = parse_index(f[0], where);
        r.p = parse_double(f[1], where);
        r.Q = parse_double(f[2], where);
        r.xi = static_cast<int>(parse_index(f[3], where));
        r.shock = parse_double(f[4], where);
        r.D = parse_double(f[5], where);
        r.a_hat = parse_double(f[6], where);
        r.b_hat = parse_double(f[7], where);
        r.qhat = parse_double(f[8], where);
        r.r_policy = parse_double(f[9], where);
        r.r_oracle = parse_double(f[10], where);
        r.profit_realized = parse_double(f[11], where);
        r.regret_cum = parse_double(f[12], where);
        trace.rows.push_back(r);
    }
    return trace;
}

/// Summary columns: t, then <series>_mean, <series>_p15, <series>_p85 per
/// traced series.
inline void write_summary(std::ostream& out, const MonteCarloSummary& summary) {
    std::string line = "t";
    for (const std::string& name : summary.names)
        line += "," + name + "_mean," + name + "_p15," + name + "_p85";
    out << line << '\n';
    for (std::size_t t = 0; t < summary.T; ++t) {
        line = std::to_string(t + 1);
        for (const SeriesSummary& s : summary.series) {
            line += ',';
            line += format(s.mean[t]);
            line += ',';
            line += format(s.p15[t]);
            line += ',';
            line += format(s.p85[t]);
        }
        line += '\n';
        out << line;
    }
}

inline MonteCarloSummary read_summary(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("csv: empty summary");
    const auto header = split_fields(chomp(line));
    if (header.empty() || header[0] != "t" || (header.size() - 1) % 3 != 0)
        throw ConfigError("csv: unexpected summary header");
    MonteCarloSummary summary;
    const std::size_t n_series = (header.size() - 1) / 3;
    for (std::size_t s = 0; s < n_series; ++s) {
        const std::string_view mean_col = header[1 + 3 * s];
        if (mean_col.size() < 5 || mean_col.substr(mean_col.size() - 5) != "_mean")
            throw ConfigError("csv: unexpected summary column '" + std::string(mean_col) + "'");
        const std::string name(mean_col.substr(0, mean_col.size() - 5));
        if (header[2 + 3 * s] != name + "_p15" || header[3 + 3 * s] != name + "_p85")
            throw ConfigError("csv: unexpected summary columns after '" + std::string(mean_col) +
                              "'");
        summary.names.push_back(name);
    }
    summary.series.resize(n_series);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = chomp(line);
        if (body.empty()) continue;
        const auto f = split_fields(body);
        if (f.size() != header.size())
            throw ConfigError("csv: line " + std::to_string(line_no) + ": field count mismatch");
        const std::string where = "line " + std::to_string(line_no);
        for (std::size_t s = 0; s < n_series; ++s) {
            summary.series[s].mean.push_back(parse_double(f[1 + 3 * s], where));
            summary.series[s].p15.push_back(parse_double(f[2 + 3 * s], where));
            summary.series[s].p85.push_back(parse_double(f[3 + 3 * s], where));
        }
        ++summary.T;
    }
    return summary;
}

// Path convenience overloads.

inline void write_trace(const std::filesystem::path& file, const EpisodeTrace& trace) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw ConfigError("csv: cannot write " + file.string());
    write_trace(out, trace);
}

inline EpisodeTrace read_trace(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("csv: cannot read " + file.string());
    return read_trace(in);
}

inline void write_summary(const std::filesystem::path& file, const MonteCarloSummary& summary) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw ConfigError("csv: cannot write " + file.string());
    write_summary(out, summary);
}

inline MonteCarloSummary read_summary(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("csv: cannot read " + file.string());
    return read_summary(in);
}

}  // namespace csv
}  // namespace drsim
