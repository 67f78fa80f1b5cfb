#include "mfhawkes/io.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "mfhawkes/errors.hpp"

namespace mfhawkes {

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

double parse_double(std::string_view s) {
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error("malformed number '" + std::string(s) + "'");
    }
    return v;
}

template <class Int>
Int parse_int(std::string_view s) {
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error("malformed integer '" + std::string(s) + "'");
    }
    return v;
}

bool next_line(std::istream& is, std::string& line) {
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            return true;
        }
    }
    return false;
}

// Rows of numbers after a header; the header's column count is enforced.
std::vector<std::vector<double>> read_table(std::istream& is, std::size_t& columns) {
    std::string line;
    if (!next_line(is, line)) {
        throw Error("empty table");
    }
    columns = split(line).size();
    std::vector<std::vector<double>> rows;
    while (next_line(is, line)) {
        const auto cells = split(line);
        if (cells.size() != columns) {
            throw Error("row has " + std::to_string(cells.size()) + " columns, expected " + std::to_string(columns));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto c : cells) {
            row.push_back(parse_double(c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

TimeGrid grid_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) {
        throw Error("a gridded table needs at least two rows");
    }
    const std::size_t steps = rows.size() - 1;
    return TimeGrid(rows.back()[0] / static_cast<double>(steps), steps);
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_event_paths(std::ostream& os, const EventPaths& paths) {
    os << "N,T,seed\n" << paths.N << ',' << format_double(paths.horizon) << ',' << paths.seed << '\n';
    os << "component,time\n";
    for (const auto& e : paths.merged()) {
        os << e.component << ',' << format_double(e.time) << '\n';
    }
}

EventPaths read_event_paths(std::istream& is) {
    std::string line;
    if (!next_line(is, line) || line != "N,T,seed" || !next_line(is, line)) {
        throw Error("event file must start with an N,T,seed header");
    }
    const auto head = split(line);
    if (head.size() != 3) {
        throw Error("malformed event-file header");
    }
    EventPaths paths(parse_int<std::size_t>(head[0]), parse_double(head[1]), parse_int<std::uint64_t>(head[2]));
    if (!next_line(is, line) || line != "component,time") {
        throw Error("event file lacks the component,time header");
    }
    while (next_line(is, line)) {
        const auto cells = split(line);
        if (cells.size() != 2) {
            throw Error("malformed event row '" + line + "'");
        }
        const auto c = parse_int<std::size_t>(cells[0]);
        if (c >= paths.N) {
            throw Error("event component out of range");
        }
        paths.times[c].push_back(parse_double(cells[1]));
    }
    return paths;
}

void write_measure_flow(std::ostream& os, const MeasureFlow& flow) {
    os << 't';
    for (std::size_t x = 0; x <= flow.n_max(); ++x) {
        os << ",x" << x;
    }
    os << '\n';
    for (std::size_t k = 0; k < flow.grid().points(); ++k) {
        os << format_double(flow.grid().time(k));
        for (double v : flow.row(k)) {
            os << ',' << format_double(v);
        }
        os << '\n';
    }
}

MeasureFlow read_measure_flow(std::istream& is) {
    std::size_t columns = 0;
    const auto rows = read_table(is, columns);
    if (columns < 2) {
        throw Error("measure-flow table needs a time column and at least one state");
    }
    MeasureFlow flow(grid_from_rows(rows), columns - 2);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t x = 0; x + 1 < columns; ++x) {
            flow(k, x) = rows[k][x + 1];
        }
    }
    return flow;
}

void write_mean_path(std::ostream& os, const MeanPath& path) {
    os << "t,value\n";
    for (std::size_t k = 0; k < path.grid.points(); ++k) {
        os << format_double(path.grid.time(k)) << ',' << format_double(path.values[k]) << '\n';
    }
}

MeanPath read_mean_path(std::istream& is) {
    std::size_t columns = 0;
    const auto rows = read_table(is, columns);
    if (columns != 2) {
        throw Error("mean-path table must have columns t,value");
    }
    MeanPath path{grid_from_rows(rows), {}};
    for (const auto& r : rows) {
        path.values.push_back(r[1]);
    }
    return path;
}

void write_tilt_field(std::ostream& os, const TiltField& tilt) {
    os << 't';
    for (std::size_t x = 0; x <= tilt.n_max(); ++x) {
        os << ",x" << x;
    }
    os << ",tail\n";
    // One row per cell plus a closing row at T repeating the last cell.
    for (std::size_t k = 0; k <= tilt.cells(); ++k) {
        const std::size_t cell = std::min(k, tilt.cells() - 1);
        os << format_double(tilt.grid().time(k));
        for (std::size_t x = 0; x <= tilt.n_max(); ++x) {
            os << ',' << format_double(tilt(cell, x));
        }
        os << ',' << format_double(tilt.tail()) << '\n';
    }
}

TiltField read_tilt_field(std::istream& is) {
    std::size_t columns = 0;
    const auto rows = read_table(is, columns);
    if (columns < 3) {
        throw Error("tilt table needs t, at least one state, and tail");
    }
    const std::size_t n_max = columns - 3;
    TiltField tilt(grid_from_rows(rows), n_max, rows.front().back());
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        for (std::size_t x = 0; x <= n_max; ++x) {
            tilt(k, x) = rows[k][x + 1];
        }
    }
    return tilt;
}

}  // namespace mfhawkes
