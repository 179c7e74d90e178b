#include "ospde/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ospde {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, r.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) {
        const auto a = cell.find_first_not_of(" \t\r");
        const auto b = cell.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
    }
    return out;
}

bool parse(const std::string& s, double& v) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

NumericTable read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    NumericTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split(line);
        std::vector<double> row;
        bool ok = true;
        for (const auto& c : cells) {
            double v = 0.0;
            if (!parse(c, v)) {
                ok = false;
                break;
            }
            row.push_back(v);
        }
        if (!ok) {
            if (t.values.empty() && t.header.empty()) {
                t.header = cells;
                t.columns = cells.size();
                continue;
            }
            throw InvalidArgument(path + ":" + std::to_string(lineno) + ": not a number");
        }
        if (t.columns == 0) t.columns = row.size();
        if (row.size() != t.columns) throw ShapeMismatch(path + ":" + std::to_string(lineno) + ": ragged row");
        t.values.insert(t.values.end(), row.begin(), row.end());
    }
    return t;
}

void write_trajectory_csv(std::ostream& out, const SolutionPath& path, const ReflectionMeasure& nu,
                          const SpatialGrid& grid, const TimeGrid& time) {
    const bool two = grid.dim() == 2;
    out << "k,t,node,x" << (two ? ",y" : "") << ",u,nu_mass\n";
    for (std::size_t k = 0; k < path.u.size(); ++k) {
        const std::string t = format_double(time.time(k));
        for (std::size_t n = 0; n < grid.node_count(); ++n) {
            const Point x = grid.coordinates(n);
            out << k << ',' << t << ',' << n << ',' << format_double(x[0]);
            if (two) out << ',' << format_double(x[1]);
            const double m = nu.mass.empty() ? 0.0 : nu.mass[k][n];
            out << ',' << format_double(path.u[k][n]) << ',' << format_double(m) << '\n';
        }
    }
}

void write_field_csv(std::ostream& out, const FieldPath& fields, const SpatialGrid& grid, const TimeGrid& time) {
    const bool two = grid.dim() == 2;
    out << "t,x" << (two ? ",y" : "") << ",value\n";
    for (std::size_t k = 0; k < fields.size(); ++k) {
        const std::string t = format_double(time.time(k));
        for (std::size_t n = 0; n < grid.node_count(); ++n) {
            const Point x = grid.coordinates(n);
            out << t << ',' << format_double(x[0]);
            if (two) out << ',' << format_double(x[1]);
            out << ',' << format_double(fields[k][n]) << '\n';
        }
    }
}

void write_capacity_csv(std::ostream& out, const CapacityEstimate& e) {
    out << "level,nodes,steps,penalty,mass,error_indicator\n";
    for (std::size_t i = 0; i < e.levels.size(); ++i) {
        const CapacityLevel& l = e.levels[i];
        out << i << ',' << l.nodes << ',' << l.steps << ',' << format_double(l.penalty) << ','
            << format_double(l.mass) << ',' << format_double(l.error_indicator) << '\n';
    }
}

void write_residual_csv(std::ostream& out, const VerificationReport& report) {
    out << "check,path,value\n";
    for (const CheckEntry& e : report.entries) {
        for (std::size_t i = 0; i < e.per_path.size(); ++i) {
            out << e.name << ',' << i << ',' << format_double(e.per_path[i]) << '\n';
        }
    }
}

}  // namespace ospde
