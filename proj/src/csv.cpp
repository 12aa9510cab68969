#include "nprisk/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace nprisk {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_number(const std::string& field, const std::string& path, int line_no,
                    const std::string& column) {
    const std::string where = path + ": line " + std::to_string(line_no);
    if (field.empty()) throw ParseError(where + ": empty " + column + " field");
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size())
        throw ParseError(where + ": cannot parse " + column + " value '" + field + "'");
    if (!std::isfinite(v))
        throw ParseError(where + ": non-finite " + column + " value '" + field + "'");
    return v;
}

void expect_header(const std::string& got, const std::string& want, const std::string& path) {
    std::string g = trim(got);
    std::transform(g.begin(), g.end(), g.begin(), [](unsigned char c) { return std::tolower(c); });
    g.erase(std::remove(g.begin(), g.end(), ' '), g.end());
    if (g != want)
        throw ParseError(path + ": expected header '" + want + "', got '" + trim(got) + "'");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write to " + path);
    return out;
}

}  // namespace

SpatialSample read_sample_csv(const std::string& path, int min_points) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    expect_header(line, "x1,x2,y", path);

    SpatialSample sample;
    std::vector<double> values;
    std::map<std::pair<double, double>, int> seen;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 3)
            throw ParseError(path + ": line " + std::to_string(line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        Location p{parse_number(fields[0], path, line_no, "x1"),
                   parse_number(fields[1], path, line_no, "x2")};
        double y = parse_number(fields[2], path, line_no, "y");
        auto [it, inserted] = seen.emplace(std::make_pair(p.x1, p.x2), line_no);
        if (!inserted)
            throw DuplicateLocation(path + ": line " + std::to_string(line_no) +
                                    " duplicates the location on line " +
                                    std::to_string(it->second));
        sample.locations.push_back(p);
        values.push_back(y);
    }
    if (static_cast<int>(values.size()) < min_points)
        throw TooFewPoints(path + ": " + std::to_string(values.size()) + " data rows, need " +
                           std::to_string(min_points) + " (use --allow-small for tiny inputs)");
    sample.values = Eigen::Map<Vec>(values.data(), values.size());
    return sample;
}

std::vector<Location> read_locations_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    expect_header(line, "x1,x2", path);
    std::vector<Location> locs;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 2)
            throw ParseError(path + ": line " + std::to_string(line_no) + ": expected 2 fields, got " +
                             std::to_string(fields.size()));
        locs.push_back({parse_number(fields[0], path, line_no, "x1"),
                        parse_number(fields[1], path, line_no, "x2")});
    }
    if (locs.empty()) throw TooFewPoints(path + ": no estimation locations");
    return locs;
}

void write_sample_csv(const std::string& path, const SpatialSample& sample) {
    std::ofstream out = open_out(path);
    out << "x1,x2,y\n";
    char buf[96];
    for (int i = 0; i < sample.n(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", sample.locations[i].x1,
                      sample.locations[i].x2, sample.values[i]);
        out << buf;
    }
}

void write_riskmap_csv(const std::string& path, const std::vector<RiskMap>& maps) {
    std::ofstream out = open_out(path);
    out << "x1,x2,c,prob\n";
    char buf[128];
    for (const RiskMap& map : maps)
        for (std::size_t a = 0; a < map.locations.size(); ++a) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.6f\n", map.locations[a].x1,
                          map.locations[a].x2, map.threshold, map.probabilities[a]);
            out << buf;
        }
}

void write_ik_csv(const std::string& path, const std::vector<Location>& targets,
                  const std::vector<double>& thresholds, const std::vector<IkResult>& results) {
    if (thresholds.size() != results.size())
        throw ConfigError("write_ik_csv: thresholds/results mismatch");
    std::ofstream out = open_out(path);
    out << "x1,x2,c,prob,prob_raw\n";
    char buf[160];
    for (std::size_t c = 0; c < thresholds.size(); ++c)
        for (std::size_t a = 0; a < targets.size(); ++a) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.6f,%.6f\n", targets[a].x1,
                          targets[a].x2, thresholds[c], results[c].clamped[a], results[c].raw[a]);
            out << buf;
        }
}

void write_error_summary_csv(std::ostream& out, const ErrorSummary& summary) {
    out << "scenario,c,mean,median,sd,n_failed\n";
    char buf[256];
    for (const ErrorSummaryRow& row : summary.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.6f,%.6f,%.6f,%d\n", row.scenario.c_str(),
                      row.threshold, row.mean, row.median, row.sd, row.n_failed);
        out << buf;
    }
}

void write_error_summary_csv(const std::string& path, const ErrorSummary& summary) {
    std::ofstream out = open_out(path);
    write_error_summary_csv(out, summary);
}

}  // namespace nprisk
