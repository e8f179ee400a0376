#include "qnlab/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace qn {

std::vector<std::string> kinetic_csv_header() {
    return {"time",          "epsilon",         "kinetic_term",      "field_term",     "entropy_term",
            "total",         "budget_slack",    "energy",            "energy_kinetic", "energy_field",
            "energy_entropy", "sqrt_density_gap", "velocity_gap",     "potential_gap",  "pairing",
            "g_remainder",   "gronwall_integral", "grad_u_inf",      "slack_c1",       "slack_c2",
            "mass",          "min_f",           "clipped_mass",      "truncation_mass"};
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), header_(header) {
    if (!out_) throw std::runtime_error("cannot open CSV for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
    out_.flush();
}

void CsvWriter::write_row(const std::vector<double>& row) {
    if (row.size() != header_.size()) throw std::invalid_argument("CSV row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) out_ << (i ? "," : "") << format_number(row[i]);
    out_ << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("CSV write failed");
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open CSV: " + path);
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        // a truncated last line from a killed run is dropped
        if (cells.size() != t.header.size()) continue;
        std::vector<double> row;
        for (auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace qn
