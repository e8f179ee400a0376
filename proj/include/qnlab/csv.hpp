#pragma once
#include <fstream>
#include <string>
#include <vector>

namespace qn {

// header of every kinetic-run CSV; spectral presets reuse the first seven
// names and append their own columns
std::vector<std::string> kinetic_csv_header();

std::string format_number(double v);

// rows go out immediately and are flushed, so a killed run leaves a parseable prefix
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void write_row(const std::vector<double>& row);
    const std::vector<std::string>& header() const { return header_; }

  private:
    std::ofstream out_;
    std::vector<std::string> header_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

}  // namespace qn
