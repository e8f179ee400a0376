#pragma once
#include <map>
#include <string>
#include <vector>

#include "qnlab/config.hpp"
#include "qnlab/fit.hpp"
#include "qnlab/runs.hpp"

namespace qn {

struct FitRecord {
    std::string quantity;
    double time = 0.0;  // nan for fits of per-run summaries
    RateFit fit;
};

// declared threshold on a fitted exponent or summary quantity
struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct SweepOptions {
    std::string out_dir;  // empty: nothing written to disk
    int workers = 1;
    bool plots = true;
    bool enforce_blowup_guard = true;
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<std::string> header;
    std::vector<std::vector<std::vector<double>>> rows;  // per epsilon, config order
    std::vector<RunSummary> summaries;
    std::vector<FitRecord> fits;
    std::vector<Check> checks;
    double blowup_time = 0.0;
    bool ok = true;

    int column(const std::string& name) const;
    // one column of the epsilon at index i
    std::vector<double> series(std::size_t i, const std::string& name) const;
};

SweepResult run_preset(const ExperimentConfig& cfg, const SweepOptions& opt = {});

// log-log fits over epsilon of `quantity` at every shared output row index,
// skipped where fewer than min_points positive values exist
std::vector<FitRecord> fit_over_time(const std::vector<std::string>& header,
                                     const std::vector<std::vector<std::vector<double>>>& rows,
                                     const std::string& quantity, int min_points = 4);

// fits of per-run summary values that are positive for every epsilon
std::vector<FitRecord> fit_summaries(const std::vector<RunSummary>& s, int min_points = 4);

void write_fits_csv(const std::string& path, const std::vector<FitRecord>& fits);
void write_summary_csv(const std::string& path, const std::vector<RunSummary>& s);

// threshold checks for the built-in presets (empty for custom configs)
std::vector<Check> preset_checks(const SweepResult& r);

// returns the written paths
std::vector<std::string> emit_plots(const SweepResult& r, const std::string& out_dir);

// regroups a sweep CSV (rows interleaved or not) by its epsilon column
SweepResult result_from_csv(const std::string& path);

}  // namespace qn
