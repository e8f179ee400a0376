#pragma once
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qnlab/config.hpp"

namespace qn {

using RowSink = std::function<void(const std::vector<double>&)>;

// per-epsilon outcome; scalar diagnostics keyed by name (see docs/csv.md)
struct RunSummary {
    double epsilon = 0.0;
    bool ok = true;
    std::string status = "ok";
    double failed_at = -1.0;  // time of failure when !ok
    double final_time = 0.0;
    double elapsed_seconds = 0.0;
    std::map<std::string, double> values;

    double get(const std::string& k) const;
};

std::vector<std::string> run_header(ClosureKind k);

// one epsilon of a preset; rows are passed to sink as soon as they are final
RunSummary run_single(const ExperimentConfig& cfg, double epsilon, const RowSink& sink,
                      const std::string& checkpoint_path = "");

// first time the limit solution's max |u'| exceeds the threshold, or
// +inf if it stays below up to the horizon
double detect_blowup_time(const ExperimentConfig& cfg, double horizon);

}  // namespace qn
