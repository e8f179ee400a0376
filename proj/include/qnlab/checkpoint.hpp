#pragma once
#include <string>

#include "qnlab/kinetic.hpp"

namespace qn {

// text header of key = value lines, a line reading "binary", then the
// values as little-endian float64 in storage order (see docs/checkpoint.md)
void save_checkpoint(const std::string& path, const PhaseDensity& f);
PhaseDensity load_checkpoint(const std::string& path);

}  // namespace qn
