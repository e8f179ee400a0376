#include "qnlab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qnlab/csv.hpp"

namespace qn {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

void save_checkpoint(const std::string& path, const PhaseDensity& f) {
    f.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    const auto& x = f.xgrid;
    out << "qnlab-checkpoint 1\n";
    out << "topology = " << (x.is_periodic() ? "periodic" : "truncated_line") << "\n";
    out << "nx = " << x.points[0] << "\n";
    out << "extent = " << format_number(x.extent[0]) << "\n";
    out << "origin = " << format_number(x.origin[0]) << "\n";
    out << "cutoff_radius = " << format_number(x.cutoff_radius) << "\n";
    out << "far_field_decay = " << format_number(x.far_field_decay) << "\n";
    out << "vdim = " << f.vgrid.dim << "\n";
    out << "nv = " << f.vgrid.points << "\n";
    out << "vmax = " << format_number(f.vgrid.vmax) << "\n";
    out << "time = " << format_number(f.time) << "\n";
    out << "epsilon = " << format_number(f.epsilon) << "\n";
    out << "mass_scale = " << format_number(f.mass_scale) << "\n";
    out << "count = " << f.values.size() << "\n";
    out << "binary\n";
    out.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

PhaseDensity load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "qnlab-checkpoint 1") throw std::runtime_error("not a checkpoint file: " + path);
    std::map<std::string, std::string> kv;
    while (std::getline(in, line) && line != "binary") {
        auto eq = line.find(" = ");
        if (eq == std::string::npos) throw std::runtime_error("bad checkpoint header line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    if (line != "binary") throw std::runtime_error("checkpoint header not terminated");
    auto num = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::runtime_error("checkpoint missing key " + k);
        return std::stod(it->second);
    };
    PhaseDensity f;
    int nx = static_cast<int>(num("nx"));
    if (kv["topology"] == "periodic")
        f.xgrid = SpatialGrid::periodic(num("extent"), nx, num("origin"));
    else
        f.xgrid = SpatialGrid::truncated_line(num("cutoff_radius"), nx, num("far_field_decay"));
    f.vgrid.dim = static_cast<int>(num("vdim"));
    f.vgrid.points = static_cast<int>(num("nv"));
    f.vgrid.vmax = num("vmax");
    f.time = num("time");
    f.epsilon = num("epsilon");
    f.mass_scale = num("mass_scale");
    std::size_t count = static_cast<std::size_t>(num("count"));
    f.values.resize(count);
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double))) throw std::runtime_error("checkpoint truncated");
    f.validate();
    return f;
}

}  // namespace qn
