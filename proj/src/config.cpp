#include "qnlab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qnlab/csv.hpp"

namespace qn {

std::string to_string(ClosureKind k) {
    switch (k) {
        case ClosureKind::L:
            return "L";
        case ClosureKind::S:
            return "S";
        case ClosureKind::Sprime:
            return "Sprime";
        case ClosureKind::euler_poisson:
            return "euler-poisson";
        case ClosureKind::magnetized_spectral:
            return "magnetized-spectral";
        case ClosureKind::magnetized_kinetic:
            return "magnetized-kinetic";
    }
    return "?";
}

ClosureKind closure_from_string(const std::string& s) {
    for (auto k : {ClosureKind::L, ClosureKind::S, ClosureKind::Sprime, ClosureKind::euler_poisson,
                   ClosureKind::magnetized_spectral, ClosureKind::magnetized_kinetic})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown closure kind: " + s);
}

void ExperimentConfig::validate() const {
    if (schema_version != 1) throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
    if (epsilons.empty()) throw ConfigError("epsilon list is empty");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) throw ConfigError("epsilon values must be positive");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ConfigError("epsilon list must be strictly decreasing");
    }
    if (topology != "periodic" && topology != "truncated_line") throw ConfigError("topology must be periodic or truncated_line");
    if (nx < 4 || nv < 4) throw ConfigError("grids need at least four points");
    if (vdim != 1 && vdim != 3) throw ConfigError("vdim must be 1 or 3");
    if (!(final_time > 0.0) || !(output_dt > 0.0)) throw ConfigError("final_time and output_dt must be positive");
    if (output_dt > final_time) throw ConfigError("output_dt exceeds final_time");
    if (blowup_guard > 0.0 && !(final_time < blowup_guard)) throw ConfigError("final_time must be below blowup_guard");
    if (ti_rule != "sqrt_eps" && ti_rule != "fixed") throw ConfigError("ti_rule must be sqrt_eps or fixed");
    if (ti_rule == "fixed" && !(ti > 0.0)) throw ConfigError("fixed ti must be positive");
    if (corrector_sign != "derived" && corrector_sign != "literal") throw ConfigError("corrector_sign must be derived or literal");
    if (closure == ClosureKind::magnetized_kinetic && vdim != 3) throw ConfigError("magnetized-kinetic needs vdim 3");
}

namespace {

template <class T>
void read(const YAML::Node& n, const char* key, T& out, std::set<std::string>& seen) {
    seen.insert(key);
    if (n[key]) out = n[key].as<T>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    YAML::Node n;
    try {
        n = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!n.IsMap()) throw ConfigError("config must be a key/value map");
    if (!n["schema_version"]) throw ConfigError("config lacks schema_version");
    ExperimentConfig c;
    std::set<std::string> seen;
    try {
        read(n, "schema_version", c.schema_version, seen);
        read(n, "preset", c.preset, seen);
        std::string closure = to_string(c.closure);
        read(n, "closure", closure, seen);
        c.closure = closure_from_string(closure);
        read(n, "epsilons", c.epsilons, seen);
        read(n, "alpha", c.alpha, seen);
        read(n, "topology", c.topology, seen);
        read(n, "extent", c.extent, seen);
        read(n, "radius", c.radius, seen);
        read(n, "nx", c.nx, seen);
        read(n, "nv", c.nv, seen);
        read(n, "vdim", c.vdim, seen);
        read(n, "vmax_margin", c.vmax_margin, seen);
        read(n, "final_time", c.final_time, seen);
        read(n, "output_dt", c.output_dt, seen);
        read(n, "kinetic_dt", c.kinetic_dt, seen);
        read(n, "kinetic_cfl", c.kinetic_cfl, seen);
        read(n, "fluid_cfl", c.fluid_cfl, seen);
        read(n, "blowup_guard", c.blowup_guard, seen);
        read(n, "blowup_threshold", c.blowup_threshold, seen);
        read(n, "rho_profile", c.rho_profile, seen);
        read(n, "rho_amplitude", c.rho_amplitude, seen);
        read(n, "rho_width", c.rho_width, seen);
        read(n, "u_profile", c.u_profile, seen);
        read(n, "u_amplitude", c.u_amplitude, seen);
        read(n, "u_width", c.u_width, seen);
        read(n, "wave_mode", c.wave_mode, seen);
        read(n, "ti_rule", c.ti_rule, seen);
        read(n, "ti", c.ti, seen);
        read(n, "temperature", c.temperature, seen);
        read(n, "h_amplitude", c.h_amplitude, seen);
        read(n, "w_perp", c.w_perp, seen);
        read(n, "newton_tol", c.newton_tol, seen);
        read(n, "newton_max_iter", c.newton_max_iter, seen);
        read(n, "gyro_s", c.gyro_s, seen);
        read(n, "gyro_q", c.gyro_q, seen);
        read(n, "gyro_n", c.gyro_n, seen);
        read(n, "gyro_max_mode", c.gyro_max_mode, seen);
        read(n, "gyro_delta", c.gyro_delta, seen);
        read(n, "gyro_beta", c.gyro_beta, seen);
        read(n, "gyro_thetas", c.gyro_thetas, seen);
        read(n, "corrector_sign", c.corrector_sign, seen);
        read(n, "seed", c.seed, seen);
        read(n, "checkpoint", c.checkpoint, seen);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config value error: ") + e.what());
    }
    for (auto it = n.begin(); it != n.end(); ++it) {
        auto key = it->first.as<std::string>();
        if (!seen.count(key)) throw ConfigError("unknown config key: " + key);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

// shortest text that reads back to the same double
std::string shortest(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::vector<std::string> shortest(const std::vector<double>& v) {
    std::vector<std::string> out;
    for (double x : v) out.push_back(shortest(x));
    return out;
}

}  // namespace

std::string dump_config(const ExperimentConfig& c) {
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "schema_version" << YAML::Value << c.schema_version;
    e << YAML::Key << "preset" << YAML::Value << c.preset;
    e << YAML::Key << "closure" << YAML::Value << to_string(c.closure);
    e << YAML::Key << "epsilons" << YAML::Value << YAML::Flow << shortest(c.epsilons);
    e << YAML::Key << "alpha" << YAML::Value << shortest(c.alpha);
    e << YAML::Key << "topology" << YAML::Value << c.topology;
    e << YAML::Key << "extent" << YAML::Value << shortest(c.extent);
    e << YAML::Key << "radius" << YAML::Value << shortest(c.radius);
    e << YAML::Key << "nx" << YAML::Value << c.nx;
    e << YAML::Key << "nv" << YAML::Value << c.nv;
    e << YAML::Key << "vdim" << YAML::Value << c.vdim;
    e << YAML::Key << "vmax_margin" << YAML::Value << shortest(c.vmax_margin);
    e << YAML::Key << "final_time" << YAML::Value << shortest(c.final_time);
    e << YAML::Key << "output_dt" << YAML::Value << shortest(c.output_dt);
    e << YAML::Key << "kinetic_dt" << YAML::Value << shortest(c.kinetic_dt);
    e << YAML::Key << "kinetic_cfl" << YAML::Value << shortest(c.kinetic_cfl);
    e << YAML::Key << "fluid_cfl" << YAML::Value << shortest(c.fluid_cfl);
    e << YAML::Key << "blowup_guard" << YAML::Value << shortest(c.blowup_guard);
    e << YAML::Key << "blowup_threshold" << YAML::Value << shortest(c.blowup_threshold);
    e << YAML::Key << "rho_profile" << YAML::Value << c.rho_profile;
    e << YAML::Key << "rho_amplitude" << YAML::Value << shortest(c.rho_amplitude);
    e << YAML::Key << "rho_width" << YAML::Value << shortest(c.rho_width);
    e << YAML::Key << "u_profile" << YAML::Value << c.u_profile;
    e << YAML::Key << "u_amplitude" << YAML::Value << shortest(c.u_amplitude);
    e << YAML::Key << "u_width" << YAML::Value << shortest(c.u_width);
    e << YAML::Key << "wave_mode" << YAML::Value << c.wave_mode;
    e << YAML::Key << "ti_rule" << YAML::Value << c.ti_rule;
    e << YAML::Key << "ti" << YAML::Value << shortest(c.ti);
    e << YAML::Key << "temperature" << YAML::Value << shortest(c.temperature);
    e << YAML::Key << "h_amplitude" << YAML::Value << shortest(c.h_amplitude);
    e << YAML::Key << "w_perp" << YAML::Value << YAML::Flow << shortest(c.w_perp);
    e << YAML::Key << "newton_tol" << YAML::Value << shortest(c.newton_tol);
    e << YAML::Key << "newton_max_iter" << YAML::Value << c.newton_max_iter;
    e << YAML::Key << "gyro_s" << YAML::Value << shortest(c.gyro_s);
    e << YAML::Key << "gyro_q" << YAML::Value << shortest(c.gyro_q);
    e << YAML::Key << "gyro_n" << YAML::Value << c.gyro_n;
    e << YAML::Key << "gyro_max_mode" << YAML::Value << c.gyro_max_mode;
    e << YAML::Key << "gyro_delta" << YAML::Value << shortest(c.gyro_delta);
    e << YAML::Key << "gyro_beta" << YAML::Value << shortest(c.gyro_beta);
    e << YAML::Key << "gyro_thetas" << YAML::Value << c.gyro_thetas;
    e << YAML::Key << "corrector_sign" << YAML::Value << c.corrector_sign;
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::Key << "checkpoint" << YAML::Value << c.checkpoint;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

std::vector<std::string> builtin_preset_names() {
    return {"L-sweep", "S-sweep", "euler-poisson-wave", "gyro-decay", "magnetized-kinetic"};
}

ExperimentConfig builtin_preset(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    if (name == "L-sweep") {
        c.closure = ClosureKind::L;
        c.epsilons = {1e-1, 1e-2, 1e-3, 1e-4};
        c.topology = "periodic";
        c.extent = 1.0;
        c.nx = 256;
        c.nv = 256;
        c.final_time = 0.5;
        c.output_dt = 0.01;
        c.rho_profile = "cosine";
        c.rho_amplitude = 0.05;
        c.u_profile = "sine";
        c.u_amplitude = 0.05;
    } else if (name == "S-sweep") {
        c.closure = ClosureKind::S;
        c.epsilons = {1e-1, 1e-2, 1e-3, 1e-4};
        c.topology = "truncated_line";
        c.radius = 28.0;
        c.nx = 1024;
        c.nv = 256;
        c.final_time = 1.0;
        c.output_dt = 0.02;
        c.rho_profile = "gaussian_log";
        c.rho_amplitude = 0.3;
        c.rho_width = 2.0;
        c.u_profile = "localized_sine";
        c.u_amplitude = 0.2;
        c.u_width = 4.0;
    } else if (name == "euler-poisson-wave") {
        c.closure = ClosureKind::euler_poisson;
        c.epsilons = {1e-2, 1e-3, 1e-4, 1e-5};
        c.topology = "periodic";
        c.extent = 1.0;
        c.nx = 128;
        c.final_time = 3.0;
        c.output_dt = 0.05;
        c.rho_profile = "cosine";
        c.rho_amplitude = 1e-3;
        c.u_profile = "zero";
        c.temperature = 0.0;
    } else if (name == "gyro-decay") {
        c.closure = ClosureKind::magnetized_spectral;
        for (int j = 3; j <= 9; ++j) c.epsilons.push_back(std::ldexp(1.0, -j));
        c.topology = "periodic";
        c.extent = 2.0 * 3.14159265358979323846;
        c.nx = c.gyro_n;
        c.final_time = 1.0;
        c.output_dt = 1.0;
        c.h_amplitude = 0.3;
    } else if (name == "magnetized-kinetic") {
        c.closure = ClosureKind::magnetized_kinetic;
        c.epsilons = {1e-1, 5e-2, 2.5e-2, 1.25e-2};
        c.alpha = 1.0;
        c.topology = "periodic";
        c.extent = 2.0 * 3.14159265358979323846;
        c.nx = 64;
        c.nv = 24;
        c.vdim = 3;
        c.final_time = 0.5;
        c.output_dt = 0.05;
        c.rho_profile = "cosine";
        c.rho_amplitude = 0.1;
        c.u_profile = "sine";
        c.u_amplitude = 0.1;
        c.h_amplitude = 0.2;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    c.validate();
    return c;
}

}  // namespace qn
