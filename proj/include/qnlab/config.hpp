#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qn {

enum class ClosureKind { L, S, Sprime, euler_poisson, magnetized_spectral, magnetized_kinetic };

std::string to_string(ClosureKind k);
ClosureKind closure_from_string(const std::string& s);

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// flat key/value experiment description; see docs/config.md for the schema
struct ExperimentConfig {
    int schema_version = 1;
    std::string preset = "custom";
    ClosureKind closure = ClosureKind::L;
    std::vector<double> epsilons;
    double alpha = 0.0;

    // grids
    std::string topology = "periodic";  // periodic | truncated_line
    double extent = 1.0;                // torus length
    double radius = 28.0;               // truncated line half-width
    int nx = 256;
    int nv = 256;
    int vdim = 1;
    double vmax_margin = 0.5;

    // time
    double final_time = 0.5;
    double output_dt = 0.01;
    double kinetic_dt = 0.0;  // 0: from kinetic_cfl
    double kinetic_cfl = 1.0;
    double fluid_cfl = 0.4;
    double blowup_guard = 0.0;  // 0: detect; final_time must stay below half the blowup time
    double blowup_threshold = 50.0;

    // initial data
    std::string rho_profile = "cosine";  // cosine | gaussian_log
    double rho_amplitude = 0.05;
    double rho_width = 3.0;
    std::string u_profile = "sine";  // sine | localized_sine | zero
    double u_amplitude = 0.05;
    double u_width = 4.0;
    int wave_mode = 1;
    std::string ti_rule = "sqrt_eps";  // sqrt_eps | fixed
    double ti = 0.0;
    double temperature = 0.0;  // Euler-Poisson ion temperature
    double h_amplitude = 0.2;   // periodic background H = h cos(2 pi x / L)
    std::vector<double> w_perp{0.2, 0.0};

    // solver tolerances
    double newton_tol = 1e-10;
    int newton_max_iter = 100;

    // gyro study
    double gyro_s = 3.0;
    double gyro_q = 1.6;
    int gyro_n = 16384;
    int gyro_max_mode = 2048;
    double gyro_delta = 0.02;
    double gyro_beta = 0.25;
    int gyro_thetas = 8;
    std::string corrector_sign = "derived";  // derived | literal

    std::uint64_t seed = 1;
    bool checkpoint = false;

    void validate() const;
};

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& c);

// built-in presets: L-sweep, S-sweep, euler-poisson-wave, gyro-decay, magnetized-kinetic
ExperimentConfig builtin_preset(const std::string& name);
std::vector<std::string> builtin_preset_names();

}  // namespace qn
