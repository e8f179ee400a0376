#include <CLI11.hpp>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "qnlab/config.hpp"
#include "qnlab/csv.hpp"
#include "qnlab/harness.hpp"
#include "qnlab/scaling.hpp"

using namespace qn;

namespace {

// a path to a YAML file or the name of a built-in preset
ExperimentConfig resolve_config(const std::string& arg) {
    if (std::filesystem::exists(arg)) return load_config(arg);
    for (auto& n : builtin_preset_names())
        if (n == arg) return builtin_preset(arg);
    throw ConfigError("no config file or built-in preset named " + arg);
}

void apply_overrides(ExperimentConfig& c, const std::vector<double>& eps, long long seed) {
    if (!eps.empty()) c.epsilons = eps;
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
    c.validate();
}

PhysicalInputs physical_from_yaml(const std::string& path) {
    YAML::Node n = YAML::LoadFile(path);
    PhysicalInputs p;
    if (n["base"]) p = physical_preset(n["base"].as<std::string>());
    auto get = [&](const char* k, double& v) {
        if (n[k]) v = n[k].as<double>();
    };
    get("eps0", p.eps0);
    get("kB", p.kB);
    get("Te", p.Te);
    get("N", p.N);
    get("e", p.e);
    get("m", p.m);
    get("L", p.L);
    get("tau", p.tau);
    get("vth", p.vth);
    get("B", p.B);
    return p;
}

void print_checks(const SweepResult& r) {
    for (auto& c : r.checks)
        std::printf("%s  %s  value=%s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), format_number(c.value).c_str(),
                    c.detail.c_str());
}

void print_fits(const std::vector<FitRecord>& fits) {
    std::printf("quantity,time,exponent,ci_low,ci_high,residual,points\n");
    for (auto& f : fits)
        std::printf("%s,%s,%.6g,%.6g,%.6g,%.3g,%d\n", f.quantity.c_str(), format_number(f.time).c_str(),
                    f.fit.exponent, f.fit.ci_low, f.fit.ci_high, f.fit.residual, f.fit.points);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quasineutral and gyrokinetic limit experiments"};
    app.require_subcommand(1);
    std::string out = "out";
    long long seed = -1;
    int workers = 1;
    std::vector<double> eps_list;
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error");

    auto common = [&](CLI::App* s) {
        s->add_option("--out", out, "output directory");
        s->add_option("--seed", seed, "random seed override");
        s->add_option("--workers", workers, "parallel epsilon runs")->check(CLI::PositiveNumber);
        s->add_option("--epsilon-list", eps_list, "epsilon values, strictly decreasing")->delimiter(',');
    };

    std::string target;
    auto* run = app.add_subcommand("run", "one epsilon of a config (the first, or --epsilon-list)");
    run->add_option("config", target, "YAML file or built-in preset name")->required();
    common(run);
    bool checkpoint = false;
    run->add_flag("--checkpoint", checkpoint, "write the final phase density");

    auto* sweep = app.add_subcommand("sweep", "every epsilon of a config, with fits and plots");
    sweep->add_option("config", target, "YAML file or built-in preset name")->required();
    common(sweep);
    bool no_plots = false, no_guard = false;
    sweep->add_flag("--no-plots", no_plots);
    sweep->add_flag("--no-blowup-check", no_guard, "skip the limit-solution blowup detection");

    std::string quantity = "total";
    auto* fit = app.add_subcommand("fit", "rate fits of a sweep CSV");
    fit->add_option("csv", target)->required()->check(CLI::ExistingFile);
    fit->add_option("--quantity", quantity, "column to fit against epsilon");
    fit->add_option("--out", out, "directory for the fits CSV");

    auto* plot = app.add_subcommand("plot", "SVG plots of a sweep CSV");
    plot->add_option("csv", target)->required()->check(CLI::ExistingFile);
    plot->add_option("--out", out, "output directory");

    std::string convention = "squared";
    auto* scale = app.add_subcommand("scale", "dimensionless groups of a physical preset");
    scale->add_option("preset", target, "built-in name or YAML file of physical inputs")->required();
    scale->add_option("--convention", convention, "squared|linear")
        ->check(CLI::IsMember({"squared", "linear"}));

    auto* show = app.add_subcommand("config", "print a preset or YAML config in canonical form");
    show->add_option("config", target, "YAML file or built-in preset name")->required();

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*run) {
            auto c = resolve_config(target);
            apply_overrides(c, eps_list, seed);
            c.epsilons = {c.epsilons.front()};
            c.checkpoint = c.checkpoint || checkpoint;
            SweepOptions o;
            o.out_dir = out;
            o.plots = true;
            auto r = run_preset(c, o);
            auto& s = r.summaries.front();
            std::printf("eps=%s status=%s\n", format_number(s.epsilon).c_str(), s.status.c_str());
            for (auto& [k, v] : s.values) std::printf("  %s = %s\n", k.c_str(), format_number(v).c_str());
            return s.ok ? 0 : 1;
        }
        if (*sweep) {
            auto c = resolve_config(target);
            apply_overrides(c, eps_list, seed);
            SweepOptions o;
            o.out_dir = out;
            o.workers = workers;
            o.plots = !no_plots;
            o.enforce_blowup_guard = !no_guard;
            auto r = run_preset(c, o);
            print_fits(r.fits);
            print_checks(r);
            return r.ok ? 0 : 1;
        }
        if (*fit) {
            auto r = result_from_csv(target);
            auto fits = fit_over_time(r.header, r.rows, quantity, 4);
            if (fits.empty()) spdlog::warn("no output time with 4 or more positive values of {}", quantity);
            print_fits(fits);
            if (!out.empty() && app.get_subcommand("fit")->count("--out")) {
                std::filesystem::create_directories(out);
                write_fits_csv(out + "/" + r.config.preset + "_fits.csv", fits);
            }
            return 0;
        }
        if (*plot) {
            auto r = result_from_csv(target);
            for (auto& p : emit_plots(r, out)) std::printf("%s\n", p.c_str());
            return 0;
        }
        if (*show) {
            std::cout << dump_config(resolve_config(target));
            return 0;
        }
        if (*scale) {
            PhysicalInputs in = std::filesystem::exists(target) ? physical_from_yaml(target) : physical_preset(target);
            auto conv = convention == "squared" ? EpsilonConvention::squared : EpsilonConvention::linear;
            std::cout << describe(derive_groups(in, conv));
            return 0;
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
