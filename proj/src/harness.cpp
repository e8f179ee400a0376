#include "qnlab/harness.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "qnlab/csv.hpp"
#include "qnlab/grids.hpp"
#include "qnlab/plot.hpp"

namespace qn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rows of epsilon i reach the file only after every earlier epsilon is
// complete; later ones are buffered. The byte stream is then independent of
// the worker count.
class OrderedWriter {
  public:
    OrderedWriter(std::unique_ptr<CsvWriter> w, std::size_t n) : w_(std::move(w)), buf_(n), done_(n, false) {}

    void row(std::size_t i, const std::vector<double>& r) {
        std::lock_guard<std::mutex> lock(mu_);
        if (i == next_) {
            if (w_) w_->write_row(r);
        } else {
            buf_[i].push_back(r);
        }
    }

    void finish(std::size_t i) {
        std::lock_guard<std::mutex> lock(mu_);
        done_[i] = true;
        while (next_ < done_.size() && done_[next_]) {
            ++next_;
            if (next_ < done_.size()) {
                if (w_)
                    for (auto& r : buf_[next_]) w_->write_row(r);
                buf_[next_].clear();
            }
        }
    }

  private:
    std::unique_ptr<CsvWriter> w_;
    std::vector<std::vector<std::vector<double>>> buf_;
    std::vector<bool> done_;
    std::size_t next_ = 0;
    std::mutex mu_;
};

bool monotone_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

std::string fmt(double v) { return format_number(v); }

}  // namespace

int SweepResult::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> SweepResult::series(std::size_t i, const std::string& name) const {
    int c = column(name);
    if (c < 0) throw std::invalid_argument("no column " + name);
    std::vector<double> out;
    for (auto& r : rows.at(i)) out.push_back(r[c]);
    return out;
}

std::vector<FitRecord> fit_over_time(const std::vector<std::string>& header,
                                     const std::vector<std::vector<std::vector<double>>>& rows,
                                     const std::string& quantity, int min_points) {
    std::vector<FitRecord> out;
    int c = -1, ct = -1, ce = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == quantity) c = static_cast<int>(i);
        if (header[i] == "time") ct = static_cast<int>(i);
        if (header[i] == "epsilon") ce = static_cast<int>(i);
    }
    if (c < 0 || ct < 0 || ce < 0) return out;
    std::size_t nrow = 0;
    for (auto& r : rows) nrow = std::max(nrow, r.size());
    for (std::size_t k = 0; k < nrow; ++k) {
        std::vector<std::pair<double, double>> pts;
        double t = kNaN;
        for (auto& r : rows) {
            if (k >= r.size()) continue;
            double v = r[k][c];
            t = r[k][ct];
            if (v > 0.0 && std::isfinite(v)) pts.emplace_back(r[k][ce], v);
        }
        if (static_cast<int>(pts.size()) < min_points) continue;
        FitRecord f;
        f.quantity = quantity;
        f.time = t;
        f.fit = fit_rate(pts, min_points);
        out.push_back(f);
    }
    return out;
}

std::vector<FitRecord> fit_summaries(const std::vector<RunSummary>& s, int min_points) {
    std::vector<FitRecord> out;
    if (s.empty() || static_cast<int>(s.size()) < min_points) return out;
    for (auto& [key, _] : s.front().values) {
        std::vector<std::pair<double, double>> pts;
        bool all = true;
        for (auto& r : s) {
            double v = r.get(key);
            if (!(v > 0.0) || !std::isfinite(v)) all = false;
            pts.emplace_back(r.epsilon, v);
        }
        if (!all) continue;
        double lo = pts.front().second, hi = lo;
        for (auto& p : pts) lo = std::min(lo, p.second), hi = std::max(hi, p.second);
        if (hi == lo) continue;  // parameters, not measurements
        FitRecord f;
        f.quantity = key;
        f.time = kNaN;
        f.fit = fit_rate(pts, min_points);
        out.push_back(f);
    }
    return out;
}

void write_fits_csv(const std::string& path, const std::vector<FitRecord>& fits) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) throw std::runtime_error("cannot write " + path);
    o << "quantity,time,exponent,intercept,residual,std_error,ci_low,ci_high,points\n";
    for (auto& f : fits)
        o << f.quantity << ',' << fmt(f.time) << ',' << fmt(f.fit.exponent) << ',' << fmt(f.fit.intercept) << ','
          << fmt(f.fit.residual) << ',' << fmt(f.fit.std_error) << ',' << fmt(f.fit.ci_low) << ','
          << fmt(f.fit.ci_high) << ',' << f.fit.points << '\n';
}

void write_summary_csv(const std::string& path, const std::vector<RunSummary>& s) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) throw std::runtime_error("cannot write " + path);
    o << "epsilon,status,failed_at,final_time,key,value\n";
    for (auto& r : s)
        for (auto& [k, v] : r.values)
            o << fmt(r.epsilon) << ',' << r.status << ',' << fmt(r.failed_at) << ',' << fmt(r.final_time) << ',' << k
              << ',' << fmt(v) << '\n';
}

std::vector<Check> preset_checks(const SweepResult& r) {
    std::vector<Check> out;
    const auto& s = r.summaries;
    auto collect = [&](const std::string& k) {
        std::vector<double> v;
        for (auto& x : s) v.push_back(x.get(k));
        return v;
    };
    auto slope = [&](const std::string& k) {
        std::vector<std::pair<double, double>> pts;
        for (auto& x : s) pts.emplace_back(x.epsilon, x.get(k));
        return fit_rate(pts, 4).exponent;
    };
    auto add = [&](const std::string& name, bool pass, double value, const std::string& detail) {
        out.push_back({name, pass, value, detail});
    };
    bool all_ok = std::all_of(s.begin(), s.end(), [](const RunSummary& x) { return x.ok; });
    add("runs completed", all_ok, static_cast<double>(s.size()), "");
    if (!all_ok || s.size() < 4) return out;
    const std::string& p = r.config.preset;
    auto slack_check = [&]() {
        double w = std::numeric_limits<double>::infinity();
        for (double v : collect("slack_c5_min_rel")) w = std::min(w, v);
        add("budget slack C=5 >= -1e-3 max H", w >= -1e-3, w, "");
    };
    try {
        if (p == "L-sweep") {
            double w = -std::numeric_limits<double>::infinity();
            for (double v : collect("energy_rate_max")) w = std::max(w, v);
            add("energy non-increasing (1e-3 relative per unit time)", w <= 1e-3, w, "");
            add("max H decreasing in eps", monotone_decreasing(collect("H_max")), kNaN, "");
            double e = slope("H_final");
            add("H(T) exponent >= 0.4", e >= 0.4, e, "");
            add("||V-(rho-1)|| decreasing in eps", monotone_decreasing(collect("potential_gap_final")), kNaN, "");
            slack_check();
        } else if (p == "S-sweep") {
            auto a = collect("sqrt_density_gap_final"), b = collect("velocity_gap_final");
            add("sqrt density gap decreasing, 10x", monotone_decreasing(a) && a.front() >= 10 * a.back(),
                a.front() / a.back(), "");
            add("velocity gap decreasing, 10x", monotone_decreasing(b) && b.front() >= 10 * b.back(),
                b.front() / b.back(), "");
            slack_check();
        } else if (p == "euler-poisson-wave") {
            double e = s.back().get("phase_speed_rel_error");
            add("phase speed within 2% of sqrt(T+1)", e <= 0.02, e, "");
        } else if (p == "gyro-decay") {
            double b = slope("b_norm"), b0 = slope("b_uncorrected_norm"), zq = slope("z_q1_norm");
            double q = r.config.gyro_q, sv = r.config.gyro_s;
            add("corrected residual slope within 0.3 of s-q-1", std::abs(b - (sv - q - 1.0)) <= 0.3, b, "");
            add("uncorrected residual slope <= 0.1", b0 <= 0.1, b0, "");
            auto z = collect("z_s1_norm");
            double lo = *std::min_element(z.begin(), z.end()), hi = *std::max_element(z.begin(), z.end());
            add("corrector H^{s-1} norm varies <= 10%", (hi - lo) / hi <= 0.1, (hi - lo) / hi, "");
            add("corrector H^{q+1} exponent within 0.3 of -(q+2-s)", std::abs(zq + (q + 2.0 - sv)) <= 0.3, zq, "");
        }
    } catch (const std::exception& e) {
        add("threshold evaluation", false, kNaN, e.what());
    }
    return out;
}

SweepResult run_preset(const ExperimentConfig& cfg, const SweepOptions& opt) {
    cfg.validate();
    SweepResult res;
    res.config = cfg;
    res.header = run_header(cfg.closure);
    std::size_t n = cfg.epsilons.size();
    res.rows.assign(n, {});
    res.summaries.assign(n, {});

    if (cfg.blowup_guard > 0.0) {
        res.blowup_time = cfg.blowup_guard;
    } else if (opt.enforce_blowup_guard && cfg.closure != ClosureKind::magnetized_spectral) {
        res.blowup_time = detect_blowup_time(cfg, 2.0 * cfg.final_time * (1.0 + 1e-9));
        spdlog::info("{}: limit-solution gradient threshold reached at t = {}", cfg.preset, res.blowup_time);
        if (!(cfg.final_time < 0.5 * res.blowup_time))
            throw ConfigError("final time " + fmt(cfg.final_time) + " is not below half the blowup time " +
                              fmt(res.blowup_time));
    } else {
        res.blowup_time = std::numeric_limits<double>::infinity();
    }

    std::unique_ptr<CsvWriter> w;
    if (!opt.out_dir.empty()) {
        std::filesystem::create_directories(opt.out_dir);
        w = std::make_unique<CsvWriter>(opt.out_dir + "/" + cfg.preset + ".csv", res.header);
    }
    OrderedWriter writer(std::move(w), n);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            double eps = cfg.epsilons[i];
            spdlog::info("{}: eps = {} started", cfg.preset, eps);
            auto& rows = res.rows[i];
            std::string ck;
            if (cfg.checkpoint && !opt.out_dir.empty()) ck = opt.out_dir + "/" + cfg.preset + "_" + fmt(eps) + ".ckpt";
            RunSummary sm;
            try {
                sm = run_single(cfg, eps, [&](const std::vector<double>& r) {
                    rows.push_back(r);
                    writer.row(i, r);
                }, ck);
            } catch (const std::exception& e) {
                sm.epsilon = eps;
                sm.ok = false;
                sm.status = std::string("failed: ") + e.what();
                spdlog::error("{}: eps = {} failed: {}", cfg.preset, eps, e.what());
            }
            spdlog::info("{}: eps = {} finished ({}, {:.1f} s)", cfg.preset, eps, sm.status, sm.elapsed_seconds);
            res.summaries[i] = std::move(sm);
            writer.finish(i);
        }
    };
    int nw = std::max(1, std::min<int>(opt.workers, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int k = 0; k < nw; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (static_cast<int>(n) >= 4) {
        res.fits = fit_over_time(res.header, res.rows, "total", 4);
        auto extra = fit_summaries(res.summaries, 4);
        res.fits.insert(res.fits.end(), extra.begin(), extra.end());
    } else {
        spdlog::info("{}: fewer than 4 epsilon values, no rate fits", cfg.preset);
    }
    res.checks = preset_checks(res);
    res.ok = std::all_of(res.checks.begin(), res.checks.end(), [](const Check& c) { return c.pass; });
    if (!opt.out_dir.empty()) {
        write_fits_csv(opt.out_dir + "/" + cfg.preset + "_fits.csv", res.fits);
        write_summary_csv(opt.out_dir + "/" + cfg.preset + "_summary.csv", res.summaries);
        if (opt.plots) emit_plots(res, opt.out_dir);
    }
    return res;
}

std::vector<std::string> emit_plots(const SweepResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    std::string stem = dir + "/" + r.config.preset;
    int ct = r.column("time"), cH = r.column("total");
    auto finite_series = [&](std::size_t i, int cx, int cy, const std::string& label) {
        Series s;
        s.label = label;
        for (auto& row : r.rows[i])
            if (std::isfinite(row[cx]) && std::isfinite(row[cy])) {
                s.x.push_back(row[cx]);
                s.y.push_back(row[cy]);
            }
        return s;
    };
    auto eps_label = [&](std::size_t i) { return "eps=" + fmt(r.config.epsilons.at(i)); };
    bool has_H = false;
    for (std::size_t i = 0; i < r.rows.size(); ++i)
        for (auto& row : r.rows[i]) has_H = has_H || std::isfinite(row[cH]);

    if (has_H) {
        PlotSpec p{"modulated energy", "t", "H", false, true, {}};
        for (std::size_t i = 0; i < r.rows.size(); ++i) {
            auto s = finite_series(i, ct, cH, eps_label(i));
            // zero values cannot go on a log axis
            Series pos{s.label, {}, {}};
            for (std::size_t k = 0; k < s.x.size(); ++k)
                if (s.y[k] > 0) pos.x.push_back(s.x[k]), pos.y.push_back(s.y[k]);
            if (!pos.x.empty()) p.series.push_back(pos);
        }
        write_svg(stem + "_H_vs_t.svg", p);
        written.push_back(stem + "_H_vs_t.svg");
    }

    // epsilon convergence: H(T) for kinetic presets, residual norms for the spectral one
    if (r.rows.size() < 2) {
        spdlog::info("{}: single epsilon, convergence plot skipped", r.config.preset);
    } else {
        PlotSpec p{"convergence in epsilon", "epsilon", "value", true, true, {}};
        std::vector<std::string> keys;
        if (has_H) keys = {"total"};
        for (auto k : {"b_norm", "b_uncorrected_norm", "z_s1_norm", "z_q1_norm"})
            if (r.column(k) >= 0) keys.push_back(k);
        for (auto& k : keys) {
            int c = r.column(k);
            Series s{k == "total" ? "H(T)" : k, {}, {}};
            for (std::size_t i = 0; i < r.rows.size(); ++i) {
                if (r.rows[i].empty()) continue;
                double v = k == "total" ? r.rows[i].back()[c] : 0.0;
                if (k != "total")
                    for (auto& row : r.rows[i]) v = std::max(v, row[c]);
                if (v > 0 && std::isfinite(v)) s.x.push_back(r.config.epsilons[i]), s.y.push_back(v);
            }
            if (!s.x.empty()) p.series.push_back(s);
        }
        write_svg(stem + "_H_vs_eps.svg", p);
        written.push_back(stem + "_H_vs_eps.svg");
    }

    int ck = r.column("energy_kinetic"), cf = r.column("energy_field"), ce = r.column("energy_entropy");
    if (ck >= 0 && cf >= 0 && ce >= 0 && !r.rows.empty()) {
        PlotSpec p{"energy components", "t", "energy", false, false, {}};
        for (std::size_t i = 0; i < r.rows.size(); ++i) {
            for (auto [c, name] : {std::pair{ck, "kinetic"}, std::pair{cf, "field"}, std::pair{ce, "entropy"}}) {
                auto s = finite_series(i, ct, c, std::string(name) + " " + eps_label(i));
                if (!s.x.empty()) p.series.push_back(s);
            }
        }
        if (!p.series.empty()) {
            write_svg(stem + "_energy_components.svg", p);
            written.push_back(stem + "_energy_components.svg");
        }
    }
    return written;
}

SweepResult result_from_csv(const std::string& path) {
    auto t = read_csv(path);
    SweepResult r;
    r.header = t.header;
    int ce = t.column("epsilon");
    if (ce < 0 || t.column("time") < 0 || t.column("total") < 0)
        throw std::runtime_error("not a sweep CSV: " + path);
    r.config.preset = std::filesystem::path(path).stem().string();
    for (auto& row : t.rows) {
        double e = row[ce];
        auto it = std::find(r.config.epsilons.begin(), r.config.epsilons.end(), e);
        std::size_t i = it - r.config.epsilons.begin();
        if (it == r.config.epsilons.end()) {
            r.config.epsilons.push_back(e);
            r.rows.emplace_back();
            RunSummary s;
            s.epsilon = e;
            r.summaries.push_back(s);
        }
        r.rows[i].push_back(row);
    }
    for (std::size_t i = 0; i < r.rows.size(); ++i)
        if (!r.rows[i].empty()) r.summaries[i].final_time = r.rows[i].back()[t.column("time")];
    return r;
}

}  // namespace qn
