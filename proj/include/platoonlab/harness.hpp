#ifndef PLATOONLAB_HARNESS_HPP
#define PLATOONLAB_HARNESS_HPP

// Run harness: monitors over finished trajectories, the string-stability
// peak analysis, CSV/plot/report emission, per-preset verification checks,
// and parameter sweeps.  Everything here is deterministic: identical
// scenarios produce byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "platoonlab/integrate.hpp"
#include "platoonlab/lyapunov.hpp"
#include "platoonlab/model.hpp"
#include "platoonlab/scenario.hpp"

namespace platoonlab {

inline double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

// ---------------------------------------------------------------------------
// integrate(scenario)
// ---------------------------------------------------------------------------

inline Trajectory integrate(const Scenario& sc) {
    sc.validate();
    Trajectory traj = integrate_system(sc.topology, sc.controller, sc.initial, sc.disturbance,
                                       sc.integrator);
    traj.scenario_hash = scenario_hash(sc);
    return traj;
}

// ---------------------------------------------------------------------------
// Monitors
// ---------------------------------------------------------------------------

struct MonitorResult {
    std::string name;
    bool applicable = false;
    bool passed = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    double first_violation_t = std::numeric_limits<double>::quiet_NaN();

    void observe(double t, double margin) {
        if (margin < worst_margin) worst_margin = margin;
        if (margin < 0.0 && passed) {
            passed = false;
            first_violation_t = t;
        }
    }
};

struct MonitorReport {
    std::vector<MonitorResult> monitors;

    bool all_passed() const {
        for (const auto& m : monitors)
            if (m.applicable && !m.passed) return false;
        return true;
    }
    const MonitorResult* find(const std::string& name) const {
        for (const auto& m : monitors)
            if (m.name == name) return &m;
        return nullptr;
    }
};

inline MonitorReport run_monitors(const Trajectory& traj, const Scenario& sc) {
    if (traj.samples.empty())
        throw std::invalid_argument("run_monitors: empty trajectory");
    const int n = sc.initial.n;
    const double L = sc.controller.potential.L;
    const double lam = sc.controller.potential.lam;
    const double v_max = sc.controller.saturation.v_max;
    const double v_star = sc.controller.saturation.v_star;
    const double rtol = sc.integrator.rtol;

    MonitorResult spacing{"spacing_above_length"};
    MonitorResult speed{"speed_in_range"};
    MonitorResult energy{"energy_nonincreasing"};
    MonitorResult ceiling{"spacing_ceiling"};
    MonitorResult envelope{"speed_envelope"};
    MonitorResult conserve{"ring_length_conservation"};

    spacing.applicable = sc.monitors.spacing;
    speed.applicable = sc.monitors.speed;
    energy.applicable = sc.monitors.energy_decay &&
                        sc.controller.law == ControlLaw::Bidirectional && !sc.disturbance;
    ceiling.applicable = sc.monitors.spacing_ceiling && !sc.topology.is_ring();
    conserve.applicable = sc.monitors.ring_conservation && sc.topology.is_ring();

    std::optional<Prop3Check> regime;
    if (sc.monitors.speed_envelope && !sc.topology.is_ring()) {
        regime = prop3_check(sc.initial, sc.controller);
        envelope.applicable = regime->premise_holds;
    }

    std::vector<double> ceiling_bound;
    if (ceiling.applicable) ceiling_bound = prop2_bound(sc.initial, sc.controller);

    double h_prev = quiet_nan();
    for (const Sample& smp : traj.samples) {
        if (spacing.applicable) spacing.observe(smp.t, smp.min_spacing - L);
        if (speed.applicable) {
            double worst = std::numeric_limits<double>::infinity();
            for (double v : smp.state.v) worst = std::min(worst, std::min(v, v_max - v));
            speed.observe(smp.t, worst);
        }
        if (energy.applicable && std::isfinite(h_prev) && std::isfinite(smp.H)) {
            const double tol = std::max(1e-8, 10.0 * rtol * h_prev);
            energy.observe(smp.t, h_prev + tol - smp.H);
        }
        h_prev = smp.H;
        if (ceiling.applicable) {
            double worst = std::numeric_limits<double>::infinity();
            for (size_t k = 0; k < smp.state.s.size(); ++k)
                worst = std::min(worst, ceiling_bound[k] - smp.state.s[k]);
            ceiling.observe(smp.t, worst);
        }
        if (envelope.applicable) {
            double dev = 0.0;
            for (double v : smp.state.v) dev = std::max(dev, std::abs(v - v_star));
            const double bound = regime->envelope(smp.t);
            envelope.observe(smp.t, std::min(bound - dev, smp.min_spacing - lam));
        }
        if (conserve.applicable) {
            const ExtendedSpacings ext = extend(smp.state, sc.topology);
            double total = 0.0;
            for (int i = 1; i <= n; ++i) total += ext.sp[static_cast<size_t>(i)];
            conserve.observe(smp.t, 1e-8 - std::abs(total - sc.topology.ring_length));
        }
    }

    MonitorReport report;
    report.monitors = {spacing, speed, energy, ceiling, envelope, conserve};
    return report;
}

// ---------------------------------------------------------------------------
// String-stability peak analysis
// ---------------------------------------------------------------------------

// Peak |v_i - v*| over the disturbance window, split into the deceleration
// phase (v_i < v*) and the acceleration phase (v_i > v*).  Discrete maxima
// are refined by a parabola through the three samples around the argmax.
// The propagation-order checks follow each phase away from the prescribed
// vehicle along the direction it travels: the deceleration front moves
// through vehicles 2, 3, ..., the acceleration front through n, n-1, ...;
// each chain stops one short of wrapping onto the opposite front, whose
// last vehicle sits directly adjacent to the prescribed one on the ring and
// receives that wave in a single hop.
struct StringStabilityPeaks {
    std::vector<double> decel_peak;  // index i-1: peak of (v* - v_i)_+ over the window
    std::vector<double> accel_peak;  // index i-1: peak of (v_i - v*)_+ over the window
    double amplitude = 0.0;          // prescribed disturbance amplitude d
    bool decel_chain_nonincreasing = false;  // vehicles 2 .. n-1
    bool accel_chain_nonincreasing = false;  // vehicles n .. 3
    bool peaks_below_amplitude = false;      // every controlled vehicle stays below d
};

namespace detail {

inline double refine_peak(const std::vector<double>& t, const std::vector<double>& y, size_t k,
                          size_t lo, size_t hi) {
    if (k <= lo || k + 1 > hi) return y[k];
    (void)t;  // uniform stride assumed; the refined value is stride-free
    const double y0 = y[k - 1], y1 = y[k], y2 = y[k + 1];
    const double a = 0.5 * (y0 + y2) - y1;
    const double b = 0.5 * (y2 - y0);
    if (!(a < -1e-300)) return y1;
    return y1 - b * b / (4.0 * a);
}

}  // namespace detail

inline StringStabilityPeaks string_stability_peaks(const Trajectory& traj, const Scenario& sc) {
    if (!sc.disturbance)
        throw std::invalid_argument("string_stability_peaks: scenario has no disturbance");
    const int n = sc.initial.n;
    const double v_star = sc.controller.saturation.v_star;

    size_t lo = traj.samples.size(), hi = 0;
    for (size_t k = 0; k < traj.samples.size(); ++k) {
        const double t = traj.samples[k].t;
        if (t >= DisturbanceSchedule::window_start && t <= DisturbanceSchedule::window_end) {
            lo = std::min(lo, k);
            hi = std::max(hi, k);
        }
    }
    if (lo >= hi) throw std::invalid_argument("string_stability_peaks: no samples in window");

    StringStabilityPeaks out;
    out.amplitude = sc.disturbance->d;
    out.decel_peak.assign(static_cast<size_t>(n), 0.0);
    out.accel_peak.assign(static_cast<size_t>(n), 0.0);

    std::vector<double> ts(hi - lo + 1), dev(hi - lo + 1);
    for (size_t k = lo; k <= hi; ++k) ts[k - lo] = traj.samples[k].t;
    for (int i = 1; i <= n; ++i) {
        for (size_t k = lo; k <= hi; ++k)
            dev[k - lo] = v_star - traj.samples[k].state.v[static_cast<size_t>(i - 1)];
        size_t arg = 0;
        for (size_t k = 1; k < dev.size(); ++k)
            if (dev[k] > dev[arg]) arg = k;
        out.decel_peak[static_cast<size_t>(i - 1)] =
            std::max(0.0, detail::refine_peak(ts, dev, arg, 0, dev.size() - 1));
        for (double& d : dev) d = -d;
        arg = 0;
        for (size_t k = 1; k < dev.size(); ++k)
            if (dev[k] > dev[arg]) arg = k;
        out.accel_peak[static_cast<size_t>(i - 1)] =
            std::max(0.0, detail::refine_peak(ts, dev, arg, 0, dev.size() - 1));
    }

    out.decel_chain_nonincreasing = true;
    for (int i = 2; i + 1 <= n - 1; ++i)
        if (out.decel_peak[static_cast<size_t>(i)] > out.decel_peak[static_cast<size_t>(i - 1)])
            out.decel_chain_nonincreasing = false;
    out.accel_chain_nonincreasing = true;
    for (int i = n; i - 1 >= 3; --i)
        if (out.accel_peak[static_cast<size_t>(i - 2)] > out.accel_peak[static_cast<size_t>(i - 1)])
            out.accel_chain_nonincreasing = false;

    out.peaks_below_amplitude = true;
    for (int i = 2; i <= n; ++i) {
        const double peak = std::max(out.decel_peak[static_cast<size_t>(i - 1)],
                                     out.accel_peak[static_cast<size_t>(i - 1)]);
        if (!(peak < out.amplitude)) out.peaks_below_amplitude = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

// Minimal static line chart; enough to eyeball the emitted series.
inline void svg_line_chart(const std::filesystem::path& path, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           const std::vector<PlotSeries>& series) {
    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
    const double W = 800, H = 480, ml = 70, mr = 24, mt = 40, mb = 52;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            xmin = std::min(xmin, s.x[k]);
            xmax = std::max(xmax, s.x[k]);
            ymin = std::min(ymin, s.y[k]);
            ymax = std::max(ymax, s.y[k]);
        }
    const bool empty = !(xmin <= xmax);
    if (empty) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax - xmin < 1e-300) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12 * std::max(1.0, std::abs(ymax))) {
        const double pad = std::max(1e-12, 0.1 * std::max(1.0, std::abs(ymax)));
        ymin -= pad;
        ymax += pad;
    }

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };

    std::ofstream out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" font-size=\"16\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\">" << title << "</text>\n";

    char buf[160];
    for (int k = 0; k <= 5; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 5.0;
        const double yv = ymin + (ymax - ymin) * k / 5.0;
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#ddd\"/>\n",
                      px(xv), py(ymin), px(xv), py(ymax));
        out << buf;
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#ddd\"/>\n",
                      px(xmin), py(yv), px(xmax), py(yv));
        out << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"middle\" "
                      "font-family=\"sans-serif\">%s</text>\n",
                      px(xv), H - mb + 16, num(xv).c_str());
        out << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\" "
                      "font-family=\"sans-serif\">%s</text>\n",
                      ml - 6, py(yv) + 4, num(yv).c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" "
                  "stroke=\"#444\"/>\n",
                  ml, mt, W - ml - mr, H - mt - mb);
    out << buf;
    out << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"" << H - 8
        << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">" << x_label
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << (mt + (H - mt - mb) / 2)
        << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 16 " << (mt + (H - mt - mb) / 2) << ")\">" << y_label
        << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        bool open_run = false;
        for (size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) {
                if (open_run) {
                    out << "\"/>\n<polyline fill=\"none\" stroke=\"" << color
                        << "\" stroke-width=\"1.2\" points=\"";
                    open_run = false;
                }
                continue;
            }
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[k]), py(s.y[k]));
            out << buf;
            open_run = true;
        }
        out << "\"/>\n";
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" fill=\"%s\" "
                      "font-family=\"sans-serif\">%s</text>\n",
                      W - mr - 110.0, mt + 16.0 + 15.0 * static_cast<double>(si), color,
                      s.label.c_str());
        out << buf;
    }
    if (empty)
        out << "<text x=\"" << W / 2 << "\" y=\"" << H / 2
            << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">no finite "
               "data</text>\n";
    out << "</svg>\n";
}

}  // namespace detail

// Extended spacing row for output: ring rows carry the derived lead gap, open
// rows only the finite gaps s_2..s_n.
inline std::vector<double> output_spacings(const PlatoonState& state, const RoadTopology& topo) {
    std::vector<double> row;
    if (topo.is_ring()) {
        double sum = 0.0;
        for (double si : state.s) sum += si;
        row.push_back(topo.ring_length - sum);
    }
    row.insert(row.end(), state.s.begin(), state.s.end());
    return row;
}

inline std::vector<std::string> emit_run_files(const std::filesystem::path& dir,
                                               const Scenario& sc, const Trajectory& traj) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> files;
    const int n = sc.initial.n;
    const bool ring = sc.topology.is_ring();
    const bool with_U = ring && sc.topology.ring_length < n * sc.controller.potential.lam;
    const bool with_hdot = sc.controller.law == ControlLaw::Bidirectional;
    const int first_spacing = ring ? 1 : 2;

    {
        const fs::path p = dir / "scenario.json";
        std::ofstream out(p);
        out << scenario_to_string(sc);
        files.push_back(p.string());
    }

    const EquilibriumSet eq = EquilibriumSet::for_topology(sc.topology, n, sc.controller);

    {
        const fs::path p = dir / "trajectory.csv";
        std::ofstream out(p);
        out << "t";
        for (int i = first_spacing; i <= n; ++i) out << ",s_" << i;
        for (int i = 1; i <= n; ++i) out << ",v_" << i;
        for (int i = 1; i <= n; ++i) out << ",F_" << i;
        out << ",H";
        if (with_U) out << ",U";
        if (with_hdot) out << ",Hdot";
        out << ",min_spacing\n";
        for (const Sample& smp : traj.samples) {
            out << g17(smp.t);
            for (double si : output_spacings(smp.state, sc.topology)) out << ',' << g17(si);
            for (double vi : smp.state.v) out << ',' << g17(vi);
            for (double fi : smp.accel) out << ',' << g17(fi);
            out << ',' << g17(smp.H);
            if (with_U) out << ',' << g17(smp.U);
            if (with_hdot) out << ',' << g17(smp.hdot);
            out << ',' << g17(smp.min_spacing) << '\n';
        }
        files.push_back(p.string());
    }

    {
        const fs::path p = dir / "diagnostics.csv";
        std::ofstream out(p);
        out << "t,H";
        if (with_U) out << ",U";
        if (with_hdot) out << ",Hdot";
        out << ",min_spacing,max_abs_F,dist_to_equilibrium\n";
        for (const Sample& smp : traj.samples) {
            double dist = quiet_nan();
            try {
                dist = dist_to_equilibrium(smp.state, eq);
            } catch (const std::exception&) {
            }
            out << g17(smp.t) << ',' << g17(smp.H);
            if (with_U) out << ',' << g17(smp.U);
            if (with_hdot) out << ',' << g17(smp.hdot);
            out << ',' << g17(smp.min_spacing) << ',' << g17(smp.max_abs_accel) << ','
                << g17(dist) << '\n';
        }
        files.push_back(p.string());
    }

    // Plot series: one file per figure family (speeds, spacings,
    // accelerations, log-Lyapunov), each as CSV plus a static SVG rendering.
    std::vector<double> ts(traj.samples.size());
    for (size_t k = 0; k < traj.samples.size(); ++k) ts[k] = traj.samples[k].t;

    auto emit_family = [&](const char* base, const std::vector<detail::PlotSeries>& series,
                           const char* y_label) {
        const fs::path pc = dir / (std::string(base) + ".csv");
        std::ofstream out(pc);
        out << "t";
        for (const auto& s : series) out << ',' << s.label;
        out << '\n';
        for (size_t k = 0; k < ts.size(); ++k) {
            out << g17(ts[k]);
            for (const auto& s : series) out << ',' << g17(s.y[k]);
            out << '\n';
        }
        files.push_back(pc.string());
        const fs::path pv = dir / (std::string(base) + ".svg");
        detail::svg_line_chart(pv, sc.name + ": " + base, "t [s]", y_label, series);
        files.push_back(pv.string());
    };

    {
        std::vector<detail::PlotSeries> series(static_cast<size_t>(n));
        for (int i = 1; i <= n; ++i) {
            series[static_cast<size_t>(i - 1)].label = "v_" + std::to_string(i);
            series[static_cast<size_t>(i - 1)].x = ts;
            series[static_cast<size_t>(i - 1)].y.resize(ts.size());
            for (size_t k = 0; k < ts.size(); ++k)
                series[static_cast<size_t>(i - 1)].y[k] =
                    traj.samples[k].state.v[static_cast<size_t>(i - 1)];
        }
        emit_family("speeds", series, "speed [m/s]");
    }
    {
        const int count = n - first_spacing + 1;
        std::vector<detail::PlotSeries> series(static_cast<size_t>(count));
        for (size_t k = 0; k < ts.size(); ++k) {
            const std::vector<double> row = output_spacings(traj.samples[k].state, sc.topology);
            for (int c = 0; c < count; ++c) {
                if (k == 0) {
                    series[static_cast<size_t>(c)].label = "s_" + std::to_string(first_spacing + c);
                    series[static_cast<size_t>(c)].x = ts;
                    series[static_cast<size_t>(c)].y.resize(ts.size());
                }
                series[static_cast<size_t>(c)].y[k] = row[static_cast<size_t>(c)];
            }
        }
        emit_family("spacings", series, "spacing [m]");
    }
    {
        std::vector<detail::PlotSeries> series(static_cast<size_t>(n));
        for (int i = 1; i <= n; ++i) {
            series[static_cast<size_t>(i - 1)].label = "F_" + std::to_string(i);
            series[static_cast<size_t>(i - 1)].x = ts;
            series[static_cast<size_t>(i - 1)].y.resize(ts.size());
            for (size_t k = 0; k < ts.size(); ++k)
                series[static_cast<size_t>(i - 1)].y[k] =
                    traj.samples[k].accel[static_cast<size_t>(i - 1)];
        }
        emit_family("accelerations", series, "acceleration [m/s^2]");
    }
    {
        std::vector<detail::PlotSeries> series;
        detail::PlotSeries sh;
        sh.label = "log10_H";
        sh.x = ts;
        sh.y.resize(ts.size());
        for (size_t k = 0; k < ts.size(); ++k)
            sh.y[k] = (traj.samples[k].H > 0.0) ? std::log10(traj.samples[k].H) : quiet_nan();
        series.push_back(std::move(sh));
        if (with_U) {
            detail::PlotSeries su;
            su.label = "log10_U";
            su.x = ts;
            su.y.resize(ts.size());
            for (size_t k = 0; k < ts.size(); ++k)
                su.y[k] = (traj.samples[k].U > 0.0) ? std::log10(traj.samples[k].U) : quiet_nan();
            series.push_back(std::move(su));
        }
        emit_family("log_lyapunov", series, "log10 of energy");
    }

    return files;
}

// ---------------------------------------------------------------------------
// Run reports and verification
// ---------------------------------------------------------------------------

struct VerifyCheck {
    std::string label;
    double measured = 0.0;
    double bound = 0.0;
    std::string relation;  // "<=", ">=", "<"
    bool passed = false;
};

inline VerifyCheck make_check(const std::string& label, double measured, const std::string& rel,
                              double bound) {
    VerifyCheck c;
    c.label = label;
    c.measured = measured;
    c.bound = bound;
    c.relation = rel;
    if (rel == "<=")
        c.passed = measured <= bound;
    else if (rel == ">=")
        c.passed = measured >= bound;
    else if (rel == "<")
        c.passed = measured < bound;
    else
        throw std::invalid_argument("make_check: unknown relation " + rel);
    return c;
}

struct RunReport {
    std::string scenario_name;
    std::string scenario_hash;
    Termination termination = Termination::Completed;
    double t_reached = 0.0;
    PlatoonState terminal;
    double dist_to_equilibrium_end = 0.0;
    std::optional<DecayFit> fit_log_H;
    std::optional<DecayFit> fit_log_U;
    double max_abs_accel = 0.0;
    MonitorReport monitors;
    std::vector<std::string> emitted_files;
    std::vector<VerifyCheck> checks;  // verification mode only

    bool verify_passed() const {
        if (termination != Termination::Completed) return false;
        if (!monitors.all_passed()) return false;
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

// Tail fit of log(value); points at or below the positivity floor are
// dropped first (decay eventually hits the floating-point floor).
inline std::optional<DecayFit> fit_log_tail(const Trajectory& traj, bool use_U,
                                            double floor = 1e-12, double tail_fraction = 0.5) {
    std::vector<double> ts, vs;
    for (const Sample& smp : traj.samples) {
        const double v = use_U ? smp.U : smp.H;
        if (std::isfinite(v) && v > floor) {
            ts.push_back(smp.t);
            vs.push_back(v);
        }
    }
    if (ts.size() < 20) return std::nullopt;
    return fit_decay_rate(ts, vs, tail_fraction);
}

inline ordered_json report_to_json(const RunReport& rep, const Scenario& sc) {
    ordered_json j;
    j["scenario"] = rep.scenario_name;
    j["scenario_hash"] = rep.scenario_hash;
    j["termination"] = termination_name(rep.termination);
    j["t_reached"] = rep.t_reached;

    ordered_json term;
    term["spacings"] = output_spacings(rep.terminal, sc.topology);
    term["speeds"] = rep.terminal.v;
    j["terminal_state"] = term;
    j["dist_to_equilibrium"] = rep.dist_to_equilibrium_end;

    ordered_json fits;
    auto fit_json = [](const DecayFit& f) {
        ordered_json o;
        o["slope"] = f.slope;
        o["intercept"] = f.intercept;
        o["r_squared"] = f.r_squared;
        o["points"] = f.points;
        return o;
    };
    fits["log_H"] = rep.fit_log_H ? fit_json(*rep.fit_log_H) : ordered_json(nullptr);
    fits["log_U"] = rep.fit_log_U ? fit_json(*rep.fit_log_U) : ordered_json(nullptr);
    j["decay_fits"] = fits;
    j["max_abs_accel"] = rep.max_abs_accel;

    ordered_json mons = ordered_json::array();
    for (const MonitorResult& m : rep.monitors.monitors) {
        ordered_json o;
        o["name"] = m.name;
        o["applicable"] = m.applicable;
        o["passed"] = m.passed;
        o["worst_margin"] = m.worst_margin;
        if (std::isfinite(m.first_violation_t))
            o["first_violation_t"] = m.first_violation_t;
        else
            o["first_violation_t"] = ordered_json(nullptr);
        mons.push_back(o);
    }
    j["monitors"] = mons;

    if (!rep.checks.empty()) {
        ordered_json checks = ordered_json::array();
        for (const VerifyCheck& c : rep.checks) {
            ordered_json o;
            o["label"] = c.label;
            o["measured"] = c.measured;
            o["relation"] = c.relation;
            o["bound"] = c.bound;
            o["passed"] = c.passed;
            checks.push_back(o);
        }
        j["checks"] = checks;
        j["verify_passed"] = rep.verify_passed();
    }
    j["files"] = rep.emitted_files;
    return j;
}

inline RunReport build_report(const Scenario& sc, const Trajectory& traj) {
    RunReport rep;
    rep.scenario_name = sc.name;
    rep.scenario_hash = traj.scenario_hash.empty() ? scenario_hash(sc) : traj.scenario_hash;
    rep.termination = traj.termination;
    rep.t_reached = traj.t_reached;
    rep.terminal = traj.samples.back().state;
    const EquilibriumSet eq = EquilibriumSet::for_topology(sc.topology, sc.initial.n, sc.controller);
    try {
        rep.dist_to_equilibrium_end = dist_to_equilibrium(rep.terminal, eq);
    } catch (const std::exception&) {
        rep.dist_to_equilibrium_end = quiet_nan();
    }
    rep.fit_log_H = fit_log_tail(traj, false);
    const bool with_U =
        sc.topology.is_ring() && sc.topology.ring_length < sc.initial.n * sc.controller.potential.lam;
    if (with_U) rep.fit_log_U = fit_log_tail(traj, true);
    rep.max_abs_accel = traj.max_abs_accel_steps;
    for (const Sample& smp : traj.samples)
        if (std::isfinite(smp.max_abs_accel))
            rep.max_abs_accel = std::max(rep.max_abs_accel, smp.max_abs_accel);
    rep.monitors = run_monitors(traj, sc);
    return rep;
}

// Preset-specific verification thresholds.  Scenarios whose name is not a
// built-in preset get the generic checks only (completion plus monitors).
inline std::vector<VerifyCheck> verify_checks(const Scenario& sc, const Trajectory& traj,
                                              const RunReport& rep);

inline RunReport run_scenario(const Scenario& sc, const std::string& out_dir, bool emit,
                              bool verify_mode) {
    Trajectory traj = integrate(sc);
    RunReport rep = build_report(sc, traj);
    if (verify_mode && traj.termination == Termination::Completed)
        rep.checks = verify_checks(sc, traj, rep);
    if (emit) {
        const std::filesystem::path dir = std::filesystem::path(out_dir) / sc.name;
        rep.emitted_files = emit_run_files(dir, sc, traj);
        const std::filesystem::path rp = dir / "report.json";
        std::ofstream out(rp);
        out << report_to_json(rep, sc).dump(2) << '\n';
        rep.emitted_files.push_back(rp.string());
    }
    return rep;
}

inline std::vector<VerifyCheck> verify_checks(const Scenario& sc, const Trajectory& traj,
                                              const RunReport& rep) {
    std::vector<VerifyCheck> checks;
    const Sample& last = traj.samples.back();
    const double v_star = sc.controller.saturation.v_star;
    const double lam = sc.controller.potential.lam;
    const int n = sc.initial.n;

    auto terminal_speed_dev = [&]() {
        double dev = 0.0;
        for (double v : last.state.v) dev = std::max(dev, std::abs(v - v_star));
        return dev;
    };

    if (sc.name == "ring-continuum") {
        checks.push_back(make_check("terminal max|v_i - v*|", terminal_speed_dev(), "<=", 1e-3));
        checks.push_back(make_check("terminal min spacing", last.min_spacing, ">=", lam - 1e-3));
        checks.push_back(make_check("terminal H", last.H, "<=", 1e-6));
        double worst_rise = -std::numeric_limits<double>::infinity();
        for (size_t k = 1; k < traj.samples.size(); ++k)
            worst_rise = std::max(worst_rise, traj.samples[k].H - traj.samples[k - 1].H);
        checks.push_back(make_check("max sample-to-sample H rise", worst_rise, "<=", 1e-8));
    } else if (sc.name == "ring-point") {
        const double target = sc.topology.ring_length / n;
        double dev = 0.0;
        for (double si : output_spacings(last.state, sc.topology))
            dev = std::max(dev, std::abs(si - target));
        checks.push_back(make_check("terminal max|s_i - R/n|", dev, "<=", 1e-2));
        checks.push_back(make_check("terminal max|v_i - v*|", terminal_speed_dev(), "<=", 1e-3));
        const double omega = rate_omega_bar(sc.controller, sc.topology, n, 0.9);
        if (rep.fit_log_U) {
            checks.push_back(make_check("log U tail slope", rep.fit_log_U->slope, "<=", -omega));
            checks.push_back(make_check("log U tail fit R^2", rep.fit_log_U->r_squared, ">=", 0.99));
        } else {
            checks.push_back(make_check("log U tail fit points", 0.0, ">=", 20.0));
        }
    } else if (sc.name == "string-stability") {
        const StringStabilityPeaks peaks = string_stability_peaks(traj, sc);
        double worst = 0.0;
        for (int i = 2; i <= n; ++i)
            worst = std::max(worst, std::max(peaks.decel_peak[static_cast<size_t>(i - 1)],
                                             peaks.accel_peak[static_cast<size_t>(i - 1)]));
        checks.push_back(make_check("max peak |v_i - v*| (i >= 2)", worst, "<", peaks.amplitude));
        double decel_step = std::numeric_limits<double>::infinity();
        for (int i = 2; i + 1 <= n - 1; ++i)
            decel_step = std::min(decel_step, peaks.decel_peak[static_cast<size_t>(i - 1)] -
                                                  peaks.decel_peak[static_cast<size_t>(i)]);
        checks.push_back(make_check("deceleration-chain peak drop", decel_step, ">=", 0.0));
        double accel_step = std::numeric_limits<double>::infinity();
        for (int i = n; i - 1 >= 3; --i)
            accel_step = std::min(accel_step, peaks.accel_peak[static_cast<size_t>(i - 1)] -
                                                  peaks.accel_peak[static_cast<size_t>(i - 2)]);
        checks.push_back(make_check("acceleration-chain peak drop", accel_step, ">=", 0.0));
    } else if (sc.name == "open-road-compare-48" || sc.name == "open-road-compare-73") {
        checks.push_back(make_check("terminal H", last.H, "<=", 1e-4));
        if (sc.name == "open-road-compare-48") {
            // Run the sibling law under identical integration settings and
            // compare the worst accelerations.
            Scenario sibling = preset("open-road-compare-73");
            sibling.integrator = sc.integrator;
            Trajectory sib_traj = integrate(sibling);
            RunReport sib_rep = build_report(sibling, sib_traj);
            checks.push_back(make_check("max|F| vs relaxation baseline", rep.max_abs_accel, "<",
                                        sib_rep.max_abs_accel));
        }
    } else if (sc.name == "prop3-regime") {
        const Prop3Check regime = prop3_check(sc.initial, sc.controller);
        checks.push_back(
            make_check("large-gap premise min spacing", *std::min_element(sc.initial.s.begin(),
                                                                          sc.initial.s.end()),
                       ">=", lam + regime.gamma * sc.controller.saturation.v_max / sc.controller.mu));
        double env_margin = std::numeric_limits<double>::infinity();
        double floor_margin = std::numeric_limits<double>::infinity();
        for (const Sample& smp : traj.samples) {
            double dev = 0.0;
            for (double v : smp.state.v) dev = std::max(dev, std::abs(v - v_star));
            env_margin = std::min(env_margin, regime.envelope(smp.t) - dev);
            floor_margin = std::min(floor_margin, smp.min_spacing - lam);
        }
        checks.push_back(make_check("speed-envelope worst margin", env_margin, ">=", 0.0));
        checks.push_back(make_check("spacing-floor worst margin", floor_margin, ">=", 0.0));
    }
    return checks;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    std::string error;
    std::string name;
    double convergence_time = std::numeric_limits<double>::quiet_NaN();
    double decay_slope = std::numeric_limits<double>::quiet_NaN();
    double fit_r_squared = std::numeric_limits<double>::quiet_NaN();
    double max_abs_accel = std::numeric_limits<double>::quiet_NaN();
    double mu_n_value = std::numeric_limits<double>::quiet_NaN();
    bool monitors_passed = false;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepRow> rows;
    std::vector<std::string> emitted_files;
};

inline const std::vector<std::string>& sweep_axes() {
    static const std::vector<std::string> axes = {"mu", "lambda", "q", "n", "R", "d"};
    return axes;
}

inline Scenario apply_sweep_axis(const Scenario& base, const std::string& axis, double value) {
    Scenario sc = base;
    if (axis == "mu") {
        sc.controller.mu = value;
        if (sc.controller.law == ControlLaw::Baseline) sc.controller.baseline_mu_tilde = value;
    } else if (axis == "lambda") {
        sc.controller.potential.lam = value;
    } else if (axis == "q") {
        sc.controller.potential.q = value;
    } else if (axis == "R") {
        if (!sc.topology.is_ring())
            throw std::invalid_argument("sweep axis R requires a ring scenario");
        sc.topology = RoadTopology::ring(value);
    } else if (axis == "d") {
        DisturbanceSchedule sched;
        sched.d = value;
        sc.disturbance = sched;
    } else if (axis == "n") {
        const double rounded = std::round(value);
        if (std::abs(value - rounded) > 1e-9 || rounded < 2.0)
            throw std::invalid_argument("sweep axis n needs an integer value >= 2");
        const int n_new = static_cast<int>(rounded);
        const int n_old = base.initial.n;
        const double v_star = sc.controller.saturation.v_star;
        double mean_gap;
        if (sc.topology.is_ring()) {
            // Scale the ring with the fleet so the per-vehicle share of road
            // is preserved.
            const double share = sc.topology.ring_length / n_old;
            sc.topology = RoadTopology::ring(share * n_new);
            mean_gap = share;
        } else {
            mean_gap = 0.0;
            for (double si : base.initial.s) mean_gap += si;
            mean_gap /= static_cast<double>(base.initial.s.size());
        }
        std::vector<double> spacings(static_cast<size_t>(n_new - 1), mean_gap);
        std::vector<double> speeds(static_cast<size_t>(n_new));
        for (int i = 1; i <= n_new; ++i)
            speeds[static_cast<size_t>(i - 1)] =
                v_star + 0.5 * std::cos(2.0 * kPi * (i - 1) / n_new);
        sc.initial = PlatoonState::make(spacings, speeds);
    } else {
        std::string names;
        for (const auto& a : sweep_axes()) names += (names.empty() ? "" : ", ") + a;
        throw std::invalid_argument("unknown sweep axis '" + axis + "' (valid: " + names + ")");
    }
    sc.validate();
    return sc;
}

// First sample time after which the convergence quantity (U when defined,
// else H) stays within threshold for the remainder of the run; NaN if never.
inline double convergence_time(const Trajectory& traj, bool use_U, double threshold = 1e-6) {
    ptrdiff_t last_bad = -1;
    for (size_t k = 0; k < traj.samples.size(); ++k) {
        const double v = use_U ? traj.samples[k].U : traj.samples[k].H;
        if (!(v <= threshold)) last_bad = static_cast<ptrdiff_t>(k);
    }
    if (last_bad + 1 >= static_cast<ptrdiff_t>(traj.samples.size()))
        return std::numeric_limits<double>::quiet_NaN();
    return traj.samples[static_cast<size_t>(last_bad + 1)].t;
}

inline SweepResult sweep_scenario(const Scenario& base, const std::string& axis,
                                  const std::vector<double>& values, const std::string& out_dir,
                                  bool emit) {
    SweepResult result;
    result.axis = axis;
    if (values.empty()) return result;

    const std::filesystem::path root =
        std::filesystem::path(out_dir) / (base.name + "-sweep-" + axis);

    auto run_row = [&base, &axis, &root, emit](size_t index, double value) {
        SweepRow row;
        row.value = value;
        try {
            Scenario sc = apply_sweep_axis(base, axis, value);
            sc.name = base.name + "-" + axis + "-" + std::to_string(index);
            row.name = sc.name;
            Trajectory traj = integrate(sc);
            RunReport rep = build_report(sc, traj);
            const bool with_U = sc.topology.is_ring() &&
                                sc.topology.ring_length < sc.initial.n * sc.controller.potential.lam;
            row.convergence_time = convergence_time(traj, with_U);
            const std::optional<DecayFit>& fit = with_U ? rep.fit_log_U : rep.fit_log_H;
            if (fit) {
                row.decay_slope = fit->slope;
                row.fit_r_squared = fit->r_squared;
            }
            row.max_abs_accel = rep.max_abs_accel;
            row.monitors_passed =
                rep.monitors.all_passed() && traj.termination == Termination::Completed;
            if (sc.topology.is_ring()) row.mu_n_value = mu_n(sc.initial.n);
            if (emit) emit_run_files(root / sc.name, sc, traj);
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        return row;
    };

    std::vector<std::future<SweepRow>> futures;
    futures.reserve(values.size());
    for (size_t k = 0; k < values.size(); ++k)
        futures.push_back(std::async(std::launch::async, run_row, k, values[k]));
    for (auto& f : futures) result.rows.push_back(f.get());

    if (emit) {
        std::filesystem::create_directories(root);
        const std::filesystem::path sp = root / "summary.csv";
        std::ofstream out(sp);
        out << "axis,value,name,converged,convergence_time,decay_slope,fit_r_squared,"
               "max_abs_accel,mu_n,monitors_passed,error\n";
        for (const SweepRow& row : result.rows) {
            std::string error = row.error;
            std::replace(error.begin(), error.end(), ',', ';');
            out << axis << ',' << g17(row.value) << ',' << row.name << ','
                << (std::isfinite(row.convergence_time) ? "yes" : "no") << ','
                << g17(row.convergence_time) << ',' << g17(row.decay_slope) << ','
                << g17(row.fit_r_squared) << ',' << g17(row.max_abs_accel) << ','
                << g17(row.mu_n_value) << ',' << (row.monitors_passed ? "yes" : "no") << ','
                << error << '\n';
        }
        result.emitted_files.push_back(sp.string());
    }
    return result;
}

}  // namespace platoonlab

#endif  // PLATOONLAB_HARNESS_HPP
