#ifndef PLATOONLAB_INTEGRATE_HPP
#define PLATOONLAB_INTEGRATE_HPP

// Trajectory integration inside the open state space.  The default method is
// an embedded Dormand-Prince 5(4) pair with three rejection rules layered on
// the usual error control: a trial step is also rejected when it lands
// outside the state space (the barrier must repel, never be clipped), or when
// the dissipated energy H increases beyond tolerance (analytically H is
// nonincreasing for the bidirectional law, so such an increase is integrator
// error).  A classic fixed-step RK4 is kept for convergence studies.
// Diagnostics are recorded on a fixed stride grid via cubic Hermite dense
// output (locally fourth-order accurate).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "platoonlab/lyapunov.hpp"
#include "platoonlab/model.hpp"

namespace platoonlab {

// ---------------------------------------------------------------------------
// Settings and result types
// ---------------------------------------------------------------------------

enum class Method { RK4Fixed, RK45Adaptive };

struct IntegratorSettings {
    Method method = Method::RK45Adaptive;
    double dt = 1e-3;       // fixed-step size (RK4Fixed)
    double dt_init = 1e-3;  // first trial step (RK45Adaptive)
    double rtol = 1e-8;
    double atol = 1e-10;
    double dt_min = 1e-12;
    double dt_max = 0.05;
    double t_end = 0.0;
    double sample_stride = 0.1;

    void validate() const {
        if (!(t_end > 0.0)) throw std::invalid_argument("IntegratorSettings: t_end must be > 0");
        if (!(sample_stride > 0.0))
            throw std::invalid_argument("IntegratorSettings: sample_stride must be > 0");
        if (method == Method::RK4Fixed) {
            if (!(dt > 0.0)) throw std::invalid_argument("IntegratorSettings: dt must be > 0");
        } else {
            if (!(dt_min > 0.0) || !(rtol > 0.0) || !(atol > 0.0))
                throw std::invalid_argument("IntegratorSettings: dt_min, rtol, atol must be > 0");
            if (!(dt_max >= dt_min))
                throw std::invalid_argument("IntegratorSettings: dt_max must be >= dt_min");
            if (!(dt_init > 0.0)) throw std::invalid_argument("IntegratorSettings: dt_init must be > 0");
        }
    }
};

enum class Termination { Completed, StateSpaceViolation, StepUnderflow };

inline const char* termination_name(Termination t) {
    switch (t) {
        case Termination::Completed: return "Completed";
        case Termination::StateSpaceViolation: return "StateSpaceViolation";
        default: return "StepUnderflow";
    }
}

// One dense-output sample with per-sample diagnostics.  Diagnostic entries
// that cannot be evaluated (state drifted outside the admissible set, law
// without a closed-form energy rate) are NaN / disengaged rather than fatal:
// the monitors decide what a violation means.
struct Sample {
    double t = 0.0;
    PlatoonState state;
    std::vector<double> accel;   // F_1..F_n (zero slot for a prescribed vehicle 1)
    double H = 0.0;
    bool has_U = false;
    double U = 0.0;
    bool has_hdot = false;
    double hdot = 0.0;
    double min_spacing = 0.0;    // over the topology's finite spacings, incl. a ring's s_1
    double max_abs_accel = 0.0;
};

struct Trajectory {
    int n = 0;
    std::vector<Sample> samples;
    Termination termination = Termination::Completed;
    double t_reached = 0.0;
    double max_abs_accel_steps = 0.0;  // running max over accepted step endpoints
    long long accepted_steps = 0;
    long long rejected_steps = 0;
    IntegratorSettings settings;
    std::string scenario_hash;  // filled by the harness when run from a scenario
};

// Least-squares fit of log(value) against t over the trailing fraction of a
// series.  Values must be strictly positive inside the fitted window.
struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
    int points = 0;
};

inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& value,
                               double tail_fraction) {
    if (t.size() != value.size())
        throw std::invalid_argument("fit_decay_rate: series length mismatch");
    if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
        throw std::invalid_argument("fit_decay_rate: tail_fraction must be in (0, 1]");
    const size_t total = t.size();
    const size_t count = std::max<size_t>(static_cast<size_t>(std::ceil(tail_fraction * total)), 1);
    if (count < 10) throw std::invalid_argument("fit_decay_rate: need at least 10 tail points");
    const size_t begin = total - count;
    double mean_t = 0.0, mean_y = 0.0;
    double min_y = std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    for (size_t k = begin; k < total; ++k) {
        if (!(value[k] > 0.0))
            throw std::invalid_argument("fit_decay_rate: nonpositive value in fitted window");
        const double ly = std::log(value[k]);
        mean_t += t[k];
        mean_y += ly;
        min_y = std::min(min_y, ly);
        max_y = std::max(max_y, ly);
    }
    mean_t /= static_cast<double>(count);
    mean_y /= static_cast<double>(count);
    if (max_y - min_y <= 1e-12 * (1.0 + std::abs(mean_y))) {
        // Constant series: the flat fit is exact; do not let rounding noise
        // in the mean masquerade as structure.
        DecayFit flat;
        flat.slope = 0.0;
        flat.intercept = mean_y;
        flat.r_squared = 1.0;
        flat.points = static_cast<int>(count);
        return flat;
    }
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (size_t k = begin; k < total; ++k) {
        const double dt = t[k] - mean_t;
        const double dy = std::log(value[k]) - mean_y;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    DecayFit fit;
    fit.points = static_cast<int>(count);
    fit.slope = (stt > 0.0) ? sty / stt : 0.0;
    fit.intercept = mean_y - fit.slope * mean_t;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (size_t k = begin; k < total; ++k) {
            const double resid = std::log(value[k]) - (fit.intercept + fit.slope * t[k]);
            ss_res += resid * resid;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    } else {
        fit.r_squared = 1.0;  // constant series: the flat fit is exact
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Integration internals
// ---------------------------------------------------------------------------

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double kA21 = 1.0 / 5.0;
inline constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
inline constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
inline constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                        kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
inline constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                        kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
inline constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                        kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
inline constexpr double kE1 = 35.0 / 384.0 - 5179.0 / 57600.0;
inline constexpr double kE3 = 500.0 / 1113.0 - 7571.0 / 16695.0;
inline constexpr double kE4 = 125.0 / 192.0 - 393.0 / 640.0;
inline constexpr double kE5 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
inline constexpr double kE6 = 11.0 / 84.0 - 187.0 / 2100.0;
inline constexpr double kE7 = -1.0 / 40.0;
inline constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;

struct RhsContext {
    const RoadTopology* topo = nullptr;
    const ControllerConfig* cfg = nullptr;
    const DisturbanceSchedule* disturbance = nullptr;
    int n = 0;
    ExtendedSpacings scratch;

    // Evaluates the right-hand side; false when the point is outside the
    // domain of the model functions (trial stages may wander there).
    bool eval(double t, const std::vector<double>& y, std::vector<double>& ydot) {
        for (double yi : y)
            if (!std::isfinite(yi)) return false;
        try {
            dynamics_rhs_flat(y.data(), n, *topo, *cfg, t, disturbance, scratch, ydot.data());
        } catch (const std::domain_error&) {
            return false;
        }
        for (double di : ydot)
            if (!std::isfinite(di)) return false;
        return true;
    }
};

inline bool flat_in_state_space(const std::vector<double>& y, int n, const RoadTopology& topo,
                                const ControllerConfig& cfg) {
    const size_t un = static_cast<size_t>(n);
    const double L = cfg.potential.L;
    const double v_max = cfg.saturation.v_max;
    double sum = 0.0;
    for (size_t k = 0; k + 1 < un; ++k) {
        if (!(y[k] > L) || !std::isfinite(y[k])) return false;
        sum += y[k];
    }
    if (topo.is_ring() && !(topo.ring_length - sum > L)) return false;
    for (size_t k = un - 1; k < 2 * un - 1; ++k)
        if (!(y[k] > 0.0) || !(y[k] < v_max)) return false;
    return true;
}

// H evaluated straight from the flat vector (with the prescribed vehicle-1
// speed substituted when a disturbance is active, since the stored slot is
// frozen at its initial value).
inline double flat_H(const std::vector<double>& y, double t, const RhsContext& ctx) {
    PlatoonState state;
    unpack_state(y, ctx.n, state);
    if (ctx.disturbance != nullptr)
        state.v[0] = disturbance_signal(t, *ctx.disturbance, ctx.cfg->saturation);
    return lyapunov_H(state, *ctx.topo, *ctx.cfg);
}

}  // namespace detail

// Build the per-sample record (diagnostics guarded, never throwing).
inline Sample make_sample(double t, const std::vector<double>& y, const RoadTopology& topo,
                          const ControllerConfig& cfg, const DisturbanceSchedule* disturbance) {
    Sample smp;
    smp.t = t;
    unpack_state(y, static_cast<int>((y.size() + 1) / 2), smp.state);
    if (disturbance != nullptr)
        smp.state.v[0] = disturbance_signal(t, *disturbance, cfg.saturation);
    const int n = smp.state.n;
    const ExtendedSpacings ext = extend(smp.state, topo);

    smp.min_spacing = kInfiniteSpacing;
    const int first_spacing = topo.is_ring() ? 1 : 2;
    for (int i = first_spacing; i <= n; ++i)
        smp.min_spacing = std::min(smp.min_spacing, ext.sp[static_cast<size_t>(i)]);

    smp.accel.assign(static_cast<size_t>(n), 0.0);
    smp.max_abs_accel = 0.0;
    const int first_controlled = (disturbance != nullptr) ? 2 : 1;
    for (int i = first_controlled; i <= n; ++i) {
        double fi;
        try {
            fi = accel(i, ext, cfg);
        } catch (const std::domain_error&) {
            fi = std::numeric_limits<double>::quiet_NaN();
        }
        smp.accel[static_cast<size_t>(i - 1)] = fi;
        if (std::isfinite(fi)) smp.max_abs_accel = std::max(smp.max_abs_accel, std::abs(fi));
    }

    try {
        smp.H = lyapunov_H(smp.state, topo, cfg);
    } catch (const std::domain_error&) {
        smp.H = std::numeric_limits<double>::quiet_NaN();
    }
    if (topo.is_ring() && topo.ring_length < n * cfg.potential.lam) {
        smp.has_U = true;
        try {
            smp.U = lyapunov_U(smp.state, topo, cfg);
        } catch (const std::domain_error&) {
            smp.U = std::numeric_limits<double>::quiet_NaN();
        }
    }
    if (cfg.law == ControlLaw::Bidirectional) {
        smp.has_hdot = true;
        try {
            smp.hdot = hdot_analytic(smp.state, topo, cfg);
        } catch (const std::domain_error&) {
            smp.hdot = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return smp;
}

namespace detail {

// Emits grid samples covered by the accepted step (t0, t1] using cubic
// Hermite interpolation on (y0, f0, y1, f1); grid points that coincide with
// the step endpoint use the endpoint state exactly.
class StrideSampler {
  public:
    StrideSampler(double stride, const RoadTopology& topo, const ControllerConfig& cfg,
                  const DisturbanceSchedule* disturbance, Trajectory& out)
        : stride_(stride), topo_(&topo), cfg_(&cfg), disturbance_(disturbance), out_(&out) {}

    void emit_initial(const std::vector<double>& y0) {
        out_->samples.push_back(make_sample(0.0, y0, *topo_, *cfg_, disturbance_));
        next_index_ = 1;
    }

    void cover_step(double t0, const std::vector<double>& y0, const std::vector<double>& f0,
                    double t1, const std::vector<double>& y1, const std::vector<double>& f1) {
        const double h = t1 - t0;
        const double eps = 1e-9 * std::max(1.0, std::abs(t1));
        std::vector<double> yi(y0.size());
        while (true) {
            const double ts = stride_ * static_cast<double>(next_index_);
            if (ts > t1 + eps) break;
            if (std::abs(ts - t1) <= eps) {
                out_->samples.push_back(make_sample(t1, y1, *topo_, *cfg_, disturbance_));
            } else {
                const double th = (ts - t0) / h;
                const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
                const double h10 = th * (1.0 - th) * (1.0 - th);
                const double h01 = th * th * (3.0 - 2.0 * th);
                const double h11 = th * th * (th - 1.0);
                for (size_t k = 0; k < y0.size(); ++k)
                    yi[k] = h00 * y0[k] + h10 * h * f0[k] + h01 * y1[k] + h11 * h * f1[k];
                // Speeds can ride within one ulp of the saturation bounds, where
                // the cubic's rounding may land exactly on (or marginally past)
                // a bound the exact flow never reaches.  Such an exit is an
                // interpolation artifact: pull the component back to the bracket
                // of the two accepted endpoints, which are strictly admissible.
                const size_t n = (y0.size() + 1) / 2;
                const double v_max = cfg_->saturation.v_max;
                for (size_t k = n - 1; k < y0.size(); ++k) {
                    if (!(yi[k] > 0.0) || !(yi[k] < v_max))
                        yi[k] = std::clamp(yi[k], std::min(y0[k], y1[k]), std::max(y0[k], y1[k]));
                }
                out_->samples.push_back(make_sample(ts, yi, *topo_, *cfg_, disturbance_));
            }
            ++next_index_;
        }
    }

    // Final-time sample when the horizon does not land on the stride grid.
    void emit_terminal(double t, const std::vector<double>& y) {
        if (out_->samples.empty() || out_->samples.back().t < t - 1e-9 * std::max(1.0, t))
            out_->samples.push_back(make_sample(t, y, *topo_, *cfg_, disturbance_));
    }

  private:
    double stride_;
    const RoadTopology* topo_;
    const ControllerConfig* cfg_;
    const DisturbanceSchedule* disturbance_;
    Trajectory* out_;
    long long next_index_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// integrate_system: the core driver
// ---------------------------------------------------------------------------

inline Trajectory integrate_system(const RoadTopology& topo, const ControllerConfig& cfg,
                                   const PlatoonState& initial,
                                   const std::optional<DisturbanceSchedule>& disturbance,
                                   const IntegratorSettings& settings) {
    settings.validate();
    cfg.validate();
    topo.validate(initial.n, cfg.potential.L);
    require_in_state_space(initial, topo, cfg, "integrate_system");
    if (disturbance) disturbance->validate(cfg.saturation);

    const int n = initial.n;
    const size_t dim = 2 * static_cast<size_t>(n) - 1;
    const DisturbanceSchedule* sched = disturbance ? &*disturbance : nullptr;

    detail::RhsContext ctx;
    ctx.topo = &topo;
    ctx.cfg = &cfg;
    ctx.disturbance = sched;
    ctx.n = n;

    Trajectory traj;
    traj.n = n;
    traj.settings = settings;
    traj.termination = Termination::Completed;

    detail::StrideSampler sampler(settings.sample_stride, topo, cfg, sched, traj);
    std::vector<double> y(dim);
    pack_state(initial, y);
    sampler.emit_initial(y);
    traj.max_abs_accel_steps = traj.samples.front().max_abs_accel;

    // Step boundaries the adaptive loop must land on exactly: the horizon and
    // the disturbance window edges (the signal's slope jumps there).
    std::vector<double> breakpoints;
    if (sched != nullptr) {
        if (DisturbanceSchedule::window_start < settings.t_end)
            breakpoints.push_back(DisturbanceSchedule::window_start);
        if (DisturbanceSchedule::window_end < settings.t_end)
            breakpoints.push_back(DisturbanceSchedule::window_end);
    }
    breakpoints.push_back(settings.t_end);

    const bool reject_energy_rise =
        (cfg.law == ControlLaw::Bidirectional) && (sched == nullptr);

    double t = 0.0;

    if (settings.method == Method::RK4Fixed) {
        std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), ytmp(dim), ynew(dim), fnew(dim);
        if (!ctx.eval(t, y, k1)) {
            traj.termination = Termination::StateSpaceViolation;
            traj.t_reached = t;
            return traj;
        }
        while (t < settings.t_end - 1e-12 * settings.t_end) {
            const double h = std::min(settings.dt, settings.t_end - t);
            bool ok = true;
            for (size_t k = 0; k < dim; ++k) ytmp[k] = y[k] + 0.5 * h * k1[k];
            ok = ok && ctx.eval(t + 0.5 * h, ytmp, k2);
            if (ok) {
                for (size_t k = 0; k < dim; ++k) ytmp[k] = y[k] + 0.5 * h * k2[k];
                ok = ok && ctx.eval(t + 0.5 * h, ytmp, k3);
            }
            if (ok) {
                for (size_t k = 0; k < dim; ++k) ytmp[k] = y[k] + h * k3[k];
                ok = ok && ctx.eval(t + h, ytmp, k4);
            }
            if (ok) {
                for (size_t k = 0; k < dim; ++k)
                    ynew[k] = y[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
                ok = detail::flat_in_state_space(ynew, n, topo, cfg) && ctx.eval(t + h, ynew, fnew);
            }
            if (!ok) {
                traj.termination = Termination::StateSpaceViolation;
                break;
            }
            sampler.cover_step(t, y, k1, t + h, ynew, fnew);
            t += h;
            y.swap(ynew);
            k1.swap(fnew);
            ++traj.accepted_steps;
            double amax = 0.0;
            for (size_t k = static_cast<size_t>(n) - 1; k < dim; ++k)
                amax = std::max(amax, std::abs(k1[k]));
            traj.max_abs_accel_steps = std::max(traj.max_abs_accel_steps, amax);
        }
        if (traj.termination == Termination::Completed) sampler.emit_terminal(t, y);
        traj.t_reached = t;
        return traj;
    }

    // --- RK45Adaptive ---
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    std::vector<double> ytmp(dim), y5(dim), errv(dim);
    if (!ctx.eval(t, y, k1)) {
        traj.termination = Termination::StateSpaceViolation;
        traj.t_reached = t;
        return traj;
    }
    double h_current = flat_H(y, t, ctx);
    double dt_next = std::min(settings.dt_init, settings.dt_max);

    while (t < settings.t_end - 1e-12 * settings.t_end) {
        // Clip the trial step to the next breakpoint so kinks and the horizon
        // are hit exactly.
        double dt_try = std::min(dt_next, settings.dt_max);
        bool clipped = false;
        for (double bp : breakpoints) {
            if (t < bp - 1e-12 && t + dt_try > bp) {
                dt_try = bp - t;
                clipped = true;
            }
        }
        if (dt_try < settings.dt_min) {
            traj.termination = Termination::StepUnderflow;
            break;
        }

        bool stage_ok = true;
        const double h = dt_try;
        for (size_t k = 0; k < dim; ++k) ytmp[k] = y[k] + h * detail::kA21 * k1[k];
        stage_ok = stage_ok && ctx.eval(t + detail::kC2 * h, ytmp, k2);
        if (stage_ok) {
            for (size_t k = 0; k < dim; ++k)
                ytmp[k] = y[k] + h * (detail::kA31 * k1[k] + detail::kA32 * k2[k]);
            stage_ok = ctx.eval(t + detail::kC3 * h, ytmp, k3);
        }
        if (stage_ok) {
            for (size_t k = 0; k < dim; ++k)
                ytmp[k] = y[k] + h * (detail::kA41 * k1[k] + detail::kA42 * k2[k] +
                                      detail::kA43 * k3[k]);
            stage_ok = ctx.eval(t + detail::kC4 * h, ytmp, k4);
        }
        if (stage_ok) {
            for (size_t k = 0; k < dim; ++k)
                ytmp[k] = y[k] + h * (detail::kA51 * k1[k] + detail::kA52 * k2[k] +
                                      detail::kA53 * k3[k] + detail::kA54 * k4[k]);
            stage_ok = ctx.eval(t + detail::kC5 * h, ytmp, k5);
        }
        if (stage_ok) {
            for (size_t k = 0; k < dim; ++k)
                ytmp[k] = y[k] + h * (detail::kA61 * k1[k] + detail::kA62 * k2[k] +
                                      detail::kA63 * k3[k] + detail::kA64 * k4[k] +
                                      detail::kA65 * k5[k]);
            stage_ok = ctx.eval(t + h, ytmp, k6);
        }
        if (stage_ok) {
            for (size_t k = 0; k < dim; ++k)
                y5[k] = y[k] + h * (detail::kB1 * k1[k] + detail::kB3 * k3[k] +
                                    detail::kB4 * k4[k] + detail::kB5 * k5[k] +
                                    detail::kB6 * k6[k]);
            stage_ok = ctx.eval(t + h, y5, k7);  // FSAL stage
        }

        if (!stage_ok) {
            ++traj.rejected_steps;
            dt_next = 0.5 * dt_try;
            if (dt_next < settings.dt_min) {
                traj.termination = Termination::StepUnderflow;
                break;
            }
            continue;
        }

        // Embedded 4th/5th-order error estimate.
        double err_acc = 0.0;
        for (size_t k = 0; k < dim; ++k) {
            errv[k] = h * (detail::kE1 * k1[k] + detail::kE3 * k3[k] + detail::kE4 * k4[k] +
                           detail::kE5 * k5[k] + detail::kE6 * k6[k] + detail::kE7 * k7[k]);
            const double scale =
                settings.atol + settings.rtol * std::max(std::abs(y[k]), std::abs(y5[k]));
            const double ratio = errv[k] / scale;
            err_acc += ratio * ratio;
        }
        const double err = std::sqrt(err_acc / static_cast<double>(dim));

        if (err > 1.0) {
            ++traj.rejected_steps;
            const double shrink = std::max(0.2, 0.9 * std::pow(err, -0.2));
            dt_next = dt_try * std::min(shrink, 0.9);
            if (dt_next < settings.dt_min) {
                traj.termination = Termination::StepUnderflow;
                break;
            }
            continue;
        }

        // The error-controlled step must also stay strictly inside the state
        // space; the barrier dynamics are what we are testing, so the state
        // is never projected back in.
        if (!detail::flat_in_state_space(y5, n, topo, cfg)) {
            ++traj.rejected_steps;
            dt_next = 0.5 * dt_try;
            if (dt_next < settings.dt_min) {
                traj.termination = Termination::StepUnderflow;
                break;
            }
            continue;
        }

        // Energy-rise guard (the closed loop dissipates H; growth beyond
        // tolerance is numerical).  Disabled when external energy is injected
        // through a prescribed vehicle or no decay law exists.
        double h_new = h_current;
        if (reject_energy_rise) {
            h_new = detail::flat_H(y5, t + h, ctx);
            if (h_new > h_current + (settings.atol + settings.rtol * std::abs(h_current))) {
                ++traj.rejected_steps;
                dt_next = 0.5 * dt_try;
                if (dt_next < settings.dt_min) {
                    traj.termination = Termination::StepUnderflow;
                    break;
                }
                continue;
            }
        }

        sampler.cover_step(t, y, k1, t + h, y5, k7);
        t += h;
        y.swap(y5);
        k1.swap(k7);
        h_current = h_new;
        ++traj.accepted_steps;
        double amax = 0.0;
        for (size_t k = static_cast<size_t>(n) - 1; k < dim; ++k)
            amax = std::max(amax, std::abs(k1[k]));
        traj.max_abs_accel_steps = std::max(traj.max_abs_accel_steps, amax);

        // Step-size controller; a breakpoint-clipped step does not shrink the
        // stored proposal.
        const double grow = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        if (!clipped)
            dt_next = std::min(dt_try * grow, settings.dt_max);
    }

    if (traj.termination == Termination::Completed) sampler.emit_terminal(t, y);
    traj.t_reached = t;
    return traj;
}

}  // namespace platoonlab

#endif  // PLATOONLAB_INTEGRATE_HPP
