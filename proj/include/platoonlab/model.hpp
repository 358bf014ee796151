#ifndef PLATOONLAB_MODEL_HPP
#define PLATOONLAB_MODEL_HPP

// Closed-form model layer: repulsive spacing potential, saturation curve,
// spacing-dependent target speeds, and the two cruise-control acceleration
// laws, assembled into the closed-loop ODE right-hand side.  Everything here
// is a pure function of its arguments; integration and I/O live elsewhere.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace platoonlab {

inline constexpr double kInfiniteSpacing = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Parameter blocks
// ---------------------------------------------------------------------------

// Repulsive spacing potential with a hard barrier at s = L and compact
// support up to the interaction distance lam:
//   V(s) = q (lam - s)^4 / (s - L)^2   on (L, lam],   0 for s >= lam.
struct PotentialSpec {
    double q = 0.0;    // repulsion gain
    double L = 0.0;    // safety distance: V blows up as s -> L+
    double lam = 0.0;  // interaction distance: V vanishes beyond it

    void validate() const {
        if (!(q > 0.0)) throw std::invalid_argument("PotentialSpec: q must be > 0");
        if (!(L > 0.0)) throw std::invalid_argument("PotentialSpec: L must be > 0");
        if (!(lam > L)) throw std::invalid_argument("PotentialSpec: lam must exceed L");
    }
};

// Odd-signed saturation curve b with b(0) = 0, range (v_star - v_max, v_star):
//   b(x) = v_star + (v_max/2) (tanh(x + shift) - 1),
//   shift = artanh(1 - 2 v_star / v_max)  (precomputed once).
struct SaturationSpec {
    double v_star = 0.0;  // desired cruise speed
    double v_max = 0.0;   // hard speed limit
    double shift = 0.0;   // cached artanh(1 - 2 v_star / v_max)

    static SaturationSpec make(double v_star, double v_max) {
        if (!(v_max > 0.0) || !(v_star > 0.0) || !(v_star < v_max))
            throw std::invalid_argument("SaturationSpec: need 0 < v_star < v_max");
        SaturationSpec spec;
        spec.v_star = v_star;
        spec.v_max = v_max;
        spec.shift = std::atanh(1.0 - 2.0 * v_star / v_max);
        return spec;
    }

    void validate() const {
        if (!(v_max > 0.0) || !(v_star > 0.0) || !(v_star < v_max))
            throw std::invalid_argument("SaturationSpec: need 0 < v_star < v_max");
        const double expect = std::atanh(1.0 - 2.0 * v_star / v_max);
        if (std::abs(shift - expect) > 1e-12 * (1.0 + std::abs(expect)))
            throw std::invalid_argument("SaturationSpec: stale shift; build via make()");
    }
};

enum class ControlLaw {
    Bidirectional,  // nonlinear law with spacing-dependent target speed f_i
    Baseline        // comparison law with constant target speed v_star
};

struct ControllerConfig {
    ControlLaw law = ControlLaw::Bidirectional;
    double mu = 0.0;  // friction gain toward the target speed
    PotentialSpec potential;
    SaturationSpec saturation;
    // Baseline-law extras (ignored by the bidirectional law).
    double baseline_mu_tilde = 0.0;
    double baseline_epsilon = 0.0;

    void validate() const {
        potential.validate();
        saturation.validate();
        if (!(mu > 0.0)) throw std::invalid_argument("ControllerConfig: mu must be > 0");
        if (law == ControlLaw::Baseline) {
            if (!(baseline_mu_tilde > 0.0))
                throw std::invalid_argument("ControllerConfig: baseline mu_tilde must be > 0");
            if (!(baseline_epsilon > 0.0))
                throw std::invalid_argument("ControllerConfig: baseline epsilon must be > 0");
        }
    }
};

// Road geometry.  A ring closes the spacing chain (spacings sum to R); an
// open road treats the lead and trail boundary spacings as +infinity, where
// the potential and its derivatives vanish identically.
struct RoadTopology {
    enum class Kind { Ring, Open };
    Kind kind = Kind::Ring;
    double ring_length = 0.0;  // R; meaningful only for Kind::Ring

    static RoadTopology ring(double R) {
        RoadTopology t;
        t.kind = Kind::Ring;
        t.ring_length = R;
        return t;
    }
    static RoadTopology open() {
        RoadTopology t;
        t.kind = Kind::Open;
        t.ring_length = 0.0;
        return t;
    }
    bool is_ring() const { return kind == Kind::Ring; }

    void validate(int n, double L) const {
        if (is_ring() && !(ring_length > n * L))
            throw std::invalid_argument("RoadTopology: ring length must exceed n*L");
    }
};

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

// State of an n-vehicle platoon: the n-1 free spacings s_2..s_n (distance of
// each vehicle to its predecessor) and the n speeds v_1..v_n.  On a ring the
// leading spacing s_1 is derived from the closure R - sum(s_i).
struct PlatoonState {
    int n = 0;
    std::vector<double> s;  // s[k] = s_{k+2}, size n-1
    std::vector<double> v;  // v[k] = v_{k+1}, size n

    static PlatoonState make(std::vector<double> spacings, std::vector<double> speeds) {
        PlatoonState st;
        st.n = static_cast<int>(speeds.size());
        if (st.n < 2) throw std::invalid_argument("PlatoonState: need at least 2 vehicles");
        if (spacings.size() + 1 != speeds.size())
            throw std::invalid_argument("PlatoonState: need n-1 spacings for n speeds");
        st.s = std::move(spacings);
        st.v = std::move(speeds);
        return st;
    }
};

// Spacing/speed vectors with the topology's boundary conventions applied,
// indexed like the math: sp[i] = s_i for i = 1..n+1 (sp[0] unused) and
// vx[i] = v_i for i = 0..n+1.  Ring: s_1 = R - sum s_i, s_{n+1} = s_1,
// v_0 = v_n, v_{n+1} = v_1.  Open: s_1 = s_{n+1} = +infinity; the phantom
// neighbor speeds duplicate the boundary vehicles (they only ever multiply
// potential curvatures that are exactly zero there, but must stay finite).
struct ExtendedSpacings {
    int n = 0;
    std::vector<double> sp;  // size n+2, valid at 1..n+1
    std::vector<double> vx;  // size n+2, valid at 0..n+1
};

inline void extend_into(const PlatoonState& state, const RoadTopology& topo,
                        ExtendedSpacings& ext) {
    const int n = state.n;
    ext.n = n;
    ext.sp.resize(static_cast<size_t>(n) + 2);
    ext.vx.resize(static_cast<size_t>(n) + 2);
    for (int i = 2; i <= n; ++i) ext.sp[static_cast<size_t>(i)] = state.s[static_cast<size_t>(i - 2)];
    for (int i = 1; i <= n; ++i) ext.vx[static_cast<size_t>(i)] = state.v[static_cast<size_t>(i - 1)];
    if (topo.is_ring()) {
        double sum = 0.0;
        for (double si : state.s) sum += si;
        ext.sp[1] = topo.ring_length - sum;
        ext.sp[static_cast<size_t>(n) + 1] = ext.sp[1];
        ext.vx[0] = state.v[static_cast<size_t>(n - 1)];
        ext.vx[static_cast<size_t>(n) + 1] = state.v[0];
    } else {
        ext.sp[1] = kInfiniteSpacing;
        ext.sp[static_cast<size_t>(n) + 1] = kInfiniteSpacing;
        ext.vx[0] = state.v[0];
        ext.vx[static_cast<size_t>(n) + 1] = state.v[static_cast<size_t>(n - 1)];
    }
}

inline ExtendedSpacings extend(const PlatoonState& state, const RoadTopology& topo) {
    ExtendedSpacings ext;
    extend_into(state, topo, ext);
    return ext;
}

// Strict membership test for the open state space: all spacings (including a
// ring's derived s_1) above the safety distance, all speeds inside
// (0, v_max).  The ring sum constraint L + sum s_i < R is equivalent to the
// derived s_1 > L.
inline bool in_state_space(const PlatoonState& state, const RoadTopology& topo,
                           const ControllerConfig& cfg) {
    const double L = cfg.potential.L;
    const double v_max = cfg.saturation.v_max;
    for (double vi : state.v)
        if (!(vi > 0.0) || !(vi < v_max)) return false;
    for (double si : state.s)
        if (!(si > L)) return false;
    if (topo.is_ring()) {
        double sum = 0.0;
        for (double si : state.s) sum += si;
        if (!(topo.ring_length - sum > L)) return false;
    }
    return true;
}

inline void require_in_state_space(const PlatoonState& state, const RoadTopology& topo,
                                   const ControllerConfig& cfg, const char* who) {
    if (!in_state_space(state, topo, cfg))
        throw std::domain_error(std::string(who) + ": state outside the admissible open set");
}

// ---------------------------------------------------------------------------
// Potential and saturation primitives
// ---------------------------------------------------------------------------

// V(s) = q (lam-s)^4 / (s-L)^2 on (L, lam], 0 beyond lam and at +infinity.
// Evaluated via u = max(lam-s, 0), w = s-L to keep the s -> lam tangency
// exact instead of cancellation-noisy.
inline double potential_value(double s, const PotentialSpec& p) {
    if (std::isinf(s)) return 0.0;
    if (!(s > p.L)) throw std::domain_error("potential_value: spacing at or below safety distance");
    if (s >= p.lam) return 0.0;
    const double u = p.lam - s;
    const double w = s - p.L;
    const double u2 = u * u;
    return p.q * u2 * u2 / (w * w);
}

// dV/ds = -2 q u^3 (2w + u) / w^3, with u, w as above.  Strictly negative on
// (L, lam), identically zero from lam on (the quartic tangency makes the
// continuation C^3 at lam).
inline double potential_d1(double s, const PotentialSpec& p) {
    if (std::isinf(s)) return 0.0;
    if (!(s > p.L)) throw std::domain_error("potential_d1: spacing at or below safety distance");
    if (s >= p.lam) return 0.0;
    const double u = p.lam - s;
    const double w = s - p.L;
    return -2.0 * p.q * u * u * u * (2.0 * w + u) / (w * w * w);
}

// d2V/ds2 = 2 q u^2 (6w^2 + 8uw + 3u^2) / w^4; strictly positive on (L, lam).
inline double potential_d2(double s, const PotentialSpec& p) {
    if (std::isinf(s)) return 0.0;
    if (!(s > p.L)) throw std::domain_error("potential_d2: spacing at or below safety distance");
    if (s >= p.lam) return 0.0;
    const double u = p.lam - s;
    const double w = s - p.L;
    const double w2 = w * w;
    return 2.0 * p.q * u * u * (6.0 * w2 + 8.0 * u * w + 3.0 * u * u) / (w2 * w2);
}

inline double b_value(double x, const SaturationSpec& sat) {
    return sat.v_star + 0.5 * sat.v_max * (std::tanh(x + sat.shift) - 1.0);
}

inline double b_d1(double x, const SaturationSpec& sat) {
    const double th = std::tanh(x + sat.shift);
    return 0.5 * sat.v_max * (1.0 - th * th);
}

// ---------------------------------------------------------------------------
// Controller pieces (per-vehicle, on extended arrays; i runs 1..n)
// ---------------------------------------------------------------------------

// Spacing-dependent target speed f_i = v_star - b(V'(s_{i+1}) - V'(s_i)).
// Always in (0, v_max) because b maps into (v_star - v_max, v_star).
inline double target_speed(int i, const ExtendedSpacings& ext, const ControllerConfig& cfg) {
    const double dvp = potential_d1(ext.sp[static_cast<size_t>(i) + 1], cfg.potential) -
                       potential_d1(ext.sp[static_cast<size_t>(i)], cfg.potential);
    return cfg.saturation.v_star - b_value(dvp, cfg.saturation);
}

// beta(v, y) = (v_max^3 (v+y) - 2 v_max^2 y v) / (2 (v_max - v)^2 v^2),
// the positive integrating factor that shapes the kinetic energy term.
inline double beta(double v, double y, double v_max) {
    if (!(v > 0.0) || !(v < v_max))
        throw std::domain_error("beta: speed outside (0, v_max)");
    const double vm2 = v_max * v_max;
    const double num = vm2 * v_max * (v + y) - 2.0 * vm2 * y * v;
    const double den = 2.0 * (v_max - v) * (v_max - v) * v * v;
    return num / den;
}

// Relative-speed damping that uses the curvature of the potential at the two
// adjacent spacings:
//   Z_i = -v_max^2 b'(V'(s_{i+1}) - V'(s_i))
//         * ( V''(s_{i+1}) (v_i - v_{i+1}) - V''(s_i) (v_{i-1} - v_i) ).
inline double viscosity(int i, const ExtendedSpacings& ext, const ControllerConfig& cfg) {
    const size_t k = static_cast<size_t>(i);
    const double vp_next = potential_d1(ext.sp[k + 1], cfg.potential);
    const double vp_here = potential_d1(ext.sp[k], cfg.potential);
    const double vpp_next = potential_d2(ext.sp[k + 1], cfg.potential);
    const double vpp_here = potential_d2(ext.sp[k], cfg.potential);
    const double slope = b_d1(vp_next - vp_here, cfg.saturation);
    const double rel = vpp_next * (ext.vx[k] - ext.vx[k + 1]) - vpp_here * (ext.vx[k - 1] - ext.vx[k]);
    return -cfg.saturation.v_max * cfg.saturation.v_max * slope * rel;
}

// Bidirectional acceleration law:
//   F_i = (1/beta(v_i, f_i)) [ (Z_i - mu v_max^2 (v_i - f_i)) / (v_i (v_max - v_i))
//                              + V'(s_i) - V'(s_{i+1}) ].
inline double accel_bidirectional(int i, const ExtendedSpacings& ext, const ControllerConfig& cfg) {
    const size_t k = static_cast<size_t>(i);
    const double v_max = cfg.saturation.v_max;
    const double vi = ext.vx[k];
    if (!(vi > 0.0) || !(vi < v_max))
        throw std::domain_error("accel_bidirectional: speed outside (0, v_max)");
    const double vp_here = potential_d1(ext.sp[k], cfg.potential);
    const double vp_next = potential_d1(ext.sp[k + 1], cfg.potential);
    const double fi = cfg.saturation.v_star - b_value(vp_next - vp_here, cfg.saturation);
    const double zi = viscosity(i, ext, cfg);
    const double core = (zi - cfg.mu * v_max * v_max * (vi - fi)) / (vi * (v_max - vi));
    return (core + vp_here - vp_next) / beta(vi, fi, v_max);
}

// Piecewise-quadratic half-rectifier used by the baseline gain; C^1 across
// both breakpoints x = -eps and x = 0.
inline double baseline_g(double x, double eps) {
    if (x <= -eps) return 0.0;
    if (x < 0.0) return (x + eps) * (x + eps) / (2.0 * eps);
    return (eps * eps + 2.0 * eps * x) / (2.0 * eps);
}

// Baseline comparison law with constant target speed:
//   F_i = -k_i(s) (v_i - v_star) + V'(s_i) - V'(s_{i+1}),
//   k_i = mu_tilde + v_max g(x) / (v_star (v_max - v_star)) - x / v_star,
//   x   = V'(s_i) - V'(s_{i+1}).
inline double accel_baseline(int i, const ExtendedSpacings& ext, const ControllerConfig& cfg) {
    const size_t k = static_cast<size_t>(i);
    const double v_star = cfg.saturation.v_star;
    const double v_max = cfg.saturation.v_max;
    const double x = potential_d1(ext.sp[k], cfg.potential) -
                     potential_d1(ext.sp[k + 1], cfg.potential);
    const double gain = cfg.baseline_mu_tilde +
                        v_max * baseline_g(x, cfg.baseline_epsilon) / (v_star * (v_max - v_star)) -
                        x / v_star;
    return -gain * (ext.vx[k] - v_star) + x;
}

inline double accel(int i, const ExtendedSpacings& ext, const ControllerConfig& cfg) {
    return cfg.law == ControlLaw::Bidirectional ? accel_bidirectional(i, ext, cfg)
                                                : accel_baseline(i, ext, cfg);
}

// ---------------------------------------------------------------------------
// Disturbance: prescribed speed for vehicle 1
// ---------------------------------------------------------------------------

// Speed signal for vehicle 1 when it acts as an external disturbance: the
// cruise value outside a fixed window, one full cosine swing of amplitude d
// inside it.  Continuous at both window edges (the cosine is zero there).
struct DisturbanceSchedule {
    double d = 0.0;  // amplitude, must satisfy 0 < d < min(v_star, v_max - v_star)

    static constexpr double window_start = kPi / 2.0;
    static constexpr double window_end = 5.0 * kPi / 2.0;

    void validate(const SaturationSpec& sat) const {
        const double cap = std::min(sat.v_star, sat.v_max - sat.v_star);
        if (!(d > 0.0) || !(d < cap))
            throw std::invalid_argument(
                "DisturbanceSchedule: amplitude must lie in (0, min(v_star, v_max - v_star))");
    }
};

inline double disturbance_signal(double t, const DisturbanceSchedule& sched,
                                 const SaturationSpec& sat) {
    if (t >= DisturbanceSchedule::window_start && t < DisturbanceSchedule::window_end)
        return sat.v_star + sched.d * std::cos(t);
    return sat.v_star;
}

// ---------------------------------------------------------------------------
// Closed-loop right-hand side
// ---------------------------------------------------------------------------

// Flat layout used by the integrator: y = [s_2..s_n, v_1..v_n], size 2n-1.
inline void pack_state(const PlatoonState& state, std::vector<double>& y) {
    const size_t n = static_cast<size_t>(state.n);
    y.resize(2 * n - 1);
    for (size_t k = 0; k + 1 < n; ++k) y[k] = state.s[k];
    for (size_t k = 0; k < n; ++k) y[n - 1 + k] = state.v[k];
}

inline void unpack_state(const std::vector<double>& y, int n, PlatoonState& state) {
    const size_t un = static_cast<size_t>(n);
    state.n = n;
    state.s.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(un - 1));
    state.v.assign(y.begin() + static_cast<std::ptrdiff_t>(un - 1), y.end());
}

inline void extend_flat_into(const double* y, int n, const RoadTopology& topo,
                             ExtendedSpacings& ext) {
    const size_t un = static_cast<size_t>(n);
    ext.n = n;
    ext.sp.resize(un + 2);
    ext.vx.resize(un + 2);
    for (size_t k = 0; k + 1 < un; ++k) ext.sp[k + 2] = y[k];
    for (size_t k = 0; k < un; ++k) ext.vx[k + 1] = y[un - 1 + k];
    if (topo.is_ring()) {
        double sum = 0.0;
        for (size_t k = 0; k + 1 < un; ++k) sum += y[k];
        ext.sp[1] = topo.ring_length - sum;
        ext.sp[un + 1] = ext.sp[1];
        ext.vx[0] = ext.vx[un];
        ext.vx[un + 1] = ext.vx[1];
    } else {
        ext.sp[1] = kInfiniteSpacing;
        ext.sp[un + 1] = kInfiniteSpacing;
        ext.vx[0] = ext.vx[1];
        ext.vx[un + 1] = ext.vx[un];
    }
}

// Time derivative of the flat state: sdot_i = v_{i-1} - v_i for i = 2..n and
// vdot_i = F_i under the active law.  With a disturbance schedule, vehicle 1
// is not controlled: its speed slot is overridden by the prescribed signal
// in every coupling (including sdot_2 and, on a ring, sdot_1's closure) and
// its own derivative entry is zero.  `ext` is caller-provided scratch so the
// hot loop does not allocate.
inline void dynamics_rhs_flat(const double* y, int n, const RoadTopology& topo,
                              const ControllerConfig& cfg, double t,
                              const DisturbanceSchedule* disturbance,
                              ExtendedSpacings& ext, double* ydot) {
    extend_flat_into(y, n, topo, ext);
    if (disturbance != nullptr) {
        const double v1 = disturbance_signal(t, *disturbance, cfg.saturation);
        ext.vx[1] = v1;
        if (topo.is_ring()) ext.vx[static_cast<size_t>(n) + 1] = v1;  // v_{n+1} mirrors v_1
    }
    const size_t un = static_cast<size_t>(n);
    for (size_t i = 2; i <= un; ++i)
        ydot[i - 2] = ext.vx[i - 1] - ext.vx[i];
    const int first = (disturbance != nullptr) ? 2 : 1;
    if (disturbance != nullptr) ydot[un - 1] = 0.0;
    for (int i = first; i <= n; ++i)
        ydot[un - 1 + static_cast<size_t>(i - 1)] = accel(i, ext, cfg);
}

// Convenience structured form of the same derivative.
struct StateDerivative {
    std::vector<double> ds;  // d/dt of s_2..s_n
    std::vector<double> dv;  // d/dt of v_1..v_n
};

inline StateDerivative dynamics_rhs(const PlatoonState& state, const RoadTopology& topo,
                                    const ControllerConfig& cfg, double t = 0.0,
                                    const DisturbanceSchedule* disturbance = nullptr) {
    require_in_state_space(state, topo, cfg, "dynamics_rhs");
    std::vector<double> y, ydot(2 * static_cast<size_t>(state.n) - 1);
    pack_state(state, y);
    ExtendedSpacings ext;
    dynamics_rhs_flat(y.data(), state.n, topo, cfg, t, disturbance, ext, ydot.data());
    StateDerivative d;
    d.ds.assign(ydot.begin(), ydot.begin() + state.n - 1);
    d.dv.assign(ydot.begin() + state.n - 1, ydot.end());
    return d;
}

}  // namespace platoonlab

#endif  // PLATOONLAB_MODEL_HPP
