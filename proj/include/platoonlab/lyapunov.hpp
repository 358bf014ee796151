#ifndef PLATOONLAB_LYAPUNOV_HPP
#define PLATOONLAB_LYAPUNOV_HPP

// Energy-style diagnostics for the closed loop: the dissipated energy H and
// its shifted variant U, the closed-form decay rate of H along the
// bidirectional law, sublevel-set bounds, spectral rate constants, distances
// to the equilibrium sets, and the open-road spacing/speed guarantees.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "platoonlab/model.hpp"

namespace platoonlab {

// ---------------------------------------------------------------------------
// Energy functions
// ---------------------------------------------------------------------------

// H = (v_max^2/2) sum_i (v_i - f_i)^2 / (v_i (v_max - v_i)) + sum_i V(s_i).
// The potential sum runs over the extended spacings s_1..s_n; an open road's
// s_1 is the +infinity sentinel whose potential is exactly zero, so the same
// expression serves both topologies.
inline double lyapunov_H(const PlatoonState& state, const RoadTopology& topo,
                         const ControllerConfig& cfg) {
    require_in_state_space(state, topo, cfg, "lyapunov_H");
    const ExtendedSpacings ext = extend(state, topo);
    const double v_max = cfg.saturation.v_max;
    double kinetic = 0.0;
    double potential = 0.0;
    for (int i = 1; i <= state.n; ++i) {
        const size_t k = static_cast<size_t>(i);
        const double vi = ext.vx[k];
        const double fi = target_speed(i, ext, cfg);
        kinetic += (vi - fi) * (vi - fi) / (vi * (v_max - vi));
        potential += potential_value(ext.sp[k], cfg.potential);
    }
    return 0.5 * v_max * v_max * kinetic + potential;
}

// U = H - n V(R/n): the positive-definite shift of H for a ring shorter than
// n*lam, where the uniform-spacing point is the unique equilibrium and
// carries potential energy n V(R/n) that never drains.
inline double lyapunov_U(const PlatoonState& state, const RoadTopology& topo,
                         const ControllerConfig& cfg) {
    if (!topo.is_ring() || !(topo.ring_length < state.n * cfg.potential.lam))
        throw std::invalid_argument("lyapunov_U: defined only on a ring with R < n*lam");
    const double floor = state.n * potential_value(topo.ring_length / state.n, cfg.potential);
    return lyapunov_H(state, topo, cfg) - floor;
}

// Closed-form time derivative of H along the bidirectional law:
//   Hdot = -mu v_max^2 sum_i (v_i - f_i)^2 / (v_i (v_max - v_i))
//          - sum_i b(D_i) D_i,   D_i = V'(s_{i+1}) - V'(s_i).
// Both sums are nonpositive (x b(x) > 0 away from zero), so Hdot <= 0.
// There is no closed form for the baseline law, hence the law check.
inline double hdot_analytic(const PlatoonState& state, const RoadTopology& topo,
                            const ControllerConfig& cfg) {
    if (cfg.law != ControlLaw::Bidirectional)
        throw std::invalid_argument("hdot_analytic: closed form exists only for the bidirectional law");
    require_in_state_space(state, topo, cfg, "hdot_analytic");
    const ExtendedSpacings ext = extend(state, topo);
    const double v_max = cfg.saturation.v_max;
    double friction = 0.0;
    double exchange = 0.0;
    for (int i = 1; i <= state.n; ++i) {
        const size_t k = static_cast<size_t>(i);
        const double vi = ext.vx[k];
        const double fi = target_speed(i, ext, cfg);
        friction += (vi - fi) * (vi - fi) / (vi * (v_max - vi));
        const double di = potential_d1(ext.sp[k + 1], cfg.potential) -
                          potential_d1(ext.sp[k], cfg.potential);
        exchange += b_value(di, cfg.saturation) * di;
    }
    return -cfg.mu * v_max * v_max * friction - exchange;
}

// ---------------------------------------------------------------------------
// Sublevel-set bounds
// ---------------------------------------------------------------------------

// For a sublevel set {H <= r} on a ring: every spacing is at least c (the
// unique root of V(c) = r), and every speed lies in [v_lower, v_upper].
struct LevelSetBounds {
    double r = 0.0;
    double c = 0.0;        // spacing lower bound, in (L, lam)
    double v_lower = 0.0;  // <= v_star; degenerates to 0 for very large r
    double v_upper = 0.0;  // >= v_star, < v_max
};

// Root of V(c) = r by bisection on (L, lam); V is strictly decreasing there
// so the root is unique.  Tolerance 1e-10 on c.
inline double potential_level_root(double r, const PotentialSpec& p) {
    if (!(r > 0.0)) throw std::invalid_argument("potential_level_root: level must be > 0");
    double lo = p.L + 1e-13 * (p.lam - p.L);  // V(lo) is astronomically large
    double hi = p.lam;                        // V(hi) = 0
    for (int iter = 0; iter < 200 && (hi - lo) > 1e-10; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (potential_value(mid, p) > r)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline LevelSetBounds level_set_bounds(double r, const ControllerConfig& cfg) {
    if (!(r > 0.0)) throw std::invalid_argument("level_set_bounds: level must be > 0");
    const SaturationSpec& sat = cfg.saturation;
    const double v_max = sat.v_max;
    const double c = potential_level_root(r, cfg.potential);
    const double slope_at_c = potential_d1(c, cfg.potential);  // negative
    // Extreme target speeds attainable inside the set: the gradient argument
    // of b is trapped in [V'(c), -V'(c)].
    const double f_min = sat.v_star - b_value(-slope_at_c, sat);
    const double f_max = sat.v_star - b_value(slope_at_c, sat);
    LevelSetBounds out;
    out.r = r;
    out.c = c;
    out.v_lower = v_max * f_min * f_min /
                  (v_max * v_max + r + std::sqrt(r * r + 2.0 * r * v_max * v_max));
    out.v_upper = v_max *
                  (v_max * f_max + r + std::sqrt(r * r + 2.0 * r * f_max * (v_max - f_max))) /
                  (v_max * v_max + 2.0 * r);
    return out;
}

// ---------------------------------------------------------------------------
// Spectral rate constants
// ---------------------------------------------------------------------------

// Cosine of 2*pi/n with the quadrant/sextant angles returned exactly, so the
// spectral constants below hit their integer values (n = 2, 3, 4, 6) without
// pi-rounding residue.
inline double cos_two_pi_over(int n) {
    switch (n) {
        case 2: return -1.0;
        case 3: return -0.5;
        case 4: return 0.0;
        case 6: return 0.5;
        default: return std::cos(2.0 * kPi / static_cast<double>(n));
    }
}

// Smallest nonzero eigenvalue of the cyclic second-difference quadratic form
// sum_i (x_{i+1} - x_i)^2 on the zero-mean subspace: mu_n = 2(1 - cos(2pi/n)).
inline double mu_n(int n) {
    if (n < 2) throw std::invalid_argument("mu_n: need n >= 2");
    return 2.0 * (1.0 - cos_two_pi_over(n));
}

// Independent spectral oracle for mu_n: power iteration on alpha*I - C,
// where C is the circulant second-difference matrix (C x)_i =
// 2 x_i - x_{i-1} - x_{i+1}, with the all-ones kernel deflated every
// iteration.  The dominant remaining eigenvalue of alpha*I - C is
// alpha - mu_n.  Deliberately avoids the closed form and any eigen library.
inline double oracle_mu_n(int n) {
    if (n < 2) throw std::invalid_argument("oracle_mu_n: need n >= 2");
    const size_t un = static_cast<size_t>(n);
    const double alpha = 4.5;  // strictly above the spectrum's top (max eigenvalue is 4)
    std::vector<double> x(un), cx(un);
    // Fixed, reproducible start vector with weight on low-frequency modes.
    for (size_t i = 0; i < un; ++i) {
        const double phase = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        x[i] = std::sin(phase) + 0.25 * std::cos(phase) + 0.01 * std::cos(2.0 * phase);
    }
    double rayleigh = 0.0;
    double rayleigh_prev = -1.0;
    int stable = 0;
    for (int iter = 0; iter < 200000; ++iter) {
        // Deflate the kernel direction (the all-ones vector).
        double mean = 0.0;
        for (double xi : x) mean += xi;
        mean /= static_cast<double>(n);
        for (double& xi : x) xi -= mean;
        // Apply alpha*I - C.
        for (size_t i = 0; i < un; ++i) {
            const double left = x[(i + un - 1) % un];
            const double right = x[(i + 1) % un];
            cx[i] = alpha * x[i] - (2.0 * x[i] - left - right);
        }
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < un; ++i) {
            num += x[i] * cx[i];
            den += x[i] * x[i];
        }
        rayleigh = num / den;
        double norm = 0.0;
        for (double ci : cx) norm += ci * ci;
        norm = std::sqrt(norm);
        for (size_t i = 0; i < un; ++i) x[i] = cx[i] / norm;
        if (std::abs(rayleigh - rayleigh_prev) < 1e-15 * alpha) {
            if (++stable >= 4) break;
        } else {
            stable = 0;
        }
        rayleigh_prev = rayleigh;
    }
    return alpha - rayleigh;
}

// Guaranteed exponential decay rate for the unique-equilibrium ring case:
//   omega_bar = min(mu, g^2 b'(0) V''(R/n) mu_n),   g in (0, 1).
inline double rate_omega_bar(const ControllerConfig& cfg, const RoadTopology& topo, int n,
                             double g_frak) {
    if (!topo.is_ring() || !(topo.ring_length < n * cfg.potential.lam))
        throw std::invalid_argument("rate_omega_bar: needs a ring with R < n*lam");
    if (!(g_frak > 0.0) || !(g_frak < 1.0))
        throw std::invalid_argument("rate_omega_bar: g_frak must lie in (0, 1)");
    const double curvature = potential_d2(topo.ring_length / n, cfg.potential);
    return std::min(cfg.mu, g_frak * g_frak * b_d1(0.0, cfg.saturation) * curvature * mu_n(n));
}

// ---------------------------------------------------------------------------
// Equilibrium sets and distances
// ---------------------------------------------------------------------------

// The three flavors of equilibrium set:
//   RingPoint      (R <  n*lam): the single state (R/n, ..., R/n, v_star, ...).
//   RingContinuum  (R >= n*lam): spacings in the polytope {s_i >= lam,
//                  lam + sum s_i <= R} (all couplings inactive), speeds v_star.
//   OpenSet        (open road):  spacings in the box [lam, inf), speeds v_star.
struct EquilibriumSet {
    enum class Kind { RingPoint, RingContinuum, OpenSet };
    Kind kind = Kind::RingPoint;
    int n = 0;
    double R = 0.0;       // rings only
    double lam = 0.0;     // continuum/open only
    double v_star = 0.0;

    static EquilibriumSet ring_point(int n, double R, double v_star) {
        EquilibriumSet e;
        e.kind = Kind::RingPoint;
        e.n = n;
        e.R = R;
        e.v_star = v_star;
        return e;
    }
    static EquilibriumSet ring_continuum(int n, double R, double lam, double v_star) {
        if (!(R >= n * lam))
            throw std::invalid_argument("EquilibriumSet: continuum set needs R >= n*lam");
        EquilibriumSet e;
        e.kind = Kind::RingContinuum;
        e.n = n;
        e.R = R;
        e.lam = lam;
        e.v_star = v_star;
        return e;
    }
    static EquilibriumSet open_set(int n, double lam, double v_star) {
        EquilibriumSet e;
        e.kind = Kind::OpenSet;
        e.n = n;
        e.lam = lam;
        e.v_star = v_star;
        return e;
    }

    // Natural choice for a scenario's topology/config pairing.
    static EquilibriumSet for_topology(const RoadTopology& topo, int n,
                                       const ControllerConfig& cfg) {
        if (!topo.is_ring()) return open_set(n, cfg.potential.lam, cfg.saturation.v_star);
        if (topo.ring_length < n * cfg.potential.lam)
            return ring_point(n, topo.ring_length, cfg.saturation.v_star);
        return ring_continuum(n, topo.ring_length, cfg.potential.lam, cfg.saturation.v_star);
    }
};

// Euclidean projection of x onto the polytope {x_i >= lam, sum x_i <= budget}:
// clamp up to lam first; if the sum then exceeds the budget, the projection is
// max(lam, x - theta) with the unique theta >= 0 balancing the sum (found by
// bisection, since the sum is continuous and strictly decreasing in theta).
inline std::vector<double> project_spacing_polytope(const std::vector<double>& x, double lam,
                                                    double budget) {
    std::vector<double> y(x.size());
    double sum = 0.0;
    for (size_t k = 0; k < x.size(); ++k) {
        y[k] = std::max(lam, x[k]);
        sum += y[k];
    }
    if (sum <= budget) return y;
    double lo = 0.0;
    double hi = 0.0;
    for (double xk : x) hi = std::max(hi, xk - lam);
    // At theta = hi everything clamps to lam, and n*lam <= budget by the
    // set's nonemptiness, so the root is bracketed.
    for (int iter = 0; iter < 200; ++iter) {
        const double theta = 0.5 * (lo + hi);
        double s = 0.0;
        for (double xk : x) s += std::max(lam, xk - theta);
        if (s > budget)
            lo = theta;
        else
            hi = theta;
        if (hi - lo < 1e-12 * (1.0 + hi)) break;
    }
    const double theta = 0.5 * (lo + hi);
    for (size_t k = 0; k < x.size(); ++k) y[k] = std::max(lam, x[k] - theta);
    return y;
}

// Mixed-unit Euclidean distance from a state to an equilibrium set, over the
// state coordinates (s_2..s_n, v_1..v_n).
inline double dist_to_equilibrium(const PlatoonState& state, const EquilibriumSet& eq) {
    if (state.n != eq.n)
        throw std::invalid_argument("dist_to_equilibrium: vehicle count mismatch");
    double acc = 0.0;
    for (double vi : state.v) acc += (vi - eq.v_star) * (vi - eq.v_star);
    switch (eq.kind) {
        case EquilibriumSet::Kind::RingPoint: {
            const double target = eq.R / eq.n;
            for (double si : state.s) acc += (si - target) * (si - target);
            break;
        }
        case EquilibriumSet::Kind::OpenSet: {
            for (double si : state.s) {
                const double deficit = std::max(eq.lam - si, 0.0);
                acc += deficit * deficit;
            }
            break;
        }
        case EquilibriumSet::Kind::RingContinuum: {
            // Free spacings live in {s_i >= lam, sum s_i <= R - lam} (the
            // derived leading spacing must itself reach lam).
            const std::vector<double> proj =
                project_spacing_polytope(state.s, eq.lam, eq.R - eq.lam);
            for (size_t k = 0; k < state.s.size(); ++k)
                acc += (state.s[k] - proj[k]) * (state.s[k] - proj[k]);
            break;
        }
    }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Open-road trajectory guarantees
// ---------------------------------------------------------------------------

// Per-spacing ceiling valid for all time on an open road, from the initial
// energy: s_i(t) <= max(s_i(0), lam) + v_max sqrt(2 H(0)) /
// (2 mu min(v_star, v_max - v_star)).  Returned aligned with state.s.
inline std::vector<double> prop2_bound(const PlatoonState& initial, const ControllerConfig& cfg) {
    const RoadTopology open = RoadTopology::open();
    const double h0 = lyapunov_H(initial, open, cfg);
    const SaturationSpec& sat = cfg.saturation;
    const double spread = sat.v_max * std::sqrt(2.0 * h0) /
                          (2.0 * cfg.mu * std::min(sat.v_star, sat.v_max - sat.v_star));
    std::vector<double> bound(initial.s.size());
    for (size_t k = 0; k < initial.s.size(); ++k)
        bound[k] = std::max(initial.s[k], cfg.potential.lam) + spread;
    return bound;
}

// Exponential-regime certificate for an open road: if every initial spacing
// clears lam + (v_max/mu) Gamma, with Gamma the worst initial normalized
// speed mismatch, then speeds stay inside a decaying envelope and spacings
// never fall below lam.
struct Prop3Check {
    bool premise_holds = false;
    double gamma = 0.0;               // max_i |v_i(0) - f_i(0)| / sqrt((v_max - v_i(0)) v_i(0))
    double envelope_amplitude = 0.0;  // (v_max / 2) Gamma
    double envelope_rate = 0.0;       // mu
    double spacing_floor = 0.0;       // lam

    double envelope(double t) const { return envelope_amplitude * std::exp(-envelope_rate * t); }
};

inline Prop3Check prop3_check(const PlatoonState& initial, const ControllerConfig& cfg) {
    const RoadTopology open = RoadTopology::open();
    require_in_state_space(initial, open, cfg, "prop3_check");
    const ExtendedSpacings ext = extend(initial, open);
    const double v_max = cfg.saturation.v_max;
    double gamma = 0.0;
    for (int i = 1; i <= initial.n; ++i) {
        const double vi = ext.vx[static_cast<size_t>(i)];
        const double fi = target_speed(i, ext, cfg);
        gamma = std::max(gamma, std::abs(vi - fi) / std::sqrt((v_max - vi) * vi));
    }
    double min_spacing = kInfiniteSpacing;
    for (double si : initial.s) min_spacing = std::min(min_spacing, si);
    Prop3Check out;
    out.gamma = gamma;
    out.envelope_amplitude = 0.5 * v_max * gamma;
    out.envelope_rate = cfg.mu;
    out.spacing_floor = cfg.potential.lam;
    out.premise_holds = min_spacing >= cfg.potential.lam + (v_max / cfg.mu) * gamma;
    return out;
}

}  // namespace platoonlab

#endif  // PLATOONLAB_LYAPUNOV_HPP
