#ifndef PLATOONLAB_SCENARIO_HPP
#define PLATOONLAB_SCENARIO_HPP

// Scenario files: a complete, reproducible description of one run — road,
// controller, initial condition, optional speed disturbance, integrator
// settings, and monitor toggles.  Serialized as JSON with a canonical key
// order so that emission is byte-stable and load(save(x)) == x.  A 64-bit
// FNV-1a hash of the canonical serialization identifies the scenario in
// reports and output directories.

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "platoonlab/integrate.hpp"
#include "platoonlab/model.hpp"

namespace platoonlab {

using ordered_json = nlohmann::ordered_json;

struct MonitorToggles {
    bool spacing = true;          // every finite spacing stays above the vehicle length
    bool speed = true;            // every speed stays inside (0, v_max)
    bool energy_decay = true;     // H nonincreasing (auto-disabled when not applicable)
    bool spacing_ceiling = true;  // a-priori per-gap upper bound (open road)
    bool speed_envelope = true;   // exponential speed-deviation envelope (large-gap regime)
    bool ring_conservation = true;
};

struct Scenario {
    std::string name;
    std::string comment;  // free-form provenance note (e.g. symbolic origin of a constant)
    RoadTopology topology = RoadTopology::open();
    ControllerConfig controller;
    PlatoonState initial;
    std::optional<DisturbanceSchedule> disturbance;
    IntegratorSettings integrator;
    MonitorToggles monitors;

    void validate() const {
        controller.validate();
        topology.validate(initial.n, controller.potential.L);
        integrator.validate();
        if (disturbance) disturbance->validate(controller.saturation);
        require_in_state_space(initial, topology, controller, "Scenario");
    }
};

// ---------------------------------------------------------------------------
// JSON (canonical key order; doubles survive a round trip exactly because
// nlohmann::json serializes them with shortest-round-trip precision)
// ---------------------------------------------------------------------------

inline ordered_json to_json(const Scenario& sc) {
    ordered_json j;
    j["name"] = sc.name;
    if (!sc.comment.empty()) j["comment"] = sc.comment;

    ordered_json road;
    road["kind"] = sc.topology.is_ring() ? "ring" : "open";
    if (sc.topology.is_ring()) road["length"] = sc.topology.ring_length;
    j["road"] = road;

    ordered_json ctl;
    ctl["law"] = (sc.controller.law == ControlLaw::Bidirectional) ? "bidirectional" : "baseline";
    ctl["mu"] = sc.controller.mu;
    ordered_json pot;
    pot["q"] = sc.controller.potential.q;
    pot["vehicle_length"] = sc.controller.potential.L;
    pot["interaction_range"] = sc.controller.potential.lam;
    ctl["potential"] = pot;
    ordered_json sat;
    sat["v_star"] = sc.controller.saturation.v_star;
    sat["v_max"] = sc.controller.saturation.v_max;
    ctl["saturation"] = sat;
    if (sc.controller.law == ControlLaw::Baseline) {
        ctl["baseline_mu_tilde"] = sc.controller.baseline_mu_tilde;
        ctl["baseline_epsilon"] = sc.controller.baseline_epsilon;
    }
    j["controller"] = ctl;

    ordered_json init;
    init["n"] = sc.initial.n;
    init["spacings"] = sc.initial.s;  // s_2..s_n; a ring's s_1 is implied by length
    init["speeds"] = sc.initial.v;
    j["initial"] = init;

    if (sc.disturbance) {
        ordered_json dist;
        dist["amplitude"] = sc.disturbance->d;
        j["disturbance"] = dist;
    }

    ordered_json integ;
    integ["method"] = (sc.integrator.method == Method::RK4Fixed) ? "rk4" : "rk45";
    if (sc.integrator.method == Method::RK4Fixed) {
        integ["dt"] = sc.integrator.dt;
    } else {
        integ["dt_init"] = sc.integrator.dt_init;
        integ["rtol"] = sc.integrator.rtol;
        integ["atol"] = sc.integrator.atol;
        integ["dt_min"] = sc.integrator.dt_min;
        integ["dt_max"] = sc.integrator.dt_max;
    }
    integ["t_end"] = sc.integrator.t_end;
    integ["sample_stride"] = sc.integrator.sample_stride;
    j["integrator"] = integ;

    ordered_json mon;
    mon["spacing"] = sc.monitors.spacing;
    mon["speed"] = sc.monitors.speed;
    mon["energy_decay"] = sc.monitors.energy_decay;
    mon["spacing_ceiling"] = sc.monitors.spacing_ceiling;
    mon["speed_envelope"] = sc.monitors.speed_envelope;
    mon["ring_conservation"] = sc.monitors.ring_conservation;
    j["monitors"] = mon;

    return j;
}

namespace detail {

inline const ordered_json& require_key(const ordered_json& j, const char* key, const char* ctx) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::invalid_argument(std::string("scenario: missing key '") + key + "' in " + ctx);
    return *it;
}

}  // namespace detail

inline Scenario scenario_from_json(const ordered_json& j) {
    Scenario sc;
    try {
        sc.name = detail::require_key(j, "name", "scenario").get<std::string>();
        if (j.contains("comment")) sc.comment = j["comment"].get<std::string>();

        const auto& road = detail::require_key(j, "road", "scenario");
        const std::string kind = detail::require_key(road, "kind", "road").get<std::string>();
        if (kind == "ring")
            sc.topology = RoadTopology::ring(detail::require_key(road, "length", "road").get<double>());
        else if (kind == "open")
            sc.topology = RoadTopology::open();
        else
            throw std::invalid_argument("scenario: road.kind must be 'ring' or 'open'");

        const auto& ctl = detail::require_key(j, "controller", "scenario");
        const std::string law = detail::require_key(ctl, "law", "controller").get<std::string>();
        if (law == "bidirectional")
            sc.controller.law = ControlLaw::Bidirectional;
        else if (law == "baseline")
            sc.controller.law = ControlLaw::Baseline;
        else
            throw std::invalid_argument("scenario: controller.law must be 'bidirectional' or 'baseline'");
        sc.controller.mu = detail::require_key(ctl, "mu", "controller").get<double>();
        const auto& pot = detail::require_key(ctl, "potential", "controller");
        sc.controller.potential.q = detail::require_key(pot, "q", "potential").get<double>();
        sc.controller.potential.L =
            detail::require_key(pot, "vehicle_length", "potential").get<double>();
        sc.controller.potential.lam =
            detail::require_key(pot, "interaction_range", "potential").get<double>();
        const auto& sat = detail::require_key(ctl, "saturation", "controller");
        sc.controller.saturation =
            SaturationSpec::make(detail::require_key(sat, "v_star", "saturation").get<double>(),
                                 detail::require_key(sat, "v_max", "saturation").get<double>());
        if (sc.controller.law == ControlLaw::Baseline) {
            sc.controller.baseline_mu_tilde =
                detail::require_key(ctl, "baseline_mu_tilde", "controller").get<double>();
            sc.controller.baseline_epsilon =
                detail::require_key(ctl, "baseline_epsilon", "controller").get<double>();
        }

        const auto& init = detail::require_key(j, "initial", "scenario");
        const int n = detail::require_key(init, "n", "initial").get<int>();
        auto spacings = detail::require_key(init, "spacings", "initial").get<std::vector<double>>();
        auto speeds = detail::require_key(init, "speeds", "initial").get<std::vector<double>>();
        if (static_cast<int>(speeds.size()) != n ||
            static_cast<int>(spacings.size()) != n - 1)
            throw std::invalid_argument("scenario: initial arrays inconsistent with n");
        sc.initial = PlatoonState::make(spacings, speeds);

        if (j.contains("disturbance")) {
            DisturbanceSchedule sched;
            sched.d = detail::require_key(j["disturbance"], "amplitude", "disturbance").get<double>();
            sc.disturbance = sched;
        }

        const auto& integ = detail::require_key(j, "integrator", "scenario");
        const std::string method = detail::require_key(integ, "method", "integrator").get<std::string>();
        if (method == "rk4") {
            sc.integrator.method = Method::RK4Fixed;
            sc.integrator.dt = detail::require_key(integ, "dt", "integrator").get<double>();
        } else if (method == "rk45") {
            sc.integrator.method = Method::RK45Adaptive;
            sc.integrator.dt_init = detail::require_key(integ, "dt_init", "integrator").get<double>();
            sc.integrator.rtol = detail::require_key(integ, "rtol", "integrator").get<double>();
            sc.integrator.atol = detail::require_key(integ, "atol", "integrator").get<double>();
            sc.integrator.dt_min = detail::require_key(integ, "dt_min", "integrator").get<double>();
            sc.integrator.dt_max = detail::require_key(integ, "dt_max", "integrator").get<double>();
        } else {
            throw std::invalid_argument("scenario: integrator.method must be 'rk4' or 'rk45'");
        }
        sc.integrator.t_end = detail::require_key(integ, "t_end", "integrator").get<double>();
        sc.integrator.sample_stride =
            detail::require_key(integ, "sample_stride", "integrator").get<double>();

        if (j.contains("monitors")) {
            const auto& mon = j["monitors"];
            auto flag = [&mon](const char* key, bool fallback) {
                return mon.contains(key) ? mon[key].get<bool>() : fallback;
            };
            sc.monitors.spacing = flag("spacing", true);
            sc.monitors.speed = flag("speed", true);
            sc.monitors.energy_decay = flag("energy_decay", true);
            sc.monitors.spacing_ceiling = flag("spacing_ceiling", true);
            sc.monitors.speed_envelope = flag("speed_envelope", true);
            sc.monitors.ring_conservation = flag("ring_conservation", true);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("scenario: malformed JSON value (") + e.what() + ")");
    }
    sc.validate();
    return sc;
}

inline std::string scenario_to_string(const Scenario& sc) { return to_json(sc).dump(2) + "\n"; }

inline Scenario scenario_from_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("scenario: parse error (") + e.what() + ")");
    }
    return scenario_from_json(j);
}

// 64-bit FNV-1a over the canonical serialization.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string scenario_hash(const Scenario& sc) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << fnv1a64(scenario_to_string(sc));
    return out.str();
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline std::vector<std::string> preset_names() {
    return {"ring-continuum", "ring-point",           "string-stability",
            "open-road-compare-48", "open-road-compare-73", "prop3-regime"};
}

inline Scenario preset(const std::string& name) {
    Scenario sc;
    sc.name = name;

    if (name == "ring-continuum" || name == "ring-point") {
        // Four vehicles on a 130 m ring.  With interaction range 30 the ring
        // is long enough that an entire set of rest states exists (every gap
        // at or beyond the range); with range 40 the rest state is the single
        // uniform configuration.
        sc.topology = RoadTopology::ring(130.0);
        sc.controller.law = ControlLaw::Bidirectional;
        sc.controller.mu = 0.1;
        sc.controller.potential = {0.1, 5.0, (name == "ring-continuum") ? 30.0 : 40.0};
        sc.controller.saturation = SaturationSpec::make(30.0, 35.0);
        sc.initial = PlatoonState::make({33.0, 32.0, 27.0}, {31.0, 28.0, 27.0, 30.0});
        sc.integrator.t_end = 300.0;
        sc.integrator.sample_stride = 0.1;
    } else if (name == "string-stability") {
        // Six vehicles at the uniform ring rest state; vehicle 1's speed is
        // prescribed as a one-period cosine pulse and the response peaks are
        // compared along the two propagation directions.
        sc.topology = RoadTopology::ring(130.0);
        sc.controller.law = ControlLaw::Bidirectional;
        sc.controller.mu = 0.1;
        sc.controller.potential = {0.1, 5.0, 40.0};
        sc.controller.saturation = SaturationSpec::make(20.0, 35.0);
        const double gap = 130.0 / 6.0;
        sc.initial = PlatoonState::make({gap, gap, gap, gap, gap},
                                        {20.0, 20.0, 20.0, 20.0, 20.0, 20.0});
        DisturbanceSchedule sched;
        sched.d = 14.0;
        sc.disturbance = sched;
        sc.integrator.t_end = 25.0;
        sc.integrator.sample_stride = 0.005;
    } else if (name == "open-road-compare-48" || name == "open-road-compare-73") {
        // Five vehicles on the open road squeezed well below the interaction
        // range, relaxing from rest-adjacent speeds; -48 is the saturated
        // bidirectional law, -73 the per-vehicle relaxation baseline.
        sc.topology = RoadTopology::open();
        sc.comment = "q = interaction_range^-3 evaluated at range 35";
        sc.controller.law = (name == "open-road-compare-48") ? ControlLaw::Bidirectional
                                                             : ControlLaw::Baseline;
        sc.controller.mu = 0.1;
        sc.controller.potential = {std::pow(35.0, -3.0), 5.0, 35.0};
        sc.controller.saturation = SaturationSpec::make(30.0, 35.0);
        sc.controller.baseline_mu_tilde = 0.1;
        sc.controller.baseline_epsilon = 0.1;
        sc.initial = PlatoonState::make({19.0, 19.0, 19.0, 19.0},
                                        {20.0, 20.0, 20.0, 20.0, 20.0});
        sc.integrator.t_end = 40000.0;
        sc.integrator.sample_stride = 5.0;
    } else if (name == "prop3-regime") {
        // Five vehicles on the open road with every gap far beyond the
        // interaction range: speeds must contract inside an exponential
        // envelope and spacings must never dip below the range.
        sc.topology = RoadTopology::open();
        sc.controller.law = ControlLaw::Bidirectional;
        sc.controller.mu = 0.1;
        sc.controller.potential = {std::pow(35.0, -3.0), 5.0, 35.0};
        sc.controller.saturation = SaturationSpec::make(30.0, 35.0);
        sc.initial = PlatoonState::make({90.0, 90.0, 90.0, 90.0},
                                        {29.0, 31.0, 28.0, 30.5, 30.0});
        sc.integrator.t_end = 100.0;
        sc.integrator.sample_stride = 0.1;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }

    sc.validate();
    return sc;
}

}  // namespace platoonlab

#endif  // PLATOONLAB_SCENARIO_HPP
