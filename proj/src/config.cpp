#include "hexroute/config.hpp"

#include <filesystem>
#include <fstream>

#include "hexroute/errors.hpp"

namespace hexroute {

namespace {

using nlohmann::json;

json weights_to_json(const Weights& w) {
    return {{"k_safety", w.k_safety},
            {"w_thick", w.w_thick},
            {"w_age", w.w_age},
            {"w_conc", w.w_conc},
            {"w_snow", w.w_snow},
            {"w_side", w.w_side},
            {"w_lat", w.w_lat},
            {"h", w.h},
            {"w_turn", w.w_turn},
            {"w_deg", w.w_deg},
            {"w_len", w.w_len},
            {"drift_enabled", w.drift_enabled},
            {"w_drift", w.w_drift},
            {"alignment", w.alignment == AlignmentStrategy::BearingCrosstrack
                              ? "bearing-crosstrack"
                              : "off"}};
}

Weights weights_from_json(const json& j) {
    Weights w;
    w.k_safety = j.value("k_safety", w.k_safety);
    w.w_thick = j.value("w_thick", w.w_thick);
    w.w_age = j.value("w_age", w.w_age);
    w.w_conc = j.value("w_conc", w.w_conc);
    w.w_snow = j.value("w_snow", w.w_snow);
    w.w_side = j.value("w_side", w.w_side);
    w.w_lat = j.value("w_lat", w.w_lat);
    w.h = j.value("h", w.h);
    w.w_turn = j.value("w_turn", w.w_turn);
    w.w_deg = j.value("w_deg", w.w_deg);
    w.w_len = j.value("w_len", w.w_len);
    w.drift_enabled = j.value("drift_enabled", w.drift_enabled);
    w.w_drift = j.value("w_drift", w.w_drift);
    std::string alignment = j.value("alignment", "bearing-crosstrack");
    if (alignment == "bearing-crosstrack") {
        w.alignment = AlignmentStrategy::BearingCrosstrack;
    } else if (alignment == "off") {
        w.alignment = AlignmentStrategy::Off;
    } else {
        throw ValidationError("unknown alignment strategy: " + alignment);
    }
    return w;
}

json schedule_to_json(const AnnealSchedule& s) {
    return {{"initial_temperature", s.initial_temperature},
            {"final_temperature", s.final_temperature},
            {"sweeps", s.sweeps},
            {"restarts", s.restarts},
            {"time_budget_s", s.time_budget_s},
            {"seed", s.seed},
            {"threads", s.threads}};
}

AnnealSchedule schedule_from_json(const json& j) {
    AnnealSchedule s;
    s.initial_temperature = j.value("initial_temperature", s.initial_temperature);
    s.final_temperature = j.value("final_temperature", s.final_temperature);
    s.sweeps = j.value("sweeps", s.sweeps);
    s.restarts = j.value("restarts", s.restarts);
    s.time_budget_s = j.value("time_budget_s", s.time_budget_s);
    s.seed = j.value("seed", s.seed);
    s.threads = j.value("threads", s.threads);
    return s;
}

json synth_params_to_json(const SynthParams& p) {
    return {{"c_min", p.c_min},
            {"c_max", p.c_max},
            {"q_min", p.q_min},
            {"q_max", p.q_max},
            {"w_min", p.w_min},
            {"w_max", p.w_max},
            {"slack_penalty", p.slack_penalty},
            {"threshold_percentile", p.threshold_percentile},
            {"threshold_samples", p.threshold_samples},
            {"l_fraction", p.l_fraction},
            {"u_fraction", p.u_fraction}};
}

SynthParams synth_params_from_json(const json& j) {
    SynthParams p;
    p.c_min = j.value("c_min", p.c_min);
    p.c_max = j.value("c_max", p.c_max);
    p.q_min = j.value("q_min", p.q_min);
    p.q_max = j.value("q_max", p.q_max);
    p.w_min = j.value("w_min", p.w_min);
    p.w_max = j.value("w_max", p.w_max);
    p.slack_penalty = j.value("slack_penalty", p.slack_penalty);
    p.threshold_percentile = j.value("threshold_percentile", p.threshold_percentile);
    p.threshold_samples = j.value("threshold_samples", p.threshold_samples);
    p.l_fraction = j.value("l_fraction", p.l_fraction);
    p.u_fraction = j.value("u_fraction", p.u_fraction);
    return p;
}

}  // namespace

json RunConfig::to_json() const {
    return {{"corridor_path", corridor_path},
            {"landmask_path", landmask_path},
            {"env_csv_path", env_csv_path},
            {"resolution", resolution},
            {"start", {{"lat", start.lat}, {"lon", start.lon}}},
            {"goal", {{"lat", goal.lat}, {"lon", goal.lon}}},
            {"date", date},
            {"weights", weights_to_json(weights)},
            {"bounds", {{"l_min", bounds.l_min}, {"l_max", bounds.l_max}}},
            {"calibration",
             {{"upper_percentile", calibration.upper_percentile},
              {"lower_percentile", calibration.lower_percentile}}},
            {"solver",
             {{"name", solver.name},
              {"schedule", schedule_to_json(solver.schedule)},
              {"adapter_command", solver.adapter_command}}},
            {"bench",
             {{"sizes", bench.sizes},
              {"densities", bench.densities},
              {"solvers", bench.solvers},
              {"seeds", bench.seeds},
              {"params", synth_params_to_json(bench.params)}}},
            {"output_dir", output_dir},
            {"seed", seed},
            {"threads", threads}};
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    c.corridor_path = j.value("corridor_path", c.corridor_path);
    c.landmask_path = j.value("landmask_path", c.landmask_path);
    c.env_csv_path = j.value("env_csv_path", c.env_csv_path);
    c.resolution = j.value("resolution", c.resolution);
    if (j.contains("start")) {
        c.start = {j["start"].value("lat", 0.0), j["start"].value("lon", 0.0)};
    }
    if (j.contains("goal")) {
        c.goal = {j["goal"].value("lat", 0.0), j["goal"].value("lon", 0.0)};
    }
    c.date = j.value("date", c.date);
    if (j.contains("weights")) c.weights = weights_from_json(j["weights"]);
    if (j.contains("bounds")) {
        c.bounds.l_min = j["bounds"].value("l_min", 0);
        c.bounds.l_max = j["bounds"].value("l_max", 0);
    }
    if (j.contains("calibration")) {
        c.calibration.upper_percentile =
            j["calibration"].value("upper_percentile", c.calibration.upper_percentile);
        c.calibration.lower_percentile =
            j["calibration"].value("lower_percentile", c.calibration.lower_percentile);
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        c.solver.name = s.value("name", c.solver.name);
        if (s.contains("schedule")) c.solver.schedule = schedule_from_json(s["schedule"]);
        c.solver.adapter_command = s.value("adapter_command", c.solver.adapter_command);
    }
    if (j.contains("bench")) {
        const auto& b = j["bench"];
        if (b.contains("sizes")) c.bench.sizes = b["sizes"].get<std::vector<int>>();
        if (b.contains("densities")) {
            c.bench.densities = b["densities"].get<std::vector<double>>();
        }
        if (b.contains("solvers")) {
            c.bench.solvers = b["solvers"].get<std::vector<std::string>>();
        }
        if (b.contains("seeds")) c.bench.seeds = b["seeds"].get<std::vector<std::uint64_t>>();
        if (b.contains("params")) c.bench.params = synth_params_from_json(b["params"]);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& ex) {
        throw ValidationError("invalid config JSON in " + path + ": " + ex.what());
    }
    return from_json(j);
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config: " + path);
    out << to_json().dump(2) << '\n';
}

void RunConfig::validate_for_grid() const {
    namespace fs = std::filesystem;
    if (corridor_path.empty() || !fs::exists(corridor_path)) {
        throw ValidationError("corridor_path does not exist: " + corridor_path);
    }
    if (!landmask_path.empty() && !fs::exists(landmask_path)) {
        throw ValidationError("landmask_path does not exist: " + landmask_path);
    }
    if (resolution < kMinResolution || resolution > kMaxResolution) {
        throw ValidationError("resolution outside supported range");
    }
}

void RunConfig::validate_for_optimize() const {
    validate_for_grid();
    namespace fs = std::filesystem;
    if (env_csv_path.empty() || !fs::exists(env_csv_path)) {
        throw ValidationError("env_csv_path does not exist: " + env_csv_path);
    }
    if (date.empty()) throw ValidationError("date must be set for optimization runs");
    weights.validate();
    if (solver.name != "exhaustive" && solver.name != "linegraph" && solver.name != "anneal" &&
        solver.name != "external") {
        throw ValidationError("unknown solver: " + solver.name);
    }
}

}  // namespace hexroute
