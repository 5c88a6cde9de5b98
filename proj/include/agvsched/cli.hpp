#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scenario.hpp"
#include "scheduler.hpp"
#include "search.hpp"

namespace agvsched::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kConfigEnv = "AGVSCHED_CONFIG";

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitBadInput = 2;

using nlohmann::json;

// ---------------------------------------------------------------------------
// Small helpers

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCode::InvalidArgument, "failed writing " + path);
}

inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::vector<double> parse_numbers(const std::string& text, std::size_t count, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, flag + ": '" + item + "' is not a number");
        }
    }
    if (out.size() != count)
        throw Error(ErrorCode::InvalidArgument, flag + " expects " + std::to_string(count) + " comma-separated numbers");
    return out;
}

inline Interval parse_interval(const std::string& text, const std::string& flag) {
    auto v = parse_numbers(text, 2, flag);
    return {v[0], v[1]};
}

inline TaskShape load_task_shape(const std::string& ref) {
    if (ref.find('/') != std::string::npos || ref.ends_with(".json")) return parse_task_shape(read_file(ref));
    return shapes::by_name(ref);
}

// ---------------------------------------------------------------------------
// JSON views of the settings that end up in manifests and config files

inline json interval_to_json(Interval iv) { return json::array({iv.low, iv.high}); }

inline json shape_to_json(const TaskShape& t) {
    json edges = json::array();
    for (auto [a, b] : t.edges) edges.push_back({a, b});
    return {{"name", t.name}, {"components", t.components}, {"edges", edges}};
}

inline json genspec_to_json(const GenSpec& g) {
    json shapes = json::array();
    for (const auto& t : g.task_shapes) shapes.push_back(shape_to_json(t));
    return {{"sp_count", g.sp_count},
            {"vm_total", g.vm_total},
            {"vc_edge_count", g.vc_edge_count ? json(*g.vc_edge_count) : json(nullptr)},
            {"uav_count", g.uav_count},
            {"task_shapes", shapes},
            {"data_size", interval_to_json(g.data_size)},
            {"power_budget", interval_to_json(g.power_budget)},
            {"noise", interval_to_json(g.noise)},
            {"bandwidth", interval_to_json(g.bandwidth)},
            {"task_weight", interval_to_json(g.task_weight)},
            {"exec_time", interval_to_json(g.exec_time)},
            {"vc_weight", interval_to_json(g.vc_weight)},
            {"uav_height", interval_to_json(g.uav_height)},
            {"space", g.space},
            {"v2v_radius", g.v2v_radius},
            {"uav_radius", g.uav_radius},
            {"heterogeneous_data", g.heterogeneous_data},
            {"channel", channel_to_json(g.channel)},
            {"config", config_to_json(g.config)}};
}

inline json solver_to_json(const SolverOptions& o) {
    return {{"mu0", o.mu0},           {"mu_shrink", o.mu_shrink},       {"mu_min", o.mu_min},
            {"kkt_tol", o.kkt_tol},   {"max_newton", o.max_newton},     {"max_halvings", o.max_halvings},
            {"armijo", o.armijo},     {"backtrack", o.backtrack}};
}

inline json annealing_to_json(const AnnealingSchedule& a) {
    return {{"grid", a.grid}, {"t0", a.t0}, {"t_min", a.t_min}, {"cooling", a.cooling}, {"proposals", a.proposals}};
}

namespace detail {

using agvsched::detail::field_error;
using agvsched::detail::number;

inline void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) field_error(path, "expected an object");
}

template <class T>
void integer_field(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    const auto& v = j[key];
    if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0))
        field_error(path + "." + key, "expected a non-negative integer");
    out = v.get<T>();
}

inline void double_field(const json& j, const char* key, double& out, const std::string& path) {
    if (j.contains(key)) out = number(j[key], path + "." + key);
}

inline void interval_field(const json& j, const char* key, Interval& out, const std::string& path) {
    if (!j.contains(key)) return;
    const auto& v = j[key];
    const std::string p = path + "." + key;
    if (!v.is_array() || v.size() != 2) field_error(p, "expected [low, high]");
    out = {number(v[0], p + "[0]"), number(v[1], p + "[1]")};
}

inline void channel_update(ChannelParams& c, const json& j, const std::string& path) {
    require_object(j, path);
    for (auto [key, field] : {std::pair{"d0", &c.d0}, {"pl0", &c.pl0}, {"eta1", &c.eta1}, {"eta2", &c.eta2},
                              {"sigma", &c.sigma}, {"ht", &c.ht}, {"hr", &c.hr}, {"lambda", &c.lambda},
                              {"g1", &c.g1}, {"eta3", &c.eta3}, {"bandwidth", &c.bandwidth}, {"noise", &c.noise}})
        double_field(j, key, *field, path);
}

inline void genspec_update(GenSpec& g, const json& j, const std::string& path) {
    require_object(j, path);
    integer_field(j, "sp_count", g.sp_count, path);
    integer_field(j, "vm_total", g.vm_total, path);
    if (j.contains("vc_edge_count")) {
        if (j["vc_edge_count"].is_null()) {
            g.vc_edge_count.reset();
        } else {
            std::size_t n = 0;
            integer_field(j, "vc_edge_count", n, path);
            g.vc_edge_count = n;
        }
    }
    integer_field(j, "uav_count", g.uav_count, path);
    if (j.contains("task_shapes")) {
        const auto& arr = j["task_shapes"];
        if (!arr.is_array()) field_error(path + ".task_shapes", "expected an array");
        g.task_shapes.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = path + ".task_shapes[" + std::to_string(i) + "]";
            if (arr[i].is_string()) {
                g.task_shapes.push_back(load_task_shape(arr[i].get<std::string>()));
            } else if (arr[i].is_object()) {
                try {
                    g.task_shapes.push_back(parse_task_shape(arr[i].dump()));
                } catch (const Error& e) {
                    field_error(p, e.message());
                }
            } else {
                field_error(p, "expected a shape name or shape object");
            }
        }
    }
    interval_field(j, "data_size", g.data_size, path);
    interval_field(j, "power_budget", g.power_budget, path);
    interval_field(j, "noise", g.noise, path);
    interval_field(j, "bandwidth", g.bandwidth, path);
    interval_field(j, "task_weight", g.task_weight, path);
    interval_field(j, "exec_time", g.exec_time, path);
    interval_field(j, "vc_weight", g.vc_weight, path);
    interval_field(j, "uav_height", g.uav_height, path);
    if (j.contains("space")) {
        const auto& v = j["space"];
        if (!v.is_array() || v.size() != 3) field_error(path + ".space", "expected [x, y, z]");
        for (std::size_t i = 0; i < 3; ++i) g.space[i] = number(v[i], path + ".space");
    }
    double_field(j, "v2v_radius", g.v2v_radius, path);
    double_field(j, "uav_radius", g.uav_radius, path);
    if (j.contains("heterogeneous_data")) {
        if (!j["heterogeneous_data"].is_boolean()) field_error(path + ".heterogeneous_data", "expected a boolean");
        g.heterogeneous_data = j["heterogeneous_data"].get<bool>();
    }
    if (j.contains("channel")) channel_update(g.channel, j["channel"], path + ".channel");
    if (j.contains("config")) config_update_from_json(g.config, j["config"], path + ".config");
}

inline void solver_update(SolverOptions& o, const json& j, const std::string& path) {
    require_object(j, path);
    double_field(j, "mu0", o.mu0, path);
    double_field(j, "mu_shrink", o.mu_shrink, path);
    double_field(j, "mu_min", o.mu_min, path);
    double_field(j, "kkt_tol", o.kkt_tol, path);
    integer_field(j, "max_newton", o.max_newton, path);
    integer_field(j, "max_halvings", o.max_halvings, path);
    double_field(j, "armijo", o.armijo, path);
    double_field(j, "backtrack", o.backtrack, path);
}

inline void annealing_update(AnnealingSchedule& a, const json& j, const std::string& path) {
    require_object(j, path);
    integer_field(j, "grid", a.grid, path);
    double_field(j, "t0", a.t0, path);
    double_field(j, "t_min", a.t_min, path);
    double_field(j, "cooling", a.cooling, path);
    integer_field(j, "proposals", a.proposals, path);
}

}  // namespace detail

/// Settings read from a config file: generation defaults plus solver and
/// baseline tuning. Scenario files are never altered by it.
struct Settings {
    GenSpec gen;
    AllocatorOptions alloc;
    json source = json::object();  // the file contents as read, for the manifest

    static Settings from_json(const json& j) {
        Settings s;
        detail::require_object(j, "config");
        if (j.contains("schema_version")) {
            if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kConfigSchemaVersion)
                throw Error(ErrorCode::SchemaVersionMismatch, "config schema_version must be " +
                                                                  std::to_string(kConfigSchemaVersion));
        }
        if (j.contains("generate")) detail::genspec_update(s.gen, j["generate"], "generate");
        if (j.contains("channel")) detail::channel_update(s.gen.channel, j["channel"], "channel");
        if (j.contains("config")) config_update_from_json(s.gen.config, j["config"], "config");
        if (j.contains("solver")) detail::solver_update(s.alloc.solver, j["solver"], "solver");
        if (j.contains("annealing")) detail::annealing_update(s.alloc.annealing, j["annealing"], "annealing");
        detail::integer_field(j, "ra_iters", s.alloc.ra_iters, "");
        s.source = j;
        return s;
    }

    static Settings from_file(const std::string& path) {
        const std::string text = read_file(path);
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ParseError, path + ": " + agvsched::detail::line_col(text, e.byte ? e.byte - 1 : 0) +
                                                   ": " + e.what());
        }
        try {
            return from_json(j);
        } catch (const Error& e) {
            throw Error(e.code(), path + ": " + e.message());
        }
    }
};

// ---------------------------------------------------------------------------
// Manifest

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;  // arguments after the program name
    json config = json::object();   // config snapshot (file contents, or {})
    json effective = json::object();
    json seeds = json::object();
    json inputs = json::object();  // path -> fnv1a of the bytes read
    std::vector<std::string> outputs;
    std::string tool_version = kToolVersion;
    std::string timestamp;

    json to_json() const {
        return {{"schema_version", kManifestSchemaVersion},
                {"tool", "agvsched"},
                {"tool_version", tool_version},
                {"command", command},
                {"argv", argv},
                {"config", config},
                {"effective", effective},
                {"seeds", seeds},
                {"inputs", inputs},
                {"outputs", outputs},
                {"timestamp", timestamp}};
    }

    static RunManifest from_json(const json& j) {
        RunManifest m;
        using agvsched::detail::field_error;
        if (!j.is_object()) field_error("", "manifest must be an object");
        if (!j.contains("schema_version") || j["schema_version"] != kManifestSchemaVersion)
            throw Error(ErrorCode::SchemaVersionMismatch, "manifest schema_version must be " +
                                                              std::to_string(kManifestSchemaVersion));
        try {
            m.command = j.at("command").get<std::string>();
            m.argv = j.at("argv").get<std::vector<std::string>>();
            m.config = j.value("config", json::object());
            m.effective = j.value("effective", json::object());
            m.seeds = j.value("seeds", json::object());
            m.inputs = j.value("inputs", json::object());
            m.outputs = j.value("outputs", std::vector<std::string>{});
            m.tool_version = j.value("tool_version", std::string{});
            m.timestamp = j.value("timestamp", std::string{});
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
        }
        return m;
    }
};

inline std::string manifest_path_for(const std::string& out) { return out + ".manifest.json"; }

// ---------------------------------------------------------------------------
// Run context

struct Context {
    std::ostream& out;
    std::ostream& err;
    // Set by replay: use this config snapshot instead of reading any file.
    std::optional<json> config_snapshot;
};

struct Invocation {
    std::vector<std::string> argv;
    RunManifest manifest;
    Settings settings;

    void record_input(const std::string& path, const std::string& bytes) { manifest.inputs[path] = fnv1a_hex(bytes); }

    std::string read_input(const std::string& path) {
        std::string text = read_file(path);
        record_input(path, text);
        return text;
    }

    Scenario load_scenario(const std::string& path) {
        const std::string text = read_input(path);
        try {
            return parse_scenario(text);
        } catch (const Error& e) {
            throw Error(e.code(), path + ": " + e.message());
        }
    }

    void finish(const std::string& manifest_path) {
        manifest.timestamp = utc_timestamp();
        write_text(manifest_path, manifest.to_json().dump(2) + "\n");
    }
};

// ---------------------------------------------------------------------------
// Commands

struct GenerateArgs {
    std::optional<std::size_t> sp_count, vc_edges, uav_count;
    std::optional<int> vm_total, p;
    std::vector<std::string> tasks;
    std::string data_size, power_budget, noise, bandwidth, task_weight, exec_time, vc_weight, uav_height, space;
    std::optional<double> v2v_radius, uav_radius, alpha1, alpha2, g1;
    bool heterogeneous = false;
    bool large = false;
    std::uint64_t seed = 1;
    std::string out;
};

inline GenSpec apply(const GenerateArgs& a, GenSpec g) {
    if (a.sp_count) g.sp_count = *a.sp_count;
    if (a.vm_total) g.vm_total = *a.vm_total;
    if (a.vc_edges) g.vc_edge_count = *a.vc_edges;
    if (a.uav_count) g.uav_count = *a.uav_count;
    if (!a.tasks.empty()) {
        g.task_shapes.clear();
        for (const auto& t : a.tasks) g.task_shapes.push_back(load_task_shape(t));
    }
    if (a.large) g.large_contact_rates();
    auto iv = [](const std::string& text, const char* flag, Interval& out) {
        if (!text.empty()) out = parse_interval(text, flag);
    };
    iv(a.data_size, "--data-size", g.data_size);
    iv(a.power_budget, "--power-budget", g.power_budget);
    iv(a.noise, "--noise", g.noise);
    iv(a.bandwidth, "--bandwidth", g.bandwidth);
    iv(a.task_weight, "--task-weight", g.task_weight);
    iv(a.exec_time, "--exec-time", g.exec_time);
    iv(a.vc_weight, "--vc-weight", g.vc_weight);
    iv(a.uav_height, "--uav-height", g.uav_height);
    if (!a.space.empty()) {
        auto v = parse_numbers(a.space, 3, "--space");
        g.space = {v[0], v[1], v[2]};
    }
    if (a.v2v_radius) g.v2v_radius = *a.v2v_radius;
    if (a.uav_radius) g.uav_radius = *a.uav_radius;
    if (a.heterogeneous) g.heterogeneous_data = true;
    if (a.p) g.config.p = *a.p;
    if (a.alpha1) g.config.alpha1 = *a.alpha1;
    if (a.alpha2) g.config.alpha2 = *a.alpha2;
    if (a.g1) g.channel.g1 = *a.g1;
    return g;
}

inline int cmd_generate(Invocation& inv, const GenerateArgs& a, Context& ctx) {
    const GenSpec spec = apply(a, inv.settings.gen);
    inv.manifest.effective = {{"gen_spec", genspec_to_json(spec)}};
    inv.manifest.seeds = {{"scenario", a.seed}};
    const Scenario s = generate(spec, a.seed);
    save(s, a.out);
    inv.manifest.outputs = {a.out};
    inv.finish(manifest_path_for(a.out));
    ctx.out << "wrote " << a.out << " (" << s.vc.size() << " SPs, " << s.vc.total_vms() << " VMs, " << s.uavs.size()
            << " UAVs)\n";
    return kExitOk;
}

inline int cmd_fixture(Invocation& inv, const std::string& name, const std::string& out, Context& ctx) {
    if (name != "table2") throw Error(ErrorCode::InvalidArgument, "unknown fixture '" + name + "'");
    save(table2_fixture(), out);
    inv.manifest.effective = {{"fixture", name}};
    inv.manifest.outputs = {out};
    inv.finish(manifest_path_for(out));
    ctx.out << "wrote " << out << "\n";
    return kExitOk;
}

inline constexpr const char* kSearchStatsHeader = "method,templates_count,wall_time_s";

struct SearchArgs {
    std::string scenario;
    std::string method = "proposed";
    std::size_t iters = kRsaPresets[0];
    std::optional<std::size_t> limit;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    double esa_guard = kDefaultEsaGuard;
    std::string out;
};

inline std::vector<Template> run_search(const Scenario& s, const std::string& method, std::size_t iters,
                                        std::optional<std::size_t> limit, std::uint64_t seed, unsigned jobs,
                                        double esa_guard) {
    std::vector<Template> found;
    if (method == "proposed") {
        found = enumerate_templates(s, build_sequence(s), SearchOptions{limit, jobs});
    } else if (method == "esa") {
        found = esa(s, esa_guard);
    } else if (method == "rsa") {
        found = rsa(s, iters, seed);
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown search method '" + method + "' (proposed|esa|rsa)");
    }
    if (limit && method != "proposed" && found.size() > *limit) found.resize(*limit);
    return found;
}

inline int cmd_search(Invocation& inv, const SearchArgs& a, Context& ctx) {
    const Scenario s = inv.load_scenario(a.scenario);
    inv.manifest.effective = {{"method", a.method},
                              {"iters", a.iters},
                              {"limit", a.limit ? json(*a.limit) : json(nullptr)},
                              {"esa_guard", a.esa_guard}};
    inv.manifest.seeds = {{"rsa", a.seed}};
    const auto t0 = std::chrono::steady_clock::now();
    const auto found = run_search(s, a.method, a.iters, a.limit, a.seed, a.jobs, a.esa_guard);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(a.out, format_templates(s, found));
    const std::string stats = a.out + ".stats.csv";
    std::ostringstream row;
    row << kSearchStatsHeader << '\n' << a.method << ',' << found.size() << ',' << csv::num(wall) << '\n';
    write_text(stats, row.str());
    inv.manifest.outputs = {a.out, stats};
    inv.finish(manifest_path_for(a.out));
    ctx.out << a.method << ": " << found.size() << " templates\n";
    return kExitOk;
}

inline constexpr const char* kScheduleHeader =
    "scenario,method,p,feasible,F,time_term,energy_term,exchange_term,templates,feasible_templates,"
    "solves_attempted,solves_succeeded,capped,stochastic_samples,stochastic_mean_F,stochastic_std_F,reason,"
    "wall_time_s";

struct ScheduleArgs {
    std::string scenario;
    std::string method = "proposed";
    std::optional<int> p;
    std::optional<std::size_t> limit;
    std::uint64_t seed = 1;
    std::optional<std::size_t> ra_iters;
    std::size_t samples = 0;
    unsigned jobs = 1;
    std::string out;
};

inline int cmd_schedule(Invocation& inv, const ScheduleArgs& a, Context& ctx) {
    Scenario s = inv.load_scenario(a.scenario);
    if (a.p) {
        s.config.p = *a.p;
        s.config.validate();
    }
    ScheduleOptions opt;
    opt.allocator = parse_allocator(a.method);
    opt.alloc = inv.settings.alloc;
    opt.alloc.seed = a.seed;
    if (a.ra_iters) opt.alloc.ra_iters = *a.ra_iters;
    opt.search.limit = a.limit;
    opt.jobs = a.jobs;
    opt.stochastic_samples = a.samples;
    opt.stochastic_seed = a.seed;
    inv.manifest.effective = {{"method", a.method},
                              {"p", s.config.p},
                              {"limit", a.limit ? json(*a.limit) : json(nullptr)},
                              {"samples", a.samples},
                              {"ra_iters", opt.alloc.ra_iters},
                              {"solver", solver_to_json(opt.alloc.solver)},
                              {"annealing", annealing_to_json(opt.alloc.annealing)}};
    inv.manifest.seeds = {{"allocator", a.seed}, {"stochastic", a.seed}};

    const std::string tpl_path = a.out + ".template.txt", log_path = a.out + ".log.csv",
                      alloc_path = a.out + ".alloc.csv";
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<ScheduleResult> res;
    std::vector<TemplateScore> log;
    std::string reason;
    std::size_t enumerated = 0;
    try {
        res = schedule(s, opt);
        log = res->log;
        enumerated = res->templates_enumerated;
    } catch (const NoFeasibleSchedule& e) {
        log = e.log();
        enumerated = log.size();
        reason = e.what();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ostringstream row;
    row << kScheduleHeader << '\n'
        << csv::field(a.scenario) << ',' << a.method << ',' << s.config.p << ',' << (res ? 1 : 0) << ',';
    if (res) {
        const auto& b = res->breakdown;
        row << csv::num(b.total) << ',' << csv::num(b.time_term) << ',' << csv::num(b.energy_term) << ','
            << csv::num(b.exchange_term);
    } else {
        row << ",,,";
    }
    std::size_t feasible = 0;
    for (const auto& sc : log) feasible += sc.feasible;
    row << ',' << enumerated << ',' << feasible << ',' << (res ? std::to_string(res->solves_attempted) : "") << ','
        << (res ? std::to_string(res->solves_succeeded) : "") << ',' << (res && res->capped ? 1 : 0) << ',';
    if (res && res->stochastic)
        row << res->stochastic->samples << ',' << csv::num(res->stochastic->mean) << ','
            << csv::num(res->stochastic->stddev);
    else
        row << "0,,";
    row << ',' << csv::field(reason) << ',' << csv::num(wall) << '\n';
    write_text(a.out, row.str());

    std::ostringstream log_csv;
    csv::write_score_log(log_csv, s, log);
    write_text(log_path, log_csv.str());
    inv.manifest.outputs = {a.out, log_path};
    if (res) {
        write_text(tpl_path, format_templates(s, {res->best}));
        std::ostringstream alloc_csv;
        csv::write_allocations(alloc_csv, s, res->best, res->allocations);
        write_text(alloc_path, alloc_csv.str());
        inv.manifest.outputs.push_back(tpl_path);
        inv.manifest.outputs.push_back(alloc_path);
    }
    inv.finish(manifest_path_for(a.out));
    if (!res) {
        ctx.err << reason << "\n";
        return kExitBadInput;
    }
    ctx.out << a.method << ": F = " << csv::num(res->breakdown.total) << " over " << enumerated << " templates\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Benchmark sweeps

struct Sweep {
    std::string axis;  // sp_count | vm_total | uav_count | vc_edge_count | p
    std::vector<double> values;
    std::size_t scenarios = 10;
    std::uint64_t seed = 1;
    std::uint64_t allocator_seed = 1;
    bool require_templates = true;
    std::vector<std::string> search_methods{"proposed", "esa", "rsa"};
    std::vector<std::size_t> rsa_iters{kRsaPresets[0]};
    std::vector<Allocator> power_methods{std::begin(kAllAllocators), std::end(kAllAllocators)};
    std::optional<std::size_t> template_limit;
    double esa_guard = kDefaultEsaGuard;
    json base = json::object();

    static Sweep from_json(const json& j) {
        using agvsched::detail::field_error;
        Sweep w;
        detail::require_object(j, "sweep");
        if (!j.contains("schema_version") || j["schema_version"] != 1)
            throw Error(ErrorCode::SchemaVersionMismatch, "sweep schema_version must be 1");
        if (!j.contains("axis") || !j["axis"].is_string()) field_error("axis", "expected a string");
        w.axis = j["axis"].get<std::string>();
        static const std::vector<std::string> axes{"sp_count", "vm_total", "uav_count", "vc_edge_count", "p"};
        if (std::find(axes.begin(), axes.end(), w.axis) == axes.end())
            field_error("axis", "must be one of sp_count, vm_total, uav_count, vc_edge_count, p");
        if (!j.contains("values") || !j["values"].is_array() || j["values"].empty())
            field_error("values", "expected a non-empty array");
        for (std::size_t i = 0; i < j["values"].size(); ++i) {
            const auto& v = j["values"][i];
            if (!v.is_number_integer() || v.get<long long>() < 0)
                field_error("values[" + std::to_string(i) + "]", "expected a non-negative integer");
            w.values.push_back(v.get<double>());
        }
        detail::integer_field(j, "scenarios", w.scenarios, "");
        detail::integer_field(j, "seed", w.seed, "");
        detail::integer_field(j, "allocator_seed", w.allocator_seed, "");
        if (j.contains("require_templates")) w.require_templates = j["require_templates"].get<bool>();
        if (j.contains("search_methods")) w.search_methods = j["search_methods"].get<std::vector<std::string>>();
        for (const auto& m : w.search_methods)
            if (m != "proposed" && m != "esa" && m != "rsa") field_error("search_methods", "unknown method " + m);
        if (j.contains("rsa_iters")) w.rsa_iters = j["rsa_iters"].get<std::vector<std::size_t>>();
        if (j.contains("power_methods")) {
            w.power_methods.clear();
            for (const auto& m : j["power_methods"]) w.power_methods.push_back(parse_allocator(m.get<std::string>()));
        }
        if (j.contains("template_limit") && !j["template_limit"].is_null()) {
            std::size_t n = 0;
            detail::integer_field(j, "template_limit", n, "");
            w.template_limit = n;
        }
        detail::double_field(j, "esa_guard", w.esa_guard, "");
        if (j.contains("base")) {
            detail::require_object(j["base"], "base");
            w.base = j["base"];
        }
        if (w.scenarios == 0) field_error("scenarios", "must be positive");
        return w;
    }
};

inline constexpr const char* kBenchSearchHeader =
    "axis,value,method,scenarios,templates_count,templates_total,failures,wall_time_s";
inline constexpr const char* kBenchPowerHeader =
    "axis,value,method,p,scenarios,feasible,mean_F,common_scenarios,mean_F_common,wall_time_s";

inline void set_axis(GenSpec& g, const std::string& axis, double value) {
    const auto v = static_cast<std::size_t>(value);
    if (axis == "sp_count") g.sp_count = v;
    else if (axis == "vm_total") g.vm_total = static_cast<int>(v);
    else if (axis == "uav_count") g.uav_count = v;
    else if (axis == "vc_edge_count") g.vc_edge_count = v;
    else if (axis == "p") g.config.p = static_cast<int>(v);
}

/// Draws `count` scenarios from consecutive seeds; with require_templates,
/// seeds whose scenario admits no template are skipped.
inline std::vector<Scenario> sweep_batch(const GenSpec& g, const Sweep& w, unsigned jobs) {
    std::vector<Scenario> out;
    const std::size_t max_tries = 100 * w.scenarios;
    for (std::uint64_t i = 0; out.size() < w.scenarios; ++i) {
        if (i >= max_tries)
            throw Error(ErrorCode::UnsatisfiableSpec, "found only " + std::to_string(out.size()) + " of " +
                                                          std::to_string(w.scenarios) + " scenarios with templates in " +
                                                          std::to_string(max_tries) + " seeds");
        Scenario s = generate(g, w.seed + i);
        if (w.require_templates && enumerate_templates(s, build_sequence(s), SearchOptions{1, jobs}).empty()) continue;
        out.push_back(std::move(s));
    }
    return out;
}

inline int cmd_bench(Invocation& inv, const std::string& sweep_path, const std::string& out_dir, unsigned jobs,
                     Context& ctx) {
    const std::string text = inv.read_input(sweep_path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError,
                    sweep_path + ": " + agvsched::detail::line_col(text, e.byte ? e.byte - 1 : 0) + ": " + e.what());
    }
    Sweep w;
    GenSpec base = inv.settings.gen;
    try {
        w = Sweep::from_json(j);
        detail::genspec_update(base, w.base, "base");
    } catch (const Error& e) {
        throw Error(e.code(), sweep_path + ": " + e.message());
    }
    std::filesystem::create_directories(out_dir);
    inv.manifest.effective = {{"base", genspec_to_json(base)}, {"sweep", j}};
    inv.manifest.seeds = {{"scenarios", w.seed}, {"allocator", w.allocator_seed}};

    std::ostringstream search_csv, power_csv, cells_csv;
    search_csv << kBenchSearchHeader << '\n';
    power_csv << kBenchPowerHeader << '\n';
    cells_csv << "axis,value," << csv::kComparisonHeader << '\n';
    auto value_text = [](double v) { return std::to_string(static_cast<long long>(v)); };

    for (double value : w.values) {
        GenSpec g = base;
        set_axis(g, w.axis, value);
        const auto batch = sweep_batch(g, w, jobs);
        const std::string prefix = w.axis + "," + value_text(value) + ",";

        std::vector<std::pair<std::string, std::size_t>> methods;  // label, rsa iterations
        for (const auto& m : w.search_methods) {
            if (m == "rsa")
                for (std::size_t it : w.rsa_iters) methods.emplace_back("rsa-" + std::to_string(it), it);
            else
                methods.emplace_back(m, 0);
        }
        for (const auto& [label, iters] : methods) {
            const std::string method = iters ? "rsa" : label;
            std::size_t total = 0, failures = 0;
            double wall = 0.0;
            for (const auto& s : batch) {
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    total += run_search(s, method, iters, std::nullopt, w.allocator_seed ^ s.seed, jobs, w.esa_guard)
                                 .size();
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::InstanceTooLarge) throw;
                    ++failures;
                }
                wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
            const std::size_t ok = batch.size() - failures;
            search_csv << prefix << label << ',' << batch.size() << ','
                       << (ok ? csv::num(static_cast<double>(total) / static_cast<double>(ok)) : "") << ','
                       << (ok ? std::to_string(total) : "") << ',' << failures << ',' << csv::num(wall) << '\n';
        }

        ScheduleOptions opt;
        opt.alloc = inv.settings.alloc;
        opt.alloc.seed = w.allocator_seed;
        opt.search.limit = w.template_limit;
        opt.jobs = jobs;
        const auto rep = compare(batch, w.power_methods, opt);
        std::ostringstream cells;
        csv::write_comparison(cells, rep);
        std::string line;
        std::istringstream lines(cells.str());
        std::getline(lines, line);  // header
        while (std::getline(lines, line)) cells_csv << prefix << line << '\n';

        std::vector<bool> common(batch.size(), true);
        for (const auto& c : rep.cells) common[c.scenario] = common[c.scenario] && c.feasible;
        const auto n_common = static_cast<std::size_t>(std::count(common.begin(), common.end(), true));
        for (Allocator method : w.power_methods) {
            double sum = 0.0, sum_common = 0.0, wall = 0.0;
            std::size_t feasible = 0;
            for (const auto& c : rep.cells) {
                if (c.method != method) continue;
                wall += c.wall_time_s;
                if (!c.feasible) continue;
                ++feasible;
                sum += c.breakdown.total;
                if (common[c.scenario]) sum_common += c.breakdown.total;
            }
            power_csv << prefix << to_string(method) << ',' << g.config.p << ',' << batch.size() << ',' << feasible
                      << ',' << (feasible ? csv::num(sum / static_cast<double>(feasible)) : "") << ',' << n_common
                      << ',' << (n_common ? csv::num(sum_common / static_cast<double>(n_common)) : "") << ','
                      << csv::num(wall) << '\n';
        }
        ctx.out << w.axis << "=" << value_text(value) << ": " << batch.size() << " scenarios\n";
    }

    const auto dir = std::filesystem::path(out_dir);
    const std::string search_path = (dir / ("search_" + w.axis + ".csv")).string();
    const std::string power_path = (dir / ("power_" + w.axis + ".csv")).string();
    const std::string cells_path = (dir / ("cells_" + w.axis + ".csv")).string();
    write_text(search_path, search_csv.str());
    write_text(power_path, power_csv.str());
    write_text(cells_path, cells_csv.str());
    inv.manifest.outputs = {search_path, power_path, cells_path};
    inv.finish((dir / "manifest.json").string());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point

int run(const std::vector<std::string>& args, Context& ctx);

inline int cmd_replay(const std::string& manifest_path, const std::optional<std::string>& out, Context& ctx) {
    const std::string text = read_file(manifest_path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, manifest_path + ": " + e.what());
    }
    const RunManifest m = RunManifest::from_json(j);
    if (m.command == "replay") throw Error(ErrorCode::InvalidArgument, "cannot replay a replay manifest");
    std::vector<std::string> argv = m.argv;
    if (out) {
        bool replaced = false;
        for (std::size_t i = 0; i + 1 < argv.size(); ++i)
            if (argv[i] == "--out" || argv[i] == "-o") {
                argv[i + 1] = *out;
                replaced = true;
            }
        if (!replaced) throw Error(ErrorCode::InvalidArgument, "manifest argv has no --out to redirect");
    }
    for (const auto& [path, hash] : m.inputs.items()) {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) {
            ctx.err << "warning: input " << path << " is missing\n";
        } else if (fnv1a_hex(read_file(path)) != hash.get<std::string>()) {
            ctx.err << "warning: input " << path << " changed since the recorded run\n";
        }
    }
    Context inner{ctx.out, ctx.err, m.config};
    return run(argv, inner);
}

inline int run(const std::vector<std::string>& args, Context& ctx) {
    CLI::App app{"Template-based task scheduling and UAV power allocation for vehicular clouds", "agvsched"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    std::string config_path;
    app.add_option("--config", config_path, "Config file (JSON); defaults to $AGVSCHED_CONFIG");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate a random scenario");
    g->add_option("--sp-count", gen.sp_count, "Number of service providers");
    g->add_option("--vm-total", gen.vm_total, "Total idle VMs across SPs");
    g->add_option("--vc-edges", gen.vc_edges, "Exact number of VC edges (default: radius rule)");
    g->add_option("--uav-count", gen.uav_count, "Number of UAVs, one task each");
    g->add_option("--task", gen.tasks, "Task shape name (star-4, hub-6, ring-5, single) or shape file; repeatable");
    g->add_option("--data-size", gen.data_size, "D interval in bits, low,high");
    g->add_option("--power-budget", gen.power_budget, "Q interval in W, low,high");
    g->add_option("--noise", gen.noise, "N0 interval in W, low,high");
    g->add_option("--bandwidth", gen.bandwidth, "B interval in Hz, low,high");
    g->add_option("--task-weight", gen.task_weight, "Task edge weight interval, low,high");
    g->add_option("--exec-time", gen.exec_time, "Execution time interval in s, low,high");
    g->add_option("--vc-weight", gen.vc_weight, "VC edge contact rate interval, low,high");
    g->add_option("--uav-height", gen.uav_height, "UAV height interval in m, low,high");
    g->add_option("--space", gen.space, "Simulation box in m, x,y,z");
    g->add_option("--v2v-radius", gen.v2v_radius, "Planar distance for a VC edge (m)");
    g->add_option("--uav-radius", gen.uav_radius, "3-D coverage radius of a UAV (m)");
    g->add_option("--p", gen.p, "Norm order written into the scenario config");
    g->add_option("--alpha1", gen.alpha1, "Contact threshold for power allocation");
    g->add_option("--alpha2", gen.alpha2, "Contact threshold for template search");
    g->add_option("--g1", gen.g1, "A2G gain at 1 m");
    g->add_flag("--heterogeneous-data", gen.heterogeneous, "Draw D per component instead of per task");
    g->add_flag("--large", gen.large, "Use the large-problem contact-rate interval");
    g->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    g->add_option("-o,--out", gen.out, "Scenario file to write")->required();

    std::string fixture_name, fixture_out;
    auto* fx = app.add_subcommand("fixture", "Write a shipped scenario fixture");
    fx->add_option("name", fixture_name, "Fixture name (table2)")->required();
    fx->add_option("-o,--out", fixture_out, "Scenario file to write")->required();

    SearchArgs sea;
    auto* se = app.add_subcommand("search", "Enumerate templates of a scenario");
    se->add_option("scenario", sea.scenario, "Scenario file")->required();
    se->add_option("--method", sea.method, "proposed | esa | rsa")->capture_default_str();
    se->add_option("--iters", sea.iters, "RSA iterations")->capture_default_str();
    se->add_option("--limit", sea.limit, "Keep at most this many templates");
    se->add_option("--seed", sea.seed, "RSA seed")->capture_default_str();
    se->add_option("--esa-guard", sea.esa_guard, "Refuse ESA above this many assignments")->capture_default_str();
    se->add_option("--jobs", sea.jobs, "Worker threads")->capture_default_str();
    se->add_option("-o,--out", sea.out, "Templates file to write")->required();

    ScheduleArgs sch;
    auto* sc = app.add_subcommand("schedule", "Search templates, allocate power, pick the best schedule");
    sc->add_option("scenario", sch.scenario, "Scenario file")->required();
    sc->add_option("--method", sch.method, "proposed | ua | ra | ccpa | spsa")->capture_default_str();
    sc->add_option("--p", sch.p, "Override the norm order of the scenario");
    sc->add_option("--limit", sch.limit, "Score at most this many templates");
    sc->add_option("--seed", sch.seed, "Seed for stochastic allocators and shadowing")->capture_default_str();
    sc->add_option("--ra-iters", sch.ra_iters, "RA rejection-sampling attempts");
    sc->add_option("--samples", sch.samples, "Shadowing samples for the stochastic F summary")->capture_default_str();
    sc->add_option("--jobs", sch.jobs, "Worker threads")->capture_default_str();
    sc->add_option("-o,--out", sch.out, "Result CSV to write")->required();

    std::string sweep_path, bench_out;
    unsigned bench_jobs = 1;
    auto* be = app.add_subcommand("bench", "Run a benchmark sweep");
    be->add_option("sweep", sweep_path, "Sweep file (JSON)")->required();
    be->add_option("--jobs", bench_jobs, "Worker threads")->capture_default_str();
    be->add_option("-o,--out", bench_out, "Output directory")->required();

    std::string replay_manifest;
    std::optional<std::string> replay_out;
    auto* re = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
    re->add_option("manifest", replay_manifest, "Manifest file")->required();
    re->add_option("-o,--out", replay_out, "Write to this output instead of the recorded one");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        ctx.out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        ctx.out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        ctx.err << "error: " << e.what() << "\n";
        return kExitBadInput;
    }

    try {
        if (*re) return cmd_replay(replay_manifest, replay_out, ctx);

        Invocation inv;
        inv.argv = args;
        inv.manifest.argv = args;
        if (ctx.config_snapshot) {
            if (!ctx.config_snapshot->empty()) inv.settings = Settings::from_json(*ctx.config_snapshot);
        } else {
            if (config_path.empty())
                if (const char* env = std::getenv(kConfigEnv)) config_path = env;
            if (!config_path.empty()) inv.settings = Settings::from_file(config_path);
        }
        inv.manifest.config = inv.settings.source;

        if (*g) {
            inv.manifest.command = "generate";
            return cmd_generate(inv, gen, ctx);
        }
        if (*fx) {
            inv.manifest.command = "fixture";
            return cmd_fixture(inv, fixture_name, fixture_out, ctx);
        }
        if (*se) {
            inv.manifest.command = "search";
            return cmd_search(inv, sea, ctx);
        }
        if (*sc) {
            inv.manifest.command = "schedule";
            return cmd_schedule(inv, sch, ctx);
        }
        if (*be) {
            inv.manifest.command = "bench";
            return cmd_bench(inv, sweep_path, bench_out, bench_jobs, ctx);
        }
    } catch (const Error& e) {
        ctx.err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::NumericalFailure ? kExitInternal : kExitBadInput;
    } catch (const std::exception& e) {
        ctx.err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}

inline int run(int argc, char** argv) {
    Context ctx{std::cout, std::cerr, std::nullopt};
    return run(std::vector<std::string>(argv + 1, argv + argc), ctx);
}

}  // namespace agvsched::cli
