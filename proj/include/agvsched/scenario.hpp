#pragma once

// Scenario generation, validation, the reconstructed walkthrough fixture and
// the versioned JSON scenario file format.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agvsched/model.hpp"

namespace agvsched {

inline constexpr int kScenarioSchemaVersion = 1;

struct Interval {
    double low = 0.0;
    double high = 0.0;

    bool contains(double v) const noexcept { return v >= low && v <= high; }
    bool operator==(const Interval&) const = default;
};

/// Component names and edges of a task graph, without numeric attributes.
struct TaskShape {
    std::string name;
    std::vector<std::string> components;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    bool operator==(const TaskShape&) const = default;
};

namespace shapes {

inline TaskShape star4() { return {"star-4", {"h", "a", "b", "c"}, {{0, 1}, {0, 2}, {0, 3}}}; }

// Hub of degree 5 plus two chords between leaves.
inline TaskShape hub6() {
    return {"hub-6", {"h", "a", "b", "c", "d", "e"}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {1, 2}, {3, 4}}};
}

inline TaskShape ring5() { return {"ring-5", {"a", "b", "c", "d", "e"}, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}}}; }

inline TaskShape single() { return {"single", {"a"}, {}}; }

inline TaskShape by_name(const std::string& name) {
    if (name == "star-4") return star4();
    if (name == "hub-6") return hub6();
    if (name == "ring-5") return ring5();
    if (name == "single") return single();
    throw Error(ErrorCode::InvalidArgument, "unknown task shape '" + name + "'");
}

}  // namespace shapes

/// Parameters of a randomly generated scenario. Defaults match the small
/// problem-size setup; use large_contact_rates() for the large one.
struct GenSpec {
    std::size_t sp_count = 7;
    int vm_total = 8;
    std::optional<std::size_t> vc_edge_count;
    std::size_t uav_count = 1;
    std::vector<TaskShape> task_shapes{shapes::star4()};

    Interval data_size{500e3, 600e3};  // bits
    Interval power_budget{1.5, 2.0};   // W
    Interval noise{4e-3, 5e-3};        // W
    Interval bandwidth{10e6, 12e6};    // Hz
    Interval task_weight{0.1, 0.3};    // s
    Interval exec_time{0.1, 0.2};      // s
    Interval vc_weight{0.05, 0.06};    // 1/s
    Interval uav_height{80.0, 100.0};  // m
    Vec3 space{1000.0, 1000.0, 100.0};
    double v2v_radius = 300.0;
    double uav_radius = 500.0;
    bool heterogeneous_data = false;

    ChannelParams channel;
    SchedulingConfig config;

    void large_contact_rates() { vc_weight = {0.01, 0.02}; }

    void validate() const {
        auto fail = [](const std::string& m) { throw Error(ErrorCode::UnsatisfiableSpec, m); };
        if (sp_count == 0) fail("sp_count must be positive");
        if (vm_total < 0) fail("vm_total must be >= 0");
        if (uav_count == 0) fail("uav_count must be positive");
        if (task_shapes.empty()) fail("at least one task shape is required");
        for (auto [iv, name] : {std::pair{data_size, "data_size"},
                                {power_budget, "power_budget"},
                                {noise, "noise"},
                                {bandwidth, "bandwidth"},
                                {task_weight, "task_weight"},
                                {exec_time, "exec_time"},
                                {vc_weight, "vc_weight"},
                                {uav_height, "uav_height"}}) {
            if (!(iv.low <= iv.high)) fail(std::string(name) + " interval is empty");
            if (!(iv.low > 0.0)) fail(std::string(name) + " interval must be positive");
        }
        if (!(space[0] > 0 && space[1] > 0 && space[2] > 0)) fail("space dimensions must be positive");
        if (!(v2v_radius >= 0) || !(uav_radius >= 0)) fail("radii must be >= 0");
        if (vc_edge_count && *vc_edge_count > sp_count * (sp_count - 1) / 2)
            fail("vc_edge_count " + std::to_string(*vc_edge_count) + " exceeds the " +
                 std::to_string(sp_count * (sp_count - 1) / 2) + " possible SP pairs");
    }
};

/// Full invariant check; throws InvalidArgument naming the offending field.
inline void validate(const Scenario& s) {
    s.channel.validate();
    s.config.validate();
    breakpoint_distance(s.channel);
    if (s.tasks.size() != s.uavs.size())
        throw Error(ErrorCode::InvalidArgument, "expected one task per UAV");
    std::vector<bool> owned(s.uavs.size(), false);
    for (std::size_t t = 0; t < s.tasks.size(); ++t) {
        const auto owner = s.tasks[t].owner();
        if (owner >= s.uavs.size()) throw Error(ErrorCode::InvalidArgument, "tasks[" + std::to_string(t) + "].owner is unknown");
        if (owned[owner]) throw Error(ErrorCode::InvalidArgument, "uav " + s.uavs[owner].id + " owns two tasks");
        owned[owner] = true;
    }
    for (std::size_t m = 0; m < s.uavs.size(); ++m) {
        const auto& u = s.uavs[m];
        if (!(u.power_budget > 0.0)) throw Error(ErrorCode::InvalidArgument, "uavs[" + std::to_string(m) + "].power_budget must be > 0");
        if (!std::is_sorted(u.coverage.begin(), u.coverage.end()) ||
            std::adjacent_find(u.coverage.begin(), u.coverage.end()) != u.coverage.end())
            throw Error(ErrorCode::InvalidArgument, "uavs[" + std::to_string(m) + "].coverage must be sorted and unique");
        for (SpIndex k : u.coverage)
            if (k >= s.vc.size()) throw Error(ErrorCode::InvalidArgument, "uavs[" + std::to_string(m) + "].coverage references an unknown SP");
        for (std::size_t j = 0; j < m; ++j)
            if (s.uavs[j].id == u.id) throw Error(ErrorCode::InvalidArgument, "duplicate uav id " + u.id);
        for (SpIndex k = 0; k < s.vc.size(); ++k)
            if (!(distance(u.position, s.vc.sp(k).position) > 0.0))
                throw Error(ErrorCode::InvalidArgument, "uav " + u.id + " coincides with sp " + s.vc.sp(k).id);
        if (s.coverage_radius) {
            for (SpIndex k = 0; k < s.vc.size(); ++k) {
                const bool inside = distance(u.position, s.vc.sp(k).position) <= *s.coverage_radius;
                if (inside != u.covers(k))
                    throw Error(ErrorCode::InvalidArgument, "uavs[" + std::to_string(m) +
                                                                "].coverage disagrees with coverage_radius at sp " +
                                                                s.vc.sp(k).id);
            }
        }
    }
}

/// Deterministic random scenario for (spec, seed).
inline Scenario generate(const GenSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    auto draw = [&rng](Interval iv) { return std::uniform_real_distribution<double>(iv.low, iv.high)(rng); };

    std::vector<ServiceProvider> sps(spec.sp_count);
    for (std::size_t k = 0; k < sps.size(); ++k) {
        sps[k].id = "s" + std::to_string(k + 1);
        sps[k].position = {draw({0.0, spec.space[0]}), draw({0.0, spec.space[1]}), 0.0};
    }
    if (static_cast<std::size_t>(spec.vm_total) >= sps.size()) {
        for (auto& sp : sps) sp.vm_count = 1;
        std::uniform_int_distribution<std::size_t> pick(0, sps.size() - 1);
        for (int i = static_cast<int>(sps.size()); i < spec.vm_total; ++i) ++sps[pick(rng)].vm_count;
    } else {
        std::vector<std::size_t> order(sps.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (int i = 0; i < spec.vm_total; ++i) sps[order[static_cast<std::size_t>(i)]].vm_count = 1;
    }
    const double exec = draw(spec.exec_time);
    for (auto& sp : sps) sp.exec_time = exec;

    // Candidate V2V pairs ordered by planar distance (ties by index).
    struct Pair {
        double d;
        SpIndex a, b;
    };
    std::vector<Pair> pairs;
    for (SpIndex a = 0; a < sps.size(); ++a)
        for (SpIndex b = a + 1; b < sps.size(); ++b)
            pairs.push_back({planar_distance(sps[a].position, sps[b].position), a, b});
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.d < y.d; });
    std::size_t within = 0;
    while (within < pairs.size() && pairs[within].d <= spec.v2v_radius) ++within;
    const std::size_t edge_count = spec.vc_edge_count.value_or(within);
    pairs.resize(edge_count);
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
    std::vector<VcEdge> edges;
    for (const auto& p : pairs) edges.push_back({p.a, p.b, draw(spec.vc_weight)});

    Scenario s;
    s.vc = VcGraph(std::move(sps), std::move(edges));
    s.seed = seed;
    s.config = spec.config;
    s.channel = spec.channel;
    s.channel.bandwidth = draw(spec.bandwidth);
    s.channel.noise = draw(spec.noise);
    s.coverage_radius = spec.uav_radius;

    for (std::size_t m = 0; m < spec.uav_count; ++m) {
        Uav u;
        u.id = "u" + std::to_string(m + 1);
        u.position = {draw({0.0, spec.space[0]}), draw({0.0, spec.space[1]}), draw(spec.uav_height)};
        u.power_budget = draw(spec.power_budget);
        for (SpIndex k = 0; k < s.vc.size(); ++k)
            if (distance(u.position, s.vc.sp(k).position) <= spec.uav_radius) u.coverage.push_back(k);
        s.uavs.push_back(std::move(u));
    }
    for (std::size_t m = 0; m < spec.uav_count; ++m) {
        const auto& shape = spec.task_shapes[m % spec.task_shapes.size()];
        std::vector<Component> comps;
        const double shared = draw(spec.data_size);
        for (const auto& name : shape.components)
            comps.push_back({name, spec.heterogeneous_data ? draw(spec.data_size) : shared});
        std::vector<TaskEdge> tedges;
        for (auto [a, b] : shape.edges) tedges.push_back({a, b, draw(spec.task_weight)});
        s.tasks.emplace_back(m, std::move(comps), std::move(tedges));
    }
    validate(s);
    return s;
}

/// Reconstruction of the two-UAV walkthrough instance (tasks A-D and E-I).
///
/// VM counts: s2=1 s3=2 s4=1 s5=3 s6=2 s7=1 (s1 has none). Edges and their
/// evidence in the walkthrough:
///   s6-s3, s6-s5, s6-s7  D^s(s6) = 2+2+3+1 before any placement
///   s3-s5                I (after F on s6, G on s5) may use s3
///   s2-s5, s4-s5         A on s5 with B on s2 and C on s4
///   s2-s3, s2-s4         update column after A and B
/// Coverage: u1 = {s2,s3,s4,s5}, u2 = {s3,s5,s6,s7}.
inline Scenario table2_fixture() {
    std::vector<ServiceProvider> sps = {
        {"s1", {900.0, 900.0, 0.0}, 0, 0.15}, {"s2", {200.0, 300.0, 0.0}, 1, 0.15},
        {"s3", {400.0, 300.0, 0.0}, 2, 0.15}, {"s4", {200.0, 100.0, 0.0}, 1, 0.15},
        {"s5", {350.0, 150.0, 0.0}, 3, 0.15}, {"s6", {550.0, 200.0, 0.0}, 2, 0.15},
        {"s7", {700.0, 250.0, 0.0}, 1, 0.15},
    };
    std::vector<VcEdge> edges = {
        {1, 2, 0.052}, {1, 3, 0.055}, {1, 4, 0.051}, {2, 4, 0.054},
        {2, 5, 0.058}, {3, 4, 0.053}, {4, 5, 0.056}, {5, 6, 0.057},
    };
    Scenario s;
    s.vc = VcGraph(std::move(sps), std::move(edges));
    s.channel.bandwidth = 10e6;
    s.channel.noise = 4e-3;
    s.seed = 0;
    s.uavs = {
        {"u1", {300.0, 200.0, 90.0}, 2.0, {1, 2, 3, 4}},
        {"u2", {550.0, 220.0, 85.0}, 1.8, {2, 4, 5, 6}},
    };
    const double D = 550e3;
    s.tasks.emplace_back(0, std::vector<Component>{{"A", D}, {"B", D}, {"C", D}, {"D", D}},
                         std::vector<TaskEdge>{{0, 1, 0.2}, {0, 2, 0.15}, {0, 3, 0.25}});
    s.tasks.emplace_back(1, std::vector<Component>{{"E", D}, {"F", D}, {"G", D}, {"H", D}, {"I", D}},
                         std::vector<TaskEdge>{{0, 1, 0.12}, {0, 3, 0.18}, {1, 3, 0.22}, {1, 2, 0.28}, {1, 4, 0.1},
                                               {2, 4, 0.3}});
    validate(s);
    return s;
}

// ---------------------------------------------------------------------------
// File format

namespace detail {

using nlohmann::json;

[[noreturn]] inline void field_error(const std::string& path, const std::string& msg) {
    throw Error(ErrorCode::ParseError, "field '" + path + "': " + msg);
}

inline const json& member(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) field_error(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) field_error(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) field_error(path, "expected a number");
    return j.get<double>();
}

inline double number_at(const json& j, const std::string& key, const std::string& path) {
    return number(member(j, key, path), path.empty() ? key : path + "." + key);
}

inline std::string string_at(const json& j, const std::string& key, const std::string& path) {
    const auto& v = member(j, key, path);
    if (!v.is_string()) field_error(path + "." + key, "expected a string");
    return v.get<std::string>();
}

inline Vec3 vec3_at(const json& j, const std::string& key, const std::string& path) {
    const auto& v = member(j, key, path);
    const std::string p = path + "." + key;
    if (!v.is_array() || v.size() != 3) field_error(p, "expected [x, y, z]");
    return {number(v[0], p + "[0]"), number(v[1], p + "[1]"), number(v[2], p + "[2]")};
}

inline const json& array_at(const json& j, const std::string& key, const std::string& path) {
    const auto& v = member(j, key, path);
    if (!v.is_array()) field_error(path.empty() ? key : path + "." + key, "expected an array");
    return v;
}

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline nlohmann::json channel_to_json(const ChannelParams& c) {
    return {{"d0", c.d0},         {"pl0", c.pl0},   {"eta1", c.eta1}, {"eta2", c.eta2},
            {"sigma", c.sigma},   {"ht", c.ht},     {"hr", c.hr},     {"lambda", c.lambda},
            {"g1", c.g1},         {"eta3", c.eta3}, {"bandwidth", c.bandwidth}, {"noise", c.noise}};
}

inline nlohmann::json config_to_json(const SchedulingConfig& c) {
    return {{"omega1", c.omega1},           {"omega2", c.omega2},   {"omega3", c.omega3},
            {"alpha1", c.alpha1},           {"alpha2", c.alpha2},   {"tail_energy", c.tail_energy},
            {"p", c.p},                     {"cost_slope", c.cost_slope}, {"cost_offset", c.cost_offset}};
}

inline ChannelParams channel_from_json(const nlohmann::json& j, const std::string& path) {
    using detail::number_at;
    ChannelParams c;
    c.d0 = number_at(j, "d0", path);
    c.pl0 = number_at(j, "pl0", path);
    c.eta1 = number_at(j, "eta1", path);
    c.eta2 = number_at(j, "eta2", path);
    c.sigma = number_at(j, "sigma", path);
    c.ht = number_at(j, "ht", path);
    c.hr = number_at(j, "hr", path);
    c.lambda = number_at(j, "lambda", path);
    c.g1 = number_at(j, "g1", path);
    c.eta3 = number_at(j, "eta3", path);
    c.bandwidth = number_at(j, "bandwidth", path);
    c.noise = number_at(j, "noise", path);
    return c;
}

/// Reads a config object; missing keys keep their current values.
inline void config_update_from_json(SchedulingConfig& c, const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) detail::field_error(path, "expected an object");
    auto opt = [&](const char* key, double& out) {
        if (j.contains(key)) out = detail::number(j[key], path + "." + key);
    };
    opt("omega1", c.omega1);
    opt("omega2", c.omega2);
    opt("omega3", c.omega3);
    opt("alpha1", c.alpha1);
    opt("alpha2", c.alpha2);
    opt("tail_energy", c.tail_energy);
    opt("cost_slope", c.cost_slope);
    opt("cost_offset", c.cost_offset);
    if (j.contains("p")) {
        if (!j["p"].is_number_integer()) detail::field_error(path + ".p", "expected an integer");
        c.p = j["p"].get<int>();
    }
}

inline nlohmann::json to_json(const Scenario& s) {
    nlohmann::json j;
    j["schema_version"] = kScenarioSchemaVersion;
    j["seed"] = s.seed;
    j["channel"] = channel_to_json(s.channel);
    j["config"] = config_to_json(s.config);
    j["coverage_radius"] = s.coverage_radius ? nlohmann::json(*s.coverage_radius) : nlohmann::json(nullptr);
    auto& sps = j["sps"] = nlohmann::json::array();
    for (const auto& sp : s.vc.sps())
        sps.push_back({{"id", sp.id}, {"position", sp.position}, {"vm_count", sp.vm_count}, {"exec_time", sp.exec_time}});
    auto& edges = j["vc_edges"] = nlohmann::json::array();
    for (const auto& e : s.vc.edges())
        edges.push_back({{"a", s.vc.sp(e.a).id}, {"b", s.vc.sp(e.b).id}, {"weight", e.weight}});
    auto& uavs = j["uavs"] = nlohmann::json::array();
    for (const auto& u : s.uavs) {
        nlohmann::json cov = nlohmann::json::array();
        for (SpIndex k : u.coverage) cov.push_back(s.vc.sp(k).id);
        uavs.push_back({{"id", u.id}, {"position", u.position}, {"power_budget", u.power_budget}, {"coverage", cov}});
    }
    auto& tasks = j["tasks"] = nlohmann::json::array();
    for (const auto& t : s.tasks) {
        nlohmann::json comps = nlohmann::json::array(), tedges = nlohmann::json::array();
        for (const auto& c : t.components()) comps.push_back({{"id", c.id}, {"data_size", c.data_size}});
        for (const auto& e : t.edges())
            tedges.push_back({{"a", t.components()[e.a].id}, {"b", t.components()[e.b].id}, {"weight", e.weight}});
        tasks.push_back({{"owner", s.uavs.at(t.owner()).id}, {"components", comps}, {"edges", tedges}});
    }
    return j;
}

inline Scenario from_json(const nlohmann::json& j) {
    using namespace detail;
    if (!j.is_object()) field_error("<root>", "expected an object");
    if (!j.contains("schema_version")) field_error("schema_version", "missing");
    const auto& ver = j["schema_version"];
    if (!ver.is_number_integer()) field_error("schema_version", "expected an integer");
    if (ver.get<int>() != kScenarioSchemaVersion)
        throw Error(ErrorCode::SchemaVersionMismatch, "file has schema_version " + std::to_string(ver.get<int>()) +
                                                          ", expected " + std::to_string(kScenarioSchemaVersion));
    Scenario s;
    const auto& seed = member(j, "seed", "");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
        field_error("seed", "expected an unsigned integer");
    s.seed = seed.get<std::uint64_t>();
    s.channel = channel_from_json(member(j, "channel", ""), "channel");
    config_update_from_json(s.config, member(j, "config", ""), "config");
    if (j.contains("coverage_radius") && !j["coverage_radius"].is_null())
        s.coverage_radius = number(j["coverage_radius"], "coverage_radius");

    std::vector<ServiceProvider> sps;
    const auto& jsps = array_at(j, "sps", "");
    for (std::size_t k = 0; k < jsps.size(); ++k) {
        const std::string p = "sps[" + std::to_string(k) + "]";
        ServiceProvider sp;
        sp.id = string_at(jsps[k], "id", p);
        sp.position = vec3_at(jsps[k], "position", p);
        const auto& vm = member(jsps[k], "vm_count", p);
        if (!vm.is_number_integer()) field_error(p + ".vm_count", "expected an integer");
        sp.vm_count = vm.get<int>();
        if (sp.vm_count < 0) field_error(p + ".vm_count", "must be >= 0");
        sp.exec_time = number_at(jsps[k], "exec_time", p);
        if (!(sp.exec_time > 0.0)) field_error(p + ".exec_time", "must be > 0");
        sps.push_back(std::move(sp));
    }
    auto sp_index = [&](const std::string& id, const std::string& p) -> SpIndex {
        for (std::size_t k = 0; k < sps.size(); ++k)
            if (sps[k].id == id) return k;
        field_error(p, "unknown sp '" + id + "'");
    };
    std::vector<VcEdge> edges;
    const auto& jedges = array_at(j, "vc_edges", "");
    for (std::size_t i = 0; i < jedges.size(); ++i) {
        const std::string p = "vc_edges[" + std::to_string(i) + "]";
        VcEdge e{sp_index(string_at(jedges[i], "a", p), p + ".a"), sp_index(string_at(jedges[i], "b", p), p + ".b"),
                 number_at(jedges[i], "weight", p)};
        if (!(e.weight > 0.0)) field_error(p + ".weight", "must be > 0");
        edges.push_back(e);
    }
    try {
        s.vc = VcGraph(std::move(sps), std::move(edges));
    } catch (const Error& e) {
        field_error("vc_edges", e.message());
    }

    const auto& juavs = array_at(j, "uavs", "");
    for (std::size_t m = 0; m < juavs.size(); ++m) {
        const std::string p = "uavs[" + std::to_string(m) + "]";
        Uav u;
        u.id = string_at(juavs[m], "id", p);
        u.position = vec3_at(juavs[m], "position", p);
        u.power_budget = number_at(juavs[m], "power_budget", p);
        if (!(u.power_budget > 0.0)) field_error(p + ".power_budget", "must be > 0");
        const auto& cov = array_at(juavs[m], "coverage", p);
        for (std::size_t i = 0; i < cov.size(); ++i) {
            if (!cov[i].is_string()) field_error(p + ".coverage[" + std::to_string(i) + "]", "expected an sp id");
            const auto k = s.vc.index_of(cov[i].get<std::string>());
            if (!k) field_error(p + ".coverage[" + std::to_string(i) + "]", "unknown sp '" + cov[i].get<std::string>() + "'");
            u.coverage.push_back(*k);
        }
        std::sort(u.coverage.begin(), u.coverage.end());
        u.coverage.erase(std::unique(u.coverage.begin(), u.coverage.end()), u.coverage.end());
        s.uavs.push_back(std::move(u));
    }
    const auto& jtasks = array_at(j, "tasks", "");
    for (std::size_t t = 0; t < jtasks.size(); ++t) {
        const std::string p = "tasks[" + std::to_string(t) + "]";
        const std::string owner_id = string_at(jtasks[t], "owner", p);
        std::optional<UavIndex> owner;
        for (std::size_t m = 0; m < s.uavs.size(); ++m)
            if (s.uavs[m].id == owner_id) owner = m;
        if (!owner) field_error(p + ".owner", "unknown uav '" + owner_id + "'");
        std::vector<Component> comps;
        const auto& jc = array_at(jtasks[t], "components", p);
        for (std::size_t n = 0; n < jc.size(); ++n) {
            const std::string cp = p + ".components[" + std::to_string(n) + "]";
            Component c{string_at(jc[n], "id", cp), number_at(jc[n], "data_size", cp)};
            if (!(c.data_size > 0.0)) field_error(cp + ".data_size", "must be > 0");
            comps.push_back(std::move(c));
        }
        auto comp_index = [&](const std::string& id, const std::string& ep) -> std::size_t {
            for (std::size_t n = 0; n < comps.size(); ++n)
                if (comps[n].id == id) return n;
            field_error(ep, "unknown component '" + id + "'");
        };
        std::vector<TaskEdge> tedges;
        const auto& je = array_at(jtasks[t], "edges", p);
        for (std::size_t i = 0; i < je.size(); ++i) {
            const std::string ep = p + ".edges[" + std::to_string(i) + "]";
            TaskEdge e{comp_index(string_at(je[i], "a", ep), ep + ".a"), comp_index(string_at(je[i], "b", ep), ep + ".b"),
                       number_at(je[i], "weight", ep)};
            if (!(e.weight > 0.0)) field_error(ep + ".weight", "must be > 0");
            tedges.push_back(e);
        }
        try {
            s.tasks.emplace_back(*owner, std::move(comps), std::move(tedges));
        } catch (const Error& e) {
            field_error(p, e.message());
        }
    }
    try {
        validate(s);
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.message());
    }
    return s;
}

inline std::string to_text(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

inline Scenario parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
    return from_json(j);
}

inline void save(const Scenario& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    out << to_text(s);
    if (!out) throw Error(ErrorCode::InvalidArgument, "failed writing " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Scenario load(const std::string& path) {
    try {
        return parse_scenario(read_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::ParseError, path + ": " + e.message());
        throw;
    }
}

/// Task shape file: {"name": ..., "components": [...], "edges": [[a, b], ...]}.
inline TaskShape parse_task_shape(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
    TaskShape t;
    t.name = detail::string_at(j, "name", "");
    for (const auto& c : detail::array_at(j, "components", "")) {
        if (!c.is_string()) detail::field_error("components", "expected component names");
        t.components.push_back(c.get<std::string>());
    }
    const auto& edges = detail::array_at(j, "edges", "");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        const std::string p = "edges[" + std::to_string(i) + "]";
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned())
            detail::field_error(p, "expected [a, b] component indices");
        const auto a = e[0].get<std::size_t>(), b = e[1].get<std::size_t>();
        if (a >= t.components.size() || b >= t.components.size() || a == b)
            detail::field_error(p, "invalid component indices");
        t.edges.emplace_back(a, b);
    }
    return t;
}

}  // namespace agvsched
