#pragma once

// Domain types and closed-form channel, time, energy and objective formulas.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agvsched/error.hpp"

namespace agvsched {

using Vec3 = std::array<double, 3>;
using SpIndex = std::size_t;
using UavIndex = std::size_t;

inline double distance(const Vec3& a, const Vec3& b) noexcept {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double planar_distance(const Vec3& a, const Vec3& b) noexcept {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

/// Radio parameters shared by every link of a scenario.
///
/// V2V links follow a dual-slope path-loss model with a breakpoint derived
/// from the antenna heights; A2G links are line-of-sight dominated.
struct ChannelParams {
    double d0 = 10.0;          // reference distance (m)
    double pl0 = 63.3;         // path loss at d0 (dB)
    double eta1 = 2.0;         // exponent before the breakpoint
    double eta2 = 2.0;         // additional exponent past the breakpoint
    double sigma = 3.0;        // shadowing std-dev (dB)
    double ht = 1.5;           // antenna heights (m); ht == hr for V2V
    double hr = 1.5;
    double lambda = 0.0508;    // carrier wavelength (m), 5.9 GHz
    double g1 = 10.0;          // A2G gain at 1 m
    double eta3 = 2.0;         // A2G LoS exponent
    double bandwidth = 10e6;   // B (Hz)
    double noise = 4e-3;       // N0 (W)

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw Error(ErrorCode::InvalidArgument, std::string("channel.") + name + " must be > 0");
        };
        positive(d0, "d0");
        positive(pl0, "pl0");
        positive(eta1, "eta1");
        positive(eta2, "eta2");
        positive(sigma, "sigma");
        positive(ht, "ht");
        positive(hr, "hr");
        positive(lambda, "lambda");
        positive(g1, "g1");
        positive(eta3, "eta3");
        positive(bandwidth, "bandwidth");
        positive(noise, "noise");
        if (eta2 < eta1)
            throw Error(ErrorCode::InvalidArgument, "channel.eta2 must be >= eta1");
    }

    bool operator==(const ChannelParams&) const = default;
};

struct ServiceProvider {
    std::string id;
    Vec3 position{};
    int vm_count = 0;
    double exec_time = 0.15;  // per-VM execution time (s)

    bool operator==(const ServiceProvider&) const = default;
};

struct VcEdge {
    SpIndex a = 0;
    SpIndex b = 0;
    double weight = 0.0;  // exponential contact-duration rate (1/s)

    bool operator==(const VcEdge&) const = default;
};

/// The vehicular-cloud service graph: SPs with idle VMs and one-hop V2V links.
class VcGraph {
public:
    VcGraph() = default;

    VcGraph(std::vector<ServiceProvider> sps, std::vector<VcEdge> edges)
        : sps_(std::move(sps)), edges_(std::move(edges)) {
        adjacency_.assign(sps_.size(), {});
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            auto& e = edges_[i];
            if (e.a >= sps_.size() || e.b >= sps_.size())
                throw Error(ErrorCode::InvalidArgument, "vc edge " + std::to_string(i) + " references an unknown SP");
            if (e.a == e.b)
                throw Error(ErrorCode::InvalidArgument, "vc edge " + std::to_string(i) + " is a self-loop");
            if (!(e.weight > 0.0) || !std::isfinite(e.weight))
                throw Error(ErrorCode::InvalidArgument, "vc edge " + std::to_string(i) + " weight must be > 0");
            if (edge_weight(e.a, e.b))
                throw Error(ErrorCode::InvalidArgument, "vc edge " + std::to_string(i) + " duplicates an earlier edge");
            adjacency_[e.a].emplace_back(e.b, e.weight);
            adjacency_[e.b].emplace_back(e.a, e.weight);
        }
        for (auto& row : adjacency_) std::sort(row.begin(), row.end());
        for (std::size_t k = 0; k < sps_.size(); ++k) {
            if (sps_[k].vm_count < 0)
                throw Error(ErrorCode::InvalidArgument, "sp " + sps_[k].id + " has negative vm_count");
            if (!(sps_[k].exec_time > 0.0))
                throw Error(ErrorCode::InvalidArgument, "sp " + sps_[k].id + " exec_time must be > 0");
            for (std::size_t j = 0; j < k; ++j)
                if (sps_[j].id == sps_[k].id)
                    throw Error(ErrorCode::InvalidArgument, "duplicate sp id " + sps_[k].id);
        }
    }

    const std::vector<ServiceProvider>& sps() const noexcept { return sps_; }
    const std::vector<VcEdge>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return sps_.size(); }
    const ServiceProvider& sp(SpIndex k) const { return sps_.at(k); }

    /// Neighbors of k with the connecting edge weight, sorted by SP index.
    const std::vector<std::pair<SpIndex, double>>& neighbors(SpIndex k) const { return adjacency_.at(k); }

    std::optional<double> edge_weight(SpIndex a, SpIndex b) const {
        if (a >= adjacency_.size()) return std::nullopt;
        const auto& row = adjacency_[a];
        auto it = std::lower_bound(row.begin(), row.end(), std::pair<SpIndex, double>{b, -INFINITY});
        if (it != row.end() && it->first == b) return it->second;
        return std::nullopt;
    }

    std::optional<SpIndex> index_of(const std::string& id) const {
        for (std::size_t k = 0; k < sps_.size(); ++k)
            if (sps_[k].id == id) return k;
        return std::nullopt;
    }

    int total_vms() const noexcept {
        int sum = 0;
        for (const auto& s : sps_) sum += s.vm_count;
        return sum;
    }

    bool operator==(const VcGraph& other) const { return sps_ == other.sps_ && edges_ == other.edges_; }

private:
    std::vector<ServiceProvider> sps_;
    std::vector<VcEdge> edges_;
    std::vector<std::vector<std::pair<SpIndex, double>>> adjacency_;
};

struct Component {
    std::string id;
    double data_size = 0.0;  // bits

    bool operator==(const Component&) const = default;
};

struct TaskEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 0.0;  // required connect duration (s)

    bool operator==(const TaskEdge&) const = default;
};

/// An undirected graph task carried by one UAV.
class GraphTask {
public:
    GraphTask() = default;

    GraphTask(UavIndex owner, std::vector<Component> components, std::vector<TaskEdge> edges)
        : owner_(owner), components_(std::move(components)), edges_(std::move(edges)) {
        adjacency_.assign(components_.size(), {});
        for (std::size_t i = 0; i < components_.size(); ++i) {
            if (!(components_[i].data_size > 0.0) || !std::isfinite(components_[i].data_size))
                throw Error(ErrorCode::InvalidArgument, "component " + components_[i].id + " data_size must be > 0");
            for (std::size_t j = 0; j < i; ++j)
                if (components_[j].id == components_[i].id)
                    throw Error(ErrorCode::InvalidArgument, "duplicate component id " + components_[i].id);
        }
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            const auto& e = edges_[i];
            if (e.a >= components_.size() || e.b >= components_.size())
                throw Error(ErrorCode::InvalidArgument, "task edge " + std::to_string(i) + " references an unknown component");
            if (e.a == e.b)
                throw Error(ErrorCode::InvalidArgument, "task edge " + std::to_string(i) + " is a self-loop");
            if (!(e.weight > 0.0) || !std::isfinite(e.weight))
                throw Error(ErrorCode::InvalidArgument, "task edge " + std::to_string(i) + " weight must be > 0");
            if (edge_between(e.a, e.b))
                throw Error(ErrorCode::InvalidArgument, "task edge " + std::to_string(i) + " duplicates an earlier edge");
            adjacency_[e.a].push_back(i);
            adjacency_[e.b].push_back(i);
        }
    }

    UavIndex owner() const noexcept { return owner_; }
    const std::vector<Component>& components() const noexcept { return components_; }
    const std::vector<TaskEdge>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return components_.size(); }

    /// Indices into edges() of the edges incident to component n.
    const std::vector<std::size_t>& incident(std::size_t n) const { return adjacency_.at(n); }

    std::optional<std::size_t> edge_between(std::size_t a, std::size_t b) const {
        if (a >= adjacency_.size()) return std::nullopt;
        for (std::size_t i : adjacency_[a]) {
            const auto& e = edges_[i];
            if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return i;
        }
        return std::nullopt;
    }

    std::size_t other_end(std::size_t edge, std::size_t n) const {
        const auto& e = edges_.at(edge);
        return e.a == n ? e.b : e.a;
    }

    std::optional<std::size_t> index_of(const std::string& id) const {
        for (std::size_t n = 0; n < components_.size(); ++n)
            if (components_[n].id == id) return n;
        return std::nullopt;
    }

    bool operator==(const GraphTask& o) const {
        return owner_ == o.owner_ && components_ == o.components_ && edges_ == o.edges_;
    }

private:
    UavIndex owner_ = 0;
    std::vector<Component> components_;
    std::vector<TaskEdge> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

struct Uav {
    std::string id;
    Vec3 position{};
    double power_budget = 2.0;       // Q (W)
    std::vector<SpIndex> coverage;   // sorted SP indices R_m

    bool covers(SpIndex k) const { return std::binary_search(coverage.begin(), coverage.end(), k); }

    bool operator==(const Uav&) const = default;
};

struct SchedulingConfig {
    double omega1 = 1.0 / 3.0;
    double omega2 = 1.0 / 3.0;
    double omega3 = 1.0 / 3.0;
    double alpha1 = 0.9;       // contact threshold used by power allocation
    double alpha2 = 0.9;       // contact threshold used by template search
    double tail_energy = 0.1;  // J
    int p = 3;                 // norm order of the time surrogate
    double cost_slope = 0.15;
    double cost_offset = 0.001;

    void validate() const {
        if (!(omega1 >= 0.0) || !(omega2 >= 0.0) || !(omega3 >= 0.0))
            throw Error(ErrorCode::InvalidArgument, "config.omega* must be >= 0");
        if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw Error(ErrorCode::InvalidArgument, "config.alpha1 must lie in (0,1)");
        if (!(alpha2 > 0.0 && alpha2 < 1.0)) throw Error(ErrorCode::InvalidArgument, "config.alpha2 must lie in (0,1)");
        if (p < 1) throw Error(ErrorCode::InvalidArgument, "config.p must be >= 1");
        if (!(tail_energy >= 0.0)) throw Error(ErrorCode::InvalidArgument, "config.tail_energy must be >= 0");
    }

    bool operator==(const SchedulingConfig&) const = default;
};

/// A complete problem instance. Exactly one task per UAV.
struct Scenario {
    VcGraph vc;
    std::vector<Uav> uavs;
    std::vector<GraphTask> tasks;
    ChannelParams channel;
    SchedulingConfig config;
    std::uint64_t seed = 0;
    // When set, every coverage set must equal the SPs within this 3-D radius.
    std::optional<double> coverage_radius;

    std::size_t component_count() const noexcept {
        std::size_t n = 0;
        for (const auto& t : tasks) n += t.size();
        return n;
    }

    /// Offset of task t's first component in the flattened component order.
    std::size_t offset(std::size_t task) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < task; ++i) n += tasks.at(i).size();
        return n;
    }

    /// (task index, local component index) of a flattened component index.
    std::pair<std::size_t, std::size_t> locate(std::size_t global) const {
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            if (global < tasks[t].size()) return {t, global};
            global -= tasks[t].size();
        }
        throw Error(ErrorCode::InvalidArgument, "component index out of range");
    }

    std::size_t task_of(UavIndex m) const {
        for (std::size_t t = 0; t < tasks.size(); ++t)
            if (tasks[t].owner() == m) return t;
        throw Error(ErrorCode::InvalidArgument, "uav " + std::to_string(m) + " has no task");
    }

    bool operator==(const Scenario&) const = default;
};

/// One feasible mapping: assignment[g] is the SP hosting flattened component g.
struct Template {
    std::vector<SpIndex> assignment;

    auto operator<=>(const Template&) const = default;
};

struct SolverDiagnostics {
    int iterations = 0;
    double final_mu = 0.0;
    double kkt_residual = 0.0;

    bool operator==(const SolverDiagnostics&) const = default;
};

/// Per-UAV power split over the SPs its components use.
struct PowerAllocation {
    std::vector<SpIndex> sps;   // sorted
    std::vector<double> power;  // W, aligned with sps
    std::vector<double> rate;   // bit/s, aligned with sps
    SolverDiagnostics diagnostics;

    std::optional<double> power_at(SpIndex k) const {
        auto it = std::lower_bound(sps.begin(), sps.end(), k);
        if (it == sps.end() || *it != k) return std::nullopt;
        return power[static_cast<std::size_t>(it - sps.begin())];
    }

    double total_power() const noexcept {
        double s = 0.0;
        for (double q : power) s += q;
        return s;
    }
};

struct ObjectiveBreakdown {
    double total = 0.0;
    double time_term = 0.0;      // sum of completion times (s)
    double energy_term = 0.0;    // sum of UAV energies (J)
    double exchange_term = 0.0;  // data-exchange cost over distinct cross-SP task edges
};

// ---------------------------------------------------------------------------
// Channel formulas

inline double breakpoint_distance(const ChannelParams& ch) {
    if (!(ch.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
    const double db = 4.0 * ch.ht * ch.hr / ch.lambda - ch.lambda / 4.0;
    if (!(db > 0.0))
        throw Error(ErrorCode::NonPositiveBreakpoint, "breakpoint distance " + std::to_string(db) + " m");
    return db;
}

/// Dual-slope V2V path loss (dB) at distance d; shadowing_db is X_sigma.
inline double v2v_path_loss(double d, const ChannelParams& ch, double shadowing_db = 0.0) {
    if (d < ch.d0)
        throw Error(ErrorCode::BelowReferenceDistance, "distance " + std::to_string(d) + " m is below d0");
    const double db = breakpoint_distance(ch);
    double pl = ch.pl0 + 10.0 * ch.eta1 * std::log10(d / ch.d0);
    if (d > db) pl += 10.0 * ch.eta2 * std::log10(d / db);
    return pl + shadowing_db;
}

/// Cost of exchanging intermediate data between SPs k and k2; zero when co-located.
/// Distances below d0 are evaluated at d0.
inline double exchange_cost(const Scenario& s, SpIndex k, SpIndex k2, double shadowing_db = 0.0) {
    if (k == k2) return 0.0;
    const double d = std::max(distance(s.vc.sp(k).position, s.vc.sp(k2).position), s.channel.d0);
    return s.config.cost_slope * v2v_path_loss(d, s.channel, shadowing_db) + s.config.cost_offset;
}

/// Exchange cost of task edge (n, n2) of `task` when n sits on k and n2 on k2.
inline double pairwise_exchange_cost(const Scenario& s, std::size_t task, std::size_t n, std::size_t n2, SpIndex k,
                                     SpIndex k2) {
    if (!s.tasks.at(task).edge_between(n, n2))
        throw Error(ErrorCode::NotATaskEdge, "components " + std::to_string(n) + " and " + std::to_string(n2) +
                                                 " are not adjacent");
    return exchange_cost(s, k, k2);
}

inline double a2g_gain(const Uav& uav, const ServiceProvider& sp, const ChannelParams& ch) {
    const double d = distance(uav.position, sp.position);
    if (!(d > 0.0)) throw Error(ErrorCode::ZeroDistance, "uav " + uav.id + " coincides with sp " + sp.id);
    return ch.g1 * std::pow(d, -ch.eta3);
}

/// Shannon rate B*log2(1 + q*g/N0) in bit/s.
inline double rate(double q, double g, const ChannelParams& ch) {
    if (q < 0.0) throw Error(ErrorCode::NegativePower, "power " + std::to_string(q) + " W");
    return ch.bandwidth * std::log1p(q * g / ch.noise) / std::numbers::ln2;
}

// ---------------------------------------------------------------------------
// Per-UAV time and energy

/// Total bits of `task` placed on each SP, ordered by SP index.
inline std::vector<std::pair<SpIndex, double>> sp_loads(const Scenario& s, const Template& tpl, std::size_t task) {
    std::map<SpIndex, double> loads;
    const std::size_t base = s.offset(task);
    const auto& comps = s.tasks.at(task).components();
    for (std::size_t n = 0; n < comps.size(); ++n) loads[tpl.assignment.at(base + n)] += comps[n].data_size;
    return {loads.begin(), loads.end()};
}

namespace detail {

struct LinkTerm {
    double load;
    double power;
    double rate;
};

inline std::vector<LinkTerm> link_terms(const Scenario& s, const Template& tpl, UavIndex m,
                                        const PowerAllocation& alloc) {
    const std::size_t task = s.task_of(m);
    std::vector<LinkTerm> terms;
    for (auto [k, bits] : sp_loads(s, tpl, task)) {
        auto q = alloc.power_at(k);
        if (!q || !(*q > 0.0))
            throw Error(ErrorCode::MissingRate, "uav " + s.uavs.at(m).id + " has no power on sp " + s.vc.sp(k).id);
        const double g = a2g_gain(s.uavs.at(m), s.vc.sp(k), s.channel);
        terms.push_back({bits, *q, rate(*q, g, s.channel)});
    }
    return terms;
}

}  // namespace detail

/// Completion time of UAV m's task: slowest SP transmission plus execution time.
inline double completion_time(const Scenario& s, const Template& tpl, UavIndex m, const PowerAllocation& alloc) {
    double slowest = 0.0;
    double exec = 0.0;
    const std::size_t task = s.task_of(m);
    for (auto [k, bits] : sp_loads(s, tpl, task)) exec = std::max(exec, s.vc.sp(k).exec_time);
    for (const auto& t : detail::link_terms(s, tpl, m, alloc)) slowest = std::max(slowest, t.load / t.rate);
    return slowest + exec;
}

/// Transmission energy of UAV m plus the tail energy.
inline double uav_energy(const Scenario& s, const Template& tpl, UavIndex m, const PowerAllocation& alloc) {
    double e = 0.0;
    for (const auto& t : detail::link_terms(s, tpl, m, alloc)) e += t.power * t.load / t.rate;
    return e + s.config.tail_energy;
}

/// Exchange cost summed over distinct task edges whose endpoints land on different SPs.
inline double exchange_term(const Scenario& s, const Template& tpl) {
    double sum = 0.0;
    for (std::size_t t = 0; t < s.tasks.size(); ++t) {
        const std::size_t base = s.offset(t);
        for (const auto& e : s.tasks[t].edges()) {
            const SpIndex k = tpl.assignment.at(base + e.a), k2 = tpl.assignment.at(base + e.b);
            if (k != k2) sum += exchange_cost(s, k, k2);
        }
    }
    return sum;
}

/// Weighted system objective for a template and one allocation per UAV.
inline ObjectiveBreakdown objective(const Scenario& s, const Template& tpl, const std::vector<PowerAllocation>& allocs) {
    if (allocs.size() != s.uavs.size())
        throw Error(ErrorCode::InvalidArgument, "objective needs one allocation per UAV");
    ObjectiveBreakdown out;
    for (UavIndex m = 0; m < s.uavs.size(); ++m) {
        out.time_term += completion_time(s, tpl, m, allocs[m]);
        out.energy_term += uav_energy(s, tpl, m, allocs[m]);
    }
    out.exchange_term = exchange_term(s, tpl);
    out.total = s.config.omega1 * out.time_term + s.config.omega2 * out.energy_term +
                s.config.omega3 * out.exchange_term;
    return out;
}

}  // namespace agvsched
