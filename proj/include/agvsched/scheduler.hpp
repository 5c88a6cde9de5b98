#pragma once

// End-to-end scheduling: enumerate templates, allocate power per UAV with a
// chosen allocator, score the full objective and keep the argmin. Also the
// batch comparison across allocators and the CSV writers for both.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <thread>
#include <variant>

#include "agvsched/power.hpp"
#include "agvsched/search.hpp"

namespace agvsched {

enum class Allocator { Proposed, UA, RA, CCPA, SPSA };

inline constexpr Allocator kAllAllocators[] = {Allocator::Proposed, Allocator::UA, Allocator::RA, Allocator::CCPA,
                                               Allocator::SPSA};

inline std::string to_string(Allocator a) {
    switch (a) {
        case Allocator::Proposed: return "proposed";
        case Allocator::UA: return "ua";
        case Allocator::RA: return "ra";
        case Allocator::CCPA: return "ccpa";
        case Allocator::SPSA: return "spsa";
    }
    return "?";
}

inline Allocator parse_allocator(const std::string& s) {
    for (Allocator a : kAllAllocators)
        if (to_string(a) == s) return a;
    throw Error(ErrorCode::InvalidArgument, "unknown power method '" + s + "'");
}

struct AllocatorOptions {
    SolverOptions solver;
    std::uint64_t seed = 0;  // base seed for RA and SPSA
    std::size_t ra_iters = kDefaultRaIters;
    AnnealingSchedule annealing;
};

namespace detail {

// Stable 64-bit FNV-1a over a power problem, used to derive per-problem seeds
// that do not depend on evaluation order.
inline std::uint64_t problem_hash(const PowerProblem& pr) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const void* data, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) h = (h ^ b[i]) * 1099511628211ULL;
    };
    mix(&pr.uav, sizeof pr.uav);
    for (std::size_t k = 0; k < pr.size(); ++k) {
        mix(&pr.sps[k], sizeof pr.sps[k]);
        mix(&pr.load[k], sizeof pr.load[k]);
    }
    for (const auto& g : pr.gaps) {
        mix(&g.i, sizeof g.i);
        mix(&g.j, sizeof g.j);
        mix(&g.bound, sizeof g.bound);
    }
    mix(&pr.p, sizeof pr.p);
    return h;
}

}  // namespace detail

/// Power allocation for one problem under the chosen method.
inline PowerAllocation allocate(const PowerProblem& pr, Allocator method, const AllocatorOptions& opt = {}) {
    if (pr.size() == 0) return {};
    const std::uint64_t seed = opt.seed ^ detail::problem_hash(pr);
    switch (method) {
        case Allocator::Proposed: return solve_p4(pr, opt.solver).allocation;
        case Allocator::UA: return ua(pr);
        case Allocator::RA: return ra(pr, seed, opt.ra_iters);
        case Allocator::CCPA: return ccpa(pr);
        case Allocator::SPSA: return spsa(pr, opt.annealing, seed);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown allocator");
}

struct TemplateScore {
    std::size_t id = 0;  // position in canonical order
    Template tpl;
    bool feasible = false;
    ObjectiveBreakdown breakdown;
    std::optional<ErrorCode> failure;
    std::string reason;
};

struct StochasticSummary {
    std::size_t samples = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct ScheduleResult {
    Template best;
    std::vector<PowerAllocation> allocations;  // one per UAV
    ObjectiveBreakdown breakdown;
    std::vector<TemplateScore> log;            // canonical template order
    std::size_t templates_enumerated = 0;
    std::size_t solves_attempted = 0;  // distinct per-UAV problems
    std::size_t solves_succeeded = 0;
    bool capped = false;  // best of a truncated enumeration
    std::optional<StochasticSummary> stochastic;
};

/// Raised when no template admits a feasible allocation; carries the log.
class NoFeasibleSchedule : public Error {
public:
    NoFeasibleSchedule(std::string what, std::vector<TemplateScore> log)
        : Error(ErrorCode::NoFeasibleSchedule, std::move(what)), log_(std::move(log)) {}
    const std::vector<TemplateScore>& log() const noexcept { return log_; }

private:
    std::vector<TemplateScore> log_;
};

struct ScheduleOptions {
    Allocator allocator = Allocator::Proposed;
    AllocatorOptions alloc;
    SearchOptions search;
    unsigned jobs = 1;
    std::size_t stochastic_samples = 0;  // 0 keeps scoring deterministic only
    std::uint64_t stochastic_seed = 0;
};

/// Mean and standard deviation of F when each cross-SP exchange draws its own
/// Gaussian shadowing term.
inline StochasticSummary stochastic_objective(const Scenario& s, const Template& tpl,
                                              const std::vector<PowerAllocation>& allocs, std::size_t samples,
                                              std::uint64_t seed) {
    const ObjectiveBreakdown det = objective(s, tpl, allocs);
    const double fixed = det.total - s.config.omega3 * det.exchange_term;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> shadow(0.0, s.channel.sigma);
    std::vector<double> values;
    for (std::size_t i = 0; i < samples; ++i) {
        double ex = 0.0;
        for (std::size_t t = 0; t < s.tasks.size(); ++t) {
            const std::size_t base = s.offset(t);
            for (const auto& e : s.tasks[t].edges()) {
                const SpIndex k = tpl.assignment[base + e.a], k2 = tpl.assignment[base + e.b];
                if (k != k2) ex += exchange_cost(s, k, k2, shadow(rng));
            }
        }
        values.push_back(fixed + s.config.omega3 * ex);
    }
    StochasticSummary out{samples, 0.0, 0.0};
    if (samples == 0) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(samples);
    for (double v : values) out.stddev += (v - out.mean) * (v - out.mean);
    out.stddev = samples > 1 ? std::sqrt(out.stddev / static_cast<double>(samples - 1)) : 0.0;
    return out;
}

/// Scores the given templates (any order) and returns the argmin.
inline ScheduleResult schedule_templates(const Scenario& s, std::vector<Template> templates,
                                         const ScheduleOptions& opt = {}) {
    std::sort(templates.begin(), templates.end());
    templates.erase(std::unique(templates.begin(), templates.end()), templates.end());
    ScheduleResult res;
    res.templates_enumerated = templates.size();

    // Build every per-UAV problem; identical problems are solved once.
    struct Cell {
        std::optional<std::size_t> problem;  // index into `unique`
        std::optional<ErrorCode> failure;
        std::string reason;
    };
    using Key = std::tuple<UavIndex, std::vector<SpIndex>, std::vector<double>, std::vector<GapConstraint>>;
    std::map<Key, std::size_t> index;
    std::vector<PowerProblem> unique;
    std::vector<std::vector<Cell>> cells(templates.size(), std::vector<Cell>(s.uavs.size()));
    for (std::size_t i = 0; i < templates.size(); ++i) {
        for (UavIndex m = 0; m < s.uavs.size(); ++m) {
            try {
                PowerProblem pr = build_problem(s, templates[i], m);
                Key key{m, pr.sps, pr.load, pr.gaps};
                auto [it, fresh] = index.try_emplace(std::move(key), unique.size());
                if (fresh) unique.push_back(std::move(pr));
                cells[i][m].problem = it->second;
            } catch (const Error& e) {
                cells[i][m].failure = e.code();
                cells[i][m].reason = e.what();
            }
        }
    }

    std::vector<std::variant<PowerAllocation, std::pair<ErrorCode, std::string>>> solved(unique.size());
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (std::size_t i; (i = cursor.fetch_add(1)) < unique.size();) {
            try {
                solved[i] = allocate(unique[i], opt.allocator, opt.alloc);
            } catch (const Error& e) {
                solved[i] = std::pair{e.code(), std::string(e.what())};
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(unique.size())));
    if (jobs <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    res.solves_attempted = unique.size();
    for (const auto& v : solved) res.solves_succeeded += std::holds_alternative<PowerAllocation>(v);

    std::optional<std::size_t> best;
    std::vector<std::vector<PowerAllocation>> best_allocs;
    for (std::size_t i = 0; i < templates.size(); ++i) {
        TemplateScore sc;
        sc.id = i;
        sc.tpl = templates[i];
        std::vector<PowerAllocation> allocs;
        for (UavIndex m = 0; m < s.uavs.size() && !sc.failure; ++m) {
            const Cell& c = cells[i][m];
            if (c.failure) {
                sc.failure = c.failure;
                sc.reason = c.reason;
            } else if (auto* a = std::get_if<PowerAllocation>(&solved[*c.problem])) {
                allocs.push_back(*a);
            } else {
                const auto& [code, why] = std::get<1>(solved[*c.problem]);
                sc.failure = code;
                sc.reason = s.uavs[m].id + ": " + why;
            }
        }
        if (!sc.failure) {
            sc.feasible = true;
            sc.breakdown = objective(s, templates[i], allocs);
            // Canonical order makes the first strict minimum the tie-break winner.
            if (!best || sc.breakdown.total < res.log[*best].breakdown.total) {
                best = i;
                best_allocs = {std::move(allocs)};
            }
        }
        res.log.push_back(std::move(sc));
    }
    if (!best) {
        throw NoFeasibleSchedule(templates.empty() ? "no templates" : "every template failed power allocation",
                                 std::move(res.log));
    }
    res.best = templates[*best];
    res.allocations = std::move(best_allocs.front());
    res.breakdown = res.log[*best].breakdown;
    if (opt.stochastic_samples > 0)
        res.stochastic =
            stochastic_objective(s, res.best, res.allocations, opt.stochastic_samples, opt.stochastic_seed);
    return res;
}

/// Full pipeline: exploration sequence, template enumeration, scoring.
inline ScheduleResult schedule(const Scenario& s, const ScheduleOptions& opt = {}) {
    SearchOptions so = opt.search;
    so.jobs = std::max(so.jobs, opt.jobs);
    auto templates = enumerate_templates(s, build_sequence(s), so);
    const bool capped = so.limit && templates.size() >= *so.limit;
    auto res = schedule_templates(s, std::move(templates), opt);
    res.capped = capped;
    return res;
}

// ---------------------------------------------------------------------------
// Batch comparison

struct ComparisonCell {
    std::size_t scenario = 0;
    Allocator method = Allocator::Proposed;
    bool feasible = false;
    ObjectiveBreakdown breakdown;
    std::size_t templates = 0;
    std::size_t feasible_templates = 0;
    std::string reason;
    double wall_time_s = 0.0;
};

struct MethodSummary {
    Allocator method = Allocator::Proposed;
    std::size_t cells = 0;
    std::size_t feasible = 0;
    double mean_f = 0.0;
    double median_f = 0.0;
    double failure_rate() const { return cells ? 1.0 - static_cast<double>(feasible) / static_cast<double>(cells) : 0.0; }
};

struct ComparisonReport {
    std::vector<Allocator> methods;
    std::vector<std::uint64_t> seeds;  // scenario seeds, batch order
    std::uint64_t allocator_seed = 0;
    std::vector<ComparisonCell> cells;  // scenario-major, then method order
    std::vector<MethodSummary> summary;
};

inline ComparisonReport compare(const std::vector<Scenario>& batch, const std::vector<Allocator>& methods,
                                const ScheduleOptions& base = {}) {
    if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty scenario batch");
    if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods");
    ComparisonReport rep;
    rep.methods = methods;
    rep.allocator_seed = base.alloc.seed;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Scenario& s = batch[i];
        rep.seeds.push_back(s.seed);
        SearchOptions so = base.search;
        so.jobs = std::max(so.jobs, base.jobs);
        const auto templates = enumerate_templates(s, build_sequence(s), so);
        for (Allocator method : methods) {
            ComparisonCell cell;
            cell.scenario = i;
            cell.method = method;
            cell.templates = templates.size();
            ScheduleOptions opt = base;
            opt.allocator = method;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                auto r = schedule_templates(s, templates, opt);
                cell.feasible = true;
                cell.breakdown = r.breakdown;
                for (const auto& sc : r.log) cell.feasible_templates += sc.feasible;
            } catch (const NoFeasibleSchedule& e) {
                cell.reason = e.what();
                if (!e.log().empty() && e.log().front().failure) cell.reason = to_string(*e.log().front().failure);
            } catch (const Error& e) {
                cell.reason = e.what();
            }
            cell.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rep.cells.push_back(std::move(cell));
        }
    }
    for (Allocator method : methods) {
        MethodSummary ms;
        ms.method = method;
        std::vector<double> fs;
        for (const auto& c : rep.cells) {
            if (c.method != method) continue;
            ++ms.cells;
            if (c.feasible) fs.push_back(c.breakdown.total);
        }
        ms.feasible = fs.size();
        if (!fs.empty()) {
            for (double f : fs) ms.mean_f += f;
            ms.mean_f /= static_cast<double>(fs.size());
            std::sort(fs.begin(), fs.end());
            ms.median_f = fs.size() % 2 ? fs[fs.size() / 2] : (fs[fs.size() / 2 - 1] + fs[fs.size() / 2]) / 2;
        }
        rep.summary.push_back(ms);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string field(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

inline constexpr const char* kScoreLogHeader =
    "template_id,template,feasible,F,time_term,energy_term,exchange_term,failure,reason";

inline void write_score_log(std::ostream& out, const Scenario& s, const std::vector<TemplateScore>& log) {
    out << kScoreLogHeader << '\n';
    for (const auto& sc : log) {
        out << sc.id << ',' << field(format_template(s, sc.tpl)) << ',' << (sc.feasible ? 1 : 0) << ',';
        if (sc.feasible)
            out << num(sc.breakdown.total) << ',' << num(sc.breakdown.time_term) << ',' << num(sc.breakdown.energy_term)
                << ',' << num(sc.breakdown.exchange_term);
        else
            out << ",,,";
        out << ',' << (sc.failure ? to_string(*sc.failure) : "") << ',' << field(sc.reason) << '\n';
    }
}

inline constexpr const char* kAllocationHeader =
    "uav,sp,power_w,rate_bps,tx_time_s,iterations,final_mu,kkt_residual";

inline void write_allocations(std::ostream& out, const Scenario& s, const Template& tpl,
                              const std::vector<PowerAllocation>& allocs) {
    out << kAllocationHeader << '\n';
    for (UavIndex m = 0; m < allocs.size(); ++m) {
        const auto loads = sp_loads(s, tpl, s.task_of(m));
        const auto& a = allocs[m];
        for (std::size_t k = 0; k < a.sps.size(); ++k) {
            out << s.uavs[m].id << ',' << s.vc.sp(a.sps[k]).id << ',' << num(a.power[k]) << ',' << num(a.rate[k])
                << ',' << num(loads[k].second / a.rate[k]) << ',' << a.diagnostics.iterations << ','
                << num(a.diagnostics.final_mu) << ',' << num(a.diagnostics.kkt_residual) << '\n';
        }
    }
}

inline constexpr const char* kComparisonHeader =
    "scenario,seed,method,feasible,F,time_term,energy_term,exchange_term,templates,feasible_templates,reason,wall_time_s";

inline void write_comparison(std::ostream& out, const ComparisonReport& rep) {
    out << kComparisonHeader << '\n';
    for (const auto& c : rep.cells) {
        out << c.scenario << ',' << rep.seeds[c.scenario] << ',' << to_string(c.method) << ',' << (c.feasible ? 1 : 0)
            << ',';
        if (c.feasible)
            out << num(c.breakdown.total) << ',' << num(c.breakdown.time_term) << ',' << num(c.breakdown.energy_term)
                << ',' << num(c.breakdown.exchange_term);
        else
            out << ",,,";
        out << ',' << c.templates << ',' << c.feasible_templates << ',' << field(c.reason) << ','
            << num(c.wall_time_s) << '\n';
    }
}

inline constexpr const char* kSummaryHeader = "method,cells,feasible,failure_rate,mean_F,median_F";

inline void write_summary(std::ostream& out, const ComparisonReport& rep) {
    out << kSummaryHeader << '\n';
    for (const auto& m : rep.summary)
        out << to_string(m.method) << ',' << m.cells << ',' << m.feasible << ',' << num(m.failure_rate()) << ','
            << (m.feasible ? num(m.mean_f) : "") << ',' << (m.feasible ? num(m.median_f) : "") << '\n';
}

}  // namespace csv

}  // namespace agvsched
