#pragma once

#include <agvsched/power.hpp>
#include <agvsched/scenario.hpp>
#include <agvsched/scheduler.hpp>
#include <agvsched/search.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace agvsched::testing {

inline TaskShape path_shape(std::size_t n) {
    TaskShape t{"path-" + std::to_string(n), {}, {}};
    for (std::size_t i = 0; i < n; ++i) t.components.push_back("c" + std::to_string(i));
    for (std::size_t i = 0; i + 1 < n; ++i) t.edges.emplace_back(i, i + 1);
    return t;
}

inline TaskShape triangle_shape() { return {"triangle", {"x", "y", "z"}, {{0, 1}, {1, 2}, {0, 2}}}; }

/// Random instance inside the oracle-equivalence size class: at most two
/// tasks, six components, eight SPs and ten VMs. The box is tighter than the
/// default so that a useful share of draws admits templates.
inline Scenario small_random_scenario(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    GenSpec g;
    g.sp_count = pick(3, 8);
    g.vm_total = static_cast<int>(pick(2, 10));
    g.uav_count = pick(1, 2);
    g.space = {600.0, 600.0, 100.0};
    g.v2v_radius = 350.0;
    g.uav_radius = 450.0;
    const std::vector<TaskShape> one_uav{shapes::star4(), shapes::ring5(), path_shape(3), triangle_shape(),
                                         shapes::single()};
    const std::vector<TaskShape> two_uav{path_shape(2), path_shape(3), triangle_shape(), shapes::single()};
    g.task_shapes.clear();
    if (g.uav_count == 1) {
        g.task_shapes.push_back(one_uav[pick(0, one_uav.size() - 1)]);
    } else {
        g.task_shapes.push_back(two_uav[pick(0, two_uav.size() - 1)]);
        g.task_shapes.push_back(two_uav[pick(0, two_uav.size() - 1)]);
    }
    return generate(g, seed);
}

/// Default-size single-UAV scenario with a 4- or 5-component task.
inline Scenario single_uav_scenario(std::uint64_t seed) {
    GenSpec g;
    g.task_shapes = {seed % 2 ? shapes::ring5() : shapes::star4()};
    return generate(g, seed);
}

/// Random power problem on n SPs with optional gap constraints between
/// consecutive SPs. Gains and loads follow the default generator ranges.
inline PowerProblem random_problem(std::mt19937_64& rng, std::size_t n, bool with_gaps) {
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    PowerProblem pr;
    pr.budget = uni(1.5, 2.0);
    pr.bandwidth = uni(10e6, 12e6);
    pr.noise = uni(4e-3, 5e-3);
    pr.omega1 = pr.omega2 = 1.0 / 3.0;
    pr.p = 3;
    for (std::size_t k = 0; k < n; ++k) {
        pr.sps.push_back(k);
        const double d = uni(90.0, 450.0);
        pr.gain.push_back(10.0 / (d * d));
        pr.load.push_back(550e3 * static_cast<double>(std::uniform_int_distribution<int>(1, 3)(rng)));
    }
    if (with_gaps)
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double wu = uni(0.1, 0.3), ws = uni(0.05, 0.06);
            const double bound = -(std::log(0.9) + wu * ws) / (550e3 * ws);
            if (bound > 0.0) pr.gaps.push_back({k, k + 1, bound});
        }
    return pr;
}

/// Grid oracle for problems with at most three SPs: minimises the surrogate
/// over a regular grid of `points` values per coordinate on a common rho box.
/// The box runs from the full-budget rho of the best link to the rho beyond
/// which the time term alone exceeds the objective at the equal-rho point that
/// spends the whole budget (always gap-feasible, so an upper bound).
inline std::optional<double> grid_minimum(const PowerProblem& pr, std::size_t points) {
    const std::size_t n = pr.size();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k < n; ++k) lo = std::min(lo, 1.0 / pr.link_rate(k, pr.budget));
    auto spend = [&](double rho) {
        double q = 0.0;
        for (std::size_t k = 0; k < n; ++k) q += pr.power_from_rho(k, rho);
        return q;
    };
    double a = lo, b = lo;
    while (spend(b) > pr.budget) b *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (a + b);
        (spend(mid) > pr.budget ? a : b) = mid;
    }
    const double f_ref = p4_objective(pr, std::vector<double>(n, b));
    for (std::size_t k = 0; k < n; ++k) hi = std::max(hi, std::pow(f_ref / pr.w1(k), 1.0 / pr.p));
    hi = std::max(hi, b);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    // Separable pieces tabulated per coordinate.
    std::vector<std::vector<double>> term(n, std::vector<double>(points)), power(n, std::vector<double>(points));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < points; ++i) {
            term[k][i] = p4_term(pr.w1(k), pr.w2(k), pr.bandwidth, pr.p, grid[i]);
            power[k][i] = pr.power_from_rho(k, grid[i]);
        }
    auto gaps_ok = [&](const std::vector<std::size_t>& idx) {
        for (const auto& c : pr.gaps)
            if (std::abs(grid[idx[c.i]] - grid[idx[c.j]]) > c.bound) return false;
        return true;
    };
    std::optional<double> best;
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        double q = 0.0, f = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            q += power[k][idx[k]];
            f += term[k][idx[k]];
        }
        if (q <= pr.budget && gaps_ok(idx) && (!best || f < *best)) best = f;
        std::size_t d = 0;
        while (d < n && ++idx[d] == points) idx[d++] = 0;
        if (d == n) break;
    }
    return best;
}

/// Per-UAV power problems of every template whose problems build without error.
inline std::vector<PowerProblem> problems_of(const Scenario& s, const std::vector<Template>& tpls) {
    std::vector<PowerProblem> out;
    for (const auto& t : tpls)
        for (UavIndex m = 0; m < s.uavs.size(); ++m) {
            try {
                out.push_back(build_problem(s, t, m));
            } catch (const Error&) {
            }
        }
    return out;
}

inline std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

/// CSV text with the named columns removed (double-quoted fields respected).
inline std::string without_columns(const std::string& csv, const std::vector<std::string>& names) {
    auto split = [](const std::string& l) {
        std::vector<std::string> f;
        std::string cur;
        bool quoted = false;
        for (char c : l) {
            if (c == '"') quoted = !quoted;
            if (c == ',' && !quoted) {
                f.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        f.push_back(cur);
        return f;
    };
    const auto rows = lines(csv);
    const auto head = split(rows.at(0));
    std::string out;
    for (const auto& r : rows) {
        const auto f = split(r);
        for (std::size_t i = 0; i < f.size(); ++i)
            if (std::find(names.begin(), names.end(), head[i]) == names.end()) out += f[i] + ",";
        out += "\n";
    }
    return out;
}

}  // namespace agvsched::testing
