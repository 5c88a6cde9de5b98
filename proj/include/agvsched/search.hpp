#pragma once

// Template search: exploration sequence, candidate filtering, depth-first
// enumeration, an independent validator, and the ESA/RSA baselines.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "agvsched/model.hpp"

namespace agvsched {

inline constexpr SpIndex kUnassigned = std::numeric_limits<SpIndex>::max();

/// Number of task edges incident to component n.
inline std::size_t degree(const GraphTask& task, std::size_t n) { return task.incident(n).size(); }

enum class TieBreak { Lexicographic, SeededRandom };

/// Component order N with predecessor sets. All indices are flattened
/// component indices (see Scenario::offset).
struct ExplorationSequence {
    std::vector<std::size_t> order;
    std::vector<std::vector<std::size_t>> pred;  // pred[g], in sequence order
    std::vector<std::size_t> position;           // position[g] = index of g in order
};

/// Greedy ordering: first the component of largest degree, then repeatedly
/// the one with most edges into the placed set (ties: larger degree, then the
/// tie-break rank).
inline ExplorationSequence build_sequence(const Scenario& s, TieBreak tie = TieBreak::Lexicographic,
                                          std::uint64_t seed = 0) {
    const std::size_t total = s.component_count();
    std::vector<std::size_t> rank(total);
    std::iota(rank.begin(), rank.end(), 0);
    if (tie == TieBreak::SeededRandom) {
        std::mt19937_64 rng(seed);
        std::shuffle(rank.begin(), rank.end(), rng);
    }
    std::vector<std::size_t> dc(total), dmap(total, 0);
    for (std::size_t g = 0; g < total; ++g) {
        auto [t, n] = s.locate(g);
        dc[g] = degree(s.tasks[t], n);
    }
    ExplorationSequence seq;
    seq.pred.assign(total, {});
    seq.position.assign(total, 0);
    std::vector<bool> placed(total, false);
    for (std::size_t step = 0; step < total; ++step) {
        std::size_t best = total;
        for (std::size_t g = 0; g < total; ++g) {
            if (placed[g]) continue;
            if (best == total || std::tie(dmap[g], dc[g]) > std::tie(dmap[best], dc[best]) ||
                (std::tie(dmap[g], dc[g]) == std::tie(dmap[best], dc[best]) && rank[g] < rank[best]))
                best = g;
        }
        placed[best] = true;
        seq.position[best] = seq.order.size();
        seq.order.push_back(best);
        auto [t, n] = s.locate(best);
        const std::size_t base = s.offset(t);
        for (std::size_t e : s.tasks[t].incident(n)) {
            const std::size_t other = base + s.tasks[t].other_end(e, n);
            if (placed[other] && other != best) seq.pred[best].push_back(other);
            else ++dmap[other];
        }
        std::sort(seq.pred[best].begin(), seq.pred[best].end(),
                  [&](std::size_t a, std::size_t b) { return seq.position[a] < seq.position[b]; });
    }
    return seq;
}

/// Remaining VMs, available degrees and the partial mapping during search.
class SearchState {
public:
    explicit SearchState(const Scenario& s) : vc_(&s.vc) {
        remaining_.resize(s.vc.size());
        neighbor_sum_.assign(s.vc.size(), 0);
        for (SpIndex k = 0; k < s.vc.size(); ++k) remaining_[k] = s.vc.sp(k).vm_count;
        for (SpIndex k = 0; k < s.vc.size(); ++k)
            for (auto [j, w] : s.vc.neighbors(k)) neighbor_sum_[k] += remaining_[j];
        assignment_.assign(s.component_count(), kUnassigned);
    }

    int remaining(SpIndex k) const { return remaining_.at(k); }
    const std::vector<int>& remaining_vms() const noexcept { return remaining_; }
    const std::vector<SpIndex>& assignment() const noexcept { return assignment_; }
    std::size_t depth() const noexcept { return depth_; }

    /// Zero without a local free VM, else local plus one-hop free VMs.
    int available_degree(SpIndex k) const {
        return remaining_.at(k) > 0 ? remaining_[k] + neighbor_sum_[k] : 0;
    }

    void place(std::size_t g, SpIndex k) {
        if (assignment_.at(g) != kUnassigned) throw Error(ErrorCode::InvalidArgument, "component already placed");
        if (remaining_.at(k) <= 0) throw Error(ErrorCode::InvalidArgument, "sp has no free VM");
        assignment_[g] = k;
        adjust(k, -1);
        ++depth_;
    }

    void unplace(std::size_t g) {
        const SpIndex k = assignment_.at(g);
        if (k == kUnassigned) throw Error(ErrorCode::InvalidArgument, "component not placed");
        assignment_[g] = kUnassigned;
        adjust(k, +1);
        --depth_;
    }

private:
    void adjust(SpIndex k, int delta) {
        remaining_[k] += delta;
        for (auto [j, w] : vc_->neighbors(k)) neighbor_sum_[j] += delta;
    }

    const VcGraph* vc_;
    std::vector<int> remaining_;
    std::vector<int> neighbor_sum_;
    std::vector<SpIndex> assignment_;
    std::size_t depth_ = 0;
};

/// SPs that may host flattened component g given the mapped predecessors, in SP order.
inline std::vector<SpIndex> candidates(const SearchState& state, std::size_t g, const ExplorationSequence& seq,
                                       const Scenario& s) {
    auto [t, n] = s.locate(g);
    const GraphTask& task = s.tasks[t];
    const std::size_t base = s.offset(t);
    const auto& preds = seq.pred.at(g);
    for (std::size_t p : preds)
        if (state.assignment()[p] == kUnassigned)
            throw Error(ErrorCode::PredecessorUnmapped, "predecessor of component " + task.components()[n].id +
                                                            " is not mapped");
    const int need = static_cast<int>(degree(task, n)) - static_cast<int>(preds.size());
    const Uav& owner = s.uavs.at(task.owner());
    std::vector<SpIndex> out;
    for (SpIndex k : owner.coverage) {
        if (state.remaining(k) <= 0) continue;
        if (state.available_degree(k) < need) continue;
        bool ok = true;
        for (std::size_t p : preds) {
            const SpIndex kp = state.assignment()[p];
            if (kp == k) continue;
            auto ws = s.vc.edge_weight(k, kp);
            const double wu = task.edges()[*task.edge_between(n, p - base)].weight;
            if (!ws || !(std::exp(-wu * *ws) >= s.config.alpha2)) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(k);
    }
    return out;
}

/// Independent C5/C6/C7 check. Returns the first violation, or nullopt.
inline std::optional<std::string> validate_template(const Scenario& s, const Template& tpl) {
    if (tpl.assignment.size() != s.component_count()) return "wrong number of components";
    std::vector<int> used(s.vc.size(), 0);
    for (std::size_t t = 0; t < s.tasks.size(); ++t) {
        const GraphTask& task = s.tasks[t];
        const Uav& owner = s.uavs.at(task.owner());
        const std::size_t base = s.offset(t);
        for (std::size_t n = 0; n < task.size(); ++n) {
            const SpIndex k = tpl.assignment[base + n];
            if (k >= s.vc.size()) return "component " + task.components()[n].id + " maps to an unknown SP";
            if (!owner.covers(k)) return "component " + task.components()[n].id + " outside coverage of " + owner.id;
            ++used[k];
        }
        for (const auto& e : task.edges()) {
            const SpIndex k = tpl.assignment[base + e.a], k2 = tpl.assignment[base + e.b];
            if (k == k2) continue;
            auto ws = s.vc.edge_weight(k, k2);
            if (!ws) return "edge " + task.components()[e.a].id + "-" + task.components()[e.b].id + " maps to non-adjacent SPs";
            if (!(std::exp(-e.weight * *ws) >= s.config.alpha2))
                return "edge " + task.components()[e.a].id + "-" + task.components()[e.b].id + " fails the contact threshold";
        }
    }
    for (SpIndex k = 0; k < s.vc.size(); ++k)
        if (used[k] > s.vc.sp(k).vm_count) return "sp " + s.vc.sp(k).id + " over capacity";
    return std::nullopt;
}

struct SearchOptions {
    std::optional<std::size_t> limit;  // keep the first `limit` templates in DFS order
    unsigned jobs = 1;
};

namespace detail {

// Depth-first search from `depth`; appends to out until `cap` templates exist.
inline void dfs(const Scenario& s, const ExplorationSequence& seq, SearchState& st, std::size_t depth,
                std::vector<Template>& out, std::size_t cap) {
    if (out.size() >= cap) return;
    if (depth == seq.order.size()) {
        out.push_back({st.assignment()});
        return;
    }
    const std::size_t g = seq.order[depth];
    for (SpIndex k : candidates(st, g, seq, s)) {
        st.place(g, k);
        dfs(s, seq, st, depth + 1, out, cap);
        st.unplace(g);
        if (out.size() >= cap) return;
    }
}

}  // namespace detail

/// Every template reachable by the backtracking search, sorted canonically
/// (lexicographic on the flattened assignment).
inline std::vector<Template> enumerate_templates(const Scenario& s, const ExplorationSequence& seq,
                                                 const SearchOptions& opt = {}) {
    const std::size_t cap = opt.limit.value_or(std::numeric_limits<std::size_t>::max());
    std::vector<Template> out;
    if (cap == 0) return out;
    if (seq.order.empty()) return {Template{}};
    const unsigned jobs = std::max(1u, opt.jobs);

    if (jobs == 1) {
        SearchState st(s);
        detail::dfs(s, seq, st, 0, out, cap);
    } else {
        // Split into DFS-ordered prefixes; each worker runs one prefix subtree
        // with its own state. Concatenating in prefix order preserves DFS order.
        std::vector<std::vector<SpIndex>> prefixes{{}};
        std::size_t depth = 0;
        while (depth < seq.order.size() && prefixes.size() < 4 * jobs) {
            std::vector<std::vector<SpIndex>> next;
            for (const auto& pre : prefixes) {
                SearchState st(s);
                for (std::size_t i = 0; i < pre.size(); ++i) st.place(seq.order[i], pre[i]);
                for (SpIndex k : candidates(st, seq.order[depth], seq, s)) {
                    next.push_back(pre);
                    next.back().push_back(k);
                }
            }
            prefixes = std::move(next);
            ++depth;
            if (prefixes.empty()) return out;
        }
        std::vector<std::vector<Template>> parts(prefixes.size());
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i; (i = cursor.fetch_add(1)) < prefixes.size();) {
                    SearchState st(s);
                    for (std::size_t d = 0; d < depth; ++d) st.place(seq.order[d], prefixes[i][d]);
                    detail::dfs(s, seq, st, depth, parts[i], cap);
                }
            });
        }
        for (auto& w : workers) w.join();
        for (auto& part : parts) {
            for (auto& t : part) {
                if (out.size() >= cap) break;
                out.push_back(std::move(t));
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<Template> enumerate_templates(const Scenario& s, const SearchOptions& opt = {}) {
    return enumerate_templates(s, build_sequence(s), opt);
}

inline constexpr double kDefaultEsaGuard = 5e7;

/// Exhaustive search over all |S|^n assignments, filtered by validate_template.
inline std::vector<Template> esa(const Scenario& s, double max_assignments = kDefaultEsaGuard) {
    const std::size_t n = s.component_count();
    const std::size_t k = s.vc.size();
    if (n == 0) return {Template{}};
    if (k == 0) return {};
    if (static_cast<double>(n) * std::log(static_cast<double>(k)) > std::log(max_assignments))
        throw Error(ErrorCode::InstanceTooLarge, std::to_string(k) + "^" + std::to_string(n) + " assignments exceed the guard");
    std::set<Template> found;
    Template tpl{std::vector<SpIndex>(n, 0)};
    while (true) {
        if (!validate_template(s, tpl)) found.insert(tpl);
        std::size_t i = n;
        while (i > 0 && ++tpl.assignment[i - 1] == k) tpl.assignment[--i] = 0;
        if (i == 0) break;
    }
    return {found.begin(), found.end()};
}

inline constexpr std::size_t kRsaPresets[] = {10000, 20000, 30000};

/// Random search: random component order, each component to a uniformly drawn
/// covered SP with a free VM; distinct valid mappings are kept.
inline std::vector<Template> rsa(const Scenario& s, std::size_t iterations, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = s.component_count();
    std::vector<std::size_t> order(n);
    std::set<Template> found;
    for (std::size_t it = 0; it < iterations; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> left(s.vc.size());
        for (SpIndex k = 0; k < s.vc.size(); ++k) left[k] = s.vc.sp(k).vm_count;
        Template tpl{std::vector<SpIndex>(n, kUnassigned)};
        bool ok = true;
        for (std::size_t g : order) {
            const Uav& owner = s.uavs.at(s.tasks[s.locate(g).first].owner());
            std::vector<SpIndex> open;
            for (SpIndex k : owner.coverage)
                if (left[k] > 0) open.push_back(k);
            if (open.empty()) {
                ok = false;
                break;
            }
            const SpIndex k = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
            tpl.assignment[g] = k;
            --left[k];
        }
        if (ok && !validate_template(s, tpl)) found.insert(std::move(tpl));
    }
    return {found.begin(), found.end()};
}

// ---------------------------------------------------------------------------
// Line-oriented template format: one template per line, tokens
// "<uav>.<component>=<sp>" in flattened component order.

inline constexpr const char* kTemplatesHeader = "# agvsched templates v1";

inline std::string format_template(const Scenario& s, const Template& tpl) {
    std::string line;
    for (std::size_t g = 0; g < tpl.assignment.size(); ++g) {
        auto [t, n] = s.locate(g);
        if (g) line += ' ';
        line += s.uavs.at(s.tasks[t].owner()).id + "." + s.tasks[t].components()[n].id + "=" +
                s.vc.sp(tpl.assignment[g]).id;
    }
    return line;
}

inline std::string format_templates(const Scenario& s, const std::vector<Template>& tpls) {
    std::string out = std::string(kTemplatesHeader) + "\n";
    for (const auto& t : tpls) out += format_template(s, t) + "\n";
    return out;
}

inline Template parse_template(const Scenario& s, const std::string& line) {
    Template tpl{std::vector<SpIndex>(s.component_count(), kUnassigned)};
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        const auto dot = tok.find('.'), eq = tok.find('=');
        if (dot == std::string::npos || eq == std::string::npos || eq < dot)
            throw Error(ErrorCode::ParseError, "bad template token '" + tok + "'");
        const std::string uav = tok.substr(0, dot), comp = tok.substr(dot + 1, eq - dot - 1), sp = tok.substr(eq + 1);
        std::optional<std::size_t> g;
        for (std::size_t t = 0; t < s.tasks.size() && !g; ++t)
            if (s.uavs.at(s.tasks[t].owner()).id == uav)
                if (auto n = s.tasks[t].index_of(comp)) g = s.offset(t) + *n;
        auto k = s.vc.index_of(sp);
        if (!g || !k) throw Error(ErrorCode::ParseError, "unknown component or sp in '" + tok + "'");
        tpl.assignment[*g] = *k;
    }
    for (SpIndex k : tpl.assignment)
        if (k == kUnassigned) throw Error(ErrorCode::ParseError, "template line does not map every component");
    return tpl;
}

inline std::vector<Template> parse_templates(const Scenario& s, const std::string& text) {
    std::vector<Template> out;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            if (line != kTemplatesHeader) throw Error(ErrorCode::SchemaVersionMismatch, "missing templates header");
            first = false;
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        out.push_back(parse_template(s, line));
    }
    if (first) throw Error(ErrorCode::SchemaVersionMismatch, "missing templates header");
    return out;
}

}  // namespace agvsched
