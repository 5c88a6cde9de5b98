#pragma once

// Per-UAV power allocation: problem construction, the convex program in
// rho = 1/r solved by a log-barrier Newton method, and the UA/RA/CCPA/SPSA
// baselines.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "agvsched/model.hpp"

namespace agvsched {

/// |rho_i - rho_j| <= bound (s/bit); i, j index PowerProblem::sps.
struct GapConstraint {
    std::size_t i = 0;
    std::size_t j = 0;
    double bound = 0.0;

    bool operator==(const GapConstraint&) const = default;
    auto operator<=>(const GapConstraint&) const = default;
};

struct PowerProblem {
    UavIndex uav = 0;
    std::vector<SpIndex> sps;    // sorted
    std::vector<double> gain;    // g_k
    std::vector<double> load;    // total bits on SP k
    double budget = 0.0;         // Q (W)
    double bandwidth = 0.0;      // B (Hz)
    double noise = 0.0;          // N0 (W)
    double omega1 = 0.0;
    double omega2 = 0.0;
    int p = 3;
    std::vector<GapConstraint> gaps;  // sorted by (i, j), i < j

    std::size_t size() const noexcept { return sps.size(); }
    double w1(std::size_t k) const { return omega1 * std::pow(load.at(k), p); }
    double w2(std::size_t k) const { return omega2 * load.at(k) * noise / gain.at(k); }

    /// Right-hand side C* of the budget constraint in rho form.
    double c_star() const {
        double s = budget / noise;
        for (double g : gain) s += 1.0 / g;
        return s;
    }

    /// Achieved rate at power q on SP k; same expression as agvsched::rate.
    double link_rate(std::size_t k, double q) const {
        return bandwidth * std::log1p(q * gain.at(k) / noise) / std::numbers::ln2;
    }

    /// Power needed on SP k to reach 1/rho.
    double power_from_rho(std::size_t k, double rho) const {
        return noise / gain.at(k) * std::expm1(std::numbers::ln2 / (bandwidth * rho));
    }

    void validate() const {
        const std::size_t n = sps.size();
        if (gain.size() != n || load.size() != n) throw Error(ErrorCode::InvalidArgument, "power problem arrays differ in size");
        for (std::size_t k = 0; k < n; ++k) {
            if (!(gain[k] > 0.0)) throw Error(ErrorCode::InvalidArgument, "gain must be > 0");
            if (!(load[k] > 0.0)) throw Error(ErrorCode::InvalidArgument, "every used SP needs a positive load");
        }
        if (!(budget > 0.0) || !(bandwidth > 0.0) || !(noise > 0.0))
            throw Error(ErrorCode::InvalidArgument, "budget, bandwidth and noise must be > 0");
        if (!(omega1 >= 0.0) || !(omega2 >= 0.0) || p < 1) throw Error(ErrorCode::InvalidArgument, "bad weights or p");
        for (const auto& c : gaps)
            if (c.i >= n || c.j >= n || c.i == c.j || !(c.bound >= 0.0))
                throw Error(ErrorCode::InvalidArgument, "bad gap constraint");
    }
};

/// Relative slack below which ln(alpha1) + w^u*w^s is treated as exactly zero.
inline constexpr double kZeroGapSlack = 1e-12;

/// Power problem of UAV m under template tpl.
inline PowerProblem build_problem(const Scenario& s, const Template& tpl, UavIndex m) {
    const std::size_t t = s.task_of(m);
    const GraphTask& task = s.tasks[t];
    const std::size_t base = s.offset(t);
    PowerProblem pr;
    pr.uav = m;
    pr.budget = s.uavs.at(m).power_budget;
    pr.bandwidth = s.channel.bandwidth;
    pr.noise = s.channel.noise;
    pr.omega1 = s.config.omega1;
    pr.omega2 = s.config.omega2;
    pr.p = s.config.p;
    for (auto [k, bits] : sp_loads(s, tpl, t)) {
        pr.sps.push_back(k);
        pr.load.push_back(bits);
        pr.gain.push_back(a2g_gain(s.uavs[m], s.vc.sp(k), s.channel));
    }
    auto local = [&](SpIndex k) {
        return static_cast<std::size_t>(std::lower_bound(pr.sps.begin(), pr.sps.end(), k) - pr.sps.begin());
    };
    std::map<std::pair<std::size_t, std::size_t>, double> gaps;
    const double ln_alpha = std::log(s.config.alpha1);
    for (const auto& e : task.edges()) {
        const SpIndex k = tpl.assignment.at(base + e.a), k2 = tpl.assignment.at(base + e.b);
        if (k == k2) continue;
        const auto& ca = task.components()[e.a];
        const auto& cb = task.components()[e.b];
        if (ca.data_size != cb.data_size)
            throw Error(ErrorCode::HeterogeneousD, "components " + ca.id + " and " + cb.id + " differ in data size");
        auto ws = s.vc.edge_weight(k, k2);
        if (!ws)
            throw Error(ErrorCode::InvalidArgument, "edge " + ca.id + "-" + cb.id + " maps to non-adjacent SPs");
        double num = ln_alpha + e.weight * *ws;
        if (num > 0.0 && num <= kZeroGapSlack * std::max(1.0, e.weight * *ws)) num = 0.0;
        if (num > 0.0)
            throw Error(ErrorCode::TemplateInfeasibleForAlpha1,
                        "edge " + ca.id + "-" + cb.id + " cannot meet alpha1 on " + s.vc.sp(k).id + "-" + s.vc.sp(k2).id);
        const double bound = -num / (ca.data_size * *ws);
        const std::size_t li = local(k), lj = local(k2);
        const std::pair key{std::min(li, lj), std::max(li, lj)};
        auto [it, fresh] = gaps.try_emplace(key, bound);
        if (!fresh) it->second = std::min(it->second, bound);
    }
    for (auto [key, bound] : gaps) pr.gaps.push_back({key.first, key.second, bound});
    return pr;
}

/// Convex surrogate objective at rho (one entry per used SP).
inline double p4_objective(const PowerProblem& pr, const std::vector<double>& rho) {
    double f = 0.0;
    for (std::size_t k = 0; k < pr.size(); ++k) {
        f += pr.omega1 * std::pow(pr.load[k] * rho[k], pr.p);
        f += pr.w2(k) * rho[k] * std::expm1(std::numbers::ln2 / (pr.bandwidth * rho[k]));
    }
    return f;
}

/// Single-term surrogate y(rho) = W1*rho^p + W2*rho*(2^(1/(B*rho)) - 1).
inline double p4_term(double w1, double w2, double bandwidth, int p, double rho) {
    return w1 * std::pow(rho, p) + w2 * rho * std::expm1(std::numbers::ln2 / (bandwidth * rho));
}

/// Closed-form second derivative of p4_term.
inline double p4_term_second_derivative(double w1, double w2, double bandwidth, int p, double rho) {
    const double ln2 = std::numbers::ln2;
    const double e = std::exp2(1.0 / (bandwidth * rho));
    const double t1 = p >= 2 ? w1 * p * (p - 1) * std::pow(rho, p - 2) : 0.0;
    return t1 + w2 * e * ln2 * ln2 / (bandwidth * bandwidth * rho * rho * rho);
}

inline std::vector<double> rho_of(const PowerAllocation& a) {
    std::vector<double> r;
    for (double x : a.rate) r.push_back(1.0 / x);
    return r;
}

/// Allocation record for power vector q on the problem's SPs.
inline PowerAllocation make_allocation(const PowerProblem& pr, const std::vector<double>& q) {
    PowerAllocation a;
    a.sps = pr.sps;
    a.power = q;
    for (std::size_t k = 0; k < pr.size(); ++k) a.rate.push_back(pr.link_rate(k, q[k]));
    return a;
}

/// First violated constraint of q (budget, positivity, gap bounds), or nullopt.
inline std::optional<std::string> check_allocation(const PowerProblem& pr, const std::vector<double>& q,
                                                   double budget_tol = 1e-9, double gap_tol = 1e-9) {
    if (q.size() != pr.size()) return "wrong number of powers";
    double total = 0.0;
    for (double x : q) {
        if (!(x > 0.0) || !std::isfinite(x)) return "non-positive power";
        total += x;
    }
    if (total > pr.budget * (1.0 + budget_tol)) return "power budget exceeded";
    for (const auto& c : pr.gaps) {
        const double ri = 1.0 / pr.link_rate(c.i, q[c.i]), rj = 1.0 / pr.link_rate(c.j, q[c.j]);
        if (std::abs(ri - rj) > c.bound + gap_tol * std::max(ri, rj)) return "gap bound violated";
    }
    return std::nullopt;
}

/// P2 terms without constants: (max transmission time, transmission energy).
inline std::pair<double, double> evaluate_p2(const PowerProblem& pr, const PowerAllocation& a) {
    if (a.sps != pr.sps) throw Error(ErrorCode::InvalidArgument, "allocation does not match problem");
    double peak = 0.0, energy = 0.0;
    for (std::size_t k = 0; k < pr.size(); ++k) {
        const double t = pr.load[k] / a.rate[k];
        peak = std::max(peak, t);
        energy += a.power[k] * t;
    }
    return {peak, energy};
}

struct SolverOptions {
    double mu0 = 1.0;
    double mu_shrink = 0.2;
    double mu_min = 1e-9;
    double kkt_tol = 1e-8;
    int max_newton = 200;
    int max_halvings = 60;
    double armijo = 1e-4;
    double backtrack = 0.5;
};

struct SolveResult {
    std::vector<double> rho;
    PowerAllocation allocation;
    double objective = 0.0;
};

namespace detail {

inline std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// The solver works in u = B*rho. Arithmetic is long double because barrier
// slacks near an active budget approach mu, and their absolute rounding error
// would otherwise dominate the stationarity residual.
using Real = long double;

struct BarrierProblem {
    std::size_t n = 0;                 // SPs
    std::size_t G = 0;                 // merged variables
    std::vector<std::size_t> group;    // SP -> variable
    std::vector<Real> a, b, c;         // objective and budget coefficients per SP
    int p = 1;
    std::vector<Real> lower;           // per variable
    struct Gap {
        std::size_t x, y;
        Real beta;
    };
    std::vector<Gap> gaps;
    Real scale = 1;

    std::size_t constraints() const { return 1 + G + gaps.size(); }

    static constexpr Real ln2 = 0.693147180559945309417232121458176568L;

    Real f(const std::vector<Real>& z) const {
        Real s = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const Real u = z[group[k]];
            s += a[k] * std::pow(u, p) + b[k] * u * std::expm1(ln2 / u);
        }
        return s;
    }

    // Constraint values; all must be < 0.
    void constraint_values(const std::vector<Real>& z, std::vector<Real>& h) const {
        h.assign(constraints(), 0);
        Real budget = 0;
        for (std::size_t k = 0; k < n; ++k) budget += c[k] * std::expm1(ln2 / z[group[k]]);
        h[0] = budget - 1;
        for (std::size_t v = 0; v < G; ++v) h[1 + v] = 1 - z[v] / lower[v];
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            const Real d = z[gaps[i].x] - z[gaps[i].y];
            h[1 + G + i] = (d * d - gaps[i].beta * gaps[i].beta) / (gaps[i].beta * gaps[i].beta);
        }
    }

    bool strictly_feasible(const std::vector<Real>& z) const {
        for (Real v : z)
            if (!(v > 0) || !std::isfinite(static_cast<double>(v))) return false;
        std::vector<Real> h;
        constraint_values(z, h);
        for (Real v : h)
            if (!(v < 0)) return false;
        return true;
    }

    Real phi(const std::vector<Real>& z, Real mu) const {
        std::vector<Real> h;
        constraint_values(z, h);
        Real s = f(z) / scale;
        for (Real v : h) s -= mu * std::log(-v);
        return s;
    }

    void derivatives(const std::vector<Real>& z, Real mu, Eigen::Matrix<Real, Eigen::Dynamic, 1>& grad,
                     Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>& hess) const {
        grad.setZero(G);
        hess.setZero(G, G);
        Eigen::Matrix<Real, Eigen::Dynamic, 1> gb = Eigen::Matrix<Real, Eigen::Dynamic, 1>::Zero(G);
        Eigen::Matrix<Real, Eigen::Dynamic, 1> hb = Eigen::Matrix<Real, Eigen::Dynamic, 1>::Zero(G);
        Real budget = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t v = group[k];
            const Real u = z[v];
            const Real e = std::exp2(1 / u);
            const Real em1 = std::expm1(ln2 / u);
            Real df = b[k] * (em1 - ln2 / u * e);
            Real d2f = b[k] * e * ln2 * ln2 / (u * u * u);
            if (p >= 1) df += p * a[k] * std::pow(u, p - 1);
            if (p >= 2) d2f += static_cast<Real>(p) * (p - 1) * a[k] * std::pow(u, p - 2);
            grad[v] += df / scale;
            hess(v, v) += d2f / scale;
            budget += c[k] * em1;
            gb[v] += c[k] * (-ln2 * e / (u * u));
            hb[v] += c[k] * (e * ln2 * ln2 / (u * u * u * u) + 2 * ln2 * e / (u * u * u));
        }
        {
            const Real s = 1 - budget;
            grad += mu * gb / s;
            hess += mu * (gb * gb.transpose() / (s * s));
            hess.diagonal() += mu * hb / s;
        }
        for (std::size_t v = 0; v < G; ++v) {
            const Real s = z[v] / lower[v] - 1;
            const Real dh = -1 / lower[v];
            grad[v] += mu * dh / s;
            hess(v, v) += mu * dh * dh / (s * s);
        }
        for (const auto& gp : gaps) {
            const Real b2 = gp.beta * gp.beta;
            const Real d = z[gp.x] - z[gp.y];
            const Real s = (b2 - d * d) / b2;
            const Real dh = 2 * d / b2;
            grad[gp.x] += mu * dh / s;
            grad[gp.y] -= mu * dh / s;
            const Real outer = mu * dh * dh / (s * s);
            const Real curv = mu * (2 / b2) / s;
            hess(gp.x, gp.x) += outer + curv;
            hess(gp.y, gp.y) += outer + curv;
            hess(gp.x, gp.y) -= outer + curv;
            hess(gp.y, gp.x) -= outer + curv;
        }
    }
};

inline std::size_t uf_find(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
}

}  // namespace detail

/// Minimizes the surrogate objective subject to the budget and gap bounds.
inline SolveResult solve_p4(const PowerProblem& pr, const SolverOptions& opt = {}) {
    using detail::Real;
    pr.validate();
    SolveResult out;
    const std::size_t n = pr.size();
    if (n == 0) {
        out.allocation.sps = {};
        return out;
    }
    if (pr.omega1 == 0.0 && pr.omega2 > 0.0)
        throw Error(ErrorCode::Unbounded, "with omega1 = 0 the energy term has no attained minimum");

    detail::BarrierProblem bp;
    bp.n = n;
    bp.p = pr.p;
    const Real B = pr.bandwidth;
    for (std::size_t k = 0; k < n; ++k) {
        bp.a.push_back(pr.omega1 * std::pow(static_cast<Real>(pr.load[k]) / B, pr.p));
        bp.b.push_back(static_cast<Real>(pr.w2(k)) / B);
        bp.c.push_back(static_cast<Real>(pr.noise) / (static_cast<Real>(pr.gain[k]) * pr.budget));
    }
    // Pairs whose bound is zero share one variable.
    constexpr Real kMergeBeta = 1e-12L;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    for (const auto& g : pr.gaps)
        if (B * g.bound <= kMergeBeta) parent[detail::uf_find(parent, g.i)] = detail::uf_find(parent, g.j);
    std::map<std::size_t, std::size_t> root_id;
    bp.group.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        auto [it, fresh] = root_id.try_emplace(detail::uf_find(parent, k), root_id.size());
        bp.group[k] = it->second;
    }
    bp.G = root_id.size();
    std::vector<Real> umin(n);
    bp.lower.assign(bp.G, 0);
    for (std::size_t k = 0; k < n; ++k) {
        umin[k] = detail::BarrierProblem::ln2 / std::log1p(static_cast<Real>(pr.budget) * pr.gain[k] / pr.noise);
        bp.lower[bp.group[k]] = std::max(bp.lower[bp.group[k]], umin[k]);
    }
    std::map<std::pair<std::size_t, std::size_t>, Real> merged;
    for (const auto& g : pr.gaps) {
        const std::pair key{std::min(bp.group[g.i], bp.group[g.j]), std::max(bp.group[g.i], bp.group[g.j])};
        if (key.first == key.second) continue;
        const Real beta = B * g.bound;
        auto [it, fresh] = merged.try_emplace(key, beta);
        if (!fresh) it->second = std::min(it->second, beta);
    }
    for (auto [key, beta] : merged) bp.gaps.push_back({key.first, key.second, beta});

    // Strictly feasible start: uniform power, then pairwise averaging.
    auto start_from = [&](Real q) {
        std::vector<Real> z(bp.G, 0), cnt(bp.G, 0);
        for (std::size_t k = 0; k < n; ++k) {
            z[bp.group[k]] += detail::BarrierProblem::ln2 / std::log1p(q * pr.gain[k] / pr.noise);
            cnt[bp.group[k]] += 1;
        }
        for (std::size_t v = 0; v < bp.G; ++v) z[v] /= cnt[v];
        for (int sweep = 0; sweep < 100; ++sweep) {
            bool changed = false;
            for (const auto& g : bp.gaps) {
                if (std::abs(z[g.x] - z[g.y]) >= g.beta) {
                    z[g.x] = z[g.y] = (z[g.x] + z[g.y]) / 2;
                    changed = true;
                }
            }
            if (!changed) break;
        }
        return z;
    };
    std::vector<Real> z;
    bool found = false;
    Real q0 = static_cast<Real>(pr.budget) / (2 * n);
    for (int h = 0; h <= opt.max_halvings && !found; ++h, q0 /= 2) {
        z = start_from(q0);
        found = bp.strictly_feasible(z);
    }
    if (!found) {
        // All-equal u at half the budget satisfies every gap bound.
        Real lo = *std::max_element(bp.lower.begin(), bp.lower.end()), hi = lo * 2;
        auto use = [&](Real u) {
            Real s = 0;
            for (std::size_t k = 0; k < n; ++k) s += bp.c[k] * std::expm1(detail::BarrierProblem::ln2 / u);
            return s;
        };
        while (use(hi) > 0.5L) hi *= 2;
        for (int i = 0; i < 200; ++i) {
            const Real mid = (lo + hi) / 2;
            (use(mid) > 0.5L ? lo : hi) = mid;
        }
        z.assign(bp.G, hi);
        found = bp.strictly_feasible(z);
    }
    if (!found) throw Error(ErrorCode::Infeasible, "no strictly feasible starting point");

    auto recover = [&](const std::vector<Real>& zz, SolverDiagnostics diag) {
        std::vector<double> q(n);
        out.rho.assign(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const Real u = zz[bp.group[k]];
            out.rho[k] = static_cast<double>(u / B);
            q[k] = static_cast<double>(static_cast<Real>(pr.noise) / pr.gain[k] *
                                       std::expm1(detail::BarrierProblem::ln2 / u));
        }
        out.allocation = make_allocation(pr, q);
        out.allocation.diagnostics = diag;
        out.objective = p4_objective(pr, out.rho);
        return out;
    };

    const Real f0 = bp.f(z);
    if (!(f0 > 0)) return recover(z, {});  // constant objective: any feasible point is optimal
    bp.scale = f0;

    Real mu = opt.mu0;
    int iters = 0;
    Eigen::Matrix<Real, Eigen::Dynamic, 1> grad;
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> hess;
    std::vector<Real> trial(bp.G);
    Real stationarity = 0;
    while (true) {
        Real last_pure = std::numeric_limits<Real>::infinity();
        for (int it = 0; it < opt.max_newton; ++it) {
            bp.derivatives(z, mu, grad, hess);
            stationarity = grad.cwiseAbs().maxCoeff();
            if (stationarity == 0) break;
            Eigen::LDLT<Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>> ldlt(hess);
            Eigen::Matrix<Real, Eigen::Dynamic, 1> step;
            Real reg = 0;
            bool descent = false;
            for (int attempt = 0; attempt < 40; ++attempt) {
                if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                    step = ldlt.solve(-grad);
                    if (step.allFinite() && grad.dot(step) < 0) {
                        descent = true;
                        break;
                    }
                }
                reg = reg == 0 ? 1e-12L * (1 + hess.diagonal().cwiseAbs().maxCoeff()) : reg * 10;
                Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> hr = hess;
                hr.diagonal().array() += reg;
                ldlt.compute(hr);
            }
            if (!descent) {
                if (stationarity <= opt.kkt_tol) break;  // at the rounding floor
                throw Error(ErrorCode::NumericalFailure, "Newton system could not be regularised");
            }
            const Real decrement = -grad.dot(step);
            // Inside the quadratic region of the mu-scaled barrier a full
            // step is safe; Armijo is only used far from the center, where
            // the decrease it asks for is above rounding noise.
            const bool pure = decrement / mu < 0.1L;
            if (pure && stationarity >= last_pure) break;
            if (pure) last_pure = stationarity;
            const Real phi0 = pure ? 0 : bp.phi(z, mu);
            Real t = 1;
            bool moved = false;
            while (t > 1e-18L) {
                for (std::size_t v = 0; v < bp.G; ++v) trial[v] = z[v] + t * step[v];
                if (trial == z) break;
                if (bp.strictly_feasible(trial) &&
                    (pure || bp.phi(trial, mu) <= phi0 - opt.armijo * t * decrement)) {
                    moved = true;
                    break;
                }
                t *= opt.backtrack;
            }
            if (!moved) break;
#ifdef AGVSCHED_TRACE
            std::fprintf(stderr, "mu %Lg it %d t %Lg dec %Lg grad %Lg\n", mu, it, t, decrement, stationarity);
#endif
            z = trial;
            ++iters;
        }
        if (mu < opt.mu_min) break;
        mu *= opt.mu_shrink;
    }
    bp.derivatives(z, mu, grad, hess);
    stationarity = grad.cwiseAbs().maxCoeff();

    // An active budget is left about mu short. A common shrink factor moves
    // onto it while every gap |z_x - z_y| only narrows; kept if f drops.
    {
        auto budget_at = [&](Real t) {
            Real s = 0;
            for (std::size_t k = 0; k < n; ++k) s += bp.c[k] * std::expm1(detail::BarrierProblem::ln2 / (t * z[bp.group[k]]));
            return s;
        };
        Real hi = 1, lo = 1;
        for (Real d = 1e-12L; d <= 1e-3L && budget_at(lo) <= 1; d *= 4) lo = 1 - d;
        if (budget_at(lo) > 1) {
            for (int i = 0; i < 200 && hi - lo > 0; ++i) {
                const Real mid = (lo + hi) / 2;
                if (mid == lo || mid == hi) break;
                (budget_at(mid) > 1 ? lo : hi) = mid;
            }
            std::vector<Real> zt(z);
            for (std::size_t v = 0; v < bp.G; ++v) zt[v] = std::max(z[v] * hi, bp.lower[v]);
            std::vector<Real> h;
            bp.constraint_values(zt, h);
            const bool ok = std::all_of(h.begin(), h.end(), [](Real v) { return v <= 0; });
            if (ok && bp.f(zt) < bp.f(z)) z = std::move(zt);
        }
    }
    SolverDiagnostics diag{iters, static_cast<double>(mu), static_cast<double>(std::max(stationarity, mu))};
    recover(z, diag);
    if (!(diag.kkt_residual <= opt.kkt_tol))
        throw Error(ErrorCode::NumericalFailure,
                    "barrier stalled with KKT residual " + detail::csv_number(diag.kkt_residual));
    return out;
}

/// Peak transmission time of the solver's allocation for each norm order.
inline std::vector<std::pair<int, double>> p_norm_peak(PowerProblem pr, const std::vector<int>& p_values,
                                                       const SolverOptions& opt = {}) {
    std::vector<std::pair<int, double>> out;
    for (int p : p_values) {
        pr.p = p;
        auto res = solve_p4(pr, opt);
        out.emplace_back(p, evaluate_p2(pr, res.allocation).first);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Baselines

inline PowerAllocation ua(const PowerProblem& pr) {
    pr.validate();
    std::vector<double> q(pr.size(), pr.budget / static_cast<double>(pr.size()));
    if (auto why = check_allocation(pr, q)) throw Error(ErrorCode::BaselineInfeasible, "UA: " + *why);
    return make_allocation(pr, q);
}

inline PowerAllocation ccpa(const PowerProblem& pr) {
    pr.validate();
    const double total = std::accumulate(pr.gain.begin(), pr.gain.end(), 0.0);
    std::vector<double> q;
    for (double g : pr.gain) q.push_back(pr.budget * g / total);
    if (auto why = check_allocation(pr, q)) throw Error(ErrorCode::BaselineInfeasible, "CCPA: " + *why);
    return make_allocation(pr, q);
}

inline constexpr std::size_t kDefaultRaIters = 10000;

/// Uniformly random splits of the budget until one meets every constraint.
inline PowerAllocation ra(const PowerProblem& pr, std::uint64_t seed, std::size_t max_iters = kDefaultRaIters) {
    pr.validate();
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> q(pr.size());
    for (std::size_t it = 0; it < max_iters; ++it) {
        double sum = 0.0;
        for (auto& x : q) sum += (x = expo(rng));
        for (auto& x : q) x = pr.budget * x / sum;
        if (!check_allocation(pr, q)) return make_allocation(pr, q);
    }
    throw Error(ErrorCode::BaselineInfeasible, "RA: no feasible split in " + std::to_string(max_iters) + " draws");
}

struct AnnealingSchedule {
    int grid = 1000;  // budget units
    double t0 = 1.0;
    double t_min = 1e-4;
    double cooling = 0.95;
    int proposals = 50;
};

/// Simulated annealing over integer multiples of Q/grid. Cost is the
/// surrogate objective relative to the initial state's; only feasible states
/// are visited. Returns the best state seen.
inline PowerAllocation spsa(const PowerProblem& pr, const AnnealingSchedule& sched, std::uint64_t seed) {
    pr.validate();
    const std::size_t n = pr.size();
    if (sched.grid < static_cast<int>(n)) throw Error(ErrorCode::InvalidArgument, "SPSA grid coarser than SP count");
    std::mt19937_64 rng(seed);
    const double unit = pr.budget / sched.grid;
    auto powers = [&](const std::vector<int>& st) {
        std::vector<double> q(n);
        for (std::size_t k = 0; k < n; ++k) q[k] = unit * st[k];
        return q;
    };
    auto cost_of = [&](const std::vector<int>& st) {
        std::vector<double> rho(n);
        for (std::size_t k = 0; k < n; ++k) rho[k] = 1.0 / pr.link_rate(k, unit * st[k]);
        return p4_objective(pr, rho);
    };
    auto feasible = [&](const std::vector<int>& st) { return !check_allocation(pr, powers(st), 0.0); };

    std::vector<int> state(n, sched.grid / static_cast<int>(n));
    if (!feasible(state)) {
        bool ok = false;
        std::exponential_distribution<double> expo(1.0);
        for (int tries = 0; tries < 1000 && !ok; ++tries) {
            std::vector<double> w(n);
            double sum = 0.0;
            for (auto& x : w) sum += (x = expo(rng));
            for (std::size_t k = 0; k < n; ++k)
                state[k] = std::max(1, static_cast<int>(std::floor(w[k] / sum * (sched.grid - static_cast<int>(n)))) + 1);
            ok = feasible(state);
        }
        if (!ok) throw Error(ErrorCode::BaselineInfeasible, "SPSA: no feasible grid state found");
    }
    const double c0 = cost_of(state);
    double cost = 1.0;
    std::vector<int> best = state;
    double best_cost = cost;
    int used = std::accumulate(state.begin(), state.end(), 0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (double T = sched.t0; T >= sched.t_min; T *= sched.cooling) {
        for (int i = 0; i < sched.proposals; ++i) {
            std::vector<int> next = state;
            const std::size_t k = pick(rng);
            int next_used = used;
            if (coin(rng) < 0.5) {
                ++next[k];
                if (used == sched.grid) {
                    if (n == 1) continue;
                    std::size_t j = pick(rng);
                    if (j == k || next[j] <= 1) continue;
                    --next[j];
                } else {
                    ++next_used;
                }
            } else {
                if (next[k] <= 1) continue;
                --next[k];
                --next_used;
            }
            if (!feasible(next)) continue;
            const double c = cost_of(next) / c0;
            if (c <= cost || coin(rng) < std::exp(-(c - cost) / T)) {
                state = std::move(next);
                cost = c;
                used = next_used;
                if (cost < best_cost) {
                    best = state;
                    best_cost = cost;
                }
            }
        }
    }
    return make_allocation(pr, powers(best));
}

}  // namespace agvsched
