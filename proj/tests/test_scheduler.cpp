#include <agvsched/scheduler.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace agvsched;

namespace {

struct Case {
    Scenario s;
    std::vector<Template> templates;
};

// Small random scenarios with a modest, non-empty template set.
std::vector<Case> small_cases(std::size_t count, std::size_t max_templates = 400) {
    std::vector<Case> out;
    for (std::uint64_t seed = 1; out.size() < count && seed < 5000; ++seed) {
        auto s = agvsched::testing::small_random_scenario(seed);
        auto t = enumerate_templates(s, build_sequence(s));
        if (!t.empty() && t.size() <= max_templates) out.push_back({std::move(s), std::move(t)});
    }
    return out;
}

std::vector<PowerAllocation> allocations_for(const Scenario& s, const Template& t, Allocator a,
                                             const AllocatorOptions& opt = {}) {
    std::vector<PowerAllocation> out;
    for (UavIndex m = 0; m < s.uavs.size(); ++m) out.push_back(allocate(build_problem(s, t, m), a, opt));
    return out;
}

std::string strip_wall_time(const ComparisonReport& rep) {
    std::ostringstream os;
    auto copy = rep;
    for (auto& c : copy.cells) c.wall_time_s = 0.0;
    csv::write_comparison(os, copy);
    return os.str();
}

}  // namespace

TEST(Schedule, SingleTemplateIsReturned) {
    bool seen = false;
    for (std::uint64_t seed = 1; seed < 3000 && !seen; ++seed) {
        auto s = agvsched::testing::small_random_scenario(seed);
        const auto t = enumerate_templates(s, build_sequence(s));
        if (t.size() != 1) continue;
        ScheduleResult r;
        try {
            r = schedule(s);
        } catch (const NoFeasibleSchedule&) {
            continue;
        }
        seen = true;
        EXPECT_EQ(r.best, t[0]);
        EXPECT_EQ(r.log.size(), 1u);
        const auto f = objective(s, t[0], allocations_for(s, t[0], Allocator::Proposed)).total;
        EXPECT_NEAR(r.breakdown.total, f, 1e-10 * f);
    }
    EXPECT_TRUE(seen);
}

TEST(Schedule, TableFixtureRecomputes) {
    const auto s = table2_fixture();
    const auto r = schedule(s);
    EXPECT_EQ(r.templates_enumerated, 1286u);
    EXPECT_EQ(r.log.size(), r.templates_enumerated);
    const double f = objective(s, r.best, r.allocations).total;
    EXPECT_NEAR(r.breakdown.total, f, 1e-10 * f);
    for (const auto& sc : r.log)
        if (sc.feasible) EXPECT_GE(sc.breakdown.total, r.breakdown.total);
    EXPECT_LE(r.solves_attempted, 2 * r.templates_enumerated);
    EXPECT_EQ(r.solves_succeeded, r.solves_attempted);
}

TEST(Schedule, UnsatisfiableThresholds) {
    auto s = table2_fixture();
    s.config.alpha1 = 1.0 - 1e-12;
    try {
        schedule(s);
        FAIL() << "expected NoFeasibleSchedule";
    } catch (const NoFeasibleSchedule& e) {
        ASSERT_EQ(e.log().size(), 1286u);
        for (const auto& sc : e.log()) {
            EXPECT_FALSE(sc.feasible);
            EXPECT_EQ(sc.failure, ErrorCode::TemplateInfeasibleForAlpha1);
            EXPECT_FALSE(sc.reason.empty());
        }
    }
    s.config.alpha2 = s.config.alpha1;
    try {
        schedule(s);
        FAIL() << "expected NoFeasibleSchedule";
    } catch (const NoFeasibleSchedule& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoFeasibleSchedule);
        EXPECT_TRUE(e.log().empty());
    }
}

TEST(Schedule, ExhaustiveCrossProduct) {
    // The argmin over templates is checked against a from-scratch cross-product
    // of every template with every allocator. F is compared with the proposed
    // allocator; baselines are compared on the surrogate the solver minimises.
    for (const auto& [s, templates] : small_cases(12, 150)) {
        ScheduleResult r;
        try {
            r = schedule(s);
        } catch (const NoFeasibleSchedule&) {
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : templates) {
            std::vector<PowerProblem> probs;
            try {
                for (UavIndex m = 0; m < s.uavs.size(); ++m) probs.push_back(build_problem(s, t, m));
            } catch (const Error&) {
                continue;
            }
            std::vector<PowerAllocation> mine;
            for (const auto& pr : probs) mine.push_back(solve_p4(pr).allocation);
            best = std::min(best, objective(s, t, mine).total);
            for (Allocator a : {Allocator::UA, Allocator::RA, Allocator::CCPA, Allocator::SPSA})
                for (std::size_t m = 0; m < probs.size(); ++m) {
                    try {
                        const auto other = allocate(probs[m], a);
                        const double base = p4_objective(probs[m], rho_of(other));
                        EXPECT_LE(p4_objective(probs[m], rho_of(mine[m])), base * (1 + 1e-6)) << to_string(a);
                    } catch (const Error& e) {
                        EXPECT_EQ(e.code(), ErrorCode::BaselineInfeasible);
                    }
                }
        }
        EXPECT_NEAR(r.breakdown.total, best, 1e-12 * best);
    }
}

TEST(Schedule, ArgminStableUnderPermutation) {
    const auto s = table2_fixture();
    auto t = enumerate_templates(s, build_sequence(s));
    const auto ref = schedule_templates(s, t);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 3; ++i) {
        std::shuffle(t.begin(), t.end(), rng);
        const auto r = schedule_templates(s, t);
        EXPECT_EQ(r.best, ref.best);
        EXPECT_EQ(r.breakdown.total, ref.breakdown.total);
    }
}

TEST(Schedule, SkippedTemplatesAreGenuinelyInfeasible) {
    std::size_t skipped = 0;
    for (const auto& [s, templates] : small_cases(25)) {
        for (Allocator a : {Allocator::Proposed, Allocator::UA}) {
            ScheduleOptions opt;
            opt.allocator = a;
            std::vector<TemplateScore> log;
            try {
                log = schedule_templates(s, templates, opt).log;
            } catch (const NoFeasibleSchedule& e) {
                log = e.log();
            }
            for (const auto& sc : log) {
                if (sc.feasible) continue;
                ++skipped;
                ASSERT_TRUE(sc.failure);
                std::optional<ErrorCode> seen;
                for (UavIndex m = 0; m < s.uavs.size() && !seen; ++m) {
                    try {
                        allocate(build_problem(s, sc.tpl, m), a);
                    } catch (const Error& e) {
                        seen = e.code();
                    }
                }
                EXPECT_EQ(seen, sc.failure);
            }
        }
    }
    EXPECT_GT(skipped, 0u);
}

TEST(Schedule, JobsAndMemoizationDoNotChangeResults) {
    const auto s = table2_fixture();
    ScheduleOptions one, four;
    four.jobs = 4;
    for (Allocator a : {Allocator::Proposed, Allocator::RA, Allocator::SPSA}) {
        one.allocator = four.allocator = a;
        const auto r1 = schedule(s, one), r4 = schedule(s, four);
        std::ostringstream l1, l4;
        csv::write_score_log(l1, s, r1.log);
        csv::write_score_log(l4, s, r4.log);
        EXPECT_EQ(l1.str(), l4.str());
        EXPECT_EQ(r1.best, r4.best);
        EXPECT_LT(r1.solves_attempted, 2 * r1.templates_enumerated);  // shared subproblems
    }
}

TEST(Schedule, LimitMarksCapped) {
    const auto s = table2_fixture();
    ScheduleOptions opt;
    opt.search.limit = 10;
    const auto r = schedule(s, opt);
    EXPECT_TRUE(r.capped);
    EXPECT_EQ(r.templates_enumerated, 10u);
    EXPECT_FALSE(schedule(s).capped);
}

TEST(Schedule, StochasticModeIsSeeded) {
    const auto s = table2_fixture();
    ScheduleOptions opt;
    opt.stochastic_samples = 200;
    opt.stochastic_seed = 5;
    const auto a = schedule(s, opt), b = schedule(s, opt);
    ASSERT_TRUE(a.stochastic);
    EXPECT_EQ(a.stochastic->samples, 200u);
    EXPECT_EQ(a.stochastic->mean, b.stochastic->mean);
    EXPECT_GT(a.stochastic->stddev, 0.0);
    EXPECT_EQ(a.breakdown.total, schedule(s).breakdown.total);  // scoring stays deterministic
}

TEST(Compare, ProposedOnlyMatchesSchedule) {
    auto cases = small_cases(4, 100);
    cases.push_back({table2_fixture(), {}});
    std::vector<Scenario> batch;
    for (auto& c : cases) batch.push_back(c.s);
    const auto rep = compare(batch, {Allocator::Proposed});
    ASSERT_EQ(rep.cells.size(), batch.size());
    EXPECT_EQ(rep.seeds.size(), batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        try {
            const auto r = schedule(batch[i]);
            EXPECT_TRUE(rep.cells[i].feasible);
            EXPECT_EQ(rep.cells[i].breakdown.total, r.breakdown.total);
        } catch (const NoFeasibleSchedule&) {
            EXPECT_FALSE(rep.cells[i].feasible);
        }
    }
}

TEST(Compare, ProposedSurrogateNotAboveUniform) {
    for (const auto& [s, templates] : small_cases(10, 100)) {
        ScheduleOptions opt;
        opt.allocator = Allocator::UA;
        ScheduleResult r;
        try {
            r = schedule_templates(s, templates, opt);
        } catch (const NoFeasibleSchedule&) {
            continue;
        }
        for (UavIndex m = 0; m < s.uavs.size(); ++m) {
            const auto pr = build_problem(s, r.best, m);
            EXPECT_LE(solve_p4(pr).objective, p4_objective(pr, rho_of(r.allocations[m])) * (1 + 1e-6));
        }
    }
}

TEST(Compare, DeterministicReport) {
    std::vector<Scenario> batch;
    for (auto& c : small_cases(5, 100)) batch.push_back(c.s);
    ScheduleOptions opt;
    opt.alloc.seed = 77;
    const std::vector<Allocator> all(std::begin(kAllAllocators), std::end(kAllAllocators));
    const auto a = compare(batch, all, opt), b = compare(batch, all, opt);
    EXPECT_EQ(strip_wall_time(a), strip_wall_time(b));
    EXPECT_EQ(a.allocator_seed, 77u);
    EXPECT_EQ(a.cells.size(), batch.size() * all.size());
    EXPECT_EQ(a.summary.size(), all.size());
}

TEST(Compare, EmptyInputsRejected) {
    EXPECT_THROW(compare({}, {Allocator::Proposed}), Error);
    EXPECT_THROW(compare({table2_fixture()}, {}), Error);
}

TEST(Csv, HeadersAndRowCounts) {
    const auto s = table2_fixture();
    ScheduleOptions opt;
    opt.search.limit = 5;
    const auto r = schedule(s, opt);
    std::ostringstream log, alloc;
    csv::write_score_log(log, s, r.log);
    csv::write_allocations(alloc, s, r.best, r.allocations);
    auto lines = [](const std::string& text) {
        std::vector<std::string> out;
        std::istringstream in(text);
        for (std::string l; std::getline(in, l);) out.push_back(l);
        return out;
    };
    const auto l = lines(log.str()), a = lines(alloc.str());
    EXPECT_EQ(l.front(), csv::kScoreLogHeader);
    EXPECT_EQ(l.size(), 6u);
    EXPECT_EQ(a.front(), csv::kAllocationHeader);
    EXPECT_EQ(a.size(), 1 + r.allocations[0].sps.size() + r.allocations[1].sps.size());
    EXPECT_EQ(log.str().find('\r'), std::string::npos);
    EXPECT_EQ(csv::field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv::field("say \"x\""), "\"say \"\"x\"\"\"");
}
