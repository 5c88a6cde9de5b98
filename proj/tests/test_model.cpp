#include <agvsched/model.hpp>
#include <agvsched/scenario.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace agvsched;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

// One UAV directly above one SP, one component.
Scenario one_link(double data_bits = 1e6) {
    Scenario s;
    s.vc = VcGraph({{"s1", {0, 0, 0}, 1, 0.15}, {"s2", {100, 0, 0}, 1, 0.15}}, {{0, 1, 0.05}});
    s.uavs = {{"u1", {0, 0, 10}, 2.0, {0, 1}}};
    s.tasks.emplace_back(0, std::vector<Component>{{"a", data_bits}}, std::vector<TaskEdge>{});
    return s;
}

PowerAllocation alloc_for(const Scenario& s, std::vector<SpIndex> sps, std::vector<double> q) {
    PowerAllocation a;
    a.sps = std::move(sps);
    a.power = std::move(q);
    for (std::size_t i = 0; i < a.sps.size(); ++i)
        a.rate.push_back(rate(a.power[i], a2g_gain(s.uavs[0], s.vc.sp(a.sps[i]), s.channel), s.channel));
    return a;
}

}  // namespace

TEST(Channel, BreakpointDefaultAntennas) {
    ChannelParams ch;
    EXPECT_NEAR(breakpoint_distance(ch), 4 * 2.25 / 0.0508 - 0.0127, 1e-9);
    EXPECT_NEAR(breakpoint_distance(ch), 177.15, 0.01);
}

TEST(Channel, BreakpointHalfWavelengthAntennas) {
    ChannelParams ch;
    ch.ht = ch.hr = ch.lambda / 2;
    EXPECT_NEAR(breakpoint_distance(ch), 0.75 * ch.lambda, 1e-15);
}

TEST(Channel, BreakpointNonPositive) {
    ChannelParams ch;
    ch.ht = ch.hr = 0.01;
    ch.lambda = 1.0;  // 4*1e-4 < 0.25
    EXPECT_EQ(code_of([&] { breakpoint_distance(ch); }), ErrorCode::NonPositiveBreakpoint);
}

TEST(Channel, PathLossAtReferenceDistance) {
    ChannelParams ch;
    EXPECT_DOUBLE_EQ(v2v_path_loss(ch.d0, ch), ch.pl0);
}

TEST(Channel, PathLossFirstSlope) {
    ChannelParams ch;
    EXPECT_NEAR(v2v_path_loss(2 * ch.d0, ch), ch.pl0 + 6.0206, 1e-4);
}

TEST(Channel, PathLossContinuousAtBreakpoint) {
    ChannelParams ch;
    const double db = breakpoint_distance(ch);
    for (double eps : {1e-3, 1e-6})
        EXPECT_NEAR(v2v_path_loss(db + eps, ch), v2v_path_loss(db, ch), 10 * (ch.eta1 + ch.eta2) * eps / db);
}

TEST(Channel, PathLossMonotone) {
    ChannelParams ch;
    double prev = v2v_path_loss(ch.d0, ch);
    for (double d = ch.d0; d < 2000; d *= 1.01) {
        const double v = v2v_path_loss(d, ch);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Channel, PathLossBelowReference) {
    ChannelParams ch;
    EXPECT_EQ(code_of([&] { v2v_path_loss(ch.d0 / 2, ch); }), ErrorCode::BelowReferenceDistance);
}

TEST(Channel, PathLossShadowingIsAdditive) {
    ChannelParams ch;
    EXPECT_DOUBLE_EQ(v2v_path_loss(50, ch, 2.5), v2v_path_loss(50, ch) + 2.5);
}

TEST(Cost, ColocatedIsFree) {
    auto s = table2_fixture();
    EXPECT_EQ(exchange_cost(s, 3, 3), 0.0);
}

TEST(Cost, LinearInPathLoss) {
    auto s = table2_fixture();
    const double d = distance(s.vc.sp(1).position, s.vc.sp(4).position);
    EXPECT_DOUBLE_EQ(exchange_cost(s, 1, 4), 0.15 * v2v_path_loss(d, s.channel) + 0.001);
    // The coefficients applied to a 100 dB loss.
    EXPECT_NEAR(s.config.cost_slope * 100.0 + s.config.cost_offset, 15.001, 1e-12);
}

TEST(Cost, MonotoneInDistance) {
    Scenario s;
    std::vector<ServiceProvider> sps{{"s0", {0, 0, 0}, 1, 0.1}};
    for (int i = 1; i <= 40; ++i) sps.push_back({"s" + std::to_string(i), {25.0 * i, 0, 0}, 1, 0.1});
    s.vc = VcGraph(std::move(sps), {});
    for (SpIndex k = 2; k <= 40; ++k) EXPECT_GE(exchange_cost(s, 0, k), exchange_cost(s, 0, k - 1));
}

TEST(Cost, PairwiseSymmetricAndChecked) {
    auto s = table2_fixture();
    // Task 0: A-B is an edge, B-C is not.
    EXPECT_DOUBLE_EQ(pairwise_exchange_cost(s, 0, 0, 1, 4, 1), pairwise_exchange_cost(s, 0, 1, 0, 1, 4));
    EXPECT_EQ(pairwise_exchange_cost(s, 0, 0, 1, 4, 4), 0.0);
    EXPECT_DOUBLE_EQ(pairwise_exchange_cost(s, 0, 0, 1, 4, 1), exchange_cost(s, 4, 1));
    EXPECT_EQ(code_of([&] { pairwise_exchange_cost(s, 0, 1, 2, 1, 2); }), ErrorCode::NotATaskEdge);
}

TEST(Gain, ReferenceAndInverseSquare) {
    ChannelParams ch;
    Uav u{"u", {0, 0, 1}, 1, {}};
    EXPECT_DOUBLE_EQ(a2g_gain(u, {"s", {0, 0, 0}, 1, 0.1}, ch), ch.g1);
    u.position = {0, 0, 10};
    EXPECT_NEAR(a2g_gain(u, {"s", {0, 0, 0}, 1, 0.1}, ch), ch.g1 / 100, 1e-15);
    EXPECT_GT(a2g_gain(u, {"s", {1, 0, 0}, 1, 0.1}, ch), a2g_gain(u, {"s", {2, 0, 0}, 1, 0.1}, ch));
}

TEST(Gain, ZeroDistance) {
    ChannelParams ch;
    Uav u{"u", {3, 4, 0}, 1, {}};
    EXPECT_EQ(code_of([&] { a2g_gain(u, {"s", {3, 4, 0}, 1, 0.1}, ch); }), ErrorCode::ZeroDistance);
}

TEST(Rate, ShannonValues) {
    ChannelParams ch;
    ch.bandwidth = 10e6;
    ch.noise = 1.0;
    EXPECT_EQ(rate(0.0, 1.0, ch), 0.0);
    EXPECT_NEAR(rate(1.0, 1.0, ch), 1e7, 1e-6);
    EXPECT_NEAR(rate(3.0, 1.0, ch), 2e7, 1e-6);
    EXPECT_EQ(code_of([&] { rate(-1e-3, 1.0, ch); }), ErrorCode::NegativePower);
}

TEST(Rate, IncreasingAndConcave) {
    ChannelParams ch;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uq(0.01, 2.0), ug(-7, -3);
    for (int i = 0; i < 1000; ++i) {
        const double q = uq(rng), g = std::pow(10.0, ug(rng)), h = 1e-3 * q;
        const double lo = rate(q - h, g, ch), mid = rate(q, g, ch), hi = rate(q + h, g, ch);
        EXPECT_GT(hi, mid);
        EXPECT_LT(hi - 2 * mid + lo, 0.0);
    }
}

TEST(Time, SingleSpLoadOverRatePlusExec) {
    auto s = one_link();
    s.channel.noise = 1e-3;
    Template tpl{{0}};
    auto a = alloc_for(s, {0}, {1.0});
    EXPECT_NEAR(completion_time(s, tpl, 0, a), 1e6 / a.rate[0] + 0.15, 1e-12);
}

TEST(Time, HandValueAtTenMegabit) {
    // Choose the power that yields exactly 1e7 bit/s: q*g/N0 = 1.
    auto s = one_link();
    const double g = a2g_gain(s.uavs[0], s.vc.sp(0), s.channel);
    auto a = alloc_for(s, {0}, {s.channel.noise / g});
    ASSERT_NEAR(a.rate[0], 1e7, 1e-3);
    EXPECT_NEAR(completion_time(s, Template{{0}}, 0, a), 0.1 + 0.15, 1e-12);
}

TEST(Time, EqualLoadsEqualRates) {
    Scenario s;
    s.vc = VcGraph({{"s1", {-50, 0, 0}, 1, 0.15}, {"s2", {50, 0, 0}, 1, 0.15}}, {{0, 1, 0.05}});
    s.uavs = {{"u1", {0, 0, 90}, 2.0, {0, 1}}};
    s.tasks.emplace_back(0, std::vector<Component>{{"a", 5e5}, {"b", 5e5}}, std::vector<TaskEdge>{{0, 1, 0.1}});
    auto both = alloc_for(s, {0, 1}, {1.0, 1.0});
    const double alone = 5e5 / both.rate[0] + 0.15;
    EXPECT_NEAR(completion_time(s, Template{{0, 1}}, 0, both), alone, 1e-12);
}

TEST(Time, MorePowerOnSlowestLinkIsFaster) {
    auto s = one_link();
    Template tpl{{0}};
    EXPECT_LT(completion_time(s, tpl, 0, alloc_for(s, {0}, {1.5})), completion_time(s, tpl, 0, alloc_for(s, {0}, {1.0})));
}

TEST(Time, MissingRate) {
    auto s = one_link();
    EXPECT_EQ(code_of([&] { completion_time(s, Template{{0}}, 0, alloc_for(s, {1}, {1.0})); }), ErrorCode::MissingRate);
    EXPECT_EQ(code_of([&] { uav_energy(s, Template{{0}}, 0, alloc_for(s, {0}, {0.0})); }), ErrorCode::MissingRate);
}

TEST(Energy, EmptyTaskIsTailEnergy) {
    Scenario s = one_link();
    s.tasks = {GraphTask(0, {}, {})};
    EXPECT_DOUBLE_EQ(uav_energy(s, Template{}, 0, PowerAllocation{}), s.config.tail_energy);
}

TEST(Energy, SingleTermHandValue) {
    auto s = one_link();
    const double g = a2g_gain(s.uavs[0], s.vc.sp(0), s.channel);
    s.channel.noise = 1.0 * g;  // q = 1 W gives q*g/N0 = 1, so r = 1e7
    auto a = alloc_for(s, {0}, {1.0});
    EXPECT_NEAR(uav_energy(s, Template{{0}}, 0, a), 0.1 + s.config.tail_energy, 1e-12);
}

TEST(Energy, LinearInDataSize) {
    auto a1 = one_link(4e5), a2 = one_link(8e5);
    auto al = alloc_for(a1, {0}, {0.7});
    const double l = a1.config.tail_energy;
    EXPECT_NEAR(uav_energy(a2, Template{{0}}, 0, al) - l, 2 * (uav_energy(a1, Template{{0}}, 0, al) - l), 1e-15);
}

TEST(Objective, ZeroWeightsNoCrossEdges) {
    auto s = one_link();
    s.config.omega1 = s.config.omega2 = 0;
    EXPECT_EQ(objective(s, Template{{0}}, {alloc_for(s, {0}, {1.0})}).total, 0.0);
}

TEST(Objective, ComposesSingleLink) {
    auto s = one_link();
    auto a = alloc_for(s, {0}, {1.2});
    const auto b = objective(s, Template{{0}}, {a});
    const double t = completion_time(s, Template{{0}}, 0, a), c = uav_energy(s, Template{{0}}, 0, a);
    EXPECT_DOUBLE_EQ(b.total, s.config.omega1 * t + s.config.omega2 * c);
    EXPECT_EQ(b.exchange_term, 0.0);
}

TEST(Objective, FixtureBreakdown) {
    auto s = table2_fixture();
    Template tpl{{4, 1, 3, 4, 6, 5, 4, 5, 2}};
    std::vector<PowerAllocation> allocs;
    for (UavIndex m = 0; m < 2; ++m) {
        auto loads = sp_loads(s, tpl, m);
        PowerAllocation a;
        for (auto [k, bits] : loads) {
            a.sps.push_back(k);
            a.power.push_back(s.uavs[m].power_budget / static_cast<double>(loads.size()));
            a.rate.push_back(rate(a.power.back(), a2g_gain(s.uavs[m], s.vc.sp(k), s.channel), s.channel));
        }
        allocs.push_back(a);
    }
    const auto b = objective(s, tpl, allocs);
    const double rebuilt = s.config.omega1 * b.time_term + s.config.omega2 * b.energy_term + s.config.omega3 * b.exchange_term;
    EXPECT_NEAR(b.total, rebuilt, 1e-12 * b.total);

    // Cross-SP edges under this template: AB, AC in task 1; EF, EH, FG, FI, GI in task 2.
    const double expected = exchange_cost(s, 4, 1) + exchange_cost(s, 4, 3) + exchange_cost(s, 6, 5) +
                            exchange_cost(s, 6, 5) + exchange_cost(s, 5, 4) + exchange_cost(s, 5, 2) +
                            exchange_cost(s, 4, 2);
    EXPECT_NEAR(b.exchange_term, expected, 1e-12 * expected);

    // Without the exchange weight, V2V channel parameters cannot affect F.
    s.config.omega3 = 0;
    const double f0 = objective(s, tpl, allocs).total;
    EXPECT_DOUBLE_EQ(f0, s.config.omega1 * b.time_term + s.config.omega2 * b.energy_term);
    s.channel.pl0 += 20;
    s.channel.eta2 = 3.5;
    EXPECT_DOUBLE_EQ(objective(s, tpl, allocs).total, f0);
}

TEST(Objective, ExchangeInvariantUnderEndpointRelabel) {
    auto s = table2_fixture();
    Template tpl{{4, 1, 3, 4, 6, 5, 4, 5, 2}};
    auto flipped = s;
    std::vector<GraphTask> tasks;
    for (const auto& t : s.tasks) {
        std::vector<TaskEdge> edges;
        for (auto e : t.edges()) edges.push_back({e.b, e.a, e.weight});
        tasks.emplace_back(t.owner(), t.components(), edges);
    }
    flipped.tasks = tasks;
    EXPECT_DOUBLE_EQ(exchange_term(flipped, tpl), exchange_term(s, tpl));
}

TEST(Types, GraphInvariants) {
    EXPECT_EQ(code_of([] { VcGraph({{"a", {}, 1, 0.1}}, {{0, 0, 0.05}}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { VcGraph({{"a", {}, 1, 0.1}, {"b", {}, 1, 0.1}}, {{0, 1, 0.05}, {1, 0, 0.05}}); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { VcGraph({{"a", {}, -1, 0.1}}, {}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { GraphTask(0, {{"a", 0.0}}, {}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { GraphTask(0, {{"a", 1.0}, {"b", 1.0}}, {{0, 1, 0.1}, {1, 0, 0.2}}); }),
              ErrorCode::InvalidArgument);
}

TEST(Types, ConfigValidation) {
    SchedulingConfig c;
    c.alpha1 = 1.0;
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidArgument);
    c = {};
    c.p = 0;
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidArgument);
    ChannelParams ch;
    ch.noise = 0;
    EXPECT_EQ(code_of([&] { ch.validate(); }), ErrorCode::InvalidArgument);
}
