#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace panorama;
using panorama::testing::set_of;

namespace {

CostModel costs(std::initializer_list<std::pair<const char*, double>> q) {
    CostModel m;
    for (const auto& [id, ms] : q) m.set(id, ms);
    return m;
}

DwellTracker dwell_5000() {
    DwellTracker t(Timestamp{1}, Millis{0});
    t.record_read(set_of({"n3", "n4", "n5"}), Millis{0});
    t.record_read(set_of({"n3", "n4", "n5"}), Millis{5000});
    return t;
}

}  // namespace

TEST(Dwell, TwoReads) {
    DwellTracker t(Timestamp{1}, Millis{0});
    t.record_read(set_of({"n3", "n4", "n5"}), Millis{0});
    EXPECT_EQ(t.dwell("n3"), Millis{0});
    t.record_read(set_of({"n3", "n4", "n5"}), Millis{1000});
    EXPECT_EQ(t.dwell("n3"), Millis{1000});
    EXPECT_EQ(t.dwell("n4"), Millis{1000});
    EXPECT_EQ(t.dwell("n5"), Millis{1000});
    EXPECT_EQ(t.dwell("n6"), Millis{0});
}

TEST(Dwell, ViewportChange) {
    DwellTracker t(Timestamp{1}, Millis{0});
    t.record_read(set_of({"n3", "n4", "n5"}), Millis{0});
    t.record_read(set_of({"n5", "n6", "n7"}), Millis{1000});
    t.record_read(set_of({"n5", "n6", "n7"}), Millis{2000});
    EXPECT_EQ(t.dwell("n5"), Millis{2000});
    EXPECT_EQ(t.dwell("n6"), Millis{1000});
    EXPECT_EQ(t.dwell("n7"), Millis{1000});
    EXPECT_EQ(t.dwell("n3"), Millis{1000});
}

TEST(Dwell, ClockBackwards) {
    DwellTracker t(Timestamp{1}, Millis{100});
    EXPECT_THROW(t.record_read(set_of({"n3"}), Millis{50}), Error);
}

TEST(Priority, HandComputed) {
    auto t = dwell_5000();
    auto q = costs({{"n3", 2000}, {"n4", 4000}, {"n5", 1000}, {"n6", 10000}});
    EXPECT_DOUBLE_EQ(priority(t, q, "n5"), 5.0);
    EXPECT_DOUBLE_EQ(priority(t, q, "n3"), 2.5);
    EXPECT_DOUBLE_EQ(priority(t, q, "n4"), 1.25);
    EXPECT_DOUBLE_EQ(priority(t, q, "n6"), 0.0);
}

TEST(Priority, FloorAndZero) {
    DwellTracker t(Timestamp{1}, Millis{0});
    t.record_read(set_of({"a"}), Millis{0});
    t.record_read(set_of({"a"}), Millis{10});
    auto q = costs({{"a", 0.01}, {"b", 5}});
    EXPECT_DOUBLE_EQ(priority(t, q, "a"), 10.0);
    EXPECT_DOUBLE_EQ(priority(t, q, "b"), 0.0);
}

TEST(Scheduler, TpPicksHighestRatio) {
    auto t = dwell_5000();
    auto q = costs({{"n3", 2000}, {"n4", 4000}, {"n5", 1000}, {"n6", 10000}});
    Scheduler s(PolicyKind::TP);
    EXPECT_EQ(s.next_view(t, q, set_of({"n3", "n4", "n5", "n6"})), NodeId("n5"));
}

TEST(Scheduler, TpWithoutDwellFallsBackToCheapest) {
    DwellTracker t(Timestamp{1}, Millis{0});
    auto q = costs({{"n3", 2000}, {"n4", 4000}, {"n5", 1000}, {"n6", 10000}});
    Scheduler s(PolicyKind::TP);
    EXPECT_EQ(s.next_view(t, q, set_of({"n3", "n4", "n5", "n6"})), NodeId("n5"));
}

TEST(Scheduler, Antifreeze) {
    DwellTracker t(Timestamp{1}, Millis{0});
    Scheduler s(PolicyKind::Antifreeze);
    EXPECT_EQ(s.next_view(t, costs({{"a", 3}, {"b", 1}, {"c", 2}}), set_of({"a", "b", "c"})), NodeId("b"));
}

TEST(Scheduler, MetricOptIgnoresCost) {
    auto t = dwell_5000();
    auto q = costs({{"n3", 2000}, {"n4", 4000}, {"n5", 1000}, {"n6", 10000}});
    Scheduler s(PolicyKind::MetricOpt);
    // n3, n4, n5 tie on D; the smaller Q wins
    EXPECT_EQ(s.next_view(t, q, set_of({"n3", "n4", "n5", "n6"})), NodeId("n5"));
    EXPECT_EQ(s.next_view(t, q, set_of({"n3", "n4", "n6"})), NodeId("n3"));
}

TEST(Scheduler, NoOptIsSeeded) {
    DwellTracker t(Timestamp{1}, Millis{0});
    auto q = costs({{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}});
    const auto group = set_of({"a", "b", "c", "d"});
    Scheduler x(PolicyKind::NoOpt, 7), y(PolicyKind::NoOpt, 7);
    std::set<NodeId> seen;
    for (int i = 0; i < 50; ++i) {
        auto a = x.next_view(t, q, group);
        EXPECT_EQ(a, y.next_view(t, q, group));
        EXPECT_TRUE(group.count(a));
        seen.insert(a);
    }
    EXPECT_GT(seen.size(), 1u);
}

TEST(Scheduler, EmptyGroup) {
    Scheduler s;
    EXPECT_THROW(s.next_view(DwellTracker{}, CostModel{}, {}), Error);
}

TEST(Scheduler, ParsePolicy) {
    for (auto p : {PolicyKind::TP, PolicyKind::NoOpt, PolicyKind::Antifreeze, PolicyKind::MetricOpt})
        EXPECT_EQ(parse_policy(to_string(p)), p);
    EXPECT_THROW(parse_policy("fifo"), Error);
}

TEST(CostModel, Ewma) {
    CostModel m(CostModel::Mode::EwmaMeasured);
    m.set("a", 100);
    m.observe("a", Millis{300});
    EXPECT_DOUBLE_EQ(m.estimate("a"), 200.0);
    CostModel known(CostModel::Mode::Known);
    known.set("a", 100);
    known.observe("a", Millis{300});
    EXPECT_DOUBLE_EQ(known.estimate("a"), 100.0);
}
