#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "panorama/metrics.hpp"
#include "random_trace.hpp"

using namespace panorama;
using panorama::testing::set_of;

namespace {

ReadEvent event(std::int64_t at, std::size_t ucs, std::size_t results, std::uint64_t latest = 0,
                std::uint64_t result_version = 0) {
    ReadEvent e;
    e.issued_at = e.returned_at = Millis{at};
    e.meta_at_read.latest = Timestamp{latest};
    for (std::size_t i = 0; i < ucs; ++i)
        e.states[NodeId("u" + std::to_string(i))] = {ItemKind::UnderComputation, Timestamp{latest}, ""};
    for (std::size_t i = 0; i < results; ++i)
        e.states[NodeId("n" + std::to_string(i + 3))] = {ItemKind::Result, Timestamp{result_version}, "x"};
    return e;
}

WriteRecord write_n1() {
    WriteRecord w;
    w.ts = Timestamp{1};
    w.write_set = set_of({"n1"});
    w.update_set = set_of({"n1", "n3", "n4", "n5", "n6"});
    return w;
}

StreamingMetrics stream(const Trace& t) {
    StreamingMetrics m;
    for (const auto& w : t.writes) m.on_write(w.ts, w.update_set);
    for (const auto& e : t.reads) m.on_read(e);
    return m;
}

}  // namespace

TEST(Metrics, InvisibilityHandExample) {
    Trace t;
    t.reads = {event(0, 2, 0), event(100, 0, 0)};
    EXPECT_EQ(invisibility(t), 200);
    auto r = compute_metrics(t);
    EXPECT_EQ(r.invisibility_ms, 200);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].length, Millis{100});
    EXPECT_EQ(r.rows[1].length, Millis{0});
}

TEST(Metrics, ZeroCases) {
    Trace t;
    EXPECT_EQ(invisibility(t), 0);
    t.reads = {event(0, 5, 0)};
    EXPECT_EQ(invisibility(t), 0);
    t.reads = {event(0, 0, 3), event(50, 0, 3)};
    EXPECT_EQ(invisibility(t), 0);
    EXPECT_EQ(staleness(t), 0);
}

TEST(Metrics, GcnbStalenessMidWrite) {
    Trace t;
    t.writes = {write_n1()};
    t.reads = {event(0, 0, 3, 1, 0), event(100, 0, 3, 1, 0), event(250, 0, 3, 1, 1)};
    auto r = compute_metrics(t);
    EXPECT_EQ(r.rows[0].stale_count, 3u);
    EXPECT_EQ(r.rows[2].stale_count, 0u);
    EXPECT_EQ(r.staleness_ms, 3 * 250);
}

TEST(Metrics, ResultsAtLatestAreNeverStale) {
    Trace t;
    t.writes = {write_n1()};
    t.reads = {event(0, 0, 4, 1, 1), event(10, 0, 4, 1, 1)};
    EXPECT_EQ(staleness(t), 0);
}

TEST(Metrics, GcpbTraceHasNoStaleness) {
    ExperimentConfig c;
    c.spec = small_spec();
    c.explore_range = 6;
    c.lens = {LensKind::GCPB, 0};
    c.writes = {{Millis{0}, set_of({"n1"})}};
    auto run = run_experiment(c);
    EXPECT_EQ(staleness(run.trace), 0);
    EXPECT_GT(invisibility(run.trace), 0);
}

TEST(Metrics, Errors) {
    Trace t;
    t.reads = {event(100, 0, 1), event(50, 0, 1)};
    EXPECT_THROW(compute_metrics(t), Error);
    Trace missing;
    missing.reads = {event(0, 0, 1, 2)};
    try {
        compute_metrics(missing);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingVersionHistory);
    }
    StreamingMetrics m;
    EXPECT_THROW(m.on_read(event(0, 0, 1, 1)), Error);
}

TEST(Metrics, StreamingEqualsBatch) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        auto t = panorama::testing::random_trace(seed);
        auto batch = compute_metrics(t);
        auto live = stream(t);
        ASSERT_EQ(live.invisibility_ms(), batch.invisibility_ms) << "seed " << seed;
        ASSERT_EQ(live.staleness_ms(), batch.staleness_ms) << "seed " << seed;
        if (!batch.rows.empty()) {
            EXPECT_EQ(live.open_uc_count(), batch.rows.back().uc_count);
            EXPECT_EQ(live.open_stale_count(), batch.rows.back().stale_count);
        }
    }
}

TEST(Metrics, TranslationAndDilation) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto t = panorama::testing::random_trace(seed);
        auto base = compute_metrics(t);
        auto shifted = t, stretched = t;
        for (auto& e : shifted.reads) e.issued_at = e.returned_at = e.returned_at + Millis{12345};
        for (auto& e : stretched.reads) e.issued_at = e.returned_at = e.returned_at * 3;
        EXPECT_EQ(compute_metrics(shifted).invisibility_ms, base.invisibility_ms);
        EXPECT_EQ(compute_metrics(shifted).staleness_ms, base.staleness_ms);
        EXPECT_EQ(compute_metrics(stretched).invisibility_ms, 3 * base.invisibility_ms);
        EXPECT_EQ(compute_metrics(stretched).staleness_ms, 3 * base.staleness_ms);
    }
}

TEST(Metrics, ReportSerialization) {
    Trace t;
    t.reads = {event(0, 2, 1), event(100, 1, 0)};
    auto r = compute_metrics(t);
    std::ostringstream csv;
    r.write_csv(csv);
    EXPECT_EQ(csv.str(), "interval_start_ms,uc_count,stale_count\n0,2,0\n100,1,0\n");
    auto j = r.to_json();
    EXPECT_EQ(j["invisibility_ms"], 200);
    EXPECT_EQ(j["intervals"].size(), 2u);
}

TEST(Metrics, TraceJsonlRoundTrip) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto t = panorama::testing::random_trace(seed);
        std::stringstream ss;
        t.write_jsonl(ss);
        auto back = Trace::read_jsonl(ss);
        ASSERT_EQ(back.reads.size(), t.reads.size());
        ASSERT_EQ(back.writes.size(), t.writes.size());
        EXPECT_EQ(compute_metrics(back).staleness_ms, compute_metrics(t).staleness_ms);
        for (std::size_t i = 0; i < t.reads.size(); ++i) EXPECT_EQ(back.reads[i].states, t.reads[i].states);
    }
}
