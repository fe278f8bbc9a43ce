#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "fixtures.hpp"
#include "panorama/checker.hpp"

using namespace panorama;
using panorama::testing::set_of;
using panorama::testing::SmallEngine;

namespace {

std::size_t rescan_ucs(const Engine& e) {
    const auto ts = e.snapshot_meta().latest;
    std::size_t n = 0;
    for (const auto& id : e.graph().nodes()) n += e.graph().item_at(id, ts).is_uc();
    return n;
}

ReturnedState result_at(std::uint64_t v, const char* node) {
    return {ItemKind::Result, Timestamp{v}, payload_token(node, Timestamp{v})};
}
ReturnedState uc_at(std::uint64_t v) { return {ItemKind::UnderComputation, Timestamp{v}, ""}; }

}  // namespace

TEST(Engine, FreshMeta) {
    SmallEngine s;
    EXPECT_EQ(s.engine.snapshot_meta(), (MetaInfo{kInitialVersion, kInitialVersion, 0, {}}));
    EXPECT_FALSE(s.engine.has_running_write());
    EXPECT_FALSE(s.engine.schedule_next().has_value());
}

TEST(Engine, BeginWrite) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    EXPECT_EQ(t1, Timestamp{1});
    EXPECT_EQ(s.engine.update_set(t1), set_of({"n1", "n3", "n4", "n5", "n6"}));
    auto meta = s.engine.snapshot_meta();
    EXPECT_EQ(meta.committed, kInitialVersion);
    EXPECT_EQ(meta.latest, t1);
    EXPECT_EQ(meta.uc_count, 5u);

    auto t2 = s.engine.begin_write(set_of({"n2"}));
    EXPECT_EQ(s.engine.update_set(t2), set_of({"n2", "n6", "n7", "n8"}));
    // n6's UC@t2 shadows its UC@t1: eight distinct nodes are UC in the latest graph
    EXPECT_EQ(s.engine.snapshot_meta().uc_count, 8u);
    EXPECT_EQ(s.engine.snapshot_meta().uc_count, rescan_ucs(s.engine));
    EXPECT_EQ(s.engine.running_writes(), (std::vector<Timestamp>{t1, t2}));
}

TEST(Engine, BeginWriteErrors) {
    SmallEngine s;
    EXPECT_THROW(s.engine.begin_write({}), Error);
    EXPECT_THROW(s.engine.begin_write(set_of({"n3"})), Error);
    EXPECT_THROW(s.engine.begin_write(set_of({"zz"})), Error);
    try {
        s.engine.begin_write({});
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyWriteSet);
    }
}

TEST(Engine, StepsAndCommit) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    s.install(t1, 4);  // n1, n3, n4, n5
    auto meta = s.engine.snapshot_meta();
    EXPECT_EQ(meta.uc_count, 1u);
    EXPECT_EQ(meta.committed, kInitialVersion);
    auto last = s.engine.step_write(t1, s.exec);
    EXPECT_EQ(last.kind, StepResult::Kind::Committed);
    EXPECT_EQ(last.node, NodeId("n6"));
    EXPECT_EQ(s.engine.snapshot_meta(), (MetaInfo{t1, t1, 0, {}}));
    EXPECT_EQ(s.engine.status(t1), WriteStatus::Committed);
    try {
        s.engine.step_write(t1, s.exec);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AlreadyCommitted);
    }
}

TEST(Engine, ScheduleNextIsIdempotent) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    auto a = s.engine.schedule_next();
    auto b = s.engine.schedule_next();
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->node, b->node);
    EXPECT_EQ(a->node, NodeId("n1"));
    auto r = s.engine.complete(*a, {payload_token(a->node, t1), a->cost});
    EXPECT_EQ(r.kind, StepResult::Kind::Installed);
    EXPECT_EQ(s.engine.schedule_next()->node, NodeId("n3"));
}

TEST(Engine, UcCountMatchesRescanThroughout) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    auto t2 = s.engine.begin_write(set_of({"n2"}));
    auto t3 = s.engine.begin_write(set_of({"n1", "n2"}));
    for (auto ts : {t1, t2, t3}) {
        while (s.engine.status(ts) == WriteStatus::Running) {
            s.engine.step_write(ts, s.exec);
            EXPECT_EQ(s.engine.snapshot_meta().uc_count, rescan_ucs(s.engine));
        }
    }
    // the committed graph holds no UC
    for (const auto& id : s.engine.graph().nodes())
        EXPECT_FALSE(s.engine.graph().item_at(id, s.engine.snapshot_meta().committed).is_uc());
    EXPECT_EQ(s.engine.snapshot_meta(), (MetaInfo{t3, t3, 0, {}}));
}

TEST(Engine, ReadMidWrite) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    s.install(t1, 2);  // n1, n3
    const auto vp = set_of({"n3", "n4", "n5"});

    auto gcpb = s.engine.read(vp, {LensKind::GCPB, 0});
    EXPECT_EQ(gcpb.states.at("n3"), result_at(1, "n3"));
    EXPECT_EQ(gcpb.states.at("n4"), uc_at(1));
    EXPECT_EQ(gcpb.states.at("n5"), uc_at(1));
    EXPECT_EQ(gcpb.uc_count(), 2u);

    auto gcnb = s.engine.read(vp, {LensKind::GCNB, 0});
    for (const char* n : {"n3", "n4", "n5"}) EXPECT_EQ(gcnb.states.at(n), result_at(0, n));
    EXPECT_EQ(gcnb.seq, gcpb.seq + 1);

    auto icnb = s.engine.read(vp, {LensKind::ICNB, 0});
    EXPECT_EQ(icnb.states.at("n3"), result_at(1, "n3"));
    EXPECT_EQ(icnb.states.at("n4"), result_at(0, "n4"));

    EXPECT_THROW(s.engine.read({}, {LensKind::GCPB, 0}), Error);
    EXPECT_THROW(s.engine.read(set_of({"zz"}), {LensKind::GCPB, 0}), Error);
}

TEST(Engine, LastReadTracksAndResetsOnLensChange) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    s.install(t1, 2);
    s.engine.read(set_of({"n3"}), {LensKind::GCPB, 0});
    EXPECT_EQ(s.engine.last_read().at("n3"), t1);
    s.engine.read(set_of({"n4"}), {LensKind::GCPB, 0});
    EXPECT_EQ(s.engine.last_read().size(), 2u);
    s.engine.read(set_of({"n5"}), {LensKind::LCMB, 0});
    EXPECT_EQ(s.engine.last_read().size(), 1u);
}

TEST(Engine, DwellFollowsReads) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    s.engine.read(set_of({"n3", "n4"}), {LensKind::GCPB, 0});
    s.clock.advance(Millis{500});
    s.engine.read(set_of({"n5"}), {LensKind::GCPB, 0});
    auto d = s.engine.dwell(t1);
    EXPECT_EQ(d["n3"], Millis{500});
    EXPECT_EQ(d["n5"], Millis{0});
}

TEST(Engine, GarbageCollection) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    EXPECT_EQ(s.engine.gc_watermark(), kInitialVersion);
    EXPECT_EQ(s.engine.collect_garbage(), 0u);
    s.finish(t1);
    EXPECT_EQ(s.engine.gc_watermark(), t1);
    GcAudit audit;
    EXPECT_EQ(s.engine.collect_garbage(&audit), 5u);
    EXPECT_EQ(audit.mismatches, 0u);
    auto r = s.engine.read(set_of({"n3", "n7"}), {LensKind::GCNB, 0});
    EXPECT_EQ(r.states.at("n3").version, t1);
    EXPECT_EQ(r.states.at("n7").version, kInitialVersion);
}

TEST(Engine, PolicyChangeOnlyBetweenWrites) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    EXPECT_THROW(s.engine.set_policy(PolicyKind::NoOpt, 1), Error);
    s.finish(t1);
    s.engine.set_policy(PolicyKind::NoOpt, 1);
    EXPECT_EQ(s.engine.policy(), PolicyKind::NoOpt);
}

TEST(Engine, TraceRecordsWrites) {
    SmallEngine s;
    auto t1 = s.engine.begin_write(set_of({"n1"}));
    s.clock.advance(Millis{10});
    s.finish(t1);
    auto tr = s.engine.trace();
    ASSERT_EQ(tr.writes.size(), 1u);
    EXPECT_EQ(tr.writes[0].update_set.size(), 5u);
    EXPECT_EQ(tr.writes[0].installed_at.size(), 5u);
    EXPECT_EQ(tr.writes[0].committed_at, Millis{10});
}

// Four readers against a live writer; every lens's declared properties must hold.
class ConcurrentReads : public ::testing::TestWithParam<Lens> {};

TEST_P(ConcurrentReads, CheckerFindsNothing) {
    SteadyClock clock;
    Engine engine(ViewGraph::build(small_spec()), clock);
    std::atomic<bool> done{false};
    std::thread writer([&] {
        InstantExecutor exec;
        const NodeSet sets[] = {set_of({"n1"}), set_of({"n2"}), set_of({"n1", "n2"})};
        for (int i = 0; !done.load(); ++i) {
            auto ts = engine.begin_write(sets[i % 3]);
            while (engine.status(ts) == WriteStatus::Running) {
                engine.step_write(ts, exec);
                std::this_thread::yield();
            }
            engine.collect_garbage();
        }
    });
    const auto layout = small_spec().dashboard();
    std::vector<std::thread> readers;
    for (int r = 0; r < 4; ++r)
        readers.emplace_back([&, r] {
            std::mt19937 rng(r);
            for (int i = 0; i < 2500; ++i) {
                const std::size_t off = rng() % (layout.size() - 2);
                engine.read({layout[off], layout[off + 1], layout[off + 2]}, GetParam());
            }
        });
    for (auto& t : readers) t.join();
    done = true;
    writer.join();

    auto trace = engine.trace();
    ASSERT_EQ(trace.reads.size(), 10000u);
    auto violations = check_properties(trace);
    EXPECT_TRUE(violations.empty()) << violations.front().to_json().dump();
}

INSTANTIATE_TEST_SUITE_P(AllLenses, ConcurrentReads, ::testing::ValuesIn(all_lenses(1)),
                         [](const auto& info) {
                             std::string n = info.param.name();
                             std::erase(n, '-');
                             return n;
                         });
