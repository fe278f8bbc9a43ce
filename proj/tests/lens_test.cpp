#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace panorama;
using panorama::testing::set_of;
using panorama::testing::SmallEngine;

namespace {

// Write {n1} begun; n1 and n3 installed (min-cost tie-break), n4-n6 still UC.
struct MidWrite : ::testing::Test {
    SmallEngine s;
    Timestamp t1;
    void SetUp() override {
        t1 = s.engine.begin_write(set_of({"n1"}));
        s.install(t1, 2);
    }
    const ViewGraph& g() { return s.engine.graph(); }
    VersionChoice pick(const Lens& lens, const NodeSet& viewport, const LastRead& lr = {}) {
        return select_version(lens, s.engine.snapshot_meta(), viewport, lr, g());
    }
};

}  // namespace

TEST(Lens, ParseAndName) {
    EXPECT_EQ(Lens::parse("gcpb").kind, LensKind::GCPB);
    EXPECT_EQ(Lens::parse("k-lcnb", 2), (Lens{LensKind::KLCNB, 2}));
    EXPECT_EQ(Lens::parse("k-lcnb", 2).label(), "k-lcnb(2)");
    EXPECT_THROW(Lens::parse("gcfb"), Error);
    for (const auto& l : all_lenses(3)) EXPECT_EQ(Lens::parse(l.name(), 3), l);
    EXPECT_EQ(all_lenses(0).size(), 8u);
}

TEST(Lens, CandidatesOfMeta) {
    MetaInfo idle{Timestamp{2}, Timestamp{2}, 0, {}};
    EXPECT_EQ(idle.candidates(), (std::vector<Timestamp>{Timestamp{2}}));
    MetaInfo busy{Timestamp{1}, Timestamp{3}, 4, {Timestamp{2}, Timestamp{3}}};
    EXPECT_EQ(busy.candidates(), (std::vector<Timestamp>{Timestamp{1}, Timestamp{2}, Timestamp{3}}));
}

TEST_F(MidWrite, CountViewportUcs) {
    EXPECT_EQ(count_viewport_ucs(g(), set_of({"n3", "n4", "n5"}), t1), 2u);
    EXPECT_EQ(count_viewport_ucs(g(), set_of({"n3", "n4", "n5", "n6", "n7"}), kInitialVersion), 0u);
    EXPECT_EQ(count_viewport_ucs(g(), set_of({"n7"}), t1), 0u);
}

TEST_F(MidWrite, PreservesMonotonicity) {
    LastRead lr{{NodeId("n5"), t1}};
    EXPECT_FALSE(preserves_monotonicity(g(), set_of({"n5", "n6", "n7"}), kInitialVersion, lr));
    EXPECT_TRUE(preserves_monotonicity(g(), set_of({"n5", "n6", "n7"}), t1, lr));
    EXPECT_TRUE(preserves_monotonicity(g(), set_of({"n3"}), kInitialVersion, {}));
}

TEST_F(MidWrite, GlobalLenses) {
    EXPECT_EQ(pick({LensKind::GCPB, 0}, set_of({"n3"})), VersionChoice::single(t1));
    EXPECT_EQ(pick({LensKind::GCNB, 0}, set_of({"n3"})), VersionChoice::single(kInitialVersion));
    EXPECT_EQ(pick({LensKind::ICNB, 0}, set_of({"n3"})), VersionChoice::newest_result());
}

TEST_F(MidWrite, KGcnbBoundary) {
    // c_uc counts n4, n5, n6 now
    EXPECT_EQ(s.engine.snapshot_meta().uc_count, 3u);
    EXPECT_EQ(pick({LensKind::KGCNB, 3}, set_of({"n3"})), VersionChoice::single(t1));
    EXPECT_EQ(pick({LensKind::KGCNB, 2}, set_of({"n3"})), VersionChoice::single(kInitialVersion));
}

TEST(Lens, KGcnbAtFullUcCount) {
    SmallEngine s;
    s.engine.begin_write(set_of({"n1"}));
    auto meta = s.engine.snapshot_meta();
    ASSERT_EQ(meta.uc_count, 5u);
    EXPECT_EQ(select_version({LensKind::KGCNB, 5}, meta, set_of({"n3"}), {}, s.engine.graph()),
              VersionChoice::single(meta.latest));
}

TEST_F(MidWrite, LcnbWaitsForViewport) {
    const auto vp = set_of({"n3", "n4", "n5"});
    EXPECT_EQ(pick({LensKind::LCNB, 0}, vp), VersionChoice::single(kInitialVersion));
    EXPECT_EQ(pick({LensKind::KLCNB, 2}, vp), VersionChoice::single(t1));
    EXPECT_EQ(pick({LensKind::KLCNB, 1}, vp), VersionChoice::single(kInitialVersion));
    s.install(t1, 2);  // n4, n5
    EXPECT_EQ(pick({LensKind::LCNB, 0}, vp), VersionChoice::single(t1));
}

TEST_F(MidWrite, TwoReadSelections) {
    s.install(t1, 2);  // n4, n5; n6 pending
    const auto vp = set_of({"n5", "n6", "n7"});
    LastRead lr{{NodeId("n3"), t1}, {NodeId("n4"), t1}, {NodeId("n5"), t1}};
    EXPECT_EQ(pick({LensKind::LCMB, 0}, vp, lr), VersionChoice::single(t1));
    EXPECT_EQ(pick({LensKind::LCNB, 0}, vp, lr), VersionChoice::single(kInitialVersion));
    // without history LCMB behaves as LCNB
    EXPECT_EQ(pick({LensKind::LCMB, 0}, vp), VersionChoice::single(kInitialVersion));
}
