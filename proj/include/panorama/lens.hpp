#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "panorama/types.hpp"
#include "panorama/view_graph.hpp"

namespace panorama {

/// Atomic snapshot of the engine's version bookkeeping.
struct MetaInfo {
    Timestamp committed;           // t_c: newest fully computed version
    Timestamp latest;              // t_s: newest version, possibly still under computation
    std::size_t uc_count = 0;      // c_uc: UCs visible when reading the latest graph
    std::vector<Timestamp> pending;  // versions in (t_c, t_s] of running writes, ascending

    /// {t_c} plus every running version; {t_c, t_s} when pending is empty.
    std::vector<Timestamp> candidates() const;

    friend bool operator==(const MetaInfo&, const MetaInfo&) = default;
};

/// Per node, the highest version returned so far.
using LastRead = std::map<NodeId, Timestamp>;

enum class LensKind { GCPB, GCNB, LCNB, LCMB, ICNB, KGCNB, KLCNB, KLCMB };

struct Lens {
    LensKind kind = LensKind::GCNB;
    std::size_t k = 0;  // extra UCs admitted; only the K* kinds use it

    bool is_k_variant() const noexcept {
        return kind == LensKind::KGCNB || kind == LensKind::KLCNB || kind == LensKind::KLCMB;
    }
    /// UC allowance applied by the selection rule (0 for base kinds).
    std::size_t allowance() const noexcept { return is_k_variant() ? k : 0; }

    static Lens parse(std::string_view name, std::size_t k = 0);
    std::string name() const;
    std::string label() const;  // name plus k for the K* kinds, e.g. "k-lcnb(2)"

    friend bool operator==(const Lens& a, const Lens& b) {
        return a.kind == b.kind && a.allowance() == b.allowance();
    }
};

std::string_view to_string(LensKind kind) noexcept;

/// All eight lens kinds with the given k for the relaxed ones.
std::vector<Lens> all_lenses(std::size_t k);

/// What a read transaction reads: one graph version, or per node the newest result.
struct VersionChoice {
    enum class Mode { SingleVersion, PerNodeNewestResult };
    Mode mode = Mode::SingleVersion;
    Timestamp version;

    static VersionChoice single(Timestamp v) { return {Mode::SingleVersion, v}; }
    static VersionChoice newest_result() { return {Mode::PerNodeNewestResult, Timestamp{}}; }
    bool per_node() const noexcept { return mode == Mode::PerNodeNewestResult; }

    friend bool operator==(const VersionChoice&, const VersionChoice&) = default;
};

/// Number of viewport nodes whose item_at(version) is a UC.
std::size_t count_viewport_ucs(const ViewGraph& graph, const NodeSet& viewport, Timestamp version);

/// True iff reading version returns, for every viewport node, a version no
/// older than what was last read (missing entries count as t0).
bool preserves_monotonicity(const ViewGraph& graph, const NodeSet& viewport, Timestamp version,
                            const LastRead& last_read);

/// Version selection for one read. meta must be a snapshot taken atomically by the caller.
///
/// LCNB/k-LCNB take the most recent candidate whose viewport UC count is at most
/// the allowance. LCMB/k-LCMB first drop candidates that would break
/// monotonicity, then take the most recent survivor within the allowance; when
/// none qualifies they take the survivor with the fewest UCs, most recent on ties
/// (t_s under a single write).
VersionChoice select_version(const Lens& lens, const MetaInfo& meta, const NodeSet& viewport,
                             const LastRead& last_read, const ViewGraph& graph);

}  // namespace panorama
