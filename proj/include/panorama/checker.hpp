#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "panorama/metrics.hpp"
#include "panorama/trace.hpp"

namespace panorama {

enum class ViolationKind { Monotonicity, Visibility, Consistency, CmOptimality, Ordering };

std::string_view to_string(ViolationKind k) noexcept;

struct Violation {
    ViolationKind kind;
    std::vector<std::uint64_t> seqs;  // offending read events; empty only for Ordering
    std::vector<NodeId> nodes;
    std::string detail;

    nlohmann::json to_json() const;
};

/// Properties a lens promises: monotonicity, visibility, single-version
/// consistency, and agreement with its version-selection rule.
struct PropertySet {
    bool monotonicity = false;
    bool visibility = false;
    bool consistency = false;
    bool selection_rule = false;
};

PropertySet declared_properties(const Lens& lens);

/// A node whose returned version drops below an earlier read's. LastRead is
/// reset when the lens changes, so the comparison restarts there too.
std::vector<Violation> check_monotonicity(const Trace& trace);
/// Every returned UC.
std::vector<Violation> check_visibility(const Trace& trace);
/// Per event, some version t <= t_s must explain every returned state given
/// the install instants of the version history. ICNB events are checked per node.
std::vector<Violation> check_consistency(const Trace& trace);
/// For LCNB, LCMB and their k-variants: brute-force the candidate versions and
/// check that the chosen one agrees with the selection rule.
std::vector<Violation> check_cm_optimality(const Trace& trace);
/// GCPB reads t_s, GCNB reads t_c, k-GCNB reads t_s iff c_uc <= k.
std::vector<Violation> check_lens_contract(const Trace& trace);

/// Runs every check the events' lenses declare.
std::vector<Violation> check_properties(const Trace& trace);

/// One lens's run over a shared workload.
struct LensOutcome {
    Lens lens;
    const Trace* trace = nullptr;  // optional; enables the workload equality check
    MetricsReport report;
};

/// The ordering inequalities between lenses run on one single-write workload.
/// Throws WorkloadMismatch when the traces differ in read instants, viewports
/// or write schedule.
std::vector<Violation> check_orderings(const std::vector<LensOutcome>& runs);

struct ExperimentConfig;

/// Outcome of running one workload through all eight lenses.
struct WorkloadVerdict {
    std::vector<Violation> properties;  // per-lens declared properties
    std::vector<Violation> orderings;
    std::size_t reads = 0;              // read events checked, all lenses
    bool ok() const noexcept { return properties.empty() && orderings.empty(); }
};

/// Runs workload under every lens (k for the relaxed ones) with the same
/// write schedule and read sequence, then checks properties and orderings.
WorkloadVerdict verify_workload(const ExperimentConfig& workload, std::size_t k);

/// Replays the two-read scenario on the 8-node example graph: write {n1},
/// results for n1 and n3-n5 installed, n6 still pending; read {n3,n4,n5}
/// then {n5,n6,n7} through the given lens.
Trace two_read_counterexample(const Lens& lens);

}  // namespace panorama
