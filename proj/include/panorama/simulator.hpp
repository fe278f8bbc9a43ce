#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "panorama/engine.hpp"
#include "panorama/metrics.hpp"

namespace panorama {

enum class ReadBehavior { RegularMove, WaitAndMove, RandomMove };

std::string_view to_string(ReadBehavior b) noexcept;
ReadBehavior parse_behavior(std::string_view name);

struct Dashboard {
    std::vector<NodeId> layout;
    std::size_t per_row = 2;

    static Dashboard from_spec(const GraphSpec& spec) { return {spec.dashboard(), spec.per_row}; }
    /// layout[offset, offset + size)
    NodeSet window(std::size_t offset, std::size_t size) const;
};

struct PlannedWrite {
    Millis at{0};
    NodeSet write_set;
};

/// Writes every interval_ms starting at 0, count times.
struct PeriodicRefresh {
    Millis interval{0};
    std::size_t count = 0;
    NodeSet write_set;
};

struct ExperimentConfig {
    GraphSpec spec;
    Lens lens;
    PolicyKind policy = PolicyKind::TP;
    ReadBehavior behavior = ReadBehavior::RegularMove;
    std::size_t explore_range = 22;
    std::size_t viewport_size = 4;
    Millis read_interval{100};
    Millis move_interval{1000};
    std::vector<PlannedWrite> writes;
    std::optional<PeriodicRefresh> periodic;
    std::uint64_t seed = 0;

    /// Every write with its begin instant, periodic ones expanded, ascending.
    std::vector<PlannedWrite> write_plan() const;
    /// Throws ConfigInvalid.
    void validate() const;

    /// Keys: spec (object) or spec_path, lens, k, policy, behavior,
    /// explore_range, viewport_size, read_interval_ms, move_interval_ms,
    /// writes [{at_ms, write_set}], periodic {interval_ms, count, write_set}, seed.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    nlohmann::json to_json() const;
};

/// Viewport position and movement state; the viewport is layout[offset, offset + viewport_size).
struct ViewportState {
    std::size_t offset = 0;
    int direction = +1;
};

/// One move tick. last_read is the most recent read event, if any.
NodeSet next_viewport(ReadBehavior behavior, ViewportState& state, const Dashboard& dashboard,
                      const ExperimentConfig& config, const ReadEvent* last_read, std::mt19937_64& rng);

struct ExperimentResult {
    Trace trace;
    MetricsReport metrics;
    Millis finished_at{0};
};

/// Deterministic discrete-event run. At equal instants the order is: view
/// completions, write begins, viewport moves, reads, scheduling the next view.
/// Ends with a read at the instant the last write commits.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// The cross product of the listed axes over a base config.
struct GridSpec {
    ExperimentConfig base;
    std::vector<Lens> lenses;
    std::vector<PolicyKind> policies;
    std::vector<ReadBehavior> behaviors;
    std::vector<std::size_t> explore_ranges;
    std::vector<std::size_t> viewport_sizes;
    std::vector<std::uint64_t> seeds;
    std::size_t threads = 0;  // 0: hardware concurrency

    static GridSpec from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    std::vector<ExperimentConfig> cells() const;
};

struct GridRow {
    ExperimentConfig config;
    std::int64_t invisibility_ms = 0;
    std::int64_t staleness_ms = 0;
};

struct GridSummaryRow {
    ExperimentConfig config;  // seed field meaningless
    std::size_t runs = 0;
    std::int64_t invisibility_min = 0, invisibility_max = 0;
    std::int64_t staleness_min = 0, staleness_max = 0;
    double invisibility_mean = 0, staleness_mean = 0;
};

/// Runs every cell, in parallel across threads; rows come back in cell order.
std::vector<GridRow> run_grid(const GridSpec& grid);
/// min/mean/max across seeds, grouped by every other axis.
std::vector<GridSummaryRow> summarize(const std::vector<GridRow>& rows);

/// lens,k,policy,behavior,explore_range,viewport_size,seed,invisibility_ms,staleness_ms
void write_results_csv(std::ostream& os, const std::vector<GridRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<GridSummaryRow>& rows);

/// The bundled 22-view TPC-H-like dashboard and its default write set.
GraphSpec bundled_spec();
NodeSet bundled_write_set();
/// The 8-node example graph (two base tables, six views).
GraphSpec small_spec();

/// Config with the defaults used throughout the experiments: bundled spec,
/// one write of the default write set at 0 ms.
ExperimentConfig default_config();

/// Random single-write workload: a DAG of 5 to 30 nodes, random costs,
/// RegularMove or RandomMove, random viewport size and explore range.
ExperimentConfig random_workload(std::uint64_t seed);

}  // namespace panorama
