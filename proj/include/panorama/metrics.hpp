#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include <json.hpp>

#include "panorama/trace.hpp"

namespace panorama {

/// One read event's contribution: its UC and stale counts held until the next event.
struct IntervalRow {
    Millis start{0};
    Millis length{0};  // 0 for the final event
    std::size_t uc_count = 0;
    std::size_t stale_count = 0;
};

struct MetricsReport {
    std::int64_t invisibility_ms = 0;  // view-milliseconds
    std::int64_t staleness_ms = 0;
    std::vector<IntervalRow> rows;

    nlohmann::json to_json() const;
    /// interval_start_ms,uc_count,stale_count
    void write_csv(std::ostream& os) const;
};

/// Number of returned Results in e that some write in (result version, e's t_s] touched.
std::size_t stale_count(const ReadEvent& e, const VersionHistory& history);

std::int64_t invisibility(const Trace& trace);
std::int64_t staleness(const Trace& trace);
MetricsReport compute_metrics(const Trace& trace);

/// Incremental computation fed event by event, as a live service sees them.
/// Writes must be announced (on_write) before any read whose t_s covers them.
class StreamingMetrics {
public:
    void on_write(Timestamp ts, const NodeSet& update_set);
    void on_read(const ReadEvent& e);
    /// Whether a Result@version of node is stale relative to latest.
    bool is_stale(const NodeId& node, Timestamp version, Timestamp latest) const;

    std::int64_t invisibility_ms() const noexcept { return invisibility_; }
    std::int64_t staleness_ms() const noexcept { return staleness_; }
    std::size_t reads() const noexcept { return reads_; }
    /// Counts of the newest event, not yet charged to any interval.
    std::size_t open_uc_count() const noexcept { return prev_uc_; }
    std::size_t open_stale_count() const noexcept { return prev_stale_; }

private:
    std::map<NodeId, std::vector<Timestamp>> touched_;  // ascending per node
    Timestamp max_ts_{0};
    std::int64_t invisibility_ = 0;
    std::int64_t staleness_ = 0;
    std::size_t reads_ = 0;
    Millis prev_at_{0};
    std::size_t prev_uc_ = 0;
    std::size_t prev_stale_ = 0;
};

}  // namespace panorama
