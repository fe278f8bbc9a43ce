#include "panorama/metrics.hpp"

#include <algorithm>
#include <ostream>

namespace panorama {

namespace {

void require_ordered(const Trace& trace) {
    for (std::size_t i = 1; i < trace.reads.size(); ++i)
        if (trace.reads[i].returned_at < trace.reads[i - 1].returned_at)
            throw Error(ErrorCode::UnorderedTrace, "read seq " + std::to_string(trace.reads[i].seq) +
                                                       " returned before its predecessor");
}

void require_history(const Trace& trace) {
    std::uint64_t newest = 0;
    for (const auto& e : trace.reads) newest = std::max(newest, e.meta_at_read.latest.value);
    VersionHistory h(trace.writes);
    for (std::uint64_t v = 1; v <= newest; ++v)
        if (!h.find(Timestamp{v}))
            throw Error(ErrorCode::MissingVersionHistory, "no write record for t" + std::to_string(v));
}

}  // namespace

std::size_t stale_count(const ReadEvent& e, const VersionHistory& history) {
    std::size_t n = 0;
    for (const auto& [node, st] : e.states)
        if (!st.is_uc() && history.touched_between(node, st.version, e.meta_at_read.latest)) ++n;
    return n;
}

MetricsReport compute_metrics(const Trace& trace) {
    require_ordered(trace);
    require_history(trace);
    VersionHistory history(trace.writes);
    MetricsReport r;
    const auto& reads = trace.reads;
    for (std::size_t i = 0; i < reads.size(); ++i) {
        IntervalRow row;
        row.start = reads[i].returned_at;
        row.length = i + 1 < reads.size() ? reads[i + 1].returned_at - reads[i].returned_at : Millis{0};
        row.uc_count = reads[i].uc_count();
        row.stale_count = stale_count(reads[i], history);
        r.invisibility_ms += static_cast<std::int64_t>(row.uc_count) * row.length.count();
        r.staleness_ms += static_cast<std::int64_t>(row.stale_count) * row.length.count();
        r.rows.push_back(row);
    }
    return r;
}

std::int64_t invisibility(const Trace& trace) {
    require_ordered(trace);
    std::int64_t total = 0;
    for (std::size_t i = 0; i + 1 < trace.reads.size(); ++i)
        total += static_cast<std::int64_t>(trace.reads[i].uc_count()) *
                 (trace.reads[i + 1].returned_at - trace.reads[i].returned_at).count();
    return total;
}

std::int64_t staleness(const Trace& trace) { return compute_metrics(trace).staleness_ms; }

nlohmann::json MetricsReport::to_json() const {
    auto rows_j = nlohmann::json::array();
    for (const auto& row : rows)
        rows_j.push_back({{"interval_start_ms", row.start.count()},
                          {"length_ms", row.length.count()},
                          {"uc_count", row.uc_count},
                          {"stale_count", row.stale_count}});
    return {{"invisibility_ms", invisibility_ms}, {"staleness_ms", staleness_ms}, {"intervals", rows_j}};
}

void MetricsReport::write_csv(std::ostream& os) const {
    os << "interval_start_ms,uc_count,stale_count\n";
    for (const auto& row : rows) os << row.start.count() << ',' << row.uc_count << ',' << row.stale_count << '\n';
}

void StreamingMetrics::on_write(Timestamp ts, const NodeSet& update_set) {
    for (const auto& n : update_set) {
        auto& vs = touched_[n];
        vs.insert(std::upper_bound(vs.begin(), vs.end(), ts), ts);
    }
    max_ts_ = std::max(max_ts_, ts);
}

bool StreamingMetrics::is_stale(const NodeId& node, Timestamp version, Timestamp latest) const {
    auto it = touched_.find(node);
    if (it == touched_.end()) return false;
    auto ub = std::upper_bound(it->second.begin(), it->second.end(), version);
    return ub != it->second.end() && *ub <= latest;
}

void StreamingMetrics::on_read(const ReadEvent& e) {
    if (e.meta_at_read.latest > max_ts_)
        throw Error(ErrorCode::MissingVersionHistory,
                    "read seq " + std::to_string(e.seq) + " sees t" + std::to_string(e.meta_at_read.latest.value));
    if (reads_ > 0) {
        if (e.returned_at < prev_at_)
            throw Error(ErrorCode::UnorderedTrace, "read seq " + std::to_string(e.seq) + " returned before its predecessor");
        const auto gap = (e.returned_at - prev_at_).count();
        invisibility_ += static_cast<std::int64_t>(prev_uc_) * gap;
        staleness_ += static_cast<std::int64_t>(prev_stale_) * gap;
    }
    std::size_t uc = 0, stale = 0;
    for (const auto& [node, st] : e.states) {
        if (st.is_uc()) {
            ++uc;
            continue;
        }
        if (is_stale(node, st.version, e.meta_at_read.latest)) ++stale;
    }
    prev_uc_ = uc;
    prev_stale_ = stale;
    prev_at_ = e.returned_at;
    ++reads_;
}

}  // namespace panorama
