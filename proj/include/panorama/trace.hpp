#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "panorama/lens.hpp"
#include "panorama/types.hpp"
#include "panorama/view_graph.hpp"

namespace panorama {

/// What a read returned for one node.
struct ReturnedState {
    ItemKind kind = ItemKind::Result;
    Timestamp version;
    std::string payload;  // empty for UCs

    bool is_uc() const noexcept { return kind == ItemKind::UnderComputation; }
    friend bool operator==(const ReturnedState&, const ReturnedState&) = default;
};

struct ReadEvent {
    std::uint64_t seq = 0;
    Millis issued_at{0};
    Millis returned_at{0};
    NodeSet viewport;
    Lens lens;
    VersionChoice choice;
    std::map<NodeId, ReturnedState> states;
    MetaInfo meta_at_read;

    std::size_t uc_count() const;
};

/// One write transaction as seen in the version history.
struct WriteRecord {
    Timestamp ts;
    NodeSet write_set;
    NodeSet update_set;
    Millis begun_at{0};
    std::map<NodeId, Millis> installed_at;
    std::optional<Millis> committed_at;
};

struct Trace {
    std::vector<WriteRecord> writes;  // ascending ts
    std::vector<ReadEvent> reads;     // ascending seq and returned_at

    /// JSON lines: one {"type":"write",...} line per write, then one
    /// {"type":"read",...} line per read event.
    void write_jsonl(std::ostream& os) const;
    static Trace read_jsonl(std::istream& is);
};

nlohmann::json to_json(const ReadEvent& e);
ReadEvent read_event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WriteRecord& w);
WriteRecord write_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetaInfo& m);

/// Replays item_at over a recorded version history without the graph.
class VersionHistory {
public:
    explicit VersionHistory(const std::vector<WriteRecord>& writes);

    /// Version of the item item_at(node, version) resolves to.
    Timestamp resolve(const NodeId& node, Timestamp version) const;
    /// Whether the item (node, version) was still a UC at instant. t0 items never are.
    bool is_uc_at(const NodeId& node, Timestamp version, Millis instant) const;
    /// Whether some write with ts in (after, upto] touched node.
    bool touched_between(const NodeId& node, Timestamp after, Timestamp upto) const;
    /// Write record for ts, or nullptr.
    const WriteRecord* find(Timestamp ts) const;
    /// Whether node was ever in the update set of write ts.
    bool touched_by(const NodeId& node, Timestamp ts) const;

private:
    const std::vector<WriteRecord>* writes_;
    std::map<NodeId, std::vector<Timestamp>> versions_;  // per node, ascending
};

}  // namespace panorama
