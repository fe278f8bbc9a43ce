#include "panorama/trace.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace panorama {

std::size_t ReadEvent::uc_count() const {
    return static_cast<std::size_t>(
        std::count_if(states.begin(), states.end(), [](const auto& kv) { return kv.second.is_uc(); }));
}

nlohmann::json to_json(const MetaInfo& m) {
    auto pending = nlohmann::json::array();
    for (auto v : m.pending) pending.push_back(v.value);
    return {{"t_c", m.committed.value}, {"t_s", m.latest.value}, {"c_uc", m.uc_count}, {"pending", pending}};
}

namespace {

nlohmann::json node_list(const NodeSet& s) {
    auto arr = nlohmann::json::array();
    for (const auto& n : s) arr.push_back(n.str());
    return arr;
}

NodeSet node_set(const nlohmann::json& j) {
    NodeSet s;
    for (const auto& n : j) s.emplace(n.get<std::string>());
    return s;
}

MetaInfo meta_from_json(const nlohmann::json& j) {
    MetaInfo m;
    m.committed = Timestamp{j.at("t_c").get<std::uint64_t>()};
    m.latest = Timestamp{j.at("t_s").get<std::uint64_t>()};
    m.uc_count = j.at("c_uc").get<std::size_t>();
    if (j.contains("pending"))
        for (const auto& v : j.at("pending")) m.pending.emplace_back(v.get<std::uint64_t>());
    return m;
}

}  // namespace

nlohmann::json to_json(const ReadEvent& e) {
    nlohmann::json j;
    j["type"] = "read";
    j["seq"] = e.seq;
    j["issued_at"] = e.issued_at.count();
    j["returned_at"] = e.returned_at.count();
    j["viewport"] = node_list(e.viewport);
    j["lens"] = e.lens.name();
    j["k"] = e.lens.k;
    if (e.choice.per_node())
        j["chosen_version"] = nullptr;
    else
        j["chosen_version"] = e.choice.version.value;
    auto states = nlohmann::json::object();
    for (const auto& [node, st] : e.states)
        states[node.str()] = {{"kind", std::string(to_string(st.kind))}, {"version", st.version.value},
                              {"payload", st.payload}};
    j["states"] = std::move(states);
    j["meta"] = to_json(e.meta_at_read);
    return j;
}

ReadEvent read_event_from_json(const nlohmann::json& j) {
    ReadEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.issued_at = Millis(j.at("issued_at").get<std::int64_t>());
    e.returned_at = Millis(j.at("returned_at").get<std::int64_t>());
    e.viewport = node_set(j.at("viewport"));
    e.lens = Lens::parse(j.at("lens").get<std::string>(), j.value("k", std::size_t{0}));
    if (j.at("chosen_version").is_null())
        e.choice = VersionChoice::newest_result();
    else
        e.choice = VersionChoice::single(Timestamp{j.at("chosen_version").get<std::uint64_t>()});
    for (const auto& [node, st] : j.at("states").items()) {
        ReturnedState rs;
        rs.kind = st.at("kind").get<std::string>() == "uc" ? ItemKind::UnderComputation : ItemKind::Result;
        rs.version = Timestamp{st.at("version").get<std::uint64_t>()};
        rs.payload = st.value("payload", std::string{});
        e.states.emplace(NodeId(node), std::move(rs));
    }
    e.meta_at_read = meta_from_json(j.at("meta"));
    return e;
}

nlohmann::json to_json(const WriteRecord& w) {
    nlohmann::json j;
    j["type"] = "write";
    j["ts"] = w.ts.value;
    j["write_set"] = node_list(w.write_set);
    j["update_set"] = node_list(w.update_set);
    j["begun_at"] = w.begun_at.count();
    auto inst = nlohmann::json::object();
    for (const auto& [node, at] : w.installed_at) inst[node.str()] = at.count();
    j["installed_at"] = std::move(inst);
    if (w.committed_at)
        j["committed_at"] = w.committed_at->count();
    else
        j["committed_at"] = nullptr;
    return j;
}

WriteRecord write_record_from_json(const nlohmann::json& j) {
    WriteRecord w;
    w.ts = Timestamp{j.at("ts").get<std::uint64_t>()};
    w.write_set = node_set(j.at("write_set"));
    w.update_set = node_set(j.at("update_set"));
    w.begun_at = Millis(j.at("begun_at").get<std::int64_t>());
    for (const auto& [node, at] : j.at("installed_at").items())
        w.installed_at.emplace(NodeId(node), Millis(at.get<std::int64_t>()));
    if (j.contains("committed_at") && !j.at("committed_at").is_null())
        w.committed_at = Millis(j.at("committed_at").get<std::int64_t>());
    return w;
}

void Trace::write_jsonl(std::ostream& os) const {
    for (const auto& w : writes) os << to_json(w).dump() << '\n';
    for (const auto& r : reads) os << to_json(r).dump() << '\n';
}

Trace Trace::read_jsonl(std::istream& is) {
    Trace t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            auto type = j.at("type").get<std::string>();
            if (type == "write")
                t.writes.push_back(write_record_from_json(j));
            else if (type == "read")
                t.reads.push_back(read_event_from_json(j));
            else
                throw Error(ErrorCode::ParseError, "unknown record type '" + type + "'");
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::sort(t.writes.begin(), t.writes.end(), [](const auto& a, const auto& b) { return a.ts < b.ts; });
    return t;
}

// --- VersionHistory --------------------------------------------------------

VersionHistory::VersionHistory(const std::vector<WriteRecord>& writes) : writes_(&writes) {
    for (const auto& w : writes)
        for (const auto& n : w.update_set) versions_[n].push_back(w.ts);
    for (auto& [_, vs] : versions_) std::sort(vs.begin(), vs.end());
}

Timestamp VersionHistory::resolve(const NodeId& node, Timestamp version) const {
    auto it = versions_.find(node);
    if (it == versions_.end()) return kInitialVersion;
    const auto& vs = it->second;
    auto ub = std::upper_bound(vs.begin(), vs.end(), version);
    return ub == vs.begin() ? kInitialVersion : *std::prev(ub);
}

const WriteRecord* VersionHistory::find(Timestamp ts) const {
    auto it = std::lower_bound(writes_->begin(), writes_->end(), ts,
                               [](const WriteRecord& w, Timestamp t) { return w.ts < t; });
    return it != writes_->end() && it->ts == ts ? &*it : nullptr;
}

bool VersionHistory::touched_by(const NodeId& node, Timestamp ts) const {
    const auto* w = find(ts);
    return w && w->update_set.count(node) > 0;
}

bool VersionHistory::is_uc_at(const NodeId& node, Timestamp version, Millis instant) const {
    if (version == kInitialVersion) return false;
    const auto* w = find(version);
    if (!w) return false;
    auto it = w->installed_at.find(node);
    return it == w->installed_at.end() || it->second > instant;
}

bool VersionHistory::touched_between(const NodeId& node, Timestamp after, Timestamp upto) const {
    auto it = versions_.find(node);
    if (it == versions_.end()) return false;
    auto ub = std::upper_bound(it->second.begin(), it->second.end(), after);
    return ub != it->second.end() && *ub <= upto;
}

}  // namespace panorama
