#include "panorama/view_graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

namespace panorama {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::DuplicateNode: return "DuplicateNode";
        case ErrorCode::StaleVersion: return "StaleVersion";
        case ErrorCode::NoMatchingUC: return "NoMatchingUC";
        case ErrorCode::VersionCollected: return "VersionCollected";
        case ErrorCode::EmptyWriteSet: return "EmptyWriteSet";
        case ErrorCode::NotBaseNode: return "NotBaseNode";
        case ErrorCode::AlreadyCommitted: return "AlreadyCommitted";
        case ErrorCode::NotHeadOfQueue: return "NotHeadOfQueue";
        case ErrorCode::EmptyViewport: return "EmptyViewport";
        case ErrorCode::ClockWentBackwards: return "ClockWentBackwards";
        case ErrorCode::EmptyGroup: return "EmptyGroup";
        case ErrorCode::UnorderedTrace: return "UnorderedTrace";
        case ErrorCode::MissingVersionHistory: return "MissingVersionHistory";
        case ErrorCode::WorkloadMismatch: return "WorkloadMismatch";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::UnknownLens: return "UnknownLens";
        case ErrorCode::UnknownPolicy: return "UnknownPolicy";
        case ErrorCode::WriteInProgress: return "WriteInProgress";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

std::string_view to_string(ItemKind kind) noexcept {
    return kind == ItemKind::Result ? "result" : "uc";
}

std::string payload_token(const NodeId& node, Timestamp version) {
    return node.str() + "@t" + std::to_string(version.value);
}

// --- GraphSpec -------------------------------------------------------------

GraphSpec GraphSpec::from_json(const nlohmann::json& j) {
    GraphSpec spec;
    try {
        for (const auto& n : j.at("nodes")) {
            NodeSpec ns;
            ns.id = NodeId(n.at("id").get<std::string>());
            ns.cost = Millis(n.value("cost_ms", std::int64_t{0}));
            ns.base = n.value("base", false);
            if (ns.id.empty()) throw Error(ErrorCode::ParseError, "node id must be non-empty");
            if (ns.cost.count() < 0) throw Error(ErrorCode::ParseError, "negative cost for " + ns.id.str());
            spec.nodes.push_back(std::move(ns));
        }
        if (j.contains("edges")) {
            for (const auto& e : j.at("edges")) {
                if (!e.is_array() || e.size() != 2)
                    throw Error(ErrorCode::ParseError, "edge must be a [pred, dep] pair");
                spec.edges.emplace_back(NodeId(e[0].get<std::string>()), NodeId(e[1].get<std::string>()));
            }
        }
        if (j.contains("layout")) {
            for (const auto& id : j.at("layout")) spec.layout.emplace_back(id.get<std::string>());
        }
        spec.per_row = j.value("per_row", std::size_t{2});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    if (spec.per_row == 0) throw Error(ErrorCode::ParseError, "per_row must be positive");
    return spec;
}

GraphSpec GraphSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json GraphSpec::to_json() const {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : nodes)
        j["nodes"].push_back({{"id", n.id.str()}, {"cost_ms", n.cost.count()}, {"base", n.base}});
    j["edges"] = nlohmann::json::array();
    for (const auto& [from, to] : edges) j["edges"].push_back({from.str(), to.str()});
    if (!layout.empty()) {
        j["layout"] = nlohmann::json::array();
        for (const auto& id : layout) j["layout"].push_back(id.str());
    }
    j["per_row"] = per_row;
    return j;
}

std::vector<NodeId> GraphSpec::dashboard() const {
    if (!layout.empty()) return layout;
    std::vector<NodeId> out;
    for (const auto& n : nodes)
        if (!n.base) out.push_back(n.id);
    return out;
}

// --- ViewGraph -------------------------------------------------------------

ViewGraph ViewGraph::build(const GraphSpec& spec) {
    ViewGraph g;
    g.spec_ = spec;
    for (const auto& ns : spec.nodes) {
        if (g.index_.count(ns.id)) throw Error(ErrorCode::DuplicateNode, ns.id.str());
        g.index_.emplace(ns.id, g.nodes_.size());
        auto n = std::make_unique<Node>();
        n->id = ns.id;
        n->cost = ns.cost;
        n->base = ns.base;
        g.nodes_.push_back(std::move(n));
        g.order_.push_back(ns.id);
    }
    for (const auto& [from, to] : spec.edges) {
        auto fi = g.index_.find(from);
        auto ti = g.index_.find(to);
        if (fi == g.index_.end()) throw Error(ErrorCode::UnknownNode, from.str());
        if (ti == g.index_.end()) throw Error(ErrorCode::UnknownNode, to.str());
        if (fi->second == ti->second) throw Error(ErrorCode::CycleDetected, "self edge on " + from.str());
        auto& succs = g.nodes_[fi->second]->succs;
        if (std::find(succs.begin(), succs.end(), ti->second) != succs.end()) continue;
        succs.push_back(ti->second);
        g.nodes_[ti->second]->preds.push_back(fi->second);
    }

    // Kahn's algorithm; anything left unvisited sits on a cycle.
    std::vector<std::size_t> indegree(g.nodes_.size());
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) indegree[i] = g.nodes_[i]->preds.size();
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < indegree.size(); ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::size_t visited = 0;
    while (!ready.empty()) {
        auto i = ready.front();
        ready.pop_front();
        ++visited;
        for (auto s : g.nodes_[i]->succs)
            if (--indegree[s] == 0) ready.push_back(s);
    }
    if (visited != g.nodes_.size()) throw Error(ErrorCode::CycleDetected, "edge set is not a DAG");

    for (auto& n : g.nodes_) {
        if (n->base && !n->preds.empty())
            throw Error(ErrorCode::ConfigInvalid, "base node " + n->id.str() + " has predecessors");
        if (n->preds.empty() && n->base) g.base_.insert(n->id);
        n->items.push_back(Item::result(kInitialVersion, payload_token(n->id, kInitialVersion), n->cost));
    }
    // A spec that flags no base node at all treats every source as base.
    if (g.base_.empty()) {
        for (auto& n : g.nodes_)
            if (n->preds.empty()) {
                n->base = true;
                g.base_.insert(n->id);
            }
    }
    return g;
}

std::size_t ViewGraph::index_of(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownNode, id.str());
    return it->second;
}

bool ViewGraph::is_base(const NodeId& id) const { return node(id).base; }

Millis ViewGraph::cost(const NodeId& id) const { return node(id).cost; }

NodeSet ViewGraph::predecessors(const NodeId& id) const {
    NodeSet out;
    for (auto p : node(id).preds) out.insert(nodes_[p]->id);
    return out;
}

NodeSet ViewGraph::successors(const NodeId& id) const {
    NodeSet out;
    for (auto s : node(id).succs) out.insert(nodes_[s]->id);
    return out;
}

NodeSet ViewGraph::dependents(const NodeSet& sources) const {
    std::vector<bool> seen(nodes_.size(), false);
    std::deque<std::size_t> frontier;
    for (const auto& s : sources) frontier.push_back(index_of(s));
    NodeSet out;
    while (!frontier.empty()) {
        auto i = frontier.front();
        frontier.pop_front();
        for (auto s : nodes_[i]->succs) {
            if (seen[s]) continue;
            seen[s] = true;
            frontier.push_back(s);
            out.insert(nodes_[s]->id);
        }
    }
    for (const auto& s : sources) out.erase(s);
    return out;
}

std::vector<NodeSet> ViewGraph::topo_groups(const NodeSet& targets) const {
    std::vector<std::size_t> ids;
    for (const auto& t : targets) ids.push_back(index_of(t));

    // For each target, the targets that can reach it.
    std::vector<std::vector<std::size_t>> blockers(ids.size());
    for (std::size_t a = 0; a < ids.size(); ++a) {
        std::vector<bool> seen(nodes_.size(), false);
        std::deque<std::size_t> frontier{ids[a]};
        while (!frontier.empty()) {
            auto i = frontier.front();
            frontier.pop_front();
            for (auto s : nodes_[i]->succs)
                if (!seen[s]) {
                    seen[s] = true;
                    frontier.push_back(s);
                }
        }
        for (std::size_t b = 0; b < ids.size(); ++b)
            if (b != a && seen[ids[b]]) blockers[b].push_back(a);
    }

    std::vector<int> level(ids.size(), -1);
    std::vector<NodeSet> groups;
    std::size_t placed = 0;
    while (placed < ids.size()) {
        NodeSet group;
        std::vector<std::size_t> newly;
        for (std::size_t b = 0; b < ids.size(); ++b) {
            if (level[b] >= 0) continue;
            bool ready = std::all_of(blockers[b].begin(), blockers[b].end(),
                                     [&](std::size_t a) { return level[a] >= 0; });
            if (ready) newly.push_back(b);
        }
        for (auto b : newly) {
            level[b] = static_cast<int>(groups.size());
            group.insert(nodes_[ids[b]]->id);
        }
        placed += newly.size();
        groups.push_back(std::move(group));
    }
    return groups;
}

void ViewGraph::mark_under_computation(const NodeId& id, Timestamp version) {
    auto& n = node(id);
    std::lock_guard lock(n.latch);
    if (!n.items.empty() && n.items.back().version >= version)
        throw Error(ErrorCode::StaleVersion, id.str() + " already holds a version >= t" + std::to_string(version.value));
    n.items.push_back(Item::under_computation(version));
}

bool ViewGraph::install_result(const NodeId& id, Timestamp version, std::string payload, Millis cost,
                               const std::function<void()>& on_installed) {
    auto& n = node(id);
    std::lock_guard lock(n.latch);
    auto it = std::lower_bound(n.items.begin(), n.items.end(), version,
                               [](const Item& item, Timestamp v) { return item.version < v; });
    if (it == n.items.end() || it->version != version || !it->is_uc())
        throw Error(ErrorCode::NoMatchingUC, id.str() + " has no UC at t" + std::to_string(version.value));
    *it = Item::result(version, std::move(payload), cost);
    if (on_installed) on_installed();
    return std::next(it) == n.items.end();
}

const Item& ViewGraph::lookup(const Node& n, Timestamp version) {
    auto it = std::upper_bound(n.items.begin(), n.items.end(), version,
                               [](Timestamp v, const Item& item) { return v < item.version; });
    if (it == n.items.begin())
        throw Error(ErrorCode::VersionCollected,
                    n.id.str() + " no longer holds an item <= t" + std::to_string(version.value));
    return *std::prev(it);
}

Item ViewGraph::item_at(const NodeId& id, Timestamp version) const {
    const auto& n = node(id);
    std::lock_guard lock(n.latch);
    return lookup(n, version);
}

Item ViewGraph::newest_result(const NodeId& id) const {
    const auto& n = node(id);
    std::lock_guard lock(n.latch);
    for (auto it = n.items.rbegin(); it != n.items.rend(); ++it)
        if (!it->is_uc()) return *it;
    // Unreachable while the floor item is a Result; GC never drops the last one.
    throw Error(ErrorCode::VersionCollected, id.str() + " holds no result");
}

std::vector<Item> ViewGraph::items(const NodeId& id) const {
    const auto& n = node(id);
    std::lock_guard lock(n.latch);
    return n.items;
}

std::size_t ViewGraph::collect_garbage(Timestamp watermark, GcAudit* audit) {
    std::size_t removed = 0;
    for (auto& np : nodes_) {
        auto& n = *np;
        std::lock_guard lock(n.latch);
        auto floor = std::upper_bound(n.items.begin(), n.items.end(), watermark,
                                      [](Timestamp v, const Item& item) { return v < item.version; });
        if (floor == n.items.begin()) continue;
        floor = std::prev(floor);
        // The newest Result must survive for newest_result readers.
        while (floor != n.items.begin() && floor->is_uc() &&
               std::none_of(floor, n.items.end(), [](const Item& i) { return !i.is_uc(); }))
            floor = std::prev(floor);
        auto drop = static_cast<std::size_t>(floor - n.items.begin());
        if (drop == 0) continue;

        std::vector<Timestamp> probes;
        std::vector<Item> before;
        if (audit) {
            probes.push_back(watermark);
            for (auto it = floor; it != n.items.end(); ++it)
                if (it->version > watermark) probes.push_back(it->version);
            for (auto v : probes) before.push_back(lookup(n, v));
        }
        n.items.erase(n.items.begin(), floor);
        removed += drop;
        if (audit) {
            for (std::size_t i = 0; i < probes.size(); ++i) {
                ++audit->versions_checked;
                if (!(lookup(n, probes[i]) == before[i])) ++audit->mismatches;
            }
        }
    }
    return removed;
}

}  // namespace panorama
