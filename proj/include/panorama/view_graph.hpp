#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "panorama/types.hpp"

namespace panorama {

enum class ItemKind { Result, UnderComputation };

std::string_view to_string(ItemKind kind) noexcept;

/// One entry of a node's item list: a computed view result or the
/// under-computation placeholder of the write that will produce it.
struct Item {
    Timestamp version;
    ItemKind kind = ItemKind::Result;
    std::optional<std::string> payload;  // present iff kind == Result
    std::optional<Millis> cost;          // present iff kind == Result

    static Item result(Timestamp version, std::string payload, Millis cost) {
        return Item{version, ItemKind::Result, std::move(payload), cost};
    }
    static Item under_computation(Timestamp version) {
        return Item{version, ItemKind::UnderComputation, std::nullopt, std::nullopt};
    }

    bool is_uc() const noexcept { return kind == ItemKind::UnderComputation; }

    friend bool operator==(const Item&, const Item&) = default;
};

struct NodeSpec {
    NodeId id;
    Millis cost{0};
    bool base = false;
};

/// Declarative graph description, loaded from the JSON graph spec file:
///   {"nodes":[{"id":"n1","cost_ms":0,"base":true},...],"edges":[["n1","n3"],...]}
/// Optional keys: "layout" (dashboard order of visualization nodes) and "per_row".
struct GraphSpec {
    std::vector<NodeSpec> nodes;
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<NodeId> layout;
    std::size_t per_row = 2;

    static GraphSpec from_json(const nlohmann::json& j);
    static GraphSpec load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    /// Dashboard order: the explicit layout if given, else every non-base
    /// node in declaration order.
    std::vector<NodeId> dashboard() const;
};

/// Records, per node, whether collect_garbage changed any item_at answer at
/// or above the watermark. Filled while each node latch is held.
struct GcAudit {
    std::size_t versions_checked = 0;
    std::size_t mismatches = 0;
};

/// Multi-versioned DAG of views. The structure (nodes, edges) is immutable
/// after build; each node's item list is guarded by its own latch so one
/// writer and many readers may operate concurrently.
class ViewGraph {
public:
    /// Builds the graph and materializes a Result at t0 on every node.
    static ViewGraph build(const GraphSpec& spec);

    ViewGraph(ViewGraph&&) noexcept = default;
    ViewGraph& operator=(ViewGraph&&) noexcept = default;
    ViewGraph(const ViewGraph&) = delete;
    ViewGraph& operator=(const ViewGraph&) = delete;

    const std::vector<NodeId>& nodes() const noexcept { return order_; }
    std::size_t size() const noexcept { return order_.size(); }
    bool contains(const NodeId& id) const { return index_.count(id) > 0; }
    const NodeSet& base_nodes() const noexcept { return base_; }
    bool is_base(const NodeId& id) const;
    Millis cost(const NodeId& id) const;
    NodeSet predecessors(const NodeId& id) const;
    NodeSet successors(const NodeId& id) const;
    const GraphSpec& spec() const noexcept { return spec_; }

    /// Every node reachable through at least one edge from any source,
    /// excluding the sources themselves.
    NodeSet dependents(const NodeSet& sources) const;

    /// Partitions targets into strata: a target lands in the first group after
    /// every target that can reach it. Reachability is taken over the whole
    /// graph, so precedence through non-target nodes is respected too.
    std::vector<NodeSet> topo_groups(const NodeSet& targets) const;

    /// Appends UC@version. version must exceed every existing item version.
    void mark_under_computation(const NodeId& node, Timestamp version);

    /// Replaces the UC at version by a Result in place. on_installed, when
    /// given, runs while the node latch is still held. Returns true when the
    /// installed item is the newest item of the node.
    bool install_result(const NodeId& node, Timestamp version, std::string payload, Millis cost,
                        const std::function<void()>& on_installed = {});

    /// Item with the largest version <= version.
    Item item_at(const NodeId& node, Timestamp version) const;

    /// Newest Result in the node's list, skipping trailing UCs.
    Item newest_result(const NodeId& node) const;

    /// Copy of the node's item list.
    std::vector<Item> items(const NodeId& node) const;

    /// Per node, keeps the newest item <= watermark and everything newer.
    std::size_t collect_garbage(Timestamp watermark, GcAudit* audit = nullptr);

private:
    struct Node {
        NodeId id;
        Millis cost{0};
        bool base = false;
        std::vector<std::size_t> preds;
        std::vector<std::size_t> succs;
        mutable std::mutex latch;
        std::vector<Item> items;
    };

    ViewGraph() = default;

    std::size_t index_of(const NodeId& id) const;
    const Node& node(const NodeId& id) const { return *nodes_[index_of(id)]; }
    Node& node(const NodeId& id) { return *nodes_[index_of(id)]; }

    static const Item& lookup(const Node& n, Timestamp version);

    GraphSpec spec_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<NodeId> order_;
    std::unordered_map<NodeId, std::size_t> index_;
    NodeSet base_;
};

/// Payload token used for synthetic results: "<node>@t<version>".
std::string payload_token(const NodeId& node, Timestamp version);

}  // namespace panorama
