#include "panorama/lens.hpp"

#include <algorithm>
#include <optional>

namespace panorama {

std::vector<Timestamp> MetaInfo::candidates() const {
    std::vector<Timestamp> out{committed};
    for (auto v : pending)
        if (v > committed) out.push_back(v);
    if (out.back() < latest) out.push_back(latest);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string_view to_string(LensKind kind) noexcept {
    switch (kind) {
        case LensKind::GCPB: return "gcpb";
        case LensKind::GCNB: return "gcnb";
        case LensKind::LCNB: return "lcnb";
        case LensKind::LCMB: return "lcmb";
        case LensKind::ICNB: return "icnb";
        case LensKind::KGCNB: return "k-gcnb";
        case LensKind::KLCNB: return "k-lcnb";
        case LensKind::KLCMB: return "k-lcmb";
    }
    return "?";
}

Lens Lens::parse(std::string_view name, std::size_t k) {
    static constexpr LensKind kinds[] = {LensKind::GCPB,  LensKind::GCNB,  LensKind::LCNB,  LensKind::LCMB,
                                         LensKind::ICNB,  LensKind::KGCNB, LensKind::KLCNB, LensKind::KLCMB};
    for (auto kind : kinds)
        if (to_string(kind) == name) {
            Lens lens{kind, 0};
            if (lens.is_k_variant()) lens.k = k;
            return lens;
        }
    throw Error(ErrorCode::UnknownLens, std::string(name));
}

std::string Lens::name() const { return std::string(to_string(kind)); }

std::string Lens::label() const {
    return is_k_variant() ? name() + "(" + std::to_string(k) + ")" : name();
}

std::vector<Lens> all_lenses(std::size_t k) {
    return {{LensKind::GCPB, 0},  {LensKind::GCNB, 0},  {LensKind::LCNB, 0},  {LensKind::LCMB, 0},
            {LensKind::ICNB, 0},  {LensKind::KGCNB, k}, {LensKind::KLCNB, k}, {LensKind::KLCMB, k}};
}

std::size_t count_viewport_ucs(const ViewGraph& graph, const NodeSet& viewport, Timestamp version) {
    std::size_t n = 0;
    for (const auto& node : viewport)
        if (graph.item_at(node, version).is_uc()) ++n;
    return n;
}

bool preserves_monotonicity(const ViewGraph& graph, const NodeSet& viewport, Timestamp version,
                            const LastRead& last_read) {
    for (const auto& node : viewport) {
        auto it = last_read.find(node);
        if (it == last_read.end()) {
            graph.item_at(node, version);  // still reject unknown nodes
            continue;
        }
        if (graph.item_at(node, version).version < it->second) return false;
    }
    return true;
}

namespace {

// Most recent candidate (scanning newest first) within the UC allowance.
std::optional<Timestamp> most_recent_within(const std::vector<Timestamp>& candidates, const ViewGraph& graph,
                                            const NodeSet& viewport, std::size_t allowance) {
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it)
        if (count_viewport_ucs(graph, viewport, *it) <= allowance) return *it;
    return std::nullopt;
}

}  // namespace

VersionChoice select_version(const Lens& lens, const MetaInfo& meta, const NodeSet& viewport,
                             const LastRead& last_read, const ViewGraph& graph) {
    switch (lens.kind) {
        case LensKind::GCPB: return VersionChoice::single(meta.latest);
        case LensKind::GCNB: return VersionChoice::single(meta.committed);
        case LensKind::KGCNB:
            return VersionChoice::single(meta.uc_count <= lens.k ? meta.latest : meta.committed);
        case LensKind::ICNB: return VersionChoice::newest_result();
        case LensKind::LCNB:
        case LensKind::KLCNB: {
            auto chosen = most_recent_within(meta.candidates(), graph, viewport, lens.allowance());
            // The committed graph has no UCs, so it always qualifies.
            return VersionChoice::single(chosen.value_or(meta.committed));
        }
        case LensKind::LCMB:
        case LensKind::KLCMB: {
            std::vector<Timestamp> monotone;
            for (auto c : meta.candidates())
                if (preserves_monotonicity(graph, viewport, c, last_read)) monotone.push_back(c);
            if (monotone.empty()) return VersionChoice::single(meta.latest);
            if (auto chosen = most_recent_within(monotone, graph, viewport, lens.allowance()))
                return VersionChoice::single(*chosen);
            Timestamp best = monotone.back();
            std::size_t best_count = count_viewport_ucs(graph, viewport, best);
            for (auto it = std::next(monotone.rbegin()); it != monotone.rend(); ++it) {
                auto count = count_viewport_ucs(graph, viewport, *it);
                if (count < best_count) {
                    best = *it;
                    best_count = count;
                }
            }
            return VersionChoice::single(best);
        }
    }
    return VersionChoice::single(meta.committed);
}

}  // namespace panorama
