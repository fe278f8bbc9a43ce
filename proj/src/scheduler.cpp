#include "panorama/scheduler.hpp"

#include <algorithm>
#include <iterator>
#include <vector>

namespace panorama {

void DwellTracker::reset(Timestamp write_ts, Millis now) {
    write_ts_ = write_ts;
    dwell_.clear();
    last_viewport_.clear();
    last_event_at_ = now;
}

void DwellTracker::record_read(const NodeSet& viewport, Millis now) {
    if (now < last_event_at_)
        throw Error(ErrorCode::ClockWentBackwards,
                    std::to_string(now.count()) + "ms < " + std::to_string(last_event_at_.count()) + "ms");
    auto gap = now - last_event_at_;
    for (const auto& node : last_viewport_) dwell_[node] += gap;
    last_viewport_ = viewport;
    last_event_at_ = now;
}

Millis DwellTracker::dwell(const NodeId& node) const {
    auto it = dwell_.find(node);
    return it == dwell_.end() ? Millis{0} : it->second;
}

CostModel CostModel::from_graph(const ViewGraph& graph, Mode mode) {
    CostModel m(mode);
    for (const auto& id : graph.nodes()) m.set(id, static_cast<double>(graph.cost(id).count()));
    return m;
}

double CostModel::estimate(const NodeId& node) const {
    auto it = estimate_.find(node);
    if (it == estimate_.end()) throw Error(ErrorCode::UnknownNode, node.str());
    return std::max(it->second, kFloorMs);
}

void CostModel::observe(const NodeId& node, Millis measured) {
    if (mode_ != Mode::EwmaMeasured) return;
    auto it = estimate_.find(node);
    if (it == estimate_.end()) throw Error(ErrorCode::UnknownNode, node.str());
    it->second = kAlpha * static_cast<double>(measured.count()) + (1.0 - kAlpha) * it->second;
}

std::string_view to_string(PolicyKind p) noexcept {
    switch (p) {
        case PolicyKind::TP: return "tp";
        case PolicyKind::NoOpt: return "noopt";
        case PolicyKind::Antifreeze: return "antifreeze";
        case PolicyKind::MetricOpt: return "metricopt";
    }
    return "?";
}

PolicyKind parse_policy(std::string_view name) {
    for (auto p : {PolicyKind::TP, PolicyKind::NoOpt, PolicyKind::Antifreeze, PolicyKind::MetricOpt})
        if (to_string(p) == name) return p;
    throw Error(ErrorCode::UnknownPolicy, std::string(name));
}

double priority(const DwellTracker& tracker, const CostModel& costs, const NodeId& node) {
    return static_cast<double>(tracker.dwell(node).count()) / costs.estimate(node);
}

NodeId Scheduler::next_view(const DwellTracker& tracker, const CostModel& costs, const NodeSet& group) {
    if (group.empty()) throw Error(ErrorCode::EmptyGroup, "no view left in the current stratum");

    if (policy_ == PolicyKind::NoOpt) {
        std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
        return *std::next(group.begin(), static_cast<std::ptrdiff_t>(pick(rng_)));
    }

    struct Candidate {
        const NodeId* id;
        double dwell;
        double cost;
    };
    std::vector<Candidate> cands;
    cands.reserve(group.size());
    for (const auto& id : group)
        cands.push_back({&id, static_cast<double>(tracker.dwell(id).count()), costs.estimate(id)});

    // Returns <0 when a ranks ahead of b on the policy's primary key, >0 when behind, 0 on a tie.
    auto primary = [this](const Candidate& a, const Candidate& b) -> int {
        switch (policy_) {
            case PolicyKind::TP: {
                // D_a/Q_a vs D_b/Q_b without dividing.
                double lhs = a.dwell * b.cost;
                double rhs = b.dwell * a.cost;
                return lhs > rhs ? -1 : (lhs < rhs ? 1 : 0);
            }
            case PolicyKind::MetricOpt: return a.dwell > b.dwell ? -1 : (a.dwell < b.dwell ? 1 : 0);
            case PolicyKind::Antifreeze:
            case PolicyKind::NoOpt: return 0;
        }
        return 0;
    };
    auto before = [&](const Candidate& a, const Candidate& b) {
        if (int p = primary(a, b); p != 0) return p < 0;
        if (a.cost != b.cost) return a.cost < b.cost;
        return *a.id < *b.id;
    };
    return *std::min_element(cands.begin(), cands.end(), before)->id;
}

}  // namespace panorama
