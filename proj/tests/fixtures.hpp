#pragma once

#include "panorama/engine.hpp"
#include "panorama/simulator.hpp"

namespace panorama::testing {

inline NodeSet set_of(std::initializer_list<const char*> ids) {
    NodeSet s;
    for (const char* id : ids) s.insert(NodeId(id));
    return s;
}

/// The 8-node example graph with one engine on a manual clock.
struct SmallEngine {
    ManualClock clock;
    Engine engine;
    InstantExecutor exec;

    explicit SmallEngine(EngineOptions opts = {}) : engine(ViewGraph::build(small_spec()), clock, opts) {}

    /// Runs steps of the oldest write until `count` views have been installed.
    void install(Timestamp ts, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) engine.step_write(ts, exec);
    }
    void finish(Timestamp ts) {
        while (engine.status(ts) == WriteStatus::Running) engine.step_write(ts, exec);
    }
};

}  // namespace panorama::testing
