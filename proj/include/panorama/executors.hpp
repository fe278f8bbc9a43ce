#pragma once

#include <condition_variable>
#include <cstddef>
#include <mutex>

#include "panorama/engine.hpp"

namespace panorama {

/// Sleeps for cost * scale of wall time, then reports the measured duration.
class SleepingExecutor final : public Executor {
public:
    explicit SleepingExecutor(double scale = 1.0) : scale_(scale) {}
    ExecutionResult execute(const NodeId& node, Timestamp version, Millis cost) override;

private:
    double scale_;
};

/// Blocks each computation until the test grants a permit. For deterministic
/// control of a live writer thread.
class GatedExecutor final : public Executor {
public:
    ExecutionResult execute(const NodeId& node, Timestamp version, Millis cost) override;

    /// Lets n more computations finish.
    void release(std::size_t n = 1);
    /// Unblocks everything, now and later.
    void open();
    /// Blocks until `count` computations have started.
    void wait_started(std::size_t count);
    std::size_t finished() const;

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t permits_ = 0;
    std::size_t started_ = 0;
    std::size_t finished_ = 0;
    bool open_ = false;
};

}  // namespace panorama
