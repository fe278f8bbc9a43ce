#include "panorama/executors.hpp"

#include <chrono>
#include <thread>

namespace panorama {

ExecutionResult SleepingExecutor::execute(const NodeId& node, Timestamp version, Millis cost) {
    const auto start = std::chrono::steady_clock::now();
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(static_cast<double>(cost.count()) * scale_));
    auto took = std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - start);
    return {payload_token(node, version), took};
}

ExecutionResult GatedExecutor::execute(const NodeId& node, Timestamp version, Millis cost) {
    std::unique_lock lock(mutex_);
    ++started_;
    cv_.notify_all();
    cv_.wait(lock, [&] { return open_ || permits_ > 0; });
    if (!open_) --permits_;
    ++finished_;
    cv_.notify_all();
    return {payload_token(node, version), cost};
}

void GatedExecutor::release(std::size_t n) {
    std::lock_guard lock(mutex_);
    permits_ += n;
    cv_.notify_all();
}

void GatedExecutor::open() {
    std::lock_guard lock(mutex_);
    open_ = true;
    cv_.notify_all();
}

void GatedExecutor::wait_started(std::size_t count) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return started_ >= count; });
}

std::size_t GatedExecutor::finished() const {
    std::lock_guard lock(mutex_);
    return finished_;
}

}  // namespace panorama
