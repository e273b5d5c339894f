#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace mobench {

/// Time source for everything that ends up in persisted metrics.
class Clock {
public:
    virtual ~Clock() = default;
    /// Seconds on a monotone timeline.
    virtual double now() = 0;
};

/// Wall-clock epoch seconds (system_clock), so timestamps from different
/// workers are comparable.
class SystemClock final : public Clock {
public:
    double now() override;
};

/// Deterministic clock: every reading advances time by a fixed tick. Used for
/// reproducible end-to-end runs where reports must be byte-identical.
class SimulatedClock final : public Clock {
public:
    explicit SimulatedClock(double tick_seconds = 0.25, double start = 0.0);
    double now() override;

private:
    std::atomic<std::int64_t> ticks_;
    double tick_;
    double start_;
};

}  // namespace mobench
