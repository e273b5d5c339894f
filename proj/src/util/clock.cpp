#include "mobench/util/clock.hpp"

namespace mobench {

double SystemClock::now() {
    const auto since_epoch = std::chrono::system_clock::now().time_since_epoch();
    return std::chrono::duration<double>(since_epoch).count();
}

SimulatedClock::SimulatedClock(double tick_seconds, double start)
    : ticks_(0), tick_(tick_seconds), start_(start) {}

double SimulatedClock::now() {
    const auto n = ticks_.fetch_add(1);
    return start_ + static_cast<double>(n) * tick_;
}

}  // namespace mobench
