#pragma once

#include <atomic>
#include <cstdint>

namespace uavdt {

// Global operation counters backing the empirical complexity probe. These are
// exact loop counts, not timings:
//   path_candidates    - one per candidate propagation path examined by the
//                        tracer (the line-of-sight candidate plus one per
//                        reflecting face, whether or not the path is valid)
//   mlp_macs           - multiply-accumulates of the width-by-width trunk
//                        products, the quadratic core of a policy evaluation
//                        (input layer and heads are linear in the width and
//                        are not counted)
//   transition_scalars - scalars appended to the rollout buffer (the flattened
//                        transition dimensionality per stored step)
// Phase timers accumulate wall-clock seconds and are informational only.
struct ProbeCounters {
    std::atomic<std::uint64_t> path_candidates{0};
    std::atomic<std::uint64_t> mlp_macs{0};
    std::atomic<std::uint64_t> transition_scalars{0};
    std::atomic<double> trace_seconds{0.0};
    std::atomic<double> policy_seconds{0.0};
    std::atomic<double> update_seconds{0.0};

    void reset() {
        path_candidates = 0;
        mlp_macs = 0;
        transition_scalars = 0;
        trace_seconds = 0.0;
        policy_seconds = 0.0;
        update_seconds = 0.0;
    }

    void add_seconds(std::atomic<double>& slot, double dt) {
        slot.store(slot.load(std::memory_order_relaxed) + dt, std::memory_order_relaxed);
    }
};

ProbeCounters& probe();

struct ProbeSnapshot {
    std::uint64_t path_candidates = 0;
    std::uint64_t mlp_macs = 0;
    std::uint64_t transition_scalars = 0;
    double trace_seconds = 0.0;
    double policy_seconds = 0.0;
    double update_seconds = 0.0;
};

ProbeSnapshot snapshot_probe();

} // namespace uavdt
