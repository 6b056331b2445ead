#include "uavdt/probe.hpp"

namespace uavdt {

ProbeCounters& probe() {
    static ProbeCounters counters;
    return counters;
}

ProbeSnapshot snapshot_probe() {
    ProbeCounters& p = probe();
    ProbeSnapshot s;
    s.path_candidates = p.path_candidates.load(std::memory_order_relaxed);
    s.mlp_macs = p.mlp_macs.load(std::memory_order_relaxed);
    s.transition_scalars = p.transition_scalars.load(std::memory_order_relaxed);
    s.trace_seconds = p.trace_seconds.load(std::memory_order_relaxed);
    s.policy_seconds = p.policy_seconds.load(std::memory_order_relaxed);
    s.update_seconds = p.update_seconds.load(std::memory_order_relaxed);
    return s;
}

} // namespace uavdt
