#include "sfcorch/compute.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sfcorch {

double exec_time(const VnfTask& task, const TaskAllocation& alloc) {
    if (alloc.clock_hz <= 0.0 || alloc.cores <= 0.0)
        throw std::invalid_argument("exec_time: allocation must be positive");
    return task.cycles_per_bit * task.data_volume_gbit * 1e9 / (alloc.clock_hz * alloc.cores);
}

double concurrent_wait(const std::vector<QueuedTask>& concurrent) {
    if (concurrent.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& qt : concurrent) sum += exec_time(qt.task, qt.alloc);
    return sum / static_cast<double>(concurrent.size());
}

double queue_delay(const VnfTask& task, const NodeQueueState& state, double t_cold) {
    bool warm = state.instantiated_vnfs.count(task.vnf_type) > 0;
    if (warm) {
        double sum = 0.0;
        for (const auto& qt : state.queue)
            if (qt.task.vnf_type == task.vnf_type) sum += exec_time(qt.task, qt.alloc);
        return sum;
    }
    double sum = 0.0;
    std::set<int> cold_types;
    for (const auto& qt : state.queue) {
        sum += exec_time(qt.task, qt.alloc);
        if (state.instantiated_vnfs.count(qt.task.vnf_type) == 0)
            cold_types.insert(qt.task.vnf_type);
    }
    double n = static_cast<double>(cold_types.size());
    return sum + (n + 1.0) * t_cold;
}

double processing_delay(const VnfTask& task, double clock_hz, double cores) {
    return exec_time(task, TaskAllocation{clock_hz, cores});
}

double total_task_delay(double concurrent_wait_s, double queue_delay_s, double processing_s,
                        double comm_s) {
    return concurrent_wait_s + queue_delay_s + processing_s + comm_s;
}

double sfc_delay(const std::vector<double>& task_delays, ChainAggregation mode) {
    if (task_delays.empty()) throw std::invalid_argument("sfc_delay: empty SFC");
    if (mode == ChainAggregation::Max)
        return *std::max_element(task_delays.begin(), task_delays.end());
    double sum = 0.0;
    for (double d : task_delays) sum += d;
    return sum;
}

}  // namespace sfcorch
