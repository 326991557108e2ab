#pragma once

#include <set>
#include <vector>

#include "sfcorch/linalg.hpp"

namespace sfcorch {

/// One VNF task resident on a node. cycles_per_bit is in giga-cycles per
/// gigabit (numerically cycles/bit), data_volume in gigabits, so the total
/// work is cycles_per_bit * data_volume * 1e9 cycles.
struct VnfTask {
    int vnf_type = 0;
    double cycles_per_bit = 0.0;
    double data_volume_gbit = 0.0;
    double bw_demand_mbps = 0.0;
    int owner_sfc = -1;
};

struct TaskAllocation {
    double clock_hz = 0.0;   // zeta
    double cores = 0.0;      // eta (fractional shares allowed)
};

struct QueuedTask {
    VnfTask task;
    TaskAllocation alloc;
    double completes_at = 0.0;   // simulator bookkeeping
};

struct NodeQueueState {
    std::vector<QueuedTask> queue;            // Q_t, ordered
    std::vector<QueuedTask> concurrent;       // H_t (admitted this tick)
    std::set<int> instantiated_vnfs;
};

/// Unit execution time C_f * M_f / (zeta * eta).
double exec_time(const VnfTask& task, const TaskAllocation& alloc);

/// Mean execution time over the concurrent set; 0 when the set is empty.
double concurrent_wait(const std::vector<QueuedTask>& concurrent);

/// Warm path: sum of execution times over same-type queued tasks. Cold path:
/// sum over the whole queue plus (n+1)*t_cold, n = number of distinct queued
/// types without an instantiated VNF.
double queue_delay(const VnfTask& task, const NodeQueueState& state, double t_cold);

double processing_delay(const VnfTask& task, double clock_hz, double cores);

/// t' + t_queue + t_proc + t_comm.
double total_task_delay(double concurrent_wait_s, double queue_delay_s, double processing_s,
                        double comm_s);

enum class ChainAggregation { Max, Sum };

/// Aggregate per-task delays into the SFC delay (max by default).
double sfc_delay(const std::vector<double>& task_delays,
                 ChainAggregation mode = ChainAggregation::Max);

}  // namespace sfcorch
