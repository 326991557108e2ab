#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfcorch/compute.hpp"
#include "sfcorch/intent.hpp"
#include "sfcorch/radio.hpp"
#include "sfcorch/rng.hpp"

namespace sfcorch {

struct EnvConfig {
    int num_nodes = 20;
    int num_base_stations = 5;
    int num_vnf_types = 10;
    double area_m = 5000.0;

    double cpu_ghz_min = 20.0, cpu_ghz_max = 50.0;
    double mem_gb_min = 100.0, mem_gb_max = 300.0;
    double bw_mbps_min = 100.0, bw_mbps_max = 500.0;
    double bs_total_bw_mbps = 12000.0;
    int node_cores = 4;

    double vnf_cpu_ghz_min = 1.0, vnf_cpu_ghz_max = 4.0;
    double vnf_data_gbit_min = 0.01, vnf_data_gbit_max = 0.1;
    double vnf_bw_mbps_min = 10.0, vnf_bw_mbps_max = 50.0;

    double t_cold_s = 0.5;
    ChainAggregation chain_mode = ChainAggregation::Max;

    // channel
    double tx_power_w = 10.0;
    double noise_power_w = 1e-12;
    double error_rate = 1e-3;
    int blocklength = 200;
    double pathloss_exponent = 3.5;
    double shadow_sigma = 0.3;   // lognormal sigma of the frozen per-link draw
    int nlos_clusters = 2;
    int nlos_rays = 3;
    FblVariant fbl_variant = FblVariant::Verbatim;

    // requests / reward
    double t_max_s = 10.0;
    double t_target_min_s = 0.5, t_target_max_s = 3.0;
    int sfc_min_len = 3, sfc_max_len = 6;
    double lambda_fail = 1.0;

    // simulation
    double tick_s = 0.1;
    int num_users = 10;
    double speed_min_mps = 1.0, speed_max_mps = 15.0;
    int trajectory_window = 8;
};

struct VnfSpec {
    int type = 0;
    double cpu_ghz = 0.0;          // C2 demand per resident task
    double data_volume_gbit = 0.0; // M_f, drives processing and transfer
    double bw_mbps = 0.0;          // C4 demand per resident task
};

struct EdgeNode {
    int id = 0;
    double x = 0.0, y = 0.0;
    double cpu_ghz = 0.0;   // C_i
    double mem_gb = 0.0;    // M_i
    int bs_id = 0;          // serving base station
};

struct BaseStation {
    int id = 0;
    double x = 0.0, y = 0.0;
    double total_bw_mbps = 0.0;
    Vec alloc_mbps;   // Bw_{e,b} per node
};

struct EdgeTopology {
    std::vector<EdgeNode> nodes;
    std::vector<BaseStation> base_stations;
    std::vector<VnfSpec> vnf_library;
    Mat rsrp_table;   // nodes x base stations, frozen fading baked in
    EnvConfig config;
};

/// Deterministic for a fixed seed; throws std::invalid_argument when the
/// config is infeasible (e.g. C5 cannot hold).
EdgeTopology generate_topology(uint64_t seed, const EnvConfig& config);

struct SfcRequest {
    int user_id = 0;
    std::vector<int> vnf_sequence;   // S_j, ordered
    double t_target_s = 0.0;
    double t_max_s = 0.0;
    double cpu_demand = 0.0;   // giga-cycles per gigabit applied to each task
    double mem_demand_gb = 0.0;
    long submitted_at = 0;
};

struct DeploymentPlan {
    std::vector<int> assignments;   // node id per VNF position
};

struct ConstraintVerdict {
    bool c1 = true, c2 = true, c3 = true, c4 = true, c5 = true;
    bool feasible() const { return c1 && c2 && c3 && c4 && c5; }
    std::vector<std::string> violated() const;
};

struct PlanEvaluation {
    bool feasible = false;
    bool link_infeasible = false;
    ConstraintVerdict verdict;
    std::vector<double> task_delays;
    double total_delay = 0.0;
};

struct ExecutionResult {
    double total_delay = 0.0;
    bool success = false;
    double prob_fail = 0.0;   // indicator for a single request
};

struct RequestRecord {
    double delay = 0.0;
    bool success = false;
    double reward = 0.0;
};

struct EpisodeMetrics {
    std::vector<RequestRecord> requests;
    double mean_delay() const;
    double success_rate() const;
    double mean_reward() const;
};

/// Reward of Eq-style form (t_max - delay)/(t_max - t_target) - lambda * prob_fail.
double reward(double total_delay, double t_target, double t_max, double prob_fail,
              double lambda_fail);

struct MobileUser {
    int id = 0;
    double x = 0.0, y = 0.0;
    double speed_mps = 0.0;
    double waypoint_x = 0.0, waypoint_y = 0.0;
    int serving_node = 0;
    int serving_bs = 0;
    std::vector<std::pair<int, double>> trajectory;   // (node, dwell seconds)
    Vec profile;
};

struct NodeUsage {
    double cpu_used_ghz = 0.0;
    double mem_used_gb = 0.0;
    double bw_used_mbps = 0.0;
    NodeQueueState qstate;
};

/// Single-threaded simulation environment owning all mutable state. Multiple
/// instances may run concurrently; there is no shared state between them.
class EdgeEnv {
public:
    EdgeEnv(EdgeTopology topo, uint64_t seed);

    const EdgeTopology& topology() const { return topo_; }
    const EnvConfig& config() const { return topo_.config; }
    const std::vector<MobileUser>& users() const { return users_; }
    MobileUser& user(int id) { return users_.at(static_cast<size_t>(id)); }
    const std::vector<NodeUsage>& usage() const { return usage_; }
    double now() const { return now_; }
    long tick_count() const { return tick_count_; }
    Rng& rng() { return rng_; }

    /// Residual (free) resources per node; bw residual is against the node's
    /// own serving base station allocation.
    std::vector<NodeResidual> residual_snapshot() const;
    double node_cpu_free(int node) const;
    double node_mem_free(int node) const;
    double node_bw_free(int node, int bs) const;

    /// Link budget between a node and a base station using the frozen channel
    /// tables and the residual allocation.
    LinkBudget link_budget(int node, int bs) const;

    ConstraintVerdict check_constraints(const DeploymentPlan& plan, const SfcRequest& request,
                                        int user_bs) const;

    /// Pure evaluation of a plan against the current state snapshot (no
    /// mutation): per-task delays via the queueing and radio models.
    PlanEvaluation evaluate_plan(const DeploymentPlan& plan, const SfcRequest& request) const;

    /// Evaluates and commits: allocates resources, queues tasks, instantiates
    /// VNFs. Success iff feasible and delay <= t_max.
    ExecutionResult execute_sfc(const DeploymentPlan& plan, const SfcRequest& request);

    /// Advance one tick: release finished work, clear concurrent sets, move
    /// users and update trajectories.
    void tick();

    void mobility_step(MobileUser& user);

    /// Nearest node / base station to a position.
    int nearest_node(double x, double y) const;
    int nearest_bs(double x, double y) const;

    IntentContext context_for(int user_id) const;

private:
    struct ActiveAlloc {
        int node;
        double cpu, mem, bw;
        double release_at;
    };

    double task_comm_delay_s(int node, int bs, double data_gbit) const;

    EdgeTopology topo_;
    std::vector<NodeUsage> usage_;
    std::vector<MobileUser> users_;
    std::vector<ActiveAlloc> active_;
    double now_ = 0.0;
    long tick_count_ = 0;
    Rng rng_;
};

}  // namespace sfcorch
