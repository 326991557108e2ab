#include "sfcorch/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace sfcorch {

std::vector<std::string> ConstraintVerdict::violated() const {
    std::vector<std::string> v;
    if (!c1) v.push_back("C1");
    if (!c2) v.push_back("C2");
    if (!c3) v.push_back("C3");
    if (!c4) v.push_back("C4");
    if (!c5) v.push_back("C5");
    return v;
}

double EpisodeMetrics::mean_delay() const {
    if (requests.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : requests) s += r.delay;
    return s / static_cast<double>(requests.size());
}

double EpisodeMetrics::success_rate() const {
    if (requests.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : requests) s += r.success ? 1.0 : 0.0;
    return s / static_cast<double>(requests.size());
}

double EpisodeMetrics::mean_reward() const {
    if (requests.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : requests) s += r.reward;
    return s / static_cast<double>(requests.size());
}

double reward(double total_delay, double t_target, double t_max, double prob_fail,
              double lambda_fail) {
    if (t_max <= t_target) throw std::invalid_argument("reward: t_max must exceed t_target");
    return (t_max - total_delay) / (t_max - t_target) - lambda_fail * prob_fail;
}

EdgeTopology generate_topology(uint64_t seed, const EnvConfig& config) {
    if (config.num_nodes < 1 || config.num_base_stations < 1 || config.num_vnf_types < 1)
        throw std::invalid_argument("topology: counts must be positive");
    if (config.cpu_ghz_min > config.cpu_ghz_max || config.mem_gb_min > config.mem_gb_max ||
        config.bw_mbps_min > config.bw_mbps_max)
        throw std::invalid_argument("topology: invalid resource ranges");
    if (config.bw_mbps_min * config.num_nodes > config.bs_total_bw_mbps)
        throw std::invalid_argument("topology: C5 unsatisfiable for the given bandwidth ranges");

    Rng rng(seed);
    EdgeTopology topo;
    topo.config = config;

    for (int b = 0; b < config.num_base_stations; ++b) {
        BaseStation bs;
        bs.id = b;
        bs.x = rng.uniform(0.0, config.area_m);
        bs.y = rng.uniform(0.0, config.area_m);
        bs.total_bw_mbps = config.bs_total_bw_mbps;
        topo.base_stations.push_back(bs);
    }

    for (int i = 0; i < config.num_nodes; ++i) {
        EdgeNode n;
        n.id = i;
        n.x = rng.uniform(0.0, config.area_m);
        n.y = rng.uniform(0.0, config.area_m);
        n.cpu_ghz = rng.uniform(config.cpu_ghz_min, config.cpu_ghz_max);
        n.mem_gb = rng.uniform(config.mem_gb_min, config.mem_gb_max);
        topo.nodes.push_back(n);
    }
    for (auto& n : topo.nodes) {
        double best = 0.0;
        int best_bs = 0;
        for (const auto& bs : topo.base_stations) {
            double d = std::hypot(n.x - bs.x, n.y - bs.y);
            if (bs.id == 0 || d < best) {
                best = d;
                best_bs = bs.id;
            }
        }
        n.bs_id = best_bs;
    }

    for (auto& bs : topo.base_stations) {
        bs.alloc_mbps.resize(config.num_nodes);
        double sum = 0.0;
        for (int e = 0; e < config.num_nodes; ++e) {
            bs.alloc_mbps[e] = rng.uniform(config.bw_mbps_min, config.bw_mbps_max);
            sum += bs.alloc_mbps[e];
        }
        if (sum > bs.total_bw_mbps)
            throw std::invalid_argument("topology: drawn allocations violate C5");
    }

    for (int t = 0; t < config.num_vnf_types; ++t) {
        VnfSpec s;
        s.type = t;
        s.cpu_ghz = rng.uniform(config.vnf_cpu_ghz_min, config.vnf_cpu_ghz_max);
        s.data_volume_gbit = rng.uniform(config.vnf_data_gbit_min, config.vnf_data_gbit_max);
        s.bw_mbps = rng.uniform(config.vnf_bw_mbps_min, config.vnf_bw_mbps_max);
        topo.vnf_library.push_back(s);
    }

    // Frozen per-link channel: pathloss from distance, one shadow draw and one
    // NLoS amplitude set per link.
    topo.rsrp_table = Mat(config.num_nodes, config.num_base_stations);
    for (int e = 0; e < config.num_nodes; ++e) {
        for (int b = 0; b < config.num_base_stations; ++b) {
            ChannelParams ch;
            double d = std::hypot(topo.nodes[e].x - topo.base_stations[b].x,
                                  topo.nodes[e].y - topo.base_stations[b].y);
            ch.pathloss = pathloss_gain(d, config.pathloss_exponent);
            ch.shadow = std::exp(rng.gauss(0.0, config.shadow_sigma));
            ch.los_amp = 1.0;
            ch.nlos_amps = Mat(config.nlos_clusters, config.nlos_rays);
            for (double& a : ch.nlos_amps.a) a = rng.uniform(0.0, 0.5);
            ch.tx_power_w = config.tx_power_w;
            ch.noise_power_w = config.noise_power_w;
            ch.error_rate = config.error_rate;
            ch.blocklength = config.blocklength;
            ch.validate();
            topo.rsrp_table(e, b) = rsrp(ch);
        }
    }
    return topo;
}

EdgeEnv::EdgeEnv(EdgeTopology topo, uint64_t seed) : topo_(std::move(topo)), rng_(seed) {
    usage_.resize(topo_.nodes.size());
    const auto& cfg = topo_.config;
    for (int u = 0; u < cfg.num_users; ++u) {
        MobileUser mu;
        mu.id = u;
        mu.x = rng_.uniform(0.0, cfg.area_m);
        mu.y = rng_.uniform(0.0, cfg.area_m);
        mu.speed_mps = rng_.uniform(cfg.speed_min_mps, cfg.speed_max_mps);
        mu.waypoint_x = rng_.uniform(0.0, cfg.area_m);
        mu.waypoint_y = rng_.uniform(0.0, cfg.area_m);
        mu.serving_node = nearest_node(mu.x, mu.y);
        mu.serving_bs = nearest_bs(mu.x, mu.y);
        mu.trajectory.push_back({mu.serving_node, cfg.tick_s});
        mu.profile.resize(4);
        for (double& p : mu.profile) p = rng_.uniform() < 0.5 ? 0.0 : 1.0;
        users_.push_back(std::move(mu));
    }
}

int EdgeEnv::nearest_node(double x, double y) const {
    int best = 0;
    double bd = std::numeric_limits<double>::max();
    for (const auto& n : topo_.nodes) {
        double d = std::hypot(n.x - x, n.y - y);
        if (d < bd) {
            bd = d;
            best = n.id;
        }
    }
    return best;
}

int EdgeEnv::nearest_bs(double x, double y) const {
    int best = 0;
    double bd = std::numeric_limits<double>::max();
    for (const auto& b : topo_.base_stations) {
        double d = std::hypot(b.x - x, b.y - y);
        if (d < bd) {
            bd = d;
            best = b.id;
        }
    }
    return best;
}

double EdgeEnv::node_cpu_free(int node) const {
    return topo_.nodes[node].cpu_ghz - usage_[node].cpu_used_ghz;
}

double EdgeEnv::node_mem_free(int node) const {
    return topo_.nodes[node].mem_gb - usage_[node].mem_used_gb;
}

double EdgeEnv::node_bw_free(int node, int bs) const {
    return topo_.base_stations[bs].alloc_mbps[node] - usage_[node].bw_used_mbps;
}

std::vector<NodeResidual> EdgeEnv::residual_snapshot() const {
    std::vector<NodeResidual> out;
    out.reserve(topo_.nodes.size());
    for (const auto& n : topo_.nodes)
        out.push_back({std::max(0.0, node_cpu_free(n.id)), std::max(0.0, node_mem_free(n.id))});
    return out;
}

LinkBudget EdgeEnv::link_budget(int node, int bs) const {
    LinkBudget lb;
    lb.rsrp_w = topo_.rsrp_table(node, bs);
    std::vector<double> others;
    for (int b = 0; b < topo_.config.num_base_stations; ++b)
        if (b != bs) others.push_back(topo_.rsrp_table(node, b));
    lb.interference_w = interference(others);
    lb.sinr = sinr(lb.rsrp_w, lb.interference_w, topo_.config.noise_power_w);
    lb.allocated_bw_hz = topo_.base_stations[bs].alloc_mbps[node] * 1e6;
    lb.rate_bps = lb.sinr > 0.0
                      ? rate_fbl(lb.sinr, lb.allocated_bw_hz, topo_.config.error_rate,
                                 topo_.config.blocklength, topo_.config.fbl_variant)
                      : 0.0;
    return lb;
}

double EdgeEnv::task_comm_delay_s(int node, int bs, double data_gbit) const {
    LinkBudget lb = link_budget(node, bs);
    if (lb.rate_bps <= 0.0) return -1.0;   // infeasible link
    double one_way = comm_delay(data_gbit * 1e9, lb.rate_bps);
    return task_comm_delay(one_way, one_way);
}

ConstraintVerdict EdgeEnv::check_constraints(const DeploymentPlan& plan,
                                             const SfcRequest& request, int user_bs) const {
    ConstraintVerdict v;
    const auto& cfg = topo_.config;

    if (plan.assignments.size() != request.vnf_sequence.size()) v.c1 = false;
    for (int node : plan.assignments)
        if (node < 0 || node >= cfg.num_nodes) v.c1 = false;
    if (!v.c1) return v;

    std::map<int, double> cpu_add, mem_add, bw_add;
    for (size_t k = 0; k < plan.assignments.size(); ++k) {
        int node = plan.assignments[k];
        const VnfSpec& spec = topo_.vnf_library[request.vnf_sequence[k]];
        cpu_add[node] += spec.cpu_ghz;
        mem_add[node] += request.mem_demand_gb;
        bw_add[node] += spec.bw_mbps;
    }
    for (const auto& [node, add] : cpu_add)
        if (usage_[node].cpu_used_ghz + add > topo_.nodes[node].cpu_ghz + 1e-9) v.c2 = false;
    for (const auto& [node, add] : mem_add)
        if (usage_[node].mem_used_gb + add > topo_.nodes[node].mem_gb + 1e-9) v.c3 = false;
    for (const auto& [node, add] : bw_add)
        if (usage_[node].bw_used_mbps + add >
            topo_.base_stations[user_bs].alloc_mbps[node] + 1e-9)
            v.c4 = false;

    for (const auto& bs : topo_.base_stations) {
        double sum = 0.0;
        for (double a : bs.alloc_mbps) sum += a;
        if (sum > bs.total_bw_mbps + 1e-9) v.c5 = false;
    }
    return v;
}

PlanEvaluation EdgeEnv::evaluate_plan(const DeploymentPlan& plan,
                                      const SfcRequest& request) const {
    PlanEvaluation ev;
    const auto& cfg = topo_.config;
    const MobileUser& u = users_.at(static_cast<size_t>(request.user_id));

    ev.verdict = check_constraints(plan, request, u.serving_bs);
    if (!ev.verdict.feasible()) return ev;

    // Work on copies of the touched queue states so evaluation stays pure.
    std::map<int, NodeQueueState> scratch;
    std::vector<double> delays;
    for (size_t k = 0; k < plan.assignments.size(); ++k) {
        int node = plan.assignments[k];
        const VnfSpec& spec = topo_.vnf_library[request.vnf_sequence[k]];
        if (scratch.find(node) == scratch.end()) scratch[node] = usage_[node].qstate;
        NodeQueueState& qs = scratch[node];

        VnfTask task;
        task.vnf_type = spec.type;
        task.cycles_per_bit = request.cpu_demand;
        task.data_volume_gbit = spec.data_volume_gbit;
        task.bw_demand_mbps = spec.bw_mbps;
        task.owner_sfc = request.user_id;

        double t_wait = concurrent_wait(qs.concurrent);
        double t_queue = queue_delay(task, qs, cfg.t_cold_s);
        qs.instantiated_vnfs.insert(task.vnf_type);

        TaskAllocation alloc;
        alloc.clock_hz = topo_.nodes[node].cpu_ghz * 1e9;
        alloc.cores = static_cast<double>(cfg.node_cores) /
                      static_cast<double>(qs.instantiated_vnfs.size());
        double t_proc = exec_time(task, alloc);

        double t_comm = task_comm_delay_s(node, u.serving_bs, spec.data_volume_gbit);
        if (t_comm < 0.0) {
            ev.link_infeasible = true;
            return ev;
        }

        double total = total_task_delay(t_wait, t_queue, t_proc, t_comm);
        delays.push_back(total);
        qs.queue.push_back({task, alloc, 0.0});
        qs.concurrent.push_back({task, alloc, 0.0});
    }
    ev.task_delays = delays;
    ev.total_delay = sfc_delay(delays, cfg.chain_mode);
    ev.feasible = true;
    return ev;
}

ExecutionResult EdgeEnv::execute_sfc(const DeploymentPlan& plan, const SfcRequest& request) {
    const auto& cfg = topo_.config;
    PlanEvaluation ev = evaluate_plan(plan, request);
    ExecutionResult res;
    if (!ev.feasible) {
        res.total_delay = request.t_max_s;
        res.success = false;
        res.prob_fail = 1.0;
        return res;
    }

    for (size_t k = 0; k < plan.assignments.size(); ++k) {
        int node = plan.assignments[k];
        const VnfSpec& spec = topo_.vnf_library[request.vnf_sequence[k]];
        NodeQueueState& qs = usage_[node].qstate;

        VnfTask task;
        task.vnf_type = spec.type;
        task.cycles_per_bit = request.cpu_demand;
        task.data_volume_gbit = spec.data_volume_gbit;
        task.bw_demand_mbps = spec.bw_mbps;
        task.owner_sfc = request.user_id;

        qs.instantiated_vnfs.insert(task.vnf_type);
        TaskAllocation alloc;
        alloc.clock_hz = topo_.nodes[node].cpu_ghz * 1e9;
        alloc.cores = static_cast<double>(cfg.node_cores) /
                      static_cast<double>(qs.instantiated_vnfs.size());

        // a request past its deadline is aborted, so nothing occupies
        // resources longer than t_max
        double completes = now_ + std::min(ev.task_delays[k], request.t_max_s);
        qs.queue.push_back({task, alloc, completes});
        qs.concurrent.push_back({task, alloc, completes});

        usage_[node].cpu_used_ghz += spec.cpu_ghz;
        usage_[node].mem_used_gb += request.mem_demand_gb;
        usage_[node].bw_used_mbps += spec.bw_mbps;
        active_.push_back({node, spec.cpu_ghz, request.mem_demand_gb, spec.bw_mbps, completes});
    }

    res.total_delay = ev.total_delay;
    res.success = ev.total_delay <= request.t_max_s;
    res.prob_fail = res.success ? 0.0 : 1.0;
    return res;
}

void EdgeEnv::tick() {
    now_ += topo_.config.tick_s;
    ++tick_count_;

    for (auto it = active_.begin(); it != active_.end();) {
        if (it->release_at <= now_) {
            usage_[it->node].cpu_used_ghz -= it->cpu;
            usage_[it->node].mem_used_gb -= it->mem;
            usage_[it->node].bw_used_mbps -= it->bw;
            it = active_.erase(it);
        } else {
            ++it;
        }
    }
    for (auto& nu : usage_) {
        auto& q = nu.qstate.queue;
        q.erase(std::remove_if(q.begin(), q.end(),
                               [this](const QueuedTask& t) { return t.completes_at <= now_; }),
                q.end());
        nu.qstate.concurrent.clear();
    }
    for (auto& u : users_) mobility_step(u);
}

void EdgeEnv::mobility_step(MobileUser& u) {
    const auto& cfg = topo_.config;
    if (u.speed_mps > 0.0) {
        double dx = u.waypoint_x - u.x;
        double dy = u.waypoint_y - u.y;
        double dist = std::hypot(dx, dy);
        double step = u.speed_mps * cfg.tick_s;
        if (dist <= step) {
            u.x = u.waypoint_x;
            u.y = u.waypoint_y;
            u.waypoint_x = rng_.uniform(0.0, cfg.area_m);
            u.waypoint_y = rng_.uniform(0.0, cfg.area_m);
        } else {
            u.x += dx / dist * step;
            u.y += dy / dist * step;
        }
    }
    int node = nearest_node(u.x, u.y);
    u.serving_bs = nearest_bs(u.x, u.y);
    if (node == u.serving_node && !u.trajectory.empty()) {
        u.trajectory.back().second += cfg.tick_s;
    } else {
        u.serving_node = node;
        u.trajectory.push_back({node, cfg.tick_s});
        size_t w = static_cast<size_t>(cfg.trajectory_window);
        if (u.trajectory.size() > w)
            u.trajectory.erase(u.trajectory.begin(),
                               u.trajectory.begin() +
                                   static_cast<long>(u.trajectory.size() - w));
    }
}

IntentContext EdgeEnv::context_for(int user_id) const {
    const MobileUser& u = users_.at(static_cast<size_t>(user_id));
    double bw_free = 0.0;
    for (const auto& n : topo_.nodes) bw_free += std::max(0.0, node_bw_free(n.id, n.bs_id));
    bw_free /= static_cast<double>(topo_.nodes.size());
    return build_context(u.trajectory, residual_snapshot(), bw_free, u.profile,
                         topo_.config.trajectory_window, topo_.config.num_nodes);
}

}  // namespace sfcorch
