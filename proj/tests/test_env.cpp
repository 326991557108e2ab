#include <cmath>

#include "doctest.h"
#include "sfcorch/env.hpp"

using namespace sfcorch;

namespace {

EnvConfig small_config() {
    EnvConfig c;
    c.num_nodes = 6;
    c.num_base_stations = 2;
    c.num_users = 3;
    c.num_vnf_types = 5;
    return c;
}

SfcRequest simple_request(const EdgeEnv& env, int user_id, std::vector<int> seq) {
    SfcRequest r;
    r.user_id = user_id;
    r.vnf_sequence = std::move(seq);
    r.t_target_s = 1.0;
    r.t_max_s = 10.0;
    r.cpu_demand = 100.0;
    r.mem_demand_gb = 1.0;
    return r;
}

int reachable_node(const EdgeEnv& env, int user_id) {
    int bs = env.users().at(static_cast<size_t>(user_id)).serving_bs;
    for (int i = 0; i < env.config().num_nodes; ++i)
        if (env.link_budget(i, bs).rate_bps > 0.0) return i;
    return -1;
}

}  // namespace

TEST_CASE("topology generation is deterministic and valid") {
    EnvConfig cfg = small_config();
    EdgeTopology a = generate_topology(99, cfg);
    EdgeTopology b = generate_topology(99, cfg);
    EdgeTopology c = generate_topology(100, cfg);

    REQUIRE(a.nodes.size() == 6);
    REQUIRE(a.base_stations.size() == 2);
    REQUIRE(a.vnf_library.size() == 5);

    for (size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i].x == b.nodes[i].x);
        CHECK(a.nodes[i].cpu_ghz == b.nodes[i].cpu_ghz);
        CHECK(a.nodes[i].cpu_ghz >= cfg.cpu_ghz_min);
        CHECK(a.nodes[i].cpu_ghz <= cfg.cpu_ghz_max);
        CHECK(a.nodes[i].mem_gb >= cfg.mem_gb_min);
        CHECK(a.nodes[i].mem_gb <= cfg.mem_gb_max);
        CHECK(a.nodes[i].x >= 0.0);
        CHECK(a.nodes[i].x <= cfg.area_m);
    }
    bool differs = false;
    for (size_t i = 0; i < a.nodes.size(); ++i)
        if (a.nodes[i].x != c.nodes[i].x) differs = true;
    CHECK(differs);

    // C5 holds by construction for every station
    for (const auto& bs : a.base_stations) {
        double sum = 0.0;
        for (double w : bs.alloc_mbps) sum += w;
        CHECK(sum <= bs.total_bw_mbps + 1e-9);
    }
}

TEST_CASE("reward matches the closed form") {
    // (t_max - delay) / (t_max - t_target) - lambda * prob_fail
    CHECK(reward(1.0, 1.0, 10.0, 0.0, 1.0) == doctest::Approx(1.0));
    CHECK(reward(10.0, 1.0, 10.0, 1.0, 1.0) == doctest::Approx(-1.0));
    CHECK(reward(5.5, 1.0, 10.0, 0.0, 1.0) == doctest::Approx(4.5 / 9.0));
    CHECK(reward(2.0, 1.0, 10.0, 1.0, 2.0) == doctest::Approx(8.0 / 9.0 - 2.0));
}

TEST_CASE("episode metrics average their records") {
    EpisodeMetrics m;
    m.requests.push_back({1.0, true, 0.5});
    m.requests.push_back({3.0, false, -1.0});
    CHECK(m.mean_delay() == doctest::Approx(2.0));
    CHECK(m.success_rate() == doctest::Approx(0.5));
    CHECK(m.mean_reward() == doctest::Approx(-0.25));
}

TEST_CASE("nearest node and station agree with a linear scan") {
    EdgeEnv env(generate_topology(7, small_config()), 3);
    const auto& topo = env.topology();
    double px = 1234.0, py = 2345.0;
    int best = 0;
    double bd = 1e30;
    for (size_t i = 0; i < topo.nodes.size(); ++i) {
        double d = std::hypot(topo.nodes[i].x - px, topo.nodes[i].y - py);
        if (d < bd) {
            bd = d;
            best = static_cast<int>(i);
        }
    }
    CHECK(env.nearest_node(px, py) == best);

    int bbs = 0;
    bd = 1e30;
    for (size_t i = 0; i < topo.base_stations.size(); ++i) {
        double d = std::hypot(topo.base_stations[i].x - px, topo.base_stations[i].y - py);
        if (d < bd) {
            bd = d;
            bbs = static_cast<int>(i);
        }
    }
    CHECK(env.nearest_bs(px, py) == bbs);
}

TEST_CASE("evaluate_plan is pure and matches the assembled delay model") {
    EdgeEnv env(generate_topology(21, small_config()), 5);
    int node = reachable_node(env, 0);
    REQUIRE(node >= 0);
    SfcRequest req = simple_request(env, 0, {1});
    DeploymentPlan plan;
    plan.assignments = {node};

    PlanEvaluation ev1 = env.evaluate_plan(plan, req);
    PlanEvaluation ev2 = env.evaluate_plan(plan, req);
    REQUIRE(ev1.feasible);
    CHECK(ev1.total_delay == ev2.total_delay);
    CHECK(env.usage()[static_cast<size_t>(node)].cpu_used_ghz == 0.0);

    // independent assembly on an idle node: no concurrent wait, one cold
    // start, processing at full clock over all cores, comm both ways
    const auto& cfg = env.config();
    const VnfSpec& spec = env.topology().vnf_library[1];
    VnfTask task;
    task.cycles_per_bit = req.cpu_demand;
    task.data_volume_gbit = spec.data_volume_gbit;
    double t_queue = cfg.t_cold_s;
    double t_proc = processing_delay(task, env.topology().nodes[static_cast<size_t>(node)].cpu_ghz * 1e9,
                                     static_cast<double>(cfg.node_cores));
    int bs = env.users().at(0).serving_bs;
    double one_way = comm_delay(spec.data_volume_gbit * 1e9, env.link_budget(node, bs).rate_bps);
    double expect = total_task_delay(0.0, t_queue, t_proc, task_comm_delay(one_way, one_way));
    CHECK(ev1.total_delay == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("constraint verdicts flag each violated resource") {
    EdgeEnv env(generate_topology(33, small_config()), 9);
    SfcRequest req = simple_request(env, 0, {0, 1});
    int bs = env.users().at(0).serving_bs;

    DeploymentPlan bad_len;
    bad_len.assignments = {0};
    CHECK_FALSE(env.check_constraints(bad_len, req, bs).c1);

    DeploymentPlan bad_node;
    bad_node.assignments = {0, 99};
    CHECK_FALSE(env.check_constraints(bad_node, req, bs).c1);

    DeploymentPlan ok;
    ok.assignments = {0, 0};
    CHECK(env.check_constraints(ok, req, bs).feasible());

    SfcRequest fat = req;
    fat.mem_demand_gb = 1e5;
    ConstraintVerdict v = env.check_constraints(ok, fat, bs);
    CHECK_FALSE(v.c3);
    CHECK_FALSE(v.feasible());
    CHECK(v.violated().size() >= 1);
}

TEST_CASE("execute commits resources and ticks release them") {
    EdgeEnv env(generate_topology(21, small_config()), 5);
    int node = reachable_node(env, 0);
    REQUIRE(node >= 0);
    SfcRequest req = simple_request(env, 0, {1, 1});
    DeploymentPlan plan;
    plan.assignments = {node, node};

    double cpu_before = env.node_cpu_free(node);
    double mem_before = env.node_mem_free(node);
    ExecutionResult res = env.execute_sfc(plan, req);
    const VnfSpec& spec = env.topology().vnf_library[1];
    CHECK(env.node_cpu_free(node) == doctest::Approx(cpu_before - 2.0 * spec.cpu_ghz));
    CHECK(env.node_mem_free(node) == doctest::Approx(mem_before - 2.0 * req.mem_demand_gb));

    // held at most t_max seconds regardless of the computed delay
    int max_ticks = static_cast<int>(req.t_max_s / env.config().tick_s) + 2;
    for (int t = 0; t < max_ticks; ++t) env.tick();
    CHECK(env.node_cpu_free(node) == doctest::Approx(cpu_before));
    CHECK(env.node_mem_free(node) == doctest::Approx(mem_before));
    CHECK(res.total_delay > 0.0);
}

TEST_CASE("queued work delays a later chain on the same warm node") {
    EdgeEnv env(generate_topology(21, small_config()), 5);
    int node = reachable_node(env, 0);
    REQUIRE(node >= 0);
    SfcRequest req = simple_request(env, 0, {1});
    DeploymentPlan plan;
    plan.assignments = {node};

    // warm the node, then drain its queue so only the instantiation remains
    env.execute_sfc(plan, req);
    for (int t = 0; t < 120; ++t) env.tick();
    PlanEvaluation warm_idle = env.evaluate_plan(plan, req);

    env.execute_sfc(plan, req);
    PlanEvaluation warm_busy = env.evaluate_plan(plan, req);
    REQUIRE(warm_idle.feasible);
    REQUIRE(warm_busy.feasible);
    CHECK(warm_busy.total_delay > warm_idle.total_delay);
}

TEST_CASE("ticks move users and keep serving assignments nearest") {
    EnvConfig cfg = small_config();
    cfg.speed_min_mps = 10.0;
    cfg.speed_max_mps = 15.0;
    EdgeEnv env(generate_topology(5, cfg), 11);
    double x0 = env.users().at(0).x, y0 = env.users().at(0).y;
    for (int t = 0; t < 50; ++t) env.tick();
    const MobileUser& u = env.users().at(0);
    CHECK((u.x != x0 || u.y != y0));
    CHECK(u.x >= 0.0);
    CHECK(u.x <= cfg.area_m);
    CHECK(u.serving_node == env.nearest_node(u.x, u.y));
    CHECK(u.serving_bs == env.nearest_bs(u.x, u.y));
    CHECK(env.tick_count() == 50);
    CHECK(env.now() == doctest::Approx(5.0));
}

TEST_CASE("stationary users never move") {
    EnvConfig cfg = small_config();
    cfg.speed_min_mps = 0.0;
    cfg.speed_max_mps = 0.0;
    EdgeEnv env(generate_topology(5, cfg), 11);
    double x0 = env.users().at(1).x, y0 = env.users().at(1).y;
    for (int t = 0; t < 20; ++t) env.tick();
    CHECK(env.users().at(1).x == doctest::Approx(x0));
    CHECK(env.users().at(1).y == doctest::Approx(y0));
}

TEST_CASE("context reflects live residuals and trajectory window") {
    EnvConfig cfg = small_config();
    EdgeEnv env(generate_topology(21, cfg), 5);
    for (int t = 0; t < 30; ++t) env.tick();
    IntentContext ctx = env.context_for(0);
    CHECK(static_cast<int>(ctx.network_state.size()) == cfg.num_nodes);
    CHECK(static_cast<int>(ctx.trajectory.size()) <= cfg.trajectory_window);
    CHECK_FALSE(ctx.trajectory.empty());
    for (size_t i = 0; i < ctx.network_state.size(); ++i) {
        CHECK(ctx.network_state[i].cpu_free ==
              doctest::Approx(env.node_cpu_free(static_cast<int>(i))));
        CHECK(ctx.network_state[i].mem_free ==
              doctest::Approx(env.node_mem_free(static_cast<int>(i))));
    }
}
