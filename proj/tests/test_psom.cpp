#include <cmath>
#include <cstdio>
#include <numeric>

#include "doctest.h"
#include "sfcorch/baselines.hpp"
#include "sfcorch/psom.hpp"

using namespace sfcorch;

namespace {

EnvConfig tiny_config() {
    EnvConfig c;
    c.num_nodes = 5;
    c.num_base_stations = 2;
    c.num_users = 3;
    c.num_vnf_types = 6;
    return c;
}

PsomConfig tiny_psom(const EnvConfig& ec) {
    PsomConfig pc;
    pc.k_vnf = ec.num_vnf_types;
    pc.q_qos = 3;
    pc.d_model = 16;
    pc.hidden = 16;
    pc.num_heads = 2;
    pc.attn_layers = 1;
    pc.num_nodes = ec.num_nodes;
    pc.cpu_ghz_max = ec.cpu_ghz_max;
    pc.mem_gb_max = ec.mem_gb_max;
    pc.bw_mbps_max = ec.bw_mbps_max;
    pc.area_m = ec.area_m;
    return pc;
}

SfcRequest make_request(int user_id, std::vector<int> seq) {
    SfcRequest r;
    r.user_id = user_id;
    r.vnf_sequence = std::move(seq);
    r.t_target_s = 1.0;
    r.t_max_s = 10.0;
    r.cpu_demand = 150.0;
    r.mem_demand_gb = 1.5;
    return r;
}

ImplicitIntent intent_for(const SfcRequest& req, int k, int q) {
    return no_prediction_variant(req.vnf_sequence, k, q, req.cpu_demand, req.mem_demand_gb);
}

class RandomTaskSource : public TaskSource {
public:
    TrainingTask next(EdgeEnv& env, Rng& rng) override {
        TrainingTask t;
        t.text = "synthetic";
        t.user_id = rng.uniform_int(env.config().num_users);
        int len = 2 + rng.uniform_int(2);
        for (int i = 0; i < len; ++i)
            t.true_vnfs.push_back(rng.uniform_int(env.config().num_vnf_types));
        t.true_cpu = rng.uniform(100.0, 300.0);
        t.true_mem = rng.uniform(1.0, 3.0);
        t.true_qos = {0.4, 0.3, 0.3};
        t.t_target_s = 1.0;
        t.t_max_s = 10.0;
        return t;
    }
};

}  // namespace

TEST_CASE("feasibility mask matches a per-node residual check") {
    EnvConfig ec = tiny_config();
    EdgeEnv env(generate_topology(61, ec), 4);
    SfcRequest req = make_request(0, {2});
    const VnfSpec& spec = env.topology().vnf_library[2];
    int bs = env.users().at(0).serving_bs;
    Vec zero(static_cast<size_t>(ec.num_nodes), 0.0);

    Vec mask = PsomPolicy::feasibility_mask(env, req, spec, bs, zero, zero, zero);
    REQUIRE(static_cast<int>(mask.size()) == ec.num_nodes);
    for (int i = 0; i < ec.num_nodes; ++i) {
        bool ok = env.node_cpu_free(i) >= spec.cpu_ghz &&
                  env.node_mem_free(i) >= req.mem_demand_gb &&
                  env.node_bw_free(i, bs) >= spec.bw_mbps &&
                  env.link_budget(i, bs).rate_bps > 0.0;
        CHECK(mask[static_cast<size_t>(i)] == (ok ? 1.0 : 0.0));
    }

    // tentative usage from earlier steps of the same plan counts
    Vec cpu_add = zero, mem_add = zero, bw_add = zero;
    for (int i = 0; i < ec.num_nodes; ++i) {
        cpu_add[static_cast<size_t>(i)] = env.node_cpu_free(i);
        mem_add[static_cast<size_t>(i)] = env.node_mem_free(i);
    }
    Vec none = PsomPolicy::feasibility_mask(env, req, spec, bs, cpu_add, mem_add, bw_add);
    for (double v : none) CHECK(v == 0.0);
}

TEST_CASE("rollouts only ever pick feasible nodes") {
    EnvConfig ec = tiny_config();
    PsomConfig pc = tiny_psom(ec);
    PsomPolicy policy(pc, 5);
    Rng seeds(303);
    int checked = 0;
    for (int t = 0; t < 50; ++t) {
        EdgeEnv env(generate_topology(seeds.uniform_int(100000), ec),
                    seeds.uniform_int(100000));
        SfcRequest req = make_request(0, {1, 4, 2});
        ImplicitIntent intent = intent_for(req, pc.k_vnf, pc.q_qos);
        Rng rng(seeds.next_u64());
        PsomRollout r = policy.rollout(intent, req, env, &rng);
        if (!r.feasible) continue;
        ++checked;
        REQUIRE(r.actions.size() == req.vnf_sequence.size());
        for (size_t k = 0; k < r.actions.size(); ++k)
            CHECK(r.masks(static_cast<int>(k), r.actions[k]) == 1.0);
        int bs = env.users().at(0).serving_bs;
        CHECK(env.check_constraints(r.plan, req, bs).feasible());
    }
    CHECK(checked > 20);
}

TEST_CASE("greedy rollout is deterministic and argmax over step probabilities") {
    EnvConfig ec = tiny_config();
    PsomConfig pc = tiny_psom(ec);
    PsomPolicy policy(pc, 9);
    EdgeEnv env(generate_topology(71, ec), 6);
    SfcRequest req = make_request(1, {0, 3});
    ImplicitIntent intent = intent_for(req, pc.k_vnf, pc.q_qos);

    PsomRollout a = policy.rollout(intent, req, env, nullptr);
    PsomRollout b = policy.rollout(intent, req, env, nullptr);
    REQUIRE(a.feasible);
    CHECK(a.actions == b.actions);
    CHECK(a.logp == b.logp);
}

TEST_CASE("log_prob under unchanged parameters reproduces the rollout logp") {
    EnvConfig ec = tiny_config();
    PsomConfig pc = tiny_psom(ec);
    PsomPolicy policy(pc, 13);
    EdgeEnv env(generate_topology(81, ec), 2);
    SfcRequest req = make_request(2, {5, 1, 1});
    ImplicitIntent intent = intent_for(req, pc.k_vnf, pc.q_qos);
    Rng rng(55);
    PsomRollout r = policy.rollout(intent, req, env, &rng);
    REQUIRE(r.feasible);
    CHECK(policy.log_prob(r) == doctest::Approx(r.logp).epsilon(1e-12));
    double sum = std::accumulate(r.step_logps.begin(), r.step_logps.end(), 0.0);
    CHECK(r.logp == doctest::Approx(sum).epsilon(1e-12));
    CHECK(r.logp <= 0.0);
}

TEST_CASE("log_prob gradient agrees with central finite differences") {
    EnvConfig ec = tiny_config();
    PsomConfig pc = tiny_psom(ec);
    pc.d_model = 8;
    pc.hidden = 8;
    PsomPolicy policy(pc, 17);
    EdgeEnv env(generate_topology(91, ec), 8);
    SfcRequest req = make_request(0, {3, 2});
    ImplicitIntent intent = intent_for(req, pc.k_vnf, pc.q_qos);
    Rng rng(77);
    PsomRollout r = policy.rollout(intent, req, env, &rng);
    REQUIRE(r.feasible);

    Vec grad(policy.n_params(), 0.0);
    policy.log_prob_backward(r, 1.0, grad);

    Vec base = policy.get_params();
    Rng pick(123);
    const double h = 1e-5;
    for (int t = 0; t < 60; ++t) {
        size_t i = static_cast<size_t>(pick.uniform_int(static_cast<int>(base.size())));
        Vec p = base;
        p[i] = base[i] + h;
        policy.set_params(p);
        double up = policy.log_prob(r);
        p[i] = base[i] - h;
        policy.set_params(p);
        double dn = policy.log_prob(r);
        double fd = (up - dn) / (2.0 * h);
        double scale = std::max({1.0, std::abs(fd), std::abs(grad[i])});
        CHECK(std::abs(fd - grad[i]) / scale < 1e-4);
    }
    policy.set_params(base);
}

TEST_CASE("ppo update moves toward higher-return rollouts") {
    EnvConfig ec = tiny_config();
    PsomConfig pc = tiny_psom(ec);
    PsomPolicy policy(pc, 23);
    EdgeEnv env(generate_topology(95, ec), 3);
    SfcRequest req = make_request(0, {1, 1});
    ImplicitIntent intent = intent_for(req, pc.k_vnf, pc.q_qos);

    std::vector<PsomRollout> rollouts;
    Vec returns;
    Rng rng(11);
    for (int t = 0; t < 16; ++t) {
        PsomRollout r = policy.rollout(intent, req, env, &rng);
        if (!r.feasible) continue;
        double ret = env.evaluate_plan(r.plan, req).feasible ? 1.0 : -1.0;
        // reward the lexicographically smallest plan to give a clear target
        ret += r.actions[0] == 0 ? 1.0 : -1.0;
        rollouts.push_back(std::move(r));
        returns.push_back(ret);
    }
    REQUIRE(rollouts.size() > 4);

    Vec logp_before;
    for (const auto& r : rollouts) logp_before.push_back(policy.log_prob(r));
    PpoHyper hyper;
    hyper.lr = 1e-3;
    PsomPolicy::PpoStats stats = policy.ppo_update(rollouts, returns, hyper);
    CHECK(std::isfinite(stats.grad_norm));

    // weighted log-likelihood shift: positive-advantage rollouts gain mass
    double mean_ret = std::accumulate(returns.begin(), returns.end(), 0.0) /
                      static_cast<double>(returns.size());
    double shift = 0.0;
    for (size_t i = 0; i < rollouts.size(); ++i)
        shift += (returns[i] - mean_ret) * (policy.log_prob(rollouts[i]) - logp_before[i]);
    CHECK(shift > 0.0);
}

TEST_CASE("parameter vector round trips through get and set") {
    PsomConfig pc = tiny_psom(tiny_config());
    PsomPolicy a(pc, 31);
    PsomPolicy b(pc, 32);
    Vec p = a.get_params();
    CHECK(p.size() == a.n_params());
    b.set_params(p);
    Vec q = b.get_params();
    REQUIRE(p.size() == q.size());
    for (size_t i = 0; i < p.size(); ++i) CHECK(p[i] == q[i]);
}

TEST_CASE("checkpoint save and load restore behavior exactly") {
    EnvConfig ec = tiny_config();
    PsomConfig pc = tiny_psom(ec);
    PsomPolicy a(pc, 37);
    std::string path = "psom_roundtrip.bin";
    a.save(path);
    PsomPolicy b(pc, 38);
    b.load(path);
    std::remove(path.c_str());

    EdgeEnv env(generate_topology(71, ec), 6);
    SfcRequest req = make_request(1, {0, 3});
    ImplicitIntent intent = intent_for(req, pc.k_vnf, pc.q_qos);
    PsomRollout ra = a.rollout(intent, req, env, nullptr);
    PsomRollout rb = b.rollout(intent, req, env, nullptr);
    CHECK(ra.actions == rb.actions);
    CHECK(ra.logp == rb.logp);

    PsomConfig other = pc;
    other.d_model = 32;
    PsomPolicy c(other, 39);
    std::string path2 = "psom_mismatch.bin";
    a.save(path2);
    CHECK_THROWS(c.load(path2));
    std::remove(path2.c_str());
}

TEST_CASE("training with a truth provider improves the toy reward") {
    EnvConfig ec = tiny_config();
    EdgeEnv env(generate_topology(42, ec), 7);
    PsomConfig pc = tiny_psom(ec);
    PsomPolicy policy(pc, 43);
    RandomTaskSource source;
    IntentProvider provider = truth_intent_provider(pc.k_vnf, pc.q_qos);
    PsomTrainHyper hyper;
    hyper.episodes = 200;
    auto trace = train_psom(env, policy, source, provider, hyper, 45);
    REQUIRE(trace.size() == 200);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 50; ++i) {
        first += trace[static_cast<size_t>(i)].reward;
        last += trace[trace.size() - 50 + static_cast<size_t>(i)].reward;
    }
    CHECK(last / 50.0 >= first / 50.0 - 0.05);
}
