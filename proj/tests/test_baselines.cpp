#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "doctest.h"
#include "sfcorch/baselines.hpp"
#include "sfcorch/rng.hpp"

using namespace sfcorch;

namespace {

EnvConfig tiny_config() {
    EnvConfig c;
    c.num_nodes = 4;
    c.num_base_stations = 2;
    c.num_users = 2;
    c.num_vnf_types = 5;
    return c;
}

SfcRequest make_request(int user_id, std::vector<int> seq, double cpu = 120.0,
                        double mem = 1.0) {
    SfcRequest r;
    r.user_id = user_id;
    r.vnf_sequence = std::move(seq);
    r.t_target_s = 1.0;
    r.t_max_s = 10.0;
    r.cpu_demand = cpu;
    r.mem_demand_gb = mem;
    return r;
}

// all feasible plans by explicit recursion, minimum delay wins, lexicographic
// order breaks ties
OracleResult reference_oracle(const SfcRequest& req, const EdgeEnv& env) {
    OracleResult out;
    int m = env.config().num_nodes;
    int len = static_cast<int>(req.vnf_sequence.size());
    std::vector<int> idx(static_cast<size_t>(len), 0);
    DeploymentPlan plan;
    plan.assignments.resize(static_cast<size_t>(len));
    while (true) {
        for (int k = 0; k < len; ++k)
            plan.assignments[static_cast<size_t>(k)] = idx[static_cast<size_t>(k)];
        ++out.plans_enumerated;
        PlanEvaluation ev = env.evaluate_plan(plan, req);
        if (ev.feasible &&
            (!out.feasible_found || ev.total_delay < out.best_objective)) {
            out.feasible_found = true;
            out.best_objective = ev.total_delay;
            out.best_plan = plan;
        }
        int k = len - 1;
        while (k >= 0 && idx[static_cast<size_t>(k)] == m - 1) {
            idx[static_cast<size_t>(k)] = 0;
            --k;
        }
        if (k < 0) break;
        ++idx[static_cast<size_t>(k)];
    }
    out.complete = true;
    return out;
}

}  // namespace

TEST_CASE("best_effort plans satisfy every constraint") {
    Rng seeds(901);
    int produced = 0;
    for (int t = 0; t < 20; ++t) {
        EdgeEnv env(generate_topology(seeds.uniform_int(100000), tiny_config()),
                    seeds.uniform_int(100000));
        SfcRequest req = make_request(0, {0, 2, 1});
        auto plan = best_effort(req, env);
        if (!plan) continue;
        ++produced;
        int bs = env.users().at(0).serving_bs;
        CHECK(env.check_constraints(*plan, req, bs).feasible());
        for (int node : plan->assignments)
            CHECK(env.link_budget(node, bs).rate_bps > 0.0);
        PlanEvaluation ev = env.evaluate_plan(*plan, req);
        CHECK(ev.feasible);
    }
    CHECK(produced > 10);
}

TEST_CASE("best_effort refuses impossible demands") {
    EdgeEnv env(generate_topology(17, tiny_config()), 3);
    SfcRequest req = make_request(0, {0}, 120.0, 1e6);
    CHECK_FALSE(best_effort(req, env).has_value());
}

TEST_CASE("best_effort single step picks the nearest eligible node") {
    EdgeEnv env(generate_topology(23, tiny_config()), 5);
    SfcRequest req = make_request(0, {1});
    auto plan = best_effort(req, env);
    REQUIRE(plan.has_value());
    const MobileUser& u = env.users().at(0);
    const VnfSpec& spec = env.topology().vnf_library[1];
    int chosen = plan->assignments[0];
    double chosen_d = std::hypot(env.topology().nodes[chosen].x - u.x,
                                 env.topology().nodes[chosen].y - u.y);
    for (int i = 0; i < env.config().num_nodes; ++i) {
        bool eligible = env.node_cpu_free(i) >= spec.cpu_ghz &&
                        env.node_mem_free(i) >= req.mem_demand_gb &&
                        env.node_bw_free(i, u.serving_bs) >= spec.bw_mbps &&
                        env.link_budget(i, u.serving_bs).rate_bps > 0.0;
        if (!eligible) continue;
        double d = std::hypot(env.topology().nodes[i].x - u.x,
                              env.topology().nodes[i].y - u.y);
        CHECK(chosen_d <= d + 1e-9);
    }
}

TEST_CASE("brute force agrees with an explicit enumeration") {
    Rng seeds(777);
    for (int t = 0; t < 10; ++t) {
        EdgeEnv env(generate_topology(seeds.uniform_int(100000), tiny_config()),
                    seeds.uniform_int(100000));
        SfcRequest req = make_request(1, {0, 3});
        OracleResult got = brute_force_optimal(req, env);
        OracleResult want = reference_oracle(req, env);
        CHECK(got.complete);
        CHECK(got.plans_enumerated == want.plans_enumerated);
        CHECK(got.feasible_found == want.feasible_found);
        if (want.feasible_found) {
            CHECK(got.best_objective == doctest::Approx(want.best_objective).epsilon(1e-12));
            CHECK(got.best_plan.assignments == want.best_plan.assignments);
        }
    }
}

TEST_CASE("brute force dominates best_effort") {
    Rng seeds(555);
    for (int t = 0; t < 10; ++t) {
        EdgeEnv env(generate_topology(seeds.uniform_int(100000), tiny_config()),
                    seeds.uniform_int(100000));
        SfcRequest req = make_request(0, {2, 2, 4});
        auto be = best_effort(req, env);
        OracleResult oracle = brute_force_optimal(req, env);
        if (!be) continue;
        REQUIRE(oracle.feasible_found);
        double be_delay = env.evaluate_plan(*be, req).total_delay;
        CHECK(oracle.best_objective <= be_delay + 1e-12);
    }
}

TEST_CASE("brute force respects the enumeration cap") {
    EdgeEnv env(generate_topology(9, tiny_config()), 2);
    SfcRequest req = make_request(0, {0, 1, 2});
    CHECK_THROWS_AS(brute_force_optimal(req, env, 10), std::length_error);
    CHECK_NOTHROW(brute_force_optimal(req, env, 64));
}

TEST_CASE("brute force reports infeasible instances") {
    EdgeEnv env(generate_topology(9, tiny_config()), 2);
    SfcRequest req = make_request(0, {0}, 120.0, 1e6);
    OracleResult r = brute_force_optimal(req, env);
    CHECK(r.complete);
    CHECK_FALSE(r.feasible_found);
}

TEST_CASE("no_prediction_variant encodes literal needs with nominal resources") {
    ImplicitIntent it = no_prediction_variant({1, 3, 3}, 5, 3, 500.0, 8.0);
    REQUIRE(it.v_func.size() == 5);
    REQUIRE(it.v_qos.size() == 3);
    CHECK(it.v_func[1] == doctest::Approx(1.0));
    CHECK(it.v_func[3] == doctest::Approx(1.0));
    CHECK(it.v_func[0] == doctest::Approx(0.0));
    for (double w : it.v_qos) CHECK(w == doctest::Approx(1.0 / 3.0));
    CHECK(it.v_res[0] == doctest::Approx(500.0));
    CHECK(it.v_res[1] == doctest::Approx(8.0));
}

TEST_CASE("regression predictor learns a linear map and projects outputs") {
    const int in_dim = 6, k = 4, q = 3;
    Rng rng(42);
    Mat w(k + q + 2, in_dim);
    for (size_t i = 0; i < w.a.size(); ++i) w.a[i] = rng.uniform(-0.5, 0.5);

    std::vector<RegressionSample> data;
    for (int n = 0; n < 200; ++n) {
        RegressionSample s;
        s.input.resize(in_dim);
        for (auto& v : s.input) v = rng.uniform(-1.0, 1.0);
        Vec raw = matvec(w, s.input);
        s.target = project_intent(raw, k, q).flat();
        data.push_back(std::move(s));
    }

    RegressionIntentPredictor pred(in_dim, k, q, 7);
    CHECK_FALSE(pred.trained());
    pred.fit(data, 1500, 1e-2);
    CHECK(pred.trained());

    double mse = 0.0;
    long cnt = 0;
    for (const auto& s : data) {
        ImplicitIntent it = pred.predict(s.input);
        Vec flat = it.flat();
        REQUIRE(flat.size() == s.target.size());
        for (size_t i = 0; i < flat.size(); ++i) {
            double d = flat[i] - s.target[i];
            mse += d * d;
            ++cnt;
        }
        // outputs live in the valid region
        double qsum = 0.0;
        for (double v : it.v_func) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        for (double v : it.v_qos) {
            CHECK(v >= 0.0);
            qsum += v;
        }
        CHECK(qsum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(it.v_res[0] >= 0.0);
        CHECK(it.v_res[1] >= 0.0);
    }
    CHECK(mse / static_cast<double>(cnt) < 0.02);
}

TEST_CASE("regression predictor featurize has the declared width") {
    EnvConfig cfg = tiny_config();
    EdgeEnv env(generate_topology(31, cfg), 4);
    IntentContext ctx = env.context_for(0);
    Vec z(16, 0.25);
    Vec f = RegressionIntentPredictor::featurize(z, ctx, cfg);
    CHECK(static_cast<int>(f.size()) == RegressionIntentPredictor::feature_dim(16));
}

TEST_CASE("regression predictor save and load round trip") {
    const int in_dim = 5, k = 3, q = 3;
    Rng rng(99);
    std::vector<RegressionSample> data;
    for (int n = 0; n < 50; ++n) {
        RegressionSample s;
        s.input.resize(in_dim);
        for (auto& v : s.input) v = rng.uniform(-1.0, 1.0);
        s.target = project_intent(Vec(k + q + 2, 0.3), k, q).flat();
        data.push_back(std::move(s));
    }
    RegressionIntentPredictor a(in_dim, k, q, 1);
    a.fit(data, 100, 1e-2);
    std::string path = "regress_roundtrip.bin";
    a.save(path);

    RegressionIntentPredictor b(in_dim, k, q, 2);
    b.load(path);
    std::remove(path.c_str());
    Vec probe(in_dim, 0.5);
    Vec fa = a.predict(probe).flat();
    Vec fb = b.predict(probe).flat();
    REQUIRE(fa.size() == fb.size());
    for (size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
}
