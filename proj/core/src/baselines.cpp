#include "sfcorch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "sfcorch/checkpoint.hpp"

namespace sfcorch {

std::optional<DeploymentPlan> best_effort(const SfcRequest& request, const EdgeEnv& env) {
    const auto& topo = env.topology();
    const MobileUser& u = env.users().at(static_cast<size_t>(request.user_id));

    std::vector<int> order(topo.nodes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        double da = std::hypot(topo.nodes[a].x - u.x, topo.nodes[a].y - u.y);
        double db = std::hypot(topo.nodes[b].x - u.x, topo.nodes[b].y - u.y);
        return da < db;
    });

    std::map<int, double> cpu_add, mem_add, bw_add;
    DeploymentPlan plan;
    for (int vnf : request.vnf_sequence) {
        const VnfSpec& spec = topo.vnf_library[vnf];
        int chosen = -1;
        for (int node : order) {
            bool ok =
                env.node_cpu_free(node) - cpu_add[node] >= spec.cpu_ghz &&
                env.node_mem_free(node) - mem_add[node] >= request.mem_demand_gb &&
                env.node_bw_free(node, u.serving_bs) - bw_add[node] >= spec.bw_mbps &&
                env.link_budget(node, u.serving_bs).rate_bps > 0.0;
            if (ok) {
                chosen = node;
                break;
            }
        }
        if (chosen < 0) return std::nullopt;
        cpu_add[chosen] += spec.cpu_ghz;
        mem_add[chosen] += request.mem_demand_gb;
        bw_add[chosen] += spec.bw_mbps;
        plan.assignments.push_back(chosen);
    }
    return plan;
}

OracleResult brute_force_optimal(const SfcRequest& request, const EdgeEnv& env,
                                 long enumeration_cap) {
    int m = env.config().num_nodes;
    size_t len = request.vnf_sequence.size();
    double space = std::pow(static_cast<double>(m), static_cast<double>(len));
    if (space > static_cast<double>(enumeration_cap))
        throw std::length_error("brute_force_optimal: search space exceeds enumeration cap");

    OracleResult res;
    DeploymentPlan plan;
    plan.assignments.assign(len, 0);
    while (true) {
        ++res.plans_enumerated;
        PlanEvaluation ev = env.evaluate_plan(plan, request);
        if (ev.feasible && (!res.feasible_found || ev.total_delay < res.best_objective)) {
            res.feasible_found = true;
            res.best_objective = ev.total_delay;
            res.best_plan = plan;
        }
        // next assignment in lexicographic order
        size_t k = len;
        while (k > 0) {
            --k;
            if (++plan.assignments[k] < m) break;
            plan.assignments[k] = 0;
            if (k == 0) {
                res.complete = true;
                return res;
            }
        }
        if (len == 0) {
            res.complete = true;
            return res;
        }
    }
}

RegressionIntentPredictor::RegressionIntentPredictor(int input_dim, int k_vnf, int q_qos,
                                                     uint64_t seed)
    : k_vnf_(k_vnf), q_qos_(q_qos) {
    Rng rng(seed);
    net_ = nn::DenseNet::seeded(
        {input_dim, 64, 64, k_vnf + q_qos + 2},
        {nn::Activation::Tanh, nn::Activation::Tanh, nn::Activation::Identity}, rng);
}

void RegressionIntentPredictor::fit(const std::vector<RegressionSample>& data, int epochs,
                                    double lr) {
    if (data.empty()) throw std::invalid_argument("regression fit: empty dataset");
    Vec params(net_.n_params());
    net_.write_params(params);
    nn::Adam opt(params.size(), lr);
    for (int e = 0; e < epochs; ++e) {
        Vec grad(params.size(), 0.0);
        for (const auto& s : data) {
            nn::DenseTape tape;
            Vec y = net_.forward(s.input, &tape);
            Vec dy(y.size());
            for (size_t i = 0; i < y.size(); ++i)
                dy[i] = 2.0 * (y[i] - s.target[i]) / static_cast<double>(data.size());
            net_.backward(tape, dy, grad);
        }
        opt.step(params, grad);
        net_.read_params(params);
    }
    trained_ = true;
}

ImplicitIntent RegressionIntentPredictor::predict(const Vec& input) const {
    if (!trained_) throw std::logic_error("regression predictor: not trained");
    return project_intent(net_.forward(input), k_vnf_, q_qos_);
}

int RegressionIntentPredictor::feature_dim(int d_ex) { return d_ex + 10; }

void RegressionIntentPredictor::save(const std::string& path) const {
    std::vector<CheckpointTensor> ts;
    Vec meta = {static_cast<double>(net_.in_dim()), static_cast<double>(k_vnf_),
                static_cast<double>(q_qos_), trained_ ? 1.0 : 0.0};
    ts.push_back({"meta", {static_cast<uint32_t>(meta.size())}, meta});
    Vec p(net_.n_params());
    net_.write_params(p);
    ts.push_back({"params", {static_cast<uint32_t>(p.size())}, p});
    save_checkpoint(path, ts);
}

void RegressionIntentPredictor::load(const std::string& path) {
    auto ts = load_checkpoint(path);
    const Vec* meta = nullptr;
    const Vec* params = nullptr;
    for (const auto& t : ts) {
        if (t.name == "meta") meta = &t.data;
        if (t.name == "params") params = &t.data;
    }
    if (!meta || !params) throw std::runtime_error("regression load: missing tensors");
    Vec expect = {static_cast<double>(net_.in_dim()), static_cast<double>(k_vnf_),
                  static_cast<double>(q_qos_), 1.0};
    if (*meta != expect) throw std::runtime_error("regression load: architecture mismatch");
    net_.read_params(*params);
    trained_ = true;
}

Vec RegressionIntentPredictor::featurize(const Vec& z_ex, const IntentContext& ctx,
                                         const EnvConfig& cfg) {
    Vec f = z_ex;
    // trajectory summary: last node id (normalized), dwell, length
    f.push_back(static_cast<double>(ctx.trajectory.back().first) /
                static_cast<double>(cfg.num_nodes));
    f.push_back(ctx.trajectory.back().second / 10.0);
    f.push_back(static_cast<double>(ctx.trajectory.size()) /
                static_cast<double>(cfg.trajectory_window));
    double cpu = 0.0, mem = 0.0;
    for (const auto& n : ctx.network_state) {
        cpu += n.cpu_free;
        mem += n.mem_free;
    }
    double m = static_cast<double>(ctx.network_state.size());
    f.push_back(cpu / m / cfg.cpu_ghz_max);
    f.push_back(mem / m / cfg.mem_gb_max);
    f.push_back(ctx.bandwidth_mbps / cfg.bw_mbps_max);
    for (size_t i = 0; i < 4; ++i)
        f.push_back(i < ctx.profile.size() ? ctx.profile[i] : 0.0);
    return f;
}

ImplicitIntent no_prediction_variant(const std::vector<int>& true_vnfs, int k_vnf, int q_qos,
                                     double nominal_cpu, double nominal_mem) {
    Vec v_func(static_cast<size_t>(k_vnf), 0.0);
    for (int t : true_vnfs)
        if (t >= 0 && t < k_vnf) v_func[static_cast<size_t>(t)] = 1.0;
    Vec v_qos(static_cast<size_t>(q_qos), 1.0 / static_cast<double>(q_qos));
    return assemble_implicit(v_func, v_qos, {nominal_cpu, nominal_mem});
}

}  // namespace sfcorch
