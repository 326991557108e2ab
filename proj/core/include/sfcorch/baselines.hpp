#pragma once

#include <optional>

#include "sfcorch/env.hpp"
#include "sfcorch/nn.hpp"

namespace sfcorch {

struct OracleResult {
    DeploymentPlan best_plan;
    double best_objective = 0.0;
    long plans_enumerated = 0;
    bool complete = false;
    bool feasible_found = false;
};

/// Per VNF in order, picks the node nearest to the user whose residual
/// resources cover C2-C4 simultaneously (within-plan usage counted) and whose
/// link from the serving station carries a positive rate.
/// Returns nullopt when no node qualifies at some step.
std::optional<DeploymentPlan> best_effort(const SfcRequest& request, const EdgeEnv& env);

/// Exhaustive enumeration of all node assignments; skips infeasible plans and
/// returns the minimum-delay feasible one (first in lexicographic order on
/// ties). Throws std::length_error when m^|S| exceeds the cap.
OracleResult brute_force_optimal(const SfcRequest& request, const EdgeEnv& env,
                                 long enumeration_cap = 1000000);

struct RegressionSample {
    Vec input;    // flattened (z_ex, context summary)
    Vec target;   // realized intent, flat
};

/// Deterministic MLP regressor standing in for a recurrent predictor: the
/// non-generative ablation arm. Trained on logged episodes; predicts the
/// conditional mean and is projected onto the valid intent region.
class RegressionIntentPredictor {
public:
    RegressionIntentPredictor(int input_dim, int k_vnf, int q_qos, uint64_t seed);

    void fit(const std::vector<RegressionSample>& data, int epochs = 2000, double lr = 1e-2);
    ImplicitIntent predict(const Vec& input) const;
    bool trained() const { return trained_; }

    /// Fixed-width regression input from an embedding and a context.
    static Vec featurize(const Vec& z_ex, const IntentContext& ctx, const EnvConfig& cfg);
    static int feature_dim(int d_ex);

    void save(const std::string& path) const;
    void load(const std::string& path);

private:
    nn::DenseNet net_;
    int k_vnf_, q_qos_;
    bool trained_ = false;
};

/// Ablation arm with no intent prediction: uniform QoS weights, function
/// preferences set to the request's literal VNF needs, nominal resources.
ImplicitIntent no_prediction_variant(const std::vector<int>& true_vnfs, int k_vnf, int q_qos,
                                     double nominal_cpu, double nominal_mem);

}  // namespace sfcorch
