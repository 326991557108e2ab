#pragma once

#include <functional>
#include <string>

#include "sfcorch/gipm.hpp"

namespace sfcorch {

struct PsomConfig {
    int k_vnf = 10;
    int q_qos = 3;
    int d_model = 64;
    int hidden = 64;
    int num_heads = 4;
    int attn_layers = 2;
    double grad_clip = 100.0;

    // feature normalization
    int num_nodes = 20;
    double cpu_ghz_max = 50.0;
    double mem_gb_max = 300.0;
    double bw_mbps_max = 500.0;
    double area_m = 5000.0;
    double res_norm_cpu = 500.0;   // intent resource-entry normalization
    double res_norm_mem = 8.0;

    int d_im() const { return k_vnf + q_qos + 2; }

    static constexpr int kNodeFeat = 8;
    static constexpr int kStepFeat = 6;
};

/// One sampled (or greedy) placement episode with everything needed to
/// recompute its log-probability under new parameters.
struct PsomRollout {
    Vec z_im;
    Mat node_feats;               // m x kNodeFeat
    std::vector<Vec> step_feats;  // per placement step
    Mat masks;                    // steps x m, 1 = feasible
    std::vector<int> actions;
    Vec step_logps;
    double logp = 0.0;            // under collection-time parameters
    double value = 0.0;           // value estimate at collection time
    bool feasible = true;         // false when some step had no feasible node
    DeploymentPlan plan;
};

struct PpoHyper {
    double eps_clip = 0.2;
    int inner_epochs = 4;
    int batch_steps = 64;   // placement steps collected per update
    double lr = 3e-4;
    double value_coef = 0.5;
    double discount = 1.0;
};

/// Pointer-style placement policy: the intent and per-node state are encoded
/// by residual self-attention; a stepwise decoder scores nodes and a
/// constraint mask removes the ones whose residual resources cannot host the
/// task. Trained with clipped-ratio policy optimization.
class PsomPolicy {
public:
    explicit PsomPolicy(const PsomConfig& cfg, uint64_t seed);

    const PsomConfig& config() const { return cfg_; }

    /// Per-node features from the live environment, relative to a user.
    static Mat node_features(const EdgeEnv& env, int user_id, const PsomConfig& cfg);

    /// Per-step task features for position k of the chain.
    static Vec step_features(const VnfSpec& spec, const SfcRequest& request, int k, int len,
                             const PsomConfig& cfg);

    /// Feasibility row for one step: residuals minus within-plan tentative
    /// usage must cover the task's cpu, memory and bandwidth demands, and the
    /// node must be reachable (positive link rate) from the serving station.
    static Vec feasibility_mask(const EdgeEnv& env, const SfcRequest& request,
                                const VnfSpec& spec, int user_bs, const Vec& cpu_add,
                                const Vec& mem_add, const Vec& bw_add);

    /// Samples a placement (rng != nullptr) or takes the argmax at every step
    /// (rng == nullptr). A step with no feasible node marks the rollout
    /// infeasible and stops.
    PsomRollout rollout(const ImplicitIntent& intent, const SfcRequest& request,
                        const EdgeEnv& env, Rng* rng) const;

    /// Log-probability of the stored actions under current parameters.
    double log_prob(const PsomRollout& r) const;

    /// Accumulates d(logp)/d(theta) * scale into `grad`; returns logp.
    double log_prob_backward(const PsomRollout& r, double scale, std::span<double> grad) const;

    /// Value estimate from mean node features and the intent.
    double value_estimate(const PsomRollout& r) const;

    struct PpoStats {
        double mean_reward = 0.0;
        double mean_ratio = 1.0;
        double policy_loss = 0.0;
        double value_loss = 0.0;
        double grad_norm = 0.0;
    };

    /// Clipped-surrogate update over whole rollouts; `returns[i]` is the
    /// episode return of rollouts[i] (discount 1, terminal reward).
    PpoStats ppo_update(const std::vector<PsomRollout>& rollouts, const Vec& returns,
                        const PpoHyper& hyper);

    size_t n_params() const;
    Vec get_params() const;
    void set_params(const Vec& p);

    void save(const std::string& path) const;
    void load(const std::string& path);

private:
    struct ForwardTape;
    Mat encode(const Vec& z_im, const Mat& node_feats, ForwardTape* tape) const;
    void run_steps(PsomRollout& r, const Mat& enc, ForwardTape* tape, Rng* rng,
                   const EdgeEnv* env, const SfcRequest* request,
                   const std::vector<VnfSpec>* specs, int user_bs) const;
    void backward(const PsomRollout& r, const ForwardTape& tape, const Vec& dlogp_steps,
                  std::span<double> grad) const;

    PsomConfig cfg_;
    nn::DenseNet intent_net_;            // d_im -> d_model
    nn::DenseNet embed_;                 // kNodeFeat -> d_model
    std::vector<nn::AttentionBlock> attn_;
    Vec start_token_;                    // learned d_0
    nn::DenseNet decoder_;               // (d_model + kStepFeat) -> d_model
    Mat w_ref_, w_q_;                    // d_model x d_model
    Vec v_score_;                        // d_model
    nn::DenseNet value_net_;             // (kNodeFeat + d_im) -> 1
    nn::Adam opt_;

    size_t off_intent_, off_embed_, off_attn_, off_start_, off_dec_, off_ref_, off_q_, off_v_,
        off_value_;
};

/// Provides the intent fed to the placement policy during training; the full
/// pipeline passes a trained diffusion policy, ablations pass fixed variants.
using IntentProvider =
    std::function<ImplicitIntent(const TrainingTask& task, EdgeEnv& env, Rng& rng)>;

/// Truth-following provider: literal VNF needs and true resource demands.
IntentProvider truth_intent_provider(int k_vnf, int q_qos);

struct PsomTrainHyper {
    int episodes = 500;
    int ticks_between_episodes = 10;  // lets earlier deployments drain
    PpoHyper ppo;
};

/// Episode loop: task -> intent -> chain construction -> sampled placement ->
/// execution -> terminal reward; updates whenever a full step batch is
/// collected.
std::vector<TrainPoint> train_psom(EdgeEnv& env, PsomPolicy& policy, TaskSource& source,
                                   const IntentProvider& provider, const PsomTrainHyper& hyper,
                                   uint64_t seed);

}  // namespace sfcorch
