#pragma once

#include <functional>
#include <string>

#include "sfcorch/baselines.hpp"
#include "sfcorch/env.hpp"
#include "sfcorch/intent.hpp"
#include "sfcorch/nn.hpp"

namespace sfcorch {

struct DiffusionSchedule {
    int steps = 0;                     // K
    Vec betas, alphas, alpha_bars, sigmas;

    /// Linear beta schedule in [beta_min, beta_max]; sigma_k = sqrt(beta_k).
    static DiffusionSchedule linear(int steps, double beta_min = 1e-4, double beta_max = 0.02);
    void validate() const;
};

struct GipmConfig {
    int k_vnf = 10;
    int q_qos = 3;
    int d_ex = 64;
    int d_model = 64;       // must equal d_ex (the embedding queries the context)
    int cond_dim = 64;
    int hidden = 64;
    int num_heads = 4;
    int steps = 10;
    double beta_min = 1e-4, beta_max = 0.02;
    double grad_clip = 100.0;

    // projection shaping so untrained samples straddle realistic ranges:
    // sigmoid(x + func_bias) for preferences, scaled softplus for resources
    double func_bias = 0.5;
    double res_scale_cpu = 500.0;
    double res_scale_mem = 8.0;
    double critic_lr = 2e-2;      // dedicated critic optimizer step size
    int critic_inner = 25;        // critic fit steps per batch update

    // context normalization
    int num_nodes = 20;
    double cpu_ghz_max = 50.0;
    double mem_gb_max = 300.0;
    double bw_mbps_max = 500.0;

    int d_im() const { return k_vnf + q_qos + 2; }
};

/// One sampled denoising chain z_K .. z_0 plus its log-probability under the
/// Gaussian transition densities.
struct DiffusionChain {
    std::vector<Vec> z;   // z[k] for k = 0..K
    Vec noise_seed_state; // unused marker; kept for traceability
    double log_prob = 0.0;
};

struct GipmSample {
    Vec z_ex;
    IntentContext ctx;
    DiffusionChain chain;
    ImplicitIntent intent;
    double reward = 0.0;
};

/// Conditional diffusion policy: attention fusion of explicit intent and
/// context into a condition vector, reverse denoising into the intent space,
/// trained by advantage-weighted score-function gradients.
class GipmPolicy {
public:
    explicit GipmPolicy(const GipmConfig& cfg, uint64_t seed);

    const GipmConfig& config() const { return cfg_; }
    const DiffusionSchedule& schedule() const { return schedule_; }

    /// Context rows embedded, cross-attended by z_ex, fused through an MLP.
    Vec fuse_condition(const Vec& z_ex, const IntentContext& ctx) const;

    DiffusionChain reverse_denoise(const Vec& condition, Rng& rng) const;

    /// Squash projection of the final chain state onto the intent region:
    /// sigmoid for v_func, softmax for v_qos, softplus for v_res.
    ImplicitIntent project_sample(const Vec& z0) const;

    ImplicitIntent sample_intent(const Vec& z_ex, const IntentContext& ctx, uint64_t seed,
                                 DiffusionChain* chain_out = nullptr) const;

    /// Draws n chains and returns the sample the critic scores highest.
    ImplicitIntent sample_best_intent(const Vec& z_ex, const IntentContext& ctx, uint64_t seed,
                                      int n) const;

    /// Draws n chains and aggregates them: mean preferences and QoS weights,
    /// elementwise max resources. Smooths sampling noise for deployment.
    ImplicitIntent sample_intent_ensemble(const Vec& z_ex, const IntentContext& ctx,
                                          uint64_t seed, int n) const;

    /// Critic value Q(z_im, condition).
    double critic_value(const Vec& z_im_flat, const Vec& condition) const;

    struct UpdateStats {
        double mean_reward = 0.0;
        double grad_norm = 0.0;
        double critic_loss_before = 0.0;
        double critic_loss_after = 0.0;
        bool critic_step_rejected = false;
    };

    /// Fits the critic to observed rewards (inner steps, each reverted and the
    /// fit stopped if the batch residual increases), then takes one
    /// advantage-weighted policy gradient step using the refreshed critic.
    /// Gradients with norm above the clip are rescaled. policy_weight scales
    /// the policy term (0 = critic-only update).
    UpdateStats policy_gradient_update(const std::vector<GipmSample>& batch, double lr,
                                       double policy_weight = 1.0);

    /// Gradient of sum_k log p(z_{k-1} | z_k, c) w.r.t. all parameters,
    /// scaled by `scale`, accumulated into `grad` (flat layout). Exposed for
    /// gradient checking.
    double chain_log_prob_backward(const GipmSample& sample, double scale,
                                   std::span<double> grad) const;

    /// Recomputed chain log-probability under current parameters.
    double chain_log_prob(const Vec& z_ex, const IntentContext& ctx,
                          const DiffusionChain& chain) const;

    size_t n_params() const;
    Vec get_params() const;
    void set_params(const Vec& p);

    void save(const std::string& path) const;
    void load(const std::string& path);

    /// Fixed-width context feature rows (trajectory, per-node state, profile).
    Mat context_rows(const IntentContext& ctx) const;

    double baseline() const { return baseline_; }

private:
    struct FusionTape;
    Vec fuse_condition_taped(const Vec& z_ex, const IntentContext& ctx, FusionTape& tape) const;
    void fusion_backward(const FusionTape& tape, const Vec& d_cond,
                         std::span<double> grad) const;

    GipmConfig cfg_;
    DiffusionSchedule schedule_;
    nn::DenseNet ctx_embed_;    // ctx feature row -> d_model
    nn::AttentionBlock fusion_; // cross attention, query = z_ex
    nn::DenseNet fusion_mlp_;   // (d_ex + d_model) -> cond_dim
    nn::DenseNet denoiser_;     // (d_im + 1 + cond_dim) -> d_im
    nn::DenseNet critic_;       // (d_im + cond_dim) -> 1
    nn::Adam opt_;
    nn::Adam opt_critic_;
    double baseline_ = 0.0;
    bool baseline_init_ = false;

    // flat layout offsets: ctx_embed, fusion, fusion_mlp, denoiser, critic
    size_t off_ctx_, off_fusion_, off_mlp_, off_den_, off_critic_;
};

/// Builds the SFC from a predicted intent: types with preference >= 0.5 in
/// descending preference order, padded with the top remaining types to the
/// minimum length and truncated to the maximum.
std::vector<int> sfc_construction(const ImplicitIntent& intent, int min_len = 3, int max_len = 6);

/// One training task: the natural-language intent plus the ground truth the
/// environment uses to judge a prediction.
struct TrainingTask {
    std::string text;
    int domain = 0;
    int user_id = 0;
    std::vector<int> true_vnfs;
    double true_cpu = 0.0;   // giga-cycles per gigabit
    double true_mem = 0.0;   // GB
    Vec true_qos;
    double t_target_s = 1.0;
    double t_max_s = 10.0;
};

class TaskSource {
public:
    virtual ~TaskSource() = default;
    virtual TrainingTask next(EdgeEnv& env, Rng& rng) = 0;
};

/// A predicted intent under-serving the truth fails the request outright:
/// missing required VNF types or under-provisioned resources.
bool prediction_failure(const TrainingTask& task, const ImplicitIntent& intent,
                        const std::vector<int>& constructed_sfc);

SfcRequest request_from_intent(const TrainingTask& task, const ImplicitIntent& intent,
                               const std::vector<int>& sfc, long submitted_at);

struct TrainPoint {
    int episode = 0;
    double reward = 0.0;
    double delay = 0.0;
    bool success = false;
};

struct GipmTrainHyper {
    int episodes = 500;
    int batch_size = 16;             // probe chains per update batch
    int updates_per_task = 2;        // fresh probe batches (and updates) per episode
    int critic_warmup_episodes = 2;  // critic-only updates before policy steps
    double lr = 1e-3;
    long oracle_cap = 1000000;
    int ticks_between_episodes = 10;  // lets earlier deployments drain
};

/// Algorithm: encode -> fuse -> denoise -> construct SFC -> deploy -> execute
/// -> reward -> update. Each episode additionally probes batches of
/// alternative chains for the same task against the current state snapshot
/// (pure plan evaluation, greedy placement) and updates after each batch, so
/// every update is on-policy and sees within-task reward contrast. The
/// executed deployment uses the brute-force oracle when the search space fits
/// the cap, otherwise the greedy baseline.
std::vector<TrainPoint> train_gipm(EdgeEnv& env, GipmPolicy& policy, TaskSource& source,
                                   const IntentEncoder& encoder, const GipmTrainHyper& hyper,
                                   uint64_t seed);

}  // namespace sfcorch
