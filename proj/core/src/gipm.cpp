#include "sfcorch/gipm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sfcorch/checkpoint.hpp"

namespace sfcorch {

namespace {
constexpr int kCtxWidth = 8;
constexpr double kLog2Pi = 1.8378770664093453;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
}  // namespace

DiffusionSchedule DiffusionSchedule::linear(int steps, double beta_min, double beta_max) {
    if (steps < 1) throw std::invalid_argument("schedule: steps must be positive");
    DiffusionSchedule s;
    s.steps = steps;
    double cum = 1.0;
    for (int k = 0; k < steps; ++k) {
        double beta = steps == 1 ? beta_min
                                 : beta_min + (beta_max - beta_min) * k / (steps - 1.0);
        s.betas.push_back(beta);
        s.alphas.push_back(1.0 - beta);
        cum *= 1.0 - beta;
        s.alpha_bars.push_back(cum);
        s.sigmas.push_back(std::sqrt(beta));
    }
    s.validate();
    return s;
}

void DiffusionSchedule::validate() const {
    if (steps < 1 || betas.size() != static_cast<size_t>(steps))
        throw std::invalid_argument("schedule: inconsistent sizes");
    double prev_beta = 0.0, prev_bar = 1.0 + 1e-15;
    double cum = 1.0;
    for (int k = 0; k < steps; ++k) {
        if (betas[k] <= 0.0 || betas[k] >= 1.0 || betas[k] < prev_beta)
            throw std::invalid_argument("schedule: betas must be increasing inside (0,1)");
        if (std::abs(alphas[k] - (1.0 - betas[k])) > 1e-12)
            throw std::invalid_argument("schedule: alpha mismatch");
        cum *= alphas[k];
        if (std::abs(alpha_bars[k] - cum) > 1e-12)
            throw std::invalid_argument("schedule: alpha_bar mismatch");
        if (alpha_bars[k] >= prev_bar) throw std::invalid_argument("schedule: alpha_bar not decreasing");
        if (sigmas[k] < 0.0) throw std::invalid_argument("schedule: negative sigma");
        prev_beta = betas[k];
        prev_bar = alpha_bars[k];
    }
}

struct GipmPolicy::FusionTape {
    Mat rows;
    std::vector<nn::DenseTape> row_tapes;
    Mat emb;
    nn::AttnTape attn;
    nn::DenseTape mlp;
    Vec z_ex;
};

GipmPolicy::GipmPolicy(const GipmConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      schedule_(DiffusionSchedule::linear(cfg.steps, cfg.beta_min, cfg.beta_max)),
      opt_(0),
      opt_critic_(0) {
    if (cfg.d_ex != cfg.d_model)
        throw std::invalid_argument("gipm: d_ex must equal d_model for fusion");
    Rng rng(seed);
    using nn::Activation;
    ctx_embed_ = nn::DenseNet::seeded({kCtxWidth, cfg.d_model}, {Activation::Tanh}, rng);
    fusion_ = nn::AttentionBlock::seeded(cfg.d_model, cfg.num_heads, false, rng);
    fusion_mlp_ = nn::DenseNet::seeded({cfg.d_ex + cfg.d_model, cfg.hidden, cfg.cond_dim},
                                       {Activation::Tanh, Activation::Identity}, rng);
    int d_im = cfg.d_im();
    denoiser_ = nn::DenseNet::seeded({d_im + 1 + cfg.cond_dim, cfg.hidden, cfg.hidden, d_im},
                                     {Activation::Tanh, Activation::Tanh, Activation::Identity},
                                     rng, 0.05);
    critic_ = nn::DenseNet::seeded({d_im + cfg.cond_dim, cfg.hidden, cfg.hidden, 1},
                                   {Activation::Tanh, Activation::Tanh, Activation::Identity},
                                   rng, 0.05);

    off_ctx_ = 0;
    off_fusion_ = off_ctx_ + ctx_embed_.n_params();
    off_mlp_ = off_fusion_ + fusion_.n_params();
    off_den_ = off_mlp_ + fusion_mlp_.n_params();
    off_critic_ = off_den_ + denoiser_.n_params();
    opt_ = nn::Adam(n_params());
    opt_critic_ = nn::Adam(critic_.n_params());
}

size_t GipmPolicy::n_params() const {
    return ctx_embed_.n_params() + fusion_.n_params() + fusion_mlp_.n_params() +
           denoiser_.n_params() + critic_.n_params();
}

Vec GipmPolicy::get_params() const {
    Vec p(n_params());
    ctx_embed_.write_params(std::span(p).subspan(off_ctx_, ctx_embed_.n_params()));
    fusion_.write_params(std::span(p).subspan(off_fusion_, fusion_.n_params()));
    fusion_mlp_.write_params(std::span(p).subspan(off_mlp_, fusion_mlp_.n_params()));
    denoiser_.write_params(std::span(p).subspan(off_den_, denoiser_.n_params()));
    critic_.write_params(std::span(p).subspan(off_critic_, critic_.n_params()));
    return p;
}

void GipmPolicy::set_params(const Vec& p) {
    check_shape(p.size() == n_params(), "gipm set_params length");
    ctx_embed_.read_params(std::span(p).subspan(off_ctx_, ctx_embed_.n_params()));
    fusion_.read_params(std::span(p).subspan(off_fusion_, fusion_.n_params()));
    fusion_mlp_.read_params(std::span(p).subspan(off_mlp_, fusion_mlp_.n_params()));
    denoiser_.read_params(std::span(p).subspan(off_den_, denoiser_.n_params()));
    critic_.read_params(std::span(p).subspan(off_critic_, critic_.n_params()));
}

Mat GipmPolicy::context_rows(const IntentContext& ctx) const {
    int n = static_cast<int>(ctx.trajectory.size() + ctx.network_state.size()) + 1;
    Mat rows(n, kCtxWidth);
    int r = 0;
    for (const auto& [node, dwell] : ctx.trajectory) {
        rows(r, 0) = static_cast<double>(node) / static_cast<double>(cfg_.num_nodes);
        rows(r, 1) = dwell / 10.0;
        rows(r, 5) = 1.0;
        ++r;
    }
    for (const auto& ns : ctx.network_state) {
        rows(r, 0) = ns.cpu_free / cfg_.cpu_ghz_max;
        rows(r, 1) = ns.mem_free / cfg_.mem_gb_max;
        rows(r, 2) = ctx.bandwidth_mbps / cfg_.bw_mbps_max;
        rows(r, 6) = 1.0;
        ++r;
    }
    for (size_t i = 0; i < 4 && i < ctx.profile.size(); ++i)
        rows(r, static_cast<int>(i)) = ctx.profile[i];
    rows(r, 7) = 1.0;
    return rows;
}

Vec GipmPolicy::fuse_condition_taped(const Vec& z_ex, const IntentContext& ctx,
                                     FusionTape& tape) const {
    check_shape(static_cast<int>(z_ex.size()) == cfg_.d_ex, "fuse_condition z_ex length");
    tape.z_ex = z_ex;
    tape.rows = context_rows(ctx);
    int n = tape.rows.rows;
    tape.emb = Mat(n, cfg_.d_model);
    tape.row_tapes.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vec row(tape.rows.a.begin() + static_cast<long>(i) * kCtxWidth,
                tape.rows.a.begin() + static_cast<long>(i + 1) * kCtxWidth);
        Vec e = ctx_embed_.forward(row, &tape.row_tapes[static_cast<size_t>(i)]);
        for (int c = 0; c < cfg_.d_model; ++c) tape.emb(i, c) = e[static_cast<size_t>(c)];
    }
    Mat q(1, cfg_.d_model);
    for (int c = 0; c < cfg_.d_model; ++c) q(0, c) = z_ex[static_cast<size_t>(c)];
    Mat h = fusion_.forward(q, tape.emb, tape.emb, nullptr, &tape.attn);
    Vec h_ctx(h.a.begin(), h.a.end());
    return fusion_mlp_.forward(concat(z_ex, h_ctx), &tape.mlp);
}

Vec GipmPolicy::fuse_condition(const Vec& z_ex, const IntentContext& ctx) const {
    FusionTape tape;
    return fuse_condition_taped(z_ex, ctx, tape);
}

void GipmPolicy::fusion_backward(const FusionTape& tape, const Vec& d_cond,
                                 std::span<double> grad) const {
    Vec d_in = fusion_mlp_.backward(tape.mlp, d_cond,
                                    grad.subspan(off_mlp_, fusion_mlp_.n_params()));
    // first d_ex entries belong to z_ex (an input, no parameters), the rest to h_ctx
    Mat d_h(1, cfg_.d_model);
    for (int c = 0; c < cfg_.d_model; ++c)
        d_h(0, c) = d_in[static_cast<size_t>(cfg_.d_ex + c)];
    Mat d_q(1, cfg_.d_model);
    Mat d_k(tape.emb.rows, cfg_.d_model), d_v(tape.emb.rows, cfg_.d_model);
    fusion_.backward(tape.attn, d_h, grad.subspan(off_fusion_, fusion_.n_params()), &d_q, &d_k,
                     &d_v);
    for (int i = 0; i < tape.emb.rows; ++i) {
        Vec d_e(static_cast<size_t>(cfg_.d_model));
        for (int c = 0; c < cfg_.d_model; ++c) d_e[static_cast<size_t>(c)] = d_k(i, c) + d_v(i, c);
        ctx_embed_.backward(tape.row_tapes[static_cast<size_t>(i)], d_e,
                            grad.subspan(off_ctx_, ctx_embed_.n_params()));
    }
}

DiffusionChain GipmPolicy::reverse_denoise(const Vec& condition, Rng& rng) const {
    int d = cfg_.d_im();
    int steps = schedule_.steps;
    DiffusionChain chain;
    chain.z.assign(static_cast<size_t>(steps + 1), Vec(static_cast<size_t>(d), 0.0));
    for (double& x : chain.z[static_cast<size_t>(steps)]) x = rng.gauss();

    for (int k = steps; k >= 1; --k) {
        const Vec& zk = chain.z[static_cast<size_t>(k)];
        Vec x = zk;
        x.push_back(static_cast<double>(k) / static_cast<double>(steps));
        x.insert(x.end(), condition.begin(), condition.end());
        Vec eps = denoiser_.forward(x);

        double alpha = schedule_.alphas[static_cast<size_t>(k - 1)];
        double abar = schedule_.alpha_bars[static_cast<size_t>(k - 1)];
        double sigma = schedule_.sigmas[static_cast<size_t>(k - 1)];
        double coef = (1.0 - alpha) / std::sqrt(1.0 - abar);
        double inv_sqrt_a = 1.0 / std::sqrt(alpha);

        Vec& prev = chain.z[static_cast<size_t>(k - 1)];
        for (int i = 0; i < d; ++i) {
            double mu = inv_sqrt_a * (zk[static_cast<size_t>(i)] -
                                      coef * eps[static_cast<size_t>(i)]);
            if (sigma > 0.0) {
                double xi = rng.gauss();
                prev[static_cast<size_t>(i)] = mu + sigma * xi;
                chain.log_prob += -0.5 * xi * xi - std::log(sigma) - 0.5 * kLog2Pi;
            } else {
                prev[static_cast<size_t>(i)] = mu;
            }
        }
        if (!all_finite(prev))
            throw std::runtime_error("reverse_denoise: numerical divergence");
    }
    return chain;
}

ImplicitIntent GipmPolicy::project_sample(const Vec& z0) const {
    check_shape(static_cast<int>(z0.size()) == cfg_.d_im(), "project_sample length");
    Vec v_func(static_cast<size_t>(cfg_.k_vnf));
    for (int i = 0; i < cfg_.k_vnf; ++i)
        v_func[static_cast<size_t>(i)] = sigmoid(z0[static_cast<size_t>(i)] + cfg_.func_bias);
    Vec scores(z0.begin() + cfg_.k_vnf, z0.begin() + cfg_.k_vnf + cfg_.q_qos);
    Vec v_qos = nn::masked_softmax(scores);
    Vec v_res = {cfg_.res_scale_cpu * softplus(z0[static_cast<size_t>(cfg_.k_vnf + cfg_.q_qos)]),
                 cfg_.res_scale_mem *
                     softplus(z0[static_cast<size_t>(cfg_.k_vnf + cfg_.q_qos + 1)])};
    return assemble_implicit(v_func, v_qos, v_res);
}

ImplicitIntent GipmPolicy::sample_intent(const Vec& z_ex, const IntentContext& ctx,
                                         uint64_t seed, DiffusionChain* chain_out) const {
    Vec c = fuse_condition(z_ex, ctx);
    Rng rng(seed);
    DiffusionChain chain = reverse_denoise(c, rng);
    ImplicitIntent intent = project_sample(chain.z[0]);
    if (chain_out) *chain_out = std::move(chain);
    return intent;
}

ImplicitIntent GipmPolicy::sample_best_intent(const Vec& z_ex, const IntentContext& ctx,
                                              uint64_t seed, int n) const {
    if (n < 1) throw std::invalid_argument("sample_best_intent: n must be positive");
    Vec c = fuse_condition(z_ex, ctx);
    Rng rng(seed);
    ImplicitIntent best;
    double best_q = 0.0;
    for (int i = 0; i < n; ++i) {
        DiffusionChain chain = reverse_denoise(c, rng);
        ImplicitIntent cand = project_sample(chain.z[0]);
        double q = critic_value(cand.flat(), c);
        if (i == 0 || q > best_q) {
            best_q = q;
            best = std::move(cand);
        }
    }
    return best;
}

ImplicitIntent GipmPolicy::sample_intent_ensemble(const Vec& z_ex, const IntentContext& ctx,
                                                  uint64_t seed, int n) const {
    if (n < 1) throw std::invalid_argument("sample_intent_ensemble: n must be positive");
    Vec c = fuse_condition(z_ex, ctx);
    Rng rng(seed);
    Vec func(static_cast<size_t>(cfg_.k_vnf), 0.0);
    Vec qos(static_cast<size_t>(cfg_.q_qos), 0.0);
    Vec res = {0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        DiffusionChain chain = reverse_denoise(c, rng);
        ImplicitIntent s = project_sample(chain.z[0]);
        for (size_t j = 0; j < func.size(); ++j) func[j] += s.v_func[j];
        for (size_t j = 0; j < qos.size(); ++j) qos[j] += s.v_qos[j];
        res[0] = std::max(res[0], s.v_res[0]);
        res[1] = std::max(res[1], s.v_res[1]);
    }
    for (auto& v : func) v /= static_cast<double>(n);
    for (auto& v : qos) v /= static_cast<double>(n);
    return assemble_implicit(func, qos, res);
}

double GipmPolicy::critic_value(const Vec& z_im_flat, const Vec& condition) const {
    check_shape(static_cast<int>(z_im_flat.size()) == cfg_.d_im(), "critic z_im length");
    Vec z = z_im_flat;
    z[z.size() - 2] /= cfg_.res_scale_cpu;
    z[z.size() - 1] /= cfg_.res_scale_mem;
    return critic_.forward(concat(z, condition))[0];
}

double GipmPolicy::chain_log_prob(const Vec& z_ex, const IntentContext& ctx,
                                  const DiffusionChain& chain) const {
    Vec c = fuse_condition(z_ex, ctx);
    int d = cfg_.d_im();
    double logp = 0.0;
    for (int k = schedule_.steps; k >= 1; --k) {
        double sigma = schedule_.sigmas[static_cast<size_t>(k - 1)];
        if (sigma <= 0.0) continue;
        const Vec& zk = chain.z[static_cast<size_t>(k)];
        Vec x = zk;
        x.push_back(static_cast<double>(k) / static_cast<double>(schedule_.steps));
        x.insert(x.end(), c.begin(), c.end());
        Vec eps = denoiser_.forward(x);
        double alpha = schedule_.alphas[static_cast<size_t>(k - 1)];
        double abar = schedule_.alpha_bars[static_cast<size_t>(k - 1)];
        double coef = (1.0 - alpha) / std::sqrt(1.0 - abar);
        double inv_sqrt_a = 1.0 / std::sqrt(alpha);
        for (int i = 0; i < d; ++i) {
            double mu = inv_sqrt_a * (zk[static_cast<size_t>(i)] -
                                      coef * eps[static_cast<size_t>(i)]);
            double r = (chain.z[static_cast<size_t>(k - 1)][static_cast<size_t>(i)] - mu) / sigma;
            logp += -0.5 * r * r - std::log(sigma) - 0.5 * kLog2Pi;
        }
    }
    return logp;
}

double GipmPolicy::chain_log_prob_backward(const GipmSample& sample, double scale,
                                           std::span<double> grad) const {
    check_shape(grad.size() == n_params(), "gipm backward grad length");
    FusionTape ft;
    Vec c = fuse_condition_taped(sample.z_ex, sample.ctx, ft);
    int d = cfg_.d_im();
    Vec d_c(static_cast<size_t>(cfg_.cond_dim), 0.0);
    double logp = 0.0;

    for (int k = schedule_.steps; k >= 1; --k) {
        double sigma = schedule_.sigmas[static_cast<size_t>(k - 1)];
        if (sigma <= 0.0) continue;
        const Vec& zk = sample.chain.z[static_cast<size_t>(k)];
        Vec x = zk;
        x.push_back(static_cast<double>(k) / static_cast<double>(schedule_.steps));
        x.insert(x.end(), c.begin(), c.end());
        nn::DenseTape dt;
        Vec eps = denoiser_.forward(x, &dt);

        double alpha = schedule_.alphas[static_cast<size_t>(k - 1)];
        double abar = schedule_.alpha_bars[static_cast<size_t>(k - 1)];
        double coef = (1.0 - alpha) / std::sqrt(1.0 - abar);
        double inv_sqrt_a = 1.0 / std::sqrt(alpha);
        double dmu_deps = -coef * inv_sqrt_a;

        Vec d_eps(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) {
            double mu = inv_sqrt_a * (zk[static_cast<size_t>(i)] -
                                      coef * eps[static_cast<size_t>(i)]);
            double r = (sample.chain.z[static_cast<size_t>(k - 1)][static_cast<size_t>(i)] - mu) /
                       sigma;
            logp += -0.5 * r * r - std::log(sigma) - 0.5 * kLog2Pi;
            double dlogp_dmu = r / sigma;
            d_eps[static_cast<size_t>(i)] = scale * dlogp_dmu * dmu_deps;
        }
        Vec dx = denoiser_.backward(dt, d_eps, grad.subspan(off_den_, denoiser_.n_params()));
        for (int i = 0; i < cfg_.cond_dim; ++i)
            d_c[static_cast<size_t>(i)] += dx[static_cast<size_t>(d + 1 + i)];
    }
    fusion_backward(ft, d_c, grad);
    return logp;
}

GipmPolicy::UpdateStats GipmPolicy::policy_gradient_update(const std::vector<GipmSample>& batch,
                                                           double lr, double policy_weight) {
    if (batch.empty()) throw std::invalid_argument("policy_gradient_update: empty batch");
    UpdateStats stats;
    size_t n = n_params();
    Vec grad(n, 0.0);

    double batch_mean = 0.0;
    for (const auto& s : batch) batch_mean += s.reward;
    batch_mean /= static_cast<double>(batch.size());
    stats.mean_reward = batch_mean;

    double inv_b = 1.0 / static_cast<double>(batch.size());

    // the critic treats the condition and sampled intent as fixed inputs, so
    // its fit is a plain regression that can take several steps per batch
    std::vector<Vec> conds, critic_in;
    conds.reserve(batch.size());
    critic_in.reserve(batch.size());
    for (const auto& s : batch) {
        conds.push_back(fuse_condition(s.z_ex, s.ctx));
        Vec z = s.intent.flat();
        z[z.size() - 2] /= cfg_.res_scale_cpu;
        z[z.size() - 1] /= cfg_.res_scale_mem;
        critic_in.push_back(concat(z, conds.back()));
    }

    auto critic_loss = [&] {
        double l = 0.0;
        for (size_t i = 0; i < batch.size(); ++i) {
            double q = critic_.forward(critic_in[i])[0];
            l += (q - batch[i].reward) * (q - batch[i].reward);
        }
        return l * inv_b;
    };

    stats.critic_loss_before = critic_loss();
    size_t nc = critic_.n_params();
    Vec critic_backup(nc);
    critic_.write_params(critic_backup);
    opt_critic_.lr = cfg_.critic_lr;
    for (int it = 0; it < cfg_.critic_inner; ++it) {
        Vec cg(nc, 0.0);
        for (size_t i = 0; i < batch.size(); ++i) {
            nn::DenseTape ct;
            Vec out = critic_.forward(critic_in[i], &ct);
            Vec dq = {2.0 * (out[0] - batch[i].reward) * inv_b};
            critic_.backward(ct, dq, cg);
        }
        double cn = norm2(cg);
        if (!std::isfinite(cn))
            throw std::runtime_error("policy_gradient_update: non-finite gradient");
        if (cn > cfg_.grad_clip)
            for (double& g : cg) g *= cfg_.grad_clip / cn;
        Vec cp(nc);
        critic_.write_params(cp);
        opt_critic_.step(cp, cg);
        critic_.read_params(cp);
    }
    stats.critic_loss_after = critic_loss();
    if (stats.critic_loss_after > stats.critic_loss_before + 1e-12) {
        // the whole fit made the batch residual worse: revert it
        critic_.read_params(critic_backup);
        stats.critic_loss_after = stats.critic_loss_before;
        stats.critic_step_rejected = true;
    }

    // baseline tracks the refreshed critic's mean prediction
    Vec qs(batch.size());
    double q_mean = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        qs[i] = critic_.forward(critic_in[i])[0];
        q_mean += qs[i];
    }
    q_mean *= inv_b;
    if (!baseline_init_) {
        baseline_ = q_mean;
        baseline_init_ = true;
    }

    if (policy_weight != 0.0) {
        // maximize advantage-weighted log-prob: descend on its negative
        for (size_t i = 0; i < batch.size(); ++i)
            chain_log_prob_backward(batch[i], -policy_weight * (qs[i] - baseline_) * inv_b, grad);

        double gn = norm2(grad);
        if (!std::isfinite(gn))
            throw std::runtime_error("policy_gradient_update: non-finite gradient");
        if (gn > cfg_.grad_clip)
            for (double& g : grad) g *= cfg_.grad_clip / gn;
        stats.grad_norm = std::min(gn, cfg_.grad_clip);

        Vec params = get_params();
        opt_.lr = lr;
        opt_.step(params, grad);
        set_params(params);
    }

    baseline_ = 0.9 * baseline_ + 0.1 * q_mean;
    return stats;
}

void GipmPolicy::save(const std::string& path) const {
    std::vector<CheckpointTensor> ts;
    Vec meta = {static_cast<double>(cfg_.k_vnf),  static_cast<double>(cfg_.q_qos),
                static_cast<double>(cfg_.d_ex),   static_cast<double>(cfg_.d_model),
                static_cast<double>(cfg_.cond_dim), static_cast<double>(cfg_.hidden),
                static_cast<double>(cfg_.num_heads), static_cast<double>(cfg_.steps)};
    ts.push_back({"meta", {static_cast<uint32_t>(meta.size())}, meta});
    ts.push_back({"betas", {static_cast<uint32_t>(schedule_.betas.size())}, schedule_.betas});
    Vec p = get_params();
    ts.push_back({"params", {static_cast<uint32_t>(p.size())}, p});
    save_checkpoint(path, ts);
}

void GipmPolicy::load(const std::string& path) {
    auto ts = load_checkpoint(path);
    const Vec* meta = nullptr;
    const Vec* params = nullptr;
    for (const auto& t : ts) {
        if (t.name == "meta") meta = &t.data;
        if (t.name == "params") params = &t.data;
    }
    if (!meta || !params) throw std::runtime_error("gipm load: missing tensors");
    Vec expect = {static_cast<double>(cfg_.k_vnf),  static_cast<double>(cfg_.q_qos),
                  static_cast<double>(cfg_.d_ex),   static_cast<double>(cfg_.d_model),
                  static_cast<double>(cfg_.cond_dim), static_cast<double>(cfg_.hidden),
                  static_cast<double>(cfg_.num_heads), static_cast<double>(cfg_.steps)};
    if (*meta != expect) throw std::runtime_error("gipm load: architecture mismatch");
    set_params(*params);
}

std::vector<int> sfc_construction(const ImplicitIntent& intent, int min_len, int max_len) {
    std::vector<int> order(intent.v_func.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return intent.v_func[static_cast<size_t>(a)] > intent.v_func[static_cast<size_t>(b)];
    });
    std::vector<int> chosen;
    for (int t : order)
        if (intent.v_func[static_cast<size_t>(t)] >= 0.5) chosen.push_back(t);
    int lo = std::min(min_len, static_cast<int>(order.size()));
    while (static_cast<int>(chosen.size()) < lo) {
        for (int t : order) {
            if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) {
                chosen.push_back(t);
                break;
            }
        }
    }
    if (static_cast<int>(chosen.size()) > max_len) chosen.resize(static_cast<size_t>(max_len));
    return chosen;
}

bool prediction_failure(const TrainingTask& task, const ImplicitIntent& intent,
                        const std::vector<int>& constructed_sfc) {
    for (int t : task.true_vnfs)
        if (std::find(constructed_sfc.begin(), constructed_sfc.end(), t) ==
            constructed_sfc.end())
            return true;
    if (intent.v_res[0] < task.true_cpu - 1e-9) return true;
    if (intent.v_res[1] < task.true_mem - 1e-9) return true;
    return false;
}

SfcRequest request_from_intent(const TrainingTask& task, const ImplicitIntent& intent,
                               const std::vector<int>& sfc, long submitted_at) {
    SfcRequest r;
    r.user_id = task.user_id;
    r.vnf_sequence = sfc;
    r.t_target_s = task.t_target_s;
    r.t_max_s = task.t_max_s;
    r.cpu_demand = intent.v_res[0];
    r.mem_demand_gb = intent.v_res[1];
    r.submitted_at = submitted_at;
    return r;
}

std::vector<TrainPoint> train_gipm(EdgeEnv& env, GipmPolicy& policy, TaskSource& source,
                                   const IntentEncoder& encoder, const GipmTrainHyper& hyper,
                                   uint64_t seed) {
    const EnvConfig& cfg = env.config();
    double space = std::pow(static_cast<double>(cfg.num_nodes),
                            static_cast<double>(cfg.sfc_max_len));
    bool use_oracle = space <= static_cast<double>(hyper.oracle_cap);

    Rng rng(seed);
    std::vector<TrainPoint> trace;
    Vec best_params;
    double best_block = 0.0;
    double probe_sum = 0.0;
    long probe_count = 0;
    const int kBlock = 50;
    const double kRollbackMargin = 0.12;

    auto probe_reward = [&](const TrainingTask& task, GipmSample& s) {
        std::vector<int> sfc = sfc_construction(s.intent, cfg.sfc_min_len, cfg.sfc_max_len);
        double delay = task.t_max_s;
        bool success = false;
        if (!prediction_failure(task, s.intent, sfc)) {
            SfcRequest req = request_from_intent(task, s.intent, sfc, env.tick_count());
            if (auto plan = best_effort(req, env)) {
                PlanEvaluation ev = env.evaluate_plan(*plan, req);
                if (ev.feasible) {
                    delay = std::min(ev.total_delay, task.t_max_s);
                    success = ev.total_delay <= task.t_max_s;
                }
            }
        }
        s.reward = reward(delay, task.t_target_s, task.t_max_s, success ? 0.0 : 1.0,
                          cfg.lambda_fail);
    };

    for (int ep = 1; ep <= hyper.episodes; ++ep) {
        TrainingTask task = source.next(env, rng);
        Vec z_ex = encode_explicit(task.text, encoder).vector;
        IntentContext ctx = env.context_for(task.user_id);

        GipmSample sample;
        sample.z_ex = z_ex;
        sample.ctx = ctx;
        sample.intent = policy.sample_intent(z_ex, ctx, rng.next_u64(), &sample.chain);
        std::vector<int> sfc = sfc_construction(sample.intent, cfg.sfc_min_len, cfg.sfc_max_len);
        double delay;
        bool success;
        if (prediction_failure(task, sample.intent, sfc)) {
            delay = task.t_max_s;
            success = false;
        } else {
            SfcRequest req = request_from_intent(task, sample.intent, sfc, env.tick_count());
            std::optional<DeploymentPlan> plan;
            if (use_oracle) {
                OracleResult oracle = brute_force_optimal(req, env, hyper.oracle_cap);
                if (oracle.feasible_found) plan = oracle.best_plan;
            } else {
                plan = best_effort(req, env);
            }
            if (!plan) {
                delay = task.t_max_s;
                success = false;
            } else {
                ExecutionResult res = env.execute_sfc(*plan, req);
                delay = res.total_delay;
                success = res.success;
            }
        }
        sample.reward = reward(delay, task.t_target_s, task.t_max_s, success ? 0.0 : 1.0,
                               cfg.lambda_fail);
        trace.push_back({ep, sample.reward, delay, success});

        // several on-policy probe rounds against this episode's snapshot: a
        // fresh batch of chains for the same task, pure evaluation, update;
        // the step size anneals so late episodes refine instead of drift
        double pw = ep <= hyper.critic_warmup_episodes ? 0.0 : 1.0;
        double lr_ep = hyper.lr * (1.0 - 0.9 * static_cast<double>(ep) /
                                             static_cast<double>(hyper.episodes));
        for (int round = 0; round < hyper.updates_per_task; ++round) {
            std::vector<GipmSample> batch(static_cast<size_t>(std::max(1, hyper.batch_size)));
            for (auto& s : batch) {
                s.z_ex = z_ex;
                s.ctx = ctx;
                s.intent = policy.sample_intent(z_ex, ctx, rng.next_u64(), &s.chain);
                probe_reward(task, s);
                probe_sum += s.reward;
                ++probe_count;
            }
            policy.policy_gradient_update(batch, lr_ep, pw);
        }
        for (int t = 0; t < hyper.ticks_between_episodes; ++t) env.tick();

        // probe rewards give a low-variance estimate of policy quality; keep
        // the best block's parameters and roll back when a block regresses so
        // late updates refine the best policy instead of drifting off it
        if (ep % kBlock == 0 && probe_count > 0) {
            double block = probe_sum / static_cast<double>(probe_count);
            probe_sum = 0.0;
            probe_count = 0;
            if (best_params.empty() || block > best_block) {
                best_block = block;
                best_params = policy.get_params();
            } else if (block < best_block - kRollbackMargin) {
                policy.set_params(best_params);
            }
        }
    }
    if (!best_params.empty()) policy.set_params(best_params);
    return trace;
}

}  // namespace sfcorch
