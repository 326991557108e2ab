#include "sfcorch/psom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sfcorch/checkpoint.hpp"

namespace sfcorch {

struct PsomPolicy::ForwardTape {
    nn::DenseTape intent_tape;
    std::vector<nn::DenseTape> embed_tapes;
    std::vector<nn::AttnTape> attn_tapes;
    Mat enc;
    struct StepTape {
        nn::DenseTape dec_tape;
        Vec d_state;
        Mat t;       // m x d_model
        Vec probs;
    };
    std::vector<StepTape> steps;
};

PsomPolicy::PsomPolicy(const PsomConfig& cfg, uint64_t seed) : cfg_(cfg), opt_(0) {
    Rng rng(seed);
    using nn::Activation;
    intent_net_ = nn::DenseNet::seeded({cfg.d_im(), cfg.hidden, cfg.d_model},
                                       {Activation::Tanh, Activation::Identity}, rng);
    embed_ = nn::DenseNet::seeded({PsomConfig::kNodeFeat, cfg.d_model}, {Activation::Identity},
                                  rng);
    for (int l = 0; l < cfg.attn_layers; ++l)
        attn_.push_back(nn::AttentionBlock::seeded(cfg.d_model, cfg.num_heads, true, rng));
    start_token_.resize(static_cast<size_t>(cfg.d_model));
    for (double& x : start_token_) x = 0.1 * rng.gauss();
    decoder_ = nn::DenseNet::seeded({cfg.d_model + PsomConfig::kStepFeat, cfg.hidden, cfg.d_model},
                                    {Activation::Tanh, Activation::Identity}, rng);
    w_ref_ = Mat(cfg.d_model, cfg.d_model);
    w_q_ = Mat(cfg.d_model, cfg.d_model);
    double s = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
    for (double& x : w_ref_.a) x = s * rng.gauss();
    for (double& x : w_q_.a) x = s * rng.gauss();
    v_score_.resize(static_cast<size_t>(cfg.d_model));
    for (double& x : v_score_) x = s * rng.gauss();
    value_net_ = nn::DenseNet::seeded({PsomConfig::kNodeFeat + cfg.d_im(), cfg.hidden, 1},
                                      {Activation::Tanh, Activation::Identity}, rng);

    off_intent_ = 0;
    off_embed_ = off_intent_ + intent_net_.n_params();
    off_attn_ = off_embed_ + embed_.n_params();
    size_t attn_total = 0;
    for (const auto& a : attn_) attn_total += a.n_params();
    off_start_ = off_attn_ + attn_total;
    off_dec_ = off_start_ + start_token_.size();
    off_ref_ = off_dec_ + decoder_.n_params();
    off_q_ = off_ref_ + w_ref_.size();
    off_v_ = off_q_ + w_q_.size();
    off_value_ = off_v_ + v_score_.size();
    opt_ = nn::Adam(n_params());
}

size_t PsomPolicy::n_params() const { return off_value_ + value_net_.n_params(); }

Vec PsomPolicy::get_params() const {
    Vec p(n_params());
    auto sp = std::span(p);
    intent_net_.write_params(sp.subspan(off_intent_, intent_net_.n_params()));
    embed_.write_params(sp.subspan(off_embed_, embed_.n_params()));
    size_t off = off_attn_;
    for (const auto& a : attn_) {
        a.write_params(sp.subspan(off, a.n_params()));
        off += a.n_params();
    }
    std::copy(start_token_.begin(), start_token_.end(), p.begin() + static_cast<long>(off_start_));
    decoder_.write_params(sp.subspan(off_dec_, decoder_.n_params()));
    std::copy(w_ref_.a.begin(), w_ref_.a.end(), p.begin() + static_cast<long>(off_ref_));
    std::copy(w_q_.a.begin(), w_q_.a.end(), p.begin() + static_cast<long>(off_q_));
    std::copy(v_score_.begin(), v_score_.end(), p.begin() + static_cast<long>(off_v_));
    value_net_.write_params(sp.subspan(off_value_, value_net_.n_params()));
    return p;
}

void PsomPolicy::set_params(const Vec& p) {
    check_shape(p.size() == n_params(), "psom set_params length");
    auto sp = std::span(p);
    intent_net_.read_params(sp.subspan(off_intent_, intent_net_.n_params()));
    embed_.read_params(sp.subspan(off_embed_, embed_.n_params()));
    size_t off = off_attn_;
    for (auto& a : attn_) {
        a.read_params(sp.subspan(off, a.n_params()));
        off += a.n_params();
    }
    std::copy(p.begin() + static_cast<long>(off_start_),
              p.begin() + static_cast<long>(off_start_ + start_token_.size()),
              start_token_.begin());
    decoder_.read_params(sp.subspan(off_dec_, decoder_.n_params()));
    std::copy(p.begin() + static_cast<long>(off_ref_),
              p.begin() + static_cast<long>(off_ref_ + w_ref_.size()), w_ref_.a.begin());
    std::copy(p.begin() + static_cast<long>(off_q_),
              p.begin() + static_cast<long>(off_q_ + w_q_.size()), w_q_.a.begin());
    std::copy(p.begin() + static_cast<long>(off_v_),
              p.begin() + static_cast<long>(off_v_ + v_score_.size()), v_score_.begin());
    value_net_.read_params(sp.subspan(off_value_, value_net_.n_params()));
}

Mat PsomPolicy::node_features(const EdgeEnv& env, int user_id, const PsomConfig& cfg) {
    const auto& topo = env.topology();
    const MobileUser& u = env.users().at(static_cast<size_t>(user_id));
    int m = static_cast<int>(topo.nodes.size());
    Mat f(m, PsomConfig::kNodeFeat);
    for (int i = 0; i < m; ++i) {
        const EdgeNode& n = topo.nodes[static_cast<size_t>(i)];
        f(i, 0) = env.node_cpu_free(i) / cfg.cpu_ghz_max;
        f(i, 1) = env.node_mem_free(i) / cfg.mem_gb_max;
        f(i, 2) = env.node_bw_free(i, u.serving_bs) / cfg.bw_mbps_max;
        f(i, 3) = n.x / cfg.area_m;
        f(i, 4) = n.y / cfg.area_m;
        f(i, 5) = std::log10(1.0 + env.link_budget(i, u.serving_bs).rate_bps) / 10.0;
        const NodeUsage& us = env.usage()[static_cast<size_t>(i)];
        f(i, 6) = static_cast<double>(us.qstate.queue.size()) / 10.0;
        f(i, 7) = static_cast<double>(us.qstate.concurrent.size()) / 10.0;
    }
    return f;
}

Vec PsomPolicy::step_features(const VnfSpec& spec, const SfcRequest& request, int k, int len,
                              const PsomConfig& cfg) {
    return {spec.cpu_ghz / cfg.cpu_ghz_max,
            spec.data_volume_gbit * 10.0,
            spec.bw_mbps / cfg.bw_mbps_max,
            static_cast<double>(k + 1) / static_cast<double>(len),
            request.cpu_demand / 500.0,
            request.mem_demand_gb / cfg.mem_gb_max};
}

Vec PsomPolicy::feasibility_mask(const EdgeEnv& env, const SfcRequest& request,
                                 const VnfSpec& spec, int user_bs, const Vec& cpu_add,
                                 const Vec& mem_add, const Vec& bw_add) {
    int m = static_cast<int>(env.topology().nodes.size());
    Vec mask(static_cast<size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
        size_t s = static_cast<size_t>(i);
        bool ok = env.node_cpu_free(i) - cpu_add[s] >= spec.cpu_ghz &&
                  env.node_mem_free(i) - mem_add[s] >= request.mem_demand_gb &&
                  env.node_bw_free(i, user_bs) - bw_add[s] >= spec.bw_mbps &&
                  env.link_budget(i, user_bs).rate_bps > 0.0;
        mask[s] = ok ? 1.0 : 0.0;
    }
    return mask;
}

Mat PsomPolicy::encode(const Vec& z_im, const Mat& node_feats, ForwardTape* tape) const {
    check_shape(static_cast<int>(z_im.size()) == cfg_.d_im(), "psom encode z_im length");
    check_shape(node_feats.cols == PsomConfig::kNodeFeat, "psom encode node feature width");
    int m = node_feats.rows;
    Vec z = z_im;
    z[z.size() - 2] /= cfg_.res_norm_cpu;
    z[z.size() - 1] /= cfg_.res_norm_mem;
    Vec h_int = intent_net_.forward(z, tape ? &tape->intent_tape : nullptr);
    if (tape) tape->embed_tapes.resize(static_cast<size_t>(m));
    Mat seq(m + 1, cfg_.d_model);
    for (int c = 0; c < cfg_.d_model; ++c) seq(0, c) = h_int[static_cast<size_t>(c)];
    for (int i = 0; i < m; ++i) {
        Vec row(node_feats.a.begin() + static_cast<long>(i) * node_feats.cols,
                node_feats.a.begin() + static_cast<long>(i + 1) * node_feats.cols);
        Vec e = embed_.forward(row, tape ? &tape->embed_tapes[static_cast<size_t>(i)] : nullptr);
        for (int c = 0; c < cfg_.d_model; ++c) seq(i + 1, c) = e[static_cast<size_t>(c)];
    }
    if (tape) tape->attn_tapes.resize(attn_.size());
    for (size_t l = 0; l < attn_.size(); ++l)
        seq = attn_[l].forward(seq, seq, seq, nullptr, tape ? &tape->attn_tapes[l] : nullptr);
    if (tape) tape->enc = seq;
    return seq;
}

namespace {

Vec norm_zim(const PsomConfig& cfg, const Vec& z_im) {
    Vec z = z_im;
    z[z.size() - 2] /= cfg.res_norm_cpu;
    z[z.size() - 1] /= cfg.res_norm_mem;
    return z;
}

Vec enc_row(const Mat& enc, int r) {
    return Vec(enc.a.begin() + static_cast<long>(r) * enc.cols,
               enc.a.begin() + static_cast<long>(r + 1) * enc.cols);
}

}  // namespace

void PsomPolicy::run_steps(PsomRollout& r, const Mat& enc, ForwardTape* tape, Rng* rng,
                           const EdgeEnv* env, const SfcRequest* request,
                           const std::vector<VnfSpec>* specs, int user_bs) const {
    int m = enc.rows - 1;
    int d = cfg_.d_model;
    bool live = env != nullptr;
    size_t steps = live ? request->vnf_sequence.size() : r.step_feats.size();

    Vec cpu_add, mem_add, bw_add;
    std::vector<Vec> mask_rows;
    if (live) {
        cpu_add.assign(static_cast<size_t>(m), 0.0);
        mem_add.assign(static_cast<size_t>(m), 0.0);
        bw_add.assign(static_cast<size_t>(m), 0.0);
        r.step_feats.clear();
    }

    for (size_t k = 0; k < steps; ++k) {
        const VnfSpec* spec = nullptr;
        Vec mask;
        if (live) {
            spec = &(*specs)[static_cast<size_t>(request->vnf_sequence[k])];
            mask = feasibility_mask(*env, *request, *spec, user_bs, cpu_add, mem_add, bw_add);
            if (std::none_of(mask.begin(), mask.end(), [](double x) { return x != 0.0; })) {
                r.feasible = false;
                break;
            }
            mask_rows.push_back(mask);
            r.step_feats.push_back(step_features(*spec, *request, static_cast<int>(k),
                                                 static_cast<int>(steps), cfg_));
        } else {
            mask.assign(static_cast<size_t>(m), 0.0);
            for (int i = 0; i < m; ++i) mask[static_cast<size_t>(i)] = r.masks(static_cast<int>(k), i);
        }

        ForwardTape::StepTape st;
        if (k == 0) {
            st.d_state = start_token_;
        } else {
            Vec prev = enc_row(enc, r.actions[k - 1] + 1);
            Vec in = concat(prev, r.step_feats[k]);
            st.d_state = decoder_.forward(in, tape ? &st.dec_tape : nullptr);
        }

        Vec qpart = matvec(w_q_, st.d_state);
        st.t = Mat(m, d);
        Vec u(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            Vec h = enc_row(enc, i + 1);
            Vec pre = matvec(w_ref_, h);
            double ui = 0.0;
            for (int c = 0; c < d; ++c) {
                double t = std::tanh(pre[static_cast<size_t>(c)] + qpart[static_cast<size_t>(c)]);
                st.t(i, c) = t;
                ui += v_score_[static_cast<size_t>(c)] * t;
            }
            u[static_cast<size_t>(i)] = ui;
        }
        Vec offsets(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i)
            offsets[static_cast<size_t>(i)] = mask[static_cast<size_t>(i)] != 0.0 ? 0.0
                                                                                  : nn::kMaskedOut;
        st.probs = nn::masked_softmax(u, &offsets);

        int action;
        if (live) {
            if (rng) {
                double x = rng->uniform();
                double cum = 0.0;
                action = m - 1;
                for (int i = 0; i < m; ++i) {
                    cum += st.probs[static_cast<size_t>(i)];
                    if (x < cum) {
                        action = i;
                        break;
                    }
                }
                while (st.probs[static_cast<size_t>(action)] <= 0.0 && action > 0) --action;
            } else {
                action = static_cast<int>(std::max_element(st.probs.begin(), st.probs.end()) -
                                          st.probs.begin());
            }
            r.actions.push_back(action);
            cpu_add[static_cast<size_t>(action)] += spec->cpu_ghz;
            mem_add[static_cast<size_t>(action)] += request->mem_demand_gb;
            bw_add[static_cast<size_t>(action)] += spec->bw_mbps;
        } else {
            action = r.actions[k];
        }
        double lp = std::log(st.probs[static_cast<size_t>(action)]);
        if (live) r.step_logps.push_back(lp);
        r.logp = (k == 0 ? 0.0 : r.logp) + lp;
        if (tape) tape->steps.push_back(std::move(st));
    }
    if (live) {
        r.masks = Mat(static_cast<int>(mask_rows.size()), m);
        for (size_t k = 0; k < mask_rows.size(); ++k)
            for (int i = 0; i < m; ++i)
                r.masks(static_cast<int>(k), i) = mask_rows[k][static_cast<size_t>(i)];
    }
}

PsomRollout PsomPolicy::rollout(const ImplicitIntent& intent, const SfcRequest& request,
                                const EdgeEnv& env, Rng* rng) const {
    PsomRollout r;
    r.z_im = intent.flat();
    r.node_feats = node_features(env, request.user_id, cfg_);
    int user_bs = env.users().at(static_cast<size_t>(request.user_id)).serving_bs;

    Mat enc = encode(r.z_im, r.node_feats, nullptr);
    r.logp = 0.0;
    run_steps(r, enc, nullptr, rng, &env, &request, &env.topology().vnf_library, user_bs);
    if (r.feasible) r.plan.assignments = r.actions;
    r.value = value_estimate(r);
    return r;
}

double PsomPolicy::log_prob(const PsomRollout& r) const {
    PsomRollout tmp = r;
    tmp.logp = 0.0;
    Mat enc = encode(r.z_im, r.node_feats, nullptr);
    run_steps(tmp, enc, nullptr, nullptr, nullptr, nullptr, nullptr, -1);
    return tmp.logp;
}

double PsomPolicy::log_prob_backward(const PsomRollout& r, double scale,
                                     std::span<double> grad) const {
    check_shape(grad.size() == n_params(), "psom backward grad length");
    ForwardTape tape;
    PsomRollout tmp = r;
    tmp.logp = 0.0;
    Mat enc = encode(r.z_im, r.node_feats, &tape);
    run_steps(tmp, enc, &tape, nullptr, nullptr, nullptr, nullptr, -1);
    Vec dlogp(tmp.step_feats.size(), scale);
    backward(tmp, tape, dlogp, grad);
    return tmp.logp;
}

void PsomPolicy::backward(const PsomRollout& r, const ForwardTape& tape, const Vec& dlogp_steps,
                          std::span<double> grad) const {
    int m = tape.enc.rows - 1;
    int d = cfg_.d_model;
    Mat d_enc(m + 1, d);
    auto g_start = grad.subspan(off_start_, start_token_.size());
    auto g_ref = grad.subspan(off_ref_, w_ref_.size());
    auto g_q = grad.subspan(off_q_, w_q_.size());
    auto g_v = grad.subspan(off_v_, v_score_.size());

    for (size_t k = 0; k < tape.steps.size(); ++k) {
        const auto& st = tape.steps[k];
        double c = dlogp_steps[k];
        int a = r.actions[k];
        Vec dd(static_cast<size_t>(d), 0.0);
        for (int i = 0; i < m; ++i) {
            double du = c * ((i == a ? 1.0 : 0.0) - st.probs[static_cast<size_t>(i)]);
            if (du == 0.0) continue;
            Vec h = enc_row(tape.enc, i + 1);
            for (int cc = 0; cc < d; ++cc) {
                double t = st.t(i, cc);
                double dt = du * v_score_[static_cast<size_t>(cc)];
                double dpre = dt * (1.0 - t * t);
                g_v[static_cast<size_t>(cc)] += du * t;
                for (int j = 0; j < d; ++j) {
                    g_ref[static_cast<size_t>(cc) * static_cast<size_t>(d) +
                          static_cast<size_t>(j)] += dpre * h[static_cast<size_t>(j)];
                    g_q[static_cast<size_t>(cc) * static_cast<size_t>(d) +
                        static_cast<size_t>(j)] += dpre * st.d_state[static_cast<size_t>(j)];
                    d_enc(i + 1, j) += dpre * w_ref_(cc, j);
                    dd[static_cast<size_t>(j)] += dpre * w_q_(cc, j);
                }
            }
        }
        if (k == 0) {
            for (int j = 0; j < d; ++j) g_start[static_cast<size_t>(j)] += dd[static_cast<size_t>(j)];
        } else {
            Vec d_in = decoder_.backward(st.dec_tape, dd,
                                         grad.subspan(off_dec_, decoder_.n_params()));
            int prev = r.actions[k - 1] + 1;
            for (int j = 0; j < d; ++j) d_enc(prev, j) += d_in[static_cast<size_t>(j)];
        }
    }

    Mat d_seq = d_enc;
    size_t attn_off_end = off_start_;
    for (size_t l = attn_.size(); l-- > 0;) {
        attn_off_end -= attn_[l].n_params();
        Mat d_in(m + 1, d);
        attn_[l].backward(tape.attn_tapes[l], d_seq,
                          grad.subspan(attn_off_end, attn_[l].n_params()), &d_in, &d_in, &d_in);
        d_seq = d_in;
    }

    Vec d_hint(static_cast<size_t>(d));
    for (int c = 0; c < d; ++c) d_hint[static_cast<size_t>(c)] = d_seq(0, c);
    intent_net_.backward(tape.intent_tape, d_hint,
                         grad.subspan(off_intent_, intent_net_.n_params()));
    for (int i = 0; i < m; ++i) {
        Vec de(static_cast<size_t>(d));
        for (int c = 0; c < d; ++c) de[static_cast<size_t>(c)] = d_seq(i + 1, c);
        embed_.backward(tape.embed_tapes[static_cast<size_t>(i)], de,
                        grad.subspan(off_embed_, embed_.n_params()));
    }
}

double PsomPolicy::value_estimate(const PsomRollout& r) const {
    Vec mean(static_cast<size_t>(PsomConfig::kNodeFeat), 0.0);
    for (int i = 0; i < r.node_feats.rows; ++i)
        for (int c = 0; c < r.node_feats.cols; ++c)
            mean[static_cast<size_t>(c)] += r.node_feats(i, c);
    for (double& x : mean) x /= static_cast<double>(r.node_feats.rows);
    return value_net_.forward(concat(mean, norm_zim(cfg_, r.z_im)))[0];
}

PsomPolicy::PpoStats PsomPolicy::ppo_update(const std::vector<PsomRollout>& rollouts,
                                            const Vec& returns, const PpoHyper& hyper) {
    if (rollouts.empty() || rollouts.size() != returns.size())
        throw std::invalid_argument("ppo_update: batch size mismatch");
    size_t n = rollouts.size();
    Vec adv(n);
    double adv_mean = 0.0;
    for (size_t i = 0; i < n; ++i) {
        adv[i] = returns[i] - rollouts[i].value;
        adv_mean += adv[i];
    }
    adv_mean /= static_cast<double>(n);
    for (double& a : adv) a -= adv_mean;

    PpoStats stats;
    stats.mean_reward = std::accumulate(returns.begin(), returns.end(), 0.0) /
                        static_cast<double>(n);
    double inv_n = 1.0 / static_cast<double>(n);

    for (int epoch = 0; epoch < hyper.inner_epochs; ++epoch) {
        Vec grad(n_params(), 0.0);
        double pol_loss = 0.0, val_loss = 0.0, ratio_sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const PsomRollout& r = rollouts[i];
            double dlp = 0.0;
            double ratio = 1.0;
            if (!r.actions.empty()) {
                ForwardTape tape;
                PsomRollout tmp = r;
                tmp.logp = 0.0;
                Mat enc = encode(r.z_im, r.node_feats, &tape);
                run_steps(tmp, enc, &tape, nullptr, nullptr, nullptr, nullptr, -1);
                ratio = std::exp(tmp.logp - r.logp);
                double surr1 = ratio * adv[i];
                double clipped = std::clamp(ratio, 1.0 - hyper.eps_clip, 1.0 + hyper.eps_clip);
                double surr2 = clipped * adv[i];
                if (surr1 <= surr2) dlp = ratio * adv[i];
                pol_loss -= std::min(surr1, surr2) * inv_n;
                if (dlp != 0.0) {
                    Vec dsteps(tmp.step_feats.size(), -dlp * inv_n);
                    backward(tmp, tape, dsteps, grad);
                }
            }
            ratio_sum += ratio;

            Vec mean(static_cast<size_t>(PsomConfig::kNodeFeat), 0.0);
            for (int rr = 0; rr < r.node_feats.rows; ++rr)
                for (int cc = 0; cc < r.node_feats.cols; ++cc)
                    mean[static_cast<size_t>(cc)] += r.node_feats(rr, cc);
            for (double& x : mean) x /= static_cast<double>(r.node_feats.rows);
            nn::DenseTape vt;
            Vec in = concat(mean, norm_zim(cfg_, r.z_im));
            double v = value_net_.forward(in, &vt)[0];
            val_loss += (v - returns[i]) * (v - returns[i]) * inv_n;
            Vec dv = {hyper.value_coef * 2.0 * (v - returns[i]) * inv_n};
            value_net_.backward(vt, dv, std::span(grad).subspan(off_value_, value_net_.n_params()));
        }

        double gn = norm2(grad);
        if (!std::isfinite(gn)) throw std::runtime_error("ppo_update: non-finite gradient");
        if (gn > cfg_.grad_clip)
            for (double& g : grad) g *= cfg_.grad_clip / gn;

        Vec params = get_params();
        opt_.lr = hyper.lr;
        opt_.step(params, grad);
        set_params(params);

        stats.policy_loss = pol_loss;
        stats.value_loss = val_loss;
        stats.mean_ratio = ratio_sum * inv_n;
        stats.grad_norm = std::min(gn, cfg_.grad_clip);
    }
    return stats;
}

void PsomPolicy::save(const std::string& path) const {
    std::vector<CheckpointTensor> ts;
    Vec meta = {static_cast<double>(cfg_.k_vnf),     static_cast<double>(cfg_.q_qos),
                static_cast<double>(cfg_.d_model),   static_cast<double>(cfg_.hidden),
                static_cast<double>(cfg_.num_heads), static_cast<double>(cfg_.attn_layers),
                static_cast<double>(cfg_.num_nodes)};
    ts.push_back({"meta", {static_cast<uint32_t>(meta.size())}, meta});
    Vec p = get_params();
    ts.push_back({"params", {static_cast<uint32_t>(p.size())}, p});
    save_checkpoint(path, ts);
}

void PsomPolicy::load(const std::string& path) {
    auto ts = load_checkpoint(path);
    const Vec* meta = nullptr;
    const Vec* params = nullptr;
    for (const auto& t : ts) {
        if (t.name == "meta") meta = &t.data;
        if (t.name == "params") params = &t.data;
    }
    if (!meta || !params) throw std::runtime_error("psom load: missing tensors");
    Vec expect = {static_cast<double>(cfg_.k_vnf),     static_cast<double>(cfg_.q_qos),
                  static_cast<double>(cfg_.d_model),   static_cast<double>(cfg_.hidden),
                  static_cast<double>(cfg_.num_heads), static_cast<double>(cfg_.attn_layers),
                  static_cast<double>(cfg_.num_nodes)};
    if (*meta != expect) throw std::runtime_error("psom load: architecture mismatch");
    set_params(*params);
}

IntentProvider truth_intent_provider(int k_vnf, int q_qos) {
    return [k_vnf, q_qos](const TrainingTask& task, EdgeEnv&, Rng&) {
        return no_prediction_variant(task.true_vnfs, k_vnf, q_qos, task.true_cpu, task.true_mem);
    };
}

std::vector<TrainPoint> train_psom(EdgeEnv& env, PsomPolicy& policy, TaskSource& source,
                                   const IntentProvider& provider, const PsomTrainHyper& hyper,
                                   uint64_t seed) {
    Rng rng(seed);
    const EnvConfig& cfg = env.config();
    std::vector<TrainPoint> trace;
    std::vector<PsomRollout> batch;
    Vec returns;
    int steps_collected = 0;

    for (int ep = 1; ep <= hyper.episodes; ++ep) {
        TrainingTask task = source.next(env, rng);
        ImplicitIntent intent = provider(task, env, rng);
        std::vector<int> sfc = sfc_construction(intent, cfg.sfc_min_len, cfg.sfc_max_len);
        SfcRequest req = request_from_intent(task, intent, sfc, env.tick_count());

        PsomRollout r = policy.rollout(intent, req, env, &rng);
        double delay;
        bool success;
        if (prediction_failure(task, intent, sfc) || !r.feasible) {
            delay = task.t_max_s;
            success = false;
        } else {
            ExecutionResult res = env.execute_sfc(r.plan, req);
            delay = res.total_delay;
            success = res.success;
        }
        double rew = reward(delay, task.t_target_s, task.t_max_s, success ? 0.0 : 1.0,
                            cfg.lambda_fail);
        trace.push_back({ep, rew, delay, success});

        steps_collected += std::max<int>(1, static_cast<int>(r.actions.size()));
        batch.push_back(std::move(r));
        returns.push_back(rew);
        if (steps_collected >= hyper.ppo.batch_steps) {
            policy.ppo_update(batch, returns, hyper.ppo);
            batch.clear();
            returns.clear();
            steps_collected = 0;
        }
        for (int t = 0; t < hyper.ticks_between_episodes; ++t) env.tick();
    }
    return trace;
}

}  // namespace sfcorch
