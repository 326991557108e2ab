#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfcorch/experiment.hpp"

namespace fs = std::filesystem;
using namespace sfcorch;

namespace {

EnvConfig load_env_config(const std::string& path) {
    EnvConfig cfg;
    if (path.empty()) return cfg;
    if (!fs::exists(path)) throw std::invalid_argument("config file not found: " + path);
    std::ifstream f(path);
    nlohmann::json j = nlohmann::json::parse(f);
    cfg.num_nodes = j.value("num_nodes", cfg.num_nodes);
    cfg.num_base_stations = j.value("num_base_stations", cfg.num_base_stations);
    cfg.num_vnf_types = j.value("num_vnf_types", cfg.num_vnf_types);
    cfg.num_users = j.value("num_users", cfg.num_users);
    cfg.area_m = j.value("area_m", cfg.area_m);
    cfg.bs_total_bw_mbps = j.value("bs_total_bw_mbps", cfg.bs_total_bw_mbps);
    cfg.node_cores = j.value("node_cores", cfg.node_cores);
    cfg.t_cold_s = j.value("t_cold_s", cfg.t_cold_s);
    cfg.t_max_s = j.value("t_max_s", cfg.t_max_s);
    cfg.t_target_min_s = j.value("t_target_min_s", cfg.t_target_min_s);
    cfg.t_target_max_s = j.value("t_target_max_s", cfg.t_target_max_s);
    cfg.sfc_min_len = j.value("sfc_min_len", cfg.sfc_min_len);
    cfg.sfc_max_len = j.value("sfc_max_len", cfg.sfc_max_len);
    cfg.lambda_fail = j.value("lambda_fail", cfg.lambda_fail);
    cfg.tick_s = j.value("tick_s", cfg.tick_s);
    cfg.speed_min_mps = j.value("speed_min_mps", cfg.speed_min_mps);
    cfg.speed_max_mps = j.value("speed_max_mps", cfg.speed_max_mps);
    if (j.contains("chain_mode")) {
        std::string m = j["chain_mode"];
        if (m == "max")
            cfg.chain_mode = ChainAggregation::Max;
        else if (m == "sum")
            cfg.chain_mode = ChainAggregation::Sum;
        else
            throw std::invalid_argument("config: chain_mode must be max or sum");
    }
    if (j.contains("fbl_variant")) {
        std::string m = j["fbl_variant"];
        if (m == "verbatim")
            cfg.fbl_variant = FblVariant::Verbatim;
        else if (m == "textbook")
            cfg.fbl_variant = FblVariant::Textbook;
        else
            throw std::invalid_argument("config: fbl_variant must be verbatim or textbook");
    }
    return cfg;
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) throw std::invalid_argument(what + " not found: " + path);
}

struct LoadedModels {
    std::unique_ptr<GipmPolicy> gipm;
    std::unique_ptr<PsomPolicy> psom;
    std::unique_ptr<RegressionIntentPredictor> regression;
    HashingEncoder encoder;
    ArmModels arms;
};

LoadedModels load_models(const EnvConfig& env, const std::vector<PolicyArm>& policies,
                         const std::string& gipm_path, const std::string& psom_path,
                         const std::string& regression_path) {
    LoadedModels m;
    bool need_gipm = false, need_psom = false, need_reg = false;
    for (PolicyArm p : policies) {
        if (p == PolicyArm::Gipa) need_gipm = true;
        if (p != PolicyArm::BestEffort) need_psom = true;
        if (p == PolicyArm::RegressionAblation) need_reg = true;
    }
    if (need_gipm) {
        require_file(gipm_path, "gipm checkpoint");
        m.gipm = std::make_unique<GipmPolicy>(gipm_config_for(env), 0);
        m.gipm->load(gipm_path);
        m.arms.gipm = m.gipm.get();
    }
    if (need_psom) {
        require_file(psom_path, "psom checkpoint");
        m.psom = std::make_unique<PsomPolicy>(psom_config_for(env), 0);
        m.psom->load(psom_path);
        m.arms.psom = m.psom.get();
    }
    if (need_reg) {
        require_file(regression_path, "regression checkpoint");
        m.regression = std::make_unique<RegressionIntentPredictor>(
            RegressionIntentPredictor::feature_dim(64), env.num_vnf_types, 3, 0);
        m.regression->load(regression_path);
        m.arms.regression = m.regression.get();
    }
    m.arms.encoder = &m.encoder;
    return m;
}

int run(int argc, char** argv) {
    CLI::App app{"Intent-driven edge service chain orchestration toolkit"};
    app.require_subcommand(1);

    // generate-corpus
    auto* gen = app.add_subcommand("generate-corpus", "Generate a templated intent corpus");
    int gen_count = 4000;
    uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--count", gen_count, "Number of records");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--output", gen_out, "Corpus output path")->required();

    // shared training options
    std::string corpus_path, config_path, out_dir = ".";
    uint64_t seed = 1;
    int episodes = 500;

    auto* tg = app.add_subcommand("train-gipm", "Train the diffusion intent policy");
    tg->add_option("--corpus", corpus_path, "Corpus path")->required();
    tg->add_option("--config", config_path, "Scenario config JSON");
    tg->add_option("--seed", seed, "RNG seed");
    tg->add_option("--episodes", episodes, "Training episodes");
    tg->add_option("--output-dir", out_dir, "Output directory");
    int gipm_batch = 8;
    double gipm_lr = 1e-3;
    tg->add_option("--batch", gipm_batch, "Update batch size");
    tg->add_option("--lr", gipm_lr, "Learning rate");

    auto* tp = app.add_subcommand("train-psom", "Train the placement policy");
    tp->add_option("--corpus", corpus_path, "Corpus path")->required();
    tp->add_option("--config", config_path, "Scenario config JSON");
    tp->add_option("--seed", seed, "RNG seed");
    tp->add_option("--episodes", episodes, "Training episodes");
    tp->add_option("--output-dir", out_dir, "Output directory");
    std::string gipm_ckpt, psom_ckpt, reg_ckpt;
    tp->add_option("--gipm", gipm_ckpt, "Frozen gipm checkpoint (default: truth intents)");
    double psom_lr = 3e-4;
    tp->add_option("--lr", psom_lr, "Learning rate");

    auto* tr = app.add_subcommand("train-regression", "Fit the regression ablation predictor");
    tr->add_option("--corpus", corpus_path, "Corpus path")->required();
    tr->add_option("--config", config_path, "Scenario config JSON");
    tr->add_option("--seed", seed, "RNG seed");
    tr->add_option("--output-dir", out_dir, "Output directory");
    int reg_samples = 2000, reg_epochs = 200;
    tr->add_option("--samples", reg_samples, "Logged samples to fit on");
    tr->add_option("--epochs", reg_epochs, "Fit epochs");

    // evaluation options
    std::vector<std::string> policy_names = {"gipa", "best_effort"};
    std::vector<int> concurrency = {5, 10, 20, 30, 40, 50};
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int rounds = 3;

    auto add_eval_opts = [&](CLI::App* cmd) {
        cmd->add_option("--corpus", corpus_path, "Corpus path")->required();
        cmd->add_option("--config", config_path, "Scenario config JSON");
        cmd->add_option("--policies", policy_names, "Policy arms")->delimiter(',');
        cmd->add_option("--seeds", seeds, "Seeds")->delimiter(',');
        cmd->add_option("--rounds", rounds, "Request waves per cell");
        cmd->add_option("--output-dir", out_dir, "Output directory");
        cmd->add_option("--gipm", gipm_ckpt, "gipm checkpoint");
        cmd->add_option("--psom", psom_ckpt, "psom checkpoint");
        cmd->add_option("--regression", reg_ckpt, "regression checkpoint");
    };

    auto* ev = app.add_subcommand("evaluate", "Single-cell evaluation");
    add_eval_opts(ev);
    int ev_concurrency = 10;
    ev->add_option("--concurrency", ev_concurrency, "Concurrent requests per wave");

    auto* sw = app.add_subcommand("sweep", "Concurrency sweep over policies");
    add_eval_opts(sw);
    sw->add_option("--concurrency", concurrency, "Concurrency levels")->delimiter(',');

    auto* nav = app.add_subcommand("navigation", "Navigation scenario (moving vs stationary)");
    add_eval_opts(nav);
    nav->add_option("--concurrency", concurrency, "Concurrency levels")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        auto corpus = generate_corpus(gen_count, gen_seed);
        write_corpus(gen_out, corpus);
        std::cout << "wrote " << corpus.size() << " records to " << gen_out << "\n";
        return 0;
    }

    EnvConfig env_cfg = load_env_config(config_path);
    require_file(corpus_path, "corpus");
    auto corpus = read_corpus(corpus_path);
    fs::create_directories(out_dir);

    if (tg->parsed()) {
        EdgeEnv env(generate_topology(seed, env_cfg), mix_seed(seed, 11));
        GipmPolicy policy(gipm_config_for(env_cfg), mix_seed(seed, 12));
        HashingEncoder encoder;
        CorpusTaskSource source(corpus);
        GipmTrainHyper hyper;
        hyper.episodes = episodes;
        hyper.batch_size = gipm_batch;
        hyper.lr = gipm_lr;
        auto trace = train_gipm(env, policy, source, encoder, hyper, mix_seed(seed, 13));
        policy.save(out_dir + "/gipm.ckpt");
        write_trace_csv(out_dir + "/gipm_trace.csv", trace);
        std::cout << "trained gipm over " << trace.size() << " episodes\n";
        return 0;
    }

    if (tp->parsed()) {
        EdgeEnv env(generate_topology(seed, env_cfg), mix_seed(seed, 21));
        PsomPolicy policy(psom_config_for(env_cfg), mix_seed(seed, 22));
        HashingEncoder encoder;
        std::unique_ptr<GipmPolicy> gipm;
        IntentProvider provider = truth_intent_provider(env_cfg.num_vnf_types, 3);
        if (!gipm_ckpt.empty()) {
            require_file(gipm_ckpt, "gipm checkpoint");
            gipm = std::make_unique<GipmPolicy>(gipm_config_for(env_cfg), 0);
            gipm->load(gipm_ckpt);
            provider = gipm_intent_provider(*gipm, encoder);
        }
        CorpusTaskSource source(corpus);
        PsomTrainHyper hyper;
        hyper.episodes = episodes;
        hyper.ppo.lr = psom_lr;
        auto trace = train_psom(env, policy, source, provider, hyper, mix_seed(seed, 23));
        policy.save(out_dir + "/psom.ckpt");
        write_trace_csv(out_dir + "/psom_trace.csv", trace);
        std::cout << "trained psom over " << trace.size() << " episodes\n";
        return 0;
    }

    if (tr->parsed()) {
        EdgeEnv env(generate_topology(seed, env_cfg), mix_seed(seed, 31));
        HashingEncoder encoder;
        Rng rng(mix_seed(seed, 32));
        auto data = build_regression_dataset(corpus, env, encoder, reg_samples, rng);
        RegressionIntentPredictor predictor(RegressionIntentPredictor::feature_dim(64),
                                            env_cfg.num_vnf_types, 3, mix_seed(seed, 33));
        predictor.fit(data, reg_epochs);
        predictor.save(out_dir + "/regression.ckpt");
        std::cout << "fitted regression predictor on " << data.size() << " samples\n";
        return 0;
    }

    std::vector<PolicyArm> policies;
    for (const auto& n : policy_names) policies.push_back(parse_arm(n));
    LoadedModels models = load_models(env_cfg, policies, gipm_ckpt, psom_ckpt, reg_ckpt);

    SweepConfig sweep_cfg;
    sweep_cfg.policies = policies;
    sweep_cfg.seeds = seeds;
    sweep_cfg.rounds = rounds;
    sweep_cfg.env = env_cfg;

    if (ev->parsed()) {
        sweep_cfg.scenario = "evaluate";
        sweep_cfg.concurrency = {ev_concurrency};
        SweepResult res = run_sweep(sweep_cfg, corpus, models.arms);
        write_metrics_csv(out_dir + "/metrics.csv", res);
        write_metrics_json(out_dir + "/metrics.json", res, sweep_cfg);
        for (const auto& a : res.aggregates)
            std::cout << a.policy << " c=" << a.concurrency
                      << " mean_delay=" << format_double(a.mean_delay)
                      << " success=" << format_double(a.success_rate) << "\n";
        return 0;
    }

    sweep_cfg.concurrency = concurrency;
    if (sw->parsed()) {
        SweepResult res = run_sweep(sweep_cfg, corpus, models.arms);
        write_metrics_csv(out_dir + "/metrics.csv", res);
        write_metrics_json(out_dir + "/metrics.json", res, sweep_cfg);
        std::cout << "sweep rows: " << res.rows.size() << "\n";
        return 0;
    }

    if (nav->parsed()) {
        NavigationResult res = run_navigation(sweep_cfg, corpus, models.arms);
        SweepConfig moving = sweep_cfg, stationary = sweep_cfg;
        moving.scenario = "navigation_moving";
        stationary.scenario = "navigation_stationary";
        write_metrics_csv(out_dir + "/metrics_moving.csv", res.moving);
        write_metrics_json(out_dir + "/metrics_moving.json", res.moving, moving);
        write_metrics_csv(out_dir + "/metrics_stationary.csv", res.stationary);
        write_metrics_json(out_dir + "/metrics_stationary.json", res.stationary, stationary);
        std::cout << "navigation rows: " << res.moving.rows.size() + res.stationary.rows.size()
                  << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::cerr << "error: " << msg << "\n";
        if (msg.find("infeasible") != std::string::npos ||
            msg.find("unsatisfiable") != std::string::npos ||
            msg.find("failed to cross") != std::string::npos)
            return 3;
        if (dynamic_cast<const std::invalid_argument*>(&e) ||
            dynamic_cast<const std::domain_error*>(&e) ||
            dynamic_cast<const std::length_error*>(&e) ||
            dynamic_cast<const std::out_of_range*>(&e) ||
            dynamic_cast<const std::logic_error*>(&e))
            return 1;
        return 2;
    }
}
