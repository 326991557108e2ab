#include "sfcorch/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace sfcorch {

using json = nlohmann::ordered_json;

const std::vector<DomainTemplate>& domain_templates() {
    static const std::vector<DomainTemplate> templates = {
        {0,
         "video_calling",
         {0.5, 0.2, 0.3},
         {0, 1, 2},
         {{"set up a basic video call with my team",
           "start a basic video call session",
           "open a basic video call room"},
          {"start a standard video conference call",
           "connect a standard video conference for the meeting",
           "hold a standard video conference session"},
          {"start an hd video calling session with the group",
           "launch an hd video calling session",
           "run an hd video calling session for everyone"}},
         {{100.0, 180.0}, {180.0, 300.0}, {300.0, 450.0}},
         {{1.0, 2.0}, {2.0, 4.0}, {4.0, 6.0}}},
        {1,
         "autonomous_driving",
         {0.7, 0.25, 0.05},
         {3, 4, 5},
         {{"run basic autonomous driving assistance for the car",
           "enable basic autonomous driving support while parking",
           "start basic autonomous driving help for the car"},
          {"run standard autonomous driving for the vehicle",
           "enable standard autonomous driving on the highway",
           "standard autonomous driving through the city"},
          {"run precise autonomous driving in dense traffic",
           "enable precise autonomous driving for the vehicle convoy",
           "precise autonomous driving decisions every second"}},
         {{150.0, 250.0}, {250.0, 380.0}, {380.0, 500.0}},
         {{1.5, 3.0}, {3.0, 5.0}, {5.0, 7.0}}},
        {2,
         "data_processing",
         {0.3, 0.3, 0.4},
         {6, 7, 8},
         {{"run a light data processing job",
           "light data processing on a small batch",
           "schedule light data processing offline"},
          {"run continuous data processing on the sensor feed",
           "continuous data processing of the incoming stream",
           "keep continuous data processing running"},
          {"run heavy data processing with deep analytics",
           "heavy data processing across the full stream",
           "heavy data processing with strict analytics deadlines"}},
         {{120.0, 220.0}, {220.0, 350.0}, {350.0, 480.0}},
         {{2.0, 4.0}, {4.0, 6.0}, {6.0, 8.0}}},
        {3,
         "navigation",
         {0.6, 0.3, 0.1},
         {7, 8, 9},
         {{"give simple navigation directions to the park",
           "plan a simple navigation route nearby",
           "simple navigation directions to the store"},
          {"start live navigation on the usual route",
           "guide the route with live navigation downtown",
           "live navigation directions to the office"},
          {"run rapid navigation with instant route updates",
           "rapid navigation rerouting across town",
           "rapid navigation guidance along the full route"}},
         {{50.0, 100.0}, {80.0, 130.0}, {110.0, 160.0}},
         {{0.5, 1.0}, {1.0, 1.5}, {1.5, 2.0}}},
    };
    return templates;
}

DomainLexicon domain_lexicon() {
    DomainLexicon lex;
    lex.domain_names = {"video_calling", "autonomous_driving", "data_processing", "navigation"};
    lex.keywords = {{"video", "call", "calling", "conference"},
                    {"driving", "vehicle", "autonomous", "car"},
                    {"data", "processing", "analytics", "stream"},
                    {"navigation", "route", "navigate", "directions"}};
    return lex;
}

std::vector<CorpusRecord> generate_corpus(int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_corpus: n must be >= 1");
    const auto& templates = domain_templates();
    Rng rng(seed);
    std::vector<CorpusRecord> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const DomainTemplate& t = templates[static_cast<size_t>(
            rng.uniform_int(static_cast<int>(templates.size())))];
        int level = rng.uniform_int(static_cast<int>(t.phrases.size()));
        int variant = rng.uniform_int(static_cast<int>(t.phrases[static_cast<size_t>(level)].size()));
        CorpusRecord r;
        r.text = t.phrases[static_cast<size_t>(level)][static_cast<size_t>(variant)];
        r.domain_label = t.label;
        r.domain_name = t.name;
        r.qos = t.qos;
        r.vnfs = t.vnfs;
        auto [clo, chi] = t.cpu_range[static_cast<size_t>(level)];
        auto [mlo, mhi] = t.mem_range[static_cast<size_t>(level)];
        r.cpu = rng.uniform(clo, chi);
        r.mem_gb = rng.uniform(mlo, mhi);
        out.push_back(std::move(r));
    }
    return out;
}

void write_corpus(const std::string& path, const std::vector<CorpusRecord>& records) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_corpus: cannot open " + path);
    for (const auto& r : records) {
        json j;
        j["text"] = r.text;
        j["domain_label"] = r.domain_label;
        j["domain"] = r.domain_name;
        j["qos"] = json::array();
        for (double q : r.qos) j["qos"].push_back(format_double(q));
        j["vnfs"] = r.vnfs;
        j["cpu"] = format_double(r.cpu);
        j["mem_gb"] = format_double(r.mem_gb);
        f << j.dump() << "\n";
    }
}

std::vector<CorpusRecord> read_corpus(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_corpus: cannot open " + path);
    std::vector<CorpusRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        CorpusRecord r;
        r.text = j.at("text").get<std::string>();
        r.domain_label = j.at("domain_label").get<int>();
        r.domain_name = j.at("domain").get<std::string>();
        for (const auto& q : j.at("qos")) r.qos.push_back(std::stod(q.get<std::string>()));
        r.vnfs = j.at("vnfs").get<std::vector<int>>();
        r.cpu = std::stod(j.at("cpu").get<std::string>());
        r.mem_gb = std::stod(j.at("mem_gb").get<std::string>());
        out.push_back(std::move(r));
    }
    return out;
}

CorpusTaskSource::CorpusTaskSource(std::vector<CorpusRecord> records, int domain_filter) {
    for (auto& r : records)
        if (domain_filter < 0 || r.domain_label == domain_filter)
            records_.push_back(std::move(r));
    if (records_.empty()) throw std::invalid_argument("task source: empty corpus after filtering");
}

TrainingTask CorpusTaskSource::next(EdgeEnv& env, Rng& rng) {
    const CorpusRecord& r =
        records_[static_cast<size_t>(rng.uniform_int(static_cast<int>(records_.size())))];
    const EnvConfig& cfg = env.config();
    TrainingTask t;
    t.text = r.text;
    t.domain = r.domain_label;
    t.user_id = rng.uniform_int(cfg.num_users);
    t.true_vnfs = r.vnfs;
    t.true_cpu = r.cpu;
    t.true_mem = r.mem_gb;
    t.true_qos = r.qos;
    t.t_target_s = rng.uniform(cfg.t_target_min_s, cfg.t_target_max_s);
    t.t_max_s = cfg.t_max_s;
    return t;
}

std::string arm_name(PolicyArm arm) {
    switch (arm) {
        case PolicyArm::Gipa: return "gipa";
        case PolicyArm::BestEffort: return "best_effort";
        case PolicyArm::NoPrediction: return "no_prediction";
        case PolicyArm::RegressionAblation: return "regression_ablation";
    }
    throw std::invalid_argument("arm_name: unknown arm");
}

PolicyArm parse_arm(const std::string& name) {
    if (name == "gipa") return PolicyArm::Gipa;
    if (name == "best_effort") return PolicyArm::BestEffort;
    if (name == "no_prediction") return PolicyArm::NoPrediction;
    if (name == "regression_ablation") return PolicyArm::RegressionAblation;
    throw std::invalid_argument("parse_arm: unknown policy " + name);
}

RequestRecord run_request(EdgeEnv& env, PolicyArm arm, const TrainingTask& task,
                          const ArmModels& models, uint64_t sample_seed) {
    const EnvConfig& cfg = env.config();
    int k = cfg.num_vnf_types;
    int q = static_cast<int>(task.true_qos.empty() ? 3 : task.true_qos.size());

    ImplicitIntent intent;
    switch (arm) {
        case PolicyArm::Gipa: {
            if (!models.gipm || !models.psom || !models.encoder)
                throw std::invalid_argument("run_request: gipa arm needs gipm, psom and encoder");
            Vec z_ex = encode_explicit(task.text, *models.encoder).vector;
            intent = models.gipm->sample_intent_ensemble(z_ex, env.context_for(task.user_id),
                                                         sample_seed, models.gipm_samples);
            break;
        }
        case PolicyArm::BestEffort:
            intent = no_prediction_variant(task.true_vnfs, k, q, models.nominal_cpu,
                                           models.nominal_mem_gb);
            break;
        case PolicyArm::NoPrediction:
            if (!models.psom)
                throw std::invalid_argument("run_request: no_prediction arm needs psom");
            intent = no_prediction_variant(task.true_vnfs, k, q, models.nominal_cpu,
                                           models.nominal_mem_gb);
            break;
        case PolicyArm::RegressionAblation: {
            if (!models.regression || !models.psom || !models.encoder)
                throw std::invalid_argument(
                    "run_request: regression arm needs regression, psom and encoder");
            Vec z_ex = encode_explicit(task.text, *models.encoder).vector;
            Vec feats = RegressionIntentPredictor::featurize(
                z_ex, env.context_for(task.user_id), cfg);
            intent = models.regression->predict(feats);
            break;
        }
    }

    std::vector<int> sfc = sfc_construction(intent, cfg.sfc_min_len, cfg.sfc_max_len);
    double delay = task.t_max_s;
    bool success = false;
    if (!prediction_failure(task, intent, sfc)) {
        SfcRequest req = request_from_intent(task, intent, sfc, env.tick_count());
        if (arm == PolicyArm::BestEffort) {
            auto plan = best_effort(req, env);
            if (plan) {
                ExecutionResult res = env.execute_sfc(*plan, req);
                delay = res.total_delay;
                success = res.success;
            }
        } else {
            PsomRollout r = models.psom->rollout(intent, req, env, nullptr);
            if (r.feasible) {
                ExecutionResult res = env.execute_sfc(r.plan, req);
                delay = res.total_delay;
                success = res.success;
            }
        }
    }

    RequestRecord rec;
    rec.delay = delay;
    rec.success = success;
    rec.reward = reward(delay, task.t_target_s, task.t_max_s, success ? 0.0 : 1.0,
                        cfg.lambda_fail);
    return rec;
}

uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    uint64_t x = a * 0x9e3779b97f4a7c15ull ^ b * 0xbf58476d1ce4e5b9ull ^
                 c * 0x94d049bb133111ebull ^ (d + 0x2545f4914f6cdd1dull);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

namespace {

void advance_env(EdgeEnv& env, const SweepConfig& cfg) {
    if (cfg.require_node_crossing) {
        std::vector<int> before;
        for (const auto& u : env.users()) before.push_back(u.serving_node);
        std::vector<bool> crossed(before.size(), false);
        for (int t = 0; t < 2000; ++t) {
            env.tick();
            bool all = true;
            for (size_t i = 0; i < before.size(); ++i) {
                if (env.users()[i].serving_node != before[i]) crossed[i] = true;
                if (!crossed[i]) all = false;
            }
            if (all && t + 1 >= cfg.ticks_between_rounds) return;
        }
        throw std::runtime_error("sweep: users failed to cross a node boundary");
    }
    for (int t = 0; t < cfg.ticks_between_rounds; ++t) env.tick();
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config, const std::vector<CorpusRecord>& corpus,
                      const ArmModels& models) {
    if (config.policies.empty() || config.concurrency.empty() || config.seeds.empty())
        throw std::invalid_argument("run_sweep: policies, concurrency and seeds must be non-empty");
    for (int c : config.concurrency)
        if (c < 1) throw std::invalid_argument("run_sweep: concurrency values must be positive");

    SweepResult result;
    for (uint64_t seed : config.seeds) {
        for (int conc : config.concurrency) {
            EnvConfig ec = config.env;
            ec.num_users = conc;
            if (config.stationary_users) {
                ec.speed_min_mps = 0.0;
                ec.speed_max_mps = 0.0;
            }
            uint64_t topo_seed = config.fixed_topology_seed >= 0
                                     ? static_cast<uint64_t>(config.fixed_topology_seed)
                                     : seed;
            EdgeTopology topo = generate_topology(topo_seed, ec);
            for (PolicyArm arm : config.policies) {
                EdgeEnv env(topo, mix_seed(seed, static_cast<uint64_t>(conc), 1));
                CorpusTaskSource source(corpus, config.corpus_domain_filter);
                Rng task_rng(mix_seed(seed, static_cast<uint64_t>(conc), 2));
                int idx = 0;
                for (int round = 0; round < config.rounds; ++round) {
                    for (int i = 0; i < conc; ++i) {
                        TrainingTask task = source.next(env, task_rng);
                        uint64_t ss = mix_seed(seed, static_cast<uint64_t>(conc),
                                               static_cast<uint64_t>(round),
                                               static_cast<uint64_t>(i));
                        RequestRecord rec = run_request(env, arm, task, models, ss);
                        result.rows.push_back({config.scenario, arm_name(arm), conc, seed, idx++,
                                               rec.delay, rec.success, rec.reward});
                    }
                    advance_env(env, config);
                }
            }
        }
    }
    result.aggregates = aggregate_rows(result.rows);
    return result;
}

NavigationResult run_navigation(const SweepConfig& base, const std::vector<CorpusRecord>& corpus,
                                const ArmModels& models) {
    NavigationResult out;
    SweepConfig moving = base;
    moving.scenario = "navigation_moving";
    moving.corpus_domain_filter = 3;
    moving.stationary_users = false;
    moving.require_node_crossing = true;
    out.moving = run_sweep(moving, corpus, models);

    SweepConfig stationary = base;
    stationary.scenario = "navigation_stationary";
    stationary.corpus_domain_filter = 3;
    stationary.stationary_users = true;
    stationary.require_node_crossing = false;
    out.stationary = run_sweep(stationary, corpus, models);
    return out;
}

std::vector<SweepAggregate> aggregate_rows(const std::vector<SweepRow>& rows) {
    struct PerSeed {
        Vec delays;
        double succ_sum = 0.0;
    };
    std::map<std::pair<std::string, int>, std::map<uint64_t, PerSeed>> cells;
    for (const auto& r : rows) {
        PerSeed& p = cells[{r.policy, r.concurrency}][r.seed];
        p.delays.push_back(r.delay);
        p.succ_sum += r.success ? 1.0 : 0.0;
    }
    auto median = [](Vec v) {
        std::sort(v.begin(), v.end());
        size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    std::vector<SweepAggregate> out;
    for (const auto& [key, per_seed] : cells) {
        SweepAggregate a;
        a.policy = key.first;
        a.concurrency = key.second;
        Vec seed_delay, seed_succ;
        double dsum = 0.0, ssum = 0.0;
        int total = 0;
        for (const auto& [seed, p] : per_seed) {
            int n = static_cast<int>(p.delays.size());
            seed_delay.push_back(median(p.delays));
            seed_succ.push_back(p.succ_sum / n);
            for (double d : p.delays) dsum += d;
            ssum += p.succ_sum;
            total += n;
        }
        a.mean_delay = dsum / total;
        a.success_rate = ssum / total;
        a.median_seed_delay = median(seed_delay);
        a.median_seed_success = median(seed_succ);
        out.push_back(std::move(a));
    }
    return out;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

void write_metrics_csv(const std::string& path, const SweepResult& result) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    f << "scenario,policy,concurrency,seed,request,delay_s,success,reward\n";
    for (const auto& r : result.rows)
        f << r.scenario << "," << r.policy << "," << r.concurrency << "," << r.seed << ","
          << r.request_index << "," << format_double(r.delay) << "," << (r.success ? 1 : 0)
          << "," << format_double(r.reward) << "\n";
}

std::vector<SweepRow> read_metrics_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_metrics_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) ||
        line != "scenario,policy,concurrency,seed,request,delay_s,success,reward")
        throw std::runtime_error("read_metrics_csv: bad header");
    std::vector<SweepRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        SweepRow r;
        std::getline(ss, r.scenario, ',');
        std::getline(ss, r.policy, ',');
        std::getline(ss, field, ',');
        r.concurrency = std::stoi(field);
        std::getline(ss, field, ',');
        r.seed = std::stoull(field);
        std::getline(ss, field, ',');
        r.request_index = std::stoi(field);
        std::getline(ss, field, ',');
        r.delay = std::stod(field);
        std::getline(ss, field, ',');
        r.success = field == "1";
        std::getline(ss, field, ',');
        r.reward = std::stod(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_metrics_json(const std::string& path, const SweepResult& result,
                        const SweepConfig& config) {
    json j;
    j["scenario"] = config.scenario;
    json cfg;
    cfg["rounds"] = config.rounds;
    cfg["ticks_between_rounds"] = config.ticks_between_rounds;
    cfg["concurrency"] = config.concurrency;
    cfg["seeds"] = config.seeds;
    json pols = json::array();
    for (PolicyArm p : config.policies) pols.push_back(arm_name(p));
    cfg["policies"] = pols;
    cfg["corpus_domain_filter"] = config.corpus_domain_filter;
    cfg["stationary_users"] = config.stationary_users;
    j["config"] = cfg;
    json aggs = json::array();
    for (const auto& a : result.aggregates) {
        json e;
        e["policy"] = a.policy;
        e["concurrency"] = a.concurrency;
        e["mean_delay_s"] = format_double(a.mean_delay);
        e["median_seed_delay_s"] = format_double(a.median_seed_delay);
        e["success_rate"] = format_double(a.success_rate);
        e["median_seed_success"] = format_double(a.median_seed_success);
        aggs.push_back(e);
    }
    j["aggregates"] = aggs;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_metrics_json: cannot open " + path);
    f << j.dump(2) << "\n";
}

void write_trace_csv(const std::string& path, const std::vector<TrainPoint>& trace) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_trace_csv: cannot open " + path);
    f << "episode,reward,delay_s,success\n";
    for (const auto& p : trace)
        f << p.episode << "," << format_double(p.reward) << "," << format_double(p.delay) << ","
          << (p.success ? 1 : 0) << "\n";
}

void write_rollout_trace(const std::string& path, const PsomRollout& rollout) {
    json j;
    j["feasible"] = rollout.feasible;
    j["log_prob"] = format_double(rollout.logp);
    j["value"] = format_double(rollout.value);
    json steps = json::array();
    for (size_t k = 0; k < rollout.actions.size(); ++k) {
        json s;
        s["choice"] = rollout.actions[k];
        s["choice_prob"] =
            format_double(k < rollout.step_logps.size() ? std::exp(rollout.step_logps[k]) : 0.0);
        json mask = json::array();
        for (int i = 0; i < rollout.masks.cols; ++i)
            mask.push_back(rollout.masks(static_cast<int>(k), i) != 0.0 ? 1 : 0);
        s["mask"] = mask;
        steps.push_back(s);
    }
    j["steps"] = steps;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_rollout_trace: cannot open " + path);
    f << j.dump(2) << "\n";
}

GipmConfig gipm_config_for(const EnvConfig& env) {
    GipmConfig cfg;
    cfg.k_vnf = env.num_vnf_types;
    cfg.num_nodes = env.num_nodes;
    cfg.cpu_ghz_max = env.cpu_ghz_max;
    cfg.mem_gb_max = env.mem_gb_max;
    cfg.bw_mbps_max = env.bw_mbps_max;
    return cfg;
}

PsomConfig psom_config_for(const EnvConfig& env) {
    PsomConfig cfg;
    cfg.k_vnf = env.num_vnf_types;
    cfg.num_nodes = env.num_nodes;
    cfg.cpu_ghz_max = env.cpu_ghz_max;
    cfg.mem_gb_max = env.mem_gb_max;
    cfg.bw_mbps_max = env.bw_mbps_max;
    cfg.area_m = env.area_m;
    return cfg;
}

IntentProvider gipm_intent_provider(const GipmPolicy& gipm, const IntentEncoder& encoder,
                                    int n_candidates) {
    return [&gipm, &encoder, n_candidates](const TrainingTask& task, EdgeEnv& env, Rng& rng) {
        Vec z_ex = encode_explicit(task.text, encoder).vector;
        return gipm.sample_best_intent(z_ex, env.context_for(task.user_id), rng.next_u64(),
                                       n_candidates);
    };
}

std::vector<RegressionSample> build_regression_dataset(const std::vector<CorpusRecord>& corpus,
                                                       EdgeEnv& env, const IntentEncoder& encoder,
                                                       int n, Rng& rng) {
    if (corpus.empty()) throw std::invalid_argument("regression dataset: empty corpus");
    const EnvConfig& cfg = env.config();
    std::vector<RegressionSample> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const CorpusRecord& r =
            corpus[static_cast<size_t>(rng.uniform_int(static_cast<int>(corpus.size())))];
        int user = rng.uniform_int(cfg.num_users);
        Vec z_ex = encode_explicit(r.text, encoder).vector;
        RegressionSample s;
        s.input = RegressionIntentPredictor::featurize(z_ex, env.context_for(user), cfg);
        Vec v_func(static_cast<size_t>(cfg.num_vnf_types), 0.0);
        for (int t : r.vnfs) v_func[static_cast<size_t>(t)] = 1.0;
        s.target = assemble_implicit(v_func, r.qos, {r.cpu, r.mem_gb}).flat();
        out.push_back(std::move(s));
        env.tick();
    }
    return out;
}

}  // namespace sfcorch
