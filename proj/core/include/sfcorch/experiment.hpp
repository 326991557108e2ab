#pragma once

#include <string>

#include "sfcorch/agent_select.hpp"
#include "sfcorch/psom.hpp"

namespace sfcorch {

/// One line of the intent corpus: the instruction text plus the ground truth
/// the environment judges predictions against.
struct CorpusRecord {
    std::string text;
    int domain_label = 0;
    std::string domain_name;
    Vec qos;                 // ground-truth QoS weight template
    std::vector<int> vnfs;   // required VNF types
    double cpu = 0.0;        // giga-cycles per gigabit
    double mem_gb = 0.0;
};

struct DomainTemplate {
    int label = 0;
    std::string name;
    Vec qos;
    std::vector<int> vnfs;
    // three intensity levels, each with its own phrasings and demand range
    std::vector<std::vector<std::string>> phrases;   // [level][variant]
    std::vector<std::pair<double, double>> cpu_range;
    std::vector<std::pair<double, double>> mem_range;
};

const std::vector<DomainTemplate>& domain_templates();
DomainLexicon domain_lexicon();

std::vector<CorpusRecord> generate_corpus(int n, uint64_t seed);
void write_corpus(const std::string& path, const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> read_corpus(const std::string& path);

/// Draws tasks from corpus records: uniform record (optionally restricted to
/// one domain), uniform user, uniform target delay from the env config.
class CorpusTaskSource : public TaskSource {
public:
    explicit CorpusTaskSource(std::vector<CorpusRecord> records, int domain_filter = -1);
    TrainingTask next(EdgeEnv& env, Rng& rng) override;

private:
    std::vector<CorpusRecord> records_;
};

enum class PolicyArm { Gipa, BestEffort, NoPrediction, RegressionAblation };

std::string arm_name(PolicyArm arm);
PolicyArm parse_arm(const std::string& name);

struct ArmModels {
    const GipmPolicy* gipm = nullptr;
    const PsomPolicy* psom = nullptr;
    const RegressionIntentPredictor* regression = nullptr;
    const IntentEncoder* encoder = nullptr;
    double nominal_cpu = 500.0;   // resource guess of the no-prediction arm
    double nominal_mem_gb = 8.0;
    int gipm_samples = 8;   // diffusion samples aggregated per prediction
};

/// Runs one request end to end under the given arm and commits it to the
/// environment. Missing models for the arm raise a validation error.
RequestRecord run_request(EdgeEnv& env, PolicyArm arm, const TrainingTask& task,
                          const ArmModels& models, uint64_t sample_seed);

struct SweepConfig {
    std::string scenario = "mixed";
    std::vector<PolicyArm> policies;
    std::vector<int> concurrency;
    std::vector<uint64_t> seeds;
    int rounds = 3;                 // request waves per cell
    int ticks_between_rounds = 5;
    EnvConfig env;
    long fixed_topology_seed = -1;  // >= 0 pins one topology; seeds then vary workload only
    int corpus_domain_filter = -1;
    bool stationary_users = false;
    bool require_node_crossing = false;   // tick until every user changed serving node
};

struct SweepRow {
    std::string scenario;
    std::string policy;
    int concurrency = 0;
    uint64_t seed = 0;
    int request_index = 0;
    double delay = 0.0;
    bool success = false;
    double reward = 0.0;
};

struct SweepAggregate {
    std::string policy;
    int concurrency = 0;
    double mean_delay = 0.0;
    double median_seed_delay = 0.0;   // median over per-seed median delays
    double success_rate = 0.0;
    double median_seed_success = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepAggregate> aggregates;
};

SweepResult run_sweep(const SweepConfig& config, const std::vector<CorpusRecord>& corpus,
                      const ArmModels& models);

struct NavigationResult {
    SweepResult moving;
    SweepResult stationary;
};

/// Navigation-only workloads; the moving arm guarantees each user crosses at
/// least one serving-node boundary between request waves.
NavigationResult run_navigation(const SweepConfig& base, const std::vector<CorpusRecord>& corpus,
                                const ArmModels& models);

std::vector<SweepAggregate> aggregate_rows(const std::vector<SweepRow>& rows);

void write_metrics_csv(const std::string& path, const SweepResult& result);
std::vector<SweepRow> read_metrics_csv(const std::string& path);
void write_metrics_json(const std::string& path, const SweepResult& result,
                        const SweepConfig& config);

void write_trace_csv(const std::string& path, const std::vector<TrainPoint>& trace);
void write_rollout_trace(const std::string& path, const PsomRollout& rollout);

/// Deterministic shortest-stable double formatting shared by all emitters.
std::string format_double(double x);

GipmConfig gipm_config_for(const EnvConfig& env);
PsomConfig psom_config_for(const EnvConfig& env);

/// Intent provider backed by a trained diffusion policy. n_candidates > 1
/// draws several chains and keeps the sample the policy's own critic scores
/// highest; the default single draw follows the policy distribution.
IntentProvider gipm_intent_provider(const GipmPolicy& gipm, const IntentEncoder& encoder,
                                    int n_candidates = 1);

/// Logged (features, realized-intent) pairs for fitting the regression arm.
std::vector<RegressionSample> build_regression_dataset(const std::vector<CorpusRecord>& corpus,
                                                       EdgeEnv& env, const IntentEncoder& encoder,
                                                       int n, Rng& rng);

/// Stable per-cell seed derivation.
uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c = 0, uint64_t d = 0);

}  // namespace sfcorch
