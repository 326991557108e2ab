#include "sfcorch/agent_select.hpp"

#include <cmath>
#include <stdexcept>

#include "sfcorch/intent.hpp"

namespace sfcorch {

namespace {
constexpr double kAlpha1 = 0.34;
constexpr double kAlpha2 = 0.28;
constexpr double kXi = 406.4;
constexpr double kKappa = 410.7;
}  // namespace

DomainDistribution classify_domains(const std::string& text, const DomainLexicon& lexicon) {
    if (text.empty()) throw std::invalid_argument("classify_domains: empty text");
    size_t d = lexicon.keywords.size();
    if (d == 0) throw std::invalid_argument("classify_domains: empty lexicon");

    auto tokens = HashingEncoder::tokenize(text);
    Vec counts(d, 0.0);
    double total = 0.0;
    for (const auto& tok : tokens) {
        for (size_t i = 0; i < d; ++i) {
            for (const auto& kw : lexicon.keywords[i]) {
                if (tok == kw) {
                    counts[i] += 1.0;
                    total += 1.0;
                }
            }
        }
    }
    DomainDistribution dist;
    if (total == 0.0) {
        dist.weights.assign(d, 1.0 / static_cast<double>(d));
    } else {
        dist.weights = counts;
        for (double& w : dist.weights) w /= total;
    }
    return dist;
}

double adaptability(const AgentProfile& profile, const DomainDistribution& dist) {
    check_shape(profile.conf.size() == dist.weights.size(), "adaptability dims");
    return dot(profile.conf, dist.weights);
}

ScalingLawResult scaling_law(double c_train) {
    if (c_train <= 0.0) throw std::invalid_argument("scaling_law: budget must be positive");
    double inv_sum = 1.0 / (kAlpha1 + kAlpha2);
    double ratio = (kAlpha1 * kXi) / (kAlpha2 * kKappa);
    double c6 = c_train / 6.0;

    ScalingLawResult r;
    r.n_op = std::pow(ratio, inv_sum) * std::pow(c6, kAlpha2 * inv_sum);
    r.tok_op = std::pow(1.0 / ratio, inv_sum) * std::pow(c6, kAlpha1 * inv_sum);
    r.loss = kXi / std::pow(r.n_op, kAlpha1) + kKappa / std::pow(r.tok_op, kAlpha2);
    r.accuracy = std::exp(-r.loss);
    return r;
}

int select_agent(const std::vector<AgentProfile>& agents, const std::string& text,
                 const DomainLexicon& lexicon) {
    if (agents.empty()) throw std::invalid_argument("select_agent: no agents");
    DomainDistribution dist = classify_domains(text, lexicon);

    int best_id = agents.front().agent_id;
    double best_acc = -1.0;
    for (const auto& a : agents) {
        double acc = adaptability(a, dist) * scaling_law(a.c_train).accuracy;
        if (acc > best_acc || (acc == best_acc && a.agent_id < best_id)) {
            best_acc = acc;
            best_id = a.agent_id;
        }
    }
    return best_id;
}

}  // namespace sfcorch
