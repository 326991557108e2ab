#pragma once

#include <string>
#include <vector>

#include "sfcorch/linalg.hpp"

namespace sfcorch {

struct AgentProfile {
    int agent_id = 0;
    Vec conf;               // per-domain confidence in [0,1]
    double c_train = 0.0;   // training compute budget in FLOPs
};

struct DomainDistribution {
    Vec weights;   // probability vector over domains
};

struct DomainLexicon {
    std::vector<std::string> domain_names;
    std::vector<std::vector<std::string>> keywords;   // per domain
};

/// Scaling-law outputs for a given training budget.
struct ScalingLawResult {
    double n_op = 0.0;      // compute-optimal parameter count
    double tok_op = 0.0;    // compute-optimal token count
    double loss = 0.0;
    double accuracy = 0.0;  // e^{-loss}, in (0,1]
};

/// Count-proportional keyword classifier with uniform fallback when no
/// keyword matches.
DomainDistribution classify_domains(const std::string& text, const DomainLexicon& lexicon);

/// Dot product of agent confidence with the domain distribution.
double adaptability(const AgentProfile& profile, const DomainDistribution& dist);

/// Compute-optimal parameter/token split and the resulting pretraining loss.
/// Constants: alpha1=0.34, alpha2=0.28, xi=406.4, kappa=410.7, L0=0.
ScalingLawResult scaling_law(double c_train);

/// Argmax of adaptability * e^{-loss}; ties broken by lowest agent_id.
int select_agent(const std::vector<AgentProfile>& agents, const std::string& text,
                 const DomainLexicon& lexicon);

}  // namespace sfcorch
