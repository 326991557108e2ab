#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sfcorch/linalg.hpp"

namespace sfcorch {

struct ExplicitIntentEmbedding {
    Vec vector;
    std::string source_text;
};

/// Implicit intent: function preferences over the VNF library, QoS weights
/// (sum to 1) and resource demand [cpu: giga-cycles per gigabit, mem/data:
/// gigabits].
struct ImplicitIntent {
    Vec v_func;
    Vec v_qos;
    Vec v_res;   // [cpu_demand, mem_demand]

    size_t dim() const { return v_func.size() + v_qos.size() + 2; }
    Vec flat() const;
};

struct NodeResidual {
    double cpu_free = 0.0;   // GHz
    double mem_free = 0.0;   // GB
};

struct IntentContext {
    std::vector<std::pair<int, double>> trajectory;   // (node_id, dwell seconds)
    std::vector<NodeResidual> network_state;          // one entry per topology node
    double bandwidth_mbps = 0.0;
    Vec profile;
};

/// Pluggable natural-language encoder (stands in for the LLM embedding).
class IntentEncoder {
public:
    virtual ~IntentEncoder() = default;
    virtual Vec encode(const std::string& text) const = 0;
    virtual int dim() const = 0;
};

/// Deterministic feature-hashing bag-of-tokens embedder with unit norm.
/// Tokens are lowercased alphanumeric runs; each token hashes (FNV-1a) to a
/// bucket and a sign, contributions accumulate, and the result is normalized.
/// In ordered mode the token position is mixed into the hash.
class HashingEncoder : public IntentEncoder {
public:
    explicit HashingEncoder(int d_ex = 64, bool bag_mode = true)
        : d_ex_(d_ex), bag_mode_(bag_mode) {}

    Vec encode(const std::string& text) const override;
    int dim() const override { return d_ex_; }

    static std::vector<std::string> tokenize(const std::string& text);

private:
    int d_ex_;
    bool bag_mode_;
};

ExplicitIntentEmbedding encode_explicit(const std::string& text, const IntentEncoder& encoder);

/// Validates and assembles an ImplicitIntent. v_qos is renormalized to sum
/// exactly 1 when within 1e-6 of it (after clipping small negatives), else
/// rejected.
ImplicitIntent assemble_implicit(const Vec& v_func, const Vec& v_qos, const Vec& v_res);

/// Inverse of assemble_implicit on a flat vector of length K + q + 2.
ImplicitIntent split_implicit(const Vec& flat, int k_vnf, int q_qos);

/// Idempotent projection onto the valid intent region: v_func clamped to
/// [0,1], v_qos clamped non-negative and renormalized (uniform when all
/// zero), v_res clamped non-negative. A valid intent passes through unchanged.
ImplicitIntent project_intent(const Vec& flat, int k_vnf, int q_qos);

/// Builds the context, truncating the trajectory to the most recent `window`
/// entries. Node ids must be valid in [0, num_nodes).
IntentContext build_context(const std::vector<std::pair<int, double>>& trajectory,
                            const std::vector<NodeResidual>& network_snapshot,
                            double bandwidth_mbps, const Vec& profile, int window, int num_nodes);

}  // namespace sfcorch
