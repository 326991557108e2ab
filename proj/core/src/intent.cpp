#include "sfcorch/intent.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace sfcorch {

Vec ImplicitIntent::flat() const {
    Vec out = v_func;
    out.insert(out.end(), v_qos.begin(), v_qos.end());
    out.insert(out.end(), v_res.begin(), v_res.end());
    return out;
}

namespace {
bool is_stopword(const std::string& w) {
    static const std::set<std::string> kStop = {
        "a",   "an",  "and", "at",  "by",  "for", "from", "in",   "is",  "it",
        "my",  "of",  "on",  "or",  "our", "the", "this", "that", "to",  "up",
        "with"};
    return kStop.count(w) > 0;
}
}  // namespace

std::vector<std::string> HashingEncoder::tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !is_stopword(cur)) tokens.push_back(cur);
        cur.clear();
    };
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else {
            flush();
        }
    }
    flush();
    // a text of only function words still needs a signature
    if (tokens.empty()) {
        std::string all;
        for (char ch : text)
            if (std::isalnum(static_cast<unsigned char>(ch)))
                all.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        if (!all.empty()) tokens.push_back(all);
    }
    return tokens;
}

namespace {
uint64_t fnv1a_str(const std::string& s, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}
}  // namespace

Vec HashingEncoder::encode(const std::string& text) const {
    auto tokens = tokenize(text);
    if (tokens.empty()) throw std::invalid_argument("encoder: no tokens in text");
    Vec acc(d_ex_, 0.0);
    for (size_t i = 0; i < tokens.size(); ++i) {
        uint64_t h = fnv1a_str(tokens[i]);
        if (!bag_mode_) {
            h ^= (i + 1) * 0x9e3779b97f4a7c15ull;
            h *= 0x100000001b3ull;
        }
        size_t bucket = h % static_cast<uint64_t>(d_ex_);
        double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
        acc[bucket] += sign;
    }
    double n = norm2(acc);
    if (n > 0.0)
        for (double& x : acc) x /= n;
    return acc;
}

ExplicitIntentEmbedding encode_explicit(const std::string& text, const IntentEncoder& encoder) {
    if (text.empty()) throw std::invalid_argument("encode_explicit: empty text");
    return {encoder.encode(text), text};
}

ImplicitIntent assemble_implicit(const Vec& v_func, const Vec& v_qos, const Vec& v_res) {
    if (v_res.size() != 2) throw std::invalid_argument("assemble_implicit: v_res must have 2 entries");
    if (v_qos.empty() || v_func.empty())
        throw std::invalid_argument("assemble_implicit: empty component");

    ImplicitIntent z;
    z.v_func = v_func;
    for (double& p : z.v_func) {
        if (p < -1e-9 || p > 1.0 + 1e-9)
            throw std::invalid_argument("assemble_implicit: v_func entry outside [0,1]");
        p = std::min(1.0, std::max(0.0, p));
    }

    z.v_qos = v_qos;
    double sum = 0.0;
    for (double& w : z.v_qos) {
        if (w < -1e-6) throw std::invalid_argument("assemble_implicit: negative QoS weight");
        w = std::max(0.0, w);
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("assemble_implicit: v_qos does not sum to 1");
    for (double& w : z.v_qos) w /= sum;

    z.v_res = v_res;
    for (double r : z.v_res)
        if (r < 0.0) throw std::invalid_argument("assemble_implicit: negative resource demand");
    return z;
}

ImplicitIntent split_implicit(const Vec& flat, int k_vnf, int q_qos) {
    if (static_cast<int>(flat.size()) != k_vnf + q_qos + 2)
        throw std::invalid_argument("split_implicit: flat length mismatch");
    Vec f(flat.begin(), flat.begin() + k_vnf);
    Vec q(flat.begin() + k_vnf, flat.begin() + k_vnf + q_qos);
    Vec r(flat.begin() + k_vnf + q_qos, flat.end());
    return assemble_implicit(f, q, r);
}

ImplicitIntent project_intent(const Vec& flat, int k_vnf, int q_qos) {
    if (static_cast<int>(flat.size()) != k_vnf + q_qos + 2)
        throw std::invalid_argument("project_intent: flat length mismatch");
    ImplicitIntent z;
    z.v_func.assign(flat.begin(), flat.begin() + k_vnf);
    for (double& p : z.v_func) p = std::min(1.0, std::max(0.0, p));
    z.v_qos.assign(flat.begin() + k_vnf, flat.begin() + k_vnf + q_qos);
    double sum = 0.0;
    for (double& w : z.v_qos) {
        w = std::max(0.0, w);
        sum += w;
    }
    if (sum <= 0.0) {
        z.v_qos.assign(static_cast<size_t>(q_qos), 1.0 / static_cast<double>(q_qos));
    } else {
        for (double& w : z.v_qos) w /= sum;
    }
    z.v_res.assign(flat.begin() + k_vnf + q_qos, flat.end());
    for (double& r : z.v_res) r = std::max(0.0, r);
    return z;
}

IntentContext build_context(const std::vector<std::pair<int, double>>& trajectory,
                            const std::vector<NodeResidual>& network_snapshot,
                            double bandwidth_mbps, const Vec& profile, int window,
                            int num_nodes) {
    if (trajectory.empty()) throw std::invalid_argument("build_context: empty trajectory");
    if (window < 1) throw std::invalid_argument("build_context: window must be positive");
    for (const auto& [node, dwell] : trajectory) {
        if (node < 0 || node >= num_nodes)
            throw std::out_of_range("build_context: unknown node id in trajectory");
        if (dwell <= 0.0) throw std::invalid_argument("build_context: dwell time must be positive");
    }
    if (static_cast<int>(network_snapshot.size()) != num_nodes)
        throw std::invalid_argument("build_context: snapshot must cover every node exactly once");

    IntentContext ctx;
    size_t start = trajectory.size() > static_cast<size_t>(window)
                       ? trajectory.size() - static_cast<size_t>(window)
                       : 0;
    ctx.trajectory.assign(trajectory.begin() + static_cast<long>(start), trajectory.end());
    ctx.network_state = network_snapshot;
    ctx.bandwidth_mbps = bandwidth_mbps;
    ctx.profile = profile;
    return ctx;
}

}  // namespace sfcorch
