#include "sfcorch/radio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sfcorch {

void ChannelParams::validate() const {
    if (pathloss <= 0.0 || pathloss > 1.0)
        throw std::invalid_argument("channel: pathloss gain must be in (0,1]");
    if (shadow < 0.0) throw std::invalid_argument("channel: negative shadow gain");
    if (los_amp < 0.0) throw std::invalid_argument("channel: negative LoS amplitude");
    if (tx_power_w < 0.0) throw std::invalid_argument("channel: negative tx power");
    if (noise_power_w <= 0.0) throw std::invalid_argument("channel: noise power must be positive");
    if (error_rate <= 0.0 || error_rate >= 1.0)
        throw std::invalid_argument("channel: error rate must be inside (0,1)");
    if (blocklength < 1) throw std::invalid_argument("channel: blocklength must be >= 1");
}

double rsrp(const ChannelParams& params) {
    double paths = params.los_amp * params.los_amp;
    for (double a : params.nlos_amps.a) paths += a * a;
    return params.pathloss * params.shadow * paths * params.tx_power_w;
}

double interference(const std::vector<double>& non_serving_rsrps) {
    std::vector<double> sorted = non_serving_rsrps;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double sum = 0.0;
    size_t n = std::min<size_t>(6, sorted.size());
    for (size_t i = 0; i < n; ++i) sum += sorted[i];
    return sum;
}

double interference(size_t serving_index, const std::vector<double>& all_rsrps) {
    std::vector<double> others;
    others.reserve(all_rsrps.size());
    for (size_t i = 0; i < all_rsrps.size(); ++i)
        if (i != serving_index) others.push_back(all_rsrps[i]);
    return interference(others);
}

double sinr(double rsrp_w, double interference_w, double noise_power_w) {
    if (noise_power_w <= 0.0) throw std::invalid_argument("sinr: noise power must be positive");
    return rsrp_w / (noise_power_w + interference_w);
}

double inverse_normal_cdf(double p) {
    if (p <= 0.0 || p >= 1.0)
        throw std::domain_error("inverse_normal_cdf: p must be inside (0,1)");

    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley refinement against the exact CDF (via erfc).
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

double rate_fbl(double phi, double bw_hz, double error_rate, int blocklength,
                FblVariant variant) {
    if (phi <= 0.0) throw std::domain_error("rate_fbl: SINR must be positive");
    if (blocklength < 1) throw std::invalid_argument("rate_fbl: blocklength must be >= 1");
    const double log2e = 1.0 / std::log(2.0);
    double ginv = inverse_normal_cdf(error_rate);
    double nu;
    if (variant == FblVariant::Verbatim) {
        double disp = phi / (2.0 * blocklength) * (phi + 2.0) / ((phi + 1.0) * (phi + 1.0)) *
                      log2e * log2e;
        nu = bw_hz * std::log2(phi) - ginv * std::sqrt(disp);
    } else {
        double v = 1.0 - 1.0 / ((1.0 + phi) * (1.0 + phi));
        nu = bw_hz * (std::log2(1.0 + phi) - ginv * std::sqrt(v / blocklength) * log2e);
    }
    return std::max(0.0, nu);
}

double comm_delay(double data_bits, double rate_bps) {
    if (rate_bps <= 0.0) throw std::domain_error("comm_delay: infeasible link (rate <= 0)");
    if (data_bits < 0.0) throw std::invalid_argument("comm_delay: negative payload");
    return data_bits / rate_bps;
}

double task_comm_delay(double uplink_s, double downlink_s) { return uplink_s + downlink_s; }

double pathloss_gain(double distance_m, double exponent) {
    double d = std::max(distance_m, 1.0);
    return std::pow(d, -exponent);
}

}  // namespace sfcorch
