#pragma once

#include <vector>

#include "sfcorch/linalg.hpp"

namespace sfcorch {

struct ChannelParams {
    double pathloss = 1.0;        // chi, unitless gain in (0,1]
    double shadow = 1.0;          // psi, unitless gain
    double los_amp = 1.0;         // |alpha_0|
    Mat nlos_amps;                // clusters x rays amplitude magnitudes
    double tx_power_w = 1.0;      // P
    double noise_power_w = 1e-12; // sigma^2
    double error_rate = 1e-3;     // epsilon, strictly inside (0,1)
    int blocklength = 200;        // bl, symbols

    void validate() const;
};

struct LinkBudget {
    double rsrp_w = 0.0;
    double interference_w = 0.0;
    double sinr = 0.0;
    double rate_bps = 0.0;
    double allocated_bw_hz = 0.0;
};

/// Received power: chi * psi * (|a0|^2 + sum |a_{i,j}|^2) * P.
double rsrp(const ChannelParams& params);

/// Sum of the six largest RSRPs among non-serving stations (all of them when
/// fewer than six).
double interference(const std::vector<double>& non_serving_rsrps);

/// Convenience wrapper: excludes `serving_index` from `all_rsrps`.
double interference(size_t serving_index, const std::vector<double>& all_rsrps);

double sinr(double rsrp_w, double interference_w, double noise_power_w);

/// Inverse standard normal CDF; rational approximation refined by one Halley
/// step against erfc, absolute error below 1e-9 over (0,1).
double inverse_normal_cdf(double p);

enum class FblVariant {
    Verbatim,   // bw*log2(phi) - Ginv(eps)*sqrt(phi/(2 bl) * (phi+2)/(phi+1)^2 * log2^2 e)
    Textbook,   // bw*(log2(1+phi) - Ginv(eps)*sqrt(V/bl)*log2 e), V = 1 - 1/(1+phi)^2
};

/// Finite-blocklength rate in bits/second, clamped at 0 from below.
/// Throws std::domain_error when phi <= 0.
double rate_fbl(double phi, double bw_hz, double error_rate, int blocklength,
                FblVariant variant = FblVariant::Verbatim);

/// bits / rate; throws on rate <= 0 (infeasible link).
double comm_delay(double data_bits, double rate_bps);

double task_comm_delay(double uplink_s, double downlink_s);

/// Log-distance pathloss gain: (max(d, 1m))^-exponent.
double pathloss_gain(double distance_m, double exponent);

}  // namespace sfcorch
