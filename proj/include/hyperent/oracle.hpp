#pragma once

// Brute-force amplitude enumeration for the Franson and path stations. These
// routines are written directly from the beamsplitter amplitudes and share
// no code with the routing engine in apparatus.cpp, so the two can be
// diffed against each other.

#include <array>
#include <string>

#include "hyperent/apparatus.hpp"

namespace hyperent::oracle {

struct FransonBins {
    double central = 0.0;
    double early = 0.0;
    double late = 0.0;
};

/// Ideal energy-time state (|SS> + |LL>)/sqrt(2) through two balanced
/// interferometers, primary ports monitored: enumerate the four arm
/// combinations and add amplitudes that share an arrival-time difference.
FransonBins franson_ideal(double phi_a, double phi_b);

/// Central-bin probabilities HH, VV, HV, VH (order matches
/// polarization_pairs()) for a balanced Franson pair on cores (core_a, core_b)
/// followed by ideal HWP+PBS analyzers.
std::array<double, 4> franson_central(const DensityOperator& rho, const std::string& core_a, const std::string& core_b,
                                      double phi_a, double phi_b, double hwp_a, double hwp_b, double time_coherence);

/// Path-station probabilities for D1/D3, D2/D4, D1/D4, D2/D3 with photon A in
/// the station's Alice cores and photon B in its Bob cores.
std::array<double, 4> path_station(const DensityOperator& rho, const PathStation& station, double coherence_time);

} // namespace hyperent::oracle
