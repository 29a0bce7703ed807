#pragma once

// Detection layer: efficiencies, dark counts, coincidence windows, Poisson
// sampling and accidental-coincidence subtraction.

#include <cstdint>
#include <string>
#include <vector>

#include "hyperent/apparatus.hpp"

namespace hyperent {

struct DetectorSpec {
    std::string label;
    Photon arm = Photon::A;
    double efficiency = 0.80;
    double dark_rate = 100.0; // Hz

    void validate() const;
};

struct CoincidenceConfig {
    double window = 320e-12;         // s
    double integration_time = 30.0;  // s
    bool subtract_accidentals = true;

    void validate() const;
};

/// Coincidence pair of interest, e.g. {"HH", "D1", "D3"}.
struct DetectorPair {
    std::string label;
    std::string first;
    std::string second;
};

/// The four polarization-resolved pairs HH (D1/D3), VV (D2/D4), HV (D1/D4), VH (D2/D3).
std::vector<DetectorPair> polarization_pairs();
/// The four path-station pairs D1/D3, D2/D4, D1/D4, D2/D3.
std::vector<DetectorPair> path_pairs();
/// The four standard detectors D1, D2 (Alice) and D3, D4 (Bob).
std::vector<DetectorSpec> standard_detectors(double efficiency = 0.80, double dark_rate = 100.0);

struct PairRate {
    DetectorPair pair;
    double signal = 0.0;     // true coincidence rate, Hz
    double accidental = 0.0; // uncorrelated rate s1*s2*tau, Hz
};

struct ExpectedRates {
    std::vector<std::string> detectors;
    std::vector<double> singles; // Hz, aligned with detectors
    std::vector<PairRate> pairs;

    double single(const std::string& det) const;
};

/// Uncorrelated coincidence rate s1*s2*tau.
double accidental_rate(double s1, double s2, double window);

/// singles = pair_rate * eta_arm * marginal + dark;
/// coincidences = pair_rate * eta_A * eta_B * P(outcome in `tag`).
/// eta_arm is the coupling efficiency times the detector efficiency.
ExpectedRates expected_rates(const OutcomeDistribution& dist, double pair_rate, double coupling_a, double coupling_b,
                             const std::vector<DetectorSpec>& detectors, const std::vector<DetectorPair>& pairs,
                             TimeTag tag, double window);

struct PairCounts {
    std::string label;
    double raw = 0.0;
    double accidental = 0.0;  // estimate from measured singles
    double net = 0.0;
    double sigma = 0.0;
    bool clamped = false;
};

struct CountRecord {
    double integration_time = 0.0;
    std::vector<std::string> detectors;
    std::vector<double> singles;
    std::vector<PairCounts> pairs;

    const PairCounts& pair(const std::string& label) const;
};

/// Poisson sample of singles and coincidences (signal plus injected
/// accidentals). Accidental estimates are computed from the sampled singles.
/// net = raw and sigma = sqrt(raw) until subtract_accidentals is applied.
/// Each entry draws from its own stream keyed by (seed, scan_index, label).
CountRecord sample_counts(const ExpectedRates& rates, double integration_time, std::uint64_t seed, std::uint64_t scan_index,
                          double window);

/// Noise-free counterpart of sample_counts: every entry equals its expectation.
CountRecord expected_counts(const ExpectedRates& rates, double integration_time, double window);

/// net = max(raw - accidental, 0), clamp flagged; sigma = sqrt(raw + accidental).
CountRecord subtract_accidentals(const CountRecord& record);

} // namespace hyperent
