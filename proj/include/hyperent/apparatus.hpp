#pragma once

// Measurement stations: Franson interferometer pair, HWP+PBS polarization
// analyzers and the two-beamsplitter path station. Every station is expressed
// as a per-photon routing from input labels to detector amplitudes and then
// evaluated exactly against a density operator.

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hyperent/hilbert.hpp"

namespace hyperent {

enum class TimeTag { Central, EarlySide, LateSide, NotApplicable };
std::string to_string(TimeTag t);

enum class MonitoredPort { Primary, Secondary, Both };

struct FransonInterferometer {
    std::string core;
    double delay = 1.2e-9;        // long minus short arm, seconds
    double phase = 0.0;           // long-arm phase, radians
    double bs_transmittance = 0.5;
    MonitoredPort monitored = MonitoredPort::Primary;

    void validate() const;
};

struct PolarizationAnalyzer {
    double hwp_angle = 0.0;       // radians
    double pbs_extinction = 0.0;  // leakage probability into the wrong port

    void validate() const;
};

/// Cores {alice[0], alice[1]} enter BS_A, {bob[0], bob[1]} enter BS_B. The
/// piezo phase is applied on alice[1].
struct PathStation {
    std::array<std::string, 2> alice_cores{"3", "4"};
    std::array<std::string, 2> bob_cores{"3'", "4'"};
    double piezo_phase = 0.0;
    double intrinsic_phase = 0.0;
    std::map<std::string, double> length_offsets; // seconds, per input core
    bool pbs_prefilter = true;
    double prefilter_axis = 0.0;  // linear polarization angle kept by the PBS
    double bs_transmittance = 0.5;

    void validate() const;
};

/// Coherence bookkeeping shared by all stations. Two amplitude contributions
/// to the same detection event interfere only if their difference delays
/// agree within the coherence time. Short-short against long-long
/// interference is further scaled by the source's energy-time coherence.
struct CoherenceModel {
    double coherence_time = 1.5e-12;
    double time_coherence = 1.0;
};

class OutcomeDistribution {
public:
    using Key = std::tuple<std::string, std::string, TimeTag>;

    void add(const std::string& det_a, const std::string& det_b, TimeTag tag, double p);
    void add_single(const std::string& det, double p);

    /// Photon A at det_a and photon B at det_b.
    double probability(const std::string& det_a, const std::string& det_b, TimeTag tag) const;
    /// Either photon at x and the other at y.
    double coincidence(const std::string& x, const std::string& y, TimeTag tag) const;
    /// Marginal probability that some photon is detected at det.
    double single(const std::string& det) const;
    double total() const;

    const std::map<Key, double>& entries() const { return entries_; }
    const std::map<std::string, double>& singles() const { return singles_; }

private:
    std::map<Key, double> entries_;
    std::map<std::string, double> singles_;
};

/// Half-wave plate Jones matrix [[cos 2a, sin 2a], [sin 2a, -cos 2a]].
Eigen::Matrix2cd hwp_jones(double angle);
/// PBS after HWP; row 0 is the transmitted (H) port, row 1 the reflected (V) port.
Eigen::Matrix2cd analyzer_matrix(const PolarizationAnalyzer& analyzer);

struct PortAmplitude {
    std::string detector;
    std::string mode;             // residual orthogonal mode at the detector
    TimeBin arm = TimeBin::None;  // interferometer arm, if any
    double delay = 0.0;           // seconds
    cd amplitude;
};

using PhotonRouting = std::function<std::vector<PortAmplitude>(const ModeLabel&)>;

OutcomeDistribution propagate(const DensityOperator& rho, const PhotonRouting& route_a, const PhotonRouting& route_b,
                              const CoherenceModel& coherence);

struct FransonOptions {
    CoherenceModel coherence;
    std::optional<PolarizationAnalyzer> analyzer_a;
    std::optional<PolarizationAnalyzer> analyzer_b;
};

/// Detector names with analyzers: primary port D1/D2 (Alice H/V), D3/D4 (Bob
/// H/V); secondary port D5-D8. Without analyzers: A1/A2 and B1/B2 per port.
OutcomeDistribution franson_pair_distribution(const DensityOperator& rho, const FransonInterferometer& alice,
                                              const FransonInterferometer& bob, const FransonOptions& options = {});

struct PolarizationProbs {
    double hh = 0.0;
    double hv = 0.0;
    double vh = 0.0;
    double vv = 0.0;

    double sum() const { return hh + hv + vh + vv; }
};

PolarizationProbs polarization_coincidence_probs(const DensityOperator& rho, const PolarizationAnalyzer& alice,
                                                 const PolarizationAnalyzer& bob);

/// Detector pairs (D1,D3), (D2,D4), (D1,D4), (D2,D3); D1/D2 behind BS_A.
OutcomeDistribution path_station_distribution(const DensityOperator& rho, const PathStation& station,
                                              const CoherenceModel& coherence = {});

/// Coincidences between individual cores (computational path basis);
/// detectors are named "C" + core.
OutcomeDistribution path_basis_distribution(const DensityOperator& rho, const std::vector<std::string>& cores);

} // namespace hyperent
