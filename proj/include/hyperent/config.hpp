#pragma once

// Run configuration: an INI-style text file ([section] / key = value / #
// comments). Every physical default is embedded here and may be overridden.

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "hyperent/apparatus.hpp"
#include "hyperent/channel.hpp"
#include "hyperent/counts.hpp"
#include "hyperent/source.hpp"

namespace hyperent {

enum class PolBasis { HV, DA };
std::string to_string(PolBasis b);

enum class RunMode { Sampled, Analytic };

struct FransonSection {
    double delay_alice = 1.2e-9;
    double delay_bob = 1.2e-9;
    double phase_alice = 0.0;
    double intrinsic_phase = 0.0;
    double bs_transmittance = 0.5;
    MonitoredPort monitored = MonitoredPort::Primary;
};

struct PolarizationSection {
    double extinction = 0.0;
    double hwp_hv = 0.0;                          // radians
    double hwp_da = 22.5 * std::numbers::pi / 180; // radians
};

struct DetectorSection {
    double efficiency = 0.80;
    double dark_rate = 100.0;
    /// Fiber coupling per arm; with the default pair rate this gives ~125 kHz
    /// singles and ~300 Hz peak coincidences per detector pair.
    double coupling = 0.006;
};

struct EnergyTimeScan {
    std::vector<int> core_pairs{1, 2};
    std::vector<PolBasis> bases{PolBasis::HV, PolBasis::DA};
    double start = 0.0;
    double stop = 4.0 * std::numbers::pi;
    int steps = 33;
    double integration_time = 30.0;
    /// When positive, scan values are stage positions in meters and are
    /// multiplied by this factor to obtain Bob's phase.
    double meters_to_radians = 0.0;
};

struct PathScan {
    double start = 0.0;
    double stop = 4.0 * std::numbers::pi;
    int steps = 33;
    double integration_time = 1.0;
    double diagonal_integration_time = 1.0;
    double meters_to_radians = 0.0;
};

struct AnalysisSection {
    bool lock_omega = false;
    double low_count_floor = 0.10;
    double qkd_threshold = 0.81;
};

struct RunConfig {
    SourceConfig source;
    FiberSpec fiber;
    FransonSection franson;
    PolarizationSection polarization;
    PathStation path_station;
    DetectorSection detectors;
    CoincidenceConfig coincidence;
    EnergyTimeScan energy_time;
    PathScan path;
    AnalysisSection analysis;
    RunMode mode = RunMode::Sampled;
    std::uint64_t seed = 1;
    /// Nearest-neighbour coupling strength that generated fiber.crosstalk
    /// (exp(i eps A) over the hexagonal adjacency A); 0 means none.
    double crosstalk_neighbour = 0.0;

    /// Cross-field checks (cores exist, scans long enough for fitting).
    void validate() const;
};

/// Parses the configuration text; unknown sections or keys and malformed
/// values raise ConfigError carrying the line number.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Lossless nearest-neighbour coupling exp(i eps A) in layout order.
Eigen::MatrixXcd neighbour_crosstalk(double eps);

/// Fully resolved key = value dump; re-parsing it yields the same config.
std::string canonical_config(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

} // namespace hyperent
