#pragma once

#include <cstdint>
#include <numbers>
#include <string>

#include "hyperent/hilbert.hpp"

namespace hyperent {

/// Per-DOF coherence loss. Each weight scales the off-diagonal elements
/// between labels that differ in that DOF by (1 - p).
struct DephasingWeights {
    double path = 0.0;
    double time = 0.0;
    double pol = 0.0;
};

struct SourceConfig {
    int n_core_pairs = 4;
    double pair_rate = 4.2e8;           // pairs/s at the fiber input
    double coherence_time = 1.5e-12;    // s
    double pol_phase = 0.0;             // phase of |VV> relative to |HH>
    double inter_pair_phase = std::numbers::pi; // phase step between consecutive core pairs
    DephasingWeights dephasing;
    double white_noise = 0.0;           // weight of I/d admixed after dephasing
    double center_wavelength = 1560.48e-9;

    void validate() const;
};

enum class EmissionTimeModel { CwUniform };

/// Source output. The energy-time DOF is carried as a scalar coherence
/// (1 - p_time) consumed by the Franson stations: with a CW pump there is no
/// source-side time-bin qubit.
struct HyperState {
    TwoPhotonState pure;
    DensityOperator rho;
    double time_coherence = 1.0;
    EmissionTimeModel emission_time_model = EmissionTimeModel::CwUniform;
};

/// Core label of pair k (1-based) for photon A ("k") or photon B ("k'").
std::string pair_core(int k, Photon which);

/// Equal-weight superposition over n diametric core pairs, each carrying
/// (|HH> + e^{i pol_phase}|VV>)/sqrt(2). Pair k picks up e^{i (k-1) inter_pair_phase}.
TwoPhotonState build_target_state(int n_core_pairs, double pol_phase = 0.0, double inter_pair_phase = 0.0);

DensityOperator apply_isotropic_noise(const TwoPhotonState& state, double p_path, double p_time, double p_pol);

/// (1 - p) rho + p I/d on the basis spanned by all core-pair and
/// polarization combinations present in rho.
DensityOperator apply_white_noise(const DensityOperator& rho, double p);

HyperState prepare_source(const SourceConfig& config);

/// Number of pairs emitted in `duration`, Poisson distributed.
std::uint64_t emission_pair_stream(const SourceConfig& config, double duration, std::uint64_t seed);

} // namespace hyperent
