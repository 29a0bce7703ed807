#pragma once

// Scan execution. A plan holds the deterministic per-step expected rates; an
// execution samples (or takes expectations of) counts from a plan for one
// seed and analyzes them. Monte Carlo studies build one plan and execute it
// for many seeds.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hyperent/analysis.hpp"
#include "hyperent/config.hpp"
#include "hyperent/counts.hpp"

namespace hyperent {

struct RunOptions {
    unsigned threads = 1;
    bool oracle = false;
};

/// Largest |engine - oracle| over every probability compared; `checked` is
/// false when the configuration lies outside the oracle's assumptions.
struct OracleDiff {
    bool checked = false;
    double max_abs_diff = 0.0;
    std::size_t comparisons = 0;
    std::string note;
};

struct PairFit {
    std::string pair;
    std::optional<SineFit> fit;
    std::optional<VisibilityResult> visibility;
    std::string error;
};

struct PolPoint {
    double scan_value = 0.0;
    std::optional<VisibilityResult> visibility;
    bool low_count = false;
};

/// Pair labels for a polarization basis, in polarization_pairs() order:
/// HH VV HV VH or DD AA DA AD.
std::vector<DetectorPair> basis_pairs(PolBasis basis);

struct EnergyTimePlan {
    int core_pair = 1;
    PolBasis basis = PolBasis::HV;
    std::vector<double> scan_values;
    std::vector<double> phases_bob;
    double phase_alice = 0.0;
    std::vector<DetectorPair> pairs;
    std::vector<ExpectedRates> rates;
    OracleDiff oracle;
};

struct EnergyTimeResult {
    int core_pair = 1;
    PolBasis basis = PolBasis::HV;
    std::vector<double> scan_values;
    std::vector<CountRecord> records;
    std::vector<PairFit> fits;
    std::vector<PolPoint> pol_points;
    /// Correlated-pair time visibilities (HH, VV or DD, AA).
    std::vector<VisibilityRow> time_rows;
    /// Pooled over points above the low-count floor.
    std::optional<VisibilityRow> pol_row;
    OracleDiff oracle;
};

EnergyTimePlan plan_energy_time(const RunConfig& config, int core_pair, PolBasis basis, const RunOptions& options = {});
EnergyTimeResult execute_energy_time(const RunConfig& config, const EnergyTimePlan& plan, std::uint64_t seed,
                                     const RunOptions& options = {});
/// Fits and per-step polarization visibilities from count records.
EnergyTimeResult analyze_energy_time(const RunConfig& config, int core_pair, PolBasis basis, std::vector<double> scan_values,
                                     std::vector<CountRecord> records);
/// Every configured core pair and basis.
std::vector<EnergyTimeResult> run_energy_time_scan(const RunConfig& config, const RunOptions& options = {});

struct PathPlan {
    std::vector<double> scan_values;
    std::vector<double> piezo_phases;
    std::vector<ExpectedRates> rates;
    ExpectedRates diagonal_rates;
    std::vector<std::string> diagonal_pairs; // "C<i>/C<i>'" for i = 1..n
    OracleDiff oracle;
};

struct PathResult {
    std::vector<double> scan_values;
    std::vector<CountRecord> records;
    CountRecord diagonal_record;
    std::vector<PairFit> fits;        // the four station pairs
    std::vector<PairFit> family_fits; // setting 0 (correlated) and setting pi (anti-correlated)
    std::vector<VisibilityRow> rows;
    std::vector<double> diagonals;
    std::optional<FidelityReport> report;
    std::string certification_error;
    OracleDiff oracle;
};

PathPlan plan_path(const RunConfig& config, const RunOptions& options = {});
PathResult execute_path(const RunConfig& config, const PathPlan& plan, std::uint64_t seed, const RunOptions& options = {});
PathResult analyze_path(const RunConfig& config, std::vector<double> scan_values, std::vector<CountRecord> records,
                        CountRecord diagonal_record);
PathResult run_path_scan(const RunConfig& config, const RunOptions& options = {});

/// Runs body(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// Stream index for counter-based sampling: scan kind, core pair, basis, step.
std::uint64_t scan_index(unsigned kind, unsigned core_pair, unsigned basis, std::uint64_t step);

} // namespace hyperent
