#pragma once

// Visibility estimation, weighted sinusoid fitting and the certification
// chain: visibility -> off-diagonal element -> path fidelity -> Schmidt number.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyperent/errors.hpp"

namespace hyperent {

struct Measured {
    double value = 0.0;
    double sigma = 0.0;
};

struct FringeDataset {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;
    std::string basis;
};

/// offset + amplitude * sin(omega * x + phase)
struct SineFit {
    double offset = 0.0;
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
    /// Order: offset, amplitude, omega, phase.
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
    double reduced_chi2 = 0.0;
    int iterations = 0;
    bool omega_fixed = false;
    bool degenerate = false;

    double operator()(double x) const;
    double sigma(int k) const;
    /// Physical fringes keep amplitude <= offset.
    bool unphysical() const { return amplitude > offset; }
};

struct FitOptions {
    std::optional<double> fixed_omega;
    int max_iterations = 500;
    double relative_tolerance = 1e-10;
    double sigma_floor = 1.0;   // applied to zero-count points
    std::size_t min_points = 8;
};

enum class VisibilityMethod { DirectFormula, SineFit };

struct VisibilityResult {
    double value = 0.0;
    double sigma = 0.0;
    VisibilityMethod method = VisibilityMethod::DirectFormula;
};

/// (HH + VV - HV - VH) / (HH + VV + HV + VH) with first-order Poisson errors.
VisibilityResult polarization_visibility(Measured hh, Measured vv, Measured hv, Measured vh);

/// Weighted least squares (weights 1/sigma^2). omega starts at the best
/// discrete-spectrum peak and is refined with Levenberg-Marquardt unless fixed.
SineFit fit_sine(const FringeDataset& data, const FitOptions& options = {});

/// V = amplitude / offset, equal to (max - min) / (max + min) for a sinusoid.
VisibilityResult visibility_from_fit(const SineFit& fit);

/// |<ii'|rho|jj'>| lower bound V (p_i + p_j) / 2.
double offdiag_from_visibility(double visibility, double p_i, double p_j);

struct PathFidelity {
    double value = 0.0;
    bool consistent = true;  // false when inputs imply F > 1
};

/// Fidelity with the maximally entangled state of dimension d = diagonals.size(),
/// assuming every off-diagonal magnitude equals r: (sum p + d(d-1) r) / d.
PathFidelity path_fidelity(std::span<const double> diagonals, double offdiag);

/// Largest k <= d with F > (k-1)/d.
int certify_schmidt_number(double fidelity, int dimension);

inline constexpr double kQkdVisibilityThreshold = 0.81;

struct QkdVerdict {
    bool pass = false;
    double threshold = kQkdVisibilityThreshold;
    double margin_sigma = 0.0;
};

/// Pass iff V > threshold (strict).
QkdVerdict qkd_threshold_check(const VisibilityResult& v, double threshold = kQkdVisibilityThreshold);

struct VisibilityRow {
    std::string label;
    VisibilityResult visibility;
    QkdVerdict verdict;
};

struct FidelityReport {
    std::vector<double> diagonals;
    int interfered_i = 0;
    int interfered_j = 1;
    double certifying_visibility = 0.0;
    double offdiag = 0.0;
    PathFidelity fidelity;
    int schmidt_number = 1;
    std::vector<VisibilityRow> visibilities;
    std::string assumption;
};

/// Runs the chain on measured path visibilities. The smallest visibility
/// certifies the off-diagonal element of the interfered core pairs
/// (indices i, j into `diagonals`), which is then taken as representative of
/// every off-diagonal element (non-adversarial assumption).
FidelityReport certify_path(const std::vector<VisibilityRow>& path_visibilities, const std::vector<double>& diagonals,
                            int interfered_i, int interfered_j, double qkd_threshold = kQkdVisibilityThreshold);

} // namespace hyperent
