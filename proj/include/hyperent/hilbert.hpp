#pragma once

// Exact complex-amplitude algebra for two-photon states over discrete
// per-photon labels (fiber core, polarization, interferometer time bin).

#include <complex>
#include <compare>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hyperent/errors.hpp"

namespace hyperent {

using cd = std::complex<double>;

inline constexpr double kExactTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

enum class Pol : unsigned char { H, V };
enum class TimeBin : unsigned char { None, S, L };
enum class Photon : unsigned char { A, B };

struct ModeLabel {
    std::string core;
    Pol pol = Pol::H;
    TimeBin timebin = TimeBin::None;

    auto operator<=>(const ModeLabel&) const = default;
};

struct PairLabel {
    ModeLabel a;
    ModeLabel b;

    auto operator<=>(const PairLabel&) const = default;

    const ModeLabel& of(Photon p) const { return p == Photon::A ? a : b; }
};

std::string to_string(Pol p);
std::string to_string(TimeBin t);
std::string to_string(const ModeLabel& m);
std::string to_string(const PairLabel& p);

/// Shorthand for building labels in tests and state constructors.
ModeLabel mode(std::string core, Pol pol, TimeBin tb = TimeBin::None);

/// Sparse two-photon ket. Sub-normalized states (norm < 1) are allowed and
/// stand for post-selected or lossy survivors.
class TwoPhotonState {
public:
    using Terms = std::map<PairLabel, cd>;

    TwoPhotonState() = default;
    explicit TwoPhotonState(Terms terms);
    TwoPhotonState(std::initializer_list<std::pair<const PairLabel, cd>> terms);

    const Terms& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    /// Sum of squared amplitude magnitudes.
    double norm() const;
    cd amplitude(const PairLabel& label) const;

    /// True when every label carries a time bin (post-interferometer state).
    bool has_timebins() const;

    std::vector<PairLabel> support() const;

private:
    Terms terms_;
};

/// Rescales to unit norm. Throws ZeroStateError when the norm vanishes.
TwoPhotonState normalize(const TwoPhotonState& state);

cd inner_product(const TwoPhotonState& bra, const TwoPhotonState& ket);

/// Hermitian positive semi-definite operator on an explicit sorted basis of
/// two-photon labels. Trace in [0, 1].
class DensityOperator {
public:
    DensityOperator(std::vector<PairLabel> basis, Eigen::MatrixXcd matrix);

    static DensityOperator from_pure(const TwoPhotonState& state);
    static DensityOperator from_pure(const TwoPhotonState& state, std::vector<PairLabel> basis);
    /// I/d over the given basis.
    static DensityOperator maximally_mixed(std::vector<PairLabel> basis);

    const std::vector<PairLabel>& basis() const { return basis_; }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    std::size_t dim() const { return basis_.size(); }
    double trace() const;

    std::ptrdiff_t index_of(const PairLabel& label) const;
    cd element(const PairLabel& row, const PairLabel& col) const;

    /// Zero-padded copy on a superset basis. Throws BasisError if the new
    /// basis does not contain the current one.
    DensityOperator embedded(std::vector<PairLabel> basis) const;

    bool has_timebins() const;

private:
    std::vector<PairLabel> basis_;
    Eigen::MatrixXcd matrix_;
};

/// Orthogonal projector onto the span of the given kets. Kets are
/// orthonormalized on construction; linearly dependent kets are dropped.
class Projector {
public:
    explicit Projector(const std::vector<TwoPhotonState>& kets);

    static Projector onto(const PairLabel& label);

    const std::vector<TwoPhotonState>& kets() const { return kets_; }
    std::size_t rank() const { return kets_.size(); }
    bool has_timebins() const { return timebins_; }

    /// Dense matrix on the given basis (for idempotence checks).
    Eigen::MatrixXcd matrix(const std::vector<PairLabel>& basis) const;

private:
    std::vector<TwoPhotonState> kets_;
    bool timebins_ = false;
};

double probability(const TwoPhotonState& state, const Projector& proj);
double probability(const DensityOperator& rho, const Projector& proj);

/// <target|rho|target>. The target must be normalized and supported on the
/// basis of rho.
double fidelity_with_pure(const DensityOperator& rho, const TwoPhotonState& target);

/// weight*rho + (1-weight)*sigma, on the union of both bases.
DensityOperator mix(const DensityOperator& rho, const DensityOperator& sigma, double weight);

/// Linear map on one photon's labels: each input label goes to a list of
/// (output label, amplitude). Labels absent from the map's image are lost.
using SinglePhotonMap = std::function<std::vector<std::pair<ModeLabel, cd>>(const ModeLabel&)>;

TwoPhotonState apply_local_map(const TwoPhotonState& state, Photon which, const SinglePhotonMap& map);
DensityOperator apply_local_map(const DensityOperator& rho, Photon which, const SinglePhotonMap& map);
/// Applies the same single-photon map to both photons.
DensityOperator apply_product_map(const DensityOperator& rho, const SinglePhotonMap& map);

/// Unitary acting on the span of `subspace` (column j is the image of
/// subspace[j]); labels outside the subspace are untouched.
struct LocalUnitary {
    std::vector<ModeLabel> subspace;
    Eigen::MatrixXcd matrix;

    SinglePhotonMap as_map() const;
};

/// Throws UnitarityError when U^dagger U deviates from I by more than 1e-12.
void check_unitary(const Eigen::MatrixXcd& u, double tol = kExactTol);

TwoPhotonState apply_local_unitary(const TwoPhotonState& state, Photon which, const LocalUnitary& u);
DensityOperator apply_local_unitary(const DensityOperator& rho, Photon which, const LocalUnitary& u);

/// Sorted union of two bases.
std::vector<PairLabel> basis_union(const std::vector<PairLabel>& x, const std::vector<PairLabel>& y);

} // namespace hyperent
