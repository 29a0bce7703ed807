#pragma once

// 19-core hexagonal multicore fiber: layout, diametric pairing and per-core
// impairments.

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyperent/hilbert.hpp"

namespace hyperent {

/// Core position in axial hex coordinates (q, r); the center core is (0, 0).
struct CoreSite {
    std::string name;
    int q = 0;
    int r = 0;
    int ring = 0;

    double x() const { return q + 0.5 * r; }
    double y() const { return 0.8660254037844386 * r; }
};

/// Center core "0"; inner ring 1, 2, 5 and their primed opposites; outer ring
/// 3, 4, 6, 7, 8, 9 and primed opposites. Cores 3 and 4 are outer-ring
/// neighbours.
class FiberLayout {
public:
    static const FiberLayout& standard19();

    const std::vector<CoreSite>& cores() const { return cores_; }
    std::size_t size() const { return cores_.size(); }
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    /// Throws LayoutError for unknown cores.
    std::size_t index(const std::string& name) const;
    const CoreSite& site(const std::string& name) const { return cores_[index(name)]; }
    const CoreSite* at(int q, int r) const;

private:
    FiberLayout() = default;
    std::vector<CoreSite> cores_;
    std::map<std::string, std::size_t> index_;
};

/// Point reflection through the fiber center.
std::string opposite_core(const std::string& core);

struct FiberSpec {
    double length = 411.0;
    std::map<std::string, double> loss_db;
    std::map<std::string, double> phase;
    std::map<std::string, Eigen::Matrix2cd> pol_drift;
    /// Amplitude coupling, column = source core, row = destination core, in
    /// layout order. Empty means identity.
    Eigen::MatrixXcd crosstalk;

    /// Throws LayoutError for unknown cores or an active (gain) crosstalk matrix.
    void validate() const;
};

/// Per-core amplitude 10^(-dB/20) e^{i phase}, polarization drift, then
/// crosstalk, applied to both photons.
DensityOperator transmit(const DensityOperator& rho, const FiberSpec& fiber);

} // namespace hyperent
