#include "hyperent/channel.hpp"

#include <array>
#include <cmath>

namespace hyperent {

const FiberLayout& FiberLayout::standard19()
{
    static const FiberLayout layout = [] {
        FiberLayout f;
        constexpr std::array<std::array<int, 2>, 6> dir{{{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};
        const std::array<std::string, 3> inner{"1", "2", "5"};
        const std::array<std::string, 6> outer{"3", "4", "6", "7", "8", "9"};

        f.cores_.push_back({"0", 0, 0, 0});
        for (int k = 0; k < 6; ++k) {
            const std::string name = k < 3 ? inner[k] : inner[k - 3] + "'";
            f.cores_.push_back({name, dir[k][0], dir[k][1], 1});
        }
        for (int k = 0; k < 12; ++k) {
            const int d = k / 2;
            int q = 2 * dir[d][0];
            int r = 2 * dir[d][1];
            if (k % 2 == 1) {
                q = dir[d][0] + dir[(d + 1) % 6][0];
                r = dir[d][1] + dir[(d + 1) % 6][1];
            }
            const std::string name = k < 6 ? outer[k] : outer[k - 6] + "'";
            f.cores_.push_back({name, q, r, 2});
        }
        for (std::size_t i = 0; i < f.cores_.size(); ++i) f.index_.emplace(f.cores_[i].name, i);
        return f;
    }();
    return layout;
}

std::size_t FiberLayout::index(const std::string& name) const
{
    auto it = index_.find(name);
    if (it == index_.end()) throw LayoutError("unknown fiber core '" + name + "'");
    return it->second;
}

const CoreSite* FiberLayout::at(int q, int r) const
{
    for (const auto& c : cores_)
        if (c.q == q && c.r == r) return &c;
    return nullptr;
}

std::string opposite_core(const std::string& core)
{
    const auto& layout = FiberLayout::standard19();
    const CoreSite& s = layout.site(core);
    const CoreSite* o = layout.at(-s.q, -s.r);
    if (o == nullptr) throw LayoutError("layout is not point symmetric at core '" + core + "'");
    return o->name;
}

void FiberSpec::validate() const
{
    const auto& layout = FiberLayout::standard19();
    if (!(length > 0.0)) throw LayoutError("fiber length must be positive");
    for (const auto& [c, v] : loss_db) layout.index(c);
    for (const auto& [c, v] : phase) layout.index(c);
    for (const auto& [c, u] : pol_drift) {
        layout.index(c);
        check_unitary(u);
    }
    if (crosstalk.size() != 0) {
        const auto n = static_cast<Eigen::Index>(layout.size());
        if (crosstalk.rows() != n || crosstalk.cols() != n)
            throw LayoutError("crosstalk matrix must be " + std::to_string(n) + "x" + std::to_string(n));
        for (Eigen::Index j = 0; j < n; ++j)
            if (crosstalk.col(j).squaredNorm() > 1.0 + kExactTol)
                throw LayoutError("crosstalk column for core '" + layout.cores()[static_cast<std::size_t>(j)].name +
                                  "' exceeds unit power");
        // Column norms alone allow gain on superpositions of cores.
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(crosstalk);
        if (svd.singularValues()(0) > 1.0 + 1e-9) throw LayoutError("crosstalk matrix amplifies some superposition of cores");
    }
}

DensityOperator transmit(const DensityOperator& rho, const FiberSpec& fiber)
{
    fiber.validate();
    const auto& layout = FiberLayout::standard19();
    for (const auto& l : rho.basis()) {
        layout.index(l.a.core);
        layout.index(l.b.core);
    }

    SinglePhotonMap map = [&](const ModeLabel& in) {
        cd amp{1.0, 0.0};
        if (auto it = fiber.loss_db.find(in.core); it != fiber.loss_db.end()) amp *= std::pow(10.0, -it->second / 20.0);
        if (auto it = fiber.phase.find(in.core); it != fiber.phase.end()) amp *= std::polar(1.0, it->second);

        std::array<std::pair<Pol, cd>, 2> pol_out{{{Pol::H, {}}, {Pol::V, {}}}};
        const int col = in.pol == Pol::H ? 0 : 1;
        if (auto it = fiber.pol_drift.find(in.core); it != fiber.pol_drift.end()) {
            pol_out[0].second = it->second(0, col);
            pol_out[1].second = it->second(1, col);
        } else {
            pol_out[col].second = 1.0;
        }

        std::vector<std::pair<ModeLabel, cd>> out;
        const auto src = static_cast<Eigen::Index>(layout.index(in.core));
        for (std::size_t dst = 0; dst < layout.size(); ++dst) {
            cd c = fiber.crosstalk.size() == 0 ? (static_cast<Eigen::Index>(dst) == src ? cd{1.0, 0.0} : cd{})
                                               : fiber.crosstalk(static_cast<Eigen::Index>(dst), src);
            if (c == cd{}) continue;
            for (const auto& [p, u] : pol_out)
                if (u != cd{}) out.emplace_back(ModeLabel{layout.cores()[dst].name, p, in.timebin}, c * amp * u);
        }
        return out;
    };
    return apply_product_map(rho, map);
}

} // namespace hyperent
