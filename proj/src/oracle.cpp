#include "hyperent/oracle.hpp"

#include <cmath>
#include <complex>

namespace hyperent::oracle {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Balanced MZI, primary port: short arm transmits twice, long arm reflects twice.
cd mzi_amplitude(bool long_arm, double phi)
{
    const cd t{kInvSqrt2, 0.0};
    const cd r{0.0, kInvSqrt2};
    return long_arm ? r * r * std::exp(cd{0.0, phi}) : t * t;
}

} // namespace

FransonBins franson_ideal(double phi_a, double phi_b)
{
    // Emission in superposition over the pump coherence: both photons share an
    // emission time. Arrival difference = (arm_b - arm_a) * delay.
    cd by_difference[3] = {};
    for (int arm_a = 0; arm_a < 2; ++arm_a)
        for (int arm_b = 0; arm_b < 2; ++arm_b)
            by_difference[arm_b - arm_a + 1] += mzi_amplitude(arm_a == 1, phi_a) * mzi_amplitude(arm_b == 1, phi_b);
    return {std::norm(by_difference[1]), std::norm(by_difference[0]), std::norm(by_difference[2])};
}

std::array<double, 4> franson_central(const DensityOperator& rho, const std::string& core_a, const std::string& core_b,
                                      double phi_a, double phi_b, double hwp_a, double hwp_b, double time_coherence)
{
    // Ideal PBS after a HWP at angle h: H port amplitude (cos 2h, sin 2h),
    // V port amplitude (sin 2h, -cos 2h) for inputs (H, V).
    auto port = [](double h, int out, Pol in) {
        const double c = std::cos(2.0 * h);
        const double s = std::sin(2.0 * h);
        if (out == 0) return in == Pol::H ? c : s;
        return in == Pol::H ? s : -c;
    };
    const std::array<std::array<int, 2>, 4> outcomes{{{0, 0}, {1, 1}, {0, 1}, {1, 0}}};
    std::array<double, 4> result{};
    const auto& basis = rho.basis();
    for (std::size_t o = 0; o < 4; ++o) {
        double p = 0.0;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            if (basis[i].a.core != core_a || basis[i].b.core != core_b) continue;
            const double ai = port(hwp_a, outcomes[o][0], basis[i].a.pol) * port(hwp_b, outcomes[o][1], basis[i].b.pol);
            for (std::size_t j = 0; j < basis.size(); ++j) {
                if (basis[j].a.core != core_a || basis[j].b.core != core_b) continue;
                const double aj = port(hwp_a, outcomes[o][0], basis[j].a.pol) * port(hwp_b, outcomes[o][1], basis[j].b.pol);
                const cd rij = rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                // Central bin: SS and LL; cross terms carry the energy-time coherence.
                for (int ket = 0; ket < 2; ++ket) {
                    for (int bra = 0; bra < 2; ++bra) {
                        const cd k = mzi_amplitude(ket == 1, phi_a) * mzi_amplitude(ket == 1, phi_b);
                        const cd b = mzi_amplitude(bra == 1, phi_a) * mzi_amplitude(bra == 1, phi_b);
                        const double c = ket == bra ? 1.0 : time_coherence;
                        p += c * (k * ai * rij * aj * std::conj(b)).real();
                    }
                }
            }
        }
        result[o] = p;
    }
    return result;
}

std::array<double, 4> path_station(const DensityOperator& rho, const PathStation& station, double coherence_time)
{
    const double t = std::sqrt(station.bs_transmittance);
    const cd r{0.0, std::sqrt(1.0 - station.bs_transmittance)};
    // Rows: output (first, second detector of the BS); columns: input core index.
    const cd u[2][2] = {{t, r}, {r, t}};
    const cd piezo = std::exp(cd{0.0, station.piezo_phase + station.intrinsic_phase});
    const std::array<std::array<int, 2>, 4> outcomes{{{0, 0}, {1, 1}, {0, 1}, {1, 0}}};

    auto offset = [&](const std::string& c) {
        auto it = station.length_offsets.find(c);
        return it == station.length_offsets.end() ? 0.0 : it->second;
    };
    auto filter = [&](Pol p) { return station.pbs_prefilter ? (p == Pol::H ? std::cos(station.prefilter_axis) : std::sin(station.prefilter_axis)) : 1.0; };

    struct Input {
        std::size_t index;
        int in_a;
        int in_b;
        double dd;
        double pol_amp;
    };
    std::vector<Input> inputs;
    const auto& basis = rho.basis();
    for (std::size_t i = 0; i < basis.size(); ++i) {
        int in_a = -1;
        int in_b = -1;
        for (int k = 0; k < 2; ++k) {
            if (basis[i].a.core == station.alice_cores[k]) in_a = k;
            if (basis[i].b.core == station.bob_cores[k]) in_b = k;
        }
        if (in_a < 0 || in_b < 0) continue;
        inputs.push_back({i, in_a, in_b, offset(basis[i].a.core) - offset(basis[i].b.core),
                          filter(basis[i].a.pol) * filter(basis[i].b.pol)});
    }

    std::array<double, 4> result{};
    for (std::size_t o = 0; o < 4; ++o) {
        double p = 0.0;
        for (const auto& x : inputs) {
            const cd ax = u[outcomes[o][0]][x.in_a] * (x.in_a == 1 ? piezo : cd{1.0, 0.0}) * u[outcomes[o][1]][x.in_b] * x.pol_amp;
            for (const auto& y : inputs) {
                if (!station.pbs_prefilter && (basis[x.index].a.pol != basis[y.index].a.pol || basis[x.index].b.pol != basis[y.index].b.pol))
                    continue;
                if (std::abs(x.dd - y.dd) >= coherence_time) continue;
                const cd ay = u[outcomes[o][0]][y.in_a] * (y.in_a == 1 ? piezo : cd{1.0, 0.0}) * u[outcomes[o][1]][y.in_b] * y.pol_amp;
                p += (ax * rho.matrix()(static_cast<Eigen::Index>(x.index), static_cast<Eigen::Index>(y.index)) * std::conj(ay)).real();
            }
        }
        result[o] = p;
    }
    return result;
}

} // namespace hyperent::oracle
