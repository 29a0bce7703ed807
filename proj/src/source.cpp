#include "hyperent/source.hpp"

#include <cmath>
#include <set>

#include "hyperent/random.hpp"

namespace hyperent {

namespace {

void check_weight(double p, const char* name)
{
    if (!(p >= 0.0 && p <= 1.0)) throw RangeError(std::string(name) + " must lie in [0,1]");
}

} // namespace

void SourceConfig::validate() const
{
    if (n_core_pairs < 1 || n_core_pairs > 4) throw RangeError("n_core_pairs must be between 1 and 4");
    if (!(pair_rate > 0.0)) throw RangeError("pair_rate must be positive");
    if (!(coherence_time > 0.0)) throw RangeError("coherence_time must be positive");
    check_weight(dephasing.path, "p_path");
    check_weight(dephasing.time, "p_time");
    check_weight(dephasing.pol, "p_pol");
    check_weight(white_noise, "white_noise");
}

std::string pair_core(int k, Photon which) { return std::to_string(k) + (which == Photon::B ? "'" : ""); }

TwoPhotonState build_target_state(int n_core_pairs, double pol_phase, double inter_pair_phase)
{
    if (n_core_pairs < 1 || n_core_pairs > 4) throw RangeError("n_core_pairs must be between 1 and 4");
    const double amp = 1.0 / std::sqrt(2.0 * n_core_pairs);
    TwoPhotonState::Terms terms;
    for (int k = 1; k <= n_core_pairs; ++k) {
        const cd path_phase = std::polar(1.0, (k - 1) * inter_pair_phase);
        const std::string ca = pair_core(k, Photon::A);
        const std::string cb = pair_core(k, Photon::B);
        terms[{mode(ca, Pol::H), mode(cb, Pol::H)}] = amp * path_phase;
        terms[{mode(ca, Pol::V), mode(cb, Pol::V)}] = amp * path_phase * std::polar(1.0, pol_phase);
    }
    return TwoPhotonState(std::move(terms));
}

DensityOperator apply_isotropic_noise(const TwoPhotonState& state, double p_path, double p_time, double p_pol)
{
    check_weight(p_path, "p_path");
    check_weight(p_time, "p_time");
    check_weight(p_pol, "p_pol");
    const DensityOperator pure = DensityOperator::from_pure(state);
    const auto& basis = pure.basis();
    Eigen::MatrixXcd m = pure.matrix();
    for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = 0; j < basis.size(); ++j) {
            const auto& x = basis[i];
            const auto& y = basis[j];
            double f = 1.0;
            if (x.a.core != y.a.core || x.b.core != y.b.core) f *= 1.0 - p_path;
            if (x.a.timebin != y.a.timebin || x.b.timebin != y.b.timebin) f *= 1.0 - p_time;
            if (x.a.pol != y.a.pol || x.b.pol != y.b.pol) f *= 1.0 - p_pol;
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *= f;
        }
    }
    return DensityOperator(basis, std::move(m));
}

DensityOperator apply_white_noise(const DensityOperator& rho, double p)
{
    check_weight(p, "white_noise");
    if (p == 0.0) return rho;
    std::set<std::pair<std::string, std::string>> paths;
    std::set<TimeBin> bins_a;
    std::set<TimeBin> bins_b;
    for (const auto& l : rho.basis()) {
        paths.emplace(l.a.core, l.b.core);
        bins_a.insert(l.a.timebin);
        bins_b.insert(l.b.timebin);
    }
    std::vector<PairLabel> basis;
    for (const auto& [ca, cb] : paths)
        for (TimeBin ta : bins_a)
            for (TimeBin tb : bins_b)
                for (Pol pa : {Pol::H, Pol::V})
                    for (Pol pb : {Pol::H, Pol::V}) basis.push_back({mode(ca, pa, ta), mode(cb, pb, tb)});
    return mix(rho.embedded(basis), DensityOperator::maximally_mixed(basis), 1.0 - p);
}

HyperState prepare_source(const SourceConfig& config)
{
    config.validate();
    TwoPhotonState pure = build_target_state(config.n_core_pairs, config.pol_phase, config.inter_pair_phase);
    DensityOperator rho = apply_isotropic_noise(pure, config.dephasing.path, 0.0, config.dephasing.pol);
    rho = apply_white_noise(rho, config.white_noise);
    return HyperState{std::move(pure), std::move(rho), 1.0 - config.dephasing.time, EmissionTimeModel::CwUniform};
}

std::uint64_t emission_pair_stream(const SourceConfig& config, double duration, std::uint64_t seed)
{
    if (!(duration > 0.0)) throw RangeError("duration must be positive");
    if (config.pair_rate < 0.0) throw RangeError("pair_rate must be non-negative");
    auto eng = keyed_engine(seed, 0, "emission");
    return poisson_sample(eng, config.pair_rate * duration);
}

} // namespace hyperent
