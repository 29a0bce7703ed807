#include "hyperent/apparatus.hpp"

#include <algorithm>
#include <cmath>

namespace hyperent {

std::string to_string(TimeTag t)
{
    switch (t) {
    case TimeTag::Central: return "central";
    case TimeTag::EarlySide: return "early-side";
    case TimeTag::LateSide: return "late-side";
    default: return "n/a";
    }
}

void FransonInterferometer::validate() const
{
    if (!(delay > 0.0)) throw RangeError("Franson delay must be positive");
    if (!(bs_transmittance > 0.0 && bs_transmittance < 1.0)) throw RangeError("beamsplitter transmittance must lie in (0,1)");
}

void PolarizationAnalyzer::validate() const
{
    if (!(pbs_extinction >= 0.0 && pbs_extinction < 1.0)) throw RangeError("PBS extinction must lie in [0,1)");
}

void PathStation::validate() const
{
    if (!(bs_transmittance > 0.0 && bs_transmittance < 1.0)) throw RangeError("beamsplitter transmittance must lie in (0,1)");
}

// ---------------------------------------------------------------------------

void OutcomeDistribution::add(const std::string& det_a, const std::string& det_b, TimeTag tag, double p)
{
    entries_[{det_a, det_b, tag}] += p;
}

void OutcomeDistribution::add_single(const std::string& det, double p) { singles_[det] += p; }

double OutcomeDistribution::probability(const std::string& det_a, const std::string& det_b, TimeTag tag) const
{
    auto it = entries_.find({det_a, det_b, tag});
    return it == entries_.end() ? 0.0 : it->second;
}

double OutcomeDistribution::coincidence(const std::string& x, const std::string& y, TimeTag tag) const
{
    if (x == y) return probability(x, y, tag);
    return probability(x, y, tag) + probability(y, x, tag);
}

double OutcomeDistribution::single(const std::string& det) const
{
    auto it = singles_.find(det);
    return it == singles_.end() ? 0.0 : it->second;
}

double OutcomeDistribution::total() const
{
    double t = 0.0;
    for (const auto& [k, p] : entries_) t += p;
    return t;
}

// ---------------------------------------------------------------------------

Eigen::Matrix2cd hwp_jones(double angle)
{
    const double c = std::cos(2.0 * angle);
    const double s = std::sin(2.0 * angle);
    Eigen::Matrix2cd m;
    m << c, s, s, -c;
    return m;
}

Eigen::Matrix2cd analyzer_matrix(const PolarizationAnalyzer& analyzer)
{
    analyzer.validate();
    const double keep = std::sqrt(1.0 - analyzer.pbs_extinction);
    const double leak = std::sqrt(analyzer.pbs_extinction);
    Eigen::Matrix2cd pbs;
    pbs << keep, leak, leak, -keep;
    return pbs * hwp_jones(analyzer.hwp_angle);
}

// ---------------------------------------------------------------------------
// Exact evaluation engine

namespace {

TimeTag tag_for(TimeBin a, TimeBin b)
{
    if (a == TimeBin::None && b == TimeBin::None) return TimeTag::NotApplicable;
    if (a == b) return TimeTag::Central;
    // Bob's photon took the long arm: it arrives later.
    return a == TimeBin::S ? TimeTag::LateSide : TimeTag::EarlySide;
}

struct Contribution {
    TimeBin arm_a;
    TimeBin arm_b;
    double delay_diff;
    Eigen::VectorXcd amp;
};

struct EventKey {
    std::string det_a, mode_a, det_b, mode_b;
    TimeTag tag;
    auto operator<=>(const EventKey&) const = default;
};

struct SingleKey {
    std::string det, mode;
    auto operator<=>(const SingleKey&) const = default;
};

struct SingleContribution {
    TimeBin arm;
    double delay;
    Eigen::VectorXcd amp;
};

double quadratic(const Eigen::VectorXcd& x, const Eigen::MatrixXcd& m, const Eigen::VectorXcd& y)
{
    // x^T m conj(y)
    return (x.transpose() * m * y.conjugate())(0, 0).real();
}

template <class T>
T& find_or_add(std::vector<T>& list, const std::function<bool(const T&)>& same, const std::function<T()>& make)
{
    for (auto& c : list)
        if (same(c)) return c;
    list.push_back(make());
    return list.back();
}

void accumulate_singles(const DensityOperator& rho, Photon which, const PhotonRouting& route, const CoherenceModel& coherence,
                        OutcomeDistribution& out)
{
    const auto n = static_cast<Eigen::Index>(rho.dim());
    const Photon other = which == Photon::A ? Photon::B : Photon::A;
    // Partial trace over the other photon: keep rho_ij only where its labels agree.
    Eigen::MatrixXcd reduced = rho.matrix();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (rho.basis()[static_cast<std::size_t>(i)].of(other) != rho.basis()[static_cast<std::size_t>(j)].of(other))
                reduced(i, j) = 0.0;

    std::map<SingleKey, std::vector<SingleContribution>> events;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (const auto& e : route(rho.basis()[static_cast<std::size_t>(i)].of(which))) {
            auto& list = events[{e.detector, e.mode}];
            auto& c = find_or_add<SingleContribution>(
                list, [&](const SingleContribution& s) { return s.arm == e.arm && s.delay == e.delay; },
                [&] { return SingleContribution{e.arm, e.delay, Eigen::VectorXcd::Zero(n)}; });
            c.amp(i) += e.amplitude;
        }
    }
    for (const auto& [key, list] : events) {
        double p = 0.0;
        for (const auto& c1 : list)
            for (const auto& c2 : list) {
                const bool coherent = c1.arm == c2.arm && std::abs(c1.delay - c2.delay) < coherence.coherence_time;
                if (coherent) p += quadratic(c1.amp, reduced, c2.amp);
            }
        out.add_single(key.det, std::max(p, 0.0));
    }
}

} // namespace

OutcomeDistribution propagate(const DensityOperator& rho, const PhotonRouting& route_a, const PhotonRouting& route_b,
                              const CoherenceModel& coherence)
{
    if (!(coherence.coherence_time > 0.0)) throw RangeError("coherence time must be positive");
    if (!(coherence.time_coherence >= 0.0 && coherence.time_coherence <= 1.0)) throw RangeError("time coherence must lie in [0,1]");

    const auto n = static_cast<Eigen::Index>(rho.dim());
    std::map<ModeLabel, std::vector<PortAmplitude>> cache_a;
    std::map<ModeLabel, std::vector<PortAmplitude>> cache_b;
    auto routed = [](auto& cache, const PhotonRouting& route, const ModeLabel& m) -> const std::vector<PortAmplitude>& {
        auto it = cache.find(m);
        if (it == cache.end()) it = cache.emplace(m, route(m)).first;
        return it->second;
    };

    std::map<EventKey, std::vector<Contribution>> events;
    for (Eigen::Index i = 0; i < n; ++i) {
        const PairLabel& label = rho.basis()[static_cast<std::size_t>(i)];
        const auto& ra = routed(cache_a, route_a, label.a);
        const auto& rb = routed(cache_b, route_b, label.b);
        for (const auto& ea : ra) {
            for (const auto& eb : rb) {
                const EventKey key{ea.detector, ea.mode, eb.detector, eb.mode, tag_for(ea.arm, eb.arm)};
                const double dd = ea.delay - eb.delay;
                auto& c = find_or_add<Contribution>(
                    events[key], [&](const Contribution& x) { return x.arm_a == ea.arm && x.arm_b == eb.arm && x.delay_diff == dd; },
                    [&] { return Contribution{ea.arm, eb.arm, dd, Eigen::VectorXcd::Zero(n)}; });
                c.amp(i) += ea.amplitude * eb.amplitude;
            }
        }
    }

    OutcomeDistribution out;
    for (const auto& [key, list] : events) {
        double p = 0.0;
        for (const auto& c1 : list) {
            for (const auto& c2 : list) {
                double gamma = 1.0;
                if (&c1 != &c2) {
                    gamma = std::abs(c1.delay_diff - c2.delay_diff) < coherence.coherence_time ? 1.0 : 0.0;
                    if (c1.arm_a != c2.arm_a || c1.arm_b != c2.arm_b) gamma *= coherence.time_coherence;
                }
                if (gamma != 0.0) p += gamma * quadratic(c1.amp, rho.matrix(), c2.amp);
            }
        }
        out.add(key.det_a, key.det_b, key.tag, std::max(p, 0.0));
    }
    accumulate_singles(rho, Photon::A, route_a, coherence, out);
    accumulate_singles(rho, Photon::B, route_b, coherence, out);
    return out;
}

// ---------------------------------------------------------------------------
// Franson

namespace {

void require_no_timebins(const DensityOperator& rho, const char* station)
{
    if (rho.has_timebins()) throw BasisError(std::string(station) + " expects a state without time-bin labels");
}

PhotonRouting franson_routing(const FransonInterferometer& mzi, const std::optional<PolarizationAnalyzer>& analyzer, bool alice)
{
    mzi.validate();
    const double t = std::sqrt(mzi.bs_transmittance);
    const cd r{0.0, std::sqrt(1.0 - mzi.bs_transmittance)};
    const cd long_phase = std::polar(1.0, mzi.phase);
    std::optional<Eigen::Matrix2cd> jones;
    if (analyzer) jones = analyzer_matrix(*analyzer);

    struct Port {
        int index;
        cd short_amp;
        cd long_amp;
    };
    std::vector<Port> ports;
    if (mzi.monitored != MonitoredPort::Secondary) ports.push_back({0, t * t, r * r * long_phase});
    if (mzi.monitored != MonitoredPort::Primary) ports.push_back({1, t * r, r * t * long_phase});

    return [=](const ModeLabel& in) {
        std::vector<PortAmplitude> out;
        if (in.timebin != TimeBin::None) throw BasisError("Franson input already carries a time bin");
        if (in.core != mzi.core) return out;
        for (const auto& port : ports) {
            for (const auto& [arm, amp, delay] :
                 {std::tuple{TimeBin::S, port.short_amp, 0.0}, std::tuple{TimeBin::L, port.long_amp, mzi.delay}}) {
                if (jones) {
                    const int col = in.pol == Pol::H ? 0 : 1;
                    for (int k = 0; k < 2; ++k) {
                        const cd c = amp * (*jones)(k, col);
                        if (c == cd{}) continue;
                        const int det = 1 + 4 * port.index + (alice ? 0 : 2) + k;
                        out.push_back({"D" + std::to_string(det), "", arm, delay, c});
                    }
                } else {
                    const std::string det = std::string(alice ? "A" : "B") + std::to_string(port.index + 1);
                    out.push_back({det, to_string(in.pol), arm, delay, amp});
                }
            }
        }
        return out;
    };
}

} // namespace

OutcomeDistribution franson_pair_distribution(const DensityOperator& rho, const FransonInterferometer& alice,
                                              const FransonInterferometer& bob, const FransonOptions& options)
{
    require_no_timebins(rho, "Franson interferometer");
    return propagate(rho, franson_routing(alice, options.analyzer_a, true), franson_routing(bob, options.analyzer_b, false),
                     options.coherence);
}

// ---------------------------------------------------------------------------
// Polarization

PolarizationProbs polarization_coincidence_probs(const DensityOperator& rho, const PolarizationAnalyzer& alice,
                                                 const PolarizationAnalyzer& bob)
{
    auto routing = [](const PolarizationAnalyzer& an, bool is_alice) -> PhotonRouting {
        const Eigen::Matrix2cd m = analyzer_matrix(an);
        return [m, is_alice](const ModeLabel& in) {
            std::vector<PortAmplitude> out;
            const int col = in.pol == Pol::H ? 0 : 1;
            const std::string residual = in.core + "/" + to_string(in.timebin);
            for (int k = 0; k < 2; ++k)
                if (m(k, col) != cd{})
                    out.push_back({"D" + std::to_string((is_alice ? 1 : 3) + k), residual, in.timebin, 0.0, m(k, col)});
            return out;
        };
    };
    const auto dist = propagate(rho, routing(alice, true), routing(bob, false), CoherenceModel{});
    // Time bins, if present, only select the event's tag; sum them all.
    PolarizationProbs p;
    for (const auto& [key, prob] : dist.entries()) {
        const auto& [a, b, tag] = key;
        if (a == "D1" && b == "D3") p.hh += prob;
        if (a == "D1" && b == "D4") p.hv += prob;
        if (a == "D2" && b == "D3") p.vh += prob;
        if (a == "D2" && b == "D4") p.vv += prob;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Path station

OutcomeDistribution path_station_distribution(const DensityOperator& rho, const PathStation& station,
                                              const CoherenceModel& coherence)
{
    station.validate();
    require_no_timebins(rho, "path station");
    const double t = std::sqrt(station.bs_transmittance);
    const cd r{0.0, std::sqrt(1.0 - station.bs_transmittance)};
    const cd piezo = std::polar(1.0, station.piezo_phase + station.intrinsic_phase);

    PhotonRouting routing = [=](const ModeLabel& in) {
        std::vector<PortAmplitude> out;
        cd amp{1.0, 0.0};
        std::string residual = to_string(in.pol);
        if (station.pbs_prefilter) {
            amp = in.pol == Pol::H ? std::cos(station.prefilter_axis) : std::sin(station.prefilter_axis);
            residual = "P";
            if (std::abs(amp) < 1e-15) return out;
        }
        double delay = 0.0;
        if (auto it = station.length_offsets.find(in.core); it != station.length_offsets.end()) delay = it->second;

        auto emit = [&](const char* first, const char* second, cd a_first, cd a_second) {
            out.push_back({first, residual, TimeBin::None, delay, amp * a_first});
            out.push_back({second, residual, TimeBin::None, delay, amp * a_second});
        };
        if (in.core == station.alice_cores[0])
            emit("D1", "D2", t, r);
        else if (in.core == station.alice_cores[1])
            emit("D1", "D2", piezo * r, piezo * t);
        else if (in.core == station.bob_cores[0])
            emit("D3", "D4", t, r);
        else if (in.core == station.bob_cores[1])
            emit("D3", "D4", r, t);
        return out;
    };
    return propagate(rho, routing, routing, coherence);
}

OutcomeDistribution path_basis_distribution(const DensityOperator& rho, const std::vector<std::string>& cores)
{
    PhotonRouting routing = [cores](const ModeLabel& in) {
        std::vector<PortAmplitude> out;
        if (std::find(cores.begin(), cores.end(), in.core) != cores.end())
            out.push_back({"C" + in.core, to_string(in.pol) + to_string(in.timebin), in.timebin, 0.0, cd{1.0, 0.0}});
        return out;
    };
    return propagate(rho, routing, routing, CoherenceModel{});
}

} // namespace hyperent
