#include "hyperent/counts.hpp"

#include <algorithm>
#include <cmath>

#include "hyperent/random.hpp"

namespace hyperent {

void DetectorSpec::validate() const
{
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw RangeError("detector " + label + ": efficiency must lie in [0,1]");
    if (!(dark_rate >= 0.0)) throw RangeError("detector " + label + ": dark rate must be non-negative");
}

void CoincidenceConfig::validate() const
{
    if (!(window > 0.0)) throw RangeError("coincidence window must be positive");
    if (!(integration_time > 0.0)) throw RangeError("integration time must be positive");
}

std::vector<DetectorPair> polarization_pairs()
{
    return {{"HH", "D1", "D3"}, {"VV", "D2", "D4"}, {"HV", "D1", "D4"}, {"VH", "D2", "D3"}};
}

std::vector<DetectorPair> path_pairs()
{
    return {{"D1/D3", "D1", "D3"}, {"D2/D4", "D2", "D4"}, {"D1/D4", "D1", "D4"}, {"D2/D3", "D2", "D3"}};
}

std::vector<DetectorSpec> standard_detectors(double efficiency, double dark_rate)
{
    return {{"D1", Photon::A, efficiency, dark_rate},
            {"D2", Photon::A, efficiency, dark_rate},
            {"D3", Photon::B, efficiency, dark_rate},
            {"D4", Photon::B, efficiency, dark_rate}};
}

double ExpectedRates::single(const std::string& det) const
{
    auto it = std::find(detectors.begin(), detectors.end(), det);
    if (it == detectors.end()) throw RangeError("no singles rate for detector " + det);
    return singles[static_cast<std::size_t>(it - detectors.begin())];
}

double accidental_rate(double s1, double s2, double window)
{
    if (s1 < 0.0 || s2 < 0.0 || window < 0.0) throw RangeError("accidental rate inputs must be non-negative");
    return s1 * s2 * window;
}

ExpectedRates expected_rates(const OutcomeDistribution& dist, double pair_rate, double coupling_a, double coupling_b,
                             const std::vector<DetectorSpec>& detectors, const std::vector<DetectorPair>& pairs,
                             TimeTag tag, double window)
{
    if (!(coupling_a >= 0.0 && coupling_a <= 1.0) || !(coupling_b >= 0.0 && coupling_b <= 1.0))
        throw RangeError("coupling efficiencies must lie in [0,1]");
    if (pair_rate < 0.0) throw RangeError("pair rate must be non-negative");

    ExpectedRates out;
    std::map<std::string, double> eta;
    for (const auto& d : detectors) {
        d.validate();
        const double e = d.efficiency * (d.arm == Photon::A ? coupling_a : coupling_b);
        eta[d.label] = e;
        out.detectors.push_back(d.label);
        out.singles.push_back(pair_rate * e * dist.single(d.label) + d.dark_rate);
    }
    for (const auto& p : pairs) {
        const auto ea = eta.find(p.first);
        const auto eb = eta.find(p.second);
        if (ea == eta.end() || eb == eta.end()) throw RangeError("pair " + p.label + " references an unknown detector");
        PairRate r{p, pair_rate * ea->second * eb->second * dist.coincidence(p.first, p.second, tag),
                   accidental_rate(out.single(p.first), out.single(p.second), window)};
        out.pairs.push_back(std::move(r));
    }
    return out;
}

const PairCounts& CountRecord::pair(const std::string& label) const
{
    for (const auto& p : pairs)
        if (p.label == label) return p;
    throw RangeError("no counts for pair " + label);
}

CountRecord sample_counts(const ExpectedRates& rates, double integration_time, std::uint64_t seed, std::uint64_t scan_index,
                          double window)
{
    if (!(integration_time > 0.0)) throw RangeError("integration time must be positive");
    CountRecord rec;
    rec.integration_time = integration_time;
    rec.detectors = rates.detectors;
    for (std::size_t k = 0; k < rates.detectors.size(); ++k) {
        auto eng = keyed_engine(seed, scan_index, "single:" + rates.detectors[k]);
        rec.singles.push_back(static_cast<double>(poisson_sample(eng, rates.singles[k] * integration_time)));
    }
    auto measured_single = [&](const std::string& det) {
        auto it = std::find(rec.detectors.begin(), rec.detectors.end(), det);
        return rec.singles[static_cast<std::size_t>(it - rec.detectors.begin())];
    };
    for (const auto& pr : rates.pairs) {
        auto eng = keyed_engine(seed, scan_index, "pair:" + pr.pair.label);
        PairCounts c;
        c.label = pr.pair.label;
        c.raw = static_cast<double>(poisson_sample(eng, (pr.signal + pr.accidental) * integration_time));
        const double s1 = measured_single(pr.pair.first) / integration_time;
        const double s2 = measured_single(pr.pair.second) / integration_time;
        c.accidental = accidental_rate(s1, s2, window) * integration_time;
        c.net = c.raw;
        c.sigma = std::sqrt(c.raw);
        rec.pairs.push_back(std::move(c));
    }
    return rec;
}

CountRecord expected_counts(const ExpectedRates& rates, double integration_time, double window)
{
    if (!(integration_time > 0.0)) throw RangeError("integration time must be positive");
    CountRecord rec;
    rec.integration_time = integration_time;
    rec.detectors = rates.detectors;
    for (double s : rates.singles) rec.singles.push_back(s * integration_time);
    for (const auto& pr : rates.pairs) {
        PairCounts c;
        c.label = pr.pair.label;
        c.raw = (pr.signal + pr.accidental) * integration_time;
        c.accidental = accidental_rate(rates.single(pr.pair.first), rates.single(pr.pair.second), window) * integration_time;
        c.net = c.raw;
        c.sigma = std::sqrt(c.raw);
        rec.pairs.push_back(std::move(c));
    }
    return rec;
}

CountRecord subtract_accidentals(const CountRecord& record)
{
    CountRecord out = record;
    for (auto& c : out.pairs) {
        const double net = c.raw - c.accidental;
        c.clamped = net < 0.0;
        c.net = std::max(net, 0.0);
        c.sigma = std::sqrt(c.raw + c.accidental);
    }
    return out;
}

} // namespace hyperent
