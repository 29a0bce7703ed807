#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hyperent/apparatus.hpp"
#include "hyperent/channel.hpp"
#include "hyperent/oracle.hpp"
#include "hyperent/source.hpp"
#include "test_util.hpp"

using namespace hyperent;

namespace {

const double kPi = std::numbers::pi;

DensityOperator bell() { return DensityOperator::from_pure(build_target_state(1)); }

// (|33'> - |44'>)/sqrt(2), horizontal polarization on both photons.
DensityOperator path_bell()
{
    TwoPhotonState::Terms t;
    t[{mode("3", Pol::H), mode("3'", Pol::H)}] = 1.0 / std::sqrt(2.0);
    t[{mode("4", Pol::H), mode("4'", Pol::H)}] = -1.0 / std::sqrt(2.0);
    return DensityOperator::from_pure(TwoPhotonState(t));
}

double central(const OutcomeDistribution& d, const char* a, const char* b) { return d.probability(a, b, TimeTag::Central); }

double path_p(const DensityOperator& rho, double theta, const char* a, const char* b, const CoherenceModel& coh = {})
{
    PathStation ps;
    ps.piezo_phase = theta;
    return path_station_distribution(rho, ps, coh).probability(a, b, TimeTag::NotApplicable);
}

} // namespace

TEST_CASE("half-wave plate Jones matrix")
{
    const Eigen::Matrix2cd z = hwp_jones(0.0);
    CHECK(std::abs(z(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(z(1, 1) + 1.0) < 1e-15);
    CHECK(std::abs(z(0, 1)) < 1e-15);

    const Eigen::Matrix2cd d = hwp_jones(kPi / 8);
    const double s = 1.0 / std::sqrt(2.0);
    // H -> D, V -> A
    CHECK(std::abs(d(0, 0) - s) < 1e-15);
    CHECK(std::abs(d(1, 0) - s) < 1e-15);
    CHECK(std::abs(d(0, 1) - s) < 1e-15);
    CHECK(std::abs(d(1, 1) + s) < 1e-15);

    const Eigen::Matrix2cd w = hwp_jones(kPi / 4);
    CHECK(std::abs(w(1, 0) - 1.0) < 1e-15);
    CHECK(std::abs(w(0, 1) - 1.0) < 1e-15);

    for (double a : {0.1, 0.7, 2.3}) {
        const Eigen::Matrix2cd m = hwp_jones(a);
        CHECK((m * m.adjoint() - Eigen::Matrix2cd::Identity()).norm() < 1e-14);
        CHECK((m - m.adjoint()).norm() < 1e-15);
    }
}

TEST_CASE("Franson central bin and side peaks")
{
    const auto rho = bell();
    FransonInterferometer a{"1", 1.2e-9, 0.0};
    FransonInterferometer b{"1'", 1.2e-9, 0.0};

    SUBCASE("matched phases give 1/4 at the monitored ports")
    {
        const auto d = franson_pair_distribution(rho, a, b);
        CHECK(central(d, "A1", "B1") == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(d.probability("A1", "B1", TimeTag::EarlySide) == doctest::Approx(1.0 / 16).epsilon(1e-12));
        CHECK(d.probability("A1", "B1", TimeTag::LateSide) == doctest::Approx(1.0 / 16).epsilon(1e-12));
    }
    SUBCASE("total phase pi is fully destructive")
    {
        a.phase = 1.0;
        b.phase = kPi - 1.0;
        CHECK(std::abs(central(franson_pair_distribution(rho, a, b), "A1", "B1")) < 1e-15);
    }
    SUBCASE("fringe follows (1/8)(1 + cos(phi_A + phi_B))")
    {
        for (double phi : {0.3, 1.1, 2.5, 4.0}) {
            b.phase = phi;
            CHECK(central(franson_pair_distribution(rho, a, b), "A1", "B1") ==
                  doctest::Approx((1 + std::cos(phi)) / 8).epsilon(1e-12));
        }
    }
    SUBCASE("full energy-time dephasing flattens the central bin at 1/8")
    {
        FransonOptions o;
        o.coherence.time_coherence = 0.0;
        for (double phi : {0.0, 1.0, kPi}) {
            b.phase = phi;
            CHECK(central(franson_pair_distribution(rho, a, b, o), "A1", "B1") == doctest::Approx(0.125).epsilon(1e-12));
        }
    }
    SUBCASE("delay mismatch beyond the coherence time removes the fringe")
    {
        b.delay = 1.2e-9 + 10e-12;
        for (double phi : {0.0, kPi}) {
            b.phase = phi;
            CHECK(central(franson_pair_distribution(rho, a, b), "A1", "B1") == doctest::Approx(0.125).epsilon(1e-12));
        }
    }
    SUBCASE("with analyzers each polarization-compatible term carries half")
    {
        FransonOptions o;
        o.analyzer_a = PolarizationAnalyzer{0.0};
        o.analyzer_b = PolarizationAnalyzer{0.0};
        b.phase = 0.8;
        const auto d = franson_pair_distribution(rho, a, b, o);
        CHECK(central(d, "D1", "D3") == doctest::Approx((1 + std::cos(0.8)) / 16).epsilon(1e-12));
        CHECK(central(d, "D2", "D4") == doctest::Approx((1 + std::cos(0.8)) / 16).epsilon(1e-12));
        CHECK(std::abs(central(d, "D1", "D4")) < 1e-15);
    }
    SUBCASE("beamsplitter transmittance outside (0,1) is rejected")
    {
        a.bs_transmittance = 1.0;
        CHECK_THROWS_AS(franson_pair_distribution(rho, a, b), RangeError);
        a.bs_transmittance = 0.0;
        CHECK_THROWS_AS(franson_pair_distribution(rho, a, b), RangeError);
    }
}

TEST_CASE("Franson engine agrees with amplitude enumeration")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 2 * kPi);
    const auto rho = bell();
    for (int k = 0; k < 100; ++k) {
        const double pa = u(rng);
        const double pb = u(rng);
        const auto d = franson_pair_distribution(rho, {"1", 1.2e-9, pa}, {"1'", 1.2e-9, pb});
        const auto bins = oracle::franson_ideal(pa, pb);
        CHECK(std::abs(central(d, "A1", "B1") - bins.central) < 1e-12);
        CHECK(std::abs(d.probability("A1", "B1", TimeTag::EarlySide) - bins.early) < 1e-12);
        CHECK(std::abs(d.probability("A1", "B1", TimeTag::LateSide) - bins.late) < 1e-12);
    }
    for (int k = 0; k < 50; ++k) {
        const auto r = testutil::random_density(rng, 2);
        const double pa = u(rng), pb = u(rng), ha = u(rng), hb = u(rng);
        const double gamma = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        FransonOptions o;
        o.analyzer_a = PolarizationAnalyzer{ha};
        o.analyzer_b = PolarizationAnalyzer{hb};
        o.coherence.time_coherence = gamma;
        const auto d = franson_pair_distribution(r, {"1", 1.2e-9, pa}, {"1'", 1.2e-9, pb}, o);
        const auto want = oracle::franson_central(r, "1", "1'", pa, pb, ha, hb, gamma);
        CHECK(std::abs(central(d, "D1", "D3") - want[0]) < 1e-12);
        CHECK(std::abs(central(d, "D2", "D4") - want[1]) < 1e-12);
        CHECK(std::abs(central(d, "D1", "D4") - want[2]) < 1e-12);
        CHECK(std::abs(central(d, "D2", "D3") - want[3]) < 1e-12);
    }
}

TEST_CASE("Franson with both ports monitored conserves probability")
{
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
        const auto r = testutil::random_density(rng, 2, {"1"}, {"1'"});
        FransonInterferometer a{"1", 1.2e-9, 0.4, 0.3, MonitoredPort::Both};
        FransonInterferometer b{"1'", 1.2e-9, 2.1, 0.65, MonitoredPort::Both};
        CHECK(franson_pair_distribution(r, a, b).total() == doctest::Approx(r.trace()).epsilon(1e-10));
        FransonOptions o;
        o.analyzer_a = PolarizationAnalyzer{0.3};
        o.analyzer_b = PolarizationAnalyzer{1.0};
        o.coherence.time_coherence = 0.4;
        CHECK(franson_pair_distribution(r, a, b, o).total() == doctest::Approx(r.trace()).epsilon(1e-10));
    }
}

TEST_CASE("Franson distribution depends only on the phase sum")
{
    std::mt19937_64 rng(3);
    const auto r = testutil::random_density(rng, 2);
    FransonOptions o;
    o.analyzer_a = PolarizationAnalyzer{0.2};
    o.analyzer_b = PolarizationAnalyzer{0.9};
    const auto ref = franson_pair_distribution(r, {"1", 1.2e-9, 0.5}, {"1'", 1.2e-9, 1.3}, o);
    for (double delta : {0.1, 1.0, -2.2}) {
        const auto got = franson_pair_distribution(r, {"1", 1.2e-9, 0.5 + delta}, {"1'", 1.2e-9, 1.3 - delta}, o);
        for (const auto& [key, p] : ref.entries()) {
            const auto& [da, db, tag] = key;
            CHECK(std::abs(got.probability(da, db, tag) - p) < 1e-12);
        }
    }
}

TEST_CASE("polarization coincidence probabilities")
{
    const auto rho = bell();
    const double da = kPi / 8;
    auto check = [](const PolarizationProbs& p, double hh, double hv, double vh, double vv) {
        CHECK(p.hh == doctest::Approx(hh).epsilon(1e-12));
        CHECK(p.hv == doctest::Approx(hv).epsilon(1e-12));
        CHECK(p.vh == doctest::Approx(vh).epsilon(1e-12));
        CHECK(p.vv == doctest::Approx(vv).epsilon(1e-12));
    };
    check(polarization_coincidence_probs(rho, {0.0}, {0.0}), 0.5, 0, 0, 0.5);
    check(polarization_coincidence_probs(rho, {da}, {da}), 0.5, 0, 0, 0.5);
    check(polarization_coincidence_probs(rho, {0.0}, {da}), 0.25, 0.25, 0.25, 0.25);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, kPi);
    for (int k = 0; k < 50; ++k) {
        const auto r = testutil::random_density(rng);
        const double a = u(rng), b = u(rng);
        const auto p = polarization_coincidence_probs(r, {a}, {b});
        CHECK(p.sum() == doctest::Approx(r.trace()).epsilon(1e-12));
        const auto q = polarization_coincidence_probs(r, {a + kPi / 2}, {b - kPi / 2});
        CHECK(std::abs(p.hh - q.hh) < 1e-12);
        CHECK(std::abs(p.hv - q.hv) < 1e-12);
        CHECK(std::abs(p.vh - q.vh) < 1e-12);
        CHECK(std::abs(p.vv - q.vv) < 1e-12);
    }
}

TEST_CASE("imperfect PBS leaks into the wrong port")
{
    const auto p = polarization_coincidence_probs(bell(), {0.0, 0.1}, {0.0, 0.0});
    CHECK(p.hh == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(p.vh == doctest::Approx(0.05).epsilon(1e-12));
    CHECK_THROWS_AS(PolarizationAnalyzer({0.0, 1.0}).validate(), RangeError);
}

TEST_CASE("path station fringe")
{
    const auto rho = path_bell();
    for (double theta : {0.0, 0.4, 1.9, kPi, 5.0}) {
        CHECK(path_p(rho, theta, "D1", "D3") == doctest::Approx((1 + std::cos(theta)) / 4).epsilon(1e-12));
        CHECK(path_p(rho, theta, "D2", "D4") == doctest::Approx((1 + std::cos(theta)) / 4).epsilon(1e-12));
        CHECK(path_p(rho, theta, "D1", "D4") == doctest::Approx((1 - std::cos(theta)) / 4).epsilon(1e-12));
        CHECK(path_p(rho, theta, "D2", "D3") == doctest::Approx((1 - std::cos(theta)) / 4).epsilon(1e-12));
    }
    // theta = 0 and pi swap the maxima between the two families.
    CHECK(path_p(rho, 0.0, "D1", "D3") == doctest::Approx(0.5));
    CHECK(std::abs(path_p(rho, 0.0, "D1", "D4")) < 1e-15);
    CHECK(std::abs(path_p(rho, kPi, "D1", "D3")) < 1e-15);
    CHECK(path_p(rho, kPi, "D1", "D4") == doctest::Approx(0.5));
}

TEST_CASE("blocking one path input removes the interference")
{
    FiberSpec block;
    block.loss_db["4"] = 1000.0;
    const auto rho = transmit(path_bell(), block);
    for (double theta : {0.0, 1.0, kPi, 4.5})
        for (auto [a, b] : {std::pair{"D1", "D3"}, {"D2", "D4"}, {"D1", "D4"}, {"D2", "D3"}})
            CHECK(path_p(rho, theta, a, b) == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("length offset beyond the coherence time suppresses the path fringe")
{
    PathStation ps;
    ps.length_offsets["4"] = 5e-12;
    for (double theta : {0.0, kPi}) {
        ps.piezo_phase = theta;
        // Incoherent sum of the two paths: (1/2)(1/4) + (1/2)(1/4).
        CHECK(path_station_distribution(path_bell(), ps).probability("D1", "D3", TimeTag::NotApplicable) ==
              doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("path station agrees with amplitude enumeration")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 2 * kPi);
    for (int k = 0; k < 50; ++k) {
        const auto r = testutil::random_density(rng, 3, {"3", "4"}, {"3'", "4'"});
        PathStation ps;
        ps.pbs_prefilter = k % 2 == 0;
        ps.prefilter_axis = u(rng);
        ps.intrinsic_phase = u(rng);
        ps.piezo_phase = u(rng);
        const auto d = path_station_distribution(r, ps);
        const auto want = oracle::path_station(r, ps, CoherenceModel{}.coherence_time);
        CHECK(std::abs(d.probability("D1", "D3", TimeTag::NotApplicable) - want[0]) < 1e-12);
        CHECK(std::abs(d.probability("D2", "D4", TimeTag::NotApplicable) - want[1]) < 1e-12);
        CHECK(std::abs(d.probability("D1", "D4", TimeTag::NotApplicable) - want[2]) < 1e-12);
        CHECK(std::abs(d.probability("D2", "D3", TimeTag::NotApplicable) - want[3]) < 1e-12);
        if (!ps.pbs_prefilter) CHECK(d.total() == doctest::Approx(r.trace()).epsilon(1e-10));
        else CHECK(d.total() <= r.trace() + 1e-12);
    }
}

TEST_CASE("single-side path marginal is flat for core-correlated states")
{
    // Mixtures of sum_k c_k |k, pol> |k', pol'>: photon A alone carries no
    // coherence between cores 3 and 4.
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.0, 2 * kPi);
    for (int k = 0; k < 50; ++k) {
        const auto a = DensityOperator::from_pure(normalize(testutil::add(testutil::random_state(rng, {"3"}, {"3'"}, false),
                                                                          testutil::random_state(rng, {"4"}, {"4'"}, false))));
        const auto b = DensityOperator::from_pure(normalize(testutil::add(testutil::random_state(rng, {"3"}, {"3'"}, false),
                                                                          testutil::random_state(rng, {"4"}, {"4'"}, false))));
        const auto r = mix(a, b, 0.3);
        PathStation ps;
        ps.intrinsic_phase = u(rng);
        double first = -1.0;
        for (int s = 0; s < 8; ++s) {
            ps.piezo_phase = u(rng);
            const auto d = path_station_distribution(r, ps);
            const double m = d.probability("D1", "D3", TimeTag::NotApplicable) + d.probability("D1", "D4", TimeTag::NotApplicable);
            if (first < 0) first = m;
            CHECK(std::abs(m - first) < 1e-10);
        }
    }
}

TEST_CASE("fringe extremes satisfy max + min = 2 mean and V in [0,1]")
{
    std::mt19937_64 rng(21);
    for (int k = 0; k < 20; ++k) {
        const auto r = testutil::random_density(rng, 2, {"3", "4"}, {"3'", "4'"});
        std::vector<double> ys;
        for (int s = 0; s < 3600; ++s) ys.push_back(path_p(r, 2 * kPi * s / 3600, "D1", "D3"));
        const double mx = *std::max_element(ys.begin(), ys.end());
        const double mn = *std::min_element(ys.begin(), ys.end());
        double mean = 0.0;
        for (double y : ys) mean += y / static_cast<double>(ys.size());
        CHECK(mx + mn == doctest::Approx(2 * mean).epsilon(1e-5));
        const double v = (mx - mn) / (mx + mn);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
    }
}
