#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hyperent/apparatus.hpp"
#include "hyperent/channel.hpp"
#include "hyperent/config.hpp"
#include "hyperent/source.hpp"
#include "test_util.hpp"

using namespace hyperent;

namespace {

const double kPi = std::numbers::pi;

DensityOperator ideal_rho(int n = 4) { return DensityOperator::from_pure(build_target_state(n, 0.0, kPi)); }

double max_abs_diff(const DensityOperator& x, const DensityOperator& y)
{
    REQUIRE(x.basis() == y.basis());
    return (x.matrix() - y.matrix()).cwiseAbs().maxCoeff();
}

// Every probability the three stations report, flattened.
std::vector<double> all_station_probs(const DensityOperator& rho)
{
    std::vector<double> out;
    auto take = [&](const OutcomeDistribution& d) {
        for (const auto& [k, p] : d.entries()) out.push_back(p);
    };
    FransonOptions fo;
    fo.analyzer_a = PolarizationAnalyzer{kPi / 8};
    fo.analyzer_b = PolarizationAnalyzer{kPi / 8};
    take(franson_pair_distribution(rho, {"1", 1.2e-9, 0.4}, {"1'", 1.2e-9, 1.1}, fo));
    take(franson_pair_distribution(rho, {"2", 1.2e-9, 0.0}, {"2'", 1.2e-9, 2.0}, fo));
    PathStation ps;
    ps.piezo_phase = 0.7;
    take(path_station_distribution(rho, ps));
    const auto pol = polarization_coincidence_probs(rho, {0.3}, {1.2});
    out.insert(out.end(), {pol.hh, pol.hv, pol.vh, pol.vv});
    return out;
}

} // namespace

TEST_CASE("standard layout has 19 cores in a center and two rings")
{
    const auto& layout = FiberLayout::standard19();
    REQUIRE(layout.size() == 19);
    int rings[3] = {0, 0, 0};
    for (const auto& c : layout.cores()) {
        REQUIRE(c.ring >= 0);
        REQUIRE(c.ring <= 2);
        ++rings[c.ring];
    }
    CHECK(rings[0] == 1);
    CHECK(rings[1] == 6);
    CHECK(rings[2] == 12);
    CHECK(layout.site("0").ring == 0);
    for (const char* c : {"1", "2", "5"}) CHECK(layout.site(c).ring == 1);
    for (const char* c : {"3", "4", "6", "7", "8", "9"}) CHECK(layout.site(c).ring == 2);

    // 3 and 4 are adjacent on the outer ring.
    const auto& s3 = layout.site("3");
    const auto& s4 = layout.site("4");
    CHECK(std::hypot(s3.x() - s4.x(), s3.y() - s4.y()) == doctest::Approx(1.0));
    CHECK_THROWS_AS(layout.index("10"), LayoutError);
}

TEST_CASE("opposite core")
{
    CHECK(opposite_core("1") == "1'");
    CHECK(opposite_core("1'") == "1");
    CHECK(opposite_core("4") == "4'");
    CHECK(opposite_core("0") == "0");
    CHECK_THROWS_AS(opposite_core("x"), LayoutError);

    const auto& layout = FiberLayout::standard19();
    for (const auto& c : layout.cores()) {
        const auto o = opposite_core(c.name);
        CHECK(opposite_core(o) == c.name);
        const auto& s = layout.site(o);
        CHECK(s.x() == doctest::Approx(-c.x()));
        CHECK(s.y() == doctest::Approx(-c.y()));
    }
}

TEST_CASE("fiber spec validation")
{
    FiberSpec f;
    CHECK_NOTHROW(f.validate());
    f.loss_db["12"] = 1.0;
    CHECK_THROWS_AS(f.validate(), LayoutError);

    FiberSpec g;
    g.crosstalk = Eigen::MatrixXcd::Identity(19, 19);
    CHECK_NOTHROW(g.validate());
    g.crosstalk(1, 0) = 0.5;  // column power 1.25
    CHECK_THROWS_AS(g.validate(), LayoutError);

    // Unit columns that are not orthogonal still amplify some superposition.
    FiberSpec h;
    h.crosstalk = Eigen::MatrixXcd::Identity(19, 19);
    h.crosstalk(0, 0) = h.crosstalk(1, 1) = std::sqrt(0.5);
    h.crosstalk(1, 0) = h.crosstalk(0, 1) = std::sqrt(0.5);
    CHECK_THROWS_AS(h.validate(), LayoutError);

    FiberSpec wrong;
    wrong.crosstalk = Eigen::MatrixXcd::Identity(4, 4);
    CHECK_THROWS_AS(wrong.validate(), LayoutError);
}

TEST_CASE("transmit with no impairments is the identity")
{
    const auto rho = ideal_rho();
    CHECK(max_abs_diff(transmit(rho, FiberSpec{}), rho) < 1e-12);
}

TEST_CASE("3 dB on every core scales the two-photon trace by 10^(-0.6)")
{
    FiberSpec f;
    for (const auto& c : FiberLayout::standard19().cores()) f.loss_db[c.name] = 3.0;
    const auto rho = ideal_rho();
    const auto out = transmit(rho, f);
    // Direct computation: each amplitude picks up 10^(-3/20) per photon.
    const double per_photon = std::pow(10.0, -3.0 / 20.0);
    CHECK(std::abs(out.trace() - std::pow(per_photon, 4)) < 1e-9);
    CHECK(std::abs(out.trace() - 0.2511886431509580) < 1e-9);
    CHECK((out.matrix() - per_photon * per_photon * per_photon * per_photon * rho.matrix()).norm() < 1e-12);
}

TEST_CASE("pi phase on core 4 shifts the path fringe by pi")
{
    const auto rho = ideal_rho();
    FiberSpec f;
    f.phase["4"] = kPi;
    const auto shifted = transmit(rho, f);

    auto argmax = [](const DensityOperator& r) {
        double best = -1.0;
        double at = 0.0;
        for (int k = 0; k < 64; ++k) {
            PathStation ps;
            ps.piezo_phase = 2.0 * kPi * k / 64;
            const double p = path_station_distribution(r, ps).coincidence("D1", "D3", TimeTag::NotApplicable);
            if (p > best + 1e-12) {
                best = p;
                at = ps.piezo_phase;
            }
        }
        return at;
    };
    const double d = std::remainder(argmax(shifted) - argmax(rho), 2.0 * kPi);
    CHECK(std::abs(std::abs(d) - kPi) < 1e-12);
}

TEST_CASE("unitary-only impairments preserve the trace")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int trial = 0; trial < 50; ++trial) {
        FiberSpec f;
        for (const auto& c : FiberLayout::standard19().cores()) {
            f.phase[c.name] = u(rng);
            f.pol_drift[c.name] = testutil::random_unitary(2, rng);
        }
        const auto rho = testutil::random_density(rng);
        CHECK(std::abs(transmit(rho, f).trace() - rho.trace()) < 1e-12);
    }
}

TEST_CASE("lossless neighbour crosstalk preserves the trace")
{
    FiberSpec f;
    f.crosstalk = neighbour_crosstalk(0.05);
    CHECK_NOTHROW(f.validate());
    const auto out = transmit(ideal_rho(), f);
    CHECK(std::abs(out.trace() - 1.0) < 1e-12);
    // Light leaks into neighbouring cores that the source never fed.
    bool leaked = false;
    for (const auto& l : out.basis()) leaked = leaked || l.a.core == "0";
    CHECK(leaked);
}

TEST_CASE("transmit rejects states on cores outside the layout")
{
    TwoPhotonState::Terms t;
    t[{mode("12", Pol::H), mode("1'", Pol::H)}] = 1.0;
    CHECK_THROWS_AS(transmit(DensityOperator::from_pure(TwoPhotonState(t)), FiberSpec{}), LayoutError);
}

TEST_CASE("common phase on all cores leaves every measured probability unchanged")
{
    const auto rho = ideal_rho();
    const auto ref = all_station_probs(rho);
    for (double phi : {0.3, 1.7, -2.9}) {
        FiberSpec f;
        for (const auto& c : FiberLayout::standard19().cores()) f.phase[c.name] = phi;
        const auto got = all_station_probs(transmit(rho, f));
        REQUIRE(got.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(got[k] - ref[k]) < 1e-12);
    }
}

TEST_CASE("polarization drift followed by its inverse restores downstream probabilities")
{
    std::mt19937_64 rng(5);
    const auto rho = ideal_rho();
    const auto ref = all_station_probs(rho);
    for (const char* core : {"1", "1'", "3", "4'"}) {
        const Eigen::Matrix2cd u = testutil::random_unitary(2, rng);
        FiberSpec drift;
        drift.pol_drift[core] = u;
        FiberSpec undo;
        undo.pol_drift[core] = u.adjoint();
        const auto distorted = all_station_probs(transmit(rho, drift));
        const auto got = all_station_probs(transmit(transmit(rho, drift), undo));
        double moved = 0.0;
        for (std::size_t k = 0; k < ref.size(); ++k) {
            CHECK(std::abs(got[k] - ref[k]) < 1e-10);
            moved = std::max(moved, std::abs(distorted[k] - ref[k]));
        }
        CHECK(moved > 1e-3);  // the drift alone is visible
    }
}
