#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hyperent/hilbert.hpp"
#include "hyperent/source.hpp"
#include "test_util.hpp"

using namespace hyperent;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

TwoPhotonState phi_plus(const std::string& ca = "1", const std::string& cb = "1'")
{
    return TwoPhotonState{{{mode(ca, Pol::H), mode(cb, Pol::H)}, kInvSqrt2}, {{mode(ca, Pol::V), mode(cb, Pol::V)}, kInvSqrt2}};
}

// Sum of |a|^2 written out independently of TwoPhotonState::norm.
double sum_of_squares(const TwoPhotonState& s)
{
    double acc = 0.0;
    for (const auto& [label, a] : s.terms()) acc += a.real() * a.real() + a.imag() * a.imag();
    return acc;
}

} // namespace

TEST_CASE("normalize rescales a single term")
{
    const PairLabel l{mode("1", Pol::H), mode("1'", Pol::H)};
    const auto s = normalize(TwoPhotonState{{l, 2.0}});
    CHECK(std::abs(s.amplitude(l) - cd{1.0, 0.0}) < 1e-15);
    CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("normalize leaves a normalized energy-time x polarization state unchanged")
{
    const double phi = 0.7;
    TwoPhotonState::Terms t;
    for (Pol p : {Pol::H, Pol::V}) {
        t[{mode("1", p, TimeBin::S), mode("1'", p, TimeBin::S)}] = 0.5;
        t[{mode("1", p, TimeBin::L), mode("1'", p, TimeBin::L)}] = 0.5 * std::polar(1.0, phi);
    }
    const TwoPhotonState s(t);
    CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-15));
    const auto n = normalize(s);
    for (const auto& [label, a] : s.terms()) CHECK(std::abs(n.amplitude(label) - a) < 1e-15);
}

TEST_CASE("normalize of a random 8-term state matches a sum-of-squares oracle")
{
    std::mt19937_64 rng(11);
    TwoPhotonState::Terms t;
    int k = 0;
    for (const char* c : {"1", "2", "3", "4"})
        for (Pol p : {Pol::H, Pol::V}) {
            t[{mode(c, p), mode(std::string(c) + "'", p)}] = testutil::random_amplitude(rng) * double(++k);
        }
    const TwoPhotonState s(t);
    REQUIRE(s.size() == 8);
    CHECK(s.norm() == doctest::Approx(sum_of_squares(s)).epsilon(1e-14));
    const auto n = normalize(s);
    CHECK(sum_of_squares(n) == doctest::Approx(1.0).epsilon(1e-14));
    // Ratios preserved.
    const auto first = s.terms().begin()->first;
    for (const auto& [label, a] : s.terms()) CHECK(std::abs(n.amplitude(label) / n.amplitude(first) - a / s.amplitude(first)) < 1e-12);
}

TEST_CASE("normalize rejects a zero state")
{
    CHECK_THROWS_AS(normalize(TwoPhotonState{}), ZeroStateError);
    const PairLabel l{mode("1", Pol::H), mode("1'", Pol::H)};
    CHECK_THROWS_AS(normalize(TwoPhotonState{{l, 0.0}}), ZeroStateError);
}

TEST_CASE("states may not mix labels with and without time bins")
{
    CHECK_THROWS_AS((TwoPhotonState{{{mode("1", Pol::H), mode("1'", Pol::H)}, 1.0},
                                    {{mode("1", Pol::H, TimeBin::S), mode("1'", Pol::H, TimeBin::S)}, 1.0}}),
                    BasisError);
}

TEST_CASE("Born-rule probabilities")
{
    const auto s = phi_plus();
    CHECK(probability(s, Projector::onto({mode("1", Pol::H), mode("1'", Pol::H)})) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(probability(s, Projector::onto({mode("1", Pol::H), mode("1'", Pol::V)})) == doctest::Approx(0.0));

    // Two-core state (|33'> - |44'>)/sqrt2 with both photons H.
    const TwoPhotonState path{{{mode("3", Pol::H), mode("3'", Pol::H)}, kInvSqrt2}, {{mode("4", Pol::H), mode("4'", Pol::H)}, -kInvSqrt2}};
    CHECK(probability(path, Projector::onto({mode("3", Pol::H), mode("3'", Pol::H)})) == doctest::Approx(0.5).epsilon(1e-14));

    // Label-structure mismatch.
    CHECK_THROWS_AS(probability(s, Projector::onto({mode("1", Pol::H, TimeBin::S), mode("1'", Pol::H, TimeBin::S)})), BasisError);
}

TEST_CASE("projectors are Hermitian and idempotent")
{
    std::mt19937_64 rng(5);
    const auto a = testutil::random_state(rng);
    const auto b = testutil::random_state(rng);
    const Projector p({a, b, a});  // dependent ket dropped
    CHECK(p.rank() == 2);
    const auto m = p.matrix(a.support());
    CHECK((m * m - m).norm() < 1e-12);
    CHECK((m - m.adjoint()).norm() < 1e-12);
}

TEST_CASE("complete projector sets sum to the state norm")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = testutil::random_state(rng, false);
        double total = 0.0;
        for (const auto& label : s.support()) total += probability(s, Projector::onto(label));
        CHECK(total == doctest::Approx(s.norm()).epsilon(1e-10));

        // A rotated complete basis: images of the computational basis under a random unitary.
        const auto basis = s.support();
        const auto u = testutil::random_unitary(static_cast<int>(basis.size()), rng);
        double rotated = 0.0;
        for (int k = 0; k < u.cols(); ++k) {
            TwoPhotonState::Terms t;
            for (int i = 0; i < u.rows(); ++i) t[basis[static_cast<std::size_t>(i)]] = u(i, k);
            rotated += probability(s, Projector({TwoPhotonState(t)}));
        }
        CHECK(std::abs(rotated - s.norm()) < 1e-10);
    }
}

TEST_CASE("density operator invariants are enforced")
{
    const std::vector<PairLabel> basis{{mode("1", Pol::H), mode("1'", Pol::H)}, {mode("1", Pol::V), mode("1'", Pol::V)}};
    Eigen::MatrixXcd m(2, 2);
    m << 0.5, cd{0.1, 0.1}, cd{0.1, 0.2}, 0.5;
    CHECK_THROWS_AS(DensityOperator(basis, m), RangeError);  // not Hermitian
    m << 0.5, 0.6, 0.6, 0.5;
    CHECK_THROWS_AS(DensityOperator(basis, m), RangeError);  // eigenvalue -0.1
    m << 0.8, 0.0, 0.0, 0.5;
    CHECK_THROWS_AS(DensityOperator(basis, m), RangeError);  // trace 1.3
    m << 0.5, 0.0, 0.0, 0.5;
    CHECK_THROWS_AS(DensityOperator({basis[0], basis[0]}, m), BasisError);
    CHECK_NOTHROW(DensityOperator(basis, m));
}

TEST_CASE("density operator basis is sorted with the matrix permuted to match")
{
    const PairLabel hh{mode("1", Pol::H), mode("1'", Pol::H)};
    const PairLabel vv{mode("1", Pol::V), mode("1'", Pol::V)};
    Eigen::MatrixXcd m(2, 2);
    m << 0.7, cd{0.0, 0.1}, cd{0.0, -0.1}, 0.3;
    const DensityOperator rho({vv, hh}, m);
    CHECK(rho.basis().front() == hh);
    CHECK(rho.element(vv, vv).real() == doctest::Approx(0.7));
    CHECK(std::abs(rho.element(vv, hh) - cd{0.0, 0.1}) < 1e-15);
}

TEST_CASE("fidelity with a pure target")
{
    const auto target = build_target_state(4);
    const auto rho = DensityOperator::from_pure(target);
    CHECK(fidelity_with_pure(rho, target) == doctest::Approx(1.0).epsilon(1e-12));

    const auto mixed = DensityOperator::maximally_mixed(target.support());
    REQUIRE(mixed.dim() == 8);
    // On the 16-dimensional path x polarization space of four core pairs.
    std::vector<PairLabel> full;
    for (int k = 1; k <= 4; ++k)
        for (Pol pa : {Pol::H, Pol::V})
            for (Pol pb : {Pol::H, Pol::V}) full.push_back({mode(pair_core(k, Photon::A), pa), mode(pair_core(k, Photon::B), pb)});
    CHECK(fidelity_with_pure(DensityOperator::maximally_mixed(full), target) == doctest::Approx(1.0 / 16).epsilon(1e-12));

    // Werner state v |Phi+><Phi+| + (1-v) I/4: closed form v + (1-v)/4.
    const auto bell = phi_plus();
    std::vector<PairLabel> pol4;
    for (Pol pa : {Pol::H, Pol::V})
        for (Pol pb : {Pol::H, Pol::V}) pol4.push_back({mode("1", pa), mode("1'", pb)});
    const auto werner = mix(DensityOperator::from_pure(bell, pol4), DensityOperator::maximally_mixed(pol4), 0.9);
    CHECK(fidelity_with_pure(werner, bell) == doctest::Approx(0.925).epsilon(1e-12));
    // Same number from explicit matrix arithmetic.
    Eigen::Vector4cd v(kInvSqrt2, 0, 0, kInvSqrt2);
    const Eigen::Matrix4cd w = 0.9 * v * v.adjoint() + 0.1 * Eigen::Matrix4cd::Identity() / 4.0;
    CHECK((v.adjoint() * w * v)(0, 0).real() == doctest::Approx(0.925).epsilon(1e-12));
}

TEST_CASE("fidelity errors")
{
    const auto rho = DensityOperator::from_pure(phi_plus());
    CHECK_THROWS_AS(fidelity_with_pure(rho, phi_plus("2", "2'")), BasisError);
    TwoPhotonState unnormalized{{{mode("1", Pol::H), mode("1'", Pol::H)}, 2.0}};
    CHECK_THROWS_AS(fidelity_with_pure(rho, unnormalized), RangeError);
}

TEST_CASE("mix")
{
    const PairLabel hh{mode("1", Pol::H), mode("1'", Pol::H)};
    const PairLabel vv{mode("1", Pol::V), mode("1'", Pol::V)};
    const auto rho = DensityOperator::from_pure(TwoPhotonState{{hh, 1.0}}, {hh, vv});
    const auto sigma = DensityOperator::from_pure(TwoPhotonState{{vv, 1.0}}, {hh, vv});
    CHECK((mix(rho, sigma, 1.0).matrix() - rho.matrix()).norm() < 1e-15);
    CHECK((mix(rho, sigma, 0.0).matrix() - sigma.matrix()).norm() < 1e-15);
    const auto half = mix(rho, sigma, 0.5);
    CHECK(half.element(hh, hh).real() == doctest::Approx(0.5));
    CHECK(half.element(vv, vv).real() == doctest::Approx(0.5));
    CHECK(std::abs(half.element(hh, vv)) < 1e-15);
    CHECK_THROWS_AS(mix(rho, sigma, 1.5), RangeError);
    CHECK_THROWS_AS(mix(rho, sigma, -0.1), RangeError);
    // Different bases are embedded in their union.
    const auto other = DensityOperator::from_pure(TwoPhotonState{{vv, 1.0}});
    CHECK(mix(DensityOperator::from_pure(TwoPhotonState{{hh, 1.0}}), other, 0.25).dim() == 2);
}

TEST_CASE("fidelity is linear under mix")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = testutil::random_density(rng);
        const auto b = testutil::random_density(rng, 2);
        const auto target = testutil::random_state(rng);
        const double w = u(rng);
        const double lhs = fidelity_with_pure(mix(a, b, w), target);
        const double rhs = w * fidelity_with_pure(a, target) + (1 - w) * fidelity_with_pure(b, target);
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("from_pure then fidelity gives one")
{
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = testutil::random_state(rng);
        CHECK(std::abs(fidelity_with_pure(DensityOperator::from_pure(s), s) - 1.0) < 1e-12);
    }
}

TEST_CASE("local unitaries")
{
    SUBCASE("identity leaves the state unchanged")
    {
        std::mt19937_64 rng(3);
        const auto s = testutil::random_state(rng);
        const LocalUnitary id{{mode("1", Pol::H), mode("1", Pol::V)}, Eigen::Matrix2cd::Identity()};
        const auto out = apply_local_unitary(s, Photon::A, id);
        for (const auto& [label, a] : s.terms()) CHECK(std::abs(out.amplitude(label) - a) < 1e-15);
    }
    SUBCASE("phase on photon B's long bin multiplies the LL coefficient")
    {
        const double phi = 1.1;
        TwoPhotonState::Terms t;
        for (Pol p : {Pol::H, Pol::V}) {
            t[{mode("1", p, TimeBin::S), mode("1'", p, TimeBin::S)}] = 0.5;
            t[{mode("1", p, TimeBin::L), mode("1'", p, TimeBin::L)}] = 0.5;
        }
        const TwoPhotonState s(t);
        for (Pol p : {Pol::H, Pol::V}) {
            Eigen::MatrixXcd u(1, 1);
            u(0, 0) = std::polar(1.0, phi);
            const auto out = apply_local_unitary(s, Photon::B, {{mode("1'", p, TimeBin::L)}, u});
            const PairLabel ll{mode("1", p, TimeBin::L), mode("1'", p, TimeBin::L)};
            const PairLabel ss{mode("1", p, TimeBin::S), mode("1'", p, TimeBin::S)};
            CHECK(std::abs(out.amplitude(ll) - 0.5 * std::polar(1.0, phi)) < 1e-15);
            CHECK(std::abs(out.amplitude(ss) - 0.5) < 1e-15);
        }
    }
    SUBCASE("HWP at 22.5 degrees maps H to D")
    {
        const double c = std::cos(std::numbers::pi / 4);
        Eigen::Matrix2cd hwp;
        hwp << c, c, c, -c;
        const TwoPhotonState h{{{mode("1", Pol::H), mode("1'", Pol::H)}, 1.0}};
        const auto out = apply_local_unitary(h, Photon::A, {{mode("1", Pol::H), mode("1", Pol::V)}, hwp});
        CHECK(std::abs(out.amplitude({mode("1", Pol::H), mode("1'", Pol::H)}) - kInvSqrt2) < 1e-15);
        CHECK(std::abs(out.amplitude({mode("1", Pol::V), mode("1'", Pol::H)}) - kInvSqrt2) < 1e-15);
    }
    SUBCASE("non-unitary matrices are rejected")
    {
        Eigen::Matrix2cd m;
        m << 1.0, 0.0, 0.0, 0.9;
        const TwoPhotonState h{{{mode("1", Pol::H), mode("1'", Pol::H)}, 1.0}};
        CHECK_THROWS_AS(apply_local_unitary(h, Photon::A, {{mode("1", Pol::H), mode("1", Pol::V)}, m}), UnitarityError);
    }
}

TEST_CASE("random unitaries preserve the norm")
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> which(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = testutil::random_state(rng, false);
        const Photon p = which(rng) ? Photon::A : Photon::B;
        std::vector<ModeLabel> sub;
        for (const char* c : p == Photon::A ? std::array{"1", "2"} : std::array{"1'", "2'"})
            for (Pol pol : {Pol::H, Pol::V}) sub.push_back(mode(c, pol));
        const LocalUnitary u{sub, testutil::random_unitary(4, rng)};
        const auto out = apply_local_unitary(s, p, u);
        CHECK(std::abs(out.norm() - s.norm()) < 1e-12);
        // The density-operator path agrees.
        const auto rho = apply_local_unitary(DensityOperator::from_pure(normalize(s)), p, u);
        CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
    }
}
