#include "hyperent/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hyperent {

std::string to_string(Pol p) { return p == Pol::H ? "H" : "V"; }

std::string to_string(TimeBin t)
{
    switch (t) {
    case TimeBin::S: return "S";
    case TimeBin::L: return "L";
    default: return "";
    }
}

std::string to_string(const ModeLabel& m)
{
    std::string s = m.core + ":" + to_string(m.pol);
    if (m.timebin != TimeBin::None) s += ":" + to_string(m.timebin);
    return s;
}

std::string to_string(const PairLabel& p) { return "|" + to_string(p.a) + "," + to_string(p.b) + ">"; }

ModeLabel mode(std::string core, Pol pol, TimeBin tb) { return ModeLabel{std::move(core), pol, tb}; }

namespace {

// All labels before an interferometer carry no time bin, all labels after
// carry one. Returns the common structure or throws.
template <class It, class Get>
bool consistent_timebins(It first, It last, Get get)
{
    bool any_with = false;
    bool any_without = false;
    for (; first != last; ++first) {
        const PairLabel& p = get(*first);
        for (const ModeLabel* m : {&p.a, &p.b}) {
            if (m->timebin == TimeBin::None)
                any_without = true;
            else
                any_with = true;
        }
    }
    if (any_with && any_without)
        throw BasisError("state mixes labels with and without time bins");
    return any_with;
}

} // namespace

// ---------------------------------------------------------------------------
// TwoPhotonState

TwoPhotonState::TwoPhotonState(Terms terms) : terms_(std::move(terms))
{
    consistent_timebins(terms_.begin(), terms_.end(), [](const auto& kv) -> const PairLabel& { return kv.first; });
}

TwoPhotonState::TwoPhotonState(std::initializer_list<std::pair<const PairLabel, cd>> terms)
    : TwoPhotonState(Terms(terms))
{
}

double TwoPhotonState::norm() const
{
    double n = 0.0;
    for (const auto& [label, amp] : terms_) n += std::norm(amp);
    return n;
}

cd TwoPhotonState::amplitude(const PairLabel& label) const
{
    auto it = terms_.find(label);
    return it == terms_.end() ? cd{} : it->second;
}

bool TwoPhotonState::has_timebins() const
{
    return !terms_.empty() && terms_.begin()->first.a.timebin != TimeBin::None;
}

std::vector<PairLabel> TwoPhotonState::support() const
{
    std::vector<PairLabel> out;
    out.reserve(terms_.size());
    for (const auto& kv : terms_) out.push_back(kv.first);
    return out;
}

TwoPhotonState normalize(const TwoPhotonState& state)
{
    const double n = state.norm();
    if (!(n > 0.0)) throw ZeroStateError("cannot normalize a zero-norm state");
    const double s = 1.0 / std::sqrt(n);
    TwoPhotonState::Terms out;
    for (const auto& [label, amp] : state.terms()) out.emplace(label, amp * s);
    return TwoPhotonState(std::move(out));
}

cd inner_product(const TwoPhotonState& bra, const TwoPhotonState& ket)
{
    cd acc{};
    const auto& small = bra.size() <= ket.size() ? bra.terms() : ket.terms();
    const auto& large = bra.size() <= ket.size() ? ket.terms() : bra.terms();
    for (const auto& [label, amp] : small) {
        auto it = large.find(label);
        if (it == large.end()) continue;
        acc += (&small == &bra.terms()) ? std::conj(amp) * it->second : std::conj(it->second) * amp;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// DensityOperator

DensityOperator::DensityOperator(std::vector<PairLabel> basis, Eigen::MatrixXcd matrix)
{
    const auto n = static_cast<Eigen::Index>(basis.size());
    if (matrix.rows() != n || matrix.cols() != n)
        throw BasisError("density matrix is " + std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()) +
                         " but basis has " + std::to_string(n) + " labels");

    std::vector<std::size_t> order(basis.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return basis[i] < basis[j]; });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (basis[order[k - 1]] == basis[order[k]])
            throw BasisError("duplicate basis label " + to_string(basis[order[k]]));

    basis_.resize(basis.size());
    matrix_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        basis_[i] = basis[order[i]];
        for (Eigen::Index j = 0; j < n; ++j) matrix_(i, j) = matrix(order[i], order[j]);
    }
    consistent_timebins(basis_.begin(), basis_.end(), [](const PairLabel& p) -> const PairLabel& { return p; });

    if (n > 0) {
        const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
        if (herm > kExactTol) throw RangeError("density matrix is not Hermitian (deviation " + std::to_string(herm) + ")");
        matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
        const double tr = trace();
        if (tr < -kPsdTol || tr > 1.0 + kPsdTol) throw RangeError("density matrix trace " + std::to_string(tr) + " outside [0,1]");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(matrix_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -kPsdTol)
            throw RangeError("density matrix has negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
    }
}

DensityOperator DensityOperator::from_pure(const TwoPhotonState& state) { return from_pure(state, state.support()); }

DensityOperator DensityOperator::from_pure(const TwoPhotonState& state, std::vector<PairLabel> basis)
{
    std::sort(basis.begin(), basis.end());
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (const auto& [label, amp] : state.terms()) {
        auto it = std::lower_bound(basis.begin(), basis.end(), label);
        if (it == basis.end() || *it != label) throw BasisError("state label " + to_string(label) + " not in basis");
        v(it - basis.begin()) = amp;
    }
    return DensityOperator(std::move(basis), v * v.adjoint());
}

DensityOperator DensityOperator::maximally_mixed(std::vector<PairLabel> basis)
{
    if (basis.empty()) throw BasisError("maximally mixed state needs a non-empty basis");
    const auto n = static_cast<Eigen::Index>(basis.size());
    return DensityOperator(std::move(basis), Eigen::MatrixXcd::Identity(n, n) / static_cast<double>(n));
}

double DensityOperator::trace() const { return matrix_.trace().real(); }

std::ptrdiff_t DensityOperator::index_of(const PairLabel& label) const
{
    auto it = std::lower_bound(basis_.begin(), basis_.end(), label);
    if (it == basis_.end() || *it != label) return -1;
    return it - basis_.begin();
}

cd DensityOperator::element(const PairLabel& row, const PairLabel& col) const
{
    const auto i = index_of(row);
    const auto j = index_of(col);
    if (i < 0 || j < 0) return {};
    return matrix_(i, j);
}

DensityOperator DensityOperator::embedded(std::vector<PairLabel> basis) const
{
    std::sort(basis.begin(), basis.end());
    basis.erase(std::unique(basis.begin(), basis.end()), basis.end());
    std::vector<Eigen::Index> pos(basis_.size());
    for (std::size_t k = 0; k < basis_.size(); ++k) {
        auto it = std::lower_bound(basis.begin(), basis.end(), basis_[k]);
        if (it == basis.end() || *it != basis_[k]) throw BasisError("embedding basis lacks " + to_string(basis_[k]));
        pos[k] = it - basis.begin();
    }
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < basis_.size(); ++i)
        for (std::size_t j = 0; j < basis_.size(); ++j) m(pos[i], pos[j]) = matrix_(i, j);
    return DensityOperator(std::move(basis), std::move(m));
}

bool DensityOperator::has_timebins() const { return !basis_.empty() && basis_.front().a.timebin != TimeBin::None; }

std::vector<PairLabel> basis_union(const std::vector<PairLabel>& x, const std::vector<PairLabel>& y)
{
    std::vector<PairLabel> out;
    std::vector<PairLabel> xs = x;
    std::vector<PairLabel> ys = y;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    std::set_union(xs.begin(), xs.end(), ys.begin(), ys.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Projector

Projector::Projector(const std::vector<TwoPhotonState>& kets)
{
    if (kets.empty()) throw BasisError("projector needs at least one ket");
    bool first = true;
    for (const auto& k : kets) {
        if (k.empty()) continue;
        if (first) {
            timebins_ = k.has_timebins();
            first = false;
        } else if (k.has_timebins() != timebins_) {
            throw BasisError("projector kets mix labels with and without time bins");
        }
        // Gram-Schmidt against the kets accepted so far.
        TwoPhotonState::Terms v = k.terms();
        for (const auto& e : kets_) {
            const cd c = inner_product(e, TwoPhotonState(v));
            for (const auto& [label, amp] : e.terms()) v[label] -= c * amp;
        }
        TwoPhotonState residual(std::move(v));
        if (residual.norm() < kExactTol) continue;
        kets_.push_back(normalize(residual));
    }
    if (kets_.empty()) throw BasisError("projector kets span a zero subspace");
}

Projector Projector::onto(const PairLabel& label) { return Projector({TwoPhotonState{{label, cd{1.0, 0.0}}}}); }

Eigen::MatrixXcd Projector::matrix(const std::vector<PairLabel>& basis) const
{
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& k : kets_) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = k.amplitude(basis[i]);
        p += v * v.adjoint();
    }
    return p;
}

double probability(const TwoPhotonState& state, const Projector& proj)
{
    if (state.empty()) return 0.0;
    if (state.has_timebins() != proj.has_timebins()) throw BasisError("projector and state have different label structure");
    double p = 0.0;
    for (const auto& k : proj.kets()) p += std::norm(inner_product(k, state));
    return p;
}

double probability(const DensityOperator& rho, const Projector& proj)
{
    if (rho.dim() == 0) return 0.0;
    if (rho.has_timebins() != proj.has_timebins()) throw BasisError("projector and state have different label structure");
    double p = 0.0;
    for (const auto& k : proj.kets()) {
        cd acc{};
        for (const auto& [li, ai] : k.terms()) {
            const auto i = rho.index_of(li);
            if (i < 0) continue;
            for (const auto& [lj, aj] : k.terms()) {
                const auto j = rho.index_of(lj);
                if (j < 0) continue;
                acc += std::conj(ai) * rho.matrix()(i, j) * aj;
            }
        }
        p += acc.real();
    }
    return p;
}

double fidelity_with_pure(const DensityOperator& rho, const TwoPhotonState& target)
{
    if (std::abs(target.norm() - 1.0) > 1e-9) throw RangeError("fidelity target must be normalized");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(rho.dim()));
    for (const auto& [label, amp] : target.terms()) {
        const auto i = rho.index_of(label);
        if (i < 0) throw BasisError("target label " + to_string(label) + " outside the density operator basis");
        v(i) = amp;
    }
    return (v.adjoint() * rho.matrix() * v)(0, 0).real();
}

DensityOperator mix(const DensityOperator& rho, const DensityOperator& sigma, double weight)
{
    if (!(weight >= 0.0 && weight <= 1.0)) throw RangeError("mixing weight must lie in [0,1]");
    if (rho.basis() == sigma.basis())
        return DensityOperator(rho.basis(), weight * rho.matrix() + (1.0 - weight) * sigma.matrix());
    auto basis = basis_union(rho.basis(), sigma.basis());
    const auto r = rho.embedded(basis);
    const auto s = sigma.embedded(basis);
    return DensityOperator(std::move(basis), weight * r.matrix() + (1.0 - weight) * s.matrix());
}

// ---------------------------------------------------------------------------
// Local maps

TwoPhotonState apply_local_map(const TwoPhotonState& state, Photon which, const SinglePhotonMap& map)
{
    TwoPhotonState::Terms out;
    for (const auto& [label, amp] : state.terms()) {
        for (const auto& [image, c] : map(label.of(which))) {
            PairLabel l = label;
            (which == Photon::A ? l.a : l.b) = image;
            out[l] += c * amp;
        }
    }
    std::erase_if(out, [](const auto& kv) { return kv.second == cd{}; });
    return TwoPhotonState(std::move(out));
}

namespace {

using PairImage = std::vector<std::pair<PairLabel, cd>>;

DensityOperator transform(const DensityOperator& rho, const std::function<PairImage(const PairLabel&)>& image)
{
    std::map<PairLabel, Eigen::Index> out_index;
    std::vector<PairImage> images;
    images.reserve(rho.dim());
    for (const auto& label : rho.basis()) {
        images.push_back(image(label));
        for (const auto& [l, c] : images.back())
            if (c != cd{}) out_index.emplace(l, 0);
    }
    std::vector<PairLabel> out_basis;
    out_basis.reserve(out_index.size());
    for (auto& [l, idx] : out_index) {
        idx = static_cast<Eigen::Index>(out_basis.size());
        out_basis.push_back(l);
    }
    Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(out_basis.size()), static_cast<Eigen::Index>(rho.dim()));
    for (std::size_t j = 0; j < images.size(); ++j)
        for (const auto& [l, c] : images[j])
            if (c != cd{}) k(out_index.at(l), static_cast<Eigen::Index>(j)) += c;
    Eigen::MatrixXcd m = k * rho.matrix() * k.adjoint();
    return DensityOperator(std::move(out_basis), std::move(m));
}

} // namespace

DensityOperator apply_local_map(const DensityOperator& rho, Photon which, const SinglePhotonMap& map)
{
    return transform(rho, [&](const PairLabel& label) {
        PairImage out;
        for (const auto& [image, c] : map(label.of(which))) {
            PairLabel l = label;
            (which == Photon::A ? l.a : l.b) = image;
            out.emplace_back(std::move(l), c);
        }
        return out;
    });
}

DensityOperator apply_product_map(const DensityOperator& rho, const SinglePhotonMap& map)
{
    return transform(rho, [&](const PairLabel& label) {
        PairImage out;
        const auto ia = map(label.a);
        const auto ib = map(label.b);
        for (const auto& [ma, ca] : ia)
            for (const auto& [mb, cb] : ib) out.emplace_back(PairLabel{ma, mb}, ca * cb);
        return out;
    });
}

void check_unitary(const Eigen::MatrixXcd& u, double tol)
{
    if (u.rows() != u.cols()) throw UnitarityError("unitary must be square");
    const auto n = u.rows();
    const double dev = (u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (dev > tol) throw UnitarityError("matrix deviates from unitarity by " + std::to_string(dev));
}

SinglePhotonMap LocalUnitary::as_map() const
{
    if (matrix.rows() != static_cast<Eigen::Index>(subspace.size()) || matrix.cols() != matrix.rows())
        throw BasisError("local unitary size does not match its subspace");
    std::map<ModeLabel, Eigen::Index> index;
    for (std::size_t k = 0; k < subspace.size(); ++k) index.emplace(subspace[k], static_cast<Eigen::Index>(k));
    return [index, sub = subspace, m = matrix](const ModeLabel& in) {
        std::vector<std::pair<ModeLabel, cd>> out;
        auto it = index.find(in);
        if (it == index.end()) {
            out.emplace_back(in, cd{1.0, 0.0});
            return out;
        }
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (m(i, it->second) != cd{}) out.emplace_back(sub[static_cast<std::size_t>(i)], m(i, it->second));
        return out;
    };
}

TwoPhotonState apply_local_unitary(const TwoPhotonState& state, Photon which, const LocalUnitary& u)
{
    check_unitary(u.matrix);
    return apply_local_map(state, which, u.as_map());
}

DensityOperator apply_local_unitary(const DensityOperator& rho, Photon which, const LocalUnitary& u)
{
    check_unitary(u.matrix);
    return apply_local_map(rho, which, u.as_map());
}

} // namespace hyperent
