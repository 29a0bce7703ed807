#include "hyperent/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

namespace hyperent {

VisibilityResult polarization_visibility(Measured hh, Measured vv, Measured hv, Measured vh)
{
    const double c = hh.value + vv.value;
    const double a = hv.value + vh.value;
    const double total = c + a;
    if (!(total > 0.0)) throw InsufficientCounts("polarization visibility needs a positive coincidence total");
    // dV/dc = 2a/total^2, dV/da = -2c/total^2
    const double dc = 2.0 * a / (total * total);
    const double da = -2.0 * c / (total * total);
    const double var = dc * dc * (hh.sigma * hh.sigma + vv.sigma * vv.sigma) + da * da * (hv.sigma * hv.sigma + vh.sigma * vh.sigma);
    return {(c - a) / total, std::sqrt(var), VisibilityMethod::DirectFormula};
}

// ---------------------------------------------------------------------------
// Sine fitting

double SineFit::operator()(double x) const { return offset + amplitude * std::sin(omega * x + phase); }

double SineFit::sigma(int k) const { return std::sqrt(covariance(k, k)); }

namespace {

struct Prepared {
    Eigen::VectorXd x;   // centered
    Eigen::VectorXd y;
    Eigen::VectorXd w;   // 1/sigma^2
    double center = 0.0;
    double span = 0.0;
    double min_step = 0.0;
};

struct LinearSolution {
    Eigen::Vector3d p;   // offset, sin coefficient, cos coefficient
    Eigen::Matrix3d cov;
    double chi2 = 0.0;
    bool ok = false;
};

LinearSolution linear_fit(const Prepared& d, double omega)
{
    const auto n = d.x.size();
    Eigen::MatrixXd a(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) a.row(k) << 1.0, std::sin(omega * d.x(k)), std::cos(omega * d.x(k));
    const Eigen::MatrixXd aw = d.w.asDiagonal() * a;
    const Eigen::Matrix3d normal = a.transpose() * aw;
    const Eigen::Vector3d rhs = aw.transpose() * d.y;
    LinearSolution s;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
    if (!lu.isInvertible()) return s;
    s.p = lu.solve(rhs);
    s.cov = lu.inverse();
    const Eigen::VectorXd r = d.y - a * s.p;
    s.chi2 = r.dot(d.w.asDiagonal() * r);
    s.ok = true;
    return s;
}

double chi2_at(const Prepared& d, const Eigen::Vector4d& p)
{
    double chi2 = 0.0;
    for (Eigen::Index k = 0; k < d.x.size(); ++k) {
        const double f = p(0) + p(1) * std::sin(p(3) * d.x(k)) + p(2) * std::cos(p(3) * d.x(k));
        chi2 += d.w(k) * (d.y(k) - f) * (d.y(k) - f);
    }
    return chi2;
}

void normal_equations(const Prepared& d, const Eigen::Vector4d& p, Eigen::Matrix4d& jtj, Eigen::Vector4d& jtr)
{
    jtj.setZero();
    jtr.setZero();
    for (Eigen::Index k = 0; k < d.x.size(); ++k) {
        const double s = std::sin(p(3) * d.x(k));
        const double c = std::cos(p(3) * d.x(k));
        const double f = p(0) + p(1) * s + p(2) * c;
        Eigen::Vector4d j(1.0, s, c, d.x(k) * (p(1) * c - p(2) * s));
        jtj += d.w(k) * j * j.transpose();
        jtr += d.w(k) * (d.y(k) - f) * j;
    }
}

// Map (offset, a, b, omega) with a sin + b cos on centered x to
// (offset, amplitude, omega, phase) on the original x.
SineFit finish(const Prepared& d, const Eigen::Vector4d& p, const Eigen::Matrix4d& cov, double chi2, int dof)
{
    SineFit fit;
    const double a = p(1);
    const double b = p(2);
    const double amp = std::hypot(a, b);
    fit.offset = p(0);
    fit.amplitude = amp;
    fit.omega = p(3);
    fit.phase = std::remainder(std::atan2(b, a) - p(3) * d.center, 2.0 * std::numbers::pi);

    Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
    j(0, 0) = 1.0;
    j(2, 3) = 1.0;
    if (amp > 0.0) {
        j(1, 1) = a / amp;
        j(1, 2) = b / amp;
        j(3, 1) = -b / (amp * amp);
        j(3, 2) = a / (amp * amp);
    }
    j(3, 3) = -d.center;
    Eigen::Matrix4d finite_cov = cov;
    const bool omega_unknown = !std::isfinite(cov(3, 3));
    if (omega_unknown) {
        finite_cov.row(3).setZero();
        finite_cov.col(3).setZero();
    }
    fit.covariance = j * finite_cov * j.transpose();
    if (amp == 0.0) fit.covariance(1, 1) = 0.5 * (cov(1, 1) + cov(2, 2));
    if (omega_unknown) {
        fit.covariance(2, 2) = std::numeric_limits<double>::infinity();
        fit.covariance(3, 3) = std::numeric_limits<double>::infinity();
    }
    fit.reduced_chi2 = dof > 0 ? chi2 / dof : 0.0;
    return fit;
}

Prepared prepare(const FringeDataset& data, const FitOptions& options)
{
    const std::size_t n = data.x.size();
    if (data.y.size() != n || data.sigma.size() != n) throw FitError("fringe dataset columns differ in length");
    if (n < options.min_points)
        throw FitError("fringe fit needs at least " + std::to_string(options.min_points) + " points, got " + std::to_string(n));
    Prepared d;
    d.x.resize(static_cast<Eigen::Index>(n));
    d.y.resize(static_cast<Eigen::Index>(n));
    d.w.resize(static_cast<Eigen::Index>(n));
    const auto [lo, hi] = std::minmax_element(data.x.begin(), data.x.end());
    d.span = *hi - *lo;
    if (!(d.span > 0.0)) throw FitError("fringe scan values do not span an interval");
    d.center = 0.5 * (*hi + *lo);
    std::vector<double> sorted = data.x;
    std::sort(sorted.begin(), sorted.end());
    d.min_step = d.span;
    for (std::size_t k = 1; k < n; ++k)
        if (sorted[k] > sorted[k - 1]) d.min_step = std::min(d.min_step, sorted[k] - sorted[k - 1]);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        d.x(i) = data.x[k] - d.center;
        d.y(i) = data.y[k];
        const double s = std::max(data.sigma[k], options.sigma_floor);
        if (!(s > 0.0) || !std::isfinite(s) || !std::isfinite(data.y[k])) throw FitError("fringe point " + std::to_string(k) + " has no usable uncertainty");
        d.w(i) = 1.0 / (s * s);
    }
    return d;
}

// Levenberg-Marquardt on (offset, sin, cos, omega); nullopt with a
// diagnostic when it does not converge.
std::optional<SineFit> refine(const Prepared& d, Eigen::Vector4d p, const FitOptions& options, std::string& failure)
{
    const int n = static_cast<int>(d.x.size());
    double lambda = 1e-3;
    double chi2 = chi2_at(d, p);
    Eigen::Matrix4d jtj;
    Eigen::Vector4d jtr;
    const double ref = std::max(std::abs(p(0)), std::hypot(p(1), p(2)));
    for (int it = 1; it <= options.max_iterations; ++it) {
        normal_equations(d, p, jtj, jtr);
        Eigen::Matrix4d damped = jtj;
        for (int k = 0; k < 4; ++k) damped(k, k) *= 1.0 + lambda;
        const Eigen::Vector4d step = damped.ldlt().solve(jtr);
        double rel = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double scale = k == 3 ? std::abs(p(3)) : std::max(std::abs(p(k)), ref);
            rel = std::max(rel, std::abs(step(k)) / scale);
        }
        if (!std::isfinite(rel)) break;
        const Eigen::Vector4d trial = p + step;
        const double chi2_trial = chi2_at(d, trial);
        if (chi2_trial <= chi2) {
            p = trial;
            chi2 = chi2_trial;
            lambda = std::max(lambda / 10.0, 1e-12);
        } else {
            lambda *= 10.0;
        }
        if (rel < options.relative_tolerance) {
            normal_equations(d, p, jtj, jtr);
            Eigen::FullPivLU<Eigen::Matrix4d> lu(jtj);
            if (!lu.isInvertible()) {
                failure = "fit converged to a singular point";
                return std::nullopt;
            }
            SineFit fit = finish(d, p, lu.inverse(), chi2, n - 4);
            fit.iterations = it;
            return fit;
        }
        if (lambda > 1e20) break;
    }
    std::ostringstream msg;
    msg << "sine fit did not converge: offset=" << p(0) << " sin=" << p(1) << " cos=" << p(2) << " omega=" << p(3)
        << " chi2=" << chi2 << " lambda=" << lambda;
    failure = msg.str();
    return std::nullopt;
}

} // namespace

SineFit fit_sine(const FringeDataset& data, const FitOptions& options)
{
    const Prepared d = prepare(data, options);
    const int n = static_cast<int>(d.x.size());

    // Starting frequency: best single-sinusoid chi^2 over a grid from half a
    // period across the scan up to the sampling limit.
    double omega0 = 0.0;
    if (options.fixed_omega) {
        omega0 = *options.fixed_omega;
        if (!(omega0 > 0.0)) throw FitError("fixed omega must be positive");
        if (omega0 * d.span < 2.0 * std::numbers::pi - 1e-9) throw FitError("scan spans less than one fringe period");
    } else {
        const double lo = std::numbers::pi / d.span;
        const double hi = 0.95 * std::numbers::pi / d.min_step;
        const int grid = 20 * n + 100;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= grid; ++k) {
            const double om = lo + (hi - lo) * k / grid;
            const auto s = linear_fit(d, om);
            if (s.ok && s.chi2 < best) {
                best = s.chi2;
                omega0 = om;
            }
        }
        if (!std::isfinite(best)) throw FitError("no frequency in the search grid admits a linear solution");
    }

    const LinearSolution lin = linear_fit(d, omega0);
    if (!lin.ok) throw FitError("singular linear system at omega = " + std::to_string(omega0));
    const double amp_lin = std::hypot(lin.p(1), lin.p(2));
    const double amp_sigma = std::sqrt(0.5 * (lin.cov(1, 1) + lin.cov(2, 2)));

    Eigen::Vector4d p(lin.p(0), lin.p(1), lin.p(2), omega0);
    auto linear_only = [&] {
        Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
        cov.topLeftCorner<3, 3>() = lin.cov;
        cov(3, 3) = options.fixed_omega ? 0.0 : std::numeric_limits<double>::infinity();
        SineFit fit = finish(d, p, cov, lin.chi2, n - 3);
        fit.omega_fixed = true;
        fit.degenerate = !options.fixed_omega;
        return fit;
    };
    if (options.fixed_omega) return linear_only();

    std::string failure;
    if (auto fit = refine(d, p, options, failure)) {
        fit->degenerate = fit->amplitude < 2.0 * fit->sigma(1);
        return *fit;
    }
    // Without detectable modulation omega is not identifiable; report the
    // grid-frequency linear fit instead of failing.
    if (amp_lin < 2.0 * amp_sigma) return linear_only();
    throw FitError(failure);
}

VisibilityResult visibility_from_fit(const SineFit& fit)
{
    if (!(fit.offset > 0.0)) throw FitError("fringe offset must be positive to define a visibility");
    const double c = fit.offset;
    const double a = fit.amplitude;
    const double v = a / c;
    const double var = fit.covariance(1, 1) / (c * c) + a * a * fit.covariance(0, 0) / (c * c * c * c) -
                       2.0 * a * fit.covariance(0, 1) / (c * c * c);
    return {v, std::sqrt(std::max(var, 0.0)), VisibilityMethod::SineFit};
}

// ---------------------------------------------------------------------------
// Certification chain

double offdiag_from_visibility(double visibility, double p_i, double p_j)
{
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw RangeError("visibility must lie in [0,1]");
    if (!(p_i >= 0.0) || !(p_j >= 0.0)) throw RangeError("diagonal elements must be non-negative");
    return visibility * (p_i + p_j) / 2.0;
}

PathFidelity path_fidelity(std::span<const double> diagonals, double offdiag)
{
    const auto d = static_cast<double>(diagonals.size());
    if (diagonals.size() < 2) throw RangeError("path fidelity needs at least two diagonal elements");
    if (!(offdiag >= 0.0)) throw RangeError("off-diagonal magnitude must be non-negative");
    double sum = 0.0;
    for (double p : diagonals) {
        if (!(p >= 0.0)) throw RangeError("diagonal elements must be non-negative");
        sum += p;
    }
    if (sum > 1.0 + 1e-9) throw RangeError("diagonal elements sum above 1");
    const double f = (sum + d * (d - 1.0) * offdiag) / d;
    return {f, f <= 1.0 + 1e-12};
}

int certify_schmidt_number(double fidelity, int dimension)
{
    if (dimension < 2) throw RangeError("dimension must be at least 2");
    if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw RangeError("fidelity must lie in [0,1]");
    int k = 1;
    for (int m = 2; m <= dimension; ++m)
        // Rounding noise at the bound does not certify anything.
        if (fidelity > static_cast<double>(m - 1) / dimension + 1e-12) k = m;
    return k;
}

QkdVerdict qkd_threshold_check(const VisibilityResult& v, double threshold)
{
    QkdVerdict q;
    q.threshold = threshold;
    q.pass = v.value > threshold;
    const double diff = v.value - threshold;
    q.margin_sigma = v.sigma > 0.0 ? diff / v.sigma : (diff > 0 ? std::numeric_limits<double>::infinity()
                                                                : (diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0));
    return q;
}

FidelityReport certify_path(const std::vector<VisibilityRow>& path_visibilities, const std::vector<double>& diagonals,
                            int interfered_i, int interfered_j, double qkd_threshold)
{
    if (path_visibilities.empty()) throw RangeError("certification needs at least one path visibility");
    const int d = static_cast<int>(diagonals.size());
    if (interfered_i < 0 || interfered_i >= d || interfered_j < 0 || interfered_j >= d || interfered_i == interfered_j)
        throw RangeError("interfered core-pair indices out of range");

    FidelityReport rep;
    rep.diagonals = diagonals;
    rep.interfered_i = interfered_i;
    rep.interfered_j = interfered_j;
    double vmin = std::numeric_limits<double>::infinity();
    for (const auto& row : path_visibilities) {
        VisibilityRow r = row;
        r.verdict = qkd_threshold_check(row.visibility, qkd_threshold);
        rep.visibilities.push_back(r);
        vmin = std::min(vmin, row.visibility.value);
    }
    rep.certifying_visibility = std::clamp(vmin, 0.0, 1.0);
    rep.offdiag = offdiag_from_visibility(rep.certifying_visibility, diagonals[static_cast<std::size_t>(interfered_i)],
                                          diagonals[static_cast<std::size_t>(interfered_j)]);
    rep.fidelity = path_fidelity(diagonals, rep.offdiag);
    rep.schmidt_number = rep.fidelity.consistent ? certify_schmidt_number(std::min(rep.fidelity.value, 1.0), d) : 0;
    rep.assumption = "non-adversarial: the certified off-diagonal magnitude is taken as representative of all |<ii'|rho|jj'>|";
    return rep;
}

} // namespace hyperent
