#include "hyperent/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "hyperent/oracle.hpp"

namespace hyperent {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body)
{
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1u), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::uint64_t scan_index(unsigned kind, unsigned core_pair, unsigned basis, std::uint64_t step)
{
    return (std::uint64_t{kind} << 56) | (std::uint64_t{core_pair & 0xffffu} << 40) | (std::uint64_t{basis & 0xffu} << 32) |
           (step & 0xffffffffu);
}

std::vector<DetectorPair> basis_pairs(PolBasis basis)
{
    if (basis == PolBasis::HV) return polarization_pairs();
    return {{"DD", "D1", "D3"}, {"AA", "D2", "D4"}, {"DA", "D1", "D4"}, {"AD", "D2", "D3"}};
}

namespace {

std::vector<double> linspace(double start, double stop, int steps)
{
    std::vector<double> v(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) v[static_cast<std::size_t>(k)] = start + (stop - start) * k / (steps - 1);
    return v;
}

double to_phase(double value, double meters_to_radians) { return meters_to_radians > 0.0 ? value * meters_to_radians : value; }

FitOptions fit_options(const RunConfig& config, double meters_to_radians)
{
    FitOptions o;
    if (config.analysis.lock_omega) o.fixed_omega = meters_to_radians > 0.0 ? meters_to_radians : 1.0;
    return o;
}

PairFit fit_dataset(const std::string& label, const FringeDataset& data, const FitOptions& options)
{
    PairFit pf;
    pf.pair = label;
    try {
        pf.fit = fit_sine(data, options);
        pf.visibility = visibility_from_fit(*pf.fit);
        pf.visibility->method = VisibilityMethod::SineFit;
    } catch (const Error& e) {
        pf.error = e.what();
    }
    return pf;
}

FringeDataset dataset(const std::vector<double>& x, const std::vector<CountRecord>& records, const std::vector<std::string>& labels)
{
    FringeDataset d;
    d.x = x;
    for (const auto& rec : records) {
        double y = 0.0;
        double var = 0.0;
        for (const auto& l : labels) {
            const auto& p = rec.pair(l);
            y += p.net;
            var += p.sigma * p.sigma;
        }
        d.y.push_back(y);
        d.sigma.push_back(std::sqrt(var));
    }
    return d;
}

CountRecord count(const RunConfig& config, const ExpectedRates& rates, double integration_time, std::uint64_t seed,
                  std::uint64_t index)
{
    CountRecord rec = config.mode == RunMode::Sampled
                          ? sample_counts(rates, integration_time, seed, index, config.coincidence.window)
                          : expected_counts(rates, integration_time, config.coincidence.window);
    return config.coincidence.subtract_accidentals ? subtract_accidentals(rec) : rec;
}

unsigned basis_code(PolBasis b) { return b == PolBasis::HV ? 0u : 1u; }

std::vector<DetectorSpec> detectors_for(const RunConfig& config, int first_index)
{
    std::vector<DetectorSpec> out;
    for (int k = 0; k < 4; ++k)
        out.push_back({"D" + std::to_string(first_index + k), k < 2 ? Photon::A : Photon::B, config.detectors.efficiency,
                       config.detectors.dark_rate});
    return out;
}

// Detector pairs for the monitored Franson port. With the secondary port the
// analyzers sit on D5-D8; labels stay the same.
std::vector<DetectorPair> franson_pairs(PolBasis basis, MonitoredPort port)
{
    auto pairs = basis_pairs(basis);
    if (port == MonitoredPort::Secondary)
        for (auto& p : pairs) {
            p.first = "D" + std::to_string(p.first[1] - '0' + 4);
            p.second = "D" + std::to_string(p.second[1] - '0' + 4);
        }
    return pairs;
}

} // namespace

// ---------------------------------------------------------------------------
// Energy-time

EnergyTimePlan plan_energy_time(const RunConfig& config, int core_pair, PolBasis basis, const RunOptions& options)
{
    config.validate();
    const auto& scan = config.energy_time;
    const HyperState source = prepare_source(config.source);
    const DensityOperator rho = transmit(source.rho, config.fiber);

    EnergyTimePlan plan;
    plan.core_pair = core_pair;
    plan.basis = basis;
    plan.scan_values = linspace(scan.start, scan.stop, scan.steps);
    plan.phase_alice = config.franson.phase_alice + config.franson.intrinsic_phase;
    plan.pairs = franson_pairs(basis, config.franson.monitored);
    for (double v : plan.scan_values) plan.phases_bob.push_back(to_phase(v, scan.meters_to_radians));

    const double hwp = basis == PolBasis::HV ? config.polarization.hwp_hv : config.polarization.hwp_da;
    const PolarizationAnalyzer analyzer{hwp, config.polarization.extinction};
    FransonOptions fopt;
    fopt.coherence = {config.source.coherence_time, source.time_coherence};
    fopt.analyzer_a = analyzer;
    fopt.analyzer_b = analyzer;
    const auto detectors = detectors_for(config, config.franson.monitored == MonitoredPort::Secondary ? 5 : 1);

    const bool oracle_applies = config.franson.bs_transmittance == 0.5 && config.franson.monitored == MonitoredPort::Primary &&
                                config.polarization.extinction == 0.0 &&
                                std::abs(config.franson.delay_alice - config.franson.delay_bob) < config.source.coherence_time;
    std::vector<double> oracle_diff(plan.scan_values.size(), 0.0);

    plan.rates.resize(plan.scan_values.size());
    parallel_for(plan.scan_values.size(), options.threads, [&](std::size_t s) {
        const FransonInterferometer alice{pair_core(core_pair, Photon::A), config.franson.delay_alice, plan.phase_alice,
                                          config.franson.bs_transmittance, config.franson.monitored};
        const FransonInterferometer bob{pair_core(core_pair, Photon::B), config.franson.delay_bob, plan.phases_bob[s],
                                        config.franson.bs_transmittance, config.franson.monitored};
        const auto dist = franson_pair_distribution(rho, alice, bob, fopt);
        plan.rates[s] = expected_rates(dist, config.source.pair_rate, config.detectors.coupling, config.detectors.coupling,
                                       detectors, plan.pairs, TimeTag::Central, config.coincidence.window);
        if (options.oracle && oracle_applies) {
            const auto ref = oracle::franson_central(rho, alice.core, bob.core, alice.phase, bob.phase, hwp, hwp,
                                                     source.time_coherence);
            double worst = 0.0;
            for (std::size_t k = 0; k < 4; ++k)
                worst = std::max(worst, std::abs(ref[k] - dist.probability(plan.pairs[k].first, plan.pairs[k].second, TimeTag::Central)));
            oracle_diff[s] = worst;
        }
    });
    if (options.oracle) {
        plan.oracle.checked = oracle_applies;
        if (oracle_applies) {
            plan.oracle.max_abs_diff = *std::max_element(oracle_diff.begin(), oracle_diff.end());
            plan.oracle.comparisons = 4 * oracle_diff.size();
        } else {
            plan.oracle.note = "oracle assumes balanced beamsplitters, primary ports, ideal PBS and matched delays";
        }
    }
    return plan;
}

EnergyTimeResult analyze_energy_time(const RunConfig& config, int core_pair, PolBasis basis, std::vector<double> scan_values,
                                     std::vector<CountRecord> records)
{
    if (scan_values.size() != records.size()) throw RangeError("scan values and count records differ in length");
    EnergyTimeResult res;
    res.core_pair = core_pair;
    res.basis = basis;
    res.scan_values = std::move(scan_values);
    res.records = std::move(records);
    const auto pairs = basis_pairs(basis);
    const auto opts = fit_options(config, config.energy_time.meters_to_radians);

    for (const auto& p : pairs) {
        auto d = dataset(res.scan_values, res.records, {p.label});
        d.basis = to_string(basis);
        res.fits.push_back(fit_dataset(p.label, d, opts));
    }
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& f = res.fits[k];
        if (!f.visibility) continue;
        res.time_rows.push_back({f.pair, *f.visibility, qkd_threshold_check(*f.visibility, config.analysis.qkd_threshold)});
    }

    // Per-step polarization visibility; steps near the Franson minimum carry
    // few coincidences and are flagged rather than dropped.
    std::vector<double> totals;
    double max_total = 0.0;
    for (const auto& rec : res.records) {
        double t = 0.0;
        for (const auto& p : pairs) t += rec.pair(p.label).net;
        totals.push_back(t);
        max_total = std::max(max_total, t);
    }
    std::array<Measured, 4> pooled{};
    bool any = false;
    for (std::size_t s = 0; s < res.records.size(); ++s) {
        PolPoint pt;
        pt.scan_value = res.scan_values[s];
        pt.low_count = !(totals[s] > 0.0) || totals[s] < config.analysis.low_count_floor * max_total;
        std::array<Measured, 4> m{};
        for (std::size_t k = 0; k < 4; ++k) {
            const auto& c = res.records[s].pair(pairs[k].label);
            m[k] = {c.net, c.sigma};
        }
        if (totals[s] > 0.0) pt.visibility = polarization_visibility(m[0], m[1], m[2], m[3]);
        if (!pt.low_count) {
            any = true;
            for (std::size_t k = 0; k < 4; ++k) {
                pooled[k].value += m[k].value;
                pooled[k].sigma = std::hypot(pooled[k].sigma, m[k].sigma);
            }
        }
        res.pol_points.push_back(pt);
    }
    if (any) {
        const auto v = polarization_visibility(pooled[0], pooled[1], pooled[2], pooled[3]);
        res.pol_row = VisibilityRow{"pol " + to_string(basis), v, qkd_threshold_check(v, config.analysis.qkd_threshold)};
    }
    return res;
}

EnergyTimeResult execute_energy_time(const RunConfig& config, const EnergyTimePlan& plan, std::uint64_t seed,
                                     const RunOptions& options)
{
    std::vector<CountRecord> records(plan.rates.size());
    parallel_for(plan.rates.size(), options.threads, [&](std::size_t s) {
        records[s] = count(config, plan.rates[s], config.energy_time.integration_time, seed,
                           scan_index(1, static_cast<unsigned>(plan.core_pair), basis_code(plan.basis), s));
    });
    auto res = analyze_energy_time(config, plan.core_pair, plan.basis, plan.scan_values, std::move(records));
    res.oracle = plan.oracle;
    return res;
}

std::vector<EnergyTimeResult> run_energy_time_scan(const RunConfig& config, const RunOptions& options)
{
    std::vector<EnergyTimeResult> out;
    for (int k : config.energy_time.core_pairs)
        for (PolBasis b : config.energy_time.bases)
            out.push_back(execute_energy_time(config, plan_energy_time(config, k, b, options), config.seed, options));
    return out;
}

// ---------------------------------------------------------------------------
// Path

namespace {

std::string diagonal_label(int i, int j) { return "C" + std::to_string(i) + "/C" + std::to_string(j) + "'"; }

} // namespace

PathPlan plan_path(const RunConfig& config, const RunOptions& options)
{
    config.validate();
    const auto& scan = config.path;
    const HyperState source = prepare_source(config.source);
    const DensityOperator rho = transmit(source.rho, config.fiber);
    const int n = config.source.n_core_pairs;

    PathPlan plan;
    plan.scan_values = linspace(scan.start, scan.stop, scan.steps);
    for (double v : plan.scan_values) plan.piezo_phases.push_back(to_phase(v, scan.meters_to_radians));

    const CoherenceModel coherence{config.source.coherence_time, source.time_coherence};
    const auto detectors = detectors_for(config, 1);
    const auto pairs = path_pairs();
    std::vector<double> oracle_diff(plan.scan_values.size(), 0.0);
    plan.rates.resize(plan.scan_values.size());
    parallel_for(plan.scan_values.size(), options.threads, [&](std::size_t s) {
        PathStation station = config.path_station;
        station.piezo_phase = plan.piezo_phases[s];
        const auto dist = path_station_distribution(rho, station, coherence);
        plan.rates[s] = expected_rates(dist, config.source.pair_rate, config.detectors.coupling, config.detectors.coupling,
                                       detectors, pairs, TimeTag::NotApplicable, config.coincidence.window);
        if (options.oracle) {
            const auto ref = oracle::path_station(rho, station, config.source.coherence_time);
            double worst = 0.0;
            for (std::size_t k = 0; k < 4; ++k)
                worst = std::max(worst, std::abs(ref[k] - dist.probability(pairs[k].first, pairs[k].second, TimeTag::NotApplicable)));
            oracle_diff[s] = worst;
        }
    });
    if (options.oracle) {
        plan.oracle.checked = true;
        plan.oracle.max_abs_diff = *std::max_element(oracle_diff.begin(), oracle_diff.end());
        plan.oracle.comparisons = 4 * oracle_diff.size();
    }

    // Computational path basis: every core of photon A against every core of photon B.
    std::vector<std::string> cores;
    std::vector<DetectorSpec> cdet;
    for (int k = 1; k <= n; ++k) {
        cores.push_back(pair_core(k, Photon::A));
        cdet.push_back({"C" + pair_core(k, Photon::A), Photon::A, config.detectors.efficiency, config.detectors.dark_rate});
    }
    for (int k = 1; k <= n; ++k) {
        cores.push_back(pair_core(k, Photon::B));
        cdet.push_back({"C" + pair_core(k, Photon::B), Photon::B, config.detectors.efficiency, config.detectors.dark_rate});
    }
    std::vector<DetectorPair> cpairs;
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            const auto label = diagonal_label(i, j);
            cpairs.push_back({label, "C" + pair_core(i, Photon::A), "C" + pair_core(j, Photon::B)});
            if (i == j) plan.diagonal_pairs.push_back(label);
        }
    plan.diagonal_rates = expected_rates(path_basis_distribution(rho, cores), config.source.pair_rate, config.detectors.coupling,
                                         config.detectors.coupling, cdet, cpairs, TimeTag::NotApplicable, config.coincidence.window);
    return plan;
}

PathResult analyze_path(const RunConfig& config, std::vector<double> scan_values, std::vector<CountRecord> records,
                        CountRecord diagonal_record)
{
    if (scan_values.size() != records.size()) throw RangeError("scan values and count records differ in length");
    PathResult res;
    res.scan_values = std::move(scan_values);
    res.records = std::move(records);
    res.diagonal_record = std::move(diagonal_record);
    const auto opts = fit_options(config, config.path.meters_to_radians);

    for (const auto& p : path_pairs()) res.fits.push_back(fit_dataset(p.label, dataset(res.scan_values, res.records, {p.label}), opts));
    res.family_fits.push_back(fit_dataset("setting 0", dataset(res.scan_values, res.records, {"D1/D3", "D2/D4"}), opts));
    res.family_fits.push_back(fit_dataset("setting pi", dataset(res.scan_values, res.records, {"D1/D4", "D2/D3"}), opts));
    for (const auto& f : res.family_fits)
        if (f.visibility)
            res.rows.push_back({"path " + f.pair, *f.visibility, qkd_threshold_check(*f.visibility, config.analysis.qkd_threshold)});

    const int n = config.source.n_core_pairs;
    double total = 0.0;
    for (const auto& p : res.diagonal_record.pairs) total += p.net;
    int ii = 0;
    int jj = 1;
    for (int k = 1; k <= n; ++k) {
        const auto& c = res.diagonal_record.pair(diagonal_label(k, k));
        res.diagonals.push_back(total > 0.0 ? c.net / total : 0.0);
        if (pair_core(k, Photon::A) == config.path_station.alice_cores[0]) ii = k - 1;
        if (pair_core(k, Photon::A) == config.path_station.alice_cores[1]) jj = k - 1;
    }

    if (res.rows.size() != res.family_fits.size()) {
        res.certification_error = "path fringe fit failed";
        for (const auto& f : res.family_fits)
            if (!f.error.empty()) res.certification_error += "; " + f.pair + ": " + f.error;
        return res;
    }
    try {
        res.report = certify_path(res.rows, res.diagonals, ii, jj, config.analysis.qkd_threshold);
    } catch (const Error& e) {
        res.certification_error = e.what();
    }
    return res;
}

PathResult execute_path(const RunConfig& config, const PathPlan& plan, std::uint64_t seed, const RunOptions& options)
{
    std::vector<CountRecord> records(plan.rates.size());
    parallel_for(plan.rates.size(), options.threads, [&](std::size_t s) {
        records[s] = count(config, plan.rates[s], config.path.integration_time, seed, scan_index(2, 0, 0, s));
    });
    CountRecord diag = count(config, plan.diagonal_rates, config.path.diagonal_integration_time, seed, scan_index(3, 0, 0, 0));
    auto res = analyze_path(config, plan.scan_values, std::move(records), std::move(diag));
    res.oracle = plan.oracle;
    return res;
}

PathResult run_path_scan(const RunConfig& config, const RunOptions& options)
{
    return execute_path(config, plan_path(config, options), config.seed, options);
}

} // namespace hyperent
