#include "hyperent/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hyperent/random.hpp"

namespace hyperent {

std::string to_string(PolBasis b) { return b == PolBasis::HV ? "HV" : "DA"; }

namespace {

using Lines = std::map<std::string, int>;

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double parse_number(std::string v, int line)
{
    v = trim(v);
    double scale = 1.0;
    auto strip = [&](const std::string& suffix, double factor) {
        if (v.size() > suffix.size() && v.compare(v.size() - suffix.size(), suffix.size(), suffix) == 0) {
            v = trim(v.substr(0, v.size() - suffix.size()));
            scale = factor;
            return true;
        }
        return false;
    };
    if (v == "pi") return std::numbers::pi;
    if (!strip("deg", std::numbers::pi / 180.0)) strip("pi", std::numbers::pi);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x)) throw ConfigError("expected a number, got '" + v + "'", line);
    return x * scale;
}

long long parse_int(const std::string& v, int line)
{
    char* end = nullptr;
    const std::string t = trim(v);
    const long long x = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) throw ConfigError("expected an integer, got '" + t + "'", line);
    return x;
}

bool parse_bool(const std::string& v, int line)
{
    const std::string t = trim(v);
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    throw ConfigError("expected true or false, got '" + t + "'", line);
}

} // namespace

// Coupled-mode crosstalk between hexagonal nearest neighbours:
// U = exp(i eps A) with A the adjacency matrix, so the fiber stays lossless.
Eigen::MatrixXcd neighbour_crosstalk(double eps)
{
    const auto& layout = FiberLayout::standard19();
    const auto n = static_cast<Eigen::Index>(layout.size());
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& s = layout.cores()[static_cast<std::size_t>(i)];
            const auto& t = layout.cores()[static_cast<std::size_t>(j)];
            const int dq = t.q - s.q;
            const int dr = t.r - s.r;
            if ((std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2 == 1) adj(i, j) = 1.0;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(adj);
    Eigen::VectorXcd phases(n);
    for (Eigen::Index k = 0; k < n; ++k) phases(k) = std::polar(1.0, eps * es.eigenvalues()(k));
    const Eigen::MatrixXcd v = es.eigenvectors().cast<cd>();
    return v * phases.asDiagonal() * v.transpose();
}

namespace {

Eigen::Matrix2cd euler_unitary(double alpha, double beta, double gamma)
{
    auto rz = [](double a) {
        Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
        m(0, 0) = std::polar(1.0, -a / 2);
        m(1, 1) = std::polar(1.0, a / 2);
        return m;
    };
    Eigen::Matrix2cd ry;
    ry << std::cos(beta / 2), -std::sin(beta / 2), std::sin(beta / 2), std::cos(beta / 2);
    return rz(alpha) * ry * rz(gamma);
}

void validate_with_lines(const RunConfig& c, const Lines& lines)
{
    auto line = [&](const std::string& key) {
        auto it = lines.find(key);
        return it == lines.end() ? 0 : it->second;
    };
    // Module checks do not say which key failed; point at the section's first key.
    auto guard = [&](const std::string& section, const std::function<void()>& f) {
        try {
            f();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            int first = 0;
            for (const auto& [key, at] : lines)
                if (key.rfind(section + ".", 0) == 0 && (first == 0 || at < first)) first = at;
            throw ConfigError(std::string(e.what()) + " [" + section + "]", first);
        }
    };

    guard("source", [&] { c.source.validate(); });
    guard("fiber", [&] { c.fiber.validate(); });
    guard("franson", [&] {
        FransonInterferometer{"1", c.franson.delay_alice, 0.0, c.franson.bs_transmittance}.validate();
        FransonInterferometer{"1'", c.franson.delay_bob, 0.0, c.franson.bs_transmittance}.validate();
    });
    guard("polarization", [&] { PolarizationAnalyzer{0.0, c.polarization.extinction}.validate(); });
    guard("path_station", [&] { c.path_station.validate(); });
    guard("detectors", [&] { DetectorSpec{"D", Photon::A, c.detectors.efficiency, c.detectors.dark_rate}.validate(); });
    if (!(c.detectors.coupling >= 0.0 && c.detectors.coupling <= 1.0))
        throw ConfigError("detectors.coupling must lie in [0,1]", line("detectors.coupling"));
    guard("coincidence", [&] { c.coincidence.validate(); });

    const auto& layout = FiberLayout::standard19();
    for (int k : c.energy_time.core_pairs) {
        if (k < 1 || k > c.source.n_core_pairs)
            throw ConfigError("energy-time core pair " + std::to_string(k) + " is not emitted by the source", line("scan.energy_time.core_pairs"));
        if (opposite_core(pair_core(k, Photon::A)) != pair_core(k, Photon::B))
            throw ConfigError("core pair " + std::to_string(k) + " is not diametrically opposite", line("scan.energy_time.core_pairs"));
    }
    for (const auto* cores : {&c.path_station.alice_cores, &c.path_station.bob_cores})
        for (const auto& core : *cores) {
            if (!layout.contains(core)) throw ConfigError("unknown fiber core '" + core + "'", line("path_station.alice"));
            bool emitted = false;
            for (int k = 1; k <= c.source.n_core_pairs; ++k)
                emitted = emitted || core == pair_core(k, Photon::A) || core == pair_core(k, Photon::B);
            if (!emitted) throw ConfigError("path station core '" + core + "' is not fed by the source", line("path_station.alice"));
        }
    for (const auto& [core, v] : c.path_station.length_offsets)
        if (!layout.contains(core)) throw ConfigError("unknown fiber core '" + core + "'", line("path_station.offset." + core));

    if (c.energy_time.steps < 8) throw ConfigError("energy-time scan needs at least 8 steps", line("scan.energy_time.steps"));
    if (c.path.steps < 8) throw ConfigError("path scan needs at least 8 steps", line("scan.path.steps"));
    if (!(c.energy_time.stop > c.energy_time.start)) throw ConfigError("energy-time scan stop must exceed start", line("scan.energy_time.stop"));
    if (!(c.path.stop > c.path.start)) throw ConfigError("path scan stop must exceed start", line("scan.path.stop"));
    if (!(c.energy_time.integration_time > 0.0))
        throw ConfigError("integration time must be positive", line("scan.energy_time.integration_time"));
    if (!(c.path.integration_time > 0.0) || !(c.path.diagonal_integration_time > 0.0))
        throw ConfigError("integration time must be positive", line("scan.path.integration_time"));
    if (c.energy_time.bases.empty()) throw ConfigError("no polarization basis selected", line("scan.energy_time.bases"));
    if (c.energy_time.core_pairs.empty()) throw ConfigError("no core pair selected", line("scan.energy_time.core_pairs"));
    if (!(c.analysis.low_count_floor >= 0.0 && c.analysis.low_count_floor < 1.0))
        throw ConfigError("low_count_floor must lie in [0,1)", line("analysis.low_count_floor"));
}

} // namespace

void RunConfig::validate() const { validate_with_lines(*this, {}); }

RunConfig parse_config(std::istream& in)
{
    RunConfig c;
    Lines lines;
    std::string section;
    std::string raw;
    int lineno = 0;
    double crosstalk_eps = 0.0;

    while (std::getline(in, raw)) {
        ++lineno;
        std::string s = raw;
        if (auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("unterminated section header", lineno);
            section = trim(s.substr(1, s.size() - 2));
            static const std::vector<std::string> known{"run",   "source",      "fiber",       "franson",          "polarization",
                                                        "path_station", "detectors", "coincidence", "scan.energy_time", "scan.path",
                                                        "analysis"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                throw ConfigError("unknown section [" + section + "]", lineno);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
        if (section.empty()) throw ConfigError("key outside of any section", lineno);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const std::string full = section + "." + key;
        if (lines.count(full)) throw ConfigError("duplicate key '" + key + "'", lineno);
        lines[full] = lineno;

        auto num = [&] { return parse_number(value, lineno); };
        auto prefixed = [&](const std::string& prefix, std::string& rest) {
            if (key.rfind(prefix, 0) != 0) return false;
            rest = key.substr(prefix.size());
            if (rest.empty()) throw ConfigError("missing core name in '" + key + "'", lineno);
            if (!FiberLayout::standard19().contains(rest)) throw ConfigError("unknown fiber core '" + rest + "'", lineno);
            return true;
        };
        bool handled = true;
        std::string core;

        if (section == "run") {
            if (key == "mode") {
                if (value == "sampled") c.mode = RunMode::Sampled;
                else if (value == "analytic") c.mode = RunMode::Analytic;
                else throw ConfigError("mode must be 'sampled' or 'analytic'", lineno);
            } else if (key == "seed") {
                const long long v = parse_int(value, lineno);
                if (v < 0) throw ConfigError("seed must be non-negative", lineno);
                c.seed = static_cast<std::uint64_t>(v);
            } else handled = false;
        } else if (section == "source") {
            auto& s = c.source;
            if (key == "n_core_pairs") s.n_core_pairs = static_cast<int>(parse_int(value, lineno));
            else if (key == "pair_rate") s.pair_rate = num();
            else if (key == "coherence_time") s.coherence_time = num();
            else if (key == "pol_phase") s.pol_phase = num();
            else if (key == "inter_pair_phase") s.inter_pair_phase = num();
            else if (key == "p_path") s.dephasing.path = num();
            else if (key == "p_time") s.dephasing.time = num();
            else if (key == "p_pol") s.dephasing.pol = num();
            else if (key == "white_noise") s.white_noise = num();
            else if (key == "center_wavelength") s.center_wavelength = num();
            else handled = false;
        } else if (section == "fiber") {
            if (key == "length") c.fiber.length = num();
            else if (key == "crosstalk_neighbour") crosstalk_eps = num();
            else if (prefixed("loss_db.", core)) c.fiber.loss_db[core] = num();
            else if (prefixed("phase.", core)) c.fiber.phase[core] = num();
            else if (prefixed("drift.", core)) {
                std::vector<double> v;
                for (const auto& tok : split(value, ' ')) v.push_back(parse_number(tok, lineno));
                if (v.size() == 3) {
                    c.fiber.pol_drift[core] = euler_unitary(v[0], v[1], v[2]);
                } else if (v.size() == 8) {
                    Eigen::Matrix2cd m;
                    m << cd{v[0], v[1]}, cd{v[2], v[3]}, cd{v[4], v[5]}, cd{v[6], v[7]};
                    c.fiber.pol_drift[core] = m;
                } else {
                    throw ConfigError("drift expects 3 Euler angles or 8 matrix entries", lineno);
                }
                try {
                    check_unitary(c.fiber.pol_drift[core], 1e-9);
                } catch (const UnitarityError& e) {
                    throw ConfigError(e.what(), lineno);
                }
            } else handled = false;
        } else if (section == "franson") {
            auto& f = c.franson;
            if (key == "delay_alice") f.delay_alice = num();
            else if (key == "delay_bob") f.delay_bob = num();
            else if (key == "phase_alice") f.phase_alice = num();
            else if (key == "intrinsic_phase") f.intrinsic_phase = num();
            else if (key == "bs_transmittance") f.bs_transmittance = num();
            else if (key == "monitored") {
                if (value == "primary") f.monitored = MonitoredPort::Primary;
                else if (value == "secondary") f.monitored = MonitoredPort::Secondary;
                else if (value == "both") f.monitored = MonitoredPort::Both;
                else throw ConfigError("monitored must be primary, secondary or both", lineno);
            } else handled = false;
        } else if (section == "polarization") {
            if (key == "extinction") c.polarization.extinction = num();
            else if (key == "hwp_hv") c.polarization.hwp_hv = num();
            else if (key == "hwp_da") c.polarization.hwp_da = num();
            else handled = false;
        } else if (section == "path_station") {
            auto& p = c.path_station;
            if (key == "alice" || key == "bob") {
                const auto cores = split(value, ',');
                if (cores.size() != 2) throw ConfigError(key + " expects two comma-separated cores", lineno);
                auto& dst = key == "alice" ? p.alice_cores : p.bob_cores;
                dst = {cores[0], cores[1]};
            } else if (key == "intrinsic_phase") p.intrinsic_phase = num();
            else if (key == "prefilter") p.pbs_prefilter = parse_bool(value, lineno);
            else if (key == "prefilter_axis") p.prefilter_axis = num();
            else if (key == "bs_transmittance") p.bs_transmittance = num();
            else if (prefixed("offset.", core)) p.length_offsets[core] = num();
            else handled = false;
        } else if (section == "detectors") {
            if (key == "efficiency") c.detectors.efficiency = num();
            else if (key == "dark_rate") c.detectors.dark_rate = num();
            else if (key == "coupling") c.detectors.coupling = num();
            else handled = false;
        } else if (section == "coincidence") {
            if (key == "window") c.coincidence.window = num();
            else if (key == "subtract_accidentals") c.coincidence.subtract_accidentals = parse_bool(value, lineno);
            else handled = false;
        } else if (section == "scan.energy_time") {
            auto& e = c.energy_time;
            if (key == "core_pairs") {
                e.core_pairs.clear();
                for (const auto& tok : split(value, ',')) e.core_pairs.push_back(static_cast<int>(parse_int(tok, lineno)));
            } else if (key == "bases") {
                e.bases.clear();
                for (const auto& tok : split(value, ',')) {
                    if (tok == "HV") e.bases.push_back(PolBasis::HV);
                    else if (tok == "DA") e.bases.push_back(PolBasis::DA);
                    else throw ConfigError("basis must be HV or DA, got '" + tok + "'", lineno);
                }
            } else if (key == "start") e.start = num();
            else if (key == "stop") e.stop = num();
            else if (key == "steps") e.steps = static_cast<int>(parse_int(value, lineno));
            else if (key == "integration_time") e.integration_time = num();
            else if (key == "meters_to_radians") e.meters_to_radians = num();
            else handled = false;
        } else if (section == "scan.path") {
            auto& p = c.path;
            if (key == "start") p.start = num();
            else if (key == "stop") p.stop = num();
            else if (key == "steps") p.steps = static_cast<int>(parse_int(value, lineno));
            else if (key == "integration_time") p.integration_time = num();
            else if (key == "diagonal_integration_time") p.diagonal_integration_time = num();
            else if (key == "meters_to_radians") p.meters_to_radians = num();
            else handled = false;
        } else if (section == "analysis") {
            if (key == "lock_omega") c.analysis.lock_omega = parse_bool(value, lineno);
            else if (key == "low_count_floor") c.analysis.low_count_floor = num();
            else if (key == "qkd_threshold") c.analysis.qkd_threshold = num();
            else handled = false;
        }
        if (!handled) throw ConfigError("unknown key '" + key + "' in [" + section + "]", lineno);
    }

    c.crosstalk_neighbour = crosstalk_eps;
    if (crosstalk_eps != 0.0) c.fiber.crosstalk = neighbour_crosstalk(crosstalk_eps);
    validate_with_lines(c, lines);
    return c;
}

RunConfig parse_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return parse_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace {

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

std::string canonical_config(const RunConfig& c)
{
    std::ostringstream o;
    o << "[run]\nmode = " << (c.mode == RunMode::Sampled ? "sampled" : "analytic") << "\nseed = " << c.seed << "\n";
    const auto& s = c.source;
    o << "\n[source]\nn_core_pairs = " << s.n_core_pairs << "\npair_rate = " << fmt(s.pair_rate)
      << "\ncoherence_time = " << fmt(s.coherence_time) << "\npol_phase = " << fmt(s.pol_phase)
      << "\ninter_pair_phase = " << fmt(s.inter_pair_phase) << "\np_path = " << fmt(s.dephasing.path)
      << "\np_time = " << fmt(s.dephasing.time) << "\np_pol = " << fmt(s.dephasing.pol) << "\nwhite_noise = " << fmt(s.white_noise)
      << "\ncenter_wavelength = " << fmt(s.center_wavelength) << "\n";

    o << "\n[fiber]\nlength = " << fmt(c.fiber.length) << "\n";
    if (c.crosstalk_neighbour != 0.0) o << "crosstalk_neighbour = " << fmt(c.crosstalk_neighbour) << "\n";
    for (const auto& [core, v] : c.fiber.loss_db) o << "loss_db." << core << " = " << fmt(v) << "\n";
    for (const auto& [core, v] : c.fiber.phase) o << "phase." << core << " = " << fmt(v) << "\n";
    for (const auto& [core, u] : c.fiber.pol_drift) {
        o << "drift." << core << " =";
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) o << " " << fmt(u(i, j).real()) << " " << fmt(u(i, j).imag());
        o << "\n";
    }

    const auto& f = c.franson;
    o << "\n[franson]\ndelay_alice = " << fmt(f.delay_alice) << "\ndelay_bob = " << fmt(f.delay_bob)
      << "\nphase_alice = " << fmt(f.phase_alice) << "\nintrinsic_phase = " << fmt(f.intrinsic_phase)
      << "\nbs_transmittance = " << fmt(f.bs_transmittance) << "\nmonitored = "
      << (f.monitored == MonitoredPort::Primary ? "primary" : f.monitored == MonitoredPort::Secondary ? "secondary" : "both") << "\n";

    o << "\n[polarization]\nextinction = " << fmt(c.polarization.extinction) << "\nhwp_hv = " << fmt(c.polarization.hwp_hv)
      << "\nhwp_da = " << fmt(c.polarization.hwp_da) << "\n";

    const auto& p = c.path_station;
    o << "\n[path_station]\nalice = " << p.alice_cores[0] << "," << p.alice_cores[1] << "\nbob = " << p.bob_cores[0] << ","
      << p.bob_cores[1] << "\nintrinsic_phase = " << fmt(p.intrinsic_phase) << "\nprefilter = " << (p.pbs_prefilter ? "true" : "false")
      << "\nprefilter_axis = " << fmt(p.prefilter_axis) << "\nbs_transmittance = " << fmt(p.bs_transmittance) << "\n";
    for (const auto& [core, v] : p.length_offsets) o << "offset." << core << " = " << fmt(v) << "\n";

    o << "\n[detectors]\nefficiency = " << fmt(c.detectors.efficiency) << "\ndark_rate = " << fmt(c.detectors.dark_rate)
      << "\ncoupling = " << fmt(c.detectors.coupling) << "\n";
    o << "\n[coincidence]\nwindow = " << fmt(c.coincidence.window)
      << "\nsubtract_accidentals = " << (c.coincidence.subtract_accidentals ? "true" : "false") << "\n";

    const auto& e = c.energy_time;
    o << "\n[scan.energy_time]\ncore_pairs = ";
    for (std::size_t k = 0; k < e.core_pairs.size(); ++k) o << (k ? "," : "") << e.core_pairs[k];
    o << "\nbases = ";
    for (std::size_t k = 0; k < e.bases.size(); ++k) o << (k ? "," : "") << to_string(e.bases[k]);
    o << "\nstart = " << fmt(e.start) << "\nstop = " << fmt(e.stop) << "\nsteps = " << e.steps
      << "\nintegration_time = " << fmt(e.integration_time) << "\nmeters_to_radians = " << fmt(e.meters_to_radians) << "\n";

    o << "\n[scan.path]\nstart = " << fmt(c.path.start) << "\nstop = " << fmt(c.path.stop) << "\nsteps = " << c.path.steps
      << "\nintegration_time = " << fmt(c.path.integration_time)
      << "\ndiagonal_integration_time = " << fmt(c.path.diagonal_integration_time)
      << "\nmeters_to_radians = " << fmt(c.path.meters_to_radians) << "\n";

    o << "\n[analysis]\nlock_omega = " << (c.analysis.lock_omega ? "true" : "false")
      << "\nlow_count_floor = " << fmt(c.analysis.low_count_floor) << "\nqkd_threshold = " << fmt(c.analysis.qkd_threshold) << "\n";
    return o.str();
}

std::uint64_t config_hash(const RunConfig& config) { return fnv1a64(canonical_config(config)); }

} // namespace hyperent
