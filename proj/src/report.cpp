#include "hyperent/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace hyperent {

namespace {

std::string fmt(const char* spec, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

std::string pct(const VisibilityResult& v) { return fmt("%.1f", 100.0 * v.value) + " +- " + fmt("%.1f", 100.0 * v.sigma); }

std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string hex(std::uint64_t x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

const VisibilityRow* find_row(const std::vector<VisibilityRow>& rows, const std::string& label)
{
    for (const auto& r : rows)
        if (r.label == label) return &r;
    return nullptr;
}

} // namespace

std::string counts_csv(const std::vector<double>& scan_values, const std::vector<CountRecord>& records)
{
    if (scan_values.size() != records.size()) throw RangeError("scan values and count records differ in length");
    std::string out = std::string(kCsvHeader) + "\n";
    for (std::size_t s = 0; s < records.size(); ++s) {
        const std::string x = fmt("%.10g", scan_values[s]);
        for (const auto& p : records[s].pairs)
            out += x + "," + p.label + "," + fmt("%.10g", p.raw) + "," + fmt("%.10g", p.accidental) + "," + fmt("%.10g", p.net) + "," +
                   fmt("%.10g", p.sigma) + "\n";
    }
    return out;
}

CountTable parse_counts_csv(const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    CountTable table;
    std::string last_x;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != kCsvHeader) throw Error(origin + ": unexpected CSV header '" + line + "'");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw Error(origin + ": line " + std::to_string(lineno) + ": expected 6 fields");
        double v[5];
        for (int k = 0; k < 5; ++k) {
            const std::string& s = f[static_cast<std::size_t>(k == 0 ? 0 : k + 1)];
            char* end = nullptr;
            v[k] = std::strtod(s.c_str(), &end);
            if (s.empty() || end != s.c_str() + s.size())
                throw Error(origin + ": line " + std::to_string(lineno) + ": bad number '" + s + "'");
        }
        if (table.records.empty() || f[0] != last_x) {
            table.scan_values.push_back(v[0]);
            table.records.emplace_back();
            last_x = f[0];
        }
        PairCounts c;
        c.label = f[1];
        c.raw = v[1];
        c.accidental = v[2];
        c.net = v[3];
        c.sigma = v[4];
        c.clamped = c.raw - c.accidental < 0.0;
        table.records.back().pairs.push_back(std::move(c));
    }
    if (table.records.empty()) throw Error(origin + ": no data rows");
    return table;
}

CountTable read_counts_csv(const std::filesystem::path& path) { return parse_counts_csv(read_text(path), path.string()); }

std::string energy_time_csv_name(int core_pair, PolBasis basis)
{
    return "energy_time_pair" + std::to_string(core_pair) + "_" + to_string(basis) + ".csv";
}

std::string format_visibility(const VisibilityResult& v) { return fmt("%.6f", v.value) + " +- " + fmt("%.6f", v.sigma); }

std::string format_verdict(const QkdVerdict& q, double value)
{
    std::string s = q.pass ? "PASS" : "FAIL";
    s += " (V = " + fmt("%.4f", value) + (q.pass ? " > " : " <= ") + fmt("%.4g", q.threshold);
    if (std::isfinite(q.margin_sigma)) s += ", margin " + fmt("%+.1f", q.margin_sigma) + " sigma";
    return s + ")";
}

std::string certification_text(const FidelityReport& r)
{
    std::ostringstream o;
    o << "[fidelity]\n";
    o << "dimension = " << r.diagonals.size() << "\n";
    o << "diagonals =";
    double sum = 0.0;
    for (double p : r.diagonals) {
        o << " " << fmt("%.6f", p);
        sum += p;
    }
    o << "\ndiagonal_sum = " << fmt("%.6f", sum) << "\n";
    o << "interfered = " << r.interfered_i + 1 << " " << r.interfered_j + 1 << "\n";
    for (const auto& row : r.visibilities) {
        o << "visibility." << row.label << " = " << format_visibility(row.visibility) << "\n";
        o << "qkd." << row.label << " = " << format_verdict(row.verdict, row.visibility.value) << "\n";
    }
    o << "certifying_visibility = " << fmt("%.6f", r.certifying_visibility) << "\n";
    o << "offdiag = " << fmt("%.6f", r.offdiag) << "\n";
    o << "fidelity = " << fmt("%.6f", r.fidelity.value) << "\n";
    o << "fidelity_consistent = " << (r.fidelity.consistent ? "true" : "false") << "\n";
    o << "schmidt_number = " << r.schmidt_number << "\n";
    o << "schmidt_bound = " << fmt("%.4f", r.schmidt_number > 1 ? double(r.schmidt_number - 1) / double(r.diagonals.size()) : 0.0)
      << "\n";
    o << "assumption = " << r.assumption << "\n";
    return o.str();
}

std::string summary_text(const RunConfig& config, const std::vector<EnergyTimeResult>& energy_time, const PathResult* path)
{
    std::ostringstream o;
    o << "config_hash = " << hex(config_hash(config)) << "\n";
    o << "seed = " << config.seed << "\n";
    o << "mode = " << (config.mode == RunMode::Sampled ? "sampled" : "analytic") << "\n";
    o << "qkd_threshold = " << fmt("%.4g", config.analysis.qkd_threshold) << "\n";

    for (const auto& r : energy_time) {
        const std::string basis = to_string(r.basis);
        o << "\n[energy_time.pair" << r.core_pair << "." << basis << "]\n";
        o << "steps = " << r.scan_values.size() << "\n";
        for (const auto& f : r.fits) {
            if (!f.fit) {
                o << "fit." << f.pair << " = error: " << f.error << "\n";
                continue;
            }
            o << "fit." << f.pair << " = C " << fmt("%.6g", f.fit->offset) << ", A " << fmt("%.6g", f.fit->amplitude) << ", omega "
              << fmt("%.6g", f.fit->omega) << ", phase " << fmt("%.6g", f.fit->phase) << ", chi2r " << fmt("%.4g", f.fit->reduced_chi2)
              << (f.fit->degenerate ? ", degenerate" : "") << "\n";
            if (f.visibility) o << "visibility." << f.pair << " = " << format_visibility(*f.visibility) << "\n";
        }
        for (const auto& row : r.time_rows) o << "qkd.time." << row.label << " = " << format_verdict(row.verdict, row.visibility.value) << "\n";
        std::size_t low = 0;
        for (const auto& p : r.pol_points) low += p.low_count ? 1 : 0;
        o << "pol.low_count_points = " << low << "\n";
        if (r.pol_row) {
            o << "visibility.pol_" << basis << " = " << format_visibility(r.pol_row->visibility) << "\n";
            o << "qkd.pol_" << basis << " = " << format_verdict(r.pol_row->verdict, r.pol_row->visibility.value) << "\n";
        }
        if (r.oracle.checked)
            o << "oracle.max_abs_diff = " << fmt("%.3e", r.oracle.max_abs_diff) << " over " << r.oracle.comparisons << " probabilities\n";
        else if (!r.oracle.note.empty())
            o << "oracle = skipped: " << r.oracle.note << "\n";
    }

    // Tables grouped by core pair: time visibilities per detector combination
    // and polarization visibility per basis, in percent.
    std::vector<int> pairs_seen;
    for (const auto& r : energy_time)
        if (std::find(pairs_seen.begin(), pairs_seen.end(), r.core_pair) == pairs_seen.end()) pairs_seen.push_back(r.core_pair);
    for (int k : pairs_seen) {
        std::string head = pad("", 8);
        std::string time = pad("time", 8);
        std::string pol_head = pad("", 8);
        std::string pol = pad("pol", 8);
        for (const auto& r : energy_time) {
            if (r.core_pair != k) continue;
            for (const auto& row : r.time_rows) {
                head += pad(row.label, 16);
                time += pad(pct(row.visibility), 16);
            }
            if (r.pol_row) {
                pol_head += pad(to_string(r.basis), 16);
                pol += pad(pct(r.pol_row->visibility), 16);
            }
        }
        o << "\n[table.core_pair_" << k << "]\n" << head << "\n" << time << "\n" << pol_head << "\n" << pol << "\n";
    }

    if (path) {
        o << "\n[path]\nsteps = " << path->scan_values.size() << "\n";
        for (const auto& f : path->fits) {
            if (f.visibility) o << "visibility." << f.pair << " = " << format_visibility(*f.visibility) << "\n";
            else o << "fit." << f.pair << " = error: " << f.error << "\n";
        }
        for (const auto& f : path->family_fits) {
            if (!f.visibility) o << "fit." << f.pair << " = error: " << f.error << "\n";
        }
        if (path->oracle.checked)
            o << "oracle.max_abs_diff = " << fmt("%.3e", path->oracle.max_abs_diff) << " over " << path->oracle.comparisons
              << " probabilities\n";

        std::string head = pad("", 8);
        std::string vals = pad("path", 8);
        for (const char* label : {"path setting 0", "path setting pi"}) {
            head += pad(std::string(label).substr(5), 16);
            const auto* row = find_row(path->rows, label);
            vals += pad(row ? pct(row->visibility) : "n/a", 16);
        }
        o << "\n[table.path]\n" << head << "\n" << vals << "\n";
        o << "\n";
        if (path->report) o << certification_text(*path->report);
        else o << "[fidelity]\nerror = " << path->certification_error << "\n";
    }
    return o.str();
}

std::string manifest_text(const RunConfig& config, const ManifestInfo& info)
{
    std::ostringstream o;
    o << "command = " << info.command << "\n";
    o << "config_hash = " << hex(config_hash(config)) << "\n";
    o << "seed = " << config.seed << "\n";
    o << "mode = " << (config.mode == RunMode::Sampled ? "sampled" : "analytic") << "\n";
    o << "started_utc = " << info.started_utc << "\n";
    o << "finished_utc = " << info.finished_utc << "\n";
    for (const auto& a : info.artifacts) o << "artifact = " << a << "\n";
    // Scan targets and the phases held fixed while they vary.
    o << "scan.energy_time.target = phase_bob\n";
    o << "scan.path.target = piezo_phase\n";
    o << "fixed.franson.phase_alice = " << fmt("%.17g", config.franson.phase_alice) << "\n";
    o << "fixed.franson.intrinsic_phase = " << fmt("%.17g", config.franson.intrinsic_phase) << "\n";
    o << "fixed.path_station.intrinsic_phase = " << fmt("%.17g", config.path_station.intrinsic_phase) << "\n";
    o << "fixed.source.pol_phase = " << fmt("%.17g", config.source.pol_phase) << "\n";
    o << "fixed.source.inter_pair_phase = " << fmt("%.17g", config.source.inter_pair_phase) << "\n";
    for (const auto& [core, v] : config.fiber.phase) o << "fixed.fiber.phase." << core << " = " << fmt("%.17g", v) << "\n";
    o << "\n# resolved configuration\n" << canonical_config(config);
    return o.str();
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    out.close();
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace hyperent
