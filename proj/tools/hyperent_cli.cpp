// hyperent: run energy-time and path scans, write count CSVs, a summary and
// a manifest, or certify path entanglement from given visibilities.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hyperent/report.hpp"

namespace fs = std::filesystem;
using namespace hyperent;

namespace {

constexpr double kOracleTolerance = 1e-12;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "hyperent_out";
    bool oracle = false;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string mode;
};

RunConfig resolve_config(const Common& c)
{
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (c.mode == "sampled") cfg.mode = RunMode::Sampled;
    if (c.mode == "analytic") cfg.mode = RunMode::Analytic;
    cfg.validate();
    return cfg;
}

// The manifest ends with the resolved configuration; recover it so that
// `certify --from` analyzes CSVs with the settings that produced them.
RunConfig config_from_manifest(const fs::path& dir)
{
    const std::string text = read_text(dir / "manifest.txt");
    const std::string marker = "# resolved configuration\n";
    const auto at = text.find(marker);
    if (at == std::string::npos) throw Error((dir / "manifest.txt").string() + ": no resolved configuration");
    return parse_config_text(text.substr(at + marker.size()));
}

bool oracle_ok(const OracleDiff& d, const std::string& what)
{
    if (!d.checked) return true;
    if (d.max_abs_diff <= kOracleTolerance) return true;
    std::cerr << "oracle mismatch in " << what << ": max |diff| = " << d.max_abs_diff << "\n";
    return false;
}

int run_scans(const Common& c, bool energy_time, bool path, const std::string& command)
{
    const RunConfig cfg = resolve_config(c);
    ManifestInfo info;
    info.command = command;
    info.started_utc = utc_now();
    fs::create_directories(c.out);
    const RunOptions opts{c.threads, c.oracle};
    bool oracle_pass = true;

    std::vector<EnergyTimeResult> et;
    if (energy_time) {
        et = run_energy_time_scan(cfg, opts);
        for (const auto& r : et) {
            const auto name = energy_time_csv_name(r.core_pair, r.basis);
            write_text(fs::path(c.out) / name, counts_csv(r.scan_values, r.records));
            info.artifacts.push_back(name);
            oracle_pass = oracle_ok(r.oracle, name) && oracle_pass;
        }
    }
    std::optional<PathResult> pr;
    if (path) {
        pr = run_path_scan(cfg, opts);
        write_text(fs::path(c.out) / kPathCsv, counts_csv(pr->scan_values, pr->records));
        write_text(fs::path(c.out) / kPathDiagonalCsv, counts_csv({0.0}, {pr->diagonal_record}));
        info.artifacts.push_back(kPathCsv);
        info.artifacts.push_back(kPathDiagonalCsv);
        oracle_pass = oracle_ok(pr->oracle, "path scan") && oracle_pass;
    }

    const std::string summary = summary_text(cfg, et, pr ? &*pr : nullptr);
    write_text(fs::path(c.out) / "summary.txt", summary);
    info.artifacts.push_back("summary.txt");
    info.finished_utc = utc_now();
    info.artifacts.push_back("manifest.txt");
    write_text(fs::path(c.out) / "manifest.txt", manifest_text(cfg, info));
    std::cout << summary;
    return oracle_pass ? 0 : 3;
}

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw Error("bad number '" + tok + "'");
    }
    return out;
}

struct CertifyArgs {
    std::vector<std::string> vis;
    std::string diagonals;
    std::string pair = "3,4";
    std::string from;
    std::optional<double> threshold;
};

int run_certify(const Common& c, const CertifyArgs& a, bool write_out)
{
    FidelityReport rep;
    if (!a.from.empty()) {
        const fs::path dir(a.from);
        RunConfig cfg = c.config_path.empty() ? config_from_manifest(dir) : resolve_config(c);
        if (a.threshold) cfg.analysis.qkd_threshold = *a.threshold;
        const auto scan = read_counts_csv(dir / kPathCsv);
        const auto diag = read_counts_csv(dir / kPathDiagonalCsv);
        const auto res = analyze_path(cfg, scan.scan_values, scan.records, diag.records.at(0));
        if (!res.report) throw Error("certification failed: " + res.certification_error);
        rep = *res.report;
    } else {
        if (a.vis.empty()) throw Error("certify needs --vis or --from");
        std::vector<VisibilityRow> rows;
        for (const auto& v : a.vis) {
            VisibilityRow row;
            const auto colon = v.find(':');
            row.label = "input" + std::to_string(rows.size() + 1);
            row.visibility.value = std::stod(v.substr(0, colon));
            if (colon != std::string::npos) row.visibility.sigma = std::stod(v.substr(colon + 1));
            rows.push_back(row);
        }
        const auto diagonals = a.diagonals.empty() ? std::vector<double>(4, 0.25) : parse_list(a.diagonals);
        const auto pair = parse_list(a.pair);
        if (pair.size() != 2) throw Error("--pair expects two core-pair numbers, e.g. 3,4");
        rep = certify_path(rows, diagonals, static_cast<int>(pair[0]) - 1, static_cast<int>(pair[1]) - 1,
                           a.threshold.value_or(kQkdVisibilityThreshold));
    }
    const std::string text = certification_text(rep);
    if (write_out) {
        fs::create_directories(c.out);
        write_text(fs::path(c.out) / "certification.txt", text);
    }
    std::cout << text;
    return rep.schmidt_number > 1 ? 0 : 4;
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config_path, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "Sampling seed (overrides the config)");
    sub->add_option("--out", c.out, "Output directory");
    sub->add_flag("--oracle", c.oracle, "Diff station probabilities against brute-force enumeration");
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--mode", c.mode, "sampled or analytic (overrides the config)")->check(CLI::IsMember({"sampled", "analytic"}));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hyper-entangled photon pair distribution simulator"};
    app.require_subcommand(1);
    Common common;
    CertifyArgs cert;

    auto* et = app.add_subcommand("energy-time", "Franson phase scans for the configured core pairs and bases");
    auto* path = app.add_subcommand("path", "Piezo phase scan of the path station and path certification");
    auto* all = app.add_subcommand("all", "Energy-time and path scans");
    auto* certify = app.add_subcommand("certify", "Fidelity and Schmidt-number certification from path visibilities");
    for (auto* sub : {et, path, all, certify}) add_common(sub, common);
    certify->add_option("--vis", cert.vis, "Path visibility as value[:sigma]; repeatable");
    certify->add_option("--diagonals", cert.diagonals, "Comma-separated path diagonals p_i (default uniform over 4)");
    certify->add_option("--pair", cert.pair, "Interfered core pairs, 1-based (default 3,4)");
    certify->add_option("--from", cert.from, "Run directory with path CSVs and manifest")->check(CLI::ExistingDirectory);
    certify->add_option("--threshold", cert.threshold, "QKD visibility threshold");

    CLI11_PARSE(app, argc, argv);

    std::string command;
    for (int i = 1; i < argc; ++i) command += (i > 1 ? " " : "") + std::string(argv[i]);
    try {
        if (et->parsed()) return run_scans(common, true, false, command);
        if (path->parsed()) return run_scans(common, false, true, command);
        if (all->parsed()) return run_scans(common, true, true, command);
        if (certify->parsed()) return run_certify(common, cert, certify->count("--out") > 0);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
