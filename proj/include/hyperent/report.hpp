#pragma once

// Artifacts: per-scan count CSVs, the summary report and the run manifest.

#include <filesystem>
#include <string>
#include <vector>

#include "hyperent/runner.hpp"

namespace hyperent {

inline constexpr const char* kCsvHeader = "scan_value,pair,raw,accidental,net,sigma";

struct CountTable {
    std::vector<double> scan_values;
    std::vector<CountRecord> records;
};

/// One row per (step, pair) in record order; numbers printed with %.10g.
std::string counts_csv(const std::vector<double>& scan_values, const std::vector<CountRecord>& records);
/// Inverse of counts_csv: consecutive rows sharing a scan value form a record.
CountTable parse_counts_csv(const std::string& text, const std::string& origin = "<csv>");
CountTable read_counts_csv(const std::filesystem::path& path);

std::string energy_time_csv_name(int core_pair, PolBasis basis);
inline constexpr const char* kPathCsv = "path_scan.csv";
inline constexpr const char* kPathDiagonalCsv = "path_diagonals.csv";

std::string format_visibility(const VisibilityResult& v);
std::string format_verdict(const QkdVerdict& q, double value);

/// Key = value sections for every scan, tables per core pair and for the
/// path station, and the fidelity chain.
std::string summary_text(const RunConfig& config, const std::vector<EnergyTimeResult>& energy_time, const PathResult* path);
std::string certification_text(const FidelityReport& report);

struct ManifestInfo {
    std::string command;
    std::string started_utc;
    std::string finished_utc;
    std::vector<std::string> artifacts;
};
std::string manifest_text(const RunConfig& config, const ManifestInfo& info);

std::string utc_now();
/// Throws Error naming the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace hyperent
