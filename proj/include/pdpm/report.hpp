#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "pdpm/experiments.hpp"

namespace pdpm {

inline constexpr int kReportSchemaVersion = 1;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

enum class ReportFormat { csv, json };
ReportFormat format_from_string(const std::string& name);

// %.10g; non-finite values print as inf, -inf or nan.
std::string format_number(double x);

Table rq1_table(const std::vector<TradingRow>& rows);
Table rq2_table(const std::vector<TradingRow>& rows);
Table rq3_table(const std::vector<TradingRow>& rows);
Table arbitrage_table(const std::vector<ArbitrageRow>& rows);

// Header lines starting with '#' carry the schema version and notes.
void write_csv(std::ostream& out, const Table& t, const std::vector<std::string>& notes = {});
void write_json(std::ostream& out, const Table& t, const std::vector<std::string>& notes = {});

// Writes <dir>/<name>.<csv|json> and returns the path. Throws IoError.
std::string emit_report(const std::string& dir, const std::string& name, const Table& t, ReportFormat format,
                        const std::vector<std::string>& notes = {});

// Notes shared by every trading report.
std::vector<std::string> standard_notes(const ExperimentConfig& config);

}  // namespace pdpm
