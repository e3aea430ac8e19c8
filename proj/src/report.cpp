#include "pdpm/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "pdpm/errors.hpp"

namespace pdpm {

ReportFormat format_from_string(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw ConfigError("unknown report format '" + name + "' (expected csv or json)");
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

Table rq1_table(const std::vector<TradingRow>& rows) {
  Table t{{"protocol", "bound_varied", "bound_value", "avg_traded_loss", "stderr"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back(
        {r.protocol, r.parameter, format_number(r.value), format_number(r.result.mean), format_number(r.result.stderr_)});
  }
  return t;
}

Table rq2_table(const std::vector<TradingRow>& rows) {
  Table t{{"protocol", "parameter", "value", "avg_traded_loss", "stderr"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back(
        {r.protocol, r.parameter, format_number(r.value), format_number(r.result.mean), format_number(r.result.stderr_)});
  }
  return t;
}

Table rq3_table(const std::vector<TradingRow>& rows) {
  Table t{{"protocol", "scheme", "avg_traded_loss", "stderr"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.protocol, r.parameter, format_number(r.result.mean), format_number(r.result.stderr_)});
  }
  return t;
}

Table arbitrage_table(const std::vector<ArbitrageRow>& rows) {
  Table t{{"protocol", "v", "min_rate", "argmin_m", "n_infeasible"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.protocol, format_number(r.row.v),
                      r.row.price_defined ? format_number(r.row.min_rate) : std::string("nan"),
                      std::to_string(r.row.argmin_m), std::to_string(r.row.n_infeasible)});
  }
  return t;
}

void write_csv(std::ostream& out, const Table& t, const std::vector<std::string>& notes) {
  out << "# schema_version=" << kReportSchemaVersion << '\n';
  for (const auto& n : notes) out << "# " << n << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_json(std::ostream& out, const Table& t, const std::vector<std::string>& notes) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["notes"] = notes;
  j["columns"] = t.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) obj[t.columns[i]] = row[i];
    rows.push_back(obj);
  }
  j["rows"] = rows;
  out << j.dump(2) << '\n';
}

std::string emit_report(const std::string& dir, const std::string& name, const Table& t, ReportFormat format,
                        const std::vector<std::string>& notes) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  const std::string path =
      (std::filesystem::path(dir) / (name + (format == ReportFormat::csv ? ".csv" : ".json"))).string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (format == ReportFormat::csv) write_csv(out, t, notes);
  else write_json(out, t, notes);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
  return path;
}

std::vector<std::string> standard_notes(const ExperimentConfig& config) {
  return {"group sizes: floor(fraction*n) per group, remainder assigned to the liberal group",
          "seed=" + std::to_string(config.seed) + " population_seed=" + std::to_string(config.population.seed) +
              " rounds=" + std::to_string(config.rounds) + " queries=" + std::to_string(config.queries) +
              " V=" + format_number(config.max_variance) + " r=" + format_number(config.protocol.r) +
              " scheme=" + to_string(config.scheme)};
}

}  // namespace pdpm
