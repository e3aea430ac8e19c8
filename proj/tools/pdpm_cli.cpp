// Command-line front end: simulate, pattern-search, arbitrage-audit, quote, report.
#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdpm/allocation.hpp"
#include "pdpm/config.hpp"
#include "pdpm/errors.hpp"
#include "pdpm/experiments.hpp"
#include "pdpm/protocol.hpp"
#include "pdpm/report.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kInfeasible = 3, kIo = 4 };

// Flags shared by every subcommand; each maps onto one settings key.
struct CommonFlags {
  std::string config_path;
  std::deque<std::pair<std::string, std::string>> values;  // key, raw flag value
  std::vector<CLI::Option*> options;
  std::vector<std::string> keys;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "INI file with [population], [protocol], [experiment]");
    flag(app, "--protocol", "protocol.name", "UT, PT, UTP or PTP");
    flag(app, "--r", "protocol.r", "reservation rate");
    flag(app, "--profit-rate", "protocol.profit_rate", "flat markup on cost");
    flag(app, "--theta-lower", "protocol.theta_lower", "partial range θ^L");
    flag(app, "--theta-upper", "protocol.theta_upper", "partial range θ^U");
    flag(app, "--exchange", "protocol.exchange", "true to run pattern exchange");
    flag(app, "--sigma", "protocol.sigma", "pattern search stop threshold");
    flag(app, "--deduct-consumed-only", "protocol.deduct_consumed_only",
         "deviation: deduct consumed losses instead of budgets");
    flag(app, "--n", "population.n", "number of owners");
    flag(app, "--scheme", "population.scheme", "selectable, semiselectable, unselectable or all_superadditive");
    flag(app, "--population-seed", "population.seed", "population seed (defaults to --seed)");
    flag(app, "--V", "experiment.V", "maximum variance accepted by buyers");
    flag(app, "--rounds", "experiment.rounds", "independent rounds");
    flag(app, "--queries", "experiment.queries", "queries per round");
  }

  void flag(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
    values.emplace_back(key, "");
    keys.push_back(key);
    options.push_back(app->add_option(name, values.back().second, help));
  }

  pdpm::Settings settings() const {
    pdpm::Settings s;
    if (!config_path.empty()) s = pdpm::load_config_file(config_path);
    pdpm::Settings flags;
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (options[i]->count() > 0) flags[values[i].first] = values[i].second;
    }
    return pdpm::merge_settings(s, flags);
  }
};

pdpm::ExperimentConfig build_config(const CommonFlags& flags, std::optional<std::uint64_t> seed,
                                    pdpm::Settings* out_settings = nullptr) {
  pdpm::Settings s = flags.settings();
  if (seed) s["experiment.seed"] = std::to_string(*seed);
  pdpm::ExperimentConfig c;
  pdpm::apply_settings(c, s);
  c.validate();
  if (out_settings) *out_settings = s;
  return c;
}

std::string setting_or(const pdpm::Settings& s, const std::string& key, const std::string& fallback) {
  auto it = s.find(key);
  return it == s.end() ? fallback : it->second;
}

std::string g(double x) { return pdpm::format_number(x); }

int cmd_simulate(const CommonFlags& flags, std::uint64_t seed, const std::string& out_dir, const std::string& events,
                 const std::string& format) {
  pdpm::Settings s;
  const pdpm::ExperimentConfig c = build_config(flags, seed, &s);
  const pdpm::Population pop = pdpm::build_population(c);
  const pdpm::SessionSetup setup = pdpm::prepare_session(c.protocol, pop.owners());
  std::ofstream ev;
  if (!events.empty()) {
    ev.open(events, std::ios::binary | std::ios::trunc);
    if (!ev) throw pdpm::IoError("cannot open '" + events + "' for writing");
  }
  const pdpm::TradingResult r = pdpm::run_trading(c, pop, setup, events.empty() ? nullptr : &ev);
  std::cout << "protocol=" << c.protocol.name << " avg_traded_loss=" << g(r.mean) << " stderr=" << g(r.stderr_)
            << " rounds=" << c.rounds << " accepted=" << r.accepted << " rejected=" << r.rejected
            << " no_trade=" << r.no_trade << '\n';
  const std::string dir = out_dir.empty() ? setting_or(s, "experiment.output", "") : out_dir;
  if (!dir.empty()) {
    pdpm::Table t{{"protocol", "avg_traded_loss", "stderr", "accepted", "rejected", "no_trade"},
                  {{c.protocol.name, g(r.mean), g(r.stderr_), std::to_string(r.accepted), std::to_string(r.rejected),
                    std::to_string(r.no_trade)}}};
    const std::string fmt = format.empty() ? setting_or(s, "experiment.format", "csv") : format;
    std::cout << "wrote " << pdpm::emit_report(dir, "simulate", t, pdpm::format_from_string(fmt),
                                               pdpm::standard_notes(c))
              << '\n';
  }
  return kOk;
}

int cmd_pattern_search(const CommonFlags& flags, std::optional<std::uint64_t> seed, const std::string& variant) {
  const pdpm::ExperimentConfig c = build_config(flags, seed);
  const pdpm::Population pop = pdpm::build_population(c);
  pdpm::PatternSearchOptions o;
  if (variant == "af") o.variant = pdpm::SearchVariant::af;
  else if (variant == "paf") o.variant = pdpm::SearchVariant::paf;
  else throw pdpm::ConfigError("--variant must be af or paf");
  o.sigma = c.protocol.sigma;
  o.check = c.protocol.check;
  o.theta_lower = c.protocol.theta_lower.value_or(1.5);
  o.theta_upper = c.protocol.theta_upper;
  const pdpm::PatternSearchResult r = pdpm::pattern_search(pop.bounds, o);

  std::cout << "variant=" << variant << " iterations=" << r.iterations << " converged=" << (r.converged ? 1 : 0)
            << " t=" << g(r.t) << " objective=" << g(r.objective)
            << " monotonicity_violations=" << r.monotonicity_violations.size() << '\n';
  std::vector<std::pair<double, double>> seen;  // bound → ρ
  for (std::size_t i = 0; i < pop.size(); ++i) {
    bool dup = false;
    for (const auto& [b, _] : seen) dup = dup || b == pop.bounds[i];
    if (!dup) seen.emplace_back(pop.bounds[i], r.pattern[i]);
  }
  for (const auto& [b, rho] : seen) std::cout << "bound=" << g(b) << " rho=" << g(rho) << '\n';
  if (o.variant == pdpm::SearchVariant::paf) {
    const double hi = o.theta_upper ? *o.theta_upper : pdpm::patterning_scale(pop.bounds, r.pattern);
    const pdpm::UtilityCurve curve = pdpm::UtilityCurve::sample(1.0, r.pattern);
    std::cout << "v_range=[" << g(curve.value(hi)) << ", " << g(curve.value(o.theta_lower)) << "]\n";
  }
  return kOk;
}

int cmd_arbitrage(const CommonFlags& flags, std::optional<std::uint64_t> seed, double v_min, double v_max, std::size_t points,
                  std::size_t combo_trials, const std::string& out_dir) {
  pdpm::Settings s;
  const pdpm::ExperimentConfig c = build_config(flags, seed, &s);
  if (!(v_min > 0.0) || !(v_max >= v_min) || points == 0) throw pdpm::ConfigError("bad variance grid");
  const pdpm::AttackReport rep = pdpm::run_arbitrage(c, pdpm::geometric_grid(v_min, v_max, points), combo_trials);
  std::cout << "protocol=" << c.protocol.name << " min_rate=" << g(rep.min_rate()) << " violations=" << rep.violations()
            << '\n';
  const std::string dir = out_dir.empty() ? setting_or(s, "experiment.output", "") : out_dir;
  if (!dir.empty()) {
    std::vector<pdpm::ArbitrageRow> rows;
    for (const auto& r : rep.rows) rows.push_back({c.protocol.name, r});
    std::cout << "wrote "
              << pdpm::emit_report(dir, "arbitrage", pdpm::arbitrage_table(rows), pdpm::ReportFormat::csv,
                                   pdpm::standard_notes(c))
              << '\n';
  }
  return kOk;
}

int cmd_quote(const CommonFlags& flags, std::optional<std::uint64_t> seed, double v) {
  const pdpm::ExperimentConfig c = build_config(flags, seed);
  const pdpm::Population pop = pdpm::build_population(c);
  pdpm::Session session(c.protocol, pop.owners(), pop.database(), c.seed);
  std::vector<double> w(pop.domain, 0.0);
  w.back() = 1.0;
  const pdpm::LinearQuery q(w);
  const double v_min = session.offer(q);
  const auto [lo, hi] = session.pending_window();
  std::cout << "protocol=" << c.protocol.name << " v_min=" << g(v_min) << " window=[" << g(lo) << ", " << g(hi)
            << "]\n";
  const pdpm::TransactionRecord rec = session.purchase(q, v);
  if (rec.accepted) {
    std::cout << "accepted v=" << g(v) << " theta=" << g(rec.theta) << " price=" << g(rec.price) << '\n';
  } else {
    std::cout << "rejected v=" << g(v) << " reason=" << pdpm::to_string(rec.reason) << '\n';
  }
  return kOk;
}

int cmd_report(const CommonFlags& flags, std::optional<std::uint64_t> seed, const std::string& out_dir, const std::string& format,
               const std::vector<std::string>& only) {
  pdpm::Settings s;
  const pdpm::ExperimentConfig c = build_config(flags, seed, &s);
  const std::string dir = out_dir.empty() ? setting_or(s, "experiment.output", "reports") : out_dir;
  const pdpm::ReportFormat fmt =
      pdpm::format_from_string(format.empty() ? setting_or(s, "experiment.format", "csv") : format);
  auto wanted = [&](const std::string& name) {
    return only.empty() || std::find(only.begin(), only.end(), name) != only.end();
  };
  for (const auto& name : only) {
    if (name != "rq1" && name != "rq2" && name != "rq3" && name != "rq4" && name != "rq5") {
      throw pdpm::ConfigError("unknown report '" + name + "'");
    }
  }
  const std::vector<std::string> notes = pdpm::standard_notes(c);
  auto emit = [&](const std::string& name, const pdpm::Table& t) {
    std::cout << "wrote " << pdpm::emit_report(dir, name, t, fmt, notes) << '\n';
  };
  if (wanted("rq1")) emit("rq1", pdpm::rq1_table(pdpm::rq1_bounds(c)));
  if (wanted("rq2")) emit("rq2", pdpm::rq2_table(pdpm::rq2_partial(c)));
  if (wanted("rq3")) emit("rq3", pdpm::rq3_table(pdpm::rq3_exchange(c)));
  if (wanted("rq4")) emit("rq4", pdpm::arbitrage_table(pdpm::rq4_arbitrage(c)));
  if (wanted("rq5")) emit("rq5", pdpm::arbitrage_table(pdpm::rq5_partial_arbitrage(c)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized differential privacy data marketplace simulator"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "run trading rounds and report the average traded loss");
  auto* search = app.add_subcommand("pattern-search", "search an arbitrage-free pattern for a population");
  auto* audit = app.add_subcommand("arbitrage-audit", "run split and combination attacks on a pricing function");
  auto* quote = app.add_subcommand("quote", "quote one Δq = 1 query at a given variance");
  auto* report = app.add_subcommand("report", "write the rq1..rq5 reports");

  CommonFlags f_sim, f_search, f_audit, f_quote, f_report;
  f_sim.add(simulate);
  f_search.add(search);
  f_audit.add(audit);
  f_quote.add(quote);
  f_report.add(report);

  std::uint64_t seed = 0;
  std::string out_dir, events, format, variant = "af";
  double v_min = 0.1, v_max = 100.0, v = 1.0;
  std::size_t points = 50, combo_trials = 0;
  std::vector<std::string> only;

  simulate->add_option("--seed", seed, "experiment seed")->required();
  simulate->add_option("--out", out_dir, "output directory for simulate.csv");
  simulate->add_option("--events", events, "JSON-lines log of the first round");
  simulate->add_option("--format", format, "csv or json");

  search->add_option("--seed", seed, "population seed");
  search->add_option("--variant", variant, "af or paf");

  audit->add_option("--seed", seed, "experiment seed");
  audit->add_option("--v-min", v_min, "smallest variance");
  audit->add_option("--v-max", v_max, "largest variance");
  audit->add_option("--points", points, "log-spaced grid points");
  audit->add_option("--combo-trials", combo_trials, "random combination attacks per grid point");
  audit->add_option("--out", out_dir, "output directory for arbitrage.csv");

  quote->add_option("--seed", seed, "experiment seed");
  quote->add_option("--v", v, "requested worst-case variance")->required();

  report->add_option("--seed", seed, "experiment seed");
  report->add_option("--out", out_dir, "output directory");
  report->add_option("--format", format, "csv or json");
  report->add_option("--only", only, "subset of rq1 rq2 rq3 rq4 rq5");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    auto opt_seed = [&](CLI::App* sub) -> std::optional<std::uint64_t> {
      if (sub->get_option("--seed")->count() > 0) return seed;
      return std::nullopt;
    };
    if (simulate->parsed()) return cmd_simulate(f_sim, seed, out_dir, events, format);
    if (search->parsed()) return cmd_pattern_search(f_search, opt_seed(search), variant);
    if (audit->parsed()) return cmd_arbitrage(f_audit, opt_seed(audit), v_min, v_max, points, combo_trials, out_dir);
    if (quote->parsed()) return cmd_quote(f_quote, opt_seed(quote), v);
    if (report->parsed()) return cmd_report(f_report, opt_seed(report), out_dir, format, only);
  } catch (const pdpm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const pdpm::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const pdpm::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const pdpm::InfeasibleError& e) {
    std::cerr << "infeasible market: " << e.what() << '\n';
    return kInfeasible;
  } catch (const pdpm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  }
  return kOk;
}
