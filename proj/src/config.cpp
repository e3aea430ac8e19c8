#include "pdpm/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <sstream>

#include "pdpm/errors.hpp"

namespace pdpm {

namespace {

const char* const kGroupNames[] = {"conservative", "hesitant", "ordinary", "liberal"};

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + s + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + s + "'");
  }
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + s + "'");
}

Settings from_ptree(const boost::property_tree::ptree& tree) {
  const auto& known = known_settings();
  Settings out;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' appears outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (std::find(known.begin(), known.end(), full) == known.end()) {
        throw ConfigError("unknown configuration key '" + full + "'");
      }
      out[full] = value.data();
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& known_settings() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"population.n",          "population.domain",       "population.seed",
                               "population.scheme",     "protocol.name",           "protocol.r",
                               "protocol.profit_rate",  "protocol.theta_lower",    "protocol.theta_upper",
                               "protocol.exchange",     "protocol.sigma",          "protocol.beta",
                               "protocol.deduct_consumed_only", "experiment.V",   "experiment.queries",
                               "experiment.rounds",     "experiment.seed",         "experiment.output",
                               "experiment.format"};
    for (const char* g : kGroupNames) {
      k.push_back(std::string("population.") + g + "_fraction");
      k.push_back(std::string("population.") + g + "_bound");
    }
    return k;
  }();
  return keys;
}

Settings parse_config(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return from_ptree(tree);
}

Settings load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Settings merge_settings(const Settings& base, const Settings& overrides) {
  Settings out = base;
  for (const auto& [k, v] : overrides) out[k] = v;
  return out;
}

void apply_settings(ExperimentConfig& c, const Settings& s) {
  const auto& known = known_settings();
  for (const auto& [k, v] : s) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown setting '" + k + "'");
  }
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = s.find(k);
    return it == s.end() ? nullptr : &it->second;
  };

  if (auto v = get("protocol.name")) {
    const ProtocolConfig fresh = ProtocolConfig::preset(preset_from_string(*v));
    c.protocol = fresh;
  }
  if (auto v = get("protocol.r")) c.protocol.r = to_double("protocol.r", *v);
  if (auto v = get("protocol.profit_rate")) c.protocol.profit_rate = to_double("protocol.profit_rate", *v);
  if (auto v = get("protocol.theta_lower")) c.protocol.theta_lower = to_double("protocol.theta_lower", *v);
  if (auto v = get("protocol.theta_upper")) c.protocol.theta_upper = to_double("protocol.theta_upper", *v);
  if (auto v = get("protocol.exchange")) c.protocol.exchange = to_bool("protocol.exchange", *v);
  if (auto v = get("protocol.sigma")) c.protocol.sigma = to_double("protocol.sigma", *v);
  if (auto v = get("protocol.beta")) c.protocol.check.beta = to_double("protocol.beta", *v);
  if (auto v = get("protocol.deduct_consumed_only")) {
    c.protocol.deduct_consumed_only = to_bool("protocol.deduct_consumed_only", *v);
  }

  if (auto v = get("population.n")) c.population.n = to_uint("population.n", *v);
  if (auto v = get("population.domain")) c.population.domain = to_uint("population.domain", *v);
  if (auto v = get("population.scheme")) c.scheme = scheme_from_string(*v);
  for (std::size_t g = 0; g < 4; ++g) {
    const std::string base = std::string("population.") + kGroupNames[g];
    if (auto v = get(base + "_fraction")) c.population.groups[g].fraction = to_double(base + "_fraction", *v);
    if (auto v = get(base + "_bound")) c.population.groups[g].bound = to_double(base + "_bound", *v);
  }

  if (auto v = get("experiment.V")) c.max_variance = to_double("experiment.V", *v);
  if (auto v = get("experiment.queries")) c.queries = to_uint("experiment.queries", *v);
  if (auto v = get("experiment.rounds")) c.rounds = to_uint("experiment.rounds", *v);
  if (auto v = get("experiment.seed")) c.seed = to_uint("experiment.seed", *v);
  if (auto v = get("population.seed")) c.population.seed = to_uint("population.seed", *v);
  else c.population.seed = c.seed;
}

}  // namespace pdpm
