#include "mlb/scenario.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace mlb {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double parse_number(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (trim(value.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ScenarioError("scenario: key '" + key + "' expects a number, got '" + value + "'");
}

std::vector<double> parse_array(const std::string& value, const std::string& key) {
  std::string v = trim(value);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ScenarioError("scenario: key '" + key + "' expects an array like [1, 2, 3]");
  std::vector<double> out;
  std::stringstream ss(v.substr(1, v.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number(item, key));
  }
  if (out.empty()) throw ScenarioError("scenario: key '" + key + "' expects a non-empty array");
  return out;
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text) {
  ScenarioConfig cfg;
  cfg.bands.clear();  // filled from [bands] or defaulted at the end
  std::vector<double> bandwidth_mhz, n_prb;

  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ScenarioError("scenario: malformed section header at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "bands" && section != "balancer" && section != "churn")
        throw ScenarioError("scenario: unknown section [" + section + "]");
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("scenario: expected 'key = value' at line " + std::to_string(line_no));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ScenarioError("scenario: empty key or value at line " + std::to_string(line_no));

    if (section.empty()) {
      if (key == "name") {
        cfg.name = value;
      } else if (key == "n_cells") {
        cfg.n_cells = static_cast<int>(parse_number(value, key));
      } else if (key == "n_ues_per_cell") {
        cfg.n_ues_per_cell = static_cast<int>(parse_number(value, key));
      } else if (key == "inter_arrival_ms") {
        cfg.inter_arrival_ms = parse_number(value, key);
      } else if (key == "packet_size_bytes") {
        cfg.packet_size_bytes = parse_number(value, key);
      } else if (key == "sim_duration") {
        cfg.sim_duration = parse_number(value, key);
      } else if (key == "step") {
        cfg.step = parse_number(value, key);
      } else if (key == "seed") {
        cfg.seed = static_cast<unsigned long>(parse_number(value, key));
      } else if (key == "algorithm") {
        auto alg = algorithm_from_string(value);
        if (!alg) throw ScenarioError("scenario: unknown algorithm '" + value + "'");
        cfg.algorithm = *alg;
      } else if (key == "ho_interruption_ms") {
        cfg.ho_interruption_ms = parse_number(value, key);
      } else {
        throw ScenarioError("scenario: unknown key '" + key + "'");
      }
    } else if (section == "bands") {
      if (key == "bandwidth_mhz") {
        bandwidth_mhz = parse_array(value, key);
      } else if (key == "n_prb") {
        n_prb = parse_array(value, key);
      } else {
        throw ScenarioError("scenario: unknown key '" + key + "' in [bands]");
      }
    } else if (section == "balancer") {
      if (key == "w") {
        cfg.balancer.w = parse_number(value, key);
      } else if (key == "delta_t") {
        cfg.balancer.delta_t = parse_number(value, key);
      } else if (key == "lbi_threshold") {
        cfg.balancer.lbi_threshold = parse_number(value, key);
      } else if (key == "r_min") {
        cfg.balancer.r_min = parse_number(value, key);
      } else if (key == "ue_cap_factor") {
        cfg.balancer.ue_cap_factor = parse_number(value, key);
      } else if (key == "rounding") {
        if (value == "probabilistic")
          cfg.balancer.rounding = Rounding::probabilistic;
        else if (value == "deterministic")
          cfg.balancer.rounding = Rounding::deterministic;
        else if (value == "milp")
          cfg.balancer.rounding = Rounding::milp;
        else
          throw ScenarioError("scenario: unknown rounding '" + value + "'");
      } else {
        throw ScenarioError("scenario: unknown key '" + key + "' in [balancer]");
      }
    } else {  // churn
      if (key == "arrival_per_s") {
        cfg.churn.arrival_per_s = parse_number(value, key);
      } else if (key == "mean_dwell_s") {
        cfg.churn.mean_dwell_s = parse_number(value, key);
      } else {
        throw ScenarioError("scenario: unknown key '" + key + "' in [churn]");
      }
    }
  }

  if (bandwidth_mhz.empty() != n_prb.empty())
    throw ScenarioError("scenario: [bands] needs both bandwidth_mhz and n_prb");
  if (bandwidth_mhz.empty()) {
    cfg.bands = default_bands();
  } else {
    if (bandwidth_mhz.size() != n_prb.size())
      throw ScenarioError("scenario: bandwidth_mhz and n_prb lengths differ");
    for (std::size_t i = 0; i < bandwidth_mhz.size(); ++i)
      cfg.bands.push_back({static_cast<int>(i), bandwidth_mhz[i] * 1e6,
                           static_cast<int>(n_prb[i]), 1});
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

}  // namespace mlb
