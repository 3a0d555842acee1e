#include "irlkit/io.hpp"

#include <fstream>

#include <json.hpp>

namespace irl {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write to " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  return in;
}

}  // namespace

void save_observation_log(const ObservationLog& log, const std::string& path) {
  std::ofstream out = open_out(path);
  json header = {
      {"record", "header"},
      {"vocabulary", log.vocabulary.names},
      {"elements", log.element_names},
      {"generator_config",
       log.generator_config.empty() ? json(nullptr) : json::parse(log.generator_config)},
  };
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < log.trajectories.size(); ++i) {
    for (std::size_t t = 0; t < log.trajectories[i].size(); ++t) {
      json observations = json::array();
      for (const Observation& obs : log.trajectories[i][t])
        observations.push_back(
            {{"omega", log.vocabulary.names[obs.omega]}, {"eta", obs.eta}});
      json record = {{"trajectory_index", i}, {"t", t}, {"observations", observations}};
      out << record.dump() << '\n';
    }
  }
}

ObservationLog load_observation_log(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  ObservationLog log;
  bool have_header = false;
  std::unordered_map<std::string, int> symbol_ids;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json record = json::parse(line);
    if (!have_header) {
      check(record.value("record", "") == "header",
            "observation log: first record must be the header");
      log.vocabulary.names = record.at("vocabulary").get<std::vector<std::string>>();
      log.element_names = record.at("elements").get<std::vector<std::string>>();
      if (!record.at("generator_config").is_null())
        log.generator_config = record.at("generator_config").dump();
      for (int w = 0; w < log.vocabulary.size(); ++w)
        symbol_ids[log.vocabulary.names[w]] = w;
      have_header = true;
      continue;
    }
    std::size_t i = record.at("trajectory_index").get<std::size_t>();
    std::size_t t = record.at("t").get<std::size_t>();
    if (log.trajectories.size() <= i) log.trajectories.resize(i + 1);
    if (log.trajectories[i].size() <= t) log.trajectories[i].resize(t + 1);
    for (const json& j : record.at("observations")) {
      Observation obs;
      auto it = symbol_ids.find(j.at("omega").get<std::string>());
      check(it != symbol_ids.end(), "observation log: unknown symbol");
      obs.omega = it->second;
      obs.eta = j.at("eta").get<std::vector<double>>();
      log.trajectories[i][t].push_back(std::move(obs));
    }
  }
  check(have_header, "observation log: missing header");
  log.validate();
  return log;
}

void save_alpha(const std::vector<double>& alpha, const std::vector<int>& shape,
                const std::string& path) {
  std::size_t expected = 1;
  for (int dim : shape) expected *= static_cast<std::size_t>(dim);
  check(expected == alpha.size(), "save_alpha: shape does not match data size");
  json doc = {{"format", "irlkit-alpha"}, {"version", 1}, {"shape", shape}, {"data", alpha}};
  open_out(path) << doc.dump() << '\n';
}

std::pair<std::vector<double>, std::vector<int>> load_alpha(const std::string& path) {
  std::ifstream in = open_in(path);
  json doc = json::parse(in);
  check(doc.value("format", "") == "irlkit-alpha" && doc.value("version", 0) == 1,
        "load_alpha: unsupported file");
  return {doc.at("data").get<std::vector<double>>(),
          doc.at("shape").get<std::vector<int>>()};
}

void save_trajectories(const std::vector<Trajectory>& trajectories,
                       const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Trajectory& traj : trajectories) {
    json steps = json::array();
    for (auto [s, a] : traj.steps) steps.push_back({{"s", s}, {"a", a}});
    out << json{{"steps", steps}}.dump() << '\n';
  }
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json record = json::parse(line);
    Trajectory traj;
    for (const json& j : record.at("steps"))
      traj.steps.emplace_back(j.at("s").get<int>(), j.at("a").get<int>());
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace irl
