#pragma once

#include <string>
#include <vector>

#include "irlkit/obs_model.hpp"

namespace irl {

/// Line-delimited records: a header naming the vocabulary, element list and
/// generator config, then one record per timestep.
void save_observation_log(const ObservationLog& log, const std::string& path);
ObservationLog load_observation_log(const std::string& path);

/// Versioned flat-array serialization of a hyperparameter table.
void save_alpha(const std::vector<double>& alpha, const std::vector<int>& shape,
                const std::string& path);
std::pair<std::vector<double>, std::vector<int>> load_alpha(const std::string& path);

void save_trajectories(const std::vector<Trajectory>& trajectories,
                       const std::string& path);
std::vector<Trajectory> load_trajectories(const std::string& path);

}  // namespace irl
