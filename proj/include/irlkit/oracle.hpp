#pragma once

#include "irlkit/sampler.hpp"

namespace irl {

/// Exact posterior over one trajectory's latent nodes by brute-force
/// enumeration of every (s, a) sequence; the label posteriors marginalize the
/// per-observation mixture. Exponential in T — small instances only.
TrajectoryPosterior enumerate_posterior(const FiniteMdp& mdp, const Policy& soft_policy,
                                        const std::vector<std::vector<Observation>>& obs,
                                        const DirichletObsModel& model);

/// Largest total-variation gap between two posterior estimates, over all
/// per-timestep joint marginals, pairwise occupancies, and label posteriors.
double posterior_total_variation(const TrajectoryPosterior& a,
                                 const TrajectoryPosterior& b);

}  // namespace irl
