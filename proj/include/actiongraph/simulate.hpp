#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "actiongraph/events.hpp"
#include "actiongraph/graph.hpp"

namespace ag {

/// Behavioral persona: a base transition style over the default alphabet plus
/// session-rate and session-length parameters. Each archetype carries two
/// structural variants with similar action emphasis but different wiring:
/// `focused` concentrates transitions on a few routes, `diffuse` spreads them
/// over many. The per-user blend between the two is the planted "richness"
/// covariate. All parameter values are invented simulator defaults, hard-coded
/// in simulate.cpp.
struct Archetype {
  std::string name;
  double lambda_scale = 1.0;  // multiplies the user's session rate
  double end_hazard = 0.22;   // geometric session-length parameter
};

Archetype archetype_info(const std::string& name);

struct SimConfig {
  int n_users = 1000;
  int observation_days = 14;
  int horizon_days = 14;
  std::vector<double> archetype_weights{0.25, 0.25, 0.25, 0.25};
  double lambda_min = 0.6;   // sessions/day, log-uniform
  double lambda_max = 6.0;
  double blend_min = 0.1;    // mid-window focused->diffuse blend
  double blend_max = 0.9;
  double slope_range = 0.9;  // structural drift over the window, U(-s, s)
  double volume_drift_range = 0.5;  // session-count ramp over 28 days, U(-v, v)
  double dirichlet_concentration = 150.0;  // 0 disables row noise
  double profile_missing_prob = 0.03;
  // Future-day activity link: logistic(c0 + c1*base(rate) + c2*z(richness)
  //                                    + c3*z(drift) + noise)
  // where base(rate) is the logit of the user's expected daily-active
  // probability, keeping the link centered on each user's own baseline.
  double link_intercept = 0.0;
  double link_rate = 1.0;
  double link_richness = 1.0;
  double link_drift = 1.2;
  double link_noise_sd = 0.25;
  std::uint64_t seed = 1;
};

struct SimUserTruth {
  std::string user_id;
  std::string archetype;
  int future_active_days = 0;
  double lambda = 0.0;
  double blend_mid = 0.0;
  double slope = 0.0;
  double link_z = 0.0;
  double p_future = 0.0;
};

struct SimCorpus {
  // Events ordered by (user index, timestamp); user ids are zero-padded so
  // lexicographic order matches generation order.
  std::vector<std::pair<std::string, ActionEvent>> events;
  std::map<std::string, ProfileRecord> profiles;  // absent for a few users
  std::vector<SimUserTruth> truth;
};

const std::vector<std::string>& archetype_names();

/// The archetype's base (focused-variant) transition matrix over the default
/// 12-node layout, row-stochastic with the START/END structural constraints.
ActionGraph archetype_matrix(const std::string& name, const Alphabet& alphabet);

/// Generates 28 days of events per user. Observation-window sessions follow
/// the blended, drifting transition matrix; future-window days are active
/// with the planted logistic probability, and active days emit sessions, so
/// labels recomputed from the event log match the ground truth. Deterministic
/// per seed, independent of scheduling.
SimCorpus gen_corpus(const SimConfig& config, const Alphabet& alphabet, int jobs = 1);

}  // namespace ag
