#include "actiongraph/simulate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>

#include "actiongraph/errors.hpp"
#include "actiongraph/rng.hpp"

namespace ag {

namespace {

// Default-alphabet action indices (alphabetical order).
constexpr int kChatSend = 0;
constexpr int kChatView = 1;
constexpr int kDiscoverView = 2;
constexpr int kOther = 3;
constexpr int kSnapCreate = 4;
constexpr int kSnapSave = 5;
constexpr int kSnapSend = 6;
constexpr int kSnapView = 7;
constexpr int kStorySend = 8;
constexpr int kStoryView = 9;

constexpr int kActions = 10;
constexpr std::int64_t kMsPerDay = 86400000;
constexpr std::int64_t kRegistrationBase = 1648771200000;  // 2022-04-01 UTC

using Row = std::array<double, kActions>;

Row make_row(std::initializer_list<std::pair<int, double>> entries) {
  Row row{};
  double total = 0.0;
  for (const auto& [idx, w] : entries) {
    row[static_cast<std::size_t>(idx)] += w;
    total += w;
  }
  for (double& v : row) v /= total;
  return row;
}

// Transition style: a START row plus one row per action, all over actions
// only. Session-end mass is mixed in afterwards via the archetype's end
// hazard, so session length is independent of the focused/diffuse blend.
struct Style {
  Row start;
  std::array<Row, kActions> rows;
};

struct ArchetypeDef {
  std::string name;
  double lambda_scale;
  double end_hazard;
  Style focused;
  Style diffuse;
};

// The diffuse variant of each archetype is the "lazy" version of its focused
// chain: D = sigma*I + (1-sigma)*F over the action rows, with the same start
// row. A lazy chain keeps the focused chain's stationary action mix, so the
// focused->diffuse blend moves edge structure (self-loops, edge counts, cycle
// strengths) without moving daily action-count composition: the planted
// structural signal is visible to graph models but not to count sequences.
constexpr double kLazySigma = 0.55;

Style make_diffuse(const Style& focused) {
  Style d;
  d.start = focused.start;
  for (int a = 0; a < kActions; ++a) {
    Row& row = d.rows[static_cast<std::size_t>(a)];
    for (int b = 0; b < kActions; ++b) {
      row[static_cast<std::size_t>(b)] =
          (1.0 - kLazySigma) * focused.rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
    row[static_cast<std::size_t>(a)] += kLazySigma;
  }
  return d;
}

const std::vector<ArchetypeDef>& archetype_defs() {
  static const std::vector<ArchetypeDef> defs = [] {
    std::vector<ArchetypeDef> v;

    {
      ArchetypeDef a;
      a.name = "chatter";
      a.lambda_scale = 1.0;
      a.end_hazard = 0.22;
      a.focused.start = make_row({{kChatView, .5}, {kChatSend, .4}, {kSnapView, .1}});
      const Row to_chat = make_row({{kChatView, 1.0}});
      a.focused.rows = {
          make_row({{kChatView, .9}, {kSnapView, .1}}),                    // CHAT_SEND
          make_row({{kChatSend, .9}, {kSnapView, .1}}),                    // CHAT_VIEW
          to_chat, to_chat,                                                // DISCOVER_VIEW, OTHER
          to_chat, to_chat, to_chat,                                       // SNAP_CREATE/SAVE/SEND
          make_row({{kChatView, .5}, {kChatSend, .5}}),                    // SNAP_VIEW
          to_chat, to_chat,                                                // STORY_SEND/VIEW
      };
      a.diffuse = make_diffuse(a.focused);
      v.push_back(std::move(a));
    }

    {
      ArchetypeDef a;
      a.name = "snapper";
      a.lambda_scale = 1.0;
      a.end_hazard = 0.2;
      a.focused.start =
          make_row({{kSnapView, .3}, {kSnapCreate, .3}, {kSnapSend, .2}, {kSnapSave, .1},
                    {kChatView, .1}});
      const Row to_snap = make_row({{kSnapView, 1.0}});
      a.focused.rows = {
          to_snap,                                                         // CHAT_SEND
          make_row({{kSnapView, 1.0}}),                                    // CHAT_VIEW (sprinkle)
          to_snap, to_snap,                                                // DISCOVER_VIEW, OTHER
          make_row({{kSnapSend, .85}, {kSnapSave, .15}}),                  // SNAP_CREATE
          make_row({{kSnapView, .5}, {kSnapCreate, .5}}),                  // SNAP_SAVE
          make_row({{kSnapView, .85}, {kSnapSave, .15}}),                  // SNAP_SEND
          make_row({{kSnapCreate, .85}, {kChatView, .15}}),                // SNAP_VIEW
          to_snap, to_snap,                                                // STORY_SEND/VIEW
      };
      a.diffuse = make_diffuse(a.focused);
      v.push_back(std::move(a));
    }

    {
      ArchetypeDef a;
      a.name = "story_viewer";
      a.lambda_scale = 1.0;
      a.end_hazard = 0.24;
      a.focused.start = make_row({{kStoryView, .5}, {kDiscoverView, .4}, {kChatView, .1}});
      const Row to_story = make_row({{kStoryView, 1.0}});
      a.focused.rows = {
          to_story,                                                        // CHAT_SEND
          make_row({{kStoryView, .5}, {kDiscoverView, .5}}),               // CHAT_VIEW (sprinkle)
          make_row({{kStoryView, .9}, {kChatView, .1}}),                   // DISCOVER_VIEW
          to_story, to_story, to_story, to_story, to_story,                // OTHER..SNAP_VIEW
          to_story,                                                        // STORY_SEND
          make_row({{kDiscoverView, .9}, {kChatView, .1}}),                // STORY_VIEW
      };
      a.diffuse = make_diffuse(a.focused);
      v.push_back(std::move(a));
    }

    {
      ArchetypeDef a;
      a.name = "creator";
      a.lambda_scale = 1.0;
      a.end_hazard = 0.18;
      a.focused.start =
          make_row({{kSnapCreate, .4}, {kOther, .25}, {kSnapSave, .2}, {kStorySend, .15}});
      const Row to_create = make_row({{kSnapCreate, 1.0}});
      a.focused.rows = {
          to_create, to_create, to_create,                                 // CHAT_SEND/VIEW, DISCOVER
          to_create,                                                       // OTHER
          make_row({{kSnapSave, .8}, {kStorySend, .2}}),                   // SNAP_CREATE
          make_row({{kStorySend, .8}, {kOther, .2}}),                      // SNAP_SAVE
          to_create, to_create,                                            // SNAP_SEND/VIEW
          make_row({{kOther, .8}, {kSnapCreate, .2}}),                     // STORY_SEND
          to_create,                                                       // STORY_VIEW
      };
      a.diffuse = make_diffuse(a.focused);
      v.push_back(std::move(a));
    }

    return v;
  }();
  return defs;
}

const ArchetypeDef& def_by_name(const std::string& name) {
  for (const auto& d : archetype_defs()) {
    if (d.name == name) return d;
  }
  throw UsageError("unknown archetype: " + name);
}

Row blend_rows(const Row& focused, const Row& diffuse, double w) {
  Row out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - w) * focused[i] + w * diffuse[i];
  }
  return out;
}

Row dirichlet_perturb(const Row& row, double concentration, Rng& rng) {
  if (concentration <= 0.0) return row;
  Row out{};
  double sum = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] > 0.0) {
      out[i] = rng.gamma(concentration * row[i]);
      sum += out[i];
    }
  }
  if (sum <= 0.0) return row;
  for (double& v : out) v /= sum;
  return out;
}

struct UserMatrices {
  Row start_focused, start_diffuse;
  std::array<Row, kActions> rows_focused, rows_diffuse;
  double end_hazard = 0.2;

  // weights over [10 actions + END]; START has no END mass
  void day_rows(double w, Row& start, std::array<std::array<double, kActions + 1>, kActions>& rows) const {
    start = blend_rows(start_focused, start_diffuse, w);
    for (int a = 0; a < kActions; ++a) {
      const Row r = blend_rows(rows_focused[static_cast<std::size_t>(a)],
                               rows_diffuse[static_cast<std::size_t>(a)], w);
      for (int b = 0; b < kActions; ++b) {
        rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = (1.0 - end_hazard) * r[static_cast<std::size_t>(b)];
      }
      rows[static_cast<std::size_t>(a)][kActions] = end_hazard;
    }
  }
};

struct UserEvents {
  std::vector<std::pair<std::string, ActionEvent>> events;
  bool has_profile = false;
  ProfileRecord profile;
  SimUserTruth truth;
};

double std_of_uniform(double a, double b) { return (b - a) / std::sqrt(12.0); }

UserEvents generate_user(const SimConfig& cfg, std::size_t index) {
  Rng rng = Rng::substream(cfg.seed, index);
  UserEvents out;

  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%06zu", index);
  const std::string user_id(buf);

  // Archetype and planted covariates.
  const int arch_idx = rng.categorical(cfg.archetype_weights.data(),
                                       static_cast<int>(cfg.archetype_weights.size()));
  const ArchetypeDef& def = archetype_defs()[static_cast<std::size_t>(arch_idx)];
  const double lambda =
      std::exp(rng.uniform(std::log(cfg.lambda_min), std::log(cfg.lambda_max))) * def.lambda_scale;
  const double blend_mid = rng.uniform(cfg.blend_min, cfg.blend_max);
  const double slope = rng.uniform(-cfg.slope_range, cfg.slope_range);
  const double volume_drift = rng.uniform(-cfg.volume_drift_range, cfg.volume_drift_range);

  UserMatrices m;
  m.end_hazard = def.end_hazard;
  m.start_focused = dirichlet_perturb(def.focused.start, cfg.dirichlet_concentration, rng);
  m.start_diffuse = dirichlet_perturb(def.diffuse.start, cfg.dirichlet_concentration, rng);
  for (int a = 0; a < kActions; ++a) {
    m.rows_focused[static_cast<std::size_t>(a)] =
        dirichlet_perturb(def.focused.rows[static_cast<std::size_t>(a)], cfg.dirichlet_concentration, rng);
    m.rows_diffuse[static_cast<std::size_t>(a)] =
        dirichlet_perturb(def.diffuse.rows[static_cast<std::size_t>(a)], cfg.dirichlet_concentration, rng);
  }

  // Engagement link. The session-rate term is the logit of the expected
  // daily-active probability at the user's future-window session rate (the
  // volume ramp extrapolates), so with neutral structure the future active
  // rate tracks the user's own trajectory and trend classes stay populated;
  // richness and drift shift it up or down.
  const int total_days_cfg = cfg.observation_days + cfg.horizon_days;
  const double mid_day = total_days_cfg / 2.0 - 0.5;
  double future_vol = 0.0;
  for (int d = cfg.observation_days; d < total_days_cfg; ++d) {
    future_vol += std::max(0.1, 1.0 + volume_drift * (d - mid_day) / mid_day);
  }
  future_vol /= cfg.horizon_days;
  const double base_active = std::clamp(1.0 - std::exp(-lambda * future_vol), 0.012, 0.988);
  const double z_rate = std::log(base_active / (1.0 - base_active));
  const double z_rich =
      (blend_mid - 0.5 * (cfg.blend_min + cfg.blend_max)) / std_of_uniform(cfg.blend_min, cfg.blend_max);
  const double z_drift =
      cfg.slope_range > 0 ? slope / std_of_uniform(-cfg.slope_range, cfg.slope_range) : 0.0;
  const double z = cfg.link_intercept + cfg.link_rate * z_rate + cfg.link_richness * z_rich +
                   cfg.link_drift * z_drift +
                   (cfg.link_noise_sd > 0 ? rng.normal(0.0, cfg.link_noise_sd) : 0.0);
  const double p_future = 1.0 / (1.0 + std::exp(-z));

  const std::int64_t day0 = kRegistrationBase + static_cast<std::int64_t>(rng.below(180)) * kMsPerDay;

  auto push = [&](std::int64_t ts, EventKind kind, int action = -1) {
    ActionEvent ev;
    ev.ts_ms = ts;
    ev.kind = kind;
    ev.action = action;
    out.events.emplace_back(user_id, ev);
  };

  // Registration open/close pair anchors day 0 even when the first session
  // lands on a later day.
  const std::int64_t reg_ts = day0 + 5 * 3600000 + static_cast<std::int64_t>(rng.below(3600)) * 1000;
  push(reg_ts, EventKind::kAppOpen);
  push(reg_ts + 30000, EventKind::kAppClose);

  const int total_days = cfg.observation_days + cfg.horizon_days;
  std::array<std::array<double, kActions + 1>, kActions> day_action_rows;
  Row day_start_row;
  int future_active = 0;

  for (int day = 0; day < total_days; ++day) {
    const double mid = (total_days / 2.0 - 0.5);
    const double vol = std::max(0.1, 1.0 + volume_drift * (day - mid) / mid);
    int n_sessions = 0;
    if (day < cfg.observation_days) {
      n_sessions = rng.poisson(lambda * vol);
    } else {
      const bool active = rng.uniform01() < p_future;
      if (active) {
        ++future_active;
        n_sessions = 1 + rng.poisson(std::max(0.0, lambda * vol - 1.0));
      }
    }
    n_sessions = std::min(n_sessions, 20);
    if (n_sessions == 0) continue;

    const double obs_mid = (cfg.observation_days - 1) / 2.0;
    const double w = std::clamp(blend_mid + slope * (day - obs_mid) / (cfg.observation_days - 1),
                                0.0, 1.0);
    m.day_rows(w, day_start_row, day_action_rows);

    std::int64_t t = day0 + static_cast<std::int64_t>(day) * kMsPerDay + 6 * 3600000 +
                     static_cast<std::int64_t>(rng.below(4 * 3600)) * 1000;
    for (int s = 0; s < n_sessions; ++s) {
      const bool wrap_signals = rng.uniform01() < 0.5;
      if (wrap_signals) push(t - 2000, EventKind::kAppOpen);
      int node = rng.categorical(day_start_row.data(), kActions);  // first action
      int steps = 0;
      for (;;) {
        push(t, EventKind::kAction, node);
        ++steps;
        if (steps >= 40) break;
        const int next = rng.categorical(day_action_rows[static_cast<std::size_t>(node)].data(),
                                         kActions + 1);
        if (next == kActions) break;  // session end
        t += 1000 + static_cast<std::int64_t>(rng.below(20)) * 1000;
        node = next;
      }
      if (wrap_signals) push(t + 2000, EventKind::kAppClose);
      t += 60000 + static_cast<std::int64_t>(rng.below(1140)) * 1000;  // next session gap
    }
  }

  out.has_profile = rng.uniform01() >= cfg.profile_missing_prob;
  if (out.has_profile) {
    out.profile.gender = static_cast<int>(rng.below(2));
    out.profile.max_age = 16 + static_cast<int>(rng.below(40));
    out.profile.friend_count = rng.poisson(std::max(2.0, 25.0 + 8.0 * z_rate));
  }

  out.truth.user_id = user_id;
  out.truth.archetype = def.name;
  out.truth.future_active_days = future_active;
  out.truth.lambda = lambda;
  out.truth.blend_mid = blend_mid;
  out.truth.slope = slope;
  out.truth.link_z = z;
  out.truth.p_future = p_future;
  return out;
}

void run_parallel(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> threads;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace

Archetype archetype_info(const std::string& name) {
  const ArchetypeDef& d = def_by_name(name);
  Archetype a;
  a.name = d.name;
  a.lambda_scale = d.lambda_scale;
  a.end_hazard = d.end_hazard;
  return a;
}

const std::vector<std::string>& archetype_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& d : archetype_defs()) v.push_back(d.name);
    return v;
  }();
  return names;
}

ActionGraph archetype_matrix(const std::string& name, const Alphabet& alphabet) {
  if (alphabet.action_count() != kActions) {
    throw UsageError("archetype_matrix: requires the default 10-action alphabet");
  }
  const ArchetypeDef& def = def_by_name(name);
  ActionGraph g(alphabet.node_count());
  for (int a = 0; a < kActions; ++a) {
    g.p(alphabet.start_node(), alphabet.node_of_action(a)) = def.focused.start[static_cast<std::size_t>(a)];
  }
  for (int a = 0; a < kActions; ++a) {
    for (int b = 0; b < kActions; ++b) {
      g.p(alphabet.node_of_action(a), alphabet.node_of_action(b)) =
          (1.0 - def.end_hazard) * def.focused.rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
    g.p(alphabet.node_of_action(a), alphabet.end_node()) = def.end_hazard;
  }
  return g;
}

SimCorpus gen_corpus(const SimConfig& cfg, const Alphabet& alphabet, int jobs) {
  if (alphabet.action_count() != kActions) {
    throw UsageError("gen_corpus: requires the default 10-action alphabet");
  }
  if (cfg.n_users < 1) throw UsageError("gen_corpus: n_users must be >= 1");
  if (cfg.archetype_weights.size() != archetype_defs().size()) {
    throw UsageError("gen_corpus: need one weight per archetype");
  }
  double total_w = 0.0;
  for (double w : cfg.archetype_weights) {
    if (w < 0.0) throw UsageError("gen_corpus: negative archetype weight");
    total_w += w;
  }
  if (std::abs(total_w - 1.0) > 1e-9) throw UsageError("gen_corpus: weights must sum to 1");
  if (cfg.lambda_min <= 0 || cfg.lambda_max < cfg.lambda_min) {
    throw UsageError("gen_corpus: invalid lambda range");
  }
  if (cfg.blend_min < 0 || cfg.blend_max > 1 || cfg.blend_max < cfg.blend_min) {
    throw UsageError("gen_corpus: blend range must lie in [0, 1]");
  }

  std::vector<UserEvents> users(static_cast<std::size_t>(cfg.n_users));
  run_parallel(users.size(), jobs, [&](std::size_t i) { users[i] = generate_user(cfg, i); });

  SimCorpus corpus;
  for (auto& u : users) {
    corpus.events.insert(corpus.events.end(), u.events.begin(), u.events.end());
    if (u.has_profile) corpus.profiles[u.truth.user_id] = u.profile;
    corpus.truth.push_back(u.truth);
  }
  return corpus;
}

}  // namespace ag
