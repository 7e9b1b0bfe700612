#include "actiongraph/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "actiongraph/errors.hpp"
#include "actiongraph/rng.hpp"

namespace ag {

int label_trend(int active_first_window, int active_second_window) {
  if (active_second_window > active_first_window) return kTrendIncrease;
  if (active_second_window < active_first_window) return kTrendDecrease;
  return kTrendSame;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

void RobustScaler::fit(const std::vector<const std::vector<double>*>& rows) {
  if (rows.empty()) throw DataError("RobustScaler: no rows to fit");
  const std::size_t dim = rows.front()->size();
  center.assign(dim, 0.0);
  scale.assign(dim, 1.0);
  std::vector<double> col(rows.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = (*rows[i])[j];
    std::sort(col.begin(), col.end());
    center[j] = quantile_sorted(col, 0.5);
    const double iqr = quantile_sorted(col, 0.75) - quantile_sorted(col, 0.25);
    scale[j] = iqr > 0.0 ? iqr : 1.0;
  }
}

void RobustScaler::transform(std::vector<double>& row) const {
  if (row.size() != center.size()) throw UsageError("RobustScaler: dim mismatch");
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - center[j]) / scale[j];
}

namespace {

void run_parallel(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> threads;
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < workers; ++w) {
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

std::vector<UserData> build_user_data(
    const std::map<std::string, std::vector<Session>>& sessions_by_user,
    const std::map<std::string, ProfileRecord>& profiles, const DatasetConfig& cfg,
    const Alphabet& alphabet, int jobs) {
  struct Entry {
    const std::string* user;
    const std::vector<Session>* sessions;
  };
  std::vector<Entry> entries;
  entries.reserve(sessions_by_user.size());
  for (const auto& [user, sessions] : sessions_by_user) entries.push_back({&user, &sessions});

  std::vector<UserData> slots(entries.size());
  std::vector<char> keep(entries.size(), 0);
  run_parallel(entries.size(), jobs, [&](std::size_t i) {
    const auto& [user, all_sessions] = entries[i];
    std::vector<Session> obs;
    for (const Session& s : *all_sessions) {
      if (s.day >= 0 && s.day < cfg.observation_days) obs.push_back(s);
    }
    if (!eligible(obs, cfg.min_sessions)) return;

    UserData u;
    u.user_id = *user;
    const ProfileRecord* profile = nullptr;
    auto it = profiles.find(*user);
    if (it != profiles.end()) profile = &it->second;
    u.activity.user_id = *user;
    u.activity.observation_days = cfg.observation_days;
    u.activity.horizon_days = cfg.horizon_days;
    u.activity.macro = make_macro_profile(obs, cfg.observation_days, profile);
    u.activity.sessions = std::move(obs);

    u.static_graph = build_static(u.activity.sessions, alphabet);
    u.temporal = build_temporal(u.activity.sessions, alphabet, cfg.observation_days);
    u.activity_counts.ensure_zero(cfg.observation_days, alphabet.action_count());
    for (const Session& s : u.activity.sessions) {
      for (int a : s.actions) u.activity_counts.at(s.day, a) += 1.0;
    }
    u.features_raw = assemble_features(u.activity, u.static_graph, cfg.features, alphabet);
    const MacroProfile& m = u.activity.macro;
    u.macro_raw = {m.sessions_per_day, m.avg_session_seconds, m.gender,
                   m.max_age,          m.friend_count,        m.profile_missing ? 1.0 : 0.0};

    u.active_obs = active_days(*all_sessions, 0, cfg.observation_days);
    u.active_future = active_days(*all_sessions, cfg.observation_days,
                                  cfg.observation_days + cfg.horizon_days);
    u.trend = label_trend(u.active_obs, u.active_future);
    u.target_days = u.active_future;
    slots[i] = std::move(u);
    keep[i] = 1;
  });

  std::vector<UserData> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (keep[i]) out.push_back(std::move(slots[i]));
  }
  return out;
}

std::vector<int> balance_classes(const std::vector<UserData>& users, std::uint64_t seed,
                                 int cap_per_class) {
  std::vector<std::vector<int>> by_class(3);
  for (std::size_t i = 0; i < users.size(); ++i) {
    by_class[static_cast<std::size_t>(users[i].trend)].push_back(static_cast<int>(i));
  }
  std::size_t min_size = users.size();
  for (int c = 0; c < 3; ++c) {
    if (by_class[static_cast<std::size_t>(c)].empty()) {
      throw DataError("balance_classes: class " + std::to_string(c) +
                      " is empty (sizes: " + std::to_string(by_class[0].size()) + "/" +
                      std::to_string(by_class[1].size()) + "/" +
                      std::to_string(by_class[2].size()) + ")");
    }
    min_size = std::min(min_size, by_class[static_cast<std::size_t>(c)].size());
  }
  if (cap_per_class > 0) min_size = std::min<std::size_t>(min_size, static_cast<std::size_t>(cap_per_class));

  std::vector<int> selected;
  for (int c = 0; c < 3; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(c) + 11);
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.below(i)]);
    }
    selected.insert(selected.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(min_size));
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

namespace {

std::vector<double> activity_row(const Tensor2& counts, int t) {
  std::vector<double> row(static_cast<std::size_t>(counts.cols));
  for (int a = 0; a < counts.cols; ++a) row[static_cast<std::size_t>(a)] = std::log1p(counts.at(t, a));
  return row;
}

FoldInputs assemble(const std::vector<UserData>& users, const RobustScaler& fs,
                    const RobustScaler& ms, const RobustScaler& as) {
  FoldInputs fold;
  fold.feature_scaler = fs;
  fold.macro_scaler = ms;
  fold.activity_scaler = as;
  fold.samples.resize(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    const UserData& u = users[i];
    Sample& s = fold.samples[i];
    s.features = u.features_raw;
    fs.transform(s.features);
    s.macro = u.macro_raw;
    ms.transform(s.macro);
    s.activity.ensure(u.activity_counts.rows, u.activity_counts.cols);
    for (int t = 0; t < u.activity_counts.rows; ++t) {
      auto row = activity_row(u.activity_counts, t);
      as.transform(row);
      for (int a = 0; a < u.activity_counts.cols; ++a) s.activity.at(t, a) = row[static_cast<std::size_t>(a)];
    }
    s.static_graph = &u.static_graph;
    s.temporal = &u.temporal;
    s.label_class = u.trend;
    s.label_value = u.target_days;
  }
  return fold;
}

}  // namespace

FoldInputs make_fold_inputs(const std::vector<UserData>& users,
                            const std::vector<int>& train_idx) {
  if (train_idx.empty()) throw UsageError("make_fold_inputs: empty training split");
  RobustScaler fs, ms, as;
  {
    std::vector<const std::vector<double>*> rows;
    rows.reserve(train_idx.size());
    for (int i : train_idx) rows.push_back(&users[static_cast<std::size_t>(i)].features_raw);
    fs.fit(rows);
  }
  {
    std::vector<const std::vector<double>*> rows;
    rows.reserve(train_idx.size());
    for (int i : train_idx) rows.push_back(&users[static_cast<std::size_t>(i)].macro_raw);
    ms.fit(rows);
  }
  {
    std::vector<std::vector<double>> log_rows;
    for (int i : train_idx) {
      const Tensor2& counts = users[static_cast<std::size_t>(i)].activity_counts;
      for (int t = 0; t < counts.rows; ++t) log_rows.push_back(activity_row(counts, t));
    }
    std::vector<const std::vector<double>*> rows;
    rows.reserve(log_rows.size());
    for (const auto& r : log_rows) rows.push_back(&r);
    as.fit(rows);
  }
  return assemble(users, fs, ms, as);
}

FoldInputs apply_scalers(const std::vector<UserData>& users, const RobustScaler& feature_scaler,
                         const RobustScaler& macro_scaler, const RobustScaler& activity_scaler) {
  return assemble(users, feature_scaler, macro_scaler, activity_scaler);
}

ModelDims dims_from_users(const std::vector<UserData>& users) {
  ModelDims dims;
  if (users.empty()) return dims;
  dims.n_nodes = users.front().static_graph.n;
  dims.n_actions = users.front().activity_counts.cols;
  dims.obs_days = users.front().activity_counts.rows;
  dims.feature_dim = static_cast<int>(users.front().features_raw.size());
  dims.macro_dim = static_cast<int>(users.front().macro_raw.size());
  return dims;
}

}  // namespace ag
