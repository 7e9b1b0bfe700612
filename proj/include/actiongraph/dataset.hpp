#pragma once

#include <map>
#include <string>
#include <vector>

#include "actiongraph/features.hpp"
#include "actiongraph/models.hpp"

namespace ag {

// Trend class ids; argmax ties resolve toward the lowest id.
inline constexpr int kTrendDecrease = 0;
inline constexpr int kTrendSame = 1;
inline constexpr int kTrendIncrease = 2;

/// More active days in the second window -> Increase; fewer -> Decrease.
int label_trend(int active_first_window, int active_second_window);

/// Median/IQR column scaler; an IQR of 0 falls back to scale 1.
struct RobustScaler {
  std::vector<double> center;
  std::vector<double> scale;
  void fit(const std::vector<const std::vector<double>*>& rows);
  void transform(std::vector<double>& row) const;
};

/// Fold-independent per-user material: graphs, raw features, labels.
struct UserData {
  std::string user_id;
  UserActivity activity;
  ActionGraph static_graph;
  std::vector<ActionGraph> temporal;
  Tensor2 activity_counts;  // obs_days x n_actions, raw counts
  std::vector<double> features_raw;
  std::vector<double> macro_raw;
  int active_obs = 0;
  int active_future = 0;
  int trend = kTrendSame;
  double target_days = 0.0;
};

struct DatasetConfig {
  int observation_days = 14;
  int horizon_days = 14;
  int min_sessions = 5;
  FeatureConfig features;
};

/// Sessionizes nothing itself: takes per-user sessions spanning the full
/// observation + horizon window, keeps eligible users, and precomputes graphs
/// and raw feature vectors.
std::vector<UserData> build_user_data(
    const std::map<std::string, std::vector<Session>>& sessions_by_user,
    const std::map<std::string, ProfileRecord>& profiles, const DatasetConfig& cfg,
    const Alphabet& alphabet, int jobs = 1);

/// Seeded uniform down-sample to the smallest trend-class size (optionally
/// capped); returns sorted indices into `users`. Throws DataError when a class
/// is empty.
std::vector<int> balance_classes(const std::vector<UserData>& users, std::uint64_t seed,
                                 int cap_per_class = -1);

/// Model-ready samples with scalers fitted on the training indices only.
/// Activity counts are log1p-transformed before scaling. Samples keep
/// pointers into `users`, which must outlive them.
struct FoldInputs {
  std::vector<Sample> samples;  // aligned with users
  RobustScaler feature_scaler, macro_scaler, activity_scaler;
};
FoldInputs make_fold_inputs(const std::vector<UserData>& users,
                            const std::vector<int>& train_idx);

/// Applies previously fitted scalers (checkpoint evaluation path).
FoldInputs apply_scalers(const std::vector<UserData>& users, const RobustScaler& feature_scaler,
                         const RobustScaler& macro_scaler, const RobustScaler& activity_scaler);

ModelDims dims_from_users(const std::vector<UserData>& users);

}  // namespace ag
