#pragma once

// Frame-to-frame ellipse association with persistent labels.

#include <dcbf/assignment.hpp>
#include <dcbf/geometry.hpp>

#include <algorithm>
#include <span>
#include <vector>

namespace dcbf {

struct LabeledEllipse {
  Ellipse ellipse;
  int label = 0;
  double frame_time = 0.0;
};

struct AssociationParams {
  double d_max = 1.5;     // gating distance between centers, m
  int retire_after = 3;   // consecutive unmatched frames before a label is dropped
};

struct AssociationResult {
  std::vector<LabeledEllipse> labeled;  // same order as the current ellipses
  std::vector<int> matched_prev;        // index into prev per current ellipse, -1 if new
  double total_cost = 0.0;              // of the optimal assignment, before gating
  int next_label = 0;
};

/// Center-distance affinity matrix, previous frame along rows.
inline Eigen::MatrixXd affinity_matrix(std::span<const LabeledEllipse> prev,
                                       std::span<const Ellipse> cur) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(prev.size()), static_cast<Eigen::Index>(cur.size()));
  for (std::size_t i = 0; i < prev.size(); ++i)
    for (std::size_t j = 0; j < cur.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (prev[i].ellipse.center() - cur[j].center()).norm();
  return m;
}

inline AssociationResult associate(std::span<const LabeledEllipse> prev,
                                   std::span<const Ellipse> cur,
                                   const AssociationParams& params, int next_label,
                                   double frame_time = 0.0) {
  if (!(params.d_max > 0.0)) throw Error("associate: d_max must be positive");
  AssociationResult out;
  out.matched_prev.assign(cur.size(), -1);
  const Eigen::MatrixXd cost = affinity_matrix(prev, cur);
  const Assignment asg = kuhn_munkres(cost);
  out.total_cost = asg.total_cost;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const int j = asg.row_to_col[i];
    if (j < 0) continue;
    if (cost(static_cast<Eigen::Index>(i), j) <= params.d_max)
      out.matched_prev[static_cast<std::size_t>(j)] = static_cast<int>(i);
  }
  out.labeled.reserve(cur.size());
  for (std::size_t j = 0; j < cur.size(); ++j) {
    const int i = out.matched_prev[j];
    const int label = i >= 0 ? prev[static_cast<std::size_t>(i)].label : next_label++;
    out.labeled.push_back({cur[j], label, frame_time});
  }
  out.next_label = next_label;
  return out;
}

/// Fresh labels continue after the largest label seen in `prev`.
inline std::vector<LabeledEllipse> associate(std::span<const LabeledEllipse> prev,
                                             std::span<const Ellipse> cur,
                                             const AssociationParams& params) {
  int next = 0;
  for (const auto& p : prev) next = std::max(next, p.label + 1);
  return associate(prev, cur, params, next).labeled;
}

/// Owns label state across frames: keeps unmatched labels alive for
/// `retire_after - 1` frames so a briefly missed obstacle keeps its identity.
class LabelManager {
 public:
  struct Update {
    std::vector<LabeledEllipse> current;
    std::vector<int> retired;
  };

  explicit LabelManager(AssociationParams params = {}) : params_(params) {}

  Update update(std::span<const Ellipse> cur, double frame_time) {
    std::vector<LabeledEllipse> prev;
    prev.reserve(tracks_.size());
    for (const auto& t : tracks_) prev.push_back(t.last);
    AssociationResult res = associate(prev, cur, params_, next_label_, frame_time);
    next_label_ = res.next_label;

    std::vector<char> hit(tracks_.size(), 0);
    for (int i : res.matched_prev)
      if (i >= 0) hit[static_cast<std::size_t>(i)] = 1;

    Update out;
    std::vector<Track> kept;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      if (hit[i]) continue;
      Track t = tracks_[i];
      if (++t.missed >= params_.retire_after)
        out.retired.push_back(t.last.label);
      else
        kept.push_back(t);
    }
    for (const auto& le : res.labeled) kept.push_back({le, 0});
    std::sort(kept.begin(), kept.end(),
              [](const Track& a, const Track& b) { return a.last.label < b.last.label; });
    tracks_ = std::move(kept);
    out.current = std::move(res.labeled);
    return out;
  }

  int next_label() const { return next_label_; }
  std::size_t live_tracks() const { return tracks_.size(); }

 private:
  struct Track {
    LabeledEllipse last;
    int missed = 0;
  };

  AssociationParams params_;
  std::vector<Track> tracks_;
  int next_label_ = 0;
};

}  // namespace dcbf
