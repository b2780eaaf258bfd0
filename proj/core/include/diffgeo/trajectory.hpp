#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "diffgeo/model.hpp"

namespace diffgeo {

/// Sampled solution of a PlanarSystem. theta is stored wrapped; the winding
/// count recovers the lifted angle theta + 2 pi winding, so rotations on the
/// cylinder stay visible.
struct Trajectory {
  std::vector<double> times;
  std::vector<CylinderPoint> states;
  std::vector<std::int64_t> winding;
  /// Vector field at each sample; feeds the cubic Hermite dense output.
  std::vector<Vec2> rates;
  std::optional<std::vector<Tangent>> tangents;
  std::optional<std::vector<Mat2>> fundamental;
  /// ln det of each fundamental sample (present with `fundamental`).
  std::optional<std::vector<double>> log_det;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double lifted_theta(std::size_t i) const {
    return states[i].theta() + kTwoPi * static_cast<double>(winding[i]);
  }
  const CylinderPoint &back() const { return states.back(); }

  /// Throws InvalidArgument if array lengths differ or times are not
  /// strictly increasing.
  void validate() const;
};

struct Increment {
  double t{0.0};
  double dtheta{0.0};
  double dv{0.0};
};

/// Sample-wise difference traj1 - traj2 with the angular part wrapped to
/// (-pi, pi]. Throws MismatchedGrids unless both share the time grid.
std::vector<Increment> incremental_mismatch(const Trajectory &traj1, const Trajectory &traj2);

/// CSV with header t,theta,v,winding[,dtheta,dv][,phi11,phi12,phi21,phi22].
void write_csv(std::ostream &os, const Trajectory &traj);

}  // namespace diffgeo
