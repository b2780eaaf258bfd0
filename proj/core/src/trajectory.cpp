#include "diffgeo/trajectory.hpp"

#include "diffgeo/csv.hpp"
#include "diffgeo/error.hpp"

namespace diffgeo {

void Trajectory::validate() const {
  const std::size_t n = times.size();
  if (states.size() != n || winding.size() != n || rates.size() != n ||
      (tangents && tangents->size() != n) || (fundamental && fundamental->size() != n) ||
      (log_det && log_det->size() != n)) {
    throw Error(ErrorKind::InvalidArgument, "trajectory arrays differ in length");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(times[i] > times[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "trajectory times must be strictly increasing");
    }
  }
}

std::vector<Increment> incremental_mismatch(const Trajectory &traj1, const Trajectory &traj2) {
  if (traj1.size() != traj2.size()) {
    throw Error(ErrorKind::MismatchedGrids, "trajectories have different sample counts");
  }
  std::vector<Increment> out;
  out.reserve(traj1.size());
  for (std::size_t i = 0; i < traj1.size(); ++i) {
    if (traj1.times[i] != traj2.times[i]) {
      throw Error(ErrorKind::MismatchedGrids, "trajectories do not share a time grid");
    }
    out.push_back({traj1.times[i], angle_diff(traj1.states[i].theta(), traj2.states[i].theta()),
                   traj1.states[i].v() - traj2.states[i].v()});
  }
  return out;
}

void write_csv(std::ostream &os, const Trajectory &traj) {
  os << "t,theta,v,winding";
  if (traj.tangents) os << ",dtheta,dv";
  if (traj.fundamental) os << ",phi11,phi12,phi21,phi22";
  os << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << csv::format(traj.times[i]) << ',' << csv::format(traj.states[i].theta()) << ','
       << csv::format(traj.states[i].v()) << ',' << traj.winding[i];
    if (traj.tangents) {
      const Tangent &d = (*traj.tangents)[i];
      os << ',' << csv::format(d.dtheta) << ',' << csv::format(d.dv);
    }
    if (traj.fundamental) {
      const Mat2 &m = (*traj.fundamental)[i];
      os << ',' << csv::format(m.a) << ',' << csv::format(m.b) << ',' << csv::format(m.c) << ','
         << csv::format(m.d);
    }
    os << '\n';
  }
}

}  // namespace diffgeo
