#pragma once

#include "mavmpc/types.hpp"

#include <vector>

namespace mavmpc {

/// One polynomial piece; coefficients are in ascending powers of local time.
struct PolySegment {
  double duration = 0.0;
  std::vector<double> x, y, z, yaw;
};

struct RefSample {
  Vector3 p = Vector3::Zero();
  Vector3 v = Vector3::Zero();
  Vector3 a = Vector3::Zero();
  double yaw = 0.0;
  double yaw_rate = 0.0;
};

/// Piecewise-polynomial reference starting at t = 0. Immutable once built.
class Trajectory {
 public:
  static constexpr int kMaxDegree = 11;

  /// Throws InvalidInput on non-positive durations, degree > 11 or empty input.
  explicit Trajectory(std::vector<PolySegment> segments);

  static Trajectory hover(const Vector3& position, double yaw = 0.0);
  /// Lemniscate about `center` fitted by two degree-11 segments, rest to rest.
  /// Peak speed ~4 m/s, peak acceleration ~0.5 g with the default size.
  static Trajectory figure_eight(const Vector3& center, double x_amplitude = 3.0,
                                 double y_scale = 4.5, double duration = 16.0);

  /// Horner evaluation with two derivatives. Before t = 0 the start is held;
  /// past the end the final pose is held with zero rates.
  RefSample sample(double t) const;

  double duration() const { return duration_; }
  const std::vector<PolySegment>& segments() const { return segments_; }

 private:
  std::vector<PolySegment> segments_;
  std::vector<double> start_times_;
  double duration_ = 0.0;
};

/// Attitude and thrust feed-forward (-a_y / g, a_x / g, a_z) from a body-frame
/// acceleration.
Vector3 build_feedforward(const Vector3& acc_body, double g);

/// Feed-forward for a window of body-frame accelerations.
std::vector<Vector3> build_feedforward(const std::vector<Vector3>& acc_body, double g);

/// N+1 reference states and N reference inputs on the prediction grid.
/// States are heading-free 8-vectors (p, v, 0, 0); inputs are the feed-forward
/// of the reference acceleration rotated into the frame of heading `psi`.
struct ReferenceWindow {
  std::vector<Vector8> x_ref;
  std::vector<Vector3> u_ref;
  std::vector<RefSample> samples;  // N+1 raw samples

  int horizon() const { return static_cast<int>(u_ref.size()); }
};

ReferenceWindow window(const Trajectory& traj, double t0, int horizon, double dt_pred,
                       double psi, double g);

}  // namespace mavmpc
