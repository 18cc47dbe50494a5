#include "mavmpc/reference.hpp"

#include "mavmpc/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>

namespace mavmpc {
namespace {

struct PolyValue {
  double p = 0.0, v = 0.0, a = 0.0;
};

PolyValue horner(const std::vector<double>& c, double t) {
  PolyValue out;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    out.a = out.a * t + 2.0 * out.v;
    out.v = out.v * t + out.p;
    out.p = out.p * t + *it;
  }
  return out;
}

// Constrained least squares: degree-11 polynomial in normalized time s in
// [0, 1] matching value, slope and curvature exactly at both ends.
std::vector<double> fit_segment(const std::function<PolyValue(double)>& target, double t_start,
                                double duration) {
  constexpr int n = Trajectory::kMaxDegree + 1;
  constexpr int samples = 200;

  Eigen::MatrixXd fit(samples, n);
  Eigen::VectorXd rhs(samples);
  for (int r = 0; r < samples; ++r) {
    const double s = (r + 0.5) / samples;
    for (int k = 0; k < n; ++k) fit(r, k) = std::pow(s, k);
    rhs(r) = target(t_start + s * duration).p;
  }

  Eigen::MatrixXd eq = Eigen::MatrixXd::Zero(6, n);
  Eigen::VectorXd eq_rhs(6);
  for (int end = 0; end < 2; ++end) {
    const double s = end;
    const PolyValue val = target(t_start + s * duration);
    for (int k = 0; k < n; ++k) {
      eq(3 * end, k) = std::pow(s, k);
      if (k >= 1) eq(3 * end + 1, k) = k * std::pow(s, k - 1);
      if (k >= 2) eq(3 * end + 2, k) = k * (k - 1) * std::pow(s, k - 2);
    }
    eq_rhs(3 * end) = val.p;
    eq_rhs(3 * end + 1) = val.v * duration;
    eq_rhs(3 * end + 2) = val.a * duration * duration;
  }

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 6, n + 6);
  kkt.topLeftCorner(n, n) = fit.transpose() * fit;
  kkt.topRightCorner(n, 6) = eq.transpose();
  kkt.bottomLeftCorner(6, n) = eq;
  Eigen::VectorXd kkt_rhs(n + 6);
  kkt_rhs << fit.transpose() * rhs, eq_rhs;
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(kkt_rhs);

  std::vector<double> coeffs(n);
  for (int k = 0; k < n; ++k) coeffs[k] = sol(k) / std::pow(duration, k);
  return coeffs;
}

}  // namespace

Trajectory::Trajectory(std::vector<PolySegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw InvalidInput("trajectory: at least one segment required");
  for (auto& seg : segments_) {
    if (!(seg.duration > 0.0) || !std::isfinite(seg.duration))
      throw InvalidInput("trajectory: segment duration must be > 0");
    for (auto* c : {&seg.x, &seg.y, &seg.z, &seg.yaw}) {
      if (c->empty()) c->push_back(0.0);
      if (static_cast<int>(c->size()) > kMaxDegree + 1)
        throw InvalidInput("trajectory: polynomial degree exceeds 11");
      for (double v : *c)
        if (!std::isfinite(v)) throw InvalidInput("trajectory: non-finite coefficient");
    }
    start_times_.push_back(duration_);
    duration_ += seg.duration;
  }
}

Trajectory Trajectory::hover(const Vector3& position, double yaw) {
  PolySegment seg;
  seg.duration = 1.0;
  seg.x = {position.x()};
  seg.y = {position.y()};
  seg.z = {position.z()};
  seg.yaw = {yaw};
  return Trajectory({seg});
}

Trajectory Trajectory::figure_eight(const Vector3& center, double x_amplitude, double y_scale,
                                    double duration) {
  if (!(duration > 0.0)) throw InvalidInput("figure_eight: duration must be > 0");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  // Phase follows a quintic smoothstep so the loop starts and ends at rest.
  auto phase = [duration](double t) {
    const double s = std::clamp(t / duration, 0.0, 1.0);
    PolyValue q;
    q.p = two_pi * (10 * std::pow(s, 3) - 15 * std::pow(s, 4) + 6 * std::pow(s, 5));
    q.v = two_pi * (30 * s * s - 60 * std::pow(s, 3) + 30 * std::pow(s, 4)) / duration;
    q.a = two_pi * (60 * s - 180 * s * s + 120 * std::pow(s, 3)) / (duration * duration);
    return q;
  };
  auto x_of = [&](double t) {
    const PolyValue q = phase(t);
    return PolyValue{center.x() + x_amplitude * std::sin(q.p),
                     x_amplitude * std::cos(q.p) * q.v,
                     -x_amplitude * std::sin(q.p) * q.v * q.v + x_amplitude * std::cos(q.p) * q.a};
  };
  auto y_of = [&](double t) {
    const PolyValue q = phase(t);
    const double b = 0.5 * y_scale;
    return PolyValue{center.y() + b * std::sin(2 * q.p), 2 * b * std::cos(2 * q.p) * q.v,
                     -4 * b * std::sin(2 * q.p) * q.v * q.v + 2 * b * std::cos(2 * q.p) * q.a};
  };

  std::vector<PolySegment> segs(2);
  const double half = 0.5 * duration;
  for (int i = 0; i < 2; ++i) {
    segs[i].duration = half;
    segs[i].x = fit_segment(x_of, i * half, half);
    segs[i].y = fit_segment(y_of, i * half, half);
    segs[i].z = {center.z()};
    segs[i].yaw = {0.0};
  }
  return Trajectory(std::move(segs));
}

RefSample Trajectory::sample(double t) const {
  const bool past_end = t >= duration_;
  t = std::clamp(t, 0.0, duration_);
  auto it = std::upper_bound(start_times_.begin(), start_times_.end(), t);
  const std::size_t idx = std::min<std::size_t>(
      static_cast<std::size_t>(std::distance(start_times_.begin(), it)) - 1, segments_.size() - 1);
  const PolySegment& seg = segments_[idx];
  const double local = std::min(t - start_times_[idx], seg.duration);

  const PolyValue px = horner(seg.x, local), py = horner(seg.y, local), pz = horner(seg.z, local);
  const PolyValue yaw = horner(seg.yaw, local);
  RefSample s;
  s.p = {px.p, py.p, pz.p};
  s.yaw = yaw.p;
  if (!past_end) {
    s.v = {px.v, py.v, pz.v};
    s.a = {px.a, py.a, pz.a};
    s.yaw_rate = yaw.v;
  }
  return s;
}

Vector3 build_feedforward(const Vector3& acc_body, double g) {
  return {-acc_body.y() / g, acc_body.x() / g, acc_body.z()};
}

std::vector<Vector3> build_feedforward(const std::vector<Vector3>& acc_body, double g) {
  std::vector<Vector3> out;
  out.reserve(acc_body.size());
  for (const auto& a : acc_body) out.push_back(build_feedforward(a, g));
  return out;
}

ReferenceWindow window(const Trajectory& traj, double t0, int horizon, double dt_pred,
                       double psi, double g) {
  if (horizon < 1 || !(dt_pred > 0.0)) throw InvalidInput("window: horizon >= 1, dt_pred > 0");
  ReferenceWindow w;
  w.samples.reserve(horizon + 1);
  w.x_ref.reserve(horizon + 1);
  w.u_ref.reserve(horizon);
  const double c = std::cos(psi), s = std::sin(psi);
  for (int k = 0; k <= horizon; ++k) {
    const RefSample r = traj.sample(t0 + k * dt_pred);
    Vector8 x = Vector8::Zero();
    x.segment<3>(0) = r.p;
    x.segment<3>(3) = r.v;
    w.x_ref.push_back(x);
    if (k < horizon) {
      const Vector3 acc_body(c * r.a.x() + s * r.a.y(), -s * r.a.x() + c * r.a.y(), r.a.z());
      w.u_ref.push_back(build_feedforward(acc_body, g));
    }
    w.samples.push_back(r);
  }
  return w;
}

}  // namespace mavmpc
