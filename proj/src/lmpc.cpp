#include "mavmpc/lmpc.hpp"

#include "mavmpc/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mavmpc {

Matrix8 OcpConfig::default_state_weight() {
  Vector8 q;
  q << 40, 40, 40, 20, 20, 20, 10, 10;
  return q.asDiagonal();
}

Matrix3 OcpConfig::default_input_weight() { return Vector3(50, 50, 1).asDiagonal(); }

void OcpConfig::validate() const {
  if (horizon < 1) throw InvalidInput("ocp: horizon must be >= 1");
  if (!(dt_pred > 0.0)) throw InvalidInput("ocp: dt_pred must be > 0");
  if (!(control_period > 0.0) || control_period > dt_pred)
    throw InvalidInput("ocp: control_period must be in (0, dt_pred]");
  auto psd = [](const Eigen::MatrixXd& m, bool strict, const char* name) {
    if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1 + m.norm()))
      throw InvalidInput(std::string("ocp: ") + name + " must be symmetric and finite");
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
    if (strict ? !(lmin > 0.0) : lmin < -1e-12 * (1 + m.norm()))
      throw InvalidInput(std::string("ocp: ") + name + (strict ? " must be PD" : " must be PSD"));
  };
  psd(state_weight, false, "state_weight");
  psd(input_weight, true, "input_weight");
  if (terminal_weight) psd(*terminal_weight, false, "terminal_weight");
  if (!(yaw_weight >= 0.0)) throw InvalidInput("ocp: yaw_weight must be >= 0");
  if (yaw_rate_limit && !(*yaw_rate_limit > 0.0))
    throw InvalidInput("ocp: yaw_rate_limit must be > 0");
}

int OcpConfig::calls_per_interval() const {
  return std::max(1, static_cast<int>(std::lround(dt_pred / control_period)));
}

double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd BtPA = B.transpose() * P * A;
  const Eigen::MatrixXd S = R + B.transpose() * P * B;
  const Eigen::MatrixXd next = Q + A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA);
  return (next - P).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd riccati_terminal(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                 RiccatiOptions options) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols())
    throw InvalidInput("riccati_terminal: dimension mismatch");

  Eigen::MatrixXd P = Q;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd BtPA = B.transpose() * P * A;
    const Eigen::MatrixXd S = R + B.transpose() * P * B;
    Eigen::MatrixXd next = Q + A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double step = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (step <= options.tolerance && riccati_residual(A, B, Q, R, P) <= options.tolerance)
      return P;
  }
  throw std::runtime_error("riccati_terminal: no convergence within iteration cap");
}

CondensedQp build_condensed_qp(const CondensingProblem& pb) {
  const int N = pb.horizon();
  const auto n = pb.A.rows();
  const auto m = pb.B.cols();
  if (N < 1 || pb.A.cols() != n || pb.B.rows() != n || pb.Bd.rows() != n ||
      pb.Bd.cols() != pb.disturbance.size() || pb.Q.rows() != n || pb.Q.cols() != n ||
      pb.P.rows() != n || pb.P.cols() != n || pb.R.rows() != m || pb.R.cols() != m ||
      pb.x0.size() != n || static_cast<int>(pb.x_ref.size()) != N + 1 || pb.u_min.size() != m ||
      pb.u_max.size() != m)
    throw InvalidInput("build_condensed_qp: dimension mismatch");
  for (const auto& x : pb.x_ref)
    if (x.size() != n) throw InvalidInput("build_condensed_qp: x_ref dimension mismatch");
  for (const auto& u : pb.u_ref)
    if (u.size() != m) throw InvalidInput("build_condensed_qp: u_ref dimension mismatch");

  CondensedQp out;
  out.free_response.resize((N + 1) * n);
  out.input_map = Eigen::MatrixXd::Zero((N + 1) * n, N * m);

  const Eigen::VectorXd drift = pb.Bd * pb.disturbance;
  out.free_response.head(n) = pb.x0;
  for (int k = 0; k < N; ++k) {
    out.free_response.segment((k + 1) * n, n) = pb.A * out.free_response.segment(k * n, n) + drift;
    out.input_map.block((k + 1) * n, 0, n, k * m) = pb.A * out.input_map.block(k * n, 0, n, k * m);
    out.input_map.block((k + 1) * n, k * m, n, m) = pb.B;
  }

  // Cost: (e + M U)' W (e + M U) + (U - Ur)' R (U - Ur)
  Eigen::MatrixXd weighted_map(out.input_map.rows(), out.input_map.cols());
  Eigen::VectorXd error(out.free_response.size());
  double constant = 0.0;
  for (int k = 0; k <= N; ++k) {
    const Eigen::MatrixXd& W = k < N ? pb.Q : pb.P;
    error.segment(k * n, n) = out.free_response.segment(k * n, n) - pb.x_ref[k];
    weighted_map.middleRows(k * n, n) = W * out.input_map.middleRows(k * n, n);
    constant += error.segment(k * n, n).dot(W * error.segment(k * n, n));
  }

  out.qp.H = 2.0 * out.input_map.transpose() * weighted_map;
  out.qp.g = 2.0 * weighted_map.transpose() * error;
  out.qp.lb.resize(N * m);
  out.qp.ub.resize(N * m);
  for (int k = 0; k < N; ++k) {
    out.qp.H.block(k * m, k * m, m, m) += 2.0 * pb.R;
    out.qp.g.segment(k * m, m) -= 2.0 * pb.R * pb.u_ref[k];
    constant += pb.u_ref[k].dot(pb.R * pb.u_ref[k]);
    out.qp.lb.segment(k * m, m) = pb.u_min;
    out.qp.ub.segment(k * m, m) = pb.u_max;
  }
  out.qp.H = 0.5 * (out.qp.H + out.qp.H.transpose()).eval();
  out.constant = constant;
  return out;
}

double simulate_cost(const CondensingProblem& pb, const Eigen::VectorXd& U) {
  const int N = pb.horizon();
  const auto m = pb.B.cols();
  Eigen::VectorXd x = pb.x0;
  double cost = 0.0;
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd u = U.segment(k * m, m);
    cost += (x - pb.x_ref[k]).dot(pb.Q * (x - pb.x_ref[k]));
    cost += (u - pb.u_ref[k]).dot(pb.R * (u - pb.u_ref[k]));
    x = pb.A * x + pb.B * u + pb.Bd * pb.disturbance;
  }
  cost += (x - pb.x_ref[N]).dot(pb.P * (x - pb.x_ref[N]));
  return cost;
}

Eigen::VectorXd lmpc_input_lower(const ModelParams& params) {
  return Eigen::Vector3d(params.limits.phi_min, params.limits.theta_min,
                         params.limits.thrust_min - params.g);
}

Eigen::VectorXd lmpc_input_upper(const ModelParams& params) {
  return Eigen::Vector3d(params.limits.phi_max, params.limits.theta_max,
                         params.limits.thrust_max - params.g);
}

ReferenceWindow lmpc_equilibrium_target(const ReferenceWindow& window, const ExternalForce& f_est,
                                        const ModelParams& params) {
  ReferenceWindow target = window;
  const Vector3 force_acc = f_est.newtons / params.mass;
  const double drag = params.g * params.k_drag;
  for (std::size_t k = 0; k < target.x_ref.size(); ++k) {
    const Vector3 v = target.x_ref[k].segment<3>(3);
    const Vector3 extra(drag * v.x() - force_acc.x(), drag * v.y() - force_acc.y(), -force_acc.z());
    const Vector3 compensation = build_feedforward(extra, params.g);
    // Tilt needed at node k: feed-forward of the reference acceleration plus compensation.
    const Vector3 ff = k < target.u_ref.size() ? window.u_ref[k] : window.u_ref.back();
    const Vector3 tilt = ff + compensation;
    target.x_ref[k](6) = tilt(0);
    target.x_ref[k](7) = tilt(1);
    if (k < target.u_ref.size()) {
      target.u_ref[k] = Vector3(tilt(0) / params.k_phi, tilt(1) / params.k_theta, tilt(2));
    }
  }
  return target;
}

LinearMpc::LinearMpc(ModelParams params, OcpConfig config)
    : params_(params), config_(std::move(config)) {
  params_.validate();
  config_.validate();
  model_ = discretize_zoh(linearize_hover(params_), config_.dt_pred);
  if (config_.terminal_weight) {
    terminal_ = *config_.terminal_weight;
  } else {
    terminal_ = riccati_terminal(model_.A, model_.B, config_.state_weight, config_.input_weight);
  }
  reset();
}

void LinearMpc::reset() {
  last_solution_.resize(0);
  last_objective_ = 0.0;
  last_command_ = AttitudeThrustCommand{0.0, 0.0, 0.0, params_.g};
  calls_since_shift_ = 0;
}

CondensingProblem LinearMpc::problem(const Vector8& x0, const ExternalForce& f_est,
                                     const ReferenceWindow& target) const {
  CondensingProblem pb;
  pb.A = model_.A;
  pb.B = model_.B;
  pb.Bd = model_.Bd;
  pb.Q = config_.state_weight;
  pb.R = config_.input_weight;
  pb.P = terminal_;
  pb.x0 = x0;
  pb.disturbance = f_est.newtons;
  pb.x_ref.assign(target.x_ref.begin(), target.x_ref.end());
  pb.u_ref.assign(target.u_ref.begin(), target.u_ref.end());
  pb.u_min = lmpc_input_lower(params_);
  pb.u_max = lmpc_input_upper(params_);
  return pb;
}

ControlOutput LinearMpc::step(const MavState& x, const ExternalForce& f_est,
                              const ReferenceWindow& ref) {
  if (!x.finite() || !f_est.newtons.allFinite())
    throw InvalidInput("lmpc: non-finite state or force estimate");
  if (ref.horizon() != config_.horizon)
    throw InvalidInput("lmpc: reference window does not match the horizon");

  const auto start = std::chrono::steady_clock::now();
  const AttitudePair free_att = rotate_body_to_heading_free(x.phi, x.theta, x.psi);
  Vector8 x0;
  x0 << x.p, x.v, free_att.phi, free_att.theta;

  const ReferenceWindow target = lmpc_equilibrium_target(ref, f_est, params_);
  const CondensingProblem pb = problem(x0, f_est, target);
  const CondensedQp cq = build_condensed_qp(pb);

  std::optional<Eigen::VectorXd> warm;
  if (last_solution_.size() == cq.qp.size()) {
    warm = last_solution_;
    if (++calls_since_shift_ >= config_.calls_per_interval()) {
      calls_since_shift_ = 0;
      const auto m = kInputDim;
      const auto len = warm->size();
      warm->head(len - m) = last_solution_.tail(len - m);
      warm->tail(m) = last_solution_.tail(m);
    }
  }

  ControlOutput out;
  try {
    const QpSolution sol = solver_.solve(cq.qp, warm);
    last_solution_ = sol.z;
    last_objective_ = sol.objective + cq.constant;
    out.qp_iterations = sol.iterations;

    const AttitudePair body = rotate_cmd_to_body(sol.z(0), sol.z(1), x.psi);
    const InputLimits& lim = params_.limits;
    out.command.phi_cmd = std::clamp(body.phi, lim.phi_min, lim.phi_max);
    out.command.theta_cmd = std::clamp(body.theta, lim.theta_min, lim.theta_max);
    out.command.thrust_cmd = compensate_thrust(sol.z(2), x.phi, x.theta, params_);
    double yaw_rate = ref.samples.front().yaw_rate;
    if (config_.yaw_rate_limit)
      yaw_rate = std::clamp(yaw_rate, -*config_.yaw_rate_limit, *config_.yaw_rate_limit);
    out.command.psi_rate_cmd = yaw_rate;
    last_command_ = out.command;

    const Eigen::VectorXd X = cq.free_response + cq.input_map * sol.z;
    out.predicted.reserve(config_.horizon + 1);
    for (int k = 0; k <= config_.horizon; ++k) {
      Vector9 p;
      p << X.segment<8>(8 * k), x.psi;
      out.predicted.push_back(p);
    }
  } catch (const QpError&) {
    out.command = last_command_;
    out.fault = true;
  }
  out.solve_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ControlOutput LinearMpc::step(const MavState& x, const ExternalForce& f_est,
                              const Trajectory& traj, double t) {
  // Heading-free frame: feed-forward taken at psi = 0.
  return step(x, f_est, window(traj, t, config_.horizon, config_.dt_pred, 0.0, params_.g));
}

}  // namespace mavmpc
