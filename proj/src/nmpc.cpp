#include "mavmpc/nmpc.hpp"

#include "mavmpc/errors.hpp"
#include "mavmpc/lmpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace mavmpc {

AttitudeThrust invert_acceleration(const Vector3& acc, const Vector3& v, const Vector3& f_ext,
                                   double psi, const ModelParams& params) {
  const Vector3 wanted = acc + Vector3(0.0, 0.0, params.g) - f_ext / params.mass;
  const Matrix3 K = Vector3(params.k_drag, params.k_drag, 0.0).asDiagonal();
  const double c = std::cos(psi), s = std::sin(psi);

  AttitudeThrust out{0.0, 0.0, params.g};
  Vector3 drag = Vector3::Zero();
  // Drag is small relative to thrust, so the fixed-point iteration contracts fast.
  for (int pass = 0; pass < 50; ++pass) {
    const Vector3 drag_prev = drag;
    const Vector3 w = wanted + drag;
    const Vector3 b(c * w.x() + s * w.y(), -s * w.x() + c * w.y(), w.z());
    const double thrust = b.norm();
    if (!(thrust > 0.0)) return out;
    out.thrust = thrust;
    out.phi = std::asin(std::clamp(-b.y() / thrust, -1.0, 1.0));
    out.theta = std::atan2(b.x(), b.z());
    const Matrix3 R = rotation_zyx(out.phi, out.theta, psi);
    drag = out.thrust * (R * K * R.transpose() * v);
    if ((drag - drag_prev).lpNorm<Eigen::Infinity>() <= 1e-15) break;
  }
  return out;
}

NmpcReference nmpc_reference(const Trajectory& traj, double t0, int horizon, double dt_pred,
                             double psi_now, double psi_rate_cmd, const ExternalForce& f_est,
                             const ModelParams& params) {
  NmpcReference ref;
  ref.psi_rate_cmd = psi_rate_cmd;
  ref.x_ref.reserve(horizon + 1);
  ref.u_ref.reserve(horizon);
  for (int k = 0; k <= horizon; ++k) {
    const RefSample r = traj.sample(t0 + k * dt_pred);
    const double psi_k = psi_now + k * dt_pred * psi_rate_cmd;
    const AttitudeThrust eq = invert_acceleration(r.a, r.v, f_est.newtons, psi_k, params);
    Vector9 x;
    x << r.p, r.v, eq.phi, eq.theta, r.yaw;
    ref.x_ref.push_back(x);
    if (k < horizon) ref.u_ref.emplace_back(eq.phi / params.k_phi, eq.theta / params.k_theta, eq.thrust);
  }
  return ref;
}

NonlinearMpc::NonlinearMpc(ModelParams params, OcpConfig config)
    : params_(params), config_(std::move(config)) {
  params_.validate();
  config_.validate();
  Matrix8 p8;
  if (config_.terminal_weight) {
    p8 = *config_.terminal_weight;
  } else {
    const LinearModel lin = discretize_zoh(linearize_hover(params_), config_.dt_pred);
    p8 = riccati_terminal(lin.A, lin.B, config_.state_weight, config_.input_weight);
  }
  q9_.setZero();
  q9_.topLeftCorner<8, 8>() = config_.state_weight;
  q9_(8, 8) = config_.yaw_weight;
  p9_.setZero();
  p9_.topLeftCorner<8, 8>() = p8;
  p9_(8, 8) = config_.yaw_weight;
  reset();
}

void NonlinearMpc::reset() {
  initialized_ = false;
  calls_since_shift_ = 0;
  ws_ = RtiWorkspace{};
  grid_ = ShootingGrid{};
  grid_.dt_pred = config_.dt_pred;
  last_command_ = AttitudeThrustCommand{0.0, 0.0, 0.0, params_.g};
}

void NonlinearMpc::set_grid(ShootingGrid grid) {
  if (grid.horizon() != config_.horizon ||
      static_cast<int>(grid.nodes.size()) != config_.horizon + 1)
    throw InvalidInput("nmpc: grid does not match the horizon");
  grid.dt_pred = config_.dt_pred;
  grid_ = std::move(grid);
  ws_.ready = false;
  initialized_ = true;
}

void NonlinearMpc::initialize_grid(const MavState& x, const NmpcReference& ref) {
  ShootingGrid grid;
  grid.nodes.assign(config_.horizon + 1, x.to_vector());
  grid.controls.assign(ref.u_ref.begin(), ref.u_ref.end());
  set_grid(std::move(grid));
}

void NonlinearMpc::initialize_grid_rollout(const MavState& x, const std::vector<Vector3>& controls,
                                           const NmpcReference& ref, const ExternalForce& f_est) {
  ShootingGrid grid;
  grid.nodes.push_back(x.to_vector());
  grid.controls = controls;
  for (const auto& u : controls)
    grid.nodes.push_back(integrate_state(grid.nodes.back(), u, ref.psi_rate_cmd, f_est.newtons,
                                         config_.dt_pred, params_));
  set_grid(std::move(grid));
}

void NonlinearMpc::shift() {
  const int N = grid_.horizon();
  if (N == 0) return;
  std::rotate(grid_.nodes.begin(), grid_.nodes.begin() + 1, grid_.nodes.end());
  std::rotate(grid_.controls.begin(), grid_.controls.begin() + 1, grid_.controls.end());
  grid_.controls[N - 1] = grid_.controls[N - 2 >= 0 ? N - 2 : 0];
  grid_.nodes[N] = integrate_state(grid_.nodes[N - 1], grid_.controls[N - 1], ref_.psi_rate_cmd,
                                   ws_.f_prepared, config_.dt_pred, params_);
  ws_.ready = false;
}

void NonlinearMpc::prepare(const NmpcReference& ref, const ExternalForce& f_est) {
  const int N = config_.horizon;
  constexpr int nx = kStateDim, nu = kInputDim, np = kStateDim + 3;
  if (static_cast<int>(ref.x_ref.size()) != N + 1 || static_cast<int>(ref.u_ref.size()) != N)
    throw InvalidInput("nmpc: reference does not match the horizon");
  if (!initialized_) throw InvalidInput("nmpc: grid not initialized");
  ref_ = ref;

  ws_.f_prepared = f_est.newtons;
  ws_.A.resize(N);
  ws_.B.resize(N);
  ws_.D.resize(N);
  ws_.defects.resize(N);
  for (int k = 0; k < N; ++k) {
    const StepResult st = integrate_step(grid_.nodes[k], grid_.controls[k], ref.psi_rate_cmd,
                                         f_est.newtons, config_.dt_pred, params_);
    ws_.A[k] = st.dx;
    ws_.B[k] = st.du;
    ws_.D[k] = st.df;
    ws_.defects[k] = st.x_next - grid_.nodes[k + 1];
  }

  // dS_{k+1} = A_k dS_k + B_k dQ_k + D_k dF + c_k,  dS_0 = dx0
  ws_.state_map = Eigen::MatrixXd::Zero((N + 1) * nx, N * nu);
  ws_.embedding_map = Eigen::MatrixXd::Zero((N + 1) * nx, np);
  ws_.defect_response = Eigen::VectorXd::Zero((N + 1) * nx);
  ws_.embedding_map.topLeftCorner<nx, nx>().setIdentity();
  for (int k = 0; k < N; ++k) {
    const auto rows = (k + 1) * nx;
    ws_.state_map.block(rows, 0, nx, k * nu) = ws_.A[k] * ws_.state_map.block(k * nx, 0, nx, k * nu);
    ws_.state_map.block(rows, k * nu, nx, nu) = ws_.B[k];
    ws_.embedding_map.middleRows(rows, nx) = ws_.A[k] * ws_.embedding_map.middleRows(k * nx, nx);
    ws_.embedding_map.block(rows, nx, nx, 3) += ws_.D[k];
    ws_.defect_response.segment(rows, nx) =
        ws_.A[k] * ws_.defect_response.segment(k * nx, nx) + ws_.defects[k];
  }

  ws_.residual.resize((N + 1) * nx);
  Eigen::MatrixXd weighted_state(ws_.state_map.rows(), ws_.state_map.cols());
  Eigen::MatrixXd weighted_embed(ws_.embedding_map.rows(), np);
  for (int k = 0; k <= N; ++k) {
    const Matrix9& W = k < N ? q9_ : p9_;
    ws_.residual.segment<nx>(k * nx) =
        grid_.nodes[k] + ws_.defect_response.segment<nx>(k * nx) - ref.x_ref[k];
    weighted_state.middleRows(k * nx, nx) = W * ws_.state_map.middleRows(k * nx, nx);
    weighted_embed.middleRows(k * nx, nx) = W * ws_.embedding_map.middleRows(k * nx, nx);
  }

  const Matrix3& R = config_.input_weight;
  ws_.H = 2.0 * ws_.state_map.transpose() * weighted_state;
  ws_.g0 = 2.0 * weighted_state.transpose() * ws_.residual;
  ws_.G = 2.0 * weighted_state.transpose() * ws_.embedding_map;
  ws_.lb.resize(N * nu);
  ws_.ub.resize(N * nu);
  ws_.control_cost = 0.0;
  const InputLimits& lim = params_.limits;
  const Vector3 lo(lim.phi_min, lim.theta_min, lim.thrust_min);
  const Vector3 hi(lim.phi_max, lim.theta_max, lim.thrust_max);
  for (int k = 0; k < N; ++k) {
    const Vector3 du = grid_.controls[k] - ref.u_ref[k];
    ws_.H.block<nu, nu>(k * nu, k * nu) += 2.0 * R;
    ws_.g0.segment<nu>(k * nu) += 2.0 * R * du;
    ws_.control_cost += du.dot(R * du);
    ws_.lb.segment<nu>(k * nu) = (lo - grid_.controls[k]).cwiseMin(0.0);
    ws_.ub.segment<nu>(k * nu) = (hi - grid_.controls[k]).cwiseMax(0.0);
  }
  ws_.H = 0.5 * (ws_.H + ws_.H.transpose()).eval();
  ws_.ready = true;
}

RtiFeedback NonlinearMpc::feedback(const MavState& x_now, const ExternalForce& f_est) {
  if (!ws_.ready) throw InvalidInput("nmpc: feedback called without prepare");
  if (!x_now.finite() || !f_est.newtons.allFinite())
    throw InvalidInput("nmpc: non-finite state or force estimate");
  constexpr int nx = kStateDim, nu = kInputDim;
  const int N = config_.horizon;

  Eigen::Matrix<double, nx + 3, 1> p;
  p << x_now.to_vector() - grid_.nodes[0], f_est.newtons - ws_.f_prepared;

  BoxQp qp{ws_.H, ws_.g0 + ws_.G * p, ws_.lb, ws_.ub};
  RtiFeedback out;
  try {
    last_qp_ = solver_.solve(qp, Eigen::VectorXd::Zero(qp.size()));
  } catch (const QpError&) {
    out.command = last_command_;
    out.fault = true;
    return out;
  }
  out.qp_iterations = last_qp_.iterations;
  out.step_norm = last_qp_.z.lpNorm<Eigen::Infinity>();

  const Eigen::VectorXd dS = ws_.embedding_map * p + ws_.state_map * last_qp_.z + ws_.defect_response;
  const InputLimits& lim = params_.limits;
  for (int k = 0; k <= N; ++k) grid_.nodes[k] += dS.segment<nx>(k * nx);
  for (int k = 0; k < N; ++k) {
    Vector3& u = grid_.controls[k];
    u += last_qp_.z.segment<nu>(k * nu);
    u(0) = std::clamp(u(0), lim.phi_min, lim.phi_max);
    u(1) = std::clamp(u(1), lim.theta_min, lim.theta_max);
    u(2) = std::clamp(u(2), lim.thrust_min, lim.thrust_max);
  }
  grid_.nodes[0] = x_now.to_vector();
  ws_.ready = false;

  out.command.phi_cmd = grid_.controls[0](0);
  out.command.theta_cmd = grid_.controls[0](1);
  out.command.thrust_cmd = grid_.controls[0](2);
  out.command.psi_rate_cmd = ref_.psi_rate_cmd;
  last_command_ = out.command;
  return out;
}

double NonlinearMpc::max_defect() const {
  double worst = 0.0;
  for (int k = 0; k < grid_.horizon(); ++k) {
    const Vector9 next = integrate_state(grid_.nodes[k], grid_.controls[k], ref_.psi_rate_cmd,
                                         ws_.f_prepared, config_.dt_pred, params_);
    worst = std::max(worst, (next - grid_.nodes[k + 1]).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double NonlinearMpc::kkt_residual(const MavState& x_now) const {
  if (!ws_.ready) throw InvalidInput("nmpc: kkt_residual requires a prepared workspace");
  double worst = (x_now.to_vector() - grid_.nodes[0]).lpNorm<Eigen::Infinity>();
  for (const auto& c : ws_.defects) worst = std::max(worst, c.lpNorm<Eigen::Infinity>());
  const BoxQp qp{ws_.H, ws_.g0, ws_.lb, ws_.ub};
  return std::max(worst, box_kkt_residual(qp, Eigen::VectorXd::Zero(qp.size())));
}

double NonlinearMpc::grid_cost(const NmpcReference& ref) const {
  const int N = grid_.horizon();
  double cost = 0.0;
  for (int k = 0; k <= N; ++k) {
    const Vector9 e = grid_.nodes[k] - ref.x_ref[k];
    cost += e.dot((k < N ? q9_ : p9_) * e);
  }
  for (int k = 0; k < N; ++k) {
    const Vector3 e = grid_.controls[k] - ref.u_ref[k];
    cost += e.dot(config_.input_weight * e);
  }
  return cost;
}

double NonlinearMpc::model_cost_at_iterate() const {
  if (!ws_.ready) throw InvalidInput("nmpc: model cost requires a prepared workspace");
  const int N = config_.horizon;
  double cost = ws_.control_cost;
  for (int k = 0; k <= N; ++k) {
    const Vector9 r = ws_.residual.segment<kStateDim>(k * kStateDim);
    cost += r.dot((k < N ? q9_ : p9_) * r);
  }
  return cost;
}

ControlOutput NonlinearMpc::step(const MavState& x, const ExternalForce& f_est,
                                 const Trajectory& traj, double t) {
  if (!x.finite() || !f_est.newtons.allFinite())
    throw InvalidInput("nmpc: non-finite state or force estimate");
  const auto start = std::chrono::steady_clock::now();

  const double limit = config_.yaw_rate_limit.value_or(std::numbers::pi);
  const double psi_rate = std::clamp(traj.sample(t).yaw_rate, -limit, limit);
  const NmpcReference ref = nmpc_reference(traj, t, config_.horizon, config_.dt_pred, x.psi,
                                           psi_rate, f_est, params_);

  ControlOutput out;
  try {
    if (!initialized_) {
      initialize_grid(x, ref);
    } else if (++calls_since_shift_ >= config_.calls_per_interval()) {
      calls_since_shift_ = 0;
      shift();
    }
    prepare(ref, f_est);
    const RtiFeedback fb = feedback(x, f_est);
    out.command = fb.command;
    out.fault = fb.fault;
    out.qp_iterations = fb.qp_iterations;
    out.predicted = grid_.nodes;
  } catch (const IntegratorError&) {
    out.command = last_command_;
    out.fault = true;
    reset();
    last_command_ = out.command;
  }
  out.solve_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace mavmpc
