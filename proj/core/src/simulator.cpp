#include "sselab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace sselab {

namespace {

constexpr cplx kI{0.0, 1.0};

int interior_per_row(const Mesh& mesh) { return mesh.cells()[0] - 1; }

}  // namespace

struct ForwardModel::Sparse {
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
};

ForwardModel::ForwardModel(const Mesh& mesh, const Coefficients& coeffs, double T, int steps)
    : coeffs_(mesh, coeffs), T_(T), steps_(steps) {
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (steps < 1) throw std::invalid_argument("steps must be positive");
  const double dt = T / steps;
  const auto h = mesh.spacing();
  if (mesh.dim() == 1) {
    const std::size_t N = mesh.interior_count();
    const cplx d = 1.0 + kI * dt / (h[0] * h[0]);
    off_diag_ = -kI * dt / (2.0 * h[0] * h[0]);
    thomas_c_.resize(N);
    thomas_inv_.resize(N);
    cplx prev_c = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      const cplx denom = d - off_diag_ * prev_c;
      thomas_inv_[k] = 1.0 / denom;
      thomas_c_[k] = off_diag_ * thomas_inv_[k];
      prev_c = thomas_c_[k];
    }
    return;
  }
  const int nx = interior_per_row(mesh);
  const int ny = mesh.cells()[1] - 1;
  const auto N = static_cast<Eigen::Index>(mesh.interior_count());
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(static_cast<std::size_t>(5 * N));
  const double ax = dt / (2.0 * h[0] * h[0]);
  const double ay = dt / (2.0 * h[1] * h[1]);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Eigen::Index k = j * nx + i;
      triplets.emplace_back(k, k, 1.0 + kI * 2.0 * (ax + ay));
      if (i > 0) triplets.emplace_back(k, k - 1, -kI * ax);
      if (i + 1 < nx) triplets.emplace_back(k, k + 1, -kI * ax);
      if (j > 0) triplets.emplace_back(k, k - nx, -kI * ay);
      if (j + 1 < ny) triplets.emplace_back(k, k + nx, -kI * ay);
    }
  Eigen::SparseMatrix<cplx> S(N, N);
  S.setFromTriplets(triplets.begin(), triplets.end());
  auto sparse = std::make_shared<Sparse>();
  sparse->lu.compute(S);
  if (sparse->lu.info() != Eigen::Success)
    throw std::logic_error("Crank-Nicolson matrix factorisation failed");
  sparse_ = std::move(sparse);
}

void ForwardModel::laplacian(const ComplexGridField& y, ComplexGridField& out) const {
  const auto h = mesh().spacing();
  const auto N = static_cast<Eigen::Index>(size());
  out.resize(N);
  if (mesh().dim() == 1) {
    const double c = 1.0 / (h[0] * h[0]);
    for (Eigen::Index k = 0; k < N; ++k) {
      const cplx left = k > 0 ? y[k - 1] : cplx{};
      const cplx right = k + 1 < N ? y[k + 1] : cplx{};
      out[k] = c * (left - 2.0 * y[k] + right);
    }
    return;
  }
  const int nx = interior_per_row(mesh());
  const int ny = mesh().cells()[1] - 1;
  const double cx = 1.0 / (h[0] * h[0]);
  const double cy = 1.0 / (h[1] * h[1]);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Eigen::Index k = j * nx + i;
      const cplx w = i > 0 ? y[k - 1] : cplx{};
      const cplx e = i + 1 < nx ? y[k + 1] : cplx{};
      const cplx s = j > 0 ? y[k - nx] : cplx{};
      const cplx n = j + 1 < ny ? y[k + nx] : cplx{};
      out[k] = cx * (w - 2.0 * y[k] + e) + cy * (s - 2.0 * y[k] + n);
    }
}

void ForwardModel::gradient(const ComplexGridField& y, int axis, ComplexGridField& out) const {
  const auto h = mesh().spacing();
  const auto N = static_cast<Eigen::Index>(size());
  out.resize(N);
  const int nx = mesh().dim() == 1 ? static_cast<int>(N) : interior_per_row(mesh());
  const int ny = mesh().dim() == 1 ? 1 : mesh().cells()[1] - 1;
  const double c = 1.0 / (2.0 * h[axis]);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Eigen::Index k = j * nx + i;
      cplx lo{}, hi{};
      if (axis == 0) {
        if (i > 0) lo = y[k - 1];
        if (i + 1 < nx) hi = y[k + 1];
      } else {
        if (j > 0) lo = y[k - nx];
        if (j + 1 < ny) hi = y[k + nx];
      }
      out[k] = c * (hi - lo);
    }
}

void ForwardModel::solve(ComplexGridField& x) const {
  if (sparse_) {
    ComplexGridField r = sparse_->lu.solve(x);
    x = std::move(r);
    return;
  }
  const auto N = static_cast<Eigen::Index>(size());
  x[0] *= thomas_inv_[0];
  for (Eigen::Index k = 1; k < N; ++k)
    x[k] = (x[k] - off_diag_ * x[k - 1]) * thomas_inv_[static_cast<std::size_t>(k)];
  for (Eigen::Index k = N - 2; k >= 0; --k) x[k] -= thomas_c_[static_cast<std::size_t>(k)] * x[k + 1];
}

void ForwardModel::solve_adjoint(ComplexGridField& x) const {
  // S^H = conj(S) entrywise because Lap_h is real.
  x = x.conjugate().eval();
  solve(x);
  x = x.conjugate().eval();
}

void ForwardModel::step(int n, const ComplexGridField& y, double dB, ComplexGridField& out,
                        const ModulusNonlinearity* nl, bool homogeneous) const {
  const double dt_ = dt();
  const double t = n * dt_;
  ComplexGridField lap;
  laplacian(y, lap);
  ComplexGridField drift = coeffs_.has_a2() ? ComplexGridField(coeffs_.a2().cwiseProduct(y))
                                            : ComplexGridField::Zero(y.size());
  if (coeffs_.has_b1()) {
    ComplexGridField grad;
    for (int a = 0; a < mesh().dim(); ++a) {
      gradient(y, a, grad);
      drift += kI * coeffs_.b1(a).cast<cplx>().cwiseProduct(grad);
    }
  }
  ComplexGridField noise = coeffs_.has_a3() ? ComplexGridField(coeffs_.a3().cast<cplx>().cwiseProduct(y))
                                            : ComplexGridField::Zero(y.size());
  if (!homogeneous) {
    ComplexGridField scratch;
    if (coeffs_.has_f()) drift += coeffs_.f(t, scratch);
    if (coeffs_.has_g()) noise += coeffs_.g(t, scratch);
  }
  if (nl) {
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      const double r = std::abs(y[k]);
      if (nl->F1) drift[k] += nl->F1(r);
      if (nl->F2) noise[k] += nl->F2(r);
    }
  }
  out = y + (0.5 * kI * dt_) * lap - (kI * dt_) * drift - (kI * dB) * noise;
  solve(out);
}

void ForwardModel::step_adjoint(int, const ComplexGridField& lam, double dB, ComplexGridField& out) const {
  const double dt_ = dt();
  ComplexGridField t = lam;
  solve_adjoint(t);
  ComplexGridField lap;
  laplacian(t, lap);
  // L^H x = i sum_a D_a (b1_a x) + conj(a2) x, using D_a^T = -D_a.
  ComplexGridField adj = coeffs_.has_a2() ? ComplexGridField(coeffs_.a2().conjugate().cwiseProduct(t))
                                          : ComplexGridField::Zero(t.size());
  if (coeffs_.has_b1()) {
    ComplexGridField grad;
    for (int a = 0; a < mesh().dim(); ++a) {
      const ComplexGridField bt = coeffs_.b1(a).cast<cplx>().cwiseProduct(t);
      gradient(bt, a, grad);
      adj += kI * grad;
    }
  }
  out = t - (0.5 * kI * dt_) * lap + (kI * dt_) * adj;
  if (coeffs_.has_a3()) out += (kI * dB) * coeffs_.a3().cast<cplx>().cwiseProduct(t);
}

void simulate_forward(const ForwardModel& model, const ComplexGridField& y0, const BrownianPath& path,
                      const StateObserver& observe, const ModulusNonlinearity* nl, bool homogeneous) {
  if (path.steps() != model.steps())
    throw std::invalid_argument("Brownian path has " + std::to_string(path.steps()) +
                                " steps, model expects " + std::to_string(model.steps()));
  if (std::abs(path.T() - model.T()) > 1e-12 * model.T())
    throw std::invalid_argument("Brownian path horizon differs from the model's");
  if (y0.size() != static_cast<Eigen::Index>(model.size()))
    throw std::invalid_argument("initial datum has the wrong size");
  if (!y0.allFinite()) throw std::invalid_argument("initial datum is not finite");
  ComplexGridField y = y0;
  ComplexGridField next;
  if (observe) observe(0, 0.0, y);
  for (int n = 0; n < model.steps(); ++n) {
    model.step(n, y, path.increment(n), next, nl, homogeneous);
    if (!std::isfinite(next.squaredNorm()))
      throw std::runtime_error("solution blew up at step " + std::to_string(n + 1));
    y.swap(next);
    if (observe) observe(n + 1, (n + 1) * model.dt(), y);
  }
}

Trajectory simulate_forward(const ForwardModel& model, const ComplexGridField& y0,
                            const BrownianPath& path, const ModulusNonlinearity* nl, bool homogeneous) {
  Trajectory traj;
  traj.dt = model.dt();
  traj.states.reserve(static_cast<std::size_t>(model.steps() + 1));
  simulate_forward(
      model, y0, path, [&](int, double, const ComplexGridField& y) { traj.states.push_back(y); }, nl,
      homogeneous);
  return traj;
}

Trajectory simulate_forward(const Mesh& mesh, const Coefficients& coeffs, const ComplexGridField& y0,
                            const BrownianPath& path, int steps) {
  const ForwardModel model(mesh, coeffs, path.T(), steps);
  return simulate_forward(model, y0, path);
}

GridNorms norms(const Mesh& mesh, const ComplexGridField& y) {
  if (y.size() != static_cast<Eigen::Index>(mesh.interior_count()))
    throw std::invalid_argument("field size does not match the mesh");
  const double vol = mesh.cell_volume();
  const auto npa = mesh.nodes_per_axis();
  const auto h = mesh.spacing();
  auto value = [&](int i, int j) -> cplx {
    const long k = mesh.interior_number(i, j);
    return k < 0 ? cplx{} : y[k];
  };
  GridNorms out;
  out.l2_sq = y.squaredNorm() * vol;
  double grad = 0.0;
  for (int j = 0; j < npa[1]; ++j)
    for (int i = 0; i < npa[0]; ++i) {
      const cplx v = value(i, j);
      if (i + 1 < npa[0]) grad += std::norm(value(i + 1, j) - v) / (h[0] * h[0]);
      if (mesh.dim() == 2 && j + 1 < npa[1]) grad += std::norm(value(i, j + 1) - v) / (h[1] * h[1]);
    }
  out.h1_sq = out.l2_sq + grad * vol;
  return out;
}

TraceOperator::TraceOperator(const Mesh& mesh, TraceSelection selection) {
  for (const auto& b : mesh.boundary())
    if (selection == TraceSelection::FullBoundary || b.in_gamma0) ids_.push_back(b.id);
  build(mesh);
}

TraceOperator::TraceOperator(const Mesh& mesh, std::vector<std::size_t> boundary_ids)
    : ids_(std::move(boundary_ids)) {
  build(mesh);
}

void TraceOperator::build(const Mesh& mesh) {
  const auto h = mesh.spacing();
  for (std::size_t id : ids_) {
    const BoundaryNode& b = mesh.boundary_node_by_id(id);
    const int di = -static_cast<int>(std::lround(b.normal[0]));
    const int dj = -static_cast<int>(std::lround(b.normal[1]));
    const int axis = di != 0 ? 0 : 1;
    Row r{};
    r.k1 = mesh.interior_number(b.index[0] + di, b.index[1] + dj);
    r.k2 = mesh.interior_number(b.index[0] + 2 * di, b.index[1] + 2 * dj);
    r.inv_2h = 1.0 / (2.0 * h[axis]);
    rows_.push_back(r);
    surface_.push_back(b.surface_weight);
  }
}

Eigen::VectorXcd TraceOperator::apply(const ComplexGridField& y) const {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(rows_.size()));
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const Row& row = rows_[r];
    cplx v{};
    if (row.k1 >= 0) v -= 4.0 * y[row.k1];
    if (row.k2 >= 0) v += y[row.k2];
    out[static_cast<Eigen::Index>(r)] = v * row.inv_2h;
  }
  return out;
}

void TraceOperator::apply_adjoint_add(const Eigen::VectorXcd& w, std::span<const double> scale,
                                      ComplexGridField& out) const {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const Row& row = rows_[r];
    const cplx v = w[static_cast<Eigen::Index>(r)] * scale[r] * row.inv_2h;
    if (row.k1 >= 0) out[row.k1] -= 4.0 * v;
    if (row.k2 >= 0) out[row.k2] += v;
  }
}

double TraceOperator::energy(const ComplexGridField& y) const {
  const Eigen::VectorXcd v = apply(y);
  double e = 0.0;
  for (std::size_t r = 0; r < rows_.size(); ++r) e += surface_[r] * std::norm(v[static_cast<Eigen::Index>(r)]);
  return e;
}

double ObservationTrace::energy() const {
  double e = 0.0;
  for (Eigen::Index n = 0; n < values.rows(); ++n) {
    double row = 0.0;
    for (Eigen::Index b = 0; b < values.cols(); ++b)
      row += surface_weights[static_cast<std::size_t>(b)] * std::norm(values(n, b));
    e += time_weights[static_cast<std::size_t>(n)] * row;
  }
  return e;
}

cplx ObservationTrace::inner(const ObservationTrace& other) const {
  if (other.values.rows() != values.rows() || other.values.cols() != values.cols())
    throw std::invalid_argument("observation traces have different shapes");
  cplx e{};
  for (Eigen::Index n = 0; n < values.rows(); ++n) {
    cplx row{};
    for (Eigen::Index b = 0; b < values.cols(); ++b)
      row += surface_weights[static_cast<std::size_t>(b)] * values(n, b) * std::conj(other.values(n, b));
    e += time_weights[static_cast<std::size_t>(n)] * row;
  }
  return e;
}

std::vector<double> trapezoid_weights(double dt, int steps) {
  std::vector<double> w(static_cast<std::size_t>(steps + 1), dt);
  w.front() = w.back() = 0.5 * dt;
  return w;
}

ObservationTrace normal_trace(const TraceOperator& op, const Trajectory& trajectory) {
  ObservationTrace tr;
  const int steps = trajectory.steps();
  tr.node_ids.assign(op.node_ids().begin(), op.node_ids().end());
  tr.surface_weights.assign(op.surface_weights().begin(), op.surface_weights().end());
  tr.time_weights = trapezoid_weights(trajectory.dt, steps);
  tr.values.resize(steps + 1, static_cast<Eigen::Index>(op.size()));
  for (int n = 0; n <= steps; ++n) {
    tr.times.push_back(trajectory.time(n));
    tr.values.row(n) = op.apply(trajectory.states[static_cast<std::size_t>(n)]).transpose();
  }
  return tr;
}

ObservationTrace normal_trace(const Mesh& mesh, const Trajectory& trajectory, TraceSelection selection) {
  return normal_trace(TraceOperator(mesh, selection), trajectory);
}

ComplexGridField dirichlet_mode(const Mesh& mesh, std::array<int, 2> k) {
  const auto& d = mesh.domain();
  ComplexGridField out(static_cast<Eigen::Index>(mesh.interior_count()));
  for (std::size_t i = 0; i < mesh.interior_count(); ++i) {
    const Point x = mesh.interior_position(i);
    double v = 1.0;
    for (int a = 0; a < mesh.dim(); ++a)
      v *= std::sin(k[a] * std::numbers::pi * (x[a] - d.lower[a]) / (d.upper[a] - d.lower[a]));
    out[static_cast<Eigen::Index>(i)] = v;
  }
  return out;
}

double dirichlet_mode_eigenvalue(const Mesh& mesh, std::array<int, 2> k) {
  const auto& d = mesh.domain();
  const auto h = mesh.spacing();
  double mu = 0.0;
  for (int a = 0; a < mesh.dim(); ++a) {
    const double s = std::sin(k[a] * std::numbers::pi * h[a] / (2.0 * (d.upper[a] - d.lower[a])));
    mu += 4.0 * s * s / (h[a] * h[a]);
  }
  return mu;
}

std::vector<std::array<int, 2>> lowest_modes(const Mesh& mesh, std::size_t count) {
  std::vector<std::array<int, 2>> modes;
  const int kmax0 = mesh.cells()[0] - 1;
  if (mesh.dim() == 1) {
    for (int k = 1; k <= kmax0 && modes.size() < count; ++k) modes.push_back({k, 0});
  } else {
    const int kmax1 = mesh.cells()[1] - 1;
    for (int a = 1; a <= kmax0; ++a)
      for (int b = 1; b <= kmax1; ++b) modes.push_back({a, b});
    std::stable_sort(modes.begin(), modes.end(), [&](const auto& p, const auto& q) {
      return dirichlet_mode_eigenvalue(mesh, p) < dirichlet_mode_eigenvalue(mesh, q);
    });
    if (modes.size() > count) modes.resize(count);
  }
  if (modes.size() < count) throw std::invalid_argument("mesh too coarse for the requested mode count");
  return modes;
}

}  // namespace sselab
