#include "sselab/inverse.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sselab {

NonlinearityProfile NonlinearityProfile::parse(const std::string& text) {
  NonlinearityProfile p;
  const auto colon = text.find(':');
  p.kind = text.substr(0, colon);
  if (p.kind == "zero") {
    if (colon != std::string::npos) throw std::invalid_argument("nonlinearity 'zero' takes no parameter");
    return p;
  }
  if (p.kind != "linear" && p.kind != "sat")
    throw std::invalid_argument("unknown nonlinearity '" + text + "' (expected zero|linear:c|sat:c)");
  if (colon == std::string::npos) throw std::invalid_argument("nonlinearity '" + text + "' needs a constant");
  const std::string num = text.substr(colon + 1);
  std::size_t used = 0;
  try {
    p.c = std::stod(num, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != num.size() || !std::isfinite(p.c))
    throw std::invalid_argument("bad constant in nonlinearity '" + text + "'");
  return p;
}

std::string NonlinearityProfile::to_string() const {
  if (kind == "zero") return kind;
  std::ostringstream s;
  s.precision(17);
  s << kind << ':' << c;
  return s.str();
}

double NonlinearityProfile::eval(double r) const {
  if (kind == "linear") return c * r;
  if (kind == "sat") return c * r / (1.0 + r);
  return 0.0;
}

ModulusNonlinearity NonlinearityPair::modulus() const {
  ModulusNonlinearity m;
  if (!F1.is_zero()) m.F1 = [p = F1](double r) { return cplx{p.eval(r), 0.0}; };
  if (!F2.is_zero()) m.F2 = [p = F2](double r) { return p.eval(r); };
  return m;
}

double NonlinearityPair::lipschitz_spot_check(std::size_t samples, std::uint64_t seed) const {
  std::mt19937_64 rng(derive_path_seed(seed, 0));
  std::exponential_distribution<double> dist(0.5);
  double worst = 0.0;
  for (const auto* p : {&F1, &F2}) {
    if (p->is_zero()) continue;
    for (std::size_t k = 0; k < samples; ++k) {
      const double a = dist(rng);
      const double b = dist(rng);
      if (a == b) continue;
      worst = std::max(worst, std::abs(p->eval(a) - p->eval(b)) / (p->lipschitz() * std::abs(a - b)));
    }
  }
  return worst;
}

Trajectory solve_semilinear(const ForwardModel& model, const NonlinearityPair& nl, const ComplexGridField& z0,
                            const BrownianPath& path) {
  if (nl.is_zero()) return simulate_forward(model, z0, path);
  const ModulusNonlinearity m = nl.modulus();
  return simulate_forward(model, z0, path, &m);
}

ObservationTrace observation_map(const ForwardModel& model, const NonlinearityPair& nl, const ComplexGridField& z0,
                                 const BrownianPath& path, const TraceOperator& op) {
  return normal_trace(op, solve_semilinear(model, nl, z0, path));
}

std::vector<StabilityPair> stability_pairs(const Mesh& mesh, std::size_t modes, std::size_t count,
                                           std::uint64_t seed) {
  const auto base = initial_ensemble(mesh, modes, count, seed);
  const auto ks = lowest_modes(mesh, modes);
  std::vector<StabilityPair> pairs;
  for (std::size_t p = 0; p < count; ++p) {
    const cplx w = ensemble_weights(1, seed ^ 0x5bd1e995ULL, p)[0];
    const auto k = ks[p % ks.size()];
    pairs.push_back({base[p], base[p] + w * dirichlet_mode(mesh, k)});
  }
  return pairs;
}

double trace_difference_energy(const ForwardModel& model, const NonlinearityPair& nl, const ComplexGridField& z0,
                               const ComplexGridField& z0_hat, const BrownianPath& path, const TraceOperator& op) {
  const ModulusNonlinearity m = nl.modulus();
  const ModulusNonlinearity* pm = nl.is_zero() ? nullptr : &m;
  std::vector<Eigen::VectorXcd> first;
  first.reserve(static_cast<std::size_t>(model.steps() + 1));
  simulate_forward(model, z0, path, [&](int, double, const ComplexGridField& y) { first.push_back(op.apply(y)); }, pm);
  const double dt = model.dt();
  const int N = model.steps();
  double e = 0.0;
  simulate_forward(
      model, z0_hat, path,
      [&](int n, double, const ComplexGridField& y) {
        const Eigen::VectorXcd d = first[static_cast<std::size_t>(n)] - op.apply(y);
        double row = 0.0;
        for (std::size_t b = 0; b < op.size(); ++b)
          row += op.surface_weights()[b] * std::norm(d[static_cast<Eigen::Index>(b)]);
        e += (n == 0 || n == N ? 0.5 * dt : dt) * row;
      },
      pm);
  return e;
}

StabilityReport stability_scan(const ForwardModel& model, const NonlinearityPair& nl,
                               const std::vector<StabilityPair>& pairs, const McOptions& mc,
                               TraceSelection selection) {
  const TraceOperator op(model.mesh(), selection);
  StabilityReport rep;
  rep.linear_reduction = nl.is_zero();
  const ModulusNonlinearity m = nl.modulus();
  for (const auto& pr : pairs) {
    StabilityLine line;
    const ComplexGridField diff = pr.z0 - pr.z0_hat;
    line.num_sq = norms(model.mesh(), diff).l2_sq;
    if (rep.linear_reduction) {
      line.den_sq = boundary_trace_energy(model, diff, mc, op, true);
    } else {
      line.den_sq = run_paths(
          model, mc, 1,
          [&](const BrownianPath& path) {
            return std::vector<double>{trace_difference_energy(model, nl, pr.z0, pr.z0_hat, path, op)};
          },
          &m)[0];
    }
    if (line.den_sq.mean > 0.0) {
      line.ratio = std::sqrt(line.num_sq / line.den_sq.mean);
    } else if (line.num_sq == 0.0) {
      line.trivial = true;
    } else {
      line.ratio = std::numeric_limits<double>::infinity();
    }
    rep.max_ratio = std::max(rep.max_ratio, line.ratio);
    rep.lines.push_back(line);
  }
  return rep;
}

ObservationRecord record_observation(const ForwardModel& model, const NonlinearityPair& nl, const ComplexGridField& z0,
                                     const BrownianPath& path, const TraceOperator& op, bool store_path) {
  ObservationRecord r;
  r.base_seed = path.base_seed();
  r.path_index = path.index();
  r.trace = observation_map(model, nl, z0, path, op);
  if (store_path) r.path = path;
  return r;
}

TraceMap::TraceMap(const ForwardModel& model, BrownianPath path, const TraceOperator& op)
    : model_(model), path_(std::move(path)), op_(op) {
  if (path_.steps() != model.steps()) throw std::invalid_argument("stored path does not match the time grid");
}

ObservationTrace TraceMap::zero_trace() const {
  ObservationTrace tr;
  const int N = model_.steps();
  tr.node_ids.assign(op_.node_ids().begin(), op_.node_ids().end());
  tr.surface_weights.assign(op_.surface_weights().begin(), op_.surface_weights().end());
  tr.time_weights = trapezoid_weights(model_.dt(), N);
  for (int n = 0; n <= N; ++n) tr.times.push_back(n * model_.dt());
  tr.values = Eigen::MatrixXcd::Zero(N + 1, static_cast<Eigen::Index>(op_.size()));
  return tr;
}

ObservationTrace TraceMap::apply(const ComplexGridField& u) const {
  ObservationTrace tr = zero_trace();
  simulate_forward(
      model_, u, path_, [&](int n, double, const ComplexGridField& y) { tr.values.row(n) = op_.apply(y).transpose(); },
      nullptr, true);
  return tr;
}

ObservationTrace TraceMap::offset() const {
  ObservationTrace tr = zero_trace();
  if (model_.linear_homogeneous()) return tr;
  const ComplexGridField zero = ComplexGridField::Zero(static_cast<Eigen::Index>(model_.size()));
  simulate_forward(model_, zero, path_,
                   [&](int n, double, const ComplexGridField& y) { tr.values.row(n) = op_.apply(y).transpose(); });
  return tr;
}

ComplexGridField TraceMap::adjoint(const ObservationTrace& w) const {
  const int N = model_.steps();
  const auto B = op_.size();
  std::vector<double> scale(B);
  auto add_source = [&](int n, ComplexGridField& lam) {
    for (std::size_t b = 0; b < B; ++b) scale[b] = w.time_weights[static_cast<std::size_t>(n)] * w.surface_weights[b];
    op_.apply_adjoint_add(w.values.row(n).transpose(), scale, lam);
  };
  ComplexGridField lam = ComplexGridField::Zero(static_cast<Eigen::Index>(model_.size()));
  add_source(N, lam);
  ComplexGridField prev;
  for (int n = N - 1; n >= 0; --n) {
    model_.step_adjoint(n, lam, path_.increment(n), prev);
    lam.swap(prev);
    add_source(n, lam);
  }
  return lam / model_.mesh().cell_volume();
}

cplx TraceMap::l2_inner(const ComplexGridField& a, const ComplexGridField& b) const {
  return model_.mesh().cell_volume() * b.dot(a);  // dot conjugates its left operand
}

TikhonovObjective::TikhonovObjective(const TraceMap& map, ObservationTrace data, double alpha)
    : map_(map), data_(std::move(data)), alpha_(alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("Tikhonov weight must be positive");
  data_.values -= map_.offset().values;
}

ObjectiveValue TikhonovObjective::value(const ComplexGridField& z) const {
  ObservationTrace r = map_.apply(z);
  r.values -= data_.values;
  ObjectiveValue v;
  v.misfit = 0.5 * r.energy();
  v.penalty = 0.5 * alpha_ * map_.l2_inner(z, z).real();
  v.J = v.misfit + v.penalty;
  return v;
}

ComplexGridField TikhonovObjective::gradient(const ComplexGridField& z) const {
  ObservationTrace r = map_.apply(z);
  r.values -= data_.values;
  return map_.adjoint(r) + alpha_ * z;
}

ReconstructionResult reconstruct(const ForwardModel& model, const TraceOperator& op, const ObservationRecord& record,
                                 const ReconstructionOptions& options) {
  if (!record.path) throw std::invalid_argument("reconstruction needs the stored Brownian path");
  if (options.max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  const TraceMap map(model, *record.path, op);
  const TikhonovObjective obj(map, record.trace, options.alpha);
  const auto Nf = static_cast<Eigen::Index>(model.size());
  const double alpha = options.alpha;
  auto inner = [&](const ComplexGridField& a, const ComplexGridField& b) { return map.l2_inner(a, b).real(); };

  ReconstructionResult res;
  ComplexGridField z = ComplexGridField::Zero(Nf);
  ObservationTrace Az = map.zero_trace();
  ComplexGridField r = map.adjoint(obj.shifted_data());  // -gradient at z = 0
  ComplexGridField p = r;
  double rr = inner(r, r);
  const double r0 = std::sqrt(rr);
  auto record_row = [&](int it) {
    ObjectiveValue v;
    const Eigen::MatrixXcd diff = Az.values - obj.shifted_data().values;
    ObservationTrace tmp = Az;
    tmp.values = diff;
    v.misfit = 0.5 * tmp.energy();
    v.penalty = 0.5 * alpha * inner(z, z);
    v.J = v.misfit + v.penalty;
    res.history.push_back({it, v.J, v.misfit, v.penalty, std::sqrt(rr)});
    return v;
  };
  ObjectiveValue best = record_row(0);
  ComplexGridField best_z = z;
  if (r0 == 0.0) {
    res.converged = true;
  } else {
    for (int it = 1; it <= options.max_iter; ++it) {
      const ObservationTrace Ap = map.apply(p);
      const ComplexGridField Np = map.adjoint(Ap) + alpha * p;
      const double pNp = inner(p, Np);
      if (!(pNp > 0.0)) break;
      const double step = rr / pNp;
      z += step * p;
      Az.values += step * Ap.values;
      r -= step * Np;
      const double rr_new = inner(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      p = r + beta * p;
      const ObjectiveValue v = record_row(it);
      if (v.J <= best.J) {
        best = v;
        best_z = z;
      }
      if (std::sqrt(rr) < options.rel_tol * r0) {
        res.converged = true;
        break;
      }
    }
  }
  res.z0 = best_z;
  res.final_value = best;
  return res;
}

}  // namespace sselab
