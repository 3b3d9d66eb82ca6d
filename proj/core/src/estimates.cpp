#include "sselab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace sselab {

namespace {

struct Edge {
  long a, b;      // interior numbers (-1: boundary node)
  std::size_t id_a, id_b;
  int axis;
  Point mid;
};

std::vector<Edge> mesh_edges(const Mesh& mesh) {
  std::vector<Edge> edges;
  const auto npa = mesh.nodes_per_axis();
  for (int j = 0; j < npa[1]; ++j)
    for (int i = 0; i < npa[0]; ++i)
      for (int axis = 0; axis < mesh.dim(); ++axis) {
        const int i2 = axis == 0 ? i + 1 : i;
        const int j2 = axis == 1 ? j + 1 : j;
        if (i2 >= npa[0] || j2 >= npa[1]) continue;
        const Point p = mesh.position(i, j);
        const Point q = mesh.position(i2, j2);
        edges.push_back({mesh.interior_number(i, j), mesh.interior_number(i2, j2), mesh.node_id(i, j),
                         mesh.node_id(i2, j2), axis, {0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])}});
      }
  return edges;
}

/// Trapezoid weight of a node in the closed box (1/2 per boundary axis).
double node_weight(const Mesh& mesh, std::size_t id) {
  const auto ij = mesh.node_index(id);
  double w = 1.0;
  for (int a = 0; a < mesh.dim(); ++a)
    if (ij[a] == 0 || ij[a] == mesh.cells()[a]) w *= 0.5;
  return w;
}

double h1_density(const ForwardModel& model, double t) {
  double d = 0.0;
  const auto& c = model.coefficients();
  if (c.has_f()) {
    Eigen::VectorXcd scratch;
    d += norms(model.mesh(), c.f(t, scratch)).h1_sq;
  }
  if (c.has_g()) d += all_node_h1_sq(model.mesh(), c.g_all_nodes(t));
  return d;
}

}  // namespace

bool noise_free(const ForwardModel& model, const ModulusNonlinearity* nl) {
  const auto& c = model.coefficients();
  return !c.has_a3() && !c.has_g() && !(nl && nl->F2);
}

std::vector<McEstimate> run_paths(const ForwardModel& model, const McOptions& mc, std::size_t dims,
                                  const std::function<std::vector<double>(const BrownianPath&)>& job,
                                  const ModulusNonlinearity* nl) {
  if (noise_free(model, nl)) {
    const auto v = job(BrownianPath(mc.base_seed, 0, model.T(), model.steps()));
    if (v.size() != dims) throw std::logic_error("path job returned wrong arity");
    std::vector<McEstimate> out;
    for (double x : v) out.push_back({x, 0.0});
    return out;
  }
  return mc_expectation(
      [&](std::uint64_t k) { return job(BrownianPath(mc.base_seed, k, model.T(), model.steps())); }, dims,
      mc.paths, mc.threads);
}

double trace_energy(const ForwardModel& model, const ComplexGridField& y0, const BrownianPath& path,
                    const TraceOperator& op, bool homogeneous, const ModulusNonlinearity* nl) {
  const double dt = model.dt();
  const int N = model.steps();
  double e = 0.0;
  simulate_forward(
      model, y0, path,
      [&](int n, double, const ComplexGridField& y) { e += (n == 0 || n == N ? 0.5 * dt : dt) * op.energy(y); }, nl,
      homogeneous);
  return e;
}

McEstimate boundary_trace_energy(const ForwardModel& model, const ComplexGridField& y0, const McOptions& mc,
                                 const TraceOperator& op, bool homogeneous) {
  return run_paths(model, mc, 1, [&](const BrownianPath& path) {
    return std::vector<double>{trace_energy(model, y0, path, op, homogeneous)};
  })[0];
}

double all_node_h1_sq(const Mesh& mesh, const Eigen::VectorXcd& values) {
  if (values.size() != static_cast<Eigen::Index>(mesh.node_count()))
    throw std::invalid_argument("all-node field has the wrong size");
  const double vol = mesh.cell_volume();
  const auto h = mesh.spacing();
  double l2 = 0.0;
  for (std::size_t id = 0; id < mesh.node_count(); ++id)
    l2 += node_weight(mesh, id) * std::norm(values[static_cast<Eigen::Index>(id)]);
  double grad = 0.0;
  for (const Edge& e : mesh_edges(mesh))
    grad += std::norm(values[static_cast<Eigen::Index>(e.id_b)] - values[static_cast<Eigen::Index>(e.id_a)]) /
            (h[e.axis] * h[e.axis]);
  return (l2 + grad) * vol;
}

SourceNorms source_norms(const ForwardModel& model) {
  const auto& c = model.coefficients();
  auto at = [&](double t) {
    SourceNorms d;
    Eigen::VectorXcd scratch;
    if (c.has_f()) d.f_h1_sq = norms(model.mesh(), c.f(t, scratch)).h1_sq;
    if (c.has_g()) d.g_h1_sq = all_node_h1_sq(model.mesh(), c.g_all_nodes(t));
    return d;
  };
  SourceNorms s;
  if (c.coefficients().static_sources) {
    s = at(0.0);
    s.f_h1_sq *= model.T();
    s.g_h1_sq *= model.T();
    return s;
  }
  const auto w = trapezoid_weights(model.dt(), model.steps());
  for (int n = 0; n <= model.steps(); ++n) {
    const SourceNorms d = at(n * model.dt());
    s.f_h1_sq += w[static_cast<std::size_t>(n)] * d.f_h1_sq;
    s.g_h1_sq += w[static_cast<std::size_t>(n)] * d.g_h1_sq;
  }
  return s;
}

std::array<double, 5> carleman_functionals(const ForwardModel& model, const WeightSetup& setup,
                                           const Trajectory& traj, const TraceOperator& op) {
  const Mesh& mesh = model.mesh();
  const int N = traj.steps();
  const double dt = traj.dt;
  if (N < 3) throw std::invalid_argument("weighted functionals need at least three time steps");
  setup.check_cap(dt);
  const double vol = mesh.cell_volume();
  const auto h = mesh.spacing();
  const double ls = std::log(setup.s());
  const double ll = std::log(setup.lambda());
  const auto edges = mesh_edges(mesh);
  const auto& c = model.coefficients();
  std::array<double, 5> out{};
  Eigen::VectorXcd scratch;
  for (int n = 1; n < N; ++n) {
    const double t = n * dt;
    const double wt = (n == 1 || n == N - 1) ? 0.5 * dt : dt;
    const ComplexGridField& y = traj.states[static_cast<std::size_t>(n)];
    double lhs = 0.0, rf = 0.0, gm = 0.0, gg = 0.0, bdy = 0.0;
    const Eigen::VectorXcd* f = c.has_f() ? &c.f(t, scratch) : nullptr;
    for (std::size_t i = 0; i < mesh.interior_count(); ++i) {
      const Point x = mesh.interior_position(i);
      const double ell = setup.ell(t, x);
      const double lphi = setup.log_phi(t, x);
      const auto e = static_cast<Eigen::Index>(i);
      lhs += theta2_times(ell + 0.5 * (3.0 * ls + 4.0 * ll + 3.0 * lphi), std::norm(y[e]));
      if (f) rf += theta2_times(ell, std::norm((*f)[e]));
    }
    auto val = [&](long k) { return k < 0 ? cplx{} : y[k]; };
    for (const Edge& ed : edges) {
      const double ell = setup.ell(t, ed.mid);
      const double lphi = setup.log_phi(t, ed.mid);
      const double g2 = std::norm(val(ed.b) - val(ed.a)) / (h[ed.axis] * h[ed.axis]);
      lhs += theta2_times(ell + 0.5 * (ls + ll + lphi), g2);
    }
    if (c.has_g()) {
      const Eigen::VectorXcd g = c.g_all_nodes(t);
      for (std::size_t id = 0; id < mesh.node_count(); ++id) {
        const Point x = mesh.position(id);
        const double ell = setup.ell(t, x);
        const double lphi = setup.log_phi(t, x);
        gm += node_weight(mesh, id) *
              theta2_times(ell + (ls + ll + lphi), std::norm(g[static_cast<Eigen::Index>(id)]));
      }
      for (const Edge& ed : edges) {
        const double ell = setup.ell(t, ed.mid);
        const double d2 = std::norm(g[static_cast<Eigen::Index>(ed.id_b)] - g[static_cast<Eigen::Index>(ed.id_a)]) /
                          (h[ed.axis] * h[ed.axis]);
        gg += theta2_times(ell, d2);
      }
    }
    const Eigen::VectorXcd tr = op.apply(y);
    for (std::size_t b = 0; b < op.size(); ++b) {
      const Point x = mesh.position(op.node_ids()[b]);
      const double ell = setup.ell(t, x);
      const double lphi = setup.log_phi(t, x);
      bdy += op.surface_weights()[b] *
             theta2_times(ell + 0.5 * (ls + ll + lphi), std::norm(tr[static_cast<Eigen::Index>(b)]));
    }
    out[0] += wt * lhs * vol;
    out[1] += wt * rf * vol;
    out[2] += wt * gm * vol;
    out[3] += wt * gg * vol;
    out[4] += wt * bdy;
  }
  return out;
}

CarlemanSides carleman_sides(const ForwardModel& model, const ComplexGridField& y0, const CarlemanParams& params,
                             const McOptions& mc, TraceSelection selection) {
  const WeightSetup setup(params, model.mesh().domain());
  setup.check_cap(model.dt());
  const TraceOperator op(model.mesh(), selection);
  const auto est = run_paths(model, mc, 5, [&](const BrownianPath& path) {
    const Trajectory traj = simulate_forward(model, y0, path);
    const auto v = carleman_functionals(model, setup, traj, op);
    return std::vector<double>(v.begin(), v.end());
  });
  CarlemanSides s;
  s.s = params.s;
  s.lambda = params.lambda;
  s.lhs = est[0];
  s.rhs_f = est[1];
  s.rhs_g_main = est[2];
  s.rhs_g_grad = est[3];
  s.rhs_bdy = est[4];
  s.g_real = model.coefficients().coefficients().g_real;
  s.rhs_g = s.rhs_g_main;
  if (!s.g_real) {
    s.rhs_g.mean += s.rhs_g_grad.mean;
    s.rhs_g.se = std::hypot(s.rhs_g_main.se, s.rhs_g_grad.se);
  }
  if (s.rhs_bdy.mean > 0.0) s.ratio = s.lhs.mean / s.rhs_bdy.mean;
  return s;
}

QuotientReport make_quotient(double numerator, McEstimate denominator, std::string fingerprint) {
  QuotientReport q;
  q.numerator = numerator;
  q.denominator = denominator.mean;
  q.fingerprint = std::move(fingerprint);
  if (denominator.mean > 0.0) {
    q.quotient = numerator / denominator.mean;
    q.se = q.quotient * denominator.se / denominator.mean;
  } else if (numerator == 0.0) {
    q.trivial = true;
  } else {
    q.ucp_violation = true;
    q.quotient = std::numeric_limits<double>::infinity();
  }
  return q;
}

std::vector<cplx> ensemble_weights(std::size_t modes, std::uint64_t seed, std::size_t member) {
  std::mt19937_64 rng(derive_path_seed(seed, member));
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<cplx> c(modes);
  for (auto& v : c) {
    const double re = normal(rng);
    const double im = normal(rng);
    v = {re, im};
  }
  return c;
}

std::vector<ComplexGridField> initial_ensemble(const Mesh& mesh, std::size_t modes, std::size_t members,
                                               std::uint64_t seed) {
  const auto ks = lowest_modes(mesh, modes);
  std::vector<ComplexGridField> basis;
  for (const auto& k : ks) basis.push_back(dirichlet_mode(mesh, k));
  std::vector<ComplexGridField> out;
  for (std::size_t m = 0; m < members; ++m) {
    const auto c = ensemble_weights(modes, seed, m);
    ComplexGridField y = ComplexGridField::Zero(static_cast<Eigen::Index>(mesh.interior_count()));
    for (std::size_t k = 0; k < modes; ++k) y += c[k] * basis[k];
    out.push_back(std::move(y));
  }
  return out;
}

ObservabilityReport observability_quotient(const ForwardModel& model, const std::vector<ComplexGridField>& ensemble,
                                           const McOptions& mc, TraceSelection selection) {
  const TraceOperator op(model.mesh(), selection);
  const SourceNorms src = source_norms(model);
  const double sources = std::sqrt(src.f_h1_sq) + std::sqrt(src.g_h1_sq);
  ObservabilityReport rep;
  for (const auto& y0 : ensemble) {
    const double num = norms(model.mesh(), y0).h1_sq;
    const McEstimate e = boundary_trace_energy(model, y0, mc, op);
    McEstimate den;
    if (e.mean > 0.0 || sources > 0.0) {
      const double root = std::sqrt(std::max(e.mean, 0.0)) + sources;
      den.mean = root * root;
      den.se = e.mean > 0.0 ? root / std::sqrt(e.mean) * e.se : 0.0;
    }
    rep.members.push_back(make_quotient(num, den, model.mesh().fingerprint()));
    rep.max_quotient = std::max(rep.max_quotient, rep.members.back().quotient);
  }
  return rep;
}

QuotientReport hidden_regularity_quotient(const ForwardModel& model, const ComplexGridField& y0, const McOptions& mc) {
  const TraceOperator op(model.mesh(), TraceSelection::FullBoundary);
  const SourceNorms src = source_norms(model);
  const double den = norms(model.mesh(), y0).h1_sq + src.f_h1_sq + src.g_h1_sq;
  const McEstimate e = boundary_trace_energy(model, y0, mc, op);
  QuotientReport q;
  q.numerator = e.mean;
  q.denominator = den;
  q.fingerprint = model.mesh().fingerprint();
  if (den > 0.0) {
    q.quotient = e.mean / den;
    q.se = e.se / den;
  } else if (e.mean == 0.0) {
    q.trivial = true;
  } else {
    q.quotient = std::numeric_limits<double>::infinity();
  }
  return q;
}

EnergyCheckReport energy_check(const ForwardModel& model, const ComplexGridField& y0, const McOptions& mc,
                               int intervals) {
  if (intervals < 1) throw std::invalid_argument("energy check needs at least one interval");
  const int N = model.steps();
  std::vector<int> nodes;
  for (int i = 0; i <= intervals; ++i) nodes.push_back(static_cast<int>(std::lround(static_cast<double>(i) * N / intervals)));
  // Cumulative source integral on nodes.
  std::vector<double> cum(static_cast<std::size_t>(N + 1), 0.0);
  const bool has_sources = model.coefficients().has_f() || model.coefficients().has_g();
  if (has_sources) {
    const bool fixed = model.coefficients().coefficients().static_sources;
    const double d0 = h1_density(model, 0.0);
    double prev = d0;
    for (int n = 1; n <= N; ++n) {
      const double d = fixed ? d0 : h1_density(model, n * model.dt());
      cum[static_cast<std::size_t>(n)] = cum[static_cast<std::size_t>(n - 1)] + 0.5 * model.dt() * (prev + d);
      prev = d;
    }
  }
  const auto est = run_paths(model, mc, nodes.size(), [&](const BrownianPath& path) {
    std::vector<double> e(nodes.size(), 0.0);
    std::size_t next = 0;
    simulate_forward(model, y0, path, [&](int n, double, const ComplexGridField& y) {
      while (next < nodes.size() && nodes[next] == n) e[next++] = norms(model.mesh(), y).h1_sq;
    });
    return e;
  });
  EnergyCheckReport rep;
  rep.energy = est;
  for (int n : nodes) rep.times.push_back(n * model.dt());
  bool any = false;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      if (a == b) continue;
      const double src = std::abs(cum[static_cast<std::size_t>(nodes[a])] - cum[static_cast<std::size_t>(nodes[b])]);
      const double den = est[b].mean + src;
      if (den <= 0.0) continue;
      any = true;
      const double r = est[a].mean / den;
      if (r > rep.worst_ratio) {
        rep.worst_ratio = r;
        rep.worst_t = rep.times[a];
        rep.worst_s = rep.times[b];
      }
    }
  rep.vacuous = !any;
  return rep;
}

UcpReport ucp_scan(const ForwardModel& model, const std::vector<ComplexGridField>& ensemble, const McOptions& mc,
                   const TraceOperator& observed) {
  UcpReport rep;
  rep.min_energy = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    const double nrm = norms(model.mesh(), ensemble[m]).h1_sq;
    McEstimate e{};
    if (nrm > 0.0) e = boundary_trace_energy(model, ensemble[m] / std::sqrt(nrm), mc, observed, true);
    rep.energy.push_back(e);
    if (e.mean < rep.min_energy) {
      rep.min_energy = e.mean;
      rep.argmin = m;
    }
  }
  if (ensemble.empty()) rep.min_energy = 0.0;
  return rep;
}

}  // namespace sselab
