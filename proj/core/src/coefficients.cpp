#include "sselab/coefficients.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sselab {

namespace {

double bubble(const Domain& d, const Point& x) {
  double r = 1.0;
  for (int a = 0; a < d.dim; ++a) {
    const double L = d.upper[a] - d.lower[a];
    r *= 4.0 * (x[a] - d.lower[a]) * (d.upper[a] - x[a]) / (L * L);
  }
  return r;
}

double parse_number(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number '" + text + "' in profile '" + context + "'");
  }
  if (used != text.size())
    throw std::invalid_argument("bad number '" + text + "' in profile '" + context + "'");
  return v;
}

}  // namespace

Coefficients Coefficients::without_sources() const {
  Coefficients c = *this;
  c.f = nullptr;
  c.g = nullptr;
  return c;
}

ProfileSpec ProfileSpec::parse(const std::string& text) {
  ProfileSpec p;
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) throw std::invalid_argument("empty profile");
  p.kind = parts[0];
  if (p.kind == "zero") {
    if (parts.size() != 1) throw std::invalid_argument("profile 'zero' takes no parameters");
    return p;
  }
  if (p.kind != "const" && p.kind != "bump")
    throw std::invalid_argument("unknown profile '" + text + "' (expected zero|const|bump)");
  if (parts.size() < 2 || parts.size() > 3)
    throw std::invalid_argument("profile '" + text + "' needs <re>[:<im>]");
  const double re = parse_number(parts[1], text);
  const double im = parts.size() == 3 ? parse_number(parts[2], text) : 0.0;
  p.value = {re, im};
  return p;
}

std::string ProfileSpec::to_string() const {
  if (kind == "zero") return kind;
  std::ostringstream s;
  s.precision(17);
  s << kind << ":" << value.real();
  if (value.imag() != 0.0) s << ":" << value.imag();
  return s.str();
}

cplx ProfileSpec::eval(const Domain& domain, const Point& x) const {
  if (kind == "zero") return {};
  if (kind == "const") return value;
  return value * bubble(domain, x);
}

Coefficients CoefficientSpec::build(const Domain& domain) const {
  Coefficients c;
  if (b1.value.imag() != 0.0) throw std::invalid_argument("b1 must be real (a1 = i b1)");
  if (b1.kind == "const" && !b1.is_zero())
    throw std::invalid_argument("b1 must vanish on the boundary; use zero or bump");
  if (a3.value.imag() != 0.0) throw std::invalid_argument("a3 must be real");
  if (f.kind == "const" && !f.is_zero())
    throw std::invalid_argument("f must vanish on the boundary; use zero or bump");
  if (g_real && g.value.imag() != 0.0)
    throw std::invalid_argument("g_real is set but g has an imaginary part");

  if (!b1.is_zero()) {
    const ProfileSpec p = b1;
    c.b1 = [p, domain](const Point& x) {
      const double v = p.eval(domain, x).real();
      return Point{v, domain.dim == 2 ? v : 0.0};
    };
  }
  if (!a2.is_zero()) {
    const ProfileSpec p = a2;
    c.a2 = [p, domain](const Point& x) { return p.eval(domain, x); };
  }
  if (!a3.is_zero()) {
    const ProfileSpec p = a3;
    c.a3 = [p, domain](const Point& x) { return p.eval(domain, x).real(); };
  }
  if (!f.is_zero()) {
    const ProfileSpec p = f;
    c.f = [p, domain](double, const Point& x) { return p.eval(domain, x); };
  }
  if (!g.is_zero()) {
    const ProfileSpec p = g;
    c.g = [p, domain](double, const Point& x) { return p.eval(domain, x); };
  }
  c.g_real = g_real;
  c.static_sources = true;
  return c;
}

SampledCoefficients::SampledCoefficients(const Mesh& mesh, const Coefficients& coeffs)
    : mesh_(mesh), coeffs_(coeffs) {
  const std::size_t N = mesh.interior_count();
  for (auto& v : b1_) v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  a2_ = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(N));
  a3_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));

  constexpr double kTol = 1e-13;
  for (const auto& b : mesh.boundary()) {
    if (coeffs.b1) {
      const Point v = coeffs.b1(b.position);
      for (int a = 0; a < mesh.dim(); ++a)
        if (std::abs(v[a]) > kTol) throw std::invalid_argument("b1 must vanish on the boundary");
    }
    if (coeffs.f) {
      for (double t : {0.0, 0.5})
        if (std::abs(coeffs.f(t, b.position)) > kTol)
          throw std::invalid_argument("f must vanish on the boundary");
    }
  }

  auto finite = [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); };
  for (std::size_t k = 0; k < N; ++k) {
    const Point x = mesh.interior_position(k);
    const auto i = static_cast<Eigen::Index>(k);
    if (coeffs.b1) {
      const Point v = coeffs.b1(x);
      for (int a = 0; a < mesh.dim(); ++a) b1_[a][i] = v[a];
    }
    if (coeffs.a2) a2_[i] = coeffs.a2(x);
    if (coeffs.a3) a3_[i] = coeffs.a3(x);
    if (!finite(a2_[i]) || !std::isfinite(a3_[i]) || !std::isfinite(b1_[0][i]) ||
        !std::isfinite(b1_[1][i]))
      throw std::invalid_argument("coefficients must be finite");
  }
  has_b1_ = b1_[0].cwiseAbs().maxCoeff() > 0.0 || b1_[1].cwiseAbs().maxCoeff() > 0.0;
  has_a2_ = a2_.cwiseAbs().maxCoeff() > 0.0;
  has_a3_ = a3_.cwiseAbs().maxCoeff() > 0.0;

  if (coeffs.static_sources) {
    Eigen::VectorXcd scratch;
    coeffs_.static_sources = false;
    if (coeffs.f) f_static_ = f(0.0, scratch);
    if (coeffs.g) g_static_ = g(0.0, scratch);
    coeffs_.static_sources = true;
  }

  // r1 from sup norms of each coefficient and its grid gradient over all nodes.
  auto w1inf = [&](auto&& value_at) {
    const auto npa = mesh.nodes_per_axis();
    double sup = 0.0;
    double sup_grad = 0.0;
    for (int j = 0; j < npa[1]; ++j)
      for (int i = 0; i < npa[0]; ++i) {
        const double v = value_at(mesh.position(i, j));
        sup = std::max(sup, std::abs(v));
        if (i + 1 < npa[0])
          sup_grad = std::max(sup_grad, std::abs(value_at(mesh.position(i + 1, j)) - v) / mesh.spacing()[0]);
        if (mesh.dim() == 2 && j + 1 < npa[1])
          sup_grad = std::max(sup_grad, std::abs(value_at(mesh.position(i, j + 1)) - v) / mesh.spacing()[1]);
      }
    return sup + sup_grad;
  };
  double r1 = 1.0;
  if (coeffs.b1) {
    for (int a = 0; a < mesh.dim(); ++a) {
      const double n = w1inf([&](const Point& x) { return coeffs.b1(x)[a]; });
      r1 += n * n;
    }
  }
  if (coeffs.a2) {
    const double nr = w1inf([&](const Point& x) { return coeffs.a2(x).real(); });
    const double ni = w1inf([&](const Point& x) { return coeffs.a2(x).imag(); });
    r1 += nr * nr + ni * ni;
  }
  if (coeffs.a3) {
    const double n = w1inf([&](const Point& x) { return coeffs.a3(x); });
    r1 += n * n;
  }
  r1_ = r1;
}

const Eigen::VectorXcd& SampledCoefficients::f(double t, Eigen::VectorXcd& scratch) const {
  if (coeffs_.static_sources && f_static_.size() > 0) return f_static_;
  const std::size_t N = mesh_.interior_count();
  scratch.resize(static_cast<Eigen::Index>(N));
  if (!coeffs_.f) {
    scratch.setZero();
    return scratch;
  }
  for (std::size_t k = 0; k < N; ++k)
    scratch[static_cast<Eigen::Index>(k)] = coeffs_.f(t, mesh_.interior_position(k));
  return scratch;
}

const Eigen::VectorXcd& SampledCoefficients::g(double t, Eigen::VectorXcd& scratch) const {
  if (coeffs_.static_sources && g_static_.size() > 0) return g_static_;
  const std::size_t N = mesh_.interior_count();
  scratch.resize(static_cast<Eigen::Index>(N));
  if (!coeffs_.g) {
    scratch.setZero();
    return scratch;
  }
  for (std::size_t k = 0; k < N; ++k)
    scratch[static_cast<Eigen::Index>(k)] = coeffs_.g(t, mesh_.interior_position(k));
  return scratch;
}

Eigen::VectorXcd SampledCoefficients::g_all_nodes(double t) const {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mesh_.node_count()));
  if (!coeffs_.g) return out;
  for (std::size_t id = 0; id < mesh_.node_count(); ++id)
    out[static_cast<Eigen::Index>(id)] = coeffs_.g(t, mesh_.position(id));
  return out;
}

}  // namespace sselab
