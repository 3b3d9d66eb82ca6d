#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sselab/geometry.hpp"

namespace sselab {

using cplx = std::complex<double>;

/// Interior node values; boundary nodes carry the Dirichlet zero implicitly.
using ComplexGridField = Eigen::VectorXcd;

/// Coefficients of  i dy + Lap y dt = (a1.grad y + a2 y + f) dt + (a3 y + g) dB
/// with a1 = i b1 (b1 real, vanishing on the boundary), a3 real.
struct Coefficients {
  using VectorProfile = std::function<Point(const Point&)>;
  using ComplexProfile = std::function<cplx(const Point&)>;
  using RealProfile = std::function<double(const Point&)>;
  using Source = std::function<cplx(double, const Point&)>;

  VectorProfile b1;  ///< empty means zero
  ComplexProfile a2;
  RealProfile a3;
  Source f;
  Source g;
  bool g_real = false;
  /// f and g do not depend on t (sampled once per mesh).
  bool static_sources = true;

  bool sources_zero() const { return !f && !g; }
  /// Copy with f = g = 0.
  Coefficients without_sources() const;
};

/// Named coefficient profiles used by configuration files:
///   zero | const:<re>[:<im>] | bump:<re>[:<im>]
/// where bump is c times the product bubble prod_a 4 (x_a - lo_a)(hi_a - x_a) / L_a^2,
/// which vanishes on the boundary.
struct ProfileSpec {
  std::string kind = "zero";
  cplx value{0.0, 0.0};

  static ProfileSpec parse(const std::string& text);
  std::string to_string() const;
  bool is_zero() const { return kind == "zero" || value == cplx{}; }
  cplx eval(const Domain& domain, const Point& x) const;
};

struct CoefficientSpec {
  ProfileSpec b1, a2, a3, f, g;
  bool g_real = false;

  /// Builds callables; validates b1, f vanish on the boundary, a3 real and g
  /// real when g_real is set.
  Coefficients build(const Domain& domain) const;
};

/// Coefficients sampled on a mesh.
class SampledCoefficients {
 public:
  SampledCoefficients(const Mesh& mesh, const Coefficients& coeffs);

  const Mesh& mesh() const { return mesh_; }
  const Coefficients& coefficients() const { return coeffs_; }

  bool has_b1() const { return has_b1_; }
  bool has_a2() const { return has_a2_; }
  bool has_a3() const { return has_a3_; }
  bool has_f() const { return static_cast<bool>(coeffs_.f); }
  bool has_g() const { return static_cast<bool>(coeffs_.g); }

  const Eigen::VectorXd& b1(int axis) const { return b1_[axis]; }
  const Eigen::VectorXcd& a2() const { return a2_; }
  const Eigen::VectorXd& a3() const { return a3_; }

  /// f and g on interior nodes at time t; static sources return the cached
  /// sample, otherwise scratch is filled and returned.
  const Eigen::VectorXcd& f(double t, Eigen::VectorXcd& scratch) const;
  const Eigen::VectorXcd& g(double t, Eigen::VectorXcd& scratch) const;
  /// g at every mesh node (g need not vanish on the boundary).
  Eigen::VectorXcd g_all_nodes(double t) const;

  /// r1 = |a1|^2_{W1inf} + |a2|^2_{W1inf} + |a3|^2_{W1inf} + 1 by grid sampling.
  double r1() const { return r1_; }

 private:
  Mesh mesh_;
  Coefficients coeffs_;
  bool has_b1_ = false, has_a2_ = false, has_a3_ = false;
  std::array<Eigen::VectorXd, 2> b1_;
  Eigen::VectorXcd a2_;
  Eigen::VectorXd a3_;
  Eigen::VectorXcd f_static_, g_static_;
  double r1_ = 1.0;
};

}  // namespace sselab
