#pragma once

// Truncated multivariate Taylor polynomials ("jets") in the variables
// (t, x1, x2) up to total degree 4. Arithmetic on jets propagates exact
// partial derivatives up to that order, which is what the pointwise identity
// checks need (the Carleman identity involves fourth derivatives of the
// weight exponent when Psi = -Laplacian(l)).
//
// Coefficient c[a] stores d^a f / a! for the multi-index a.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <type_traits>

namespace sselab {

namespace jet_detail {

inline constexpr int kVars = 3;
inline constexpr int kOrder = 4;
inline constexpr int kSize = 35;  // C(kVars + kOrder, kOrder)

using MultiIndex = std::array<int, kVars>;

struct Tables {
  std::array<MultiIndex, kSize> index{};
  std::array<int, kSize> degree{};
  // Product table: (a, b) -> c with index[a] + index[b] = index[c], deg <= kOrder.
  std::array<std::array<int, kSize>, kSize> product{};
  // Derivative table: d/dx_v of basis c -> (target index, multiplier).
  std::array<std::array<int, kSize>, kVars> deriv_from{};
  std::array<std::array<int, kSize>, kVars> deriv_factor{};
};

constexpr int find(const Tables& t, const MultiIndex& m) {
  for (int k = 0; k < kSize; ++k)
    if (t.index[k][0] == m[0] && t.index[k][1] == m[1] && t.index[k][2] == m[2]) return k;
  return -1;
}

constexpr Tables make_tables() {
  Tables t{};
  int k = 0;
  for (int d = 0; d <= kOrder; ++d)
    for (int a = d; a >= 0; --a)
      for (int b = d - a; b >= 0; --b) {
        t.index[k] = {a, b, d - a - b};
        t.degree[k] = d;
        ++k;
      }
  for (int a = 0; a < kSize; ++a)
    for (int b = 0; b < kSize; ++b) {
      MultiIndex m{t.index[a][0] + t.index[b][0], t.index[a][1] + t.index[b][1],
                   t.index[a][2] + t.index[b][2]};
      t.product[a][b] = (m[0] + m[1] + m[2] <= kOrder) ? find(t, m) : -1;
    }
  // (d/dx_v) sum c_m x^m = sum c_m m_v x^(m - e_v); result coefficient at r
  // comes from source r + e_v with factor (r_v + 1).
  for (int v = 0; v < kVars; ++v)
    for (int r = 0; r < kSize; ++r) {
      MultiIndex src = t.index[r];
      src[v] += 1;
      const int deg = src[0] + src[1] + src[2];
      t.deriv_from[v][r] = deg <= kOrder ? find(t, src) : -1;
      t.deriv_factor[v][r] = src[v];
    }
  return t;
}

inline constexpr Tables kTables = make_tables();

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

}  // namespace jet_detail

template <typename T>
class Jet {
 public:
  static constexpr int kSize = jet_detail::kSize;
  static constexpr int kOrder = jet_detail::kOrder;
  static constexpr int kVars = jet_detail::kVars;

  Jet() { c_.fill(T(0)); }
  Jet(T value) {  // NOLINT(google-explicit-constructor)
    c_.fill(T(0));
    c_[0] = value;
  }
  template <typename U>
    requires(!std::is_same_v<U, T> && std::is_convertible_v<U, T>)
  Jet(const Jet<U>& other) {  // NOLINT(google-explicit-constructor)
    for (int k = 0; k < kSize; ++k) c_[k] = T(other.coeff(k));
  }

  /// Independent variable number v (0 = t, 1 = x1, 2 = x2) at the given value.
  static Jet variable(int v, T value) {
    Jet j(value);
    jet_detail::MultiIndex m{0, 0, 0};
    m[v] = 1;
    j.c_[jet_detail::find(jet_detail::kTables, m)] = T(1);
    return j;
  }

  T value() const { return c_[0]; }
  T coeff(int k) const { return c_[k]; }
  T& coeff(int k) { return c_[k]; }

  /// Partial derivative d^(a0+a1+a2) / dt^a0 dx1^a1 dx2^a2 at the expansion point.
  T derivative(int a0, int a1 = 0, int a2 = 0) const {
    const int k = jet_detail::find(jet_detail::kTables, {a0, a1, a2});
    if (k < 0) return T(0);
    double fact = 1.0;
    for (int a : {a0, a1, a2})
      for (int q = 2; q <= a; ++q) fact *= q;
    return c_[k] * fact;
  }

  /// Jet of the partial derivative with respect to variable v; the top-order
  /// coefficients are unknown and set to zero.
  Jet diff(int v) const {
    Jet r;
    for (int k = 0; k < kSize; ++k) {
      const int src = jet_detail::kTables.deriv_from[v][k];
      if (src >= 0) r.c_[k] = c_[src] * static_cast<double>(jet_detail::kTables.deriv_factor[v][k]);
    }
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k < kSize; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator*=(T s) {
    for (auto& v : c_) v *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) {
    for (auto& v : a.c_) v = -v;
    return a;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    const auto& tab = jet_detail::kTables;
    for (int i = 0; i < kSize; ++i) {
      if (a.c_[i] == T(0)) continue;
      for (int j = 0; j < kSize; ++j) {
        const int k = tab.product[i][j];
        if (k >= 0) r.c_[k] += a.c_[i] * b.c_[j];
      }
    }
    return r;
  }
  friend Jet operator*(Jet a, T s) { return a *= s; }
  friend Jet operator*(T s, Jet a) { return a *= s; }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  template <typename S>
    requires std::is_arithmetic_v<S>
  friend Jet operator*(Jet a, S s) { return a *= T(s); }
  template <typename S>
    requires std::is_arithmetic_v<S>
  friend Jet operator*(S s, Jet a) { return a *= T(s); }
  template <typename S>
    requires std::is_arithmetic_v<S>
  friend Jet operator+(Jet a, S s) { a.c_[0] += T(s); return a; }
  template <typename S>
    requires std::is_arithmetic_v<S>
  friend Jet operator+(S s, Jet a) { a.c_[0] += T(s); return a; }
  template <typename S>
    requires std::is_arithmetic_v<S>
  friend Jet operator-(Jet a, S s) { a.c_[0] -= T(s); return a; }
  template <typename S>
    requires std::is_arithmetic_v<S>
  friend Jet operator-(S s, Jet a) { return Jet(T(s)) - a; }

  /// f(a) from the derivatives f(a0), f'(a0), ..., f''''(a0).
  friend Jet compose(const Jet& a, const std::array<T, kOrder + 1>& derivs) {
    Jet delta = a;
    delta.c_[0] = T(0);
    Jet result(derivs[0]);
    Jet power(T(1));
    double fact = 1.0;
    for (int m = 1; m <= kOrder; ++m) {
      power = power * delta;
      fact *= m;
      result += power * (derivs[m] / fact);
    }
    return result;
  }

  friend Jet reciprocal(const Jet& a) {
    const T x = a.c_[0];
    std::array<T, kOrder + 1> d{};
    T inv = T(1) / x;
    T p = inv;
    double sign_fact = 1.0;
    for (int m = 0; m <= kOrder; ++m) {
      d[m] = p * sign_fact;
      p *= inv;
      sign_fact *= -(m + 1);
    }
    return compose(a, d);
  }

  friend Jet exp(const Jet& a) {
    using std::exp;
    const T e = exp(a.c_[0]);
    return compose(a, {e, e, e, e, e});
  }
  friend Jet sin(const Jet& a) {
    using std::cos;
    using std::sin;
    const T s = sin(a.c_[0]);
    const T c = cos(a.c_[0]);
    return compose(a, {s, c, -s, -c, s});
  }
  friend Jet cos(const Jet& a) {
    using std::cos;
    using std::sin;
    const T s = sin(a.c_[0]);
    const T c = cos(a.c_[0]);
    return compose(a, {c, -s, -c, s, c});
  }

  friend Jet conj(const Jet& a) {
    if constexpr (jet_detail::is_complex<T>::value) {
      Jet r;
      for (int k = 0; k < kSize; ++k) r.c_[k] = std::conj(a.c_[k]);
      return r;
    } else {
      return a;
    }
  }

 private:
  std::array<T, kSize> c_;
};

using RealJet = Jet<double>;
using ComplexJet = Jet<std::complex<double>>;

/// Real part of a complex jet as a real jet.
inline RealJet real_part(const ComplexJet& a) {
  RealJet r;
  for (int k = 0; k < RealJet::kSize; ++k) r.coeff(k) = a.coeff(k).real();
  return r;
}

}  // namespace sselab
