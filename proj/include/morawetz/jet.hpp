#pragma once

// Truncated Taylor arithmetic. A Jet<K> holds the normalized Taylor
// coefficients c_k = f^(k)(x0) / k! for k = 0..K, so products are Cauchy
// products and the elementary functions follow the usual recurrences.

#include <array>
#include <cmath>
#include <cstddef>

namespace morawetz {

template <int K>
struct Jet {
  static_assert(K >= 0);
  std::array<double, K + 1> c{};

  constexpr Jet() = default;
  constexpr Jet(double v) { c[0] = v; }  // NOLINT: constants promote implicitly

  static constexpr Jet variable(double x0) {
    Jet j(x0);
    if constexpr (K >= 1) j.c[1] = 1.0;
    return j;
  }

  constexpr double value() const { return c[0]; }

  // k-th derivative at the expansion point.
  constexpr double derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c[static_cast<std::size_t>(k)] * f;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k <= K; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k <= K; ++k) c[k] -= o.c[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
};

template <int K>
Jet<K> operator+(Jet<K> a, const Jet<K>& b) { return a += b; }
template <int K>
Jet<K> operator-(Jet<K> a, const Jet<K>& b) { return a -= b; }
template <int K>
Jet<K> operator-(Jet<K> a) { return a *= -1.0; }
template <int K>
Jet<K> operator+(Jet<K> a, double b) { a.c[0] += b; return a; }
template <int K>
Jet<K> operator+(double b, Jet<K> a) { a.c[0] += b; return a; }
template <int K>
Jet<K> operator-(Jet<K> a, double b) { a.c[0] -= b; return a; }
template <int K>
Jet<K> operator-(double b, const Jet<K>& a) { return Jet<K>(b) - a; }
template <int K>
Jet<K> operator*(Jet<K> a, double s) { return a *= s; }
template <int K>
Jet<K> operator*(double s, Jet<K> a) { return a *= s; }

template <int K>
Jet<K> operator*(const Jet<K>& a, const Jet<K>& b) {
  Jet<K> r;
  for (int k = 0; k <= K; ++k) {
    double s = 0.0;
    for (int j = 0; j <= k; ++j) s += a.c[j] * b.c[k - j];
    r.c[k] = s;
  }
  return r;
}

template <int K>
Jet<K> operator/(const Jet<K>& a, const Jet<K>& b) {
  Jet<K> r;
  for (int k = 0; k <= K; ++k) {
    double s = a.c[k];
    for (int j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}
template <int K>
Jet<K> operator/(const Jet<K>& a, double s) { return a * (1.0 / s); }
template <int K>
Jet<K> operator/(double s, const Jet<K>& b) { return Jet<K>(s) / b; }

template <int K>
Jet<K> exp(const Jet<K>& a) {
  Jet<K> r;
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= K; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * r.c[k - j];
    r.c[k] = s / k;
  }
  return r;
}

template <int K>
Jet<K> log(const Jet<K>& a) {
  Jet<K> r;
  r.c[0] = std::log(a.c[0]);
  for (int k = 1; k <= K; ++k) {
    double s = a.c[k];
    for (int j = 1; j < k; ++j) s -= (static_cast<double>(j) / k) * r.c[j] * a.c[k - j];
    r.c[k] = s / a.c[0];
  }
  return r;
}

// a^p for a.value() > 0.
template <int K>
Jet<K> pow(const Jet<K>& a, double p) {
  Jet<K> r;
  r.c[0] = std::pow(a.c[0], p);
  for (int k = 1; k <= K; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += ((p + 1.0) * j - k) * a.c[j] * r.c[k - j];
    r.c[k] = s / (k * a.c[0]);
  }
  return r;
}

template <int K>
Jet<K> sqrt(const Jet<K>& a) { return pow(a, 0.5); }

// d/dx, dropping the top coefficient.
template <int K>
Jet<K - 1> differentiate(const Jet<K>& a) {
  static_assert(K >= 1);
  Jet<K - 1> r;
  for (int k = 0; k < K; ++k) r.c[k] = (k + 1) * a.c[k + 1];
  return r;
}

template <int M, int K>
Jet<M> truncate(const Jet<K>& a) {
  static_assert(M <= K);
  Jet<M> r;
  for (int k = 0; k <= M; ++k) r.c[k] = a.c[k];
  return r;
}

}  // namespace morawetz
