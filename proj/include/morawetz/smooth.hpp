#pragma once

// Smooth cutoff families. Everything is built from one C-infinity step,
//   step(x) = e(x) / (e(x) + e(1 - x)),  e(x) = exp(-1/x) for x > 0, else 0,
// which is exactly 0 for x <= 0 and exactly 1 for x >= 1.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

#include "morawetz/jet.hpp"

namespace morawetz {

template <int K>
Jet<K> exp_inverse(const Jet<K>& x) {
  if (x.value() <= 0.0) return Jet<K>(0.0);
  return exp(-1.0 / x);
}

template <int K>
Jet<K> unit_step(const Jet<K>& x) {
  if (x.value() <= 0.0) return Jet<K>(0.0);
  if (x.value() >= 1.0) return Jet<K>(1.0);
  const Jet<K> a = exp_inverse(x);
  const Jet<K> b = exp_inverse(1.0 - x);
  return a / (a + b);
}

inline double unit_step(double x) { return unit_step(Jet<0>(x)).value(); }

// chi_0(sigma): 0 for sigma <= 1, 1 for sigma >= 2.
template <int K>
Jet<K> chi0(const Jet<K>& sigma) { return unit_step(sigma - 1.0); }
inline double chi0(double sigma) { return unit_step(sigma - 1.0); }

// Low-frequency window psi: identically 1 on [1/2, 2], supported in [1/4, 4].
inline double frequency_window(double lambda) {
  return unit_step((lambda - 0.25) / 0.25) * (1.0 - unit_step((lambda - 2.0) / 2.0));
}

// Enlarged window: identically 1 on [1/4, 4] (so on supp psi), supported in [1/8, 8].
inline double enlarged_window(double lambda) {
  return unit_step((lambda - 0.125) / 0.125) * (1.0 - unit_step((lambda - 4.0) / 4.0));
}

namespace detail {

// Integral of unit_step over [0, x], x in [0, 1].
inline double step_integral(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 0.5;
  auto f = [](double t) { return unit_step(t); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, x, 6, 1e-14);
}

// Plateau density of the slow step: 1 on [1, 2], rising on [1/2, 1], falling on [2, 4].
template <int K>
Jet<K> slow_step_density(const Jet<K>& sigma) {
  return unit_step((sigma - 0.5) / 0.5) * (1.0 - unit_step((sigma - 2.0) / 2.0));
}

// Integral of the plateau density: 0.25 (rise) + 1 (plateau) + 1 (fall).
inline constexpr double kSlowStepMass = 2.25;

}  // namespace detail

// Slow step varsigma: 0 for sigma <= 1/2, 1 for sigma >= 4, nondecreasing,
// with varsigma' >= 1/4 on [1, 2] (its derivative there is 1/2.25).
template <int K>
Jet<K> slow_step(const Jet<K>& sigma) {
  const double s = sigma.value();
  double value = 0.0;
  if (s >= 4.0) {
    value = 1.0;
  } else if (s > 2.0) {
    const double y = (s - 2.0) / 2.0;
    value = (1.25 + 2.0 * (y - detail::step_integral(y))) / detail::kSlowStepMass;
  } else if (s >= 1.0) {
    value = (0.25 + (s - 1.0)) / detail::kSlowStepMass;
  } else if (s > 0.5) {
    value = 0.5 * detail::step_integral(2.0 * (s - 0.5)) / detail::kSlowStepMass;
  }
  Jet<K> out(value);
  if constexpr (K >= 1) {
    const Jet<K - 1> density = detail::slow_step_density(truncate<K - 1>(sigma));
    // Chain rule through sigma's own jet: integrate d(varsigma)/dsigma along it.
    const Jet<K - 1> dsigma = differentiate(sigma);
    const Jet<K - 1> dv = density * dsigma * (1.0 / detail::kSlowStepMass);
    for (int k = 1; k <= K; ++k) out.c[k] = dv.c[k - 1] / k;
  }
  return out;
}
inline double slow_step(double sigma) { return slow_step(Jet<0>(sigma)).value(); }

}  // namespace morawetz
