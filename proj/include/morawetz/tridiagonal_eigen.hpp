#pragma once

// Symmetric tridiagonal eigenproblems through LAPACK's MRRR driver (dstevr).

#include <Eigen/Dense>
#include <lapacke.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace morawetz {

struct TridiagonalEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns (empty when values_only)
};

enum class EigenRange { all, value_window, index_window };

struct EigenRequest {
  EigenRange range = EigenRange::all;
  double lower = 0.0, upper = 0.0;  // value window (lower, upper]
  int first = 1, last = 1;          // 1-based index window
  bool values_only = false;
};

inline TridiagonalEigen tridiagonal_eigen(const Eigen::VectorXd& diag, const Eigen::VectorXd& off,
                                          const EigenRequest& req = {});

namespace detail {

// Value windows with vectors are converted to index windows so the output
// matrix is allocated for exactly the eigenpairs found.
inline TridiagonalEigen tridiagonal_eigen_window(const Eigen::VectorXd& diag,
                                                 const Eigen::VectorXd& off,
                                                 const EigenRequest& req) {
  EigenRequest all;
  all.values_only = true;
  const TridiagonalEigen spectrum = tridiagonal_eigen(diag, off, all);
  int first = 0, last = -1;
  for (int k = 0; k < spectrum.values.size(); ++k) {
    const double v = spectrum.values[k];
    if (v <= req.lower) first = k + 1;
    if (v <= req.upper) last = k;
  }
  TridiagonalEigen out;
  if (last < first) {
    out.values.resize(0);
    out.vectors.resize(diag.size(), 0);
    return out;
  }
  EigenRequest idx;
  idx.range = EigenRange::index_window;
  idx.first = first + 1;
  idx.last = last + 1;
  return tridiagonal_eigen(diag, off, idx);
}

}  // namespace detail

inline TridiagonalEigen tridiagonal_eigen(const Eigen::VectorXd& diag, const Eigen::VectorXd& off,
                                          const EigenRequest& req) {
  if (req.range == EigenRange::value_window && !req.values_only)
    return detail::tridiagonal_eigen_window(diag, off, req);
  const lapack_int n = static_cast<lapack_int>(diag.size());
  if (off.size() != n - 1) throw std::invalid_argument("tridiagonal_eigen: size mismatch");
  std::vector<double> d(diag.data(), diag.data() + n);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (lapack_int i = 0; i + 1 < n; ++i) e[static_cast<std::size_t>(i)] = off[i];

  char range = 'A';
  if (req.range == EigenRange::value_window) range = 'V';
  if (req.range == EigenRange::index_window) range = 'I';
  const char jobz = req.values_only ? 'N' : 'V';

  lapack_int max_count = n;
  if (req.range == EigenRange::index_window) max_count = req.last - req.first + 1;
  std::vector<double> w(static_cast<std::size_t>(n));
  Eigen::MatrixXd z;
  if (!req.values_only) z.resize(n, max_count > 0 ? max_count : 1);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n) + 2);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dstevr(
      LAPACK_COL_MAJOR, jobz, range, n, d.data(), e.data(), req.lower, req.upper, req.first, req.last,
      0.0, &found, w.data(), req.values_only ? nullptr : z.data(), req.values_only ? 1 : n,
      isuppz.data());
  if (info != 0) throw std::runtime_error("dstevr failed with info = " + std::to_string(info));

  TridiagonalEigen out;
  out.values = Eigen::Map<Eigen::VectorXd>(w.data(), found);
  if (!req.values_only) out.vectors = z.leftCols(found);
  return out;
}

}  // namespace morawetz
