#pragma once

// Independent reference computations used to freeze expected values in tests.
// Everything here is deliberately brute-force and stays off the library's
// implementation paths.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Truncated power series for exp(W).
inline Matrix exp_series(const Matrix& w, int terms) {
  const int n = static_cast<int>(w.rows());
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= terms; ++k) {
    term = (term * w) / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

/// Orthonormal basis W_ij = (e_i e_j^T - e_j e_i^T)/sqrt(2) of the skew
/// matrices, ordered lexicographically by (i, j), i < j.
inline std::vector<Matrix> skew_basis(int n) {
  std::vector<Matrix> basis;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Matrix w = Matrix::Zero(n, n);
      w(i, j) = 1.0 / std::sqrt(2.0);
      w(j, i) = -1.0 / std::sqrt(2.0);
      basis.push_back(w);
    }
  }
  return basis;
}

/// Eigenvalues (ascending) of the quadratic form W -> <(1/2) W^2, S> on the
/// orthonormal skew basis: the brute-force route to principal curvatures.
inline std::vector<double> second_form_spectrum(const Matrix& s) {
  const auto basis = skew_basis(static_cast<int>(s.rows()));
  const int m = static_cast<int>(basis.size());
  Matrix form(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const Matrix sym_prod =
          0.25 * (basis[a] * basis[b] + basis[b] * basis[a]);
      form(a, b) = sym_prod.cwiseProduct(s).sum();
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(form);
  std::vector<double> values(es.eigenvalues().data(),
                             es.eigenvalues().data() + m);
  std::sort(values.begin(), values.end());
  return values;
}

/// argmax over a dense angle grid of a scalar function on [lo, hi].
inline double grid_argmax(const std::function<double(double)>& f, double lo,
                          double hi, int points) {
  double best_x = lo;
  double best = f(lo);
  for (int k = 1; k < points; ++k) {
    const double x = lo + (hi - lo) * k / (points - 1);
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

inline double grid_max(const std::function<double(double)>& f, double lo,
                       double hi, int points) {
  return f(grid_argmax(f, lo, hi, points));
}

inline double grid_min(const std::function<double(double)>& f, double lo,
                       double hi, int points) {
  return -grid_max([&](double x) { return -f(x); }, lo, hi, points);
}

/// Golden-section minimizer for a unimodal function on [lo, hi].
inline double golden_argmin(const std::function<double(double)>& f, double lo,
                            double hi, double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Least-squares slope/intercept/r^2 of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  LineFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
  }
  fit.r_squared = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace oracles
