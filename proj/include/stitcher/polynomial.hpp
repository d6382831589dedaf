#pragma once

#include <span>
#include <vector>

namespace stitcher::poly {

// Coefficients are stored in ascending powers: c[0] + c[1] t + c[2] t^2 + ...

double evaluate(std::span<const double> c, double t);
std::vector<double> derivative(std::span<const double> c);
std::vector<double> multiply(std::span<const double> a, std::span<const double> b);
std::vector<double> add(std::span<const double> a, std::span<const double> b);
std::vector<double> scale(std::span<const double> a, double s);
/// Exact integral over [0, t].
double integrate(std::span<const double> c, double t);

/// Drops trailing coefficients whose magnitude is below `tol` times the largest.
std::vector<double> trimmed(std::span<const double> c, double tol = 0.0);

/// Real roots from the eigenvalues of the companion matrix, each polished by
/// safeguarded Newton steps. An eigenvalue is accepted as real when
/// |imag| < imag_tol * (1 + |real|). Returned sorted ascending.
std::vector<double> real_roots(std::span<const double> c, double imag_tol = 1e-8);

}  // namespace stitcher::poly
