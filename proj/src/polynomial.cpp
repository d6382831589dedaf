#include "stitcher/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace stitcher::poly {

double evaluate(std::span<const double> c, double t) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
  return acc;
}

std::vector<double> derivative(std::span<const double> c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

std::vector<double> multiply(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

std::vector<double> scale(std::span<const double> a, double s) {
  std::vector<double> out(a.begin(), a.end());
  for (double& v : out) v *= s;
  return out;
}

double integrate(std::span<const double> c, double t) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k] / static_cast<double>(k + 1);
  return acc * t;
}

std::vector<double> trimmed(std::span<const double> c, double tol) {
  double largest = 0.0;
  for (double v : c) largest = std::max(largest, std::abs(v));
  std::vector<double> out(c.begin(), c.end());
  while (!out.empty() && std::abs(out.back()) <= tol * largest) out.pop_back();
  return out;
}

namespace {

double polish(std::span<const double> c, std::span<const double> dc, double x) {
  double fx = evaluate(c, x);
  for (int it = 0; it < 30 && fx != 0.0; ++it) {
    const double d = evaluate(dc, x);
    if (d == 0.0 || !std::isfinite(d)) break;
    const double candidate = x - fx / d;
    const double fc = evaluate(c, candidate);
    // Only accept steps that shrink the residual.
    if (!(std::abs(fc) < std::abs(fx))) break;
    x = candidate;
    fx = fc;
  }
  return x;
}

}  // namespace

std::vector<double> real_roots(std::span<const double> c, double imag_tol) {
  std::vector<double> p = trimmed(c);
  std::vector<double> roots;
  // Factor out roots at zero.
  std::size_t zeros = 0;
  while (zeros < p.size() && p[zeros] == 0.0) ++zeros;
  if (zeros == p.size()) return roots;  // identically zero: no isolated roots
  if (zeros > 0) {
    roots.push_back(0.0);
    p.erase(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(zeros));
  }
  const std::size_t degree = p.size() - 1;
  if (degree >= 1) {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    const double lead = p.back();
    for (std::size_t i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    for (std::size_t i = 0; i < degree; ++i) companion(i, degree - 1) = -p[i] / lead;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const std::vector<double> dp = derivative(p);
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
      const std::complex<double> z = solver.eigenvalues()[i];
      if (std::abs(z.imag()) < imag_tol * (1.0 + std::abs(z.real()))) {
        roots.push_back(polish(p, dp, z.real()));
      }
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace stitcher::poly
