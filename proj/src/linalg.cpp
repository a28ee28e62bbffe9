#include "mcboost/linalg.hpp"

#include <cmath>

namespace mcboost {

bool cholesky_solve(std::vector<double> A, std::vector<double> b, std::size_t n,
                    std::vector<double>& out, double tiny) {
  // In-place lower Cholesky: A = L L^T.
  for (std::size_t j = 0; j < n; ++j) {
    double d = A[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= A[j * n + k] * A[j * n + k];
    if (!(d > tiny)) return false;
    const double ljj = std::sqrt(d);
    A[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = A[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= A[i * n + k] * A[j * n + k];
      A[i * n + j] = v / ljj;
    }
  }
  // Forward then backward substitution.
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= A[i * n + k] * b[k];
    b[i] = v / A[i * n + i];
  }
  out.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= A[k * n + ii] * out[k];
    out[ii] = v / A[ii * n + ii];
  }
  return true;
}

}  // namespace mcboost
