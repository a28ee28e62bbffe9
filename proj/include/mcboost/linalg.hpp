#pragma once

#include <cstddef>
#include <vector>

namespace mcboost {

// Solves A x = b for a symmetric positive definite n x n matrix (row-major,
// full storage) via Cholesky. Returns false if a pivot falls below tiny,
// signaling rank deficiency; A and b are consumed as scratch.
bool cholesky_solve(std::vector<double> A, std::vector<double> b, std::size_t n,
                    std::vector<double>& out, double tiny = 1e-300);

}  // namespace mcboost
