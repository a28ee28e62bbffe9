#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>

#include "mcboost/dataset.hpp"

namespace mcboost {

// Heteroskedastic regression benchmark: five standard-normal covariates, two
// Bernoulli group bits, a nonlinear signal with a sin/curvature/interaction
// term, and noise whose scale depends on x1, x6, x7. The truth column of the
// generated dataset carries f*.
struct SimConfig {
  std::size_t n = 1000;
  double sigma_base = 0.5;
  std::uint64_t seed = 0;
  std::array<double, 5> beta{1.2, 0.9, 0.6, 0.4, 0.2};
  double p6 = 0.5;  // P(x6 = 1)
  double p7 = 0.5;  // P(x7 = 1)
};

Dataset generate(const SimConfig& config);

// Signal and noise scale at one covariate point.
double signal_value(const SimConfig& config, std::span<const double> x_cont, double x6,
                    double x7);
double noise_sd(const SimConfig& config, double x1, double x6, double x7);

// f*(x) + sigma(x) * Phi^{-1}(tau) under the Gaussian noise model.
double true_conditional_quantile(const SimConfig& config, std::span<const double> x_cont,
                                 double x6, double x7, double tau);

// Runs fn once per replication with a derived seed and emits a tidy CSV of
// per-replication metric values plus mean and standard-error rows.
std::string replicate(const std::function<std::map<std::string, double>(std::uint64_t)>& fn,
                      std::int32_t n_reps, std::uint64_t base_seed);

}  // namespace mcboost
