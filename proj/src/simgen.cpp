#include "mcboost/simgen.hpp"

#include <cmath>
#include <cstdio>

#include "mcboost/common.hpp"
#include "mcboost/rng.hpp"

namespace mcboost {

double signal_value(const SimConfig& config, std::span<const double> x_cont, double x6,
                    double x7) {
  if (x_cont.size() != 5) throw DataError("signal: expected 5 continuous covariates");
  double f1 = 0.0;
  for (std::size_t j = 0; j < 5; ++j) f1 += config.beta[j] * x_cont[j];
  f1 += 0.8 * std::sin(x_cont[0]) - 0.5 * (x_cont[1] * x_cont[1] - 1.0) +
        0.4 * x_cont[0] * x_cont[1];
  const double f2 = -0.7 * x6 + 0.8 * x7 + 0.4 * x6 * x7;
  return f1 + f2;
}

double noise_sd(const SimConfig& config, double x1, double x6, double x7) {
  const double s = config.sigma_base * (1.0 + 0.2 * x1 + 0.3 * x6 + 0.25 * x7);
  return s > 1e-6 ? s : 1e-6;
}

Dataset generate(const SimConfig& config) {
  if (config.n < 1) throw ConfigError("sample size must be at least 1");
  if (!(config.sigma_base > 0.0)) throw ConfigError("sigma_base must be positive");

  const Rng master(config.seed);
  Rng s_cont = master.split(1);
  Rng s_x6 = master.split(2);
  Rng s_x7 = master.split(3);
  Rng s_noise = master.split(4);

  Dataset d;
  d.cont_names = {"x1", "x2", "x3", "x4", "x5"};
  d.cat_names = {"x6", "x7"};
  d.cat_levels = {{0.0, 1.0}, {0.0, 1.0}};
  d.x_cont.resize(config.n * 5);
  d.x_cat.resize(config.n * 2);
  d.y.resize(config.n);
  d.truth.resize(config.n);

  for (std::size_t i = 0; i < config.n; ++i)
    for (std::size_t j = 0; j < 5; ++j) d.x_cont[i * 5 + j] = s_cont.next_normal();
  for (std::size_t i = 0; i < config.n; ++i)
    d.x_cat[i * 2] = s_x6.next_unit() < config.p6 ? 1 : 0;
  for (std::size_t i = 0; i < config.n; ++i)
    d.x_cat[i * 2 + 1] = s_x7.next_unit() < config.p7 ? 1 : 0;

  for (std::size_t i = 0; i < config.n; ++i) {
    const std::span<const double> x(&d.x_cont[i * 5], 5);
    const auto x6 = static_cast<double>(d.x_cat[i * 2]);
    const auto x7 = static_cast<double>(d.x_cat[i * 2 + 1]);
    const double f_star = signal_value(config, x, x6, x7);
    d.truth[i] = f_star;
    d.y[i] = f_star + noise_sd(config, x[0], x6, x7) * s_noise.next_normal();
  }
  return d;
}

double true_conditional_quantile(const SimConfig& config, std::span<const double> x_cont,
                                 double x6, double x7, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("quantile level must lie in (0,1)");
  return signal_value(config, x_cont, x6, x7) +
         noise_sd(config, x_cont[0], x6, x7) * normal_quantile(tau);
}

std::string replicate(const std::function<std::map<std::string, double>(std::uint64_t)>& fn,
                      std::int32_t n_reps, std::uint64_t base_seed) {
  if (n_reps < 1) throw ConfigError("replications must be at least 1");
  std::map<std::string, std::vector<double>> values;
  std::string out = "rep,metric,value\n";
  char buf[64];
  for (std::int32_t r = 0; r < n_reps; ++r) {
    const auto metrics = fn(derive_seed(base_seed, static_cast<std::uint64_t>(r)));
    for (const auto& [name, v] : metrics) {
      values[name].push_back(v);
      std::snprintf(buf, sizeof(buf), "%d,%s,%.17g\n", r, name.c_str(), v);
      out += buf;
    }
  }
  for (const auto& [name, vs] : values) {
    double mean = 0.0;
    for (double v : vs) mean += v;
    mean /= static_cast<double>(vs.size());
    double ss = 0.0;
    for (double v : vs) ss += (v - mean) * (v - mean);
    const double se =
        vs.size() > 1
            ? std::sqrt(ss / static_cast<double>(vs.size() - 1)) /
                  std::sqrt(static_cast<double>(vs.size()))
            : 0.0;
    std::snprintf(buf, sizeof(buf), "mean,%s,%.17g\n", name.c_str(), mean);
    out += buf;
    std::snprintf(buf, sizeof(buf), "se,%s,%.17g\n", name.c_str(), se);
    out += buf;
  }
  return out;
}

}  // namespace mcboost
