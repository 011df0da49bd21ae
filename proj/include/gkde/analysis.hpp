#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gkde/kde.hpp"
#include "gkde/rng.hpp"
#include "gkde/tensor.hpp"

namespace gkde {

// A density with enough analytic structure to predict KDE error terms: the pdf
// itself, its Laplacian, and an exact sampler.
struct TestDensity {
  std::string name;
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> pdf;
  std::function<double(std::span<const double>)> laplacian;
  std::function<Tensor(std::uint64_t seed, std::size_t count)> sampler;
};

inline TestDensity standard_normal_density(std::size_t dim) {
  require(dim >= 1, "standard_normal_density: dim must be >= 1");
  const double log_norm =
      -0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi);
  auto pdf = [log_norm](std::span<const double> z) {
    double sq = 0.0;
    for (double v : z) sq += v * v;
    return std::exp(log_norm - 0.5 * sq);
  };
  return TestDensity{
      "standard_normal_" + std::to_string(dim) + "d",
      dim,
      pdf,
      // Δ k(z) = (‖z‖² − d) k(z) for the standard normal
      [pdf, dim](std::span<const double> z) {
        double sq = 0.0;
        for (double v : z) sq += v * v;
        return (sq - static_cast<double>(dim)) * pdf(z);
      },
      [dim](std::uint64_t seed, std::size_t count) {
        Rng rng(seed);
        Tensor out(count, dim);
        for (std::size_t i = 0; i < count * dim; ++i) out[i] = rng.normal();
        return out;
      },
  };
}

// Equal-weight mixture of N(−2, 1) and N(+2, 1): a bimodal density whose
// curvature changes sign, so bias predictions are exercised away from zero.
inline TestDensity gaussian_mixture_1d() {
  constexpr double kMean = 2.0;
  auto phi = [](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  };
  return TestDensity{
      "gaussian_mixture_1d",
      1,
      [phi](std::span<const double> z) {
        return 0.5 * (phi(z[0] - kMean) + phi(z[0] + kMean));
      },
      // k'' for each component: ((z−μ)² − 1)·φ(z−μ)
      [phi](std::span<const double> z) {
        const double a = z[0] - kMean;
        const double b = z[0] + kMean;
        return 0.5 * ((a * a - 1.0) * phi(a) + (b * b - 1.0) * phi(b));
      },
      [](std::uint64_t seed, std::size_t count) {
        Rng rng(seed);
        Tensor out(count, 1);
        for (std::size_t i = 0; i < count; ++i) {
          const double mean = rng.uniform01() < 0.5 ? -kMean : kMean;
          out[i] = rng.normal(mean, 1.0);
        }
        return out;
      },
  };
}

// Leading bias term of the KDE with bandwidth matrix h²·I: ½·μ₂(K)·h²·Δk(z).
inline double predicted_bias(const TestDensity& density, std::span<const double> z,
                             double h) {
  require(h > 0.0, "predicted_bias: bandwidth must be > 0");
  require(z.size() == density.dim, "predicted_bias: z has the wrong dimension");
  const KernelConstants kc = gaussian_kernel_constants(density.dim);
  return 0.5 * kc.second_moment * h * h * density.laplacian(z);
}

// Leading variance term: R(K)·k(z) / (n·h^d).
inline double predicted_variance(const TestDensity& density, std::span<const double> z,
                                 double h, std::size_t n) {
  require(h > 0.0, "predicted_variance: bandwidth must be > 0");
  require(n >= 1, "predicted_variance: sample size must be >= 1");
  require(z.size() == density.dim, "predicted_variance: z has the wrong dimension");
  const KernelConstants kc = gaussian_kernel_constants(density.dim);
  return kc.roughness * density.pdf(z) /
         (static_cast<double>(n) * std::pow(h, static_cast<double>(density.dim)));
}

struct BiasVarianceReport {
  std::vector<double> z;
  double h = 0.0;
  std::size_t n = 0;
  std::size_t replications = 0;
  double predicted_bias = 0.0;
  double predicted_variance = 0.0;
  double measured_bias = 0.0;
  double measured_variance = 0.0;
  double se_bias = 0.0;      // standard error of measured_bias
  double se_variance = 0.0;  // normal-theory standard error of measured_variance
  bool regime_ok = true;     // false once h or n·h leaves the asymptotic regime
};

// R independent size-n samples, each turned into a plain KDE (raw draws as
// anchors, no noise) and evaluated at z.  Replication seeds depend only on
// (seed, r), so sweeping h against a fixed seed reuses the same draws — errors
// then correlate across bandwidths and scaling laws show through less noise.
inline BiasVarianceReport monte_carlo_bias_variance(const TestDensity& density,
                                                    std::span<const double> z, double h,
                                                    std::size_t n, std::size_t replications,
                                                    std::uint64_t seed) {
  require(replications >= 100, "monte_carlo_bias_variance: needs at least 100 replications");
  require(n >= 1, "monte_carlo_bias_variance: sample size must be >= 1");
  require(h > 0.0, "monte_carlo_bias_variance: bandwidth must be > 0");
  require(z.size() == density.dim, "monte_carlo_bias_variance: z has the wrong dimension");

  std::vector<double> estimates(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    const Tensor sample = density.sampler(derive_seed(seed, r), n);
    estimates[r] = pdf_density(sample, h, z);
  }

  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= static_cast<double>(replications);

  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= static_cast<double>(replications - 1);

  BiasVarianceReport report;
  report.z.assign(z.begin(), z.end());
  report.h = h;
  report.n = n;
  report.replications = replications;
  report.predicted_bias = predicted_bias(density, z, h);
  report.predicted_variance = predicted_variance(density, z, h, n);
  report.measured_bias = mean - density.pdf(z);
  report.measured_variance = var;
  report.se_bias = std::sqrt(var / static_cast<double>(replications));
  report.se_variance = var * std::sqrt(2.0 / static_cast<double>(replications - 1));
  report.regime_ok = !(h > 1.0 || static_cast<double>(n) * h < 50.0);
  return report;
}

inline void write_bias_variance_csv(const std::string& path,
                                    const std::vector<BiasVarianceReport>& reports) {
  std::ofstream out(path);
  require(out.good(), "write_bias_variance_csv: cannot open " + path);
  out << "z, h, n, predicted_bias, measured_bias, se_bias, predicted_var, "
         "measured_var, regime_ok\n";
  char buf[256];
  for (const auto& r : reports) {
    std::string zcell;
    for (std::size_t i = 0; i < r.z.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6g", r.z[i]);
      if (i) zcell += ';';
      zcell += buf;
    }
    std::snprintf(buf, sizeof buf, ", %.6g, %zu, %.9g, %.9g, %.9g, %.9g, %.9g, %s\n",
                  r.h, r.n, r.predicted_bias, r.measured_bias, r.se_bias,
                  r.predicted_variance, r.measured_variance,
                  r.regime_ok ? "true" : "false");
    out << zcell << buf;
  }
  require(out.good(), "write_bias_variance_csv: write failed for " + path);
}

// Ordinary least-squares slope of y on x; used for the h² and 1/(n·h) scaling
// checks on log-log grids.
inline double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2,
          "least_squares_slope: needs two same-length points at minimum");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  require(den > 0.0, "least_squares_slope: x values are all identical");
  return num / den;
}

}  // namespace gkde
