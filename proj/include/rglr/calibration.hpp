#pragma once

#include "rglr/denoise.hpp"
#include "rglr/metrics.hpp"
#include "rglr/noise_estimation.hpp"

namespace rglr {

struct GammaSweepConfig {
  double gamma_lo = 0.01;
  double gamma_hi = 1.0;
  double gamma_step = 0.01;
  std::vector<double> sigmas = {0.1, 0.2, 0.3, 0.4, 0.5};
  NoiseKind kind = NoiseKind::Gaussian;
  std::uint64_t seed = 1;
  int plane_k = 6;
  L2Config l2;       // used when kind == Gaussian
  ApgConfig l1;      // used when kind == Laplacian
  WeightParams weights;
};

struct GammaFitPoint {
  std::string model;
  double sigma = 0.0;
  double gamma_opt = 0.0;
  double c2p_at_opt = 0.0;
};

struct GammaFitResult {
  GammaModel model;
  std::vector<GammaFitPoint> points;
};

/// Sweeps gamma for each (clean model, sigma) pair: adds noise of the
/// configured kind, denoises with the kind-matched solver, and keeps the
/// gamma minimizing C2P against the clean cloud. The slope of
/// gamma_opt = slope * sigma^2 is then fitted through the origin. Clean
/// inputs are canonicalized to the pipeline diagonal first so sigma means
/// the same thing for every model.
inline GammaFitResult fit_gamma_sweep(
    const std::vector<std::pair<std::string, PointCloud>>& clean_models,
    const GammaSweepConfig& config) {
  if (clean_models.empty()) throw ConfigError("fit_gamma_sweep: empty corpus");
  if (!(config.gamma_step > 0.0)) throw ConfigError("fit_gamma_sweep: bad gamma step");

  GammaFitResult result;
  result.model.kind = config.kind;
  std::uint64_t seed = config.seed;

  const double target_diag = config.kind == NoiseKind::Gaussian
                                 ? config.l2.pipeline.target_diag
                                 : config.l1.pipeline.target_diag;

  for (const auto& [name, raw_clean] : clean_models) {
    const PointCloud clean = rescale_to_diagonal(raw_clean, target_diag).cloud;
    for (double sigma : config.sigmas) {
      const PointCloud noisy = add_noise(clean, {config.kind, sigma, seed++});
      GammaFitPoint best;
      best.model = name;
      best.sigma = sigma;
      best.c2p_at_opt = std::numeric_limits<double>::max();
      for (double gamma = config.gamma_lo; gamma <= config.gamma_hi + 1e-12;
           gamma += config.gamma_step) {
        PointCloud denoised;
        if (config.kind == NoiseKind::Gaussian) {
          L2Config cfg = config.l2;
          cfg.gamma = gamma;
          denoised = denoise_l2(noisy, cfg, config.weights).first;
        } else {
          ApgConfig cfg = config.l1;
          cfg.gamma = gamma;
          denoised = denoise_l1(noisy, cfg, config.weights).first;
        }
        const double err = c2p(clean, denoised, config.plane_k);
        if (err < best.c2p_at_opt) {
          best.c2p_at_opt = err;
          best.gamma_opt = gamma;
        }
      }
      result.points.push_back(best);
    }
  }

  std::vector<double> s2, g;
  for (const auto& pt : result.points) {
    s2.push_back(pt.sigma * pt.sigma);
    g.push_back(pt.gamma_opt);
  }
  result.model.slope = fit_gamma_slope(s2, g);
  return result;
}

/// R^2 of the least-squares line y = a + b x.
inline double linear_fit_r2(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ConfigError("linear_fit_r2: need matched samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) return 0.0;
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = a + b * x[i];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  if (ss_tot < 1e-300) return 1.0;
  return 1.0 - ss_res / ss_tot;
}

}  // namespace rglr
