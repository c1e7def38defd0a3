// Scratch experiment: plane denoising quality vs gamma / iterations.
#include <rglr/rglr.hpp>

#include "support/synthetic.hpp"

#include <cstdio>

using namespace rglr;
using namespace testsupport;

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 3000;
  const double sigma = argc > 2 ? std::atof(argv[2]) : 0.2;
  const PointCloud clean = rescale_to_diagonal(plane_cloud(n, 10.0, 77), 100.0).cloud;
  const PointCloud noisy = add_noise(clean, {NoiseKind::Gaussian, sigma, 5});
  const double c2p0 = c2p(clean, noisy);
  const double c2c0 = c2c(clean, noisy);
  std::printf("n=%d sigma=%.2f  noisy c2c=%.5f c2p=%.5f\n", n, sigma, c2c0, c2p0);
  for (double gamma : {0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.5, 3.0}) {
    for (int outer : {1, 3, 6}) {
      L2Config cfg;
      cfg.gamma = gamma;
      cfg.outer_iters = outer;
      cfg.reweight_iters = 5;
      const auto [out, rep] = denoise_l2(noisy, cfg, {0.0, 6});
      std::printf("gamma=%.2f outer=%d  c2c=%.5f (%.2f) c2p=%.5f (%.2f)\n", gamma,
                  outer, c2c(clean, out), c2c(clean, out) / c2c0, c2p(clean, out),
                  c2p(clean, out) / c2p0);
    }
  }
  return 0;
}
