#pragma once

namespace rglr {

struct PipelineOptions {
  double target_diag = 100.0;   // canonical bounding-box diagonal
  bool rescale = true;          // run at canonical scale, map back afterwards
  double kld_delta = 1e-2;
  int bipartite_start = 0;
  double min_dist_factor = 0.5;      // anchor filter vs mean cross-edge length
  double displacement_tol = 1e-6;    // x diagonal, outer-loop stop
};

}  // namespace rglr
