#pragma once

// Umbrella header for the point-cloud denoising toolkit.

#include "rglr/bipartite.hpp"
#include "rglr/calibration.hpp"
#include "rglr/core.hpp"
#include "rglr/denoise.hpp"
#include "rglr/graph.hpp"
#include "rglr/io.hpp"
#include "rglr/kdtree.hpp"
#include "rglr/metrics.hpp"
#include "rglr/noise_estimation.hpp"
#include "rglr/normals.hpp"
#include "rglr/partition_models.hpp"
#include "rglr/point_cloud.hpp"
#include "rglr/solver_l1.hpp"
#include "rglr/solver_ops.hpp"
