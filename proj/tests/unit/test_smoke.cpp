#include <catch2/catch_amalgamated.hpp>

#include <rglr/rglr.hpp>

TEST_CASE("library headers compile and a trivial pipeline runs") {
  rglr::PointCloud cloud;
  rglr::Rng rng(7);
  for (int i = 0; i < 200; ++i)
    cloud.points.emplace_back(rng.uniform(0, 10), rng.uniform(0, 10), 0.0);
  auto graph = rglr::knn_graph(cloud, {});
  REQUIRE(graph.n == 200);
  auto part = rglr::approximate(graph);
  REQUIRE(part.red.size() + part.blue.size() == 200);
}
