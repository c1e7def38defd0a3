#include <rglr/rglr.hpp>

#include <cstdio>

int main() {
  std::printf("rglr %s\n", rglr::version());
  return 0;
}
