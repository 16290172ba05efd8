// Energy of the radius network on the unit disk under a uniform load,
// compared with the bare membrane.

#include <cstdio>

#include "memnet/memnet.hpp"

int main() {
  using namespace memnet;
  const TriangleMesh mesh = generate_disk_mesh(1.0, 6);
  const Evaluator ev(mesh, ConstantLoad{1.0}, SolveConfig{});
  Evaluator::Workspace ws;
  std::printf("triangles      %zu\n", mesh.num_triangles());
  std::printf("bare membrane  %.6f\n", ev.empty_energy(ws));
  std::printf("radius, L = 1  %.6f\n", ev.evaluate(radius_network(), ws).energy);

  // The same network through the optimizer's parametrization.
  NetworkParams p{{{0.0, 0.0}, {0.5, 0.0}}, {1.0}, 1.0};
  std::printf("projected      %.6f\n", ev.evaluate(p, 1.0, ws).energy);
}
