// 1D Anderson Hamiltonian -d^2/dx^2 + B'(x) on [0, 1] with Dirichlet ends:
// Riccati shooting against finite differences on the same Brownian path.
#include <cstdio>
#include <cstdlib>

#include "paraspec/anderson1d.hpp"

int main(int argc, char** argv) {
  using namespace paraspec::anderson1d;
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
  const std::size_t steps = 8192, n = 4;

  const auto path = BrownianPath::sample(1.0, steps, seed);
  const auto sh = eigenvalues_by_shooting(path, n, 1e-10);
  const auto fd = fd_diagonalize(path, steps, n);
  std::printf("%3s %16s %16s\n", "k", "shooting", "finite diff");
  for (std::size_t k = 0; k < n; ++k) std::printf("%3zu %16.8f %16.8f\n", k + 1, sh[k], fd[k]);
}
