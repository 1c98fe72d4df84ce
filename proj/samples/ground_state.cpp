// Lowest eigenvalues of the renormalised operator for one noise sample as the
// mollifier is removed. Usage: sample_ground_state [seed] [N]
#include <cstdio>
#include <cstdlib>

#include "paraspec/noise.hpp"
#include "paraspec/spectrum.hpp"

int main(int argc, char** argv) {
  using namespace paraspec;
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  const int N = argc > 2 ? std::atoi(argv[2]) : 64;

  const TorusGrid grid(2, 1.0, N);
  const auto noise = sample_white_noise(grid, seed);
  std::printf("%10s %12s %14s %14s\n", "epsilon", "c_eps", "Lambda_1", "Lambda_2");
  for (double eps = 0.25; eps * N >= 4.0; eps /= 2) {
    MollifierSpec m;
    m.epsilon = eps;
    if (resolution_warning(grid, m)) break;
    const auto e = enhance(noise, m);
    // H = -Laplacian + xi_eps + c_eps
    const auto sr = lowest_eigenpairs(HamiltonianOp(e), 2, 1e-8);
    std::printf("%10.5f %12.6f %14.8f %14.8f\n", eps, e.c_eps, sr.eigenvalues[0], sr.eigenvalues[1]);
  }
}
