#pragma once

#include "paraspec/hamiltonian.hpp"
#include "paraspec/noise.hpp"
#include "paraspec/paracalc.hpp"

namespace paraspec {

struct SobolevTriple {
  double h_gamma = 0.0;
  double h_2gamma = 0.0;
  double h2 = 0.0;
};

inline SobolevTriple sobolev_triple(const Field& f, double gamma) {
  return {sobolev_norm(f, gamma), sobolev_norm(f, 2.0 * gamma), sobolev_norm(f, 2.0)};
}

/**
 * f = f < u + f_sharp = f < u + B(f, Xi) + f_flat with u = sigma(D) xi_eps.
 * Norms are H^gamma, H^{2 gamma} and H^2 estimates by direct lattice sums.
 */
struct ParacontrolledDecomposition {
  Field f;
  Field u;          ///< sigma(D) xi_eps
  Field f_less_u;   ///< f < u
  Field f_sharp;
  Field b;          ///< B(f, Xi)
  Field f_flat;
  double gamma = 0.9;
  SobolevTriple norms_f, norms_sharp, norms_flat;
  std::uint64_t seed = 0;  ///< seed of the enhancement it was built from
  double c_eps = 0.0;
};

/**
 * B(f, Xi) = -sigma(D)[ 2 grad f < grad u + ((1 + Laplacian) f) < u - f > xi - f Xi_2 ].
 *
 * With this choice, for every f on the grid
 *   f_sharp - B(f, Xi) = -sigma(D)[ H f + f_sharp - R(f, u, xi) - f_sharp o xi ],
 * which follows from the Leibniz rule for -Laplacian(f < u), Laplacian u = u + xi and the
 * resonant expansion of f o xi; for eigenfunctions H f = Lambda f, so the right side is two
 * derivatives smoother than f_sharp.
 */
inline Field bilinear_B(const EnhancedNoise& e, const Field& f, const Field& u, const DyadicPartition& P) {
  Field inside = 2.0 * gradient_paraproduct(f, u, P);
  inside += paraproduct_less(f + laplacian(f), u, P);
  inside -= paraproduct_greater(f, e.xi_eps, P);
  inside -= pointwise_product(f, e.xi2_eps);
  return -1.0 * apply_multiplier(MultiplierSpec::sigma(), inside);
}

inline ParacontrolledDecomposition paracontrolled_split(const EnhancedNoise& e, const Field& f,
                                                        const DyadicPartition& P = DyadicPartition{},
                                                        double gamma = 0.9) {
  f.check_same(e.xi_eps, "paracontrolled_split");
  ParacontrolledDecomposition d;
  d.f = f;
  d.gamma = gamma;
  d.seed = e.seed;
  d.c_eps = e.c_eps;
  d.u = apply_multiplier(MultiplierSpec::sigma(), e.xi_eps);
  d.f_less_u = paraproduct_less(f, d.u, P);
  d.f_sharp = f - d.f_less_u;
  d.b = bilinear_B(e, f, d.u, P);
  d.f_flat = d.f_sharp - d.b;
  d.norms_f = sobolev_triple(d.f, gamma);
  d.norms_sharp = sobolev_triple(d.f_sharp, gamma);
  d.norms_flat = sobolev_triple(d.f_flat, gamma);
  return d;
}

/// f o xi via f Xi_2 + R(f, sigma(D) xi, xi) + f_sharp o xi (equals f o xi_eps + c_eps f).
inline Field resonant_product_paracontrolled(const EnhancedNoise& e, const ParacontrolledDecomposition& d,
                                             const DyadicPartition& P = DyadicPartition{}) {
  d.f.check_same(e.xi_eps, "resonant_product_paracontrolled");
  if (d.seed != e.seed || d.c_eps != e.c_eps)
    throw InvalidInput("resonant_product_paracontrolled: decomposition was built for a different enhancement");
  Field out = pointwise_product(d.f, e.xi2_eps);
  out += commutator_R(d.f, d.u, e.xi_eps, P);
  out += resonant(d.f_sharp, e.xi_eps, P);
  return out;
}

}  // namespace paraspec
