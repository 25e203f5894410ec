#pragma once

#include "eelink/estimand.hpp"
#include "eelink/types.hpp"

namespace eelink {

// Empirical moment-based variance estimators for the estimating system
// (m, u), all evaluated at supplied estimates:
//
//   Sigma  = Mt^-1 [n^-1 sum m m'] Mt^-T          (nuisance known)
//   Omega  = Uh^-1 [n^-1 sum u u'] Uh^-T          (nuisance alone)
//   V      = Mt^-1 [n^-1 sum l l'] Mt^-T          (linked / two-step)
//   Lambda = A^-1  [n^-1 sum a a'] A^-T           (stacked system)
//
// with l = m - Mh Uh^-1 u, a = (m; u), and A the block lower-triangular
// stacked Jacobian [[Mt, Mh], [0, Uh]]. Outputs are symmetrized as
// (S + S')/2.
struct SandwichEstimate {
  Mat M_theta;  // p x p
  Mat M_h;      // p x q
  Mat U_h;      // q x q
  Mat Omega;    // q x q
  Mat Sigma;    // p x p
  Mat V;        // p x p
  Mat Lambda;   // (p+q) x (p+q)
  int n_used = 0;
};

struct Jacobians {
  Mat M_theta;
  Mat M_h;
  Mat U_h;
};

// Sample averages of the per-observation derivatives, analytic when the
// spec carries a bundle, otherwise central finite differences with step
// 1e-6 * (1 + |coordinate|) applied to the averaged scores.
Jacobians empirical_jacobians(const EstimandSpec& spec, const Dataset& d,
                              const Vec& theta_hat, const Vec& h_hat);

// Sandwich for a spec without nuisance: A^-1 B A^-T with
// A = n^-1 sum dm/dtheta', B = n^-1 sum m m'.
Mat sandwich_plain(const EstimandSpec& spec, const Dataset& d, const Vec& theta_hat);

// Known-nuisance posterior variance Sigma.
Mat sandwich_sigma(const EstimandSpec& spec, const Dataset& d,
                   const Vec& theta_hat, const Vec& h_hat);

// Full set of blocks for the linked system.
SandwichEstimate sandwich_linked(const EstimandSpec& spec, const Dataset& d,
                                 const Vec& theta_hat, const Vec& h_hat);

// Lambda for the stacked score a(O; eta), eta = (theta, h).
Mat sandwich_augmented(const EstimandSpec& spec, const Dataset& d, const Vec& eta_hat);

}  // namespace eelink
