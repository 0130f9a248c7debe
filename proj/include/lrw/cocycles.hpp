#pragma once

#include <cstdint>
#include <string>

#include "lrw/matgroup.hpp"
#include "lrw/measures.hpp"

namespace lrw {

enum class CocycleKind { norm_proj, iwasawa, cartan_increment };

/// "norm" | "iwasawa" | "cartan"; throws InvalidKind otherwise.
CocycleKind parse_cocycle_kind(const std::string& name);
std::string to_string(CocycleKind kind);

/// log |g x| for the unit representative x.
double norm_cocycle(const GroupElement& g, const ProjPoint& x);
double norm_cocycle(const Matrix& g, const Vector& x);

/// z = log diag r with g k = k' r.
Vector iwasawa_cocycle(const GroupElement& g, const Flag& eta);

/// Log singular values, nonincreasing.
Vector cartan_projection(const GroupElement& g);
Vector cartan_projection(const Matrix& g);

/// sgn det k.
int fiber(const Flag& eta);

/// |sigma(gh, x) - sigma(g, h x) - sigma(h, x)|_max.
double cocycle_identity_residual(CocycleKind kind, const GroupElement& g, const GroupElement& h,
                                 const ProjPoint& x);
double cocycle_identity_residual(CocycleKind kind, const GroupElement& g, const GroupElement& h,
                                 const Flag& eta);

struct Kappa0Estimate {
  double moment;   // sum_atoms w * kappa0_hat(g)^p
  long pairs;      // sampled pairs per atom for sigma_Lip
  bool sup_exact;  // sigma_sup exact (norm cocycle) or sampled
  bool lower_bound = true;
};

/// Sampled lower bound on the p-th moment of kappa0. Trial t of atom i uses
/// stream (seed, i, t), so the estimate is nondecreasing in x_trials.
Kappa0Estimate kappa0_estimate(const AtomicMeasure& mu, CocycleKind kind, double p, long x_trials,
                               std::uint64_t seed);

/// Pair (x, y) at distance roughly (pi/2) 10^(-6u), u uniform; flags share
/// the fiber. Consumes a fixed number of draws for a given d.
std::pair<ProjPoint, ProjPoint> sample_close_proj_pair(RngStream& rng, int d);
std::pair<Flag, Flag> sample_close_flag_pair(RngStream& rng, int d);

}  // namespace lrw
