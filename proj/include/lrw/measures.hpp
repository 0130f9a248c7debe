#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrw/matgroup.hpp"
#include "lrw/rng.hpp"

namespace lrw {

struct Atom {
  double weight;
  GroupElement g;
};

/// Finitely supported probability on GL_d.
class AtomicMeasure {
 public:
  /// Validates: nonempty, common dimension, positive weights summing to 1
  /// within 1e-9 (then renormalized).
  AtomicMeasure(int dim, std::vector<Atom> atoms);

  int dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  /// Index of the atom selected by one u64 draw from `rng`.
  std::size_t sample_index(RngStream& rng) const;

 private:
  int dim_;
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
};

/// {"dim": d, "atoms": [{"w": weight, "m": [[row], ...]}, ...]}
AtomicMeasure parse_measure(const std::string& text);
AtomicMeasure load_measure(const std::string& path);
std::string measure_to_json(const AtomicMeasure& mu);

/// Consumes exactly one u64 word of `rng`.
const GroupElement& sample_step(const AtomicMeasure& mu, RngStream& rng);

enum class Side { left, right };

struct ScaledMatrix {
  Matrix m;          // |m|_op = 1
  double log_scale;  // product = exp(log_scale) * m
};

/// products[k-1] is A_k = Y_k...Y_1 (left) or B_k = Y_1...Y_k (right).
struct WalkPath {
  std::vector<std::size_t> atom_index;
  std::vector<GroupElement> steps;
  std::vector<ScaledMatrix> products;
  std::uint64_t seed;
  Side side;
};

/// Step sequence of replicate r uses RngStream(seed, r). walk() is replicate 0.
std::vector<std::size_t> step_indices(const AtomicMeasure& mu, std::size_t n, std::uint64_t seed,
                                      std::uint64_t replicate = 0);
WalkPath walk(const AtomicMeasure& mu, std::size_t n, std::uint64_t seed, Side side,
              std::uint64_t replicate = 0);

}  // namespace lrw
