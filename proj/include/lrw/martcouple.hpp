#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "lrw/parallel.hpp"
#include "lrw/rng.hpp"

namespace lrw {

enum class AsipMode { as_item1, l1_item2 };

/// "as" | "l1"; throws ConfigError otherwise.
AsipMode parse_asip_mode(const std::string& s);
std::string to_string(AsipMode mode);

struct BlockLevel {
  int L;
  int m;           // log2 of the block length
  bool clamped;    // formula fell outside [0, L]
  long blocks;     // 2^(L - m)
  long first;      // intervals are (first + (k-1) 2^m, first + k 2^m], first = 2^L
};

struct BlockScheme {
  double p;
  AsipMode mode;
  std::vector<BlockLevel> levels;  // all L with 2^(L+1) <= n
  long horizon() const { return levels.empty() ? 1 : 2 * levels.back().first; }
};

/// floor(2L/p + b_p log2 L) (item 1) or floor(2L/p - b_p log2 L) (item 2).
int block_exponent(int L, double p, AsipMode mode, bool* clamped = nullptr);
BlockScheme block_scheme(long n, double p, AsipMode mode);

/// d_i = h(s_{i-1}, eps_i) with eps_i drawn from the innovation alphabet of
/// state s_{i-1}, and s_i ~ transition[s_{i-1}] drawn independently of eps_i.
struct Innovation {
  double q;  // probability
  double h;  // increment
};

class DrivenMartingale {
 public:
  DrivenMartingale(std::vector<std::vector<double>> transition, std::vector<double> stationary,
                   std::vector<std::vector<Innovation>> innovations, double p);

  std::size_t states() const { return stationary_.size(); }
  const std::vector<std::vector<double>>& transition() const { return transition_; }
  const std::vector<double>& stationary() const { return stationary_; }
  const std::vector<std::vector<Innovation>>& innovations() const { return innovations_; }
  double p() const { return p_; }
  /// E d^2 under the stationary law.
  double variance() const;

  std::size_t draw_state(const std::vector<double>& row, RngStream& rng) const;

 private:
  std::vector<std::vector<double>> transition_;
  std::vector<double> stationary_;
  std::vector<std::vector<Innovation>> innovations_;
  double p_;
};

/// {"transition": [[..]..], "stationary": [..],
///  "innovations": [[{"q": .., "h": ..}, ..] per state], "p": 3}
DrivenMartingale parse_martingale(const std::string& text);
DrivenMartingale load_martingale(const std::string& path);
/// Single-state chain with +-1 equiprobable increments.
DrivenMartingale rademacher_martingale(double p = 3.0);

struct DrivenPath {
  std::vector<double> d;             // d[i-1] = d_i
  std::vector<std::size_t> states;   // states[i] = s_i, i = 0..n
};

/// s_0 from the stationary row (1 draw), then 2 draws per step, stream
/// (seed, replicate).
DrivenPath simulate_driven(const DrivenMartingale& mart, long n, std::uint64_t seed, std::uint64_t replicate = 0);

struct DiscreteLaw {
  std::vector<double> atoms;  // increasing
  std::vector<double> mass;
};

/// Conditional law of a block sum of standardized increments given the
/// past. `couple` returns V ~ N(0, len) through the randomized quantile
/// transform W = F(u-) + delta P(U = u).
class ConditionalLaw {
 public:
  virtual ~ConditionalLaw() = default;
  virtual bool exact() const = 0;
  virtual double couple(std::size_t state_before, double u, long len, double delta) = 0;
};

/// Exact law from dynamic programming over (state, partial sum); atoms
/// closer than 1e-12 are merged.
class ChainBlockLaw : public ConditionalLaw {
 public:
  ChainBlockLaw(const DrivenMartingale& mart, double scale, std::size_t max_atoms = 10'000'000);
  bool exact() const override { return true; }
  double couple(std::size_t state_before, double u, long len, double delta) override;
  /// Cached; throws AlphabetTooLarge past max_atoms.
  const DiscreteLaw& law(std::size_t state, long len);

 private:
  DrivenMartingale mart_;
  double scale_;
  std::size_t max_atoms_;
  std::mutex mu_;
  std::map<std::pair<std::size_t, long>, std::unique_ptr<DiscreteLaw>> cache_;
};

/// Increments iid N(0,1): the quantile map is the identity, V = U.
class GaussianBlockLaw : public ConditionalLaw {
 public:
  bool exact() const override { return true; }
  double couple(std::size_t, double u, long, double) override { return u; }
};

/// Approximate law from simulated block sums; results are not certified.
class EmpiricalBlockLaw : public ConditionalLaw {
 public:
  EmpiricalBlockLaw(const DrivenMartingale& mart, double scale, long samples, std::uint64_t seed);
  bool exact() const override { return false; }
  double couple(std::size_t state_before, double u, long len, double delta) override;

 private:
  const std::vector<double>& sample(std::size_t state, long len);
  DrivenMartingale mart_;
  double scale_;
  long samples_;
  std::uint64_t seed_;
  std::mutex mu_;
  std::map<std::pair<std::size_t, long>, std::vector<double>> cache_;
};

/// Exact conditional CDF evaluation: (F(u-), P(U = u)) for atom tolerance
/// 1e-9 relative.
std::pair<double, double> cdf_split(const DiscreteLaw& law, double u);

/// len iid N(0,1) shifted by (v - sum)/len each; consumes len draws.
std::vector<double> skorohod_split(double v, long len, RngStream& rng);

struct CoupledBlock {
  int L;
  long k;
  double u;
  double v;
};

struct CoupledPath {
  long horizon;                 // indices 1..horizon are coupled
  double scale;                 // d'_i = d_i / scale
  std::vector<double> s;        // s[j] = S_j, j = 0..horizon
  std::vector<double> t;        // t[j] = T_j
  std::vector<CoupledBlock> blocks;
  bool exact;
};

/// Standardizes increments by sqrt(E d^2) (kept unscaled when it is 0),
/// couples every block of the scheme and fills in the Gaussian steps.
/// Streams: (seed, L, k, 0) for delta, (seed, L, k, 1) for the split,
/// (seed, 7) for Z_1.
CoupledPath couple_blocks(const DrivenPath& path, double scale, const BlockScheme& scheme, ConditionalLaw& law,
                          std::uint64_t seed, Exec exec = Exec::serial);

struct LevelDeviation {
  int L;
  double d;   // D_L
  double d1;  // D_{L,1}
  double d2;  // D_{L,2}
};

struct AsipDeviation {
  long n;
  double sup_dev;
  double ratio_item1;
  double ratio_item2;
  std::vector<LevelDeviation> levels;
};

double asip_exponent(double p, AsipMode mode, double eps = 0.05);
AsipDeviation asip_deviation(const CoupledPath& c, const BlockScheme& scheme, double eps = 0.05);

}  // namespace lrw
