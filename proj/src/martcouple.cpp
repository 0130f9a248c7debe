#include "lrw/martcouple.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "lrw/error.hpp"
#include "lrw/normal.hpp"

namespace lrw {

AsipMode parse_asip_mode(const std::string& s) {
  if (s == "as" || s == "item1") return AsipMode::as_item1;
  if (s == "l1" || s == "item2") return AsipMode::l1_item2;
  throw ConfigError("mode must be 'as' or 'l1', got '" + s + "'");
}

std::string to_string(AsipMode mode) { return mode == AsipMode::as_item1 ? "as" : "l1"; }

// ---------------------------------------------------------------- blocks

int block_exponent(int L, double p, AsipMode mode, bool* clamped) {
  if (!(p > 2.0 && p <= 3.0)) throw BadExponent("p must lie in (2, 3]");
  if (clamped) *clamped = false;
  if (L <= 0) {
    if (clamped) *clamped = L == 0;
    return 0;
  }
  const bool p3 = p == 3.0;
  double b = 1.0 / p;
  if (p3) b = mode == AsipMode::as_item1 ? 1.0 : -1.0 / 3.0;
  const double lg = std::log2(static_cast<double>(L));
  const double raw = mode == AsipMode::as_item1 ? 2.0 * L / p + b * lg : 2.0 * L / p - b * lg;
  long m = static_cast<long>(std::floor(raw));
  if (m < 0 || m > L) {
    if (clamped) *clamped = true;
    m = std::clamp<long>(m, 0, L);
  }
  return static_cast<int>(m);
}

BlockScheme block_scheme(long n, double p, AsipMode mode) {
  if (!(p > 2.0 && p <= 3.0)) throw BadExponent("p must lie in (2, 3]");
  if (n < 2) throw ValidationError("block scheme needs n >= 2");
  BlockScheme s{p, mode, {}};
  for (int L = 0; (2L << L) <= n && L < 62; ++L) {
    bool clamped = false;
    const int m = block_exponent(L, p, mode, &clamped);
    s.levels.push_back({L, m, clamped, 1L << (L - m), 1L << L});
  }
  return s;
}

// ---------------------------------------------------------------- chain

DrivenMartingale::DrivenMartingale(std::vector<std::vector<double>> transition, std::vector<double> stationary,
                                   std::vector<std::vector<Innovation>> innovations, double p)
    : transition_(std::move(transition)),
      stationary_(std::move(stationary)),
      innovations_(std::move(innovations)),
      p_(p) {
  const std::size_t n = stationary_.size();
  if (n == 0 || transition_.size() != n || innovations_.size() != n)
    throw ValidationError("chain needs matching transition, stationary and innovation sizes");
  auto check_row = [](const std::vector<double>& row, const char* what) {
    double s = 0.0;
    for (double x : row) {
      if (!(x >= 0.0)) throw ValidationError(std::string(what) + " has a negative entry");
      s += x;
    }
    if (std::fabs(s - 1.0) > 1e-12) throw ValidationError(std::string(what) + " does not sum to 1");
  };
  check_row(stationary_, "stationary row");
  for (const auto& row : transition_) {
    if (row.size() != n) throw ValidationError("transition row has wrong length");
    check_row(row, "transition row");
  }
  for (std::size_t j = 0; j < n; ++j) {
    double pj = 0.0;
    for (std::size_t i = 0; i < n; ++i) pj += stationary_[i] * transition_[i][j];
    if (std::fabs(pj - stationary_[j]) > 1e-9) throw ValidationError("stationary row is not invariant");
  }
  for (const auto& alpha : innovations_) {
    if (alpha.empty()) throw ValidationError("empty innovation alphabet");
    double q = 0.0, mean = 0.0, scale = 0.0;
    for (const Innovation& e : alpha) {
      if (!(e.q > 0.0) || !std::isfinite(e.h)) throw ValidationError("innovation needs q > 0 and finite h");
      q += e.q;
      mean += e.q * e.h;
      scale = std::max(scale, std::fabs(e.h));
    }
    if (std::fabs(q - 1.0) > 1e-12) throw ValidationError("innovation probabilities do not sum to 1");
    if (std::fabs(mean) > 1e-12 * std::max(1.0, scale)) throw ValidationError("increments are not conditionally centered");
  }
  if (!(p_ > 2.0 && p_ <= 3.0)) throw BadExponent("p must lie in (2, 3]");
}

double DrivenMartingale::variance() const {
  double v = 0.0;
  for (std::size_t s = 0; s < states(); ++s)
    for (const Innovation& e : innovations_[s]) v += stationary_[s] * e.q * e.h * e.h;
  return v;
}

std::size_t DrivenMartingale::draw_state(const std::vector<double>& row, RngStream& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    acc += row[i];
    if (u < acc) return i;
  }
  for (std::size_t i = row.size(); i-- > 0;)
    if (row[i] > 0.0) return i;
  return 0;
}

DrivenMartingale parse_martingale(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    auto transition = j.at("transition").get<std::vector<std::vector<double>>>();
    auto stationary = j.at("stationary").get<std::vector<double>>();
    std::vector<std::vector<Innovation>> innov;
    for (const auto& alpha : j.at("innovations")) {
      std::vector<Innovation> a;
      for (const auto& e : alpha) a.push_back({e.at("q").get<double>(), e.at("h").get<double>()});
      innov.push_back(std::move(a));
    }
    return DrivenMartingale(std::move(transition), std::move(stationary), std::move(innov), j.value("p", 3.0));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

DrivenMartingale load_martingale(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open martingale file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_martingale(ss.str());
}

DrivenMartingale rademacher_martingale(double p) {
  return DrivenMartingale({{1.0}}, {1.0}, {{{0.5, -1.0}, {0.5, 1.0}}}, p);
}

DrivenPath simulate_driven(const DrivenMartingale& mart, long n, std::uint64_t seed, std::uint64_t replicate) {
  if (n < 0) throw ValidationError("negative path length");
  RngStream rng(seed, replicate);
  DrivenPath out;
  out.d.resize(static_cast<std::size_t>(n));
  out.states.resize(static_cast<std::size_t>(n) + 1);
  std::size_t s = mart.draw_state(mart.stationary(), rng);
  out.states[0] = s;
  for (long i = 0; i < n; ++i) {
    const auto& alpha = mart.innovations()[s];
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t e = alpha.size() - 1;
    for (std::size_t a = 0; a < alpha.size(); ++a) {
      acc += alpha[a].q;
      if (u < acc) {
        e = a;
        break;
      }
    }
    out.d[static_cast<std::size_t>(i)] = alpha[e].h;
    s = mart.draw_state(mart.transition()[s], rng);
    out.states[static_cast<std::size_t>(i) + 1] = s;
  }
  return out;
}

// ---------------------------------------------------------------- laws

namespace {

double clamp_unit(double w) { return std::clamp(w, 1e-300, 1.0 - 0x1p-53); }

struct Cell {
  std::size_t state;
  double sum;
  double mass;
};

void merge_cells(std::vector<Cell>& cells) {
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.state != b.state ? a.state < b.state : a.sum < b.sum;
  });
  std::vector<Cell> out;
  out.reserve(cells.size());
  for (const Cell& c : cells) {
    if (!out.empty() && out.back().state == c.state &&
        c.sum - out.back().sum <= 1e-12 * std::max(1.0, std::fabs(c.sum))) {
      out.back().mass += c.mass;
    } else {
      out.push_back(c);
    }
  }
  cells = std::move(out);
}

}  // namespace

std::pair<double, double> cdf_split(const DiscreteLaw& law, double u) {
  const double tol = 1e-9 * std::max(1.0, std::fabs(u));
  double below = 0.0;
  for (std::size_t i = 0; i < law.atoms.size(); ++i) {
    if (law.atoms[i] < u - tol) {
      below += law.mass[i];
    } else if (law.atoms[i] <= u + tol) {
      return {below, law.mass[i]};
    } else {
      break;
    }
  }
  return {below, 0.0};
}

ChainBlockLaw::ChainBlockLaw(const DrivenMartingale& mart, double scale, std::size_t max_atoms)
    : mart_(mart), scale_(scale > 0.0 ? scale : 1.0), max_atoms_(max_atoms) {}

const DiscreteLaw& ChainBlockLaw::law(std::size_t state, long len) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& slot = cache_[{state, len}];
  if (slot) return *slot;
  std::vector<Cell> cells{{state, 0.0, 1.0}};
  for (long step = 0; step < len; ++step) {
    std::vector<Cell> next;
    for (const Cell& c : cells) {
      const auto& row = mart_.transition()[c.state];
      for (const Innovation& e : mart_.innovations()[c.state]) {
        const double sum = c.sum + e.h / scale_;
        for (std::size_t s2 = 0; s2 < row.size(); ++s2)
          if (row[s2] > 0.0) next.push_back({s2, sum, c.mass * e.q * row[s2]});
      }
      if (next.size() > 4 * max_atoms_) throw AlphabetTooLarge("conditional block law exceeds the atom budget");
    }
    merge_cells(next);
    if (next.size() > max_atoms_) throw AlphabetTooLarge("conditional block law exceeds the atom budget");
    cells = std::move(next);
  }
  for (Cell& c : cells) c.state = 0;
  merge_cells(cells);
  auto law = std::make_unique<DiscreteLaw>();
  for (const Cell& c : cells) {
    law->atoms.push_back(c.sum);
    law->mass.push_back(c.mass);
  }
  slot = std::move(law);
  return *slot;
}

double ChainBlockLaw::couple(std::size_t state_before, double u, long len, double delta) {
  const auto [below, at] = cdf_split(law(state_before, len), u);
  return std::sqrt(static_cast<double>(len)) * normal_quantile(clamp_unit(below + delta * at));
}

EmpiricalBlockLaw::EmpiricalBlockLaw(const DrivenMartingale& mart, double scale, long samples, std::uint64_t seed)
    : mart_(mart), scale_(scale > 0.0 ? scale : 1.0), samples_(samples), seed_(seed) {
  if (samples_ < 1) throw ValidationError("empirical law needs samples >= 1");
}

const std::vector<double>& EmpiricalBlockLaw::sample(std::size_t state, long len) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find({state, len});
  if (it != cache_.end()) return it->second;
  RngStream rng(seed_, {static_cast<std::uint64_t>(state), static_cast<std::uint64_t>(len)});
  std::vector<double> sums(static_cast<std::size_t>(samples_));
  for (double& out : sums) {
    std::size_t s = state;
    double acc = 0.0;
    for (long i = 0; i < len; ++i) {
      const auto& alpha = mart_.innovations()[s];
      const double u = rng.uniform();
      double c = 0.0;
      std::size_t e = alpha.size() - 1;
      for (std::size_t a = 0; a < alpha.size(); ++a) {
        c += alpha[a].q;
        if (u < c) {
          e = a;
          break;
        }
      }
      acc += alpha[e].h / scale_;
      s = mart_.draw_state(mart_.transition()[s], rng);
    }
    out = acc;
  }
  std::sort(sums.begin(), sums.end());
  return cache_.emplace(std::make_pair(state, len), std::move(sums)).first->second;
}

double EmpiricalBlockLaw::couple(std::size_t state_before, double u, long len, double delta) {
  const auto& s = sample(state_before, len);
  const double tol = 1e-9 * std::max(1.0, std::fabs(u));
  const auto lo = std::lower_bound(s.begin(), s.end(), u - tol);
  const auto hi = std::upper_bound(s.begin(), s.end(), u + tol);
  const double w = (static_cast<double>(lo - s.begin()) + delta * static_cast<double>(hi - lo + 1)) /
                   static_cast<double>(s.size() + 1);
  return std::sqrt(static_cast<double>(len)) * normal_quantile(clamp_unit(w));
}

// ---------------------------------------------------------------- coupling

std::vector<double> skorohod_split(double v, long len, RngStream& rng) {
  if (len < 1) throw ValidationError("block length must be >= 1");
  std::vector<double> z(static_cast<std::size_t>(len));
  for (double& x : z) x = rng.normal();
  const double shift = (v - std::accumulate(z.begin(), z.end(), 0.0)) / static_cast<double>(len);
  for (double& x : z) x += shift;
  return z;
}

CoupledPath couple_blocks(const DrivenPath& path, double scale, const BlockScheme& scheme, ConditionalLaw& law,
                          std::uint64_t seed, Exec exec) {
  const long horizon = scheme.horizon();
  if (static_cast<long>(path.d.size()) < horizon) throw TooShort("path shorter than the block scheme horizon");
  const double sc = scale > 0.0 ? scale : 1.0;
  std::vector<double> dprime(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (long i = 1; i <= horizon; ++i) dprime[static_cast<std::size_t>(i)] = path.d[static_cast<std::size_t>(i - 1)] / sc;
  std::vector<double> z(static_cast<std::size_t>(horizon) + 1, 0.0);
  {
    RngStream r1(seed, {7});
    z[1] = r1.normal();
  }

  CoupledPath out;
  out.horizon = horizon;
  out.scale = sc;
  out.exact = law.exact();
  for (const BlockLevel& lv : scheme.levels) {
    const long len = 1L << lv.m;
    const std::size_t first_block = out.blocks.size();
    out.blocks.resize(first_block + static_cast<std::size_t>(lv.blocks));
    for_each_index(static_cast<std::size_t>(lv.blocks), exec, [&](std::size_t kk) {
      const long k = static_cast<long>(kk) + 1;
      const long a = lv.first + (k - 1) * len + 1;
      double u = 0.0;
      for (long i = a; i < a + len; ++i) u += dprime[static_cast<std::size_t>(i)];
      RngStream dr(seed, {static_cast<std::uint64_t>(lv.L), static_cast<std::uint64_t>(k), 0});
      const double v = law.couple(path.states[static_cast<std::size_t>(a - 1)], u, len, dr.uniform_open());
      RngStream sr(seed, {static_cast<std::uint64_t>(lv.L), static_cast<std::uint64_t>(k), 1});
      const std::vector<double> zs = skorohod_split(v, len, sr);
      for (long i = 0; i < len; ++i) z[static_cast<std::size_t>(a + i)] = zs[static_cast<std::size_t>(i)];
      out.blocks[first_block + kk] = {lv.L, k, u, v};
    });
  }
  out.s.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  out.t.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (long i = 1; i <= horizon; ++i) {
    out.s[static_cast<std::size_t>(i)] = out.s[static_cast<std::size_t>(i - 1)] + dprime[static_cast<std::size_t>(i)];
    out.t[static_cast<std::size_t>(i)] = out.t[static_cast<std::size_t>(i - 1)] + z[static_cast<std::size_t>(i)];
  }
  return out;
}

double asip_exponent(double p, AsipMode mode, double eps) {
  if (!(p > 2.0 && p <= 3.0)) throw BadExponent("p must lie in (2, 3]");
  if (mode == AsipMode::as_item1) return p == 3.0 ? 1.0 + eps : 0.5 + 0.5 / p + eps;
  return p == 3.0 ? 2.0 / 3.0 : 0.5 - 0.5 / p;
}

AsipDeviation asip_deviation(const CoupledPath& c, const BlockScheme& scheme, double eps) {
  auto diff = [&](long j) { return c.s[static_cast<std::size_t>(j)] - c.t[static_cast<std::size_t>(j)]; };
  AsipDeviation out;
  out.n = c.horizon;
  out.sup_dev = 0.0;
  for (long j = 1; j <= c.horizon; ++j) out.sup_dev = std::max(out.sup_dev, std::fabs(diff(j)));

  std::size_t b = 0;
  for (const BlockLevel& lv : scheme.levels) {
    LevelDeviation ld{lv.L, 0.0, 0.0, 0.0};
    const long len = 1L << lv.m;
    const double base = diff(lv.first);
    for (long l = 1; l <= lv.first; ++l) ld.d = std::max(ld.d, std::fabs(diff(lv.first + l) - base));
    double run = 0.0;
    for (long k = 1; k <= lv.blocks; ++k, ++b) {
      run += c.blocks[b].u - c.blocks[b].v;
      ld.d1 = std::max(ld.d1, std::fabs(run));
      const long a = lv.first + (k - 1) * len + 1;
      const double start = diff(a - 1);
      for (long i = a; i < a + len; ++i) ld.d2 = std::max(ld.d2, std::fabs(diff(i) - start));
    }
    out.levels.push_back(ld);
  }
  const double n = static_cast<double>(c.horizon);
  const double p = scheme.p;
  const double base = std::pow(n, 1.0 / p);
  const double ln = std::log(n);
  out.ratio_item1 = out.sup_dev / (base * std::pow(ln, asip_exponent(p, AsipMode::as_item1, eps)));
  out.ratio_item2 = out.sup_dev / (base * std::pow(ln, asip_exponent(p, AsipMode::l1_item2, eps)));
  return out;
}

}  // namespace lrw
