#include "lrw/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "lrw/contraction.hpp"
#include "lrw/error.hpp"
#include "lrw/tailbounds.hpp"
#include "lrw/wasserstein.hpp"

namespace lrw {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, ExperimentKind>& experiment_names() {
  static const std::map<std::string, ExperimentKind> names{
      {"simulate", ExperimentKind::simulate},       {"lyapunov", ExperimentKind::lyapunov},
      {"sigma", ExperimentKind::sigma},             {"clt_rate", ExperimentKind::clt_rate},
      {"asip", ExperimentKind::asip},               {"contraction", ExperimentKind::contraction},
      {"fiber", ExperimentKind::fiber},             {"fuk_nagaev", ExperimentKind::fuk_nagaev},
      {"cocycle_check", ExperimentKind::cocycle_check}};
  return names;
}

}  // namespace

ExperimentKind parse_experiment(const std::string& name) {
  const auto it = experiment_names().find(name);
  if (it == experiment_names().end()) throw ConfigError("experiment: unknown value '" + name + "'");
  return it->second;
}

std::string to_string(ExperimentKind kind) {
  for (const auto& [name, k] : experiment_names())
    if (k == kind) return name;
  return "?";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------- config

namespace {

bool needs_measure(ExperimentKind k) {
  return k != ExperimentKind::asip && k != ExperimentKind::fuk_nagaev;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  if (c.n.empty()) throw ConfigError("n: grid is empty");
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    if (c.n[i] < 1) throw ConfigError("n: values must be >= 1");
    if (i > 0 && c.n[i] <= c.n[i - 1]) throw ConfigError("n: grid must be strictly increasing");
  }
  if (c.replicates < 1) throw ConfigError("replicates: must be >= 1");
  if (c.burnin < 0) throw ConfigError("burnin: must be >= 0");
  if (!(c.p > 2.0 && c.p <= 3.0)) throw ConfigError("p: must lie in (2, 3]");
  if (c.workers < 0) throw ConfigError("workers: must be >= 0");
  if (needs_measure(c.experiment)) {
    if (c.measure.empty()) throw ConfigError("measure: required for experiment " + to_string(c.experiment));
    if (!fs::exists(c.measure)) throw ConfigError("measure: file not found: " + c.measure);
  }
  if (!c.martingale.empty() && !fs::exists(c.martingale))
    throw ConfigError("martingale: file not found: " + c.martingale);
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["measure"] = c.measure;
  j["martingale"] = c.martingale;
  j["cocycle"] = to_string(c.cocycle);
  j["n"] = c.n;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["p"] = c.p;
  j["mode"] = to_string(c.mode);
  j["burnin"] = c.burnin;
  j["out"] = c.out;
  return j.dump();  // nlohmann orders object keys, so this is canonical
}

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "experiment") c.experiment = parse_experiment(v.get<std::string>());
      else if (key == "measure") c.measure = v.get<std::string>();
      else if (key == "martingale") c.martingale = v.get<std::string>();
      else if (key == "cocycle") c.cocycle = parse_cocycle_kind(v.get<std::string>());
      else if (key == "n") c.n = v.is_array() ? v.get<std::vector<long>>() : std::vector<long>{v.get<long>()};
      else if (key == "replicates") c.replicates = v.get<long>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "p") c.p = v.get<double>();
      else if (key == "mode") c.mode = parse_asip_mode(v.get<std::string>());
      else if (key == "burnin") c.burnin = v.get<long>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "workers") c.workers = v.get<int>();
      else throw ConfigError(key + ": unknown field");
    } catch (const json::exception& e) {
      throw ConfigError(key + ": " + e.what());
    } catch (const InvalidKind& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
  return c;
}

// ---------------------------------------------------------------- fits

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimMismatch("fit_rate needs equal-length columns");
  if (x.size() < 3) throw TooFewPoints("fit_rate needs at least 3 points");
  RateFit f{0.0, 0.0, 0.0, {}};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NonPositive("fit_rate needs positive x and y");
    f.points.emplace_back(std::log(x[i]), std::log(y[i]));
  }
  const double n = static_cast<double>(f.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [lx, ly] : f.points) {
    mx += lx;
    my += ly;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [lx, ly] : f.points) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
    syy += (ly - my) * (ly - my);
  }
  if (!(sxx > 0.0)) throw TooFewPoints("fit_rate needs at least two distinct x values");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return f;
}

RateFit fit_rate_csv(const std::string& path, const std::string& xcol, const std::string& ycol) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot open " + path);
  std::string line;
  std::vector<std::string> header;
  std::vector<double> xs, ys;
  long xi = -1, yi = -1;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (header.empty()) {
      header = cells;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == xcol) xi = static_cast<long>(i);
        if (header[i] == ycol) yi = static_cast<long>(i);
      }
      if (xi < 0) throw ConfigError("x: column '" + xcol + "' not in " + path);
      if (yi < 0) throw ConfigError("y: column '" + ycol + "' not in " + path);
      continue;
    }
    if (static_cast<long>(cells.size()) <= std::max(xi, yi)) throw ParseError("short row in " + path);
    xs.push_back(std::stod(cells[static_cast<std::size_t>(xi)]));
    ys.push_back(std::stod(cells[static_cast<std::size_t>(yi)]));
  }
  return fit_rate(xs, ys);
}

// ---------------------------------------------------------------- kernels

CltRateResult clt_rate(const AtomicMeasure& mu, CocycleKind kind, const std::vector<long>& grid, long replicates,
                       long burnin, std::uint64_t seed, Exec exec) {
  if (grid.empty() || replicates < 2) throw ValidationError("clt_rate needs a grid and replicates >= 2");
  const long nmax = grid.back();
  constexpr long kBatches = 16;
  const long blen = std::max(1L, nmax / kBatches);
  const int od = kind == CocycleKind::norm_proj ? 1 : mu.dim();
  const std::size_t R = static_cast<std::size_t>(replicates);
  std::vector<std::vector<Vector>> partial(R), batches(R);
  for_each_index(R, exec, [&](std::size_t r) {
    CocycleWalker w = make_walker(mu, kind, burnin, seed, r);
    RngStream rng(seed, r);
    Vector s = Vector::Zero(od), bsum = Vector::Zero(od);
    std::size_t gi = 0;
    for (long k = 1; k <= nmax; ++k) {
      const Vector inc = w.step(sample_step(mu, rng).matrix());
      s += inc;
      bsum += inc;
      if (k % blen == 0 && static_cast<long>(batches[r].size()) < kBatches) {
        batches[r].push_back(bsum);
        bsum.setZero();
      }
      if (gi < grid.size() && k == grid[gi]) {
        partial[r].push_back(s);
        ++gi;
      }
    }
  });

  CltRateResult out;
  out.lambda_hat = Vector::Zero(od);
  for (const auto& p : partial) out.lambda_hat += p.back();
  out.lambda_hat /= static_cast<double>(replicates) * static_cast<double>(nmax);
  std::vector<Vector> sums;
  for (const auto& b : batches) sums.insert(sums.end(), b.begin(), b.end());
  out.sigma_hat = sigma_from_batch_sums(sums, blen).sigma_hat;

  if (od == 1) {
    out.method = "w1_1d_gaussian";
    const double sd = std::sqrt(std::max(0.0, out.sigma_hat(0, 0)));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double n = static_cast<double>(grid[i]);
      std::vector<double> x(R);
      for (std::size_t r = 0; r < R; ++r) x[r] = (partial[r][i](0) - n * out.lambda_hat(0)) / std::sqrt(n);
      out.points.push_back({grid[i], w1_1d_gaussian(std::move(x), sd)});
    }
  } else {
    out.method = "w1_exact";
    const long m = std::min<long>(256, replicates);
    Eigen::SelfAdjointEigenSolver<Matrix> es(out.sigma_hat);
    const Matrix root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    Matrix ref(od, m);
    RngStream gr(seed, {9});
    for (long j = 0; j < m; ++j) {
      Vector z(od);
      for (int i = 0; i < od; ++i) z(i) = gr.normal();
      ref.col(j) = root * z;
    }
    const EmpiricalMeasure gauss(ref);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double n = static_cast<double>(grid[i]);
      Matrix x(od, m);
      for (long r = 0; r < m; ++r)
        x.col(r) = (partial[static_cast<std::size_t>(r)][i] - n * out.lambda_hat) / std::sqrt(n);
      out.points.push_back({grid[i], w1_exact(EmpiricalMeasure(x), gauss)});
    }
  }
  if (grid.size() >= 3) {
    std::vector<double> xs, ys;
    for (const auto& p : out.points) {
      xs.push_back(static_cast<double>(p.n));
      ys.push_back(p.w1);
    }
    out.fit = fit_rate(xs, ys);
  }
  return out;
}

std::vector<AsipDeviation> asip_runs(const DrivenMartingale& mart, long n, double p, AsipMode mode, long replicates,
                                     std::uint64_t seed, Exec exec) {
  const BlockScheme scheme = block_scheme(n, p, mode);
  const double scale = std::sqrt(mart.variance());
  ChainBlockLaw law(mart, scale);
  std::vector<AsipDeviation> out(static_cast<std::size_t>(replicates));
  for_each_index(out.size(), exec, [&](std::size_t r) {
    const DrivenPath path = simulate_driven(mart, scheme.horizon(), seed, r);
    const CoupledPath c = couple_blocks(path, scale, scheme, law, mix64(seed) + r);
    out[r] = asip_deviation(c, scheme);
  });
  return out;
}

std::vector<std::vector<double>> iwasawa_cartan_gap(const AtomicMeasure& mu, const std::vector<long>& grid,
                                                    long replicates, std::uint64_t seed, Exec exec) {
  std::vector<std::vector<double>> gap(grid.size(), std::vector<double>(static_cast<std::size_t>(replicates)));
  for_each_index(static_cast<std::size_t>(replicates), exec, [&](std::size_t r) {
    FactoredProduct fp(Flag::identity(mu.dim()));
    RngStream rng(seed, r);
    std::size_t gi = 0;
    for (long k = 1; gi < grid.size(); ++k) {
      fp.left_multiply(sample_step(mu, rng).matrix());
      if (k == grid[gi]) {
        gap[gi][r] = (fp.log_diag() - fp.cartan()).cwiseAbs().maxCoeff();
        ++gi;
      }
    }
  });
  return gap;
}

std::vector<double> running_maxima(const DrivenMartingale& mart, long n, long replicates, std::uint64_t seed,
                                   Exec exec) {
  std::vector<double> out(static_cast<std::size_t>(replicates));
  for_each_index(out.size(), exec, [&](std::size_t r) {
    const DrivenPath path = simulate_driven(mart, n, seed, r);
    double m = 0.0, best = -INFINITY;
    for (double d : path.d) {
      m += d;
      best = std::max(best, m);
    }
    out[r] = best;
  });
  return out;
}

// ---------------------------------------------------------------- runner

namespace {

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  ~Outputs() {
    if (!committed_)
      for (const auto& p : written_) {
        std::error_code ec;
        fs::remove(p, ec);
      }
  }
  std::string write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("out: cannot write " + p.string());
    written_.push_back(p);
    f << content;
    if (!f) throw ConfigError("out: write failed for " + p.string());
    return p.string();
  }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

class Csv {
 public:
  Csv(const std::string& kind, const std::vector<std::string>& cols) {
    s_ << "#schema=lrw." << kind << ".v1\n";
    row_strings(cols);
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((s_ << (first ? "" : ",") << cell(cells), first = false), ...);
    s_ << '\n';
  }
  std::string str() const { return s_.str(); }

 private:
  void row_strings(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) s_ << (i ? "," : "") << cols[i];
    s_ << '\n';
  }
  static std::string cell(double x) { return format_double(x); }
  static std::string cell(long x) { return std::to_string(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& x) { return x; }
  static std::string cell(const char* x) { return x; }
  std::ostringstream s_;
};

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

DrivenMartingale martingale_of(const ExperimentConfig& c) {
  return c.martingale.empty() ? rademacher_martingale(c.p) : load_martingale(c.martingale);
}

struct Produced {
  std::string csv;
  json summary;
  std::vector<std::pair<std::string, std::string>> extra;  // (suffix, content)
};

Produced run_simulate(const ExperimentConfig& c, const AtomicMeasure& mu) {
  const long n = c.n.back();
  Csv csv("simulate", {"k", "atom", "log_norm", "cartan"});
  FactoredProduct fp(mu.dim());
  RngStream rng(c.seed, 0);
  for (long k = 1; k <= n; ++k) {
    const std::size_t a = mu.sample_index(rng);
    fp.left_multiply(mu.atoms()[a].g.matrix());
    const Vector kap = fp.cartan();
    std::string cart;
    for (Eigen::Index i = 0; i < kap.size(); ++i) cart += (i ? ";" : "") + format_double(kap(i));
    csv.row(k, a, kap(0), cart);
  }
  return {csv.str(), {{"n", n}, {"final_cartan", to_json(fp.cartan())}}, {}};
}

Produced run_lyapunov(const ExperimentConfig& c, const AtomicMeasure& mu) {
  Csv csv("lyapunov", {"n", "coord", "lambda_hat", "stderr", "replicates", "burnin"});
  json last;
  for (long n : c.n) {
    const LyapunovEstimate e = lyapunov(mu, c.cocycle, n, c.replicates, c.burnin, c.seed);
    for (Eigen::Index i = 0; i < e.lambda_hat.size(); ++i)
      csv.row(n, static_cast<long>(i), e.lambda_hat(i), e.stderr_(i), c.replicates, c.burnin);
    last = {{"n", n}, {"lambda_hat", to_json(e.lambda_hat)}, {"stderr", to_json(e.stderr_)}};
  }
  return {csv.str(), {{"cocycle", to_string(c.cocycle)}, {"burnin", c.burnin}, {"final", last}}, {}};
}

Produced run_sigma(const ExperimentConfig& c, const AtomicMeasure& mu) {
  const long K = c.n.back();
  const CovarianceEstimate s = sigma_series(mu, c.cocycle, K, c.replicates, c.burnin, c.seed);
  Csv csv("sigma", {"k", "i", "j", "cov_term", "stderr"});
  for (const auto& t : s.terms)
    for (Eigen::Index i = 0; i < t.value.rows(); ++i)
      for (Eigen::Index j = 0; j < t.value.cols(); ++j)
        csv.row(t.k, static_cast<long>(i), static_cast<long>(j), t.value(i, j), t.stderr_(i, j));

  // batch-means cross-check on the same replicate streams
  const long len = std::max(K * 10, 1000L);
  const long blen = len / 10;
  const int od = c.cocycle == CocycleKind::norm_proj ? 1 : mu.dim();
  std::vector<std::vector<Vector>> sums(static_cast<std::size_t>(c.replicates));
  for_each_index(sums.size(), Exec::parallel, [&](std::size_t r) {
    CocycleWalker w = make_walker(mu, c.cocycle, c.burnin, c.seed, r);
    RngStream rng(c.seed, r);
    Vector b = Vector::Zero(od);
    for (long k = 1; k <= len; ++k) {
      b += w.step(sample_step(mu, rng).matrix());
      if (k % blen == 0) {
        sums[r].push_back(b);
        b.setZero();
      }
    }
  });
  std::vector<Vector> flat;
  for (const auto& v : sums) flat.insert(flat.end(), v.begin(), v.end());
  const CovarianceEstimate bm = sigma_from_batch_sums(flat, blen);
  const ReducedCovariance red = covariance_reduction(s.sigma_hat);
  json summary{{"cocycle", to_string(c.cocycle)},
               {"burnin", c.burnin},
               {"sigma_series", to_json(s.sigma_hat)},
               {"sigma_series_stderr", to_json(s.stderr_)},
               {"terms_used", s.truncation},
               {"clipped", s.clipped},
               {"warnings", s.warnings},
               {"sigma_batch_means", to_json(bm.sigma_hat)},
               {"sigma_batch_means_stderr", to_json(bm.stderr_)},
               {"batch_len", blen},
               {"reduction_m", red.m},
               {"reduction_a", to_json(red.a)},
               {"reduction_zero", red.zero}};
  return {csv.str(), summary, {}};
}

Produced run_clt_rate(const ExperimentConfig& c, const AtomicMeasure& mu) {
  const CltRateResult r = clt_rate(mu, c.cocycle, c.n, c.replicates, c.burnin, c.seed);
  Csv csv("clt_rate", {"n", "distance", "method", "samples", "seed"});
  const long samples = r.method == "w1_exact" ? std::min<long>(256, c.replicates) : c.replicates;
  for (const auto& p : r.points) csv.row(p.n, p.w1, r.method, samples, static_cast<long>(c.seed));
  json summary{{"lambda_hat", to_json(r.lambda_hat)}, {"sigma_hat", to_json(r.sigma_hat)}, {"method", r.method}};
  if (c.n.size() >= 3) summary["fit"] = {{"slope", r.fit.slope}, {"intercept", r.fit.intercept}, {"r2", r.fit.r2}};
  return {csv.str(), summary, {}};
}

Produced run_asip(const ExperimentConfig& c) {
  const DrivenMartingale mart = martingale_of(c);
  Csv csv("asip", {"n", "replicate", "mode", "sup_dev", "ratio_item1", "ratio_item2"});
  Csv levels("asip_levels", {"n", "replicate", "L", "m", "D", "D1", "D2"});
  json medians = json::array();
  for (long n : c.n) {
    const BlockScheme scheme = block_scheme(n, c.p, c.mode);
    const auto devs = asip_runs(mart, n, c.p, c.mode, c.replicates, c.seed);
    std::vector<double> r1, r2;
    for (std::size_t r = 0; r < devs.size(); ++r) {
      const AsipDeviation& d = devs[r];
      csv.row(d.n, static_cast<long>(r), to_string(c.mode), d.sup_dev, d.ratio_item1, d.ratio_item2);
      for (std::size_t l = 0; l < d.levels.size(); ++l)
        levels.row(d.n, static_cast<long>(r), d.levels[l].L, scheme.levels[l].m, d.levels[l].d, d.levels[l].d1,
                   d.levels[l].d2);
      r1.push_back(d.ratio_item1);
      r2.push_back(d.ratio_item2);
    }
    auto med = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size();
      return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    };
    medians.push_back({{"n", scheme.horizon()}, {"median_ratio_item1", med(r1)}, {"median_ratio_item2", med(r2)}});
  }
  return {csv.str(), {{"mode", to_string(c.mode)}, {"p", c.p}, {"medians", medians}},
          {{"levels", levels.str()}}};
}

Produced run_contraction(const ExperimentConfig& c, const AtomicMeasure& mu) {
  Csv csv("contraction", {"section", "k", "estimate", "stderr"});
  json idx = json::array();
  for (long n0 : c.n) {
    const IndexEstimate e = contraction_index(mu, static_cast<int>(n0), 64, c.replicates, c.seed);
    csv.row("index", n0, e.index, 0.0);
    idx.push_back({{"n0", n0}, {"index_hat", e.index}, {"pairs", e.pairs_used}, {"clipped", e.clipped}});
  }
  json summary{{"index", idx}};
  if (mu.dim() >= 2) {
    const long n = c.n.back();
    const DecayCurve dc = proximality_decay(mu, ProjPoint::basis(mu.dim(), 0),
                                            ProjPoint(Vector::Ones(mu.dim())), n, c.replicates, c.seed);
    for (long k = 1; k <= n; ++k) csv.row("decay", k, dc.median_log_dist[static_cast<std::size_t>(k - 1)], 0.0);
    summary["decay"] = {{"delta_hat", dc.delta_hat}, {"slope", dc.slope}, {"p_value", dc.p_value},
                        {"saturated", dc.saturated}, {"fit_from", dc.fit_from}};
    for (long k = 1; k <= std::min<long>(n, 16); ++k) {
      const CouplingEstimate ce =
          coupling_coefficient(mu, c.cocycle == CocycleKind::iwasawa ? CocycleKind::iwasawa : CocycleKind::norm_proj,
                               k, 1.0, c.replicates, c.seed);
      csv.row("coupling", k, ce.value, ce.stderr_);
    }
  }
  return {csv.str(), summary, {}};
}

Produced run_fiber(const ExperimentConfig& c, const AtomicMeasure& mu) {
  Csv csv("fiber", {"n", "plus", "minus", "observations"});
  json rows = json::array();
  for (long n : c.n) {
    const FiberOccupation f = fiber_occupation(mu, Flag::identity(mu.dim()), n, c.seed);
    csv.row(n, f.plus, f.minus, f.observations);
    rows.push_back({{"n", n}, {"plus", f.plus}, {"minus", f.minus}});
  }
  return {csv.str(), {{"occupation", rows}, {"burnin_fraction", 0.1}}, {}};
}

Produced run_fuk_nagaev(const ExperimentConfig& c) {
  const DrivenMartingale mart = martingale_of(c);
  const long n = c.n.front();
  const double sigma = std::sqrt(mart.variance());
  const std::vector<double> maxima = running_maxima(mart, n, c.replicates, c.seed);
  const double unit = sigma * std::sqrt(static_cast<double>(n));
  FukNagaevParams params{n, sigma, c.p, 1.0};
  const double x0 = 2.0 * unit;
  params.c_p = calibrate_cp(params, x0, maximal_tail_from_maxima(maxima, x0).ci.hi);
  Csv csv("fuk_nagaev", {"x", "role", "empirical", "wilson_hi", "bound_first_term", "bound_second_term", "bound"});
  bool all_valid = true;
  for (double mult : {2.0, 2.5, 3.0, 3.5, 4.0, 4.5}) {
    const double x = mult * unit;
    const TailEstimate t = maximal_tail_from_maxima(maxima, x);
    const FukNagaevBound b = fuk_nagaev_bound(params, x);
    const bool calib = mult == 2.0;
    if (!calib) all_valid = all_valid && t.ci.hi <= b.value;
    csv.row(x, calib ? "calibration" : "validation", t.fraction, t.ci.hi, b.first, b.second, b.value);
  }
  return {csv.str(), {{"n", n}, {"sigma", sigma}, {"c_p", params.c_p}, {"x0", x0}, {"all_validated", all_valid}},
          {}};
}

Produced run_cocycle_check(const ExperimentConfig& c, const AtomicMeasure& mu) {
  const int d = mu.dim();
  Csv csv("cocycle_check", {"trial", "norm_residual", "iwasawa_residual", "det_residual"});
  double max_norm = 0.0, max_iw = 0.0, max_det = 0.0;
  for (long t = 0; t < c.replicates; ++t) {
    RngStream rng(c.seed, static_cast<std::uint64_t>(t));
    auto product = [&](int len) {
      Matrix m = Matrix::Identity(d, d);
      for (int i = 0; i < len; ++i) m = sample_step(mu, rng).matrix() * m;
      return GroupElement(m);
    };
    const GroupElement g = product(1 + static_cast<int>(rng.next_u64() % 8));
    const GroupElement h = product(1 + static_cast<int>(rng.next_u64() % 8));
    const double rn = d >= 1 ? cocycle_identity_residual(CocycleKind::norm_proj, g, h, random_proj_point(rng, d)) : 0.0;
    const Flag eta = random_flag(rng, d);
    const double ri = cocycle_identity_residual(CocycleKind::iwasawa, g, h, eta);
    const double rd = std::fabs(iwasawa_cocycle(g, eta).sum() - std::log(std::fabs(g.matrix().determinant())));
    csv.row(t, rn, ri, rd);
    max_norm = std::max(max_norm, rn);
    max_iw = std::max(max_iw, ri);
    max_det = std::max(max_det, rd);
  }
  const Kappa0Estimate k0 = kappa0_estimate(mu, CocycleKind::norm_proj, c.p, 1000, c.seed);
  return {csv.str(),
          {{"max_norm_residual", max_norm},
           {"max_iwasawa_residual", max_iw},
           {"max_det_residual", max_det},
           {"kappa0_moment_lower_bound", k0.moment},
           {"kappa0_pairs", k0.pairs}},
          {}};
}

}  // namespace

RunOutputs run_experiment(const ExperimentConfig& c) {
  validate(c);
  set_workers(c.workers);
  const auto t0 = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw ConfigError("out: cannot create " + c.out);

  Produced prod;
  switch (c.experiment) {
    case ExperimentKind::asip: prod = run_asip(c); break;
    case ExperimentKind::fuk_nagaev: prod = run_fuk_nagaev(c); break;
    default: {
      const AtomicMeasure mu = load_measure(c.measure);
      switch (c.experiment) {
        case ExperimentKind::simulate: prod = run_simulate(c, mu); break;
        case ExperimentKind::lyapunov: prod = run_lyapunov(c, mu); break;
        case ExperimentKind::sigma: prod = run_sigma(c, mu); break;
        case ExperimentKind::clt_rate: prod = run_clt_rate(c, mu); break;
        case ExperimentKind::contraction: prod = run_contraction(c, mu); break;
        case ExperimentKind::fiber: prod = run_fiber(c, mu); break;
        case ExperimentKind::cocycle_check: prod = run_cocycle_check(c, mu); break;
        default: break;
      }
    }
  }

  const std::string stem = to_string(c.experiment) + "_" + std::to_string(c.seed);
  Outputs files(c.out);
  RunOutputs out;
  out.csv = files.write(stem + ".csv", prod.csv);
  for (const auto& [suffix, content] : prod.extra) out.extra.push_back(files.write(stem + "_" + suffix + ".csv", content));
  prod.summary["experiment"] = to_string(c.experiment);
  prod.summary["seed"] = c.seed;
  out.summary = files.write(stem + ".json", prod.summary.dump(2) + "\n");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_json(c))));
  const json manifest{{"config", json::parse(canonical_json(c))},
                      {"config_hash", hash},
                      {"version", LRW_VERSION},
                      {"wall_time_s", wall},
                      {"workers", c.workers}};
  out.manifest = files.write(stem + ".manifest.json", manifest.dump(2) + "\n");
  files.commit();
  return out;
}

}  // namespace lrw
