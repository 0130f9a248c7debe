#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "lrw/error.hpp"
#include "lrw/experiments.hpp"

namespace {

std::vector<long> parse_grid(const std::string& s) {
  std::vector<long> out;
  std::string cell;
  std::stringstream ss(s);
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(cell, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != cell.size()) throw lrw::ConfigError("n: not an integer: '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lrw::ConfigError("config: file not found: " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Flags {
  std::string measure, martingale, cocycle, n, mode, out, config;
  long replicates = 0, burnin = 0;
  std::uint64_t seed = 0;
  double p = 0.0;
  int workers = 0;
};

void add_run_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--measure", f.measure, "measure JSON file");
  sub->add_option("--martingale", f.martingale, "martingale JSON file (default: Rademacher)");
  sub->add_option("--cocycle", f.cocycle, "norm | iwasawa | cartan");
  sub->add_option("--n", f.n, "comma-separated increasing grid");
  sub->add_option("--replicates", f.replicates);
  sub->add_option("--seed", f.seed);
  sub->add_option("--p", f.p, "moment exponent in (2, 3]");
  sub->add_option("--mode", f.mode, "as | l1");
  sub->add_option("--burnin", f.burnin);
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--config", f.config, "JSON config; explicit flags override it");
  sub->add_option("--workers", f.workers, "OpenMP threads (0: default)");
}

lrw::ExperimentConfig build_config(CLI::App* sub, const Flags& f, lrw::ExperimentKind kind) {
  lrw::ExperimentConfig c;
  if (!f.config.empty()) c = lrw::config_from_json(slurp(f.config), c);
  c.experiment = kind;
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  if (given("--measure")) c.measure = f.measure;
  if (given("--martingale")) c.martingale = f.martingale;
  if (given("--cocycle")) {
    try {
      c.cocycle = lrw::parse_cocycle_kind(f.cocycle);
    } catch (const lrw::InvalidKind& e) {
      throw lrw::ConfigError(std::string("cocycle: ") + e.what());
    }
  }
  if (given("--n")) c.n = parse_grid(f.n);
  if (given("--replicates")) c.replicates = f.replicates;
  if (given("--seed")) c.seed = f.seed;
  if (given("--p")) c.p = f.p;
  if (given("--mode")) c.mode = lrw::parse_asip_mode(f.mode);
  if (given("--burnin")) c.burnin = f.burnin;
  if (given("--out")) c.out = f.out;
  if (given("--workers")) c.workers = f.workers;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lrw: limit theorems for linear random walks"};
  app.set_version_flag("--version", LRW_VERSION);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, lrw::ExperimentKind>> runs{
      {"simulate", lrw::ExperimentKind::simulate},
      {"estimate-lyapunov", lrw::ExperimentKind::lyapunov},
      {"estimate-sigma", lrw::ExperimentKind::sigma},
      {"verify-clt-rate", lrw::ExperimentKind::clt_rate},
      {"verify-asip", lrw::ExperimentKind::asip},
      {"check-contraction", lrw::ExperimentKind::contraction},
      {"check-fiber", lrw::ExperimentKind::fiber},
      {"check-fuk-nagaev", lrw::ExperimentKind::fuk_nagaev},
      {"check-cocycle", lrw::ExperimentKind::cocycle_check}};

  Flags flags;
  std::vector<std::pair<CLI::App*, lrw::ExperimentKind>> subs;
  for (const auto& [name, kind] : runs) {
    CLI::App* sub = app.add_subcommand(name);
    add_run_flags(sub, flags);
    subs.emplace_back(sub, kind);
  }
  std::string csv, xcol, ycol;
  CLI::App* fit = app.add_subcommand("fit-rate", "log-log least squares on two CSV columns");
  fit->add_option("--csv", csv)->required();
  fit->add_option("--x", xcol)->required();
  fit->add_option("--y", ycol)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) {
      const lrw::RateFit f = lrw::fit_rate_csv(csv, xcol, ycol);
      std::printf("{\"slope\": %s, \"intercept\": %s, \"r2\": %s, \"points\": %zu}\n",
                  lrw::format_double(f.slope).c_str(), lrw::format_double(f.intercept).c_str(),
                  lrw::format_double(f.r2).c_str(), f.points.size());
      return 0;
    }
    for (const auto& [sub, kind] : subs) {
      if (!sub->parsed()) continue;
      const lrw::RunOutputs out = lrw::run_experiment(build_config(sub, flags, kind));
      std::printf("%s\n%s\n", out.csv.c_str(), out.summary.c_str());
      for (const auto& e : out.extra) std::printf("%s\n", e.c_str());
      std::printf("%s\n", out.manifest.c_str());
    }
    return 0;
  } catch (const lrw::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.numerical() ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
