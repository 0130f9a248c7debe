#include "lrw/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "lrw/error.hpp"

namespace lrw {

AtomicMeasure::AtomicMeasure(int dim, std::vector<Atom> atoms) : dim_(dim), atoms_(std::move(atoms)) {
  if (dim_ < 1) throw ValidationError("measure dimension must be positive");
  if (atoms_.empty()) throw ValidationError("measure has no atoms");
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (a.g.dim() != dim_) throw ValidationError("atom dimension differs from measure dimension");
    if (!(a.weight > 0.0 && a.weight <= 1.0 + 1e-9)) throw ValidationError("atom weight outside (0, 1]");
    total += a.weight;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw ValidationError("weights do not sum to 1");
  double acc = 0.0;
  for (Atom& a : atoms_) {
    a.weight /= total;
    acc += a.weight;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;
}

std::size_t AtomicMeasure::sample_index(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
}

const GroupElement& sample_step(const AtomicMeasure& mu, RngStream& rng) {
  return mu.atoms()[mu.sample_index(rng)].g;
}

AtomicMeasure parse_measure(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  int dim = 0;
  std::vector<std::pair<double, Matrix>> raw;
  try {
    dim = j.at("dim").get<int>();
    if (dim < 1) throw ValidationError("dim must be positive");
    for (const auto& a : j.at("atoms")) {
      const auto& rows = a.at("m");
      if (!rows.is_array() || static_cast<int>(rows.size()) != dim) throw ParseError("atom matrix must have dim rows");
      Matrix m(dim, dim);
      for (int r = 0; r < dim; ++r) {
        const auto& row = rows.at(r);
        if (!row.is_array() || static_cast<int>(row.size()) != dim) throw ParseError("atom row must have dim entries");
        for (int c = 0; c < dim; ++c) m(r, c) = row.at(c).get<double>();
      }
      raw.emplace_back(a.at("w").get<double>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  std::vector<Atom> atoms;
  for (auto& [w, m] : raw) atoms.push_back({w, GroupElement(std::move(m))});
  return AtomicMeasure(dim, std::move(atoms));
}

AtomicMeasure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open measure file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_measure(ss.str());
}

std::string measure_to_json(const AtomicMeasure& mu) {
  nlohmann::json j;
  j["dim"] = mu.dim();
  j["atoms"] = nlohmann::json::array();
  for (const Atom& a : mu.atoms()) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < mu.dim(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < mu.dim(); ++c) row.push_back(a.g.matrix()(r, c));
      rows.push_back(row);
    }
    j["atoms"].push_back({{"w", a.weight}, {"m", rows}});
  }
  return j.dump();
}

std::vector<std::size_t> step_indices(const AtomicMeasure& mu, std::size_t n, std::uint64_t seed,
                                      std::uint64_t replicate) {
  RngStream rng(seed, replicate);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = mu.sample_index(rng);
  return idx;
}

WalkPath walk(const AtomicMeasure& mu, std::size_t n, std::uint64_t seed, Side side, std::uint64_t replicate) {
  if (n < 1) throw ValidationError("walk length must be at least 1");
  WalkPath path{step_indices(mu, n, seed, replicate), {}, {}, seed, side};
  path.steps.reserve(n);
  path.products.reserve(n);
  Matrix cur = Matrix::Identity(mu.dim(), mu.dim());
  double log_scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const GroupElement& y = mu.atoms()[path.atom_index[k]].g;
    path.steps.push_back(y);
    cur = side == Side::left ? Matrix(y.matrix() * cur) : Matrix(cur * y.matrix());
    const double s = op_norm(cur);
    cur /= s;
    log_scale += std::log(s);
    path.products.push_back({cur, log_scale});
  }
  return path;
}

}  // namespace lrw
