#include "ment/pipeline.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "ment/errors.hpp"
#include "ment/io.hpp"

namespace ment {

using Eigen::Index;
using Eigen::VectorXd;
using nlohmann::json;

const char* to_string(BasisChoice b) {
  return b == BasisChoice::kCanonical ? "canonical" : "standard";
}

BasisChoice parse_basis_choice(const std::string& tag) {
  if (tag == "canonical") return BasisChoice::kCanonical;
  if (tag == "standard") return BasisChoice::kStandard;
  throw ValidationError("unknown basis '" + tag + "' (expected canonical or standard)");
}

namespace {

std::size_t metric_slot(const Metric& m, std::size_t count) {
  std::size_t i = 0;
  switch (m.kind) {
    case MetricKind::kTraceVariation:
      i = 0;
      break;
    case MetricKind::kMaxDirectional:
      i = 1;
      break;
    case MetricKind::kModeWise:
      i = 2 + static_cast<std::size_t>(m.mode);
      break;
  }
  if (m.kind == MetricKind::kModeWise && (m.mode < 0 || i >= count))
    throw ValidationError("metric " + to_string(m) + " is not available for this embedding");
  return i;
}

}  // namespace

const DistanceMatrix& Analysis::distance(const Metric& m) const {
  return distances[metric_slot(m, distances.size())];
}

const Trajectory& Analysis::trajectory(const Metric& m) const {
  return trajectories[metric_slot(m, trajectories.size())];
}

std::vector<VectorXd> Analysis::mode_curves() const {
  std::vector<VectorXd> out;
  for (std::size_t i = 2; i < trajectories.size(); ++i) out.push_back(trajectories[i].coords.col(0));
  return out;
}

Analysis analyze_embedding(const EmbeddingSeries& Y, const PairSet& pairs, Index c,
                           BasisChoice basis) {
  Y.validate();
  if (c < 1) throw ValidationError("trajectory dimension c must be >= 1");
  Analysis a;
  if (basis == BasisChoice::kCanonical) {
    a.basis = aggregate_operator(Y, pairs);
  } else {
    a.basis = standard_basis(Y.d());
    a.basis.pairs = pairs;
  }
  a.distances = all_distance_matrices(Y, a.basis);
  for (const auto& D : a.distances) a.trajectories.push_back(cmds(D, c));
  return a;
}

void PipelineConfig::validate() const {
  if (preset.empty() == input.empty())
    throw ValidationError("config: give exactly one of a preset or an input path");
  if (!preset.empty() && preset != "dataset1" && preset != "dataset2")
    throw ValidationError("config: unknown preset '" + preset + "'");
  if (input_format != "edge-triples" && input_format != "per-snapshot")
    throw ValidationError("config: input_format must be edge-triples or per-snapshot");
  if (n < 2) throw ValidationError("config: n must be >= 2");
  if (d < 1) throw ValidationError("config: d must be >= 1");
  if (c < 1) throw ValidationError("config: c must be >= 1");
  if (T < 0) throw ValidationError("config: T must be >= 0");
  if (flavor != "modified" && flavor != "original")
    throw ValidationError("config: flavor must be modified or original");
  parse_basis_choice(basis);
  pair_set(2 + (pairs.rfind("window:", 0) == 0 ? 1 : 0));
  std::set<std::string> seen;
  for (const auto& m : metrics) {
    const Metric parsed = parse_metric(m);
    if (parsed.kind == MetricKind::kModeWise && parsed.mode >= d)
      throw ValidationError("config: metric " + m + " exceeds d = " + std::to_string(d));
    if (!seen.insert(m).second) throw ValidationError("config: duplicate metric " + m);
  }
  if (K < 0 || min_separation < 0 || tolerance < 0)
    throw ValidationError("config: K, min_separation and tolerance must be >= 0");
  if (matching != "greedy" && matching != "optimal")
    throw ValidationError("config: matching must be greedy or optimal");
  if (attribution_pairs != "adjacent" && attribution_pairs != "first")
    throw ValidationError("config: attribution_pairs must be adjacent or first");
  if (top_k < 0) throw ValidationError("config: top_k must be >= 0");
  if (output.empty()) throw ValidationError("config: output directory is empty");
}

PairSet PipelineConfig::pair_set(Index T) const {
  if (pairs == "all") return PairSet::all_pairs(T);
  if (pairs == "adjacent") return PairSet::adjacent_pairs(T);
  if (pairs.rfind("window:", 0) == 0) {
    const std::string w = pairs.substr(7);
    if (w.empty() || w.find_first_not_of("0123456789") != std::string::npos)
      throw ValidationError("config: window width must be a positive integer");
    return PairSet::window_pairs(T, std::stol(w));
  }
  throw ValidationError("config: pairs must be all, adjacent or window:W");
}

FusionOptions PipelineConfig::fusion() const {
  FusionOptions f;
  f.K = K;
  f.min_separation = min_separation;
  f.tolerance = tolerance;
  f.matching = matching == "optimal" ? MatchRule::kOptimal : MatchRule::kGreedy;
  return f;
}

std::string PipelineConfig::to_json() const {
  json j;
  j["preset"] = preset;
  j["input"] = input;
  j["input_format"] = input_format;
  j["manifest"] = manifest;
  j["T"] = T;
  j["n"] = n;
  j["d"] = d;
  j["c"] = c;
  j["flavor"] = flavor;
  j["basis"] = basis;
  j["pairs"] = pairs;
  j["metrics"] = metrics;
  j["K"] = K;
  j["min_separation"] = min_separation;
  j["tolerance"] = tolerance;
  j["matching"] = matching;
  j["attribution_pairs"] = attribution_pairs;
  j["top_k"] = top_k;
  j["seed"] = seed;
  return j.dump(2);  // keys come out sorted, so the dump is canonical
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  PipelineConfig c;
  try {
    c.preset = j.value("preset", c.preset);
    c.input = j.value("input", c.input);
    c.input_format = j.value("input_format", c.input_format);
    c.manifest = j.value("manifest", c.manifest);
    c.T = j.value("T", c.T);
    c.n = j.value("n", c.n);
    c.d = j.value("d", c.d);
    c.c = j.value("c", c.c);
    c.flavor = j.value("flavor", c.flavor);
    c.basis = j.value("basis", c.basis);
    c.pairs = j.value("pairs", c.pairs);
    c.metrics = j.value("metrics", c.metrics);
    c.K = j.value("K", c.K);
    c.min_separation = j.value("min_separation", c.min_separation);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.matching = j.value("matching", c.matching);
    c.attribution_pairs = j.value("attribution_pairs", c.attribution_pairs);
    c.top_k = j.value("top_k", c.top_k);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: wrong field type: ") + e.what());
  }
  return c;
}

std::string PipelineConfig::hash() const { return sha256_hex(to_json()).substr(0, 16); }

int thread_count() {
  const char* v = std::getenv("MENT_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long t = std::strtol(v, &end, 10);
  if (*end != '\0' || t < 1 || t > 1024)
    throw ValidationError("MENT_THREADS must be an integer in [1, 1024]");
  return static_cast<int>(t);
}

}  // namespace ment
