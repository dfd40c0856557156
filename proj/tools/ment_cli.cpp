// ment: synth | embed | distances | trajectories | attribute | cpd | study | pipeline
//
// Stages share one output directory. Each stage reads what the previous one
// wrote there, and config.json plus manifest.json travel with the results.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ment/attribution.hpp"
#include "ment/changepoint.hpp"
#include "ment/embedding.hpp"
#include "ment/errors.hpp"
#include "ment/evaluation.hpp"
#include "ment/geometry.hpp"
#include "ment/io.hpp"
#include "ment/model.hpp"
#include "ment/pipeline.hpp"
#include "ment/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ment;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string eigen_version() {
  std::ostringstream os;
  os << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  return os.str();
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct Bundle {
  fs::path dir;
  PipelineConfig cfg;
  std::string hash;

  fs::path at(const std::string& rel) const { return dir / rel; }

  // Fails with the name of the stage that produces `rel`.
  fs::path need(const std::string& rel, const std::string& stage) const {
    const fs::path p = at(rel);
    if (!fs::exists(p))
      throw ValidationError("missing " + p.string() + "; run `ment " + stage + " --out " +
                            dir.string() + "` first");
    return p;
  }

  void write(const std::string& rel, const std::string& text) const { write_text(at(rel), text); }

  std::string csv_header() const { return "# config_hash=" + hash + "\n"; }

  void write_config() const { write("config.json", cfg.to_json() + "\n"); }

  // Lists every file in the bundle with its checksum.
  void write_manifest() const {
    json files = json::array();
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths)
      files.push_back({{"path", fs::relative(p, dir).generic_string()},
                       {"bytes", fs::file_size(p)},
                       {"sha256", file_sha256(p)}});
    json j;
    j["config"] = json::parse(cfg.to_json());
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    j["versions"] = {{"ment", kVersion}, {"eigen", eigen_version()}, {"compiler", __VERSION__}};
    j["files"] = files;
    write("manifest.json", j.dump(2) + "\n");
  }
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

std::vector<Metric> selected_metrics(const PipelineConfig& cfg) {
  std::vector<Metric> out;
  for (const auto& tag : cfg.metrics) out.push_back(parse_metric(tag));
  return out;
}

ModeBasis basis_for(const EmbeddingSeries& Y, const PipelineConfig& cfg) {
  if (parse_basis_choice(cfg.basis) == BasisChoice::kStandard) {
    ModeBasis b = standard_basis(Y.d());
    b.pairs = cfg.pair_set(Y.T());
    return b;
  }
  return aggregate_operator(Y, cfg.pair_set(Y.T()));
}

EmbeddingSeries load_embedding(const Bundle& b) {
  return read_embedding_binary(b.need("embedding/embedding.bin", "embed"));
}

std::vector<std::string> load_node_ids(const Bundle& b) {
  std::vector<std::string> ids;
  std::istringstream in(read_text(b.need("snapshots/nodes.txt", "embed")));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ids.push_back(line);
  return ids;
}

DistanceMatrix load_distance(const Bundle& b, const Metric& m) {
  const std::string tag = to_string(m);
  std::ifstream in(b.need("distances/" + tag + ".csv", "distances"));
  return distance_matrix_from_squared(read_matrix_csv(in), m);
}

// ---------------------------------------------------------------------------

void stage_synth(const Bundle& b) {
  if (b.cfg.preset.empty())
    throw ValidationError("synth needs --preset; ingested data goes straight to `ment embed --input`");
  const LatentModel model = preset_by_name(b.cfg.preset);
  const SampledNetwork net = sample_dynamic_sbm(model, b.cfg.n, b.cfg.seed);
  std::ostringstream edges, nodes;
  edges << b.csv_header();
  export_edge_triples(edges, net.snapshots);
  export_manifest(nodes, net.snapshots);
  b.write("snapshots/edges.txt", edges.str());
  b.write("snapshots/nodes.txt", nodes.str());
  b.write("preset.json", preset_json(model) + "\n");
  json truth;
  truth["T"] = model.T;
  truth["change_times"] = model.change_times();
  truth["communities"] = net.latent.community;
  truth["config_hash"] = b.hash;
  b.write("truth.json", truth.dump(2) + "\n");
  std::cerr << "synth: " << model.name << ", n = " << b.cfg.n << ", T = " << model.T << '\n';
}

SnapshotSeries load_snapshots(const Bundle& b) {
  IngestResult r;
  if (!b.cfg.input.empty()) {
    const fs::path manifest = b.cfg.manifest;
    r = b.cfg.input_format == "per-snapshot" ? ingest_snapshot_files(b.cfg.input, manifest, b.cfg.T)
                                             : ingest_edge_triples(b.cfg.input, manifest, b.cfg.T);
    std::ostringstream nodes;
    export_manifest(nodes, r.series);
    b.write("snapshots/nodes.txt", nodes.str());
  } else {
    const int T = b.cfg.preset.empty() ? b.cfg.T : preset_by_name(b.cfg.preset).T;
    r = ingest_edge_triples(b.need("snapshots/edges.txt", "synth"),
                            b.need("snapshots/nodes.txt", "synth"), T);
  }
  for (const auto& w : r.warnings) warn(w);
  return r.series;
}

void stage_embed(const Bundle& b) {
  const SnapshotSeries series = load_snapshots(b);
  series.validate();
  if (b.cfg.d > series.n) throw ValidationError("d exceeds the number of nodes");
  const TruncatedSVD svd = truncated_svd(series, b.cfg.d);
  for (const auto& w : svd.warnings) warn(w);
  const EmbeddingSeries Y =
      b.cfg.flavor == "original" ? original_uase(svd) : modified_uase(svd, series.n);
  write_embedding_binary(b.at("embedding/embedding.bin"), Y);
  std::ostringstream csv;
  csv << b.csv_header();
  write_embedding_csv(csv, Y, series.node_ids);
  b.write("embedding/embedding.csv", csv.str());
  json scree;
  scree["sigma"] = to_vec(svd.sigma);
  scree["trailing_sigma"] = to_vec(svd.trailing_sigma);
  scree["max_residual"] = svd.max_residual;
  scree["repeated_singular_values"] = svd.repeated_singular_values;
  scree["warnings"] = svd.warnings;
  scree["n"] = series.n;
  scree["T"] = series.T();
  scree["flavor"] = b.cfg.flavor;
  scree["config_hash"] = b.hash;
  b.write("embedding/scree.json", scree.dump(2) + "\n");
  std::cerr << "embed: n = " << series.n << ", T = " << series.T() << ", d = " << b.cfg.d << '\n';
}

void stage_distances(const Bundle& b) {
  const EmbeddingSeries Y = load_embedding(b);
  const ModeBasis basis = basis_for(Y, b.cfg);
  for (const auto& w : basis.warnings) warn(w);
  json jb;
  std::vector<std::vector<double>> cols;
  for (Eigen::Index k = 0; k < basis.d(); ++k) cols.push_back(to_vec(basis.direction(k)));
  jb["basis"] = b.cfg.basis;
  jb["directions"] = cols;
  jb["eigenvalues"] = to_vec(basis.eigenvalues);
  jb["degenerate"] = basis.degenerate;
  jb["warnings"] = basis.warnings;
  jb["pairs"] = b.cfg.pairs;
  jb["config_hash"] = b.hash;
  b.write("distances/basis.json", jb.dump(2) + "\n");
  for (const Metric& m : selected_metrics(b.cfg)) {
    if (m.kind == MetricKind::kModeWise && m.mode >= Y.d())
      throw ValidationError("metric " + to_string(m) + " exceeds the embedding dimension");
    const DistanceMatrix D = distance_matrix(Y, m, &basis);
    std::ostringstream csv;
    csv << b.csv_header();
    write_matrix_csv(csv, D.D2, to_string(m) + "_squared");
    b.write("distances/" + to_string(m) + ".csv", csv.str());
    b.write("distances/" + to_string(m) + ".json", distance_sidecar_json(D, b.hash) + "\n");
  }
}

void stage_trajectories(const Bundle& b) {
  for (const Metric& m : selected_metrics(b.cfg)) {
    const DistanceMatrix D = load_distance(b, m);
    const Trajectory tr = cmds(D, b.cfg.c);
    if (tr.insufficient_positive)
      warn(to_string(m) + ": fewer than c positive Gram eigenvalues");
    std::ostringstream csv;
    csv << b.csv_header();
    write_trajectory_csv(csv, tr);
    b.write("trajectories/" + to_string(m) + ".csv", csv.str());
    json side = json::parse(trajectory_sidecar_json(tr, b.hash));
    try {
      const Conditioning cond = cmds_conditioning(tr.spectrum, 1, static_cast<int>(b.cfg.c));
      side["gap"] = cond.gap;
      side["kappa"] = cond.kappa;
      side["conditioning_degenerate"] = cond.degenerate;
    } catch (const ValidationError& e) {
      side["conditioning_note"] = e.what();
    }
    b.write("trajectories/" + to_string(m) + ".json", side.dump(2) + "\n");
  }
}

std::optional<std::vector<int>> load_truth(const Bundle& b) {
  if (!fs::exists(b.at("truth.json"))) return std::nullopt;
  return json::parse(read_text(b.at("truth.json")))["change_times"].get<std::vector<int>>();
}

void stage_cpd(const Bundle& b) {
  std::vector<ScoreSeries> scores;
  json piecewise = json::array();
  for (const Metric& m : selected_metrics(b.cfg)) {
    if (m.kind != MetricKind::kModeWise) continue;
    std::ifstream in(b.need("trajectories/" + to_string(m) + ".csv", "trajectories"));
    const Eigen::VectorXd psi = read_trajectory_csv(in).col(0);
    scores.push_back(llt_scores(psi, m.mode + 1));
    json fits = json::object();
    for (int order : {0, 1}) {
      const PiecewiseFit f = fit_piecewise(psi, order);
      fits["order" + std::to_string(order)] = {{"knot", f.knot}, {"rss", f.rss}, {"no_signal", f.no_signal}};
    }
    piecewise.push_back({{"metric", to_string(m)}, {"fits", fits}});
  }
  if (scores.empty())
    throw ValidationError("cpd needs mode-wise trajectories; add mode metrics (--metrics mode1,...)");
  const FusionOptions opts = b.cfg.fusion();
  ChangePointReport rep = fuse_topk(streams_from(scores), opts);
  if (const auto truth = load_truth(b)) rep.metrics = evaluate(rep.times(), *truth, opts.tolerance, opts.matching);
  for (const auto& w : rep.warnings) warn(w);
  b.write("changepoints/changepoints.json", changepoint_json(rep, scores, b.hash) + "\n");
  json pw;
  pw["modes"] = piecewise;
  pw["config_hash"] = b.hash;
  b.write("changepoints/piecewise.json", pw.dump(2) + "\n");
  std::ostringstream csv;
  csv << b.csv_header();
  write_scores_csv(csv, scores);
  b.write("changepoints/scores.csv", csv.str());
  std::cerr << "cpd:";
  for (int t : rep.times()) std::cerr << ' ' << t;
  if (rep.metrics) std::cerr << "  (F1 = " << rep.metrics->f1 << ")";
  std::cerr << '\n';
}

std::vector<std::pair<int, int>> parse_pairs(const std::vector<std::string>& specs, int T) {
  std::vector<std::pair<int, int>> out;
  for (const auto& s : specs) {
    const auto comma = s.find(',');
    int t = 0, u = 0;
    try {
      if (comma == std::string::npos) throw std::invalid_argument(s);
      std::size_t used = 0;
      t = std::stoi(s.substr(0, comma), &used);
      u = std::stoi(s.substr(comma + 1));
    } catch (const std::exception&) {
      throw ValidationError("--pair expects 't,s' with 1-based times, got '" + s + "'");
    }
    if (t < 1 || u < 1 || t > T || u > T || t == u)
      throw ValidationError("--pair " + s + " is outside 1.." + std::to_string(T) + " or degenerate");
    out.emplace_back(t, u);
  }
  return out;
}

void stage_attribute(const Bundle& b, const std::vector<std::string>& explicit_pairs) {
  const EmbeddingSeries Y = load_embedding(b);
  const std::vector<std::string> ids = load_node_ids(b);
  const int T = static_cast<int>(Y.T());
  std::vector<std::pair<int, int>> pairs;
  if (!explicit_pairs.empty()) {
    pairs = parse_pairs(explicit_pairs, T);
  } else {
    const json cp = json::parse(read_text(b.need("changepoints/changepoints.json", "cpd")));
    for (const auto& f : cp["fused"]) {
      const int t = f["time"].get<int>();
      if (t < 2) continue;
      pairs.emplace_back(t, b.cfg.attribution_pairs == "first" ? 1 : t - 1);
    }
  }
  const ModeBasis basis = basis_for(Y, b.cfg);
  json index = json::array();
  json bounds = json::object();
  for (const Metric& m : selected_metrics(b.cfg)) {
    const std::string tag = to_string(m);
    if (m.kind == MetricKind::kMaxDirectional) {
      const Trajectory tr = cmds(load_distance(b, m), b.cfg.c);
      const MvSandwichReport r = mv_sandwich_check(tr, Y);
      bounds[tag] = {{"bound", r.bound}, {"max_residual", r.max_residual}, {"holds", r.holds},
                     {"bracket_holds", r.bracket_holds}};
      continue;
    }
    for (const auto& [t, s] : pairs) {
      const AttributionTable tab = attribute(Y, t - 1, s - 1, m, &basis, ids);
      const TopKReport top = top_k_report(tab, b.cfg.top_k);
      const std::string stem = "attribution/" + tag + "_" + std::to_string(t) + "_" + std::to_string(s);
      b.write(stem + ".json", attribution_json(tab, top, b.hash) + "\n");
      std::ostringstream csv;
      csv << b.csv_header();
      write_attribution_csv(csv, tab);
      b.write(stem + ".csv", csv.str());
      index.push_back({{"metric", tag}, {"pair", {t, s}}, {"file", stem + ".json"}});
    }
    const Trajectory tr = cmds(load_distance(b, m), b.cfg.c);
    const BoundReport r = pairwise_bound_check(tr, Y, m, &basis);
    bounds[tag] = {{"c", r.c},
                   {"tail_energy", r.tail_energy},
                   {"pairwise_bound", r.pairwise_bound},
                   {"max_residual", r.max_residual},
                   {"min_slack", r.min_slack},
                   {"aggregated_residual", r.aggregated_residual},
                   {"aggregated_bound", r.aggregated_bound},
                   {"pairwise_holds", r.pairwise_holds},
                   {"aggregated_holds", r.aggregated_holds},
                   {"hypothesis_met", r.hypothesis_met}};
  }
  if (pairs.empty()) warn("attribute: no time pairs to attribute");
  json out;
  out["tables"] = index;
  out["bounds"] = bounds;
  out["config_hash"] = b.hash;
  b.write("attribution/index.json", out.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Option plumbing: flags given on the command line override config.json.

struct ConfigFlags {
  std::string config_file;
  std::string out = "ment_out";
  std::vector<std::function<void(PipelineConfig&)>> overrides;
};

template <typename T>
void flag(CLI::App* app, ConfigFlags& f, const std::string& name, T PipelineConfig::*field,
          const std::string& help) {
  app->add_option_function<T>(
      name, [&f, field](const T& v) { f.overrides.push_back([field, v](PipelineConfig& c) { c.*field = v; }); },
      help);
}

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--out", f.out, "Output bundle directory")->capture_default_str();
  app->add_option("--config", f.config_file, "Config JSON (default: <out>/config.json if present)");
  flag(app, f, "--preset", &PipelineConfig::preset, "Synthetic preset: dataset1 | dataset2");
  flag(app, f, "--input", &PipelineConfig::input, "Edge-triple file or per-snapshot directory");
  flag(app, f, "--input-format", &PipelineConfig::input_format, "edge-triples | per-snapshot");
  flag(app, f, "--manifest", &PipelineConfig::manifest, "Node manifest, one label per line");
  flag(app, f, "--T", &PipelineConfig::T, "Snapshot count for ingested data (0: infer)");
  flag(app, f, "--n", &PipelineConfig::n, "Nodes to sample for presets (default 500)");
  flag(app, f, "-d,--d", &PipelineConfig::d, "Embedding dimension (default 3)");
  flag(app, f, "-c,--c", &PipelineConfig::c, "Trajectory dimension (default 1)");
  flag(app, f, "--flavor", &PipelineConfig::flavor, "UASE flavor: modified | original");
  flag(app, f, "--basis", &PipelineConfig::basis, "Mode basis: canonical | standard");
  flag(app, f, "--pairs", &PipelineConfig::pairs, "Pairs for the mode basis: all | adjacent | window:W");
  flag(app, f, "--metrics", &PipelineConfig::metrics, "Metrics, comma separated (tv,mv,mode1,...)");
  app->get_option("--metrics")->delimiter(',');
  flag(app, f, "-K,--K", &PipelineConfig::K, "Top-K fused change points (default 6)");
  flag(app, f, "--min-sep", &PipelineConfig::min_separation, "Minimum spacing of fused change points");
  flag(app, f, "--tol", &PipelineConfig::tolerance, "Matching tolerance against truth");
  flag(app, f, "--matching", &PipelineConfig::matching, "Truth matching: greedy | optimal");
  flag(app, f, "--attribution-pairs", &PipelineConfig::attribution_pairs,
       "Pairs around detections: adjacent (t, t-1) | first (t, 1)");
  flag(app, f, "--top-k", &PipelineConfig::top_k, "Nodes listed per attribution side");
  flag(app, f, "--seed", &PipelineConfig::seed, "Random seed for synth");
}

Bundle make_bundle(const ConfigFlags& f) {
  Bundle b;
  b.dir = f.out;
  fs::path cfg_path = f.config_file;
  if (cfg_path.empty() && fs::exists(b.dir / "config.json")) cfg_path = b.dir / "config.json";
  if (!cfg_path.empty()) b.cfg = PipelineConfig::from_json(read_text(cfg_path));
  for (const auto& o : f.overrides) o(b.cfg);
  if (cfg_path.empty() && b.cfg.preset.empty() && b.cfg.input.empty())
    throw ValidationError("no bundle at " + b.dir.string() +
                          " (config.json missing); start with `ment synth --preset NAME --out " +
                          b.dir.string() + "` or `ment embed --input FILE --out " + b.dir.string() + "`");
  b.cfg.output = f.out;
  b.cfg.validate();
  b.hash = b.cfg.hash();
  fs::create_directories(b.dir);
  return b;
}

void run_stage(const ConfigFlags& f, const std::function<void(const Bundle&)>& stage) {
  const Bundle b = make_bundle(f);
  stage(b);
  b.write_config();
  b.write_manifest();
}

// ---------------------------------------------------------------------------

std::vector<std::string> csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

void study_recovery(RecoveryOptions o, const std::string& out) {
  o.threads = thread_count();
  const auto results = run_recovery_study(o);
  fs::create_directories(out);
  std::ostringstream csv;
  write_recovery_csv(csv, results);
  write_text(fs::path(out) / "recovery.csv", csv.str());
  json summary = json::array();
  const LatentModel model = preset_by_name(o.preset);
  std::vector<std::string> tags{"tv", "mv"};
  for (int k = 1; k <= model.d; ++k) tags.push_back("mode" + std::to_string(k));
  for (auto n : o.n_grid)
    for (const auto& tag : tags)
      summary.push_back({{"n", n},
                         {"metric", tag},
                         {"median_trajectory_error", median_error(results, n, tag, true)},
                         {"median_distance_error", median_error(results, n, tag, false)}});
  json j;
  j["preset"] = o.preset;
  j["flavor"] = to_string(o.flavor);
  j["basis"] = to_string(o.basis);
  j["trials"] = o.trials;
  j["seed"] = o.seed;
  j["medians"] = summary;
  j["recovery_csv_sha256"] = file_sha256(fs::path(out) / "recovery.csv");
  write_text(fs::path(out) / "recovery_summary.json", j.dump(2) + "\n");
  for (const auto& s : summary)
    std::cout << "n=" << s["n"] << ' ' << s["metric"].get<std::string>()
              << " median trajectory error " << s["median_trajectory_error"] << '\n';
}

void study_detection(DetectionOptions o, const std::string& out) {
  o.threads = thread_count();
  const DetectionStudy st = run_detection_study(o);
  fs::create_directories(out);
  std::ostringstream csv;
  write_detection_csv(csv, st);
  write_text(fs::path(out) / "detection.csv", csv.str());
  json summary = json::array();
  for (const auto& s : st.summary) {
    summary.push_back({{"K", s.K},
                       {"trials", s.trials},
                       {"mean_f1", s.mean_f1},
                       {"mean_mae", s.mean_mae ? json(*s.mean_mae) : json(nullptr)}});
    std::cout << "K=" << s.K << " F1 " << s.mean_f1 << " MAE "
              << (s.mean_mae ? std::to_string(*s.mean_mae) : "n/a") << '\n';
  }
  json j;
  j["preset"] = o.preset;
  j["n"] = o.n;
  j["trials"] = o.trials;
  j["seed"] = o.seed;
  j["min_separation"] = o.fusion.min_separation;
  j["tolerance"] = o.fusion.tolerance;
  j["summary"] = summary;
  j["detection_csv_sha256"] = file_sha256(fs::path(out) / "detection.csv");
  write_text(fs::path(out) / "detection_summary.json", j.dump(2) + "\n");
}

EmbeddingFlavor flavor_from(const std::string& s) {
  if (s == "modified") return EmbeddingFlavor::kModified;
  if (s == "original") return EmbeddingFlavor::kOriginal;
  throw ValidationError("flavor must be modified or original");
}

int run(int argc, char** argv) {
  CLI::App app{"Identifiable temporal trajectories, node attribution and change points for "
               "network snapshot series.\nWorker threads: MENT_THREADS (default 1)."};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::map<std::string, ConfigFlags> flags;
  std::map<std::string, CLI::App*> subs;
  const std::vector<std::pair<std::string, std::string>> stages{
      {"synth", "Sample a preset network series"},
      {"embed", "UASE of the snapshot series (ingests --input if given)"},
      {"distances", "TV, MV and mode-wise distance matrices"},
      {"trajectories", "CMDS trajectories from the distance matrices"},
      {"attribute", "Per-node attribution and bound checks"},
      {"cpd", "Change-point scores and fused detections"},
      {"pipeline", "Run every stage in order"}};
  for (const auto& [name, help] : stages) {
    subs[name] = app.add_subcommand(name, help);
    add_config_flags(subs[name], flags[name]);
  }
  std::vector<std::string> attr_pairs;
  subs["attribute"]->add_option("--pair", attr_pairs, "Explicit time pair 't,s' (1-based); repeatable");

  CLI::App* study = app.add_subcommand("study", "Seeded multi-trial experiments");
  study->require_subcommand(1);
  RecoveryOptions ro;
  std::string ro_out = "ment_study", ro_flavor = "modified", ro_basis = "canonical", ro_grid = "100,300,500";
  CLI::App* rec = study->add_subcommand("recovery", "Trajectory and distance recovery errors over n");
  rec->add_option("--preset", ro.preset, "Preset")->capture_default_str();
  rec->add_option("--n-grid", ro_grid, "Comma-separated node counts")->capture_default_str();
  rec->add_option("--trials", ro.trials, "Trials per n")->capture_default_str();
  rec->add_option("--flavor", ro_flavor, "modified | original")->capture_default_str();
  rec->add_option("--basis", ro_basis, "canonical | standard")->capture_default_str();
  rec->add_option("--seed", ro.seed, "Master seed")->capture_default_str();
  rec->add_option("--out", ro_out, "Output directory")->capture_default_str();

  DetectionOptions dopt;
  std::string do_out = "ment_study", do_grid = "3,6,9", do_matching = "greedy";
  CLI::App* det = study->add_subcommand("detection", "Fused change-point detection over trials");
  det->add_option("--preset", dopt.preset, "Preset")->capture_default_str();
  det->add_option("--n", dopt.n, "Nodes")->capture_default_str();
  det->add_option("--trials", dopt.trials, "Trials")->capture_default_str();
  det->add_option("--K-grid", do_grid, "Comma-separated K values")->capture_default_str();
  det->add_option("--min-sep", dopt.fusion.min_separation, "Minimum spacing")->capture_default_str();
  det->add_option("--tol", dopt.fusion.tolerance, "Matching tolerance")->capture_default_str();
  det->add_option("--matching", do_matching, "greedy | optimal")->capture_default_str();
  det->add_option("--seed", dopt.seed, "Master seed")->capture_default_str();
  det->add_option("--out", do_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*subs["synth"]) run_stage(flags["synth"], stage_synth);
  if (*subs["embed"]) run_stage(flags["embed"], stage_embed);
  if (*subs["distances"]) run_stage(flags["distances"], stage_distances);
  if (*subs["trajectories"]) run_stage(flags["trajectories"], stage_trajectories);
  if (*subs["cpd"]) run_stage(flags["cpd"], stage_cpd);
  if (*subs["attribute"])
    run_stage(flags["attribute"], [&](const Bundle& b) { stage_attribute(b, attr_pairs); });
  if (*subs["pipeline"]) {
    run_stage(flags["pipeline"], [](const Bundle& b) {
      if (b.cfg.input.empty()) stage_synth(b);
      stage_embed(b);
      stage_distances(b);
      stage_trajectories(b);
      bool modes = false;
      for (const Metric& m : selected_metrics(b.cfg)) modes |= m.kind == MetricKind::kModeWise;
      if (!modes) {
        warn("no mode-wise metrics selected; skipping cpd and attribute");
        return;
      }
      stage_cpd(b);
      stage_attribute(b, {});
    });
  }
  if (*rec) {
    ro.flavor = flavor_from(ro_flavor);
    ro.basis = parse_basis_choice(ro_basis);
    ro.n_grid.clear();
    for (const auto& s : csv_list(ro_grid)) {
      try {
        ro.n_grid.push_back(std::stol(s));
      } catch (const std::exception&) {
        throw ValidationError("--n-grid: '" + s + "' is not an integer");
      }
    }
    study_recovery(ro, ro_out);
  }
  if (*det) {
    dopt.K_grid.clear();
    for (const auto& s : csv_list(do_grid)) {
      try {
        dopt.K_grid.push_back(std::stoi(s));
      } catch (const std::exception&) {
        throw ValidationError("--K-grid: '" + s + "' is not an integer");
      }
    }
    if (do_matching != "greedy" && do_matching != "optimal")
      throw ValidationError("--matching must be greedy or optimal");
    dopt.fusion.matching = do_matching == "optimal" ? MatchRule::kOptimal : MatchRule::kGreedy;
    study_detection(dopt, do_out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed artifact: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
}
