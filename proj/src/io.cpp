#include "ment/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "ment/errors.hpp"

namespace ment {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_text(path)); }

// ---------------------------------------------------------------------------
// Ingestion

namespace {

struct LabelMap {
  std::map<std::string, Index> index;
  std::vector<std::string> labels;

  Index get(const std::string& label) {
    auto it = index.find(label);
    if (it != index.end()) return it->second;
    const Index i = static_cast<Index>(labels.size());
    index.emplace(label, i);
    labels.push_back(label);
    return i;
  }
};

LabelMap load_manifest(const fs::path& manifest) {
  LabelMap map;
  if (manifest.empty()) return map;
  std::istringstream in(read_text(manifest));
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string label;
    if (!(ls >> label) || label[0] == '#') continue;
    if (map.index.count(label)) throw ValidationError("manifest lists node '" + label + "' twice");
    map.get(label);
  }
  return map;
}

struct RawEdge {
  int t;
  Index u, v;
};

IngestResult assemble(LabelMap& labels, const std::vector<RawEdge>& edges, int T, int self_loops) {
  IngestResult r;
  r.self_loops_dropped = self_loops;
  const Index n = static_cast<Index>(labels.labels.size());
  if (T < 1) throw ValidationError("ingest: no snapshots (empty input and T not given)");
  if (n < 1) throw ValidationError("ingest: no nodes (empty input and no manifest)");
  r.series.n = n;
  r.series.node_ids = labels.labels;
  r.series.adjacency.assign(T, MatrixXd::Zero(n, n));
  for (const auto& e : edges) {
    double& a = r.series.adjacency[e.t - 1](e.u, e.v);
    if (a != 0.0) {
      ++r.duplicate_edges;
      continue;
    }
    a = 1.0;
    r.series.adjacency[e.t - 1](e.v, e.u) = 1.0;
  }
  if (self_loops) r.warnings.push_back("dropped " + std::to_string(self_loops) + " self-loops");
  if (r.duplicate_edges)
    r.warnings.push_back("merged " + std::to_string(r.duplicate_edges) + " duplicate edges");
  return r;
}

int parse_time(const std::string& tok, const std::string& where) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw ValidationError(where + ": time '" + tok + "' is not a positive integer");
  const long t = std::stol(tok);
  if (t < 1 || t > 1000000) throw ValidationError(where + ": time " + tok + " out of range");
  return static_cast<int>(t);
}

}  // namespace

IngestResult ingest_edge_triples(const fs::path& path, const fs::path& manifest, int T) {
  if (T < 0) throw ValidationError("ingest: T must be >= 0");
  LabelMap labels = load_manifest(manifest);
  std::istringstream in(read_text(path));
  std::vector<RawEdge> edges;
  int self_loops = 0, max_t = 0;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    std::istringstream ls(line);
    std::string ts, u, v, extra;
    if (!(ls >> ts) || ts[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (!(ls >> u >> v) || (ls >> extra)) throw ValidationError(where + ": expected 't u v'");
    const int t = parse_time(ts, where);
    if (T > 0 && t > T)
      throw ValidationError(where + ": time " + std::to_string(t) + " exceeds T = " + std::to_string(T));
    max_t = std::max(max_t, t);
    const Index a = labels.get(u), b = labels.get(v);
    if (a == b) {
      ++self_loops;
      continue;
    }
    edges.push_back({t, a, b});
  }
  return assemble(labels, edges, T > 0 ? T : max_t, self_loops);
}

IngestResult ingest_snapshot_files(const fs::path& dir, const fs::path& manifest, int T) {
  if (!fs::is_directory(dir)) throw ValidationError(dir.string() + " is not a directory");
  LabelMap labels = load_manifest(manifest);
  std::map<int, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const int t = parse_time(entry.path().stem().string(), entry.path().string());
    if (!files.emplace(t, entry.path()).second)
      throw ValidationError("two snapshot files for t = " + std::to_string(t));
  }
  const int max_t = files.empty() ? 0 : files.rbegin()->first;
  if (T > 0 && max_t > T) throw ValidationError("snapshot file for t = " + std::to_string(max_t) + " exceeds T");
  const int total = T > 0 ? T : max_t;
  std::vector<RawEdge> edges;
  int self_loops = 0;
  for (const auto& [t, path] : files) {
    std::istringstream in(read_text(path));
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
      std::istringstream ls(line);
      std::string u, v, extra;
      if (!(ls >> u) || u[0] == '#') continue;
      if (!(ls >> v) || (ls >> extra))
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 'u v'");
      const Index a = labels.get(u), b = labels.get(v);
      if (a == b) {
        ++self_loops;
        continue;
      }
      edges.push_back({t, a, b});
    }
  }
  IngestResult r = assemble(labels, edges, total, self_loops);
  for (int t = 1; t <= total; ++t)
    if (!files.count(t)) r.warnings.push_back("no file for t = " + std::to_string(t) + "; snapshot left empty");
  return r;
}

void export_edge_triples(std::ostream& os, const SnapshotSeries& series) {
  for (Index t = 0; t < series.T(); ++t) {
    const MatrixXd& a = series.adjacency[t];
    for (Index j = 0; j < series.n; ++j)
      for (Index i = 0; i < j; ++i)
        if (a(i, j) != 0.0) os << t + 1 << ' ' << series.node_ids[i] << ' ' << series.node_ids[j] << '\n';
  }
}

void export_manifest(std::ostream& os, const SnapshotSeries& series) {
  for (const auto& id : series.node_ids) os << id << '\n';
}

// ---------------------------------------------------------------------------
// Embeddings

void write_embedding_csv(std::ostream& os, const EmbeddingSeries& Y,
                         const std::vector<std::string>& node_ids) {
  Y.validate();
  if (static_cast<Index>(node_ids.size()) != Y.n())
    throw ValidationError("write_embedding_csv: node id count differs from n");
  os << "# flavor=" << to_string(Y.flavor) << "\nt,node";
  for (Index k = 0; k < Y.d(); ++k) os << ",dim_" << k + 1;
  os << '\n' << std::setprecision(17);
  for (Index t = 0; t < Y.T(); ++t)
    for (Index i = 0; i < Y.n(); ++i) {
      os << t + 1 << ',' << node_ids[i];
      for (Index k = 0; k < Y.d(); ++k) os << ',' << Y.blocks[t](i, k);
      os << '\n';
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(what + ": cannot parse number '" + s + "'");
  }
}

EmbeddingFlavor parse_flavor(const std::string& s) {
  if (s == "original") return EmbeddingFlavor::kOriginal;
  if (s == "modified") return EmbeddingFlavor::kModified;
  if (s == "latent") return EmbeddingFlavor::kLatent;
  throw ValidationError("unknown embedding flavor '" + s + "'");
}

}  // namespace

EmbeddingSeries read_embedding_csv(std::istream& is, std::vector<std::string>* node_ids) {
  std::string line;
  EmbeddingFlavor flavor = EmbeddingFlavor::kModified;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    if (line.rfind("# flavor=", 0) == 0) {
      flavor = parse_flavor(line.substr(9));
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.size() < 3 || header[0] != "t" || header[1] != "node")
    throw ValidationError("embedding CSV: missing 't,node,dim_1,...' header");
  const Index d = static_cast<Index>(header.size()) - 2;
  std::map<int, std::vector<std::vector<double>>> rows;
  std::vector<std::string> ids;
  std::map<int, std::vector<std::string>> ids_by_t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (static_cast<Index>(cells.size()) != d + 2) throw ValidationError("embedding CSV: ragged row");
    const int t = parse_time(cells[0], "embedding CSV");
    std::vector<double> v;
    for (Index k = 0; k < d; ++k) v.push_back(parse_double(cells[2 + k], "embedding CSV"));
    rows[t].push_back(std::move(v));
    ids_by_t[t].push_back(cells[1]);
  }
  if (rows.empty()) throw ValidationError("embedding CSV: no rows");
  EmbeddingSeries Y;
  Y.flavor = flavor;
  const std::size_t n = rows.begin()->second.size();
  int expect = 1;
  for (const auto& [t, r] : rows) {
    if (t != expect++) throw ValidationError("embedding CSV: times must run 1..T without gaps");
    if (r.size() != n) throw ValidationError("embedding CSV: snapshots differ in node count");
    if (ids_by_t[t] != ids_by_t.begin()->second)
      throw ValidationError("embedding CSV: node order differs between snapshots");
    MatrixXd B(static_cast<Index>(n), d);
    for (std::size_t i = 0; i < n; ++i)
      for (Index k = 0; k < d; ++k) B(static_cast<Index>(i), k) = r[i][k];
    Y.blocks.push_back(std::move(B));
  }
  if (node_ids) *node_ids = ids_by_t.begin()->second;
  return Y;
}

namespace {

constexpr char kMagic[8] = {'M', 'E', 'N', 'T', 'E', 'M', 'B', '1'};

template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw ValidationError("embedding binary: truncated file");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void write_embedding_binary(const fs::path& path, const EmbeddingSeries& Y) {
  Y.validate();
  std::string buf(kMagic, sizeof(kMagic));
  put<std::uint64_t>(buf, static_cast<std::uint64_t>(Y.T()));
  put<std::uint64_t>(buf, static_cast<std::uint64_t>(Y.n()));
  put<std::uint64_t>(buf, static_cast<std::uint64_t>(Y.d()));
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(Y.flavor));
  for (const auto& B : Y.blocks)
    for (Index i = 0; i < B.rows(); ++i)
      for (Index k = 0; k < B.cols(); ++k) put<double>(buf, B(i, k));
  buf += sha256_hex(buf);
  write_text(path, buf);
}

EmbeddingSeries read_embedding_binary(const fs::path& path) {
  const std::string buf = read_text(path);
  if (buf.size() < sizeof(kMagic) + 64 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw ValidationError(path.string() + ": not a MENT embedding file");
  const std::string body = buf.substr(0, buf.size() - 64);
  if (sha256_hex(body) != buf.substr(buf.size() - 64))
    throw ValidationError(path.string() + ": checksum mismatch");
  std::size_t pos = sizeof(kMagic);
  const auto T = take<std::uint64_t>(body, pos);
  const auto n = take<std::uint64_t>(body, pos);
  const auto d = take<std::uint64_t>(body, pos);
  const auto flavor = take<std::uint8_t>(body, pos);
  if (flavor > 2) throw ValidationError(path.string() + ": bad flavor code");
  if (body.size() - pos != T * n * d * sizeof(double))
    throw ValidationError(path.string() + ": payload size does not match header");
  EmbeddingSeries Y;
  Y.flavor = static_cast<EmbeddingFlavor>(flavor);
  for (std::uint64_t t = 0; t < T; ++t) {
    MatrixXd B(static_cast<Index>(n), static_cast<Index>(d));
    for (Index i = 0; i < B.rows(); ++i)
      for (Index k = 0; k < B.cols(); ++k) B(i, k) = take<double>(body, pos);
    Y.blocks.push_back(std::move(B));
  }
  return Y;
}

// ---------------------------------------------------------------------------
// Matrices and trajectories

void write_matrix_csv(std::ostream& os, const MatrixXd& M, const std::string& tag) {
  os << tag;
  for (Index j = 0; j < M.cols(); ++j) os << ',' << j + 1;
  os << '\n' << std::setprecision(17);
  for (Index i = 0; i < M.rows(); ++i) {
    os << i + 1;
    for (Index j = 0; j < M.cols(); ++j) os << ',' << M(i, j);
    os << '\n';
  }
}

MatrixXd read_matrix_csv(std::istream& is) {
  std::string line;
  while (std::getline(is, line) && (line.empty() || line[0] == '#')) {
  }
  if (line.empty()) throw ValidationError("matrix CSV: empty input");
  const Index cols = static_cast<Index>(split_csv(line).size()) - 1;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    if (static_cast<Index>(cells.size()) != cols + 1) throw ValidationError("matrix CSV: ragged row");
    std::vector<double> r;
    for (Index j = 0; j < cols; ++j) r.push_back(parse_double(cells[1 + j], "matrix CSV"));
    rows.push_back(std::move(r));
  }
  MatrixXd M(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < cols; ++j) M(static_cast<Index>(i), j) = rows[i][j];
  return M;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t";
  for (Index k = 0; k < tr.c(); ++k) os << ",dim_" << k + 1;
  os << '\n' << std::setprecision(17);
  for (Index t = 0; t < tr.T(); ++t) {
    os << t + 1;
    for (Index k = 0; k < tr.c(); ++k) os << ',' << tr.coords(t, k);
    os << '\n';
  }
}

MatrixXd read_trajectory_csv(std::istream& is) { return read_matrix_csv(is); }

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string trajectory_sidecar_json(const Trajectory& tr, const std::string& config_hash) {
  json j;
  j["metric"] = to_string(tr.metric);
  j["c"] = tr.c();
  j["T"] = tr.T();
  j["eigenvalues"] = to_vec(tr.eigenvalues);
  j["spectrum"] = to_vec(tr.spectrum);
  j["strain"] = tr.strain;
  j["positive_count"] = tr.positive_count;
  j["insufficient_positive"] = tr.insufficient_positive;
  j["indefinite"] = tr.indefinite;
  j["config_hash"] = config_hash;
  return j.dump(2);
}

std::string distance_sidecar_json(const DistanceMatrix& D, const std::string& config_hash) {
  json j;
  j["metric"] = to_string(D.metric);
  j["T"] = D.T();
  j["gram_spectrum"] = to_vec(D.gram_spectrum);
  j["config_hash"] = config_hash;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Reports

std::string attribution_json(const AttributionTable& table, const TopKReport& top,
                             const std::string& config_hash) {
  auto side = [](const std::vector<RankedNode>& v) {
    json a = json::array();
    for (const auto& r : v) a.push_back({{"node", r.id}, {"index", r.node}, {"score", r.value}});
    return a;
  };
  json j;
  j["pair"] = {table.t + 1, table.s + 1};
  j["metric"] = to_string(table.metric);
  j["distance_squared"] = table.distance_squared;
  j["topK"] = side(top.positive);
  j["bottomK"] = side(top.negative);
  j["config_hash"] = config_hash;
  return j.dump(2);
}

void write_attribution_csv(std::ostream& os, const AttributionTable& table) {
  os << "node,index,value\n" << std::setprecision(17);
  for (Index i = 0; i < table.values.size(); ++i)
    os << table.node_ids[i] << ',' << i << ',' << table.values(i) << '\n';
}

std::string changepoint_json(const ChangePointReport& rep, const std::vector<ScoreSeries>& scores,
                             const std::string& config_hash) {
  json j;
  j["K"] = rep.options.K;
  j["min_separation"] = rep.options.min_separation;
  j["tolerance"] = rep.options.tolerance;
  j["matching"] = rep.options.matching == MatchRule::kGreedy ? "greedy" : "optimal";
  j["empty_pool"] = rep.empty_pool;
  j["warnings"] = rep.warnings;
  json fused = json::array();
  for (const auto& c : rep.fused) fused.push_back({{"time", c.time}, {"score", c.score}, {"stream", c.stream}});
  j["fused"] = fused;
  json prov = json::array();
  for (const auto& p : rep.provenance) {
    json nom = json::array();
    for (const auto& c : p.nominated) nom.push_back({{"time", c.time}, {"score", c.score}});
    prov.push_back({{"stream", p.stream}, {"family", p.family}, {"family_median", p.family_median},
                    {"nominated", nom}});
  }
  j["streams"] = prov;
  json raw = json::array();
  for (const auto& s : scores)
    raw.push_back({{"mode", s.mode},
                   {"scale", s.scale},
                   {"degenerate", s.degenerate},
                   {"variances",
                    {{"observation", s.variances.observation},
                     {"level", s.variances.level},
                     {"slope", s.variances.slope}}},
                   {"level", to_vec(s.level)},
                   {"slope", to_vec(s.slope)}});
  j["scores"] = raw;
  if (rep.metrics) {
    j["metrics"] = {{"matched", rep.metrics->matched},
                    {"precision", rep.metrics->precision},
                    {"recall", rep.metrics->recall},
                    {"f1", rep.metrics->f1},
                    {"mae", rep.metrics->mae ? json(*rep.metrics->mae) : json(nullptr)}};
  }
  j["config_hash"] = config_hash;
  return j.dump(2);
}

void write_scores_csv(std::ostream& os, const std::vector<ScoreSeries>& scores) {
  os << "t";
  for (const auto& s : scores) os << ",mode" << s.mode << "_level,mode" << s.mode << "_slope";
  os << '\n' << std::setprecision(17);
  const Index T = scores.empty() ? 0 : scores.front().level.size();
  for (Index t = 0; t < T; ++t) {
    os << t + 1;
    for (const auto& s : scores) os << ',' << s.level(t) << ',' << s.slope(t);
    os << '\n';
  }
}

std::string preset_json(const LatentModel& m) {
  json j;
  j["name"] = m.name;
  j["d"] = m.d;
  j["T"] = m.T;
  j["block_scale"] = m.block_scale;
  std::vector<std::vector<double>> basis(m.d), xi(m.T);
  for (int k = 0; k < m.d; ++k) basis[k] = to_vec(m.mode_basis.col(k));
  for (int t = 0; t < m.T; ++t) xi[t] = to_vec(m.mode_strengths.row(t).transpose());
  j["basis_columns"] = basis;
  j["mode_strengths"] = xi;
  j["mode_to_basis"] = m.mode_to_basis;
  json planted = json::array();
  for (const auto& c : m.planted) planted.push_back({{"mode", c.mode}, {"time", c.time}, {"order", c.order}});
  j["planted"] = planted;
  j["anchor"] = m.anchor.name;
  return j.dump(2);
}

}  // namespace ment
