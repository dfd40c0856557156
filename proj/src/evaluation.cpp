#include "ment/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <thread>

#include "ment/embedding.hpp"
#include "ment/errors.hpp"
#include "ment/rng.hpp"

namespace ment {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Runs fn(i) for i in [0, count) on up to `threads` workers. Results are
// written by index, so the output does not depend on scheduling.
template <typename Fn>
void parallel_for(int count, int threads, Fn fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<Metric> study_metrics(Index d) {
  std::vector<Metric> out{Metric::tv(), Metric::mv()};
  for (Index k = 0; k < d; ++k) out.push_back(Metric::mode_wise(static_cast<int>(k)));
  return out;
}

}  // namespace

const MetricError& TrialResult::error(const std::string& metric) const {
  for (const auto& e : errors)
    if (e.metric == metric) return e;
  throw ValidationError("no error recorded for metric " + metric);
}

double optimal_scale(const MatrixXd& est, const MatrixXd& ref) {
  const double denom = ref.squaredNorm();
  if (denom == 0.0) return 0.0;
  return std::max(0.0, (est.array() * ref.array()).sum() / denom);
}

TrialResult run_recovery_trial(const LatentModel& model, Index n, std::uint64_t seed,
                               EmbeddingFlavor flavor, BasisChoice basis) {
  if (flavor == EmbeddingFlavor::kLatent)
    throw ValidationError("run_recovery_trial: flavor must be original or modified");
  const SampledNetwork net = sample_dynamic_sbm(model, n, seed);
  const EmbeddingSeries Yhat = embed(net.snapshots, model.d, flavor);
  const PairSet pairs = PairSet::all_pairs(model.T);
  const Analysis est = analyze_embedding(Yhat, pairs, 1, basis);
  const Analysis latent = analyze_embedding(net.latent.as_embedding(), pairs, 1);

  TrialResult res;
  res.preset = model.name;
  res.seed = seed;
  res.n = n;
  res.flavor = flavor;
  res.basis = basis;
  for (const Metric& m : study_metrics(model.d)) {
    const DistanceMatrix pop = population_distance_matrix(model, m);
    const DistanceMatrix& hat = est.distance(m);
    const DistanceMatrix& lat = latent.distance(m);
    MetricError e;
    e.metric = to_string(m);
    // Original-flavor distances only agree up to a global scale.
    const bool rescale = flavor == EmbeddingFlavor::kOriginal;
    const double r_lat = rescale ? optimal_scale(hat.D2, lat.D2) : 1.0;
    e.scale = rescale ? optimal_scale(hat.D2, pop.D2) : 1.0;
    e.distance_error_sample = (hat.D2 - r_lat * lat.D2).norm();
    e.distance_error_population = (hat.D2 - e.scale * pop.D2).norm();

    // Trajectories get sign alignment only; the global scale is a distance
    // comparison device and is not applied here.
    const Trajectory ref = cmds(pop, 1);
    e.trajectory_error = align(est.trajectory(m), ref, AlignmentGroup::kSign).squared_error;
    res.errors.push_back(e);
  }
  return res;
}

std::vector<TrialResult> run_recovery_study(const RecoveryOptions& o) {
  if (o.trials < 1) throw ValidationError("recovery study: trials must be >= 1");
  if (o.n_grid.empty()) throw ValidationError("recovery study: empty n grid");
  const LatentModel model = preset_by_name(o.preset);
  std::vector<TrialResult> out(o.n_grid.size() * static_cast<std::size_t>(o.trials));
  parallel_for(static_cast<int>(out.size()), o.threads, [&](int job) {
    const std::size_t gi = static_cast<std::size_t>(job) / o.trials;
    const int trial = job % o.trials;
    const Index n = o.n_grid[gi];
    const std::uint64_t seed = derive_seed(derive_seed(o.seed, static_cast<std::uint64_t>(n)), trial);
    out[job] = run_recovery_trial(model, n, seed, o.flavor, o.basis);
    out[job].trial = trial;
  });
  return out;
}

double median_error(const std::vector<TrialResult>& results, Index n, const std::string& metric,
                    bool trajectory) {
  std::vector<double> v;
  for (const auto& r : results) {
    if (r.n != n) continue;
    const MetricError& e = r.error(metric);
    v.push_back(trajectory ? e.trajectory_error : e.distance_error_population);
  }
  return median_of(v);
}

std::vector<DetectionTrial> run_detection_trial(const LatentModel& model, Index n,
                                                std::uint64_t seed, const std::vector<int>& K_grid,
                                                const FusionOptions& fusion, int trial) {
  const auto start = std::chrono::steady_clock::now();
  const SampledNetwork net = sample_dynamic_sbm(model, n, seed);
  const EmbeddingSeries Yhat = embed(net.snapshots, model.d, EmbeddingFlavor::kModified);
  const Analysis est = analyze_embedding(Yhat, PairSet::all_pairs(model.T), 1);
  std::vector<ScoreSeries> scores;
  const std::vector<VectorXd> curves = est.mode_curves();
  for (std::size_t k = 0; k < curves.size(); ++k)
    scores.push_back(llt_scores(curves[k], static_cast<int>(k) + 1));
  const std::vector<ScoreStream> streams = streams_from(scores);
  const std::vector<int> truth = model.change_times();

  std::vector<DetectionTrial> out;
  for (int K : K_grid) {
    FusionOptions f = fusion;
    f.K = K;
    const ChangePointReport rep = fuse_topk(streams, f);
    DetectionTrial d;
    d.trial = trial;
    d.seed = seed;
    d.K = K;
    d.predicted = rep.times();
    d.metrics = evaluate(d.predicted, truth, f.tolerance, f.matching);
    out.push_back(std::move(d));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (auto& d : out) d.seconds = secs;
  return out;
}

DetectionStudy run_detection_study(const DetectionOptions& o) {
  if (o.trials < 1) throw ValidationError("detection study: trials must be >= 1");
  const LatentModel model = preset_by_name(o.preset);
  std::vector<std::vector<DetectionTrial>> per(o.trials);
  parallel_for(o.trials, o.threads, [&](int i) {
    per[i] = run_detection_trial(model, o.n, derive_seed(o.seed, static_cast<std::uint64_t>(i)),
                                 o.K_grid, o.fusion, i);
  });
  DetectionStudy study;
  for (auto& v : per)
    for (auto& d : v) study.trials.push_back(std::move(d));
  for (int K : o.K_grid) {
    DetectionSummary s;
    s.K = K;
    double f1 = 0, mae = 0;
    int with_mae = 0;
    for (const auto& d : study.trials) {
      if (d.K != K) continue;
      ++s.trials;
      f1 += d.metrics.f1;
      if (d.metrics.mae) {
        mae += *d.metrics.mae;
        ++with_mae;
      }
    }
    s.mean_f1 = s.trials ? f1 / s.trials : 0.0;
    if (with_mae) s.mean_mae = mae / with_mae;
    study.summary.push_back(s);
  }
  return study;
}

void write_recovery_csv(std::ostream& os, const std::vector<TrialResult>& results) {
  os << "preset,flavor,basis,n,trial,seed,metric,distance_error_sample,"
        "distance_error_population,scale,trajectory_error\n";
  os << std::setprecision(17);
  for (const auto& r : results)
    for (const auto& e : r.errors)
      os << r.preset << ',' << to_string(r.flavor) << ',' << to_string(r.basis) << ',' << r.n
         << ',' << r.trial << ',' << r.seed << ',' << e.metric << ',' << e.distance_error_sample
         << ',' << e.distance_error_population << ',' << e.scale << ',' << e.trajectory_error
         << '\n';
}

void write_detection_csv(std::ostream& os, const DetectionStudy& study) {
  os << "trial,seed,K,predicted,matched,precision,recall,f1,mae,seconds\n";
  os << std::setprecision(17);
  for (const auto& d : study.trials) {
    os << d.trial << ',' << d.seed << ',' << d.K << ',';
    for (std::size_t i = 0; i < d.predicted.size(); ++i) os << (i ? " " : "") << d.predicted[i];
    os << ',' << d.metrics.matched << ',' << d.metrics.precision << ',' << d.metrics.recall << ','
       << d.metrics.f1 << ',';
    if (d.metrics.mae) os << *d.metrics.mae;
    os << ',' << d.seconds << '\n';
  }
}

}  // namespace ment
