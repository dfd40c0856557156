#include "ment/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "ment/errors.hpp"

namespace ment {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kTieRel = 1e-12;

MatrixXd hinge_design(int T, int k) {
  MatrixXd X(T, 3);
  for (int t = 1; t <= T; ++t) {
    X(t - 1, 0) = 1.0;
    X(t - 1, 1) = std::min(t, k);
    X(t - 1, 2) = std::max(t - k, 0);
  }
  return X;
}

// Returns the fitted parameters and writes the RSS.
VectorXd fit_at_knot(const VectorXd& psi, int order, int k, double& rss) {
  const int T = static_cast<int>(psi.size());
  if (order == 0) {
    VectorXd p(2);
    p(0) = psi.head(k - 1).mean();
    p(1) = psi.tail(T - k + 1).mean();
    rss = (psi.head(k - 1).array() - p(0)).square().sum() +
          (psi.tail(T - k + 1).array() - p(1)).square().sum();
    return p;
  }
  const MatrixXd X = hinge_design(T, k);
  const VectorXd p = X.colPivHouseholderQr().solve(psi);
  rss = (psi - X * p).squaredNorm();
  return p;
}

}  // namespace

VectorXd piecewise_template(int T, int order, int knot, const VectorXd& params) {
  VectorXd out(T);
  if (order == 0) {
    if (params.size() != 2) throw ValidationError("order-0 template needs (a_L, a_R)");
    for (int t = 1; t <= T; ++t) out(t - 1) = t < knot ? params(0) : params(1);
  } else if (order == 1) {
    if (params.size() != 3) throw ValidationError("order-1 template needs (a, b_L, b_R)");
    out = hinge_design(T, knot) * params;
  } else {
    throw ValidationError("template order must be 0 or 1");
  }
  return out;
}

PiecewiseFit fit_piecewise(const VectorXd& psi, int order) {
  const int T = static_cast<int>(psi.size());
  if (order != 0 && order != 1) throw ValidationError("fit_piecewise: order must be 0 or 1");
  if (order == 0 && T < 3) throw ValidationError("fit_piecewise: order 0 needs T >= 3");
  if (order == 1 && T < 4) throw ValidationError("fit_piecewise: order 1 needs T >= 4");
  if (!psi.allFinite()) throw ValidationError("fit_piecewise: non-finite trajectory");

  PiecewiseFit fit;
  fit.order = order;
  const int last = order == 0 ? T : T - 1;
  for (int k = 2; k <= last; ++k) fit.candidates.push_back(k);
  fit.rss_curve.resize(static_cast<Eigen::Index>(fit.candidates.size()));

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fit.candidates.size(); ++i) {
    double rss = 0.0;
    VectorXd p = fit_at_knot(psi, order, fit.candidates[i], rss);
    fit.rss_curve(static_cast<Eigen::Index>(i)) = rss;
    // Smallest knot wins unless a later one is better beyond rounding.
    if (rss < best - kTieRel * std::max(1.0, std::abs(best)) || !std::isfinite(best)) {
      best = rss;
      fit.knot = fit.candidates[i];
      fit.params = std::move(p);
    }
  }
  fit.rss = best;
  fit.fitted = piecewise_template(T, order, fit.knot, fit.params);
  const double spread = fit.rss_curve.maxCoeff() - fit.rss_curve.minCoeff();
  fit.no_signal = spread <= kTieRel * std::max(1.0, psi.squaredNorm());
  return fit;
}

double hinge_separation_coefficient(double x, double y, double z) {
  return x * y * (y + 1) * (2 * x * y + x - y + 1) / (6 * z * (z * z - 1));
}

namespace {

void check_separation_args(int order, int T, int t_star) {
  if (order == 0) {
    if (T < 3 || t_star < 2 || t_star > T)
      throw ValidationError("separation: order 0 needs T >= 3 and 2 <= t* <= T");
  } else if (order == 1) {
    if (T < 4 || t_star < 2 || t_star > T - 1)
      throw ValidationError("separation: order 1 needs T >= 4 and 2 <= t* <= T-1");
  } else {
    throw ValidationError("separation: order must be 0 or 1");
  }
}

// Exact value of the split (two-segment) problem per unit contrast.
double exact_segment_value(int order, int T, int t_star, int k) {
  if (order == 0) {
    if (k < t_star) return double(t_star - k) * (T - t_star + 1) / (T - k + 1);
    return double(t_star - 1) * (k - t_star) / (k - 1);
  }
  if (k < t_star)
    return hinge_separation_coefficient(t_star - k + 1, T - t_star, T - k + 1) * (t_star - k);
  return hinge_separation_coefficient(t_star, k - t_star, k) * (t_star - 1);
}

}  // namespace

double separation_alpha(int order, int T, int t_star) {
  check_separation_args(order, T, t_star);
  if (order == 0) return double(std::min(t_star - 1, T - t_star + 1)) / (T - 1);
  double a1 = std::numeric_limits<double>::infinity();
  for (int k = 2; k <= t_star; ++k)
    a1 = std::min(a1, hinge_separation_coefficient(t_star - k + 1, T - t_star, T - k + 1));
  double a2 = std::numeric_limits<double>::infinity();
  for (int k = t_star + 1; k <= T - 1; ++k)
    a2 = std::min(a2, hinge_separation_coefficient(t_star, k - t_star, k));
  if (t_star == 2) return a2;
  if (t_star == T - 1) return a1;
  return std::min(a1, a2);
}

double separation_alpha_exact(int order, int T, int t_star) {
  check_separation_args(order, T, t_star);
  const int last = order == 0 ? T : T - 1;
  double a = std::numeric_limits<double>::infinity();
  for (int k = 2; k <= last; ++k) {
    if (k == t_star) continue;
    a = std::min(a, exact_segment_value(order, T, t_star, k) / std::abs(k - t_star));
  }
  return std::isfinite(a) ? a : 0.0;
}

bool SeparationCheck::holds() const {
  return direct >= bound() * (1.0 - 1e-9) - 1e-12;
}

bool SeparationCheck::holds_exact() const {
  return direct >= bound_exact() * (1.0 - 1e-9) - 1e-12;
}

SeparationCheck separation_oracle(int order, int T, int t_star, int k, const VectorXd& theta) {
  check_separation_args(order, T, t_star);
  const int last = order == 0 ? T : T - 1;
  if (k < 2 || k > last) throw ValidationError("separation_oracle: k outside the candidate set");
  SeparationCheck c;
  c.order = order;
  c.T = T;
  c.t_star = t_star;
  c.k = k;
  const VectorXd truth = piecewise_template(T, order, t_star, theta);
  double rss = 0.0;
  fit_at_knot(truth, order, k, rss);
  c.direct = rss;
  c.contrast = order == 0 ? std::pow(theta(0) - theta(1), 2) : std::pow(theta(1) - theta(2), 2);
  if (order == 0 && k <= t_star) c.closed_form = exact_segment_value(0, T, t_star, k) * c.contrast;
  c.alpha = separation_alpha(order, T, t_star);
  c.alpha_exact = separation_alpha_exact(order, T, t_star);
  return c;
}

// ---------------------------------------------------------------------------
// Local linear trend: y_t = L_t + eps, L_{t+1} = L_t + B_t + eta, B_{t+1} = B_t + zeta.

namespace {

constexpr double kDiffuse = 1e6;
constexpr double kLogFloor = -12.0;

struct FilterPass {
  double loglik = 0.0;
  std::vector<Eigen::Vector2d> filtered;
  std::vector<Eigen::Matrix2d> filtered_cov;
};

FilterPass run_filter(const VectorXd& z, const LltVariances& v, double data_var, bool keep) {
  const Eigen::Index T = z.size();
  Eigen::Matrix2d F;
  F << 1, 1, 0, 1;
  const Eigen::Matrix2d Q = Eigen::Vector2d(v.level, v.slope).asDiagonal();
  Eigen::Vector2d a(z(0), 0.0);
  Eigen::Matrix2d P = Eigen::Matrix2d::Identity() * kDiffuse * data_var;
  FilterPass out;
  if (keep) {
    out.filtered.reserve(T);
    out.filtered_cov.reserve(T);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    const double f = P(0, 0) + v.observation;
    const double e = z(t) - a(0);
    if (t >= 2) out.loglik += -0.5 * (std::log(2.0 * std::numbers::pi * f) + e * e / f);
    const Eigen::Vector2d K = P.col(0) / f;
    a += K * e;
    P -= K * P.row(0);
    if (keep) {
      out.filtered.push_back(a);
      out.filtered_cov.push_back(P);
    }
    a = F * a;
    P = F * P * F.transpose() + Q;
  }
  return out;
}

LltVariances from_log(const Eigen::Vector3d& lv) {
  return {std::pow(10.0, lv(0)), std::pow(10.0, lv(1)), std::pow(10.0, lv(2))};
}

}  // namespace

double llt_loglik(const VectorXd& z, const LltVariances& v) {
  if (z.size() < 3) throw ValidationError("llt_loglik: need at least 3 observations");
  const double var = (z.array() - z.mean()).square().mean();
  return run_filter(z, v, var > 0 ? var : 1.0, false).loglik;
}

LltVariances llt_fit(const VectorXd& z) {
  // Coarse log10 grid, then coordinate search with a shrinking step.
  Eigen::Vector3d best_lv;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = -6; a <= 1; ++a)
    for (int b = -6; b <= 1; ++b)
      for (int c = -6; c <= 1; ++c) {
        const Eigen::Vector3d lv(a, b, c);
        const double ll = llt_loglik(z, from_log(lv));
        if (std::isfinite(ll) && ll > best) {
          best = ll;
          best_lv = lv;
        }
      }
  if (!std::isfinite(best)) throw NumericalError("llt_fit: likelihood is not finite on the grid");
  double step = 0.5;
  while (step > 0.01) {
    bool improved = false;
    for (int i = 0; i < 3; ++i)
      for (double dir : {-1.0, 1.0}) {
        Eigen::Vector3d lv = best_lv;
        lv(i) = std::max(lv(i) + dir * step, kLogFloor);
        const double ll = llt_loglik(z, from_log(lv));
        if (std::isfinite(ll) && ll > best + 1e-12) {
          best = ll;
          best_lv = lv;
          improved = true;
        }
      }
    if (!improved) step /= 2;
  }
  return from_log(best_lv);
}

LltSmooth llt_smooth(const VectorXd& z, const LltVariances& v) {
  const Eigen::Index T = z.size();
  if (T < 3) throw ValidationError("llt_smooth: need at least 3 observations");
  const double var = (z.array() - z.mean()).square().mean();
  FilterPass pass = run_filter(z, v, var > 0 ? var : 1.0, true);

  // Rauch-Tung-Striebel backward pass.
  Eigen::Matrix2d F;
  F << 1, 1, 0, 1;
  const Eigen::Matrix2d Q = Eigen::Vector2d(v.level, v.slope).asDiagonal();
  std::vector<Eigen::Vector2d> sm(T);
  sm[T - 1] = pass.filtered[T - 1];
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const Eigen::Matrix2d Pp = F * pass.filtered_cov[t] * F.transpose() + Q;
    const Eigen::Matrix2d J = pass.filtered_cov[t] * F.transpose() * Pp.inverse();
    sm[t] = pass.filtered[t] + J * (sm[t + 1] - F * pass.filtered[t]);
  }
  LltSmooth out;
  out.loglik = pass.loglik;
  out.states.resize(T, 2);
  for (Eigen::Index t = 0; t < T; ++t) out.states.row(t) = sm[t].transpose();
  out.level_disturbance = VectorXd::Zero(T);
  out.slope_disturbance = VectorXd::Zero(T);
  for (Eigen::Index t = 1; t < T; ++t) {
    out.level_disturbance(t) = sm[t](0) - sm[t - 1](0) - sm[t - 1](1);
    out.slope_disturbance(t) = sm[t](1) - sm[t - 1](1);
  }
  return out;
}

ScoreSeries llt_scores(const VectorXd& psi, int mode) {
  const Eigen::Index T = psi.size();
  if (T < 8) throw ValidationError("llt_scores: need T >= 8");
  if (!psi.allFinite()) throw ValidationError("llt_scores: non-finite trajectory");
  ScoreSeries s;
  s.mode = mode;
  s.level = VectorXd::Zero(T);
  s.slope = VectorXd::Zero(T);
  const double mean = psi.mean();
  s.scale = std::sqrt((psi.array() - mean).square().mean());
  if (!(s.scale > 1e-300) || s.scale <= 1e-12 * std::max(1.0, std::abs(mean))) {
    s.degenerate = true;
    return s;
  }
  const VectorXd z = (psi.array() - mean) / s.scale;
  s.variances = llt_fit(z);
  const LltSmooth sm = llt_smooth(z, s.variances);
  s.loglik = sm.loglik;
  s.level = (s.scale * sm.level_disturbance).cwiseAbs();
  s.slope = (s.scale * sm.slope_disturbance).cwiseAbs();
  if (!s.level.allFinite() || !s.slope.allFinite())
    throw NumericalError("llt_scores: smoother produced non-finite values");
  return s;
}

std::vector<Candidate> candidate_peaks(const VectorXd& scores) {
  std::vector<Candidate> out;
  for (Eigen::Index t = 1; t + 1 < scores.size(); ++t)
    if (scores(t) > scores(t - 1) && scores(t) > scores(t + 1))
      out.push_back({static_cast<int>(t) + 1, scores(t)});
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.time < b.time;
  });
  return out;
}

std::vector<ScoreStream> streams_from(const std::vector<ScoreSeries>& series) {
  std::vector<ScoreStream> out;
  for (const auto& s : series) {
    out.push_back({"mode" + std::to_string(s.mode) + "_level", 0, s.level});
    out.push_back({"mode" + std::to_string(s.mode) + "_slope", 1, s.slope});
  }
  return out;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Minimum-cost assignment (Hungarian, square cost matrix).
std::vector<int> hungarian(const MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

DetectionMetrics evaluate(const std::vector<int>& predicted, const std::vector<int>& truth,
                          int tolerance, MatchRule rule) {
  if (tolerance < 0) throw ValidationError("evaluate: tolerance must be >= 0");
  DetectionMetrics m;
  std::vector<int> errors;
  if (rule == MatchRule::kGreedy) {
    std::vector<char> taken(truth.size(), 0);
    for (int p : predicted) {
      int best = -1;
      for (std::size_t j = 0; j < truth.size(); ++j) {
        if (taken[j]) continue;
        const int dist = std::abs(truth[j] - p);
        if (dist > tolerance) continue;
        if (best < 0 || dist < std::abs(truth[best] - p) ||
            (dist == std::abs(truth[best] - p) && truth[j] < truth[best]))
          best = static_cast<int>(j);
      }
      if (best >= 0) {
        taken[best] = 1;
        errors.push_back(std::abs(truth[best] - p));
      }
    }
  } else if (!predicted.empty() && !truth.empty()) {
    // Maximise the number of matches first, then minimise total error.
    const int n = static_cast<int>(std::max(predicted.size(), truth.size()));
    const double big = 1e6;
    MatrixXd cost = MatrixXd::Constant(n, n, big);
    for (std::size_t i = 0; i < predicted.size(); ++i)
      for (std::size_t j = 0; j < truth.size(); ++j) {
        const int dist = std::abs(truth[j] - predicted[i]);
        if (dist <= tolerance) cost(i, j) = dist;
      }
    const std::vector<int> assign = hungarian(cost);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const int j = assign[i];
      if (j >= 0 && j < static_cast<int>(truth.size()) && cost(i, j) < big)
        errors.push_back(std::abs(truth[j] - predicted[i]));
    }
  }
  m.matched = static_cast<int>(errors.size());
  if (!predicted.empty()) m.precision = double(m.matched) / predicted.size();
  if (!truth.empty()) m.recall = double(m.matched) / truth.size();
  if (m.matched > 0) {
    m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
    double sum = 0;
    for (int e : errors) sum += e;
    m.mae = sum / m.matched;
  }
  return m;
}

std::vector<int> ChangePointReport::times() const {
  std::vector<int> out;
  for (const auto& c : fused) out.push_back(c.time);
  return out;
}

ChangePointReport fuse_topk(const std::vector<ScoreStream>& streams, const FusionOptions& options) {
  if (streams.empty()) throw ValidationError("fuse_topk: need at least one stream");
  if (options.K < 0) throw ValidationError("fuse_topk: K must be >= 0");
  if (options.min_separation < 0) throw ValidationError("fuse_topk: min_separation must be >= 0");

  ChangePointReport rep;
  rep.options = options;

  // One shared median per family over the full score sequences.
  std::map<int, std::vector<double>> pooled;
  for (const auto& s : streams) {
    if (s.family != 0 && s.family != 1) throw ValidationError("fuse_topk: family must be 0 or 1");
    pooled[s.family].insert(pooled[s.family].end(), s.scores.data(),
                            s.scores.data() + s.scores.size());
  }
  std::map<int, double> med;
  for (auto& [fam, values] : pooled) {
    double m = median(values);
    if (!(m > 0)) {
      double mean = 0;
      for (double v : values) mean += v;
      mean = values.empty() ? 0.0 : mean / values.size();
      m = mean > 0 ? mean : 1.0;
      rep.warnings.push_back("family " + std::to_string(fam) +
                             " median is zero; normalising by the mean instead");
    }
    med[fam] = m;
  }

  struct Pooled {
    double score;
    std::string stream;
  };
  std::map<int, Pooled> pool;
  for (const auto& s : streams) {
    StreamNomination nom;
    nom.stream = s.name;
    nom.family = s.family;
    nom.family_median = med[s.family];
    std::vector<Candidate> peaks = candidate_peaks(s.scores);
    if (static_cast<int>(peaks.size()) > options.K) peaks.resize(options.K);
    for (const auto& c : peaks) {
      const double fused = c.score / nom.family_median;
      auto it = pool.find(c.time);
      if (it == pool.end() || fused > it->second.score) pool[c.time] = {fused, s.name};
    }
    nom.nominated = std::move(peaks);
    rep.provenance.push_back(std::move(nom));
  }
  if (pool.empty()) {
    rep.empty_pool = true;
    return rep;
  }

  std::vector<FusedCandidate> ranked;
  for (const auto& [t, p] : pool) ranked.push_back({t, p.score, p.stream});
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.time < b.time;
  });
  for (const auto& c : ranked) {
    if (static_cast<int>(rep.fused.size()) >= options.K) break;
    bool ok = true;
    for (const auto& s : rep.fused)
      if (std::abs(s.time - c.time) < options.min_separation) ok = false;
    if (ok) rep.fused.push_back(c);
  }
  return rep;
}

ChangePointReport detect_changepoints(const std::vector<VectorXd>& trajectories,
                                      const FusionOptions& options,
                                      const std::optional<std::vector<int>>& truth,
                                      std::vector<ScoreSeries>* scores_out) {
  if (trajectories.empty()) throw ValidationError("detect_changepoints: no trajectories");
  std::vector<ScoreSeries> scores;
  for (std::size_t k = 0; k < trajectories.size(); ++k)
    scores.push_back(llt_scores(trajectories[k], static_cast<int>(k) + 1));
  ChangePointReport rep = fuse_topk(streams_from(scores), options);
  if (truth) rep.metrics = evaluate(rep.times(), *truth, options.tolerance, options.matching);
  if (scores_out) *scores_out = std::move(scores);
  return rep;
}

}  // namespace ment
