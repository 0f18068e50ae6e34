#include "abcnn/classifier_eval.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <unordered_map>

#include "abcnn/errors.hpp"

namespace abcnn {

namespace {

struct Problem {
  const Matrix& x;
  std::span<const int> y;
  std::size_t num_classes;
  double l2;

  std::size_t rows_out() const { return num_classes == 2 ? 1 : num_classes; }
  std::size_t dim() const { return rows_out() * (x.cols() + 1); }

  // theta = [weights row-major | biases]; returns objective, fills grad.
  double evaluate(const Vector& theta, Vector& grad) const {
    const std::size_t f = x.cols();
    const std::size_t k = rows_out();
    const std::size_t n = x.rows();
    const std::size_t bias_at = k * f;
    grad.assign(theta.size(), 0.0);
    double loss = 0.0;
    Vector z(k);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = x.row(i);
      for (std::size_t c = 0; c < k; ++c) {
        double s = theta[bias_at + c];
        for (std::size_t j = 0; j < f; ++j) s += theta[c * f + j] * row[j];
        z[c] = s;
      }
      Vector dz(k);
      if (k == 1) {
        const double zz = z[0];
        const double label = static_cast<double>(y[i]);
        loss += std::max(zz, 0.0) + std::log1p(std::exp(-std::abs(zz))) - label * zz;
        const double p = zz >= 0 ? 1.0 / (1.0 + std::exp(-zz)) : std::exp(zz) / (1.0 + std::exp(zz));
        dz[0] = p - label;
      } else {
        const double m = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (std::size_t c = 0; c < k; ++c) total += std::exp(z[c] - m);
        loss += m + std::log(total) - z[static_cast<std::size_t>(y[i])];
        for (std::size_t c = 0; c < k; ++c) dz[c] = std::exp(z[c] - m) / total;
        dz[static_cast<std::size_t>(y[i])] -= 1.0;
      }
      for (std::size_t c = 0; c < k; ++c) {
        grad[bias_at + c] += dz[c];
        for (std::size_t j = 0; j < f; ++j) grad[c * f + j] += dz[c] * row[j];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    for (double& g : grad) g *= inv_n;
    for (std::size_t i = 0; i < bias_at; ++i) {
      loss += l2 * theta[i] * theta[i];
      grad[i] += 2.0 * l2 * theta[i];
    }
    return loss;
  }
};

double vdot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vector lbfgs(const Problem& problem, const FitOptions& options) {
  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  Vector theta(problem.dim(), 0.0);
  Vector grad;
  double f = problem.evaluate(theta, grad);
  std::deque<std::pair<Vector, Vector>> memory;  // (s, y)
  Vector trial(theta.size());
  Vector trial_grad;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    if (std::sqrt(vdot(grad, grad)) < options.gradient_tolerance) break;

    // Two-loop recursion for d = -H g.
    Vector d = grad;
    std::vector<double> alpha(memory.size());
    for (std::size_t m = memory.size(); m-- > 0;) {
      const auto& [s, y] = memory[m];
      alpha[m] = vdot(s, d) / vdot(y, s);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha[m] * y[i];
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      const double gamma = vdot(s, y) / vdot(y, y);
      for (double& v : d) v *= gamma;
    }
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const auto& [s, y] = memory[m];
      const double beta = vdot(y, d) / vdot(y, s);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i] * (alpha[m] - beta);
    }
    for (double& v : d) v = -v;
    double slope = vdot(grad, d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = grad;
      for (double& v : d) v = -v;
      slope = vdot(grad, d);
    }

    double step = memory.empty() ? std::min(1.0, 1.0 / std::sqrt(vdot(grad, grad))) : 1.0;
    double f_new = f;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t i = 0; i < theta.size(); ++i) trial[i] = theta[i] + step * d[i];
      f_new = problem.evaluate(trial, trial_grad);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Vector s(theta.size());
    Vector y(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      s[i] = trial[i] - theta[i];
      y[i] = trial_grad[i] - grad[i];
    }
    theta = trial;
    grad = trial_grad;
    const bool stalled = f - f_new <= 1e-16 * std::max(1.0, std::abs(f));
    f = f_new;
    if (vdot(s, y) > 1e-12) {
      memory.emplace_back(std::move(s), std::move(y));
      if (memory.size() > kMemory) memory.pop_front();
    }
    if (stalled && std::sqrt(vdot(grad, grad)) < 1e3 * options.gradient_tolerance) break;
  }
  return theta;
}

}  // namespace

LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels, double l2,
                           const FitOptions& options) {
  if (features.rows() != labels.size()) throw DimensionError("fit_logistic: one label per row required");
  if (features.rows() == 0) throw ArgumentError("fit_logistic: no training rows");
  if (!(l2 >= 0.0)) throw ArgumentError("fit_logistic: l2 must be non-negative");
  for (double v : features.values()) {
    if (!std::isfinite(v)) throw ArgumentError("fit_logistic: non-finite feature value");
  }
  std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw ArgumentError("fit_logistic: need at least two classes");
  if (*classes.begin() < 0) throw ArgumentError("fit_logistic: labels must be non-negative");
  const auto num_classes = static_cast<std::size_t>(*classes.rbegin()) + 1;

  const Problem problem{features, labels, num_classes, l2};
  const Vector theta = lbfgs(problem, options);
  const std::size_t k = problem.rows_out();
  const std::size_t f = features.cols();
  LogisticModel model;
  model.num_classes = num_classes;
  model.l2 = l2;
  model.weights = Matrix(k, f, Vector(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(k * f)));
  model.bias.assign(theta.begin() + static_cast<std::ptrdiff_t>(k * f), theta.end());
  return model;
}

Matrix predict_scores(const LogisticModel& model, const Matrix& features) {
  if (features.cols() != model.weights.cols()) {
    throw DimensionError("predict_scores: model expects " + std::to_string(model.weights.cols()) +
                         " features, got " + std::to_string(features.cols()));
  }
  Matrix out(features.rows(), model.num_classes);
  const std::size_t k = model.weights.rows();
  Vector z(k);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t c = 0; c < k; ++c) z[c] = model.bias[c] + dot(model.weights.row(c), features.row(i));
    if (k == 1) {
      const double p = z[0] >= 0 ? 1.0 / (1.0 + std::exp(-z[0])) : std::exp(z[0]) / (1.0 + std::exp(z[0]));
      out(i, 0) = 1.0 - p;
      out(i, 1) = p;
    } else {
      const double m = *std::max_element(z.begin(), z.end());
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) total += out(i, c) = std::exp(z[c] - m);
      for (std::size_t c = 0; c < k; ++c) out(i, c) /= total;
    }
  }
  return out;
}

std::vector<int> predict_labels(const Matrix& probabilities) {
  std::vector<int> out(probabilities.rows());
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    auto row = probabilities.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

namespace {

std::vector<bool> ranked_relevance(const RankingGroup& group) {
  std::vector<std::size_t> order(group.items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return group.items[a].score > group.items[b].score; });
  std::vector<bool> rel;
  rel.reserve(order.size());
  bool any = false;
  for (std::size_t i : order) {
    rel.push_back(group.items[i].relevant);
    any = any || group.items[i].relevant;
  }
  if (!any) throw ArgumentError("ranking group '" + group.id + "' has no relevant item");
  return rel;
}

}  // namespace

double average_precision(const RankingGroup& group) {
  const auto rel = ranked_relevance(group);
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < rel.size(); ++r) {
    if (!rel[r]) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(r + 1);
  }
  return sum / hits;
}

double reciprocal_rank(const RankingGroup& group) {
  const auto rel = ranked_relevance(group);
  for (std::size_t r = 0; r < rel.size(); ++r)
    if (rel[r]) return 1.0 / static_cast<double>(r + 1);
  return 0.0;
}

double mean_average_precision(std::span<const RankingGroup> groups) {
  if (groups.empty()) throw ArgumentError("mean_average_precision: no groups");
  double s = 0.0;
  for (const auto& g : groups) s += average_precision(g);
  return s / static_cast<double>(groups.size());
}

double mean_reciprocal_rank(std::span<const RankingGroup> groups) {
  if (groups.empty()) throw ArgumentError("mean_reciprocal_rank: no groups");
  double s = 0.0;
  for (const auto& g : groups) s += reciprocal_rank(g);
  return s / static_cast<double>(groups.size());
}

std::vector<RankingGroup> build_ranking_groups(std::span<const std::string> ids, std::span<const double> scores,
                                               std::span<const int> labels) {
  if (ids.size() != scores.size() || ids.size() != labels.size()) {
    throw DimensionError("build_ranking_groups: length mismatch");
  }
  std::vector<RankingGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto [it, inserted] = index.try_emplace(ids[i], groups.size());
    if (inserted) groups.push_back(RankingGroup{ids[i], {}});
    groups[it->second].items.push_back({scores[i], labels[i] == 1});
  }
  std::erase_if(groups, [](const RankingGroup& g) {
    return std::none_of(g.items.begin(), g.items.end(), [](const RankedItem& it) { return it.relevant; });
  });
  return groups;
}

AccuracyF1 accuracy_f1(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw DimensionError("accuracy_f1: length mismatch");
  if (labels.empty()) throw ArgumentError("accuracy_f1: no predictions");
  std::size_t correct = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
    if (predictions[i] == 1 && labels[i] == 1) ++tp;
    if (predictions[i] == 1 && labels[i] != 1) ++fp;
    if (predictions[i] != 1 && labels[i] == 1) ++fn;
  }
  AccuracyF1 out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  if (tp > 0) {
    const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.f1 = 2.0 * p * r / (p + r);
  }
  return out;
}

}  // namespace abcnn
