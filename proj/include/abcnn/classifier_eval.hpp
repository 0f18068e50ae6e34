#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abcnn/core_math.hpp"

namespace abcnn {

// Binary models keep one weight row (the positive-class logit); multinomial
// models keep one row per class.
struct LogisticModel {
  std::size_t num_classes = 2;
  Matrix weights;  // (num_classes == 2 ? 1 : num_classes) x features
  Vector bias;
  double l2 = 0.0;
};

struct FitOptions {
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 20000;
};

// Minimises mean cross-entropy + l2 * ||weights||^2 (bias unpenalised) with
// L-BFGS and a backtracking line search. Fully deterministic.
LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels, double l2,
                           const FitOptions& options = {});

// Rows of class probabilities.
Matrix predict_scores(const LogisticModel& model, const Matrix& features);

// Arg-max class per row; ties go to the lower class index.
std::vector<int> predict_labels(const Matrix& probabilities);

struct RankedItem {
  double score = 0.0;
  bool relevant = false;
};

struct RankingGroup {
  std::string id;
  std::vector<RankedItem> items;
};

// Items are ranked by descending score, ties kept in original order.
double average_precision(const RankingGroup& group);
double reciprocal_rank(const RankingGroup& group);
// Both throw ArgumentError for a group with no relevant item.
double mean_average_precision(std::span<const RankingGroup> groups);
double mean_reciprocal_rank(std::span<const RankingGroup> groups);

// Groups rows by id in first-appearance order, dropping groups without a
// relevant item (the standard answer-selection evaluation setup).
std::vector<RankingGroup> build_ranking_groups(std::span<const std::string> ids, std::span<const double> scores,
                                               std::span<const int> labels);

struct AccuracyF1 {
  double accuracy = 0.0;
  double f1 = 0.0;  // positive class = 1
};

AccuracyF1 accuracy_f1(std::span<const int> predictions, std::span<const int> labels);

}  // namespace abcnn
