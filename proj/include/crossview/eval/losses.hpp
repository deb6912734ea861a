// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "crossview/errors.hpp"

namespace crossview {

/// Per-point class probabilities, rows summing to 1.
struct Prediction {
  std::size_t num_classes = 0;
  std::vector<double> probs;  ///< N x num_classes, row-major

  Prediction() = default;
  Prediction(std::size_t n, std::size_t classes)
      : num_classes(classes), probs(n * classes, 0.0) {}

  std::size_t size() const {
    return num_classes == 0 ? 0 : probs.size() / num_classes;
  }

  double at(std::size_t i, std::size_t c) const {
    return probs[i * num_classes + c];
  }
  double& at(std::size_t i, std::size_t c) {
    return probs[i * num_classes + c];
  }
};

namespace detail {

inline void check_labels(const Prediction& pred, const std::vector<int>& gt) {
  if (pred.size() != gt.size()) {
    throw ShapeError("prediction covers " + std::to_string(pred.size()) +
                     " points but ground truth has " +
                     std::to_string(gt.size()));
  }
  for (int label : gt) {
    if (label < 0 || static_cast<std::size_t>(label) >= pred.num_classes) {
      throw ShapeError("ground-truth label " + std::to_string(label) +
                       " outside " + std::to_string(pred.num_classes) +
                       " classes");
    }
  }
}

}  // namespace detail

/// Mean over points of -w[gt] * log(p[gt]), with the log argument clamped
/// at 1e-12. Weights must be positive, one per class.
inline double weighted_cross_entropy(const Prediction& pred,
                                     const std::vector<int>& gt,
                                     const std::vector<double>& class_weights) {
  detail::check_labels(pred, gt);
  if (class_weights.size() != pred.num_classes) {
    throw ShapeError("one weight per class required");
  }
  for (double w : class_weights) {
    if (!(w > 0.0)) throw ShapeError("class weights must be positive");
  }
  if (gt.empty()) return 0.0;

  double total = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double p =
        std::max(pred.at(i, static_cast<std::size_t>(gt[i])), 1e-12);
    total -= class_weights[static_cast<std::size_t>(gt[i])] * std::log(p);
  }
  return total / static_cast<double>(gt.size());
}

/// Convex Jaccard-loss surrogate.
///
/// For each class present in the ground truth the per-point errors
/// |1{gt=c} - p_c| are sorted descending and folded with the gradient of the
/// Jaccard loss along that ordering; the result is averaged over present
/// classes. Always in [0, 1].
inline double lovasz_softmax(const Prediction& pred,
                             const std::vector<int>& gt) {
  detail::check_labels(pred, gt);
  const std::size_t n = gt.size();
  if (n == 0) return 0.0;

  std::vector<char> present(pred.num_classes, 0);
  for (int label : gt) present[static_cast<std::size_t>(label)] = 1;

  std::vector<std::size_t> order(n);
  std::vector<double> errors(n);

  double total = 0.0;
  std::size_t class_count = 0;
  for (std::size_t c = 0; c < pred.num_classes; ++c) {
    if (!present[c]) continue;
    ++class_count;

    std::size_t fg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_fg = static_cast<std::size_t>(gt[i]) == c;
      errors[i] = std::abs((is_fg ? 1.0 : 0.0) - pred.at(i, c));
      if (is_fg) ++fg;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return errors[a] > errors[b];
    });

    // Gradient of the Jaccard loss along the sorted prefix chain.
    double loss_c = 0.0;
    double inter = static_cast<double>(fg);
    double uni = static_cast<double>(fg);
    double prev = 0.0;
    for (std::size_t rank = 0; rank < n; ++rank) {
      const std::size_t i = order[rank];
      if (static_cast<std::size_t>(gt[i]) == c) {
        inter -= 1.0;
      } else {
        uni += 1.0;
      }
      const double jaccard = 1.0 - inter / uni;
      loss_c += errors[i] * (jaccard - prev);
      prev = jaccard;
    }
    total += loss_c;
  }
  return class_count == 0 ? 0.0 : total / static_cast<double>(class_count);
}

/// Sum of (weighted cross-entropy + Lovasz) over the semantic and motion
/// branches. There is no BEV term.
inline double total_loss(const Prediction& sem_probs,
                         const std::vector<int>& sem_gt,
                         const Prediction& motion_probs,
                         const std::vector<int>& motion_gt,
                         const std::vector<double>& class_weights) {
  return weighted_cross_entropy(sem_probs, sem_gt, class_weights) +
         lovasz_softmax(sem_probs, sem_gt) +
         weighted_cross_entropy(motion_probs, motion_gt, class_weights) +
         lovasz_softmax(motion_probs, motion_gt);
}

}  // namespace crossview
