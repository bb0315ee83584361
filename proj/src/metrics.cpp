#include "tghoa/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tghoa {

std::optional<double> auc_roc(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc_roc: scores/labels length mismatch");
  size_t n = scores.size();
  long n_pos = 0;
  for (int y : labels) n_pos += (y > 0);
  long n_neg = static_cast<long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // midranks: tied scores share the average of their 1-based ranks
  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]] > 0) pos_rank_sum += midrank;
    i = j;
  }
  double u = pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::optional<double> auc_pr(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc_pr: scores/labels length mismatch");
  size_t n = scores.size();
  long n_pos = 0;
  for (int y : labels) n_pos += (y > 0);
  long n_neg = static_cast<long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double recall_prev = 0.0;
  long tp = 0, fp = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0)
        ++tp;
      else
        ++fp;
    }
    double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j;
  }
  return ap;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw std::invalid_argument("accuracy: bad input sizes");
  long hits = 0;
  for (size_t i = 0; i < truth.size(); ++i) hits += (predicted[i] == truth[i]);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace tghoa
