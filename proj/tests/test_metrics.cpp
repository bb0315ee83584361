#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "tghoa/metrics.hpp"
#include "tghoa/rng.hpp"

using namespace tghoa;

namespace {

// O(n^2) pairwise oracle: positives vs negatives, ties worth 1/2.
double auc_roc_pairwise(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  long n_pos = 0, n_neg = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] <= 0) continue;
    ++n_pos;
    for (size_t j = 0; j < y.size(); ++j) {
      if (y[j] > 0) continue;
      if (s[i] > s[j])
        wins += 1.0;
      else if (s[i] == s[j])
        wins += 0.5;
    }
  }
  for (int v : y) n_neg += (v <= 0);
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Direct precision-sum oracle: recompute TP/FP from scratch at every distinct
// threshold (descending), sum precision times recall increments.
double auc_pr_precision_sum(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> thresholds = s;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  long n_pos = 0;
  for (int v : y) n_pos += (v > 0);
  double ap = 0.0, recall_prev = 0.0;
  for (double th : thresholds) {
    long tp = 0, fp = 0;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= th) {
        if (y[i] > 0)
          ++tp;
        else
          ++fp;
      }
    }
    double recall = static_cast<double>(tp) / n_pos;
    double precision = static_cast<double>(tp) / (tp + fp);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
  }
  return ap;
}

}  // namespace

TEST_CASE("perfect separation") {
  std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  std::vector<int> y{1, 1, 0, 0};
  CHECK(auc_roc(s, y).value() == 1.0);
  CHECK(auc_pr(s, y).value() == 1.0);
  std::vector<int> pred{1, 1, 0, 0};
  CHECK(accuracy(pred, y) == 1.0);
}

TEST_CASE("all scores equal gives AUC 0.5") {
  std::vector<double> s{0.3, 0.3, 0.3, 0.3};
  std::vector<int> y{1, 0, 1, 0};
  CHECK(auc_roc(s, y).value() == 0.5);
}

TEST_CASE("absent class yields null metric") {
  std::vector<double> s{0.4, 0.6};
  std::vector<int> y{1, 1};
  CHECK(!auc_roc(s, y).has_value());
  CHECK(!auc_pr(s, y).has_value());
}

TEST_CASE("sort-based AUC-ROC equals the pairwise oracle exactly") {
  Rng rng(1234);
  for (int rep = 0; rep < 200; ++rep) {
    int n = rng.uniform_int(2, 200);
    std::vector<double> s(n);
    std::vector<int> y(n);
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // coarse grid of scores forces plenty of ties
      s[i] = rng.uniform_int(0, 9) / 10.0;
      y[i] = rng.uniform() < 0.4 ? 1 : 0;
      has_pos = has_pos || y[i] == 1;
      has_neg = has_neg || y[i] == 0;
    }
    if (!has_pos) y[0] = 1;
    if (!has_neg) y[n > 1 ? 1 : 0] = 0;
    double fast = auc_roc(s, y).value();
    double slow = auc_roc_pairwise(s, y);
    CHECK(fast == slow);  // exact: both numerators are multiples of 1/2
  }
}

TEST_CASE("AUC-PR equals the precision-sum oracle") {
  Rng rng(4321);
  for (int rep = 0; rep < 200; ++rep) {
    int n = rng.uniform_int(2, 120);
    std::vector<double> s(n);
    std::vector<int> y(n);
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      s[i] = rng.uniform_int(0, 14) / 14.0;
      y[i] = rng.uniform() < 0.5 ? 1 : 0;
      has_pos = has_pos || y[i] == 1;
      has_neg = has_neg || y[i] == 0;
    }
    if (!has_pos) y[0] = 1;
    if (!has_neg) y[n > 1 ? 1 : 0] = 0;
    double fast = auc_pr(s, y).value();
    double slow = auc_pr_precision_sum(s, y);
    CHECK(std::fabs(fast - slow) <= 1e-12);
  }
}

TEST_CASE("accuracy plus error rate is one") {
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    int n = rng.uniform_int(1, 40);
    std::vector<int> pred(n), truth(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = rng.uniform_int(0, 2);
      truth[i] = rng.uniform_int(0, 2);
    }
    double acc = accuracy(pred, truth);
    long miss = 0;
    for (int i = 0; i < n; ++i) miss += (pred[i] != truth[i]);
    CHECK(acc + static_cast<double>(miss) / n == doctest::Approx(1.0).epsilon(1e-15));
  }
}
