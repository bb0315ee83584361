#pragma once

#include <optional>
#include <vector>

namespace tghoa {

// Probability that a uniformly random positive is scored above a uniformly
// random negative, ties counting 1/2 (midrank form). Empty class -> nullopt.
std::optional<double> auc_roc(const std::vector<double>& scores,
                              const std::vector<int>& labels);

// Average precision over the ranked list, computed at distinct score
// thresholds so tied scores are grouped. Empty class -> nullopt.
std::optional<double> auc_pr(const std::vector<double>& scores,
                             const std::vector<int>& labels);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

}  // namespace tghoa
