#pragma once

#include <cstdint>
#include <vector>

namespace toric {

// Exact maximum-weight matching on a general graph (primal-dual blossom
// method, O(n^3)). `weights` is a symmetric n x n matrix; entries <= 0 mean
// "no edge". Returns mate[v] (0-based) with -1 for unmatched vertices.
std::vector<int> max_weight_matching(int n, const std::vector<std::vector<int64_t>>& weights);

}  // namespace toric
