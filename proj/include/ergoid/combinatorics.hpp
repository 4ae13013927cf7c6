#pragma once

#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace ergoid {

/// C(n, k), saturating at SIZE_MAX.
inline std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        const std::size_t num = n - k + i;
        if (result > std::numeric_limits<std::size_t>::max() / num) {
            return std::numeric_limits<std::size_t>::max();
        }
        result = result * num / i;
    }
    return result;
}

/// Calls fn(subset) for every k-subset of {0, ..., n-1} in lexicographic order.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    while (true) {
        fn(static_cast<const std::vector<std::size_t>&>(idx));
        if (k == 0) return;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace ergoid
