#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace permdet::eval {

struct BadK : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// K disjoint index folds covering [0, n); sizes differ by at most one;
// deterministic per seed.
std::vector<std::vector<size_t>> kfold_split(size_t n, int k, uint64_t seed);

}  // namespace permdet::eval
