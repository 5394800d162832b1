#include "permdet/eval/kfold.hpp"

#include "permdet/util/rng.hpp"

namespace permdet::eval {

std::vector<std::vector<size_t>> kfold_split(size_t n, int k, uint64_t seed) {
    if (k < 2 || static_cast<size_t>(k) > n)
        throw BadK("K must satisfy 2 <= K <= n");
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    util::Rng rng(seed);
    rng.shuffle(idx);

    std::vector<std::vector<size_t>> folds(static_cast<size_t>(k));
    size_t base = n / static_cast<size_t>(k);
    size_t extra = n % static_cast<size_t>(k);
    size_t pos = 0;
    for (size_t f = 0; f < static_cast<size_t>(k); ++f) {
        size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(idx.begin() + static_cast<long>(pos),
                        idx.begin() + static_cast<long>(pos + len));
        pos += len;
    }
    return folds;
}

}  // namespace permdet::eval
