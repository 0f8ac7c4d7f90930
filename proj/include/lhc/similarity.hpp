#pragma once

#include <cmath>
#include <vector>

#include "lhc/tensor.hpp"

namespace lhc {

inline double dot(const SparseVector& a, const SparseVector& b) {
    double sum = 0.0;
    auto ia = a.begin(), ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) ++ia;
        else if (ib->first < ia->first) ++ib;
        else sum += (ia++)->second * (ib++)->second;
    }
    return sum;
}

inline double norm(const SparseVector& a) { return std::sqrt(dot(a, a)); }

// Cosine of two non-negative vectors, clamped to [0, 1]. A zero vector scores
// 0 against everything, itself included.
inline double cosine(const SparseVector& a, const SparseVector& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = dot(a, b) / (na * nb);
    return std::clamp(c, 0.0, 1.0);
}

inline double similarity(const MatrixView& view, const TermId& a, const TermId& b) {
    return cosine(view.row(a), view.row(b));
}

struct SimilarPair {
    TermId a;  // a < b
    TermId b;
    double similarity = 0.0;
};

// All row pairs with cosine >= threshold, ordered by (a, b).
inline std::vector<SimilarPair> similar_pairs(const MatrixView& view, double threshold) {
    std::vector<SimilarPair> out;
    std::vector<double> norms(view.n_rows());
    for (std::size_t i = 0; i < view.n_rows(); ++i) norms[i] = norm(view.values[i]);
    for (std::uint32_t i = 0; i < view.n_rows(); ++i) {
        if (norms[i] == 0.0) continue;
        for (std::uint32_t j = i + 1; j < view.n_rows(); ++j) {
            if (norms[j] == 0.0) continue;
            double c = std::clamp(dot(view.values[i], view.values[j]) / (norms[i] * norms[j]), 0.0, 1.0);
            if (c >= threshold && c > 0.0) out.push_back({view.rows.id(i), view.rows.id(j), c});
        }
    }
    return out;
}

}  // namespace lhc
