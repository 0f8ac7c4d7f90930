#pragma once
// Average-link agglomerative clustering over row cosine similarity.
//
// Clusters start as singletons. Each step merges the pair with the highest
// average pairwise similarity strictly above the threshold; averages within
// kTieEpsilon of each other are ties, resolved by the smallest
// (min id of A, min id of B). The result partitions the view's rows.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lhc/error.hpp"
#include "lhc/similarity.hpp"
#include "lhc/tensor.hpp"

namespace lhc {

inline constexpr double kTieEpsilon = 1e-12;

struct ConceptCluster {
    std::size_t id = 0;
    std::vector<TermId> members;  // sorted
    SparseVector centroid;        // mean of member rows
};

struct MergeStep {
    TermId left;   // min member id of the first cluster
    TermId right;  // min member id of the second cluster
    double average = 0.0;
};

struct ClusteringResult {
    std::vector<ConceptCluster> clusters;  // ordered by min member id
    std::vector<MergeStep> merges;
};

inline SparseVector mean_vector(const std::vector<const SparseVector*>& rows) {
    std::map<std::uint32_t, double> acc;
    for (const auto* r : rows)
        for (const auto& [c, v] : *r) acc[c] += v;
    SparseVector out;
    for (const auto& [c, v] : acc) out.emplace_back(c, v / static_cast<double>(rows.size()));
    return out;
}

inline ClusteringResult cluster_terms_traced(const MatrixView& view, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("similarity threshold must be in (0, 1]");
    const std::size_t n = view.n_rows();
    // Rows are sorted by id, so a cluster's smallest row index is its min id.
    std::vector<std::vector<std::uint32_t>> members(n);
    for (std::uint32_t i = 0; i < n; ++i) members[i] = {i};
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) norms[i] = norm(view.values[i]);
    // sums[i][j]: sum of pairwise similarities between clusters i and j.
    std::vector<std::vector<double>> sums(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double c = (norms[i] == 0.0 || norms[j] == 0.0)
                           ? 0.0
                           : std::clamp(dot(view.values[i], view.values[j]) / (norms[i] * norms[j]), 0.0, 1.0);
            sums[i][j] = sums[j][i] = c;
        }
    std::vector<bool> alive(n, true);
    ClusteringResult result;
    while (true) {
        std::size_t bi = 0, bj = 0;
        double best = 0.0;
        bool found = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                double avg = sums[i][j] / static_cast<double>(members[i].size() * members[j].size());
                if (!(avg > threshold)) continue;
                if (!found || avg > best + kTieEpsilon) {
                    found = true;
                    best = avg;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (!found) break;
        result.merges.push_back({view.rows.id(members[bi].front()), view.rows.id(members[bj].front()), best});
        // Slot bi keeps the merged cluster: its min index stays the smaller one.
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        std::sort(members[bi].begin(), members[bi].end());
        members[bj].clear();
        alive[bj] = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi) continue;
            sums[bi][k] = sums[k][bi] = sums[bi][k] + sums[bj][k];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        ConceptCluster c;
        c.id = result.clusters.size();
        std::vector<const SparseVector*> rows;
        for (auto m : members[i]) {
            c.members.push_back(view.rows.id(m));
            rows.push_back(&view.values[m]);
        }
        c.centroid = mean_vector(rows);
        result.clusters.push_back(std::move(c));
    }
    return result;
}

inline std::vector<ConceptCluster> cluster_terms(const MatrixView& view, double threshold) {
    return cluster_terms_traced(view, threshold).clusters;
}

}  // namespace lhc
