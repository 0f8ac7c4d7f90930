#pragma once
// Taxonomy induction by weighted distributional inclusion of cluster
// centroids:
//
//   inclusion(A -> B) = sum_f min(c_A(f), c_B(f)) / sum_f c_A(f)
//
// A -> B (A below B) is a candidate when inclusion(A -> B) >= tau and
// inclusion(A -> B) > inclusion(B -> A). Candidates are accepted strongest
// first, skipping any that would close a cycle; the accepted graph is then
// transitively reduced.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <tuple>
#include <map>
#include <vector>

#include "lhc/clustering.hpp"
#include "lhc/error.hpp"

namespace lhc {

struct TaxonomyEdge {
    std::size_t child = 0;
    std::size_t parent = 0;
    double inclusion = 0.0;

    bool operator==(const TaxonomyEdge&) const = default;
};

inline double inclusion(const SparseVector& a, const SparseVector& b) {
    double overlap = 0.0, mass = 0.0;
    for (const auto& [c, v] : a) mass += v;
    auto ia = a.begin(), ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) ++ia;
        else if (ib->first < ia->first) ++ib;
        else overlap += std::min((ia++)->second, (ib++)->second);
    }
    return mass == 0.0 ? 0.0 : overlap / mass;
}

namespace detail {

inline bool reachable(const std::vector<std::vector<std::size_t>>& adj, std::size_t from, std::size_t to,
                      std::size_t skip_from = SIZE_MAX, std::size_t skip_to = SIZE_MAX) {
    std::vector<bool> seen(adj.size(), false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (auto v : adj[u]) {
            if (u == skip_from && v == skip_to) continue;
            if (v == to) return true;
            if (!seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return false;
}

}  // namespace detail

// Clusters are addressed by position; ConceptCluster::id must equal it.
inline std::vector<TaxonomyEdge> induce_taxonomy(const std::vector<ConceptCluster>& clusters, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("taxonomy threshold must be in (0, 1]");
    const std::size_t n = clusters.size();
    std::vector<TaxonomyEdge> candidates;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            double ab = inclusion(clusters[a].centroid, clusters[b].centroid);
            double ba = inclusion(clusters[b].centroid, clusters[a].centroid);
            if (ab >= tau && ab > ba) candidates.push_back({a, b, ab});
        }
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
        return x.inclusion > y.inclusion;
    });
    std::vector<std::vector<std::size_t>> adj(n);
    std::vector<TaxonomyEdge> accepted;
    for (const auto& e : candidates) {
        if (detail::reachable(adj, e.parent, e.child)) continue;
        adj[e.child].push_back(e.parent);
        accepted.push_back(e);
    }
    std::vector<TaxonomyEdge> reduced;
    for (const auto& e : accepted)
        if (!detail::reachable(adj, e.child, e.parent, e.child, e.parent)) reduced.push_back(e);
    std::sort(reduced.begin(), reduced.end(), [](const auto& x, const auto& y) {
        return std::tie(x.child, x.parent) < std::tie(y.child, y.parent);
    });
    return reduced;
}

}  // namespace lhc
