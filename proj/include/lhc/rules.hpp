#pragma once
// IF-THEN rules over binarized view rows, mined levelwise (apriori).
//
// Each row is a transaction; a column (predicate, object) is present when its
// value is > 0. Rules have a single-feature consequent:
//   support    = count(antecedent + consequent) / n_transactions
//   confidence = count(antecedent + consequent) / count(antecedent)

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "lhc/error.hpp"
#include "lhc/tensor.hpp"

namespace lhc {

using Itemset = std::vector<std::uint32_t>;  // sorted feature indices

struct Rule {
    Itemset antecedent;
    std::uint32_t consequent = 0;
    double support = 0.0;
    double confidence = 0.0;

    bool operator==(const Rule&) const = default;
};

// Sort key: confidence desc, support desc, then antecedent and consequent
// features ascending.
inline bool rule_order(const Rule& a, const Rule& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.support != b.support) return a.support > b.support;
    return std::tie(a.antecedent, a.consequent) < std::tie(b.antecedent, b.consequent);
}

inline std::vector<Itemset> transactions_of(const MatrixView& view) {
    std::vector<Itemset> out;
    for (const auto& row : view.values) {
        Itemset t;
        for (const auto& [c, v] : row)
            if (v > 0.0) t.push_back(c);
        out.push_back(std::move(t));
    }
    return out;
}

inline std::size_t count_containing(std::span<const Itemset> transactions, const Itemset& items) {
    std::size_t n = 0;
    for (const auto& t : transactions)
        if (std::includes(t.begin(), t.end(), items.begin(), items.end())) ++n;
    return n;
}

// Frequent itemsets with their transaction counts.
inline std::map<Itemset, std::size_t> frequent_itemsets(std::span<const Itemset> transactions, double minsup) {
    std::map<Itemset, std::size_t> frequent;
    const double n = static_cast<double>(transactions.size());
    if (transactions.empty()) return frequent;
    auto is_frequent = [&](std::size_t count) { return static_cast<double>(count) / n >= minsup; };

    std::map<std::uint32_t, std::size_t> singles;
    for (const auto& t : transactions)
        for (auto f : t) ++singles[f];
    std::vector<Itemset> level;
    for (const auto& [f, count] : singles)
        if (is_frequent(count)) {
            frequent[{f}] = count;
            level.push_back({f});
        }
    while (!level.empty()) {
        // Join itemsets sharing all but the last item; prune by subsets.
        std::set<Itemset> prev(level.begin(), level.end());
        std::vector<Itemset> next;
        for (std::size_t i = 0; i < level.size(); ++i)
            for (std::size_t j = i + 1; j < level.size(); ++j) {
                const auto& a = level[i];
                const auto& b = level[j];
                if (!std::equal(a.begin(), a.end() - 1, b.begin(), b.end() - 1)) break;
                Itemset cand = a;
                cand.push_back(b.back());
                bool ok = true;
                for (std::size_t drop = 0; drop + 2 < cand.size() && ok; ++drop) {
                    Itemset sub;
                    for (std::size_t k = 0; k < cand.size(); ++k)
                        if (k != drop) sub.push_back(cand[k]);
                    ok = prev.count(sub) > 0;
                }
                if (!ok) continue;
                auto count = count_containing(transactions, cand);
                if (is_frequent(count)) {
                    frequent[cand] = count;
                    next.push_back(std::move(cand));
                }
            }
        level = std::move(next);
    }
    return frequent;
}

inline std::vector<Rule> mine_rules(std::span<const Itemset> transactions, double minsup, double minconf) {
    if (!(minsup > 0.0 && minsup <= 1.0)) throw InvalidArgument("minsup must be in (0, 1]");
    if (!(minconf > 0.0 && minconf <= 1.0)) throw InvalidArgument("minconf must be in (0, 1]");
    auto frequent = frequent_itemsets(transactions, minsup);
    const double n = static_cast<double>(transactions.size());
    std::vector<Rule> rules;
    for (const auto& [items, count] : frequent) {
        if (items.size() < 2) continue;
        for (std::size_t k = 0; k < items.size(); ++k) {
            Itemset ante;
            for (std::size_t m = 0; m < items.size(); ++m)
                if (m != k) ante.push_back(items[m]);
            double conf = static_cast<double>(count) / static_cast<double>(frequent.at(ante));
            if (conf < minconf) continue;
            rules.push_back({std::move(ante), items[k], static_cast<double>(count) / n, conf});
        }
    }
    std::sort(rules.begin(), rules.end(), rule_order);
    return rules;
}

inline std::vector<Rule> mine_rules(const MatrixView& view, double minsup, double minconf) {
    return mine_rules(transactions_of(view), minsup, minconf);
}

}  // namespace lhc
