#pragma once
// One analysis run over a snapshot: tensor, subject-rows view, similarity,
// clusters, taxonomy, rules and a rank-k decomposition. Results are written
// back as derived statements and summarized in a JSON report.

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhc/clustering.hpp"
#include "lhc/decompose.hpp"
#include "lhc/ingestion.hpp"
#include "lhc/rules.hpp"
#include "lhc/similarity.hpp"
#include "lhc/store.hpp"
#include "lhc/taxonomy.hpp"
#include "lhc/tensor.hpp"

namespace lhc {

namespace provenance {
inline const std::string similarity = "derived:similarity";
inline const std::string cluster = "derived:cluster";
inline const std::string taxonomy = "derived:taxonomy";
inline const std::string rule = "derived:rule";
}  // namespace provenance

struct AnalysisConfig {
    double theta_sim = 0.5;
    double tau_tax = 0.75;
    double theta_emit = 0.5;
    double minsup = 0.2;
    double minconf = 0.7;
    std::size_t rank = 3;
    std::size_t top_pairs = 20;
};

struct AnalysisResults {
    MatrixView view;
    std::vector<SimilarPair> similar;  // pairs >= theta_emit
    std::vector<ConceptCluster> clusters;
    std::vector<TaxonomyEdge> taxonomy;
    std::vector<Rule> rules;
    std::vector<double> spectrum;
    std::array<std::size_t, 3> dims{};
};

inline AnalysisResults analyze(const Snapshot& snap, const AnalysisConfig& cfg) {
    auto tensor = build_tensor(snap);
    AnalysisResults r;
    r.dims = tensor.dims();
    r.view = make_view(tensor, ViewMode::subject_rows);
    r.similar = similar_pairs(r.view, cfg.theta_emit);
    r.clusters = cluster_terms(r.view, cfg.theta_sim);
    r.taxonomy = induce_taxonomy(r.clusters, cfg.tau_tax);
    r.rules = mine_rules(r.view, cfg.minsup, cfg.minconf);
    std::size_t k = std::min({cfg.rank, r.view.n_rows(), r.view.n_cols()});
    if (k > 0) r.spectrum = decompose(r.view, k).spectrum;
    return r;
}

inline TermId cluster_term_id(std::size_t id) { return "cluster:" + std::to_string(id + 1); }
inline TermId rule_term_id(std::size_t id) { return "rule:" + std::to_string(id + 1); }

struct MaterializeCounts {
    std::size_t similarity = 0;
    std::size_t membership = 0;
    std::size_t taxonomy = 0;
    std::size_t rule = 0;
    std::size_t removed = 0;

    std::size_t total() const { return similarity + membership + taxonomy + rule; }
};

// Replaces all statements of the four derived sources with the given results.
inline MaterializeCounts materialize(StatementStore& store, const AnalysisResults& r) {
    MaterializeCounts counts;
    for (const auto* prov : {&provenance::similarity, &provenance::cluster, &provenance::taxonomy, &provenance::rule}) {
        store.register_source(*prov, SourceCategory::derived);
        counts.removed += store.retract_provenance(*prov);
    }
    const char* predicates[] = {vocab::similar_to, vocab::member_of, vocab::sub_cluster_of,
                                vocab::has_antecedent_feature, vocab::has_consequent_feature, vocab::has_confidence};
    for (auto* p : predicates) store.register_term(p, {}, TermKind::predicate);

    for (const auto& p : r.similar) {
        store.assert_statement(p.a, vocab::id(vocab::similar_to), p.b, provenance::similarity, p.similarity);
        ++counts.similarity;
    }
    for (const auto& c : r.clusters) {
        auto id = store.intern_term(cluster_term_id(c.id), "cluster " + std::to_string(c.id + 1), {}, TermKind::entity);
        for (const auto& m : c.members) {
            store.assert_statement(m, vocab::id(vocab::member_of), id, provenance::cluster, 1.0);
            ++counts.membership;
        }
    }
    for (const auto& e : r.taxonomy) {
        store.assert_statement(cluster_term_id(e.child), vocab::id(vocab::sub_cluster_of), cluster_term_id(e.parent),
                               provenance::taxonomy, e.inclusion);
        ++counts.taxonomy;
    }
    auto feature_term = [&](std::uint32_t f) {
        const auto& [p, o] = r.view.columns[f];
        std::string label;
        {
            auto snap = store.snapshot();
            label = snap.term(p).label + "=" + snap.term(o).label;
        }
        return store.intern_term("feature:" + p + "=" + o, label, {}, TermKind::literal_value);
    };
    for (std::size_t i = 0; i < r.rules.size(); ++i) {
        const auto& rule = r.rules[i];
        auto hub = store.intern_term(rule_term_id(i), "rule " + std::to_string(i + 1), {}, TermKind::observation_hub);
        for (auto f : rule.antecedent) {
            store.assert_statement(hub, vocab::id(vocab::has_antecedent_feature), feature_term(f), provenance::rule,
                                   rule.confidence);
            ++counts.rule;
        }
        store.assert_statement(hub, vocab::id(vocab::has_consequent_feature), feature_term(rule.consequent),
                               provenance::rule, rule.confidence);
        auto conf = store.register_term(format_weight(rule.confidence), {}, TermKind::literal_value);
        store.assert_statement(hub, vocab::id(vocab::has_confidence), conf, provenance::rule, 1.0);
        counts.rule += 2;
    }
    return counts;
}

inline nlohmann::json feature_json(const MatrixView& view, std::uint32_t f) {
    return {{"predicate", view.columns[f].first}, {"object", view.columns[f].second}};
}

// Report with sorted keys; doubles print in shortest round-trip form.
inline nlohmann::json report_json(const AnalysisResults& r, const MaterializeCounts& counts, std::size_t top_pairs) {
    using nlohmann::json;
    json clusters = json::array();
    for (const auto& c : r.clusters)
        clusters.push_back({{"id", cluster_term_id(c.id)}, {"members", c.members}});
    json edges = json::array();
    for (const auto& e : r.taxonomy)
        edges.push_back({{"child", cluster_term_id(e.child)}, {"parent", cluster_term_id(e.parent)},
                         {"inclusion", e.inclusion}});
    json rules = json::array();
    for (std::size_t i = 0; i < r.rules.size(); ++i) {
        const auto& rule = r.rules[i];
        json ante = json::array();
        for (auto f : rule.antecedent) ante.push_back(feature_json(r.view, f));
        rules.push_back({{"id", rule_term_id(i)}, {"antecedent", ante},
                         {"consequent", feature_json(r.view, rule.consequent)},
                         {"support", rule.support}, {"confidence", rule.confidence}});
    }
    auto pairs = r.similar;
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& x, const auto& y) { return x.similarity > y.similarity; });
    if (pairs.size() > top_pairs) pairs.resize(top_pairs);
    json similar = json::array();
    for (const auto& p : pairs) similar.push_back({{"a", p.a}, {"b", p.b}, {"similarity", p.similarity}});
    return {
        {"dims", {{"subjects", r.dims[0]}, {"predicates", r.dims[1]}, {"objects", r.dims[2]}}},
        {"clusters", clusters},
        {"taxonomy", edges},
        {"rules", rules},
        {"similar_pairs", similar},
        {"spectrum", r.spectrum},
        {"derived",
         {{"similarity", counts.similarity},
          {"cluster", counts.membership},
          {"taxonomy", counts.taxonomy},
          {"rule", counts.rule}}},
    };
}

}  // namespace lhc
