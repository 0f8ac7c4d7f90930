#include <gtest/gtest.h>

#include <random>

#include "lhc/analysis.hpp"
#include "oracles.hpp"

using namespace lhc;

namespace {

// Random store with weights drawn from a small grid so ties are common.
std::unique_ptr<StatementStore> random_store(std::mt19937& rng, std::size_t n_stmts, std::size_t n_terms,
                                             std::size_t n_preds, bool grid = true) {
    auto owned = std::make_unique<StatementStore>();
    auto& store = *owned;
    store.register_source("pub:a", SourceCategory::publication);
    store.register_source("pub:b", SourceCategory::publication);
    for (std::size_t i = 0; i < n_terms; ++i) store.intern_term("t:e" + std::to_string(i), "e", {}, TermKind::entity);
    for (std::size_t i = 0; i < n_preds; ++i)
        store.intern_term("t:p" + std::to_string(i), "p", {}, TermKind::predicate);
    std::uniform_int_distribution<std::size_t> term(0, n_terms - 1), pred(0, n_preds - 1), src(0, 1);
    std::uniform_int_distribution<int> step(1, 4);
    std::uniform_real_distribution<double> real(0.01, 1.0);
    for (std::size_t i = 0; i < n_stmts; ++i)
        store.assert_statement("t:e" + std::to_string(term(rng)), "t:p" + std::to_string(pred(rng)),
                               "t:e" + std::to_string(term(rng)), src(rng) ? "pub:a" : "pub:b",
                               grid ? step(rng) / 4.0 : real(rng));
    return owned;
}

MatrixView random_view(std::mt19937& rng, std::size_t n_stmts, std::size_t n_terms, std::size_t n_preds,
                       bool grid = true) {
    auto store = random_store(rng, n_stmts, n_terms, n_preds, grid);
    return make_view(build_tensor(store->snapshot()), ViewMode::subject_rows);
}

std::vector<std::vector<double>> centroids(const std::vector<ConceptCluster>& clusters, std::size_t cols) {
    std::vector<std::vector<double>> out;
    for (const auto& c : clusters) {
        std::vector<double> v(cols, 0.0);
        for (const auto& [i, x] : c.centroid) v[i] = x;
        out.push_back(v);
    }
    return out;
}

}  // namespace

TEST(Tensor, MaxAggregationOverProvenanceAndDerivedExcluded) {
    StatementStore store;
    for (const char* t : {"a", "b", "c"}) store.register_term(t, {}, TermKind::entity);
    store.register_term("p", {}, TermKind::predicate);
    store.register_source("pub:x", SourceCategory::publication);
    store.register_source("pub:y", SourceCategory::publication);
    store.register_source("derived:similarity", SourceCategory::derived);
    store.assert_statement("t:a", "t:p", "t:b", "pub:x", 0.3);
    store.assert_statement("t:a", "t:p", "t:b", "pub:y", 0.8);
    store.assert_statement("t:a", "t:p", "t:c", "derived:similarity", 0.9);
    auto t = build_tensor(store.snapshot());
    EXPECT_EQ(t.at("t:a", "t:p", "t:b"), 0.8);
    EXPECT_FALSE(t.at("t:a", "t:p", "t:c"));
    EXPECT_EQ(t.dims(), (std::array<std::size_t, 3>{1, 1, 1}));
}

TEST(Tensor, HubsUnrollWithMinimumFacetWeight) {
    StatementStore store;
    store.register_source("clinical:x", SourceCategory::clinical);
    store.intern_term("obs:1", "o", {}, TermKind::observation_hub);
    store.register_term("Bob", {}, TermKind::entity);
    store.register_term("diagnosis", {}, TermKind::predicate);
    store.register_term("flu", {}, TermKind::entity);
    store.register_term("2020-01-01", {}, TermKind::literal_value);
    for (const char* p : {"ofPatient", "hasAttribute", "hasValue", "atTime"}) store.register_term(p, {}, TermKind::predicate);
    store.assert_statement("obs:1", "t:ofPatient", "t:Bob", "clinical:x", 1.0);
    store.assert_statement("obs:1", "t:hasAttribute", "t:diagnosis", "clinical:x", 0.6);
    store.assert_statement("obs:1", "t:hasValue", "t:flu", "clinical:x", 0.9);
    store.assert_statement("obs:1", "t:atTime", "v:2020-01-01", "clinical:x", 1.0);
    auto t = build_tensor(store.snapshot());
    EXPECT_EQ(t.entries.size(), 1u);
    EXPECT_EQ(t.at("t:Bob", "t:diagnosis", "t:flu"), 0.6);
}

TEST(Tensor, EmptySnapshotThrows) {
    StatementStore store;
    EXPECT_THROW(build_tensor(store.snapshot()), EmptySnapshot);
}

TEST(Tensor, ViewsMatchBruteForceUnfolding) {
    std::mt19937 rng(17);
    for (int round = 0; round < 20; ++round) {
        auto store = random_store(rng, 60, 10, 3);
        auto snap = store->snapshot();
        std::map<std::tuple<TermId, TermId, TermId>, double> cube;
        for (const auto& s : snap.statements()) {
            auto& w = cube[{s.subject, s.predicate, s.object}];
            w = std::max(w, s.weight);
        }
        auto tensor = build_tensor(snap);
        for (auto mode : {ViewMode::subject_rows, ViewMode::object_rows}) {
            auto view = make_view(tensor, mode);
            EXPECT_TRUE(std::is_sorted(view.columns.begin(), view.columns.end()));
            auto dense = view.dense();
            double mass = 0;
            for (std::size_t r = 0; r < view.n_rows(); ++r)
                for (std::size_t c = 0; c < view.n_cols(); ++c) {
                    const auto& row = view.rows.id(static_cast<std::uint32_t>(r));
                    const auto& [p, other] = view.columns[c];
                    auto key = mode == ViewMode::subject_rows ? std::make_tuple(row, p, other)
                                                              : std::make_tuple(other, p, row);
                    auto it = cube.find(key);
                    ASSERT_EQ(dense[r][c], it == cube.end() ? 0.0 : it->second);
                    mass += dense[r][c];
                }
            double want = 0;
            for (const auto& [k, w] : cube) want += w;
            EXPECT_NEAR(mass, want, 1e-9);
        }
    }
}

TEST(Similarity, CosineMatchesDenseOracle) {
    std::mt19937 rng(23);
    for (int round = 0; round < 30; ++round) {
        auto view = random_view(rng, 80, 12, 3, false);
        auto dense = view.dense();
        for (std::uint32_t a = 0; a < view.n_rows(); ++a)
            for (std::uint32_t b = 0; b < view.n_rows(); ++b)
                ASSERT_NEAR(cosine(view.values[a], view.values[b]), oracle::cosine(dense[a], dense[b]), 1e-9);
        auto pairs = similar_pairs(view, 0.3);
        std::size_t expected = 0;
        for (std::uint32_t a = 0; a < view.n_rows(); ++a)
            for (std::uint32_t b = a + 1; b < view.n_rows(); ++b)
                if (oracle::cosine(dense[a], dense[b]) >= 0.3) ++expected;
        EXPECT_EQ(pairs.size(), expected);
    }
}

TEST(Similarity, PropertiesHold) {
    std::mt19937 rng(29);
    auto store = random_store(rng, 80, 10, 3, false);
    auto tensor = build_tensor(store->snapshot());
    auto view = make_view(tensor, ViewMode::subject_rows);
    auto scaled = make_view(tensor.scaled(0.37), ViewMode::subject_rows);
    for (std::uint32_t a = 0; a < view.n_rows(); ++a) {
        if (!view.values[a].empty()) {
            EXPECT_NEAR(cosine(view.values[a], view.values[a]), 1.0, 1e-12);
        }
        for (std::uint32_t b = 0; b < view.n_rows(); ++b) {
            double s = cosine(view.values[a], view.values[b]);
            EXPECT_GE(s, 0.0);
            EXPECT_LE(s, 1.0);
            EXPECT_EQ(s, cosine(view.values[b], view.values[a]));
            EXPECT_NEAR(s, cosine(scaled.values[a], scaled.values[b]), 1e-12);
        }
    }
    EXPECT_THROW(similarity(view, "t:e0", "t:nope"), UnknownTerm);
}

TEST(Clustering, MergesMatchBruteForceAgglomeration) {
    std::mt19937 rng(31);
    std::uniform_int_distribution<std::size_t> terms(3, 12), stmts(10, 60);
    std::uniform_real_distribution<double> theta(0.1, 0.9);
    for (int round = 0; round < 50; ++round) {
        auto view = random_view(rng, stmts(rng), terms(rng), 2);
        double t = theta(rng);
        auto got = cluster_terms_traced(view, t);
        auto [merges, clusters] = oracle::agglomerate(view.dense(), view.rows.ids(), t);
        ASSERT_EQ(got.merges.size(), merges.size()) << "round " << round;
        for (std::size_t i = 0; i < merges.size(); ++i) {
            EXPECT_EQ(got.merges[i].left, merges[i].left) << "round " << round << " step " << i;
            EXPECT_EQ(got.merges[i].right, merges[i].right) << "round " << round << " step " << i;
        }
        ASSERT_EQ(got.clusters.size(), clusters.size());
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            EXPECT_EQ(got.clusters[i].members, clusters[i]);
            EXPECT_EQ(got.clusters[i].id, i);
        }
    }
}

TEST(Clustering, ThresholdOneKeepsSingletonsUnlessIdentical) {
    StatementStore store;
    store.register_source("pub:x", SourceCategory::publication);
    for (const char* t : {"a", "b", "c", "x", "y"}) store.register_term(t, {}, TermKind::entity);
    store.register_term("p", {}, TermKind::predicate);
    store.assert_statement("t:a", "t:p", "t:x", "pub:x", 0.5);
    store.assert_statement("t:b", "t:p", "t:x", "pub:x", 0.5);
    store.assert_statement("t:c", "t:p", "t:y", "pub:x", 0.5);
    auto view = make_view(build_tensor(store.snapshot()), ViewMode::subject_rows);
    EXPECT_EQ(cluster_terms(view, 1.0).size(), 3u);
    auto merged = cluster_terms(view, 0.5);
    ASSERT_EQ(merged.size(), 2u);
    EXPECT_EQ(merged[0].members, (std::vector<TermId>{"t:a", "t:b"}));
    EXPECT_THROW(cluster_terms(view, 0.0), InvalidArgument);
}

TEST(Taxonomy, InclusionFormula) {
    SparseVector narrow = {{0, 1.0}}, broad = {{0, 1.0}, {1, 1.0}};
    EXPECT_DOUBLE_EQ(inclusion(narrow, broad), 1.0);
    EXPECT_DOUBLE_EQ(inclusion(broad, narrow), 0.5);
    EXPECT_DOUBLE_EQ(inclusion({}, broad), 0.0);
    SparseVector half = {{0, 0.5}, {2, 0.5}};
    EXPECT_DOUBLE_EQ(inclusion(half, broad), 0.5);
}

TEST(Taxonomy, TwoClustersGiveOneEdge) {
    std::vector<ConceptCluster> cs = {{0, {"t:a"}, {{0, 1.0}}}, {1, {"t:b"}, {{0, 1.0}, {1, 1.0}}}};
    auto edges = induce_taxonomy(cs, 0.75);
    ASSERT_EQ(edges.size(), 1u);
    EXPECT_EQ(edges[0], (TaxonomyEdge{0, 1, 1.0}));
    // Equal centroids are symmetric, so no edge either way.
    std::vector<ConceptCluster> same = {{0, {"t:a"}, {{0, 1.0}}}, {1, {"t:b"}, {{0, 1.0}}}};
    EXPECT_TRUE(induce_taxonomy(same, 0.5).empty());
}

TEST(Taxonomy, MatchesOracleAndIsAReducedDag) {
    std::mt19937 rng(37);
    std::uniform_int_distribution<int> n_clusters(2, 9), n_feats(1, 6), grid(0, 4);
    std::uniform_real_distribution<double> tau(0.3, 1.0);
    for (int round = 0; round < 200; ++round) {
        std::vector<ConceptCluster> cs;
        int f = n_feats(rng);
        for (int i = n_clusters(rng), k = 0; k < i; ++k) {
            ConceptCluster c;
            c.id = static_cast<std::size_t>(k);
            c.members = {"t:c" + std::to_string(k)};
            for (int j = 0; j < f; ++j)
                if (int g = grid(rng)) c.centroid.emplace_back(j, g / 4.0);
            cs.push_back(c);
        }
        double t = tau(rng);
        auto got = induce_taxonomy(cs, t);
        auto want = oracle::taxonomy(centroids(cs, static_cast<std::size_t>(f)), t);
        ASSERT_EQ(got.size(), want.size()) << "round " << round;
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].child, want[i].child);
            EXPECT_EQ(got[i].parent, want[i].parent);
            EXPECT_DOUBLE_EQ(got[i].inclusion, want[i].inclusion);
        }
        std::vector<oracle::Edge> as_oracle;
        for (const auto& e : got) {
            EXPECT_GE(e.inclusion, t);
            as_oracle.push_back({e.child, e.parent, e.inclusion});
        }
        for (std::size_t i = 0; i < cs.size(); ++i)
            EXPECT_FALSE(oracle::path_exists(as_oracle, i, i, cs.size())) << "cycle in round " << round;
        for (std::size_t e = 0; e < as_oracle.size(); ++e)
            EXPECT_FALSE(oracle::path_exists(as_oracle, as_oracle[e].child, as_oracle[e].parent, cs.size(), e))
                << "redundant edge in round " << round;
    }
}

TEST(Rules, MatchExhaustiveEnumeration) {
    std::mt19937 rng(41);
    std::uniform_int_distribution<int> n_tx(1, 20), n_feat(2, 9);
    std::uniform_real_distribution<double> sup(0.05, 0.6), conf(0.3, 1.0), density(0.2, 0.8);
    for (int round = 0; round < 200; ++round) {
        auto features = static_cast<std::uint32_t>(n_feat(rng));
        std::vector<Itemset> tx;
        std::bernoulli_distribution has(density(rng));
        for (int t = n_tx(rng); t > 0; --t) {
            Itemset items;
            for (std::uint32_t f = 0; f < features; ++f)
                if (has(rng)) items.push_back(f);
            tx.push_back(items);
        }
        double s = sup(rng), c = conf(rng);
        auto got = mine_rules(tx, s, c);
        auto want = oracle::rules(tx, features, s, c);
        ASSERT_EQ(got.size(), want.size()) << "round " << round;
        std::map<std::pair<Itemset, std::uint32_t>, std::pair<double, double>> index;
        for (const auto& r : want) index[{r.antecedent, r.consequent}] = {r.support, r.confidence};
        for (const auto& r : got) {
            auto it = index.find({r.antecedent, r.consequent});
            ASSERT_NE(it, index.end());
            EXPECT_DOUBLE_EQ(r.support, it->second.first);
            EXPECT_DOUBLE_EQ(r.confidence, it->second.second);
        }
        EXPECT_TRUE(std::is_sorted(got.begin(), got.end(), rule_order));
    }
}

TEST(Rules, ValidatesThresholds) {
    std::vector<Itemset> tx = {{0, 1}};
    EXPECT_THROW(mine_rules(tx, 0.0, 0.5), InvalidArgument);
    EXPECT_THROW(mine_rules(tx, 0.5, 1.5), InvalidArgument);
    auto r = mine_rules(tx, 1.0, 1.0);
    EXPECT_EQ(r.size(), 2u);
}

TEST(Decompose, SpectrumMatchesJacobiOracle) {
    std::mt19937 rng(43);
    std::uniform_int_distribution<int> dim(1, 9);
    std::uniform_real_distribution<double> val(0.0, 1.0);
    std::bernoulli_distribution sparse(0.4);
    for (int round = 0; round < 100; ++round) {
        std::size_t m = dim(rng), n = dim(rng);
        std::vector<std::vector<double>> rows(m, std::vector<double>(n, 0.0));
        for (auto& r : rows)
            for (auto& x : r)
                if (!sparse(rng)) x = val(rng);
        auto a = DenseMatrix::from_rows(rows);
        std::size_t k = std::min(m, n);
        auto d = decompose(a, k);
        auto want = oracle::singular_values(rows);
        double scale = std::max(1.0, want.front());
        for (std::size_t j = 0; j < k; ++j)
            EXPECT_NEAR(d.spectrum[j], want[j], 1e-6 * scale) << "round " << round << " component " << j;
        EXPECT_TRUE(std::is_sorted(d.spectrum.rbegin(), d.spectrum.rend(),
                                   [](double x, double y) { return x < y - 1e-9; }));
        // Full-rank reconstruction is exact; truncations follow Eckart-Young.
        for (std::size_t t = 0; t <= k; ++t) {
            double tail = 0;
            for (std::size_t j = t; j < want.size(); ++j) tail += want[j] * want[j];
            EXPECT_NEAR(reconstruction_error(a, d, t), std::sqrt(tail), 1e-5 * scale) << "round " << round;
        }
        // Column factors are orthonormal where non-null.
        for (std::size_t x = 0; x < k; ++x)
            for (std::size_t y = 0; y < k; ++y) {
                if (d.spectrum[x] < 1e-9 || d.spectrum[y] < 1e-9) continue;
                double dot = 0;
                for (std::size_t i = 0; i < n; ++i) dot += d.col_factors(i, x) * d.col_factors(i, y);
                EXPECT_NEAR(dot, x == y ? 1.0 : 0.0, 1e-6);
            }
    }
}

TEST(Decompose, RankLimitAndDeterminism) {
    auto a = DenseMatrix::from_rows({{1, 0, 2}, {0, 3, 0}});
    EXPECT_THROW(decompose(a, 3), RankTooLarge);
    EXPECT_THROW(decompose(a, 0), RankTooLarge);
    auto x = decompose(a, 2), y = decompose(a, 2);
    EXPECT_EQ(x.spectrum, y.spectrum);
    EXPECT_NEAR(x.spectrum[0], 3.0, 1e-9);
    EXPECT_NEAR(x.spectrum[1], std::sqrt(5.0), 1e-9);
    // The 2x3 example has the same row similarity in latent and raw space.
    EXPECT_NEAR(x.latent_similarity(0, 1), 0.0, 1e-9);
}

TEST(Analysis, MaterializeIsIdempotent) {
    std::mt19937 rng(47);
    auto store = random_store(rng, 80, 10, 3);
    AnalysisConfig cfg;
    cfg.theta_sim = 0.3;
    cfg.tau_tax = 0.5;
    cfg.minsup = 0.1;
    cfg.minconf = 0.5;
    auto first = analyze(store->snapshot(), cfg);
    auto c1 = materialize(*store, first);
    auto after_first = store->snapshot().statements();
    // Derived statements never feed back into analysis.
    auto second = analyze(store->snapshot(), cfg);
    auto c2 = materialize(*store, second);
    EXPECT_EQ(store->snapshot().statements(), after_first);
    EXPECT_EQ(c1.total(), c2.total());
    EXPECT_EQ(c2.removed, c1.total());
    EXPECT_EQ(report_json(first, c1, 20).dump(), report_json(second, c2, 20).dump());
    std::size_t derived = 0;
    auto snap = store->snapshot();
    for (const auto& s : snap.statements())
        if (snap.source_category(s.provenance) == SourceCategory::derived) ++derived;
    EXPECT_EQ(derived, c1.total());
}

TEST(Analysis, EveryTermBelongsToExactlyOneCluster) {
    std::mt19937 rng(53);
    auto store = random_store(rng, 60, 12, 3);
    auto r = analyze(store->snapshot(), {});
    std::map<TermId, int> seen;
    for (const auto& c : r.clusters)
        for (const auto& m : c.members) ++seen[m];
    EXPECT_EQ(seen.size(), r.view.n_rows());
    for (const auto& [t, n] : seen) EXPECT_EQ(n, 1) << t;
}
