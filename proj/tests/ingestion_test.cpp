#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lhc/ingestion.hpp"
#include "oracles.hpp"

using namespace lhc;

namespace {

std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(LHC_FIXTURES) / rel; }

std::vector<Term> dictionary_of(const std::string& rel) {
    StatementStore store;
    std::ifstream in(fixture(rel));
    store.import_terms(in);
    return store.snapshot().terms();
}

std::vector<std::string> texts(const std::vector<CorpusDocument>& docs) {
    std::vector<std::string> out;
    for (const auto& d : docs) out.push_back(d.text);
    return out;
}

void expect_counts_match_oracle(const std::vector<CorpusDocument>& docs, const std::vector<Term>& dict,
                                std::size_t window) {
    auto got = extract_cooccurrences(docs, dict, window);
    auto want = oracle::cooccurrence(texts(docs), dict, window);
    ASSERT_EQ(got.size(), want.joint.size()) << "window " << window;
    for (const auto& c : got) {
        SCOPED_TRACE(c.term_a + " / " + c.term_b);
        EXPECT_EQ(c.joint, want.joint.at({c.term_a, c.term_b}));
        EXPECT_EQ(c.count_a, want.single.at(c.term_a));
        EXPECT_EQ(c.count_b, want.single.at(c.term_b));
        EXPECT_EQ(c.total_windows, want.total);
        EXPECT_NEAR(npmi(c), oracle::npmi(c.joint, c.count_a, c.count_b, c.total_windows), 1e-12);
    }
}

}  // namespace

TEST(Text, Normalize) {
    EXPECT_EQ(text::normalize("  Heart-Attack,   Acute "), "heartattack acute");
    EXPECT_EQ(text::normalize("HLA-B*57:01"), "hlab5701");
    EXPECT_EQ(text::normalize("..."), "");
}

TEST(Text, TrigramJaccardByHand) {
    // zidovudin has 7 trigrams, all shared with zidovudine's 8.
    EXPECT_DOUBLE_EQ(text::trigram_jaccard("zidovudin", "zidovudine"), 7.0 / 8.0);
    // "aaaa" = {aaa:2}, "aaa" = {aaa:1}: multiset min/max gives 1/2.
    EXPECT_DOUBLE_EQ(text::trigram_jaccard("aaaa", "aaa"), 0.5);
    EXPECT_DOUBLE_EQ(text::trigram_jaccard("ab", "ab"), 0.0);
    EXPECT_DOUBLE_EQ(text::trigram_jaccard("abc", "xyz"), 0.0);
}

TEST(Text, SentencesMatchOracle) {
    for (const char* doc : {"One. Two! Three? Four", "a.b c. d", "  trailing space.  ", "", "x!y. z",
                            "No terminal punctuation at all"}) {
        EXPECT_EQ(text::split_sentences(doc), oracle::sentences(doc)) << doc;
    }
}

TEST(Text, MatcherIsLongestFirstWholeWordCaseInsensitive) {
    text::DictionaryMatcher m;
    m.add("heart", "t:heart");
    m.add("heart attack", "t:heart_attack");
    m.add("HIV", "t:HIV");
    auto got = m.match("A Heart Attack and HIVE and hiv.");
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].term, "t:heart_attack");
    EXPECT_EQ(got[1].term, "t:HIV");
    EXPECT_EQ(got[1].begin, 28u);
}

TEST(Text, MatcherAgreesWithOracleOnRandomSentences) {
    std::vector<Term> dict = {{"t:a", "alpha", {"al"}, TermKind::entity},
                              {"t:ab", "alpha beta", {}, TermKind::entity},
                              {"t:b", "beta", {"b-1"}, TermKind::entity},
                              {"t:g", "gamma", {"alpha"}, TermKind::entity}};
    auto matcher = make_matcher(dict);
    auto surfaces = oracle::surfaces_of(dict);
    const char* words[] = {"alpha", "beta", "Alpha", "al", "b-1", "gamma", "x", "alphabet", "beta,", "."};
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> pick(0, 9), len(1, 10);
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        for (int k = len(rng); k > 0; --k) s += std::string(words[pick(rng)]) + " ";
        auto got = matcher.match(s);
        auto want = oracle::mentions(s, surfaces);
        ASSERT_EQ(got.size(), want.size()) << s;
        for (std::size_t j = 0; j < got.size(); ++j) {
            EXPECT_EQ(got[j].term, want[j].term) << s;
            EXPECT_EQ(got[j].begin, want[j].begin) << s;
        }
    }
}

TEST(Mapping, ExactThenFuzzy) {
    auto dict = dictionary_of("toy/dictionary.csv");
    auto exact = map_identifier("myocardial  infarction", dict, 0.6);
    ASSERT_TRUE(exact);
    EXPECT_EQ(exact->target, "t:Heart_attack");
    EXPECT_EQ(exact->score, 1.0);
    auto fuzzy = map_identifier("Zidovudin", dict, 0.6);
    ASSERT_TRUE(fuzzy);
    EXPECT_EQ(fuzzy->target, "t:Zidovudine");
    EXPECT_DOUBLE_EQ(fuzzy->score, 0.875);
    EXPECT_FALSE(map_identifier("Zidovudin", dict, 0.9));
    EXPECT_FALSE(map_identifier("ibuprofen", dict, 0.6));
    EXPECT_THROW(map_identifier("x", dict, 0.0), InvalidArgument);
}

TEST(Mapping, FuzzyAgreesWithExhaustiveScore) {
    auto dict = dictionary_of("toy/dictionary.csv");
    for (const char* q : {"Abacavr", "lipodistrophy", "hypertensoin", "coronary diseas", "lamivudin", "HIV virus"}) {
        double best = 0;
        std::string target;
        for (const auto& t : dict) {
            std::vector<std::string> forms = {t.label};
            forms.insert(forms.end(), t.synonyms.begin(), t.synonyms.end());
            for (const auto& f : forms) {
                double s = text::trigram_jaccard(text::normalize(q), text::normalize(f));
                if (s > best || (s == best && !target.empty() && t.id < target)) best = s, target = t.id;
            }
        }
        auto got = map_identifier(q, dict, 0.3);
        if (best < 0.3) {
            EXPECT_FALSE(got) << q;
            continue;
        }
        ASSERT_TRUE(got) << q;
        EXPECT_EQ(got->target, target) << q;
        EXPECT_DOUBLE_EQ(got->score, best) << q;
    }
}

TEST(Clinical, ToyPatientsGiveTwentySixStatements) {
    StatementStore store;
    std::ifstream dict(fixture("toy/dictionary.csv"));
    store.import_terms(dict);
    std::ifstream in(fixture("toy/patients.csv"));
    auto rows = read_clinical_csv(in);
    auto r = ingest_clinical(store, rows, "clinical:toy");
    EXPECT_EQ(r.observations.size(), 6u);
    EXPECT_EQ(r.statements, 26u);
    EXPECT_TRUE(r.errors.empty());
    auto snap = store.snapshot();
    EXPECT_EQ(snap.size(), 26u);
    // "hypertension" resolves onto the dictionary term.
    EXPECT_TRUE(snap.weight({"obs:clinical:toy#4", "t:hasValue", "t:Hypertension", "clinical:toy"}));
    EXPECT_TRUE(snap.weight({"obs:clinical:toy#3", "t:hasValue", "v:140", "clinical:toy"}));
    EXPECT_TRUE(snap.weight({"obs:clinical:toy#3", "t:hasUnit", "v:mmHg", "clinical:toy"}));
    EXPECT_EQ(snap.term("obs:clinical:toy#1").kind, TermKind::observation_hub);
    for (const auto& s : snap.statements()) EXPECT_EQ(s.weight, 1.0);
}

TEST(Clinical, MalformedRowsAreCollected) {
    std::stringstream in(
        "patient,attribute,value,time,unit\n"
        "Ann,weight,70,2020-01-01,kg\n"
        ",weight,70,2020-01-01,kg\n"
        "Ann,weight,,2020-01-01,kg\n"
        "Ann,weight,71,yesterday,kg\n"
        "Ann,weight\n"
        "Ann,weight,72,,\n");
    StatementStore store;
    auto r = ingest_clinical(store, read_clinical_csv(in), "clinical:x");
    EXPECT_EQ(r.observations.size(), 2u);
    EXPECT_EQ(r.statements, 5u + 3u);
    ASSERT_EQ(r.errors.size(), 4u);
    EXPECT_EQ(r.errors[0].row, 2u);
    EXPECT_EQ(r.errors[1].row, 3u);
    EXPECT_EQ(r.errors[2].row, 4u);
    EXPECT_EQ(r.errors[3].row, 5u);
}

TEST(Corpus, NpmiPinnedValue) {
    CooccurrenceCount c{"t:a", "t:b", 3, 4, 5, 20};
    EXPECT_NEAR(npmi(c), 0.5790947844209207, 1e-12);
    EXPECT_EQ(npmi({"t:a", "t:b", 7, 7, 7, 7}), 1.0);
    // Independent terms score 0 and are dropped.
    CooccurrenceCount indep{"t:a", "t:b", 1, 2, 2, 4};
    EXPECT_NEAR(npmi(indep), 0.0, 1e-15);
    EXPECT_TRUE(cooccurrences_to_statements(std::vector{indep}, "corpus:x").empty());
}

TEST(Corpus, ToyCountsMatchWindowEnumeration) {
    auto docs = read_corpus_dir(fixture("toy/corpus"));
    ASSERT_EQ(docs.size(), 5u);
    auto dict = dictionary_of("toy/dictionary.csv");
    for (std::size_t w = 1; w <= 4; ++w) expect_counts_match_oracle(docs, dict, w);
}

TEST(Corpus, ApobecCountsMatchWindowEnumeration) {
    auto docs = read_corpus_dir(fixture("apobec/corpus"));
    auto dict = dictionary_of("apobec/dictionary.csv");
    for (std::size_t w = 1; w <= 3; ++w) expect_counts_match_oracle(docs, dict, w);
}

TEST(Corpus, RandomCorporaMatchWindowEnumeration) {
    std::vector<Term> dict = {{"t:a", "alpha", {}, TermKind::entity},
                              {"t:b", "beta", {"bb"}, TermKind::entity},
                              {"t:c", "gamma ray", {}, TermKind::entity},
                              {"t:d", "delta", {}, TermKind::entity}};
    const char* words[] = {"alpha", "beta", "bb", "gamma", "ray", "delta", "noise", "filler", "x."};
    std::mt19937 rng(21);
    std::uniform_int_distribution<int> pick(0, 8), len(5, 40), ndocs(1, 5), win(1, 4);
    for (int round = 0; round < 50; ++round) {
        std::vector<CorpusDocument> docs;
        for (int d = ndocs(rng); d > 0; --d) {
            std::string t;
            for (int k = len(rng); k > 0; --k) t += std::string(words[pick(rng)]) + " ";
            docs.push_back({"d" + std::to_string(d), t});
        }
        expect_counts_match_oracle(docs, dict, static_cast<std::size_t>(win(rng)));
    }
}

TEST(Corpus, RelationPassMatchesOracle) {
    auto docs = read_corpus_dir(fixture("toy/corpus"));
    auto dict = dictionary_of("toy/dictionary.csv");
    VerbLexicon lex;
    std::map<std::string, std::string> verbs;
    for (const char* v : {"causes", "treats", "predicts"}) lex[v] = verbs[v] = std::string("t:") + v;
    auto got = relation_label_pass(docs, dict, lex, "corpus:toy");
    auto want = oracle::relation_matches(texts(docs), dict, verbs);
    ASSERT_EQ(got.size(), want.size());
    for (const auto& s : got) {
        auto n = want.at({s.subject, s.predicate, s.object});
        EXPECT_DOUBLE_EQ(s.weight, std::min(1.0, n / 5.0));
    }
    EXPECT_TRUE(want.count({"t:Abacavir", "t:causes", "t:Lipodystrophy"}));
    EXPECT_TRUE(want.count({"t:HLA-B*57:01", "t:predicts", "t:Hypersensitivity"}));
}

TEST(Corpus, IngestWritesRelatedAndLabelledStatements) {
    StatementStore store;
    std::ifstream dict(fixture("apobec/dictionary.csv"));
    store.import_terms(dict);
    std::ifstream lexf(fixture("apobec/lexicon.csv"));
    auto lex = read_verb_lexicon(lexf, store);
    auto docs = read_corpus_dir(fixture("apobec/corpus"));
    auto r = ingest_corpus(store, docs, "corpus:apobec", 1, lex);
    EXPECT_EQ(store.snapshot().source_category("corpus:apobec"), SourceCategory::corpus);
    auto snap = store.snapshot();
    auto related = snap.query({std::nullopt, std::string("t:relatedTo"), std::nullopt});
    EXPECT_EQ(related.size(), r.related);
    for (const auto& s : related) {
        EXPECT_LT(s.subject, s.object);
        EXPECT_GT(s.weight, 0.0);
    }
    EXPECT_TRUE(snap.weight({"t:APOBEC3G", "t:inhibits", "t:HIV", "corpus:apobec"}));
    EXPECT_TRUE(snap.weight({"t:APOBEC3F", "t:relatedTo", "t:IL-27", "corpus:apobec"}));
    EXPECT_FALSE(snap.weight({"t:APOBEC3G", "t:relatedTo", "t:IL-27", "corpus:apobec"}));
}

TEST(LinkedData, IrisResolveOntoDictionaryTerms) {
    StatementStore store;
    std::ifstream dict(fixture("toy/dictionary.csv"));
    store.import_terms(dict);
    std::ifstream in(fixture("toy/linked.nt"));
    EXPECT_EQ(import_linked_data(store, in, "bio2rdf"), 8u);
    auto snap = store.snapshot();
    EXPECT_TRUE(snap.weight({"t:Abacavir", "http://bio2rdf.org/ns/hasAdverseEffect", "t:Lipodystrophy", "bio2rdf"}));
    EXPECT_TRUE(snap.weight({"http://bio2rdf.org/fda/alert-abacavir", "http://bio2rdf.org/ns/recommendsScreeningFor",
                             "t:HLA-B*57:01", "bio2rdf"}));
    EXPECT_EQ(snap.source_category("bio2rdf"), SourceCategory::linked_data);
}

TEST(LinkedData, DuplicatesCollapseAndEmptyImportsNothing) {
    StatementStore store;
    std::ifstream ten(fixture("data/ten_triples.nt"));
    EXPECT_EQ(import_linked_data(store, ten, "ld"), 9u);
    std::ifstream empty(fixture("data/empty.nt"));
    EXPECT_EQ(import_linked_data(store, empty, "ld"), 0u);
    EXPECT_EQ(store.size(), 9u);
}
