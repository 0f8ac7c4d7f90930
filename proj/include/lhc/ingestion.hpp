#pragma once
// Source ingestion: clinical records (reified as observation hubs), corpus
// co-occurrence and verb-labelled relations, identifier mapping, and
// linked-data triple import.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lhc/csv.hpp"
#include "lhc/error.hpp"
#include "lhc/store.hpp"
#include "lhc/text.hpp"

namespace lhc {

// Predicate vocabulary shared by ingestion and analysis.
namespace vocab {
inline constexpr const char* of_patient = "ofPatient";
inline constexpr const char* has_attribute = "hasAttribute";
inline constexpr const char* has_value = "hasValue";
inline constexpr const char* at_time = "atTime";
inline constexpr const char* has_unit = "hasUnit";
inline constexpr const char* related_to = "relatedTo";
inline constexpr const char* similar_to = "similarTo";
inline constexpr const char* member_of = "memberOf";
inline constexpr const char* sub_cluster_of = "subClusterOf";
inline constexpr const char* has_antecedent_feature = "hasAntecedentFeature";
inline constexpr const char* has_consequent_feature = "hasConsequentFeature";
inline constexpr const char* has_confidence = "hasConfidence";

inline TermId id(const char* label) { return canonical_term_id(label, TermKind::predicate); }
}  // namespace vocab

// ---------------------------------------------------------------------------
// Identifier mapping

struct MappingCandidate {
    std::string surface;
    TermId target;
    double score = 0.0;
};

// Normalized labels and synonyms of a term table, precomputed for mapping.
class TermLexicon {
public:
    TermLexicon() = default;

    explicit TermLexicon(std::span<const Term> terms) {
        for (const auto& t : terms) add(t);
    }

    void add(const Term& t) {
        Entry e{t.id, {}};
        e.forms.push_back(text::normalize(t.label));
        for (const auto& s : t.synonyms) e.forms.push_back(text::normalize(s));
        for (const auto& f : e.forms)
            if (!f.empty()) {
                auto [it, inserted] = exact_.emplace(f, t.id);
                if (!inserted && t.id < it->second) it->second = t.id;
            }
        entries_.push_back(std::move(e));
    }

    bool empty() const { return entries_.empty(); }

    std::optional<MappingCandidate> map(const std::string& surface, double threshold) const {
        if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("mapping threshold must be in (0, 1]");
        auto norm = text::normalize(surface);
        if (norm.empty()) return std::nullopt;
        if (auto it = exact_.find(norm); it != exact_.end()) return MappingCandidate{surface, it->second, 1.0};
        std::optional<MappingCandidate> best;
        for (const auto& e : entries_) {
            double score = 0.0;
            for (const auto& f : e.forms) score = std::max(score, text::trigram_jaccard(norm, f));
            if (score < threshold) continue;
            if (!best || score > best->score || (score == best->score && e.id < best->target))
                best = MappingCandidate{surface, e.id, score};
        }
        return best;
    }

private:
    struct Entry {
        TermId id;
        std::vector<std::string> forms;
    };
    std::vector<Entry> entries_;
    std::map<std::string, TermId> exact_;
};

inline std::optional<MappingCandidate> map_identifier(const std::string& surface, std::span<const Term> terms,
                                                      double threshold) {
    return TermLexicon(terms).map(surface, threshold);
}

// ---------------------------------------------------------------------------
// Clinical records

struct ClinicalRecordRow {
    std::string patient;
    std::string attribute;
    std::string value;
    std::string time;
    std::optional<std::string> unit;
};

struct Observation {
    TermId hub;
    std::vector<std::pair<TermId, TermId>> facets;  // (predicate, value)
};

struct MalformedRow {
    std::size_t row = 0;  // 1-based data row index
    std::string reason;
};

struct ClinicalIngestResult {
    std::vector<Observation> observations;
    std::vector<MalformedRow> errors;
    std::size_t statements = 0;
};

inline bool is_iso8601(const std::string& s) {
    static const std::regex re(
        R"(\d{4}-\d{2}-\d{2}(T\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:\d{2})?)?)");
    return std::regex_match(s, re);
}

inline bool is_numeric(const std::string& s) {
    static const std::regex re(R"([+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)");
    return std::regex_match(s, re);
}

// Reads `patient,attribute,value,time,unit`. Rows with the wrong field count
// are kept with empty patient so ingest_clinical reports them as malformed.
inline std::vector<ClinicalRecordRow> read_clinical_csv(std::istream& in) {
    csv::Reader reader(in);
    csv::expect_header(reader, {"patient", "attribute", "value", "time", "unit"});
    std::vector<ClinicalRecordRow> rows;
    while (auto rec = reader.next()) {
        if (rec->size() != 5) {
            rows.push_back({});
            continue;
        }
        ClinicalRecordRow r{(*rec)[0], (*rec)[1], (*rec)[2], (*rec)[3], std::nullopt};
        if (!(*rec)[4].empty()) r.unit = (*rec)[4];
        rows.push_back(std::move(r));
    }
    return rows;
}

// One observation hub per row, with facets ofPatient, hasAttribute, hasValue
// and, when present, atTime and hasUnit. Every facet statement has weight 1.0.
// Non-numeric values are mapped onto existing terms when their normalized form
// matches exactly; otherwise they become new entity terms.
inline ClinicalIngestResult ingest_clinical(StatementStore& store, std::span<const ClinicalRecordRow> rows,
                                            const std::string& prov) {
    store.register_source(prov, SourceCategory::clinical);
    if (store.snapshot().source_category(prov) != SourceCategory::clinical)
        throw InvalidArgument("clinical ingestion needs a clinical source");
    const char* predicates[] = {vocab::of_patient, vocab::has_attribute, vocab::has_value, vocab::at_time,
                                vocab::has_unit};
    for (auto* p : predicates) store.register_term(p, {}, TermKind::predicate);

    std::vector<Term> entities;
    for (const auto& t : store.snapshot().terms())
        if (t.kind == TermKind::entity) entities.push_back(t);
    TermLexicon lexicon(entities);

    ClinicalIngestResult result;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::size_t index = i + 1;
        std::string reason;
        if (row.patient.empty()) reason = "missing patient";
        else if (row.attribute.empty()) reason = "missing attribute";
        else if (row.value.empty()) reason = "missing value";
        else if (!row.time.empty() && !is_iso8601(row.time)) reason = "unparseable time '" + row.time + "'";
        if (!reason.empty()) {
            result.errors.push_back({index, reason});
            continue;
        }
        Observation obs;
        obs.hub = store.intern_term("obs:" + prov + "#" + std::to_string(index),
                                    "observation " + std::to_string(index) + " of " + prov, {},
                                    TermKind::observation_hub);
        auto patient = store.register_term(row.patient, {}, TermKind::entity);
        auto attribute = store.register_term(row.attribute, {}, TermKind::predicate);
        TermId value;
        if (is_numeric(row.value)) {
            value = store.register_term(row.value, {}, TermKind::literal_value);
        } else if (auto m = lexicon.map(row.value, 1.0)) {
            value = m->target;
        } else {
            value = store.register_term(row.value, {}, TermKind::entity);
            lexicon.add(store.snapshot().term(value));
        }
        obs.facets.emplace_back(vocab::id(vocab::of_patient), patient);
        obs.facets.emplace_back(vocab::id(vocab::has_attribute), attribute);
        obs.facets.emplace_back(vocab::id(vocab::has_value), value);
        if (!row.time.empty())
            obs.facets.emplace_back(vocab::id(vocab::at_time),
                                    store.register_term(row.time, {}, TermKind::literal_value));
        if (row.unit)
            obs.facets.emplace_back(vocab::id(vocab::has_unit),
                                    store.register_term(*row.unit, {}, TermKind::literal_value));
        for (const auto& [p, v] : obs.facets) store.assert_statement(obs.hub, p, v, prov, 1.0);
        result.statements += obs.facets.size();
        result.observations.push_back(std::move(obs));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Corpus co-occurrence

struct CorpusDocument {
    std::string doc_id;
    std::string text;
};

struct CooccurrenceCount {
    TermId term_a;
    TermId term_b;
    std::size_t joint = 0;
    std::size_t count_a = 0;
    std::size_t count_b = 0;
    std::size_t total_windows = 0;

    bool operator==(const CooccurrenceCount&) const = default;
};

inline text::DictionaryMatcher make_matcher(std::span<const Term> dictionary) {
    text::DictionaryMatcher m;
    for (const auto& t : dictionary) {
        m.add(t.label, t.id);
        for (const auto& s : t.synonyms) m.add(s, t.id);
    }
    return m;
}

// Windows are `window` consecutive sentences of one document; a document with
// fewer sentences forms a single window. Every window of the corpus counts
// toward total_windows, matched or not.
inline std::vector<CooccurrenceCount> extract_cooccurrences(std::span<const CorpusDocument> docs,
                                                            std::span<const Term> dictionary, std::size_t window) {
    if (window == 0) throw InvalidArgument("window must be >= 1");
    auto matcher = make_matcher(dictionary);
    std::map<TermId, std::size_t> single;
    std::map<std::pair<TermId, TermId>, std::size_t> joint;
    std::size_t total = 0;
    for (const auto& doc : docs) {
        auto sentences = text::split_sentences(doc.text);
        if (sentences.empty()) continue;
        std::vector<std::set<TermId>> found;
        for (const auto& s : sentences) {
            std::set<TermId> terms;
            for (const auto& m : matcher.match(s)) terms.insert(m.term);
            found.push_back(std::move(terms));
        }
        std::size_t n_windows = sentences.size() >= window ? sentences.size() - window + 1 : 1;
        for (std::size_t w = 0; w < n_windows; ++w) {
            ++total;
            std::set<TermId> in_window;
            for (std::size_t k = w; k < std::min(w + window, sentences.size()); ++k)
                in_window.insert(found[k].begin(), found[k].end());
            for (const auto& t : in_window) ++single[t];
            for (auto a = in_window.begin(); a != in_window.end(); ++a)
                for (auto b = std::next(a); b != in_window.end(); ++b) ++joint[{*a, *b}];
        }
    }
    std::vector<CooccurrenceCount> out;
    for (const auto& [pair, n] : joint)
        out.push_back({pair.first, pair.second, n, single[pair.first], single[pair.second], total});
    return out;
}

// Normalized PMI in [-1, 1]; a pair present in every window scores 1.
inline double npmi(const CooccurrenceCount& c) {
    if (c.joint == 0) return -1.0;
    if (c.joint == c.total_windows) return 1.0;
    double joint = static_cast<double>(c.joint);
    double total = static_cast<double>(c.total_windows);
    double pmi = std::log2((joint * total) / (static_cast<double>(c.count_a) * static_cast<double>(c.count_b)));
    return pmi / -std::log2(joint / total);
}

// One relatedTo statement per unordered pair with positive npmi.
inline std::vector<Statement> cooccurrences_to_statements(std::span<const CooccurrenceCount> counts,
                                                          const std::string& prov) {
    std::vector<Statement> out;
    for (const auto& c : counts) {
        double w = npmi(c);
        if (!(w > 0.0)) continue;
        w = std::min(w, 1.0);
        auto [a, b] = std::minmax(c.term_a, c.term_b);
        out.push_back({a, vocab::id(vocab::related_to), b, prov, w});
    }
    std::sort(out.begin(), out.end(), statement_order);
    return out;
}

// verb (lowercase) -> predicate term id
using VerbLexicon = std::map<std::string, TermId>;

// Reads `verb,predicate_label` and registers each predicate term.
inline VerbLexicon read_verb_lexicon(std::istream& in, StatementStore& store) {
    csv::Reader reader(in);
    csv::expect_header(reader, {"verb", "predicate_label"});
    VerbLexicon lex;
    while (auto rec = reader.next()) {
        if (rec->size() != 2 || (*rec)[0].empty() || (*rec)[1].empty())
            throw ParseError(rec->line, 1, "expected verb,predicate_label");
        lex[text::to_lower((*rec)[0])] = store.register_term((*rec)[1], {}, TermKind::predicate);
    }
    return lex;
}

// Every ordered pair of mentions of distinct terms in a sentence, with a
// lexicon verb token between them, is one match for (first, predicate,
// second). Weight is min(1, matches / 5) over the corpus.
inline std::vector<Statement> relation_label_pass(std::span<const CorpusDocument> docs,
                                                  std::span<const Term> dictionary, const VerbLexicon& lexicon,
                                                  const std::string& prov) {
    auto matcher = make_matcher(dictionary);
    std::map<std::tuple<TermId, TermId, TermId>, std::size_t> matches;
    for (const auto& doc : docs) {
        for (const auto& sentence : text::split_sentences(doc.text)) {
            auto mentions = matcher.match(sentence);
            for (std::size_t i = 0; i < mentions.size(); ++i) {
                for (std::size_t j = i + 1; j < mentions.size(); ++j) {
                    if (mentions[i].term == mentions[j].term) continue;
                    auto between = std::string_view(sentence).substr(mentions[i].end,
                                                                     mentions[j].begin - mentions[i].end);
                    std::set<TermId> verbs;
                    for (const auto& tok : text::tokenize(between)) {
                        // Tokens inside an intervening mention are not verbs.
                        std::size_t abs = mentions[i].end + tok.begin;
                        bool inside = false;
                        for (std::size_t k = i + 1; k < j; ++k)
                            if (abs >= mentions[k].begin && abs < mentions[k].end) inside = true;
                        if (inside) continue;
                        if (auto it = lexicon.find(tok.text); it != lexicon.end()) verbs.insert(it->second);
                    }
                    for (const auto& p : verbs) ++matches[{mentions[i].term, p, mentions[j].term}];
                }
            }
        }
    }
    std::vector<Statement> out;
    for (const auto& [key, n] : matches) {
        const auto& [s, p, o] = key;
        out.push_back({s, p, o, prov, std::min(1.0, static_cast<double>(n) / 5.0)});
    }
    return out;
}

// Reads every `.txt` file of a directory, sorted by name; the file name is the
// document id.
inline std::vector<CorpusDocument> read_corpus_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("corpus directory not readable: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<CorpusDocument> docs;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw IoError("cannot read " + f.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        docs.push_back({f.filename().string(), ss.str()});
    }
    return docs;
}

struct CorpusIngestResult {
    std::vector<CooccurrenceCount> counts;
    std::size_t related = 0;
    std::size_t labelled = 0;
};

// Runs co-occurrence extraction and the verb-labelling pass over the store's
// entity terms and writes both statement sets under `prov`.
inline CorpusIngestResult ingest_corpus(StatementStore& store, std::span<const CorpusDocument> docs,
                                        const std::string& prov, std::size_t window, const VerbLexicon& lexicon) {
    auto category = category_from_id(prov);
    if (category != SourceCategory::publication) category = SourceCategory::corpus;
    store.register_source(prov, category);
    store.register_term(vocab::related_to, {}, TermKind::predicate);
    std::vector<Term> dictionary;
    for (const auto& t : store.snapshot().terms())
        if (t.kind == TermKind::entity) dictionary.push_back(t);
    CorpusIngestResult r;
    r.counts = extract_cooccurrences(docs, dictionary, window);
    for (const auto& s : cooccurrences_to_statements(r.counts, prov)) {
        store.assert_statement(s.subject, s.predicate, s.object, s.provenance, s.weight);
        ++r.related;
    }
    for (const auto& s : relation_label_pass(docs, dictionary, lexicon, prov)) {
        store.assert_statement(s.subject, s.predicate, s.object, s.provenance, s.weight);
        ++r.labelled;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Linked data

// Imports ntriples-like lines as weight-1.0 statements under a linked-data
// source. An IRI whose local name matches an existing term's label or synonym
// exactly (after normalization) resolves to that term; any other IRI is
// interned under its own id. Returns the number of distinct statements.
inline std::size_t import_linked_data(StatementStore& store, std::istream& in, const std::string& prov) {
    auto triples = StatementStore::parse_ntriples(in);
    store.register_source(prov, SourceCategory::linked_data);
    std::vector<Term> known;
    for (const auto& t : store.snapshot().terms())
        if (t.kind == TermKind::entity || t.kind == TermKind::predicate) known.push_back(t);
    TermLexicon lexicon(known);
    std::map<std::string, TermId> resolved;
    auto resolve = [&](const std::string& iri, TermKind kind) {
        if (auto it = resolved.find(iri); it != resolved.end()) return it->second;
        TermId id;
        if (store.snapshot().has_term(iri)) {
            id = iri;
        } else {
            Term t = term_from_id(iri);
            if (auto m = lexicon.map(t.label, 1.0)) {
                id = m->target;
            } else {
                id = store.intern_term(iri, t.label, {}, kind);
                lexicon.add(store.snapshot().term(id));
            }
        }
        resolved[iri] = id;
        return id;
    };
    std::set<StatementKey> distinct;
    for (const auto& t : triples) {
        auto s = resolve(t.subject, TermKind::entity);
        auto p = resolve(t.predicate, TermKind::predicate);
        auto o = resolve(t.object, TermKind::entity);
        distinct.insert(store.assert_statement(s, p, o, prov, 1.0));
    }
    return distinct.size();
}

}  // namespace lhc
