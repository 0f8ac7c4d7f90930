#pragma once
// Statement store: weighted, provenance-tagged statements over interned terms.
//
// Layout:
// - Terms and sources are interned to dense indices; ids are stable for the
//   lifetime of a store.
// - Statements are keyed by (subject, predicate, object, provenance) indices.
//   Re-asserting a key replaces its weight.
// - Readers work on immutable Snapshots. The writer mutates in place while no
//   snapshot shares its state and copies first otherwise.
// - A persistent store is a directory holding a checkpoint (terms.csv,
//   sources.csv, statements.csv) plus write.log, an append-only log of
//   every write since the checkpoint, replayed on open.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lhc/csv.hpp"
#include "lhc/error.hpp"

namespace lhc {

using TermId = std::string;

enum class TermKind { entity, predicate, literal_value, observation_hub };

enum class SourceCategory { clinical, publication, linked_data, corpus, derived, feedback };

inline std::string_view to_string(TermKind k) {
    switch (k) {
        case TermKind::entity: return "entity";
        case TermKind::predicate: return "predicate";
        case TermKind::literal_value: return "literal-value";
        case TermKind::observation_hub: return "observation-hub";
    }
    return "entity";
}

inline std::optional<TermKind> parse_term_kind(std::string_view s) {
    if (s == "entity") return TermKind::entity;
    if (s == "predicate") return TermKind::predicate;
    if (s == "literal-value") return TermKind::literal_value;
    if (s == "observation-hub") return TermKind::observation_hub;
    return std::nullopt;
}

inline std::string_view to_string(SourceCategory c) {
    switch (c) {
        case SourceCategory::clinical: return "clinical";
        case SourceCategory::publication: return "publication";
        case SourceCategory::linked_data: return "linked-data";
        case SourceCategory::corpus: return "corpus";
        case SourceCategory::derived: return "derived";
        case SourceCategory::feedback: return "feedback";
    }
    return "linked-data";
}

inline std::optional<SourceCategory> parse_source_category(std::string_view s) {
    if (s == "clinical") return SourceCategory::clinical;
    if (s == "publication") return SourceCategory::publication;
    if (s == "linked-data") return SourceCategory::linked_data;
    if (s == "corpus") return SourceCategory::corpus;
    if (s == "derived") return SourceCategory::derived;
    if (s == "feedback") return SourceCategory::feedback;
    return std::nullopt;
}

struct Term {
    TermId id;
    std::string label;
    std::set<std::string> synonyms;
    TermKind kind = TermKind::entity;

    bool operator==(const Term&) const = default;
};

struct Source {
    std::string id;
    SourceCategory category = SourceCategory::linked_data;

    bool operator==(const Source&) const = default;
};

struct StatementKey {
    TermId subject;
    TermId predicate;
    TermId object;
    std::string provenance;

    auto operator<=>(const StatementKey&) const = default;
    bool operator==(const StatementKey&) const = default;
};

struct Statement {
    TermId subject;
    TermId predicate;
    TermId object;
    std::string provenance;
    double weight = 1.0;

    StatementKey key() const { return {subject, predicate, object, provenance}; }
    bool operator==(const Statement&) const = default;
};

// Orders statements by (subject, predicate, object, provenance) ids.
inline bool statement_order(const Statement& a, const Statement& b) {
    return std::tie(a.subject, a.predicate, a.object, a.provenance) <
           std::tie(b.subject, b.predicate, b.object, b.provenance);
}

struct Pattern {
    std::optional<TermId> subject;
    std::optional<TermId> predicate;
    std::optional<TermId> object;
};

inline bool valid_weight(double w) { return std::isfinite(w) && w > 0.0 && w <= 1.0; }

// Collapses whitespace runs to '_' and prefixes by kind: "t:" for entities and
// predicates, "v:" for literal values, "obs:" for observation hubs.
inline TermId canonical_term_id(std::string_view label, TermKind kind) {
    std::string body;
    bool pending_space = false;
    for (char c : label) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            pending_space = !body.empty();
            continue;
        }
        if (pending_space) body.push_back('_');
        pending_space = false;
        body.push_back(c);
    }
    switch (kind) {
        case TermKind::literal_value: return "v:" + body;
        case TermKind::observation_hub: return "obs:" + body;
        default: return "t:" + body;
    }
}

// Kind and label recovered from a bare id, used when an import references a
// term the store has not seen.
inline Term term_from_id(const TermId& id) {
    Term t;
    t.id = id;
    t.kind = TermKind::entity;
    std::string_view rest = id;
    auto strip = [&](std::string_view prefix) {
        if (rest.substr(0, prefix.size()) == prefix) {
            rest.remove_prefix(prefix.size());
            return true;
        }
        return false;
    };
    if (strip("obs:") || strip("rule:")) {
        t.kind = TermKind::observation_hub;
    } else if (strip("v:")) {
        t.kind = TermKind::literal_value;
    } else if (!strip("t:")) {
        auto cut = rest.find_last_of("/#");
        if (cut != std::string_view::npos && cut + 1 < rest.size()) rest.remove_prefix(cut + 1);
    }
    std::string label(rest);
    std::replace(label.begin(), label.end(), '_', ' ');
    t.label = label.empty() ? id : label;
    return t;
}

inline SourceCategory category_from_id(std::string_view id) {
    auto has = [&](std::string_view p) { return id.substr(0, p.size()) == p; };
    if (has("derived:")) return SourceCategory::derived;
    if (has("clinical:")) return SourceCategory::clinical;
    if (has("pub:") || has("publication:")) return SourceCategory::publication;
    if (has("corpus:")) return SourceCategory::corpus;
    if (has("feedback:")) return SourceCategory::feedback;
    return SourceCategory::linked_data;
}

// Decimal with at most 9 fractional digits, trailing zeros trimmed.
// Positive weights that round to zero serialize as the smallest step.
inline std::string format_weight(double w) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", w);
    std::string s = buf;
    if (s == "0.000000000") return "0.000000001";
    while (s.size() > 3 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
    return s;
}

// Strict decimal parse: digits, optional '.', up to 9 fractional digits.
inline std::optional<double> parse_weight(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::size_t i = 0, int_digits = 0, frac_digits = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++int_digits;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++frac_digits;
    }
    if (i != s.size() || int_digits == 0 || frac_digits > 9) return std::nullopt;
    return std::strtod(std::string(s).c_str(), nullptr);
}

// Round-trippable form used by the write log.
inline std::string exact_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", w);
    return buf;
}

namespace detail {

using Index = std::uint32_t;
using Quad = std::array<Index, 4>;  // subject, predicate, object, provenance

struct StoreState {
    std::vector<Term> terms;
    std::unordered_map<TermId, Index> term_index;
    std::vector<Source> sources;
    std::unordered_map<std::string, Index> source_index;
    std::map<Quad, double> statements;
    std::array<std::unordered_map<Index, std::set<Quad>>, 3> by_position;

    Statement materialize(const Quad& q, double w) const {
        return {terms[q[0]].id, terms[q[1]].id, terms[q[2]].id, sources[q[3]].id, w};
    }

    std::optional<Quad> find_quad(const StatementKey& k) const {
        auto s = term_index.find(k.subject);
        auto p = term_index.find(k.predicate);
        auto o = term_index.find(k.object);
        auto v = source_index.find(k.provenance);
        if (s == term_index.end() || p == term_index.end() || o == term_index.end() ||
            v == source_index.end())
            return std::nullopt;
        return Quad{s->second, p->second, o->second, v->second};
    }
};

}  // namespace detail

// Immutable view of the store at one point in time.
class Snapshot {
public:
    Snapshot() : state_(std::make_shared<detail::StoreState>()) {}
    explicit Snapshot(std::shared_ptr<const detail::StoreState> s) : state_(std::move(s)) {}

    std::size_t size() const { return state_->statements.size(); }
    bool empty() const { return state_->statements.empty(); }

    std::vector<Statement> query(const Pattern& pattern) const {
        const auto& st = *state_;
        std::array<std::optional<detail::Index>, 3> bound;
        const std::optional<TermId>* pos[3] = {&pattern.subject, &pattern.predicate, &pattern.object};
        for (int i = 0; i < 3; ++i) {
            if (!*pos[i]) continue;
            auto it = st.term_index.find(**pos[i]);
            if (it == st.term_index.end()) return {};
            bound[i] = it->second;
        }
        auto matches = [&](const detail::Quad& q) {
            for (int i = 0; i < 3; ++i)
                if (bound[i] && q[i] != *bound[i]) return false;
            return true;
        };
        // Scan the smallest posting set among the bound positions.
        const std::set<detail::Quad>* best = nullptr;
        for (int i = 0; i < 3; ++i) {
            if (!bound[i]) continue;
            auto it = st.by_position[i].find(*bound[i]);
            if (it == st.by_position[i].end()) return {};
            if (!best || it->second.size() < best->size()) best = &it->second;
        }
        std::vector<Statement> out;
        if (best) {
            for (const auto& q : *best)
                if (matches(q)) out.push_back(st.materialize(q, st.statements.at(q)));
        } else {
            out.reserve(st.statements.size());
            for (const auto& [q, w] : st.statements) out.push_back(st.materialize(q, w));
        }
        std::sort(out.begin(), out.end(), statement_order);
        return out;
    }

    std::vector<Statement> statements() const { return query({}); }

    std::optional<double> weight(const StatementKey& k) const {
        auto q = state_->find_quad(k);
        if (!q) return std::nullopt;
        auto it = state_->statements.find(*q);
        if (it == state_->statements.end()) return std::nullopt;
        return it->second;
    }

    bool has_term(const TermId& id) const { return state_->term_index.count(id) > 0; }

    const Term& term(const TermId& id) const {
        auto it = state_->term_index.find(id);
        if (it == state_->term_index.end()) throw UnknownTerm(id);
        return state_->terms[it->second];
    }

    const Term* find_term(const TermId& id) const {
        auto it = state_->term_index.find(id);
        return it == state_->term_index.end() ? nullptr : &state_->terms[it->second];
    }

    // Terms in registration order.
    const std::vector<Term>& terms() const { return state_->terms; }
    const std::vector<Source>& sources() const { return state_->sources; }

    std::optional<SourceCategory> source_category(const std::string& id) const {
        auto it = state_->source_index.find(id);
        if (it == state_->source_index.end()) return std::nullopt;
        return state_->sources[it->second].category;
    }

private:
    std::shared_ptr<const detail::StoreState> state_;
};

class StatementStore {
public:
    StatementStore() : state_(std::make_shared<detail::StoreState>()) {}

    // Opens (creating if needed) a persistent store directory and replays its log.
    static std::unique_ptr<StatementStore> open(const std::filesystem::path& dir) {
        auto store = std::make_unique<StatementStore>();
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec || !std::filesystem::is_directory(dir))
            throw IoError("cannot open store directory " + dir.string());
        store->load_checkpoint(dir);
        store->replay_log(dir / "write.log");
        store->dir_ = dir;
        store->log_.open(dir / "write.log", std::ios::app);
        if (!store->log_) throw IoError("cannot open write log in " + dir.string());
        return store;
    }

    const std::optional<std::filesystem::path>& directory() const { return dir_; }

    TermId register_term(std::string_view label, const std::set<std::string>& synonyms,
                         TermKind kind) {
        if (label.empty()) throw EmptyLabel();
        return intern_term(canonical_term_id(label, kind), std::string(label), synonyms, kind);
    }

    // Registers a term under an explicit id. An existing term keeps its label and
    // kind; new synonyms are merged into it.
    TermId intern_term(const TermId& id, const std::string& label,
                       const std::set<std::string>& synonyms, TermKind kind) {
        if (label.empty()) throw EmptyLabel();
        if (id.empty()) throw InvalidArgument("term id is empty");
        std::lock_guard lock(mu_);
        auto& st = writable();
        if (auto it = st.term_index.find(id); it != st.term_index.end()) {
            Term& t = st.terms[it->second];
            bool changed = false;
            for (const auto& s : synonyms)
                if (s != t.label && !s.empty() && t.synonyms.insert(s).second) changed = true;
            if (changed) log_term(t);
            return id;
        }
        Term t{id, label, {}, kind};
        for (const auto& s : synonyms)
            if (s != label && !s.empty()) t.synonyms.insert(s);
        st.term_index.emplace(id, static_cast<detail::Index>(st.terms.size()));
        st.terms.push_back(t);
        log_term(t);
        return id;
    }

    void register_source(const std::string& id, SourceCategory category) {
        if (id.empty()) throw InvalidArgument("source id is empty");
        std::lock_guard lock(mu_);
        auto& st = writable();
        if (auto it = st.source_index.find(id); it != st.source_index.end()) {
            if (st.sources[it->second].category != category)
                throw InvalidArgument("source " + id + " already registered with category " +
                                      std::string(to_string(st.sources[it->second].category)));
            return;
        }
        st.source_index.emplace(id, static_cast<detail::Index>(st.sources.size()));
        st.sources.push_back({id, category});
        if (log_.is_open()) csv::write_row(log_, {"S", id, std::string(to_string(category))}), log_.flush();
    }

    StatementKey assert_statement(const TermId& s, const TermId& p, const TermId& o,
                                  const std::string& prov, double w) {
        if (!valid_weight(w)) throw InvalidWeight(w);
        std::lock_guard lock(mu_);
        const auto& cur = *state_;
        auto lookup = [&](const TermId& id) {
            auto it = cur.term_index.find(id);
            if (it == cur.term_index.end()) throw UnknownTerm(id);
            return it->second;
        };
        detail::Quad q{lookup(s), lookup(p), lookup(o), 0};
        auto src = cur.source_index.find(prov);
        if (src == cur.source_index.end()) throw UnknownSource(prov);
        q[3] = src->second;
        auto& st = writable();
        st.statements[q] = w;
        for (int i = 0; i < 3; ++i) st.by_position[i][q[i]].insert(q);
        if (log_.is_open()) {
            csv::write_row(log_, {"A", s, p, o, prov, exact_weight(w)});
            log_.flush();
        }
        return {s, p, o, prov};
    }

    bool retract(const StatementKey& key) {
        std::lock_guard lock(mu_);
        auto q = state_->find_quad(key);
        if (!q || !state_->statements.count(*q)) return false;
        erase_quad(writable(), *q);
        if (log_.is_open()) {
            csv::write_row(log_, {"R", key.subject, key.predicate, key.object, key.provenance});
            log_.flush();
        }
        return true;
    }

    // Removes every statement carrying `prov`; returns how many were removed.
    std::size_t retract_provenance(const std::string& prov) {
        std::lock_guard lock(mu_);
        auto src = state_->source_index.find(prov);
        if (src == state_->source_index.end()) return 0;
        std::vector<detail::Quad> doomed;
        for (const auto& [q, w] : state_->statements)
            if (q[3] == src->second) doomed.push_back(q);
        if (doomed.empty()) return 0;
        auto& st = writable();
        for (const auto& q : doomed) erase_quad(st, q);
        if (log_.is_open()) {
            csv::write_row(log_, {"P", prov});
            log_.flush();
        }
        return doomed.size();
    }

    Snapshot snapshot() const {
        std::lock_guard lock(mu_);
        return Snapshot(state_);
    }

    std::size_t size() const { return snapshot().size(); }

    std::vector<Statement> query(const Pattern& p) const { return snapshot().query(p); }

    // Writes a fresh checkpoint and truncates the write log.
    void checkpoint() {
        if (!dir_) return;
        std::lock_guard lock(mu_);
        const auto& dir = *dir_;
        Snapshot snap(state_);
        write_atomic(dir / "terms.csv", [&](std::ostream& out) { export_terms(snap, out); });
        write_atomic(dir / "sources.csv", [&](std::ostream& out) { export_sources(snap, out); });
        write_atomic(dir / "statements.csv", [&](std::ostream& out) { export_statement_csv(snap, out); });
        log_.close();
        log_.open(dir / "write.log", std::ios::trunc);
    }

    // Term table as `id,label,synonyms` (synonyms '|'-separated).
    static void export_terms(const Snapshot& snap, std::ostream& out) {
        csv::write_row(out, {"id", "label", "synonyms", "kind"});
        for (const auto& t : snap.terms())
            csv::write_row(out, {t.id, t.label, join_synonyms(t.synonyms), std::string(to_string(t.kind))});
    }

    static void export_sources(const Snapshot& snap, std::ostream& out) {
        csv::write_row(out, {"id", "category"});
        for (const auto& s : snap.sources()) csv::write_row(out, {s.id, std::string(to_string(s.category))});
    }

    static void export_statement_csv(const Snapshot& snap, std::ostream& out) {
        csv::write_row(out, {"subject", "predicate", "object", "provenance", "weight"});
        for (const auto& s : snap.statements())
            csv::write_row(out, {s.subject, s.predicate, s.object, s.provenance, format_weight(s.weight)});
    }

    // Imports a term table. Accepts the three-column dictionary form
    // `id,label,synonyms` and the four-column form with a trailing kind.
    std::size_t import_terms(std::istream& in) {
        csv::Reader reader(in);
        auto header = reader.next();
        if (!header) return 0;
        bool with_kind = header->size() == 4;
        if (header->size() < 3 || (*header)[0] != "id" || (*header)[1] != "label" ||
            (*header)[2] != "synonyms" || (with_kind && (*header)[3] != "kind"))
            throw ParseError(header->line, 1, "expected header id,label,synonyms[,kind]");
        std::size_t n = 0;
        while (auto rec = reader.next()) {
            if (rec->size() != header->size())
                throw ParseError(rec->line, rec->fields.back().column, "wrong number of fields");
            Term t = term_from_id((*rec)[0]);
            if (with_kind) {
                auto k = parse_term_kind((*rec)[3]);
                if (!k) throw ParseError(rec->line, rec->fields[3].column, "unknown term kind");
                t.kind = *k;
            }
            if ((*rec)[0].empty()) throw ParseError(rec->line, 1, "empty term id");
            if ((*rec)[1].empty()) throw ParseError(rec->line, rec->fields[1].column, "empty label");
            intern_term((*rec)[0], (*rec)[1], split_synonyms((*rec)[2]), t.kind);
            ++n;
        }
        return n;
    }

    std::size_t import_sources(std::istream& in) {
        csv::Reader reader(in);
        csv::expect_header(reader, {"id", "category"});
        std::size_t n = 0;
        while (auto rec = reader.next()) {
            if (rec->size() != 2) throw ParseError(rec->line, 1, "wrong number of fields");
            auto c = parse_source_category((*rec)[1]);
            if (!c) throw ParseError(rec->line, rec->fields[1].column, "unknown source category");
            register_source((*rec)[0], *c);
            ++n;
        }
        return n;
    }

    // Imports statement-csv. Terms and sources the store does not know are
    // registered on the fly from their ids.
    std::size_t import_statement_csv(std::istream& in) {
        csv::Reader reader(in);
        csv::expect_header(reader, {"subject", "predicate", "object", "provenance", "weight"});
        std::vector<Statement> parsed;
        while (auto rec = reader.next()) {
            if (rec->size() != 5) {
                std::size_t col = rec->fields.back().column + rec->fields.back().value.size();
                throw ParseError(rec->line, col,
                                 "expected 5 fields (subject,predicate,object,provenance,weight), got " +
                                     std::to_string(rec->size()));
            }
            for (std::size_t i = 0; i < 4; ++i)
                if ((*rec)[i].empty()) throw ParseError(rec->line, rec->fields[i].column, "empty field");
            auto w = parse_weight((*rec)[4]);
            if (!w || !valid_weight(*w))
                throw ParseError(rec->line, rec->fields[4].column, "invalid weight '" + (*rec)[4] + "'");
            parsed.push_back({(*rec)[0], (*rec)[1], (*rec)[2], (*rec)[3], *w});
        }
        for (const auto& s : parsed) assert_with_implicit_terms(s, category_from_id(s.provenance));
        return parsed.size();
    }

    // ntriples-like export: one `<s> <p> <o> .` per line, plus a sidecar CSV
    // `line,provenance,weight` keyed by line number.
    static void export_ntriples(const Snapshot& snap, std::ostream& triples, std::ostream& sidecar) {
        csv::write_row(sidecar, {"line", "provenance", "weight"});
        std::size_t line = 0;
        for (const auto& s : snap.statements()) {
            ++line;
            triples << '<' << escape_iri(s.subject) << "> <" << escape_iri(s.predicate) << "> <"
                    << escape_iri(s.object) << "> .\n";
            csv::write_row(sidecar, {std::to_string(line), s.provenance, format_weight(s.weight)});
        }
    }

    struct ParsedTriple {
        std::size_t line;
        TermId subject, predicate, object;
    };

    // Parses ntriples-like lines. Blank lines and '#' comments are skipped.
    static std::vector<ParsedTriple> parse_ntriples(std::istream& in) {
        std::vector<ParsedTriple> out;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::size_t i = 0;
            auto skip_ws = [&] { while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i; };
            skip_ws();
            if (i == line.size() || line[i] == '#') continue;
            ParsedTriple t{lineno, {}, {}, {}};
            TermId* slots[3] = {&t.subject, &t.predicate, &t.object};
            for (auto* slot : slots) {
                skip_ws();
                if (i >= line.size() || line[i] != '<') throw ParseError(lineno, i + 1, "expected '<'");
                ++i;
                std::string v;
                bool closed = false;
                while (i < line.size()) {
                    char c = line[i++];
                    if (c == '\\') {
                        if (i >= line.size()) throw ParseError(lineno, i, "dangling escape");
                        char e = line[i++];
                        if (e == 'n') v.push_back('\n');
                        else if (e == '>' || e == '\\') v.push_back(e);
                        else throw ParseError(lineno, i - 1, "unknown escape");
                        continue;
                    }
                    if (c == '>') {
                        closed = true;
                        break;
                    }
                    v.push_back(c);
                }
                if (!closed) throw ParseError(lineno, i + 1, "unterminated '<'");
                if (v.empty()) throw ParseError(lineno, i, "empty identifier");
                *slot = std::move(v);
            }
            skip_ws();
            if (i >= line.size() || line[i] != '.') throw ParseError(lineno, i + 1, "expected terminal ' .'");
            ++i;
            skip_ws();
            if (i != line.size()) throw ParseError(lineno, i + 1, "trailing characters after '.'");
            out.push_back(std::move(t));
        }
        return out;
    }

    // Imports ntriples-like data. With a sidecar, provenance and weight come from
    // it; without one every triple gets weight 1.0 and provenance
    // `default_provenance` (category linked-data).
    std::size_t import_ntriples(std::istream& triples, std::istream* sidecar,
                                const std::string& default_provenance) {
        auto parsed = parse_ntriples(triples);
        std::map<std::size_t, std::pair<std::string, double>> meta;
        if (sidecar) {
            csv::Reader reader(*sidecar);
            csv::expect_header(reader, {"line", "provenance", "weight"});
            while (auto rec = reader.next()) {
                if (rec->size() != 3) throw ParseError(rec->line, 1, "expected 3 sidecar fields");
                std::size_t ln = 0;
                try {
                    ln = std::stoul((*rec)[0]);
                } catch (...) {
                    throw ParseError(rec->line, 1, "invalid line number");
                }
                auto w = parse_weight((*rec)[2]);
                if (!w || !valid_weight(*w))
                    throw ParseError(rec->line, rec->fields[2].column, "invalid weight");
                meta[ln] = {(*rec)[1], *w};
            }
        }
        if (!sidecar) register_source(default_provenance, SourceCategory::linked_data);
        for (const auto& t : parsed) {
            std::string prov = default_provenance;
            double w = 1.0;
            if (sidecar) {
                auto it = meta.find(t.line);
                if (it == meta.end()) throw ParseError(t.line, 1, "no sidecar entry for line");
                std::tie(prov, w) = it->second;
            }
            assert_with_implicit_terms({t.subject, t.predicate, t.object, prov, w},
                                       sidecar ? category_from_id(prov) : SourceCategory::linked_data);
        }
        return parsed.size();
    }

    static std::string escape_iri(const std::string& id) {
        std::string out;
        for (char c : id) {
            if (c == '>' || c == '\\') out.push_back('\\'), out.push_back(c);
            else if (c == '\n') out += "\\n";
            else out.push_back(c);
        }
        return out;
    }

    static std::string join_synonyms(const std::set<std::string>& syn) {
        std::string out;
        for (const auto& s : syn) {
            if (!out.empty()) out.push_back('|');
            out += s;
        }
        return out;
    }

    static std::set<std::string> split_synonyms(const std::string& field) {
        std::set<std::string> out;
        std::size_t start = 0;
        while (start <= field.size()) {
            auto bar = field.find('|', start);
            if (bar == std::string::npos) bar = field.size();
            if (bar > start) out.insert(field.substr(start, bar - start));
            start = bar + 1;
        }
        return out;
    }

private:
    detail::StoreState& writable() {
        if (state_.use_count() > 1) state_ = std::make_shared<detail::StoreState>(*state_);
        return *std::const_pointer_cast<detail::StoreState>(state_);
    }

    static void erase_quad(detail::StoreState& st, const detail::Quad& q) {
        st.statements.erase(q);
        for (int i = 0; i < 3; ++i) {
            auto it = st.by_position[i].find(q[i]);
            if (it == st.by_position[i].end()) continue;
            it->second.erase(q);
            if (it->second.empty()) st.by_position[i].erase(it);
        }
    }

    void assert_with_implicit_terms(const Statement& s, SourceCategory category) {
        // Holding a snapshot across the writes below would force a full copy.
        std::vector<Term> missing;
        bool new_source = false;
        {
            auto snap = snapshot();
            for (const auto* id : {&s.subject, &s.predicate, &s.object}) {
                if (snap.has_term(*id)) continue;
                Term t = term_from_id(*id);
                if (id == &s.predicate && t.kind == TermKind::entity) t.kind = TermKind::predicate;
                missing.push_back(std::move(t));
            }
            new_source = !snap.source_category(s.provenance);
        }
        for (const auto& t : missing) intern_term(t.id, t.label, {}, t.kind);
        if (new_source) register_source(s.provenance, category);
        assert_statement(s.subject, s.predicate, s.object, s.provenance, s.weight);
    }

    void log_term(const Term& t) {
        if (!log_.is_open()) return;
        csv::write_row(log_, {"T", t.id, t.label, join_synonyms(t.synonyms), std::string(to_string(t.kind))});
        log_.flush();
    }

    template <class Fn>
    static void write_atomic(const std::filesystem::path& path, Fn&& fn) {
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out) throw IoError("cannot write " + tmp.string());
            fn(out);
            if (!out) throw IoError("write failed for " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }

    void load_checkpoint(const std::filesystem::path& dir) {
        auto load = [&](const char* name, auto&& fn) {
            std::ifstream in(dir / name);
            if (in) fn(in);
        };
        load("terms.csv", [&](std::istream& in) { import_terms(in); });
        load("sources.csv", [&](std::istream& in) { import_sources(in); });
        load("statements.csv", [&](std::istream& in) { import_statement_csv(in); });
    }

    void replay_log(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) return;
        csv::Reader reader(in);
        while (auto rec = reader.next()) {
            const auto& op = (*rec)[0];
            auto need = [&](std::size_t n) {
                if (rec->size() != n) throw ParseError(rec->line, 1, "corrupt write log record");
            };
            if (op == "T") {
                need(5);
                auto k = parse_term_kind((*rec)[4]);
                if (!k) throw ParseError(rec->line, rec->fields[4].column, "corrupt term kind");
                intern_term((*rec)[1], (*rec)[2], split_synonyms((*rec)[3]), *k);
            } else if (op == "S") {
                need(3);
                auto c = parse_source_category((*rec)[2]);
                if (!c) throw ParseError(rec->line, rec->fields[2].column, "corrupt source category");
                register_source((*rec)[1], *c);
            } else if (op == "A") {
                need(6);
                double w = std::strtod((*rec)[5].c_str(), nullptr);
                if (!valid_weight(w)) throw ParseError(rec->line, rec->fields[5].column, "corrupt weight");
                assert_statement((*rec)[1], (*rec)[2], (*rec)[3], (*rec)[4], w);
            } else if (op == "R") {
                need(5);
                retract({(*rec)[1], (*rec)[2], (*rec)[3], (*rec)[4]});
            } else if (op == "P") {
                need(2);
                retract_provenance((*rec)[1]);
            } else {
                throw ParseError(rec->line, 1, "unknown write log op '" + op + "'");
            }
        }
    }

    mutable std::mutex mu_;
    std::shared_ptr<const detail::StoreState> state_;
    std::optional<std::filesystem::path> dir_;
    std::ofstream log_;
};

}  // namespace lhc
