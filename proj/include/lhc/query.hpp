#pragma once
// Read-side services over a snapshot (search, neighborhood, hypothesis
// scoring, generalized precision/recall) and the feedback write path.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lhc/analysis.hpp"
#include "lhc/error.hpp"
#include "lhc/ingestion.hpp"
#include "lhc/store.hpp"
#include "lhc/text.hpp"

namespace lhc {

inline constexpr double kSearchMappingThreshold = 0.6;
inline constexpr std::size_t kMaxSpanTokens = 6;

struct RankedResult {
    Statement statement;
    double relevance = 0.0;
    std::set<TermId> match_terms;

    bool operator==(const RankedResult&) const = default;
};

// Relevance desc, then statement order.
inline bool ranked_order(const RankedResult& a, const RankedResult& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return statement_order(a.statement, b.statement);
}

// Terms a free-text query can resolve to: entities and literal values.
inline TermLexicon search_lexicon(const Snapshot& snap) {
    TermLexicon lex;
    for (const auto& t : snap.terms())
        if (t.kind == TermKind::entity || t.kind == TermKind::literal_value) lex.add(t);
    return lex;
}

// Maps every contiguous span of up to kMaxSpanTokens query tokens; keeps the
// best score per matched term.
inline std::map<TermId, double> match_query_terms(const std::string& query, const TermLexicon& lex,
                                                  double threshold = kSearchMappingThreshold) {
    auto tokens = text::tokenize(query);
    std::map<TermId, double> matched;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        for (std::size_t j = i; j < std::min(tokens.size(), i + kMaxSpanTokens); ++j) {
            auto surface = query.substr(tokens[i].begin, tokens[j].end - tokens[i].begin);
            if (auto m = lex.map(surface, threshold)) {
                auto& best = matched[m->target];
                best = std::max(best, m->score);
            }
        }
    return matched;
}

inline std::vector<RankedResult> search(const Snapshot& snap, const std::string& query, std::size_t limit) {
    if (text::normalize(query).empty()) throw InvalidArgument("query is empty");
    if (limit == 0) throw InvalidArgument("limit must be positive");
    auto matched = match_query_terms(query, search_lexicon(snap));
    if (matched.empty()) throw NoMatch(query);
    std::map<StatementKey, RankedResult> hits;
    for (const auto& [term, score] : matched) {
        for (int side = 0; side < 2; ++side) {
            Pattern pat;
            (side == 0 ? pat.subject : pat.object) = term;
            for (auto& s : snap.query(pat)) {
                auto& r = hits[s.key()];
                r.statement = s;
                r.match_terms.insert(term);
            }
        }
    }
    std::vector<RankedResult> out;
    for (auto& [key, r] : hits) {
        double best = 0.0;
        for (const auto& t : r.match_terms) best = std::max(best, matched.at(t));
        r.relevance = r.statement.weight * best;
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), ranked_order);
    if (out.size() > limit) out.resize(limit);
    return out;
}

struct Subgraph {
    std::set<TermId> terms;
    std::vector<Statement> statements;  // weight desc, then statement order
};

// Undirected BFS from `center`. Every statement touching a term at distance
// < radius is collected; the `limit` heaviest are kept and the term set is
// the center plus their endpoints.
inline Subgraph neighborhood(const Snapshot& snap, const TermId& center, int radius, std::size_t limit) {
    if (!snap.has_term(center)) throw UnknownTerm(center);
    if (radius < 1 || radius > 2) throw InvalidArgument("radius must be 1 or 2");
    std::set<TermId> frontier{center}, seen{center};
    std::map<StatementKey, Statement> collected;
    for (int depth = 0; depth < radius; ++depth) {
        std::set<TermId> next;
        for (const auto& t : frontier) {
            Pattern as_subject{t, std::nullopt, std::nullopt};
            Pattern as_object{std::nullopt, std::nullopt, t};
            for (const auto* pat : {&as_subject, &as_object})
                for (auto& s : snap.query(*pat)) {
                    for (const auto* end : {&s.subject, &s.object})
                        if (!seen.count(*end)) next.insert(*end);
                    collected.emplace(s.key(), s);
                }
        }
        seen.insert(next.begin(), next.end());
        frontier = std::move(next);
    }
    Subgraph g;
    for (auto& [k, s] : collected) g.statements.push_back(s);
    std::sort(g.statements.begin(), g.statements.end(), [](const Statement& a, const Statement& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return statement_order(a, b);
    });
    if (g.statements.size() > limit) g.statements.resize(limit);
    g.terms.insert(center);
    for (const auto& s : g.statements) {
        g.terms.insert(s.subject);
        g.terms.insert(s.object);
    }
    return g;
}

// Symmetric lookup over derived similarTo statements.
class SimilarityIndex {
public:
    explicit SimilarityIndex(const Snapshot& snap) {
        Pattern p{std::nullopt, vocab::id(vocab::similar_to), std::nullopt};
        for (const auto& s : snap.query(p)) {
            if (snap.source_category(s.provenance) != SourceCategory::derived) continue;
            if (s.subject == s.object) continue;
            auto put = [&](const TermId& a, const TermId& b) {
                auto& slot = neighbors_[a][b];
                if (s.weight > slot.first) slot = {s.weight, s};
            };
            put(s.subject, s.object);
            put(s.object, s.subject);
        }
    }

    double sim(const TermId& a, const TermId& b) const {
        if (a == b) return 1.0;
        auto it = neighbors_.find(a);
        if (it == neighbors_.end()) return 0.0;
        auto jt = it->second.find(b);
        return jt == it->second.end() ? 0.0 : jt->second.first;
    }

    // (neighbor, similarity, supporting statement) in neighbor id order.
    struct Neighbor {
        TermId term;
        double similarity;
        Statement statement;
    };
    std::vector<Neighbor> neighbors(const TermId& a) const {
        std::vector<Neighbor> out;
        auto it = neighbors_.find(a);
        if (it == neighbors_.end()) return out;
        for (const auto& [b, v] : it->second) out.push_back({b, v.first, v.second});
        return out;
    }

private:
    std::map<TermId, std::map<TermId, std::pair<double, Statement>>> neighbors_;
};

// ---------------------------------------------------------------------------
// Hypotheses

struct Atom {
    std::optional<TermId> subject;
    std::optional<TermId> predicate;
    std::optional<TermId> object;
};

struct Hypothesis {
    enum class Op { atom, all_of, any_of };
    Op op = Op::atom;
    Atom atom;
    std::vector<Hypothesis> children;

    static Hypothesis leaf(Atom a) { return {Op::atom, std::move(a), {}}; }
    static Hypothesis conj(std::vector<Hypothesis> c) { return {Op::all_of, {}, std::move(c)}; }
    static Hypothesis disj(std::vector<Hypothesis> c) { return {Op::any_of, {}, std::move(c)}; }
};

inline constexpr int kMaxHypothesisDepth = 8;

inline void validate(const Hypothesis& h, int depth = 1) {
    if (depth > kMaxHypothesisDepth) throw MalformedHypothesis("hypothesis deeper than 8 levels");
    if (h.op == Hypothesis::Op::atom) {
        int bound = h.atom.subject.has_value() + h.atom.predicate.has_value() + h.atom.object.has_value();
        if (bound < 2) throw MalformedHypothesis("atom needs at least two bound positions");
        return;
    }
    if (h.children.size() < 2) throw MalformedHypothesis("and/or needs at least two arguments");
    for (const auto& c : h.children) validate(c, depth + 1);
}

// {"atom":{"s":..,"p":..,"o":..}} or {"op":"and"|"or","args":[..]}. Missing,
// null or "*" positions are wildcards.
inline Hypothesis hypothesis_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw MalformedHypothesis("expression must be an object");
    if (j.contains("atom")) {
        const auto& a = j["atom"];
        if (!a.is_object()) throw MalformedHypothesis("atom must be an object");
        auto slot = [&](const char* key) -> std::optional<TermId> {
            if (!a.contains(key) || a[key].is_null()) return std::nullopt;
            if (!a[key].is_string()) throw MalformedHypothesis(std::string("atom field ") + key + " must be a string");
            auto v = a[key].get<std::string>();
            if (v.empty() || v == "*") return std::nullopt;
            return v;
        };
        return Hypothesis::leaf({slot("s"), slot("p"), slot("o")});
    }
    if (!j.contains("op") || !j["op"].is_string()) throw MalformedHypothesis("expression needs 'atom' or 'op'");
    auto op = j["op"].get<std::string>();
    if (op != "and" && op != "or") throw MalformedHypothesis("op must be 'and' or 'or'");
    if (!j.contains("args") || !j["args"].is_array()) throw MalformedHypothesis("'args' must be an array");
    std::vector<Hypothesis> children;
    for (const auto& c : j["args"]) children.push_back(hypothesis_from_json(c));
    return op == "and" ? Hypothesis::conj(std::move(children)) : Hypothesis::disj(std::move(children));
}

inline nlohmann::json hypothesis_to_json(const Hypothesis& h) {
    if (h.op == Hypothesis::Op::atom) {
        nlohmann::json a = nlohmann::json::object();
        if (h.atom.subject) a["s"] = *h.atom.subject;
        if (h.atom.predicate) a["p"] = *h.atom.predicate;
        if (h.atom.object) a["o"] = *h.atom.object;
        return {{"atom", a}};
    }
    nlohmann::json args = nlohmann::json::array();
    for (const auto& c : h.children) args.push_back(hypothesis_to_json(c));
    return {{"op", h.op == Hypothesis::Op::all_of ? "and" : "or"}, {"args", args}};
}

struct AtomScore {
    double score = 0.0;
    std::vector<Statement> evidence;  // argmax statement(s); empty when unmatched
    bool via_similarity = false;
};

// Direct score: max weight over matching statements (first in statement order
// on ties). With no direct match and both ends bound, falls back to
// max over sim(x, x') * weight with one end replaced by a derived-similar term
// (sim >= theta_sim).
inline AtomScore score_atom(const Snapshot& snap, const SimilarityIndex& sims, const Atom& atom, double theta_sim) {
    auto best_of = [&](const Pattern& p) -> std::optional<Statement> {
        std::optional<Statement> best;
        for (auto& s : snap.query(p))
            if (!best || s.weight > best->weight) best = s;
        return best;
    };
    AtomScore out;
    if (auto s = best_of({atom.subject, atom.predicate, atom.object})) {
        out.score = s->weight;
        out.evidence.push_back(*s);
        return out;
    }
    if (!atom.subject || !atom.object) return out;
    auto consider = [&](const SimilarityIndex::Neighbor& n, const Pattern& p) {
        if (n.similarity < theta_sim) return;
        auto s = best_of(p);
        if (!s) return;
        double v = n.similarity * s->weight;
        if (v > out.score) {
            out.score = v;
            out.evidence = {*s, n.statement};
            out.via_similarity = true;
        }
    };
    for (const auto& n : sims.neighbors(*atom.subject)) consider(n, {n.term, atom.predicate, atom.object});
    for (const auto& n : sims.neighbors(*atom.object)) consider(n, {atom.subject, atom.predicate, n.term});
    return out;
}

struct HypothesisScore {
    double plausibility = 0.0;
    std::vector<RankedResult> evidence;
};

namespace detail {

inline double score_node(const Snapshot& snap, const SimilarityIndex& sims, const Hypothesis& h, double theta_sim,
                         std::vector<RankedResult>& evidence) {
    if (h.op == Hypothesis::Op::atom) {
        auto a = score_atom(snap, sims, h.atom, theta_sim);
        for (const auto& s : a.evidence) {
            std::set<TermId> terms;
            for (const auto* t : {&h.atom.subject, &h.atom.object})
                if (*t) terms.insert(**t);
            evidence.push_back({s, a.score, terms});
        }
        return a.score;
    }
    double acc = h.op == Hypothesis::Op::all_of ? 1.0 : 0.0;
    for (const auto& c : h.children) {
        double v = score_node(snap, sims, c, theta_sim, evidence);
        acc = h.op == Hypothesis::Op::all_of ? acc * v : std::max(acc, v);
    }
    return acc;
}

}  // namespace detail

// AND multiplies child scores, OR takes the max. Evidence lists each atom's
// argmax statements once, first occurrence kept.
inline HypothesisScore score_hypothesis(const Snapshot& snap, const Hypothesis& h, double theta_sim = 0.5) {
    validate(h);
    SimilarityIndex sims(snap);
    std::vector<RankedResult> raw;
    HypothesisScore out;
    out.plausibility = std::clamp(detail::score_node(snap, sims, h, theta_sim, raw), 0.0, 1.0);
    std::set<StatementKey> seen;
    for (auto& r : raw)
        if (seen.insert(r.statement.key()).second) out.evidence.push_back(std::move(r));
    return out;
}

// ---------------------------------------------------------------------------
// Feedback

enum class FeedbackDirection { up, down };

inline double updated_weight(double w, FeedbackDirection d, double alpha) {
    double next = d == FeedbackDirection::up ? w + alpha * (1.0 - w) : w * (1.0 - alpha);
    if (next > 1.0) next = 1.0;
    if (!(next > 0.0)) next = std::numeric_limits<double>::denorm_min();
    return next;
}

struct FeedbackEvent {
    StatementKey key;
    FeedbackDirection direction = FeedbackDirection::up;
    std::string timestamp;
    double weight_after = 0.0;
};

// Serializes feedback writes and keeps the append-only event log. With a
// store directory, events are also appended to feedback.log there.
class FeedbackService {
public:
    FeedbackService(StatementStore& store, double alpha, bool timestamps = true)
        : store_(store), alpha_(alpha), timestamps_(timestamps) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("feedback alpha must be in (0, 1)");
        if (store.directory()) log_.open(*store.directory() / "feedback.log", std::ios::app);
    }

    double apply(const StatementKey& key, FeedbackDirection d) {
        std::lock_guard lock(mu_);
        auto w = store_.snapshot().weight(key);
        if (!w) throw UnknownStatement("no statement (" + key.subject + ", " + key.predicate + ", " + key.object +
                                       ", " + key.provenance + ")");
        double next = updated_weight(*w, d, alpha_);
        store_.assert_statement(key.subject, key.predicate, key.object, key.provenance, next);
        FeedbackEvent ev{key, d, timestamps_ ? now() : std::string(), next};
        if (log_.is_open()) {
            csv::write_row(log_, {ev.timestamp, key.subject, key.predicate, key.object, key.provenance,
                                  d == FeedbackDirection::up ? "up" : "down", exact_weight(next)});
            log_.flush();
        }
        events_.push_back(std::move(ev));
        return next;
    }

    std::vector<FeedbackEvent> events() const {
        std::lock_guard lock(mu_);
        return events_;
    }

    double alpha() const { return alpha_; }

private:
    static std::string now() {
        auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    StatementStore& store_;
    double alpha_;
    bool timestamps_;
    mutable std::mutex mu_;
    std::vector<FeedbackEvent> events_;
    std::ofstream log_;
};

// ---------------------------------------------------------------------------
// Generalized precision / recall

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

struct TripleKey {
    TermId subject, predicate, object;
    auto operator<=>(const TripleKey&) const = default;
};

// Credit of matching x against y: 1 for identical triples; for the same
// predicate with each end identical or derived-similar at >= theta_match,
// the smaller end similarity. theta_match = 1 admits identical ends only.
inline double match_credit(const TripleKey& x, const TripleKey& y, const SimilarityIndex& sims, double theta_match) {
    if (x.predicate != y.predicate) return 0.0;
    auto end_sim = [&](const TermId& a, const TermId& b) -> double {
        if (a == b) return 1.0;
        if (theta_match >= 1.0) return 0.0;
        double s = sims.sim(a, b);
        return s >= theta_match ? s : 0.0;
    };
    return std::min(end_sim(x.subject, y.subject), end_sim(x.object, y.object));
}

inline PrecisionRecall evaluate_against_gold(const std::vector<Statement>& system, const std::vector<Statement>& gold,
                                             const SimilarityIndex& sims, double theta_match) {
    if (!(theta_match > 0.0 && theta_match <= 1.0)) throw InvalidArgument("theta_match must be in (0, 1]");
    std::set<TripleKey> sys, ref;
    for (const auto& s : system) sys.insert({s.subject, s.predicate, s.object});
    for (const auto& s : gold) ref.insert({s.subject, s.predicate, s.object});
    if (sys.empty() || ref.empty()) throw EmptySets();
    auto credit_sum = [&](const std::set<TripleKey>& from, const std::set<TripleKey>& to) {
        double total = 0.0;
        for (const auto& x : from) {
            double best = 0.0;
            for (const auto& y : to) best = std::max(best, match_credit(x, y, sims, theta_match));
            total += best;
        }
        return total;
    };
    return {credit_sum(sys, ref) / static_cast<double>(sys.size()),
            credit_sum(ref, sys) / static_cast<double>(ref.size())};
}

}  // namespace lhc
