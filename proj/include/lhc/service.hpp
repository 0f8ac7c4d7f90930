#pragma once
// HTTP/JSON front end. Every response is an envelope
//   {"ok": bool, "data": ..., "error": null | {"code": ..., "message": ...}}
// Requests are routed through Service::handle so the API can be exercised
// without sockets; serve() binds the same dispatcher to cpp-httplib.

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lhc/analysis.hpp"
#include "lhc/error.hpp"
#include "lhc/query.hpp"
#include "lhc/store.hpp"

namespace lhc {

using nlohmann::json;

inline json to_json(const Statement& s) {
    return {{"s", s.subject}, {"p", s.predicate}, {"o", s.object}, {"prov", s.provenance}, {"weight", s.weight}};
}

inline json to_json(const RankedResult& r) {
    return {{"statement", to_json(r.statement)}, {"relevance", r.relevance}, {"match_terms", r.match_terms}};
}

inline json to_json(const Term& t) {
    return {{"id", t.id}, {"label", t.label}, {"synonyms", t.synonyms}, {"kind", std::string(to_string(t.kind))}};
}

inline json to_json(const Snapshot& snap, const Subgraph& g) {
    json terms = json::array();
    for (const auto& id : g.terms) terms.push_back(to_json(snap.term(id)));
    json stmts = json::array();
    for (const auto& s : g.statements) {
        auto j = to_json(s);
        j["derived"] = snap.source_category(s.provenance) == SourceCategory::derived;
        stmts.push_back(j);
    }
    return {{"terms", terms}, {"statements", stmts}};
}

inline std::vector<Statement> statements_from_json(const json& arr) {
    if (!arr.is_array()) throw InvalidArgument("expected an array of statements");
    std::vector<Statement> out;
    for (const auto& j : arr) {
        if (!j.is_object() || !j.contains("s") || !j.contains("p") || !j.contains("o"))
            throw InvalidArgument("statement needs s, p and o");
        out.push_back({j["s"].get<std::string>(), j["p"].get<std::string>(), j["o"].get<std::string>(),
                       j.value("prov", std::string()), j.value("weight", 1.0)});
    }
    return out;
}

struct ServiceConfig {
    double theta_sim = 0.5;
    double alpha = 0.1;
    bool timestamps = true;
};

struct Response {
    int status = 200;
    json body;
};

class Service {
public:
    Service(StatementStore& store, ServiceConfig cfg)
        : store_(store), cfg_(cfg), feedback_(store, cfg.alpha, cfg.timestamps) {}

    using Params = std::multimap<std::string, std::string>;

    Response handle(const std::string& method, const std::string& path, const Params& params,
                    const std::string& body) const {
        try {
            return {200, envelope(route(method, path, params, body))};
        } catch (const NoMatch& e) {
            return fail(404, "NoMatch", e.what());
        } catch (const UnknownTerm& e) {
            return fail(404, "UnknownTerm", e.what());
        } catch (const UnknownStatement& e) {
            return fail(404, "UnknownStatement", e.what());
        } catch (const MalformedHypothesis& e) {
            return fail(400, "MalformedHypothesis", e.what());
        } catch (const EmptySets& e) {
            return fail(400, "EmptySets", e.what());
        } catch (const NotFound& e) {
            return fail(404, "NotFound", e.what());
        } catch (const json::exception& e) {
            return fail(400, "BadRequest", e.what());
        } catch (const InvalidArgument& e) {
            return fail(400, "BadRequest", e.what());
        } catch (const std::exception& e) {
            return fail(500, "Internal", e.what());
        }
    }

    const FeedbackService& feedback() const { return feedback_; }

private:
    struct NotFound : Error {
        using Error::Error;
    };

    static json envelope(json data) { return {{"ok", true}, {"data", std::move(data)}, {"error", nullptr}}; }

    static Response fail(int status, const std::string& code, const std::string& message) {
        return {status, {{"ok", false}, {"data", nullptr}, {"error", {{"code", code}, {"message", message}}}}};
    }

    static std::optional<std::string> param(const Params& p, const std::string& key) {
        auto it = p.find(key);
        if (it == p.end()) return std::nullopt;
        return it->second;
    }

    static std::size_t positive(const Params& p, const std::string& key, std::size_t fallback) {
        auto v = param(p, key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            long n = std::stol(*v, &used);
            if (used != v->size() || n <= 0) throw InvalidArgument(key + " must be a positive integer");
            return static_cast<std::size_t>(n);
        } catch (const std::logic_error&) {
            throw InvalidArgument(key + " must be a positive integer");
        }
    }

    json route(const std::string& method, const std::string& path, const Params& params,
               const std::string& body) const {
        auto snap = store_.snapshot();
        if (method == "GET") {
            if (path == "/health") return {{"statements", snap.size()}, {"terms", snap.terms().size()}};
            if (path == "/search") {
                auto q = param(params, "q");
                if (!q) throw InvalidArgument("missing q");
                json out = json::array();
                for (const auto& r : search(snap, *q, positive(params, "limit", 10))) out.push_back(to_json(r));
                return out;
            }
            if (path == "/concepts") return concepts(snap);
            if (path == "/taxonomy") return listing(snap, vocab::sub_cluster_of);
            if (path == "/rules") return rules(snap);
            const std::string prefix = "/term/";
            const std::string suffix = "/neighborhood";
            if (path.rfind(prefix, 0) == 0) {
                auto rest = path.substr(prefix.size());
                if (rest.size() > suffix.size() && rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) == 0) {
                    auto id = rest.substr(0, rest.size() - suffix.size());
                    auto radius = positive(params, "radius", 1);
                    if (radius > 2) throw InvalidArgument("radius must be 1 or 2");
                    return to_json(snap, neighborhood(snap, id, static_cast<int>(radius), positive(params, "limit", 50)));
                }
                const auto& term = snap.term(rest);
                json j = to_json(term);
                json stmts = json::array();
                for (const auto& s : snap.query({rest, std::nullopt, std::nullopt})) stmts.push_back(to_json(s));
                for (const auto& s : snap.query({std::nullopt, std::nullopt, rest}))
                    if (s.subject != rest) stmts.push_back(to_json(s));
                j["statements"] = stmts;
                return j;
            }
        } else if (method == "POST") {
            auto req = body.empty() ? json::object() : json::parse(body);
            if (path == "/hypothesis") {
                if (!req.contains("expr")) throw MalformedHypothesis("body needs 'expr'");
                auto h = hypothesis_from_json(req["expr"]);
                auto score = score_hypothesis(snap, h, req.value("theta_sim", cfg_.theta_sim));
                json ev = json::array();
                for (const auto& r : score.evidence) ev.push_back(to_json(r));
                return {{"plausibility", score.plausibility}, {"evidence", ev}};
            }
            if (path == "/feedback") {
                auto dir = req.at("direction").get<std::string>();
                if (dir != "up" && dir != "down") throw InvalidArgument("direction must be 'up' or 'down'");
                StatementKey key{req.at("s").get<std::string>(), req.at("p").get<std::string>(),
                                 req.at("o").get<std::string>(), req.at("prov").get<std::string>()};
                double w = feedback_.apply(key, dir == "up" ? FeedbackDirection::up : FeedbackDirection::down);
                return {{"weight", w}};
            }
            if (path == "/evaluate") {
                auto theta = req.value("theta_match", 1.0);
                auto pr = evaluate_against_gold(statements_from_json(req.at("system")),
                                                statements_from_json(req.at("gold")), SimilarityIndex(snap), theta);
                return {{"precision", pr.precision}, {"recall", pr.recall}};
            }
        }
        throw NotFound("no route for " + method + " " + path);
    }

    static json listing(const Snapshot& snap, const char* predicate) {
        json out = json::array();
        for (const auto& s : snap.query({std::nullopt, vocab::id(predicate), std::nullopt}))
            if (snap.source_category(s.provenance) == SourceCategory::derived) out.push_back(to_json(s));
        return out;
    }

    static json concepts(const Snapshot& snap) {
        std::map<TermId, std::vector<TermId>> members;
        for (const auto& s : snap.query({std::nullopt, vocab::id(vocab::member_of), std::nullopt}))
            if (snap.source_category(s.provenance) == SourceCategory::derived) members[s.object].push_back(s.subject);
        json out = json::array();
        for (const auto& [c, m] : members) out.push_back({{"id", c}, {"members", m}});
        return out;
    }

    static json rules(const Snapshot& snap) {
        std::map<TermId, json> hubs;
        auto collect = [&](const char* pred, const char* field) {
            for (const auto& s : snap.query({std::nullopt, vocab::id(pred), std::nullopt})) {
                if (snap.source_category(s.provenance) != SourceCategory::derived) continue;
                auto& h = hubs[s.subject];
                h["id"] = s.subject;
                if (std::string(field) == "confidence") h[field] = snap.term(s.object).label;
                else h[field].push_back(snap.term(s.object).label);
            }
        };
        collect(vocab::has_antecedent_feature, "antecedent");
        collect(vocab::has_consequent_feature, "consequent");
        collect(vocab::has_confidence, "confidence");
        json out = json::array();
        for (auto& [id, h] : hubs) out.push_back(std::move(h));
        return out;
    }

    StatementStore& store_;
    ServiceConfig cfg_;
    mutable FeedbackService feedback_;
};

// Binds `service` to host:port (port 0 picks a free one). Returns the bound
// port, or throws when binding fails.
class HttpServer {
public:
    explicit HttpServer(const Service& service) : service_(service) {
        auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
            Service::Params params(req.params.begin(), req.params.end());
            auto r = service_.handle(req.method, req.path, params, req.body);
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json; charset=utf-8");
        };
        server_.Get(R"(/.*)", dispatch);
        server_.Post(R"(/.*)", dispatch);
    }

    int bind(const std::string& host, int port) {
        int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
        return bound;
    }

    // Blocks until stop() is called.
    void listen() { server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    bool running() const { return server_.is_running(); }
    void wait_until_ready() { server_.wait_until_ready(); }

private:
    const Service& service_;
    httplib::Server server_;
};

}  // namespace lhc
