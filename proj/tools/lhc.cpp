// lhc: command-line driver for ingestion, analysis, querying and the HTTP
// service.
//
// Exit codes: 0 success, 2 I/O, 3 format, 4 precondition, 5 internal.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lhc/analysis.hpp"
#include "lhc/config.hpp"
#include "lhc/ingestion.hpp"
#include "lhc/query.hpp"
#include "lhc/service.hpp"
#include "lhc/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kIo = 2, kFormat = 3, kPrecondition = 4, kInternal = 5 };

struct Options {
    std::string config_file;
    std::map<std::string, std::string> flags;  // config key -> raw value
    bool no_timestamps = false;

    std::string ingest_kind;
    std::string ingest_path;
    std::string dictionary;
    std::string lexicon;
    std::string provenance;

    std::string report;
    std::string text;
    std::size_t limit = 10;
    std::string expr;
    std::string system_path;
    std::string gold_path;
    std::string host = "127.0.0.1";
};

lhc::RunConfig resolve(const Options& opt) {
    lhc::RunConfig cfg;
    if (!opt.config_file.empty()) cfg.load_file(opt.config_file);
    cfg.load_env();
    for (const auto& [k, v] : opt.flags) cfg.set(k, v);
    cfg.validate();
    return cfg;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in || fs::is_directory(path)) throw lhc::IoError("cannot read " + path);
    return in;
}

std::vector<lhc::Statement> read_statements(const std::string& path) {
    auto in = open_input(path);
    lhc::StatementStore scratch;
    scratch.import_statement_csv(in);
    return scratch.snapshot().statements();
}

int cmd_ingest(const Options& opt, const lhc::RunConfig& cfg) {
    auto store = lhc::StatementStore::open(cfg.store_path);
    if (!opt.dictionary.empty()) {
        auto in = open_input(opt.dictionary);
        store->import_terms(in);
    }
    auto name = fs::path(opt.ingest_path).filename().string();
    if (opt.ingest_kind == "clinical") {
        auto in = open_input(opt.ingest_path);
        auto rows = lhc::read_clinical_csv(in);
        auto prov = opt.provenance.empty() ? "clinical:" + name : opt.provenance;
        auto r = lhc::ingest_clinical(*store, rows, prov);
        store->checkpoint();
        std::cout << r.statements << " statements from " << r.observations.size() << " observations\n";
        std::cout << r.errors.size() << " errors collected\n";
        for (const auto& e : r.errors) std::cerr << "row " << e.row << ": " << e.reason << "\n";
    } else if (opt.ingest_kind == "corpus") {
        if (!fs::is_directory(opt.ingest_path)) throw lhc::IoError("corpus directory not readable: " + opt.ingest_path);
        auto docs = lhc::read_corpus_dir(opt.ingest_path);
        lhc::VerbLexicon lexicon;
        if (!opt.lexicon.empty()) {
            auto in = open_input(opt.lexicon);
            lexicon = lhc::read_verb_lexicon(in, *store);
        }
        auto prov = opt.provenance.empty() ? "corpus:" + fs::path(opt.ingest_path).filename().string() : opt.provenance;
        auto r = lhc::ingest_corpus(*store, docs, prov, cfg.window, lexicon);
        store->checkpoint();
        std::cout << r.related + r.labelled << " statements (" << r.related << " relatedTo, " << r.labelled
                  << " labelled) from " << docs.size() << " documents\n";
        std::cout << "0 errors collected\n";
    } else if (opt.ingest_kind == "linked") {
        auto in = open_input(opt.ingest_path);
        auto prov = opt.provenance.empty() ? name : opt.provenance;
        auto n = lhc::import_linked_data(*store, in, prov);
        store->checkpoint();
        std::cout << n << " statements\n";
        std::cout << "0 errors collected\n";
    } else {
        throw lhc::InvalidArgument("unknown ingest kind " + opt.ingest_kind);
    }
    return kOk;
}

int cmd_analyze(const Options& opt, const lhc::RunConfig& cfg) {
    auto store = lhc::StatementStore::open(cfg.store_path);
    auto results = lhc::analyze(store->snapshot(), cfg.analysis());
    auto counts = lhc::materialize(*store, results);
    store->checkpoint();
    auto report = lhc::report_json(results, counts, lhc::AnalysisConfig{}.top_pairs);
    auto path = opt.report.empty() ? (fs::path(cfg.store_path) / "report.json").string() : opt.report;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw lhc::IoError("cannot write report " + path);
    out << report.dump(2) << "\n";
    std::cout << "report: " << path << "\n";
    std::cout << "similarity: " << counts.similarity << "\n";
    std::cout << "cluster: " << counts.membership << "\n";
    std::cout << "taxonomy: " << counts.taxonomy << "\n";
    std::cout << "rule: " << counts.rule << "\n";
    return kOk;
}

int cmd_query(const Options& opt, const lhc::RunConfig& cfg) {
    auto store = lhc::StatementStore::open(cfg.store_path);
    json out = json::array();
    for (const auto& r : lhc::search(store->snapshot(), opt.text, opt.limit)) out.push_back(lhc::to_json(r));
    std::cout << out.dump(2) << "\n";
    return kOk;
}

int cmd_hypothesis(const Options& opt, const lhc::RunConfig& cfg) {
    auto store = lhc::StatementStore::open(cfg.store_path);
    auto j = json::parse(opt.expr);
    auto h = lhc::hypothesis_from_json(j.contains("expr") ? j["expr"] : j);
    auto score = lhc::score_hypothesis(store->snapshot(), h, cfg.theta_sim);
    json ev = json::array();
    for (const auto& r : score.evidence) ev.push_back(lhc::to_json(r));
    std::cout << json{{"plausibility", score.plausibility}, {"evidence", ev}}.dump(2) << "\n";
    return kOk;
}

int cmd_evaluate(const Options& opt, const lhc::RunConfig& cfg) {
    auto store = lhc::StatementStore::open(cfg.store_path);
    auto snap = store->snapshot();
    auto pr = lhc::evaluate_against_gold(read_statements(opt.system_path), read_statements(opt.gold_path),
                                         lhc::SimilarityIndex(snap), cfg.theta_match);
    std::cout << json{{"precision", pr.precision}, {"recall", pr.recall}}.dump(2) << "\n";
    return kOk;
}

lhc::HttpServer* g_server = nullptr;

int cmd_serve(const Options& opt, const lhc::RunConfig& cfg) {
    std::unique_ptr<lhc::StatementStore> store;
    try {
        store = lhc::StatementStore::open(cfg.store_path);
    } catch (const lhc::Error& e) {
        throw lhc::IoError(std::string("store unavailable: ") + e.what());
    }
    lhc::Service service(*store, {cfg.theta_sim, cfg.alpha, !opt.no_timestamps});
    lhc::HttpServer server(service);
    int port = server.bind(opt.host, cfg.port);
    std::cout << "listening on port " << port << std::endl;
    g_server = &server;
    std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
    std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
    server.listen();
    g_server = nullptr;
    store->checkpoint();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lhc - weighted statement store, analysis and query service"};
    app.require_subcommand(1);
    Options opt;

    auto add_config_flag = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(flag, [&opt, key](const std::string& v) { opt.flags[key] = v; }, help);
    };
    auto add_common = [&](CLI::App* sub) {
        add_config_flag(sub, "--store", "store", "store directory (env LHC_STORE)");
        sub->add_option("--config", opt.config_file, "key=value config file");
        sub->add_flag("--no-timestamps", opt.no_timestamps, "omit timestamps from logs");
        add_config_flag(sub, "--theta-sim", "theta_sim", "similarity threshold for clustering and fallback");
        add_config_flag(sub, "--tau-tax", "tau_tax", "taxonomy inclusion threshold");
        add_config_flag(sub, "--theta-emit", "theta_emit", "similarity threshold for similarTo statements");
        add_config_flag(sub, "--minsup", "minsup", "rule minimum support");
        add_config_flag(sub, "--minconf", "minconf", "rule minimum confidence");
        add_config_flag(sub, "--theta-match", "theta_match", "soft-match threshold for evaluation");
        add_config_flag(sub, "--alpha", "alpha", "feedback step size");
        add_config_flag(sub, "--window", "window", "co-occurrence window in sentences");
        add_config_flag(sub, "--rank", "rank", "decomposition rank");
        add_config_flag(sub, "--port", "port", "service port (0 = any free port)");
    };

    auto* ingest = app.add_subcommand("ingest", "ingest clinical records, a corpus directory or linked data");
    add_common(ingest);
    ingest->add_option("kind", opt.ingest_kind, "clinical | corpus | linked")
        ->required()
        ->check(CLI::IsMember({"clinical", "corpus", "linked"}));
    ingest->add_option("path", opt.ingest_path, "input file or directory")->required();
    ingest->add_option("--dictionary", opt.dictionary, "term table CSV id,label,synonyms to load first");
    ingest->add_option("--lexicon", opt.lexicon, "verb lexicon CSV verb,predicate_label");
    ingest->add_option("--provenance", opt.provenance, "source id for the ingested statements");

    auto* analyze = app.add_subcommand("analyze", "derive similarity, concepts, taxonomy and rules");
    add_common(analyze);
    analyze->add_option("--report", opt.report, "report path (default STORE/report.json)");

    auto* query = app.add_subcommand("query", "free-text search");
    add_common(query);
    query->add_option("text", opt.text, "query text")->required();
    query->add_option("--limit", opt.limit, "maximum number of results")->check(CLI::PositiveNumber);

    auto* hypothesis = app.add_subcommand("hypothesis", "score a hypothesis expression");
    add_common(hypothesis);
    hypothesis->add_option("expr", opt.expr, "JSON expression")->required();

    auto* evaluate = app.add_subcommand("evaluate", "generalized precision/recall against a gold set");
    add_common(evaluate);
    evaluate->add_option("--system", opt.system_path, "system statements (statement CSV)")->required();
    evaluate->add_option("--gold", opt.gold_path, "gold statements (statement CSV)")->required();

    auto* serve = app.add_subcommand("serve", "run the HTTP/JSON service");
    add_common(serve);
    serve->add_option("--host", opt.host, "bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kPrecondition;
    }

    try {
        auto cfg = resolve(opt);
        if (*ingest) return cmd_ingest(opt, cfg);
        if (*analyze) return cmd_analyze(opt, cfg);
        if (*query) return cmd_query(opt, cfg);
        if (*hypothesis) return cmd_hypothesis(opt, cfg);
        if (*evaluate) return cmd_evaluate(opt, cfg);
        if (*serve) return cmd_serve(opt, cfg);
    } catch (const lhc::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const lhc::ParseError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kFormat;
    } catch (const json::parse_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kFormat;
    } catch (const lhc::EmptySnapshot& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return kPrecondition;
    } catch (const lhc::Error& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return kPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
