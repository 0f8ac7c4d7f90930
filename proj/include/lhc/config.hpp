#pragma once
// Run configuration. Precedence: command-line flags > environment variables
// (LHC_<KEY>) > config file (flat key=value lines, '#' comments) > defaults.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "lhc/analysis.hpp"
#include "lhc/error.hpp"

namespace lhc {

struct RunConfig {
    std::string store_path = "lhc-store";
    double theta_sim = 0.5;
    double tau_tax = 0.75;
    double theta_emit = 0.5;
    double minsup = 0.2;
    double minconf = 0.7;
    double theta_match = 1.0;
    double alpha = 0.1;
    std::size_t window = 1;
    std::size_t rank = 3;
    int port = 8080;

    AnalysisConfig analysis() const {
        AnalysisConfig a;
        a.theta_sim = theta_sim;
        a.tau_tax = tau_tax;
        a.theta_emit = theta_emit;
        a.minsup = minsup;
        a.minconf = minconf;
        a.rank = rank;
        return a;
    }

    // Sets one key from its textual value. Unknown keys and unparseable values
    // throw InvalidArgument.
    void set(const std::string& key, const std::string& value) {
        auto real = [&](double& slot) {
            try {
                std::size_t used = 0;
                slot = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
            } catch (const std::logic_error&) {
                throw InvalidArgument("invalid value for " + key + ": '" + value + "'");
            }
        };
        auto integer = [&](auto& slot) {
            try {
                std::size_t used = 0;
                long v = std::stol(value, &used);
                if (used != value.size() || v < 0) throw std::invalid_argument(value);
                slot = static_cast<std::remove_reference_t<decltype(slot)>>(v);
            } catch (const std::logic_error&) {
                throw InvalidArgument("invalid value for " + key + ": '" + value + "'");
            }
        };
        if (key == "store") store_path = value;
        else if (key == "theta_sim") real(theta_sim);
        else if (key == "tau_tax") real(tau_tax);
        else if (key == "theta_emit") real(theta_emit);
        else if (key == "minsup") real(minsup);
        else if (key == "minconf") real(minconf);
        else if (key == "theta_match") real(theta_match);
        else if (key == "alpha") real(alpha);
        else if (key == "window") integer(window);
        else if (key == "rank") integer(rank);
        else if (key == "port") integer(port);
        else throw InvalidArgument("unknown config key '" + key + "'");
    }

    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k = {"store",       "theta_sim", "tau_tax", "theta_emit",
                                                   "minsup",      "minconf",   "theta_match", "alpha",
                                                   "window",      "rank",      "port"};
        return k;
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read config file " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) throw ParseError(lineno, 1, "expected key=value");
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    // Reads LHC_STORE, LHC_THETA_SIM, ... through `getenv`.
    void load_env(const std::function<const char*(const char*)>& getenv = [](const char* k) { return std::getenv(k); }) {
        for (const auto& k : keys()) {
            std::string name = "LHC_";
            for (char c : k) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            if (const char* v = getenv(name.c_str())) set(k, v);
        }
    }

    void validate() const {
        auto unit = [](double v, const char* name, bool closed_low = false) {
            bool ok = closed_low ? (v >= 0.0 && v <= 1.0) : (v > 0.0 && v <= 1.0);
            if (!ok) throw InvalidArgument(std::string(name) + " must be in (0, 1]");
        };
        unit(theta_sim, "theta_sim");
        unit(tau_tax, "tau_tax");
        unit(theta_emit, "theta_emit");
        unit(minsup, "minsup");
        unit(minconf, "minconf");
        unit(theta_match, "theta_match");
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
        if (window < 1) throw InvalidArgument("window must be >= 1");
        if (rank < 1) throw InvalidArgument("rank must be >= 1");
        if (port < 0 || port > 65535) throw InvalidArgument("port out of range");
        if (store_path.empty()) throw InvalidArgument("store path is empty");
    }
};

}  // namespace lhc
