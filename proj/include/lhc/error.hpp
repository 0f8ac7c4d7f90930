#pragma once
// Error types shared by all lhc modules. Every failure the library reports is
// an lhc::Error; callers that need to branch on the cause catch the subclass.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lhc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownTerm : public Error {
public:
    explicit UnknownTerm(const std::string& id)
        : Error("unknown term: " + id), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class InvalidWeight : public Error {
public:
    explicit InvalidWeight(double w)
        : Error("weight outside (0, 1]: " + std::to_string(w)), weight_(w) {}
    double weight() const noexcept { return weight_; }

private:
    double weight_;
};

class EmptyLabel : public Error {
public:
    EmptyLabel() : Error("term label is empty") {}
};

class UnknownSource : public Error {
public:
    explicit UnknownSource(const std::string& id) : Error("unknown source: " + id) {}
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class EmptySnapshot : public Error {
public:
    EmptySnapshot() : Error("snapshot holds no analysable statements") {}
};

class RankTooLarge : public Error {
public:
    RankTooLarge(std::size_t k, std::size_t limit)
        : Error("rank " + std::to_string(k) + " exceeds min dimension " + std::to_string(limit)) {}
};

class NoMatch : public Error {
public:
    explicit NoMatch(const std::string& query) : Error("no term matches query: " + query) {}
};

class UnknownStatement : public Error {
public:
    using Error::Error;
};

class MalformedHypothesis : public Error {
public:
    using Error::Error;
};

class EmptySets : public Error {
public:
    EmptySets() : Error("system and gold statement sets must both be non-empty") {}
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace lhc
