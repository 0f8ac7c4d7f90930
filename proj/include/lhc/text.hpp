#pragma once
// Text helpers used by ingestion and search: normalization, character
// trigrams, sentence splitting, tokenization and dictionary matching.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lhc::text {

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = ascii_lower(c);
    return out;
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Bytes >= 0x80 count as word characters so UTF-8 letters stay inside words.
inline bool is_word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_ascii_punct(char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && !is_word_char(c) && !is_space(c) && u > 0x20 && u != 0x7f;
}

// Lowercase, strip punctuation, trim, collapse internal whitespace.
inline std::string normalize(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (is_ascii_punct(c)) continue;
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ascii_lower(c));
    }
    return out;
}

inline std::map<std::string, std::size_t> trigrams(std::string_view s) {
    std::map<std::string, std::size_t> out;
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) ++out[std::string(s.substr(i, 3))];
    return out;
}

// Multiset Jaccard: sum of min counts over sum of max counts. Strings with no
// trigrams on both sides score 0.
inline double trigram_jaccard(std::string_view a, std::string_view b) {
    auto ta = trigrams(a), tb = trigrams(b);
    std::size_t inter = 0, uni = 0;
    auto ia = ta.begin(), ib = tb.begin();
    while (ia != ta.end() || ib != tb.end()) {
        if (ib == tb.end() || (ia != ta.end() && ia->first < ib->first)) {
            uni += ia->second;
            ++ia;
        } else if (ia == ta.end() || ib->first < ia->first) {
            uni += ib->second;
            ++ib;
        } else {
            inter += std::min(ia->second, ib->second);
            uni += std::max(ia->second, ib->second);
            ++ia, ++ib;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Splits on '.', '!' or '?' followed by whitespace (or end of text). Sentences
// are trimmed; empty ones are dropped.
inline std::vector<std::string> split_sentences(std::string_view doc) {
    std::vector<std::string> out;
    auto flush = [&](std::size_t begin, std::size_t end) {
        while (begin < end && is_space(doc[begin])) ++begin;
        while (end > begin && is_space(doc[end - 1])) --end;
        if (end > begin) out.emplace_back(doc.substr(begin, end - begin));
    };
    std::size_t start = 0;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        char c = doc[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == doc.size() || is_space(doc[i + 1]))) {
            flush(start, i + 1);
            start = i + 1;
        }
    }
    flush(start, doc.size());
    return out;
}

struct Token {
    std::string text;  // lowercased
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Maximal runs of word characters.
inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_word_char(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_word_char(s[j])) ++j;
        out.push_back({to_lower(s.substr(i, j - i)), i, j});
        i = j;
    }
    return out;
}

struct Mention {
    std::string term;
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Case-insensitive, whole-word, longest-match-first matcher over a set of
// surface strings (labels and synonyms). Matches do not overlap.
class DictionaryMatcher {
public:
    // Adds a surface form. When two terms share a surface, the smaller id wins.
    void add(std::string_view surface, const std::string& term) {
        if (surface.empty()) return;
        auto key = to_lower(surface);
        auto [it, inserted] = surfaces_.emplace(key, term);
        if (!inserted && term < it->second) it->second = term;
        lengths_.insert(key.size());
    }

    bool empty() const { return surfaces_.empty(); }

    std::vector<Mention> match(std::string_view sentence) const {
        std::vector<Mention> out;
        auto lower = to_lower(sentence);
        std::size_t i = 0;
        while (i < lower.size()) {
            bool at_boundary = i == 0 || !is_word_char(lower[i - 1]);
            bool matched = false;
            if (at_boundary) {
                for (auto len : lengths_) {
                    if (i + len > lower.size()) continue;
                    if (i + len < lower.size() && is_word_char(lower[i + len]) &&
                        is_word_char(lower[i + len - 1]))
                        continue;
                    auto it = surfaces_.find(lower.substr(i, len));
                    if (it == surfaces_.end()) continue;
                    out.push_back({it->second, i, i + len});
                    i += len;
                    matched = true;
                    break;
                }
            }
            if (!matched) ++i;
        }
        return out;
    }

private:
    std::unordered_map<std::string, std::string> surfaces_;
    std::set<std::size_t, std::greater<>> lengths_;
};

}  // namespace lhc::text
