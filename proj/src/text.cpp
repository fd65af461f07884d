#include "mmgraph/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>

namespace mmgraph {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i]))
            ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i]))
            ++i;
        if (i > start)
            out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::string> alnum_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (is_alnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space)
                out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

std::string trim_punct(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && !is_alnum(s[b]) && !is_space(s[b]))
        ++b;
    while (e > b && !is_alnum(s[e - 1]) && !is_space(s[e - 1]))
        --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_text(std::string_view surface) {
    auto tokens = tokenize(lowercase(surface));
    std::string out;
    for (auto& tok : tokens) {
        std::string t = trim_punct(tok);
        if (t.empty())
            continue;
        if (!out.empty())
            out.push_back(' ');
        out += t;
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t start = 0;
    std::size_t i = 0;
    auto is_terminal = [](char c) { return c == '.' || c == '!' || c == '?'; };
    while (i < text.size()) {
        if (is_terminal(text[i])) {
            while (i + 1 < text.size() && is_terminal(text[i + 1]))
                ++i;
            if (i + 1 >= text.size() || is_space(text[i + 1])) {
                std::size_t end = i + 1;
                // Trim off surrounding whitespace.
                std::size_t b = start;
                while (b < end && is_space(text[b]))
                    ++b;
                if (b < end)
                    out.emplace_back(b, end);
                start = end;
            }
        }
        ++i;
    }
    std::size_t b = start;
    while (b < text.size() && is_space(text[b]))
        ++b;
    std::size_t e = text.size();
    while (e > b && is_space(text[e - 1]))
        --e;
    if (b < e)
        out.emplace_back(b, e);
    return out;
}

uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string content_hash(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

double token_f1(std::string_view a, std::string_view b) {
    auto bag = [](std::string_view s) {
        std::map<std::string, int> counts;
        for (auto& tok : tokenize(lowercase(s))) {
            std::string t = trim_punct(tok);
            if (!t.empty())
                counts[t]++;
        }
        return counts;
    };
    auto ca = bag(a);
    auto cb = bag(b);
    std::size_t na = 0, nb = 0, overlap = 0;
    for (auto& [t, n] : ca)
        na += static_cast<std::size_t>(n);
    for (auto& [t, n] : cb)
        nb += static_cast<std::size_t>(n);
    for (auto& [t, n] : ca) {
        auto it = cb.find(t);
        if (it != cb.end())
            overlap += static_cast<std::size_t>(std::min(n, it->second));
    }
    if (na + nb == 0)
        return 0.0;
    return 2.0 * static_cast<double>(overlap) / static_cast<double>(na + nb);
}

std::string format_score(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

} // namespace mmgraph
