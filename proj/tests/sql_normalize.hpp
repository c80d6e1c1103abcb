#pragma once

// Canonical form used to compare generated SQL with hand-written listings:
// comments dropped, FROM aliases replaced by their table names, output column
// aliases dropped, parentheses and semicolons removed, whitespace collapsed.

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sqlnorm {

inline std::vector<std::string> tokenize(const std::string& sql) {
    std::vector<std::string> toks;
    std::size_t i = 0;
    while (i < sql.size()) {
        char c = sql[i];
        if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
            while (i < sql.size() && sql[i] != '\n') ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_')) ++j;
            toks.push_back(sql.substr(i, j - i));
            i = j;
        } else if (c == '\'') {
            std::size_t j = sql.find('\'', i + 1);
            toks.push_back(sql.substr(i, j - i + 1));
            i = j + 1;
        } else if ((c == '<' || c == '>' || c == '!') && i + 1 < sql.size() && (sql[i + 1] == '=' || sql[i + 1] == '>')) {
            toks.push_back(sql.substr(i, 2));
            i += 2;
        } else {
            toks.push_back(std::string(1, c));
            ++i;
        }
    }
    return toks;
}

inline std::string upper(std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

inline bool is_ident(const std::string& t) {
    return !t.empty() && (std::isalpha(static_cast<unsigned char>(t[0])) || t[0] == '_');
}

inline const std::set<std::string>& keywords() {
    static const std::set<std::string> k = {"WITH", "RECURSIVE", "AS",  "SELECT", "FROM", "WHERE", "GROUP",
                                            "BY",   "UNION",     "ALL", "AND",    "OR",   "NOT",   "COUNT",
                                            "MIN",  "MAX",       "SUM", "AVG",    "LIKE", "DISTINCT"};
    return k;
}

inline std::string normalize(const std::string& sql, bool keepQualifiers = false) {
    std::vector<std::string> toks = tokenize(sql);
    for (auto& t : toks)
        if (keywords().count(upper(t))) t = upper(t);

    // FROM items of the form `table [AS] alias`.
    std::map<std::string, std::string> alias;
    std::vector<bool> drop(toks.size(), false);
    bool inFrom = false;
    bool expectItem = false;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::string& t = toks[i];
        if (t == "FROM") {
            inFrom = expectItem = true;
            continue;
        }
        if (!inFrom) continue;
        if (t == ",") {
            expectItem = true;
            continue;
        }
        if (t == "WHERE" || t == "GROUP" || t == "UNION" || t == "SELECT" || t == ")" || t == ";" || t == "(") {
            inFrom = expectItem = false;
            continue;
        }
        if (expectItem && is_ident(t) && !keywords().count(t)) {
            std::size_t a = i + 1;
            if (a < toks.size() && toks[a] == "AS") {
                drop[a] = true;
                ++a;
            }
            if (a < toks.size() && is_ident(toks[a]) && !keywords().count(toks[a])) {
                alias[toks[a]] = t;
                drop[a] = true;
                i = a;
            }
            expectItem = false;
        }
    }

    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (drop[i]) continue;
        std::string t = toks[i];
        if (t == "(" || t == ")" || t == ";") continue;
        if (t == "AS" && i + 1 < toks.size() && toks[i + 1] != "(") {
            ++i;
            continue;
        }
        if (is_ident(t) && i + 1 < toks.size() && toks[i + 1] == ".") {
            if (!keepQualifiers) {
                ++i;
                continue;
            }
            if (auto it = alias.find(t); it != alias.end()) t = it->second;
            if (!out.empty() && out.back() != '.') out += ' ';
            out += t + ".";
            ++i;
            continue;
        }
        if (!out.empty() && out.back() != '.') out += ' ';
        out += t;
    }
    return out;
}

}  // namespace sqlnorm
