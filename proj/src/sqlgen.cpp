#include "rql/sqlgen.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

namespace rql {

namespace {

const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words{
        "all",    "and",      "any",    "as",     "asc",      "between", "by",       "case",   "check",
        "column", "constraint", "create", "cross", "current", "default", "delete",   "desc",   "distinct",
        "drop",   "else",     "end",    "except", "exists",   "false",   "fetch",    "for",    "foreign",
        "from",   "full",     "grant",  "group",  "having",   "in",      "index",    "inner",  "insert",
        "intersect", "into",  "is",     "join",   "key",      "lateral", "left",     "like",   "limit",
        "natural", "not",     "null",   "of",     "offset",   "on",      "or",       "order",  "outer",
        "primary", "recursive", "references", "right", "select", "set", "some",     "table",  "then",
        "to",     "true",     "union",  "unique", "update",   "user",    "using",    "values", "when",
        "where",  "window",   "with",   "level",  "size",     "comment", "number",   "date",   "time"};
    return words;
}

bool is_simple_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return !reserved_words().count(lower);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

int precedence(const OperatorSignature& op) {
    if (op.name == "or") return 1;
    if (op.name == "and") return 2;
    if (op.name == "not") return 3;
    if (op.name == "add" || op.name == "sub" || op.name == "concat") return 5;
    if (op.name == "mul" || op.name == "div") return 6;
    return 4;  // comparisons, LIKE
}

bool is_setop(QueryKind k) {
    return k == QueryKind::Union || k == QueryKind::UnionAll || k == QueryKind::Intersect ||
           k == QueryKind::IntersectAll;
}

class Renderer {
public:
    Renderer(const QueryPtr& root, Dialect d, std::vector<std::string>& warnings)
        : d_(d), warnings_(warnings), names_(component_names(root)) {
        int k = 0;
        number_binders(*root, k);
    }

    std::string document(const QueryPtr& root) {
        std::string main = query(*root);
        std::string text;
        if (!ctes_.empty()) {
            bool plainWith = d_ == Dialect::Oracle || d_ == Dialect::SQLServer;
            text += plainWith ? "WITH " : "WITH RECURSIVE ";
            text += join(ctes_, ",\n") + "\n";
        }
        text += main + ";\n";
        return text;
    }

private:
    Dialect d_;
    std::vector<std::string>& warnings_;
    std::map<ComponentKey, std::string> names_;
    std::map<RelVarId, std::string> alias_;
    std::vector<std::string> ctes_;
    std::set<FixId> hoisted_;
    int subqueries_ = 0;

    void number_binders(const Query& q, int& k) {
        auto assign = [&](RelVarId v) {
            if (!alias_.count(v)) alias_[v] = "v" + std::to_string(++k);
        };
        switch (q.kind) {
            case QueryKind::Map:
            case QueryKind::FlatMap:
            case QueryKind::Filter:
            case QueryKind::Aggregate:
            case QueryKind::GroupBy: assign(q.binder); break;
            case QueryKind::Join:
                for (auto& s : q.sources) assign(s.binder);
                break;
            default: break;
        }
        for (auto& [step, c] : children_of(q)) number_binders(*c, k);
    }

    std::string fresh_alias() { return "s" + std::to_string(++subqueries_); }

    std::string quote(std::string_view s) const { return quote_identifier(s, d_); }

    std::string as(const std::string& alias) const {
        return d_ == Dialect::Oracle ? " " + alias : " AS " + alias;
    }

    const std::string& alias_of(RelVarId v) {
        auto it = alias_.find(v);
        if (it == alias_.end()) throw Error("unbound row variable in SQL generation");
        return it->second;
    }

    //-------------------------------------------------------------------
    // Expressions

    std::string literal(const Value& v) const {
        if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
        if (auto f = std::get_if<double>(&v)) {
            char buf[64];
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *f);
            std::string s(buf, end);
            if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
            return s;
        }
        if (auto b = std::get_if<bool>(&v)) {
            if (d_ == Dialect::Oracle || d_ == Dialect::SQLServer) return *b ? "1" : "0";
            return *b ? "TRUE" : "FALSE";
        }
        std::string out = "'";
        for (char c : std::get<std::string>(v)) {
            if (c == '\'') out += '\'';
            out += c;
        }
        return out + "'";
    }

    std::string expr(const Expr& e, int parentPrec = 0, bool rightSide = false) {
        switch (e.kind) {
            case ExprKind::ColumnRef: return alias_of(e.var) + "." + quote(e.column);
            case ExprKind::Lit: return literal(e.value);
            case ExprKind::AggApply: {
                if (e.args.empty()) return e.op->sqlToken + "(*)";
                std::vector<std::string> args;
                for (auto& a : e.args) args.push_back(expr(*a));
                return e.op->sqlToken + "(" + join(args, ", ") + ")";
            }
            case ExprKind::RowCtor: throw Error("row constructor outside a select list");
            case ExprKind::Apply: break;
        }
        const OperatorSignature& op = *e.op;
        if (op.name == "concat" && (d_ == Dialect::MySQL || d_ == Dialect::MariaDB))
            return "CONCAT(" + expr(*e.args[0]) + ", " + expr(*e.args[1]) + ")";
        int p = precedence(op);
        std::string s;
        switch (op.fixity) {
            case Fixity::Prefix: s = op.sqlToken + " " + expr(*e.args[0], p); break;
            case Fixity::Infix: {
                std::string token = op.name == "concat" && d_ == Dialect::SQLServer ? "+" : op.sqlToken;
                s = expr(*e.args[0], p) + " " + token + " " + expr(*e.args[1], p, true);
                break;
            }
            case Fixity::Call: {
                std::vector<std::string> args;
                for (auto& a : e.args) args.push_back(expr(*a));
                return op.sqlToken + "(" + join(args, ", ") + ")";
            }
        }
        if (p < parentPrec || (p == parentPrec && rightSide)) return "(" + s + ")";
        return s;
    }

    std::string select_list(const Expr& row) {
        std::vector<std::string> fields;
        for (std::size_t i = 0; i < row.args.size(); ++i)
            fields.push_back(expr(*row.args[i]) + " AS " + quote(row.fieldNames[i]));
        return join(fields, ", ");
    }

    //-------------------------------------------------------------------
    // Queries

    std::string from_item(const QueryPtr& s, const std::string& alias) {
        switch (s->kind) {
            case QueryKind::TableScan: return quote(s->name) + as(alias);
            case QueryKind::RecRef:
                return quote(names_.at({s->dep.fix, static_cast<std::size_t>(s->dep.argIndex - 1)})) + as(alias);
            case QueryKind::Fix:
                hoist(*s);
                return quote(names_.at({s->fixId, s->out})) + as(alias);
            default: return "(" + query(*s) + ")" + as(alias);
        }
    }

    /// Operand of a set operation or of a recursive CTE body.
    std::string member(const Query& q) {
        std::string sql = query(q);
        if (d_ != Dialect::SQLite) return "(" + sql + ")";
        if (is_setop(q.kind)) return "SELECT * FROM (" + sql + ")" + as(fresh_alias());
        return sql;
    }

    std::string frame(const Query& n) {
        const std::string& a = alias_of(n.binder);
        std::vector<ExprPtr> preds;
        if (n.kind == QueryKind::Filter) preds.push_back(n.pred);
        QueryPtr src = n.src;
        // Filters directly below share the frame; their binders temporarily render as `a`.
        std::vector<std::pair<RelVarId, std::string>> saved;
        while (src->kind == QueryKind::Filter) {
            saved.emplace_back(src->binder, alias_.at(src->binder));
            alias_[src->binder] = a;
            preds.push_back(src->pred);
            src = src->src;
        }
        std::reverse(preds.begin(), preds.end());

        std::string sel = n.kind == QueryKind::Filter ? "*" : select_list(*n.body);
        std::string sql = "SELECT " + sel + " FROM " + from_item(src, a);
        if (!preds.empty()) {
            std::vector<std::string> ps;
            for (auto& p : preds) ps.push_back(expr(*p, preds.size() > 1 ? 2 : 0));
            sql += " WHERE " + join(ps, " AND ");
        }
        if (n.kind == QueryKind::GroupBy) {
            std::vector<std::string> ks;
            for (auto& k : n.keys->args) ks.push_back(expr(*k));
            sql += " GROUP BY " + join(ks, ", ");
            if (n.having) sql += " HAVING " + expr(*n.having);
        }
        for (auto& [v, old] : saved) alias_[v] = old;
        return sql;
    }

    std::string join_frame(const Query& n) {
        std::vector<std::string> items;
        for (auto& s : n.sources) items.push_back(from_item(s.src, alias_of(s.binder)));
        std::string sel = n.body ? select_list(*n.body) : alias_of(n.sources.back().binder) + ".*";
        std::string sql = "SELECT " + sel + " FROM " + join(items, ", ");
        if (n.pred) sql += " WHERE " + expr(*n.pred);
        return sql;
    }

    std::string flatmap(const Query& n) {
        const std::string& a = alias_of(n.binder);
        std::string ia = fresh_alias();
        std::string outer = from_item(n.src, a);
        if (!references_var(*n.inner, n.binder))
            return "SELECT " + ia + ".* FROM " + outer + ", " + from_item(n.inner, ia);
        std::string inner = "(" + query(*n.inner) + ")";
        switch (d_) {
            case Dialect::SQLServer: return "SELECT " + ia + ".* FROM " + outer + " CROSS APPLY " + inner + as(ia);
            case Dialect::SQLite:
            case Dialect::MariaDB:
                throw UnsupportedFeature(std::string(to_string(d_)) +
                                         " has no LATERAL subqueries, needed for a correlated flatMap");
            default: return "SELECT " + ia + ".* FROM " + outer + ", LATERAL " + inner + as(ia);
        }
    }

    std::string distinct(const Query& n) {
        const Query& s = *n.src;
        std::string sql = query(s);
        if (sql.rfind("SELECT DISTINCT ", 0) == 0) return sql;
        bool single = !is_setop(s.kind) && s.kind != QueryKind::FlatMap && sql.rfind("SELECT ", 0) == 0;
        if (single) return "SELECT DISTINCT " + sql.substr(7);
        return "SELECT DISTINCT * FROM (" + sql + ")" + as(fresh_alias());
    }

    std::string setop(const Query& n) {
        std::string token;
        switch (n.kind) {
            case QueryKind::Union: token = "UNION"; break;
            case QueryKind::UnionAll: token = "UNION ALL"; break;
            case QueryKind::Intersect: token = "INTERSECT"; break;
            default: token = "INTERSECT ALL"; break;
        }
        return member(*n.left) + " " + token + " " + member(*n.right);
    }

    void hoist(const Query& fx) {
        if (!hoisted_.insert(fx.fixId).second) return;
        std::vector<std::string> parts;
        for (std::size_t i = 0; i < fx.arity(); ++i) {
            const std::string& name = names_.at({fx.fixId, i});
            const Query& base = *fx.bases[i];
            const Query* def = fx.defs[i].get();
            bool set = def->category == Category::Set;
            if (set && def->kind == QueryKind::Distinct) def = def->src.get();

            std::string baseSql = member(base);
            std::string defSql;
            DepRef self{fx.fixId, static_cast<int>(i + 1)};
            auto selfRefs = std::count(fx.defs[i]->deps.begin(), fx.defs[i]->deps.end(), self);
            if (d_ == Dialect::Postgres && selfRefs > 1)
                defSql = "(" + emit_nonlinear_shim(quote(name), query(*def), d_, warnings_) + ")";
            else
                defSql = member(*def);

            std::string header = quote(name);
            if (d_ == Dialect::Oracle || d_ == Dialect::SQLServer) {
                std::vector<std::string> cols;
                for (auto& c : base.schema.columns) cols.push_back(quote(c.name));
                header += " (" + join(cols, ", ") + ")";
            }
            parts.push_back(header + " AS (\n  " + baseSql + "\n    " + (set ? "UNION" : "UNION ALL") + "\n  " +
                            defSql + "\n)");
        }
        ctes_.insert(ctes_.end(), parts.begin(), parts.end());
    }

public:
    std::string query(const Query& n) {
        switch (n.kind) {
            case QueryKind::TableScan: return "SELECT * FROM " + quote(n.name);
            case QueryKind::RecRef:
                return "SELECT * FROM " +
                       quote(names_.at({n.dep.fix, static_cast<std::size_t>(n.dep.argIndex - 1)}));
            case QueryKind::Fix:
                hoist(n);
                return "SELECT * FROM " + quote(names_.at({n.fixId, n.out}));
            case QueryKind::Map:
            case QueryKind::Filter:
            case QueryKind::Aggregate:
            case QueryKind::GroupBy: return frame(n);
            case QueryKind::Join: return join_frame(n);
            case QueryKind::FlatMap: return flatmap(n);
            case QueryKind::Distinct: return distinct(n);
            case QueryKind::Union:
            case QueryKind::UnionAll:
            case QueryKind::Intersect:
            case QueryKind::IntersectAll: return setop(n);
        }
        throw Error("unknown query node");
    }
};

}  // namespace

std::string quote_identifier(std::string_view name, Dialect dialect) {
    if (is_simple_identifier(name)) return std::string(name);
    switch (dialect) {
        case Dialect::MySQL:
        case Dialect::MariaDB: {
            std::string out = "`";
            for (char c : name) out += c == '`' ? std::string("``") : std::string(1, c);
            return out + "`";
        }
        case Dialect::SQLServer: {
            std::string out = "[";
            for (char c : name) out += c == ']' ? std::string("]]") : std::string(1, c);
            return out + "]";
        }
        default: {
            std::string out = "\"";
            for (char c : name) out += c == '"' ? std::string("\"\"") : std::string(1, c);
            return out + "\"";
        }
    }
}

std::string emit_nonlinear_shim(const std::string& cteName, const std::string& recursiveTerm, Dialect dialect,
                                std::vector<std::string>& warnings) {
    if (dialect != Dialect::Postgres)
        throw Error("the non-linear alias shim only applies to postgres, not " + std::string(to_string(dialect)));
    warnings.push_back("non-linear recursion on " + cteName +
                       " is aliased for postgres; results may be incomplete");
    return "WITH " + cteName + " AS (SELECT * FROM " + cteName + ") " + recursiveTerm;
}

std::string render_sql(const QueryPtr& q, Dialect dialect, std::vector<std::string>& warnings) {
    Renderer r(q, dialect, warnings);
    std::string body = r.document(q);
    std::string header;
    for (auto& w : warnings) header += "-- warning: " + w + "\n";
    return header + body;
}

SqlDoc emit(const QueryPtr& q, Dialect dialect, const EmitOptions& opts) {
    RestrictionProfile profile = opts.profile ? *opts.profile : profile_for(dialect);
    profile.dialect = dialect;
    CheckReport report = check_all(q, profile);

    SqlDoc doc{"", dialect, {}};
    for (auto& d : report.diagnostics) {
        if (d.severity != Severity::Error) continue;
        if (d.code == "MUTUAL" || d.code == "DIALECT")
            throw UnsupportedFeature(std::string(to_string(dialect)) + ": " + d.message);
    }
    if (!report.pass) {
        if (!opts.allowUnchecked) {
            std::string first;
            for (auto& d : report.diagnostics)
                if (d.severity == Severity::Error) {
                    first = d.code + " at " + d.path + ": " + d.message;
                    break;
                }
            throw UncheckedQuery("query fails profile '" + profile.name + "' (" + first + ")", std::move(report));
        }
        for (auto& d : report.diagnostics)
            if (d.severity == Severity::Error)
                doc.warnings.push_back("unchecked " + d.code + " at " + d.path + ": " + d.message + " (risk: " +
                                       std::string(to_string(d.risk)) + ")");
    }
    for (auto& d : report.diagnostics)
        if (d.severity == Severity::Warning)
            doc.warnings.push_back(d.code + " at " + d.path + ": " + d.message + " (risk: " +
                                   std::string(to_string(d.risk)) + ")");
    doc.text = render_sql(simplify(q), dialect, doc.warnings);
    return doc;
}

}  // namespace rql
