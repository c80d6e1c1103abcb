#include <json.hpp>

#include "rql/ir.hpp"

#include <algorithm>
#include <map>

namespace rql {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ir-v1";

json schema_json(const RowSchema& s) {
    json a = json::array();
    for (auto& c : s.columns) a.push_back({{"name", c.name}, {"type", to_string(c.type)}});
    return a;
}

json value_json(const Value& v) {
    return std::visit([](const auto& x) -> json { return x; }, v);
}

class Writer {
public:
    json query(const Query& q) {
        json j;
        j["kind"] = to_string(q.kind);
        switch (q.kind) {
            case QueryKind::TableScan:
                j["name"] = q.name;
                break;
            case QueryKind::RecRef:
                j["fix"] = fix_number(q.dep.fix);
                j["arg"] = q.dep.argIndex;
                break;
            case QueryKind::Map:
            case QueryKind::Aggregate: {
                j["src"] = query(*q.src);
                j["binder"] = declare(q.binder);
                j["body"] = expr(*q.body);
                undeclare();
                break;
            }
            case QueryKind::Filter:
                j["src"] = query(*q.src);
                j["binder"] = declare(q.binder);
                j["pred"] = expr(*q.pred);
                undeclare();
                break;
            case QueryKind::FlatMap:
                j["src"] = query(*q.src);
                j["binder"] = declare(q.binder);
                j["inner"] = query(*q.inner);
                undeclare();
                break;
            case QueryKind::GroupBy:
                j["src"] = query(*q.src);
                j["binder"] = declare(q.binder);
                j["keys"] = expr(*q.keys);
                j["select"] = expr(*q.body);
                if (q.having) j["having"] = expr(*q.having);
                undeclare();
                break;
            case QueryKind::Distinct:
                j["src"] = query(*q.src);
                break;
            case QueryKind::Union:
            case QueryKind::UnionAll:
            case QueryKind::Intersect:
            case QueryKind::IntersectAll:
                j["left"] = query(*q.left);
                j["right"] = query(*q.right);
                break;
            case QueryKind::Fix: {
                int n = ++nextFix_;
                j["id"] = n;
                j["names"] = q.names;
                j["out"] = q.out;
                json bases = json::array();
                for (auto& b : q.bases) bases.push_back(query(*b));
                fixes_.emplace_back(q.fixId, n);
                json defs = json::array();
                for (auto& d : q.defs) defs.push_back(query(*d));
                fixes_.pop_back();
                j["bases"] = std::move(bases);
                j["defs"] = std::move(defs);
                break;
            }
            case QueryKind::Join: {
                json srcs = json::array();
                for (auto& s : q.sources) {
                    json sj;
                    sj["src"] = query(*s.src);
                    sj["binder"] = declare(s.binder);
                    srcs.push_back(std::move(sj));
                }
                j["sources"] = std::move(srcs);
                if (q.pred) j["pred"] = expr(*q.pred);
                if (q.body) j["body"] = expr(*q.body);
                for (std::size_t i = 0; i < q.sources.size(); ++i) undeclare();
                break;
            }
        }
        j["schema"] = schema_json(q.schema);
        j["category"] = to_string(q.category);
        json deps = json::array();
        for (auto& d : q.deps) deps.push_back(json::array({fix_number(d.fix), d.argIndex}));
        j["deps"] = std::move(deps);
        j["restricted"] = q.restricted;
        return j;
    }

    json expr(const Expr& e) {
        json j;
        switch (e.kind) {
            case ExprKind::ColumnRef:
                j["kind"] = "col";
                j["var"] = var_number(e.var);
                j["column"] = e.column;
                break;
            case ExprKind::Lit:
                j["kind"] = "lit";
                j["type"] = to_string(e.type);
                j["value"] = value_json(e.value);
                break;
            case ExprKind::Apply:
            case ExprKind::AggApply: {
                j["kind"] = e.kind == ExprKind::Apply ? "apply" : "agg";
                j["op"] = e.op->opId;
                json args = json::array();
                for (auto& a : e.args) args.push_back(expr(*a));
                j["args"] = std::move(args);
                break;
            }
            case ExprKind::RowCtor: {
                j["kind"] = "row";
                json fields = json::array();
                for (std::size_t i = 0; i < e.args.size(); ++i)
                    fields.push_back({{"name", e.fieldNames[i]}, {"expr", expr(*e.args[i])}});
                j["fields"] = std::move(fields);
                break;
            }
        }
        j["shape"] = to_string(e.shape);
        j["constructor"] = e.usesConstructor;
        return j;
    }

private:
    int declare(RelVarId v) {
        int n = ++nextVar_;
        vars_.emplace_back(v, n);
        return n;
    }
    void undeclare() { vars_.pop_back(); }

    int var_number(RelVarId v) const {
        for (auto it = vars_.rbegin(); it != vars_.rend(); ++it)
            if (it->first == v) return it->second;
        throw ValidationError("column reference to an unbound row variable");
    }

    int fix_number(FixId id) const {
        for (auto it = fixes_.rbegin(); it != fixes_.rend(); ++it)
            if (it->first == id) return it->second;
        // A dependency that escapes every enclosing fix in this document.
        return 0;
    }

    int nextVar_ = 0;
    int nextFix_ = 0;
    std::vector<std::pair<RelVarId, int>> vars_;
    std::vector<std::pair<FixId, int>> fixes_;
};

struct Binding {
    long long doc;
    RelVarId var;
    RowSchema schema;
};

struct FixScope {
    long long doc;
    FixId id;
    std::vector<RowSchema> schemas;
};

class Reader {
public:
    QueryPtr query(const json& j, const std::string& path) {
        QueryPtr q = build(j, path);
        validate_cache(j, *q, path);
        return q;
    }

private:
    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        throw ParseError(path + ": " + msg, 0);
    }

    const json& field(const json& j, const char* name, const std::string& path) const {
        if (!j.is_object()) fail(path, "expected an object");
        auto it = j.find(name);
        if (it == j.end()) fail(path, std::string("missing field '") + name + "'");
        return *it;
    }

    std::string str(const json& j, const char* name, const std::string& path) const {
        const json& v = field(j, name, path);
        if (!v.is_string()) fail(path, std::string("field '") + name + "' must be a string");
        return v.get<std::string>();
    }

    long long integer(const json& j, const char* name, const std::string& path) const {
        const json& v = field(j, name, path);
        if (!v.is_number_integer()) fail(path, std::string("field '") + name + "' must be an integer");
        return v.get<long long>();
    }

    RowSchema schema(const json& j, const std::string& path) const {
        if (!j.is_array()) fail(path, "schema must be an array");
        std::vector<Column> cols;
        for (auto& c : j) {
            auto t = parse_column_type(str(c, "type", path));
            if (!t) fail(path, "unknown column type");
            cols.push_back({str(c, "name", path), *t});
        }
        return RowSchema{std::move(cols)};
    }

    RelVarId bind(long long doc, const RowSchema& s) {
        RelVarId v = fresh_var_id();
        scope_.push_back({doc, v, s});
        return v;
    }

    template <class F>
    auto wrap(const std::string& path, F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (const ParseError&) {
            throw;
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& e) {
            throw ValidationError(path + ": " + e.what());
        }
    }

    QueryPtr build(const json& j, const std::string& path) {
        std::string kind = str(j, "kind", path);
        if (kind == "table") {
            return wrap(path, [&] { return make_table(str(j, "name", path), schema(field(j, "schema", path), path)); });
        }
        if (kind == "recref") {
            long long doc = integer(j, "fix", path);
            long long arg = integer(j, "arg", path);
            const FixScope* fs = nullptr;
            for (auto it = fixes_.rbegin(); it != fixes_.rend(); ++it)
                if (it->doc == doc) {
                    fs = &*it;
                    break;
                }
            if (!fs) throw ValidationError(path + ": recursive reference to fix " + std::to_string(doc) + " out of scope");
            if (arg < 1 || static_cast<std::size_t>(arg) > fs->schemas.size())
                throw ValidationError(path + ": recursive reference index " + std::to_string(arg) +
                                      " exceeds fix arity " + std::to_string(fs->schemas.size()));
            RowSchema s = schema(field(j, "schema", path), path);
            if (!(s == fs->schemas[arg - 1]))
                throw ValidationError(path + ": recursive reference schema differs from its base");
            return wrap(path, [&] { return make_recref(DepRef{fs->id, static_cast<int>(arg)}, s); });
        }
        if (kind == "map" || kind == "aggregate" || kind == "filter" || kind == "flatmap" || kind == "groupby") {
            QueryPtr src = query(field(j, "src", path), path + ".src");
            RelVarId v = bind(integer(j, "binder", path), src->schema);
            QueryPtr out;
            if (kind == "map")
                out = wrap(path, [&] { return make_map(src, v, expr(field(j, "body", path), path + ".body")); });
            else if (kind == "aggregate")
                out = wrap(path, [&] { return make_aggregate(src, v, expr(field(j, "body", path), path + ".body")); });
            else if (kind == "filter")
                out = wrap(path, [&] { return make_filter(src, v, expr(field(j, "pred", path), path + ".pred")); });
            else if (kind == "flatmap")
                out = wrap(path, [&] { return make_flatmap(src, v, query(field(j, "inner", path), path + ".inner")); });
            else {
                ExprPtr keys = expr(field(j, "keys", path), path + ".keys");
                ExprPtr sel = expr(field(j, "select", path), path + ".select");
                ExprPtr having = j.contains("having") ? expr(j["having"], path + ".having") : nullptr;
                out = wrap(path, [&] { return make_groupby(src, v, keys, sel, having); });
            }
            scope_.pop_back();
            return out;
        }
        if (kind == "distinct") {
            QueryPtr src = query(field(j, "src", path), path + ".src");
            return wrap(path, [&] { return make_distinct(src); });
        }
        if (kind == "union" || kind == "unionall" || kind == "intersect" || kind == "intersectall") {
            QueryKind k = kind == "union"       ? QueryKind::Union
                          : kind == "unionall"  ? QueryKind::UnionAll
                          : kind == "intersect" ? QueryKind::Intersect
                                                : QueryKind::IntersectAll;
            QueryPtr l = query(field(j, "left", path), path + ".left");
            QueryPtr r = query(field(j, "right", path), path + ".right");
            return wrap(path, [&] { return make_setop(k, l, r); });
        }
        if (kind == "fix") {
            long long doc = integer(j, "id", path);
            const json& bj = field(j, "bases", path);
            const json& dj = field(j, "defs", path);
            if (!bj.is_array() || !dj.is_array()) fail(path, "bases and defs must be arrays");
            std::vector<QueryPtr> bases;
            for (std::size_t i = 0; i < bj.size(); ++i)
                bases.push_back(query(bj[i], path + ".bases[" + std::to_string(i) + "]"));
            FixScope fs{doc, fresh_fix_id(), {}};
            for (auto& b : bases) fs.schemas.push_back(b->schema);
            fixes_.push_back(fs);
            std::vector<QueryPtr> defs;
            for (std::size_t i = 0; i < dj.size(); ++i)
                defs.push_back(query(dj[i], path + ".defs[" + std::to_string(i) + "]"));
            fixes_.pop_back();
            std::vector<std::string> names;
            if (j.contains("names")) {
                if (!j["names"].is_array()) fail(path, "names must be an array");
                for (auto& n : j["names"]) {
                    if (!n.is_string()) fail(path, "names must be strings");
                    names.push_back(n.get<std::string>());
                }
            }
            long long out = j.contains("out") ? integer(j, "out", path) : 0;
            if (out < 0) fail(path, "negative out index");
            return wrap(path, [&] {
                return make_fix(fs.id, std::move(bases), std::move(defs), std::move(names),
                                static_cast<std::size_t>(out));
            });
        }
        if (kind == "join") {
            const json& sj = field(j, "sources", path);
            if (!sj.is_array()) fail(path, "sources must be an array");
            std::vector<JoinSource> sources;
            for (std::size_t i = 0; i < sj.size(); ++i) {
                std::string sp = path + ".sources[" + std::to_string(i) + "]";
                QueryPtr src = query(field(sj[i], "src", sp), sp);
                sources.push_back({src, bind(integer(sj[i], "binder", sp), src->schema)});
            }
            ExprPtr pred = j.contains("pred") ? expr(j["pred"], path + ".pred") : nullptr;
            ExprPtr body = j.contains("body") ? expr(j["body"], path + ".body") : nullptr;
            for (std::size_t i = 0; i < sources.size(); ++i) scope_.pop_back();
            return wrap(path, [&] { return make_join(std::move(sources), pred, body); });
        }
        fail(path, "unknown query kind '" + kind + "'");
    }

    ExprPtr expr(const json& j, const std::string& path) {
        ExprPtr e = build_expr(j, path);
        if (j.contains("shape") && j["shape"] != to_string(e->shape))
            throw ValidationError(path + ": cached shape contradicts recomputed shape");
        if (j.contains("constructor") && j["constructor"] != e->usesConstructor)
            throw ValidationError(path + ": cached constructor flag contradicts recomputation");
        return e;
    }

    ExprPtr build_expr(const json& j, const std::string& path) {
        std::string kind = str(j, "kind", path);
        if (kind == "col") {
            long long doc = integer(j, "var", path);
            for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
                if (it->doc == doc)
                    return wrap(path, [&] { return make_column_ref(it->var, it->schema, str(j, "column", path)); });
            throw ValidationError(path + ": row variable " + std::to_string(doc) + " is not in scope");
        }
        if (kind == "lit") {
            auto t = parse_column_type(str(j, "type", path));
            if (!t) fail(path, "unknown literal type");
            const json& v = field(j, "value", path);
            switch (*t) {
                case ColumnType::Int:
                    if (!v.is_number_integer()) fail(path, "int literal expected");
                    return make_lit(v.get<std::int64_t>());
                case ColumnType::Float:
                    if (!v.is_number()) fail(path, "float literal expected");
                    return make_lit(v.get<double>());
                case ColumnType::Bool:
                    if (!v.is_boolean()) fail(path, "bool literal expected");
                    return make_lit(v.get<bool>());
                case ColumnType::Text:
                    if (!v.is_string()) fail(path, "text literal expected");
                    return make_lit(v.get<std::string>());
            }
        }
        if (kind == "apply" || kind == "agg") {
            std::string opId = str(j, "op", path);
            const json& aj = field(j, "args", path);
            if (!aj.is_array()) fail(path, "args must be an array");
            std::vector<ExprPtr> args;
            for (std::size_t i = 0; i < aj.size(); ++i)
                args.push_back(expr(aj[i], path + ".args[" + std::to_string(i) + "]"));
            return wrap(path, [&] {
                const OperatorSignature& op = op_by_id(opId);
                return kind == "apply" ? make_apply(op, std::move(args)) : make_agg(op, std::move(args));
            });
        }
        if (kind == "row") {
            const json& fj = field(j, "fields", path);
            if (!fj.is_array()) fail(path, "fields must be an array");
            std::vector<std::string> names;
            std::vector<ExprPtr> exprs;
            for (std::size_t i = 0; i < fj.size(); ++i) {
                std::string fp = path + ".fields[" + std::to_string(i) + "]";
                names.push_back(str(fj[i], "name", fp));
                exprs.push_back(expr(field(fj[i], "expr", fp), fp));
            }
            return wrap(path, [&] { return make_row(std::move(names), std::move(exprs)); });
        }
        fail(path, "unknown expression kind '" + kind + "'");
    }

    int doc_fix(FixId id) const {
        for (auto it = fixes_.rbegin(); it != fixes_.rend(); ++it)
            if (it->id == id) return static_cast<int>(it->doc);
        return 0;
    }

    void validate_cache(const json& j, const Query& q, const std::string& path) const {
        if (j.contains("schema") && q.kind != QueryKind::TableScan && q.kind != QueryKind::RecRef) {
            if (!(schema(j["schema"], path) == q.schema))
                throw ValidationError(path + ": cached schema contradicts recomputed schema");
        }
        if (j.contains("category") && j["category"] != to_string(q.category))
            throw ValidationError(path + ": cached category contradicts recomputed category");
        if (j.contains("restricted") && j["restricted"] != q.restricted)
            throw ValidationError(path + ": cached restricted flag contradicts recomputation");
        if (j.contains("deps")) {
            const json& dj = j["deps"];
            if (!dj.is_array()) fail(path, "deps must be an array");
            std::vector<std::pair<long long, long long>> claimed;
            for (auto& d : dj) {
                if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer())
                    fail(path, "deps entries must be [fix, arg] pairs");
                long long doc = d[0].get<long long>();
                long long arg = d[1].get<long long>();
                for (auto& fs : fixes_)
                    if (fs.doc == doc && (arg < 1 || static_cast<std::size_t>(arg) > fs.schemas.size()))
                        throw ValidationError(path + ": dependency index " + std::to_string(arg) +
                                              " exceeds fix arity " + std::to_string(fs.schemas.size()));
                claimed.emplace_back(doc, arg);
            }
            std::vector<std::pair<long long, long long>> actual;
            for (auto& d : q.deps) actual.emplace_back(doc_fix(d.fix), d.argIndex);
            std::sort(claimed.begin(), claimed.end());
            std::sort(actual.begin(), actual.end());
            if (claimed != actual)
                throw ValidationError(path + ": cached dependencies contradict recomputed dependencies");
        }
    }

    std::vector<Binding> scope_;
    std::vector<FixScope> fixes_;
};

}  // namespace

std::string serialize_ir(const QueryPtr& q) {
    if (!q) throw ValidationError("cannot serialize a null query");
    Writer w;
    json doc;
    doc["format"] = kFormat;
    doc["query"] = w.query(*q);
    return doc.dump(2) + "\n";
}

QueryPtr deserialize_ir(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("format") || doc["format"] != kFormat)
        throw ParseError("$: missing or unsupported format tag (expected ir-v1)", 0);
    if (!doc.contains("query")) throw ParseError("$: missing field 'query'", 0);
    Reader r;
    return r.query(doc["query"], "$");
}

bool structurally_equal(const QueryPtr& a, const QueryPtr& b) {
    if (!a || !b) return a == b;
    return serialize_ir(a) == serialize_ir(b);
}

}  // namespace rql
