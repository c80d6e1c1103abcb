#include "rql/ir.hpp"

#include <algorithm>

namespace rql {

QueryPtr transform_children(const QueryPtr& q, const std::function<QueryPtr(const QueryPtr&)>& f) {
    switch (q->kind) {
        case QueryKind::TableScan:
        case QueryKind::RecRef: return q;
        case QueryKind::Map: {
            auto s = f(q->src);
            return s == q->src ? q : make_map(s, q->binder, q->body);
        }
        case QueryKind::Filter: {
            auto s = f(q->src);
            return s == q->src ? q : make_filter(s, q->binder, q->pred);
        }
        case QueryKind::Distinct: {
            auto s = f(q->src);
            return s == q->src ? q : make_distinct(s);
        }
        case QueryKind::Aggregate: {
            auto s = f(q->src);
            return s == q->src ? q : make_aggregate(s, q->binder, q->body);
        }
        case QueryKind::GroupBy: {
            auto s = f(q->src);
            return s == q->src ? q : make_groupby(s, q->binder, q->keys, q->body, q->having);
        }
        case QueryKind::FlatMap: {
            auto s = f(q->src);
            auto i = f(q->inner);
            return s == q->src && i == q->inner ? q : make_flatmap(s, q->binder, i);
        }
        case QueryKind::Union:
        case QueryKind::UnionAll:
        case QueryKind::Intersect:
        case QueryKind::IntersectAll: {
            auto l = f(q->left);
            auto r = f(q->right);
            return l == q->left && r == q->right ? q : make_setop(q->kind, l, r);
        }
        case QueryKind::Fix: {
            bool changed = false;
            std::vector<QueryPtr> bases, defs;
            for (auto& b : q->bases) {
                bases.push_back(f(b));
                changed |= bases.back() != b;
            }
            for (auto& d : q->defs) {
                defs.push_back(f(d));
                changed |= defs.back() != d;
            }
            return changed ? make_fix(q->fixId, bases, defs, q->names, q->out) : q;
        }
        case QueryKind::Join: {
            bool changed = false;
            std::vector<JoinSource> sources;
            for (auto& s : q->sources) {
                sources.push_back({f(s.src), s.binder});
                changed |= sources.back().src != s.src;
            }
            return changed ? make_join(sources, q->pred, q->body) : q;
        }
    }
    return q;
}

ExprPtr rename_var(const ExprPtr& e, RelVarId from, RelVarId to) {
    if (!e) return e;
    if (e->kind == ExprKind::ColumnRef) {
        if (e->var != from) return e;
        auto c = std::make_shared<Expr>(*e);
        c->var = to;
        return c;
    }
    bool changed = false;
    std::vector<ExprPtr> args;
    for (auto& a : e->args) {
        args.push_back(rename_var(a, from, to));
        changed |= args.back() != a;
    }
    if (!changed) return e;
    auto c = std::make_shared<Expr>(*e);
    c->args = std::move(args);
    return c;
}

bool references_var(const Query& q, RelVarId var) {
    for (auto& [step, e] : exprs_of(q)) {
        std::vector<RelVarId> vs;
        collect_vars(*e, vs);
        if (std::find(vs.begin(), vs.end(), var) != vs.end()) return true;
    }
    for (auto& [step, c] : children_of(q))
        if (references_var(*c, var)) return true;
    return false;
}

}  // namespace rql
