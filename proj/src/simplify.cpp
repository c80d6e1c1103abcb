#include "rql/sqlgen.hpp"

namespace rql {

namespace {

ExprPtr conj(const ExprPtr& a, const ExprPtr& b) {
    if (!a) return b;
    if (!b) return a;
    return make_apply(op_by_id("and_bool"), {a, b});
}

}  // namespace

QueryPtr merge_filters(const QueryPtr& q) {
    QueryPtr n = transform_children(q, merge_filters);
    if (n->kind == QueryKind::Filter && n->src->kind == QueryKind::Filter) {
        const Query& in = *n->src;
        return make_filter(in.src, n->binder, conj(rename_var(in.pred, in.binder, n->binder), n->pred));
    }
    if (n->kind == QueryKind::Join) {
        // Filters sitting directly on an uncorrelated join source become join predicates.
        bool changed = false;
        std::vector<JoinSource> sources;
        ExprPtr pred = n->pred;
        for (auto& s : n->sources) {
            JoinSource js = s;
            while (js.src->kind == QueryKind::Filter) {
                pred = conj(pred, rename_var(js.src->pred, js.src->binder, js.binder));
                js.src = js.src->src;
                changed = true;
            }
            sources.push_back(js);
        }
        if (changed) return make_join(sources, pred, n->body);
    }
    return n;
}

namespace {

struct Frame {
    std::vector<JoinSource> sources;
    ExprPtr pred;
    ExprPtr body;  // null: rows of the last source
};

bool mentions_any(const Query& q, const std::vector<JoinSource>& bound) {
    for (auto& b : bound)
        if (references_var(q, b.binder)) return true;
    return false;
}

std::optional<Frame> peel(const QueryPtr& q);

/// A single source bound to `binder`, absorbing a frame when the source is one.
std::optional<Frame> bind(const QueryPtr& src, RelVarId binder) {
    if (src->kind == QueryKind::FlatMap || src->kind == QueryKind::Map || src->kind == QueryKind::Filter) {
        auto f = peel(src);
        if (f && !f->body) {
            // The bound row is the last source's row.
            return f;
        }
    }
    return Frame{{{src, binder}}, nullptr, nullptr};
}

std::optional<Frame> peel(const QueryPtr& q) {
    switch (q->kind) {
        case QueryKind::Filter: {
            auto f = bind(q->src, q->binder);
            if (!f) return std::nullopt;
            f->pred = conj(f->pred, rename_var(q->pred, q->binder, f->sources.back().binder));
            return f;
        }
        case QueryKind::Map: {
            auto f = bind(q->src, q->binder);
            if (!f) return std::nullopt;
            f->body = rename_var(q->body, q->binder, f->sources.back().binder);
            return f;
        }
        case QueryKind::FlatMap: {
            auto outer = bind(q->src, q->binder);
            if (!outer) return std::nullopt;
            RelVarId b = outer->sources.back().binder;
            std::optional<Frame> inner;
            if (q->inner->kind == QueryKind::FlatMap || q->inner->kind == QueryKind::Map ||
                q->inner->kind == QueryKind::Filter)
                inner = peel(q->inner);
            if (!inner) inner = Frame{{{q->inner, fresh_var_id()}}, nullptr, nullptr};
            for (auto& s : inner->sources) {
                if (mentions_any(*s.src, outer->sources) || references_var(*s.src, q->binder)) return std::nullopt;
                for (auto& o : outer->sources)
                    if (o.binder == s.binder) return std::nullopt;
            }
            Frame f = *outer;
            ExprPtr ip = inner->pred ? rename_var(inner->pred, q->binder, b) : nullptr;
            ExprPtr ib = inner->body ? rename_var(inner->body, q->binder, b) : nullptr;
            f.sources.insert(f.sources.end(), inner->sources.begin(), inner->sources.end());
            f.pred = conj(f.pred, ip);
            f.body = ib;
            return f;
        }
        default: return std::nullopt;
    }
}

}  // namespace

QueryPtr flatten_flatmaps(const QueryPtr& q) {
    if (q->kind == QueryKind::FlatMap || q->kind == QueryKind::Map || q->kind == QueryKind::Filter) {
        auto f = peel(q);
        if (f && f->sources.size() >= 2) {
            for (auto& s : f->sources) s.src = flatten_flatmaps(s.src);
            return make_join(f->sources, f->pred, f->body);
        }
    }
    return transform_children(q, flatten_flatmaps);
}

QueryPtr simplify(const QueryPtr& q) { return merge_filters(flatten_flatmaps(q)); }

}  // namespace rql
