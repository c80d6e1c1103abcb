#include "rql/eval.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "rql/checker.hpp"

namespace rql {

std::string_view to_string(EvalMode m) {
    switch (m) {
        case EvalMode::Naive: return "naive";
        case EvalMode::SemiNaiveFull: return "seminaive";
        case EvalMode::DeltaOnly: return "deltaonly";
    }
    return "?";
}

std::optional<EvalMode> parse_eval_mode(std::string_view s) {
    if (s == "naive") return EvalMode::Naive;
    if (s == "seminaive" || s == "semi-naive") return EvalMode::SemiNaiveFull;
    if (s == "deltaonly" || s == "delta-only") return EvalMode::DeltaOnly;
    return std::nullopt;
}

int EvalStats::max_iterations() const {
    int m = 0;
    for (auto& f : fixes) m = std::max(m, f.iterations);
    return m;
}

std::string format_value(const Value& v) {
    if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    if (auto f = std::get_if<double>(&v)) {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *f);
        return std::string(buf, end);
    }
    if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return std::get<std::string>(v);
}

namespace {

struct ValueHash {
    std::size_t operator()(const Value& v) const { return std::hash<Value>{}(v); }
};

struct RowHash {
    std::size_t operator()(const Tuple& r) const {
        std::size_t h = 0xcbf29ce484222325ull;
        for (auto& v : r) h = (h ^ std::hash<Value>{}(v)) * 0x100000001b3ull;
        return h;
    }
};

using RowSet = std::unordered_set<Tuple, RowHash>;

//---------------------------------------------------------------------------
// Operators
//---------------------------------------------------------------------------

enum class Op { Add, Sub, Mul, Div, Concat, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Not, Like, Sum, Avg, Min, Max, Count };

Op opcode(const OperatorSignature& sig) {
    static const std::unordered_map<const OperatorSignature*, Op> table = [] {
        static const std::unordered_map<std::string, Op> byName{
            {"add", Op::Add}, {"sub", Op::Sub}, {"mul", Op::Mul},    {"div", Op::Div}, {"concat", Op::Concat},
            {"eq", Op::Eq},   {"ne", Op::Ne},   {"lt", Op::Lt},      {"le", Op::Le},   {"gt", Op::Gt},
            {"ge", Op::Ge},   {"and", Op::And}, {"or", Op::Or},      {"not", Op::Not}, {"like", Op::Like},
            {"sum", Op::Sum}, {"avg", Op::Avg}, {"min", Op::Min},    {"max", Op::Max}, {"count", Op::Count}};
        std::unordered_map<const OperatorSignature*, Op> t;
        for (auto& s : operator_registry()) t.emplace(&s, byName.at(s.name));
        return t;
    }();
    return table.at(&sig);
}

bool like_match(std::string_view s, std::string_view p) {
    std::size_t si = 0, pi = 0, star = std::string_view::npos, mark = 0;
    while (si < s.size()) {
        if (pi < p.size() && (p[pi] == '_' || p[pi] == s[si])) {
            ++si;
            ++pi;
        } else if (pi < p.size() && p[pi] == '%') {
            star = pi++;
            mark = si;
        } else if (star != std::string_view::npos) {
            pi = star + 1;
            si = ++mark;
        } else {
            return false;
        }
    }
    while (pi < p.size() && p[pi] == '%') ++pi;
    return pi == p.size();
}

template <typename F>
std::int64_t checked(F op, std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (op(a, b, &r)) throw Error("integer overflow");
    return r;
}

Value apply_binary(Op op, const Value& a, const Value& b) {
    switch (op) {
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
            if (auto x = std::get_if<std::int64_t>(&a)) {
                std::int64_t y = std::get<std::int64_t>(b);
                using I = std::int64_t;
                switch (op) {
                    case Op::Add: return checked([](I p, I q, I* r) { return __builtin_add_overflow(p, q, r); }, *x, y);
                    case Op::Sub: return checked([](I p, I q, I* r) { return __builtin_sub_overflow(p, q, r); }, *x, y);
                    case Op::Mul: return checked([](I p, I q, I* r) { return __builtin_mul_overflow(p, q, r); }, *x, y);
                    default:
                        if (y == 0) throw DivisionByZero("integer division by zero");
                        if (y == -1 && *x == std::numeric_limits<I>::min()) throw Error("integer overflow");
                        return *x / y;
                }
            } else {
                double u = std::get<double>(a), w = std::get<double>(b);
                switch (op) {
                    case Op::Add: return u + w;
                    case Op::Sub: return u - w;
                    case Op::Mul: return u * w;
                    default:
                        if (w == 0.0) throw DivisionByZero("float division by zero");
                        return u / w;
                }
            }
        case Op::Concat: return std::get<std::string>(a) + std::get<std::string>(b);
        case Op::Eq: return a == b;
        case Op::Ne: return a != b;
        case Op::Lt: return a < b;
        case Op::Le: return a <= b;
        case Op::Gt: return a > b;
        case Op::Ge: return a >= b;
        case Op::And: return std::get<bool>(a) && std::get<bool>(b);
        case Op::Or: return std::get<bool>(a) || std::get<bool>(b);
        case Op::Like: return like_match(std::get<std::string>(a), std::get<std::string>(b));
        default: throw Error("operator is not binary");
    }
}

const Tuple& lookup(const Env& env, RelVarId var) {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
        if (it->first == var) return *it->second;
    throw Error("unbound row variable during evaluation");
}

Tuple eval_row(const Expr& row, const Env& env) {
    Tuple out;
    out.reserve(row.args.size());
    for (auto& f : row.args) out.push_back(eval_expr(*f, env));
    return out;
}

Value eval_group(const Expr& e, const std::vector<const Tuple*>& group, RelVarId binder, Env& env) {
    if (e.kind == ExprKind::AggApply) {
        Op op = opcode(*e.op);
        if (op == Op::Count) return static_cast<std::int64_t>(group.size());
        std::vector<Value> vals;
        vals.reserve(group.size());
        for (const Tuple* r : group) {
            env.emplace_back(binder, r);
            vals.push_back(eval_expr(*e.args[0], env));
            env.pop_back();
        }
        switch (op) {
            case Op::Sum: {
                Value acc = vals[0];
                for (std::size_t i = 1; i < vals.size(); ++i) acc = apply_binary(Op::Add, acc, vals[i]);
                return acc;
            }
            case Op::Avg: {
                double s = 0;
                for (auto& v : vals)
                    s += std::holds_alternative<std::int64_t>(v) ? static_cast<double>(std::get<std::int64_t>(v))
                                                                  : std::get<double>(v);
                return s / static_cast<double>(vals.size());
            }
            case Op::Min: return *std::min_element(vals.begin(), vals.end());
            case Op::Max: return *std::max_element(vals.begin(), vals.end());
            default: throw Error("unknown aggregate");
        }
    }
    if (e.kind == ExprKind::Apply && e.shape == Shape::Scalar) {
        Op op = opcode(*e.op);
        if (op == Op::Not) return !std::get<bool>(eval_group(*e.args[0], group, binder, env));
        return apply_binary(op, eval_group(*e.args[0], group, binder, env), eval_group(*e.args[1], group, binder, env));
    }
    env.emplace_back(binder, group.front());
    Value v = eval_expr(e, env);
    env.pop_back();
    return v;
}

void conjuncts(const ExprPtr& e, std::vector<ExprPtr>& out) {
    if (e->kind == ExprKind::Apply && e->op->name == "and") {
        conjuncts(e->args[0], out);
        conjuncts(e->args[1], out);
    } else {
        out.push_back(e);
    }
}

std::vector<RelVarId> vars_of(const Expr& e) {
    std::vector<RelVarId> v;
    collect_vars(e, v);
    return v;
}

bool contains(const std::vector<RelVarId>& vs, RelVarId v) { return std::find(vs.begin(), vs.end(), v) != vs.end(); }

/// `var.col == other` with `other` free of var, in either orientation.
struct Probe {
    std::size_t column;
    ExprPtr other;
};

std::optional<Probe> as_probe(const ExprPtr& c, RelVarId var) {
    if (c->kind != ExprKind::Apply || c->op->name != "eq") return std::nullopt;
    for (int side = 0; side < 2; ++side) {
        const ExprPtr& a = c->args[side];
        const ExprPtr& b = c->args[1 - side];
        if (a->kind == ExprKind::ColumnRef && a->var == var && !contains(vars_of(*b), var))
            return Probe{a->columnIndex, b};
    }
    return std::nullopt;
}

void free_vars(const Query& q, std::set<RelVarId>& out) {
    std::set<RelVarId> inner;
    for (auto& [step, c] : children_of(q)) {
        if (q.kind == QueryKind::FlatMap && step == ".inner") {
            std::set<RelVarId> f;
            free_vars(*c, f);
            f.erase(q.binder);
            out.insert(f.begin(), f.end());
        } else {
            free_vars(*c, out);
        }
    }
    std::set<RelVarId> bound;
    if (q.kind == QueryKind::Join)
        for (auto& s : q.sources) bound.insert(s.binder);
    else if (q.binder)
        bound.insert(q.binder);
    for (auto& [step, e] : exprs_of(q))
        for (RelVarId v : vars_of(*e))
            if (!bound.count(v)) out.insert(v);
}

bool has_overlay_scan(const Query& q) {
    if (q.kind == QueryKind::TableScan) return !q.name.empty() && q.name[0] == '#';
    for (auto& [step, c] : children_of(q))
        if (has_overlay_scan(*c)) return true;
    return false;
}

using RelPtr = std::shared_ptr<const Relation>;

//---------------------------------------------------------------------------
// Evaluator
//---------------------------------------------------------------------------

class Evaluator {
public:
    Evaluator(const Database& db, const EvalConfig& cfg, EvalStats* stats, std::map<ComponentKey, std::string> names)
        : db_(db), cfg_(cfg), stats_(stats), names_(std::move(names)) {
        if (cfg_.iterationCap < 1) throw Error("iteration cap must be at least 1");
    }

    RelPtr eval(const QueryPtr& q) {
        bool c = closed(*q);
        if (c) {
            auto it = cache_.find(q.get());
            if (it != cache_.end()) return it->second;
        }
        RelPtr r = compute(q);
        if (c && q->kind != QueryKind::TableScan) cache_[q.get()] = r;
        return r;
    }

private:
    const Database& db_;
    EvalConfig cfg_;
    EvalStats* stats_;
    std::map<ComponentKey, std::string> names_;

    Env env_;
    std::unordered_map<std::string, RelPtr> overlay_;
    std::unordered_map<const Query*, RelPtr> cache_;
    std::unordered_map<const Query*, bool> closed_;
    std::vector<QueryPtr> keepAlive_;
    int fixCounter_ = 0;
    int fixDepth_ = 0;

    struct IndexEntry {
        RelPtr keep;
        std::unordered_map<std::size_t, std::unordered_map<Value, std::vector<std::size_t>, ValueHash>> byColumn;
    };
    std::unordered_map<const Relation*, IndexEntry> indexes_;

    bool closed(const Query& q) {
        auto it = closed_.find(&q);
        if (it != closed_.end()) return it->second;
        std::set<RelVarId> fv;
        free_vars(q, fv);
        bool c = fv.empty() && q.deps.empty() && !has_overlay_scan(q);
        closed_[&q] = c;
        return c;
    }

    const std::unordered_map<Value, std::vector<std::size_t>, ValueHash>& index_for(const RelPtr& rel,
                                                                                     std::size_t col) {
        IndexEntry& e = indexes_[rel.get()];
        if (!e.keep) e.keep = rel;
        auto it = e.byColumn.find(col);
        if (it != e.byColumn.end()) return it->second;
        auto& idx = e.byColumn[col];
        for (std::size_t i = 0; i < rel->rows.size(); ++i) idx[rel->rows[i][col]].push_back(i);
        return idx;
    }

    void drop_unused_indexes() {
        for (auto it = indexes_.begin(); it != indexes_.end();)
            it = it->second.keep.use_count() == 1 ? indexes_.erase(it) : std::next(it);
    }

    std::shared_ptr<Relation> empty_like(const Query& q) {
        auto r = std::make_shared<Relation>();
        r->schema = q.schema;
        r->mode = q.category;
        return r;
    }

    struct BudgetExceeded {
        std::size_t rows;
    };

    /// Stops a single oversized intermediate inside a fixpoint round before it exhausts memory.
    void within_budget(const Relation& r) const {
        if (fixDepth_ > 0 && r.rows.size() > cfg_.rowBudget) throw BudgetExceeded{r.rows.size()};
    }

    bool holds(const ExprPtr& pred) { return std::get<bool>(eval_expr(*pred, env_)); }

    /// Set while a semi-naive variant runs: the overlay bound to the delta.
    /// Union branches that never read it contribute nothing new.
    const std::string* deltaScan_ = nullptr;
    std::map<std::pair<const Query*, std::string>, bool> readsDelta_;

    bool reads_scan(const Query& q, const std::string& name) {
        if (q.kind == QueryKind::TableScan) return q.name == name;
        for (auto& [step, c] : children_of(q))
            if (reads_scan(*c, name)) return true;
        return false;
    }

    RelPtr union_side(const QueryPtr& side) {
        if (!deltaScan_) return eval(side);
        auto [it, fresh] = readsDelta_.try_emplace({side.get(), *deltaScan_}, false);
        if (fresh) it->second = reads_scan(*side, *deltaScan_);
        return it->second ? eval(side) : empty_like(*side);
    }

    struct NoPruning {
        explicit NoPruning(const std::string*& slot) : slot_(slot), saved_(slot) { slot = nullptr; }
        ~NoPruning() { slot_ = saved_; }
        const std::string*& slot_;
        const std::string* saved_;
    };

    RelPtr compute(const QueryPtr& qp) {
        const Query& q = *qp;
        std::optional<NoPruning> guard;
        if (q.kind == QueryKind::Intersect || q.kind == QueryKind::IntersectAll || q.kind == QueryKind::Aggregate ||
            q.kind == QueryKind::GroupBy || q.kind == QueryKind::Fix)
            guard.emplace(deltaScan_);
        switch (q.kind) {
            case QueryKind::TableScan: return scan(q);
            case QueryKind::RecRef: throw Error("recursive reference evaluated outside its fixpoint");
            case QueryKind::Map: {
                RelPtr src = eval(q.src);
                auto out = empty_like(q);
                out->rows.reserve(src->rows.size());
                for (auto& r : src->rows) {
                    env_.emplace_back(q.binder, &r);
                    out->rows.push_back(eval_row(*q.body, env_));
                    env_.pop_back();
                }
                return out;
            }
            case QueryKind::Filter: return filter(q);
            case QueryKind::FlatMap: {
                RelPtr src = eval(q.src);
                auto out = empty_like(q);
                for (auto& r : src->rows) {
                    env_.emplace_back(q.binder, &r);
                    RelPtr in = eval(q.inner);
                    out->rows.insert(out->rows.end(), in->rows.begin(), in->rows.end());
                    env_.pop_back();
                    within_budget(*out);
                }
                return out;
            }
            case QueryKind::Distinct: {
                RelPtr src = eval(q.src);
                auto out = empty_like(q);
                RowSet seen;
                for (auto& r : src->rows)
                    if (seen.insert(r).second) out->rows.push_back(r);
                return out;
            }
            case QueryKind::Union:
            case QueryKind::UnionAll: {
                RelPtr l = union_side(q.left), r = union_side(q.right);
                auto out = empty_like(q);
                if (q.kind == QueryKind::UnionAll) {
                    out->rows = l->rows;
                    out->rows.insert(out->rows.end(), r->rows.begin(), r->rows.end());
                    return out;
                }
                RowSet seen;
                for (auto* side : {&l->rows, &r->rows})
                    for (auto& row : *side)
                        if (seen.insert(row).second) out->rows.push_back(row);
                return out;
            }
            case QueryKind::Intersect: {
                RelPtr l = eval(q.left), r = eval(q.right);
                RowSet right(r->rows.begin(), r->rows.end()), seen;
                auto out = empty_like(q);
                for (auto& row : l->rows)
                    if (right.count(row) && seen.insert(row).second) out->rows.push_back(row);
                return out;
            }
            case QueryKind::IntersectAll: {
                RelPtr l = eval(q.left), r = eval(q.right);
                std::unordered_map<Tuple, std::size_t, RowHash> counts;
                for (auto& row : r->rows) ++counts[row];
                auto out = empty_like(q);
                for (auto& row : l->rows) {
                    auto it = counts.find(row);
                    if (it != counts.end() && it->second > 0) {
                        --it->second;
                        out->rows.push_back(row);
                    }
                }
                return out;
            }
            case QueryKind::Aggregate: {
                RelPtr src = eval(q.src);
                auto out = empty_like(q);
                if (src->rows.empty()) return out;
                std::vector<const Tuple*> group;
                for (auto& r : src->rows) group.push_back(&r);
                Tuple row;
                for (auto& f : q.body->args) row.push_back(eval_group(*f, group, q.binder, env_));
                out->rows.push_back(std::move(row));
                return out;
            }
            case QueryKind::GroupBy: return group_by(q);
            case QueryKind::Fix: return fix(qp);
            case QueryKind::Join: return join(q);
        }
        throw Error("unknown query node");
    }

    RelPtr scan(const Query& q) {
        if (!q.name.empty() && q.name[0] == '#') {
            auto it = overlay_.find(q.name);
            if (it == overlay_.end()) throw Error("unbound recursive relation " + q.name);
            return it->second;
        }
        auto it = db_.find(q.name);
        if (it == db_.end()) throw MissingTable("table '" + q.name + "' is not in the database");
        if (!(it->second.schema == q.schema))
            throw SchemaError("table '" + q.name + "' has schema " + it->second.schema.describe() + ", query expects " +
                              q.schema.describe());
        return RelPtr(RelPtr{}, &it->second);
    }

    RelPtr filter(const Query& q) {
        RelPtr src = eval(q.src);
        auto out = empty_like(q);
        std::vector<ExprPtr> cs;
        conjuncts(q.pred, cs);
        std::optional<Probe> probe;
        std::size_t probeAt = 0;
        for (std::size_t i = 0; i < cs.size() && !probe; ++i) {
            auto vs = vars_of(*cs[i]);
            if (std::any_of(vs.begin(), vs.end(), [&](RelVarId v) { return v != q.binder; })) {
                probe = as_probe(cs[i], q.binder);
                probeAt = i;
            }
        }
        if (probe) {
            cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(probeAt));
            Value key = eval_expr(*probe->other, env_);
            auto& idx = index_for(src, probe->column);
            auto it = idx.find(key);
            if (it == idx.end()) return out;
            for (std::size_t i : it->second) {
                const Tuple& r = src->rows[i];
                env_.emplace_back(q.binder, &r);
                bool ok = std::all_of(cs.begin(), cs.end(), [&](const ExprPtr& c) { return holds(c); });
                env_.pop_back();
                if (ok) out->rows.push_back(r);
            }
            return out;
        }
        for (auto& r : src->rows) {
            env_.emplace_back(q.binder, &r);
            bool ok = holds(q.pred);
            env_.pop_back();
            if (ok) out->rows.push_back(r);
        }
        return out;
    }

    RelPtr group_by(const Query& q) {
        RelPtr src = eval(q.src);
        auto out = empty_like(q);
        std::unordered_map<Tuple, std::size_t, RowHash> groupOf;
        std::vector<std::vector<const Tuple*>> groups;
        for (auto& r : src->rows) {
            env_.emplace_back(q.binder, &r);
            Tuple key = eval_row(*q.keys, env_);
            env_.pop_back();
            auto [it, fresh] = groupOf.emplace(std::move(key), groups.size());
            if (fresh) groups.emplace_back();
            groups[it->second].push_back(&r);
        }
        for (auto& g : groups) {
            if (q.having && !std::get<bool>(eval_group(*q.having, g, q.binder, env_))) continue;
            Tuple row;
            for (auto& f : q.body->args) row.push_back(eval_group(*f, g, q.binder, env_));
            out->rows.push_back(std::move(row));
        }
        return out;
    }

    RelPtr join(const Query& q) {
        const std::size_t n = q.sources.size();
        std::vector<RelPtr> rels;
        for (auto& s : q.sources) rels.push_back(eval(s.src));
        auto out = empty_like(q);

        // Each conjunct is checked at the first level where all its join binders are bound.
        std::vector<std::vector<ExprPtr>> checks(n);
        std::vector<std::optional<Probe>> probes(n);
        if (q.pred) {
            std::vector<ExprPtr> cs;
            conjuncts(q.pred, cs);
            for (auto& c : cs) {
                auto vs = vars_of(*c);
                std::size_t level = 0;
                for (std::size_t k = 0; k < n; ++k)
                    if (contains(vs, q.sources[k].binder)) level = k;
                if (!probes[level]) {
                    auto p = as_probe(c, q.sources[level].binder);
                    if (p) {
                        auto ov = vars_of(*p->other);
                        bool later = false;
                        for (std::size_t k = level; k < n; ++k) later |= contains(ov, q.sources[k].binder);
                        if (!later) {
                            probes[level] = p;
                            continue;
                        }
                    }
                }
                checks[level].push_back(c);
            }
        }

        auto visit = [&](auto&& self, std::size_t k) -> void {
            if (k == n) {
                out->rows.push_back(q.body ? eval_row(*q.body, env_) : *env_.back().second);
                within_budget(*out);
                return;
            }
            const RelPtr& rel = rels[k];
            auto consider = [&](const Tuple& r) {
                env_.emplace_back(q.sources[k].binder, &r);
                if (std::all_of(checks[k].begin(), checks[k].end(), [&](const ExprPtr& c) { return holds(c); }))
                    self(self, k + 1);
                env_.pop_back();
            };
            if (probes[k]) {
                Value key = eval_expr(*probes[k]->other, env_);
                auto& idx = index_for(rel, probes[k]->column);
                auto it = idx.find(key);
                if (it == idx.end()) return;
                for (std::size_t i : it->second) consider(rel->rows[i]);
            } else {
                for (auto& r : rel->rows) consider(r);
            }
        };
        visit(visit, 0);
        return out;
    }

    //-------------------------------------------------------------------
    // Fixpoint

    struct Occurrence {
        std::size_t component;
        std::string name;
    };

    QueryPtr rewrite(const QueryPtr& q, FixId id, const std::string& prefix, std::vector<Occurrence>& occ) {
        if (q->kind == QueryKind::RecRef && q->dep.fix == id) {
            std::string name = prefix + std::to_string(occ.size());
            occ.push_back({static_cast<std::size_t>(q->dep.argIndex - 1), name});
            return make_table(name, q->schema);
        }
        bool reads = std::any_of(q->deps.begin(), q->deps.end(), [&](const DepRef& d) { return d.fix == id; });
        if (!reads) return q;
        return transform_children(q, [&](const QueryPtr& c) { return rewrite(c, id, prefix, occ); });
    }

    std::string component_name(FixId id, std::size_t i) const {
        auto it = names_.find({id, i});
        return it != names_.end() ? it->second : "recursive component " + std::to_string(i + 1);
    }

    RelPtr fix(const QueryPtr& fp) {
        const Query& f = *fp;
        const std::size_t n = f.arity();
        const int uid = ++fixCounter_;

        std::vector<QueryPtr> defs(n);
        std::vector<std::vector<Occurrence>> occ(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::string prefix = "#" + std::to_string(uid) + ":" + std::to_string(i) + ":";
            defs[i] = rewrite(f.defs[i], f.fixId, prefix, occ[i]);
            keepAlive_.push_back(defs[i]);
        }

        std::vector<bool> set(n);
        std::vector<RelPtr> base(n), acc(n), delta(n);
        std::vector<RowSet> seen(n);
        for (std::size_t i = 0; i < n; ++i) {
            set[i] = (cfg_.dedupe ? *cfg_.dedupe : f.defs[i]->category) == Category::Set;
            RelPtr b = eval(f.bases[i]);
            auto r = std::make_shared<Relation>();
            r->schema = f.bases[i]->schema;
            r->mode = set[i] ? Category::Set : Category::Bag;
            if (set[i]) {
                for (auto& row : b->rows)
                    if (seen[i].insert(row).second) r->rows.push_back(row);
            } else {
                r->rows = b->rows;
            }
            base[i] = acc[i] = delta[i] = r;
        }

        auto bind = [&](const std::vector<Occurrence>& os, std::optional<std::size_t> deltaAt, bool allDelta) {
            for (std::size_t k = 0; k < os.size(); ++k) {
                bool d = allDelta || (deltaAt && *deltaAt == k);
                overlay_[os[k].name] = d ? delta[os[k].component] : acc[os[k].component];
            }
        };
        auto unbind = [&](const std::vector<Occurrence>& os) {
            for (auto& o : os) overlay_.erase(o.name);
        };

        for (int iter = 1;; ++iter) {
            std::vector<std::vector<Tuple>> fresh(n);
            for (std::size_t i = 0; i < n; ++i) {
                auto run = [&] {
                    ++fixDepth_;
                    try {
                        RelPtr r = eval(defs[i]);
                        --fixDepth_;
                        fresh[i].insert(fresh[i].end(), r->rows.begin(), r->rows.end());
                    } catch (const BudgetExceeded& b) {
                        --fixDepth_;
                        deltaScan_ = nullptr;
                        unbind(occ[i]);
                        if (stats_) stats_->fixes.push_back({component_name(f.fixId, i), iter});
                        throw NontermError(component_name(f.fixId, i), iter,
                                           "after " + std::to_string(iter) + " iterations: an intermediate result of " +
                                               std::to_string(b.rows) + " rows exceeds the row budget of " +
                                               std::to_string(cfg_.rowBudget));
                    } catch (...) {
                        --fixDepth_;
                        throw;
                    }
                };
                if (cfg_.mode == EvalMode::Naive) {
                    bind(occ[i], std::nullopt, false);
                    run();
                } else if (occ[i].empty()) {
                    if (iter == 1) run();
                } else if (cfg_.mode == EvalMode::DeltaOnly) {
                    bind(occ[i], std::nullopt, true);
                    run();
                } else {
                    for (std::size_t k = 0; k < occ[i].size(); ++k) {
                        bind(occ[i], k, false);
                        deltaScan_ = &occ[i][k].name;
                        run();
                        deltaScan_ = nullptr;
                    }
                }
                unbind(occ[i]);
            }

            bool progress = false;
            std::size_t firstActive = n, total = 0;
            for (std::size_t i = 0; i < n; ++i) {
                auto next = std::make_shared<Relation>(*acc[i]);
                auto d = std::make_shared<Relation>();
                d->schema = acc[i]->schema;
                d->mode = acc[i]->mode;
                if (set[i]) {
                    for (auto& row : fresh[i])
                        if (seen[i].insert(row).second) d->rows.push_back(row);
                    next->rows.insert(next->rows.end(), d->rows.begin(), d->rows.end());
                } else if (cfg_.mode == EvalMode::Naive) {
                    next->rows = base[i]->rows;
                    next->rows.insert(next->rows.end(), fresh[i].begin(), fresh[i].end());
                    if (!same_multiset(*next, *acc[i])) d->rows = fresh[i];
                } else {
                    d->rows = std::move(fresh[i]);
                    next->rows.insert(next->rows.end(), d->rows.begin(), d->rows.end());
                }
                if (!d->rows.empty()) {
                    progress = true;
                    if (firstActive == n) firstActive = i;
                }
                total += next->rows.size();
                acc[i] = next;
                delta[i] = d;
            }
            drop_unused_indexes();

            if (!progress) {
                if (stats_) stats_->fixes.push_back({component_name(f.fixId, 0), iter});
                return acc[f.out];
            }
            if (total > cfg_.rowBudget) {
                if (stats_) stats_->fixes.push_back({component_name(f.fixId, firstActive), iter});
                throw NontermError(component_name(f.fixId, firstActive), iter,
                                   "after " + std::to_string(iter) + " iterations: " + std::to_string(total) +
                                       " rows exceed the row budget of " + std::to_string(cfg_.rowBudget));
            }
            if (iter >= cfg_.iterationCap) {
                if (stats_) stats_->fixes.push_back({component_name(f.fixId, firstActive), iter});
                throw NontermError(component_name(f.fixId, firstActive), iter,
                                   "within the iteration cap of " + std::to_string(cfg_.iterationCap));
            }
        }
    }
};

}  // namespace

Value eval_expr(const Expr& e, const Env& env) {
    switch (e.kind) {
        case ExprKind::ColumnRef: return lookup(env, e.var)[e.columnIndex];
        case ExprKind::Lit: return e.value;
        case ExprKind::AggApply: throw Error("aggregate evaluated outside aggregate or groupBy");
        case ExprKind::RowCtor: throw Error("row constructor evaluated as a value");
        case ExprKind::Apply: break;
    }
    Op op = opcode(*e.op);
    switch (op) {
        case Op::And: return std::get<bool>(eval_expr(*e.args[0], env)) && std::get<bool>(eval_expr(*e.args[1], env));
        case Op::Or: return std::get<bool>(eval_expr(*e.args[0], env)) || std::get<bool>(eval_expr(*e.args[1], env));
        case Op::Not: return !std::get<bool>(eval_expr(*e.args[0], env));
        default: return apply_binary(op, eval_expr(*e.args[0], env), eval_expr(*e.args[1], env));
    }
}

Relation eval(const QueryPtr& q, const Database& db, const EvalConfig& cfg, EvalStats* stats) {
    Evaluator ev(db, cfg, stats, component_names(q));
    RelPtr r = ev.eval(q);
    Relation out = *r;
    out.schema = q->schema;
    return out;
}

//---------------------------------------------------------------------------
// Comparison
//---------------------------------------------------------------------------

std::vector<Tuple> canonical_rows(const Relation& r) {
    std::vector<Tuple> rows = r.rows;
    std::sort(rows.begin(), rows.end());
    return rows;
}

std::vector<Tuple> distinct_rows(const Relation& r) {
    std::vector<Tuple> rows = canonical_rows(r);
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
}

bool same_multiset(const Relation& a, const Relation& b) {
    return a.rows.size() == b.rows.size() && canonical_rows(a) == canonical_rows(b);
}

bool same_set(const Relation& a, const Relation& b) { return distinct_rows(a) == distinct_rows(b); }

bool subset_of(const Relation& a, const Relation& b) {
    auto x = distinct_rows(a), y = distinct_rows(b);
    return std::includes(y.begin(), y.end(), x.begin(), x.end());
}

}  // namespace rql
