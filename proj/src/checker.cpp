#include "rql/checker.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>

namespace rql {

std::string_view to_string(Risk r) {
    switch (r) {
        case Risk::DbError: return "db-error";
        case Risk::IncompleteResults: return "incomplete-results";
        case Risk::Nontermination: return "nontermination";
    }
    return "?";
}

std::string_view to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

Risk risk_of(std::string_view code) {
    if (code == "MONOTONE" || code == "RANGE") return Risk::DbError;
    if (code == "AFFINE" || code == "RELEVANT" || code == "MUTUAL") return Risk::IncompleteResults;
    return Risk::Nontermination;  // SET, CONSTRUCTOR, DIALECT
}

//---------------------------------------------------------------------------
// Profiles
//---------------------------------------------------------------------------

RestrictionProfile profile_full() {
    RestrictionProfile p;
    p.name = "full";
    return p;
}

RestrictionProfile profile_default_no_cf() {
    RestrictionProfile p = profile_full();
    p.name = "default-no-cf";
    p.requireConstructorFree = false;
    return p;
}

RestrictionProfile profile_sql99() {
    RestrictionProfile p = profile_default_no_cf();
    p.name = "sql99";
    p.allowMutualRecursion = true;
    return p;
}

RestrictionProfile profile_none() {
    RestrictionProfile p;
    p.name = "none";
    p.requireMonotone = p.requireLinear = p.requireSetSemantics = p.requireConstructorFree = false;
    p.allowMutualRecursion = true;
    p.allowNonLinear = true;
    return p;
}

RestrictionProfile profile_for(Dialect d) {
    const DialectFeatures& f = features(d);
    RestrictionProfile p;
    p.name = std::string(to_string(d));
    p.dialect = d;
    p.requireMonotone = true;
    p.requireLinear = f.nonlinear != Support::Yes;
    p.allowNonLinear = !p.requireLinear;
    p.requireSetSemantics = false;
    p.requireConstructorFree = false;
    p.allowMutualRecursion = f.mutual != Support::No;
    return p;
}

std::vector<std::string> profile_names() {
    std::vector<std::string> names{"full", "sql99", "default-no-cf", "none"};
    for (Dialect d : all_dialects()) names.emplace_back(to_string(d));
    return names;
}

RestrictionProfile profile_by_name(std::string_view name) {
    if (name == "full") return profile_full();
    if (name == "sql99") return profile_sql99();
    if (name == "default-no-cf") return profile_default_no_cf();
    if (name == "none") return profile_none();
    if (auto d = try_parse_dialect(name)) return profile_for(*d);
    throw UnknownProfile("unknown profile '" + std::string(name) + "'");
}

void validate_profile(const RestrictionProfile& p) {
    if (p.requireLinear && p.allowNonLinear)
        throw Error("profile '" + p.name + "' both requires linearity and allows non-linear recursion");
}

//---------------------------------------------------------------------------
// Walking helpers
//---------------------------------------------------------------------------

namespace {

using Visit = std::function<void(const Query&, const std::string&, std::size_t)>;

void walk(const Query& q, const std::string& path, std::size_t& counter, const Visit& f) {
    f(q, path, counter++);
    for (auto& [step, child] : children_of(q)) walk(*child, path + step, counter, f);
}

std::size_t subtree_size(const Query& q) {
    std::size_t n = 1;
    for (auto& [step, child] : children_of(q)) n += subtree_size(*child);
    return n;
}

bool reads_fix(const Query& q, FixId id) {
    return std::any_of(q.deps.begin(), q.deps.end(), [&](const DepRef& d) { return d.fix == id; });
}

std::string def_path(const std::string& fixPath, std::size_t i) {
    return fixPath + ".defs[" + std::to_string(i) + "]";
}

/// Pre-order index of the first node of defs[i].
std::vector<std::size_t> def_orders(const Query& fix, std::size_t order) {
    std::size_t c = order + 1;
    for (auto& b : fix.bases) c += subtree_size(*b);
    std::vector<std::size_t> out;
    for (auto& d : fix.defs) {
        out.push_back(c);
        c += subtree_size(*d);
    }
    return out;
}

std::string component_label(const Query& fix, std::size_t i) {
    if (i < fix.names.size() && !fix.names[i].empty()) return "'" + fix.names[i] + "'";
    return "component " + std::to_string(i + 1);
}

Diagnostic diag(std::string code, std::string sub, std::string path, std::size_t order, std::string msg) {
    Diagnostic d;
    d.risk = risk_of(code);
    d.code = std::move(code);
    d.subCode = std::move(sub);
    d.path = std::move(path);
    d.order = order;
    d.message = std::move(msg);
    return d;
}

void collect_ctor_ops(const Expr& e, std::set<std::string>& out) {
    if ((e.kind == ExprKind::Apply || e.kind == ExprKind::AggApply) && e.op->isConstructor) out.insert(e.op->sqlToken);
    for (auto& a : e.args) collect_ctor_ops(*a, out);
}

}  // namespace

//---------------------------------------------------------------------------
// Per-fix predicates
//---------------------------------------------------------------------------

std::vector<Diagnostic> check_range(const Query& fix, const std::string& path, std::size_t order) {
    std::vector<Diagnostic> out;
    auto orders = def_orders(fix, order);
    for (std::size_t i = 0; i < fix.defs.size() && i < fix.bases.size(); ++i) {
        if (!(fix.defs[i]->schema == fix.bases[i]->schema))
            out.push_back(diag("RANGE", "", def_path(path, i), orders[i],
                               "recursive case of " + component_label(fix, i) + " has schema " +
                                   fix.defs[i]->schema.describe() + " but its base has " +
                                   fix.bases[i]->schema.describe()));
    }
    return out;
}

std::vector<Diagnostic> check_monotone(const Query& fix, const std::string& path, std::size_t order) {
    std::vector<Diagnostic> out;
    auto orders = def_orders(fix, order);
    for (std::size_t i = 0; i < fix.defs.size(); ++i) {
        std::size_t c = orders[i];
        walk(*fix.defs[i], def_path(path, i), c, [&](const Query& n, const std::string& p, std::size_t o) {
            switch (n.kind) {
                case QueryKind::Aggregate:
                case QueryKind::GroupBy:
                    if (reads_fix(*n.src, fix.fixId))
                        out.push_back(diag("MONOTONE", "aggregation", p, o,
                                           std::string(to_string(n.kind)) + " over the recursive relation inside the "
                                           "definition of " + component_label(fix, i)));
                    break;
                case QueryKind::Map:
                case QueryKind::Filter: {
                    const ExprPtr& e = n.kind == QueryKind::Map ? n.body : n.pred;
                    if (reads_fix(*n.src, fix.fixId) && e->shape == Shape::Scalar)
                        out.push_back(diag("MONOTONE", "scalar-body", p, o,
                                           std::string(to_string(n.kind)) + " with an aggregated body over the "
                                           "recursive relation in " + component_label(fix, i)));
                    break;
                }
                case QueryKind::Join: {
                    bool scalar = (n.body && n.body->shape == Shape::Scalar) || (n.pred && n.pred->shape == Shape::Scalar);
                    if (scalar && reads_fix(n, fix.fixId))
                        out.push_back(diag("MONOTONE", "scalar-body", p, o,
                                           "join with an aggregated body over the recursive relation in " +
                                               component_label(fix, i)));
                    break;
                }
                default: break;
            }
        });
    }
    return out;
}

std::vector<Diagnostic> check_linear(const Query& fix, const std::string& path, std::size_t order) {
    std::vector<Diagnostic> out;
    auto orders = def_orders(fix, order);
    std::set<int> used;
    for (std::size_t i = 0; i < fix.defs.size(); ++i) {
        const DepMultiset& d = fix.defs[i]->deps;  // sorted
        std::set<int> dup;
        std::set<FixId> foreign;
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (d[k].fix != fix.fixId) {
                foreign.insert(d[k].fix);
                continue;
            }
            used.insert(d[k].argIndex);
            if (k > 0 && d[k] == d[k - 1]) dup.insert(d[k].argIndex);
        }
        for (int j : dup)
            out.push_back(diag("AFFINE", "duplicate", def_path(path, i), orders[i],
                               "definition of " + component_label(fix, i) + " reads " + component_label(fix, j - 1) +
                                   " more than once"));
        if (!foreign.empty())
            out.push_back(diag("AFFINE", "foreign-fix", def_path(path, i), orders[i],
                               "definition of " + component_label(fix, i) +
                                   " returns rows derived from an enclosing fixpoint"));
    }
    for (std::size_t j = 1; j <= fix.defs.size(); ++j)
        if (!used.count(static_cast<int>(j)))
            out.push_back(diag("RELEVANT", "unused", path, order,
                               component_label(fix, j - 1) + " is never read by any recursive definition"));
    return out;
}

std::vector<Diagnostic> check_set_semantics(const Query& fix, const std::string& path, std::size_t order) {
    std::vector<Diagnostic> out;
    auto orders = def_orders(fix, order);
    for (std::size_t i = 0; i < fix.defs.size(); ++i)
        if (fix.defs[i]->category == Category::Bag)
            out.push_back(diag("SET", "", def_path(path, i), orders[i],
                               "recursive case of " + component_label(fix, i) + " has bag semantics"));
    return out;
}

std::vector<Diagnostic> check_constructor_free(const Query& fix, const std::string& path, std::size_t order) {
    std::vector<Diagnostic> out;
    auto orders = def_orders(fix, order);
    for (std::size_t i = 0; i < fix.defs.size(); ++i) {
        std::size_t counter = orders[i];
        // inScope: the node sits under a row variable bound to recursive rows.
        std::function<void(const Query&, const std::string&, bool)> go = [&](const Query& n, const std::string& p,
                                                                           bool inScope) {
            std::size_t o = counter++;
            bool active = inScope || reads_fix(n, fix.fixId);
            if (n.kind == QueryKind::Map || n.kind == QueryKind::Filter || n.kind == QueryKind::Join) {
                if (active) {
                    for (auto& [step, e] : exprs_of(n)) {
                        if (!e->usesConstructor) continue;
                        std::set<std::string> ops;
                        collect_ctor_ops(*e, ops);
                        std::string list;
                        for (auto& s : ops) list += (list.empty() ? "" : ", ") + s;
                        out.push_back(diag("CONSTRUCTOR", "", p + step, o,
                                           "value-constructing operator (" + list + ") in the recursive case of " +
                                               component_label(fix, i)));
                    }
                }
            }
            if (n.kind == QueryKind::FlatMap) {
                go(*n.src, p + ".src", inScope);
                go(*n.inner, p + ".inner", inScope || reads_fix(*n.src, fix.fixId));
                return;
            }
            for (auto& [step, child] : children_of(n)) go(*child, p + step, inScope);
        };
        go(*fix.defs[i], def_path(path, i), false);
    }
    return out;
}

//---------------------------------------------------------------------------
// Precedence graph
//---------------------------------------------------------------------------

std::map<ComponentKey, std::string> component_names(const QueryPtr& q) {
    std::map<ComponentKey, std::string> names;
    std::set<std::string> taken;
    std::function<void(const Query&)> tables = [&](const Query& n) {
        if (n.kind == QueryKind::TableScan) taken.insert(n.name);
        for (auto& [s, c] : children_of(n)) tables(*c);
    };
    tables(*q);
    int unnamed = 0;
    std::function<void(const Query&)> go = [&](const Query& n) {
        if (n.kind == QueryKind::Fix && !names.count({n.fixId, 0})) {
            for (std::size_t i = 0; i < n.arity(); ++i) {
                std::string base = i < n.names.size() && !n.names[i].empty() ? n.names[i]
                                                                              : "recursive_" + std::to_string(++unnamed);
                std::string name = base;
                for (int k = 2; taken.count(name); ++k) name = base + "_" + std::to_string(k);
                taken.insert(name);
                names[{n.fixId, i}] = name;
            }
        }
        for (auto& [s, c] : children_of(n)) go(*c);
    };
    go(*q);
    return names;
}

std::vector<std::vector<std::size_t>> strongly_connected_components(
    const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    const std::size_t undefined = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, undefined), low(n, 0);
    std::vector<bool> onStack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> out;
    std::size_t next = 0;

    std::function<void(std::size_t)> strong = [&](std::size_t v) {
        index[v] = low[v] = next++;
        stack.push_back(v);
        onStack[v] = true;
        for (std::size_t w : adj[v]) {
            if (index[w] == undefined) {
                strong(w);
                low[v] = std::min(low[v], low[w]);
            } else if (onStack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::size_t> comp;
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                onStack[w] = false;
                comp.push_back(w);
            } while (w != v);
            std::sort(comp.begin(), comp.end());
            out.push_back(std::move(comp));
        }
    };
    for (std::size_t v = 0; v < n; ++v)
        if (index[v] == undefined) strong(v);
    return out;
}

std::optional<std::size_t> PrecedenceGraph::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i] == name) return i;
    return std::nullopt;
}

bool PrecedenceGraph::has_edge(std::size_t u, std::size_t v) const {
    return std::find(edges.begin(), edges.end(), std::make_pair(u, v)) != edges.end();
}

bool PrecedenceGraph::has_mutual_recursion() const {
    return std::any_of(sccs.begin(), sccs.end(), [](const auto& c) { return c.size() >= 2; });
}

PrecedenceGraph build_precedence_graph(const QueryPtr& q) {
    PrecedenceGraph g;
    auto names = component_names(q);
    std::map<std::string, std::size_t> tableNode;
    auto table_node = [&](const std::string& name) {
        auto it = tableNode.find(name);
        if (it != tableNode.end()) return it->second;
        g.nodes.push_back(name);
        return tableNode[name] = g.nodes.size() - 1;
    };
    auto comp_node = [&](ComponentKey k) {
        auto it = g.componentNode.find(k);
        if (it != g.componentNode.end()) return it->second;
        g.nodes.push_back(names.at(k));
        return g.componentNode[k] = g.nodes.size() - 1;
    };
    auto add_edge = [&](std::size_t u, std::size_t v) {
        if (!g.has_edge(u, v)) g.edges.emplace_back(u, v);
    };

    // Relations read by a subtree, not descending into nested fixes (they are
    // read through their result component).
    std::function<void(const Query&, std::vector<std::size_t>&)> reads = [&](const Query& n,
                                                                          std::vector<std::size_t>& acc) {
        switch (n.kind) {
            case QueryKind::TableScan: acc.push_back(table_node(n.name)); return;
            case QueryKind::RecRef: acc.push_back(comp_node({n.dep.fix, static_cast<std::size_t>(n.dep.argIndex - 1)})); return;
            case QueryKind::Fix: acc.push_back(comp_node({n.fixId, n.out})); return;
            default:
                for (auto& [s, c] : children_of(n)) reads(*c, acc);
        }
    };

    std::set<FixId> seen;
    std::function<void(const Query&)> visit = [&](const Query& n) {
        if (n.kind == QueryKind::TableScan) table_node(n.name);
        if (n.kind == QueryKind::Fix && seen.insert(n.fixId).second) {
            for (std::size_t i = 0; i < n.arity(); ++i) comp_node({n.fixId, i});
            for (std::size_t i = 0; i < n.arity(); ++i) {
                std::vector<std::size_t> acc;
                reads(*n.bases[i], acc);
                reads(*n.defs[i], acc);
                std::size_t v = comp_node({n.fixId, i});
                for (std::size_t u : acc) add_edge(u, v);
            }
        }
        for (auto& [s, c] : children_of(n)) visit(*c);
    };
    visit(*q);

    std::vector<std::vector<std::size_t>> adj(g.nodes.size());
    for (auto& [u, v] : g.edges) adj[u].push_back(v);
    g.sccs = strongly_connected_components(adj);
    return g;
}

//---------------------------------------------------------------------------
// Whole-query checks
//---------------------------------------------------------------------------

namespace {

struct FixSite {
    const Query* node;
    std::string path;
    std::size_t order;
};

std::vector<FixSite> fix_sites(const QueryPtr& q) {
    std::vector<FixSite> out;
    std::size_t c = 0;
    walk(*q, "$", c, [&](const Query& n, const std::string& p, std::size_t o) {
        if (n.kind == QueryKind::Fix) out.push_back({&n, p, o});
    });
    return out;
}

std::vector<Diagnostic> mutual_diagnostics(const QueryPtr& q, std::optional<Severity> severity,
                                           const std::string& why) {
    std::vector<Diagnostic> out;
    if (!severity) return out;
    PrecedenceGraph g = build_precedence_graph(q);
    auto sites = fix_sites(q);
    for (auto& scc : g.sccs) {
        if (scc.size() < 2) continue;
        const FixSite* owner = nullptr;
        for (auto& s : sites)
            for (std::size_t i = 0; i < s.node->arity() && !owner; ++i) {
                auto it = g.componentNode.find({s.node->fixId, i});
                if (it != g.componentNode.end() && std::find(scc.begin(), scc.end(), it->second) != scc.end())
                    owner = &s;
            }
        if (!owner) continue;
        std::string members;
        for (std::size_t v : scc) members += (members.empty() ? "" : ", ") + g.nodes[v];
        Diagnostic d = diag("MUTUAL", "", owner->path, owner->order, "mutually recursive relations {" + members + "}" + why);
        d.severity = *severity;
        out.push_back(std::move(d));
    }
    return out;
}

std::optional<Severity> severity_for(Support s) {
    if (s == Support::Yes) return std::nullopt;
    return s == Support::Syntactic ? Severity::Warning : Severity::Error;
}

void sort_diagnostics(std::vector<Diagnostic>& ds) {
    std::stable_sort(ds.begin(), ds.end(), [](const Diagnostic& a, const Diagnostic& b) {
        return std::tie(a.order, a.code, a.subCode, a.path, a.message) <
               std::tie(b.order, b.code, b.subCode, b.path, b.message);
    });
}

}  // namespace

std::vector<Diagnostic> check_mutual(const QueryPtr& q, const RestrictionProfile& profile) {
    if (profile.allowMutualRecursion) return {};
    return mutual_diagnostics(q, Severity::Error, "");
}

std::vector<Diagnostic> check_dialect(const QueryPtr& q, const RestrictionProfile& profile) {
    if (!profile.dialect) throw UnknownDialect("profile '" + profile.name + "' has no dialect");
    Dialect d = *profile.dialect;
    const DialectFeatures& f = features(d);
    std::string dn(to_string(d));
    std::vector<Diagnostic> out =
        mutual_diagnostics(q, severity_for(f.mutual),
                           f.mutual == Support::Syntactic ? " are accepted by " + dn + " but results may be incomplete"
                                                          : " are not supported by " + dn);
    if (!f.unionDistinctInRecursion) {
        for (auto& s : fix_sites(q)) {
            for (std::size_t i = 0; i < s.node->arity(); ++i) {
                if (s.node->defs[i]->category != Category::Set) continue;
                out.push_back(diag("DIALECT", "union-distinct", s.path, s.order,
                                   dn + " has no UNION [distinct] between base and recursive case; " +
                                       component_label(*s.node, i) + " needs set semantics"));
                break;
            }
        }
    }
    return out;
}

CheckReport check_all(const QueryPtr& q, const RestrictionProfile& profile) {
    validate_profile(profile);
    CheckReport report;
    report.profile = profile.name;
    auto& ds = report.diagnostics;
    auto append = [&](std::vector<Diagnostic> v) { ds.insert(ds.end(), v.begin(), v.end()); };

    std::optional<Support> nonlinear;
    if (profile.dialect) nonlinear = features(*profile.dialect).nonlinear;

    for (auto& s : fix_sites(q)) {
        const Query& fx = *s.node;
        append(check_range(fx, s.path, s.order));
        if (profile.requireMonotone) append(check_monotone(fx, s.path, s.order));
        if (profile.requireLinear) {
            auto lin = check_linear(fx, s.path, s.order);
            for (auto& d : lin)
                if (d.code == "AFFINE" && d.subCode == "duplicate" && nonlinear == Support::Syntactic)
                    d.severity = Severity::Warning;
            append(std::move(lin));
        }
        if (profile.requireSetSemantics) append(check_set_semantics(fx, s.path, s.order));
        if (profile.requireConstructorFree) append(check_constructor_free(fx, s.path, s.order));
    }
    if (profile.dialect)
        append(check_dialect(q, profile));
    else
        append(check_mutual(q, profile));

    sort_diagnostics(ds);
    report.pass = std::none_of(ds.begin(), ds.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
    return report;
}

bool CheckReport::has(std::string_view code) const {
    return std::any_of(diagnostics.begin(), diagnostics.end(), [&](const Diagnostic& d) { return d.code == code; });
}

std::string CheckReport::to_json() const {
    nlohmann::ordered_json j;
    j["pass"] = pass;
    j["profile"] = profile;
    auto arr = nlohmann::ordered_json::array();
    for (auto& d : diagnostics) {
        nlohmann::ordered_json e;
        e["code"] = d.code;
        if (!d.subCode.empty()) e["subCode"] = d.subCode;
        e["risk"] = to_string(d.risk);
        e["severity"] = to_string(d.severity);
        e["path"] = d.path;
        e["message"] = d.message;
        arr.push_back(std::move(e));
    }
    j["diagnostics"] = std::move(arr);
    return j.dump(2) + "\n";
}

std::set<std::string> violated_properties(const CheckReport& report) {
    std::set<std::string> out;
    for (auto& d : report.diagnostics) {
        if (d.severity != Severity::Error) continue;
        if (d.code == "AFFINE" || d.code == "RELEVANT") out.insert("linear");
        else if (d.code == "MONOTONE") out.insert("monotone");
        else if (d.code == "SET") out.insert("set");
        else if (d.code == "CONSTRUCTOR") out.insert("cf");
        else if (d.code == "MUTUAL") out.insert("mutual");
        else if (d.code == "RANGE") out.insert("range");
        else if (d.code == "DIALECT") out.insert("dialect");
    }
    return out;
}

}  // namespace rql
