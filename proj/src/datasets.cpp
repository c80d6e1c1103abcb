#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "rql/corpus.hpp"

namespace rql {

std::string_view to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::ChainGraph: return "chaingraph";
        case DatasetKind::CycleGraph: return "cyclegraph";
        case DatasetKind::RandomDag: return "randomdag";
        case DatasetKind::WeightedGraph: return "weightedgraph";
        case DatasetKind::BomHierarchy: return "bomhierarchy";
        case DatasetKind::OwnershipGraph: return "ownershipgraph";
        case DatasetKind::AssignGraph: return "assigngraph";
        case DatasetKind::SocialGraph: return "socialgraph";
    }
    return "?";
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view s) {
    for (auto k : {DatasetKind::ChainGraph, DatasetKind::CycleGraph, DatasetKind::RandomDag,
                   DatasetKind::WeightedGraph, DatasetKind::BomHierarchy, DatasetKind::OwnershipGraph,
                   DatasetKind::AssignGraph, DatasetKind::SocialGraph})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

std::string DatasetSpec::label() const {
    return std::string(to_string(kind)) + "-" + std::to_string(size) + "-s" + std::to_string(seed) +
           (cyclic ? "-cyclic" : "");
}

namespace {

using I = std::int64_t;
constexpr ColumnType Int = ColumnType::Int;
constexpr ColumnType Text = ColumnType::Text;

Relation relation(std::vector<Column> cols) {
    Relation r;
    r.schema = make_schema(std::move(cols));
    return r;
}

/// Raw modulo keeps sequences identical across standard libraries.
struct Rng {
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    std::mt19937_64 gen;
    I below(I n) { return n <= 0 ? 0 : static_cast<I>(gen() % static_cast<std::uint64_t>(n)); }
    I between(I lo, I hi) { return lo + below(hi - lo + 1); }
};

/// Spanning tree rooted at 0 plus random forward edges; `extra` counts the forward edges.
std::vector<std::pair<I, I>> dag_edges(Rng& rng, I nodes, I total) {
    std::vector<std::pair<I, I>> out;
    std::set<std::pair<I, I>> seen;
    for (I i = 1; i < nodes; ++i) {
        std::pair<I, I> e{rng.below(i), i};
        out.push_back(e);
        seen.insert(e);
    }
    for (int attempts = 0; static_cast<I>(out.size()) < total && attempts < 50 * total; ++attempts) {
        I a = rng.below(nodes), b = rng.below(nodes);
        if (a == b) continue;
        std::pair<I, I> e{std::min(a, b), std::max(a, b)};
        if (seen.insert(e).second) out.push_back(e);
    }
    return out;
}

void add_graph_tables(Database& db, I nodes, const std::vector<std::pair<I, I>>& edges) {
    Relation edge = relation({{"src", Int}, {"dst", Int}});
    Relation edges2 = relation({{"x", Int}, {"y", Int}});
    Relation node = relation({{"id", Int}, {"name", Text}});
    for (auto& [a, b] : edges) {
        edge.rows.push_back({a, b});
        edges2.rows.push_back({a, b});
    }
    for (I i = 0; i < nodes; ++i) node.rows.push_back({i, "n" + std::to_string(i)});
    db["edge"] = std::move(edge);
    db["edges"] = std::move(edges2);
    db["node"] = std::move(node);
}

Database chain(const DatasetSpec& s) {
    I n = s.size;
    std::vector<std::pair<I, I>> e;
    for (I i = 0; i < n; ++i) e.emplace_back(i, i + 1);
    if (s.cyclic) e.emplace_back(n, 0);
    Database db;
    add_graph_tables(db, n + 1, e);
    return db;
}

Database cycle(const DatasetSpec& s) {
    I n = std::max(1, s.size);
    std::vector<std::pair<I, I>> e;
    for (I i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    Database db;
    add_graph_tables(db, n, e);
    return db;
}

Database random_dag(const DatasetSpec& s) {
    Rng rng(s.seed);
    I nodes = s.size / 2 + 2;
    auto e = dag_edges(rng, nodes, s.size);
    if (s.cyclic) {
        auto [a, b] = e[static_cast<std::size_t>(rng.below(static_cast<I>(e.size())))];
        e.emplace_back(b, a);
    }
    Database db;
    add_graph_tables(db, nodes, e);
    return db;
}

Database weighted(const DatasetSpec& s) {
    Rng rng(s.seed);
    I nodes = s.size / 2 + 2;
    auto e = dag_edges(rng, nodes, s.size);
    if (s.cyclic) {
        auto [a, b] = e[static_cast<std::size_t>(rng.below(static_cast<I>(e.size())))];
        e.emplace_back(b, a);
    }
    Relation edge = relation({{"src", Int}, {"dst", Int}, {"cst", Int}});
    for (auto& [a, b] : e) edge.rows.push_back({a, b, rng.between(1, 9)});
    Relation base = relation({{"dst", Int}, {"cst", Int}});
    base.rows.push_back({I{0}, I{0}});
    Database db;
    db["edge"] = std::move(edge);
    db["base"] = std::move(base);
    return db;
}

Database bom(const DatasetSpec& s) {
    Rng rng(s.seed);
    I parts = std::max(2, s.size);
    auto name = [](I i) { return "p" + std::to_string(i); };
    Relation sub = relation({{"part", Text}, {"sub", Text}});
    Relation basic = relation({{"part", Text}, {"days", Int}});
    std::vector<bool> hasSub(static_cast<std::size_t>(parts), false);
    for (I i = 1; i < parts; ++i) {
        I parent = rng.below(i);
        sub.rows.push_back({name(parent), name(i)});
        hasSub[static_cast<std::size_t>(parent)] = true;
    }
    I lastLeaf = 0;
    for (I i = 0; i < parts; ++i)
        if (!hasSub[static_cast<std::size_t>(i)]) {
            basic.rows.push_back({name(i), rng.between(1, 30)});
            lastLeaf = i;
        }
    if (s.cyclic) sub.rows.push_back({name(lastLeaf), name(0)});
    Database db;
    db["SubParts"] = std::move(sub);
    db["BasicParts"] = std::move(basic);
    return db;
}

Database ownership(const DatasetSpec& s) {
    Rng rng(s.seed);
    I n = std::max(3, s.size);
    Relation company = relation({{"id", Int}, {"total", Int}});
    Relation owns = relation({{"by", Int}, {"of", Int}, {"amt", Int}});
    for (I i = 0; i < n; ++i) company.rows.push_back({i, I{100}});
    std::set<std::pair<I, I>> seen;
    for (I i = 1; i < n; ++i) {
        I left = 100;
        I owners = rng.between(1, 3);
        for (I k = 0; k < owners && left > 0; ++k) {
            I by = rng.below(i);
            if (!seen.insert({by, i}).second) continue;
            I amt = std::min(left, rng.between(10, 60));
            owns.rows.push_back({by, i, amt});
            left -= amt;
        }
    }
    if (s.cyclic) owns.rows.push_back({n - 1, I{0}, I{30}});
    Database db;
    db["company"] = std::move(company);
    db["owns"] = std::move(owns);
    return db;
}

Database assign_graph(const DatasetSpec& s) {
    Rng rng(s.seed);
    I n = std::max(4, s.size);
    I half = n / 2;
    I objects = std::max<I>(2, n / 3);
    auto object = [&](I k) { return n + k; };
    auto pairs = [&](Relation& r, I count, auto&& pick) {
        std::set<Tuple> seen;
        for (int attempts = 0; static_cast<I>(r.rows.size()) < count && attempts < 100 * count; ++attempts) {
            Tuple t = pick();
            if (t.empty()) continue;
            if (seen.insert(t).second) r.rows.push_back(t);
        }
    };
    auto forward = [&]() -> Tuple {
        I a = rng.below(n), b = rng.below(n);
        if (a == b) return {};
        return {std::max(a, b), std::min(a, b)};  // (x, y): y flows into x, y < x
    };

    Relation addressOf = relation({{"x", Int}, {"y", Int}});
    Relation assign = relation({{"x", Int}, {"y", Int}});
    Relation load = relation({{"x", Int}, {"y", Int}});
    Relation store = relation({{"x", Int}, {"y", Int}});
    Relation deref = relation({{"x", Int}, {"y", Int}});
    Relation newRel = relation({{"v", Int}, {"o", Int}});
    Relation fload = relation({{"dst", Int}, {"base", Int}, {"fld", Int}});
    Relation fstore = relation({{"base", Int}, {"fld", Int}, {"src", Int}});
    Relation jump = relation({{"src", Int}, {"dst", Int}});
    Relation read = relation({{"instr", Int}, {"var", Int}});
    Relation write = relation({{"instr", Int}, {"var", Int}});

    pairs(addressOf, n / 2 + 1, [&]() -> Tuple { return {rng.below(n), object(rng.below(objects))}; });
    pairs(newRel, n / 2 + 1, [&]() -> Tuple { return {rng.below(n), object(rng.below(objects))}; });
    pairs(assign, n, forward);
    pairs(load, n / 3 + 1, forward);
    pairs(store, n / 3 + 1, forward);
    pairs(deref, n / 2 + 1, [&]() -> Tuple { return {rng.below(n), rng.below(n)}; });
    // Stores read only low variables and loads write only high ones, so heap
    // flow never feeds back into itself on acyclic data.
    pairs(fstore, n / 3 + 1, [&]() -> Tuple { return {rng.below(half), rng.below(2), rng.below(half)}; });
    pairs(fload, n / 3 + 1, [&]() -> Tuple {
        I dst = half + rng.below(n - half);
        return {dst, rng.below(dst), rng.below(2)};
    });
    pairs(jump, n, forward);
    pairs(read, n / 2 + 1, [&]() -> Tuple { return {rng.below(n), rng.below(3)}; });
    pairs(write, n / 2 + 1, [&]() -> Tuple { return {rng.below(n), rng.below(3)}; });
    if (s.cyclic) {
        Tuple back = assign.rows.front();
        assign.rows.push_back({back[1], back[0]});
        Tuple j = jump.rows.front();
        jump.rows.push_back({j[1], j[0]});
    }

    // Lambda terms: ids [0, L) are abstractions, vrefs and applications follow.
    Relation abs = relation({{"id", Int}, {"var", Int}, {"body", Int}});
    Relation app = relation({{"id", Int}, {"fn", Int}, {"arg", Int}});
    Relation vref = relation({{"id", Int}, {"var", Int}});
    I lambdas = std::max<I>(2, n / 3);
    I next = lambdas;
    for (I l = 0; l < lambdas; ++l) {
        I body;
        if (l == 0 || rng.below(2) == 0) {
            body = next++;
            vref.rows.push_back({body, l});  // identity: \x_l. x_l
        } else {
            body = rng.below(l);  // constant: \x_l. <earlier lambda>
        }
        abs.rows.push_back({l, l, body});
    }
    I apps = std::max<I>(2, n / 3);
    for (I k = 0; k < apps; ++k) app.rows.push_back({next++, rng.below(lambdas), rng.below(lambdas)});
    if (s.cyclic) {
        // (\x. x x)(\x. x x)
        I omega = next;
        I xa = next + 1, xb = next + 2, inner = next + 3, top = next + 4;
        I var = lambdas;
        vref.rows.push_back({xa, var});
        vref.rows.push_back({xb, var});
        app.rows.push_back({inner, xa, xb});
        abs.rows.push_back({omega, var, inner});
        app.rows.push_back({top, omega, omega});
    }

    Database db;
    db["addressOf"] = std::move(addressOf);
    db["assign"] = std::move(assign);
    db["load"] = std::move(load);
    db["store"] = std::move(store);
    db["dereference"] = std::move(deref);
    db["new"] = std::move(newRel);
    db["fload"] = std::move(fload);
    db["fstore"] = std::move(fstore);
    db["jump"] = std::move(jump);
    db["read"] = std::move(read);
    db["write"] = std::move(write);
    db["abs"] = std::move(abs);
    db["app"] = std::move(app);
    db["vref"] = std::move(vref);
    return db;
}

Database social(const DatasetSpec& s) {
    Rng rng(s.seed);
    I n = std::max(6, s.size);
    std::set<std::pair<I, I>> f;
    // Everyone after the three organizers knows all three of them.
    for (I p = 3; p < n; ++p)
        for (I o = 0; o < 3; ++o) f.insert({o, p});
    for (I k = 0; k < n; ++k) {
        I a = rng.below(n), b = rng.below(n);
        if (a != b) f.insert({std::min(a, b), std::max(a, b)});
    }
    if (s.cyclic) {
        std::set<std::pair<I, I>> sym = f;
        for (auto& [a, b] : f) sym.insert({b, a});
        f = std::move(sym);
    }
    Relation friendRel = relation({{"a", Int}, {"b", Int}});
    for (auto& [a, b] : f) friendRel.rows.push_back({a, b});
    Relation organizer = relation({{"p", Int}});
    for (I o = 0; o < 3; ++o) organizer.rows.push_back({o});
    Database db;
    db["friend"] = std::move(friendRel);
    db["organizer"] = std::move(organizer);
    return db;
}

}  // namespace

Database gen_dataset(const DatasetSpec& spec) {
    if (spec.size <= 0) throw Error("dataset size must be positive");
    switch (spec.kind) {
        case DatasetKind::ChainGraph: return chain(spec);
        case DatasetKind::CycleGraph: return cycle(spec);
        case DatasetKind::RandomDag: return random_dag(spec);
        case DatasetKind::WeightedGraph: return weighted(spec);
        case DatasetKind::BomHierarchy: return bom(spec);
        case DatasetKind::OwnershipGraph: return ownership(spec);
        case DatasetKind::AssignGraph: return assign_graph(spec);
        case DatasetKind::SocialGraph: return social(spec);
    }
    throw Error("unknown dataset kind");
}

bool has_cycle(const Relation& edges, std::size_t from, std::size_t to) {
    std::map<Value, std::vector<Value>> adj;
    for (auto& r : edges.rows) adj[r[from]].push_back(r[to]);
    std::map<Value, int> state;  // 1 on stack, 2 done
    std::function<bool(const Value&)> dfs = [&](const Value& v) {
        state[v] = 1;
        for (auto& w : adj[v]) {
            int s = state[w];
            if (s == 1) return true;
            if (s == 0 && dfs(w)) return true;
        }
        state[v] = 2;
        return false;
    };
    for (auto& [v, out] : adj)
        if (state[v] == 0 && dfs(v)) return true;
    return false;
}

Database sample_subset(const Database& db, double keep, std::uint64_t seed) {
    Rng rng(seed);
    Database out;
    for (auto& [name, rel] : db) {
        Relation r;
        r.schema = rel.schema;
        r.mode = rel.mode;
        for (auto& row : rel.rows)
            if (static_cast<double>(rng.below(1000)) < keep * 1000.0) r.rows.push_back(row);
        out[name] = std::move(r);
    }
    return out;
}

}  // namespace rql
