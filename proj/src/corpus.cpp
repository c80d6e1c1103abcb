#include "rql/corpus.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>

namespace rql {

std::string_view to_string(MonotoneKind m) {
    switch (m) {
        case MonotoneKind::Yes: return "yes";
        case MonotoneKind::Stratified: return "stratified";
        case MonotoneKind::No: return "no";
    }
    return "?";
}

std::optional<MonotoneKind> parse_monotone_kind(std::string_view s) {
    if (s == "yes") return MonotoneKind::Yes;
    if (s == "stratified") return MonotoneKind::Stratified;
    if (s == "no") return MonotoneKind::No;
    return std::nullopt;
}

std::set<std::string> Expected::violated() const {
    std::set<std::string> out;
    if (!linear) out.insert("linear");
    if (monotone == MonotoneKind::No) out.insert("monotone");
    if (!set) out.insert("set");
    if (mutual) out.insert("mutual");
    if (!constructorFree) out.insert("cf");
    return out;
}

namespace {

constexpr ColumnType Int = ColumnType::Int;
constexpr ColumnType Text = ColumnType::Text;

QueryPtr edges_xy() { return table("edges", {{"x", Int}, {"y", Int}}); }
QueryPtr edge() { return table("edge", {{"src", Int}, {"dst", Int}}); }
QueryPtr wedge() { return table("edge", {{"src", Int}, {"dst", Int}, {"cst", Int}}); }
QueryPtr node() { return table("node", {{"id", Int}, {"name", Text}}); }
QueryPtr pair_table(const std::string& name) { return table(name, {{"x", Int}, {"y", Int}}); }

QueryPtr as_category(QueryPtr q, Category c) { return c == Category::Set ? distinct(q) : q; }

//---------------------------------------------------------------------------
// Graph queries
//---------------------------------------------------------------------------

QueryPtr even_odd() {
    auto n = node();
    auto start = map(filter(n, [](const Row& r) { return r["id"] == 0; }), [](const Row& r) { return row({{"n", r["id"]}}); });
    auto none = map(filter(n, [](const Row& r) { return r["id"] < 0; }), [](const Row& r) { return row({{"n", r["id"]}}); });
    auto successor_of = [n](const QueryPtr& from) {
        return distinct(flat_map(from, [&](const Row& o) {
            return map(filter(n, [&](const Row& m) { return m["id"] == o["n"] + 1; }),
                       [](const Row& m) { return row({{"n", m["id"]}}); });
        }));
    };
    return fix({start, none},
               [&](const std::vector<QueryPtr>& r) {
                   return std::vector<QueryPtr>{successor_of(r[1]), successor_of(r[0])};
               },
               {"even", "odd"});
}

QueryPtr ancestry() {
    auto e = edge();
    auto base = map(filter(e, [](const Row& r) { return r["src"] == 0; }),
                    [](const Row& r) { return row({{"person", r["dst"]}, {"gen", 1}}); });
    return fix(base, [&](const QueryPtr& desc) {
        return distinct(flat_map(desc, [&](const Row& d) {
            return map(filter(e, [&](const Row& x) { return d["person"] == x["src"]; }),
                       [&](const Row& x) { return row({{"person", x["dst"]}, {"gen", d["gen"] + 1}}); });
        }));
    }, "desc");
}

/// Simple paths with the visited node list carried as text.
QueryPtr graphalytics_tc() {
    auto e = edge();
    auto n = node();
    auto base = flat_map(e, [&](const Row& x) {
        return flat_map(filter(n, [&](const Row& a) { return a["id"] == x["src"]; }), [&](const Row& a) {
            return map(filter(n, [&](const Row& b) { return b["id"] == x["dst"]; }), [&](const Row& b) {
                return row({{"src", x["src"]},
                            {"dst", x["dst"]},
                            {"visited", concat(concat(concat(concat("/", a["name"]), "/"), b["name"]), "/")}});
            });
        });
    });
    auto paths = fix(base, [&](const QueryPtr& path) {
        return flat_map(path, [&](const Row& p) {
            return flat_map(filter(e, [&](const Row& x) { return p["dst"] == x["src"]; }), [&](const Row& x) {
                return map(filter(n,
                                  [&](const Row& m) {
                                      return m["id"] == x["dst"] &&
                                             !like(p["visited"], concat(concat("%/", m["name"]), "/%"));
                                  }),
                           [&](const Row& m) {
                               return row({{"src", p["src"]},
                                           {"dst", m["id"]},
                                           {"visited", concat(concat(p["visited"], m["name"]), "/")}});
                           });
            });
        });
    }, "path");
    return distinct(map(paths, [](const Row& p) { return row({{"src", p["src"]}, {"dst", p["dst"]}}); }));
}

QueryPtr orbits() {
    auto closure = fix(edge(), [](const QueryPtr& path) {
        return flat_map(path, [&](const Row& a) {
            return map(filter(path, [&](const Row& b) { return a["dst"] == b["src"]; }),
                       [&](const Row& b) { return row({{"src", a["src"]}, {"dst", b["dst"]}}); });
        });
    }, "orbit");
    return group_by(closure, [](const Row& r) { return row({{"src", r["src"]}}); },
                    [](const Row& r) { return row({{"src", r["src"]}, {"n", count()}}); });
}

QueryPtr apsp() {
    return fix(wedge(), [](const QueryPtr& path) {
        auto joined = flat_map(path, [&](const Row& a) {
            return map(filter(path, [&](const Row& b) { return a["dst"] == b["src"]; }), [&](const Row& b) {
                return row({{"src", a["src"]}, {"dst", b["dst"]}, {"cst", a["cst"] + b["cst"]}});
            });
        });
        return distinct(group_by(joined, [](const Row& r) { return row({{"src", r["src"]}, {"dst", r["dst"]}}); },
                                 [](const Row& r) {
                                     return row({{"src", r["src"]}, {"dst", r["dst"]}, {"cst", min(r["cst"])}});
                                 }));
    }, "path");
}

//---------------------------------------------------------------------------
// Bill of materials
//---------------------------------------------------------------------------

QueryPtr sub_parts() { return table("SubParts", {{"part", Text}, {"sub", Text}}); }
QueryPtr basic_parts() { return table("BasicParts", {{"part", Text}, {"days", Int}}); }

QueryPtr waitfor_step(const QueryPtr& waitfor) {
    auto sp = sub_parts();
    return flat_map(sp, [&](const Row& s) {
        return map(filter(waitfor, [&](const Row& w) { return s["sub"] == w["part"]; }),
                   [&](const Row& w) { return row({{"part", s["part"]}, {"days", w["days"]}}); });
    });
}

QueryPtr bom() {
    auto waitfor = fix(basic_parts(), [](const QueryPtr& w) { return waitfor_step(w); }, "waitfor");
    return group_by(waitfor, [](const Row& r) { return row({{"part", r["part"]}}); },
                    [](const Row& r) { return row({{"part", r["part"]}, {"days", max(r["days"])}}); });
}

//---------------------------------------------------------------------------
// Program analyses over AssignGraph tables
//---------------------------------------------------------------------------

/// x = y; pointsTo(y, o) gives pointsTo(x, o). Columns named by the caller.
QueryPtr flow_through(const QueryPtr& rel, const std::string& to, const std::string& from, const QueryPtr& pts,
                      const std::string& ptsVar, const std::string& ptsObj) {
    return flat_map(rel, [&](const Row& a) {
        return map(filter(pts, [&](const Row& p) { return a[from] == p[ptsVar]; }),
                   [&](const Row& p) { return row({{ptsVar, a[to]}, {ptsObj, p[ptsObj]}}); });
    });
}

QueryPtr andersen() {
    auto assign = pair_table("assign");
    auto load = pair_table("load");
    auto store = pair_table("store");
    return fix(pair_table("addressOf"), [&](const QueryPtr& pt) {
        auto viaAssign = flow_through(assign, "x", "y", pt, "x", "y");
        // x = *z
        auto viaLoad = flat_map(load, [&](const Row& l) {
            return flat_map(filter(pt, [&](const Row& a) { return l["y"] == a["x"]; }), [&](const Row& a) {
                return map(filter(pt, [&](const Row& b) { return a["y"] == b["x"]; }),
                           [&](const Row& b) { return row({{"x", l["x"]}, {"y", b["y"]}}); });
            });
        });
        // *x = y
        auto viaStore = flat_map(store, [&](const Row& s) {
            return flat_map(filter(pt, [&](const Row& a) { return s["x"] == a["x"]; }), [&](const Row& a) {
                return map(filter(pt, [&](const Row& b) { return s["y"] == b["x"]; }),
                           [&](const Row& b) { return row({{"x", a["y"]}, {"y", b["y"]}}); });
            });
        });
        return union_(union_(viaAssign, viaLoad), viaStore);
    }, "pointsTo");
}

QueryPtr cspa() {
    auto assign = pair_table("assign");
    auto deref = pair_table("dereference");
    auto compose = [](const QueryPtr& l, const QueryPtr& r, bool flipLeft) {
        // flipLeft joins on l.x instead of l.y and projects l.y.
        return flat_map(l, [&](const Row& a) {
            return map(filter(r, [&](const Row& b) { return (flipLeft ? a["x"] : a["y"]) == b["x"]; }),
                       [&](const Row& b) { return row({{"x", flipLeft ? a["y"] : a["x"]}, {"y", b["y"]}}); });
        });
    };
    auto reflexive = [&](const std::string& col) {
        return distinct(map(assign, [&](const Row& a) { return row({{"x", a[col]}, {"y", a[col]}}); }));
    };
    return fix({distinct(assign), reflexive("x"), reflexive("y")},
               [&](const std::vector<QueryPtr>& r) {
                   const QueryPtr &vf = r[0], &ma = r[1], &va = r[2];
                   auto vfDef = union_(compose(assign, ma, false), compose(vf, vf, false));
                   // dereference(y, x), valueAlias(y, z), dereference(z, w) gives memoryAlias(x, w)
                   auto maDef = distinct(flat_map(deref, [&](const Row& d1) {
                       return flat_map(filter(va, [&](const Row& v) { return d1["x"] == v["x"]; }), [&](const Row& v) {
                           return map(filter(deref, [&](const Row& d2) { return v["y"] == d2["x"]; }),
                                      [&](const Row& d2) { return row({{"x", d1["y"]}, {"y", d2["y"]}}); });
                       });
                   }));
                   // valueFlow(z, x), valueFlow(z, y); valueFlow(z, x), memoryAlias(z, w), valueFlow(w, y)
                   auto direct = compose(vf, vf, true);
                   auto viaAlias = flat_map(vf, [&](const Row& a) {
                       return flat_map(filter(ma, [&](const Row& m) { return a["x"] == m["x"]; }), [&](const Row& m) {
                           return map(filter(vf, [&](const Row& b) { return m["y"] == b["x"]; }),
                                      [&](const Row& b) { return row({{"x", a["y"]}, {"y", b["y"]}}); });
                       });
                   });
                   return std::vector<QueryPtr>{vfDef, maDef, union_(direct, viaAlias)};
               },
               {"valueFlow", "memoryAlias", "valueAlias"});
}

/// Field-sensitive points-to with a heap relation; Set uses UNION, Bag UNION ALL.
QueryPtr field_points_to(Category c) {
    auto newRel = table("new", {{"v", Int}, {"o", Int}});
    auto assign = pair_table("assign");
    auto fload = table("fload", {{"dst", Int}, {"base", Int}, {"fld", Int}});
    auto fstore = table("fstore", {{"base", Int}, {"fld", Int}, {"src", Int}});
    auto heap_from = [&](const QueryPtr& pts) {
        return flat_map(fstore, [&](const Row& s) {
            return flat_map(filter(pts, [&](const Row& b) { return s["base"] == b["v"]; }), [&](const Row& b) {
                return map(filter(pts, [&](const Row& v) { return s["src"] == v["v"]; }), [&](const Row& v) {
                    return row({{"ob", b["o"]}, {"f", s["fld"]}, {"o", v["o"]}});
                });
            });
        });
    };
    auto merge = [c](const QueryPtr& a, const QueryPtr& b) { return c == Category::Set ? union_(a, b) : union_all(a, b); };
    return fix({newRel, heap_from(newRel)},
               [&](const std::vector<QueryPtr>& r) {
                   const QueryPtr &vpt = r[0], &hpt = r[1];
                   auto viaAssign = flat_map(assign, [&](const Row& a) {
                       return map(filter(vpt, [&](const Row& p) { return a["y"] == p["v"]; }),
                                  [&](const Row& p) { return row({{"v", a["x"]}, {"o", p["o"]}}); });
                   });
                   auto viaLoad = flat_map(fload, [&](const Row& l) {
                       return flat_map(filter(vpt, [&](const Row& p) { return l["base"] == p["v"]; }), [&](const Row& p) {
                           return map(filter(hpt, [&](const Row& h) { return p["o"] == h["ob"] && l["fld"] == h["f"]; }),
                                      [&](const Row& h) { return row({{"v", l["dst"]}, {"o", h["o"]}}); });
                       });
                   });
                   return std::vector<QueryPtr>{merge(viaAssign, viaLoad), as_category(heap_from(vpt), c)};
               },
               {"vpt", "hpt"});
}

QueryPtr ptc() {
    return group_by(field_points_to(Category::Set), [](const Row& r) { return row({{"v", r["v"]}}); },
                    [](const Row& r) { return row({{"v", r["v"]}, {"n", count()}}); });
}

QueryPtr data_flow() {
    auto jump = table("jump", {{"src", Int}, {"dst", Int}});
    auto read = table("read", {{"instr", Int}, {"var", Int}});
    auto write = table("write", {{"instr", Int}, {"var", Int}});
    auto step = [](const QueryPtr& l, const QueryPtr& r) {
        return flat_map(l, [&](const Row& a) {
            return map(filter(r, [&](const Row& b) { return a["dst"] == b["src"]; }),
                       [&](const Row& b) { return row({{"src", a["src"]}, {"dst", b["dst"]}}); });
        });
    };
    auto flow = fix(jump, [&](const QueryPtr& f) { return step(f, f); }, "flow");
    return flat_map(write, [&](const Row& w) {
        return flat_map(filter(flow, [&](const Row& f) { return w["instr"] == f["src"]; }), [&](const Row& f) {
            return map(filter(read, [&](const Row& r) { return f["dst"] == r["instr"] && w["var"] == r["var"]; }),
                       [&](const Row& r) { return row({{"def", w["instr"]}, {"use", r["instr"]}}); });
        });
    });
}

/// Zeroth-order control flow analysis of lambda terms.
QueryPtr cba() {
    auto abs = table("abs", {{"id", Int}, {"var", Int}, {"body", Int}});
    auto app = table("app", {{"id", Int}, {"fn", Int}, {"arg", Int}});
    auto vref = table("vref", {{"id", Int}, {"var", Int}});
    auto termBase = map(abs, [](const Row& a) { return row({{"term", a["id"]}, {"lam", a["id"]}}); });
    auto varBase = flat_map(app, [&](const Row& p) {
        return flat_map(filter(abs, [&](const Row& f) { return p["fn"] == f["id"]; }), [&](const Row& f) {
            return map(filter(abs, [&](const Row& a) { return p["arg"] == a["id"]; }),
                       [&](const Row& a) { return row({{"var", f["var"]}, {"lam", a["id"]}}); });
        });
    });
    // Applications whose function term evaluates to lambda f; `k` projects the result.
    auto through_app = [&](const QueryPtr& dataTerm, const std::function<QueryPtr(const Row&, const Row&)>& k) {
        return flat_map(app, [&](const Row& p) {
            return flat_map(filter(dataTerm, [&](const Row& t) { return p["fn"] == t["term"]; }), [&](const Row& t) {
                return flat_map(filter(abs, [&](const Row& f) { return t["lam"] == f["id"]; }),
                                [&](const Row& f) { return k(p, f); });
            });
        });
    };
    auto terms = fix({termBase, varBase},
                     [&](const std::vector<QueryPtr>& r) {
                         const QueryPtr &dataTerm = r[0], &dataVar = r[1];
                         auto viaVar = flat_map(vref, [&](const Row& v) {
                             return map(filter(dataVar, [&](const Row& d) { return v["var"] == d["var"]; }),
                                        [&](const Row& d) { return row({{"term", v["id"]}, {"lam", d["lam"]}}); });
                         });
                         auto viaApp = through_app(dataTerm, [&](const Row& p, const Row& f) {
                             return map(filter(dataTerm, [&](const Row& b) { return f["body"] == b["term"]; }),
                                        [&](const Row& b) { return row({{"term", p["id"]}, {"lam", b["lam"]}}); });
                         });
                         auto bind = through_app(dataTerm, [&](const Row& p, const Row& f) {
                             return map(filter(dataTerm, [&](const Row& a) { return p["arg"] == a["term"]; }),
                                        [&](const Row& a) { return row({{"var", f["var"]}, {"lam", a["lam"]}}); });
                         });
                         return std::vector<QueryPtr>{union_all(viaVar, viaApp), bind};
                     },
                     {"dataTerm", "dataVar"});
    return group_by(terms, [](const Row& r) { return row({{"term", r["term"]}}); },
                    [](const Row& r) { return row({{"term", r["term"]}, {"lams", count()}}); });
}

//---------------------------------------------------------------------------
// Ownership and social graphs
//---------------------------------------------------------------------------

QueryPtr company_control() {
    auto owns = table("owns", {{"by", Int}, {"of", Int}, {"amt", Int}});
    auto company = table("company", {{"id", Int}, {"total", Int}});
    auto majority = [&](const QueryPtr& shares) {
        return flat_map(shares, [&](const Row& s) {
            return map(filter(company, [&](const Row& c) { return s["of"] == c["id"] && s["amt"] * 2 > c["total"]; }),
                       [&](const Row&) { return row({{"by", s["by"]}, {"of", s["of"]}}); });
        });
    };
    return fix({owns, distinct(majority(owns))},
               [&](const std::vector<QueryPtr>& r) {
                   const QueryPtr &cshares = r[0], &controls = r[1];
                   auto indirect = flat_map(controls, [&](const Row& c) {
                       return map(filter(owns, [&](const Row& o) { return c["of"] == o["by"]; }), [&](const Row& o) {
                           return row({{"by", c["by"]}, {"of", o["of"]}, {"amt", o["amt"]}});
                       });
                   });
                   auto summed = group_by(indirect, [](const Row& x) { return row({{"by", x["by"]}, {"of", x["of"]}}); },
                                          [](const Row& x) {
                                              return row({{"by", x["by"]}, {"of", x["of"]}, {"amt", sum(x["amt"])}});
                                          });
                   return std::vector<QueryPtr>{distinct(summed), distinct(majority(cshares))};
               },
               {"cshares", "controls"}, 1);
}

QueryPtr friend_table() { return table("friend", {{"a", Int}, {"b", Int}}); }

QueryPtr cot() {
    auto f = friend_table();
    return fix({f, f},
               [&](const std::vector<QueryPtr>& r) {
                   const QueryPtr &trust = r[0], &ftr = r[1];
                   auto viaFriend = flat_map(f, [&](const Row& x) {
                       return map(filter(ftr, [&](const Row& t) { return x["b"] == t["a"]; }),
                                  [&](const Row& t) { return row({{"a", x["a"]}, {"b", t["b"]}}); });
                   });
                   auto onward = filter(trust, [](const Row& t) { return t["a"] != t["b"]; });
                   return std::vector<QueryPtr>{viaFriend, onward};
               },
               {"trust", "ftr"});
}

QueryPtr party() {
    auto f = friend_table();
    auto organizer = table("organizer", {{"p", Int}});
    auto attendBase = map(organizer, [](const Row& o) { return row({{"p", o["p"]}, {"wave", 0}}); });
    auto cntBase = map(organizer, [](const Row& o) { return row({{"p", o["p"]}, {"n", 0}, {"wave", 0}}); });
    return fix({attendBase, cntBase},
               [&](const std::vector<QueryPtr>& r) {
                   const QueryPtr &attend = r[0], &cnt = r[1];
                   auto joins = map(filter(cnt, [](const Row& c) { return c["n"] >= 3; }),
                                    [](const Row& c) { return row({{"p", c["p"]}, {"wave", c["wave"] + 1}}); });
                   auto reached = flat_map(attend, [&](const Row& a) {
                       return map(filter(f, [&](const Row& x) { return x["a"] == a["p"]; }),
                                  [&](const Row& x) { return row({{"p", x["b"]}, {"wave", a["wave"]}}); });
                   });
                   auto counted = group_by(reached, [](const Row& x) { return row({{"p", x["p"]}}); },
                                           [](const Row& x) {
                                               return row({{"p", x["p"]}, {"n", count()}, {"wave", max(x["wave"])}});
                                           });
                   return std::vector<QueryPtr>{joins, counted};
               },
               {"attend", "cnt"});
}

std::vector<DatasetSpec> seeded(DatasetKind k, int size, bool withCyclic) {
    std::vector<DatasetSpec> out;
    for (std::uint64_t s = 1; s <= 3; ++s) out.push_back({k, size, s, false});
    if (withCyclic) out.push_back({k, size, 1, true});
    return out;
}

}  // namespace

namespace queries {

QueryPtr transitive_closure(Category category) {
    auto edges = edges_xy();
    return fix(edges, [&](const QueryPtr& path) {
        return as_category(flat_map(path, [&](const Row& p) {
            return map(filter(edges, [&](const Row& e) { return p["y"] == e["x"]; }),
                       [&](const Row& e) { return row({{"x", p["x"]}, {"y", e["y"]}}); });
        }), category);
    }, "path");
}

QueryPtr transitive_closure_nonlinear(Category category) {
    return fix(edges_xy(), [&](const QueryPtr& path) {
        return as_category(flat_map(path, [&](const Row& a) {
            return map(filter(path, [&](const Row& b) { return a["y"] == b["x"]; }),
                       [&](const Row& b) { return row({{"x", a["x"]}, {"y", b["y"]}}); });
        }), category);
    }, "path");
}

QueryPtr transitive_closure_count() {
    return aggregate(transitive_closure(Category::Bag), [](const Row&) { return row({{"count", count()}}); });
}

QueryPtr bom_all_subparts() {
    auto sp = sub_parts();
    auto base = map(filter(sp, [](const Row& s) { return s["part"] == "given_part"; }),
                    [](const Row& s) { return row({{"part", s["part"]}, {"sub", s["sub"]}}); });
    return fix(base, [&](const QueryPtr& all) {
        return flat_map(sp, [&](const Row& s) {
            return map(filter(all, [&](const Row& a) { return s["part"] == a["sub"]; }),
                       [&](const Row&) { return row({{"part", s["part"]}, {"sub", s["sub"]}}); });
        });
    }, "AllSubParts");
}

QueryPtr bom_waitfor_unstratified() {
    return fix(basic_parts(), [](const QueryPtr& w) {
        return group_by(waitfor_step(w), [](const Row& r) { return row({{"part", r["part"]}}); },
                        [](const Row& r) { return row({{"part", r["part"]}, {"days", max(r["days"])}}); });
    }, "waitfor");
}

QueryPtr sssp() {
    auto e = table("edge", {{"src", Int}, {"dst", Int}, {"cst", Int}});
    auto base = table("base", {{"dst", Int}, {"cst", Int}});
    auto path = fix(base, [&](const QueryPtr& p) {
        return distinct(flat_map(e, [&](const Row& x) {
            return map(filter(p, [&](const Row& q) { return q["dst"] == x["src"]; }),
                       [&](const Row& q) { return row({{"dst", x["dst"]}, {"cst", q["cst"] + x["cst"]}}); });
        }));
    }, "path");
    return group_by(path, [](const Row& r) { return row({{"dst", r["dst"]}}); },
                    [](const Row& r) { return row({{"dst", r["dst"]}, {"cst", min(r["cst"])}}); });
}

}  // namespace queries

std::vector<BenchQuery> build_corpus() {
    using MK = MonotoneKind;
    using DK = DatasetKind;
    // Expected fields: linear, monotone, set, mutual, constructorFree.
    return {
        {"Even-Odd", "parity of node ids by mutual recursion from 0", even_odd(),
         {true, MK::Yes, true, true, false}, seeded(DK::ChainGraph, 12, false)},
        {"CSPA", "context-sensitive alias analysis: value flow, memory alias, value alias", cspa(),
         {false, MK::Yes, true, true, true}, seeded(DK::AssignGraph, 14, false)},
        {"CC", "company control through majority share ownership", company_control(),
         {true, MK::No, true, true, false}, seeded(DK::OwnershipGraph, 10, true)},
        {"PTC", "field-sensitive points-to, counted per variable", ptc(),
         {false, MK::Stratified, true, true, true}, seeded(DK::AssignGraph, 14, true)},
        {"COT", "trust propagated along friendships", cot(),
         {true, MK::Yes, false, true, true}, seeded(DK::SocialGraph, 8, true)},
        {"JPT", "field-sensitive points-to under bag semantics", field_points_to(Category::Bag),
         {false, MK::Yes, false, true, true}, seeded(DK::AssignGraph, 12, true)},
        {"Party", "attendance once three friends attend", party(),
         {true, MK::No, false, true, false}, seeded(DK::SocialGraph, 8, true)},
        {"CBA", "control flow analysis of lambda terms", cba(),
         {false, MK::Stratified, false, true, true}, seeded(DK::AssignGraph, 12, true)},
        {"SSSP", "single-source shortest path from node 0", queries::sssp(),
         {true, MK::Stratified, true, false, false}, seeded(DK::WeightedGraph, 16, true)},
        {"Ancestry", "descendants of node 0 with generation", ancestry(),
         {true, MK::Yes, true, false, false}, seeded(DK::RandomDag, 20, true)},
        {"APT", "Andersen points-to analysis", andersen(),
         {false, MK::Yes, true, false, true}, seeded(DK::AssignGraph, 16, true)},
        {"APSP", "all-pairs shortest path with MIN inside the recursion", apsp(),
         {false, MK::No, true, false, false}, seeded(DK::WeightedGraph, 12, true)},
        {"TC", "reachability along simple paths carrying the visited list", graphalytics_tc(),
         {true, MK::Yes, false, false, false}, seeded(DK::RandomDag, 16, true)},
        {"BOM", "longest wait per part in a bill of materials", bom(),
         {true, MK::Stratified, false, false, true}, seeded(DK::BomHierarchy, 12, true)},
        {"Orbits", "non-linear bag closure counted per source", orbits(),
         {false, MK::Stratified, false, false, true}, seeded(DK::RandomDag, 10, true)},
        {"DataFlow", "definition-use pairs over a jump graph", data_flow(),
         {false, MK::Yes, false, false, true}, seeded(DK::AssignGraph, 10, true)},
    };
}

const BenchQuery& corpus_entry(const std::vector<BenchQuery>& corpus, std::string_view name) {
    for (auto& q : corpus)
        if (q.name == name) return q;
    throw Error("no benchmark query named '" + std::string(name) + "'");
}

//---------------------------------------------------------------------------
// Manifest
//---------------------------------------------------------------------------

namespace {

using nlohmann::ordered_json;

ordered_json expected_json(const Expected& e) {
    return {{"linear", e.linear},
            {"monotone", to_string(e.monotone)},
            {"set", e.set},
            {"mutual", e.mutual},
            {"constructorFree", e.constructorFree}};
}

Expected expected_from(const ordered_json& j) {
    Expected e;
    e.linear = j.at("linear").get<bool>();
    auto m = parse_monotone_kind(j.at("monotone").get<std::string>());
    if (!m) throw Error("bad monotone value in manifest");
    e.monotone = *m;
    e.set = j.at("set").get<bool>();
    e.mutual = j.at("mutual").get<bool>();
    e.constructorFree = j.at("constructorFree").get<bool>();
    return e;
}

std::string file_stem(const std::string& name) {
    std::string s;
    for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return s;
}

}  // namespace

void write_corpus(const std::filesystem::path& dir, const std::vector<BenchQuery>& corpus, bool withData) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "queries");
    ordered_json list = ordered_json::array();
    for (auto& q : corpus) {
        std::string stem = file_stem(q.name);
        fs::path irRel = fs::path("queries") / (stem + ".json");
        {
            std::ofstream out(dir / irRel);
            if (!out) throw Error("cannot write " + (dir / irRel).string());
            out << serialize_ir(q.ir);
        }
        ordered_json ds = ordered_json::array();
        for (auto& spec : q.datasets) {
            fs::path dataRel = fs::path("data") / stem / spec.label();
            if (withData) save_database(dir / dataRel, gen_dataset(spec));
            ds.push_back({{"kind", to_string(spec.kind)},
                          {"size", spec.size},
                          {"seed", spec.seed},
                          {"cyclic", spec.cyclic},
                          {"dir", dataRel.generic_string()}});
        }
        list.push_back({{"name", q.name},
                        {"description", q.description},
                        {"ir", irRel.generic_string()},
                        {"expected", expected_json(q.expected)},
                        {"datasets", ds}});
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
    out << ordered_json{{"version", 1}, {"queries", list}}.dump(2) << "\n";
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
    auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw Error("no manifest.json in " + dir.string());
    std::vector<ManifestEntry> out;
    try {
        auto j = ordered_json::parse(in);
        for (auto& q : j.at("queries")) {
            ManifestEntry e;
            e.name = q.at("name").get<std::string>();
            e.description = q.value("description", "");
            e.irPath = dir / q.at("ir").get<std::string>();
            e.expected = expected_from(q.at("expected"));
            for (auto& d : q.value("datasets", ordered_json::array())) {
                auto kind = parse_dataset_kind(d.at("kind").get<std::string>());
                if (!kind) throw Error("unknown dataset kind in manifest");
                e.datasets.push_back({*kind, d.at("size").get<int>(), d.at("seed").get<std::uint64_t>(),
                                      d.at("cyclic").get<bool>()});
                e.dataDirs.push_back(dir / d.at("dir").get<std::string>());
            }
            out.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(path.string() + ": " + ex.what());
    }
    return out;
}

}  // namespace rql
