#include "panorama/checker.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "panorama/engine.hpp"
#include "panorama/simulator.hpp"

namespace panorama {

std::string_view to_string(ViolationKind k) noexcept {
    switch (k) {
        case ViolationKind::Monotonicity: return "monotonicity";
        case ViolationKind::Visibility: return "visibility";
        case ViolationKind::Consistency: return "consistency";
        case ViolationKind::CmOptimality: return "cm_optimality";
        case ViolationKind::Ordering: return "ordering";
    }
    return "?";
}

nlohmann::json Violation::to_json() const {
    nlohmann::json j;
    j["kind"] = std::string(to_string(kind));
    j["seqs"] = seqs;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : nodes) j["nodes"].push_back(n.str());
    j["detail"] = detail;
    return j;
}

PropertySet declared_properties(const Lens& lens) {
    switch (lens.kind) {
        case LensKind::GCNB: return {true, true, true, true};
        case LensKind::GCPB: return {true, false, true, true};
        case LensKind::LCNB: return {false, true, true, true};
        case LensKind::LCMB: return {true, false, true, true};
        case LensKind::ICNB: return {true, true, true, false};
        case LensKind::KGCNB: return {true, false, true, true};
        case LensKind::KLCNB: return {false, false, true, true};
        case LensKind::KLCMB: return {true, false, true, true};
    }
    return {};
}

namespace {

std::string tv(Timestamp t) { return "t" + std::to_string(t.value); }

/// What a lookup of item (node, version) could have observed during [issued, returned].
enum class Seen { Result, UC, Either };

Seen observed(const VersionHistory& h, const NodeId& node, Timestamp version, const ReadEvent& e) {
    if (version == kInitialVersion) return Seen::Result;
    const auto* w = h.find(version);
    if (!w) throw Error(ErrorCode::MissingVersionHistory, "no write record for " + tv(version));
    auto it = w->installed_at.find(node);
    if (it == w->installed_at.end() || it->second > e.returned_at) return Seen::UC;
    if (it->second < e.issued_at) return Seen::Result;
    return Seen::Either;
}

bool matches(Seen s, const ReturnedState& st) {
    return st.is_uc() ? s != Seen::Result : s != Seen::UC;
}

void require_history(const Trace& trace, const VersionHistory& h) {
    for (const auto& e : trace.reads)
        for (std::uint64_t v = 1; v <= e.meta_at_read.latest.value; ++v)
            if (!h.find(Timestamp{v}))
                throw Error(ErrorCode::MissingVersionHistory, "no write record for t" + std::to_string(v));
}

/// [min, max] UC count the viewport could have shown at version v.
std::pair<std::size_t, std::size_t> uc_bounds(const VersionHistory& h, const ReadEvent& e, Timestamp v) {
    std::size_t lo = 0, hi = 0;
    for (const auto& n : e.viewport) {
        switch (observed(h, n, h.resolve(n, v), e)) {
            case Seen::UC: ++lo, ++hi; break;
            case Seen::Either: ++hi; break;
            case Seen::Result: break;
        }
    }
    return {lo, hi};
}

/// Events grouped into maximal runs with the same lens (LastRead resets between runs).
template <typename F>
void for_each_segment(const Trace& trace, F&& f) {
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= trace.reads.size(); ++i)
        if (i == trace.reads.size() || !(trace.reads[i].lens == trace.reads[begin].lens)) {
            f(begin, i);
            begin = i;
        }
}

}  // namespace

std::vector<Violation> check_monotonicity(const Trace& trace) {
    std::vector<Violation> out;
    for_each_segment(trace, [&](std::size_t b, std::size_t end) {
        std::map<NodeId, std::pair<Timestamp, std::uint64_t>> best;  // max version, seq that returned it
        for (std::size_t i = b; i < end; ++i) {
            const auto& e = trace.reads[i];
            for (const auto& [n, st] : e.states) {
                auto it = best.find(n);
                if (it != best.end() && st.version < it->second.first)
                    out.push_back({ViolationKind::Monotonicity, {it->second.second, e.seq}, {n},
                                   n.str() + " went from " + tv(it->second.first) + " to " + tv(st.version)});
                if (it == best.end() || st.version > it->second.first) best[n] = {st.version, e.seq};
            }
        }
    });
    return out;
}

std::vector<Violation> check_visibility(const Trace& trace) {
    std::vector<Violation> out;
    for (const auto& e : trace.reads)
        for (const auto& [n, st] : e.states)
            if (st.is_uc()) out.push_back({ViolationKind::Visibility, {e.seq}, {n}, "UC@" + tv(st.version) + " returned"});
    return out;
}

std::vector<Violation> check_consistency(const Trace& trace) {
    VersionHistory h(trace.writes);
    require_history(trace, h);
    std::vector<Violation> out;
    for (const auto& e : trace.reads) {
        if (e.choice.per_node()) {
            for (const auto& [n, st] : e.states) {
                if (st.is_uc()) continue;  // visibility's concern
                bool real = st.version == kInitialVersion || h.touched_by(n, st.version);
                if (!real || observed(h, n, st.version, e) == Seen::UC) {
                    out.push_back({ViolationKind::Consistency, {e.seq}, {n}, "no installed result " + tv(st.version)});
                    continue;
                }
                for (const auto& w : trace.writes)
                    if (w.ts > st.version && w.update_set.count(n) && observed(h, n, w.ts, e) == Seen::Result) {
                        out.push_back({ViolationKind::Consistency, {e.seq}, {n},
                                       "returned " + tv(st.version) + " while " + tv(w.ts) + " was installed"});
                        break;
                    }
            }
            continue;
        }
        bool found = false;
        for (std::uint64_t t = 0; t <= e.meta_at_read.latest.value && !found; ++t) {
            found = std::all_of(e.states.begin(), e.states.end(), [&](const auto& kv) {
                const auto& [n, st] = kv;
                const Timestamp r = h.resolve(n, Timestamp{t});
                return r == st.version && matches(observed(h, n, r, e), st);
            });
        }
        if (!found) {
            std::ostringstream os;
            os << "no single version <= " << tv(e.meta_at_read.latest) << " explains {";
            bool first = true;
            for (const auto& [n, st] : e.states) {
                os << (first ? "" : ", ") << n.str() << ':' << to_string(st.kind) << '@' << tv(st.version);
                first = false;
            }
            os << '}';
            std::vector<NodeId> nodes(e.viewport.begin(), e.viewport.end());
            out.push_back({ViolationKind::Consistency, {e.seq}, nodes, os.str()});
        }
    }
    return out;
}

std::vector<Violation> check_cm_optimality(const Trace& trace) {
    VersionHistory h(trace.writes);
    require_history(trace, h);
    std::vector<Violation> out;
    for_each_segment(trace, [&](std::size_t b, std::size_t end) {
        LastRead last;
        for (std::size_t i = b; i < end; ++i) {
            const auto& e = trace.reads[i];
            const auto kind = e.lens.kind;
            const bool lc = kind == LensKind::LCNB || kind == LensKind::KLCNB;
            const bool lm = kind == LensKind::LCMB || kind == LensKind::KLCMB;
            if ((lc || lm) && !e.choice.per_node()) {
                const std::size_t k = e.lens.allowance();
                const Timestamp c = e.choice.version;
                std::vector<Timestamp> cands = e.meta_at_read.candidates();
                std::sort(cands.begin(), cands.end());
                cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
                if (lm) {
                    std::erase_if(cands, [&](Timestamp v) {
                        return std::any_of(e.viewport.begin(), e.viewport.end(), [&](const NodeId& n) {
                            auto it = last.find(n);
                            return it != last.end() && h.resolve(n, v) < it->second;
                        });
                    });
                }
                std::map<Timestamp, std::pair<std::size_t, std::size_t>> bounds;
                for (auto v : cands) bounds[v] = uc_bounds(h, e, v);

                bool ok = false;
                if (bounds.count(c)) {
                    // Most recent candidate within the allowance.
                    ok = bounds[c].first <= k;
                    for (auto v : cands)
                        if (v > c && bounds[v].second <= k) ok = false;
                    // Monotone fallback: nothing within k, fewest UCs, most recent on ties.
                    if (!ok && lm) {
                        bool none_within = std::all_of(cands.begin(), cands.end(), [&](Timestamp v) { return bounds[v].second > k; });
                        const std::size_t xc = std::max(bounds[c].first, k + 1);
                        bool argmin = xc <= bounds[c].second;
                        for (auto v : cands) {
                            if (v == c) continue;
                            const std::size_t xv = bounds[v].second;
                            if (!(xv > xc || (xv == xc && v < c))) argmin = false;
                        }
                        ok = none_within && argmin;
                    }
                }
                if (!ok) {
                    std::ostringstream os;
                    os << e.lens.label() << " chose " << tv(c) << "; candidates";
                    for (auto v : cands) os << ' ' << tv(v) << "(uc " << bounds[v].first << '-' << bounds[v].second << ')';
                    out.push_back({ViolationKind::CmOptimality, {e.seq}, {}, os.str()});
                }
            }
            for (const auto& [n, st] : e.states) {
                auto& slot = last[n];
                slot = std::max(slot, st.version);
            }
        }
    });
    return out;
}

std::vector<Violation> check_lens_contract(const Trace& trace) {
    std::vector<Violation> out;
    for (const auto& e : trace.reads) {
        std::optional<Timestamp> expected;
        const auto& m = e.meta_at_read;
        switch (e.lens.kind) {
            case LensKind::GCPB: expected = m.latest; break;
            case LensKind::GCNB: expected = m.committed; break;
            case LensKind::KGCNB: expected = m.uc_count <= e.lens.allowance() ? m.latest : m.committed; break;
            default: break;
        }
        if (expected && (e.choice.per_node() || e.choice.version != *expected))
            out.push_back({ViolationKind::Consistency, {e.seq}, {},
                           e.lens.label() + " must read " + tv(*expected) +
                               (e.choice.per_node() ? " but read per node" : " but read " + tv(e.choice.version))});
    }
    return out;
}

std::vector<Violation> check_properties(const Trace& trace) {
    std::vector<Violation> out;
    auto append = [&](std::vector<Violation> v) { out.insert(out.end(), v.begin(), v.end()); };
    for_each_segment(trace, [&](std::size_t b, std::size_t end) {
        Trace seg;
        seg.writes = trace.writes;
        seg.reads.assign(trace.reads.begin() + static_cast<std::ptrdiff_t>(b),
                         trace.reads.begin() + static_cast<std::ptrdiff_t>(end));
        const auto p = declared_properties(seg.reads.front().lens);
        if (p.monotonicity) append(check_monotonicity(seg));
        if (p.visibility) append(check_visibility(seg));
        if (p.consistency) append(check_consistency(seg));
        if (p.selection_rule) {
            append(check_lens_contract(seg));
            append(check_cm_optimality(seg));
        }
    });
    return out;
}

// --- orderings -------------------------------------------------------------

namespace {

void require_same_workload(const std::vector<LensOutcome>& runs) {
    const Trace* ref = nullptr;
    for (const auto& r : runs) {
        if (!r.trace) continue;
        if (!ref) {
            ref = r.trace;
            continue;
        }
        auto fail = [&](const std::string& what) {
            throw Error(ErrorCode::WorkloadMismatch, r.lens.label() + ": " + what);
        };
        const auto& a = ref->reads;
        const auto& b = r.trace->reads;
        if (a.size() != b.size()) fail("read count differs");
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].issued_at != b[i].issued_at || a[i].returned_at != b[i].returned_at || a[i].viewport != b[i].viewport)
                fail("read " + std::to_string(i) + " differs in instant or viewport");
        if (ref->writes.size() != r.trace->writes.size()) fail("write count differs");
        for (std::size_t i = 0; i < ref->writes.size(); ++i) {
            const auto& x = ref->writes[i];
            const auto& y = r.trace->writes[i];
            if (x.ts != y.ts || x.write_set != y.write_set || x.begun_at != y.begun_at)
                fail("write " + tv(x.ts) + " differs");
        }
    }
}

}  // namespace

std::vector<Violation> check_orderings(const std::vector<LensOutcome>& runs) {
    require_same_workload(runs);
    std::vector<Violation> out;

    std::map<LensKind, const LensOutcome*> base;
    std::map<std::size_t, std::map<LensKind, const LensOutcome*>> relaxed;  // by k
    for (const auto& r : runs) {
        if (r.lens.is_k_variant())
            relaxed[r.lens.k][r.lens.kind] = &r;
        else
            base[r.lens.kind] = &r;
    }
    auto S = [](const LensOutcome* r) { return r->report.staleness_ms; };
    auto I = [](const LensOutcome* r) { return r->report.invisibility_ms; };
    auto fail = [&](const std::string& what) { out.push_back({ViolationKind::Ordering, {}, {}, what}); };
    auto label = [](const LensOutcome* r) { return r->lens.label(); };
    auto find = [&](LensKind k) -> const LensOutcome* {
        auto it = base.find(k);
        return it == base.end() ? nullptr : it->second;
    };

    const auto* gcpb = find(LensKind::GCPB);
    const auto* gcnb = find(LensKind::GCNB);
    const auto* lcnb = find(LensKind::LCNB);
    const auto* lcmb = find(LensKind::LCMB);
    const auto* icnb = find(LensKind::ICNB);

    if (gcpb && S(gcpb) != 0) fail("S(gcpb) = " + std::to_string(S(gcpb)) + ", expected 0");
    if (gcnb && I(gcnb) != 0) fail("I(gcnb) = " + std::to_string(I(gcnb)) + ", expected 0");
    if (lcnb && I(lcnb) != 0) fail("I(lcnb) = " + std::to_string(I(lcnb)) + ", expected 0");
    if (icnb && I(icnb) != 0) fail("I(icnb) = " + std::to_string(I(icnb)) + ", expected 0");
    for (const auto& r : runs) {
        if (gcnb && S(&r) > S(gcnb))
            fail("S(" + label(&r) + ") = " + std::to_string(S(&r)) + " > S(gcnb) = " + std::to_string(S(gcnb)));
        if (gcpb && I(&r) > I(gcpb))
            fail("I(" + label(&r) + ") = " + std::to_string(I(&r)) + " > I(gcpb) = " + std::to_string(I(gcpb)));
    }
    auto le = [&](const char* metric, const LensOutcome* a, const LensOutcome* b, std::int64_t va, std::int64_t vb) {
        if (a && b && va > vb)
            fail(std::string(metric) + "(" + label(a) + ") = " + std::to_string(va) + " > " + metric + "(" + label(b) +
                 ") = " + std::to_string(vb));
    };
    if (lcmb && lcnb) {
        le("S", lcmb, lcnb, S(lcmb), S(lcnb));
        le("I", lcnb, lcmb, I(lcnb), I(lcmb));
    }
    if (icnb && lcnb) le("S", icnb, lcnb, S(icnb), S(lcnb));

    for (const auto& [k, group] : relaxed) {
        auto get = [&](LensKind kind) -> const LensOutcome* {
            auto it = group.find(kind);
            return it == group.end() ? nullptr : it->second;
        };
        const auto* kg = get(LensKind::KGCNB);
        const auto* kl = get(LensKind::KLCNB);
        const auto* km = get(LensKind::KLCMB);
        for (auto [kv, bv] : {std::pair{kg, gcnb}, std::pair{kl, lcnb}, std::pair{km, lcmb}}) {
            if (!kv || !bv) continue;
            le("S", kv, bv, S(kv), S(bv));
            le("I", bv, kv, I(bv), I(kv));
        }
        if (km && kl) {
            le("S", km, kl, S(km), S(kl));
            le("I", kl, km, I(kl), I(km));
        }
        if (kl && kg) {
            le("S", kl, kg, S(kl), S(kg));
            le("I", kg, kl, I(kg), I(kl));
        }
    }
    return out;
}

WorkloadVerdict verify_workload(const ExperimentConfig& workload, std::size_t k) {
    WorkloadVerdict v;
    const auto lenses = all_lenses(k);
    std::vector<Trace> traces;
    std::vector<LensOutcome> outcomes;
    traces.reserve(lenses.size());
    for (const auto& lens : lenses) {
        auto config = workload;
        config.lens = lens;
        auto run = run_experiment(config);
        auto found = check_properties(run.trace);
        v.properties.insert(v.properties.end(), found.begin(), found.end());
        v.reads += run.trace.reads.size();
        traces.push_back(std::move(run.trace));
        outcomes.push_back({lens, nullptr, std::move(run.metrics)});
    }
    for (std::size_t i = 0; i < outcomes.size(); ++i) outcomes[i].trace = &traces[i];
    v.orderings = check_orderings(outcomes);
    return v;
}

// --- two-read scenario -----------------------------------------------------

Trace two_read_counterexample(const Lens& lens) {
    ManualClock clock;
    Engine engine(ViewGraph::build(small_spec()), clock);
    InstantExecutor executor;
    engine.begin_write({NodeId("n1")});
    // With no dwell yet the scheduler falls back to cost then name order,
    // which installs n1, n3, n4, n5 and leaves n6 (the costliest) pending.
    for (const char* expected : {"n1", "n3", "n4", "n5"}) {
        auto view = engine.schedule_next();
        if (!view || view->node != NodeId(expected))
            throw std::logic_error("unexpected schedule: " + (view ? view->node.str() : std::string("none")));
        clock.advance(view->cost);
        engine.complete(*view, executor.execute(view->node, view->ts, view->cost));
    }
    clock.advance(Millis{100});
    engine.read({NodeId("n3"), NodeId("n4"), NodeId("n5")}, lens);
    clock.advance(Millis{100});
    engine.read({NodeId("n5"), NodeId("n6"), NodeId("n7")}, lens);
    return engine.trace();
}

}  // namespace panorama
