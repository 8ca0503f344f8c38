#include <algorithm>
#include <map>

#include "majorca/synth.hpp"

namespace majorca {

Word MoveArc::apply(Word v, unsigned wb) const {
    const auto& e = *entry;
    if (e.kind == GadgetKind::Neg) return majorca::apply(BinOp::neg, v, 0, wb);
    if (e.kind == GadgetKind::ArithConst) return majorca::apply(e.params.op, v, e.params.val, wb);
    return v & width_mask(wb);
}

Word MoveArc::invert(Word v, unsigned wb) const {
    const auto& e = *entry;
    if (e.kind == GadgetKind::Neg) return majorca::apply(BinOp::neg, v, 0, wb);
    if (e.kind == GadgetKind::ArithConst) {
        if (e.params.op == BinOp::add) return majorca::apply(BinOp::sub, v, e.params.val, wb);
        return majorca::apply(BinOp::xor_, v, e.params.val, wb);
    }
    return v & width_mask(wb);
}

Word MovePath::apply(Word v, unsigned wb) const {
    for (const auto& a : arcs) v = a.apply(v, wb);
    return v & width_mask(wb);
}

Word MovePath::invert(Word v, unsigned wb) const {
    for (auto it = arcs.rbegin(); it != arcs.rend(); ++it) v = it->invert(v, wb);
    return v & width_mask(wb);
}

bool MovePath::copies_only() const {
    return std::all_of(arcs.begin(), arcs.end(), [](const MoveArc& a) { return a.entry->kind == GadgetKind::MoveReg; });
}

RegSet MovePath::clobbers() const {
    RegSet s = 0;
    for (const auto& a : arcs) s |= a.entry->clobbers;
    return s;
}

double MovePath::cost() const {
    double c = 0;
    for (const auto& a : arcs) c += a.entry->score;
    return c;
}

MoveGraph::MoveGraph(const Catalog& catalog, std::size_t arcs_per_pair) {
    std::map<std::pair<RegId, RegId>, std::size_t> per_pair;
    auto take = [&](GadgetKind kind) {
        for (const SemanticEntry* e : catalog.query(kind)) {
            if (kind == GadgetKind::ArithConst && e->params.op != BinOp::add && e->params.op != BinOp::xor_) continue;
            RegId from = *e->params.in, to = *e->params.out;
            if (from == to && kind == GadgetKind::MoveReg) continue;
            auto& n = per_pair[{from, to}];
            if (n >= arcs_per_pair) continue;
            ++n;
            arcs_.push_back({e, from, to});
        }
    };
    take(GadgetKind::MoveReg);
    take(GadgetKind::ArithConst);
    take(GadgetKind::Neg);
    std::stable_sort(arcs_.begin(), arcs_.end(),
                     [](const MoveArc& a, const MoveArc& b) { return a.entry->score < b.entry->score; });
    by_to_.assign(catalog.profile.reg_count(), {});
    for (std::size_t i = 0; i < arcs_.size(); ++i) by_to_[arcs_[i].to].push_back(i);
}

std::vector<MovePath> MoveGraph::chains_into(RegId out, std::size_t limit, std::size_t max_len) const {
    std::vector<MovePath> found;
    // backwards DFS; `rev` holds arcs from the end
    std::vector<MoveArc> rev;
    std::uint64_t on_path = reg_bit(out);
    auto dfs = [&](auto&& self, RegId at) -> void {
        for (std::size_t i : by_to_[at]) {
            const MoveArc& a = arcs_[i];
            // self loops (inc, neg, ...) may appear once each
            if (a.from == a.to ? std::any_of(rev.begin(), rev.end(), [&](const MoveArc& r) { return r.entry == a.entry; })
                               : has_reg(on_path, a.from))
                continue;
            rev.push_back(a);
            MovePath p;
            p.arcs.assign(rev.rbegin(), rev.rend());
            p.from = a.from;
            p.to = out;
            found.push_back(std::move(p));
            if (rev.size() < max_len) {
                const bool fresh = !has_reg(on_path, a.from);
                on_path |= reg_bit(a.from);
                self(self, a.from);
                if (fresh) on_path &= ~reg_bit(a.from);
            }
            rev.pop_back();
        }
    };
    if (out < by_to_.size()) dfs(dfs, out);
    std::stable_sort(found.begin(), found.end(), [](const MovePath& a, const MovePath& b) {
        if (a.arcs.size() != b.arcs.size()) return a.arcs.size() < b.arcs.size();
        return a.cost() < b.cost();
    });
    if (found.size() > limit) found.resize(limit);
    return found;
}

std::vector<MovePath> MoveGraph::move_chains(RegId in, RegId out, std::size_t limit, std::size_t max_len) const {
    std::vector<MovePath> out_paths;
    if (in == out) {
        MovePath p;
        p.from = p.to = in;
        out_paths.push_back(p);
    }
    for (auto& p : chains_into(out, SIZE_MAX, max_len)) {
        if (out_paths.size() >= limit) break;
        if (p.from == in) out_paths.push_back(std::move(p));
    }
    return out_paths;
}

} // namespace majorca
