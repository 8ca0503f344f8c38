#include "majorca/synth.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <sstream>

#include "majorca/dlx.hpp"
#include "majorca/error.hpp"

namespace majorca {

IndexSumEnumerator::IndexSumEnumerator(std::vector<std::size_t> sizes, std::size_t cap)
    : sizes_(std::move(sizes)), cap_(cap) {
    for (auto s : sizes_) {
        if (s == 0) {
            cap_ = 0;
            return;
        }
        max_sum_ += s - 1;
    }
}

std::optional<std::vector<std::size_t>> IndexSumEnumerator::next() {
    while (pending_.empty()) {
        if (produced_ >= cap_ || sum_ > max_sum_) return std::nullopt;
        const std::size_t room = cap_ - produced_;
        std::vector<std::size_t> t(sizes_.size(), 0);
        auto gen = [&](auto&& self, std::size_t dim, std::size_t left) -> void {
            if (pending_.size() >= room) return;
            if (dim == sizes_.size()) {
                if (left == 0) pending_.push_back(t);
                return;
            }
            std::size_t hi = std::min(left, sizes_[dim] - 1);
            for (std::size_t v = 0; v <= hi; ++v) {
                t[dim] = v;
                self(self, dim + 1, left - v);
            }
            t[dim] = 0;
        };
        gen(gen, 0, sum_);
        std::reverse(pending_.begin(), pending_.end());
        ++sum_;
    }
    ++produced_;
    auto t = std::move(pending_.back());
    pending_.pop_back();
    return t;
}

namespace {

/// A register value a piece still needs from a LoadConst frame.
struct Leaf {
    RegId reg = 0;
    Word value = 0;
    bool text = false;
    int consumer = -1; // node in the piece, or -1: the leaf is the target output
    EdgeParam param = EdgeParam::In;
};

/// One way to produce a single target register.
struct Piece {
    GadgetDag dag;
    std::vector<Leaf> leaves;
    int producer = -1;
    int rank = 0;
    double cost = 0;
};

struct StorePlan {
    GadgetDag dag; // no dangling outputs
    int first = 0;
    int last = 0;
};

DagNode node_of(const SemanticEntry* e) {
    DagNode n;
    n.entry = *e;
    return n;
}

template <class T>
std::vector<T> first_n(std::vector<T> v, std::size_t n) {
    if (v.size() > n) v.resize(n);
    return v;
}

/// Merges `sub` into `d`, pointing its dangling register outputs at the
/// consumers chosen by `route`.
void attach(GadgetDag& d, const GadgetDag& sub, const std::function<std::pair<int, EdgeParam>(RegId)>& route) {
    std::size_t before = d.edges.size();
    d.merge(sub);
    for (std::size_t i = before; i < d.edges.size(); ++i) {
        auto& e = d.edges[i];
        if (e.to >= 0 || !e.reg) continue;
        auto [to, param] = route(*e.reg);
        e.to = to;
        e.param = param;
    }
}

bool schedulable(const GadgetDag& d) {
    if (validate(d)) return false;
    Scheduler s(schedule_graph(d));
    s.set_budget(4000);
    return s.next().has_value();
}

class Planner {
public:
    Planner(const Catalog& c, const SynthOptions& o)
        : cat_(c), opt_(o), moves_(c), wb_(c.profile.word_bytes) {}

    std::vector<GadgetDag> load(const std::vector<RegValue>& values, std::size_t limit);
    std::vector<StorePlan> store(Word address, Word value, bool text, std::size_t limit);

    const Catalog& catalog() const { return cat_; }
    bool clean(Word v) const { return screen(v, wb_, opt_.bad); }

private:
    bool loadable(RegId r) const { return !cat_.producers(GadgetKind::LoadConst, r).empty(); }
    Word mask() const { return width_mask(wb_); }

    Piece path_piece(const MovePath& path, int rank) const;
    /// Direct load, constant initializer, or either through a move chain.
    std::vector<Piece> provide_simple(const RegValue& t);
    std::vector<Piece> provide(const RegValue& t);
    void arith_pieces(const RegValue& t, std::vector<Piece>& out);
    std::vector<GadgetDag> assemble(const std::vector<RegValue>& values, const std::vector<const Piece*>& chosen);

    const Catalog& cat_;
    const SynthOptions& opt_;
    MoveGraph moves_;
    unsigned wb_;
    /// Other values of the group being loaded; an arithmetic input may reuse one.
    std::vector<RegValue> pins_;
};

Piece Planner::path_piece(const MovePath& path, int rank) const {
    Piece p;
    p.rank = rank;
    int prev = -1;
    for (const auto& a : path.arcs) {
        int n = p.dag.add_node(node_of(a.entry));
        if (prev >= 0) p.dag.add_edge(prev, n, EdgeParam::In, a.from);
        prev = n;
        p.cost += a.entry->score;
    }
    p.producer = prev;
    return p;
}

std::vector<Piece> Planner::provide(const RegValue& t) {
    std::vector<Piece> out = provide_simple(t);
    arith_pieces(t, out);
    std::stable_sort(out.begin(), out.end(), [](const Piece& a, const Piece& b) {
        return a.rank != b.rank ? a.rank < b.rank : a.cost < b.cost;
    });
    if (out.size() > opt_.options_per_target) out.resize(opt_.options_per_target);
    return out;
}

std::vector<Piece> Planner::provide_simple(const RegValue& t) {
    std::vector<Piece> out;
    if (loadable(t.reg) && clean(t.value)) {
        Piece p;
        p.leaves.push_back({t.reg, t.value, t.text, -1, EdgeParam::Arg});
        out.push_back(std::move(p));
    }
    for (const SemanticEntry* e : first_n(cat_.query(GadgetKind::InitConst, {.out = t.reg, .val = t.value}), 2)) {
        Piece p;
        p.producer = p.dag.add_node(node_of(e));
        p.rank = 1;
        p.cost = e->score;
        out.push_back(std::move(p));
    }
    for (const auto& path : moves_.chains_into(t.reg)) {
        Word w = path.invert(t.value, wb_);
        if (loadable(path.from) && clean(w)) {
            Piece p = path_piece(path, 2);
            p.leaves.push_back({path.from, w, t.text && path.copies_only(), 0, EdgeParam::In});
            out.push_back(std::move(p));
        }
        for (const SemanticEntry* e : first_n(cat_.query(GadgetKind::InitConst, {.out = path.from, .val = w}), 1)) {
            Piece p = path_piece(path, 3);
            int ic = p.dag.add_node(node_of(e));
            p.dag.add_edge(ic, 0, EdgeParam::In, path.from);
            p.cost += e->score;
            out.push_back(std::move(p));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Piece& a, const Piece& b) {
        return a.rank != b.rank ? a.rank < b.rank : a.cost < b.cost;
    });
    return out;
}

/// Wires `sub` (a piece producing `reg`) into input `param` of `node`.
void feed(Piece& into, int node, EdgeParam param, RegId reg, const Piece& sub) {
    int off = into.dag.merge(sub.dag);
    if (sub.producer >= 0) into.dag.add_edge(sub.producer + off, node, param, reg);
    for (Leaf l : sub.leaves) {
        if (l.consumer < 0) {
            l.consumer = node;
            l.param = param;
        } else {
            l.consumer += off;
        }
        into.leaves.push_back(l);
    }
    into.cost += sub.cost;
    into.rank = std::max(into.rank, 4 + sub.rank);
}

void Planner::arith_pieces(const RegValue& t, std::vector<Piece>& out) {
    std::size_t made = 0;
    for (const SemanticEntry* a : cat_.query(GadgetKind::Arithmetic)) {
        const BinOp op = a->params.op;
        if (op != BinOp::add && op != BinOp::sub && op != BinOp::xor_) continue;
        const RegId x = *a->params.in, y = *a->params.in2;
        for (const auto& path : moves_.move_chains(*a->params.out, t.reg, 2)) {
            const Word w = path.invert(t.value, wb_);
            auto make = [&]() {
                Piece p;
                p.rank = 4;
                p.cost = a->score + path.cost();
                int an = p.dag.add_node(node_of(a));
                int prev = an;
                for (const auto& arc : path.arcs) {
                    int n = p.dag.add_node(node_of(arc.entry));
                    p.dag.add_edge(prev, n, EdgeParam::In, arc.from);
                    prev = n;
                }
                p.producer = prev;
                return p;
            };
            auto combine = [&](const std::vector<Piece>& xs, const std::vector<Piece>& ys) {
                for (std::size_t i = 0; i < std::min<std::size_t>(xs.size(), 2); ++i) {
                    for (std::size_t j = 0; j < std::min<std::size_t>(ys.size(), 2); ++j) {
                        Piece p = make();
                        feed(p, 0, EdgeParam::In, x, xs[i]);
                        feed(p, 0, EdgeParam::In2, y, ys[j]);
                        out.push_back(std::move(p));
                        ++made;
                    }
                }
            };
            if (auto ops = find_operands(w, wb_, opt_.bad, op)) {
                combine(provide_simple({x, ops->first, false}), provide_simple({y, ops->second, false}));
            }
            for (const RegValue& pin : pins_) {
                if (pin.reg == t.reg || pin.text || x == y) continue;
                const Word h = pin.value;
                if (pin.reg == y) {
                    Word xv = op == BinOp::add ? w - h : op == BinOp::sub ? w + h : w ^ h;
                    combine(provide_simple({x, xv & mask(), false}), provide_simple({y, h, false}));
                } else if (pin.reg == x) {
                    Word yv = op == BinOp::add ? w - h : op == BinOp::sub ? h - w : w ^ h;
                    combine(provide_simple({x, h, false}), provide_simple({y, yv & mask(), false}));
                }
            }
            // a constant initializer feeding one input
            for (const SemanticEntry* ic : first_n(cat_.query(GadgetKind::InitConst, {.out = y}), 2)) {
                const Word c = ic->params.val;
                Word xv = op == BinOp::add ? w - c : op == BinOp::sub ? w + c : w ^ c;
                Piece icp;
                icp.producer = icp.dag.add_node(node_of(ic));
                icp.cost = ic->score;
                icp.rank = 1;
                combine(provide_simple({x, xv & mask(), false}), {icp});
            }
            for (const SemanticEntry* ic : first_n(cat_.query(GadgetKind::InitConst, {.out = x}), 2)) {
                const Word c = ic->params.val;
                Word yv = op == BinOp::add ? w - c : op == BinOp::sub ? c - w : w ^ c;
                Piece icp;
                icp.producer = icp.dag.add_node(node_of(ic));
                icp.cost = ic->score;
                icp.rank = 1;
                combine({icp}, provide_simple({y, yv & mask(), false}));
            }
            if (made >= opt_.options_per_target) return;
        }
    }
}

std::vector<GadgetDag> Planner::assemble(const std::vector<RegValue>& values,
                                         const std::vector<const Piece*>& chosen) {
    GadgetDag base;
    std::vector<Leaf> leaves;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const Piece& p = *chosen[i];
        int off = base.merge(p.dag);
        for (Leaf l : p.leaves) {
            if (l.consumer >= 0) l.consumer += off;
            leaves.push_back(l);
        }
        if (p.producer >= 0) base.add_output(p.producer + off, values[i].reg);
    }
    auto emit_loader = [&](GadgetDag& d, const SemanticEntry* e, const std::vector<std::size_t>& fed) {
        DagNode n = node_of(e);
        for (const auto& ld : e->params.loads) {
            for (std::size_t i : fed) {
                if (leaves[i].reg == ld.reg) {
                    n.stack_params.push_back({ld.offset, leaves[i].value, leaves[i].text});
                    break;
                }
            }
        }
        int node = d.add_node(std::move(n));
        for (std::size_t i : fed) {
            const Leaf& l = leaves[i];
            if (l.consumer < 0) d.add_output(node, l.reg);
            else d.add_edge(node, l.consumer, l.param, l.reg);
        }
    };
    auto same_value = [&](std::size_t i, std::size_t j) {
        return leaves[i].value == leaves[j].value && leaves[i].text == leaves[j].text;
    };

    std::map<RegId, std::vector<std::size_t>> by_reg;
    for (std::size_t i = 0; i < leaves.size(); ++i) by_reg[leaves[i].reg].push_back(i);
    RegSet conflict = 0;
    for (const auto& [reg, idx] : by_reg) {
        if (!std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return same_value(i, idx[0]); }))
            conflict |= reg_bit(reg);
    }
    // a register needing several values is loaded once per use, together with
    // the other inputs of the same consumer so they are live at once
    std::vector<bool> done(leaves.size(), false);
    auto best_loader = [&](RegSet need) -> const SemanticEntry* {
        const SemanticEntry* best = nullptr;
        for (const SemanticEntry* e : cat_.query(GadgetKind::LoadConst, {.loads = need})) {
            if (!best || std::popcount(e->outputs()) < std::popcount(best->outputs())) best = e;
        }
        return best;
    };
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (done[i] || !has_reg(conflict, leaves[i].reg)) continue;
        std::vector<std::size_t> group{i};
        RegSet need = reg_bit(leaves[i].reg);
        if (leaves[i].consumer >= 0) {
            for (std::size_t j = 0; j < leaves.size(); ++j) {
                if (j == i || done[j] || leaves[j].consumer != leaves[i].consumer) continue;
                if (has_reg(need, leaves[j].reg)) continue;
                group.push_back(j);
                need |= reg_bit(leaves[j].reg);
            }
        }
        const SemanticEntry* e = group.size() > 1 ? best_loader(need) : nullptr;
        if (!e) {
            group = {i};
            e = best_loader(reg_bit(leaves[i].reg));
        }
        if (!e) return {};
        for (std::size_t j : group) done[j] = true;
        emit_loader(base, e, group);
    }

    // remaining registers each carry one value and share a load
    std::vector<RegId> universe;
    for (const auto& [reg, idx] : by_reg) {
        if (std::any_of(idx.begin(), idx.end(), [&](std::size_t i) { return !done[i]; })) universe.push_back(reg);
    }
    RegSet umask = 0;
    std::map<RegId, int> column;
    for (std::size_t i = 0; i < universe.size(); ++i) {
        umask |= reg_bit(universe[i]);
        column[universe[i]] = static_cast<int>(i);
    }

    std::vector<std::vector<int>> rows;
    std::vector<std::vector<const SemanticEntry*>> row_entries;
    std::map<RegSet, std::size_t> row_of;
    if (!universe.empty()) {
        for (const SemanticEntry* e : cat_.query(GadgetKind::LoadConst)) {
            // outputs outside the universe are junk the scheduler orders around
            RegSet rs = e->outputs() & umask;
            if (rs == 0) continue;
            auto [it, fresh] = row_of.try_emplace(rs, rows.size());
            if (fresh) {
                std::vector<int> cols;
                for (RegId r : regs_of(rs)) cols.push_back(column[r]);
                rows.push_back(cols);
                row_entries.push_back({});
            }
            row_entries[it->second].push_back(e);
        }
        for (auto& es : row_entries) {
            std::stable_sort(es.begin(), es.end(), [&](const SemanticEntry* a, const SemanticEntry* b) {
                return std::popcount(a->outputs() & ~umask) < std::popcount(b->outputs() & ~umask);
            });
            if (es.size() > 2) es.resize(2);
        }
    }
    auto covers = exact_covers(static_cast<int>(universe.size()), rows, 64);
    auto cover_cost = [&](const std::vector<int>& c) {
        double s = 0;
        for (int r : c) {
            const SemanticEntry* e = row_entries[r].front();
            s += e->score + static_cast<double>(std::popcount(e->outputs() & ~umask));
        }
        return s;
    };
    std::stable_sort(covers.begin(), covers.end(),
                     [&](const auto& a, const auto& b) { return cover_cost(a) < cover_cost(b); });
    std::vector<GadgetDag> out;
    for (const auto& c : covers) {
        if (out.size() >= opt_.covers_per_plan) break;
        GadgetDag d = base;
        for (int r : c) {
            const SemanticEntry* e = row_entries[r].front();
            std::vector<std::size_t> fed;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (!done[i] && has_reg(umask, leaves[i].reg) && has_reg(e->outputs(), leaves[i].reg)) fed.push_back(i);
            }
            emit_loader(d, e, fed);
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<GadgetDag> Planner::load(const std::vector<RegValue>& values, std::size_t limit) {
    if (values.empty()) return {GadgetDag{}};
    std::vector<std::vector<Piece>> options;
    std::vector<std::size_t> sizes;
    pins_ = values;
    for (const auto& v : values) {
        options.push_back(provide(v));
        if (options.back().empty()) return {};
        sizes.push_back(options.back().size());
    }
    std::vector<GadgetDag> out;
    IndexSumEnumerator en(sizes, limit * 8);
    while (out.size() < limit && !opt_.expired()) {
        auto t = en.next();
        if (!t) break;
        std::vector<const Piece*> chosen;
        for (std::size_t i = 0; i < t->size(); ++i) chosen.push_back(&options[i][(*t)[i]]);
        for (auto& d : assemble(values, chosen)) {
            if (out.size() >= limit) break;
            if (schedulable(d)) out.push_back(std::move(d));
        }
    }
    return out;
}

std::vector<StorePlan> Planner::store(Word address, Word value, bool text, std::size_t limit) {
    std::vector<StorePlan> out;
    const std::size_t per = std::max<std::size_t>(1, opt_.covers_per_plan);
    // a plain register store
    for (const SemanticEntry* s : first_n(cat_.query(GadgetKind::StoreMem), opt_.plans_per_store)) {
        const RegId a = *s->params.addr, in = *s->params.in;
        if (a == in) continue;
        std::vector<RegValue> vals{{a, (address - static_cast<Word>(s->params.off)) & mask(), false},
                                   {in, value, text}};
        for (auto& ld : load(vals, per)) {
            StorePlan p;
            int sn = p.dag.add_node(node_of(s));
            attach(p.dag, ld, [&](RegId r) { return std::pair{sn, r == a ? EdgeParam::Addr : EdgeParam::In}; });
            p.first = p.last = sn;
            out.push_back(std::move(p));
            if (out.size() >= limit) return out;
        }
    }
    // a constant initializer followed by an arithmetic store that fixes it up
    for (const SemanticEntry* im : cat_.query(GadgetKind::InitMem)) {
        if (im->params.size != wb_) continue;
        const Word c = im->params.val;
        for (const SemanticEntry* as : first_n(cat_.query(GadgetKind::ArithStore), 4)) {
            const BinOp op = as->params.op;
            if (op != BinOp::add && op != BinOp::sub && op != BinOp::xor_) continue;
            const RegId a = *as->params.addr, in = *as->params.in;
            if (a == in) continue;
            Word x = op == BinOp::add ? value - c : op == BinOp::sub ? c - value : value ^ c;
            x &= mask();
            auto l1 = load({{*im->params.addr, (address - static_cast<Word>(im->params.off)) & mask(), false}}, 2);
            auto l2 = load({{a, (address - static_cast<Word>(as->params.off)) & mask(), false}, {in, x, false}}, 2);
            for (const auto& g1 : l1) {
                for (const auto& g2 : l2) {
                    StorePlan p;
                    int in_node = p.dag.add_node(node_of(im));
                    int as_node = p.dag.add_node(node_of(as));
                    p.dag.add_edge(in_node, as_node, EdgeParam::Dep, std::nullopt);
                    attach(p.dag, g1, [&](RegId) { return std::pair{in_node, EdgeParam::Addr}; });
                    attach(p.dag, g2,
                           [&](RegId r) { return std::pair{as_node, r == a ? EdgeParam::Addr : EdgeParam::In}; });
                    p.first = in_node;
                    p.last = as_node;
                    out.push_back(std::move(p));
                    if (out.size() >= limit) return out;
                }
            }
        }
    }
    return out;
}

struct TerminalOption {
    DagNode node;
    std::vector<RegValue> values;
    std::optional<RegId> jump_reg;
};

std::optional<Word> default_data_base(const Catalog& cat, const SynthOptions& opt) {
    if (opt.data_addr) return opt.data_addr;
    if (cat.writable.empty()) return std::nullopt;
    const AddressRange& r = cat.writable.front();
    const Word wb = cat.profile.word_bytes;
    Word start = (r.begin + wb - 1) / wb * wb;
    for (Word a = start, i = 0; a < r.end && i < 4096; a += wb, ++i) {
        if (screen(a, cat.profile.word_bytes, opt.bad)) return a;
    }
    return start;
}

} // namespace

ArgLayout layout_args(const Catalog& catalog, const std::vector<GoalArg>& args, const SynthOptions& options) {
    const ArchProfile& p = catalog.profile;
    const unsigned wb = p.word_bytes;
    ArgLayout out;
    std::optional<Word> base = default_data_base(catalog, options);
    Word bump = base.value_or(0);
    auto need_memory = [&]() {
        if (!base) throw Error("goal needs memory for strings or arrays but no writable address is known");
    };
    std::function<Word(const GoalArg&)> place = [&](const GoalArg& a) -> Word {
        switch (a.kind) {
        case GoalArg::Kind::integer: return a.value & p.mask();
        case GoalArg::Kind::string: {
            need_memory();
            std::vector<std::uint8_t> bytes(a.bytes.begin(), a.bytes.end());
            bytes.push_back(0);
            while (bytes.size() % wb) bytes.push_back(options.fill);
            Word at = bump;
            for (std::size_t i = 0; i < bytes.size(); i += wb)
                out.words.push_back({at + i, p.decode(bytes.data() + i, wb), true});
            bump += bytes.size();
            return at;
        }
        case GoalArg::Kind::array: {
            std::vector<Word> vals;
            for (const auto& item : a.items) vals.push_back(place(item));
            need_memory();
            vals.push_back(0);
            Word at = bump;
            for (std::size_t i = 0; i < vals.size(); ++i) out.words.push_back({at + i * wb, vals[i], false});
            bump += vals.size() * wb;
            return at;
        }
        }
        return 0;
    };
    for (const auto& a : args) out.values.push_back(place(a));
    if (!options.data_addr && !catalog.writable.empty() && bump > catalog.writable.front().end)
        throw Error("goal data does not fit the writable range");
    return out;
}

std::vector<GadgetDag> load_dags(const Catalog& catalog, const std::vector<RegValue>& values,
                                 const SynthOptions& options, std::size_t limit) {
    Planner p(catalog, options);
    return p.load(values, limit);
}

std::vector<GadgetDag> store_mem_dags(const Catalog& catalog, Word address, Word value, bool text,
                                      const SynthOptions& options, std::size_t limit) {
    Planner p(catalog, options);
    std::vector<GadgetDag> out;
    for (auto& sp : p.store(address, value, text, limit)) {
        sp.dag.add_output(sp.last, std::nullopt);
        out.push_back(std::move(sp.dag));
    }
    return out;
}

struct CandidateStream::Impl {
    Impl(const Catalog& c, const Goal& g, SynthOptions o) : cat(c), goal(g), opt(std::move(o)), planner(c, opt) {}

    const Catalog& cat;
    Goal goal;
    SynthOptions opt;
    Planner planner;
    std::vector<TerminalOption> terms;
    std::vector<std::vector<StorePlan>> stores;
    std::size_t term_idx = 0;
    std::vector<GadgetDag> finals;
    std::optional<IndexSumEnumerator> en;
    std::string diag;

    void call_options(Word target, const std::vector<Word>& vals, std::vector<TerminalOption>& out);
    void init();
    std::optional<GadgetDag> next();
};

void CandidateStream::Impl::call_options(Word target, const std::vector<Word>& vals,
                                         std::vector<TerminalOption>& out) {
    const ArchProfile& p = cat.profile;
    const unsigned wb = p.word_bytes;
    auto jumps = first_n(cat.query(GadgetKind::Jump), 3);
    if (!p.call_args.empty()) {
        if (vals.size() > p.call_args.size()) throw Error("too many call arguments for register passing");
        std::vector<RegValue> rv;
        RegSet argmask = 0;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            rv.push_back({p.call_args[i], vals[i], false});
            argmask |= reg_bit(p.call_args[i]);
        }
        if (planner.clean(target)) {
            TerminalOption t;
            t.node.direct_target = target;
            t.values = rv;
            out.push_back(std::move(t));
        }
        for (const SemanticEntry* j : jumps) {
            RegId r = *j->params.addr;
            if (has_reg(argmask, r) || (j->writes() & argmask)) continue;
            TerminalOption t;
            t.node = node_of(j);
            t.values = rv;
            t.values.push_back({r, target, false});
            t.jump_reg = r;
            out.push_back(std::move(t));
        }
        return;
    }
    // stack passing: a return-address word, then the arguments
    if (!std::all_of(vals.begin(), vals.end(), [&](Word v) { return planner.clean(v); })) return;
    auto params_at = [&](std::int64_t base) {
        std::vector<StackParam> sp;
        for (std::size_t i = 0; i < vals.size(); ++i)
            sp.push_back({base + static_cast<std::int64_t>(wb * (i + 1)), vals[i], false});
        return sp;
    };
    if (planner.clean(target)) {
        TerminalOption t;
        t.node.direct_target = target;
        t.node.stack_params = params_at(0);
        out.push_back(std::move(t));
    }
    for (const SemanticEntry* j : jumps) {
        TerminalOption t;
        t.node = node_of(j);
        t.node.stack_params = params_at(j->frame.frame_size);
        t.values.push_back({*j->params.addr, target, false});
        t.jump_reg = *j->params.addr;
        out.push_back(std::move(t));
    }
}

void CandidateStream::Impl::init() {
    const ArchProfile& p = cat.profile;
    // the first data base whose words can all be written; an address the
    // caller chose is the only candidate
    std::vector<std::optional<Word>> bases{opt.data_addr};
    if (!opt.data_addr) {
        if (auto b = default_data_base(cat, opt)) {
            const AddressRange& r = cat.writable.front();
            for (Word a = *b + 0x10; a + 0x100 < r.end && bases.size() < 8; a += 0x10) {
                if (planner.clean(a)) bases.push_back(a);
            }
        }
    }
    ArgLayout layout;
    for (const auto& base : bases) {
        SynthOptions o = opt;
        o.data_addr = base;
        layout = layout_args(cat, goal.args, base == bases.front() ? opt : o);
        stores.clear();
        diag.clear();
        for (const auto& w : layout.words) {
            stores.push_back(planner.store(w.address, w.value, w.text, opt.plans_per_store));
            if (stores.back().empty()) {
                std::ostringstream os;
                os << "no way to write 0x" << std::hex << w.value << " to 0x" << w.address;
                diag = os.str();
                break;
            }
        }
        if (diag.empty()) break;
    }
    if (!diag.empty()) return;
    std::vector<TerminalOption> sys, funcs;
    if (goal.kind == Goal::Kind::syscall) {
        std::optional<Word> number;
        if (p.syscall_table.contains(goal.name)) number = syscall_number(p, goal);
        for (const auto& f : cat.functions) {
            if (f.name == goal.name) call_options(f.address, layout.values, funcs);
        }
        if (!number && funcs.empty()) syscall_number(p, goal); // throws
        if (number) {
            if (goal.args.size() > p.syscall_args.size()) throw Error("too many system call arguments");
            std::vector<RegValue> rv{{p.syscall_number, *number, false}};
            RegSet argmask = reg_bit(p.syscall_number);
            for (std::size_t i = 0; i < layout.values.size(); ++i) {
                rv.push_back({p.syscall_args[i], layout.values[i], false});
                argmask |= reg_bit(p.syscall_args[i]);
            }
            auto gates = cat.query(GadgetKind::Syscall);
            if (p.syscall_interrupt) {
                for (auto* e : cat.query(GadgetKind::Int, {.val = *p.syscall_interrupt})) gates.push_back(e);
            }
            std::size_t taken = 0;
            for (const SemanticEntry* g : gates) {
                if (g->writes() & argmask) continue;
                TerminalOption t;
                t.node = node_of(g);
                t.values = rv;
                sys.push_back(std::move(t));
                if (++taken >= 3) break;
            }
        }
    } else {
        call_options(goal.target, layout.values, funcs);
    }
    for (std::size_t i = 0; i < std::max(sys.size(), funcs.size()); ++i) {
        if (i < sys.size()) terms.push_back(sys[i]);
        if (i < funcs.size()) terms.push_back(funcs[i]);
    }
    if (terms.empty()) {
        diag = goal.kind == Goal::Kind::syscall ? "no system call gadget or wrapper function"
                                                : "no way to transfer control to the call target";
        return;
    }
}

std::optional<GadgetDag> CandidateStream::Impl::next() {
    for (;;) {
        if (opt.expired()) return std::nullopt;
        if (!en) {
            if (term_idx >= terms.size()) {
                if (diag.empty()) diag = "no loadable arrangement of the goal registers";
                return std::nullopt;
            }
            finals = planner.load(terms[term_idx].values, opt.plans_per_group);
            if (finals.empty()) {
                ++term_idx;
                continue;
            }
            std::vector<std::size_t> sizes{finals.size()};
            for (const auto& s : stores) sizes.push_back(s.size());
            en.emplace(sizes, opt.tuples_per_terminal);
        }
        auto t = en->next();
        if (!t) {
            en.reset();
            ++term_idx;
            continue;
        }
        const TerminalOption& T = terms[term_idx];
        GadgetDag d;
        int term = d.add_node(T.node);
        attach(d, finals[(*t)[0]], [&](RegId r) {
            return std::pair{term, T.jump_reg && *T.jump_reg == r ? EdgeParam::Addr : EdgeParam::Arg};
        });
        int prev = -1;
        for (std::size_t k = 0; k < stores.size(); ++k) {
            const StorePlan& sp = stores[k][(*t)[k + 1]];
            int base = d.merge(sp.dag);
            if (prev >= 0) d.add_edge(prev, base + sp.first, EdgeParam::Dep, std::nullopt);
            prev = base + sp.last;
        }
        if (prev >= 0) d.add_edge(prev, term, EdgeParam::Dep, std::nullopt);
        d.add_output(term, std::nullopt);
        return d;
    }
}

CandidateStream::CandidateStream(const Catalog& catalog, const Goal& goal, SynthOptions options)
    : impl_(std::make_unique<Impl>(catalog, goal, std::move(options))) {
    impl_->init();
}
CandidateStream::~CandidateStream() = default;
CandidateStream::CandidateStream(CandidateStream&&) noexcept = default;

std::optional<GadgetDag> CandidateStream::next() { return impl_->next(); }
const std::string& CandidateStream::diagnostic() const { return impl_->diag; }

} // namespace majorca
