#include "majorca/catalog.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "majorca/error.hpp"

namespace majorca {

double score(const ArchProfile& profile, const SemanticEntry& e) {
    double clobbered = static_cast<double>(reg_count(e.clobbers) * profile.word_bytes);
    double frame = 1e7 * static_cast<double>(e.frame.frame_size);
    if (writes_memory(e.kind)) {
        unsigned stored = e.stored_bytes(profile.word_bytes);
        if (stored > 0) frame /= stored;
    }
    return clobbered + frame;
}

std::vector<SemanticEntry> derive_pop_combinations(const std::vector<SemanticEntry>& same_address) {
    std::vector<StackLoad> loads;
    for (const auto& e : same_address) {
        if (e.kind != GadgetKind::LoadConst) continue;
        for (const auto& l : e.params.loads) {
            bool dup = std::any_of(loads.begin(), loads.end(), [&](const StackLoad& x) { return x.reg == l.reg; });
            if (!dup) loads.push_back(l);
        }
    }
    if (loads.empty()) return {};
    std::sort(loads.begin(), loads.end());
    const SemanticEntry& proto = same_address.front();
    RegSet all = 0;
    for (const auto& l : loads) all |= reg_bit(l.reg);
    const RegSet base = (proto.clobbers | proto.outputs()) & ~all;

    std::vector<SemanticEntry> out;
    const std::size_t k = loads.size();
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << k); ++mask) {
        SemanticEntry e = proto;
        e.params = Params{};
        RegSet chosen = 0;
        std::set<std::int64_t> offsets;
        bool clash = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (!((mask >> i) & 1)) continue;
            if (!offsets.insert(loads[i].offset).second) clash = true;
            e.params.loads.push_back(loads[i]);
            chosen |= reg_bit(loads[i].reg);
        }
        if (clash) continue;
        e.clobbers = base | (all & ~chosen);
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

RegSet read_regs(const ArchProfile& p, const std::vector<MicroOp>& ops) {
    auto t = run_gadget(p, ops, InitConfig{InitPolicy::random, 0x5eed, 0});
    RegSet s = 0;
    for (RegId r : t.reg_reads) {
        if (p.is_data_reg(r)) s |= reg_bit(r);
    }
    return s;
}

} // namespace

std::vector<SemanticEntry> combine_jop(const ArchProfile& p, const std::vector<RawGadget>& gadgets,
                                       const std::vector<SemanticEntry>& classified, const ClassifyOptions& options) {
    std::map<Word, const RawGadget*> by_addr;
    for (const auto& g : gadgets) by_addr.emplace(g.address, &g);

    struct Jop {
        const SemanticEntry* entry;
        RegSet reads;
    };
    std::vector<Jop> jops;
    for (const auto& e : classified) {
        if (e.kind != GadgetKind::Jump || !e.params.addr) continue;
        if (terminator_of(e.ops).kind != TermKind::jmp_reg) continue;
        jops.push_back({&e, read_regs(p, e.ops)});
    }
    if (jops.empty()) return {};

    std::vector<SemanticEntry> out;
    for (const auto& loader : classified) {
        if (loader.kind != GadgetKind::LoadConst || loader.params.loads.size() != 1) continue;
        if (!loader.frame.next_ip_slot || loader.jop_address) continue;
        const TermKind lt = terminator_of(loader.ops).kind;
        if (lt != TermKind::ret && lt != TermKind::jmp_reg) continue;
        const StackLoad target = loader.params.loads.front();
        const RegSet loader_writes = (loader.clobbers | loader.outputs()) & ~reg_bit(target.reg);
        for (const auto& jop : jops) {
            if (*jop.entry->params.addr != target.reg) continue;
            if (jop.entry->address == loader.address) continue;
            if (loader_writes & jop.reads & ~reg_bit(target.reg)) continue;

            RawGadget combined;
            combined.address = loader.address;
            combined.asm_text = loader.asm_text + " # " + jop.entry->asm_text;
            combined.ops.assign(loader.ops.begin(), loader.ops.end() - 1);
            if (lt == TermKind::ret) combined.ops.push_back(AdjustSP{static_cast<std::int64_t>(p.word_bytes)});
            combined.ops.insert(combined.ops.end(), jop.entry->ops.begin(), jop.entry->ops.end());

            const std::int64_t fixed = *loader.frame.next_ip_slot;
            for (auto e : classify(p, combined, options)) {
                if (!preserves_control(e.kind) || !e.frame.next_ip_slot) continue;
                if (*e.frame.next_ip_slot != target.offset) continue;
                if (e.kind == GadgetKind::LoadConst) {
                    std::erase_if(e.params.loads, [&](const StackLoad& l) { return l.offset == fixed; });
                    if (e.params.loads.empty()) continue;
                }
                e.frame.fixed.push_back(FixedSlot{fixed, jop.entry->address, jop.entry->asm_text});
                e.jop_address = jop.entry->address;
                e.jop_asm = jop.entry->asm_text;
                out.push_back(std::move(e));
            }
        }
    }
    return out;
}

namespace {

bool subset(RegSet a, RegSet b) { return (a & ~b) == 0; }

RegSet load_regs(const SemanticEntry& e) {
    RegSet s = 0;
    for (const auto& l : e.params.loads) s |= reg_bit(l.reg);
    return s;
}

auto tie_key(const SemanticEntry& e) { return std::make_tuple(e.address, e.jop_address.value_or(0)); }

/// True when `b` makes `a` redundant: no larger frame, no more clobbers, and
/// strictly better or equal with a lower address.
bool dominated(const SemanticEntry& a, const SemanticEntry& b) {
    if (b.frame.frame_size > a.frame.frame_size || !subset(b.clobbers, a.clobbers)) return false;
    bool strict = b.frame.frame_size < a.frame.frame_size || b.clobbers != a.clobbers;
    return strict || tie_key(b) < tie_key(a);
}

bool same_semantics(const SemanticEntry& a, const SemanticEntry& b) { return a.kind == b.kind && a.params == b.params; }

} // namespace

std::vector<SemanticEntry> filter_entries(const ArchProfile& p, std::vector<SemanticEntry> entries,
                                          const FilterOptions& options) {
    // hard rules
    std::erase_if(entries, [&](const SemanticEntry& e) {
        if (e.frame.frame_size > options.frame_limit) return true;
        if (!screen_address(p, e.address, options.bad, options.address_screen)) return true;
        if (e.jop_address && !screen_address(p, *e.jop_address, options.bad, options.address_screen)) return true;
        return false;
    });

    // exact duplicates: same text and semantics, keep the lowest address
    std::sort(entries.begin(), entries.end(), [](const SemanticEntry& a, const SemanticEntry& b) {
        return tie_key(a) < tie_key(b);
    });
    {
        std::vector<SemanticEntry> unique;
        for (auto& e : entries) {
            bool dup = std::any_of(unique.begin(), unique.end(), [&](const SemanticEntry& u) {
                return u.asm_text == e.asm_text && same_semantics(u, e) && u.clobbers == e.clobbers &&
                       u.frame.frame_size == e.frame.frame_size;
            });
            if (!dup) unique.push_back(std::move(e));
        }
        entries = std::move(unique);
    }

    // maximal elements
    std::vector<bool> removed(entries.size(), false);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& a = entries[i];
        for (std::size_t j = 0; j < entries.size() && !removed[i]; ++j) {
            if (i == j || removed[j]) continue;
            const auto& b = entries[j];
            if (same_semantics(a, b)) {
                if (dominated(a, b)) removed[i] = true;
            } else if (a.kind == GadgetKind::LoadConst && b.kind == GadgetKind::LoadConst &&
                       tie_key(a) != tie_key(b)) {
                // a loads a subset of b's registers, b clobbers a subset of a's
                RegSet la = load_regs(a), lb = load_regs(b);
                if (la != lb && subset(la, lb) && subset(b.clobbers, a.clobbers) &&
                    b.frame.frame_size <= a.frame.frame_size) {
                    removed[i] = true;
                }
            }
        }
    }
    std::vector<SemanticEntry> kept;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (removed[i]) continue;
        entries[i].score = score(p, entries[i]);
        kept.push_back(std::move(entries[i]));
    }
    return kept;
}

bool EntryQuery::matches(const SemanticEntry& e) const {
    const Params& q = e.params;
    if (in && q.in != in) return false;
    if (in2 && q.in2 != in2) return false;
    if (out && q.out != out) return false;
    if (addr && q.addr != addr) return false;
    if (off && q.off != *off) return false;
    if (val && q.val != *val) return false;
    if (op && q.op != *op) return false;
    if (loads && load_regs(e) != *loads) return false;
    if (e.clobbers & avoid_clobbers) return false;
    return true;
}

Catalog::Catalog(ArchProfile p, std::vector<SemanticEntry> entries) : profile(std::move(p)) {
    set_entries(std::move(entries));
}

void Catalog::set_entries(std::vector<SemanticEntry> entries) {
    entries_ = std::move(entries);
    reindex();
}

void Catalog::reindex() {
    std::vector<std::size_t> order(entries_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = entries_[a];
        const auto& y = entries_[b];
        return std::make_tuple(x.score, x.frame.frame_size, x.address, x.jop_address.value_or(0)) <
               std::make_tuple(y.score, y.frame.frame_size, y.address, y.jop_address.value_or(0));
    });
    by_kind_.assign(kGadgetKindCount, {});
    by_kind_reg_.clear();
    for (std::size_t i : order) {
        const auto& e = entries_[i];
        by_kind_[static_cast<int>(e.kind)].push_back(i);
        for (RegId r : regs_of(e.outputs())) by_kind_reg_[{static_cast<int>(e.kind), r}].push_back(i);
    }
    gadget_index_.clear();
    for (std::size_t i = 0; i < gadgets.size(); ++i) gadget_index_.emplace(gadgets[i].address, i);
}

std::vector<const SemanticEntry*> Catalog::query(GadgetKind kind, const EntryQuery& q) const {
    std::vector<const SemanticEntry*> out;
    if (by_kind_.empty()) return out;
    for (std::size_t i : by_kind_[static_cast<int>(kind)]) {
        if (q.matches(entries_[i])) out.push_back(&entries_[i]);
    }
    return out;
}

std::vector<const SemanticEntry*> Catalog::producers(GadgetKind kind, RegId reg) const {
    std::vector<const SemanticEntry*> out;
    auto it = by_kind_reg_.find({static_cast<int>(kind), reg});
    if (it == by_kind_reg_.end()) return out;
    for (std::size_t i : it->second) out.push_back(&entries_[i]);
    return out;
}

const RawGadget* Catalog::gadget_at(Word address) const {
    if (gadget_index_.size() != gadgets.size()) {
        for (const auto& g : gadgets) {
            if (g.address == address) return &g;
        }
        return nullptr;
    }
    auto it = gadget_index_.find(address);
    return it == gadget_index_.end() ? nullptr : &gadgets[it->second];
}

bool Catalog::has_syscall() const {
    for (const auto& e : entries_) {
        if (e.kind == GadgetKind::Syscall) return true;
        if (e.kind == GadgetKind::Int && profile.syscall_interrupt && e.params.val == *profile.syscall_interrupt)
            return true;
    }
    return false;
}

Catalog build_catalog(const Corpus& corpus, const CatalogOptions& options) {
    const ArchProfile& p = corpus.profile;
    std::vector<RawGadget> gadgets;
    std::set<Word> seen;
    for (const auto& g : corpus.gadgets) {
        if (seen.insert(g.address).second) gadgets.push_back(g);
    }

    CatalogStats stats;
    stats.gadgets = gadgets.size();
    std::vector<SemanticEntry> classified;
    for (const auto& g : gadgets) {
        auto es = classify(p, g, options.classify);
        classified.insert(classified.end(), es.begin(), es.end());
    }
    stats.classified = classified.size();

    auto jop = combine_jop(p, gadgets, classified, options.classify);
    stats.jop = jop.size();

    // pop combinations per (address, jop address)
    std::vector<SemanticEntry> all;
    std::map<std::pair<Word, Word>, std::vector<SemanticEntry>> loads;
    auto take = [&](std::vector<SemanticEntry>& from) {
        for (auto& e : from) {
            if (e.kind == GadgetKind::LoadConst) loads[{e.address, e.jop_address.value_or(0)}].push_back(std::move(e));
            else all.push_back(std::move(e));
        }
    };
    take(classified);
    take(jop);
    for (auto& [key, group] : loads) {
        auto derived = derive_pop_combinations(group);
        stats.derived += derived.size();
        all.insert(all.end(), derived.begin(), derived.end());
    }

    auto kept = filter_entries(p, std::move(all), options.filter);
    stats.kept = kept.size();

    Catalog cat;
    cat.profile = p;
    cat.writable = corpus.writable;
    cat.functions = corpus.functions;
    cat.gadgets = std::move(gadgets);
    cat.stats = stats;
    cat.set_entries(std::move(kept));
    return cat;
}

} // namespace majorca
