#include "majorca/classify.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "majorca/error.hpp"

namespace majorca {

namespace {

constexpr std::array<std::string_view, kGadgetKindCount> kKindNames = {
    "NoOp",      "Jump",     "MoveReg",    "LoadConst",  "Arithmetic", "LoadMem", "StoreMem",
    "ArithLoad", "ArithStore", "JumpMem",  "InitConst",  "Neg",        "ArithConst", "InitMem",
    "ShiftStack", "StackPivot", "ArithStack", "GetSP",   "ArithSP",    "PushAll", "JumpSP",
    "Call",      "CallMem",  "Int",        "Syscall",
};

constexpr std::int64_t kMaxOffset = 0x1000;
constexpr Word kMaxSpAdjust = 0x100;

constexpr std::array<BinOp, 5> kArithOps = {BinOp::add, BinOp::sub, BinOp::xor_, BinOp::and_, BinOp::or_};

bool commutative(BinOp op) { return op != BinOp::sub; }

std::string hex(Word v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

std::string signed_hex(std::int64_t v) { return v < 0 ? "-" + hex(static_cast<Word>(-v)) : hex(static_cast<Word>(v)); }

/// Initial/final value accessors for one trace.
class View {
public:
    View(const ArchProfile& p, const ExecutionTrace& t) : p_(p), t_(t), probe_(p, t.init) {}

    Word I(RegId r) const { return t_.initial_regs.at(r); }
    Word F(RegId r) const { return t_.final_regs.at(r); }
    Word sp() const { return t_.initial_sp; }
    Word M0(Word a, unsigned w) const { return probe_.initial_mem(a & p_.mask(), w); }
    Word MF(Word a, unsigned w) const {
        a &= p_.mask();
        std::vector<std::uint8_t> bytes(w);
        for (unsigned i = 0; i < w; ++i) {
            auto it = t_.final_memory.find(a + i);
            bytes[i] = it != t_.final_memory.end() ? it->second : static_cast<std::uint8_t>(probe_.initial_mem(a + i, 1));
        }
        return p_.decode(bytes.data(), w);
    }
    Word stack_word(std::int64_t off) const { return M0(sp() + static_cast<Word>(off), p_.word_bytes); }
    std::int64_t stack_offset(Word a) const { return static_cast<std::int64_t>((a - sp()) & p_.mask()) ; }
    bool on_stack(Word a) const {
        Word d = (a - sp()) & p_.mask();
        Word nd = (sp() - a) & p_.mask();
        return d < static_cast<Word>(kStackWindow) || nd < static_cast<Word>(kStackWindow);
    }
    const ExecutionTrace& trace() const { return t_; }

private:
    const ArchProfile& p_;
    const ExecutionTrace& t_;
    MachineState probe_;
};

std::optional<std::int64_t> signed_diff(const ArchProfile& p, Word a, Word b) {
    Word d = (a - b) & p.mask();
    Word nd = (b - a) & p.mask();
    if (d <= static_cast<Word>(kMaxOffset)) return static_cast<std::int64_t>(d);
    if (nd <= static_cast<Word>(kMaxOffset)) return -static_cast<std::int64_t>(nd);
    return std::nullopt;
}

bool register_only(GadgetKind k) {
    switch (k) {
    case GadgetKind::NoOp:
    case GadgetKind::MoveReg:
    case GadgetKind::LoadConst:
    case GadgetKind::Arithmetic:
    case GadgetKind::InitConst:
    case GadgetKind::Neg:
    case GadgetKind::ArithConst:
    case GadgetKind::GetSP:
    case GadgetKind::ArithSP:
    case GadgetKind::ShiftStack: return true;
    default: return false;
    }
}

bool terminator_is_jump(TermKind k) {
    return k == TermKind::ret || k == TermKind::jmp_reg || k == TermKind::jmp_mem;
}

/// Non-stack memory accesses are allowed only inside [lo, lo+size).
bool accesses_within(const ArchProfile& p, const View& v, std::optional<Word> lo, unsigned size) {
    auto ok = [&](const MemAccess& m) {
        if (v.on_stack(m.address)) return true;
        if (!lo) return false;
        Word d = (m.address - *lo) & p.mask();
        return d < size && d + m.width <= size;
    };
    const auto& t = v.trace();
    return std::all_of(t.mem_reads.begin(), t.mem_reads.end(), ok) &&
           std::all_of(t.mem_writes.begin(), t.mem_writes.end(), ok);
}

/// The gadget never writes its own frame or the caller's stack above SP.
bool frame_untouched(const View& v) {
    for (const auto& m : v.trace().mem_writes) {
        if (v.on_stack(m.address) && m.address >= v.sp()) return false;
    }
    return true;
}

bool frame_holds(const ArchProfile& p, const SemanticEntry& e, const View& v) {
    const auto& t = v.trace();
    if (!e.frame.next_ip_slot) return false;
    if (t.sp_delta != e.frame.frame_size) return false;
    if (!terminator_is_jump(t.terminator.kind)) return false;
    if (t.ip != v.stack_word(*e.frame.next_ip_slot)) return false;
    (void)p;
    return frame_untouched(v);
}

RegSet changed_regs(const ArchProfile& p, const ExecutionTrace& t) {
    RegSet s = 0;
    for (RegId r : p.data_regs()) {
        if (t.initial_regs[r] != t.final_regs[r]) s |= reg_bit(r);
    }
    return s;
}

bool check(const ArchProfile& p, const SemanticEntry& e, const View& v) {
    const auto& t = v.trace();
    if (t.unusable) return false;
    const Params& q = e.params;
    const unsigned wb = p.word_bytes;
    const Word mask = p.mask();
    auto I = [&](std::optional<RegId> r) { return v.I(*r); };
    auto F = [&](std::optional<RegId> r) { return v.F(*r); };
    auto addr_of = [&]() { return (v.I(*q.addr) + static_cast<Word>(q.off)) & mask; };

    if (preserves_control(e.kind) && e.kind != GadgetKind::PushAll) {
        if (!frame_holds(p, e, v)) return false;
    }
    if (register_only(e.kind) && !accesses_within(p, v, std::nullopt, 0)) return false;

    switch (e.kind) {
    case GadgetKind::NoOp:
        return t.sp_delta == static_cast<std::int64_t>(wb) && changed_regs(p, t) == 0 && t.mem_writes.empty();
    case GadgetKind::MoveReg: return F(q.out) == I(q.in);
    case GadgetKind::LoadConst:
        for (const auto& l : q.loads) {
            if (v.F(l.reg) != v.stack_word(l.offset)) return false;
        }
        return !q.loads.empty();
    case GadgetKind::Arithmetic: return F(q.out) == apply(q.op, I(q.in), I(q.in2), wb);
    case GadgetKind::LoadMem:
        return accesses_within(p, v, addr_of(), wb) && F(q.out) == v.M0(addr_of(), wb);
    case GadgetKind::StoreMem:
        return accesses_within(p, v, addr_of(), wb) && v.MF(addr_of(), wb) == I(q.in);
    case GadgetKind::ArithLoad:
        return accesses_within(p, v, addr_of(), wb) && F(q.out) == apply(q.op, I(q.out), v.M0(addr_of(), wb), wb);
    case GadgetKind::ArithStore:
        return accesses_within(p, v, addr_of(), wb) &&
               v.MF(addr_of(), wb) == apply(q.op, v.M0(addr_of(), wb), I(q.in), wb);
    case GadgetKind::InitConst: return F(q.out) == q.val;
    case GadgetKind::Neg: return F(q.out) == apply(BinOp::neg, I(q.in), 0, wb);
    case GadgetKind::ArithConst: return F(q.out) == apply(q.op, I(q.in), q.val, wb);
    case GadgetKind::InitMem:
        return accesses_within(p, v, addr_of(), q.size) && v.MF(addr_of(), q.size) == q.val;
    case GadgetKind::ShiftStack: {
        std::int64_t delta = q.op == BinOp::add ? q.off : -q.off;
        if (t.sp_delta != delta || changed_regs(p, t) != 0 || !t.mem_writes.empty()) return false;
        if (t.terminator.kind != TermKind::ret) return false;
        return t.ip == v.stack_word(delta - static_cast<std::int64_t>(wb));
    }
    case GadgetKind::GetSP: return F(q.out) == v.sp();
    case GadgetKind::ArithSP: return F(q.out) == apply(q.op, I(q.in), v.sp(), wb);
    case GadgetKind::PushAll: {
        static constexpr const char* order[] = {"eax", "ecx", "edx", "ebx", "esp", "ebp", "esi", "edi"};
        if (p.id != ArchId::x86_32) return false;
        for (int i = 0; i < 8; ++i) {
            Word expect = v.I(*p.find_reg(order[i]));
            if (v.MF(v.sp() - 4 * (i + 1), 4) != expect) return false;
        }
        return accesses_within(p, v, std::nullopt, 0);
    }
    case GadgetKind::Jump:
        return terminator_is_jump(t.terminator.kind) && t.ip == I(q.addr) && accesses_within(p, v, std::nullopt, 0);
    case GadgetKind::JumpMem:
        return terminator_is_jump(t.terminator.kind) && accesses_within(p, v, addr_of(), wb) &&
               t.ip == v.M0(addr_of(), wb);
    case GadgetKind::JumpSP:
        return terminator_is_jump(t.terminator.kind) && ((t.ip - v.sp()) & mask) == q.val &&
               accesses_within(p, v, std::nullopt, 0);
    case GadgetKind::StackPivot: return ((v.F(p.sp) - I(q.in)) & mask) == q.val;
    case GadgetKind::ArithStack: return ((v.F(p.sp) - apply(q.op, v.sp(), I(q.in), wb)) & mask) == q.val;
    case GadgetKind::Call:
        return t.terminator.kind == TermKind::call_reg && t.ip == I(q.addr) && accesses_within(p, v, std::nullopt, 0);
    case GadgetKind::CallMem:
        return t.terminator.kind == TermKind::call_mem && accesses_within(p, v, addr_of(), wb) &&
               t.ip == v.M0(addr_of(), wb);
    case GadgetKind::Int:
        return t.terminator.kind == TermKind::interrupt && t.terminator.vector == q.val &&
               accesses_within(p, v, std::nullopt, 0);
    case GadgetKind::Syscall:
        return t.terminator.kind == TermKind::syscall && accesses_within(p, v, std::nullopt, 0);
    }
    return false;
}

void sort_loads(Params& q) { std::sort(q.loads.begin(), q.loads.end()); }

} // namespace

std::string_view to_string(GadgetKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

std::optional<GadgetKind> parse_gadget_kind(std::string_view text) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == text) return static_cast<GadgetKind>(i);
    }
    return std::nullopt;
}

bool preserves_control(GadgetKind kind) {
    switch (kind) {
    case GadgetKind::Jump:
    case GadgetKind::JumpMem:
    case GadgetKind::StackPivot:
    case GadgetKind::ArithStack:
    case GadgetKind::PushAll:
    case GadgetKind::JumpSP:
    case GadgetKind::Call:
    case GadgetKind::CallMem:
    case GadgetKind::Int:
    case GadgetKind::Syscall:
    case GadgetKind::ShiftStack: // decided per entry by its frame
        return false;
    default: return true;
    }
}

bool writes_memory(GadgetKind kind) {
    return kind == GadgetKind::StoreMem || kind == GadgetKind::ArithStore || kind == GadgetKind::InitMem;
}

std::vector<RegId> regs_of(RegSet s) {
    std::vector<RegId> out;
    for (RegId r = 0; r < 64; ++r) {
        if (has_reg(s, r)) out.push_back(r);
    }
    return out;
}

std::vector<std::string_view> param_names(GadgetKind kind) {
    switch (kind) {
    case GadgetKind::NoOp: return {};
    case GadgetKind::Jump: return {"AddrR"};
    case GadgetKind::MoveReg: return {"InR", "OutR"};
    case GadgetKind::LoadConst: return {"OutR", "Off"};
    case GadgetKind::Arithmetic: return {"InR1", "InR2", "OutR", "op"};
    case GadgetKind::LoadMem: return {"AddrR", "OutR", "Off"};
    case GadgetKind::StoreMem: return {"AddrR", "InR", "Off"};
    case GadgetKind::ArithLoad: return {"AddrR", "OutR", "Off", "op"};
    case GadgetKind::ArithStore: return {"AddrR", "InR", "Off", "op"};
    case GadgetKind::JumpMem: return {"AddrR", "Off"};
    case GadgetKind::InitConst: return {"OutR", "Val"};
    case GadgetKind::Neg: return {"InR", "OutR"};
    case GadgetKind::ArithConst: return {"InR", "OutR", "Val", "op"};
    case GadgetKind::InitMem: return {"AddrR", "Val", "Off", "Size"};
    case GadgetKind::ShiftStack: return {"Off", "op"};
    case GadgetKind::StackPivot: return {"InR"};
    case GadgetKind::ArithStack: return {"InR", "op"};
    case GadgetKind::GetSP: return {"OutR"};
    case GadgetKind::ArithSP: return {"InR", "OutR", "op"};
    case GadgetKind::PushAll: return {};
    case GadgetKind::JumpSP: return {};
    case GadgetKind::Call: return {"AddrR"};
    case GadgetKind::CallMem: return {"AddrR", "Off"};
    case GadgetKind::Int: return {"Value"};
    case GadgetKind::Syscall: return {};
    }
    return {};
}

RegSet SemanticEntry::outputs() const {
    switch (kind) {
    case GadgetKind::LoadConst: {
        RegSet s = 0;
        for (const auto& l : params.loads) s |= reg_bit(l.reg);
        return s;
    }
    case GadgetKind::MoveReg:
    case GadgetKind::Arithmetic:
    case GadgetKind::LoadMem:
    case GadgetKind::ArithLoad:
    case GadgetKind::InitConst:
    case GadgetKind::Neg:
    case GadgetKind::ArithConst:
    case GadgetKind::GetSP:
    case GadgetKind::ArithSP: return reg_bit(*params.out);
    default: return 0;
    }
}

RegSet SemanticEntry::inputs() const {
    RegSet s = 0;
    auto add = [&](const std::optional<RegId>& r) {
        if (r) s |= reg_bit(*r);
    };
    switch (kind) {
    case GadgetKind::MoveReg:
    case GadgetKind::Neg:
    case GadgetKind::ArithConst:
    case GadgetKind::StackPivot:
    case GadgetKind::ArithStack:
    case GadgetKind::ArithSP: add(params.in); break;
    case GadgetKind::Arithmetic: add(params.in); add(params.in2); break;
    case GadgetKind::LoadMem:
    case GadgetKind::JumpMem:
    case GadgetKind::InitMem:
    case GadgetKind::Jump:
    case GadgetKind::Call:
    case GadgetKind::CallMem: add(params.addr); break;
    case GadgetKind::StoreMem:
    case GadgetKind::ArithStore: add(params.addr); add(params.in); break;
    case GadgetKind::ArithLoad: add(params.addr); add(params.out); break;
    default: break;
    }
    return s;
}

unsigned SemanticEntry::stored_bytes(unsigned word_bytes) const {
    switch (kind) {
    case GadgetKind::StoreMem:
    case GadgetKind::ArithStore: return params.size ? params.size : word_bytes;
    case GadgetKind::InitMem: return params.size;
    default: return 0;
    }
}

std::string describe(const ArchProfile& p, const SemanticEntry& e) {
    std::ostringstream os;
    os << to_string(e.kind) << "(";
    const Params& q = e.params;
    auto r = [&](const std::optional<RegId>& x) { return x ? p.reg_name(*x) : std::string("?"); };
    auto disp = [](std::int64_t v) { return (v < 0 ? "" : "+") + signed_hex(v); };
    std::string opname(to_string(q.op));
    switch (e.kind) {
    case GadgetKind::LoadConst:
        for (std::size_t i = 0; i < q.loads.size(); ++i) {
            os << (i ? ", " : "") << p.reg_name(q.loads[i].reg) << "@" << signed_hex(q.loads[i].offset);
        }
        break;
    case GadgetKind::Jump:
    case GadgetKind::Call: os << r(q.addr); break;
    case GadgetKind::MoveReg:
    case GadgetKind::Neg: os << r(q.in) << "->" << r(q.out); break;
    case GadgetKind::Arithmetic: os << r(q.out) << "=" << r(q.in) << " " << opname << " " << r(q.in2); break;
    case GadgetKind::LoadMem: os << r(q.out) << "=[" << r(q.addr) << disp(q.off) << "]"; break;
    case GadgetKind::StoreMem: os << "[" << r(q.addr) << disp(q.off) << "]=" << r(q.in); break;
    case GadgetKind::ArithLoad: os << r(q.out) << " " << opname << "=[" << r(q.addr) << disp(q.off) << "]"; break;
    case GadgetKind::ArithStore: os << "[" << r(q.addr) << disp(q.off) << "] " << opname << "=" << r(q.in); break;
    case GadgetKind::JumpMem:
    case GadgetKind::CallMem: os << "[" << r(q.addr) << disp(q.off) << "]"; break;
    case GadgetKind::InitConst: os << r(q.out) << "=" << hex(q.val); break;
    case GadgetKind::ArithConst: os << r(q.out) << "=" << r(q.in) << " " << opname << " " << hex(q.val); break;
    case GadgetKind::InitMem: os << "[" << r(q.addr) << disp(q.off) << "]:" << q.size << "=" << hex(q.val); break;
    case GadgetKind::ShiftStack: os << opname << " " << hex(static_cast<Word>(q.off)); break;
    case GadgetKind::StackPivot: os << r(q.in); break;
    case GadgetKind::ArithStack: os << opname << " " << r(q.in); break;
    case GadgetKind::GetSP: os << r(q.out); break;
    case GadgetKind::ArithSP: os << r(q.out) << "=" << r(q.in) << " " << opname << " sp"; break;
    case GadgetKind::Int: os << hex(q.val); break;
    default: break;
    }
    os << ")";
    return os.str();
}

std::vector<ExecutionTrace> classification_traces(const ArchProfile& profile, const std::vector<MicroOp>& ops,
                                                  const ClassifyOptions& options) {
    std::vector<ExecutionTrace> traces;
    for (unsigned i = 0; i < std::max(1u, options.random_runs); ++i) {
        InitConfig init{InitPolicy::random, options.seed * 0x9e3779b97f4a7c15ULL + i, 0};
        traces.push_back(run_gadget(profile, ops, init));
    }
    if (options.corner_sweep) {
        auto corners = corner_values(profile);
        for (unsigned i = 0; i < corners.size(); ++i) {
            traces.push_back(run_gadget(profile, ops, InitConfig{InitPolicy::corner, 0, i}));
        }
    }
    return traces;
}

bool hypothesis_check(const ArchProfile& profile, const SemanticEntry& entry, const ExecutionTrace& trace) {
    View v(profile, trace);
    return check(profile, entry, v);
}

std::vector<SemanticEntry> classify_traces(const ArchProfile& p, const RawGadget& g,
                                           const std::vector<ExecutionTrace>& traces) {
    if (traces.empty()) return {};
    for (const auto& t : traces) {
        if (t.unusable) return {};
    }
    const ExecutionTrace& t0 = traces.front();
    View v0(p, t0);
    const unsigned wb = p.word_bytes;
    const auto data = p.data_regs();
    const RegSet changed0 = changed_regs(p, t0);
    const auto changed = regs_of(changed0);
    const std::int64_t delta = t0.sp_delta;

    std::vector<SemanticEntry> hyps;
    auto base = [&](GadgetKind k) {
        SemanticEntry e;
        e.address = g.address;
        e.asm_text = g.asm_text;
        e.ops = g.ops;
        e.kind = k;
        e.frame.frame_size = std::max<std::int64_t>(delta, 0);
        return e;
    };

    // Control-preserving frame: IP comes from one aligned word of the frame.
    std::optional<std::int64_t> ip_slot;
    if (delta > 0 && delta < kStackWindow && terminator_is_jump(t0.terminator.kind)) {
        for (std::int64_t k = 0; k + static_cast<std::int64_t>(wb) <= delta; k += wb) {
            if (t0.ip == v0.stack_word(k)) {
                if (ip_slot) {
                    ip_slot.reset(); // ambiguous on the first run; never seen with random words
                    break;
                }
                ip_slot = k;
            }
        }
    }

    auto preserving = [&](GadgetKind k) {
        SemanticEntry e = base(k);
        e.frame.next_ip_slot = ip_slot;
        return e;
    };

    if (ip_slot) {
        hyps.push_back(preserving(GadgetKind::NoOp));
        for (RegId out : changed) {
            Word f = v0.F(out);
            for (RegId in : data) {
                if (in != out && f == v0.I(in)) {
                    auto e = preserving(GadgetKind::MoveReg);
                    e.params.in = in;
                    e.params.out = out;
                    hyps.push_back(e);
                }
                if (f == apply(BinOp::neg, v0.I(in), 0, wb)) {
                    auto e = preserving(GadgetKind::Neg);
                    e.params.in = in;
                    e.params.out = out;
                    hyps.push_back(e);
                }
                for (BinOp op : {BinOp::add, BinOp::xor_}) {
                    Word val = op == BinOp::add ? (f - v0.I(in)) & p.mask() : f ^ v0.I(in);
                    if (val == 0) continue;
                    auto e = preserving(GadgetKind::ArithConst);
                    e.params.in = in;
                    e.params.out = out;
                    e.params.op = op;
                    e.params.val = val;
                    hyps.push_back(e);
                }
                for (BinOp op : kArithOps) {
                    for (RegId in2 : data) {
                        if (in2 == in || (commutative(op) && in2 < in)) continue;
                        if (f == apply(op, v0.I(in), v0.I(in2), wb)) {
                            auto e = preserving(GadgetKind::Arithmetic);
                            e.params.in = in;
                            e.params.in2 = in2;
                            e.params.out = out;
                            e.params.op = op;
                            hyps.push_back(e);
                        }
                    }
                }
                for (BinOp op : kArithOps) {
                    if (f == apply(op, v0.I(in), v0.sp(), wb)) {
                        auto e = preserving(GadgetKind::ArithSP);
                        e.params.in = in;
                        e.params.out = out;
                        e.params.op = op;
                        hyps.push_back(e);
                    }
                }
            }
            for (std::int64_t off = 0; off + static_cast<std::int64_t>(wb) <= delta; off += wb) {
                if (off != *ip_slot && f == v0.stack_word(off)) {
                    auto e = preserving(GadgetKind::LoadConst);
                    e.params.loads.push_back({out, off});
                    hyps.push_back(e);
                }
            }
            {
                auto e = preserving(GadgetKind::InitConst);
                e.params.out = out;
                e.params.val = f;
                hyps.push_back(e);
            }
            if (f == v0.sp()) {
                auto e = preserving(GadgetKind::GetSP);
                e.params.out = out;
                hyps.push_back(e);
            }
        }
        // memory types, proposed from the non-stack accesses of the first run
        for (const auto& m : t0.mem_reads) {
            if (v0.on_stack(m.address) || m.width != wb) continue;
            for (RegId a : data) {
                auto off = signed_diff(p, m.address, v0.I(a));
                if (!off) continue;
                Word mem = v0.M0(m.address, wb);
                for (RegId out : changed) {
                    if (v0.F(out) == mem) {
                        auto e = preserving(GadgetKind::LoadMem);
                        e.params.addr = a;
                        e.params.out = out;
                        e.params.off = *off;
                        hyps.push_back(e);
                    }
                    for (BinOp op : kArithOps) {
                        if (v0.F(out) == apply(op, v0.I(out), mem, wb)) {
                            auto e = preserving(GadgetKind::ArithLoad);
                            e.params.addr = a;
                            e.params.out = out;
                            e.params.off = *off;
                            e.params.op = op;
                            hyps.push_back(e);
                        }
                    }
                }
            }
        }
        for (const auto& m : t0.mem_writes) {
            if (v0.on_stack(m.address)) continue;
            for (RegId a : data) {
                auto off = signed_diff(p, m.address, v0.I(a));
                if (!off) continue;
                {
                    auto e = preserving(GadgetKind::InitMem);
                    e.params.addr = a;
                    e.params.off = *off;
                    e.params.size = m.width;
                    e.params.val = v0.MF(m.address, m.width);
                    hyps.push_back(e);
                }
                if (m.width != wb) continue;
                Word after = v0.MF(m.address, wb);
                Word before = v0.M0(m.address, wb);
                for (RegId in : data) {
                    if (after == v0.I(in)) {
                        auto e = preserving(GadgetKind::StoreMem);
                        e.params.addr = a;
                        e.params.in = in;
                        e.params.off = *off;
                        e.params.size = wb;
                        hyps.push_back(e);
                    }
                    for (BinOp op : kArithOps) {
                        if (after == apply(op, before, v0.I(in), wb)) {
                            auto e = preserving(GadgetKind::ArithStore);
                            e.params.addr = a;
                            e.params.in = in;
                            e.params.off = *off;
                            e.params.op = op;
                            e.params.size = wb;
                            hyps.push_back(e);
                        }
                    }
                }
            }
        }
    }

    // ShiftStack: only SP moves, then a return from the shifted stack.
    if (delta != 0 && delta != static_cast<std::int64_t>(wb) && delta > -kStackWindow && delta < kStackWindow &&
        t0.terminator.kind == TermKind::ret) {
        auto e = base(GadgetKind::ShiftStack);
        e.params.op = delta > 0 ? BinOp::add : BinOp::sub;
        e.params.off = delta > 0 ? delta : -delta;
        if (delta > 0) e.frame.next_ip_slot = delta - static_cast<std::int64_t>(wb);
        hyps.push_back(e);
    }

    // Control-transfer and stack-pointer types.
    const Word ip = t0.ip;
    for (RegId a : data) {
        if (ip == v0.I(a)) {
            auto e = base(t0.terminator.kind == TermKind::call_reg ? GadgetKind::Call : GadgetKind::Jump);
            e.params.addr = a;
            hyps.push_back(e);
        }
        Word sp_f = v0.F(p.sp);
        Word k = (sp_f - v0.I(a)) & p.mask();
        if (k < kMaxSpAdjust) {
            auto e = base(GadgetKind::StackPivot);
            e.params.in = a;
            e.params.val = k;
            e.frame.frame_size = 0;
            hyps.push_back(e);
        }
        for (BinOp op : kArithOps) {
            Word kk = (sp_f - apply(op, v0.sp(), v0.I(a), wb)) & p.mask();
            if (kk < kMaxSpAdjust) {
                auto e = base(GadgetKind::ArithStack);
                e.params.in = a;
                e.params.op = op;
                e.params.val = kk;
                e.frame.frame_size = 0;
                hyps.push_back(e);
            }
        }
    }
    for (const auto& m : t0.mem_reads) {
        if (v0.on_stack(m.address) || m.width != wb || v0.M0(m.address, wb) != ip) continue;
        for (RegId a : data) {
            auto off = signed_diff(p, m.address, v0.I(a));
            if (!off) continue;
            auto e = base(t0.terminator.kind == TermKind::call_mem ? GadgetKind::CallMem : GadgetKind::JumpMem);
            e.params.addr = a;
            e.params.off = *off;
            hyps.push_back(e);
        }
    }
    {
        Word k = (ip - v0.sp()) & p.mask();
        if (k < kMaxSpAdjust && terminator_is_jump(t0.terminator.kind)) {
            auto e = base(GadgetKind::JumpSP);
            e.params.val = k;
            hyps.push_back(e);
        }
    }
    if (t0.terminator.kind == TermKind::interrupt) {
        auto e = base(GadgetKind::Int);
        e.params.val = t0.terminator.vector;
        hyps.push_back(e);
    }
    if (t0.terminator.kind == TermKind::syscall) hyps.push_back(base(GadgetKind::Syscall));
    if (p.id == ArchId::x86_32) hyps.push_back(base(GadgetKind::PushAll));

    // Keep hypotheses that hold on every run.
    std::vector<View> views;
    views.reserve(traces.size());
    for (const auto& t : traces) views.emplace_back(p, t);
    std::vector<SemanticEntry> out;
    for (auto& e : hyps) {
        bool ok = std::all_of(views.begin(), views.end(), [&](const View& v) { return check(p, e, v); });
        if (!ok) continue;
        if (e.kind == GadgetKind::PushAll) e.frame = FrameDescriptor{};
        RegSet clob = 0;
        for (const auto& t : traces) clob |= changed_regs(p, t);
        e.clobbers = clob & ~e.outputs();
        sort_loads(e.params);
        if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(std::move(e));
    }
    return out;
}

std::vector<SemanticEntry> classify(const ArchProfile& profile, const RawGadget& gadget,
                                    const ClassifyOptions& options) {
    if (!well_formed(gadget.ops)) return {};
    if (terminator_of(gadget.ops).kind == TermKind::halt) return {};
    return classify_traces(profile, gadget, classification_traces(profile, gadget.ops, options));
}

} // namespace majorca
