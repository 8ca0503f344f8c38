#include "majorca/emulator.hpp"

#include <cassert>

#include "majorca/error.hpp"

namespace majorca {

std::string_view to_string(BinOp op) {
    switch (op) {
    case BinOp::add: return "add";
    case BinOp::sub: return "sub";
    case BinOp::xor_: return "xor";
    case BinOp::and_: return "and";
    case BinOp::or_: return "or";
    case BinOp::neg: return "neg";
    case BinOp::sltu: return "sltu";
    }
    return "?";
}

Word apply(BinOp op, Word lhs, Word rhs, unsigned width) {
    Word mask = width_mask(width);
    lhs &= mask;
    rhs &= mask;
    switch (op) {
    case BinOp::add: return (lhs + rhs) & mask;
    case BinOp::sub: return (lhs - rhs) & mask;
    case BinOp::xor_: return lhs ^ rhs;
    case BinOp::and_: return lhs & rhs;
    case BinOp::or_: return lhs | rhs;
    case BinOp::neg: return (Word{0} - lhs) & mask;
    case BinOp::sltu: return lhs < rhs ? 1 : 0;
    }
    return 0;
}

const Terminator& terminator_of(const std::vector<MicroOp>& ops) {
    if (ops.empty() || !is_terminator(ops.back())) throw Error("micro-op list has no terminator");
    return std::get<Terminator>(ops.back());
}

bool well_formed(const std::vector<MicroOp>& ops) {
    if (ops.empty() || !is_terminator(ops.back())) return false;
    for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
        if (is_terminator(ops[i])) return false;
    }
    return true;
}

std::vector<Word> corner_values(const ArchProfile& profile) {
    std::vector<Word> out{0, 1, profile.mask()};
    for (unsigned k = 1; k < profile.word_bytes; ++k) out.push_back(Word{1} << (8 * k));
    out.push_back(kCornerAddress);
    return out;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt, std::uint64_t location) {
    return splitmix(splitmix(seed ^ (salt * 0x100000001b3ULL)) ^ location);
}

Word stack_base(const ArchProfile& profile, const InitConfig& init) {
    Word base = profile.word_bytes == 8 ? Word{0x7ff000000000} : Word{0x7f000000};
    if (init.policy == InitPolicy::random) base += (mix(init.seed, 7, 0) & 0xff) << 16;
    return base;
}

Word init_value(const ArchProfile& profile, const InitConfig& init, std::uint64_t salt, std::uint64_t location) {
    if (init.policy == InitPolicy::corner) {
        auto corners = corner_values(profile);
        return corners.at(init.corner_index % corners.size());
    }
    return mix(init.seed, salt, location) & profile.mask();
}

bool in_window(std::int64_t off) { return off > -kStackWindow && off < kStackWindow; }

} // namespace

MachineState::MachineState(const ArchProfile& profile, InitConfig init)
    : profile_(&profile), init_(init), regs_(profile.reg_count()), reg_touched_(profile.reg_count(), false),
      origins_(profile.reg_count()) {
    initial_sp_ = stack_base(profile, init);
    for (std::size_t r = 0; r < regs_.size(); ++r) {
        regs_[r] = initial_reg(static_cast<RegId>(r));
        origins_[r] = Origin{Origin::Kind::initial, static_cast<RegId>(r), 0};
    }
}

Word MachineState::initial_reg(RegId r) const {
    if (r == profile_->sp) return initial_sp_;
    if (r == profile_->ip) return 0;
    return init_value(*profile_, init_, 1, r);
}

Word MachineState::reg(RegId r) {
    if (!reg_touched_.at(r)) {
        reg_touched_[r] = true;
        reg_reads_.push_back(r);
    }
    return regs_[r];
}

Word MachineState::read(RegRef ref) { return reg(ref.reg) & width_mask(ref.width); }

void MachineState::write(RegRef ref, Word value) {
    const unsigned wb = profile_->word_bytes;
    if (!reg_touched_.at(ref.reg)) reg_touched_[ref.reg] = true; // a write also counts as first access
    if (ref.width >= wb || (profile_->id == ArchId::x86_64 && ref.width == 4)) {
        regs_[ref.reg] = value & width_mask(ref.width);
    } else {
        Word m = width_mask(ref.width);
        regs_[ref.reg] = (regs_[ref.reg] & ~m) | (value & m);
    }
    origins_[ref.reg] = Origin{};
}

void MachineState::set_reg(RegId r, Word value) {
    regs_.at(r) = value & profile_->mask();
    origins_[r] = Origin{};
}

std::uint8_t MachineState::initial_byte(Word address) const {
    const unsigned wb = profile_->word_bytes;
    Word aligned = address & ~Word(wb - 1);
    Word v = init_value(*profile_, init_, 2, aligned);
    unsigned i = static_cast<unsigned>(address - aligned);
    unsigned shift = profile_->endian == Endian::little ? i : wb - 1 - i;
    return static_cast<std::uint8_t>((v >> (8 * shift)) & 0xff);
}

Word MachineState::initial_mem(Word address, unsigned width) const {
    std::vector<std::uint8_t> bytes(width);
    for (unsigned i = 0; i < width; ++i) bytes[i] = initial_byte(address + i);
    return profile_->decode(bytes.data(), width);
}

Word MachineState::peek_mem(Word address, unsigned width) const {
    std::vector<std::uint8_t> bytes(width);
    for (unsigned i = 0; i < width; ++i) {
        auto it = mem_.find(address + i);
        bytes[i] = it != mem_.end() ? it->second : initial_byte(address + i);
    }
    return profile_->decode(bytes.data(), width);
}

Word MachineState::load(Word address, unsigned width) {
    mem_reads_.push_back({address, width});
    return peek_mem(address, width);
}

void MachineState::store(Word address, Word value, unsigned width) {
    mem_writes_.push_back({address, width});
    auto bytes = profile_->encode(value, width);
    for (unsigned i = 0; i < width; ++i) mem_[address + i] = bytes[i];
}

void MachineState::preload(Word address, std::span<const std::uint8_t> bytes) {
    for (std::size_t i = 0; i < bytes.size(); ++i) mem_[address + i] = bytes[i];
}

namespace {

Word operand_value(MachineState& s, const Operand& o) { return o.is_imm ? o.imm : s.read(o.reg); }

void push_word(const ArchProfile& p, MachineState& s, Word v) {
    Word sp = s.reg(p.sp) - p.word_bytes;
    s.set_reg(p.sp, sp);
    s.store(sp & p.mask(), v, p.word_bytes);
}

struct Stepper {
    const ArchProfile& p;
    MachineState& s;

    void load_into(RegRef dst, Word address) {
        Word v = s.load(address, dst.width);
        s.write(dst, v);
        auto off = static_cast<std::int64_t>(address - s.initial_sp());
        if (dst.width == p.word_bytes && in_window(off)) {
            s.set_origin(dst.reg, Origin{Origin::Kind::stack, 0, off});
            s.note_stack_read({off, dst.reg});
        }
    }

    void operator()(const MoveReg& op) {
        Word v = s.read(op.src);
        Origin o = s.origin(op.src.reg);
        s.write(op.dst, v);
        if (op.dst.width == p.word_bytes && op.src.width == p.word_bytes) s.set_origin(op.dst.reg, o);
    }
    void operator()(const LoadImm& op) { s.write(op.dst, op.imm); }
    void operator()(const Binop& op) {
        Word a = s.read(op.src1);
        Word b = op.op == BinOp::neg ? 0 : operand_value(s, op.src2);
        s.write(op.dst, apply(op.op, a, b, op.dst.width));
    }
    void operator()(const LoadMem& op) { load_into(op.dst, (s.reg(op.base) + op.offset) & p.mask()); }
    void operator()(const StoreMem& op) {
        Word v = operand_value(s, op.src);
        s.store((s.reg(op.base) + op.offset) & p.mask(), v, op.width);
    }
    void operator()(const LoadMemOp& op) {
        Word m = s.load((s.reg(op.base) + op.offset) & p.mask(), op.dst.width);
        Word cur = s.read(op.dst);
        s.write(op.dst, apply(op.op, cur, m, op.dst.width));
    }
    void operator()(const StoreMemOp& op) {
        Word addr = (s.reg(op.base) + op.offset) & p.mask();
        Word m = s.load(addr, op.src.width);
        Word v = s.read(op.src);
        s.store(addr, apply(op.op, m, v, op.src.width), op.src.width);
    }
    void operator()(const Pop& op) {
        Word sp = s.reg(p.sp);
        load_into(op.dst, sp);
        if (op.dst.reg != p.sp) s.set_reg(p.sp, sp + op.dst.width);
        // keep the origin recorded by load_into; set_reg on SP resets only SP's
    }
    void operator()(const Push& op) { push_word(p, s, operand_value(s, op.src)); }
    void operator()(const AdjustSP& op) { s.set_reg(p.sp, s.reg(p.sp) + static_cast<Word>(op.delta)); }
    void operator()(const PushAll&) {
        Word orig_sp = s.reg(p.sp);
        for (const char* name : {"eax", "ecx", "edx", "ebx", "esp", "ebp", "esi", "edi"}) {
            auto r = p.find_reg(name);
            if (!r) throw UnsupportedError("pushad is only defined for x86_32");
            push_word(p, s, *r == p.sp ? orig_sp : s.reg(*r));
        }
    }
    void operator()(const Terminator&) { throw Error("step() called with a terminator"); }
};

// x86 pushes the return address, MIPS writes it to $ra.
void link(const ArchProfile& p, MachineState& s, Word return_address) {
    if (auto ra = p.find_reg("ra")) {
        s.set_reg(*ra, return_address);
        return;
    }
    push_word(p, s, return_address);
}

IpSource source_of_register(const MachineState& s, RegId r) {
    Origin o = s.origin(r);
    switch (o.kind) {
    case Origin::Kind::initial: return {IpSource::Kind::reg, o.reg, 0};
    case Origin::Kind::stack: return {IpSource::Kind::stack, 0, o.offset};
    case Origin::Kind::other: break;
    }
    return {IpSource::Kind::reg, r, 0};
}

} // namespace

void step(const ArchProfile& profile, MachineState& state, const MicroOp& op) {
    std::visit(Stepper{profile, state}, op);
}

ControlTransfer transfer(const ArchProfile& p, MachineState& s, const Terminator& term, Word return_address) {
    ControlTransfer out;
    switch (term.kind) {
    case TermKind::ret: {
        Word sp = s.reg(p.sp);
        out.ip = s.load(sp, p.word_bytes);
        out.source = {IpSource::Kind::stack, 0, static_cast<std::int64_t>(sp - s.initial_sp())};
        s.set_reg(p.sp, sp + p.word_bytes);
        break;
    }
    case TermKind::jmp_reg:
    case TermKind::call_reg:
        out.ip = s.reg(term.reg);
        out.source = source_of_register(s, term.reg);
        if (term.kind == TermKind::call_reg) link(p, s, return_address);
        break;
    case TermKind::jmp_mem:
    case TermKind::call_mem:
        out.ip = s.load((s.reg(term.reg) + term.offset) & p.mask(), p.word_bytes);
        out.source = {IpSource::Kind::memory, term.reg, term.offset};
        if (term.kind == TermKind::call_mem) link(p, s, return_address);
        break;
    case TermKind::syscall:
    case TermKind::interrupt:
        out.source = {IpSource::Kind::syscall, 0, 0};
        return out;
    case TermKind::halt:
        return out;
    }
    s.set_reg(p.ip, out.ip);
    return out;
}

Word ExecutionTrace::initial_mem(const ArchProfile& profile, Word address, unsigned width) const {
    MachineState probe(profile, init);
    return probe.initial_mem(address, width);
}

Word ExecutionTrace::final_mem(const ArchProfile& profile, Word address, unsigned width) const {
    MachineState probe(profile, init);
    std::vector<std::uint8_t> bytes(width);
    for (unsigned i = 0; i < width; ++i) {
        auto it = final_memory.find(address + i);
        bytes[i] = it != final_memory.end()
                       ? it->second
                       : static_cast<std::uint8_t>(probe.initial_mem(address + i, 1));
    }
    return profile.decode(bytes.data(), width);
}

ExecutionTrace run_gadget(const ArchProfile& profile, std::span<const MicroOp> ops, InitConfig init) {
    MachineState s(profile, init);
    ExecutionTrace t;
    t.init = init;
    t.initial_sp = s.initial_sp();
    for (std::size_t r = 0; r < profile.reg_count(); ++r) t.initial_regs.push_back(s.peek_reg(static_cast<RegId>(r)));

    const Terminator* term = nullptr;
    for (const auto& op : ops) {
        if (const auto* tp = std::get_if<Terminator>(&op)) {
            term = tp;
            break;
        }
        step(profile, s, op);
    }
    if (!term) throw Error("gadget has no terminator");
    t.terminator = *term;
    if (term->kind == TermKind::halt) t.unusable = true;

    ControlTransfer ct = transfer(profile, s, *term);
    t.ip = ct.ip;
    t.ip_source = ct.source;
    t.sp_delta = static_cast<std::int64_t>(s.peek_reg(profile.sp) - t.initial_sp);
    if (profile.word_bytes == 4) t.sp_delta = static_cast<std::int32_t>(t.sp_delta);
    for (std::size_t r = 0; r < profile.reg_count(); ++r) t.final_regs.push_back(s.peek_reg(static_cast<RegId>(r)));
    t.stack_reads = s.stack_reads();
    t.mem_reads = s.mem_reads();
    t.mem_writes = s.mem_writes();
    t.reg_reads = s.reg_reads();
    t.final_memory = s.memory();
    return t;
}

} // namespace majorca
