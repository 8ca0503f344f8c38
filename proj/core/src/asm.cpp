#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <sstream>

#include "majorca/error.hpp"
#include "majorca/ingest.hpp"

namespace majorca {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string hex(Word v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

std::string signed_hex(std::int64_t v) { return v < 0 ? "-" + hex(static_cast<Word>(-v)) : hex(static_cast<Word>(v)); }

/// `0x1f`, `1fh`, `-8`, `42`
std::optional<std::int64_t> parse_number(std::string_view s) {
    s = trim(s);
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        neg = s.front() == '-';
        s = trim(s.substr(1));
    }
    if (s.empty()) return std::nullopt;
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    } else if (s.back() == 'h' || s.back() == 'H') {
        base = 16;
        s.remove_suffix(1);
    }
    if (s.empty()) return std::nullopt;
    Word v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
}

struct Instruction {
    std::string mnemonic;
    std::vector<std::string> operands;
    int column = 1;
};

std::vector<Instruction> split(std::string_view text) {
    std::vector<Instruction> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find(';', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        std::string_view t = trim(raw);
        if (!t.empty()) {
            Instruction ins;
            ins.column = static_cast<int>(pos + (t.data() - raw.data()) + 1);
            std::size_t sp = 0;
            while (sp < t.size() && !std::isspace(static_cast<unsigned char>(t[sp]))) ++sp;
            ins.mnemonic = lower(t.substr(0, sp));
            std::string_view rest = trim(t.substr(sp));
            // `qword ptr` and friends are part of the operand, not the mnemonic
            while (!rest.empty()) {
                std::size_t comma = rest.find(',');
                std::string_view op = trim(rest.substr(0, comma));
                ins.operands.push_back(lower(op));
                if (comma == std::string_view::npos) break;
                rest = rest.substr(comma + 1);
            }
            out.push_back(std::move(ins));
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
    return out;
}

[[noreturn]] void fail(const Instruction& ins, const std::string& what) { throw ParseError(what, 1, ins.column); }

std::optional<BinOp> binop_of(std::string_view m) {
    if (m == "add") return BinOp::add;
    if (m == "sub") return BinOp::sub;
    if (m == "xor") return BinOp::xor_;
    if (m == "and") return BinOp::and_;
    if (m == "or") return BinOp::or_;
    return std::nullopt;
}

bool is_halting_x86(std::string_view m) {
    return m == "hlt" || m == "retf" || m == "retw" || m == "sti" || m == "cli" || m == "in" || m == "out" ||
           m == "iretd" || m == "iretq" || m == "lret";
}

// ---------------------------------------------------------------- x86

struct MemRef {
    RegId base;
    std::int64_t offset;
    unsigned width; // 0 when no size keyword was given
};

struct X86Operand {
    enum class Kind { reg, imm, mem } kind;
    RegRef reg{};
    std::int64_t imm = 0;
    MemRef mem{};
};

X86Operand parse_x86_operand(const ArchProfile& p, const Instruction& ins, std::string_view s) {
    X86Operand out{};
    auto lb = s.find('[');
    if (lb != std::string_view::npos) {
        out.kind = X86Operand::Kind::mem;
        std::string_view prefix = trim(s.substr(0, lb));
        unsigned width = 0;
        if (!prefix.empty()) {
            if (prefix.ends_with("ptr")) prefix = trim(prefix.substr(0, prefix.size() - 3));
            if (prefix == "byte") width = 1;
            else if (prefix == "word") width = 2;
            else if (prefix == "dword") width = 4;
            else if (prefix == "qword") width = 8;
            else fail(ins, "bad memory size '" + std::string(prefix) + "'");
        }
        auto rb = s.find(']', lb);
        if (rb == std::string_view::npos) fail(ins, "missing ']'");
        std::string_view inner = trim(s.substr(lb + 1, rb - lb - 1));
        std::size_t sign = inner.find_first_of("+-");
        std::string_view base = trim(inner.substr(0, sign));
        auto r = p.resolve(base);
        if (!r || r->width != p.word_bytes) fail(ins, "bad base register '" + std::string(base) + "'");
        std::int64_t off = 0;
        if (sign != std::string_view::npos) {
            auto n = parse_number(inner.substr(sign));
            if (!n) fail(ins, "bad displacement");
            off = *n;
        }
        out.mem = {r->reg, off, width};
        return out;
    }
    if (auto r = p.resolve(s)) {
        out.kind = X86Operand::Kind::reg;
        out.reg = *r;
        return out;
    }
    if (auto n = parse_number(s)) {
        out.kind = X86Operand::Kind::imm;
        out.imm = *n;
        return out;
    }
    fail(ins, "bad operand '" + std::string(s) + "'");
}

void decode_x86(const ArchProfile& p, const Instruction& ins, std::vector<MicroOp>& ops) {
    const std::string& m = ins.mnemonic;
    std::vector<X86Operand> a;
    for (const auto& s : ins.operands) a.push_back(parse_x86_operand(p, ins, s));
    auto want = [&](std::size_t n) {
        if (a.size() != n) fail(ins, "'" + m + "' expects " + std::to_string(n) + " operand(s)");
    };
    using K = X86Operand::Kind;
    auto imm_for = [](std::int64_t v, unsigned width) { return static_cast<Word>(v) & width_mask(width); };
    auto mem_width = [&](const MemRef& mr, unsigned fallback) {
        if (mr.width && fallback && mr.width != fallback) fail(ins, "operand size mismatch");
        unsigned w = mr.width ? mr.width : fallback;
        if (!w) fail(ins, "memory operand needs a size");
        return w;
    };

    if (is_halting_x86(m)) {
        ops.push_back(Terminator{TermKind::halt});
        return;
    }
    if (m == "nop") return;
    if (m == "ret" || m == "retn") {
        if (!a.empty()) fail(ins, "'ret imm' is not supported");
        ops.push_back(Terminator{TermKind::ret});
        return;
    }
    if (m == "syscall") {
        want(0);
        ops.push_back(Terminator{TermKind::syscall});
        return;
    }
    if (m == "int") {
        want(1);
        if (a[0].kind != K::imm) fail(ins, "int needs an immediate");
        Terminator t{TermKind::interrupt};
        t.vector = static_cast<std::uint32_t>(a[0].imm);
        ops.push_back(t);
        return;
    }
    if (m == "pushad" || m == "pushal") {
        if (p.id != ArchId::x86_32) throw UnsupportedError("pushad is only valid on x86_32");
        ops.push_back(PushAll{});
        return;
    }
    if (m == "leave") {
        ops.push_back(MoveReg{p.full(p.sp), p.full(*p.find_reg(p.id == ArchId::x86_64 ? "rbp" : "ebp"))});
        ops.push_back(Pop{p.full(*p.find_reg(p.id == ArchId::x86_64 ? "rbp" : "ebp"))});
        return;
    }
    if (m == "jmp" || m == "call") {
        want(1);
        bool call = m == "call";
        Terminator t;
        if (a[0].kind == K::reg && a[0].reg.width == p.word_bytes) {
            t.kind = call ? TermKind::call_reg : TermKind::jmp_reg;
            t.reg = a[0].reg.reg;
        } else if (a[0].kind == K::mem) {
            mem_width(a[0].mem, p.word_bytes);
            t.kind = call ? TermKind::call_mem : TermKind::jmp_mem;
            t.reg = a[0].mem.base;
            t.offset = a[0].mem.offset;
        } else {
            fail(ins, "direct " + m + " is not supported");
        }
        ops.push_back(t);
        return;
    }
    if (m == "pop") {
        want(1);
        if (a[0].kind != K::reg || a[0].reg.width != p.word_bytes) fail(ins, "pop needs a full-width register");
        ops.push_back(Pop{a[0].reg});
        return;
    }
    if (m == "push") {
        want(1);
        if (a[0].kind == K::reg && a[0].reg.width == p.word_bytes) ops.push_back(Push{Operand::of(a[0].reg)});
        else if (a[0].kind == K::imm) ops.push_back(Push{Operand::immediate(imm_for(a[0].imm, p.word_bytes))});
        else fail(ins, "bad push operand");
        return;
    }
    if (m == "neg" || m == "inc" || m == "dec") {
        want(1);
        if (a[0].kind != K::reg) fail(ins, m + " needs a register");
        RegRef r = a[0].reg;
        if (m == "neg") ops.push_back(Binop{BinOp::neg, r, r, Operand::immediate(0)});
        else ops.push_back(Binop{m == "inc" ? BinOp::add : BinOp::sub, r, r, Operand::immediate(1)});
        return;
    }
    if (m == "mov") {
        want(2);
        if (a[0].kind == K::reg && a[1].kind == K::reg) {
            if (a[0].reg.width != a[1].reg.width) fail(ins, "operand size mismatch");
            ops.push_back(MoveReg{a[0].reg, a[1].reg});
        } else if (a[0].kind == K::reg && a[1].kind == K::imm) {
            ops.push_back(LoadImm{a[0].reg, imm_for(a[1].imm, a[0].reg.width)});
        } else if (a[0].kind == K::reg && a[1].kind == K::mem) {
            mem_width(a[1].mem, a[0].reg.width);
            ops.push_back(LoadMem{a[0].reg, a[1].mem.base, a[1].mem.offset});
        } else if (a[0].kind == K::mem && a[1].kind == K::reg) {
            unsigned w = mem_width(a[0].mem, a[1].reg.width);
            ops.push_back(StoreMem{a[0].mem.base, a[0].mem.offset, Operand::of(a[1].reg), w});
        } else if (a[0].kind == K::mem && a[1].kind == K::imm) {
            unsigned w = mem_width(a[0].mem, 0);
            ops.push_back(StoreMem{a[0].mem.base, a[0].mem.offset, Operand::immediate(imm_for(a[1].imm, w)), w});
        } else {
            fail(ins, "bad mov operands");
        }
        return;
    }
    if (auto op = binop_of(m)) {
        want(2);
        if (a[0].kind == K::reg && a[1].kind == K::reg) {
            if (a[0].reg.width != a[1].reg.width) fail(ins, "operand size mismatch");
            ops.push_back(Binop{*op, a[0].reg, a[0].reg, Operand::of(a[1].reg)});
        } else if (a[0].kind == K::reg && a[1].kind == K::imm) {
            bool sp = a[0].reg == p.full(p.sp);
            if (sp && (*op == BinOp::add || *op == BinOp::sub)) {
                ops.push_back(AdjustSP{*op == BinOp::add ? a[1].imm : -a[1].imm});
            } else {
                ops.push_back(Binop{*op, a[0].reg, a[0].reg, Operand::immediate(imm_for(a[1].imm, a[0].reg.width))});
            }
        } else if (a[0].kind == K::reg && a[1].kind == K::mem) {
            mem_width(a[1].mem, a[0].reg.width);
            ops.push_back(LoadMemOp{*op, a[0].reg, a[1].mem.base, a[1].mem.offset});
        } else if (a[0].kind == K::mem && a[1].kind == K::reg) {
            mem_width(a[0].mem, a[1].reg.width);
            ops.push_back(StoreMemOp{*op, a[0].mem.base, a[0].mem.offset, a[1].reg});
        } else {
            fail(ins, "bad " + m + " operands");
        }
        return;
    }
    throw UnsupportedError("line 1:" + std::to_string(ins.column) + ": unsupported mnemonic '" + m + "'");
}

const char* size_keyword(unsigned width) {
    switch (width) {
    case 1: return "byte";
    case 2: return "word";
    case 4: return "dword";
    default: return "qword";
    }
}

std::string x86_mem(const ArchProfile& p, RegId base, std::int64_t off, unsigned width) {
    std::string s = std::string(size_keyword(width)) + " ptr [" + p.reg_name(base);
    if (off > 0) s += "+" + hex(static_cast<Word>(off));
    else if (off < 0) s += "-" + hex(static_cast<Word>(-off));
    return s + "]";
}

std::string render_x86(const ArchProfile& p, const MicroOp& mop) {
    auto name = [&](RegRef r) { return p.ref_name(r); };
    auto operand = [&](const Operand& o) { return o.is_imm ? hex(o.imm) : name(o.reg); };
    return std::visit(
        [&](const auto& op) -> std::string {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, MoveReg>) {
                return "mov " + name(op.dst) + ", " + name(op.src);
            } else if constexpr (std::is_same_v<T, LoadImm>) {
                return "mov " + name(op.dst) + ", " + hex(op.imm);
            } else if constexpr (std::is_same_v<T, Binop>) {
                if (!(op.dst == op.src1)) throw Error("x86 binop must be two-address");
                if (op.op == BinOp::neg) return "neg " + name(op.dst);
                if (op.op == BinOp::sltu) throw Error("sltu has no x86 form");
                return std::string(to_string(op.op)) + " " + name(op.dst) + ", " + operand(op.src2);
            } else if constexpr (std::is_same_v<T, LoadMem>) {
                return "mov " + name(op.dst) + ", " + x86_mem(p, op.base, op.offset, op.dst.width);
            } else if constexpr (std::is_same_v<T, StoreMem>) {
                return "mov " + x86_mem(p, op.base, op.offset, op.width) + ", " + operand(op.src);
            } else if constexpr (std::is_same_v<T, LoadMemOp>) {
                return std::string(to_string(op.op)) + " " + name(op.dst) + ", " +
                       x86_mem(p, op.base, op.offset, op.dst.width);
            } else if constexpr (std::is_same_v<T, StoreMemOp>) {
                return std::string(to_string(op.op)) + " " + x86_mem(p, op.base, op.offset, op.src.width) + ", " +
                       name(op.src);
            } else if constexpr (std::is_same_v<T, Pop>) {
                return "pop " + name(op.dst);
            } else if constexpr (std::is_same_v<T, Push>) {
                return "push " + operand(op.src);
            } else if constexpr (std::is_same_v<T, AdjustSP>) {
                return (op.delta < 0 ? "sub " : "add ") + p.reg_name(p.sp) + ", " +
                       hex(static_cast<Word>(op.delta < 0 ? -op.delta : op.delta));
            } else if constexpr (std::is_same_v<T, PushAll>) {
                return "pushad";
            } else {
                switch (op.kind) {
                case TermKind::ret: return "ret";
                case TermKind::jmp_reg: return "jmp " + p.reg_name(op.reg);
                case TermKind::call_reg: return "call " + p.reg_name(op.reg);
                case TermKind::jmp_mem: return "jmp " + x86_mem(p, op.reg, op.offset, p.word_bytes);
                case TermKind::call_mem: return "call " + x86_mem(p, op.reg, op.offset, p.word_bytes);
                case TermKind::syscall: return "syscall";
                case TermKind::interrupt: return "int " + hex(op.vector);
                case TermKind::halt: return "hlt";
                }
                return "?";
            }
        },
        mop);
}

// ---------------------------------------------------------------- MIPS

struct MipsReg {
    bool zero = false;
    RegId reg = 0;
};

std::optional<MipsReg> mips_reg(const ArchProfile& p, std::string_view s) {
    if (s.starts_with("$")) s.remove_prefix(1);
    if (s == "zero" || s == "0") return MipsReg{true, 0};
    if (auto r = p.resolve(s)) return MipsReg{false, r->reg};
    return std::nullopt;
}

void decode_mips(const ArchProfile& p, const Instruction& ins, std::vector<MicroOp>& ops) {
    const std::string& m = ins.mnemonic;
    const auto& a = ins.operands;
    auto want = [&](std::size_t n) {
        if (a.size() != n) fail(ins, "'" + m + "' expects " + std::to_string(n) + " operand(s)");
    };
    auto reg = [&](std::size_t i) {
        auto r = mips_reg(p, a.at(i));
        if (!r) fail(ins, "bad register '" + a.at(i) + "'");
        return *r;
    };
    auto dst = [&](std::size_t i) {
        auto r = reg(i);
        if (r.zero) fail(ins, "$zero cannot be a destination");
        return p.full(r.reg);
    };
    auto num = [&](std::size_t i) {
        auto n = parse_number(a.at(i));
        if (!n) fail(ins, "bad immediate '" + a.at(i) + "'");
        return *n;
    };
    auto memop = [&](std::size_t i) {
        const std::string& s = a.at(i);
        auto lp = s.find('(');
        auto rp = s.find(')');
        if (lp == std::string::npos || rp == std::string::npos || rp < lp) fail(ins, "bad memory operand");
        std::int64_t off = 0;
        std::string_view disp = trim(std::string_view(s).substr(0, lp));
        if (!disp.empty()) {
            auto n = parse_number(disp);
            if (!n) fail(ins, "bad displacement");
            off = *n;
        }
        auto base = mips_reg(p, trim(std::string_view(s).substr(lp + 1, rp - lp - 1)));
        if (!base || base->zero) fail(ins, "bad base register");
        return std::pair{base->reg, off};
    };
    const Word mask = p.mask();
    auto sext16 = [&](std::int64_t v) { return static_cast<Word>(static_cast<std::int64_t>(static_cast<std::int16_t>(v))) & mask; };

    if (m == "nop") return;
    if (m == "syscall") {
        ops.push_back(Terminator{TermKind::syscall});
        return;
    }
    if (m == "jr" || m == "jalr") {
        if (a.empty() || a.size() > 2) fail(ins, m + " expects a register");
        auto r = reg(a.size() - 1);
        if (r.zero) fail(ins, "jump through $zero");
        if (m == "jalr" && a.size() == 2 && dst(0).reg != *p.find_reg("ra")) fail(ins, "jalr link must be $ra");
        Terminator t{m == "jr" ? TermKind::jmp_reg : TermKind::call_reg};
        t.reg = r.reg;
        ops.push_back(t);
        return;
    }
    if (m == "lw") {
        want(2);
        auto [base, off] = memop(1);
        ops.push_back(LoadMem{dst(0), base, off});
        return;
    }
    if (m == "sw") {
        want(2);
        auto [base, off] = memop(1);
        auto src = reg(0);
        ops.push_back(StoreMem{base, off, src.zero ? Operand::immediate(0) : Operand::of(p.full(src.reg)), 4});
        return;
    }
    if (m == "move") {
        want(2);
        auto src = reg(1);
        if (src.zero) ops.push_back(LoadImm{dst(0), 0});
        else ops.push_back(MoveReg{dst(0), p.full(src.reg)});
        return;
    }
    if (m == "li") {
        want(2);
        ops.push_back(LoadImm{dst(0), static_cast<Word>(num(1)) & mask});
        return;
    }
    if (m == "lui") {
        want(2);
        ops.push_back(LoadImm{dst(0), (static_cast<Word>(num(1)) << 16) & mask});
        return;
    }
    if (m == "negu") {
        want(2);
        auto src = reg(1);
        if (src.zero) ops.push_back(LoadImm{dst(0), 0});
        else ops.push_back(Binop{BinOp::neg, dst(0), p.full(src.reg), Operand::immediate(0)});
        return;
    }
    if (m == "addiu" || m == "addi" || m == "sltiu" || m == "xori" || m == "andi" || m == "ori") {
        want(3);
        RegRef d = dst(0);
        auto s = reg(1);
        std::int64_t imm = num(2);
        bool sign = m == "addiu" || m == "addi" || m == "sltiu";
        Word v = sign ? sext16(imm) : static_cast<Word>(imm) & 0xffff;
        if (sign && (imm < -0x8000 || imm > 0x7fff)) fail(ins, "immediate out of range");
        if (!sign && (imm < 0 || imm > 0xffff)) fail(ins, "immediate out of range");
        if ((m == "addiu" || m == "addi") && d.reg == p.sp && !s.zero && s.reg == p.sp) {
            ops.push_back(AdjustSP{imm});
            return;
        }
        BinOp op = m == "sltiu" ? BinOp::sltu : m == "xori" ? BinOp::xor_ : m == "andi" ? BinOp::and_
                 : m == "ori" ? BinOp::or_ : BinOp::add;
        if (s.zero) {
            ops.push_back(LoadImm{d, apply(op, 0, v, p.word_bytes)});
            return;
        }
        ops.push_back(Binop{op, d, p.full(s.reg), Operand::immediate(v)});
        return;
    }
    if (m == "addu" || m == "add" || m == "subu" || m == "sub" || m == "xor" || m == "and" || m == "or" ||
        m == "sltu") {
        want(3);
        RegRef d = dst(0);
        auto s = reg(1);
        auto t = reg(2);
        BinOp op = (m == "addu" || m == "add") ? BinOp::add : (m == "subu" || m == "sub") ? BinOp::sub
                 : m == "xor" ? BinOp::xor_ : m == "and" ? BinOp::and_ : m == "or" ? BinOp::or_ : BinOp::sltu;
        if (s.zero && t.zero) {
            ops.push_back(LoadImm{d, 0});
        } else if (t.zero && (op == BinOp::add || op == BinOp::sub || op == BinOp::xor_ || op == BinOp::or_)) {
            ops.push_back(MoveReg{d, p.full(s.reg)});
        } else if (s.zero && (op == BinOp::add || op == BinOp::xor_ || op == BinOp::or_)) {
            ops.push_back(MoveReg{d, p.full(t.reg)});
        } else if (s.zero && op == BinOp::sub) {
            ops.push_back(Binop{BinOp::neg, d, p.full(t.reg), Operand::immediate(0)});
        } else if (t.zero) {
            ops.push_back(Binop{op, d, p.full(s.reg), Operand::immediate(0)});
        } else if (s.zero && op == BinOp::and_) {
            ops.push_back(LoadImm{d, 0});
        } else if (s.zero) {
            fail(ins, "unsupported $zero operand");
        } else {
            ops.push_back(Binop{op, d, p.full(s.reg), Operand::of(p.full(t.reg))});
        }
        return;
    }
    throw UnsupportedError("line 1:" + std::to_string(ins.column) + ": unsupported mnemonic '" + m + "'");
}

std::string render_mips(const ArchProfile& p, const MicroOp& mop) {
    auto name = [&](RegRef r) { return "$" + p.reg_name(r.reg); };
    auto mem = [&](RegId base, std::int64_t off) { return signed_hex(off) + "($" + p.reg_name(base) + ")"; };
    return std::visit(
        [&](const auto& op) -> std::string {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, MoveReg>) {
                return "move " + name(op.dst) + ", " + name(op.src);
            } else if constexpr (std::is_same_v<T, LoadImm>) {
                return "li " + name(op.dst) + ", " + hex(op.imm);
            } else if constexpr (std::is_same_v<T, Binop>) {
                if (op.op == BinOp::neg) return "negu " + name(op.dst) + ", " + name(op.src1);
                if (!op.src2.is_imm) {
                    const char* m = op.op == BinOp::add ? "addu" : op.op == BinOp::sub ? "subu"
                                  : op.op == BinOp::sltu ? "sltu" : nullptr;
                    std::string mn = m ? m : std::string(to_string(op.op));
                    return mn + " " + name(op.dst) + ", " + name(op.src1) + ", " + name(op.src2.reg);
                }
                auto sv = static_cast<std::int64_t>(static_cast<std::int32_t>(op.src2.imm));
                switch (op.op) {
                case BinOp::add:
                case BinOp::sltu:
                    if (sv < -0x8000 || sv > 0x7fff) throw Error("immediate does not fit addiu/sltiu");
                    return std::string(op.op == BinOp::add ? "addiu " : "sltiu ") + name(op.dst) + ", " +
                           name(op.src1) + ", " + signed_hex(sv);
                case BinOp::xor_:
                case BinOp::and_:
                case BinOp::or_:
                    if (op.src2.imm > 0xffff) throw Error("immediate does not fit 16 bits");
                    return std::string(to_string(op.op)) + "i " + name(op.dst) + ", " + name(op.src1) + ", " +
                           hex(op.src2.imm);
                default: throw Error("no MIPS immediate form");
                }
            } else if constexpr (std::is_same_v<T, LoadMem>) {
                return "lw " + name(op.dst) + ", " + mem(op.base, op.offset);
            } else if constexpr (std::is_same_v<T, StoreMem>) {
                if (op.src.is_imm && op.src.imm != 0) throw Error("sw stores a register");
                return "sw " + (op.src.is_imm ? std::string("$zero") : name(op.src.reg)) + ", " + mem(op.base, op.offset);
            } else if constexpr (std::is_same_v<T, AdjustSP>) {
                return "addiu $sp, $sp, " + signed_hex(op.delta);
            } else if constexpr (std::is_same_v<T, Terminator>) {
                switch (op.kind) {
                case TermKind::jmp_reg: return "jr $" + p.reg_name(op.reg);
                case TermKind::call_reg: return "jalr $" + p.reg_name(op.reg);
                case TermKind::syscall: return "syscall";
                default: throw Error("no MIPS form for terminator");
                }
            } else {
                throw Error("micro-op has no MIPS form");
            }
        },
        mop);
}

} // namespace

std::vector<MicroOp> decode_asm(const ArchProfile& profile, std::string_view text) {
    auto instructions = split(text);
    if (instructions.empty()) throw ParseError("empty gadget", 1, 1);
    bool mips = profile.id == ArchId::mips32be;
    if (mips) {
        // hoist the delay slot above jr/jalr
        for (std::size_t i = 0; i + 1 < instructions.size(); ++i) {
            const auto& m = instructions[i].mnemonic;
            if (m == "jr" || m == "jalr") {
                std::swap(instructions[i], instructions[i + 1]);
                ++i;
            }
        }
    }
    std::vector<MicroOp> ops;
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        std::size_t before = ops.size();
        if (mips) decode_mips(profile, instructions[i], ops);
        else decode_x86(profile, instructions[i], ops);
        for (std::size_t k = before; k < ops.size(); ++k) {
            if (is_terminator(ops[k]) && i + 1 != instructions.size()) {
                fail(instructions[i], "terminator '" + instructions[i].mnemonic + "' is not the last instruction");
            }
        }
    }
    if (ops.empty() || !is_terminator(ops.back())) throw ParseError("gadget has no terminator", 1, 1);
    return ops;
}

std::string render_asm(const ArchProfile& profile, const std::vector<MicroOp>& ops) {
    std::string out;
    for (const auto& op : ops) {
        if (!out.empty()) out += " ; ";
        out += profile.id == ArchId::mips32be ? render_mips(profile, op) : render_x86(profile, op);
    }
    return out;
}

} // namespace majorca
