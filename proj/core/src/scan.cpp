#include <map>
#include <sstream>

#include "majorca/error.hpp"
#include "majorca/ingest.hpp"

namespace majorca {

namespace {

const char* const kReg64[] = {"rax", "rcx", "rdx", "rbx", "rsp", "rbp", "rsi", "rdi",
                              "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};
const char* const kReg32[] = {"eax", "ecx", "edx", "ebx", "esp", "ebp", "esi", "edi",
                              "r8d", "r9d", "r10d", "r11d", "r12d", "r13d", "r14d", "r15d"};

std::string hex(Word v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

struct Cursor {
    std::span<const std::uint8_t> code;
    std::size_t pos = 0;
    bool ok = true;

    std::uint8_t u8() {
        if (pos >= code.size()) {
            ok = false;
            return 0;
        }
        return code[pos++];
    }
    std::int64_t s8() { return static_cast<std::int8_t>(u8()); }
    std::int64_t s32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return static_cast<std::int32_t>(v);
    }
    Word u64() {
        Word v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<Word>(u8()) << (8 * i);
        return v;
    }
};

struct ModRM {
    unsigned mod, reg, rm;
    bool is_reg;
    std::string mem; // "[base+disp]" when !is_reg
};

bool read_modrm(Cursor& c, bool x64, unsigned rex, ModRM& out) {
    std::uint8_t b = c.u8();
    out.mod = b >> 6;
    out.reg = ((b >> 3) & 7) | ((rex & 4) ? 8 : 0);
    unsigned rm = b & 7;
    out.is_reg = out.mod == 3;
    if (out.is_reg) {
        out.rm = rm | ((rex & 1) ? 8 : 0);
        return c.ok;
    }
    unsigned base = rm;
    if (rm == 4) {
        std::uint8_t sib = c.u8();
        unsigned index = ((sib >> 3) & 7) | ((rex & 2) ? 8 : 0);
        if (index != 4) return false; // scaled index is outside the subset
        base = sib & 7;
    }
    if (base == 5 && out.mod == 0) return false; // rip-relative / absolute
    base |= (rex & 1) ? 8 : 0;
    if (!x64 && base >= 8) return false;
    std::int64_t disp = 0;
    if (out.mod == 1) disp = c.s8();
    else if (out.mod == 2) disp = c.s32();
    out.rm = base;
    std::string s = std::string("[") + (x64 ? kReg64[base] : kReg32[base]);
    if (disp > 0) s += "+" + hex(static_cast<Word>(disp));
    else if (disp < 0) s += "-" + hex(static_cast<Word>(-disp));
    out.mem = s + "]";
    return c.ok;
}

} // namespace

std::size_t decode_x86_instruction(const ArchProfile& profile, std::span<const std::uint8_t> code, std::string& text) {
    if (profile.id == ArchId::mips32be) throw UnsupportedError("byte decoding is x86 only");
    const bool x64 = profile.id == ArchId::x86_64;
    Cursor c{code};
    unsigned rex = 0;
    std::uint8_t op = c.u8();
    if (!c.ok) return 0;
    if (op == 0x66) {
        if (c.u8() == 0xc3 && c.ok) {
            text = "retw";
            return c.pos;
        }
        return 0;
    }
    if (x64 && (op & 0xf0) == 0x40) {
        rex = op & 0x0f;
        op = c.u8();
        if (!c.ok) return 0;
    }
    const bool w = (rex & 8) != 0;
    const auto reg_name = [&](unsigned r) -> std::string { return (x64 && w) ? kReg64[r] : kReg32[r]; };
    const auto full_name = [&](unsigned r) -> std::string { return x64 ? kReg64[r] : kReg32[r]; };
    const char* ptr = (x64 && w) ? "qword ptr " : "dword ptr ";
    const Word imm_mask = (x64 && w) ? ~Word{0} : 0xffffffffULL;
    auto done = [&](std::string s) -> std::size_t {
        if (!c.ok) return 0;
        text = std::move(s);
        return c.pos;
    };

    if (op >= 0x50 && op <= 0x57) return done("push " + full_name((op - 0x50) | ((rex & 1) ? 8 : 0)));
    if (op >= 0x58 && op <= 0x5f) return done("pop " + full_name((op - 0x58) | ((rex & 1) ? 8 : 0)));
    if (op >= 0xb8 && op <= 0xbf) {
        unsigned r = (op - 0xb8) | ((rex & 1) ? 8 : 0);
        Word imm = (x64 && w) ? c.u64() : static_cast<Word>(c.s32()) & 0xffffffffULL;
        return done("mov " + reg_name(r) + ", " + hex(imm));
    }
    switch (op) {
    case 0x90: return rex & 1 ? 0 : done("nop");
    case 0xc3: return done("ret");
    case 0xcb: return done("retf");
    case 0xf4: return done("hlt");
    case 0xfa: return done("cli");
    case 0xfb: return done("sti");
    case 0xc9: return done("leave");
    case 0xec: return done("in al, dx");
    case 0xed: return done("in eax, dx");
    case 0xee: return done("out dx, al");
    case 0xef: return done("out dx, eax");
    case 0xe4: c.u8(); return done("in al, 0x0");
    case 0xe5: c.u8(); return done("in eax, 0x0");
    case 0xe6: c.u8(); return done("out 0x0, al");
    case 0xe7: c.u8(); return done("out 0x0, eax");
    case 0x60: return x64 ? 0 : done("pushad");
    case 0xcd: {
        Word n = c.u8();
        return done("int " + hex(n));
    }
    case 0x0f: {
        std::uint8_t b = c.u8();
        return b == 0x05 ? done("syscall") : 0;
    }
    default: break;
    }

    // two-operand ALU and mov forms with a ModRM byte
    struct Form { std::uint8_t opcode; const char* mnemonic; bool to_reg; };
    static const Form forms[] = {
        {0x01, "add", false}, {0x03, "add", true}, {0x09, "or", false}, {0x0b, "or", true},
        {0x21, "and", false}, {0x23, "and", true}, {0x29, "sub", false}, {0x2b, "sub", true},
        {0x31, "xor", false}, {0x33, "xor", true}, {0x89, "mov", false}, {0x8b, "mov", true},
    };
    for (const auto& f : forms) {
        if (f.opcode != op) continue;
        ModRM m{};
        if (!read_modrm(c, x64, rex, m)) return 0;
        std::string r = reg_name(m.reg);
        std::string rm = m.is_reg ? reg_name(m.rm) : ptr + m.mem;
        return done(std::string(f.mnemonic) + " " + (f.to_reg ? r + ", " + rm : rm + ", " + r));
    }
    if (op == 0x81 || op == 0x83 || op == 0xc7) {
        ModRM m{};
        if (!read_modrm(c, x64, rex, m)) return 0;
        const char* mnemonic = nullptr;
        if (op == 0xc7) {
            mnemonic = (m.reg & 7) == 0 ? "mov" : nullptr;
        } else {
            static const char* const group1[] = {"add", "or", nullptr, nullptr, "and", "sub", "xor", nullptr};
            mnemonic = group1[m.reg & 7];
        }
        if (!mnemonic) return 0;
        Word imm = static_cast<Word>(op == 0x83 ? c.s8() : c.s32()) & imm_mask;
        std::string dst = m.is_reg ? reg_name(m.rm) : ptr + m.mem;
        return done(std::string(mnemonic) + " " + dst + ", " + hex(imm));
    }
    if (op == 0xf7) {
        ModRM m{};
        if (!read_modrm(c, x64, rex, m) || !m.is_reg || (m.reg & 7) != 3) return 0;
        return done("neg " + reg_name(m.rm));
    }
    if (op == 0xff) {
        ModRM m{};
        if (!read_modrm(c, x64, rex, m)) return 0;
        switch (m.reg & 7) {
        case 0:
        case 1:
            if (!m.is_reg) return 0;
            return done(std::string((m.reg & 7) == 0 ? "inc " : "dec ") + reg_name(m.rm));
        case 2:
        case 4: {
            const char* mnemonic = (m.reg & 7) == 2 ? "call " : "jmp ";
            std::string target = m.is_reg ? full_name(m.rm) : std::string(x64 ? "qword ptr " : "dword ptr ") + m.mem;
            return done(mnemonic + target);
        }
        default: return 0;
        }
    }
    return 0;
}

namespace {

bool is_terminator_text(const ArchProfile& p, const std::string& t) {
    if (t == "ret" || t == "syscall") return true;
    if (t.starts_with("jmp ") || t.starts_with("call ")) return true;
    return p.id == ArchId::x86_32 && t == "int 0x80";
}

bool is_halting_text(const std::string& t) {
    return t == "hlt" || t == "retf" || t == "retw" || t == "sti" || t == "cli" || t.starts_with("in ") ||
           t.starts_with("out ");
}

} // namespace

std::vector<RawGadget> scan_binary(const ArchProfile& profile, std::span<const std::uint8_t> image, Word base,
                                   unsigned depth_bytes) {
    if (profile.id == ArchId::mips32be) throw UnsupportedError("raw image scan is not supported for mips32be");
    if (depth_bytes == 0) throw Error("scan depth must be positive");
    std::map<Word, RawGadget> found;
    for (std::size_t t = 0; t < image.size(); ++t) {
        std::string term;
        std::size_t tlen = decode_x86_instruction(profile, image.subspan(t), term);
        if (!tlen || !is_terminator_text(profile, term)) continue;
        std::size_t first = t > depth_bytes ? t - depth_bytes : 0;
        for (std::size_t start = first; start <= t; ++start) {
            if (found.contains(base + start)) continue;
            std::string text;
            std::size_t pos = start;
            bool ok = true;
            while (pos < t) {
                std::string ins;
                std::size_t len = decode_x86_instruction(profile, image.subspan(pos, image.size() - pos), ins);
                if (!len || is_halting_text(ins) || is_terminator_text(profile, ins)) {
                    ok = false;
                    break;
                }
                if (ins != "nop") text += ins + " ; ";
                pos += len;
            }
            if (!ok || pos != t) continue;
            text += term;
            RawGadget g;
            g.address = base + start;
            g.asm_text = text;
            g.bytes.assign(image.begin() + static_cast<std::ptrdiff_t>(start),
                           image.begin() + static_cast<std::ptrdiff_t>(t + tlen));
            try {
                g.ops = decode_asm(profile, text);
            } catch (const Error&) {
                continue;
            }
            found.emplace(g.address, std::move(g));
        }
    }
    std::vector<RawGadget> out;
    out.reserve(found.size());
    for (auto& [addr, g] : found) out.push_back(std::move(g));
    return out;
}

} // namespace majorca
