#include "majorca/arch.hpp"

#include <algorithm>
#include <cctype>

#include "majorca/error.hpp"

namespace majorca {

std::string_view to_string(ArchId id) {
    switch (id) {
    case ArchId::x86_64: return "x86_64";
    case ArchId::x86_32: return "x86_32";
    case ArchId::mips32be: return "mips32be";
    }
    return "?";
}

ArchId parse_arch(std::string_view text) {
    if (text == "x86_64" || text == "x86-64" || text == "amd64") return ArchId::x86_64;
    if (text == "x86_32" || text == "x86" || text == "i386") return ArchId::x86_32;
    if (text == "mips32be" || text == "mips" || text == "mips32") return ArchId::mips32be;
    throw UnsupportedError("unknown architecture '" + std::string(text) + "'");
}

std::optional<RegId> ArchProfile::find_reg(std::string_view name) const {
    for (std::size_t i = 0; i < registers.size(); ++i) {
        if (registers[i] == name) return static_cast<RegId>(i);
    }
    return std::nullopt;
}

std::optional<RegRef> ArchProfile::resolve(std::string_view name) const {
    if (auto r = find_reg(name)) return full(*r);
    if (auto it = subregs.find(name); it != subregs.end()) return it->second;
    return std::nullopt;
}

std::string ArchProfile::ref_name(RegRef ref) const {
    if (ref.width == word_bytes) return registers.at(ref.reg);
    for (const auto& [name, r] : subregs) {
        if (r == ref) return name;
    }
    return registers.at(ref.reg) + ":" + std::to_string(ref.width);
}

std::vector<RegId> ArchProfile::data_regs() const {
    std::vector<RegId> out;
    for (std::size_t i = 0; i < registers.size(); ++i) {
        if (is_data_reg(static_cast<RegId>(i))) out.push_back(static_cast<RegId>(i));
    }
    return out;
}

std::vector<std::uint8_t> ArchProfile::encode(Word value, unsigned width) const {
    std::vector<std::uint8_t> out(width);
    for (unsigned i = 0; i < width; ++i) {
        auto byte = static_cast<std::uint8_t>((value >> (8 * i)) & 0xff);
        out[endian == Endian::little ? i : width - 1 - i] = byte;
    }
    return out;
}

Word ArchProfile::decode(const std::uint8_t* bytes, unsigned width) const {
    Word v = 0;
    for (unsigned i = 0; i < width; ++i) {
        Word byte = bytes[endian == Endian::little ? i : width - 1 - i];
        v |= byte << (8 * i);
    }
    return v;
}

namespace {

ArchProfile make_x86_64() {
    ArchProfile p;
    p.id = ArchId::x86_64;
    p.word_bytes = 8;
    p.endian = Endian::little;
    p.registers = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp",
                   "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15", "rip"};
    p.sp = *p.find_reg("rsp");
    p.ip = *p.find_reg("rip");
    struct Alias { const char* full; const char* d; const char* w; const char* b; };
    const Alias legacy[] = {
        {"rax", "eax", "ax", "al"}, {"rbx", "ebx", "bx", "bl"}, {"rcx", "ecx", "cx", "cl"},
        {"rdx", "edx", "dx", "dl"}, {"rsi", "esi", "si", "sil"}, {"rdi", "edi", "di", "dil"},
        {"rbp", "ebp", "bp", "bpl"}, {"rsp", "esp", "sp", "spl"},
    };
    for (const auto& a : legacy) {
        RegId r = *p.find_reg(a.full);
        p.subregs[a.d] = {r, 4};
        p.subregs[a.w] = {r, 2};
        p.subregs[a.b] = {r, 1};
    }
    for (int i = 8; i <= 15; ++i) {
        std::string base = "r" + std::to_string(i);
        RegId r = *p.find_reg(base);
        p.subregs[base + "d"] = {r, 4};
        p.subregs[base + "w"] = {r, 2};
        p.subregs[base + "b"] = {r, 1};
    }
    p.syscall_number = *p.find_reg("rax");
    for (const char* n : {"rdi", "rsi", "rdx", "r10", "r8", "r9"}) p.syscall_args.push_back(*p.find_reg(n));
    for (const char* n : {"rdi", "rsi", "rdx", "rcx", "r8", "r9"}) p.call_args.push_back(*p.find_reg(n));
    p.syscall_table = {{"read", 0},     {"write", 1},  {"open", 2},    {"close", 3},   {"mmap", 9},
                       {"mprotect", 10}, {"dup2", 33}, {"execve", 59}, {"exit", 60},   {"execveat", 322}};
    return p;
}

ArchProfile make_x86_32() {
    ArchProfile p;
    p.id = ArchId::x86_32;
    p.word_bytes = 4;
    p.endian = Endian::little;
    p.registers = {"eax", "ebx", "ecx", "edx", "esi", "edi", "ebp", "esp", "eip"};
    p.sp = *p.find_reg("esp");
    p.ip = *p.find_reg("eip");
    struct Alias { const char* full; const char* w; const char* b; };
    const Alias legacy[] = {{"eax", "ax", "al"}, {"ebx", "bx", "bl"}, {"ecx", "cx", "cl"},
                            {"edx", "dx", "dl"}, {"esi", "si", nullptr}, {"edi", "di", nullptr},
                            {"ebp", "bp", nullptr}, {"esp", "sp", nullptr}};
    for (const auto& a : legacy) {
        RegId r = *p.find_reg(a.full);
        p.subregs[a.w] = {r, 2};
        if (a.b) p.subregs[a.b] = {r, 1};
    }
    p.syscall_number = *p.find_reg("eax");
    for (const char* n : {"ebx", "ecx", "edx", "esi", "edi", "ebp"}) p.syscall_args.push_back(*p.find_reg(n));
    p.syscall_interrupt = 0x80;
    p.syscall_table = {{"exit", 1},  {"read", 3},  {"write", 4},      {"open", 5},
                       {"close", 6}, {"execve", 11}, {"dup2", 63}, {"mprotect", 125}};
    return p;
}

ArchProfile make_mips32be() {
    ArchProfile p;
    p.id = ArchId::mips32be;
    p.word_bytes = 4;
    p.endian = Endian::big;
    // $zero is not modelled as a register: the decoder folds it into immediates.
    p.registers = {"at", "v0", "v1", "a0", "a1", "a2", "a3", "t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7",
                   "s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "t8", "t9", "k0", "k1", "gp", "sp", "fp",
                   "ra", "pc"};
    p.sp = *p.find_reg("sp");
    p.ip = *p.find_reg("pc");
    p.subregs["s8"] = p.full(*p.find_reg("fp"));
    p.syscall_number = *p.find_reg("v0");
    for (const char* n : {"a0", "a1", "a2", "a3"}) p.syscall_args.push_back(*p.find_reg(n));
    p.call_args = p.syscall_args;
    p.syscall_table = {{"exit", 4001},  {"read", 4003},  {"write", 4004},    {"open", 4005},
                       {"close", 4006}, {"execve", 4011}, {"dup2", 4063}, {"mprotect", 4125}};
    return p;
}

} // namespace

ArchProfile make_arch_profile(ArchId id) {
    switch (id) {
    case ArchId::x86_64: return make_x86_64();
    case ArchId::x86_32: return make_x86_32();
    case ArchId::mips32be: return make_mips32be();
    }
    throw UnsupportedError("unknown architecture");
}

} // namespace majorca
