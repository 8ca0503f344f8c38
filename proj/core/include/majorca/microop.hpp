#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "majorca/arch.hpp"

namespace majorca {

enum class BinOp : std::uint8_t { add, sub, xor_, and_, or_, neg, sltu };

std::string_view to_string(BinOp op);
/// Applies `op` on the low `width` bytes; `neg` ignores `rhs`.
Word apply(BinOp op, Word lhs, Word rhs, unsigned width);

/// Register or immediate source operand.
struct Operand {
    bool is_imm = false;
    RegRef reg{};
    Word imm = 0;

    static Operand of(RegRef r) { return {false, r, 0}; }
    static Operand immediate(Word v) { return {true, {}, v}; }
    friend bool operator==(const Operand&, const Operand&) = default;
};

struct MoveReg { RegRef dst, src; friend bool operator==(const MoveReg&, const MoveReg&) = default; };
struct LoadImm { RegRef dst; Word imm; friend bool operator==(const LoadImm&, const LoadImm&) = default; };
/// dst <- src1 op src2
struct Binop {
    BinOp op;
    RegRef dst;
    RegRef src1;
    Operand src2;
    friend bool operator==(const Binop&, const Binop&) = default;
};
/// dst <- [base + offset], dst.width bytes
struct LoadMem {
    RegRef dst;
    RegId base;
    std::int64_t offset;
    friend bool operator==(const LoadMem&, const LoadMem&) = default;
};
/// [base + offset] <- src, width bytes
struct StoreMem {
    RegId base;
    std::int64_t offset;
    Operand src;
    unsigned width;
    friend bool operator==(const StoreMem&, const StoreMem&) = default;
};
/// dst <- dst op [base + offset]
struct LoadMemOp {
    BinOp op;
    RegRef dst;
    RegId base;
    std::int64_t offset;
    friend bool operator==(const LoadMemOp&, const LoadMemOp&) = default;
};
/// [base + offset] <- [base + offset] op src
struct StoreMemOp {
    BinOp op;
    RegId base;
    std::int64_t offset;
    RegRef src;
    friend bool operator==(const StoreMemOp&, const StoreMemOp&) = default;
};
struct Pop { RegRef dst; friend bool operator==(const Pop&, const Pop&) = default; };
struct Push { Operand src; friend bool operator==(const Push&, const Push&) = default; };
struct AdjustSP { std::int64_t delta; friend bool operator==(const AdjustSP&, const AdjustSP&) = default; };
/// x86_32 `pushad`: eax, ecx, edx, ebx, original esp, ebp, esi, edi.
struct PushAll { friend bool operator==(const PushAll&, const PushAll&) = default; };

enum class TermKind : std::uint8_t { ret, jmp_reg, jmp_mem, call_reg, call_mem, syscall, interrupt, halt };

struct Terminator {
    TermKind kind = TermKind::ret;
    RegId reg = 0;            // jmp/call target register or memory base
    std::int64_t offset = 0;  // memory forms
    std::uint32_t vector = 0; // interrupt number
    friend bool operator==(const Terminator&, const Terminator&) = default;
};

using MicroOp = std::variant<MoveReg, LoadImm, Binop, LoadMem, StoreMem, LoadMemOp, StoreMemOp, Pop, Push,
                             AdjustSP, PushAll, Terminator>;

inline bool is_terminator(const MicroOp& op) { return std::holds_alternative<Terminator>(op); }

/// Terminator of a well-formed op list (the last element).
const Terminator& terminator_of(const std::vector<MicroOp>& ops);

/// Checks the "exactly one terminator, in final position" rule.
bool well_formed(const std::vector<MicroOp>& ops);

} // namespace majorca
