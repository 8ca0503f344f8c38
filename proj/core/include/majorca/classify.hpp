#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "majorca/arch.hpp"
#include "majorca/emulator.hpp"
#include "majorca/ingest.hpp"
#include "majorca/microop.hpp"

namespace majorca {

enum class GadgetKind : std::uint8_t {
    NoOp, Jump, MoveReg, LoadConst, Arithmetic, LoadMem, StoreMem, ArithLoad, ArithStore,
    JumpMem, InitConst, Neg, ArithConst, InitMem, ShiftStack, StackPivot, ArithStack, GetSP, ArithSP, PushAll,
    JumpSP, Call, CallMem, Int, Syscall,
};
inline constexpr int kGadgetKindCount = 25;

std::string_view to_string(GadgetKind kind);
std::optional<GadgetKind> parse_gadget_kind(std::string_view text);

/// Types after which the chain continues from the gadget frame.
bool preserves_control(GadgetKind kind);
/// Types that write memory (their score is normalised by stored bytes).
bool writes_memory(GadgetKind kind);

/// Bit set of full registers.
using RegSet = std::uint64_t;
inline RegSet reg_bit(RegId r) { return RegSet{1} << r; }
inline bool has_reg(RegSet s, RegId r) { return (s >> r) & 1; }
inline int reg_count(RegSet s) { return std::popcount(s); }
std::vector<RegId> regs_of(RegSet s);

struct StackLoad {
    RegId reg = 0;
    std::int64_t offset = 0;
    friend bool operator==(const StackLoad&, const StackLoad&) = default;
    friend auto operator<=>(const StackLoad&, const StackLoad&) = default;
};

/// Union of the parameter columns; which fields are meaningful depends on the
/// kind (see param_names()).
struct Params {
    std::optional<RegId> in;
    std::optional<RegId> in2;
    std::optional<RegId> out;
    std::optional<RegId> addr;
    std::int64_t off = 0;
    Word val = 0;
    BinOp op = BinOp::add;
    unsigned size = 0;
    std::vector<StackLoad> loads; // LoadConst, sorted by register

    friend bool operator==(const Params&, const Params&) = default;
};

/// Names of the parameters of a kind, in table order ("InR", "OutR", ...).
std::vector<std::string_view> param_names(GadgetKind kind);

struct FixedSlot {
    std::int64_t offset = 0;
    Word value = 0;
    std::string comment;
    friend bool operator==(const FixedSlot&, const FixedSlot&) = default;
};

struct FrameDescriptor {
    std::int64_t frame_size = 0;
    std::optional<std::int64_t> next_ip_slot;
    std::vector<FixedSlot> fixed; // e.g. the JOP gadget address in a combined entry

    friend bool operator==(const FrameDescriptor&, const FrameDescriptor&) = default;
};

struct SemanticEntry {
    Word address = 0;
    std::string asm_text;
    std::vector<MicroOp> ops;
    GadgetKind kind = GadgetKind::NoOp;
    Params params;
    RegSet clobbers = 0;
    FrameDescriptor frame;
    double score = 0;
    /// Set on JOP-combined entries: address and text of the jump gadget.
    std::optional<Word> jop_address;
    std::string jop_asm;

    /// Registers holding a result after the gadget.
    RegSet outputs() const;
    /// Registers read as semantic inputs.
    RegSet inputs() const;
    /// Every register the gadget may change (outputs and clobbers).
    RegSet writes() const { return outputs() | clobbers; }
    /// Bytes written to memory by the semantic operation (0 for register types).
    unsigned stored_bytes(unsigned word_bytes) const;

    friend bool operator==(const SemanticEntry&, const SemanticEntry&) = default;
};

/// Human-readable "Kind(param=value, ...)".
std::string describe(const ArchProfile& profile, const SemanticEntry& entry);

struct ClassifyOptions {
    unsigned random_runs = 3;
    bool corner_sweep = true;
    std::uint64_t seed = 1;
};

/// Traces used by classify(): `random_runs` random runs then the corner sweep.
std::vector<ExecutionTrace> classification_traces(const ArchProfile& profile, const std::vector<MicroOp>& ops,
                                                  const ClassifyOptions& options);

/// True iff the entry's postcondition holds on the trace.
bool hypothesis_check(const ArchProfile& profile, const SemanticEntry& entry, const ExecutionTrace& trace);

/// Every type instance consistent with all traces. Returns {} for halting or
/// undecodable gadgets.
std::vector<SemanticEntry> classify(const ArchProfile& profile, const RawGadget& gadget,
                                    const ClassifyOptions& options = {});

/// Same, on explicit traces (the first one proposes hypotheses).
std::vector<SemanticEntry> classify_traces(const ArchProfile& profile, const RawGadget& gadget,
                                           const std::vector<ExecutionTrace>& traces);

} // namespace majorca
