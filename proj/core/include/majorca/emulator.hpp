#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "majorca/arch.hpp"
#include "majorca/microop.hpp"

namespace majorca {

enum class InitPolicy { random, corner };

/// How never-written registers and memory words get their value.
/// Values are a pure function of (policy, seed, location), so the order in
/// which locations are first touched does not matter.
struct InitConfig {
    InitPolicy policy = InitPolicy::random;
    std::uint64_t seed = 0;
    unsigned corner_index = 0; // index into corner_values() for the corner policy

    friend bool operator==(const InitConfig&, const InitConfig&) = default;
};

/// {0, 1, all-ones, 2^(8k) for 0<k<word_bytes, an aligned address constant}
std::vector<Word> corner_values(const ArchProfile& profile);

inline constexpr Word kCornerAddress = 0x10000000;

/// Where a register's current value came from, as far as plain copies go.
struct Origin {
    enum class Kind : std::uint8_t { initial, stack, other };
    Kind kind = Kind::other;
    RegId reg = 0;           // initial
    std::int64_t offset = 0; // stack: offset from the initial SP

    friend bool operator==(const Origin&, const Origin&) = default;
};

struct MemAccess {
    Word address;
    unsigned width;
    friend bool operator==(const MemAccess&, const MemAccess&) = default;
};

struct StackRead {
    std::int64_t offset;
    RegId dst;
    friend bool operator==(const StackRead&, const StackRead&) = default;
};

class MachineState {
public:
    MachineState(const ArchProfile& profile, InitConfig init);

    const InitConfig& init() const { return init_; }

    Word reg(RegId r);
    Word read(RegRef ref);
    /// Applies the target's sub-register write rule.
    void write(RegRef ref, Word value);
    void set_reg(RegId r, Word value);

    Word load(Word address, unsigned width);
    void store(Word address, Word value, unsigned width);

    /// Value a location had (or would have had) before anything wrote it.
    Word initial_reg(RegId r) const;
    Word initial_mem(Word address, unsigned width) const;
    /// Current value without logging an access.
    Word peek_reg(RegId r) const { return regs_.at(r); }
    Word peek_mem(Word address, unsigned width) const;
    bool written(Word address) const { return mem_.contains(address); }

    Origin origin(RegId r) const { return origins_.at(r); }
    void set_origin(RegId r, Origin o) { origins_.at(r) = o; }
    Word initial_sp() const { return initial_sp_; }

    const std::vector<RegId>& reg_reads() const { return reg_reads_; }
    const std::vector<MemAccess>& mem_reads() const { return mem_reads_; }
    const std::vector<MemAccess>& mem_writes() const { return mem_writes_; }
    const std::vector<StackRead>& stack_reads() const { return stack_reads_; }
    void note_stack_read(StackRead r) { stack_reads_.push_back(r); }
    const std::unordered_map<Word, std::uint8_t>& memory() const { return mem_; }
    std::size_t reg_count() const { return regs_.size(); }

    /// Copies raw bytes into memory (payload staging); not logged as writes.
    void preload(Word address, std::span<const std::uint8_t> bytes);

    friend bool operator==(const MachineState& a, const MachineState& b) {
        return a.regs_ == b.regs_ && a.mem_ == b.mem_;
    }

private:
    std::uint8_t initial_byte(Word address) const;

    const ArchProfile* profile_;
    InitConfig init_;
    Word initial_sp_ = 0;
    std::vector<Word> regs_;
    std::vector<bool> reg_touched_;
    std::vector<Origin> origins_;
    std::unordered_map<Word, std::uint8_t> mem_;
    std::vector<RegId> reg_reads_;
    std::vector<MemAccess> mem_reads_;
    std::vector<MemAccess> mem_writes_;
    std::vector<StackRead> stack_reads_;
};

/// Executes one non-terminator micro-op.
void step(const ArchProfile& profile, MachineState& state, const MicroOp& op);

struct IpSource {
    enum class Kind : std::uint8_t { reg, stack, memory, syscall, none };
    Kind kind = Kind::none;
    RegId reg = 0;
    std::int64_t offset = 0;
    friend bool operator==(const IpSource&, const IpSource&) = default;
};

struct ControlTransfer {
    Word ip = 0;
    IpSource source;
};

/// Performs the control transfer of a terminator. For syscall, interrupt and
/// halt the state is unchanged and `ip` is 0.
ControlTransfer transfer(const ArchProfile& profile, MachineState& state, const Terminator& term,
                         Word return_address = 0);

struct ExecutionTrace {
    InitConfig init;
    std::vector<Word> initial_regs;
    std::vector<Word> final_regs;
    Word initial_sp = 0;
    std::int64_t sp_delta = 0;
    Word ip = 0;
    IpSource ip_source;
    Terminator terminator;
    std::vector<StackRead> stack_reads;
    std::vector<MemAccess> mem_reads;
    std::vector<MemAccess> mem_writes;
    std::vector<RegId> reg_reads; // first-read order
    std::unordered_map<Word, std::uint8_t> final_memory;
    bool unusable = false;

    Word initial_mem(const ArchProfile& profile, Word address, unsigned width) const;
    Word final_mem(const ArchProfile& profile, Word address, unsigned width) const;
    bool wrote(Word address) const { return final_memory.contains(address); }

    friend bool operator==(const ExecutionTrace&, const ExecutionTrace&) = default;
};

ExecutionTrace run_gadget(const ArchProfile& profile, std::span<const MicroOp> ops, InitConfig init);

/// Offsets within this window of the initial SP count as the gadget frame.
inline constexpr std::int64_t kStackWindow = 0x2000;

} // namespace majorca
