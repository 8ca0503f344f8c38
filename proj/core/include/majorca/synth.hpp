#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "majorca/badchar.hpp"
#include "majorca/catalog.hpp"
#include "majorca/dag.hpp"
#include "majorca/goal.hpp"

namespace majorca {

/// One invertible register-to-register arc: copy, +c, xor c or negation.
struct MoveArc {
    const SemanticEntry* entry = nullptr;
    RegId from = 0;
    RegId to = 0;

    Word apply(Word v, unsigned word_bytes) const;
    Word invert(Word v, unsigned word_bytes) const;
};

struct MovePath {
    std::vector<MoveArc> arcs;
    RegId from = 0;
    RegId to = 0;

    Word apply(Word v, unsigned word_bytes) const;
    /// The input that makes the path produce `v`.
    Word invert(Word v, unsigned word_bytes) const;
    bool copies_only() const;
    RegSet clobbers() const;
    double cost() const;
};

class MoveGraph {
public:
    explicit MoveGraph(const Catalog& catalog, std::size_t arcs_per_pair = 2);

    /// Simple paths from `in` to `out`, shortest first; the empty path when
    /// in == out.
    std::vector<MovePath> move_chains(RegId in, RegId out, std::size_t limit = 8, std::size_t max_len = 3) const;
    /// Non-empty paths ending at `out`, shortest (then cheapest) first. No
    /// register repeats except through self-loop arcs, each used once.
    std::vector<MovePath> chains_into(RegId out, std::size_t limit = 16, std::size_t max_len = 3) const;

    const std::vector<MoveArc>& arcs() const { return arcs_; }

private:
    std::vector<MoveArc> arcs_;
    std::vector<std::vector<std::size_t>> by_to_;
};

/// A register value the chain has to establish.
struct RegValue {
    RegId reg = 0;
    Word value = 0;
    bool text = false; // raw string bytes; rendered as a bytes literal
};

struct SynthOptions {
    BadBytes bad;
    AddressScreen address_screen = AddressScreen::full;
    std::uint8_t fill = 0x41;
    /// Data area for strings and arrays; defaults to the first writable range.
    std::optional<Word> data_addr;
    std::size_t options_per_target = 8;
    std::size_t covers_per_plan = 3;
    std::size_t plans_per_group = 24;
    std::size_t plans_per_store = 6;
    std::size_t tuples_per_terminal = 400;
    /// Plan search stops early once this passes.
    std::optional<std::chrono::steady_clock::time_point> deadline;

    bool expired() const { return deadline && std::chrono::steady_clock::now() > *deadline; }
};

/// Gadget DAGs establishing all values at once. Each has one dangling output
/// edge per register.
std::vector<GadgetDag> load_dags(const Catalog& catalog, const std::vector<RegValue>& values,
                                 const SynthOptions& options, std::size_t limit = 24);

/// Gadget DAGs writing `value` to memory at `address`. Each has a single
/// dangling DEP output from its last memory writer.
std::vector<GadgetDag> store_mem_dags(const Catalog& catalog, Word address, Word value, bool text,
                                      const SynthOptions& options, std::size_t limit = 6);

/// A word of argument data placed in writable memory.
struct DataWord {
    Word address = 0;
    Word value = 0;
    bool text = false;
};

/// Argument values after placing strings and arrays in memory.
struct ArgLayout {
    std::vector<Word> values;
    std::vector<DataWord> words;
};

/// Strings get a NUL terminator and fill padding to a word boundary; arrays
/// become NULL-terminated word tables. Throws Error when memory is needed but
/// no writable address is known.
ArgLayout layout_args(const Catalog& catalog, const std::vector<GoalArg>& args, const SynthOptions& options);

/// Lazily produced candidate DAGs for a goal, cheapest first within each
/// terminal; syscall-gadget and wrapper-function terminals alternate.
class CandidateStream {
public:
    CandidateStream(const Catalog& catalog, const Goal& goal, SynthOptions options);
    ~CandidateStream();
    CandidateStream(CandidateStream&&) noexcept;

    std::optional<GadgetDag> next();
    /// Why nothing was produced (e.g. no terminal gadget).
    const std::string& diagnostic() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Tuples of indices into lists of the given sizes in non-decreasing index
/// sum order, at most `cap` of them.
class IndexSumEnumerator {
public:
    IndexSumEnumerator(std::vector<std::size_t> sizes, std::size_t cap);
    std::optional<std::vector<std::size_t>> next();

private:
    std::vector<std::size_t> sizes_;
    std::size_t cap_;
    std::size_t produced_ = 0;
    std::size_t sum_ = 0;
    std::size_t max_sum_ = 0;
    std::vector<std::vector<std::size_t>> pending_;
};

} // namespace majorca
