#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "majorca/arch.hpp"
#include "majorca/goal.hpp"
#include "majorca/ingest.hpp"

namespace majorca {

enum class Verdict { ok, fail, timeout, nogen };

/// "OK", "F", "TL", "NOGEN".
std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view text);

struct VerifyResult {
    Verdict verdict = Verdict::fail;
    std::string detail;
    std::size_t steps = 0;
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    unsigned repeats = 10;
    std::size_t step_budget = 10000;
};

/// Loads `payload` at SP, pops the leading word into IP and steps gadget by
/// gadget through `code` until a system call, a call target, a stray IP or
/// the step budget. Uninitialized registers and memory come from `seed`.
/// `functions` lets syscall goals be met through a wrapper of the same name.
VerifyResult execute_payload(const ArchProfile& profile, const std::vector<RawGadget>& code,
                             std::span<const std::uint8_t> payload, const Goal& goal, std::uint64_t seed,
                             std::size_t step_budget = 10000, const std::vector<FunctionSymbol>& functions = {});

/// `repeats` runs with distinct seeds; OK only if every run is OK.
VerifyResult verify_payload(const ArchProfile& profile, const std::vector<RawGadget>& code,
                            std::span<const std::uint8_t> payload, const Goal& goal, const VerifyOptions& options = {},
                            const std::vector<FunctionSymbol>& functions = {});

/// M = OK / HAS_SYSCALL; nullopt when the denominator is zero.
std::optional<double> chaining_metric(std::size_t ok_any, std::size_t has_syscall);

struct BenchTarget {
    std::string name;
    std::filesystem::path corpus;
    Goal goal;
};

/// `goals.txt` lines: `<corpus file>: <goal>`; paths are relative to the
/// file's directory. `#` starts a comment.
std::vector<BenchTarget> read_goals(const std::filesystem::path& goals_file);

struct BenchRow {
    std::string name;
    Verdict verdict = Verdict::nogen;
    bool has_syscall = false;
    bool corpus_error = false;
    double seconds = 0;
    std::string detail;
};

struct BenchReport {
    std::vector<BenchRow> rows;

    std::size_t count(Verdict v) const;
    std::size_t has_syscall() const;
    std::optional<double> metric() const;

    /// Machine-readable: name, verdict, has_syscall, seconds, detail.
    std::string tsv() const;
    /// Columns OK, F, TL, NOGEN, HAS_SYSCALL and the metric.
    std::string table() const;
};

BenchReport read_bench_tsv(std::istream& is);

/// Aggregates several verdict sets by target name: a target counts as OK if
/// any set has it OK, and as syscall-capable if any set says so.
BenchReport merge_reports(const std::vector<BenchReport>& reports);

} // namespace majorca
