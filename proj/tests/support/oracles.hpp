#pragma once

// Reference implementations the tests compare the library against. Nothing
// here calls into the code under test beyond plain data types.

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "majorca/arch.hpp"
#include "majorca/badchar.hpp"
#include "majorca/dag.hpp"

namespace oracle {

using majorca::Word;

/// Interprets the builder-script dialect (pack lines, bytes literals,
/// `n * fill` runs) and returns the bytes it would write. Throws
/// std::runtime_error on any line outside the dialect.
std::vector<std::uint8_t> run_builder_script(std::string_view script);

/// Whether clean lv, rv with lv + rv == value (mod 2^(8*width)) exist, by a
/// per-byte carry table.
bool addends_exist(Word value, unsigned width, const majorca::BadBytes& bad);

/// Topological order plus clobber windows: no node strictly inside an edge's
/// producer..consumer window (producer..end for outputs) writes its register.
bool schedule_ok(const majorca::ScheduleGraph& g, const std::vector<int>& order);

/// Every permutation accepted by schedule_ok.
std::set<std::vector<int>> brute_schedules(const majorca::ScheduleGraph& g);

/// Random DAG of 1..max_nodes nodes over registers 0..kGraphRegs-1. Producers write the
/// registers they output; every node reaches an output.
inline constexpr int kGraphRegs = 8;
majorca::ScheduleGraph random_graph(std::mt19937_64& rng, int max_nodes);

/// Every exact cover, each as a sorted row list.
std::set<std::vector<int>> brute_covers(int universe, const std::vector<std::vector<int>>& rows);

struct GoldenCase {
    majorca::ArchId arch;
    std::string asm_text;
    std::set<std::string> labels;
};

/// `arch | asm => label && label` lines.
std::vector<GoldenCase> read_golden(const std::filesystem::path& path);

} // namespace oracle
