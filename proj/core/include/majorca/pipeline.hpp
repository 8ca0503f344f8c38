#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "majorca/catalog.hpp"
#include "majorca/dag.hpp"
#include "majorca/emit.hpp"
#include "majorca/goal.hpp"
#include "majorca/verify.hpp"

namespace majorca {

struct ChainOptions {
    BadBytes bad;
    AddressScreen address_screen = AddressScreen::full;
    std::optional<Word> data_addr;
    double timeout_s = 60;
    std::size_t max_candidates = 20000;
    std::size_t schedules_per_dag = 16;
    /// Reject payloads that do not pass emulation before returning them.
    bool emulate = true;
    VerifyOptions verify;
};

enum class ChainStatus { ok, no_chain, timeout };

struct ChainResult {
    ChainStatus status = ChainStatus::no_chain;
    std::optional<Payload> payload;
    GadgetDag dag;
    std::vector<int> schedule;
    std::string detail;
    std::size_t candidates = 0;
    std::size_t schedules = 0;
};

/// Candidate DAGs x schedules until one linearizes (and emulates, when
/// enabled). Throws Error for goals the target cannot express at all (unknown
/// system call name).
ChainResult build_chain(const Catalog& catalog, const Goal& goal, const ChainOptions& options = {});

struct BenchOptions {
    CatalogOptions catalog;
    ChainOptions chain;
    VerifyOptions verify;
    unsigned threads = 0; // 0: hardware concurrency
};

/// Per target: parse the corpus, build the catalog, generate (TL on timeout,
/// NOGEN when exhausted) and verify with `verify.repeats` seeds.
BenchReport run_benchmark(const std::vector<BenchTarget>& targets, const BenchOptions& options = {});

} // namespace majorca
