#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "majorca/badchar.hpp"
#include "majorca/classify.hpp"
#include "majorca/ingest.hpp"

namespace majorca {

/// clobberedBytes + 1e7 * FrameSize, divided by the stored bytes for memory
/// writers (StoreMem, ArithStore, InitMem). clobberedBytes counts full
/// register widths.
double score(const ArchProfile& profile, const SemanticEntry& entry);

/// All non-empty subsets of the loads of one gadget's LoadConst entries
/// (2^k - 1 entries). Registers left out of a subset become clobbers. Subsets
/// that would load two registers from the same slot are skipped.
std::vector<SemanticEntry> derive_pop_combinations(const std::vector<SemanticEntry>& same_address);

/// Loader + JmpReg gadget pairs: the loader loads the jump target register
/// from its frame and returns (or jumps) into the JOP gadget, whose address
/// sits in a fixed frame slot. Combined entries are re-classified.
std::vector<SemanticEntry> combine_jop(const ArchProfile& profile, const std::vector<RawGadget>& gadgets,
                                       const std::vector<SemanticEntry>& classified,
                                       const ClassifyOptions& options = {});

struct FilterOptions {
    BadBytes bad;
    std::int64_t frame_limit = 1000;
    AddressScreen address_screen = AddressScreen::full;
};

/// Drops entries over the frame limit or with a restricted byte in their
/// address (or JOP address), exact duplicates, and dominated entries.
std::vector<SemanticEntry> filter_entries(const ArchProfile& profile, std::vector<SemanticEntry> entries,
                                          const FilterOptions& options);

/// Parameter constraints for query(); unset fields match anything.
struct EntryQuery {
    std::optional<RegId> in{}, in2{}, out{}, addr{};
    std::optional<std::int64_t> off{};
    std::optional<Word> val{};
    std::optional<BinOp> op{};
    /// LoadConst: the entry loads exactly these registers (any order).
    std::optional<RegSet> loads{};
    /// The entry must not clobber any of these.
    RegSet avoid_clobbers = 0;

    bool matches(const SemanticEntry& e) const;
};

struct CatalogStats {
    std::size_t gadgets = 0;
    std::size_t classified = 0;
    std::size_t derived = 0;
    std::size_t jop = 0;
    std::size_t kept = 0;
};

class Catalog {
public:
    Catalog() = default;
    Catalog(ArchProfile profile, std::vector<SemanticEntry> entries);

    ArchProfile profile;
    std::vector<AddressRange> writable;
    std::vector<FunctionSymbol> functions;
    /// Gadget code by address; used by verification.
    std::vector<RawGadget> gadgets;
    CatalogStats stats;

    const std::vector<SemanticEntry>& entries() const { return entries_; }
    void set_entries(std::vector<SemanticEntry> entries);

    /// Matching entries by ascending (score, frame size, address).
    std::vector<const SemanticEntry*> query(GadgetKind kind, const EntryQuery& q = {}) const;
    /// Entries of a kind writing `reg` as an output.
    std::vector<const SemanticEntry*> producers(GadgetKind kind, RegId reg) const;

    const RawGadget* gadget_at(Word address) const;
    /// A Syscall entry, or an Int entry with the target's syscall vector.
    bool has_syscall() const;

private:
    void reindex();

    std::vector<SemanticEntry> entries_;
    std::vector<std::vector<std::size_t>> by_kind_;
    std::map<std::pair<int, RegId>, std::vector<std::size_t>> by_kind_reg_;
    std::map<Word, std::size_t> gadget_index_;
};

struct CatalogOptions {
    ClassifyOptions classify;
    FilterOptions filter;
};

/// ingest -> classify -> pop combinations -> JOP combining -> filter -> score.
Catalog build_catalog(const Corpus& corpus, const CatalogOptions& options = {});

/// Line-oriented `majorca-catalog v1` text format.
void write_catalog(std::ostream& os, const Catalog& catalog);
Catalog read_catalog(std::istream& is);

} // namespace majorca
