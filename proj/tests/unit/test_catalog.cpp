#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "majorca/catalog.hpp"
#include "majorca/error.hpp"

using namespace majorca;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Catalog catalog_of(const std::string& corpus_text) { return build_catalog(parse_corpus(corpus_text)); }

std::vector<SemanticEntry> loads_at(const Catalog& c, Word address) {
    std::vector<SemanticEntry> out;
    for (const auto& e : c.entries()) {
        if (e.kind == GadgetKind::LoadConst && e.address == address) out.push_back(e);
    }
    return out;
}

} // namespace

TEST_CASE("k pops give 2^k - 1 load combinations", "[catalog]") {
    for (int k = 1; k <= 4; ++k) {
        static const char* regs[] = {"rax", "rdi", "rsi", "rdx"};
        std::string text = "arch=x86_64\n0x401000: ";
        for (int i = 0; i < k; ++i) text += std::string("pop ") + regs[i] + " ; ";
        text += "ret\n";
        const Catalog c = catalog_of(text);
        auto es = loads_at(c, 0x401000);
        INFO(text);
        CHECK(es.size() == (std::size_t{1} << k) - 1);
        std::set<RegSet> seen;
        for (const auto& e : es) {
            seen.insert(e.outputs());
            // the pops left out of the subset are clobbers
            RegSet all = 0;
            for (int i = 0; i < k; ++i) all |= reg_bit(*c.profile.find_reg(regs[i]));
            CHECK((e.outputs() | e.clobbers) == all);
            CHECK((e.outputs() & e.clobbers) == 0);
            CHECK(e.frame.frame_size == 8 * (k + 1));
        }
        CHECK(seen.size() == es.size());
    }
}

TEST_CASE("a pop loaded twice keeps only the last slot", "[catalog]") {
    const Catalog c = catalog_of("arch=x86_64\n0x401000: pop rax ; pop rax ; ret\n");
    auto es = loads_at(c, 0x401000);
    REQUIRE(es.size() == 1);
    REQUIRE(es[0].params.loads.size() == 1);
    CHECK(es[0].params.loads[0].offset == 8);
}

TEST_CASE("query returns matching entries in score order", "[catalog][property]") {
    const Catalog c = build_catalog(parse_corpus(slurp(MAJORCA_TEST_DATA "/libstdcxx_x86_64.corpus")));
    const auto& p = c.profile;
    for (int k = 0; k < kGadgetKindCount; ++k) {
        const auto kind = static_cast<GadgetKind>(k);
        for (RegId r : p.data_regs()) {
            for (const EntryQuery& q : {EntryQuery{}, EntryQuery{.out = r}, EntryQuery{.avoid_clobbers = reg_bit(r)}}) {
                auto hits = c.query(kind, q);
                std::size_t expected = 0;
                for (const auto& e : c.entries()) expected += e.kind == kind && q.matches(e);
                CHECK(hits.size() == expected);
                for (std::size_t i = 0; i < hits.size(); ++i) {
                    CHECK(hits[i]->kind == kind);
                    CHECK(q.matches(*hits[i]));
                    CHECK((hits[i]->clobbers & q.avoid_clobbers) == 0);
                    if (i) CHECK(hits[i - 1]->score <= hits[i]->score);
                }
            }
        }
    }
}

TEST_CASE("score counts clobbered bytes and frame size", "[catalog]") {
    const ArchProfile p = make_arch_profile(ArchId::x86_64);
    auto first_move = [&](const std::string& text) {
        RawGadget g{0x401000, text, {}, decode_asm(p, text)};
        for (const auto& e : classify(p, g)) {
            if (e.kind == GadgetKind::MoveReg) return e;
        }
        FAIL("no move in " << text);
        return SemanticEntry{};
    };
    CHECK(score(p, first_move("mov rax, rbx ; ret")) == Catch::Approx(1e7 * 8));
    CHECK(score(p, first_move("mov rax, rbx ; pop rcx ; ret")) == Catch::Approx(8 + 1e7 * 16));
    // the dominated move is filtered out
    const Catalog c = catalog_of("arch=x86_64\n0x401000: mov rax, rbx ; pop rcx ; ret\n"
                                 "0x401010: mov rax, rbx ; ret\n");
    auto mv = c.query(GadgetKind::MoveReg);
    REQUIRE(mv.size() == 1);
    CHECK(mv[0]->address == 0x401010);
}

TEST_CASE("filter drops over-limit frames, bad addresses and dominated entries", "[catalog]") {
    const auto corpus = parse_corpus("arch=x86_64\n0x401000: pop rax ; ret\n0x400a00: pop rax ; ret\n"
                                     "0x401020: pop rax ; pop rbx ; ret\n0x401030: add rsp, 0x800 ; ret\n");
    CatalogOptions opt;
    opt.filter.bad = BadBytes{0x0a};
    const Catalog c = build_catalog(corpus, opt);
    for (const auto& e : c.entries()) {
        CHECK(screen_address(c.profile, e.address, opt.filter.bad));
        CHECK(e.frame.frame_size <= opt.filter.frame_limit);
    }
    auto rax = c.query(GadgetKind::LoadConst, {.loads = reg_bit(*c.profile.find_reg("rax"))});
    // the clobbering variant of 0x401020 is dominated by 0x401000
    REQUIRE(rax.size() == 1);
    CHECK(rax[0]->address == 0x401000);
    CHECK(c.query(GadgetKind::ShiftStack).empty());
}

TEST_CASE("JOP pairs combine into entries that return", "[catalog]") {
    const Catalog c = build_catalog(parse_corpus(slurp(MAJORCA_TEST_DATA "/libstdcxx_x86_64.corpus")));
    const auto& p = c.profile;
    const RegId rsi = *p.find_reg("rsi");
    const RegId rdi = *p.find_reg("rdi");
    auto zero_rsi = c.query(GadgetKind::InitConst, {.out = rsi, .val = 0});
    auto jop = std::find_if(zero_rsi.begin(), zero_rsi.end(), [](const SemanticEntry* e) { return e->jop_address; });
    REQUIRE(jop != zero_rsi.end());
    CHECK((*jop)->address == 0x5d7d0b);
    CHECK(*(*jop)->jop_address == 0x41f378);
    REQUIRE((*jop)->frame.fixed.size() == 1);
    CHECK((*jop)->frame.fixed[0].value == 0x41f378);
    auto edi = c.query(GadgetKind::InitConst, {.out = rdi, .val = 0xb79070});
    CHECK(std::any_of(edi.begin(), edi.end(), [](const SemanticEntry* e) { return e->jop_address == 0x4006ec; }));
    CHECK(c.stats.jop >= 2);
}

TEST_CASE("catalog text round trips", "[catalog]") {
    for (const char* f : {"/execve5.corpus", "/libstdcxx_x86_64.corpus", "/grep_mips.corpus"}) {
        const Catalog c = build_catalog(parse_corpus(slurp(std::string(MAJORCA_TEST_DATA) + f)));
        std::stringstream ss;
        write_catalog(ss, c);
        const Catalog back = read_catalog(ss);
        INFO(f);
        CHECK(back.profile.id == c.profile.id);
        CHECK(back.writable == c.writable);
        CHECK(back.functions == c.functions);
        REQUIRE(back.entries().size() == c.entries().size());
        for (std::size_t i = 0; i < c.entries().size(); ++i) {
            const auto& a = c.entries()[i];
            const auto& b = back.entries()[i];
            CHECK(a.address == b.address);
            CHECK(a.kind == b.kind);
            CHECK(a.params == b.params);
            CHECK(a.clobbers == b.clobbers);
            CHECK(a.frame == b.frame);
            CHECK(a.jop_address == b.jop_address);
            CHECK(a.score == Catch::Approx(b.score));
        }
    }
    std::stringstream junk("not a catalog\n");
    CHECK_THROWS_AS(read_catalog(junk), Error);
}

TEST_CASE("has_syscall sees syscall and int 0x80", "[catalog]") {
    CHECK(catalog_of("arch=x86_64\n0x401000: syscall\n").has_syscall());
    CHECK(catalog_of("arch=x86_32\n0x8048000: int 0x80\n").has_syscall());
    CHECK_FALSE(catalog_of("arch=x86_64\n0x401000: pop rax ; ret\n").has_syscall());
}
