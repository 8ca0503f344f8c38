#include <catch_amalgamated.hpp>

#include <set>

#include "majorca/classify.hpp"
#include "oracles.hpp"

using namespace majorca;

namespace {

RawGadget gadget(const ArchProfile& p, const std::string& text, Word address = 0x1000) {
    RawGadget g;
    g.address = address;
    g.asm_text = text;
    g.ops = decode_asm(p, text);
    return g;
}

std::set<std::string> labels(const ArchProfile& p, const std::vector<SemanticEntry>& es) {
    std::set<std::string> s;
    for (const auto& e : es) s.insert(describe(p, e));
    return s;
}

const std::vector<std::pair<ArchId, std::string>> kSample = {
    {ArchId::x86_64, "pop rax ; pop rdi ; pop rsi ; ret"},
    {ArchId::x86_64, "mov rax, rbx ; pop rcx ; ret"},
    {ArchId::x86_64, "add rax, rbx ; xor rdx, rdx ; ret"},
    {ArchId::x86_64, "mov qword ptr [rdi], rbp ; pop rbx ; ret"},
    {ArchId::x86_64, "mov rax, qword ptr [rbx + 8] ; ret"},
    {ArchId::x86_64, "mov eax, 0x3b ; jmp rcx"},
    {ArchId::x86_64, "neg rax ; pop rbx ; ret"},
    {ArchId::x86_32, "pop eax ; pop ebx ; pop ecx ; pop edx ; ret"},
    {ArchId::x86_32, "xor eax, ebx ; ret"},
    {ArchId::mips32be, "move $a0, $s0 ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"},
    {ArchId::mips32be, "lw $ra, 0x24($sp) ; sw $s1, 0($s0) ; lw $s1, 0x20($sp) ; lw $s0, 0x1c($sp) ; jr $ra ; "
                       "addiu $sp, $sp, 0x28"},
};

} // namespace

TEST_CASE("golden suite classifies exactly", "[classify][golden]") {
    auto cases = oracle::read_golden(MAJORCA_TEST_DATA "/golden30.txt");
    REQUIRE(cases.size() == 30);
    for (const auto& c : cases) {
        const ArchProfile p = make_arch_profile(c.arch);
        INFO(c.asm_text);
        CHECK(labels(p, classify(p, gadget(p, c.asm_text))) == c.labels);
    }
}

TEST_CASE("more runs never add hypotheses", "[classify][property]") {
    for (const auto& [id, text] : kSample) {
        const ArchProfile p = make_arch_profile(id);
        const RawGadget g = gadget(p, text);
        for (std::uint64_t seed : {1u, 7u, 42u}) {
            auto traces = classification_traces(p, g.ops, {3, true, seed});
            std::set<std::string> prev;
            for (std::size_t n = 1; n <= traces.size(); ++n) {
                std::vector<ExecutionTrace> head(traces.begin(), traces.begin() + static_cast<std::ptrdiff_t>(n));
                auto cur = labels(p, classify_traces(p, g, head));
                INFO(text << " with " << n << " traces");
                if (n > 1) CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
                prev = cur;
            }
        }
    }
}

TEST_CASE("every register an accepted entry changes is an output or a clobber", "[classify][property]") {
    for (const auto& [id, text] : kSample) {
        const ArchProfile p = make_arch_profile(id);
        const RawGadget g = gadget(p, text);
        auto entries = classify(p, g);
        CHECK_FALSE(entries.empty());
        for (const auto& e : entries) {
            for (std::uint64_t seed = 1000; seed < 1020; ++seed) {
                auto t = run_gadget(p, g.ops, {InitPolicy::random, seed, 0});
                for (RegId r : p.data_regs()) {
                    if (t.initial_regs[r] == t.final_regs[r]) continue;
                    INFO(text << " / " << describe(p, e) << " changes " << p.reg_name(r));
                    CHECK(has_reg(e.writes(), r));
                }
                CHECK(hypothesis_check(p, e, t));
            }
        }
    }
}

TEST_CASE("classification is deterministic for a seed", "[classify]") {
    for (const auto& [id, text] : kSample) {
        const ArchProfile p = make_arch_profile(id);
        const RawGadget g = gadget(p, text);
        CHECK(classify(p, g, {3, true, 5}) == classify(p, g, {3, true, 5}));
    }
}

TEST_CASE("a coincidence on one run is removed by the others", "[classify]") {
    // with one trace, `mov rax, rbx` can look like many things; the full run
    // set leaves only the move
    const ArchProfile p = make_arch_profile(ArchId::x86_64);
    const RawGadget g = gadget(p, "mov rax, rbx ; ret");
    CHECK(labels(p, classify(p, g)) == std::set<std::string>{"MoveReg(rbx->rax)"});
}

TEST_CASE("clobbers and frames of a mixed gadget", "[classify]") {
    const ArchProfile p = make_arch_profile(ArchId::x86_64);
    auto es = classify(p, gadget(p, "mov rax, rbx ; pop rcx ; ret"));
    auto mv = std::find_if(es.begin(), es.end(), [](const SemanticEntry& e) { return e.kind == GadgetKind::MoveReg; });
    REQUIRE(mv != es.end());
    CHECK(mv->clobbers == reg_bit(*p.find_reg("rcx")));
    CHECK(mv->frame.frame_size == 16);
    CHECK(mv->frame.next_ip_slot == 8);
}

TEST_CASE("gadgets that halt or fit no type yield nothing", "[classify]") {
    const ArchProfile p = make_arch_profile(ArchId::x86_64);
    CHECK(classify(p, gadget(p, "hlt")).empty());
    // partial register write, and 0x10 - rax
    CHECK(classify(p, gadget(p, "mov al, bl ; ret")).empty());
    CHECK(classify(p, gadget(p, "neg rax ; add rax, 0x10 ; ret")).empty());
}

TEST_CASE("kind names round trip", "[classify]") {
    for (int k = 0; k < kGadgetKindCount; ++k) {
        auto kind = static_cast<GadgetKind>(k);
        CHECK(parse_gadget_kind(to_string(kind)) == kind);
    }
    CHECK_FALSE(parse_gadget_kind("Bogus"));
}
