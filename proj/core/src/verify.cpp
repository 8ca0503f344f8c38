#include "majorca/verify.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "majorca/emulator.hpp"
#include "majorca/error.hpp"

namespace majorca {

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::ok: return "OK";
    case Verdict::fail: return "F";
    case Verdict::timeout: return "TL";
    case Verdict::nogen: return "NOGEN";
    }
    return "?";
}

std::optional<Verdict> parse_verdict(std::string_view t) {
    if (t == "OK") return Verdict::ok;
    if (t == "F") return Verdict::fail;
    if (t == "TL") return Verdict::timeout;
    if (t == "NOGEN") return Verdict::nogen;
    return std::nullopt;
}

namespace {

std::string hex(Word v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

/// Checks that `v` carries `a`: equal integers, a pointer to the string and
/// its NUL, or a pointer to a NULL-terminated table.
bool arg_holds(const ArchProfile& p, const MachineState& s, Word v, const GoalArg& a, std::string& why) {
    const unsigned wb = p.word_bytes;
    switch (a.kind) {
    case GoalArg::Kind::integer:
        if ((v & p.mask()) == (a.value & p.mask())) return true;
        why = "holds " + hex(v) + ", expected " + hex(a.value & p.mask());
        return false;
    case GoalArg::Kind::string:
        for (std::size_t i = 0; i <= a.bytes.size(); ++i) {
            auto want = i < a.bytes.size() ? static_cast<std::uint8_t>(a.bytes[i]) : std::uint8_t{0};
            auto got = static_cast<std::uint8_t>(s.peek_mem(v + i, 1));
            if (got != want) {
                why = "string at " + hex(v) + " differs at byte " + std::to_string(i);
                return false;
            }
        }
        return true;
    case GoalArg::Kind::array:
        for (std::size_t i = 0; i <= a.items.size(); ++i) {
            Word w = s.peek_mem(v + i * wb, wb);
            if (i == a.items.size()) {
                if (w != 0) {
                    why = "array at " + hex(v) + " is not NULL-terminated";
                    return false;
                }
                break;
            }
            if (!arg_holds(p, s, w, a.items[i], why)) {
                why = "array item " + std::to_string(i) + ": " + why;
                return false;
            }
        }
        return true;
    }
    return false;
}

VerifyResult contract(const ArchProfile& p, const MachineState& s, const Goal& goal, const std::vector<Word>& values,
                      std::size_t steps, const std::string& where) {
    for (std::size_t i = 0; i < goal.args.size(); ++i) {
        std::string why;
        if (!arg_holds(p, s, values[i], goal.args[i], why))
            return {Verdict::fail, where + ": argument " + std::to_string(i) + " " + why, steps};
    }
    return {Verdict::ok, where, steps};
}

VerifyResult call_contract(const ArchProfile& p, const MachineState& s, const Goal& goal, std::size_t steps,
                           Word target) {
    std::vector<Word> vals;
    for (std::size_t i = 0; i < goal.args.size(); ++i) {
        if (!p.call_args.empty()) {
            if (i >= p.call_args.size()) return {Verdict::fail, "too many call arguments", steps};
            vals.push_back(s.peek_reg(p.call_args[i]));
        } else {
            Word sp = s.peek_reg(p.sp);
            vals.push_back(s.peek_mem(sp + p.word_bytes * (i + 1), p.word_bytes));
        }
    }
    return contract(p, s, goal, vals, steps, "call " + hex(target));
}

} // namespace

VerifyResult execute_payload(const ArchProfile& p, const std::vector<RawGadget>& code,
                             std::span<const std::uint8_t> payload, const Goal& goal, std::uint64_t seed,
                             std::size_t step_budget, const std::vector<FunctionSymbol>& functions) {
    std::unordered_map<Word, const RawGadget*> at;
    for (const auto& g : code) at.emplace(g.address, &g);
    std::unordered_map<Word, bool> targets;
    if (goal.kind == Goal::Kind::call) targets[goal.target] = true;
    for (const auto& f : functions) {
        if (goal.kind == Goal::Kind::syscall && f.name == goal.name) targets[f.address] = true;
    }

    const unsigned wb = p.word_bytes;
    if (payload.size() < wb) return {Verdict::fail, "payload shorter than one word", 0};
    MachineState s(p, InitConfig{InitPolicy::random, seed, 0});
    const Word sp0 = s.initial_sp();
    s.preload(sp0, payload);
    Word ip = s.peek_mem(sp0, wb);
    s.set_reg(p.sp, sp0 + wb);
    std::size_t steps = 0;
    try {
        for (;;) {
            if (targets.contains(ip)) return call_contract(p, s, goal, steps, ip);
            auto it = at.find(ip);
            if (it == at.end()) return {Verdict::fail, "stray IP " + hex(ip), steps};
            const RawGadget& g = *it->second;
            for (const auto& op : g.ops) {
                if (++steps > step_budget) return {Verdict::fail, "step budget exhausted at " + hex(g.address), steps};
                if (!is_terminator(op)) {
                    step(p, s, op);
                    continue;
                }
                const auto& term = std::get<Terminator>(op);
                const std::string where = "gadget " + hex(g.address);
                if (term.kind == TermKind::halt) return {Verdict::fail, where + " halts", steps};
                if (term.kind == TermKind::syscall || term.kind == TermKind::interrupt) {
                    if (term.kind == TermKind::interrupt && term.vector != p.syscall_interrupt)
                        return {Verdict::fail, where + ": interrupt " + hex(term.vector) + " is not a system call",
                                steps};
                    if (goal.kind != Goal::Kind::syscall) return {Verdict::fail, where + ": unexpected system call", steps};
                    auto num = p.syscall_table.find(goal.name);
                    if (num == p.syscall_table.end())
                        return {Verdict::fail, where + ": system call for a goal without a number", steps};
                    Word n = s.peek_reg(p.syscall_number);
                    if (n != num->second)
                        return {Verdict::fail,
                                where + ": system call number " + hex(n) + ", expected " + hex(num->second), steps};
                    if (goal.args.size() > p.syscall_args.size()) return {Verdict::fail, "too many arguments", steps};
                    std::vector<Word> vals;
                    for (std::size_t i = 0; i < goal.args.size(); ++i) vals.push_back(s.peek_reg(p.syscall_args[i]));
                    return contract(p, s, goal, vals, steps, where);
                }
                ip = transfer(p, s, term).ip;
            }
        }
    } catch (const Error& e) {
        return {Verdict::fail, std::string("emulation error: ") + e.what(), steps};
    }
}

VerifyResult verify_payload(const ArchProfile& profile, const std::vector<RawGadget>& code,
                            std::span<const std::uint8_t> payload, const Goal& goal, const VerifyOptions& options,
                            const std::vector<FunctionSymbol>& functions) {
    VerifyResult last{Verdict::fail, "no runs", 0};
    for (unsigned i = 0; i < std::max(1u, options.repeats); ++i) {
        last = execute_payload(profile, code, payload, goal, options.seed + i, options.step_budget, functions);
        if (last.verdict != Verdict::ok) {
            last.detail = "run " + std::to_string(i + 1) + ": " + last.detail;
            return last;
        }
    }
    return last;
}

std::optional<double> chaining_metric(std::size_t ok_any, std::size_t has_syscall) {
    if (has_syscall == 0) return std::nullopt;
    return static_cast<double>(ok_any) / static_cast<double>(has_syscall);
}

std::vector<BenchTarget> read_goals(const std::filesystem::path& goals_file) {
    std::ifstream in(goals_file);
    if (!in) throw Error("cannot read " + goals_file.string());
    std::vector<BenchTarget> out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) throw ParseError("goals: expected '<corpus>: <goal>'", no, 1);
        std::string file = line.substr(first, colon - first);
        while (!file.empty() && (file.back() == ' ' || file.back() == '\t')) file.pop_back();
        BenchTarget t;
        t.name = file;
        t.corpus = goals_file.parent_path() / file;
        t.goal = parse_goal(line.substr(colon + 1));
        out.push_back(std::move(t));
    }
    return out;
}

std::size_t BenchReport::count(Verdict v) const {
    std::size_t n = 0;
    for (const auto& r : rows) n += !r.corpus_error && r.verdict == v;
    return n;
}

std::size_t BenchReport::has_syscall() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += !r.corpus_error && r.has_syscall;
    return n;
}

std::optional<double> BenchReport::metric() const {
    std::size_t ok = 0;
    for (const auto& r : rows) ok += !r.corpus_error && r.has_syscall && r.verdict == Verdict::ok;
    return chaining_metric(ok, has_syscall());
}

std::string BenchReport::tsv() const {
    std::ostringstream os;
    os << "target\tverdict\thas_syscall\tseconds\tdetail\n";
    for (const auto& r : rows) {
        os << r.name << '\t' << (r.corpus_error ? std::string("ERROR") : std::string(to_string(r.verdict))) << '\t'
           << (r.has_syscall ? 1 : 0) << '\t' << std::fixed << std::setprecision(3) << r.seconds << '\t' << r.detail
           << '\n';
    }
    return os.str();
}

std::string BenchReport::table() const {
    std::ostringstream os;
    os << std::left << std::setw(28) << "target" << std::setw(8) << "verdict" << "syscall\n";
    for (const auto& r : rows) {
        os << std::setw(28) << r.name << std::setw(8)
           << (r.corpus_error ? std::string("ERROR") : std::string(to_string(r.verdict))) << (r.has_syscall ? "yes" : "no")
           << '\n';
    }
    os << '\n';
    os << std::setw(28) << "OK" << count(Verdict::ok) << '\n';
    os << std::setw(28) << "F" << count(Verdict::fail) << '\n';
    os << std::setw(28) << "TL" << count(Verdict::timeout) << '\n';
    os << std::setw(28) << "NOGEN" << count(Verdict::nogen) << '\n';
    os << std::setw(28) << "HAS_SYSCALL" << has_syscall() << '\n';
    os << std::setw(28) << "ROP chaining metric";
    if (auto m = metric()) os << std::fixed << std::setprecision(2) << *m << '\n';
    else os << "N/A\n";
    return os.str();
}

BenchReport read_bench_tsv(std::istream& is) {
    BenchReport rep;
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.starts_with("target\t") || line.starts_with("#")) continue;
        std::vector<std::string> cols;
        std::istringstream ls(line);
        std::string c;
        while (std::getline(ls, c, '\t')) cols.push_back(c);
        if (cols.size() < 3) throw ParseError("verdicts: expected target, verdict, has_syscall", no, 1);
        BenchRow r;
        r.name = cols[0];
        if (cols[1] == "ERROR") {
            r.corpus_error = true;
        } else if (auto v = parse_verdict(cols[1])) {
            r.verdict = *v;
        } else {
            throw ParseError("verdicts: unknown verdict '" + cols[1] + "'", no, 1);
        }
        r.has_syscall = cols[2] == "1" || cols[2] == "yes";
        if (cols.size() > 3) r.seconds = std::atof(cols[3].c_str());
        if (cols.size() > 4) r.detail = cols[4];
        rep.rows.push_back(std::move(r));
    }
    return rep;
}

BenchReport merge_reports(const std::vector<BenchReport>& reports) {
    BenchReport out;
    std::map<std::string, std::size_t> at;
    for (const auto& rep : reports) {
        for (const auto& r : rep.rows) {
            auto [it, fresh] = at.try_emplace(r.name, out.rows.size());
            if (fresh) {
                out.rows.push_back(r);
                continue;
            }
            BenchRow& m = out.rows[it->second];
            m.has_syscall = m.has_syscall || r.has_syscall;
            m.corpus_error = m.corpus_error && r.corpus_error;
            if (r.verdict == Verdict::ok) m.verdict = Verdict::ok;
        }
    }
    return out;
}

} // namespace majorca
