#include "majorca/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "majorca/error.hpp"
#include "majorca/synth.hpp"

namespace majorca {

ChainResult build_chain(const Catalog& catalog, const Goal& goal, const ChainOptions& options) {
    using clock = std::chrono::steady_clock;
    const auto deadline =
        clock::now() + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(options.timeout_s));
    const ArchProfile& profile = catalog.profile;
    ChainResult res;

    if (goal.kind == Goal::Kind::syscall && !profile.syscall_table.contains(goal.name) &&
        std::none_of(catalog.functions.begin(), catalog.functions.end(),
                     [&](const FunctionSymbol& f) { return f.name == goal.name; }))
        syscall_number(profile, goal); // throws with the name

    auto fill = pick_fill(options.bad);
    if (!fill) {
        res.detail = "every byte value is restricted";
        return res;
    }
    SynthOptions so;
    so.bad = options.bad;
    so.address_screen = options.address_screen;
    so.fill = *fill;
    so.data_addr = options.data_addr;
    so.deadline = deadline;

    std::optional<CandidateStream> stream;
    try {
        stream.emplace(catalog, goal, so);
    } catch (const Error& e) {
        res.detail = e.what();
        return res;
    }
    auto timed_out = [&]() { return clock::now() > deadline; };
    std::string last_failure;
    while (res.candidates < options.max_candidates) {
        auto dag = stream->next();
        if (timed_out()) {
            res.status = ChainStatus::timeout;
            res.detail = "time limit reached after " + std::to_string(res.candidates) + " candidates";
            return res;
        }
        if (!dag) break;
        ++res.candidates;
        if (auto v = validate(*dag)) {
            last_failure = "invalid candidate: " + v->what;
            continue;
        }
        Scheduler sched(schedule_graph(*dag));
        sched.set_budget(20000);
        for (std::size_t k = 0; k < options.schedules_per_dag; ++k) {
            auto order = sched.next();
            if (!order) break;
            ++res.schedules;
            std::vector<const DagNode*> nodes;
            for (int i : *order) nodes.push_back(&dag->nodes[i]);
            try {
                Payload p = linearize(profile, nodes, options.bad, *fill, options.address_screen);
                p.note = format_goal(goal);
                if (options.emulate) {
                    auto bytes = p.serialize();
                    auto r = verify_payload(profile, catalog.gadgets, bytes, goal, options.verify, catalog.functions);
                    if (r.verdict != Verdict::ok) {
                        last_failure = "emulation: " + r.detail;
                        continue;
                    }
                }
                res.status = ChainStatus::ok;
                res.payload = std::move(p);
                res.dag = std::move(*dag);
                res.schedule = *order;
                return res;
            } catch (const LinearizeError& e) {
                last_failure = e.what();
            }
            if (timed_out()) {
                res.status = ChainStatus::timeout;
                res.detail = "time limit reached after " + std::to_string(res.candidates) + " candidates";
                return res;
            }
        }
    }
    res.detail = stream->diagnostic();
    if (!last_failure.empty()) res.detail += (res.detail.empty() ? "" : "; last failure: ") + last_failure;
    return res;
}

namespace {

BenchRow bench_one(const BenchTarget& t, const BenchOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    BenchRow row;
    row.name = t.name;
    auto elapsed = [&]() { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    Catalog cat;
    try {
        std::ifstream in(t.corpus);
        if (!in) throw Error("cannot read " + t.corpus.string());
        std::stringstream ss;
        ss << in.rdbuf();
        cat = build_catalog(parse_corpus(ss.str()), options.catalog);
    } catch (const Error& e) {
        row.corpus_error = true;
        row.detail = e.what();
        row.seconds = elapsed();
        return row;
    }
    row.has_syscall = cat.has_syscall();
    try {
        ChainResult r = build_chain(cat, t.goal, options.chain);
        if (r.status == ChainStatus::timeout) {
            row.verdict = Verdict::timeout;
            row.detail = r.detail;
        } else if (r.status == ChainStatus::no_chain) {
            row.verdict = Verdict::nogen;
            row.detail = r.detail;
        } else {
            auto bytes = r.payload->serialize();
            auto v = verify_payload(cat.profile, cat.gadgets, bytes, t.goal, options.verify, cat.functions);
            row.verdict = v.verdict;
            row.detail = v.detail;
        }
    } catch (const Error& e) {
        row.verdict = Verdict::nogen;
        row.detail = e.what();
    }
    row.seconds = elapsed();
    return row;
}

} // namespace

BenchReport run_benchmark(const std::vector<BenchTarget>& targets, const BenchOptions& options) {
    BenchReport rep;
    rep.rows.resize(targets.size());
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    std::size_t next = 0;
    while (next < targets.size()) {
        std::vector<std::future<BenchRow>> batch;
        std::size_t first = next;
        for (unsigned i = 0; i < threads && next < targets.size(); ++i, ++next)
            batch.push_back(std::async(std::launch::async, bench_one, std::cref(targets[next]), std::cref(options)));
        for (std::size_t i = 0; i < batch.size(); ++i) rep.rows[first + i] = batch[i].get();
    }
    return rep;
}

} // namespace majorca
