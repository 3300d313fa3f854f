// One line per acceptance criterion: PASS, FAIL or SKIP, with timing.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "navmine/navmine.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using namespace navmine;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

Outcome pass(std::string d = {}) { return {Verdict::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::fail, std::move(d)}; }
Outcome skip(std::string d) { return {Verdict::skip, std::move(d)}; }

const fs::path kSynthetic = fs::path(NAVMINE_TEST_DATA) / "synthetic_200.log";

fs::path scratch(const std::string& tag) {
    auto p = fs::temp_directory_path() /
             ("navmine-accept-" + tag + "-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Session session_of(const std::vector<PageId>& pages) {
    Session s;
    s.user = "u";
    std::int64_t t = 0;
    for (PageId p : pages) s.visits.push_back({p, t++});
    refresh_page_set(s);
    return s;
}

std::string dump(const Clustering& c) {
    std::ostringstream out;
    for (const auto& members : c.clusters) {
        for (PageId p : members) out << p << ' ';
        out << '|';
    }
    return out.str();
}

// ---------------------------------------------------------------------------

Outcome path_example() {
    const double v = path_similarity("/history/skylab/pi.html", "/history/mercury/ma8/pj.html");
    if (v != 0.4) return fail("got " + csv::number(v));
    return pass("0.4");
}

Outcome matrix_oracle() {
    std::mt19937_64 rng(20240601);
    std::size_t mismatches = 0, range = 0, asym = 0;
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 1 + rng() % 8;
        const std::size_t n_sessions = rng() % 11;
        std::vector<Session> sessions;
        std::vector<oracle::PlainSession> plain;
        for (std::size_t s = 0; s < n_sessions; ++s) {
            std::vector<PageId> pages;
            oracle::PlainSession ps;
            const std::size_t len = 1 + rng() % 8;
            for (std::size_t k = 0; k < len; ++k) {
                auto p = static_cast<PageId>(rng() % n);
                pages.push_back(p);
                ps.visits.push_back(p);
            }
            sessions.push_back(session_of(pages));
            plain.push_back(ps);
        }
        auto m = build_cooccurrence(count_occurrences(sessions, n));
        auto expect = oracle::cooccurrence(plain, n);
        for (PageId i = 0; i < n; ++i)
            for (PageId j = 0; j < n; ++j) {
                if (i == j) continue;
                if (m.value(i, j) != expect[i][j]) ++mismatches;
                if (m.value(i, j) != m.value(j, i)) ++asym;
            }
        for (const auto& e : m.entries())
            if (!(e.value > 0.0 && e.value <= 1.0)) ++range;
    }
    if (mismatches || range || asym)
        return fail(std::to_string(mismatches) + " mismatches, " + std::to_string(range) + " out of range, " +
                    std::to_string(asym) + " asymmetric");
    return pass("200 instances");
}

Outcome cluster_oracle() {
    std::mt19937_64 rng(20240602);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t bad_uf = 0, bad_closure = 0, bad_refine = 0;
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 1 + rng() % 64;
        const double density = unit(rng) * 0.15;
        std::vector<MatrixEntry> entries;
        std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
        for (PageId i = 0; i < n; ++i)
            for (PageId j = i + 1; j < n; ++j)
                if (unit(rng) < density) {
                    double v = rng() % 4 == 0 ? static_cast<double>(1 + rng() % 10) / 10.0 : unit(rng);
                    if (v <= 0.0) continue;
                    entries.push_back({i, j, v});
                    dense[i][j] = dense[j][i] = v;
                }
        auto c = SimilarityMatrix::from_entries(n, MatrixRole::combined, entries, 0.8);

        oracle::Partition previous;
        for (int k = 0; k <= 10; ++k) {
            const double t = k / 10.0;
            auto got = cluster(c, t);
            oracle::Partition part;
            for (const auto& members : got.clusters) part.insert({members.begin(), members.end()});
            if (part != oracle::union_find_components(dense, t)) ++bad_uf;
            if (part != oracle::closure_components(dense, t)) ++bad_closure;
            if (k > 0 && !oracle::refines(part, previous)) ++bad_refine;
            previous = std::move(part);
        }
    }
    if (bad_uf || bad_closure || bad_refine)
        return fail(std::to_string(bad_uf) + " union-find, " + std::to_string(bad_closure) + " closure, " +
                    std::to_string(bad_refine) + " refinement disagreements");
    return pass("200 instances x 11 thresholds");
}

struct Corpus {
    PageTable pages;
    std::vector<Session> sessions;
};

Corpus synthetic_corpus() {
    auto read = read_log(kSynthetic, LogFormat::common);
    std::vector<LogEntry> entries;
    for (auto& r : read.records)
        if (auto* e = std::get_if<LogEntry>(&r.result)) entries.push_back(std::move(*e));
    auto cleaned = clean(entries, CleaningRules{});
    Corpus corpus;
    corpus.sessions = sessionize(cleaned.kept, SessionizeOptions{}, corpus.pages).sessions;
    return corpus;
}

Outcome degenerate_alpha() {
    auto corpus = synthetic_corpus();
    auto split = split_sessions(corpus.sessions, 1);
    auto m = build_cooccurrence(count_occurrences(split.train, corpus.pages.size()));
    auto p = build_path_matrix(corpus.pages);
    SimilarityMatrix zero_p(corpus.pages.size(), MatrixRole::path);
    SimilarityMatrix zero_m(corpus.pages.size(), MatrixRole::cooccurrence);
    if (m.nnz() == 0 || p.nnz() == 0) return fail("synthetic corpus gave an empty matrix");

    std::vector<double> freqs;
    for (int k = 0; k <= 10; ++k) freqs.push_back(k / 10.0);

    auto grid = [&](const SimilarityMatrix& mm, const SimilarityMatrix& pp, double alpha) {
        std::vector<double> a = {alpha};
        std::string clusters;
        SweepOptions opts;
        opts.on_cell = [&](const SweepRow&, const Clustering& c) { clusters += dump(c) + "\n"; };
        std::ostringstream csv;
        run_grid(mm, pp, split.test, a, freqs, opts).write_csv(csv);
        return csv.str() + clusters;
    };
    auto combined_csv = [&](const SimilarityMatrix& mm, const SimilarityMatrix& pp, double alpha) {
        std::ostringstream out;
        write_matrix_csv(out, combine(mm, pp, alpha), corpus.pages);
        return out.str();
    };

    if (grid(m, p, 1.0) != grid(m, zero_p, 1.0)) return fail("alpha 1 differs from P zeroed (sweep/clusters)");
    if (combined_csv(m, p, 1.0) != combined_csv(m, zero_p, 1.0)) return fail("alpha 1 differs from P zeroed (matrix)");
    if (grid(m, p, 0.0) != grid(zero_m, p, 0.0)) return fail("alpha 0 differs from M zeroed (sweep/clusters)");
    if (combined_csv(m, p, 0.0) != combined_csv(zero_m, p, 0.0)) return fail("alpha 0 differs from M zeroed (matrix)");
    return pass("byte-identical at 11 thresholds");
}

Outcome coherence_bounds() {
    // wholly-inside corpus: three page groups, each session stays inside one group
    {
        std::vector<Session> sessions;
        const std::vector<std::vector<PageId>> groups = {{0, 1, 2}, {3, 4}, {5, 6, 7, 8}};
        std::mt19937_64 rng(5);
        for (int k = 0; k < 60; ++k) {
            const auto& g = groups[k % groups.size()];
            std::vector<PageId> visits(g.begin(), g.end());  // every page of the group, so M links them in train
            for (int extra = 0; extra < static_cast<int>(rng() % 3); ++extra) visits.push_back(g[rng() % g.size()]);
            sessions.push_back(session_of(visits));
        }
        // one directory per group so the blend keeps every group above any threshold < 1
        PageTable pages;
        for (std::size_t g = 0; g < groups.size(); ++g)
            for (PageId p : groups[g])
                if (pages.intern("/g" + std::to_string(g) + "/" + std::to_string(p) + ".html") != p)
                    return fail("page table order");
        std::vector<double> alphas = {1.0, 0.8}, freqs = {0.1, 0.5, 0.9};
        auto r = sweep(sessions, pages, alphas, freqs, 1);
        for (const auto& row : r.rows)
            if (row.gamma_mean != 1.0)
                return fail("inside corpus: gamma " + csv::number(row.gamma_mean) + " at alpha " +
                            csv::number(row.alpha) + " min_freq " + csv::number(row.min_freq));
    }
    // disjoint universes: train touches pages 0-4, test pages 5-9
    {
        std::vector<Session> train, test;
        for (int k = 0; k < 10; ++k) {
            train.push_back(session_of({0, 1, 2}));
            train.push_back(session_of({3, 4}));
            test.push_back(session_of({5, 6, 7}));
            test.push_back(session_of({8, 9, 5}));
        }
        PageTable pages;
        for (int i = 0; i < 10; ++i) pages.intern("/p" + std::to_string(i) + ".html");
        auto m = build_cooccurrence(count_occurrences(train, pages.size()));
        auto p = build_path_matrix(pages);
        std::vector<double> alphas = {1.0, 0.8}, freqs = {0.0, 0.1, 0.5, 0.9};
        auto r = run_grid(m, p, test, alphas, freqs);
        for (const auto& row : r.rows)
            if (row.gamma_mean != 0.0) return fail("disjoint corpus: gamma " + csv::number(row.gamma_mean));
    }
    return pass("1.0 and 0.0 exactly");
}

Outcome end_to_end_determinism() {
    const auto base = scratch("det");
    cli::Config cfg;
    cfg.inputs = {kSynthetic};
    std::ostringstream sink;
    for (const char* run : {"a", "b"}) {
        cfg.out = base / run;
        if (int rc = cli::run_pipeline(cfg, sink, sink); rc != 0) {
            fs::remove_all(base);
            return fail(std::string("pipeline exit ") + std::to_string(rc) + ": " + sink.str());
        }
    }
    std::size_t files = 0;
    std::string diff;
    for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
        if (!e.is_regular_file()) continue;
        auto rel = fs::relative(e.path(), base / "a");
        ++files;
        if (!fs::exists(base / "b" / rel) || slurp(e.path()) != slurp(base / "b" / rel)) diff += rel.string() + " ";
    }
    std::size_t files_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(base / "b"))
        if (e.is_regular_file()) ++files_b;
    fs::remove_all(base);
    if (!diff.empty()) return fail("differing: " + diff);
    if (files != files_b) return fail("file counts differ");
    return pass(std::to_string(files) + " artifacts identical");
}

bool within(double got, double target, double tol) { return std::abs(got - target) <= tol * target; }

Outcome nasa_reproduction() {
    const char* env = std::getenv("NAVMINE_NASA_LOG");
    if (!env || !*env) return skip("set NAVMINE_NASA_LOG to the July 1995 access log");
    const fs::path log = env;
    if (!fs::exists(log)) return fail(log.string() + " does not exist");

    const auto out = scratch("nasa");
    cli::Config cfg;
    cfg.inputs = {log};
    cfg.out = out;
    std::ostringstream sink;
    if (int rc = cli::run_pipeline(cfg, sink, sink); rc != 0) return fail("pipeline exit " + std::to_string(rc));

    std::vector<std::string> problems;

    std::size_t gif = 0;
    {
        std::ifstream report(out / "cleaning_report.csv");
        std::string line;
        while (std::getline(report, line))
            if (line.rfind(".gif,", 0) == 0) gif = std::stoull(line.substr(5));
    }
    if (!within(static_cast<double>(gif), 899883.0, 0.05)) problems.push_back(".gif " + std::to_string(gif));

    auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    const double users = summary["distinct_users"].get<double>();
    const double sessions = summary["sessions"].get<double>();
    if (!within(users, 42215.0, 0.15)) problems.push_back("users " + csv::number(users));
    if (!within(sessions, 69066.0, 0.15)) problems.push_back("sessions " + csv::number(sessions));

    std::map<std::pair<double, double>, std::pair<double, double>> cells;  // (alpha, f) -> (pct, gamma)
    {
        std::ifstream sweep(out / "sweep.csv");
        std::string line;
        std::getline(sweep, line);
        while (std::getline(sweep, line)) {
            auto f = csv::split_row(line);
            cells[{std::stod(f[0]), std::stod(f[1])}] = {std::stod(f[2]), std::stod(f[4])};
        }
    }
    for (int k = 2; k <= 8; ++k) {
        const double f = k / 10.0;
        if (cells[{0.8, f}].second < cells[{1.0, f}].second)
            problems.push_back("gamma(0.8) < gamma(1.0) at " + csv::number(f));
    }
    for (double a : {1.0, 0.8}) {
        int violations = 0;
        for (int k = 2; k <= 9; ++k)
            if (cells[{a, k / 10.0}].first > cells[{a, (k - 1) / 10.0}].first) ++violations;
        if (violations > 1) problems.push_back("pct_clustered not decreasing at alpha " + csv::number(a));
    }
    fs::remove_all(out);

    std::string detail = ".gif " + std::to_string(gif) + ", users " + csv::number(users) + ", sessions " +
                         csv::number(sessions);
    if (!problems.empty()) {
        for (const auto& p : problems) detail += "; " + p;
        return fail(detail);
    }
    return pass(detail);
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "path similarity worked example", 1.0, path_example},
        {2, "co-occurrence matrix oracle", 5.0, matrix_oracle},
        {3, "clustering oracle and refinement", 10.0, cluster_oracle},
        {4, "alpha 1 / alpha 0 degenerate blends", 5.0, degenerate_alpha},
        {5, "coherence boundary corpora", 1.0, coherence_bounds},
        {6, "end-to-end determinism", 5.0, end_to_end_determinism},
        {7, "NASA July 1995 reproduction", 60.0, nasa_reproduction},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.verdict == Verdict::pass && secs > c.budget_seconds) {
            o.verdict = Verdict::fail;
            o.detail += " (over the " + csv::number(c.budget_seconds) + " s budget)";
        }
        const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
        if (o.verdict == Verdict::fail) ++failures;
        std::ostringstream t;
        t.setf(std::ios::fixed);
        t.precision(3);
        t << secs;
        std::cout << tag << "  [" << c.id << "] " << c.name << ": " << o.detail << " (" << t.str() << " s)\n";
    }
    return failures == 0 ? 0 : 1;
}
