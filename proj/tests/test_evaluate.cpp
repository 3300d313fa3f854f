#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "navmine/evaluate.hpp"
#include "oracles.hpp"

using namespace navmine;

namespace {

Session session_of(std::vector<PageId> pages, std::string user = "u") {
    Session s;
    s.user = std::move(user);
    std::int64_t t = 0;
    for (PageId p : pages) s.visits.push_back({p, t++});
    refresh_page_set(s);
    return s;
}

Clustering clustering_of(std::size_t n, std::vector<std::vector<PageId>> clusters) {
    Clustering c;
    c.assignment.assign(n, kNoCluster);
    for (ClusterId id = 0; id < clusters.size(); ++id)
        for (PageId p : clusters[id]) c.assignment[p] = id;
    c.clusters = std::move(clusters);
    return c;
}

std::vector<Session> numbered_sessions(std::size_t n) {
    std::vector<Session> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(session_of({0, 1}, "h" + std::to_string(k)));
    return out;
}

std::multiset<std::string> users(const std::vector<Session>& s) {
    std::multiset<std::string> out;
    for (const auto& x : s) out.insert(x.user);
    return out;
}

}  // namespace

TEST_CASE("split_sessions") {
    SUBCASE("even count") {
        auto s = numbered_sessions(10);
        auto split = split_sessions(s, 1);
        CHECK(split.train.size() == 5);
        CHECK(split.test.size() == 5);
        auto all = users(split.train);
        all.merge(users(split.test));
        CHECK(all == users(s));
    }
    SUBCASE("odd count gives train the extra session") {
        auto split = split_sessions(numbered_sessions(11), 1);
        CHECK(split.train.size() == 6);
        CHECK(split.test.size() == 5);
    }
    SUBCASE("same seed, same split; other seeds differ") {
        auto s = numbered_sessions(40);
        CHECK(users(split_sessions(s, 7).train) == users(split_sessions(s, 7).train));
        CHECK(users(split_sessions(s, 7).train) != users(split_sessions(s, 8).train));
    }
    SUBCASE("too few sessions") {
        CHECK_THROWS_AS(split_sessions(numbered_sessions(1), 1), TooFewSessions);
        CHECK_THROWS_AS(split_sessions({}, 1), TooFewSessions);
        CHECK(split_sessions(numbered_sessions(2), 1).train.size() == 1);
    }
}

TEST_CASE("seeded_permutation is a permutation and is pinned") {
    for (std::size_t n : {0u, 1u, 2u, 17u, 1000u}) {
        auto p = seeded_permutation(n, 3);
        std::vector<std::size_t> sorted = p;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t k = 0; k < n; ++k) CHECK(sorted[k] == k);
    }
    // mt19937_64 output is fixed by the standard, so this holds on any toolchain
    auto p = seeded_permutation(8, 1);
    CHECK(p == std::vector<std::size_t>{4, 6, 3, 5, 1, 7, 2, 0});
    CHECK(p != seeded_permutation(8, 2));
}

TEST_CASE("session coherence") {
    // clusters {A,B,C} and {D,E}; F alone
    enum : PageId { A, B, C, D, E, F };
    auto k = clustering_of(6, {{A, B, C}, {D, E}, {F}});

    CHECK(session_coherence(session_of({A, B, C}), k) == 1.0);
    CHECK(session_coherence(session_of({A, A, B, D}), k) == 0.75);
    CHECK(session_coherence(session_of({D, A}), k) == 0.5);
    CHECK(representative_cluster(session_of({D, A}), k) == 0);  // tie -> smaller id
    CHECK(representative_cluster(session_of({F, F, D}), k) == 1);

    SUBCASE("singletons never represent by default") {
        CHECK(session_coherence(session_of({F, F}), k) == 0.0);
        CHECK(representative_cluster(session_of({F}), k) == kNoCluster);
        CoherenceOptions with_singletons;
        with_singletons.singletons_are_clusters = true;
        CHECK(session_coherence(session_of({F, F, D}), k, with_singletons) == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("distinct-page counting") {
        CoherenceOptions distinct;
        distinct.counting = VisitCounting::distinct_pages;
        CHECK(session_coherence(session_of({A, A, A, D}), k) == 0.75);
        CHECK(session_coherence(session_of({A, A, A, D}), k, distinct) == 0.5);
    }
    SUBCASE("mean over sessions") {
        std::vector<Session> test = {session_of({A, B}), session_of({A, D}), session_of({F, F})};
        auto r = coherence(test, k);
        CHECK(r.n_sessions == 3);
        CHECK(r.gamma_per_session == std::vector<double>{1.0, 0.5, 0.0});
        CHECK(r.gamma_mean == 0.5);
        CHECK_THROWS_AS(coherence({}, k), TooFewSessions);
    }
    SUBCASE("pages outside the clustering count as unclustered") {
        CHECK(session_coherence(session_of({A, 40}), k) == 0.5);
    }
}

TEST_CASE("property: coherence matches the try-every-cluster oracle") {
    std::mt19937_64 rng(2024);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 1 + rng() % 30;
        // random partition
        std::vector<std::vector<PageId>> blocks;
        for (PageId p = 0; p < n; ++p) {
            if (blocks.empty() || rng() % 3 == 0) blocks.emplace_back();
            ClusterId id = static_cast<ClusterId>(rng() % blocks.size());
            blocks[id].push_back(p);
        }
        std::erase_if(blocks, [](const auto& b) { return b.empty(); });
        auto k = clustering_of(n, blocks);

        std::vector<long> oracle_cluster(n, -1);
        for (ClusterId id = 0; id < blocks.size(); ++id)
            if (blocks[id].size() >= 2)
                for (PageId p : blocks[id]) oracle_cluster[p] = static_cast<long>(id);

        std::vector<Session> sessions;
        long double naive = 0.0L;
        for (int s = 0; s < 100; ++s) {
            std::vector<PageId> pages;
            std::vector<std::uint32_t> raw;
            const std::size_t len = 1 + rng() % 12;
            for (std::size_t v = 0; v < len; ++v) {
                auto p = static_cast<PageId>(rng() % n);
                pages.push_back(p);
                raw.push_back(p);
            }
            const double expect = oracle::coherence(raw, oracle_cluster, static_cast<long>(blocks.size()));
            auto sess = session_of(pages);
            const double got = session_coherence(sess, k);
            CHECK(got == doctest::Approx(expect).epsilon(1e-15));
            CHECK(got >= 0.0);
            CHECK(got <= 1.0);
            naive += expect;
            sessions.push_back(std::move(sess));
        }
        auto r = coherence(sessions, k);
        CHECK(std::abs(r.gamma_mean - static_cast<double>(naive / 100.0L)) < 1e-12);
    }
}

TEST_CASE("pct_clustered and count_clusters") {
    CHECK(pct_clustered(clustering_of(3, {{0}, {1}, {2}})) == 0.0);
    CHECK(pct_clustered(clustering_of(3, {{0, 1, 2}})) == 100.0);
    CHECK(pct_clustered(clustering_of(6, {{0, 1, 2}, {3, 4}, {5}})) == doctest::Approx(500.0 / 6.0));
    CHECK(pct_clustered(Clustering{}) == 0.0);
    CHECK(count_clusters(clustering_of(6, {{0, 1, 2}, {3, 4}, {5}})) == 2);
    CHECK(count_clusters(clustering_of(6, {{0, 1, 2}, {3, 4}, {5}}), 1) == 3);
}

TEST_CASE("session length histogram") {
    std::vector<Session> s = {session_of({0, 1}), session_of({0, 1}), session_of({0, 1, 2})};
    auto h = session_length_histogram(s);
    CHECK(h.counts == std::map<std::size_t, std::size_t>{{2, 2}, {3, 1}});
    CHECK(h.total == 3);
    CHECK(h.pct_at_least(3) == doctest::Approx(100.0 / 3.0));
    CHECK(h.pct_at_least(2) == 100.0);
    CHECK(h.pct_at_least(4) == 0.0);
    std::ostringstream out;
    h.write_csv(out);
    CHECK(out.str() == "length,count,cum_pct\n2,2,100\n3,1,33.333333333333336\n");
}

TEST_CASE("sweep") {
    PageTable t;
    for (const char* p : {"/a/1.html", "/a/2.html", "/b/1.html", "/b/2.html", "/c.html"}) t.intern(p);
    std::vector<Session> sessions;
    for (int k = 0; k < 20; ++k) {
        sessions.push_back(session_of({0, 1}, "x" + std::to_string(k)));
        sessions.push_back(session_of({2, 3, 4}, "y" + std::to_string(k)));
    }

    SUBCASE("default grid gives 18 rows in alpha-major order") {
        std::vector<double> alphas = {1.0, 0.8};
        std::vector<double> freqs;
        for (int k = 1; k <= 9; ++k) freqs.push_back(k / 10.0);
        auto r = sweep(sessions, t, alphas, freqs, 1);
        REQUIRE(r.rows.size() == 18);
        CHECK(r.rows[0].alpha == 1.0);
        CHECK(r.rows[0].min_freq == 0.1);
        CHECK(r.rows[9].alpha == 0.8);
        CHECK(r.rows[17].min_freq == 0.9);
        for (const auto& row : r.rows) {
            CHECK(row.gamma_mean >= 0.0);
            CHECK(row.gamma_mean <= 1.0);
            CHECK(row.pct_clustered >= 0.0);
            CHECK(row.pct_clustered <= 100.0);
        }
        SweepOptions threaded;
        threaded.workers = 4;
        CHECK(sweep(sessions, t, alphas, freqs, 1, threaded) == r);
    }
    SUBCASE("single cell") {
        std::vector<double> a = {1.0}, f = {0.5};
        auto r = sweep(sessions, t, a, f, 1);
        REQUIRE(r.rows.size() == 1);
        // {0,1} and {2,3,4} always co-occur
        CHECK(r.rows[0].n_clusters == 2);
        CHECK(r.rows[0].pct_clustered == 100.0);
        CHECK(r.rows[0].gamma_mean == 1.0);
    }
    SUBCASE("alpha 1 ignores P") {
        auto split = split_sessions(sessions, 5);
        auto m = build_cooccurrence(count_occurrences(split.train, t.size()));
        auto p = build_path_matrix(t);
        SimilarityMatrix zero(t.size(), MatrixRole::path);
        std::vector<double> a = {1.0}, f = {0.1, 0.5, 0.9};
        CHECK(run_grid(m, p, split.test, a, f) == run_grid(m, zero, split.test, a, f));
    }
    SUBCASE("M comes from the train half only") {
        // a pair seen only in the test half must not link pages at alpha 1
        std::vector<Session> few = {session_of({0, 1}, "a"), session_of({2, 3}, "b")};
        auto split = split_sessions(few, 1);
        std::vector<double> a = {1.0}, f = {0.0};
        SweepOptions opts;
        Clustering got;
        opts.on_cell = [&](const SweepRow&, const Clustering& c) { got = c; };
        sweep(few, t, a, f, 1, opts);
        const auto& test_pages = split.test.front().page_set;
        REQUIRE(test_pages.size() == 2);
        CHECK(got.cluster_of(test_pages[0]) != got.cluster_of(test_pages[1]));
        const auto& train_pages = split.train.front().page_set;
        CHECK(got.cluster_of(train_pages[0]) == got.cluster_of(train_pages[1]));
    }
    SUBCASE("bad grids") {
        std::vector<double> none, one = {0.5};
        CHECK_THROWS_AS(sweep(sessions, t, none, one, 1), std::invalid_argument);
        CHECK_THROWS_AS(sweep(sessions, t, one, none, 1), std::invalid_argument);
    }
}

TEST_CASE("sweep CSV") {
    SweepReport r{{{1.0, 0.1, 50.0, 3, 0.75}, {0.8, 0.2, 100.0 / 3.0, 1, 0.0}}};
    std::ostringstream out;
    r.write_csv(out);
    CHECK(out.str() ==
          "alpha,min_freq,pct_clustered,n_clusters,gamma\n"
          "1,0.1,50,3,0.75\n"
          "0.8,0.2,33.333333333333336,1,0\n");
}
