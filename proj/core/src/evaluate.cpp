#include "navmine/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "navmine/csv.hpp"

namespace navmine {

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::mt19937_64 rng(seed);
    // uniform draw in [0, bound] by rejection; std::uniform_int_distribution
    // is not specified bit-for-bit across implementations
    auto draw = [&rng](std::uint64_t bound) {
        if (bound == 0) return std::uint64_t{0};
        const std::uint64_t range = bound + 1;
        const std::uint64_t limit = range == 0 ? 0 : (~std::uint64_t{0} / range) * range;
        std::uint64_t x;
        do {
            x = rng();
        } while (limit != 0 && x >= limit);
        return range == 0 ? x : x % range;
    };
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[draw(k - 1)]);
    return order;
}

SessionSplit split_sessions(std::span<const Session> sessions, std::uint64_t seed) {
    if (sessions.size() < 2) throw TooFewSessions("need at least 2 sessions to split, got " + std::to_string(sessions.size()));
    auto order = seeded_permutation(sessions.size(), seed);
    const std::size_t cut = (sessions.size() + 1) / 2;
    SessionSplit split;
    split.train.reserve(cut);
    split.test.reserve(sessions.size() - cut);
    for (std::size_t k = 0; k < order.size(); ++k)
        (k < cut ? split.train : split.test).push_back(sessions[order[k]]);
    return split;
}

namespace {

template <typename Fn>
void for_each_counted_page(const Session& s, const CoherenceOptions& options, Fn&& fn) {
    if (options.counting == VisitCounting::visits) {
        for (const auto& v : s.visits) fn(v.page);
    } else {
        std::vector<PageId> set;
        for (const auto& v : s.visits) set.push_back(v.page);
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        for (PageId p : set) fn(p);
    }
}

ClusterId eligible_cluster(PageId page, const Clustering& clustering, const CoherenceOptions& options) {
    ClusterId id = clustering.cluster_of(page);
    if (id == kNoCluster) return kNoCluster;
    if (!options.singletons_are_clusters && clustering.cluster_size(id) < 2) return kNoCluster;
    return id;
}

}  // namespace

ClusterId representative_cluster(const Session& session, const Clustering& clustering,
                                 const CoherenceOptions& options) {
    std::map<ClusterId, std::size_t> tally;
    for_each_counted_page(session, options, [&](PageId p) {
        ClusterId id = eligible_cluster(p, clustering, options);
        if (id != kNoCluster) ++tally[id];
    });
    ClusterId best = kNoCluster;
    std::size_t best_count = 0;
    for (const auto& [id, count] : tally) {
        if (count > best_count) {  // map order gives the smaller id on ties
            best = id;
            best_count = count;
        }
    }
    return best;
}

double session_coherence(const Session& session, const Clustering& clustering, const CoherenceOptions& options) {
    ClusterId rep = representative_cluster(session, clustering, options);
    std::size_t total = 0, inside = 0;
    for_each_counted_page(session, options, [&](PageId p) {
        ++total;
        if (rep != kNoCluster && eligible_cluster(p, clustering, options) == rep) ++inside;
    });
    if (total == 0) return 0.0;
    return static_cast<double>(inside) / static_cast<double>(total);
}

CoherenceResult coherence(std::span<const Session> test_sessions, const Clustering& clustering,
                          const CoherenceOptions& options) {
    if (test_sessions.empty()) throw TooFewSessions("coherence needs at least one test session");
    CoherenceResult r;
    r.n_sessions = test_sessions.size();
    r.gamma_per_session.reserve(test_sessions.size());
    double sum = 0.0;
    for (const auto& s : test_sessions) {
        double g = session_coherence(s, clustering, options);
        r.gamma_per_session.push_back(g);
        sum += g;
    }
    r.gamma_mean = sum / static_cast<double>(r.n_sessions);
    return r;
}

double pct_clustered(const Clustering& clustering) {
    if (clustering.universe_size() == 0) return 0.0;
    std::size_t in_clusters = 0;
    for (const auto& members : clustering.clusters)
        if (members.size() >= 2) in_clusters += members.size();
    return 100.0 * static_cast<double>(in_clusters) / static_cast<double>(clustering.universe_size());
}

std::size_t count_clusters(const Clustering& clustering, std::size_t min_size) {
    return static_cast<std::size_t>(std::count_if(clustering.clusters.begin(), clustering.clusters.end(),
                                                  [min_size](const auto& c) { return c.size() >= min_size; }));
}

void SweepReport::write_csv(std::ostream& out) const {
    out << "alpha,min_freq,pct_clustered,n_clusters,gamma\n";
    for (const auto& r : rows)
        out << csv::number(r.alpha) << ',' << csv::number(r.min_freq) << ',' << csv::number(r.pct_clustered) << ','
            << r.n_clusters << ',' << csv::number(r.gamma_mean) << '\n';
}

SweepReport run_grid(const SimilarityMatrix& m, const SimilarityMatrix& p, std::span<const Session> test,
                     std::span<const double> alphas, std::span<const double> min_freqs, const SweepOptions& options) {
    if (alphas.empty() || min_freqs.empty()) throw std::invalid_argument("sweep grids must be non-empty");
    if (test.empty()) throw TooFewSessions("sweep needs a non-empty test half");

    std::vector<SimilarityMatrix> blended;
    blended.reserve(alphas.size());
    for (double a : alphas) blended.push_back(combine(m, p, a));

    const std::size_t cells = alphas.size() * min_freqs.size();
    std::vector<SweepRow> rows(cells);
    std::vector<Clustering> clusterings(options.on_cell ? cells : 0);

    auto run_cell = [&](std::size_t k) {
        const std::size_t ai = k / min_freqs.size();
        const std::size_t fi = k % min_freqs.size();
        Clustering c = cluster(blended[ai], min_freqs[fi]);
        SweepRow& row = rows[k];
        row.alpha = alphas[ai];
        row.min_freq = min_freqs[fi];
        row.pct_clustered = pct_clustered(c);
        row.n_clusters = count_clusters(c);
        row.gamma_mean = coherence(test, c, options.coherence).gamma_mean;
        if (options.on_cell) clusterings[k] = std::move(c);
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(cells)));
    if (workers == 1) {
        for (std::size_t k = 0; k < cells; ++k) run_cell(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < cells; k = next++) run_cell(k);
            });
    }

    if (options.on_cell)
        for (std::size_t k = 0; k < cells; ++k) options.on_cell(rows[k], clusterings[k]);
    return SweepReport{std::move(rows)};
}

SweepReport sweep(std::span<const Session> sessions, const PageTable& pages, std::span<const double> alphas,
                  std::span<const double> min_freqs, std::uint64_t seed, const SweepOptions& options) {
    if (alphas.empty() || min_freqs.empty()) throw std::invalid_argument("sweep grids must be non-empty");
    SessionSplit split = split_sessions(sessions, seed);
    SimilarityMatrix m = build_cooccurrence(count_occurrences(split.train, pages.size()), options.occurrence);
    SimilarityMatrix p = build_path_matrix(pages, options.path);
    return run_grid(m, p, split.test, alphas, min_freqs, options);
}

double LengthHistogram::pct_at_least(std::size_t k) const {
    if (total == 0) return 0.0;
    std::size_t n = 0;
    for (auto it = counts.lower_bound(k); it != counts.end(); ++it) n += it->second;
    return 100.0 * static_cast<double>(n) / static_cast<double>(total);
}

void LengthHistogram::write_csv(std::ostream& out) const {
    out << "length,count,cum_pct\n";
    std::size_t remaining = total;
    for (const auto& [len, count] : counts) {
        double pct = total == 0 ? 0.0 : 100.0 * static_cast<double>(remaining) / static_cast<double>(total);
        out << len << ',' << count << ',' << csv::number(pct) << '\n';
        remaining -= count;
    }
}

LengthHistogram session_length_histogram(std::span<const Session> sessions) {
    LengthHistogram h;
    for (const auto& s : sessions) ++h.counts[s.visits.size()];
    h.total = sessions.size();
    return h;
}

}  // namespace navmine
