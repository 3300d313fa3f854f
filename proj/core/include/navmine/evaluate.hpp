#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "navmine/cluster.hpp"
#include "navmine/matrix.hpp"
#include "navmine/preprocess.hpp"

namespace navmine {

class TooFewSessions : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SessionSplit {
    std::vector<Session> train;
    std::vector<Session> test;
};

/// Seeded Fisher-Yates shuffle, then a midpoint cut; train receives the
/// extra session when the count is odd. The permutation depends only on the
/// seed and the session count, never on the standard library in use.
SessionSplit split_sessions(std::span<const Session> sessions, std::uint64_t seed);

/// Index permutation used by split_sessions.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

enum class VisitCounting {
    visits,          // N_i = |visits|, repeats count
    distinct_pages,  // N_i = |page_set|
};

struct CoherenceOptions {
    VisitCounting counting = VisitCounting::visits;
    /// When false, a page alone in its cluster is treated as unclustered and
    /// can never represent a session.
    bool singletons_are_clusters = false;
};

/// Cluster holding the plurality of the session's pages; ties go to the
/// smaller ClusterId. kNoCluster when no page is clustered.
ClusterId representative_cluster(const Session& session, const Clustering& clustering,
                                 const CoherenceOptions& options = {});

double session_coherence(const Session& session, const Clustering& clustering, const CoherenceOptions& options = {});

struct CoherenceResult {
    std::vector<double> gamma_per_session;
    double gamma_mean = 0.0;
    std::size_t n_sessions = 0;
};

CoherenceResult coherence(std::span<const Session> test_sessions, const Clustering& clustering,
                          const CoherenceOptions& options = {});

/// Percentage of universe pages that sit in a cluster of two or more pages.
double pct_clustered(const Clustering& clustering);

std::size_t count_clusters(const Clustering& clustering, std::size_t min_size = 2);

struct SweepRow {
    double alpha = 0.0;
    double min_freq = 0.0;
    double pct_clustered = 0.0;
    std::size_t n_clusters = 0;
    double gamma_mean = 0.0;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepReport {
    std::vector<SweepRow> rows;

    /// `alpha,min_freq,pct_clustered,n_clusters,gamma`
    void write_csv(std::ostream& out) const;
    friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

struct SweepOptions {
    OccurrenceMode occurrence = OccurrenceMode::plain;
    PathOptions path;
    CoherenceOptions coherence;
    unsigned workers = 1;
    /// Called once per grid cell, in grid order, after all cells finish.
    std::function<void(const SweepRow&, const Clustering&)> on_cell;
};

/// Clusters every (alpha, min_freq) cell from fixed M and P and scores it on
/// `test`. Rows come back alpha-major in grid order.
SweepReport run_grid(const SimilarityMatrix& m, const SimilarityMatrix& p, std::span<const Session> test,
                     std::span<const double> alphas, std::span<const double> min_freqs,
                     const SweepOptions& options = {});

/// Half-split experiment: M from the train half, P over the whole page
/// table, coherence on the test half.
SweepReport sweep(std::span<const Session> sessions, const PageTable& pages, std::span<const double> alphas,
                  std::span<const double> min_freqs, std::uint64_t seed, const SweepOptions& options = {});

struct LengthHistogram {
    std::map<std::size_t, std::size_t> counts;  // |visits| -> sessions
    std::size_t total = 0;

    /// Percentage of sessions with at least k visits.
    double pct_at_least(std::size_t k) const;
    /// `length,count,cum_pct`
    void write_csv(std::ostream& out) const;
};

LengthHistogram session_length_histogram(std::span<const Session> sessions);

}  // namespace navmine
