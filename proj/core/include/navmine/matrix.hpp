#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "navmine/preprocess.hpp"

namespace navmine {

enum class MatrixRole { cooccurrence, path, combined };

std::string_view to_string(MatrixRole role) noexcept;

struct MatrixEntry {
    PageId i = 0;  // always i < j
    PageId j = 0;
    double value = 0.0;

    friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Sparse symmetric page-by-page matrix. Only the strict upper triangle is
/// stored, sorted by (i, j); every stored value lies in (0, 1].
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::size_t n, MatrixRole role);

    /// Validates and sorts `entries`. Pairs given as (j, i) are flipped; zero
    /// values are dropped. Throws std::invalid_argument on diagonal or
    /// duplicate pairs, ids out of range, or values outside [0, 1].
    static SimilarityMatrix from_entries(std::size_t n, MatrixRole role, std::vector<MatrixEntry> entries,
                                         double alpha = -1.0);

    std::size_t n() const noexcept { return n_; }
    MatrixRole role() const noexcept { return role_; }
    /// Weight given to co-occurrence: 1 for M, 0 for P, the blend for C.
    double alpha() const noexcept { return alpha_; }

    double value(PageId i, PageId j) const noexcept;
    std::span<const MatrixEntry> entries() const noexcept { return entries_; }
    std::size_t nnz() const noexcept { return entries_.size(); }

    friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;

private:
    std::size_t n_ = 0;
    MatrixRole role_ = MatrixRole::cooccurrence;
    double alpha_ = 1.0;
    std::vector<MatrixEntry> entries_;
};

struct PairCount {
    PageId i = 0;
    PageId j = 0;
    std::uint32_t count = 0;

    friend bool operator==(const PairCount&, const PairCount&) = default;
};

/// Per-page and per-pair session counts. Counts from disjoint session shards
/// merge by addition.
struct OccurrenceCounts {
    std::vector<std::uint32_t> single;  // N_i, indexed by PageId
    std::vector<PairCount> pairs;       // N_ij > 0, sorted by (i, j), i < j

    std::uint32_t single_count(PageId i) const noexcept { return i < single.size() ? single[i] : 0; }
    std::uint32_t pair_count(PageId i, PageId j) const noexcept;

    OccurrenceCounts& operator+=(const OccurrenceCounts& other);
    friend bool operator==(const OccurrenceCounts&, const OccurrenceCounts&) = default;
};

/// Set semantics: a page repeated within one session counts once.
OccurrenceCounts count_occurrences(std::span<const Session> sessions, std::size_t page_count);

enum class OccurrenceMode {
    plain,      // N_i = sessions containing page i
    exclusive,  // N_i = sessions containing i but not j; clamped into (0, 1]
};

/// M_ij = N_ij / max(N_i, N_j).
SimilarityMatrix build_cooccurrence(const OccurrenceCounts& counts, OccurrenceMode mode = OccurrenceMode::plain);

struct PathOptions {
    /// A path ending in "/" names a directory; count that last component.
    bool count_trailing_directory = true;
};

/// Directory components of a normalized path, excluding the file name.
std::vector<std::string_view> directory_components(std::string_view path, const PathOptions& options = {});

/// 2 * (common leading directories) / (|dirs(a)| + |dirs(b)|); 0 when both
/// paths sit at the root.
double path_similarity(std::string_view a, std::string_view b, const PathOptions& options = {});

SimilarityMatrix build_path_matrix(const PageTable& pages, std::span<const PageId> pages_in_use,
                                   const PathOptions& options = {});
/// Path matrix over every page in the table.
SimilarityMatrix build_path_matrix(const PageTable& pages, const PathOptions& options = {});

/// C = alpha * M + (1 - alpha) * P over the union of both patterns.
SimilarityMatrix combine(const SimilarityMatrix& m, const SimilarityMatrix& p, double alpha);

/// CSV `path_i,path_j,value` with path_i < path_j, rows sorted.
void write_matrix_csv(std::ostream& out, const SimilarityMatrix& matrix, const PageTable& pages);
/// Reads a matrix written by write_matrix_csv. Unknown paths are an error.
SimilarityMatrix read_matrix_csv(std::istream& in, const PageTable& pages, MatrixRole role, double alpha = -1.0);

}  // namespace navmine
