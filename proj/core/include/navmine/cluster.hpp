#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "navmine/matrix.hpp"

namespace navmine {

using ClusterId = std::uint32_t;
inline constexpr ClusterId kNoCluster = std::numeric_limits<ClusterId>::max();

struct Clustering {
    std::vector<std::vector<PageId>> clusters;  // each sorted; ids in discovery order
    std::vector<ClusterId> assignment;          // indexed by PageId
    double min_freq = 0.0;
    double alpha = 1.0;

    std::size_t universe_size() const noexcept { return assignment.size(); }
    /// kNoCluster for pages outside the universe.
    ClusterId cluster_of(PageId page) const noexcept {
        return page < assignment.size() ? assignment[page] : kNoCluster;
    }
    std::size_t cluster_size(ClusterId id) const noexcept { return id < clusters.size() ? clusters[id].size() : 0; }

    friend bool operator==(const Clustering&, const Clustering&) = default;
};

/// Connected components of the graph whose edges are the pairs with
/// C_ij > min_freq. Traversal is an iterative depth-first search restarted
/// from the lowest unvisited page.
Clustering cluster(const SimilarityMatrix& c, double min_freq);

/// JSON `{"min_freq":..,"alpha":..,"clusters":[[path,..],..]}` with clusters
/// by descending size and paths sorted.
void write_clusters_json(std::ostream& out, const Clustering& clustering, const PageTable& pages);

}  // namespace navmine
