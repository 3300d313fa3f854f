#include "navmine/cluster.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace navmine {

Clustering cluster(const SimilarityMatrix& c, double min_freq) {
    if (!(min_freq >= 0.0 && min_freq <= 1.0)) throw std::invalid_argument("min_freq must lie in [0,1]");
    const std::size_t n = c.n();

    // adjacency in CSR form over the surviving edges
    std::vector<std::size_t> offsets(n + 1, 0);
    for (const auto& e : c.entries()) {
        if (e.value > min_freq) {
            ++offsets[e.i + 1];
            ++offsets[e.j + 1];
        }
    }
    for (std::size_t k = 0; k < n; ++k) offsets[k + 1] += offsets[k];
    std::vector<PageId> neighbours(offsets[n]);
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (const auto& e : c.entries()) {
        if (e.value > min_freq) {
            neighbours[fill[e.i]++] = e.j;
            neighbours[fill[e.j]++] = e.i;
        }
    }

    Clustering out;
    out.min_freq = min_freq;
    out.alpha = c.alpha();
    out.assignment.assign(n, kNoCluster);
    std::vector<PageId> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (out.assignment[start] != kNoCluster) continue;
        auto id = static_cast<ClusterId>(out.clusters.size());
        auto& members = out.clusters.emplace_back();
        out.assignment[start] = id;
        stack.push_back(static_cast<PageId>(start));
        while (!stack.empty()) {
            PageId v = stack.back();
            stack.pop_back();
            members.push_back(v);
            for (std::size_t k = offsets[v]; k < offsets[v + 1]; ++k) {
                PageId w = neighbours[k];
                if (out.assignment[w] == kNoCluster) {
                    out.assignment[w] = id;
                    stack.push_back(w);
                }
            }
        }
        std::sort(members.begin(), members.end());
    }
    return out;
}

void write_clusters_json(std::ostream& out, const Clustering& clustering, const PageTable& pages) {
    std::vector<std::vector<std::string>> named;
    named.reserve(clustering.clusters.size());
    for (const auto& members : clustering.clusters) {
        auto& paths = named.emplace_back();
        paths.reserve(members.size());
        for (PageId p : members) paths.push_back(pages.path(p));
        std::sort(paths.begin(), paths.end());
    }
    std::sort(named.begin(), named.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() > b.size() : a < b;
    });

    nlohmann::ordered_json j;
    j["min_freq"] = clustering.min_freq;
    j["alpha"] = clustering.alpha;
    j["clusters"] = named;
    out << j.dump(1) << '\n';
}

}  // namespace navmine
