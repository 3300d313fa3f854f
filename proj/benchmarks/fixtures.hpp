#pragma once

#include <random>
#include <string>
#include <vector>

#include "navmine/navmine.hpp"

namespace bench {

// Pages spread over a two-level directory tree; sessions favour one subtree.
inline navmine::PageTable make_pages(std::size_t n) {
    navmine::PageTable t;
    for (std::size_t i = 0; i < n; ++i)
        t.intern("/s" + std::to_string(i % 17) + "/d" + std::to_string(i % 5) + "/p" + std::to_string(i) + ".html");
    return t;
}

inline std::vector<navmine::Session> make_sessions(std::size_t count, std::size_t pages, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::vector<navmine::Session> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        navmine::Session sess;
        const std::size_t base = rng() % pages;
        const std::size_t len = 2 + rng() % 10;
        for (std::size_t k = 0; k < len; ++k) {
            auto p = static_cast<navmine::PageId>(rng() % 4 == 0 ? rng() % pages : (base + rng() % 20) % pages);
            sess.visits.push_back({p, static_cast<std::int64_t>(k * 30)});
        }
        navmine::refresh_page_set(sess);
        out.push_back(std::move(sess));
    }
    return out;
}

}  // namespace bench
