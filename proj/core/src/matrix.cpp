#include "navmine/matrix.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <map>
#include <unordered_map>

#include "navmine/csv.hpp"

namespace navmine {

namespace {

bool entry_less(const MatrixEntry& a, const MatrixEntry& b) noexcept {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
}

double default_alpha(MatrixRole role) noexcept {
    switch (role) {
        case MatrixRole::cooccurrence: return 1.0;
        case MatrixRole::path: return 0.0;
        case MatrixRole::combined: return 0.5;
    }
    return 1.0;
}

std::uint64_t pair_key(PageId i, PageId j) noexcept {
    return (static_cast<std::uint64_t>(i) << 32) | j;
}

}  // namespace

std::string_view to_string(MatrixRole role) noexcept {
    switch (role) {
        case MatrixRole::cooccurrence: return "cooccurrence";
        case MatrixRole::path: return "path";
        case MatrixRole::combined: return "combined";
    }
    return "unknown";
}

SimilarityMatrix::SimilarityMatrix(std::size_t n, MatrixRole role)
    : n_(n), role_(role), alpha_(default_alpha(role)) {}

SimilarityMatrix SimilarityMatrix::from_entries(std::size_t n, MatrixRole role, std::vector<MatrixEntry> entries,
                                                double alpha) {
    SimilarityMatrix m(n, role);
    if (alpha >= 0.0) m.alpha_ = alpha;
    for (auto& e : entries) {
        if (e.i == e.j) throw std::invalid_argument("diagonal entry in similarity matrix");
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.j >= n) throw std::invalid_argument("page id out of range");
        if (!(e.value >= 0.0 && e.value <= 1.0)) throw std::invalid_argument("similarity value outside [0,1]");
    }
    std::erase_if(entries, [](const MatrixEntry& e) { return e.value == 0.0; });
    std::sort(entries.begin(), entries.end(), entry_less);
    auto dup = std::adjacent_find(entries.begin(), entries.end(),
                                  [](const MatrixEntry& a, const MatrixEntry& b) { return a.i == b.i && a.j == b.j; });
    if (dup != entries.end()) throw std::invalid_argument("duplicate pair in similarity matrix");
    m.entries_ = std::move(entries);
    return m;
}

double SimilarityMatrix::value(PageId i, PageId j) const noexcept {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    MatrixEntry probe{i, j, 0.0};
    auto it = std::lower_bound(entries_.begin(), entries_.end(), probe, entry_less);
    if (it == entries_.end() || it->i != i || it->j != j) return 0.0;
    return it->value;
}

// --- co-occurrence -----------------------------------------------------------

std::uint32_t OccurrenceCounts::pair_count(PageId i, PageId j) const noexcept {
    if (i == j) return single_count(i);
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(pairs.begin(), pairs.end(), PairCount{i, j, 0},
                               [](const PairCount& a, const PairCount& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    if (it == pairs.end() || it->i != i || it->j != j) return 0;
    return it->count;
}

OccurrenceCounts& OccurrenceCounts::operator+=(const OccurrenceCounts& other) {
    if (other.single.size() > single.size()) single.resize(other.single.size(), 0);
    for (std::size_t k = 0; k < other.single.size(); ++k) single[k] += other.single[k];

    std::vector<PairCount> merged;
    merged.reserve(pairs.size() + other.pairs.size());
    auto a = pairs.begin();
    auto b = other.pairs.begin();
    auto less = [](const PairCount& x, const PairCount& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; };
    while (a != pairs.end() || b != other.pairs.end()) {
        if (b == other.pairs.end() || (a != pairs.end() && less(*a, *b))) {
            merged.push_back(*a++);
        } else if (a == pairs.end() || less(*b, *a)) {
            merged.push_back(*b++);
        } else {
            merged.push_back({a->i, a->j, a->count + b->count});
            ++a;
            ++b;
        }
    }
    pairs = std::move(merged);
    return *this;
}

OccurrenceCounts count_occurrences(std::span<const Session> sessions, std::size_t page_count) {
    OccurrenceCounts counts;
    counts.single.assign(page_count, 0);
    std::unordered_map<std::uint64_t, std::uint32_t> joint;
    std::vector<PageId> set;
    for (const auto& s : sessions) {
        // derived from visits so hand-built sessions need no page_set
        set.clear();
        for (const auto& v : s.visits) set.push_back(v.page);
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        for (std::size_t a = 0; a < set.size(); ++a) {
            if (set[a] >= page_count) throw std::out_of_range("session page id beyond page count");
            ++counts.single[set[a]];
            for (std::size_t b = a + 1; b < set.size(); ++b) ++joint[pair_key(set[a], set[b])];
        }
    }
    counts.pairs.reserve(joint.size());
    for (const auto& [key, n] : joint)
        counts.pairs.push_back({static_cast<PageId>(key >> 32), static_cast<PageId>(key & 0xffffffffu), n});
    std::sort(counts.pairs.begin(), counts.pairs.end(),
              [](const PairCount& x, const PairCount& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
    return counts;
}

SimilarityMatrix build_cooccurrence(const OccurrenceCounts& counts, OccurrenceMode mode) {
    std::vector<MatrixEntry> entries;
    entries.reserve(counts.pairs.size());
    for (const auto& pc : counts.pairs) {
        if (pc.count == 0) continue;
        std::uint32_t ni = counts.single_count(pc.i);
        std::uint32_t nj = counts.single_count(pc.j);
        assert(pc.count <= std::min(ni, nj));
        double value = 0.0;
        if (mode == OccurrenceMode::plain) {
            value = static_cast<double>(pc.count) / static_cast<double>(std::max(ni, nj));
        } else {
            std::uint32_t denom = std::max(ni - pc.count, nj - pc.count);
            value = denom == 0 ? 1.0 : std::min(1.0, static_cast<double>(pc.count) / static_cast<double>(denom));
        }
        if (value > 1.0) throw std::logic_error("co-occurrence value above 1");
        entries.push_back({pc.i, pc.j, value});
    }
    return SimilarityMatrix::from_entries(counts.single.size(), MatrixRole::cooccurrence, std::move(entries));
}

// --- path similarity ---------------------------------------------------------

std::vector<std::string_view> directory_components(std::string_view path, const PathOptions& options) {
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') ++i;
        std::size_t start = i;
        while (i < path.size() && path[i] != '/') ++i;
        if (i > start) parts.push_back(path.substr(start, i - start));
    }
    bool trailing_dir = !path.empty() && path.back() == '/';
    if (!parts.empty() && (!trailing_dir || !options.count_trailing_directory)) parts.pop_back();
    return parts;
}

namespace {
double dirs_similarity(std::span<const std::string_view> a, std::span<const std::string_view> b) {
    std::size_t total = a.size() + b.size();
    if (total == 0) return 0.0;
    auto [ia, ib] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
    auto common = static_cast<std::size_t>(ia - a.begin());
    return 2.0 * static_cast<double>(common) / static_cast<double>(total);
}
}  // namespace

double path_similarity(std::string_view a, std::string_view b, const PathOptions& options) {
    auto da = directory_components(a, options);
    auto db = directory_components(b, options);
    return dirs_similarity(da, db);
}

SimilarityMatrix build_path_matrix(const PageTable& pages, std::span<const PageId> pages_in_use,
                                   const PathOptions& options) {
    std::vector<PageId> ids(pages_in_use.begin(), pages_in_use.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    // Only pages sharing their first directory can score above zero.
    std::map<std::string_view, std::vector<PageId>> by_top;
    std::vector<std::vector<std::string_view>> dirs(pages.size());
    for (PageId id : ids) {
        dirs[id] = directory_components(pages.path(id), options);
        if (!dirs[id].empty()) by_top[dirs[id].front()].push_back(id);
    }

    std::vector<MatrixEntry> entries;
    for (const auto& [_, group] : by_top) {
        for (std::size_t a = 0; a < group.size(); ++a) {
            for (std::size_t b = a + 1; b < group.size(); ++b) {
                double v = dirs_similarity(dirs[group[a]], dirs[group[b]]);
                if (v > 0.0) entries.push_back({group[a], group[b], v});
            }
        }
    }
    return SimilarityMatrix::from_entries(pages.size(), MatrixRole::path, std::move(entries));
}

SimilarityMatrix build_path_matrix(const PageTable& pages, const PathOptions& options) {
    std::vector<PageId> all(pages.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<PageId>(k);
    return build_path_matrix(pages, all, options);
}

SimilarityMatrix combine(const SimilarityMatrix& m, const SimilarityMatrix& p, double alpha) {
    if (m.n() != p.n())
        throw DimensionMismatch("combine: matrices have " + std::to_string(m.n()) + " and " + std::to_string(p.n()) +
                                " pages");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");

    const double beta = 1.0 - alpha;
    std::vector<MatrixEntry> out;
    out.reserve(std::max(m.nnz(), p.nnz()));
    auto push = [&](PageId i, PageId j, double mv, double pv) {
        double v = std::min(1.0, alpha * mv + beta * pv);
        if (v > 0.0) out.push_back({i, j, v});
    };
    auto a = m.entries().begin(), ae = m.entries().end();
    auto b = p.entries().begin(), be = p.entries().end();
    while (a != ae || b != be) {
        if (b == be || (a != ae && entry_less(*a, *b))) {
            push(a->i, a->j, a->value, 0.0);
            ++a;
        } else if (a == ae || entry_less(*b, *a)) {
            push(b->i, b->j, 0.0, b->value);
            ++b;
        } else {
            push(a->i, a->j, a->value, b->value);
            ++a;
            ++b;
        }
    }
    return SimilarityMatrix::from_entries(m.n(), MatrixRole::combined, std::move(out), alpha);
}

// --- CSV ---------------------------------------------------------------------

void write_matrix_csv(std::ostream& out, const SimilarityMatrix& matrix, const PageTable& pages) {
    struct Row {
        std::string_view a, b;
        double v;
    };
    std::vector<Row> rows;
    rows.reserve(matrix.nnz());
    for (const auto& e : matrix.entries()) {
        std::string_view a = pages.path(e.i), b = pages.path(e.j);
        if (b < a) std::swap(a, b);
        rows.push_back({a, b, e.value});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
    out << "path_i,path_j,value\n";
    for (const auto& r : rows) out << csv::field(r.a) << ',' << csv::field(r.b) << ',' << csv::number(r.v) << '\n';
}

SimilarityMatrix read_matrix_csv(std::istream& in, const PageTable& pages, MatrixRole role, double alpha) {
    std::string line;
    if (!std::getline(in, line) || line != "path_i,path_j,value") throw std::runtime_error("matrix csv: bad header");
    std::vector<MatrixEntry> entries;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = csv::split_row(line);
        if (cells.size() != 3) throw std::runtime_error("matrix csv line " + std::to_string(lineno) + ": expected 3 cells");
        auto i = pages.find(cells[0]);
        auto j = pages.find(cells[1]);
        if (!i || !j) throw std::runtime_error("matrix csv line " + std::to_string(lineno) + ": unknown page");
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), v);
        if (ec != std::errc{} || ptr != cells[2].data() + cells[2].size())
            throw std::runtime_error("matrix csv line " + std::to_string(lineno) + ": bad value");
        entries.push_back({*i, *j, v});
    }
    return SimilarityMatrix::from_entries(pages.size(), role, std::move(entries), alpha);
}

}  // namespace navmine
