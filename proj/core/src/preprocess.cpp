#include "navmine/preprocess.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

namespace navmine {

namespace {

char ascii_lower(char c) noexcept {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

bool iequals(std::string_view a, std::string_view b) noexcept {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return ascii_lower(x) == ascii_lower(y); });
}

int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

double median_gap(std::vector<std::int64_t> times) {
    std::sort(times.begin(), times.end());
    std::vector<std::int64_t> gaps;
    gaps.reserve(times.size());
    for (std::size_t i = 1; i < times.size(); ++i) gaps.push_back(times[i] - times[i - 1]);
    if (gaps.empty()) return 0.0;
    std::sort(gaps.begin(), gaps.end());
    std::size_t mid = gaps.size() / 2;
    if (gaps.size() % 2 == 1) return static_cast<double>(gaps[mid]);
    return (static_cast<double>(gaps[mid - 1]) + static_cast<double>(gaps[mid])) / 2.0;
}

}  // namespace

// --- PageTable -------------------------------------------------------------

PageId PageTable::intern(std::string_view path) {
    auto it = index_.find(std::string(path));
    if (it != index_.end()) return it->second;
    auto id = static_cast<PageId>(paths_.size());
    paths_.emplace_back(path);
    index_.emplace(paths_.back(), id);
    return id;
}

std::optional<PageId> PageTable::find(std::string_view path) const {
    auto it = index_.find(std::string(path));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void refresh_page_set(Session& s) {
    s.page_set.clear();
    s.page_set.reserve(s.visits.size());
    for (const auto& v : s.visits) s.page_set.push_back(v.page);
    std::sort(s.page_set.begin(), s.page_set.end());
    s.page_set.erase(std::unique(s.page_set.begin(), s.page_set.end()), s.page_set.end());
}

// --- URI handling ----------------------------------------------------------

std::string normalize_uri(std::string_view uri) {
    auto cut = uri.find_first_of("?#");
    if (cut != std::string_view::npos) uri = uri.substr(0, cut);

    for (std::string_view scheme : {"http://", "https://"}) {
        if (uri.size() >= scheme.size() && iequals(uri.substr(0, scheme.size()), scheme)) {
            auto slash = uri.find('/', scheme.size());
            uri = slash == std::string_view::npos ? std::string_view{} : uri.substr(slash);
            break;
        }
    }

    std::string decoded;
    decoded.reserve(uri.size() + 1);
    for (std::size_t i = 0; i < uri.size(); ++i) {
        if (uri[i] == '%' && i + 2 < uri.size()) {
            int hi = hex_value(uri[i + 1]);
            int lo = hex_value(uri[i + 2]);
            if (hi >= 0 && lo >= 0) {
                decoded += static_cast<char>(hi * 16 + lo);
                i += 2;
                continue;
            }
        }
        decoded += uri[i];
    }

    std::string out;
    out.reserve(decoded.size() + 1);
    out += '/';
    for (char c : decoded) {
        if (c == '/' && out.back() == '/') continue;
        out += c;
    }

    auto last = out.rfind('/');
    std::string_view leaf = std::string_view(out).substr(last + 1);
    if (iequals(leaf, "index.html") || iequals(leaf, "index.htm")) out.resize(last + 1);
    return out;
}

std::string page_extension(std::string_view path) {
    auto slash = path.rfind('/');
    std::string_view leaf = slash == std::string_view::npos ? path : path.substr(slash + 1);
    auto dot = leaf.rfind('.');
    if (dot == std::string_view::npos) return {};
    return lower(leaf.substr(dot));
}

// --- cleaning --------------------------------------------------------------

std::size_t CleaningReport::removed_total() const noexcept {
    std::size_t n = removed_robot + removed_failed_status;
    for (const auto& [_, count] : removed_by_extension) n += count;
    return n;
}

void CleaningReport::write_csv(std::ostream& out) const {
    out << "category,count\n";
    for (const auto& [ext, count] : removed_by_extension) out << (ext.empty() ? "(none)" : ext) << ',' << count << '\n';
    out << "robot," << removed_robot << '\n';
    out << "failed_status," << removed_failed_status << '\n';
    out << "kept," << kept << '\n';
}

namespace {
// Returns the report bucket when the entry fails the extension/CGI rules.
std::optional<std::string> extension_bucket(std::string_view path, const CleaningRules& rules) {
    std::string ext = page_extension(path);
    if (!contains(rules.allowed_extensions, ext)) return ext;
    if (contains(rules.cgi_extensions, ext)) return ext;
    for (const auto& pattern : rules.cgi_substrings)
        if (path.find(pattern) != std::string_view::npos) return std::string("cgi-bin");
    return std::nullopt;
}
}  // namespace

bool is_page_request(const LogEntry& e, const CleaningRules& rules) {
    return !extension_bucket(normalize_uri(e.uri), rules).has_value();
}

EntryVerdict classify_entry(const LogEntry& e, const CleaningRules& rules, std::string* bucket) {
    if (auto b = extension_bucket(normalize_uri(e.uri), rules)) {
        if (bucket) *bucket = std::move(*b);
        return EntryVerdict::extension;
    }
    if (!rules.status_keep.empty() &&
        std::find(rules.status_keep.begin(), rules.status_keep.end(), e.status) == rules.status_keep.end())
        return EntryVerdict::failed_status;
    return EntryVerdict::keep;
}

void RobotDetector::observe(const LogEntry& e) {
    const RobotPolicy& policy = rules_->robots;
    if (!policy.enabled) return;
    auto& host = hosts_[e.remotehost];
    std::string path = normalize_uri(e.uri);
    if (policy.robots_txt_rule && path.ends_with("/robots.txt")) host.robots_txt = true;
    if (policy.agent_rule && e.user_agent && !host.agent) {
        std::string agent = lower(*e.user_agent);
        for (const auto& kw : policy.agent_keywords) {
            if (!kw.empty() && agent.find(lower(kw)) != std::string::npos) {
                host.agent = true;
                break;
            }
        }
    }
    if (policy.burst_rule && !extension_bucket(path, *rules_)) host.page_times.push_back(e.timestamp.epoch_seconds);
}

std::unordered_set<std::string> RobotDetector::robots() const {
    std::unordered_set<std::string> out;
    const RobotPolicy& policy = rules_->robots;
    if (!policy.enabled) return out;
    for (const auto& [name, host] : hosts_) {
        bool burst = policy.burst_rule && host.page_times.size() >= policy.burst_min_requests &&
                     median_gap(host.page_times) < policy.burst_median_gap_seconds;
        if (host.robots_txt || host.agent || burst) out.insert(name);
    }
    return out;
}

std::unordered_set<std::string> detect_robots(std::span<const LogEntry> entries, const CleaningRules& rules) {
    RobotDetector detector(rules);
    for (const auto& e : entries) detector.observe(e);
    return detector.robots();
}

Cleaner::Cleaner(CleaningRules rules) : rules_(std::move(rules)), detector_(rules_) {}

void Cleaner::add(const LogEntry& e) {
    detector_.observe(e);
    std::string bucket;
    switch (classify_entry(e, rules_, &bucket)) {
        case EntryVerdict::extension:
            ++report_.removed_by_extension[bucket];
            break;
        case EntryVerdict::failed_status:
            ++report_.removed_failed_status;
            break;
        case EntryVerdict::keep:
            candidates_.push_back(e);
            break;
    }
}

CleanResult Cleaner::finish() && {
    CleanResult result;
    auto robots = detector_.robots();
    result.kept.reserve(candidates_.size());
    for (auto& e : candidates_) {
        if (robots.count(e.remotehost))
            ++report_.removed_robot;
        else
            result.kept.push_back(std::move(e));
    }
    report_.kept = result.kept.size();
    result.report = std::move(report_);
    return result;
}

CleanResult clean(std::span<const LogEntry> entries, const CleaningRules& rules) {
    Cleaner cleaner(rules);
    for (const auto& e : entries) cleaner.add(e);
    return std::move(cleaner).finish();
}

// --- sessions --------------------------------------------------------------

SessionizeResult sessionize(std::span<const LogEntry> entries, const SessionizeOptions& options,
                            PageTable& pages) {
    if (options.timeout_seconds <= 0) throw std::invalid_argument("session timeout must be positive");

    struct Hit {
        std::int64_t time;
        std::string path;
    };
    std::vector<std::string> hosts;
    std::unordered_map<std::string, std::size_t> host_index;
    std::vector<std::vector<Hit>> per_host;
    for (const auto& e : entries) {
        auto [it, inserted] = host_index.try_emplace(e.remotehost, hosts.size());
        if (inserted) {
            hosts.push_back(e.remotehost);
            per_host.emplace_back();
        }
        per_host[it->second].push_back({e.timestamp.epoch_seconds, normalize_uri(e.uri)});
    }

    SessionizeResult result;
    result.distinct_users = hosts.size();

    auto emit = [&](const std::string& user, std::span<const Hit> hits) {
        std::vector<std::string_view> distinct;
        for (const auto& h : hits) distinct.push_back(h.path);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < options.min_distinct_pages) {
            result.dropped_visits += hits.size();
            return;
        }
        Session s;
        s.user = user;
        s.visits.reserve(hits.size());
        for (const auto& h : hits) s.visits.push_back({pages.intern(h.path), h.time});
        refresh_page_set(s);
        result.sessions.push_back(std::move(s));
    };

    for (std::size_t h = 0; h < hosts.size(); ++h) {
        auto& hits = per_host[h];
        std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.time < b.time; });
        std::size_t start = 0;
        for (std::size_t i = 1; i <= hits.size(); ++i) {
            if (i == hits.size() || hits[i].time - hits[i - 1].time > options.timeout_seconds) {
                emit(hosts[h], std::span<const Hit>(hits).subspan(start, i - start));
                start = i;
            }
        }
    }
    return result;
}

void write_sessions_jsonl(std::ostream& out, std::span<const Session> sessions, const PageTable& pages) {
    for (const auto& s : sessions) {
        auto p = nlohmann::ordered_json::array();
        auto t = nlohmann::ordered_json::array();
        for (const auto& v : s.visits) {
            p.push_back(pages.path(v.page));
            t.push_back(v.time);
        }
        nlohmann::ordered_json j;
        j["user"] = s.user;
        j["pages"] = std::move(p);
        j["times"] = std::move(t);
        out << j.dump() << '\n';
    }
}

std::vector<Session> read_sessions_jsonl(std::istream& in, PageTable& pages) {
    std::vector<Session> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            const auto& p = j.at("pages");
            const auto& t = j.at("times");
            if (!p.is_array() || !t.is_array() || p.size() != t.size() || p.empty())
                throw SessionFileError("pages/times mismatch");
            Session s;
            s.user = j.at("user").get<std::string>();
            for (std::size_t i = 0; i < p.size(); ++i)
                s.visits.push_back({pages.intern(p[i].get<std::string>()), t[i].get<std::int64_t>()});
            refresh_page_set(s);
            out.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw SessionFileError("session file line " + std::to_string(lineno) + ": " + e.what());
        } catch (const SessionFileError& e) {
            throw SessionFileError("session file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace navmine
