#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "navmine/logparse.hpp"

namespace navmine {

using PageId = std::uint32_t;

/// Dense page numbering. Ids are handed out in first-interned order.
class PageTable {
public:
    PageId intern(std::string_view path);
    std::optional<PageId> find(std::string_view path) const;
    const std::string& path(PageId id) const { return paths_.at(id); }
    const std::vector<std::string>& paths() const noexcept { return paths_; }
    std::size_t size() const noexcept { return paths_.size(); }

    friend bool operator==(const PageTable& a, const PageTable& b) { return a.paths_ == b.paths_; }

private:
    std::vector<std::string> paths_;
    std::unordered_map<std::string, PageId> index_;
};

struct Visit {
    PageId page = 0;
    std::int64_t time = 0;  // epoch seconds

    friend bool operator==(const Visit&, const Visit&) = default;
};

struct Session {
    std::string user;
    std::vector<Visit> visits;
    std::vector<PageId> page_set;  // sorted, distinct

    friend bool operator==(const Session&, const Session&) = default;
};

/// Recomputes page_set from visits.
void refresh_page_set(Session& s);

struct RobotPolicy {
    bool enabled = true;
    bool robots_txt_rule = true;
    bool burst_rule = true;
    std::size_t burst_min_requests = 50;
    double burst_median_gap_seconds = 1.0;
    bool agent_rule = true;
    std::vector<std::string> agent_keywords = {"bot", "crawler", "spider", "slurp", "archiver",
                                               "wget", "harvest", "scooter", "robot"};
};

struct CleaningRules {
    std::vector<std::string> allowed_extensions = {".html", ".htm", ""};
    std::vector<std::string> cgi_substrings = {"/cgi-bin/"};
    std::vector<std::string> cgi_extensions = {".pl", ".cgi"};
    std::vector<int> status_keep = {200, 304};  // empty keeps every status
    RobotPolicy robots;
};

struct CleaningReport {
    std::map<std::string, std::size_t> removed_by_extension;
    std::size_t removed_robot = 0;
    std::size_t removed_failed_status = 0;
    std::size_t kept = 0;

    std::size_t removed_total() const noexcept;
    std::size_t total() const noexcept { return kept + removed_total(); }

    /// `category,count` rows, one per extension bucket then robot/status/kept.
    void write_csv(std::ostream& out) const;

    friend bool operator==(const CleaningReport&, const CleaningReport&) = default;
};

/// Strips query and fragment, percent-decodes once, collapses duplicate
/// slashes and a trailing index.html/index.htm. Always returns a path
/// beginning with "/".
std::string normalize_uri(std::string_view uri);

/// Lower-cased extension of the last path segment, including the dot; ""
/// for directories and extension-less names.
std::string page_extension(std::string_view normalized_path);

/// Why an entry is dropped before robot analysis, if it is.
enum class EntryVerdict { keep, extension, failed_status };

/// Applies the extension/CGI and status rules. `bucket` receives the report
/// key for extension removals.
EntryVerdict classify_entry(const LogEntry& e, const CleaningRules& rules, std::string* bucket = nullptr);

/// True when the entry looks like a content page request (passes the
/// extension and CGI rules regardless of status).
bool is_page_request(const LogEntry& e, const CleaningRules& rules);

/// Incremental robot detector. Feed every parsed entry, then query.
class RobotDetector {
public:
    explicit RobotDetector(const CleaningRules& rules) : rules_(&rules) {}
    void observe(const LogEntry& e);
    std::unordered_set<std::string> robots() const;

private:
    struct HostState {
        bool robots_txt = false;
        bool agent = false;
        std::vector<std::int64_t> page_times;
    };
    const CleaningRules* rules_;
    std::unordered_map<std::string, HostState> hosts_;
};

std::unordered_set<std::string> detect_robots(std::span<const LogEntry> entries, const CleaningRules& rules);

struct CleanResult {
    std::vector<LogEntry> kept;
    CleaningReport report;
};

CleanResult clean(std::span<const LogEntry> entries, const CleaningRules& rules);

/// Streaming form of clean() for inputs too large to hold in memory. Only
/// entries that survive the per-entry rules are retained; robot hosts are
/// removed in finish().
class Cleaner {
public:
    explicit Cleaner(CleaningRules rules);
    Cleaner(const Cleaner&) = delete;
    Cleaner& operator=(const Cleaner&) = delete;

    void add(const LogEntry& e);
    CleanResult finish() &&;

private:
    CleaningRules rules_;
    RobotDetector detector_;
    std::vector<LogEntry> candidates_;
    CleaningReport report_;
};

struct SessionizeOptions {
    std::int64_t timeout_seconds = 30 * 60;
    std::size_t min_distinct_pages = 2;
};

struct SessionizeResult {
    std::vector<Session> sessions;
    std::size_t dropped_visits = 0;  // entries that fell in too-short sessions
    std::size_t distinct_users = 0;  // hosts among the cleaned entries
};

/// Groups entries by remotehost and splits on gaps strictly greater than the
/// timeout. Only pages of retained sessions are interned, in session order.
SessionizeResult sessionize(std::span<const LogEntry> entries, const SessionizeOptions& options,
                            PageTable& pages);

class SessionFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// JSON lines `{"user":..,"pages":[..],"times":[..]}`, one per session.
void write_sessions_jsonl(std::ostream& out, std::span<const Session> sessions, const PageTable& pages);
/// Inverse of write_sessions_jsonl; interns pages into `pages`.
std::vector<Session> read_sessions_jsonl(std::istream& in, PageTable& pages);

}  // namespace navmine
