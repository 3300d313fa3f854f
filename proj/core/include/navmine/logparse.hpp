#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace navmine {

enum class LogFormat { common, extended };

/// Request time as written in the log: a UTC instant plus the offset the
/// server printed, so the original `[dd/Mon/yyyy:HH:MM:SS +zzzz]` text can be
/// reproduced.
struct Timestamp {
    std::int64_t epoch_seconds = 0;
    int utc_offset_minutes = 0;

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

struct LogEntry {
    std::string remotehost;
    std::optional<std::string> rfc931;
    std::optional<std::string> authuser;
    Timestamp timestamp;
    std::string method;
    std::string uri;
    std::optional<std::string> protocol;
    int status = 0;
    std::optional<std::int64_t> bytes;
    // extended format only
    std::optional<std::string> referrer;
    std::optional<std::string> user_agent;
    std::optional<std::string> cookie;

    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

enum class ParseError {
    malformed_timestamp,
    bad_request_field,
    missing_field,
    non_numeric_status,
};

std::string_view to_string(ParseError e) noexcept;

struct ParseFailure {
    std::size_t offset = 0;  // byte offset into the line where parsing stopped
    ParseError reason = ParseError::missing_field;

    friend bool operator==(const ParseFailure&, const ParseFailure&) = default;
};

using ParseResult = std::variant<LogEntry, ParseFailure>;

class IoFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses `[dd/Mon/yyyy:HH:MM:SS +zzzz]` (the brackets are not part of `text`).
std::optional<Timestamp> parse_clf_time(std::string_view text);
std::string format_clf_time(const Timestamp& ts);

ParseResult parse_line(std::string_view line, LogFormat format);

/// Renders an entry back into a log line of the given format. Parsing the
/// result yields an equal LogEntry.
std::string format_line(const LogEntry& entry, LogFormat format);

/// Parses a batch of lines, optionally sharded over `workers` threads.
/// Results are in input order.
std::vector<ParseResult> parse_lines(std::span<const std::string> lines, LogFormat format,
                                     unsigned workers = 1);

struct LogRecord {
    std::size_t line_number = 0;  // 1-based
    ParseResult result;
};

/// Streams log lines from a plain or gzip-compressed source. Compression is
/// detected from the magic bytes, not the file name.
class LogReader {
public:
    LogReader(const std::filesystem::path& path, LogFormat format);
    LogReader(std::istream& in, LogFormat format);
    ~LogReader();
    LogReader(LogReader&&) noexcept;
    LogReader& operator=(LogReader&&) noexcept;

    /// Reads the next raw line (without the newline). Returns false at EOF.
    bool next_line(std::string& line);
    /// Reads and parses the next line. Returns false at EOF.
    bool next(LogRecord& record);

    std::size_t lines_read() const noexcept { return lines_; }
    std::size_t parsed() const noexcept { return parsed_; }
    std::size_t failed() const noexcept { return failed_; }
    LogFormat format() const noexcept { return format_; }

    /// Caller-side accounting for lines fetched with next_line() and parsed
    /// elsewhere.
    void tally(const ParseResult& r) noexcept;

private:
    class Source;
    bool fill();

    std::unique_ptr<Source> source_;
    LogFormat format_;
    std::string buffer_;
    std::size_t pos_ = 0;
    bool eof_ = false;
    std::size_t lines_ = 0;
    std::size_t parsed_ = 0;
    std::size_t failed_ = 0;
};

struct ReadSummary {
    std::vector<LogRecord> records;
    std::size_t parsed = 0;
    std::size_t failed = 0;
};

ReadSummary read_log(std::istream& in, LogFormat format);
ReadSummary read_log(const std::filesystem::path& path, LogFormat format);

}  // namespace navmine
