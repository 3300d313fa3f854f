#include "navmine/logparse.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstring>
#include <fstream>
#include <thread>

namespace navmine {

namespace {

constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

bool all_digits(std::string_view s) noexcept {
    return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

// Reads exactly `width` digits starting at `s[pos]`.
std::optional<int> fixed_int(std::string_view s, std::size_t pos, std::size_t width) {
    if (pos + width > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + width; ++i) {
        if (!is_digit(s[i])) return std::nullopt;
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

std::optional<std::string> dash_to_absent(std::string_view s) {
    if (s == "-") return std::nullopt;
    return std::string(s);
}

class Cursor {
public:
    explicit Cursor(std::string_view line) : line_(line) {}

    std::size_t pos() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ >= line_.size(); }
    char peek() const noexcept { return at_end() ? '\0' : line_[pos_]; }

    void skip_spaces() noexcept {
        while (!at_end() && (line_[pos_] == ' ' || line_[pos_] == '\t')) ++pos_;
    }

    // Whitespace-delimited token; empty at end of line.
    std::string_view token() noexcept {
        skip_spaces();
        std::size_t start = pos_;
        while (!at_end() && line_[pos_] != ' ' && line_[pos_] != '\t') ++pos_;
        return line_.substr(start, pos_ - start);
    }

    // Quoted field starting at the current '"'. Backslash escapes are kept raw.
    std::optional<std::string_view> quoted() noexcept {
        if (peek() != '"') return std::nullopt;
        std::size_t start = ++pos_;
        while (!at_end()) {
            char c = line_[pos_];
            if (c == '\\' && pos_ + 1 < line_.size()) {
                pos_ += 2;
                continue;
            }
            if (c == '"') {
                auto out = line_.substr(start, pos_ - start);
                ++pos_;
                return out;
            }
            ++pos_;
        }
        return std::nullopt;
    }

    std::string_view rest() const noexcept { return line_.substr(std::min(pos_, line_.size())); }
    void seek(std::size_t p) noexcept { pos_ = p; }

private:
    std::string_view line_;
    std::size_t pos_ = 0;
};

// Locates the quote closing the request field. Request lines in old logs may
// contain stray quotes, so prefer the first unescaped quote that is followed
// by whitespace and a numeric status token.
std::optional<std::size_t> find_request_close(std::string_view line, std::size_t open) {
    std::optional<std::size_t> fallback;
    for (std::size_t i = open + 1; i < line.size(); ++i) {
        if (line[i] == '\\') {
            ++i;
            continue;
        }
        if (line[i] != '"') continue;
        std::size_t after = i + 1;
        if (after == line.size()) {
            if (!fallback) fallback = i;
            continue;
        }
        if (line[after] != ' ' && line[after] != '\t') continue;
        std::size_t t = after;
        while (t < line.size() && (line[t] == ' ' || line[t] == '\t')) ++t;
        std::size_t e = t;
        while (e < line.size() && line[e] != ' ' && line[e] != '\t') ++e;
        if (all_digits(line.substr(t, e - t))) return i;
        if (!fallback) fallback = i;
    }
    return fallback;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

bool parse_request(std::string_view request, LogEntry& e) {
    auto tokens = split_ws(request);
    switch (tokens.size()) {
        case 0:
            return false;
        case 1:
            e.method = "GET";
            e.uri = std::string(tokens[0]);
            return true;
        case 2:
            e.method = std::string(tokens[0]);
            e.uri = std::string(tokens[1]);
            return true;
        case 3:
            e.method = std::string(tokens[0]);
            e.uri = std::string(tokens[1]);
            e.protocol = std::string(tokens[2]);
            return true;
        default:
            break;
    }
    if (!tokens.back().starts_with("HTTP/")) return false;
    e.method = std::string(tokens.front());
    std::string uri;
    for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
        if (!uri.empty()) uri += ' ';
        uri += tokens[i];
    }
    e.uri = std::move(uri);
    e.protocol = std::string(tokens.back());
    return true;
}

void append_quoted_or_dash(std::string& out, const std::optional<std::string>& v) {
    out += " \"";
    out += v ? *v : std::string("-");
    out += '"';
}

}  // namespace

std::string_view to_string(ParseError e) noexcept {
    switch (e) {
        case ParseError::malformed_timestamp: return "malformed_timestamp";
        case ParseError::bad_request_field: return "bad_request_field";
        case ParseError::missing_field: return "missing_field";
        case ParseError::non_numeric_status: return "non_numeric_status";
    }
    return "unknown";
}

std::optional<Timestamp> parse_clf_time(std::string_view t) {
    // dd/Mon/yyyy:HH:MM:SS +zzzz
    if (t.size() != 26) return std::nullopt;
    if (t[2] != '/' || t[6] != '/' || t[11] != ':' || t[14] != ':' || t[17] != ':' ||
        t[20] != ' ' || (t[21] != '+' && t[21] != '-'))
        return std::nullopt;
    auto day = fixed_int(t, 0, 2);
    auto year = fixed_int(t, 7, 4);
    auto hh = fixed_int(t, 12, 2);
    auto mm = fixed_int(t, 15, 2);
    auto ss = fixed_int(t, 18, 2);
    auto off_h = fixed_int(t, 22, 2);
    auto off_m = fixed_int(t, 24, 2);
    if (!day || !year || !hh || !mm || !ss || !off_h || !off_m) return std::nullopt;
    auto mon_it = std::find(kMonths.begin(), kMonths.end(), t.substr(3, 3));
    if (mon_it == kMonths.end()) return std::nullopt;
    if (*hh > 23 || *mm > 59 || *ss > 59 || *off_h > 23 || *off_m > 59) return std::nullopt;

    using namespace std::chrono;
    const unsigned month = static_cast<unsigned>(mon_it - kMonths.begin()) + 1;
    year_month_day ymd{std::chrono::year{*year}, std::chrono::month{month},
                       std::chrono::day{static_cast<unsigned>(*day)}};
    if (!ymd.ok()) return std::nullopt;

    int offset = (*off_h * 60 + *off_m) * (t[21] == '-' ? -1 : 1);
    std::int64_t local = static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * 86400 +
                         *hh * 3600 + *mm * 60 + *ss;
    return Timestamp{local - static_cast<std::int64_t>(offset) * 60, offset};
}

std::string format_clf_time(const Timestamp& ts) {
    using namespace std::chrono;
    std::int64_t local = ts.epoch_seconds + static_cast<std::int64_t>(ts.utc_offset_minutes) * 60;
    std::int64_t days = local / 86400;
    std::int64_t secs = local % 86400;
    if (secs < 0) {
        secs += 86400;
        --days;
    }
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    int off = ts.utc_offset_minutes;
    char sign = off < 0 ? '-' : '+';
    off = off < 0 ? -off : off;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%02u/%s/%04d:%02d:%02d:%02d %c%02d%02d",
                  static_cast<unsigned>(ymd.day()),
                  kMonths[static_cast<unsigned>(ymd.month()) - 1].data(),
                  static_cast<int>(ymd.year()), static_cast<int>(secs / 3600),
                  static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60), sign, off / 60,
                  off % 60);
    return buf;
}

ParseResult parse_line(std::string_view line, LogFormat format) {
    auto fail = [](std::size_t at, ParseError why) { return ParseResult{ParseFailure{at, why}}; };

    Cursor cur(line);
    LogEntry e;

    auto host = cur.token();
    if (host.empty()) return fail(cur.pos(), ParseError::missing_field);
    e.remotehost = std::string(host);

    auto ident = cur.token();
    if (ident.empty()) return fail(cur.pos(), ParseError::missing_field);
    e.rfc931 = dash_to_absent(ident);

    auto user = cur.token();
    if (user.empty()) return fail(cur.pos(), ParseError::missing_field);
    e.authuser = dash_to_absent(user);

    cur.skip_spaces();
    if (cur.at_end()) return fail(cur.pos(), ParseError::missing_field);
    if (cur.peek() != '[') return fail(cur.pos(), ParseError::malformed_timestamp);
    std::size_t close = line.find(']', cur.pos());
    if (close == std::string_view::npos) return fail(cur.pos(), ParseError::malformed_timestamp);
    auto ts = parse_clf_time(line.substr(cur.pos() + 1, close - cur.pos() - 1));
    if (!ts) return fail(cur.pos(), ParseError::malformed_timestamp);
    e.timestamp = *ts;
    cur.seek(close + 1);

    cur.skip_spaces();
    if (cur.at_end()) return fail(cur.pos(), ParseError::missing_field);
    if (cur.peek() != '"') return fail(cur.pos(), ParseError::bad_request_field);
    std::size_t open = cur.pos();
    auto req_close = find_request_close(line, open);
    if (!req_close) return fail(open, ParseError::bad_request_field);
    if (!parse_request(line.substr(open + 1, *req_close - open - 1), e))
        return fail(open, ParseError::bad_request_field);
    cur.seek(*req_close + 1);

    auto status = cur.token();
    if (status.empty()) return fail(cur.pos(), ParseError::missing_field);
    if (!all_digits(status) || status.size() > 3)
        return fail(cur.pos() - status.size(), ParseError::non_numeric_status);
    int code = 0;
    std::from_chars(status.data(), status.data() + status.size(), code);
    if (code < 100 || code > 599) return fail(cur.pos() - status.size(), ParseError::non_numeric_status);
    e.status = code;

    auto bytes = cur.token();
    if (bytes.empty()) return fail(cur.pos(), ParseError::missing_field);
    if (bytes != "-") {
        std::int64_t n = 0;
        auto [ptr, ec] = std::from_chars(bytes.data(), bytes.data() + bytes.size(), n);
        if (ec != std::errc{} || ptr != bytes.data() + bytes.size() || n < 0)
            return fail(cur.pos() - bytes.size(), ParseError::missing_field);
        e.bytes = n;
    }

    if (format == LogFormat::extended) {
        std::optional<std::string>* slots[] = {&e.referrer, &e.user_agent, &e.cookie};
        for (auto* slot : slots) {
            cur.skip_spaces();
            if (cur.at_end()) break;
            std::size_t at = cur.pos();
            auto field = cur.quoted();
            if (!field) return fail(at, ParseError::missing_field);
            *slot = dash_to_absent(*field);
        }
    }
    return e;
}

std::string format_line(const LogEntry& e, LogFormat format) {
    std::string out;
    out.reserve(128 + e.uri.size());
    out += e.remotehost;
    out += ' ';
    out += e.rfc931.value_or("-");
    out += ' ';
    out += e.authuser.value_or("-");
    out += " [";
    out += format_clf_time(e.timestamp);
    out += "] \"";
    out += e.method;
    out += ' ';
    out += e.uri;
    if (e.protocol) {
        out += ' ';
        out += *e.protocol;
    }
    out += "\" ";
    out += std::to_string(e.status);
    out += ' ';
    out += e.bytes ? std::to_string(*e.bytes) : std::string("-");
    if (format == LogFormat::extended) {
        append_quoted_or_dash(out, e.referrer);
        append_quoted_or_dash(out, e.user_agent);
        if (e.cookie) append_quoted_or_dash(out, e.cookie);
    }
    return out;
}

std::vector<ParseResult> parse_lines(std::span<const std::string> lines, LogFormat format,
                                     unsigned workers) {
    std::vector<ParseResult> out(lines.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = parse_line(lines[i], format);
    };
    workers = std::max(1u, workers);
    if (workers == 1 || lines.size() < 4096) {
        work(0, lines.size());
        return out;
    }
    std::vector<std::jthread> pool;
    std::size_t shard = (lines.size() + workers - 1) / workers;
    for (std::size_t begin = 0; begin < lines.size(); begin += shard)
        pool.emplace_back(work, begin, std::min(lines.size(), begin + shard));
    return out;
}

// --- LogReader -------------------------------------------------------------

class LogReader::Source {
public:
    explicit Source(std::istream& in) : in_(&in) { sniff(); }
    explicit Source(const std::filesystem::path& path)
        : owned_(std::make_unique<std::ifstream>(path, std::ios::binary)), in_(owned_.get()) {
        if (!*owned_) throw IoFailure("cannot open " + path.string());
        sniff();
    }
    ~Source() {
        if (gzip_) inflateEnd(&zs_);
    }
    Source(const Source&) = delete;
    Source& operator=(const Source&) = delete;

    // Appends up to one chunk of decoded bytes. Returns false at end of data.
    bool read(std::string& out) {
        if (!gzip_) {
            char buf[1 << 16];
            in_->read(buf, sizeof buf);
            auto n = in_->gcount();
            if (in_->bad()) throw IoFailure("read error");
            out.append(buf, static_cast<std::size_t>(n));
            return n > 0;
        }
        return inflate_chunk(out);
    }

private:
    void sniff() {
        int a = in_->peek();
        if (a != 0x1f) {
            in_->clear(in_->rdstate() & ~std::ios::failbit & ~std::ios::eofbit);
            return;
        }
        in_->get();
        int b = in_->peek();
        in_->unget();
        if (b != 0x8b) return;
        gzip_ = true;
        std::memset(&zs_, 0, sizeof zs_);
        if (inflateInit2(&zs_, 15 + 16) != Z_OK) throw IoFailure("zlib init failed");
    }

    bool inflate_chunk(std::string& out) {
        char obuf[1 << 16];
        while (true) {
            if (zs_.avail_in == 0 && !in_eof_) {
                in_->read(ibuf_, sizeof ibuf_);
                auto n = in_->gcount();
                if (in_->bad()) throw IoFailure("read error");
                if (n == 0) in_eof_ = true;
                zs_.next_in = reinterpret_cast<Bytef*>(ibuf_);
                zs_.avail_in = static_cast<uInt>(n);
            }
            if (zs_.avail_in == 0 && in_eof_) {
                if (!member_done_) throw IoFailure("truncated gzip stream");
                return false;
            }
            if (member_done_) {
                // concatenated gzip members
                inflateReset(&zs_);
                member_done_ = false;
            }
            zs_.next_out = reinterpret_cast<Bytef*>(obuf);
            zs_.avail_out = sizeof obuf;
            int rc = inflate(&zs_, Z_NO_FLUSH);
            if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR)
                throw IoFailure(std::string("corrupt gzip stream: ") + (zs_.msg ? zs_.msg : "?"));
            if (rc == Z_STREAM_END) member_done_ = true;
            std::size_t produced = sizeof obuf - zs_.avail_out;
            if (produced > 0) {
                out.append(obuf, produced);
                return true;
            }
        }
    }

    std::unique_ptr<std::ifstream> owned_;
    std::istream* in_;
    bool gzip_ = false;
    bool in_eof_ = false;
    bool member_done_ = false;
    z_stream zs_{};
    char ibuf_[1 << 16];
};

LogReader::LogReader(const std::filesystem::path& path, LogFormat format)
    : source_(std::make_unique<Source>(path)), format_(format) {}

LogReader::LogReader(std::istream& in, LogFormat format)
    : source_(std::make_unique<Source>(in)), format_(format) {}

LogReader::~LogReader() = default;
LogReader::LogReader(LogReader&&) noexcept = default;
LogReader& LogReader::operator=(LogReader&&) noexcept = default;

bool LogReader::fill() {
    if (eof_) return false;
    if (pos_ > 0) {
        buffer_.erase(0, pos_);
        pos_ = 0;
    }
    if (!source_->read(buffer_)) eof_ = true;
    return !eof_;
}

bool LogReader::next_line(std::string& line) {
    while (true) {
        auto nl = buffer_.find('\n', pos_);
        if (nl != std::string::npos) {
            line.assign(buffer_, pos_, nl - pos_);
            pos_ = nl + 1;
            break;
        }
        if (!fill()) {
            if (pos_ >= buffer_.size()) return false;
            line.assign(buffer_, pos_);
            pos_ = buffer_.size();
            break;
        }
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lines_;
    return true;
}

void LogReader::tally(const ParseResult& r) noexcept {
    if (std::holds_alternative<LogEntry>(r))
        ++parsed_;
    else
        ++failed_;
}

bool LogReader::next(LogRecord& record) {
    std::string line;
    if (!next_line(line)) return false;
    record.line_number = lines_;
    record.result = parse_line(line, format_);
    tally(record.result);
    return true;
}

namespace {
ReadSummary drain(LogReader& reader) {
    ReadSummary s;
    LogRecord rec;
    while (reader.next(rec)) s.records.push_back(std::move(rec));
    s.parsed = reader.parsed();
    s.failed = reader.failed();
    return s;
}
}  // namespace

ReadSummary read_log(std::istream& in, LogFormat format) {
    LogReader reader(in, format);
    return drain(reader);
}

ReadSummary read_log(const std::filesystem::path& path, LogFormat format) {
    LogReader reader(path, format);
    return drain(reader);
}

}  // namespace navmine
