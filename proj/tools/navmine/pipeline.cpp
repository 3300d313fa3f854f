#include "pipeline.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace navmine::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::vector<double> default_min_freqs() {
    std::vector<double> grid;
    for (int k = 1; k <= 9; ++k) grid.push_back(k / 10.0);
    return grid;
}

std::string_view to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::parse_stats: return "parse-stats";
        case Stage::sessions: return "sessions";
        case Stage::matrices: return "matrices";
        case Stage::cluster: return "cluster";
        case Stage::evaluate: return "evaluate";
        case Stage::sweep: return "sweep";
        case Stage::all: return "run";
    }
    return "?";
}

void Config::validate() const {
    if (inputs.empty()) throw ConfigError("no input files given");
    if (!(timeout_minutes > 0.0)) throw ConfigError("timeout must be positive");
    if (alphas.empty()) throw ConfigError("alpha grid is empty");
    if (min_freqs.empty()) throw ConfigError("min-freq grid is empty");
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha " + csv::number(a) + " outside [0,1]");
    for (double f : min_freqs)
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("min-freq " + csv::number(f) + " outside [0,1]");
    if (workers == 0) throw ConfigError("workers must be at least 1");
    if (rules.robots.burst_median_gap_seconds < 0.0) throw ConfigError("robot gap threshold must be >= 0");
}

namespace {

std::string_view format_name(LogFormat f) { return f == LogFormat::common ? "common" : "extended"; }

std::uint32_t crc_of_file(const fs::path& path, std::uintmax_t& size) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PipelineError("cannot read " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    size = 0;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        auto n = in.gcount();
        if (n <= 0) break;
        crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(n));
        size += static_cast<std::uintmax_t>(n);
    }
    return static_cast<std::uint32_t>(crc);
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

ojson rules_json(const CleaningRules& r) {
    ojson j;
    j["allowed_extensions"] = r.allowed_extensions;
    j["cgi_substrings"] = r.cgi_substrings;
    j["cgi_extensions"] = r.cgi_extensions;
    j["status_keep"] = r.status_keep;
    ojson robots;
    robots["enabled"] = r.robots.enabled;
    robots["robots_txt_rule"] = r.robots.robots_txt_rule;
    robots["burst_rule"] = r.robots.burst_rule;
    robots["burst_min_requests"] = r.robots.burst_min_requests;
    robots["burst_median_gap_seconds"] = r.robots.burst_median_gap_seconds;
    robots["agent_rule"] = r.robots.agent_rule;
    robots["agent_keywords"] = r.robots.agent_keywords;
    j["robots"] = robots;
    return j;
}

// Everything that determines the session file.
ojson preprocess_key(const Config& c) {
    ojson j;
    j["version"] = 1;
    ojson inputs = ojson::array();
    for (const auto& p : c.inputs) {
        ojson in;
        in["path"] = p.string();
        std::error_code ec;
        in["bytes"] = fs::file_size(p, ec);
        if (ec) in["bytes"] = nullptr;
        inputs.push_back(in);
    }
    j["inputs"] = inputs;
    j["format"] = format_name(c.format);
    j["timeout_minutes"] = c.timeout_minutes;
    j["rules"] = rules_json(c.rules);
    return j;
}

ojson config_json(const Config& c) {
    ojson j;
    ojson inputs = ojson::array();
    for (const auto& p : c.inputs) inputs.push_back(p.string());
    j["inputs"] = inputs;
    j["format"] = format_name(c.format);
    j["timeout_minutes"] = c.timeout_minutes;
    j["alphas"] = c.alphas;
    j["min_freqs"] = c.min_freqs;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["occurrence"] = c.occurrence == OccurrenceMode::plain ? "plain" : "exclusive";
    j["count_trailing_directory"] = c.path.count_trailing_directory;
    j["coherence_counting"] = c.coherence.counting == VisitCounting::visits ? "visits" : "distinct_pages";
    j["singletons_are_clusters"] = c.coherence.singletons_are_clusters;
    j["rules"] = rules_json(c.rules);
    return j;
}

std::string cell_tag(double alpha, double min_freq) {
    return "alpha-" + csv::number(alpha) + "_minfreq-" + csv::number(min_freq);
}

class Run {
public:
    Run(const Config& config, std::ostream& log, std::ostream& err) : cfg_(config), log_(log), err_(err) {}

    void execute(Stage stage) {
        fs::create_directories(cfg_.out);
        preprocess();
        if (stage == Stage::parse_stats) report_parse_stats();
        if (stage == Stage::sessions || stage == Stage::all) report_sessions();
        if (stage == Stage::matrices || stage == Stage::all) matrices_stage();
        if (stage == Stage::cluster || stage == Stage::all) cluster_stage();
        if (stage == Stage::evaluate || stage == Stage::all) evaluate_stage();
        if (stage == Stage::sweep || stage == Stage::all) sweep_stage();
        write_manifest(stage);
    }

private:
    // --- artifact bookkeeping -------------------------------------------

    fs::path at(const fs::path& rel) const { return cfg_.out / rel; }

    void write_artifact(const fs::path& rel, const std::string& content) {
        fs::path full = at(rel);
        fs::create_directories(full.parent_path());
        std::ofstream out(full, std::ios::binary | std::ios::trunc);
        if (!out) throw PipelineError("cannot write " + full.string());
        out << content;
        out.close();
        if (!out) throw PipelineError("write failed for " + full.string());
        artifacts_.insert(rel.generic_string());
    }

    void note_artifact(const fs::path& rel) { artifacts_.insert(rel.generic_string()); }

    void write_manifest(Stage stage) {
        ojson j;
        j["command"] = to_string(stage);
        j["config"] = config_json(cfg_);
        ojson inputs = ojson::array();
        for (const auto& p : cfg_.inputs) {
            std::uintmax_t size = 0;
            auto crc = crc_of_file(p, size);
            inputs.push_back({{"path", p.string()}, {"bytes", size}, {"crc32", hex32(crc)}});
        }
        j["inputs"] = inputs;
        ojson files = ojson::array();
        for (const auto& rel : artifacts_) {
            std::uintmax_t size = 0;
            auto crc = crc_of_file(at(rel), size);
            files.push_back({{"path", rel}, {"bytes", size}, {"crc32", hex32(crc)}});
        }
        j["artifacts"] = files;
        std::ofstream out(at("manifest.json"), std::ios::binary | std::ios::trunc);
        if (!out) throw PipelineError("cannot write " + at("manifest.json").string());
        out << j.dump(2) << '\n';
    }

    // --- preprocessing with a persisted session file ----------------------

    static constexpr const char* kSessions = "sessions.jsonl";
    static constexpr const char* kSessionsMeta = "sessions.meta.json";
    static constexpr const char* kParseStats = "parse_stats.json";
    static constexpr const char* kCleaning = "cleaning_report.csv";
    static constexpr const char* kSummary = "summary.json";
    static constexpr const char* kLengths = "session_lengths.csv";

    bool try_load_sessions() {
        for (const char* f : {kSessions, kSessionsMeta, kParseStats, kCleaning, kSummary, kLengths})
            if (!fs::exists(at(f))) return false;

        std::ifstream meta_in(at(kSessionsMeta));
        ojson meta = ojson::parse(meta_in, nullptr, false);
        if (meta.is_discarded() || meta != preprocess_key(cfg_)) {
            err_ << "warning: stale intermediate " << at(kSessions).string() << " (settings or inputs changed); regenerating\n";
            return false;
        }
        auto cache_time = fs::last_write_time(at(kSessions));
        for (const auto& p : cfg_.inputs) {
            std::error_code ec;
            auto t = fs::last_write_time(p, ec);
            if (ec || t > cache_time) {
                err_ << "warning: stale intermediate " << at(kSessions).string() << " (input " << p.string()
                     << " is newer); regenerating\n";
                return false;
            }
        }
        try {
            std::ifstream in(at(kSessions));
            PageTable pages;
            auto sessions = read_sessions_jsonl(in, pages);
            pages_ = std::move(pages);
            sessions_ = std::move(sessions);
        } catch (const SessionFileError& e) {
            err_ << "warning: corrupt intermediate " << at(kSessions).string() << " (" << e.what() << "); regenerating\n";
            return false;
        }
        std::ifstream stats_in(at(kParseStats));
        parse_stats_ = ojson::parse(stats_in, nullptr, false);
        std::ifstream summary_in(at(kSummary));
        summary_ = ojson::parse(summary_in, nullptr, false);
        if (parse_stats_.is_discarded() || summary_.is_discarded()) {
            err_ << "warning: corrupt intermediate summaries; regenerating\n";
            return false;
        }
        for (const char* f : {kSessions, kSessionsMeta, kParseStats, kCleaning, kSummary, kLengths}) note_artifact(f);
        log_ << "reusing " << sessions_.size() << " sessions from " << at(kSessions).string() << '\n';
        return true;
    }

    void preprocess() {
        if (try_load_sessions()) return;

        Cleaner cleaner(cfg_.rules);
        std::size_t lines = 0, parsed = 0, failed = 0;
        std::map<std::string, std::size_t> by_reason;
        ojson per_input = ojson::array();
        std::vector<std::string> batch;
        constexpr std::size_t kBatch = 1 << 16;

        for (const auto& path : cfg_.inputs) {
            std::optional<LogReader> reader;
            try {
                reader.emplace(path, cfg_.format);
            } catch (const IoFailure& e) {
                throw PipelineError("cannot read input " + path.string() + ": " + e.what());
            }
            auto flush = [&] {
                for (const auto& r : parse_lines(batch, cfg_.format, cfg_.workers)) {
                    reader->tally(r);
                    if (const auto* e = std::get_if<LogEntry>(&r))
                        cleaner.add(*e);
                    else
                        ++by_reason[std::string(to_string(std::get<ParseFailure>(r).reason))];
                }
                batch.clear();
            };
            try {
                std::string line;
                while (reader->next_line(line)) {
                    batch.push_back(std::move(line));
                    if (batch.size() == kBatch) flush();
                }
                flush();
            } catch (const IoFailure& e) {
                throw PipelineError("cannot read input " + path.string() + ": " + e.what());
            }
            if (reader->lines_read() == 0) throw PipelineError("input " + path.string() + " is empty");
            per_input.push_back({{"path", path.string()},
                                 {"lines", reader->lines_read()},
                                 {"parsed", reader->parsed()},
                                 {"failed", reader->failed()}});
            lines += reader->lines_read();
            parsed += reader->parsed();
            failed += reader->failed();
        }

        CleanResult cleaned = std::move(cleaner).finish();
        SessionizeOptions sopt;
        sopt.timeout_seconds = static_cast<std::int64_t>(cfg_.timeout_minutes * 60.0 + 0.5);
        PageTable pages;
        SessionizeResult sr = sessionize(cleaned.kept, sopt, pages);

        ojson reasons = ojson::object();
        for (const auto& [k, v] : by_reason) reasons[k] = v;
        parse_stats_ = {{"lines", lines}, {"parsed", parsed}, {"failed", failed}, {"failures", reasons}, {"inputs", per_input}};

        std::size_t visits = 0;
        for (const auto& s : sr.sessions) visits += s.visits.size();
        summary_ = {{"parsed_records", parsed},
                    {"cleaned_records", cleaned.report.kept},
                    {"distinct_users", sr.distinct_users},
                    {"sessions", sr.sessions.size()},
                    {"session_visits", visits},
                    {"dropped_visits", sr.dropped_visits},
                    {"pages", pages.size()}};

        std::ostringstream report;
        cleaned.report.write_csv(report);
        std::ostringstream sessions_out;
        write_sessions_jsonl(sessions_out, sr.sessions, pages);
        std::ostringstream lengths;
        session_length_histogram(sr.sessions).write_csv(lengths);

        write_artifact(kParseStats, parse_stats_.dump(2) + "\n");
        write_artifact(kCleaning, report.str());
        write_artifact(kSummary, summary_.dump(2) + "\n");
        write_artifact(kLengths, lengths.str());
        write_artifact(kSessions, sessions_out.str());
        // written last so its presence implies the rest is complete
        write_artifact(kSessionsMeta, preprocess_key(cfg_).dump(2) + "\n");

        pages_ = std::move(pages);
        sessions_ = std::move(sr.sessions);
    }

    void report_parse_stats() {
        log_ << "lines " << parse_stats_.value("lines", 0) << ", parsed " << parse_stats_.value("parsed", 0)
             << ", failed " << parse_stats_.value("failed", 0) << '\n';
        std::ifstream in(at(kCleaning));
        log_ << in.rdbuf();
    }

    void report_sessions() {
        log_ << "records " << summary_.value("cleaned_records", 0) << ", users " << summary_.value("distinct_users", 0)
             << ", sessions " << sessions_.size() << ", pages " << pages_.size() << '\n';
    }

    // --- matrices ---------------------------------------------------------

    ojson matrix_key() const {
        ojson j = preprocess_key(cfg_);
        j["occurrence"] = cfg_.occurrence == OccurrenceMode::plain ? "plain" : "exclusive";
        j["count_trailing_directory"] = cfg_.path.count_trailing_directory;
        return j;
    }

    static fs::path combined_file(double alpha) { return fs::path("matrices") / ("combined_alpha-" + csv::number(alpha) + ".csv"); }

    void ensure_base_matrices() {
        if (m_) return;
        m_ = build_cooccurrence(count_occurrences(sessions_, pages_.size()), cfg_.occurrence);
        p_ = build_path_matrix(pages_, cfg_.path);
    }

    void matrices_stage() {
        ensure_base_matrices();
        auto dump = [&](const fs::path& rel, const SimilarityMatrix& m) {
            std::ostringstream s;
            write_matrix_csv(s, m, pages_);
            write_artifact(rel, s.str());
        };
        dump("matrices/cooccurrence.csv", *m_);
        dump("matrices/path.csv", *p_);
        for (double a : cfg_.alphas) {
            auto c = combine(*m_, *p_, a);
            dump(combined_file(a), c);
            combined_[a] = std::move(c);
        }
        write_artifact("matrices/meta.json", matrix_key().dump(2) + "\n");
        log_ << "M " << m_->nnz() << " entries, P " << p_->nnz() << " entries over " << pages_.size() << " pages\n";
    }

    const SimilarityMatrix& combined_for(double alpha) {
        if (auto it = combined_.find(alpha); it != combined_.end()) return it->second;
        if (auto cached = load_combined(alpha)) return combined_[alpha] = std::move(*cached);
        ensure_base_matrices();
        return combined_[alpha] = combine(*m_, *p_, alpha);
    }

    std::optional<SimilarityMatrix> load_combined(double alpha) {
        fs::path rel = combined_file(alpha);
        if (!fs::exists(at(rel)) || !fs::exists(at("matrices/meta.json"))) return std::nullopt;
        std::ifstream meta_in(at("matrices/meta.json"));
        ojson meta = ojson::parse(meta_in, nullptr, false);
        if (meta.is_discarded() || meta != matrix_key() ||
            fs::last_write_time(at(rel)) < fs::last_write_time(at(kSessions))) {
            err_ << "warning: stale intermediate " << at(rel).string() << "; rebuilding\n";
            return std::nullopt;
        }
        try {
            std::ifstream in(at(rel));
            auto c = read_matrix_csv(in, pages_, MatrixRole::combined, alpha);
            note_artifact(rel);
            log_ << "reusing " << at(rel).string() << '\n';
            return c;
        } catch (const std::exception& e) {
            err_ << "warning: corrupt intermediate " << at(rel).string() << " (" << e.what() << "); rebuilding\n";
            return std::nullopt;
        }
    }

    // --- clustering and evaluation ----------------------------------------

    void cluster_stage() {
        for (double a : cfg_.alphas) {
            const SimilarityMatrix& c = combined_for(a);
            for (double f : cfg_.min_freqs) {
                Clustering cl = cluster(c, f);
                std::ostringstream s;
                write_clusters_json(s, cl, pages_);
                write_artifact(fs::path("clusters") / (cell_tag(a, f) + ".json"), s.str());
                log_ << "alpha " << csv::number(a) << " min_freq " << csv::number(f) << ": " << count_clusters(cl)
                     << " clusters, " << csv::number(pct_clustered(cl)) << "% pages clustered\n";
            }
        }
    }

    SweepReport half_split_grid() {
        if (!grid_) {
            SessionSplit split = split_sessions(sessions_, cfg_.seed);
            SimilarityMatrix m = build_cooccurrence(count_occurrences(split.train, pages_.size()), cfg_.occurrence);
            ensure_base_matrices();
            SweepOptions opt;
            opt.occurrence = cfg_.occurrence;
            opt.path = cfg_.path;
            opt.coherence = cfg_.coherence;
            opt.workers = cfg_.workers;
            grid_ = run_grid(m, *p_, split.test, cfg_.alphas, cfg_.min_freqs, opt);
            test_sessions_ = split.test.size();
        }
        return *grid_;
    }

    void evaluate_stage() {
        SweepReport grid = half_split_grid();
        std::ostringstream s;
        s << "alpha,min_freq,gamma,n_sessions\n";
        for (const auto& r : grid.rows) {
            s << csv::number(r.alpha) << ',' << csv::number(r.min_freq) << ',' << csv::number(r.gamma_mean) << ','
              << test_sessions_ << '\n';
            log_ << "alpha " << csv::number(r.alpha) << " min_freq " << csv::number(r.min_freq) << ": gamma "
                 << csv::number(r.gamma_mean) << '\n';
        }
        write_artifact("coherence.csv", s.str());
    }

    void sweep_stage() {
        SweepReport grid = half_split_grid();
        std::ostringstream s;
        grid.write_csv(s);
        write_artifact("sweep.csv", s.str());
        note_artifact(kLengths);
        log_ << "sweep: " << grid.rows.size() << " rows written to " << at("sweep.csv").string() << '\n';
    }

    const Config& cfg_;
    std::ostream& log_;
    std::ostream& err_;
    std::set<std::string> artifacts_;
    PageTable pages_;
    std::vector<Session> sessions_;
    ojson parse_stats_;
    ojson summary_;
    std::optional<SimilarityMatrix> m_;
    std::optional<SimilarityMatrix> p_;
    std::map<double, SimilarityMatrix> combined_;
    std::optional<SweepReport> grid_;
    std::size_t test_sessions_ = 0;
};

}  // namespace

int run_stage(Stage stage, const Config& config, std::ostream& log, std::ostream& err) {
    try {
        config.validate();
        Run run(config, log, err);
        run.execute(stage);
        return 0;
    } catch (const ConfigError& e) {
        err << "navmine: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const TooFewSessions& e) {
        err << "navmine: too few sessions: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "navmine: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace navmine::cli
