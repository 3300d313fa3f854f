#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "pipeline.hpp"

using navmine::cli::Config;
using navmine::cli::Stage;

int main(int argc, char** argv) {
    CLI::App app{"navmine: cluster web pages from access logs by session co-occurrence and directory paths"};
    app.set_config("--config", "", "Read options from a key=value file; command-line flags take precedence");
    app.fallthrough();
    app.require_subcommand(0, 1);

    Config cfg;
    std::vector<std::string> inputs;
    std::string out = cfg.out.string();
    bool no_robot_filter = false;
    bool exclusive_occurrence = false;
    bool no_trailing_dir = false;
    bool distinct_coherence = false;
    bool singleton_clusters = false;
    std::vector<int> status_keep = cfg.rules.status_keep;

    app.add_option("-i,--input", inputs, "Access log file(s), plain or gzip")->required()->check(CLI::ExistingFile);
    app.add_option("--format", cfg.format, "Log line format")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, navmine::LogFormat>{{"common", navmine::LogFormat::common},
                                                      {"extended", navmine::LogFormat::extended}}))
        ->default_str("common");
    app.add_option("--timeout-min", cfg.timeout_minutes, "Session inactivity timeout in minutes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--alpha", cfg.alphas, "Co-occurrence weight(s) for the combined matrix")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--min-freq", cfg.min_freqs, "Edge threshold(s) for clustering")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--seed", cfg.seed, "Seed for the train/test session split")->capture_default_str();
    app.add_option("-o,--out", out, "Output directory")->capture_default_str();
    app.add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_flag("--no-robot-filter", no_robot_filter, "Keep traffic from suspected robots");
    app.add_option("--status-keep", status_keep, "HTTP status codes to keep")->capture_default_str();
    app.add_option("--robot-min-requests", cfg.rules.robots.burst_min_requests,
                   "Page requests needed before the burst rule applies")
        ->capture_default_str();
    app.add_option("--robot-median-gap", cfg.rules.robots.burst_median_gap_seconds,
                   "Median gap in seconds below which a busy host counts as a robot")
        ->capture_default_str();
    app.add_flag("--exclusive-occurrence", exclusive_occurrence,
                 "Divide by exclusive rather than plain page occurrence counts");
    app.add_flag("--no-trailing-dir", no_trailing_dir,
                 "Do not count the last component of a path ending in '/' as a directory");
    app.add_flag("--distinct-coherence", distinct_coherence, "Score coherence over distinct pages, not visits");
    app.add_flag("--singleton-clusters", singleton_clusters, "Let single-page clusters represent sessions");

    std::map<CLI::App*, Stage> stages;
    auto sub = [&](const char* name, const char* help, Stage stage) { stages[app.add_subcommand(name, help)] = stage; };
    sub("parse-stats", "Parse and clean the log; print parse and cleaning counts", Stage::parse_stats);
    sub("sessions", "Reconstruct and persist user sessions", Stage::sessions);
    sub("matrices", "Write co-occurrence, path and combined matrices as CSV", Stage::matrices);
    sub("cluster", "Cluster pages for every alpha/min-freq pair", Stage::cluster);
    sub("evaluate", "Visit coherence on a seeded half split", Stage::evaluate);
    sub("sweep", "Parameter sweep report over the alpha and min-freq grids", Stage::sweep);
    sub("run", "Full pipeline (default)", Stage::all);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (const auto& p : inputs) cfg.inputs.emplace_back(p);
    cfg.out = out;
    cfg.rules.status_keep = status_keep;
    cfg.rules.robots.enabled = !no_robot_filter;
    if (exclusive_occurrence) cfg.occurrence = navmine::OccurrenceMode::exclusive;
    cfg.path.count_trailing_directory = !no_trailing_dir;
    if (distinct_coherence) cfg.coherence.counting = navmine::VisitCounting::distinct_pages;
    cfg.coherence.singletons_are_clusters = singleton_clusters;

    Stage stage = Stage::all;
    for (const auto& [cmd, s] : stages)
        if (cmd->parsed()) stage = s;
    return navmine::cli::run_stage(stage, cfg, std::cout, std::cerr);
}
