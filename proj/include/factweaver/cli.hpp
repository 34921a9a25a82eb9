#pragma once

// Command-line front end. `run` is what main() calls; it never exits the
// process, so tests can drive it in-process.
//
// Exit codes: 0 success, 1 domain or I/O error, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "factweaver/document.hpp"
#include "factweaver/generator.hpp"
#include "factweaver/service.hpp"

namespace factweaver::cli {

inline constexpr int kOk = 0;
inline constexpr int kDomainError = 1;
inline constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void emit(const std::string& path, const std::string& bytes, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << bytes;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << bytes;
    if (!f) throw IoError("cannot write " + path);
}

/// "d,l,c" -> weights. Sums off by at most 1e-3 are rescaled with a
/// warning; anything further off is a usage error.
inline RewardWeights parse_weights(const std::string& text, std::ostream& err) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto n = parse_number(trim(part));
        if (!n) throw UsageError("--weights expects three numbers like 0.3,0.4,0.3");
        v.push_back(*n);
    }
    if (v.size() != 3) throw UsageError("--weights expects exactly three numbers");
    for (double x : v)
        if (!(x >= 0 && x <= 1)) throw UsageError("--weights entries must lie in [0, 1]");
    const double sum = v[0] + v[1] + v[2];
    if (std::abs(sum - 1.0) > 1e-3) throw UsageError("--weights must sum to 1");
    if (std::abs(sum - 1.0) > 1e-12) {
        err << "warning: weights sum to " << sum << "; rescaling to 1\n";
        for (double& x : v) x /= sum;
    }
    return {v[0], v[1], v[2]};
}

inline DataTable load_table(const std::string& path) { return load_csv(read_file(path)); }

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"factweaver: data stories from tables", "factweaver"};
    app.require_subcommand(1);

    // generate
    std::string gen_csv, gen_out, gen_weights = "0.3333333333333333,0.3333333333333333,0.3333333333333334";
    std::size_t gen_length = 6, gen_fanout = 20, gen_sim = 8;
    double gen_diversity = 0.0;
    std::optional<double> gen_time, gen_bits;
    std::optional<std::size_t> gen_iterations;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("generate", "Generate a story from a CSV file");
    gen->add_option("csv", gen_csv, "Input CSV")->required();
    gen->add_option("--length", gen_length, "Maximum story length")->check(CLI::Range(1, 64));
    gen->add_option("--weights", gen_weights, "Reward weights d,l,c");
    gen->add_option("--chart-diversity", gen_diversity, "Chart diversity in [0, 1]")->check(CLI::Range(0.0, 1.0));
    auto* time_opt = gen->add_option("--time-limit", gen_time, "Time budget in seconds");
    auto* iter_opt = gen->add_option("--iterations", gen_iterations, "Iteration budget");
    time_opt->excludes(iter_opt);
    gen->add_option("--min-bits", gen_bits, "Stop once story entropy reaches this many bits");
    gen->add_option("--seed", gen_seed, "Random seed");
    gen->add_option("--fanout", gen_fanout, "Children per expansion")->check(CLI::Range(1, 1000));
    gen->add_option("--simulation-budget", gen_sim, "Simulation steps per candidate")->check(CLI::Range(1, 1000000));
    gen->add_option("--out", gen_out, "Output story file (default stdout)");

    // facts
    std::string facts_csv, facts_type, facts_out;
    std::size_t facts_top = 10, facts_filters = 1;
    auto* facts = app.add_subcommand("facts", "List the most important facts of one type");
    facts->add_option("csv", facts_csv, "Input CSV")->required();
    facts->add_option("--type", facts_type, "Fact type")->required();
    facts->add_option("--top", facts_top, "How many facts to list")->check(CLI::Range(1, 100000));
    facts->add_option("--max-filters", facts_filters, "Subspace filters to enumerate")->check(CLI::Range(0, 2));
    facts->add_option("--out", facts_out, "Output file (default stdout)");

    // render
    std::string render_story, render_mode = "storyline", render_out, render_data;
    auto* render = app.add_subcommand("render", "Render a story file");
    render->add_option("story", render_story, "Story file")->required();
    render->add_option("--mode", render_mode, "storyline, swiper or factsheet");
    render->add_option("--data", render_data, "CSV the story was built from (default: the path stored in the story)");
    render->add_option("--out", render_out, "Output file (default stdout)");

    // score
    std::string score_csv, score_fact;
    auto* score = app.add_subcommand("score", "Score one fact record");
    score->add_option("csv", score_csv, "Input CSV")->required();
    score->add_option("fact", score_fact, "Fact record file")->required();

    // serve
    std::string serve_host = "127.0.0.1", serve_dir, serve_base;
    int serve_port = 8080;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--port", serve_port, "Port")->check(CLI::Range(1, 65535));
    serve->add_option("--host", serve_host, "Address to bind");
    serve->add_option("--data-dir", serve_dir, "Data directory (default $FACTWEAVER_DATA_DIR)");
    serve->add_option("--public-base", serve_base, "Prefix for share URLs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }

    try {
        if (*gen) {
            GenerationParams p;
            p.goal.max_length = gen_length;
            p.goal.time_budget_seconds = gen_time;
            p.goal.iteration_budget = gen_iterations;
            p.goal.min_information_bits = gen_bits;
            if (!gen_time && !gen_iterations) p.goal.time_budget_seconds = 10.0;
            if (gen_iterations && *gen_iterations == 0) throw UsageError("--iterations must be positive");
            if (gen_time && !(*gen_time > 0)) throw UsageError("--time-limit must be positive");
            p.weights = detail::parse_weights(gen_weights, err);
            p.chart_diversity = gen_diversity;
            p.seed = gen_seed;
            p.fanout = gen_fanout;
            p.simulation_budget = gen_sim;
            const std::string bytes = detail::read_file(gen_csv);
            const DataTable table = load_csv(bytes);
            char id[24];
            std::snprintf(id, sizeof id, "story-%016llx",
                          static_cast<unsigned long long>(mix_seed(gen_seed, fnv1a(bytes))));
            const auto doc = generate_document(table, p, nullptr, id, gen_csv);
            for (const auto& w : doc.story.warnings) err << "warning: " << w << "\n";
            detail::emit(gen_out, to_json(doc).dump(2) + "\n", out);
        } else if (*facts) {
            const auto type = parse_fact_type(facts_type);
            if (!type) throw UsageError("unknown fact type " + facts_type);
            const DataTable table = detail::load_table(facts_csv);
            json list = json::array();
            for (const auto& sf : top_facts(table, *type, facts_top, {}, facts_filters)) {
                json e = {{"fact", to_fact_record(sf.fact)}, {"score", to_json(sf.score)}};
                try {
                    e["caption"] = caption(sf.fact, table);
                } catch (const NarrationError&) {
                }
                list.push_back(std::move(e));
            }
            detail::emit(facts_out, list.dump(2) + "\n", out);
        } else if (*render) {
            const auto mode = parse_render_mode(render_mode);
            if (!mode) throw UsageError("unknown render mode " + render_mode);
            const auto doc = document_from_json(json::parse(detail::read_file(render_story)));
            std::string data = render_data;
            if (data.empty()) {
                data = doc.dataset_id;
                // a relative path is tried as given, then next to the story file
                const auto beside = std::filesystem::path(render_story).parent_path() / data;
                if (!std::filesystem::exists(data) && std::filesystem::exists(beside)) data = beside.string();
            }
            const DataTable table = detail::load_table(data);
            detail::emit(render_out, render_document(doc, table, *mode), out);
        } else if (*score) {
            const DataTable table = detail::load_table(score_csv);
            const DataFact f = from_fact_record(json::parse(detail::read_file(score_fact)), table.schema());
            json r = {{"fact", to_fact_record(f)},
                      {"score", to_json(importance(f, table))},
                      {"derived", to_json(derive_value(f, table))},
                      {"caption", caption(f, table)}};
            out << r.dump(2) << "\n";
        } else if (*serve) {
            if (serve_dir.empty()) {
                const char* env = std::getenv("FACTWEAVER_DATA_DIR");
                serve_dir = env && *env ? env : "factweaver-data";
            }
            service::ServiceConfig config;
            config.data_dir = serve_dir;
            config.public_base = serve_base;
            service::Service svc(std::move(config));
            httplib::Server server;
            svc.install(server);
            err << "listening on " << serve_host << ":" << serve_port << " (data in " << serve_dir << ")\n";
            if (!server.listen(serve_host, serve_port)) throw IoError("cannot listen on port " + std::to_string(serve_port));
        }
        return kOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const SpecError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const json::exception& e) {
        err << "error: bad JSON: " << e.what() << "\n";
        return kDomainError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDomainError;
    }
}

}  // namespace factweaver::cli
