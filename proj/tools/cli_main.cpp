// Operator entry point. Talks to the engine exclusively through the C API.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "dialogmem.h"

namespace {

int exit_code_of(dm_status status) {
    switch (status) {
        case DM_OK: return 0;
        case DM_ERR_BACKEND: return 3;
        default: return 2;  // input/config/io/format errors
    }
}

int finish(dm_status status, char* payload, bool quiet = false) {
    if (status == DM_OK) {
        if (payload && !quiet) std::fputs(payload, stdout);
        dm_string_free(payload);
        return 0;
    }
    std::fprintf(stderr, "error: %s\n", dm_last_error());
    dm_string_free(payload);
    return exit_code_of(status);
}

struct IndexHandle {
    dm_index* index = nullptr;
    ~IndexHandle() { dm_index_close(index); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dialogmem: configurable long-term dialog memory engine"};
    app.require_subcommand(1);

    // build
    auto* build = app.add_subcommand("build", "ingest a corpus and build an index");
    std::string corpus, config, out, cache;
    int max_parallel = 16;
    bool quiet = false;
    build->add_option("--corpus", corpus, "corpus/benchmark document")->required();
    build->add_option("--config", config, "pipeline config file")->required();
    build->add_option("--out", out, "output index directory")->required();
    build->add_option("--cache", cache, "response cache directory");
    build->add_option("--max-parallel", max_parallel, "max in-flight backend calls");
    build->add_flag("--quiet", quiet, "suppress the manifest dump");

    // retrieve
    auto* retrieve = app.add_subcommand("retrieve", "query an index");
    std::string r_index, r_query, r_cache;
    int r_k = 0, r_n = 0;
    bool r_trace = false;
    retrieve->add_option("--index", r_index, "index directory")->required();
    retrieve->add_option("--query", r_query, "query text")->required();
    retrieve->add_option("--k", r_k, "keys to activate (default: config)");
    retrieve->add_option("--n", r_n, "values to return (default: config)");
    retrieve->add_flag("--trace", r_trace, "include the retrieval trace");
    retrieve->add_option("--cache", r_cache, "response cache directory");

    // eval
    auto* eval = app.add_subcommand("eval", "run retrieval/QA evaluation");
    std::string e_index, e_questions, e_judge = "none", e_report, e_cache;
    eval->add_option("--index", e_index, "index directory")->required();
    eval->add_option("--questions", e_questions, "questions document")->required();
    eval->add_option("--judge", e_judge, "answer judge: none | containment | remote")
        ->check(CLI::IsMember({"none", "containment", "remote"}));
    eval->add_option("--report-dir", e_report, "write report.json and table.tsv here");
    eval->add_option("--cache", e_cache, "response cache directory");

    // stats
    auto* stats = app.add_subcommand("stats", "print index statistics");
    std::string s_index;
    stats->add_option("--index", s_index, "index directory")->required();

    // validate
    auto* validate = app.add_subcommand("validate", "validate a config file");
    std::string v_config;
    validate->add_option("--config", v_config, "pipeline config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (build->parsed()) {
        char* manifest = nullptr;
        dm_status status = dm_build(corpus.c_str(), config.c_str(), out.c_str(),
                                    cache.empty() ? nullptr : cache.c_str(), max_parallel,
                                    &manifest);
        return finish(status, manifest, quiet);
    }

    if (retrieve->parsed()) {
        if (retrieve->count("--k") && r_k <= 0) {
            std::fprintf(stderr, "error: --k must be positive\n");
            return 2;
        }
        if (retrieve->count("--n") && r_n <= 0) {
            std::fprintf(stderr, "error: --n must be positive\n");
            return 2;
        }
        IndexHandle handle;
        dm_status status = dm_index_open_cached(
            r_index.c_str(), r_cache.empty() ? nullptr : r_cache.c_str(), &handle.index);
        if (status != DM_OK) return finish(status, nullptr);
        char* result = nullptr;
        status = dm_retrieve(handle.index, r_query.c_str(), r_k, r_n, r_trace ? 1 : 0, &result);
        return finish(status, result);
    }

    if (eval->parsed()) {
        IndexHandle handle;
        dm_status status = dm_index_open_cached(
            e_index.c_str(), e_cache.empty() ? nullptr : e_cache.c_str(), &handle.index);
        if (status != DM_OK) return finish(status, nullptr);
        char* summary = nullptr;
        status = dm_eval(handle.index, e_questions.c_str(), e_judge.c_str(),
                         e_report.empty() ? nullptr : e_report.c_str(), &summary);
        return finish(status, summary);
    }

    if (stats->parsed()) {
        IndexHandle handle;
        dm_status status = dm_index_open(s_index.c_str(), &handle.index);
        if (status != DM_OK) return finish(status, nullptr);
        char* result = nullptr;
        status = dm_stats(handle.index, &result);
        return finish(status, result);
    }

    if (validate->parsed()) {
        char* report = nullptr;
        dm_status status = dm_config_validate(v_config.c_str(), &report);
        if (report) std::fputs(report, stdout);
        dm_string_free(report);
        if (status != DM_OK) std::fprintf(stderr, "error: %s\n", dm_last_error());
        return exit_code_of(status);
    }
    return 2;
}
