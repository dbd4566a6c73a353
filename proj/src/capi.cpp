#include "dialogmem.h"

#include <cstring>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dialogmem/engine.hpp"

namespace {

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

dm_status status_of(dialogmem::ErrorCode code) {
    using dialogmem::ErrorCode;
    switch (code) {
        case ErrorCode::invalid_argument: return DM_ERR_INVALID_ARGUMENT;
        case ErrorCode::config: return DM_ERR_CONFIG;
        case ErrorCode::io: return DM_ERR_IO;
        case ErrorCode::format: return DM_ERR_FORMAT;
        case ErrorCode::backend: return DM_ERR_BACKEND;
        case ErrorCode::not_found: return DM_ERR_NOT_FOUND;
        case ErrorCode::internal: return DM_ERR_INTERNAL;
    }
    return DM_ERR_INTERNAL;
}

template <typename Fn>
dm_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const dialogmem::Error& e) {
        t_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return DM_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown error";
        return DM_ERR_INTERNAL;
    }
}

dm_status require(bool ok, const char* message) {
    if (ok) return DM_OK;
    t_last_error = message;
    return DM_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct dm_index {
    dialogmem::Engine engine;
};

extern "C" {

const char* dm_version(void) { return "0.1.0"; }

const char* dm_last_error(void) { return t_last_error.c_str(); }

void dm_string_free(char* s) { std::free(s); }

dm_status dm_config_validate(const char* config_path, char** report_json) {
    if (auto bad = require(config_path, "config_path is NULL")) return bad;
    return guarded([&]() -> dm_status {
        auto config = dialogmem::engine_config_from_file(config_path);
        auto result = dialogmem::validate_config(config.pipeline);
        nlohmann::ordered_json j;
        j["ok"] = result.ok();
        j["violations"] = result.violations;
        j["warnings"] = result.warnings;
        if (report_json) *report_json = dup_string(j.dump(2));
        if (!result.ok()) {
            t_last_error = "config violations: " + dialogmem::join(result.violations, "; ");
            return DM_ERR_CONFIG;
        }
        return DM_OK;
    });
}

dm_status dm_build(const char* corpus_path, const char* config_path, const char* out_dir,
                   const char* cache_dir, int max_parallel, char** manifest_json) {
    if (auto bad = require(corpus_path && config_path && out_dir,
                           "corpus_path, config_path, and out_dir are required")) {
        return bad;
    }
    return guarded([&]() -> dm_status {
        auto config = dialogmem::engine_config_from_file(config_path);
        dialogmem::BuildOptions options;
        if (cache_dir) options.cache_dir = cache_dir;
        if (max_parallel > 0) options.max_parallel = max_parallel;
        auto manifest = dialogmem::Engine::build_from_file(corpus_path, config, out_dir, options);
        if (manifest_json) *manifest_json = dup_string(manifest.to_json());
        return DM_OK;
    });
}

dm_status dm_index_open_cached(const char* index_dir, const char* cache_dir, dm_index** out) {
    if (auto bad = require(index_dir && out, "index_dir and out are required")) return bad;
    return guarded([&]() -> dm_status {
        dialogmem::BuildOptions options;
        if (cache_dir) options.cache_dir = cache_dir;
        auto handle = new dm_index{dialogmem::Engine::open(index_dir, options)};
        *out = handle;
        return DM_OK;
    });
}

dm_status dm_index_open(const char* index_dir, dm_index** out) {
    return dm_index_open_cached(index_dir, nullptr, out);
}

void dm_index_close(dm_index* index) { delete index; }

dm_status dm_retrieve(dm_index* index, const char* query_text, int k, int n, int with_trace,
                      char** result_json) {
    if (auto bad = require(index && query_text && result_json,
                           "index, query_text, and result_json are required")) {
        return bad;
    }
    return guarded([&]() -> dm_status {
        dialogmem::Engine::Trace trace;
        auto values = index->engine.retrieve(query_text, k, n, with_trace ? &trace : nullptr);
        nlohmann::ordered_json j;
        nlohmann::ordered_json items = nlohmann::ordered_json::array();
        for (const auto& value : values) {
            nlohmann::ordered_json item;
            item["value_id"] = value.value_id;
            item["kind"] = dialogmem::to_string(value.kind);
            item["score"] = value.score;
            if (value.score_g) item["score_g"] = *value.score_g;
            if (value.score_s) item["score_s"] = *value.score_s;
            items.push_back(std::move(item));
        }
        j["values"] = std::move(items);
        if (with_trace) {
            nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
            for (const auto& [id, score] : trace.seeds) {
                seeds.push_back({{"id", id}, {"score", score}});
            }
            j["trace"] = {{"seeds", std::move(seeds)}, {"expanded", trace.expanded}};
        }
        *result_json = dup_string(j.dump(2));
        return DM_OK;
    });
}

dm_status dm_eval(dm_index* index, const char* questions_path, const char* judge,
                  const char* report_dir, char** summary_json) {
    if (auto bad = require(index && questions_path, "index and questions_path are required")) {
        return bad;
    }
    return guarded([&]() -> dm_status {
        std::string judge_kind = judge ? judge : "none";
        if (judge_kind != "none" && judge_kind != "containment" && judge_kind != "remote") {
            t_last_error = "unknown judge: " + judge_kind;
            return DM_ERR_INVALID_ARGUMENT;
        }
        auto benchmark = dialogmem::load_benchmark(questions_path);

        dialogmem::EvalReport report;
        if (judge_kind == "none") {
            report = index->engine.run_retrieval_eval(benchmark.questions);
        } else if (judge_kind == "containment") {
            dialogmem::ContainmentJudge containment;
            report = index->engine.run_qa_eval(benchmark.questions, &containment);
        } else {
            if (index->engine.config().backend.kind != dialogmem::EmbedderKind::remote) {
                t_last_error = "remote judge requires a remote backend configuration";
                return DM_ERR_CONFIG;
            }
            dialogmem::GatewayJudge remote_judge(index->engine.gateway());
            report = index->engine.run_qa_eval(benchmark.questions, &remote_judge);
        }

        if (report_dir) {
            namespace fs = std::filesystem;
            fs::create_directories(report_dir);
            dialogmem::write_file((fs::path(report_dir) / "report.json").string(),
                                  report.to_json());
            dialogmem::write_file((fs::path(report_dir) / "table.tsv").string(),
                                  report.to_table());
        }
        if (summary_json) {
            nlohmann::ordered_json j;
            j["evaluated_questions"] = report.evaluated_questions;
            j["flagged_questions"] = report.flagged_questions;
            j["recall_at_5"] = report.recall_at_5;
            j["recall_at_10"] = report.recall_at_10;
            j["ndcg_at_5"] = report.ndcg_at_5;
            j["ndcg_at_10"] = report.ndcg_at_10;
            if (report.answer_accuracy) {
                j["answer_accuracy"] = *report.answer_accuracy;
                j["judged_questions"] = report.judged_questions;
                j["unjudged_questions"] = report.unjudged_questions;
            }
            j["retrieval_ms_per_query"] = report.retrieval_ms_per_query;
            j["table"] = report.to_table();
            *summary_json = dup_string(j.dump(2));
        }
        return DM_OK;
    });
}

dm_status dm_stats(dm_index* index, char** stats_json) {
    if (auto bad = require(index && stats_json, "index and stats_json are required")) return bad;
    return guarded([&]() -> dm_status {
        auto stats = index->engine.stats();
        const auto& manifest = index->engine.manifest();
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(stats.to_json());
        j["corpus_fingerprint"] = manifest.corpus_fingerprint;
        j["counters"] = nlohmann::ordered_json::parse(manifest.to_json())["counters"];
        j["extraction_minutes"] = manifest.extraction_minutes;
        j["prejudge_skipped_sessions"] = manifest.prejudge_skipped_sessions;
        double hits = double(manifest.counters.cache_hits);
        double total = hits + double(manifest.counters.cache_misses);
        j["cache_hit_rate"] = total > 0 ? hits / total : 0.0;
        *stats_json = dup_string(j.dump(2));
        return DM_OK;
    });
}

}  // extern "C"
