#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dialogmem/util.hpp"

namespace dialogmem {

// ---- calendar ----------------------------------------------------------

/// Day-granular calendar date. Dialog corpora supply dates at day
/// resolution, so no time zones or clock times are stored.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    /// Accepts YYYY/MM/DD or YYYY-MM-DD. Returns nullopt for anything else
    /// or for invalid calendar dates.
    static std::optional<Date> parse(std::string_view text);

    static Date from_days(std::chrono::sys_days d);
    std::chrono::sys_days to_days() const;

    bool valid() const;
    std::string str() const;  // zero-padded YYYY/MM/DD

    Date plus_days(int n) const;
    Date minus_months(int n) const;  // day-of-month clamped
    int weekday() const;             // 0 = Monday .. 6 = Sunday

    auto operator<=>(const Date&) const = default;
};

// ---- dialog substrate ---------------------------------------------------

enum class Role { user, assistant };

struct Turn {
    Role role = Role::user;
    std::string text;
    int turn_index = 0;
};

struct Session {
    std::string session_id;
    Date date;
    std::vector<Turn> turns;

    /// User turns only, joined by newline. The convention shared by flat
    /// session keys and graph extraction input.
    std::string user_text() const;
    bool has_user_turn() const;
};

struct MemQuery {
    std::string text;
    std::optional<Date> query_date;
};

// ---- embeddings ---------------------------------------------------------

/// Unit-norm embedding. Vectors are normalized once at creation; degenerate
/// inputs are represented by a flagged reserved vector (first basis
/// direction) which indexes exclude from retrieval.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// Normalizes to unit L2 norm. Throws invalid_argument on non-finite
    /// values, zero vectors, or empty input.
    static EmbeddingVector normalized(std::vector<float> values);

    /// The reserved flagged vector for degenerate text.
    static EmbeddingVector reserved_flagged(size_t dimension);

    /// Trusted deserialization; values must already be unit-norm.
    static EmbeddingVector from_raw(std::vector<float> values, bool flagged);

    const std::vector<float>& values() const { return values_; }
    size_t dimension() const { return values_.size(); }
    bool flagged() const { return flagged_; }

    /// Equals cosine similarity since both operands are unit vectors.
    double dot(const EmbeddingVector& other) const;

    bool operator==(const EmbeddingVector& other) const {
        return flagged_ == other.flagged_ && values_ == other.values_;
    }

private:
    std::vector<float> values_;
    bool flagged_ = false;
};

// ---- memory units -------------------------------------------------------

enum class KeyKind {
    session_text,
    summary,
    fact,
    keyword,
    merged_type_group,
    merged_all,
    entity_description,
    triple_text,
};

const char* to_string(KeyKind kind);
std::optional<KeyKind> key_kind_from_string(std::string_view s);

struct KeyUnit {
    std::string key_id;
    KeyKind kind = KeyKind::fact;
    std::string text;
    EmbeddingVector embedding;
    std::vector<std::string> provenance_session_ids;  // never empty
    uint64_t created_at = 0;  // per-index monotone counter
};

enum class ValueKind { session, key };

const char* to_string(ValueKind kind);
std::optional<ValueKind> value_kind_from_string(std::string_view s);

struct ValueRef {
    std::string value_id;
    ValueKind kind = ValueKind::session;
    std::string payload;  // session_id or key_id
};

// ---- pipeline configuration ---------------------------------------------

enum class KeyStrategy {
    session_only,
    separate_sfk,
    merge_by_type,
    merge_all,
    session_plus_merged,
    graph_entities,
};

enum class IndexKind { flat, graph };
enum class MemOp { add, update, noop, del };
enum class GraphSchema { sim, know, desc };
enum class ActivationMode { entity, triple };
enum class ExpansionMode { none, one_hop };
enum class RerankMode { score_s, score_e, score_e_g };

const char* to_string(KeyStrategy v);
const char* to_string(IndexKind v);
const char* to_string(MemOp v);
const char* to_string(GraphSchema v);
const char* to_string(ActivationMode v);
const char* to_string(ExpansionMode v);
const char* to_string(RerankMode v);

std::optional<KeyStrategy> key_strategy_from_string(std::string_view s);
std::optional<IndexKind> index_kind_from_string(std::string_view s);
std::optional<MemOp> mem_op_from_string(std::string_view s);
std::optional<GraphSchema> graph_schema_from_string(std::string_view s);
std::optional<ActivationMode> activation_mode_from_string(std::string_view s);
std::optional<ExpansionMode> expansion_mode_from_string(std::string_view s);
std::optional<RerankMode> rerank_mode_from_string(std::string_view s);

/// One point in the memory-system design space. Every comparison the engine
/// supports is a distinct PipelineConfig; nothing else is configured.
struct PipelineConfig {
    KeyStrategy key_strategy = KeyStrategy::merge_all;
    ValueKind value_kind = ValueKind::session;
    IndexKind index_kind = IndexKind::flat;
    std::set<MemOp> op_set = {MemOp::add};
    GraphSchema graph_schema = GraphSchema::desc;
    ActivationMode activation = ActivationMode::entity;
    ExpansionMode expansion = ExpansionMode::none;
    RerankMode rerank = RerankMode::score_e_g;
    int k_keys = 20;
    int n_values = 5;
    int expansion_budget = 50;
    bool prejudge_enabled = false;

    /// Set by the config parser when the source document mentioned any
    /// graph-specific field; drives the flat-index warning only.
    bool graph_fields_specified = false;

    bool operator==(const PipelineConfig& other) const;
};

struct ValidationResult {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool ok() const { return violations.empty(); }
};

/// Checks every PipelineConfig invariant. Violations are data, not errors.
ValidationResult validate_config(const PipelineConfig& config);

std::string pipeline_config_to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const std::string& json_text);

// ---- session identity ---------------------------------------------------

/// Stateless form: corpus-prefixed id for a raw id known to be unique.
/// Throws invalid_argument on empty raw ids.
std::string canonical_session_id(const std::string& corpus_name, const std::string& raw_id);

/// Stateful canonicalizer for whole corpora. Repeated raw ids get a stable
/// content-hash suffix so every issued id is unique.
class SessionIdCanonicalizer {
public:
    explicit SessionIdCanonicalizer(std::string corpus_name);

    std::string canonical(const std::string& raw_id, std::string_view content);

private:
    std::string corpus_;
    std::unordered_set<std::string> seen_raw_;
    std::unordered_set<std::string> issued_;
};

}  // namespace dialogmem
