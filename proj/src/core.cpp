#include "dialogmem/core.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace dialogmem {

using ordered_json = nlohmann::ordered_json;

// ---- Date ---------------------------------------------------------------

std::optional<Date> Date::parse(std::string_view text) {
    int y = 0, m = 0, d = 0;
    char sep1 = 0, sep2 = 0;
    std::string buf(text);
    if (std::sscanf(buf.c_str(), "%d%c%d%c%d", &y, &sep1, &m, &sep2, &d) != 5) {
        return std::nullopt;
    }
    bool slashes = sep1 == '/' && sep2 == '/';
    bool dashes = sep1 == '-' && sep2 == '-';
    if (!slashes && !dashes) return std::nullopt;
    Date date{y, m, d};
    if (!date.valid()) return std::nullopt;
    return date;
}

Date Date::from_days(std::chrono::sys_days d) {
    std::chrono::year_month_day ymd{d};
    return Date{int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day()))};
}

std::chrono::sys_days Date::to_days() const {
    return std::chrono::sys_days(std::chrono::year{year} / month / day);
}

bool Date::valid() const {
    if (year < 1 || year > 9999) return false;
    return (std::chrono::year{year} / month / day).ok();
}

std::string Date::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d/%02d/%02d", year, month, day);
    return buf;
}

Date Date::plus_days(int n) const {
    return from_days(to_days() + std::chrono::days{n});
}

Date Date::minus_months(int n) const {
    std::chrono::year_month_day ymd{std::chrono::year{year} / month / day};
    std::chrono::year_month ym{ymd.year(), ymd.month()};
    ym -= std::chrono::months{n};
    unsigned last = unsigned((ym / std::chrono::last).day());
    unsigned d = std::min(unsigned(day), last);
    return Date{int(ym.year()), int(unsigned(ym.month())), int(d)};
}

int Date::weekday() const {
    std::chrono::weekday wd{to_days()};
    // iso_encoding: Monday=1..Sunday=7
    return int(wd.iso_encoding()) - 1;
}

// ---- Session -------------------------------------------------------------

std::string Session::user_text() const {
    std::vector<std::string> parts;
    for (const auto& turn : turns) {
        if (turn.role == Role::user && !normalize_whitespace(turn.text).empty()) {
            parts.push_back(turn.text);
        }
    }
    return join(parts, "\n");
}

bool Session::has_user_turn() const {
    for (const auto& turn : turns) {
        if (turn.role == Role::user) return true;
    }
    return false;
}

// ---- EmbeddingVector -------------------------------------------------------

EmbeddingVector EmbeddingVector::normalized(std::vector<float> values) {
    if (values.empty()) {
        throw Error(ErrorCode::invalid_argument, "embedding: empty vector");
    }
    double norm_sq = 0.0;
    for (float v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::invalid_argument, "embedding: non-finite component");
        }
        norm_sq += double(v) * double(v);
    }
    if (norm_sq == 0.0) {
        throw Error(ErrorCode::invalid_argument, "embedding: zero vector cannot be normalized");
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (float& v : values) v = static_cast<float>(double(v) * inv);
    EmbeddingVector out;
    out.values_ = std::move(values);
    return out;
}

EmbeddingVector EmbeddingVector::reserved_flagged(size_t dimension) {
    EmbeddingVector out;
    out.values_.assign(dimension, 0.0f);
    if (dimension > 0) out.values_[0] = 1.0f;
    out.flagged_ = true;
    return out;
}

EmbeddingVector EmbeddingVector::from_raw(std::vector<float> values, bool flagged) {
    EmbeddingVector out;
    out.values_ = std::move(values);
    out.flagged_ = flagged;
    return out;
}

double EmbeddingVector::dot(const EmbeddingVector& other) const {
    if (dimension() != other.dimension()) {
        throw Error(ErrorCode::invalid_argument, "embedding: dimension mismatch");
    }
    double acc = 0.0;
    for (size_t i = 0; i < values_.size(); ++i) {
        acc += double(values_[i]) * double(other.values_[i]);
    }
    return acc;
}

// ---- enum strings ----------------------------------------------------------

const char* to_string(KeyKind kind) {
    switch (kind) {
        case KeyKind::session_text: return "session_text";
        case KeyKind::summary: return "summary";
        case KeyKind::fact: return "fact";
        case KeyKind::keyword: return "keyword";
        case KeyKind::merged_type_group: return "merged_type_group";
        case KeyKind::merged_all: return "merged_all";
        case KeyKind::entity_description: return "entity_description";
        case KeyKind::triple_text: return "triple_text";
    }
    return "fact";
}

std::optional<KeyKind> key_kind_from_string(std::string_view s) {
    for (auto kind : {KeyKind::session_text, KeyKind::summary, KeyKind::fact, KeyKind::keyword,
                      KeyKind::merged_type_group, KeyKind::merged_all,
                      KeyKind::entity_description, KeyKind::triple_text}) {
        if (s == to_string(kind)) return kind;
    }
    return std::nullopt;
}

const char* to_string(ValueKind kind) {
    return kind == ValueKind::session ? "session" : "key";
}

std::optional<ValueKind> value_kind_from_string(std::string_view s) {
    if (s == "session") return ValueKind::session;
    if (s == "key") return ValueKind::key;
    return std::nullopt;
}

const char* to_string(KeyStrategy v) {
    switch (v) {
        case KeyStrategy::session_only: return "session_only";
        case KeyStrategy::separate_sfk: return "separate_sfk";
        case KeyStrategy::merge_by_type: return "merge_by_type";
        case KeyStrategy::merge_all: return "merge_all";
        case KeyStrategy::session_plus_merged: return "session_plus_merged";
        case KeyStrategy::graph_entities: return "graph_entities";
    }
    return "merge_all";
}

std::optional<KeyStrategy> key_strategy_from_string(std::string_view s) {
    for (auto v : {KeyStrategy::session_only, KeyStrategy::separate_sfk, KeyStrategy::merge_by_type,
                   KeyStrategy::merge_all, KeyStrategy::session_plus_merged,
                   KeyStrategy::graph_entities}) {
        if (s == to_string(v)) return v;
    }
    return std::nullopt;
}

const char* to_string(IndexKind v) { return v == IndexKind::flat ? "flat" : "graph"; }

std::optional<IndexKind> index_kind_from_string(std::string_view s) {
    if (s == "flat") return IndexKind::flat;
    if (s == "graph") return IndexKind::graph;
    return std::nullopt;
}

const char* to_string(MemOp v) {
    switch (v) {
        case MemOp::add: return "add";
        case MemOp::update: return "update";
        case MemOp::noop: return "noop";
        case MemOp::del: return "delete";
    }
    return "add";
}

std::optional<MemOp> mem_op_from_string(std::string_view s) {
    if (s == "add") return MemOp::add;
    if (s == "update") return MemOp::update;
    if (s == "noop") return MemOp::noop;
    if (s == "delete") return MemOp::del;
    return std::nullopt;
}

const char* to_string(GraphSchema v) {
    switch (v) {
        case GraphSchema::sim: return "sim";
        case GraphSchema::know: return "know";
        case GraphSchema::desc: return "desc";
    }
    return "desc";
}

std::optional<GraphSchema> graph_schema_from_string(std::string_view s) {
    if (s == "sim") return GraphSchema::sim;
    if (s == "know") return GraphSchema::know;
    if (s == "desc") return GraphSchema::desc;
    return std::nullopt;
}

const char* to_string(ActivationMode v) { return v == ActivationMode::entity ? "entity" : "triple"; }

std::optional<ActivationMode> activation_mode_from_string(std::string_view s) {
    if (s == "entity") return ActivationMode::entity;
    if (s == "triple") return ActivationMode::triple;
    return std::nullopt;
}

const char* to_string(ExpansionMode v) { return v == ExpansionMode::none ? "none" : "one_hop"; }

std::optional<ExpansionMode> expansion_mode_from_string(std::string_view s) {
    if (s == "none") return ExpansionMode::none;
    if (s == "one_hop") return ExpansionMode::one_hop;
    return std::nullopt;
}

const char* to_string(RerankMode v) {
    switch (v) {
        case RerankMode::score_s: return "score_s";
        case RerankMode::score_e: return "score_e";
        case RerankMode::score_e_g: return "score_e_g";
    }
    return "score_e_g";
}

std::optional<RerankMode> rerank_mode_from_string(std::string_view s) {
    if (s == "score_s") return RerankMode::score_s;
    if (s == "score_e") return RerankMode::score_e;
    if (s == "score_e_g") return RerankMode::score_e_g;
    return std::nullopt;
}

// ---- PipelineConfig ----------------------------------------------------------

bool PipelineConfig::operator==(const PipelineConfig& other) const {
    return key_strategy == other.key_strategy && value_kind == other.value_kind &&
           index_kind == other.index_kind && op_set == other.op_set &&
           graph_schema == other.graph_schema && activation == other.activation &&
           expansion == other.expansion && rerank == other.rerank && k_keys == other.k_keys &&
           n_values == other.n_values && expansion_budget == other.expansion_budget &&
           prejudge_enabled == other.prejudge_enabled;
}

ValidationResult validate_config(const PipelineConfig& config) {
    ValidationResult result;
    if (config.k_keys <= 0) result.violations.push_back("k_keys must be positive");
    if (config.n_values <= 0) result.violations.push_back("n_values must be positive");
    if (config.k_keys > 0 && config.n_values > 0 && config.k_keys < config.n_values) {
        result.violations.push_back("k_keys < n_values");
    }
    if (config.expansion_budget < 0) {
        result.violations.push_back("expansion_budget must be non-negative");
    }
    if (config.op_set.empty()) {
        result.violations.push_back("op_set is empty");
    } else if (!config.op_set.count(MemOp::add)) {
        result.warnings.push_back("add absent from op_set: restricted update/noop ablation mode");
    }
    if (config.index_kind == IndexKind::flat && config.graph_fields_specified) {
        result.warnings.push_back("graph settings are ignored when index_kind is flat");
    }
    if (config.index_kind == IndexKind::graph &&
        config.key_strategy != KeyStrategy::graph_entities) {
        result.warnings.push_back("key_strategy has no effect when index_kind is graph");
    }
    return result;
}

std::string pipeline_config_to_json(const PipelineConfig& config) {
    ordered_json j;
    j["key_strategy"] = to_string(config.key_strategy);
    j["value_kind"] = to_string(config.value_kind);
    j["index_kind"] = to_string(config.index_kind);
    ordered_json ops = ordered_json::array();
    for (auto op : config.op_set) ops.push_back(to_string(op));
    j["op_set"] = ops;
    j["graph_schema"] = to_string(config.graph_schema);
    j["activation"] = to_string(config.activation);
    j["expansion"] = to_string(config.expansion);
    j["rerank"] = to_string(config.rerank);
    j["k_keys"] = config.k_keys;
    j["n_values"] = config.n_values;
    j["expansion_budget"] = config.expansion_budget;
    j["prejudge_enabled"] = config.prejudge_enabled;
    return j.dump(2);
}

namespace {

template <typename Parser>
auto parse_enum_field(const ordered_json& j, const char* field, Parser parser,
                      decltype(parser(std::string_view{})) fallback) {
    if (!j.contains(field)) return fallback;
    auto text = j.at(field).template get<std::string>();
    auto parsed = parser(text);
    if (!parsed) {
        throw Error(ErrorCode::config,
                    std::string("config: unknown value '") + text + "' for field " + field);
    }
    return parsed;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::config, std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::config, "config: top-level value must be an object");

    PipelineConfig config;
    config.key_strategy = *parse_enum_field(j, "key_strategy", key_strategy_from_string,
                                            std::optional<KeyStrategy>(config.key_strategy));
    config.value_kind = *parse_enum_field(j, "value_kind", value_kind_from_string,
                                          std::optional<ValueKind>(config.value_kind));
    config.index_kind = *parse_enum_field(j, "index_kind", index_kind_from_string,
                                          std::optional<IndexKind>(config.index_kind));
    if (j.contains("op_set")) {
        config.op_set.clear();
        for (const auto& item : j.at("op_set")) {
            auto op = mem_op_from_string(item.get<std::string>());
            if (!op) {
                throw Error(ErrorCode::config,
                            "config: unknown op '" + item.get<std::string>() + "'");
            }
            config.op_set.insert(*op);
        }
    }
    config.graph_schema = *parse_enum_field(j, "graph_schema", graph_schema_from_string,
                                            std::optional<GraphSchema>(config.graph_schema));
    config.activation = *parse_enum_field(j, "activation", activation_mode_from_string,
                                          std::optional<ActivationMode>(config.activation));
    config.expansion = *parse_enum_field(j, "expansion", expansion_mode_from_string,
                                         std::optional<ExpansionMode>(config.expansion));
    config.rerank = *parse_enum_field(j, "rerank", rerank_mode_from_string,
                                      std::optional<RerankMode>(config.rerank));
    if (j.contains("k_keys")) config.k_keys = j.at("k_keys").get<int>();
    if (j.contains("n_values")) config.n_values = j.at("n_values").get<int>();
    if (j.contains("expansion_budget")) config.expansion_budget = j.at("expansion_budget").get<int>();
    if (j.contains("prejudge_enabled")) config.prejudge_enabled = j.at("prejudge_enabled").get<bool>();

    config.graph_fields_specified = j.contains("graph_schema") || j.contains("activation") ||
                                    j.contains("expansion") || j.contains("expansion_budget");
    return config;
}

// ---- session identity ---------------------------------------------------------

std::string canonical_session_id(const std::string& corpus_name, const std::string& raw_id) {
    if (raw_id.empty()) {
        throw Error(ErrorCode::invalid_argument, "canonical_session_id: empty raw id");
    }
    return corpus_name + "/" + raw_id;
}

SessionIdCanonicalizer::SessionIdCanonicalizer(std::string corpus_name)
    : corpus_(std::move(corpus_name)) {}

std::string SessionIdCanonicalizer::canonical(const std::string& raw_id,
                                              std::string_view content) {
    std::string base = canonical_session_id(corpus_, raw_id);
    if (!seen_raw_.count(raw_id) && !issued_.count(base)) {
        seen_raw_.insert(raw_id);
        issued_.insert(base);
        return base;
    }
    std::string candidate = base + "@" + content_hash(content).substr(0, 8);
    int bump = 2;
    while (issued_.count(candidate)) {
        candidate = base + "@" + content_hash(content).substr(0, 8) + "-" + std::to_string(bump);
        ++bump;
    }
    issued_.insert(candidate);
    return candidate;
}

}  // namespace dialogmem
