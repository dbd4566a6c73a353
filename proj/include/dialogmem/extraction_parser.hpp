#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dialogmem/core.hpp"

namespace dialogmem {

// Parser for the delimiter-format extraction output:
//   record = "(" tag "<|>" field { "<|>" field } ")"
//   records are joined by "##", the stream ends with "<|COMPLETE|>".
// Parsing is total: malformed records are skipped with positional warnings
// and arbitrary bytes never abort.

struct RawEntity {
    std::string name;   // uppercased, whitespace-collapsed (the alignment key)
    std::string etype;  // vocabulary member; unknown types map to Other
    std::string description;
    bool time_unresolved = false;  // Time entity whose name is not YYYY/MM/DD
};

struct RawRelation {
    std::string source;  // canonical entity names
    std::string target;
    std::string description;
    int strength = 5;  // clamped to [1,10]
};

struct ParseReport {
    std::vector<RawEntity> entities;
    std::vector<RawRelation> relations;
    std::vector<std::string> warnings;
    bool complete_marker_seen = false;
};

ParseReport parse_extraction(const std::string& raw);

/// Canonical serialization: every field quoted, records joined by "##",
/// terminated by the completion marker. Re-parsing yields an identical
/// report (modulo warnings).
std::string serialize_extraction(const ParseReport& report);

/// Uppercases and collapses whitespace; the entity alignment key.
std::string canonical_entity_name(std::string_view name);

/// Maps a type string onto the fixed vocabulary (case-insensitive).
/// Unknown types return "Other" and set *known to false.
std::string canonical_entity_type(std::string_view etype, bool* known = nullptr);

const std::vector<std::string>& entity_type_vocabulary();

/// Resolves a time phrase against the dialogue date. Explicit dates are
/// reformatted; a fixed table of relative phrases (yesterday, last week,
/// last weekend, last month, N days ago) is resolved by calendar
/// arithmetic; year-less explicit dates take the nearest such date not
/// after dialogue_time. Anything else is unresolved (nullopt).
std::optional<Date> normalize_time(const std::string& raw_phrase, Date dialogue_time);

/// True for English month names and common three-letter abbreviations
/// (lowercase input expected).
bool is_month_name(std::string_view lower_word);

inline const char* kCompleteMarker = "<|COMPLETE|>";
inline const char* kFieldDelimiter = "<|>";
inline const char* kRecordDelimiter = "##";

}  // namespace dialogmem
