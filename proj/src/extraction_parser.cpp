#include "dialogmem/extraction_parser.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace dialogmem {

namespace {

std::vector<std::string> split_on(std::string_view text, std::string_view delim) {
    std::vector<std::string> parts;
    size_t pos = 0;
    while (true) {
        size_t hit = text.find(delim, pos);
        if (hit == std::string_view::npos) {
            parts.emplace_back(text.substr(pos));
            break;
        }
        parts.emplace_back(text.substr(pos, hit - pos));
        pos = hit + delim.size();
    }
    return parts;
}

std::string strip_quotes(std::string field) {
    field = normalize_whitespace(field);
    if (field.size() >= 2 && ((field.front() == '"' && field.back() == '"') ||
                              (field.front() == '\'' && field.back() == '\''))) {
        field = field.substr(1, field.size() - 2);
        field = normalize_whitespace(field);
    }
    return field;
}

std::optional<int> parse_int(const std::string& text) {
    if (text.empty()) return std::nullopt;
    size_t i = text[0] == '-' ? 1 : 0;
    if (i >= text.size()) return std::nullopt;
    for (; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
    }
    try {
        return std::stoi(text);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

std::string canonical_entity_name(std::string_view name) {
    return to_upper(normalize_whitespace(name));
}

const std::vector<std::string>& entity_type_vocabulary() {
    static const std::vector<std::string> kVocabulary = {
        "User",   "Person",       "Object",    "Resource",       "Event",
        "Goal/Intention", "Time", "Statistic", "Duration",       "Place",
        "Organization",   "Interest/Skill",    "Sentiment",      "Health",
        "Behavior",       "Other",
    };
    return kVocabulary;
}

std::string canonical_entity_type(std::string_view etype, bool* known) {
    std::string needle = to_lower(normalize_whitespace(etype));
    for (const auto& entry : entity_type_vocabulary()) {
        if (to_lower(entry) == needle) {
            if (known) *known = true;
            return entry;
        }
    }
    if (known) *known = false;
    return "Other";
}

ParseReport parse_extraction(const std::string& raw) {
    ParseReport report;

    std::string body = raw;
    size_t marker = body.find(kCompleteMarker);
    if (marker != std::string::npos) {
        report.complete_marker_seen = true;
        body = body.substr(0, marker);
    }

    std::unordered_set<std::string> declared;
    int record_number = 0;
    for (const auto& segment : split_on(body, kRecordDelimiter)) {
        std::string trimmed = normalize_whitespace(segment);
        if (trimmed.empty()) continue;
        ++record_number;
        auto warn = [&](const std::string& what) {
            report.warnings.push_back("record " + std::to_string(record_number) + ": " + what);
        };

        size_t open = trimmed.find('(');
        size_t close = trimmed.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close <= open) {
            warn("not parenthesized, skipped");
            continue;
        }
        std::string inner = trimmed.substr(open + 1, close - open - 1);
        auto fields = split_on(inner, kFieldDelimiter);
        if (fields.empty()) {
            warn("empty record, skipped");
            continue;
        }
        std::string tag = to_lower(strip_quotes(fields[0]));

        if (tag == "entity") {
            if (fields.size() != 4) {
                warn("has " + std::to_string(fields.size()) + " fields, expected 4");
                continue;
            }
            RawEntity entity;
            entity.name = canonical_entity_name(strip_quotes(fields[1]));
            if (entity.name.empty()) {
                warn("entity with empty name, skipped");
                continue;
            }
            bool known = false;
            std::string requested = strip_quotes(fields[2]);
            entity.etype = canonical_entity_type(requested, &known);
            if (!known) warn("unknown entity type '" + requested + "' mapped to Other");
            entity.description = strip_quotes(fields[3]);
            if (entity.etype == "Time" && !Date::parse(entity.name)) {
                entity.time_unresolved = true;
                warn("time entity '" + entity.name + "' is not YYYY/MM/DD, flagged unresolved");
            }
            declared.insert(entity.name);
            report.entities.push_back(std::move(entity));
        } else if (tag == "relationship" || tag == "relation") {
            if (fields.size() < 5) {
                warn("has " + std::to_string(fields.size()) + " fields, expected at least 5");
                continue;
            }
            RawRelation relation;
            relation.source = canonical_entity_name(strip_quotes(fields[1]));
            relation.target = canonical_entity_name(strip_quotes(fields[2]));
            if (relation.source.empty() || relation.target.empty()) {
                warn("relation with empty endpoint, skipped");
                continue;
            }
            // Description may itself contain the field delimiter; the last
            // field is the strength, everything between is rejoined.
            std::vector<std::string> middle(fields.begin() + 3, fields.end() - 1);
            if (middle.size() > 1) warn("relation description contains field delimiter, rejoined");
            for (auto& part : middle) part = strip_quotes(part);
            relation.description = join(middle, kFieldDelimiter);
            auto strength = parse_int(strip_quotes(fields.back()));
            if (!strength) {
                warn("relation strength '" + strip_quotes(fields.back()) +
                     "' is not an integer, skipped");
                continue;
            }
            if (*strength < 1 || *strength > 10) {
                warn("relation strength " + std::to_string(*strength) + " clamped to [1,10]");
            }
            relation.strength = std::clamp(*strength, 1, 10);
            report.relations.push_back(std::move(relation));
        } else {
            warn("unknown tag '" + tag + "', skipped");
        }
    }

    // Relations may reference names never declared as entities; recover by
    // synthesizing Other-typed entities so downstream alignment always has
    // both endpoints.
    for (const auto& relation : report.relations) {
        for (const auto* endpoint : {&relation.source, &relation.target}) {
            if (!declared.count(*endpoint)) {
                report.warnings.push_back("relation endpoint '" + *endpoint +
                                          "' was never declared, implicit entity created");
                declared.insert(*endpoint);
                report.entities.push_back(RawEntity{*endpoint, "Other", "", false});
            }
        }
    }
    return report;
}

std::string serialize_extraction(const ParseReport& report) {
    std::string out;
    auto quoted = [](const std::string& text) { return "\"" + text + "\""; };
    for (const auto& entity : report.entities) {
        out += "(" + quoted("entity") + kFieldDelimiter + quoted(entity.name) + kFieldDelimiter +
               quoted(entity.etype) + kFieldDelimiter + quoted(entity.description) + ")";
        out += kRecordDelimiter;
    }
    for (const auto& relation : report.relations) {
        out += "(" + quoted("relationship") + kFieldDelimiter + quoted(relation.source) +
               kFieldDelimiter + quoted(relation.target) + kFieldDelimiter +
               quoted(relation.description) + kFieldDelimiter +
               std::to_string(relation.strength) + ")";
        out += kRecordDelimiter;
    }
    out += kCompleteMarker;
    return out;
}

namespace {

const std::unordered_map<std::string, int>& month_names() {
    static const std::unordered_map<std::string, int> kMonths = {
        {"january", 1}, {"february", 2}, {"march", 3},     {"april", 4},
        {"may", 5},     {"june", 6},     {"july", 7},      {"august", 8},
        {"september", 9}, {"october", 10}, {"november", 11}, {"december", 12},
        {"jan", 1},     {"feb", 2},      {"mar", 3},       {"apr", 4},
        {"jun", 6},     {"jul", 7},      {"aug", 8},       {"sep", 9},
        {"sept", 9},    {"oct", 10},     {"nov", 11},      {"dec", 12},
    };
    return kMonths;
}

std::optional<Date> parse_month_day(const std::string& lower, Date dialogue_time) {
    auto words = split_on(lower, " ");
    // strip empty fragments from double spaces
    std::vector<std::string> parts;
    for (auto& w : words) {
        if (!w.empty()) parts.push_back(w);
    }
    if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
    auto month_it = month_names().find(parts[0]);
    if (month_it == month_names().end()) return std::nullopt;
    int month = month_it->second;

    std::string day_text = parts[1];
    if (!day_text.empty() && day_text.back() == ',') day_text.pop_back();
    for (const char* suffix : {"st", "nd", "rd", "th"}) {
        if (day_text.size() > 2 && day_text.ends_with(suffix)) {
            day_text = day_text.substr(0, day_text.size() - 2);
            break;
        }
    }
    auto day = parse_int(day_text);
    if (!day) return std::nullopt;

    if (parts.size() == 3) {
        auto year = parse_int(parts[2]);
        if (!year) return std::nullopt;
        Date date{*year, month, *day};
        if (!date.valid()) return std::nullopt;
        return date;
    }
    // Nearest such date not after the dialogue date.
    for (int year : {dialogue_time.year, dialogue_time.year - 1}) {
        Date date{year, month, *day};
        if (date.valid() && date <= dialogue_time) return date;
    }
    return std::nullopt;
}

}  // namespace

bool is_month_name(std::string_view lower_word) {
    return month_names().count(std::string(lower_word)) > 0;
}

std::optional<Date> normalize_time(const std::string& raw_phrase, Date dialogue_time) {
    std::string phrase = normalize_whitespace(raw_phrase);
    if (phrase.empty()) return std::nullopt;
    if (auto explicit_date = Date::parse(phrase)) return explicit_date;

    std::string lower = to_lower(phrase);
    if (lower == "today") return dialogue_time;
    if (lower == "yesterday") return dialogue_time.plus_days(-1);
    if (lower == "last week") return dialogue_time.plus_days(-7);
    if (lower == "last month") return dialogue_time.minus_months(1);
    if (lower == "last weekend") {
        // Most recent Saturday strictly before the dialogue date.
        int back = (dialogue_time.weekday() - 5 + 7) % 7;
        if (back == 0) back = 7;
        return dialogue_time.plus_days(-back);
    }
    // "N days ago" / "1 day ago"
    {
        auto tokens = split_on(lower, " ");
        if (tokens.size() == 3 && (tokens[1] == "days" || tokens[1] == "day") &&
            tokens[2] == "ago") {
            if (auto n = parse_int(tokens[0]); n && *n >= 0) {
                return dialogue_time.plus_days(-*n);
            }
        }
    }
    return parse_month_day(lower, dialogue_time);
}

}  // namespace dialogmem
