#include "audit/cultural_space.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

namespace audit {

namespace {

using nlohmann::json;

CulturalVariable make_variable(std::string name, std::string label, std::string axis_note,
                               std::vector<CulturalLevel> levels) {
    CulturalVariable v;
    v.name = std::move(name);
    v.label = std::move(label);
    v.axis_note = std::move(axis_note);
    v.levels = std::move(levels);
    return v;
}

}  // namespace

int CulturalVariable::level_index(std::string_view level_id) const {
    for (size_t i = 0; i < levels.size(); ++i) {
        if (levels[i].id == level_id) return static_cast<int>(i);
    }
    return -1;
}

CulturalSchema CulturalSchema::default_schema() {
    CulturalSchema s;
    s.name_ = "default";
    s.variables_ = {
        make_variable("religiosity", "religiosity",
                      "Traditional (higher) -> Secular (lower)",
                      {{"very_important", "very important"},
                       {"quite_important", "quite important"},
                       {"not_very_important", "not very important"},
                       {"not_at_all_important", "not at all important"}}),
        make_variable("child_rearing_value", "child rearing value",
                      "Traditional (obedience-faith); Secular-Rational / Self-Expression (independence-imagination)",
                      {{"obedience_faith", "obedience faith"},
                       {"independence_imagination", "independence imagination"},
                       {"neutral", "neutral"}}),
        make_variable("moral_acceptability", "moral acceptability",
                      "Traditional (never) -> Secular (always); Survival (never) -> Self-Expression (always)",
                      {{"never_justifiable", "never justifiable"},
                       {"sometimes_justifiable", "sometimes justifiable"},
                       {"always_justifiable", "always justifiable"}}),
        make_variable("social_trust", "social trust",
                      "Survival (cannot trust) -> Self-Expression (trusted)",
                      {{"most_people_trusted", "most people trusted"},
                       {"cannot_trust_people", "cannot trust people"}}),
        make_variable("political_participation", "political participation",
                      "Survival (nonparticipant) -> Self-Expression (active); mixed (passive)",
                      {{"active_participant", "active participant"},
                       {"passive_participant", "passive participant"},
                       {"nonparticipant", "nonparticipant"}}),
        make_variable("national_pride", "national pride",
                      "Traditional (higher) -> Secular (lower)",
                      {{"very_proud", "very proud"},
                       {"somewhat_proud", "somewhat proud"},
                       {"not_very_proud", "not very proud"},
                       {"not_proud_at_all", "not proud at all"}}),
        make_variable("happiness", "happiness",
                      "Survival (lower) -> Self-Expression (higher)",
                      {{"very_happy", "very happy"},
                       {"rather_happy", "rather happy"},
                       {"not_very_happy", "not very happy"},
                       {"not_at_all_happy", "not at all happy"}}),
        make_variable("gender_equality", "gender equality",
                      "Survival / Traditional (traditional) -> Self-Expression / Secular (egalitarian)",
                      {{"egalitarian", "egalitarian"},
                       {"moderate", "moderate"},
                       {"traditional", "traditional"}}),
        make_variable("materialism_orientation", "materialism orientation",
                      "Survival (materialist) -> Self-Expression (postmaterialist)",
                      {{"materialist", "materialist"},
                       {"mixed", "mixed"},
                       {"postmaterialist", "postmaterialist"}}),
        // Also known in prose as "attitude toward outgroups".
        make_variable("tolerance_diversity", "tolerance diversity",
                      "Survival (low) -> Self-Expression (high)",
                      {{"high_tolerance", "high tolerance"},
                       {"moderate_tolerance", "moderate tolerance"},
                       {"low_tolerance", "low tolerance"}}),
    };
    s.validate();
    s.build_offsets();
    return s;
}

CulturalSchema CulturalSchema::load(const std::filesystem::path& path) {
    return from_json_text(read_text_file(path));
}

CulturalSchema CulturalSchema::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed schema file: ") + e.what());
    }
    CulturalSchema s;
    try {
        s.name_ = doc.value("name", "unnamed");
        if (!doc.contains("variables") || !doc["variables"].is_array()) {
            throw ValidationError("schema file missing 'variables' array");
        }
        for (const auto& v : doc["variables"]) {
            CulturalVariable var;
            var.name = v.at("name").get<std::string>();
            var.label = v.value("label", var.name);
            var.axis_note = v.value("axis_note", "");
            for (const auto& l : v.at("levels")) {
                CulturalLevel level;
                if (l.is_string()) {
                    level.id = l.get<std::string>();
                    level.label = level.id;
                } else {
                    level.id = l.at("id").get<std::string>();
                    level.label = l.value("label", level.id);
                }
                var.levels.push_back(std::move(level));
            }
            s.variables_.push_back(std::move(var));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed schema file: ") + e.what());
    }
    s.validate();
    s.build_offsets();
    return s;
}

void CulturalSchema::validate() const {
    if (variables_.empty()) throw ValidationError("schema has no variables");
    std::set<std::string> names;
    for (const auto& v : variables_) {
        if (v.name.empty()) throw ValidationError("variable with empty name");
        if (!names.insert(v.name).second) {
            throw ValidationError("duplicate variable name: " + v.name);
        }
        if (v.levels.empty()) {
            throw ValidationError("variable '" + v.name + "' has no levels");
        }
        std::set<std::string> level_ids;
        for (const auto& l : v.levels) {
            if (l.id.empty()) throw ValidationError("empty level id in variable '" + v.name + "'");
            if (!level_ids.insert(l.id).second) {
                throw ValidationError("duplicate level '" + l.id + "' in variable '" + v.name + "'");
            }
        }
    }
}

void CulturalSchema::build_offsets() {
    level_offsets_.clear();
    int offset = 0;
    for (const auto& v : variables_) {
        level_offsets_.push_back(offset);
        offset += static_cast<int>(v.levels.size());
    }
}

int CulturalSchema::variable_index(std::string_view name) const {
    for (size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

uint64_t CulturalSchema::configuration_count() const {
    uint64_t product = 1;
    for (const auto& v : variables_) product *= v.levels.size();
    return product;
}

size_t CulturalSchema::total_level_count() const {
    size_t total = 0;
    for (const auto& v : variables_) total += v.levels.size();
    return total;
}

int CulturalSchema::item_id(int var_idx, int level_idx) const {
    const auto& var = variables_.at(static_cast<size_t>(var_idx));
    if (level_idx < 0 || level_idx >= static_cast<int>(var.levels.size())) {
        throw ValidationError("level index out of range for variable '" + var.name + "'");
    }
    return level_offsets_[static_cast<size_t>(var_idx)] + level_idx;
}

std::pair<int, int> CulturalSchema::item_components(int item_id) const {
    for (size_t i = variables_.size(); i > 0; --i) {
        int offset = level_offsets_[i - 1];
        if (item_id >= offset) {
            int level = item_id - offset;
            if (level >= static_cast<int>(variables_[i - 1].levels.size())) break;
            return {static_cast<int>(i - 1), level};
        }
    }
    throw ValidationError("item id out of range: " + std::to_string(item_id));
}

std::string CulturalSchema::item_string(int item_id) const {
    auto [var_idx, level_idx] = item_components(item_id);
    const auto& var = variables_[static_cast<size_t>(var_idx)];
    return var.name + "=" + var.levels[static_cast<size_t>(level_idx)].id;
}

std::string CulturalSchema::to_json_text() const {
    json doc;
    doc["name"] = name_;
    doc["variables"] = json::array();
    for (const auto& v : variables_) {
        json jv;
        jv["name"] = v.name;
        jv["label"] = v.label;
        jv["axis_note"] = v.axis_note;
        jv["levels"] = json::array();
        for (const auto& l : v.levels) {
            jv["levels"].push_back({{"id", l.id}, {"label", l.label}});
        }
        doc["variables"].push_back(std::move(jv));
    }
    return doc.dump(2);
}

std::string CulturalSchema::hash() const {
    return content_key(to_json_text());
}

uint64_t encode_configuration(const CulturalSchema& schema, const std::vector<int>& level_indices) {
    const auto& vars = schema.variables();
    if (level_indices.size() != vars.size()) {
        throw ValidationError("configuration does not assign every schema variable");
    }
    uint64_t id = 0;
    for (size_t i = 0; i < vars.size(); ++i) {
        int li = level_indices[i];
        int k = static_cast<int>(vars[i].levels.size());
        if (li < 0 || li >= k) {
            throw ValidationError("unknown level index for variable '" + vars[i].name + "'");
        }
        id = id * static_cast<uint64_t>(k) + static_cast<uint64_t>(li);
    }
    return id;
}

CulturalConfiguration decode_configuration(const CulturalSchema& schema, uint64_t config_id) {
    if (config_id >= schema.configuration_count()) {
        throw ValidationError("config id out of range: " + std::to_string(config_id));
    }
    const auto& vars = schema.variables();
    CulturalConfiguration c;
    c.config_id = config_id;
    c.level_indices.resize(vars.size());
    uint64_t rest = config_id;
    for (size_t i = vars.size(); i > 0; --i) {
        uint64_t k = vars[i - 1].levels.size();
        c.level_indices[i - 1] = static_cast<int>(rest % k);
        rest /= k;
    }
    return c;
}

CulturalConfiguration make_configuration(const CulturalSchema& schema,
                                         const std::vector<std::pair<std::string, std::string>>& assignments) {
    const auto& vars = schema.variables();
    std::vector<int> levels(vars.size(), -1);
    for (const auto& [var_name, level_id] : assignments) {
        int vi = schema.variable_index(var_name);
        if (vi < 0) throw ValidationError("unknown variable: " + var_name);
        if (levels[static_cast<size_t>(vi)] != -1) {
            throw ValidationError("variable assigned twice: " + var_name);
        }
        int li = vars[static_cast<size_t>(vi)].level_index(level_id);
        if (li < 0) throw ValidationError("unknown level '" + level_id + "' for variable '" + var_name + "'");
        levels[static_cast<size_t>(vi)] = li;
    }
    for (size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 0) throw ValidationError("variable not assigned: " + vars[i].name);
    }
    CulturalConfiguration c;
    c.level_indices = std::move(levels);
    c.config_id = encode_configuration(schema, c.level_indices);
    return c;
}

void enumerate_configurations(const CulturalSchema& schema,
                              const std::function<void(const CulturalConfiguration&)>& fn) {
    const auto& vars = schema.variables();
    CulturalConfiguration c;
    c.config_id = 0;
    c.level_indices.assign(vars.size(), 0);
    const uint64_t total = schema.configuration_count();
    for (uint64_t id = 0; id < total; ++id) {
        c.config_id = id;
        fn(c);
        // Odometer increment, last variable fastest.
        for (size_t i = vars.size(); i > 0; --i) {
            size_t idx = i - 1;
            if (++c.level_indices[idx] < static_cast<int>(vars[idx].levels.size())) break;
            c.level_indices[idx] = 0;
        }
    }
}

}  // namespace audit
