#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "audit/common.hpp"

namespace audit {

struct CulturalLevel {
    std::string id;     // snake_case slug, stable across runs
    std::string label;  // display phrasing used in prompts and reports
};

struct CulturalVariable {
    std::string name;
    std::string label;
    std::string axis_note;
    std::vector<CulturalLevel> levels;  // fixed declared order (ordinal coding)

    int level_index(std::string_view level_id) const;
};

/// The cultural-variable schema. Canonical variable order is the file order;
/// configuration ids are mixed-radix over that order with the last variable
/// varying fastest, so ids are reproducible across runs and platforms.
class CulturalSchema {
public:
    static CulturalSchema default_schema();
    static CulturalSchema load(const std::filesystem::path& path);
    static CulturalSchema from_json_text(const std::string& text);

    const std::vector<CulturalVariable>& variables() const { return variables_; }
    size_t variable_count() const { return variables_.size(); }
    int variable_index(std::string_view name) const;

    uint64_t configuration_count() const;
    size_t total_level_count() const;

    // Compact item ids: cumulative level offset, 0..total_level_count()-1.
    int item_id(int var_idx, int level_idx) const;
    std::pair<int, int> item_components(int item_id) const;
    std::string item_string(int item_id) const;  // "variable=level"

    std::string hash() const;           // content key of canonical serialization
    std::string to_json_text() const;

private:
    void validate() const;
    void build_offsets();

    std::string name_;
    std::vector<CulturalVariable> variables_;
    std::vector<int> level_offsets_;
};

struct CulturalConfiguration {
    uint64_t config_id = 0;
    std::vector<int> level_indices;  // one per schema variable, canonical order

    int level_of(int var_idx) const { return level_indices.at(static_cast<size_t>(var_idx)); }
};

uint64_t encode_configuration(const CulturalSchema& schema, const std::vector<int>& level_indices);
CulturalConfiguration decode_configuration(const CulturalSchema& schema, uint64_t config_id);

// Build from (variable name -> level id) pairs; every variable must be assigned.
CulturalConfiguration make_configuration(const CulturalSchema& schema,
                                         const std::vector<std::pair<std::string, std::string>>& assignments);

/// Yields every configuration exactly once in ascending config_id order.
void enumerate_configurations(const CulturalSchema& schema,
                              const std::function<void(const CulturalConfiguration&)>& fn);

}  // namespace audit
