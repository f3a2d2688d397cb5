#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audit/cultural_space.hpp"
#include "audit/llm_gateway.hpp"

namespace audit {

struct PersonaMetadata {
    std::string name;
    int age = -1;
    std::string gender_label;
    std::string occupation_raw;
    std::string country_region;
};

struct PersonaProfile {
    uint64_t config_id = 0;
    PersonaMetadata metadata;
    std::string bio;
    std::map<std::string, std::string> variable_mapping;  // keyed by variable name
    std::string raw_text;
};

struct PersonaRecord {
    uint64_t config_id = 0;
    std::string status;  // "ok" or "failed"
    std::optional<PersonaProfile> profile;
    std::string error;
};

struct PersonaParseOptions {
    int min_age = 15;
    int max_age = 100;
};

std::string render_persona_prompt(const CulturalSchema& schema, const CulturalConfiguration& config);

/// Parses the three persona deliverables out of free-form model text.
/// Section headers may appear in any order and tolerate markdown decoration,
/// but all three deliverables must be present. Throws ValidationError.
PersonaProfile parse_persona_text(const CulturalSchema& schema, uint64_t config_id,
                                  const std::string& text, const PersonaParseOptions& opts = {});

/// Render, call the gateway, parse; on parse failure re-ask with a repair
/// instruction up to max_format_retries times. Failures are recorded in the
/// returned record, never thrown.
PersonaRecord generate_persona(const CulturalSchema& schema, const CulturalConfiguration& config,
                               LlmGateway& gateway, int max_format_retries = 2,
                               const PersonaParseOptions& opts = {});

// --- demographic summary ------------------------------------------------

struct LexicalStats {
    double mean = 0, stddev = 0;
    long min_v = 0, max_v = 0;
};

struct DemographicSummary {
    std::map<std::string, double> gender_shares;
    std::map<std::string, double> age_band_shares;
    std::map<std::string, double> occupation_macro_shares;
    std::map<std::string, double> country_shares;
    LexicalStats chars, words, tokens;
    size_t persona_count = 0;
};

/// Keyword table mapping free-form occupations onto the 20 macro-categories.
/// Total: anything unmatched falls back to "Other / Unclear".
class OccupationMapper {
public:
    static OccupationMapper load(const std::filesystem::path& csv_path);
    static OccupationMapper bundled();

    std::string macro_for(std::string_view raw) const;
    const std::vector<std::string>& macros() const { return macros_; }

private:
    std::vector<std::string> macros_;
    std::vector<std::pair<std::string, size_t>> keywords_;  // lowercase keyword -> macro index
};

std::string normalize_gender(std::string_view raw);
std::string age_band(int age);
std::optional<int> parse_age_text(std::string_view text);

// Fixed sub-word approximation: whitespace words are split into chunks of at
// most four characters, each chunk counting as one token.
long count_tokens(std::string_view text);
long count_words(std::string_view text);

DemographicSummary demographic_summary(const std::vector<PersonaProfile>& personas,
                                       const OccupationMapper& occupations);

}  // namespace audit
