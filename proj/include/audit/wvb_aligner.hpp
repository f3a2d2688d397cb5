#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audit/llm_gateway.hpp"
#include "audit/persona_forge.hpp"

namespace audit {

extern const std::array<const char*, 6> kContinents;
extern const std::array<const char*, 2> kResidentialAreas;
extern const std::array<const char*, 4> kEducationLevels;

struct DemographicTriple {
    std::string continent;
    std::string area;
    std::string education;

    auto operator<=>(const DemographicTriple&) const = default;
    std::string label() const { return continent + " | " + area + " | " + education; }
};

// Case-insensitive match against the closed option lists.
std::optional<std::string> match_option(std::string_view value, const char* const* options, size_t n);

struct WvbQuestion {
    std::string id;
    std::string prompt;  // includes the response-scale phrasing
    int k = 0;
    std::vector<std::string> labels;
};

class WvbQuestionBank {
public:
    static WvbQuestionBank load(const std::filesystem::path& path);
    static WvbQuestionBank make(std::vector<WvbQuestion> questions);  // tests / tooling

    const std::vector<WvbQuestion>& questions() const { return questions_; }

private:
    void validate() const;
    std::vector<WvbQuestion> questions_;
};

struct WvbResponse {
    uint64_t config_id = 0;
    std::string status;  // "ok" or "excluded"
    DemographicTriple triple;
    std::vector<int> answers;  // bank order, 1..K per question
    std::string error;
};

/// One conversation per persona: demographics first, then each question as a
/// repeated user message. Invalid outputs re-ask up to max_format_retries,
/// then the persona is excluded.
WvbResponse elicit_wvb(const PersonaProfile& persona, const WvbQuestionBank& bank,
                       LlmGateway& gateway, int max_format_retries = 2);

// --- distributions and EMD --------------------------------------------------

struct CategoricalDistribution {
    std::string question_id;
    int k = 0;
    std::vector<double> masses;

    void validate() const;  // k >= 2, masses sum to 1 within 1e-9
};

CategoricalDistribution distribution_from_answers(const std::string& question_id, int k,
                                                  const std::vector<int>& answers);

using GroupQuestionKey = std::pair<DemographicTriple, std::string>;

std::map<GroupQuestionKey, CategoricalDistribution> build_group_distributions(
    const std::vector<WvbResponse>& responses, const WvbQuestionBank& bank);

/// L1 distance between CDFs over the ordered categories.
double emd_raw(const CategoricalDistribution& p, const CategoricalDistribution& h);
/// Raw EMD divided by K-1, so opposite point masses are exactly 1.
double emd(const CategoricalDistribution& p, const CategoricalDistribution& h);

// --- reference data and the alignment report --------------------------------

/// Human reference distributions, one row per (group, question, category):
/// continent,area,education,question_id,k,mass
class ReferenceTable {
public:
    static ReferenceTable load(const std::filesystem::path& csv_path);

    const CategoricalDistribution* find(const DemographicTriple& triple,
                                        const std::string& question_id) const;
    bool has_group(const DemographicTriple& triple) const;
    size_t group_count() const;

private:
    std::map<GroupQuestionKey, CategoricalDistribution> table_;
};

struct PairEmd {
    DemographicTriple triple;
    std::string question_id;
    double emd_normalized = 0;
    double emd_raw = 0;
};

struct GroupAlignment {
    DemographicTriple triple;
    long persona_count = 0;
    int questions_scored = 0;
    double mean_emd = 0;
    double score = 0;      // 1 - mean EMD
    double pct_below_04 = 0;
    double pct_below_02 = 0;
};

struct AlignmentReport {
    std::vector<GroupAlignment> groups;  // persona count desc, then triple
    std::vector<PairEmd> pairs;
    std::vector<DemographicTriple> unsupported_groups;  // absent from the reference set
    double unweighted_score = 0, weighted_score = 0;
    double unweighted_pct04 = 0, weighted_pct04 = 0;
    double unweighted_pct02 = 0, weighted_pct02 = 0;
};

AlignmentReport alignment_report(
    const std::map<GroupQuestionKey, CategoricalDistribution>& group_distributions,
    const std::map<DemographicTriple, long>& group_counts, const ReferenceTable& reference);

}  // namespace audit
