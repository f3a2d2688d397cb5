#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audit/cultural_space.hpp"
#include "audit/llm_gateway.hpp"
#include "audit/persona_forge.hpp"

namespace audit {

inline constexpr int kFoundationCount = 6;
extern const std::array<const char*, kFoundationCount> kFoundations;
int foundation_index(std::string_view name);  // -1 if unknown

/// MFQ-2 item assignment: items 1..36, exactly six per foundation.
class MfqItemMap {
public:
    static MfqItemMap load(const std::filesystem::path& csv_path);
    static MfqItemMap bundled_placeholder();  // round-robin assignment

    int foundation_of(int item_index) const;  // 1-based item index
    const std::vector<int>& items_of(int foundation) const;

private:
    void validate() const;
    std::array<int, 36> item_to_foundation_{};
    std::array<std::vector<int>, kFoundationCount> foundation_items_;
};

/// MFQ-2 item texts. The published instrument is user-supplied; the bundled
/// set is a placeholder sufficient for offline mock runs.
class MfqItems {
public:
    static MfqItems load(const std::filesystem::path& path);
    static MfqItems bundled_placeholder();
    const std::array<std::string, 36>& texts() const { return texts_; }

private:
    std::array<std::string, 36> texts_;
};

struct MoralVector {
    uint64_t config_id = 0;
    std::array<double, kFoundationCount> scores{};  // 1..5
    std::string origin;                             // "mfq" or "mft"
};

struct MfqRecord {
    uint64_t config_id = 0;
    std::string status;  // "ok" or "excluded"
    std::array<int, 36> answers{};
    std::optional<MoralVector> vector;
    std::string error;
};

MoralVector score_mfq_answers(uint64_t config_id, const std::array<int, 36>& answers,
                              const MfqItemMap& item_map);

ChatRequest render_mfq_request(const MfqItems& items, const PersonaProfile& persona);

/// JSON answer object keyed "1".."36", each value in 1..5. Malformed output
/// re-asks up to max_format_retries, then the persona is excluded.
MfqRecord elicit_mfq(const PersonaProfile& persona, const MfqItems& items, const MfqItemMap& item_map,
                     LlmGateway& gateway, int max_format_retries = 2);

// --- MFT-inferred representation ---------------------------------------------

/// Externally produced (variable level x foundation) Likert matrix; complete
/// over the schema's levels, integer entries 1..5.
class OracleMatrix {
public:
    static OracleMatrix load(const std::filesystem::path& csv_path, const CulturalSchema& schema);
    static OracleMatrix from_rows(const CulturalSchema& schema,
                                  const std::map<std::pair<std::string, std::string>,
                                                 std::array<int, kFoundationCount>>& rows);

    int entry(int var_idx, int level_idx, int foundation) const;

private:
    size_t index(int var_idx, int level_idx) const;
    const CulturalSchema* schema_ = nullptr;
    std::vector<std::array<int, kFoundationCount>> rows_;  // by schema item id
};

/// Per foundation, the mean of the oracle rows selected by the configuration,
/// over the given variable subset (default: every schema variable).
MoralVector mft_inferred_vector(const CulturalSchema& schema, const CulturalConfiguration& config,
                                const OracleMatrix& matrix, const std::vector<int>& subset_vars);

// --- greedy core-set selection -----------------------------------------------

struct GreedyParams {
    int runs = 50;
    double train_fraction = 0.8;
    double epsilon = 1e-4;  // minimum validation-R^2 gain per accepted step
    uint64_t seed = 0;
};

struct RunSelection {
    std::vector<int> variables;  // selection order
    double final_r2 = 0;
    bool aborted = false;  // degenerate validation SS_tot
};

struct CoreSetResult {
    int foundation = 0;
    std::vector<RunSelection> runs;
    std::vector<int> core_set;  // variables selected in every completed run
    double mean_jaccard = 0;    // mean pairwise Jaccard over completed runs
    std::map<int, int> k_distribution;
    std::map<int, double> variable_support;  // fraction of completed runs
};

/// Forward selection with per-candidate linear correction: each step fits an
/// OLS (prediction -> MFQ score) on the training split and keeps the variable
/// with the largest validation R^2 gain, stopping when the gain falls to
/// epsilon or below.
CoreSetResult greedy_core_set_selection(int foundation, const std::vector<double>& mfq_scores,
                                        const std::vector<CulturalConfiguration>& configs,
                                        const CulturalSchema& schema, const OracleMatrix& matrix,
                                        const GreedyParams& params);

// --- per-value statistics ------------------------------------------------------

struct ValueStats {
    int foundation = 0;
    int variable = 0;
    int level = 0;
    long n = 0;  // zero personas -> null row
    double mean = 0, median = 0, q25 = 0, q75 = 0, p_ge_4 = 0;
};

/// One row per level of `variable`, in declared level order. Quantiles use
/// linear interpolation (type 7).
std::vector<ValueStats> per_value_stats(int foundation, int variable,
                                        const std::vector<double>& mfq_scores,
                                        const std::vector<CulturalConfiguration>& configs,
                                        const CulturalSchema& schema);

double quantile_type7(std::vector<double> sorted_values, double q);

}  // namespace audit
