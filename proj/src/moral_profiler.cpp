#include "audit/moral_profiler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace audit {

using nlohmann::json;

const std::array<const char*, kFoundationCount> kFoundations = {
    "care", "equality", "proportionality", "loyalty", "authority", "purity"};

int foundation_index(std::string_view name) {
    std::string lower = to_lower(name);
    for (int i = 0; i < kFoundationCount; ++i) {
        if (lower == kFoundations[static_cast<size_t>(i)]) return i;
    }
    return -1;
}

MfqItemMap MfqItemMap::bundled_placeholder() {
    MfqItemMap m;
    for (int item = 1; item <= 36; ++item) {
        m.item_to_foundation_[static_cast<size_t>(item - 1)] = (item - 1) % kFoundationCount;
    }
    for (int item = 1; item <= 36; ++item) {
        m.foundation_items_[static_cast<size_t>(m.item_to_foundation_[static_cast<size_t>(item - 1)])]
            .push_back(item);
    }
    m.validate();
    return m;
}

MfqItemMap MfqItemMap::load(const std::filesystem::path& csv_path) {
    MfqItemMap m;
    m.item_to_foundation_.fill(-1);
    auto lines = split_lines(read_text_file(csv_path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto fields = csv_split_line(lines[i]);
        if (i == 0 && to_lower(fields[0]).find("item") != std::string::npos) continue;
        if (fields.size() < 2) throw ValidationError("item map row needs item_index,foundation");
        int item = std::stoi(fields[0]);
        int foundation = foundation_index(fields[1]);
        if (item < 1 || item > 36) throw ValidationError("item index out of 1..36");
        if (foundation < 0) throw ValidationError("unknown foundation: " + fields[1]);
        m.item_to_foundation_[static_cast<size_t>(item - 1)] = foundation;
    }
    for (int item = 1; item <= 36; ++item) {
        int f = m.item_to_foundation_[static_cast<size_t>(item - 1)];
        if (f < 0) throw ValidationError("item " + std::to_string(item) + " unassigned");
        m.foundation_items_[static_cast<size_t>(f)].push_back(item);
    }
    m.validate();
    return m;
}

void MfqItemMap::validate() const {
    for (int f = 0; f < kFoundationCount; ++f) {
        if (foundation_items_[static_cast<size_t>(f)].size() != 6) {
            throw ValidationError(std::string("foundation '") + kFoundations[static_cast<size_t>(f)] +
                                  "' must have exactly 6 items");
        }
    }
}

int MfqItemMap::foundation_of(int item_index) const {
    if (item_index < 1 || item_index > 36) throw ValidationError("item index out of 1..36");
    return item_to_foundation_[static_cast<size_t>(item_index - 1)];
}

const std::vector<int>& MfqItemMap::items_of(int foundation) const {
    return foundation_items_.at(static_cast<size_t>(foundation));
}

MfqItems MfqItems::bundled_placeholder() {
    // Placeholder declaratives keyed to the round-robin item map; replace with
    // the licensed MFQ-2 wordings for live elicitation.
    static const std::array<const char*, kFoundationCount> themes = {
        "protecting others from harm",
        "treating every person as an equal",
        "rewarding people in proportion to what they contribute",
        "standing by my family, community, and country",
        "respecting legitimate authority and tradition",
        "keeping body and mind free of degrading influences"};
    MfqItems items;
    for (int i = 1; i <= 36; ++i) {
        int f = (i - 1) % kFoundationCount;
        int variant = (i - 1) / kFoundationCount + 1;
        std::ostringstream text;
        text << "Caring about " << themes[static_cast<size_t>(f)] << " guides my decisions (facet "
             << variant << ").";
        items.texts_[static_cast<size_t>(i - 1)] = text.str();
    }
    return items;
}

MfqItems MfqItems::load(const std::filesystem::path& path) {
    MfqItems items;
    try {
        json doc = json::parse(read_text_file(path));
        const auto& arr = doc.at("items");
        if (arr.size() != 36) throw ValidationError("MFQ item file must list exactly 36 items");
        for (size_t i = 0; i < 36; ++i) items.texts_[i] = arr.at(i).get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed MFQ item file: ") + e.what());
    }
    return items;
}

MoralVector score_mfq_answers(uint64_t config_id, const std::array<int, 36>& answers,
                              const MfqItemMap& item_map) {
    for (int a : answers) {
        if (a < 1 || a > 5) throw ValidationError("MFQ answer outside 1..5");
    }
    MoralVector v;
    v.config_id = config_id;
    v.origin = "mfq";
    for (int f = 0; f < kFoundationCount; ++f) {
        double sum = 0;
        for (int item : item_map.items_of(f)) {
            sum += answers[static_cast<size_t>(item - 1)];
        }
        v.scores[static_cast<size_t>(f)] = sum / 6.0;
    }
    return v;
}

ChatRequest render_mfq_request(const MfqItems& items, const PersonaProfile& persona) {
    ChatRequest req;
    req.system_text = "You are the following person:\n" + persona.raw_text +
                      "\n\nAnswer the following MFQ-2 survey as this person would answer, based on "
                      "their values and worldview. It is very important to respond EXACTLY as "
                      "requested. Be terse.";
    std::ostringstream user;
    user << "You will be given 36 numbered MFQ-2 items. For each item, return a single integer in "
            "{1, 2, 3, 4, 5}. Return ONLY valid JSON in the following format (and nothing else):\n";
    user << "{\"answers\": {\"1\": <int>, ..., \"36\": <int>}}\n\n";
    user << "Items:\n";
    for (size_t i = 0; i < items.texts().size(); ++i) {
        user << (i + 1) << ". " << items.texts()[i] << "\n";
    }
    req.user_turns.push_back(user.str());
    return req;
}

namespace {

std::optional<std::array<int, 36>> parse_mfq_json(const std::string& text, std::string* error) {
    size_t start = text.find('{');
    size_t end = text.rfind('}');
    if (start == std::string::npos || end == std::string::npos || end < start) {
        *error = "no JSON object in response";
        return std::nullopt;
    }
    json doc;
    try {
        doc = json::parse(text.substr(start, end - start + 1));
    } catch (const json::exception& e) {
        *error = std::string("invalid JSON: ") + e.what();
        return std::nullopt;
    }
    if (!doc.contains("answers") || !doc["answers"].is_object()) {
        *error = "missing 'answers' object";
        return std::nullopt;
    }
    const auto& answers = doc["answers"];
    if (answers.size() != 36) {
        *error = "expected 36 answers, got " + std::to_string(answers.size());
        return std::nullopt;
    }
    std::array<int, 36> out{};
    for (int i = 1; i <= 36; ++i) {
        std::string key = std::to_string(i);
        if (!answers.contains(key) || !answers[key].is_number_integer()) {
            *error = "missing or non-integer answer for item " + key;
            return std::nullopt;
        }
        int v = answers[key].get<int>();
        if (v < 1 || v > 5) {
            *error = "item " + key + " answer " + std::to_string(v) + " outside 1..5";
            return std::nullopt;
        }
        out[static_cast<size_t>(i - 1)] = v;
    }
    return out;
}

}  // namespace

MfqRecord elicit_mfq(const PersonaProfile& persona, const MfqItems& items, const MfqItemMap& item_map,
                     LlmGateway& gateway, int max_format_retries) {
    MfqRecord rec;
    rec.config_id = persona.config_id;

    ChatRequest req = render_mfq_request(items, persona);
    std::string error;
    for (int attempt = 0; attempt <= max_format_retries; ++attempt) {
        ChatResponse resp = gateway.complete(req);
        if (auto answers = parse_mfq_json(resp.text, &error)) {
            rec.status = "ok";
            rec.answers = *answers;
            rec.vector = score_mfq_answers(persona.config_id, *answers, item_map);
            return rec;
        }
        req.user_turns.push_back(
            "Your previous response was invalid (" + error +
            "). Return ONLY the JSON object {\"answers\": {\"1\": <int>, ..., \"36\": <int>}} with "
            "every value in {1, 2, 3, 4, 5}.");
    }
    rec.status = "excluded";
    rec.error = error;
    return rec;
}

OracleMatrix OracleMatrix::load(const std::filesystem::path& csv_path, const CulturalSchema& schema) {
    auto lines = split_lines(read_text_file(csv_path));
    std::map<std::pair<std::string, std::string>, std::array<int, kFoundationCount>> rows;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto fields = csv_split_line(lines[i]);
        if (i == 0 && to_lower(fields[0]) == "variable") continue;
        if (fields.size() != 2 + kFoundationCount) {
            throw ValidationError("oracle matrix row " + std::to_string(i + 1) +
                                  " needs variable,level + 6 foundation scores");
        }
        std::array<int, kFoundationCount> scores{};
        for (int f = 0; f < kFoundationCount; ++f) {
            scores[static_cast<size_t>(f)] = std::stoi(fields[static_cast<size_t>(2 + f)]);
        }
        rows[{fields[0], fields[1]}] = scores;
    }
    return from_rows(schema, rows);
}

OracleMatrix OracleMatrix::from_rows(
    const CulturalSchema& schema,
    const std::map<std::pair<std::string, std::string>, std::array<int, kFoundationCount>>& rows) {
    OracleMatrix m;
    m.schema_ = &schema;
    m.rows_.resize(schema.total_level_count());
    for (size_t vi = 0; vi < schema.variable_count(); ++vi) {
        const auto& var = schema.variables()[vi];
        for (size_t li = 0; li < var.levels.size(); ++li) {
            auto it = rows.find({var.name, var.levels[li].id});
            if (it == rows.end()) {
                throw ValidationError("oracle matrix missing row for " + var.name + "=" +
                                      var.levels[li].id);
            }
            for (int score : it->second) {
                if (score < 1 || score > 5) {
                    throw ValidationError("oracle matrix entry outside 1..5 for " + var.name + "=" +
                                          var.levels[li].id);
                }
            }
            m.rows_[static_cast<size_t>(
                schema.item_id(static_cast<int>(vi), static_cast<int>(li)))] = it->second;
        }
    }
    return m;
}

size_t OracleMatrix::index(int var_idx, int level_idx) const {
    return static_cast<size_t>(schema_->item_id(var_idx, level_idx));
}

int OracleMatrix::entry(int var_idx, int level_idx, int foundation) const {
    return rows_.at(index(var_idx, level_idx)).at(static_cast<size_t>(foundation));
}

MoralVector mft_inferred_vector(const CulturalSchema& schema, const CulturalConfiguration& config,
                                const OracleMatrix& matrix, const std::vector<int>& subset_vars) {
    if (subset_vars.empty()) throw ValidationError("variable subset must be nonempty");
    MoralVector v;
    v.config_id = config.config_id;
    v.origin = "mft";
    for (int f = 0; f < kFoundationCount; ++f) {
        double sum = 0;
        for (int var_idx : subset_vars) {
            sum += matrix.entry(var_idx, config.level_of(var_idx), f);
        }
        v.scores[static_cast<size_t>(f)] = sum / static_cast<double>(subset_vars.size());
    }
    return v;
}

namespace {

struct OlsFit {
    double slope = 0;
    double intercept = 0;
};

OlsFit fit_ols(const std::vector<double>& x, const std::vector<double>& y,
               const std::vector<size_t>& idx) {
    double mx = 0, my = 0;
    for (size_t i : idx) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(idx.size());
    my /= static_cast<double>(idx.size());
    double sxx = 0, sxy = 0;
    for (size_t i : idx) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    OlsFit fit;
    if (sxx > 0) {
        fit.slope = sxy / sxx;
        fit.intercept = my - fit.slope * mx;
    } else {
        fit.slope = 0;
        fit.intercept = my;
    }
    return fit;
}

// R^2 of corrected predictions on the validation split; nullopt when the
// validation targets are constant (SS_tot = 0).
std::optional<double> validation_r2(const std::vector<double>& x, const std::vector<double>& y,
                                    const OlsFit& fit, const std::vector<size_t>& val_idx) {
    double my = 0;
    for (size_t i : val_idx) my += y[i];
    my /= static_cast<double>(val_idx.size());
    double ss_tot = 0, ss_res = 0;
    for (size_t i : val_idx) {
        double pred = fit.intercept + fit.slope * x[i];
        ss_tot += (y[i] - my) * (y[i] - my);
        ss_res += (y[i] - pred) * (y[i] - pred);
    }
    if (ss_tot <= 0) return std::nullopt;
    return 1.0 - ss_res / ss_tot;
}

}  // namespace

CoreSetResult greedy_core_set_selection(int foundation, const std::vector<double>& mfq_scores,
                                        const std::vector<CulturalConfiguration>& configs,
                                        const CulturalSchema& schema, const OracleMatrix& matrix,
                                        const GreedyParams& params) {
    if (mfq_scores.size() != configs.size()) {
        throw ValidationError("MFQ scores and configurations must align");
    }
    if (mfq_scores.size() < 5) throw ValidationError("too few personas for selection");
    if (params.runs < 1) throw ValidationError("runs must be >= 1");
    if (!(params.train_fraction > 0 && params.train_fraction < 1)) {
        throw ValidationError("train fraction must be in (0, 1)");
    }

    const size_t n = mfq_scores.size();
    const size_t n_vars = schema.variable_count();

    // Per-variable oracle scores for each persona; subset predictions are
    // means over these columns, accumulated incrementally.
    std::vector<std::vector<double>> var_scores(n_vars, std::vector<double>(n));
    for (size_t vi = 0; vi < n_vars; ++vi) {
        for (size_t i = 0; i < n; ++i) {
            var_scores[vi][i] = matrix.entry(static_cast<int>(vi),
                                             configs[i].level_of(static_cast<int>(vi)), foundation);
        }
    }

    CoreSetResult result;
    result.foundation = foundation;

    for (int run = 0; run < params.runs; ++run) {
        SplitMix64 rng(mix64(params.seed, mix64(static_cast<uint64_t>(foundation),
                                                static_cast<uint64_t>(run))));
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        size_t n_train = static_cast<size_t>(
            std::max<double>(1.0, std::floor(params.train_fraction * static_cast<double>(n))));
        n_train = std::min(n_train, n - 1);
        std::vector<size_t> train(order.begin(), order.begin() + static_cast<long>(n_train));
        std::vector<size_t> validation(order.begin() + static_cast<long>(n_train), order.end());

        RunSelection selection;
        std::vector<bool> in_set(n_vars, false);
        std::vector<double> sum_scores(n, 0.0);  // running sum over selected variables
        double current_r2 = 0.0;                 // empty-set baseline
        std::vector<double> predictions(n);

        for (size_t step = 0; step < n_vars; ++step) {
            int best_var = -1;
            double best_r2 = 0;
            bool degenerate = false;
            for (size_t vi = 0; vi < n_vars; ++vi) {
                if (in_set[vi]) continue;
                double denom = static_cast<double>(selection.variables.size() + 1);
                for (size_t i = 0; i < n; ++i) {
                    predictions[i] = (sum_scores[i] + var_scores[vi][i]) / denom;
                }
                OlsFit fit = fit_ols(predictions, mfq_scores, train);
                auto r2 = validation_r2(predictions, mfq_scores, fit, validation);
                if (!r2) {
                    degenerate = true;
                    break;
                }
                if (best_var < 0 || *r2 > best_r2) {
                    best_var = static_cast<int>(vi);
                    best_r2 = *r2;
                }
            }
            if (degenerate) {
                selection.aborted = true;
                break;
            }
            if (best_var < 0 || best_r2 - current_r2 <= params.epsilon) break;
            in_set[static_cast<size_t>(best_var)] = true;
            selection.variables.push_back(best_var);
            for (size_t i = 0; i < n; ++i) {
                sum_scores[i] += var_scores[static_cast<size_t>(best_var)][i];
            }
            current_r2 = best_r2;
        }
        selection.final_r2 = current_r2;
        result.runs.push_back(std::move(selection));
    }

    // Aggregate over completed runs only.
    std::vector<std::vector<int>> completed;
    for (const auto& run : result.runs) {
        if (run.aborted) continue;
        std::vector<int> sorted = run.variables;
        std::sort(sorted.begin(), sorted.end());
        completed.push_back(std::move(sorted));
    }
    if (!completed.empty()) {
        std::vector<int> counts(n_vars, 0);
        for (const auto& vars : completed) {
            for (int v : vars) ++counts[static_cast<size_t>(v)];
        }
        for (size_t vi = 0; vi < n_vars; ++vi) {
            if (counts[vi] == static_cast<int>(completed.size())) {
                result.core_set.push_back(static_cast<int>(vi));
            }
            if (counts[vi] > 0) {
                result.variable_support[static_cast<int>(vi)] =
                    static_cast<double>(counts[vi]) / static_cast<double>(completed.size());
            }
        }
        for (const auto& vars : completed) {
            result.k_distribution[static_cast<int>(vars.size())] += 1;
        }
        double jaccard_sum = 0;
        long pairs = 0;
        for (size_t a = 0; a < completed.size(); ++a) {
            for (size_t b = a + 1; b < completed.size(); ++b) {
                std::vector<int> inter, uni;
                std::set_intersection(completed[a].begin(), completed[a].end(), completed[b].begin(),
                                      completed[b].end(), std::back_inserter(inter));
                std::set_union(completed[a].begin(), completed[a].end(), completed[b].begin(),
                               completed[b].end(), std::back_inserter(uni));
                jaccard_sum += uni.empty() ? 1.0
                                           : static_cast<double>(inter.size()) /
                                                 static_cast<double>(uni.size());
                ++pairs;
            }
        }
        result.mean_jaccard = pairs == 0 ? 1.0 : jaccard_sum / static_cast<double>(pairs);
    }
    return result;
}

double quantile_type7(std::vector<double> sorted_values, double q) {
    if (sorted_values.empty()) throw ValidationError("quantile of empty sample");
    if (sorted_values.size() == 1) return sorted_values[0];
    double h = q * static_cast<double>(sorted_values.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, sorted_values.size() - 1);
    double frac = h - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

std::vector<ValueStats> per_value_stats(int foundation, int variable,
                                        const std::vector<double>& mfq_scores,
                                        const std::vector<CulturalConfiguration>& configs,
                                        const CulturalSchema& schema) {
    if (mfq_scores.size() != configs.size()) {
        throw ValidationError("MFQ scores and configurations must align");
    }
    const auto& var = schema.variables().at(static_cast<size_t>(variable));
    std::vector<std::vector<double>> by_level(var.levels.size());
    for (size_t i = 0; i < configs.size(); ++i) {
        by_level[static_cast<size_t>(configs[i].level_of(variable))].push_back(mfq_scores[i]);
    }
    std::vector<ValueStats> out;
    for (size_t li = 0; li < var.levels.size(); ++li) {
        ValueStats s;
        s.foundation = foundation;
        s.variable = variable;
        s.level = static_cast<int>(li);
        auto& values = by_level[li];
        s.n = static_cast<long>(values.size());
        if (!values.empty()) {
            std::sort(values.begin(), values.end());
            double sum = 0;
            long ge4 = 0;
            for (double v : values) {
                sum += v;
                if (v >= 4.0) ++ge4;
            }
            s.mean = sum / static_cast<double>(values.size());
            s.median = quantile_type7(values, 0.5);
            s.q25 = quantile_type7(values, 0.25);
            s.q75 = quantile_type7(values, 0.75);
            s.p_ge_4 = static_cast<double>(ge4) / static_cast<double>(values.size());
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace audit
