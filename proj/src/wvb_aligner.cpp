#include "audit/wvb_aligner.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace audit {

using nlohmann::json;

const std::array<const char*, 6> kContinents = {"Africa", "Asia", "Europe",
                                                "North America", "South America", "Oceania"};
const std::array<const char*, 2> kResidentialAreas = {"Urban", "Rural"};
const std::array<const char*, 4> kEducationLevels = {"Primary or No Education", "Lower Secondary",
                                                     "Upper to Post Secondary", "Tertiary"};

std::optional<std::string> match_option(std::string_view value, const char* const* options,
                                        size_t n) {
    std::string v = to_lower(trim(value));
    for (size_t i = 0; i < n; ++i) {
        if (v == to_lower(options[i])) return std::string(options[i]);
    }
    return std::nullopt;
}

WvbQuestionBank WvbQuestionBank::load(const std::filesystem::path& path) {
    WvbQuestionBank bank;
    try {
        json doc = json::parse(read_text_file(path));
        for (const auto& q : doc.at("questions")) {
            WvbQuestion question;
            question.id = q.at("id").get<std::string>();
            question.prompt = q.at("prompt").get<std::string>();
            question.k = q.at("k").get<int>();
            if (q.contains("labels")) {
                question.labels = q["labels"].get<std::vector<std::string>>();
            }
            bank.questions_.push_back(std::move(question));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed question bank: ") + e.what());
    }
    bank.validate();
    return bank;
}

WvbQuestionBank WvbQuestionBank::make(std::vector<WvbQuestion> questions) {
    WvbQuestionBank bank;
    bank.questions_ = std::move(questions);
    bank.validate();
    return bank;
}

void WvbQuestionBank::validate() const {
    if (questions_.empty()) throw ValidationError("question bank is empty");
    std::set<std::string> ids;
    for (const auto& q : questions_) {
        if (q.k < 2) throw ValidationError("question '" + q.id + "' needs at least 2 categories");
        if (!ids.insert(q.id).second) throw ValidationError("duplicate question id: " + q.id);
    }
}

namespace {

std::string demographics_turn() {
    std::ostringstream out;
    out << "Before answering, report your demographics by selecting exactly one option from each "
           "list:\n";
    out << "- Continent: [Africa, Asia, Europe, North America, South America, Oceania]\n";
    out << "- Residential area: [Urban, Rural]\n";
    out << "- Education: [Primary or No Education, Lower Secondary, Upper to Post Secondary, "
           "Tertiary]\n";
    out << "Return the three fields in a structured form (one line each).";
    return out.str();
}

std::string question_turn(const WvbQuestion& q) {
    return "Question: " + q.prompt +
           "\n\nReturn only a single integer on the response scale specified in the question "
           "prompt.";
}

std::optional<DemographicTriple> parse_triple(const std::string& text, std::string* error) {
    DemographicTriple triple;
    bool got_continent = false, got_area = false, got_education = false;
    for (const auto& line : split_lines(text)) {
        size_t colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = to_lower(trim(line.substr(0, colon)));
        std::string value = trim(line.substr(colon + 1));
        if (key.find("continent") != std::string::npos) {
            auto m = match_option(value, kContinents.data(), kContinents.size());
            if (!m) {
                *error = "continent '" + value + "' is not in the option list";
                return std::nullopt;
            }
            triple.continent = *m;
            got_continent = true;
        } else if (key.find("residential") != std::string::npos || key.find("area") != std::string::npos) {
            auto m = match_option(value, kResidentialAreas.data(), kResidentialAreas.size());
            if (!m) {
                *error = "residential area '" + value + "' is not in the option list";
                return std::nullopt;
            }
            triple.area = *m;
            got_area = true;
        } else if (key.find("education") != std::string::npos) {
            auto m = match_option(value, kEducationLevels.data(), kEducationLevels.size());
            if (!m) {
                *error = "education '" + value + "' is not in the option list";
                return std::nullopt;
            }
            triple.education = *m;
            got_education = true;
        }
    }
    if (!got_continent || !got_area || !got_education) {
        *error = "demographics output missing one of the three fields";
        return std::nullopt;
    }
    return triple;
}

std::optional<int> parse_single_integer(const std::string& text) {
    static const std::regex int_re(R"(^\s*(-?\d+)\s*$)");
    std::smatch m;
    if (std::regex_match(text, m, int_re)) return std::stoi(m[1]);
    return std::nullopt;
}

}  // namespace

WvbResponse elicit_wvb(const PersonaProfile& persona, const WvbQuestionBank& bank,
                       LlmGateway& gateway, int max_format_retries) {
    WvbResponse rec;
    rec.config_id = persona.config_id;

    ChatRequest req;
    req.system_text = "You are the following person:\n" + persona.raw_text +
                      "\n\nAnswer the following survey questions as this person would answer, based "
                      "on their values and worldview. It is very important to respond EXACTLY as "
                      "requested. Be terse.";
    req.user_turns.push_back(demographics_turn());

    std::string error;
    std::optional<DemographicTriple> triple;
    for (int attempt = 0; attempt <= max_format_retries && !triple; ++attempt) {
        ChatResponse resp = gateway.complete(req);
        triple = parse_triple(resp.text, &error);
        if (!triple) {
            req.user_turns.push_back(
                "Your previous response was invalid (" + error +
                "). Report the three demographic fields again, one per line, choosing only from "
                "the given options.");
        }
    }
    if (!triple) {
        rec.status = "excluded";
        rec.error = error;
        return rec;
    }
    rec.triple = *triple;

    for (const auto& q : bank.questions()) {
        req.user_turns.push_back(question_turn(q));
        std::optional<int> answer;
        for (int attempt = 0; attempt <= max_format_retries && !answer; ++attempt) {
            ChatResponse resp = gateway.complete(req);
            answer = parse_single_integer(resp.text);
            if (answer && (*answer < 1 || *answer > q.k)) {
                error = "answer " + std::to_string(*answer) + " outside the 1.." +
                        std::to_string(q.k) + " scale for " + q.id;
                answer.reset();
            } else if (!answer) {
                error = "expected a single integer for " + q.id;
            }
            if (!answer && attempt < max_format_retries) {
                req.user_turns.push_back("Your previous response was invalid (" + error +
                                         "). Return only a single integer from 1 to " +
                                         std::to_string(q.k) + ".");
            }
        }
        if (!answer) {
            rec.status = "excluded";
            rec.error = error;
            rec.answers.clear();
            return rec;
        }
        rec.answers.push_back(*answer);
    }
    rec.status = "ok";
    return rec;
}

void CategoricalDistribution::validate() const {
    if (k < 2) throw ValidationError("distribution needs K >= 2 categories");
    if (masses.size() != static_cast<size_t>(k)) {
        throw ValidationError("distribution for '" + question_id + "' has wrong mass count");
    }
    double sum = 0;
    for (double m : masses) {
        if (m < 0) throw ValidationError("negative mass in distribution for '" + question_id + "'");
        sum += m;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("masses for '" + question_id + "' sum to " + format_fixed(sum, 12));
    }
}

CategoricalDistribution distribution_from_answers(const std::string& question_id, int k,
                                                  const std::vector<int>& answers) {
    CategoricalDistribution d;
    d.question_id = question_id;
    d.k = k;
    d.masses.assign(static_cast<size_t>(k), 0.0);
    for (int a : answers) {
        if (a < 1 || a > k) throw ValidationError("answer outside scale for '" + question_id + "'");
        d.masses[static_cast<size_t>(a - 1)] += 1.0;
    }
    if (!answers.empty()) {
        for (double& m : d.masses) m /= static_cast<double>(answers.size());
    }
    return d;
}

std::map<GroupQuestionKey, CategoricalDistribution> build_group_distributions(
    const std::vector<WvbResponse>& responses, const WvbQuestionBank& bank) {
    std::map<std::pair<DemographicTriple, std::string>, std::vector<int>> answers;
    for (const auto& r : responses) {
        if (r.status != "ok") continue;
        for (size_t qi = 0; qi < bank.questions().size(); ++qi) {
            answers[{r.triple, bank.questions()[qi].id}].push_back(r.answers[qi]);
        }
    }
    std::map<GroupQuestionKey, CategoricalDistribution> out;
    for (const auto& [key, values] : answers) {
        int k = 0;
        for (const auto& q : bank.questions()) {
            if (q.id == key.second) k = q.k;
        }
        out[key] = distribution_from_answers(key.second, k, values);
    }
    return out;
}

double emd_raw(const CategoricalDistribution& p, const CategoricalDistribution& h) {
    if (p.k != h.k) throw ValidationError("EMD requires matching category counts");
    double cdf_p = 0, cdf_h = 0, total = 0;
    for (int k = 0; k < p.k; ++k) {
        cdf_p += p.masses[static_cast<size_t>(k)];
        cdf_h += h.masses[static_cast<size_t>(k)];
        total += std::abs(cdf_p - cdf_h);
    }
    return total;
}

double emd(const CategoricalDistribution& p, const CategoricalDistribution& h) {
    return emd_raw(p, h) / static_cast<double>(p.k - 1);
}

ReferenceTable ReferenceTable::load(const std::filesystem::path& csv_path) {
    ReferenceTable table;
    auto lines = split_lines(read_text_file(csv_path));
    // One row per category: continent,area,education,question_id,k,mass with
    // k the 1-based category index. Missing categories default to mass 0.
    std::map<GroupQuestionKey, std::map<int, double>> raw;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto fields = csv_split_line(lines[i]);
        if (i == 0 && to_lower(fields[0]) == "continent") continue;
        if (fields.size() != 6) {
            throw ValidationError("reference row " + std::to_string(i + 1) + " needs 6 fields");
        }
        auto continent = match_option(fields[0], kContinents.data(), kContinents.size());
        auto area = match_option(fields[1], kResidentialAreas.data(), kResidentialAreas.size());
        auto education = match_option(fields[2], kEducationLevels.data(), kEducationLevels.size());
        if (!continent || !area || !education) {
            throw ValidationError("reference row " + std::to_string(i + 1) +
                                  " has an unknown demographic option");
        }
        DemographicTriple triple{*continent, *area, *education};
        int category = std::stoi(fields[4]);
        if (category < 1) {
            throw ValidationError("reference row " + std::to_string(i + 1) +
                                  " has a category index below 1");
        }
        raw[{triple, fields[3]}][category] = std::stod(fields[5]);
    }
    for (auto& [key, entry] : raw) {
        CategoricalDistribution d;
        d.question_id = key.second;
        d.k = entry.rbegin()->first;
        d.masses.assign(static_cast<size_t>(d.k), 0.0);
        for (const auto& [category, mass] : entry) {
            d.masses[static_cast<size_t>(category - 1)] = mass;
        }
        d.validate();
        table.table_[key] = std::move(d);
    }
    return table;
}

const CategoricalDistribution* ReferenceTable::find(const DemographicTriple& triple,
                                                    const std::string& question_id) const {
    auto it = table_.find({triple, question_id});
    return it == table_.end() ? nullptr : &it->second;
}

bool ReferenceTable::has_group(const DemographicTriple& triple) const {
    auto it = table_.lower_bound({triple, std::string()});
    return it != table_.end() && it->first.first == triple;
}

size_t ReferenceTable::group_count() const {
    std::set<DemographicTriple> groups;
    for (const auto& [key, d] : table_) groups.insert(key.first);
    return groups.size();
}

AlignmentReport alignment_report(
    const std::map<GroupQuestionKey, CategoricalDistribution>& group_distributions,
    const std::map<DemographicTriple, long>& group_counts, const ReferenceTable& reference) {
    AlignmentReport report;

    std::map<DemographicTriple, std::vector<double>> per_group_emds;
    for (const auto& [key, dist] : group_distributions) {
        const auto& [triple, question_id] = key;
        if (!reference.has_group(triple)) continue;
        const CategoricalDistribution* ref = reference.find(triple, question_id);
        if (!ref) continue;  // question missing from the reference: excluded
        PairEmd pair;
        pair.triple = triple;
        pair.question_id = question_id;
        pair.emd_raw = emd_raw(dist, *ref);
        pair.emd_normalized = emd(dist, *ref);
        per_group_emds[triple].push_back(pair.emd_normalized);
        report.pairs.push_back(std::move(pair));
    }
    for (const auto& [triple, count] : group_counts) {
        if (!reference.has_group(triple)) report.unsupported_groups.push_back(triple);
    }

    double sum_score = 0, sum_pct04 = 0, sum_pct02 = 0;
    double w_score = 0, w_pct04 = 0, w_pct02 = 0;
    double total_weight = 0;
    for (const auto& [triple, emds] : per_group_emds) {
        GroupAlignment g;
        g.triple = triple;
        auto it = group_counts.find(triple);
        g.persona_count = it == group_counts.end() ? 0 : it->second;
        g.questions_scored = static_cast<int>(emds.size());
        double sum = 0;
        int below04 = 0, below02 = 0;
        for (double e : emds) {
            sum += e;
            if (e < 0.4) ++below04;
            if (e < 0.2) ++below02;
        }
        g.mean_emd = sum / static_cast<double>(emds.size());
        g.score = 1.0 - g.mean_emd;
        g.pct_below_04 = 100.0 * below04 / static_cast<double>(emds.size());
        g.pct_below_02 = 100.0 * below02 / static_cast<double>(emds.size());
        sum_score += g.score;
        sum_pct04 += g.pct_below_04;
        sum_pct02 += g.pct_below_02;
        double w = static_cast<double>(g.persona_count);
        w_score += w * g.score;
        w_pct04 += w * g.pct_below_04;
        w_pct02 += w * g.pct_below_02;
        total_weight += w;
        report.groups.push_back(std::move(g));
    }
    std::sort(report.groups.begin(), report.groups.end(),
              [](const GroupAlignment& a, const GroupAlignment& b) {
                  if (a.persona_count != b.persona_count) return a.persona_count > b.persona_count;
                  return a.triple < b.triple;
              });
    size_t n = per_group_emds.size();
    if (n > 0) {
        report.unweighted_score = sum_score / static_cast<double>(n);
        report.unweighted_pct04 = sum_pct04 / static_cast<double>(n);
        report.unweighted_pct02 = sum_pct02 / static_cast<double>(n);
    }
    if (total_weight > 0) {
        report.weighted_score = w_score / total_weight;
        report.weighted_pct04 = w_pct04 / total_weight;
        report.weighted_pct02 = w_pct02 / total_weight;
    }
    return report;
}

}  // namespace audit
