#include "audit/persona_forge.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <sstream>

namespace audit {

namespace {

// Collapse to lowercase alphanumerics separated by single spaces, so that
// "**Child rearing value:**" and "child_rearing_value" compare equal.
std::string normalize_token_text(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out += static_cast<char>(std::tolower(uc));
        } else {
            pending_space = true;
        }
    }
    return out;
}

struct Section {
    std::string name;  // metadata | bio | mapping
    std::vector<std::string> lines;
};

std::optional<std::string> match_section_header(const std::string& line) {
    std::string norm = normalize_token_text(line);
    if (norm.empty() || norm.size() > 60) return std::nullopt;
    if (norm.rfind("profile metadata", 0) == 0 || norm.rfind("metadata", 0) == 0) return "metadata";
    if (norm.rfind("short bio", 0) == 0 || norm == "bio") return "bio";
    if (norm.rfind("cultural variable mapping", 0) == 0 || norm.rfind("cultural mapping", 0) == 0) {
        return "mapping";
    }
    return std::nullopt;
}

std::vector<Section> split_sections(const std::string& text) {
    std::vector<Section> sections;
    for (const auto& line : split_lines(text)) {
        if (auto name = match_section_header(line)) {
            sections.push_back({*name, {}});
            // Inline content after the header colon, e.g. "Short bio: text".
            size_t colon = line.find(':');
            if (colon != std::string::npos) {
                std::string rest = trim(line.substr(colon + 1));
                if (!rest.empty()) sections.back().lines.push_back(rest);
            }
            continue;
        }
        if (!sections.empty()) sections.back().lines.push_back(line);
    }
    return sections;
}

const std::vector<std::pair<std::string, int>>& word_number_table() {
    static const std::vector<std::pair<std::string, int>> table = {
        {"one", 1},     {"two", 2},      {"three", 3},   {"four", 4},    {"five", 5},
        {"six", 6},     {"seven", 7},    {"eight", 8},   {"nine", 9},    {"ten", 10},
        {"eleven", 11}, {"twelve", 12},  {"thirteen", 13}, {"fourteen", 14}, {"fifteen", 15},
        {"sixteen", 16}, {"seventeen", 17}, {"eighteen", 18}, {"nineteen", 19},
        {"twenty", 20}, {"thirty", 30},  {"forty", 40},  {"fifty", 50},  {"sixty", 60},
        {"seventy", 70}, {"eighty", 80}, {"ninety", 90}, {"hundred", 100}};
    return table;
}

std::optional<int> lookup_word_number(const std::string& word) {
    for (const auto& [w, v] : word_number_table()) {
        if (w == word) return v;
    }
    return std::nullopt;
}

}  // namespace

std::optional<int> parse_age_text(std::string_view text) {
    // Digits first.
    std::string digits;
    for (char c : text) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits += c;
        } else if (!digits.empty()) {
            break;
        }
    }
    if (!digits.empty() && digits.size() <= 3) return std::stoi(digits);

    // Word-number fallback: "thirty-four", "thirty four", "forty".
    std::string norm = normalize_token_text(text);
    std::istringstream ss(norm);
    std::string word;
    std::optional<int> value;
    while (ss >> word) {
        auto v = lookup_word_number(word);
        if (!v) {
            if (value) break;
            continue;
        }
        if (!value) {
            value = *v;
        } else if (*value % 10 == 0 && *value >= 20 && *v < 10) {
            value = *value + *v;  // tens + unit
            break;
        } else if (*v == 100 && *value < 10) {
            value = *value * 100;
        } else {
            break;
        }
    }
    return value;
}

std::string render_persona_prompt(const CulturalSchema& schema, const CulturalConfiguration& config) {
    std::ostringstream out;
    out << "Conditioning:\n";
    const auto& vars = schema.variables();
    for (size_t i = 0; i < vars.size(); ++i) {
        const auto& level = vars[i].levels[static_cast<size_t>(config.level_indices[i])];
        out << vars[i].label << " = " << level.label << "\n";
    }
    out << "\nTask:\n";
    out << "You are asked to generate a single detailed persona profile that is consistent with the "
           "conditioning above. The persona must be coherent, realistic, and explicitly tie behaviors, "
           "life choices, and attitudes back to each of the ten cultural variables listed. Use a "
           "professional-but-readable tone.\n";
    out << "\nDeliverables (strict order):\n";
    out << "- Profile metadata: name, age, gender (optional), occupation, country/region (plausible "
           "given the cultural profile).\n";
    out << "- Short bio: 2-4 sentences describing life situation and background.\n";
    out << "- Cultural variable mapping: for each of the ten variables, 1-2 sentences explaining how "
           "the variable manifests in attitudes and daily behavior (numbered list matching variable "
           "names).\n";
    out << "\nConstraints:\n";
    out << "- Each sentence in the cultural mapping must explicitly reference the corresponding "
           "conditioning variable.\n";
    out << "- No contradiction of the conditioning is allowed (e.g., never_justifiable must be "
           "reflected).\n";
    out << "- The persona must remain within plausible real-world bounds.\n";
    out << "- Output length must be between approximately 250 and 500 words.\n";
    return out.str();
}

PersonaProfile parse_persona_text(const CulturalSchema& schema, uint64_t config_id,
                                  const std::string& text, const PersonaParseOptions& opts) {
    auto sections = split_sections(text);
    const Section* metadata = nullptr;
    const Section* bio = nullptr;
    const Section* mapping = nullptr;
    for (const auto& s : sections) {
        if (s.name == "metadata" && !metadata) metadata = &s;
        if (s.name == "bio" && !bio) bio = &s;
        if (s.name == "mapping" && !mapping) mapping = &s;
    }
    if (!metadata) throw ValidationError("persona text missing profile metadata section");
    if (!bio) throw ValidationError("persona text missing short bio section");
    if (!mapping) throw ValidationError("persona text missing cultural variable mapping section");

    PersonaProfile p;
    p.config_id = config_id;
    p.raw_text = text;

    bool age_seen = false;
    for (const auto& raw_line : metadata->lines) {
        std::string line = trim(raw_line);
        while (!line.empty() && (line[0] == '-' || line[0] == '*' || line[0] == '•')) {
            line = trim(line.substr(1));
        }
        size_t colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = normalize_token_text(line.substr(0, colon));
        std::string value = trim(line.substr(colon + 1));
        if (key == "name") {
            p.metadata.name = value;
        } else if (key == "age") {
            age_seen = true;
            if (auto age = parse_age_text(value)) p.metadata.age = *age;
        } else if (key == "gender") {
            p.metadata.gender_label = value;
        } else if (key == "occupation") {
            p.metadata.occupation_raw = value;
        } else if (key == "country region" || key == "country" || key == "region" ||
                   key == "country or region") {
            p.metadata.country_region = value;
        }
    }
    if (p.metadata.name.empty()) throw ValidationError("persona metadata missing name");
    if (!age_seen || p.metadata.age < 0) throw ValidationError("persona metadata missing parseable age");
    if (p.metadata.age < opts.min_age || p.metadata.age > opts.max_age) {
        throw ValidationError("persona age " + std::to_string(p.metadata.age) +
                              " outside plausible bounds");
    }
    if (p.metadata.occupation_raw.empty()) throw ValidationError("persona metadata missing occupation");
    if (p.metadata.country_region.empty()) throw ValidationError("persona metadata missing country/region");

    // Bio: joined non-empty lines.
    std::string bio_text;
    for (const auto& line : bio->lines) {
        std::string t = trim(line);
        if (t.empty()) continue;
        if (!bio_text.empty()) bio_text += ' ';
        bio_text += t;
    }
    if (bio_text.empty()) throw ValidationError("persona bio section is empty");
    p.bio = bio_text;

    // Mapping entries: one per schema variable, matched by label or name.
    // Lines that do not open a new entry continue the previous one.
    std::vector<std::pair<std::string, std::string>> entries;  // normalized key -> text
    for (const auto& raw_line : mapping->lines) {
        std::string line = trim(raw_line);
        if (line.empty()) continue;
        size_t pos = 0;
        while (pos < line.size() &&
               (std::isdigit(static_cast<unsigned char>(line[pos])) || line[pos] == '.' ||
                line[pos] == ')' || line[pos] == '-' || line[pos] == '*' || line[pos] == ' ')) {
            ++pos;
        }
        std::string body = line.substr(pos);
        size_t colon = body.find(':');
        bool opened = false;
        if (colon != std::string::npos && colon < 80) {
            std::string key = normalize_token_text(body.substr(0, colon));
            for (const auto& var : schema.variables()) {
                if (key == normalize_token_text(var.label) || key == normalize_token_text(var.name)) {
                    entries.emplace_back(normalize_token_text(var.name), trim(body.substr(colon + 1)));
                    opened = true;
                    break;
                }
            }
        }
        if (!opened && !entries.empty()) {
            entries.back().second += ' ';
            entries.back().second += line;
        }
    }
    for (const auto& var : schema.variables()) {
        std::string want = normalize_token_text(var.name);
        auto it = std::find_if(entries.begin(), entries.end(),
                               [&](const auto& e) { return e.first == want; });
        if (it == entries.end()) {
            throw ValidationError("cultural mapping missing variable: " + var.name);
        }
        p.variable_mapping[var.name] = it->second;
    }
    return p;
}

PersonaRecord generate_persona(const CulturalSchema& schema, const CulturalConfiguration& config,
                               LlmGateway& gateway, int max_format_retries,
                               const PersonaParseOptions& opts) {
    PersonaRecord rec;
    rec.config_id = config.config_id;

    ChatRequest req;
    req.user_turns.push_back(render_persona_prompt(schema, config));

    std::string last_error;
    for (int attempt = 0; attempt <= max_format_retries; ++attempt) {
        ChatResponse resp = gateway.complete(req);
        try {
            rec.profile = parse_persona_text(schema, config.config_id, resp.text, opts);
            rec.status = "ok";
            return rec;
        } catch (const ValidationError& e) {
            last_error = e.what();
            req.user_turns.push_back(
                "Your previous response did not follow the required format (" + last_error +
                "). Respond again with all three deliverables exactly as specified: Profile "
                "metadata, Short bio, Cultural variable mapping.");
        }
    }
    rec.status = "failed";
    rec.error = last_error;
    return rec;
}

// --- demographic summary ------------------------------------------------

std::string normalize_gender(std::string_view raw) {
    std::string g = normalize_token_text(raw);
    if (g == "man" || g == "male" || g == "m") return "man";
    if (g == "woman" || g == "female" || g == "f") return "woman";
    if (g.find("non binary") != std::string::npos || g.find("nonbinary") != std::string::npos ||
        g.find("genderqueer") != std::string::npos || g.find("agender") != std::string::npos ||
        g.find("gender neutral") != std::string::npos || g.find("genderfluid") != std::string::npos) {
        return "non-binary";
    }
    return "unspecified/other";
}

std::string age_band(int age) {
    int lo = (age / 10) * 10;
    return std::to_string(lo) + "-" + std::to_string(lo + 9);
}

long count_words(std::string_view text) {
    long n = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

long count_tokens(std::string_view text) {
    long n = 0;
    size_t run = 0;
    auto flush = [&] {
        if (run > 0) n += static_cast<long>((run + 3) / 4);
        run = 0;
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            ++run;
        }
    }
    flush();
    return n;
}

OccupationMapper OccupationMapper::bundled() {
    OccupationMapper m;
    // Table layout: 20 macro-categories; the last-resort bucket is
    // "Other / Unclear".
    const std::vector<std::pair<const char*, std::vector<const char*>>> table = {
        {"Education & Academia",
         {"teacher", "professor", "lecturer", "tutor", "educator", "academic", "school", "librarian",
          "researcher", "scientist", "historian", "linguist"}},
        {"Social Services & Nonprofit",
         {"social worker", "ngo", "nonprofit", "non-profit", "charity", "outreach", "counselor",
          "counsellor", "volunteer", "humanitarian", "caseworker", "community organizer"}},
        {"Sales & Marketing",
         {"sales", "marketing", "advertis", "brand manager", "merchandis", "account executive",
          "market research"}},
        {"Tech / IT / Data",
         {"software", "developer", "programmer", "data analyst", "data scientist", "data engineer",
          "sysadmin", "devops", "computer", "cybersecurity", "web designer", "it support",
          "it specialist", "database"}},
        {"Management / Operations / Admin",
         {"manager", "management", "operations", "administrator", "administrative", "secretary",
          "coordinator", "supervisor", "clerk", "office assistant"}},
        {"Retail / Hospitality / Small Business",
         {"retail", "shop", "store", "cashier", "hotel", "restaurant", "waiter", "waitress",
          "barista", "chef", "cook", "hospitality", "bartender", "small business", "shopkeeper",
          "receptionist", "baker", "butcher"}},
        {"Manufacturing & Skilled Trades",
         {"factory", "manufactur", "welder", "machinist", "carpenter", "electrician", "plumber",
          "mechanic", "technician", "craftsman", "craftswoman", "tailor", "seamstress", "assembly",
          "artisan", "blacksmith"}},
        {"Government & Public Sector",
         {"civil servant", "government", "public sector", "municipal", "policy officer", "customs",
          "diplomat", "military", "soldier", "police", "firefighter", "tax officer"}},
        {"Construction / Real Estate / Planning",
         {"construction", "builder", "real estate", "architect", "surveyor", "urban planner",
          "property", "roofer", "mason"}},
        {"Engineering (non-IT)",
         {"engineer", "engineering", "mechanical", "electrical", "aerospace", "metallurg"}},
        {"Arts / Media / Design",
         {"artist", "designer", "musician", "writer", "author", "journalist", "photographer",
          "actor", "actress", "media", "graphic", "illustrator", "filmmaker", "editor", "poet",
          "sculptor", "dancer", "curator"}},
        {"Finance / Banking / Insurance",
         {"finance", "financial", "banking", "banker", "accountant", "insurance", "auditor",
          "investment", "actuary", "bookkeeper"}},
        {"Consulting / Professional Services",
         {"consultant", "consulting", "advisor", "adviser", "analyst", "freelancer", "translator",
          "interpreter"}},
        {"Agriculture & Natural Resources",
         {"farmer", "farm", "agricultur", "fisher", "forestry", "forester", "rancher", "agronomist",
          "miner", "beekeeper", "shepherd", "vintner", "winemaker"}},
        {"Healthcare & Medicine",
         {"doctor", "physician", "nurse", "medical", "healthcare", "health care", "dentist",
          "pharmacist", "therapist", "surgeon", "midwife", "paramedic", "veterinarian",
          "psychologist", "physiotherapist"}},
        {"Transportation & Logistics",
         {"driver", "transport", "logistics", "pilot", "courier", "shipping", "truck", "delivery",
          "sailor", "dispatcher", "conductor"}},
        {"Religious / Clergy",
         {"priest", "imam", "pastor", "clergy", "monk", "nun", "rabbi", "chaplain", "theolog",
          "missionary", "preacher"}},
        {"Not in labor force",
         {"retired", "homemaker", "student", "unemployed", "stay-at-home", "housewife",
          "househusband", "pensioner"}},
        {"Law & Legal",
         {"lawyer", "attorney", "judge", "legal", "paralegal", "solicitor", "barrister", "notary"}},
        {"Other / Unclear", {}},
    };
    for (const auto& [macro, keywords] : table) {
        size_t idx = m.macros_.size();
        m.macros_.push_back(macro);
        for (const char* kw : keywords) m.keywords_.emplace_back(kw, idx);
    }
    // Longest keyword wins; ties resolve alphabetically. Keeps e.g.
    // "software engineer" in Tech rather than Engineering.
    std::sort(m.keywords_.begin(), m.keywords_.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
        return a.first < b.first;
    });
    return m;
}

OccupationMapper OccupationMapper::load(const std::filesystem::path& csv_path) {
    OccupationMapper m;
    auto lines = split_lines(read_text_file(csv_path));
    std::map<std::string, size_t> macro_index;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto fields = csv_split_line(lines[i]);
        if (i == 0 && to_lower(fields[0]) == "macro") continue;  // header
        if (fields.size() < 2) throw ValidationError("occupation table row needs macro,keyword");
        auto [it, inserted] = macro_index.try_emplace(fields[0], m.macros_.size());
        if (inserted) m.macros_.push_back(fields[0]);
        if (!fields[1].empty()) m.keywords_.emplace_back(to_lower(fields[1]), it->second);
    }
    if (std::find(m.macros_.begin(), m.macros_.end(), "Other / Unclear") == m.macros_.end()) {
        m.macros_.push_back("Other / Unclear");
    }
    std::sort(m.keywords_.begin(), m.keywords_.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
        return a.first < b.first;
    });
    return m;
}

std::string OccupationMapper::macro_for(std::string_view raw) const {
    std::string lower = to_lower(raw);
    for (const auto& [kw, idx] : keywords_) {
        if (lower.find(kw) != std::string::npos) return macros_[idx];
    }
    return "Other / Unclear";
}

namespace {

LexicalStats lexical_stats(const std::vector<long>& values) {
    LexicalStats s;
    if (values.empty()) return s;
    double sum = 0;
    s.min_v = values[0];
    s.max_v = values[0];
    for (long v : values) {
        sum += static_cast<double>(v);
        s.min_v = std::min(s.min_v, v);
        s.max_v = std::max(s.max_v, v);
    }
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0;
    for (long v : values) {
        double d = static_cast<double>(v) - s.mean;
        ss += d * d;
    }
    s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    return s;
}

void normalize_shares(std::map<std::string, double>& shares, size_t total) {
    if (total == 0) return;
    for (auto& [k, v] : shares) v /= static_cast<double>(total);
}

}  // namespace

DemographicSummary demographic_summary(const std::vector<PersonaProfile>& personas,
                                       const OccupationMapper& occupations) {
    DemographicSummary s;
    s.persona_count = personas.size();
    std::vector<long> chars, words, tokens;
    for (const auto& p : personas) {
        s.gender_shares[normalize_gender(p.metadata.gender_label)] += 1;
        s.age_band_shares[age_band(p.metadata.age)] += 1;
        s.occupation_macro_shares[occupations.macro_for(p.metadata.occupation_raw)] += 1;
        s.country_shares[p.metadata.country_region] += 1;

        std::string text = p.bio;
        for (const auto& [var, entry] : p.variable_mapping) {
            text += '\n';
            text += entry;
        }
        chars.push_back(static_cast<long>(text.size()));
        words.push_back(count_words(text));
        tokens.push_back(count_tokens(text));
    }
    normalize_shares(s.gender_shares, personas.size());
    normalize_shares(s.age_band_shares, personas.size());
    normalize_shares(s.occupation_macro_shares, personas.size());
    normalize_shares(s.country_shares, personas.size());
    s.chars = lexical_stats(chars);
    s.words = lexical_stats(words);
    s.tokens = lexical_stats(tokens);
    return s;
}

}  // namespace audit
