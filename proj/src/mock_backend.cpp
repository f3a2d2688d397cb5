#include "audit/mock_backend.hpp"

#include <array>
#include <regex>
#include <sstream>
#include <vector>

namespace audit {

namespace {

const std::array<const char*, 24> kFirstNames = {
    "Amelia",  "Tomasz", "Ingrid", "Rafael", "Yuki",   "Priya",  "Omar",   "Lena",
    "Mateo",   "Aisha",  "Viktor", "Sofia",  "Daniel", "Mei",    "Johan",  "Fatima",
    "Lucas",   "Eszter", "Anton",  "Nadia",  "Pedro",  "Hana",   "Marcus", "Irene"};

const std::array<const char*, 24> kLastNames = {
    "Kowalski", "Johansson", "Okafor",   "Tanaka",  "Silva",    "Novak",  "Hassan", "Berg",
    "Marino",   "Petrov",    "Schmidt",  "Lindqvist", "Costa",  "Nguyen", "Farkas", "Dubois",
    "Ivanova",  "Moreno",    "Kim",      "Larsen",  "Haddad",   "Weber",  "Santos", "Varga"};

struct MockOccupation {
    const char* title;
};

const std::array<MockOccupation, 22> kOccupations = {{
    {"secondary school teacher"},
    {"university lecturer"},
    {"community outreach coordinator"},
    {"social worker"},
    {"marketing specialist"},
    {"sales representative"},
    {"software developer"},
    {"data analyst"},
    {"operations manager"},
    {"office administrator"},
    {"shop owner"},
    {"hotel receptionist"},
    {"electrician"},
    {"factory technician"},
    {"civil servant"},
    {"urban planner"},
    {"mechanical engineer"},
    {"graphic designer"},
    {"accountant"},
    {"management consultant"},
    {"farmer"},
    {"nurse"},
}};

const std::array<const char*, 28> kCountries = {
    "United States", "Poland",      "Mexico",  "Germany",   "Netherlands", "Philippines", "Brazil",
    "Sweden",        "India",       "Canada",  "Spain",     "Italy",       "Turkey",      "Czechia",
    "United Kingdom", "Saudi Arabia", "Pakistan", "Portugal", "Russia",    "Indonesia",   "Finland",
    "Norway",        "Jordan",      "Hungary", "Argentina", "South Korea", "Egypt",       "Japan"};

const std::array<const char*, 6> kContinents = {"Africa", "Asia", "Europe",
                                                "North America", "South America", "Oceania"};
const std::array<double, 6> kContinentWeights = {0.08, 0.20, 0.34, 0.22, 0.11, 0.05};

const std::array<const char*, 4> kEducation = {"Primary or No Education", "Lower Secondary",
                                               "Upper to Post Secondary", "Tertiary"};
const std::array<double, 4> kEducationWeights = {0.07, 0.13, 0.25, 0.55};

std::string joined_prompt(const ChatRequest& req) {
    std::string all = req.system_text;
    for (const auto& t : req.user_turns) {
        all += '\x1f';
        all += t;
    }
    return all;
}

bool contains(const std::string& hay, const char* needle) {
    return hay.find(needle) != std::string::npos;
}

size_t weighted_pick(SplitMix64& rng, const double* weights, size_t n) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) total += weights[i];
    double x = rng.unit() * total;
    for (size_t i = 0; i < n; ++i) {
        x -= weights[i];
        if (x < 0) return i;
    }
    return n - 1;
}

// Conditioning block lines look like "<variable label> = <level label>".
std::vector<std::pair<std::string, std::string>> parse_conditioning(const std::string& prompt) {
    std::vector<std::pair<std::string, std::string>> pairs;
    size_t start = prompt.find("Conditioning:");
    if (start == std::string::npos) return pairs;
    size_t end = prompt.find("Task:", start);
    std::string block = prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
    for (const auto& line : split_lines(block)) {
        size_t eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 3)));
    }
    return pairs;
}

std::string make_persona_text(SplitMix64& rng, const std::string& prompt, bool malformed) {
    auto conditioning = parse_conditioning(prompt);

    std::string first = kFirstNames[rng.below(kFirstNames.size())];
    std::string last = kLastNames[rng.below(kLastNames.size())];
    int age = 22 + static_cast<int>(rng.below(53));
    double g = rng.unit();
    std::string gender = g < 0.485 ? "man" : g < 0.965 ? "woman" : g < 0.985 ? "non-binary" : "prefer not to say";
    std::string occupation = kOccupations[rng.below(kOccupations.size())].title;
    std::string country = kCountries[rng.below(kCountries.size())];

    std::ostringstream out;
    out << "Profile metadata:\n";
    out << "Name: " << first << " " << last << "\n";
    out << "Age: " << age << "\n";
    out << "Gender: " << gender << "\n";
    out << "Occupation: " << occupation << "\n";
    out << "Country/Region: " << country << "\n\n";
    out << "Short bio:\n";
    out << first << " " << last << " is a " << age << "-year-old " << occupation << " living in "
        << country << ". ";
    out << "Their daily routines, relationships, and outlook closely follow the cultural profile "
           "described below, from how they spend weekends to how they vote. ";
    out << "Friends describe them as consistent: what they value is visible in what they do.\n\n";
    if (malformed) {
        // Drop the cultural-mapping deliverable entirely.
        out << "That is all.\n";
        return out.str();
    }
    out << "Cultural variable mapping:\n";
    int idx = 1;
    for (const auto& [var_label, level_label] : conditioning) {
        out << idx << ". " << var_label << ": Their stance on " << var_label << " is '" << level_label
            << "', and this shows up in everyday choices, conversations, and commitments.\n";
        ++idx;
    }
    return out.str();
}

// Question lines carry "[Answer with a single integer from A to B.]".
std::string make_indicator_answers(SplitMix64& rng, const std::string& prompt, bool malformed) {
    static const std::regex range_re(R"(\[Answer with a single integer from (-?\d+) to (-?\d+)\.\])");
    std::vector<std::pair<long, long>> ranges;
    auto begin = std::sregex_iterator(prompt.begin(), prompt.end(), range_re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        ranges.emplace_back(std::stol((*it)[1]), std::stol((*it)[2]));
    }
    size_t bad_index = ranges.empty() ? 0 : rng.below(ranges.size());
    std::ostringstream out;
    for (size_t i = 0; i < ranges.size(); ++i) {
        auto [lo, hi] = ranges[i];
        long span = hi - lo + 1;
        long value = lo + static_cast<long>(rng.below(static_cast<uint64_t>(span)));
        if (malformed && i == bad_index) value = hi + 1;
        out << (i + 1) << ". " << value << "\n";
    }
    return out.str();
}

std::string make_demographics(SplitMix64& rng, bool malformed) {
    std::string continent = kContinents[weighted_pick(rng, kContinentWeights.data(), kContinentWeights.size())];
    std::string area = rng.unit() < 0.72 ? "Urban" : "Rural";
    std::string education = kEducation[weighted_pick(rng, kEducationWeights.data(), kEducationWeights.size())];
    if (malformed) continent = "Antarctica";
    std::ostringstream out;
    out << "Continent: " << continent << "\n";
    out << "Residential area: " << area << "\n";
    out << "Education: " << education << "\n";
    return out.str();
}

std::string make_wvb_answer(SplitMix64& rng, const std::string& last_turn, bool malformed) {
    static const std::regex scale_re(R"(scale from 1 to (\d+))");
    std::smatch m;
    long k = 5;
    if (std::regex_search(last_turn, m, scale_re)) k = std::stol(m[1]);
    long value = 1 + static_cast<long>(rng.below(static_cast<uint64_t>(k)));
    if (malformed) {
        return "I would say probably " + std::to_string(value) + ", hard to tell.";
    }
    return std::to_string(value);
}

std::string make_mfq_answers(SplitMix64& rng, bool malformed) {
    std::ostringstream out;
    out << "{\"answers\": {";
    int count = malformed ? 35 : 36;
    for (int i = 1; i <= count; ++i) {
        if (i > 1) out << ", ";
        out << "\"" << i << "\": " << (1 + rng.below(5));
    }
    out << "}}";
    return out.str();
}

}  // namespace

MockBackend::RequestClass MockBackend::classify(const ChatRequest& req) {
    const std::string& last = req.user_turns.empty() ? std::string() : req.user_turns.back();
    std::string all = req.system_text;
    for (const auto& t : req.user_turns) all += "\n" + t;

    if (contains(last, "report your demographics")) return RequestClass::WvbDemographics;
    if (contains(last, "Question:") && contains(last, "single integer on the response scale")) {
        return RequestClass::WvbQuestion;
    }
    if (contains(all, "MFQ-2")) return RequestClass::Mfq;
    if (contains(all, "Inglehart") && contains(all, "Questions:")) return RequestClass::IwIndicators;
    if (contains(all, "persona profile") && contains(all, "Conditioning:")) return RequestClass::PersonaGen;
    throw BackendError("mock script does not cover this request class");
}

std::string MockBackend::complete(const ChatRequest& req) {
    RequestClass cls = classify(req);
    std::string prompt = joined_prompt(req);
    SplitMix64 rng(mix64(script_.seed, fnv1a64(prompt)));
    bool malformed = rng.unit() < script_.malformed_rate;

    switch (cls) {
        case RequestClass::PersonaGen:
            return make_persona_text(rng, prompt, malformed);
        case RequestClass::IwIndicators:
            return make_indicator_answers(rng, prompt, malformed);
        case RequestClass::WvbDemographics:
            return make_demographics(rng, malformed);
        case RequestClass::WvbQuestion:
            return make_wvb_answer(rng, req.user_turns.back(), malformed);
        case RequestClass::Mfq:
            return make_mfq_answers(rng, malformed);
    }
    throw BackendError("unreachable");
}

}  // namespace audit
