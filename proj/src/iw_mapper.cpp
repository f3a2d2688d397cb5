#include "audit/iw_mapper.hpp"

#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace audit {

using nlohmann::json;

IndicatorSchema IndicatorSchema::bundled() {
    IndicatorSchema s;
    // Question texts are paraphrases of the IVS items; swap in licensed
    // wordings via an external schema file without touching code.
    s.indicators_ = {
        {"happiness", "Taking all things together, how happy would you say you are? (1 = very happy, 4 = not at all happy)", 1, 4},
        {"interpersonal_trust", "Generally speaking, would you say that most people can be trusted (1) or that you need to be very careful in dealing with people (0)?", 0, 1},
        {"respect_authority", "If greater respect for authority were to come about in the near future, would that be a good thing (1), something you would not mind (2), or a bad thing (3)?", 1, 3},
        {"petition_signing", "Have you signed a petition (1), might you do it (2), or would you never under any circumstances do it (3)?", 1, 3},
        {"importance_god", "How important is God in your life? (1 = not at all important, 10 = very important)", 1, 10},
        {"justif_homosexuality", "How justifiable do you consider homosexuality? (1 = never justifiable, 10 = always justifiable)", 1, 10},
        {"justif_abortion", "How justifiable do you consider abortion? (1 = never justifiable, 10 = always justifiable)", 1, 10},
        {"national_pride", "How proud are you of your nationality? (1 = very proud, 4 = not at all proud)", 1, 4},
        {"post_materialism", "On balance, do your priorities lean toward economic and physical security (1), a mix of both (2), or self-expression and participation (3)?", 1, 3},
        {"autonomy_index", "Considering qualities children should learn at home, where do you place yourself between obedience and religious faith (-2) and independence and determination (2)?", -2, 2},
    };
    s.validate();
    return s;
}

IndicatorSchema IndicatorSchema::load(const std::filesystem::path& path) {
    IndicatorSchema s;
    json doc;
    try {
        doc = json::parse(read_text_file(path));
        for (const auto& item : doc.at("indicators")) {
            Indicator ind;
            ind.name = item.at("name").get<std::string>();
            ind.question = item.at("question").get<std::string>();
            ind.min_value = item.at("min").get<double>();
            ind.max_value = item.at("max").get<double>();
            s.indicators_.push_back(std::move(ind));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed indicator schema: ") + e.what());
    }
    s.validate();
    return s;
}

void IndicatorSchema::validate() const {
    if (indicators_.empty()) throw ValidationError("indicator schema is empty");
    std::set<std::string> names;
    for (const auto& ind : indicators_) {
        if (!names.insert(ind.name).second) {
            throw ValidationError("duplicate indicator: " + ind.name);
        }
        if (ind.min_value >= ind.max_value) {
            throw ValidationError("indicator '" + ind.name + "' has an empty scale");
        }
    }
}

int IndicatorSchema::index_of(std::string_view name) const {
    for (size_t i = 0; i < indicators_.size(); ++i) {
        if (indicators_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

ChatRequest render_indicator_request(const IndicatorSchema& schema, const PersonaProfile& persona) {
    ChatRequest req;
    req.system_text =
        "You are given a detailed persona profile describing a person's background, attitudes, and "
        "values. Assume the role of this person when answering the following questions.\n\n"
        "Persona profile:\n" +
        persona.raw_text;

    std::ostringstream user;
    user << "Task:\n";
    user << "Answer the following questions as this person would, selecting the option that best "
            "reflects their beliefs and attitudes. Each question corresponds to a cultural value "
            "indicator used in the Inglehart-Welzel cultural map.\n\n";
    user << "Questions:\n";
    const auto& inds = schema.indicators();
    for (size_t i = 0; i < inds.size(); ++i) {
        user << (i + 1) << ". " << inds[i].question << " [Answer with a single integer from "
             << static_cast<long>(inds[i].min_value) << " to " << static_cast<long>(inds[i].max_value)
             << ".]\n";
    }
    user << "\nOutput format:\n";
    user << "Provide one answer per question, following the original WVS response scales (e.g., "
            "binary choices, Likert-type scales, or 1-10 justifiability ratings). Do not include "
            "explanations or additional text.\n";
    req.user_turns.push_back(user.str());
    return req;
}

namespace {

// Accepts "3. 7", "3: 7", "3) 7"; answers may arrive in any line order.
std::optional<std::vector<double>> parse_indicator_answers(const IndicatorSchema& schema,
                                                           const std::string& text,
                                                           std::string* error) {
    static const std::regex line_re(R"(^\s*(\d+)\s*[\.\):]\s*(-?\d+(?:\.\d+)?)\s*$)");
    const size_t n = schema.indicators().size();
    std::vector<std::optional<double>> answers(n);
    for (const auto& line : split_lines(text)) {
        std::smatch m;
        if (!std::regex_match(line, m, line_re)) continue;
        size_t idx = std::stoul(m[1]);
        if (idx < 1 || idx > n) continue;
        answers[idx - 1] = std::stod(m[2]);
    }
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        const auto& ind = schema.indicators()[i];
        if (!answers[i]) {
            *error = "missing answer for question " + std::to_string(i + 1) + " (" + ind.name + ")";
            return std::nullopt;
        }
        if (*answers[i] < ind.min_value || *answers[i] > ind.max_value) {
            *error = "answer " + format_fixed(*answers[i], 0) + " out of scale for " + ind.name;
            return std::nullopt;
        }
        out[i] = *answers[i];
    }
    return out;
}

}  // namespace

IndicatorRecord elicit_indicators(const IndicatorSchema& schema, const PersonaProfile& persona,
                                  LlmGateway& gateway, int max_format_retries) {
    IndicatorRecord rec;
    rec.config_id = persona.config_id;

    ChatRequest req = render_indicator_request(schema, persona);
    std::string error;
    for (int attempt = 0; attempt <= max_format_retries; ++attempt) {
        ChatResponse resp = gateway.complete(req);
        if (auto values = parse_indicator_answers(schema, resp.text, &error)) {
            rec.status = "ok";
            rec.values = std::move(*values);
            return rec;
        }
        req.user_turns.push_back(
            "Your previous response was invalid (" + error +
            "). Answer again: one line per question in the form \"<question number>. <integer>\", "
            "keeping every answer on its original scale.");
    }
    rec.status = "excluded";
    rec.error = error;
    return rec;
}

StandardizeResult standardize(const Eigen::MatrixXd& matrix) {
    const auto n = matrix.rows();
    const auto p = matrix.cols();
    if (n < 2) throw ValidationError("standardize requires at least 2 rows");

    StandardizeResult r;
    r.means = matrix.colwise().mean();
    r.stds = Eigen::VectorXd(p);
    r.degenerate.assign(static_cast<size_t>(p), false);
    r.z = matrix;
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::VectorXd centered = matrix.col(j).array() - r.means(j);
        double var = centered.squaredNorm() / static_cast<double>(n);
        double sd = std::sqrt(var);
        r.stds(j) = sd;
        if (sd <= 0) {
            r.degenerate[static_cast<size_t>(j)] = true;
            r.z.col(j).setZero();
        } else {
            r.z.col(j) = centered / sd;
        }
    }
    return r;
}

double varimax_criterion(const Eigen::MatrixXd& loadings) {
    const double p = static_cast<double>(loadings.rows());
    double total = 0;
    for (Eigen::Index f = 0; f < loadings.cols(); ++f) {
        double sum2 = 0, sum4 = 0;
        for (Eigen::Index j = 0; j < loadings.rows(); ++j) {
            double a2 = loadings(j, f) * loadings(j, f);
            sum2 += a2;
            sum4 += a2 * a2;
        }
        total += sum4 / p - (sum2 / p) * (sum2 / p);
    }
    return total;
}

namespace {

// One pairwise varimax rotation (Kaiser's closed-form angle).
double pairwise_rotation_angle(const Eigen::MatrixXd& a, Eigen::Index p_col, Eigen::Index q_col) {
    const double p = static_cast<double>(a.rows());
    double A = 0, B = 0, C = 0, D = 0;
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        double x = a(j, p_col), y = a(j, q_col);
        double u = x * x - y * y;
        double v = 2 * x * y;
        A += u;
        B += v;
        C += u * u - v * v;
        D += 2 * u * v;
    }
    double num = D - 2 * A * B / p;
    double den = C - (A * A - B * B) / p;
    return 0.25 * std::atan2(num, den);
}

void apply_rotation(Eigen::MatrixXd& m, Eigen::Index p_col, Eigen::Index q_col, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    Eigen::VectorXd col_p = m.col(p_col) * c + m.col(q_col) * s;
    Eigen::VectorXd col_q = -m.col(p_col) * s + m.col(q_col) * c;
    m.col(p_col) = col_p;
    m.col(q_col) = col_q;
}

}  // namespace

PcaVarimaxResult pca_varimax(const Eigen::MatrixXd& standardized, int k, double tol, int max_sweeps) {
    const auto n = standardized.rows();
    const auto p = standardized.cols();
    if (k < 1 || k > p) throw ValidationError("component count out of range");
    if (n < 2) throw ValidationError("pca requires at least 2 rows");

    Eigen::MatrixXd cov = (standardized.transpose() * standardized) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw ValidationError("eigendecomposition failed");

    // Eigen returns ascending order; take the top k, descending.
    Eigen::VectorXd eigenvalues(k);
    Eigen::MatrixXd vectors(p, k);
    for (int i = 0; i < k; ++i) {
        eigenvalues(i) = solver.eigenvalues()(p - 1 - i);
        vectors.col(i) = solver.eigenvectors().col(p - 1 - i);
    }
    if (eigenvalues(std::min(k, 2) - 1) <= 1e-12) {
        throw ValidationError("input rank below requested component count");
    }

    // Deterministic sign rule: the entry of largest magnitude is positive.
    for (int f = 0; f < k; ++f) {
        Eigen::Index arg = 0;
        vectors.col(f).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, f) < 0) vectors.col(f) = -vectors.col(f);
    }

    // Varimax on the orthonormal component columns, Kaiser-normalized rows.
    Eigen::MatrixXd loadings = vectors;
    Eigen::VectorXd communality(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double h = loadings.row(j).norm();
        communality(j) = h;
        if (h > 0) loadings.row(j) /= h;
    }
    double criterion = varimax_criterion(loadings);
    int sweeps = 0;
    for (; sweeps < max_sweeps; ++sweeps) {
        for (int a = 0; a < k - 1; ++a) {
            for (int b = a + 1; b < k; ++b) {
                double angle = pairwise_rotation_angle(loadings, a, b);
                if (std::abs(angle) > 1e-14) apply_rotation(loadings, a, b, angle);
            }
        }
        double next = varimax_criterion(loadings);
        double delta = next - criterion;
        criterion = next;
        if (delta < tol) {
            ++sweeps;
            break;
        }
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        loadings.row(j) *= communality(j);
    }

    PcaVarimaxResult result;
    result.model.loadings = loadings;
    result.model.degenerate_columns.assign(static_cast<size_t>(p), false);
    result.criterion = varimax_criterion(loadings);
    result.sweeps = sweeps;
    result.scores = standardized * loadings;

    // Total variance carried by the rotated components equals the eigenvalue
    // sum of the unrotated ones; per-component shares redistribute.
    double total_variance = cov.trace();
    result.model.variance_explained = Eigen::VectorXd(k);
    for (int f = 0; f < k; ++f) {
        double var_f = loadings.col(f).transpose() * cov * loadings.col(f);
        result.model.variance_explained(f) = var_f / total_variance;
    }
    result.model.axis_order = {};
    result.model.axis_signs = {};
    for (int f = 0; f < k; ++f) {
        result.model.axis_order.push_back(f);
        result.model.axis_signs.push_back(1.0);
    }
    return result;
}

void orient_factors(PcaVarimaxResult& result, int pc1_anchor_col, double pc1_sign,
                    int pc2_anchor_col, double pc2_sign) {
    Eigen::MatrixXd& L = result.model.loadings;
    if (L.cols() != 2) throw ValidationError("orientation expects exactly 2 components");

    // The component with the larger |loading| on the PC1 anchor is PC1.
    if (std::abs(L(pc1_anchor_col, 1)) > std::abs(L(pc1_anchor_col, 0))) {
        L.col(0).swap(L.col(1));
        result.scores.col(0).swap(result.scores.col(1));
        std::swap(result.model.variance_explained(0), result.model.variance_explained(1));
        std::swap(result.model.axis_order[0], result.model.axis_order[1]);
    }
    auto flip = [&](int col, int anchor, double sign) {
        if (L(anchor, col) * sign < 0) {
            L.col(col) = -L.col(col);
            result.scores.col(col) = -result.scores.col(col);
            result.model.axis_signs[static_cast<size_t>(col)] *= -1.0;
        }
    };
    flip(0, pc1_anchor_col, pc1_sign);
    flip(1, pc2_anchor_col, pc2_sign);
}

std::pair<double, double> rescale_to_iw(double pc1, double pc2) {
    return {1.81 * pc1 + 0.38, 1.61 * pc2 - 0.01};
}

}  // namespace audit
