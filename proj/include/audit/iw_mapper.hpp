#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "audit/llm_gateway.hpp"
#include "audit/persona_forge.hpp"

namespace audit {

struct Indicator {
    std::string name;
    std::string question;  // WVS-style paraphrase, replaceable via the schema file
    double min_value = 0;
    double max_value = 0;
};

class IndicatorSchema {
public:
    static IndicatorSchema bundled();  // the 10 IW indicators
    static IndicatorSchema load(const std::filesystem::path& path);

    const std::vector<Indicator>& indicators() const { return indicators_; }
    int index_of(std::string_view name) const;

private:
    void validate() const;
    std::vector<Indicator> indicators_;
};

struct IndicatorRecord {
    uint64_t config_id = 0;
    std::string status;  // "ok" or "excluded"
    std::vector<double> values;  // schema order when ok
    std::string error;
};

ChatRequest render_indicator_request(const IndicatorSchema& schema, const PersonaProfile& persona);

/// One numeric answer per indicator on its original scale. Out-of-scale or
/// unparseable answers trigger re-asks; persistent failure excludes the
/// persona from projection (recorded, not thrown).
IndicatorRecord elicit_indicators(const IndicatorSchema& schema, const PersonaProfile& persona,
                                  LlmGateway& gateway, int max_format_retries = 2);

// --- projection numerics --------------------------------------------------

struct StandardizeResult {
    Eigen::MatrixXd z;
    Eigen::VectorXd means;
    Eigen::VectorXd stds;                 // population (1/N) standard deviations
    std::vector<bool> degenerate;         // zero-variance columns, mapped to zeros
};

/// Column-wise z-scoring with population std. Throws ValidationError for N < 2.
StandardizeResult standardize(const Eigen::MatrixXd& matrix);

struct FactorModel {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
    Eigen::MatrixXd loadings;             // p x k, orthonormal columns after rotation
    Eigen::VectorXd variance_explained;   // fraction of total variance per rotated component
    std::vector<bool> degenerate_columns;
    std::vector<int> axis_order;          // orientation record
    std::vector<double> axis_signs;
};

struct PcaVarimaxResult {
    FactorModel model;
    Eigen::MatrixXd scores;  // N x k, standardized data times rotated loadings
    double criterion = 0;    // varimax criterion at convergence
    int sweeps = 0;
};

/// Top-k PCA of standardized data followed by varimax rotation
/// (Kaiser-normalized, iterative pairwise rotations, stop when the criterion
/// improves by less than `tol` or after `max_sweeps` sweeps). Eigenvalue ties
/// break deterministically: descending eigenvalue, then a fixed sign rule.
PcaVarimaxResult pca_varimax(const Eigen::MatrixXd& standardized, int k = 2, double tol = 1e-6,
                             int max_sweeps = 100);

double varimax_criterion(const Eigen::MatrixXd& loadings);

/// Reorders/flips the two rotated components: the component with the larger
/// |loading| on `pc1_anchor_col` becomes PC1 and is signed so that anchor
/// loads with `pc1_sign`; PC2 is signed by its own anchor.
void orient_factors(PcaVarimaxResult& result, int pc1_anchor_col, double pc1_sign,
                    int pc2_anchor_col, double pc2_sign);

/// Fixed affine rescaling onto the Inglehart-Welzel plane.
std::pair<double, double> rescale_to_iw(double pc1, double pc2);

struct IWPoint {
    uint64_t config_id = 0;
    double pc1 = 0, pc2 = 0;
    double z1 = 0, z2 = 0;
};

}  // namespace audit
