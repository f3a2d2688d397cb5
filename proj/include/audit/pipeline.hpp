#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audit/cultural_space.hpp"
#include "audit/llm_gateway.hpp"

namespace audit {

struct PipelineParams {
    uint64_t seed = 0;
    int workers = 1;
    int max_format_retries = 2;
    // mining
    double min_support = 0.2;
    double rho = 0.5;
    double cell_side = 1.0;
    int min_cells = 2;
    // alignment
    bool emd_normalized = true;
    // greedy selection
    int greedy_runs = 50;
    double greedy_train_fraction = 0.8;
    double greedy_epsilon = 1e-4;
    // moral comparison series
    int series_bin = 300;
};

struct BackendSettings {
    std::string kind = "mock";  // mock | http
    std::string model_tag = "mock";
    double mock_malformed_rate = 0.0;
    bool cache = false;
    std::string cache_salt;
};

struct StageStatus {
    std::string status = "pending";  // pending | complete
    long ok = 0;
    long failed = 0;
};

/// On-disk pipeline state: identifies the run, pins every parameter and seed,
/// and tracks per-stage progress. Saved write-temp-then-rename.
struct Manifest {
    std::string run_id;
    std::string schema_path;
    std::string schema_hash;
    BackendSettings backend;
    PipelineParams params;
    std::map<std::string, std::string> data_files;  // role -> path
    std::map<std::string, StageStatus> stages;

    static Manifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

/// Stage names in pipeline order.
const std::vector<std::string>& pipeline_stage_names();

struct RunnerOptions {
    std::filesystem::path manifest_path;
    std::optional<std::string> schema_path;
    std::optional<std::string> backend_kind;
    std::optional<std::string> model_tag;
    std::optional<uint64_t> seed;
    std::optional<int> workers;
    std::optional<double> mock_malformed_rate;
    std::optional<bool> cache;
    std::optional<int> max_format_retries;
    std::optional<double> min_support;
    std::optional<double> rho;
    std::optional<double> cell_side;
    std::optional<int> min_cells;
    std::optional<int> greedy_runs;
    std::optional<double> greedy_train_fraction;
    std::optional<double> greedy_epsilon;
    std::optional<int> series_bin;
    std::filesystem::path data_dir = "data";
    std::map<std::string, std::string> data_overrides;  // role -> path
    bool allow_partial = false;
    bool emit_svg = false;
};

/// Orchestrates the staged audit pipeline around one manifest. Every
/// elicitation stage is resumable: persisted records are keyed by config_id
/// and never recomputed; analysis stages are deterministic batch reductions.
class PipelineRunner {
public:
    explicit PipelineRunner(RunnerOptions options);

    void run_stage(const std::string& stage_name);
    void run_all();

    const Manifest& manifest() const { return manifest_; }
    std::filesystem::path run_dir() const { return run_dir_; }
    std::filesystem::path reports_dir() const { return run_dir_ / "reports"; }

private:
    struct Stores;
    void check_prerequisites(const std::string& stage_name) const;
    void mark_complete(const std::string& stage_name, long ok, long failed);
    std::shared_ptr<ChatBackend> make_backend() const;
    LlmGateway make_gateway() const;
    std::filesystem::path data_file(const std::string& role) const;

    void stage_generate();
    void stage_elicit_iw();
    void stage_project();
    void stage_mine();
    void stage_elicit_wvb();
    void stage_align();
    void stage_elicit_mfq();
    void stage_moral_map();
    void stage_select_core();
    void stage_report();

    RunnerOptions options_;
    Manifest manifest_;
    std::filesystem::path run_dir_;
    CulturalSchema schema_;
};

}  // namespace audit
