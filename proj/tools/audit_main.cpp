#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "audit/pipeline.hpp"

namespace {

// 0 success, 2 validation error, 3 backend exhaustion, 4 prerequisite violation.
int run(const std::string& stage, const audit::RunnerOptions& options) {
    try {
        audit::PipelineRunner runner(options);
        if (stage == "all") {
            runner.run_all();
        } else {
            runner.run_stage(stage);
        }
        const auto& s = runner.manifest().stages;
        if (stage == "all") {
            for (const auto& name : audit::pipeline_stage_names()) {
                const auto& st = s.at(name);
                std::cout << name << ": " << st.status << " (ok=" << st.ok
                          << ", failed=" << st.failed << ")\n";
            }
        } else {
            const auto& st = s.at(stage);
            std::cout << stage << ": " << st.status << " (ok=" << st.ok << ", failed=" << st.failed
                      << ")\n";
        }
        return 0;
    } catch (const audit::PrerequisiteError& e) {
        std::cerr << "prerequisite error: " << e.what() << "\n";
        return 4;
    } catch (const audit::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const audit::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Culturally-grounded persona audit pipeline"};
    app.require_subcommand(1);

    audit::RunnerOptions options;
    std::string manifest_path;
    std::optional<std::string> schema, backend, model;
    std::optional<uint64_t> seed;
    std::optional<int> workers, min_cells, greedy_runs, series_bin, retries;
    std::optional<double> min_support, rho, cell_side, malformed_rate, train_fraction, epsilon;
    std::optional<bool> cache;
    std::string data_dir = "data";
    std::map<std::string, std::string> data_overrides;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest_path, "Pipeline manifest file")->required();
        cmd->add_option("--schema", schema, "Cultural schema file");
        cmd->add_option("--backend", backend, "Backend kind: mock or http");
        cmd->add_option("--model", model, "Model tag for the backend");
        cmd->add_option("--seed", seed, "Master seed (recorded in the manifest)");
        cmd->add_option("--workers", workers, "Bounded parallelism for elicitation stages");
        cmd->add_option("--retries", retries, "Format-repair re-asks per elicitation");
        cmd->add_option("--mock-malformed-rate", malformed_rate,
                        "Deterministic malformed-output rate of the mock backend");
        cmd->add_flag("--cache,!--no-cache", cache, "Response cache under the run directory");
        cmd->add_option("--data-dir", data_dir, "Directory with bundled data files");
        cmd->add_option("--indicators", data_overrides["indicators"], "Indicator schema file");
        cmd->add_option("--question-bank", data_overrides["question_bank"], "WVB question bank");
        cmd->add_option("--reference", data_overrides["reference"], "WVB reference distributions");
        cmd->add_option("--oracle-matrix", data_overrides["oracle_matrix"], "Moral oracle matrix");
        cmd->add_option("--mfq-items", data_overrides["mfq_items"], "MFQ-2 item texts");
        cmd->add_option("--item-map", data_overrides["mfq_item_map"], "MFQ item-foundation map");
        cmd->add_option("--min-support", min_support, "Minimum itemset support");
        cmd->add_option("--rho", rho, "Fraction of per-cell maximum support to keep");
        cmd->add_option("--cell-side", cell_side, "Grid cell side length");
        cmd->add_option("--min-cells", min_cells, "Minimum covered cells per reported pattern");
        cmd->add_option("--runs", greedy_runs, "Greedy selection run count");
        cmd->add_option("--train-fraction", train_fraction, "Greedy selection train split");
        cmd->add_option("--epsilon", epsilon, "Greedy selection minimum R^2 gain");
        cmd->add_option("--series-bin", series_bin, "Bin size for the moral comparison series");
        cmd->add_flag("--allow-partial", options.allow_partial,
                      "Run even when prerequisite stages are incomplete");
        cmd->add_flag("--svg", options.emit_svg, "Also emit the IW map as SVG");
    };

    std::vector<std::string> stages = audit::pipeline_stage_names();
    stages.push_back("all");
    std::map<std::string, CLI::App*> subcommands;
    for (const auto& name : stages) {
        CLI::App* cmd = app.add_subcommand(name, name == "all" ? "Run every stage in order"
                                                               : "Run the '" + name + "' stage");
        add_common(cmd);
        subcommands[name] = cmd;
    }

    CLI11_PARSE(app, argc, argv);

    std::string stage;
    for (const auto& [name, cmd] : subcommands) {
        if (cmd->parsed()) stage = name;
    }

    options.manifest_path = manifest_path;
    options.schema_path = schema;
    options.backend_kind = backend;
    options.model_tag = model;
    options.seed = seed;
    options.workers = workers;
    options.max_format_retries = retries;
    options.mock_malformed_rate = malformed_rate;
    options.cache = cache;
    options.min_support = min_support;
    options.rho = rho;
    options.cell_side = cell_side;
    options.min_cells = min_cells;
    options.greedy_runs = greedy_runs;
    options.greedy_train_fraction = train_fraction;
    options.greedy_epsilon = epsilon;
    options.series_bin = series_bin;
    options.data_dir = data_dir;
    for (const auto& [role, path] : data_overrides) {
        if (!path.empty()) options.data_overrides[role] = path;
    }

    return run(stage, options);
}
