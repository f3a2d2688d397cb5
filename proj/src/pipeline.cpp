#include "audit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "audit/http_backend.hpp"
#include "audit/iw_mapper.hpp"
#include "audit/mock_backend.hpp"
#include "audit/moral_profiler.hpp"
#include "audit/pattern_miner.hpp"
#include "audit/persona_forge.hpp"
#include "audit/wvb_aligner.hpp"

namespace audit {

using nlohmann::json;

namespace {

const std::vector<std::string> kStageNames = {
    "generate", "elicit-iw", "project",    "mine",      "elicit-wvb",
    "align",    "elicit-mfq", "moral-map", "select-core", "report"};

const std::map<std::string, std::vector<std::string>> kPrerequisites = {
    {"generate", {}},
    {"elicit-iw", {"generate"}},
    {"project", {"elicit-iw"}},
    {"mine", {"project"}},
    {"elicit-wvb", {"generate"}},
    {"align", {"elicit-wvb"}},
    {"elicit-mfq", {"generate"}},
    {"moral-map", {"generate"}},
    {"select-core", {"elicit-mfq", "moral-map"}},
    {"report", {"mine", "align", "select-core"}},
};

// --- line-delimited JSON stores keyed by config_id --------------------------

std::map<uint64_t, json> load_store(const std::filesystem::path& path) {
    std::map<uint64_t, json> store;
    if (!std::filesystem::exists(path)) return store;
    auto lines = split_lines(read_text_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        json rec;
        try {
            rec = json::parse(lines[i]);
        } catch (const json::exception&) {
            // A torn trailing line from an interrupted write is recoverable;
            // anything else is a corrupt state file.
            bool is_last = true;
            for (size_t j = i + 1; j < lines.size(); ++j) {
                if (!trim(lines[j]).empty()) is_last = false;
            }
            if (is_last) break;
            throw ValidationError("corrupt state file: " + path.string() + " line " +
                                  std::to_string(i + 1));
        }
        uint64_t id = rec.at("config_id").get<uint64_t>();
        store.emplace(id, std::move(rec));  // keep-first dedupe
    }
    return store;
}

void append_records(const std::filesystem::path& path, const std::vector<json>& records) {
    if (records.empty()) return;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to " + path.string());
    for (const auto& rec : records) out << rec.dump() << "\n";
}

void write_store(const std::filesystem::path& path, const std::vector<json>& records) {
    std::string content;
    for (const auto& rec : records) {
        content += rec.dump();
        content += '\n';
    }
    write_text_file_atomic(path, content);
}

template <typename In, typename Fn>
auto ordered_parallel_map(const std::vector<In>& inputs, int workers, Fn fn) {
    using Out = std::invoke_result_t<Fn, const In&>;
    std::vector<Out> out(inputs.size());
    if (workers <= 1 || inputs.size() <= 1) {
        for (size_t i = 0; i < inputs.size(); ++i) out[i] = fn(inputs[i]);
        return out;
    }
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= inputs.size() || failed.load()) return;
            try {
                out[i] = fn(inputs[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int n_threads = std::min<int>(workers, static_cast<int>(inputs.size()));
    pool.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

PersonaProfile profile_from_record(const json& rec) {
    PersonaProfile p;
    p.config_id = rec.at("config_id").get<uint64_t>();
    p.metadata.name = rec.at("metadata").at("name").get<std::string>();
    p.metadata.age = rec.at("metadata").at("age").get<int>();
    p.metadata.gender_label = rec.at("metadata").value("gender", "");
    p.metadata.occupation_raw = rec.at("metadata").at("occupation").get<std::string>();
    p.metadata.country_region = rec.at("metadata").at("country").get<std::string>();
    p.bio = rec.at("bio").get<std::string>();
    for (const auto& [k, v] : rec.at("mapping").items()) {
        p.variable_mapping[k] = v.get<std::string>();
    }
    p.raw_text = rec.at("raw_text").get<std::string>();
    return p;
}

json record_from_persona(const PersonaRecord& rec) {
    json j;
    j["config_id"] = rec.config_id;
    j["status"] = rec.status;
    if (rec.profile) {
        const auto& p = *rec.profile;
        j["metadata"] = {{"name", p.metadata.name},
                         {"age", p.metadata.age},
                         {"gender", p.metadata.gender_label},
                         {"occupation", p.metadata.occupation_raw},
                         {"country", p.metadata.country_region}};
        j["bio"] = p.bio;
        j["mapping"] = p.variable_mapping;
        j["raw_text"] = p.raw_text;
    } else {
        j["error"] = rec.error;
    }
    return j;
}

std::string percent(double fraction, int precision = 3) {
    return format_fixed(100.0 * fraction, precision);
}

}  // namespace

const std::vector<std::string>& pipeline_stage_names() { return kStageNames; }

// --- manifest ----------------------------------------------------------------

Manifest Manifest::load(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("corrupt manifest: " + std::string(e.what()));
    }
    Manifest m;
    m.run_id = doc.at("run_id").get<std::string>();
    m.schema_path = doc.at("schema_path").get<std::string>();
    m.schema_hash = doc.at("schema_hash").get<std::string>();
    const auto& b = doc.at("backend");
    m.backend.kind = b.at("kind").get<std::string>();
    m.backend.model_tag = b.value("model_tag", "mock");
    m.backend.mock_malformed_rate = b.value("malformed_rate", 0.0);
    m.backend.cache = b.value("cache", false);
    m.backend.cache_salt = b.value("cache_salt", "");
    const auto& p = doc.at("params");
    m.params.seed = p.at("seed").get<uint64_t>();
    m.params.workers = p.value("workers", 1);
    m.params.max_format_retries = p.value("max_format_retries", 2);
    m.params.min_support = p.value("min_support", 0.2);
    m.params.rho = p.value("rho", 0.5);
    m.params.cell_side = p.value("cell_side", 1.0);
    m.params.min_cells = p.value("min_cells", 2);
    m.params.emd_normalized = p.value("emd_normalized", true);
    m.params.greedy_runs = p.value("greedy_runs", 50);
    m.params.greedy_train_fraction = p.value("greedy_train_fraction", 0.8);
    m.params.greedy_epsilon = p.value("greedy_epsilon", 1e-4);
    m.params.series_bin = p.value("series_bin", 300);
    if (doc.contains("data_files")) {
        for (const auto& [k, v] : doc["data_files"].items()) {
            m.data_files[k] = v.get<std::string>();
        }
    }
    if (doc.contains("stages")) {
        for (const auto& [k, v] : doc["stages"].items()) {
            StageStatus s;
            s.status = v.at("status").get<std::string>();
            s.ok = v.value("ok", 0L);
            s.failed = v.value("failed", 0L);
            m.stages[k] = s;
        }
    }
    return m;
}

void Manifest::save(const std::filesystem::path& path) const {
    json doc;
    doc["run_id"] = run_id;
    doc["schema_path"] = schema_path;
    doc["schema_hash"] = schema_hash;
    doc["backend"] = {{"kind", backend.kind},
                      {"model_tag", backend.model_tag},
                      {"malformed_rate", backend.mock_malformed_rate},
                      {"cache", backend.cache},
                      {"cache_salt", backend.cache_salt}};
    doc["params"] = {{"seed", params.seed},
                     {"workers", params.workers},
                     {"max_format_retries", params.max_format_retries},
                     {"min_support", params.min_support},
                     {"rho", params.rho},
                     {"cell_side", params.cell_side},
                     {"min_cells", params.min_cells},
                     {"emd_normalized", params.emd_normalized},
                     {"greedy_runs", params.greedy_runs},
                     {"greedy_train_fraction", params.greedy_train_fraction},
                     {"greedy_epsilon", params.greedy_epsilon},
                     {"series_bin", params.series_bin}};
    doc["data_files"] = data_files;
    json stages_json = json::object();
    for (const auto& [name, s] : stages) {
        stages_json[name] = {{"status", s.status}, {"ok", s.ok}, {"failed", s.failed}};
    }
    doc["stages"] = stages_json;
    write_text_file_atomic(path, doc.dump(2));
}

// --- runner -------------------------------------------------------------------

PipelineRunner::PipelineRunner(RunnerOptions options) : options_(std::move(options)) {
    run_dir_ = options_.manifest_path.parent_path();
    if (run_dir_.empty()) run_dir_ = ".";
    std::filesystem::create_directories(run_dir_);

    bool manifest_exists = std::filesystem::exists(options_.manifest_path);
    if (manifest_exists) {
        manifest_ = Manifest::load(options_.manifest_path);
    }

    // Schema: explicit flag > manifest record > bundled default.
    std::string schema_path;
    if (options_.schema_path) {
        schema_path = *options_.schema_path;
    } else if (manifest_exists) {
        schema_path = manifest_.schema_path;
    } else {
        auto bundled = options_.data_dir / "default_schema.json";
        schema_path = std::filesystem::exists(bundled) ? bundled.string() : "<built-in>";
    }
    schema_ = schema_path == "<built-in>" ? CulturalSchema::default_schema()
                                          : CulturalSchema::load(schema_path);

    if (!manifest_exists) {
        manifest_.schema_path = schema_path;
        manifest_.schema_hash = schema_.hash();
    } else {
        if (manifest_.schema_hash != schema_.hash()) {
            throw ValidationError("schema file no longer matches the manifest's schema hash");
        }
    }

    auto apply = [](auto& target, const auto& opt) {
        if (opt) target = *opt;
    };
    apply(manifest_.backend.kind, options_.backend_kind);
    apply(manifest_.backend.model_tag, options_.model_tag);
    apply(manifest_.backend.mock_malformed_rate, options_.mock_malformed_rate);
    apply(manifest_.backend.cache, options_.cache);
    apply(manifest_.params.seed, options_.seed);
    apply(manifest_.params.workers, options_.workers);
    apply(manifest_.params.max_format_retries, options_.max_format_retries);
    apply(manifest_.params.min_support, options_.min_support);
    apply(manifest_.params.rho, options_.rho);
    apply(manifest_.params.cell_side, options_.cell_side);
    apply(manifest_.params.min_cells, options_.min_cells);
    apply(manifest_.params.greedy_runs, options_.greedy_runs);
    apply(manifest_.params.greedy_train_fraction, options_.greedy_train_fraction);
    apply(manifest_.params.greedy_epsilon, options_.greedy_epsilon);
    apply(manifest_.params.series_bin, options_.series_bin);

    if (manifest_.run_id.empty()) {
        manifest_.run_id =
            "run-" + content_key(manifest_.schema_hash + ":" + std::to_string(manifest_.params.seed))
                         .substr(0, 12);
    }
    for (const auto& [role, path] : options_.data_overrides) {
        manifest_.data_files[role] = path;
    }
    for (const auto& name : kStageNames) {
        manifest_.stages.try_emplace(name, StageStatus{});
    }
    manifest_.save(options_.manifest_path);
}

std::filesystem::path PipelineRunner::data_file(const std::string& role) const {
    auto it = manifest_.data_files.find(role);
    if (it != manifest_.data_files.end()) return it->second;
    static const std::map<std::string, std::string> defaults = {
        {"indicators", "iw_indicators.json"},
        {"question_bank", "wvb_question_bank.json"},
        {"reference", "wvb_reference_sample.csv"},
        {"oracle_matrix", "oracle_matrix_sample.csv"},
        {"mfq_items", "mfq_items.json"},
        {"mfq_item_map", "mfq_item_map.csv"},
    };
    auto def = defaults.find(role);
    if (def == defaults.end()) throw ValidationError("unknown data role: " + role);
    return options_.data_dir / def->second;
}

std::shared_ptr<ChatBackend> PipelineRunner::make_backend() const {
    if (manifest_.backend.kind == "mock") {
        return std::make_shared<MockBackend>(
            MockScript{manifest_.params.seed, manifest_.backend.mock_malformed_rate});
    }
    if (manifest_.backend.kind == "http") {
        auto cfg = HttpBackendConfig::from_environment();
        if (!manifest_.backend.model_tag.empty()) cfg.default_model = manifest_.backend.model_tag;
        return std::make_shared<HttpBackend>(cfg);
    }
    throw ValidationError("unknown backend kind: " + manifest_.backend.kind);
}

LlmGateway PipelineRunner::make_gateway() const {
    GatewayOptions opts;
    if (manifest_.backend.cache) opts.cache_dir = run_dir_ / "cache";
    opts.cache_salt = manifest_.backend.cache_salt;
    return LlmGateway(make_backend(), opts);
}

void PipelineRunner::check_prerequisites(const std::string& stage_name) const {
    auto it = kPrerequisites.find(stage_name);
    if (it == kPrerequisites.end()) throw ValidationError("unknown stage: " + stage_name);
    if (options_.allow_partial) return;
    for (const auto& dep : it->second) {
        auto status = manifest_.stages.find(dep);
        if (status == manifest_.stages.end() || status->second.status != "complete") {
            throw PrerequisiteError("stage '" + stage_name + "' requires completed stage '" + dep +
                                    "'");
        }
    }
}

void PipelineRunner::mark_complete(const std::string& stage_name, long ok, long failed) {
    auto& s = manifest_.stages[stage_name];
    s.status = "complete";
    s.ok = ok;
    s.failed = failed;
    manifest_.save(options_.manifest_path);
}

void PipelineRunner::run_stage(const std::string& stage_name) {
    check_prerequisites(stage_name);
    if (stage_name == "generate") stage_generate();
    else if (stage_name == "elicit-iw") stage_elicit_iw();
    else if (stage_name == "project") stage_project();
    else if (stage_name == "mine") stage_mine();
    else if (stage_name == "elicit-wvb") stage_elicit_wvb();
    else if (stage_name == "align") stage_align();
    else if (stage_name == "elicit-mfq") stage_elicit_mfq();
    else if (stage_name == "moral-map") stage_moral_map();
    else if (stage_name == "select-core") stage_select_core();
    else if (stage_name == "report") stage_report();
    else throw ValidationError("unknown stage: " + stage_name);
}

void PipelineRunner::run_all() {
    for (const auto& name : kStageNames) run_stage(name);
}

// --- stages --------------------------------------------------------------------

void PipelineRunner::stage_generate() {
    auto path = run_dir_ / "personas.jsonl";
    auto store = load_store(path);

    std::vector<CulturalConfiguration> missing;
    enumerate_configurations(schema_, [&](const CulturalConfiguration& c) {
        if (!store.count(c.config_id)) missing.push_back(c);
    });

    LlmGateway gateway = make_gateway();
    auto results = ordered_parallel_map(missing, manifest_.params.workers,
                                        [&](const CulturalConfiguration& c) {
                                            return record_from_persona(generate_persona(
                                                schema_, c, gateway,
                                                manifest_.params.max_format_retries));
                                        });
    append_records(path, results);
    for (auto& rec : results) store.emplace(rec.at("config_id").get<uint64_t>(), std::move(rec));

    long ok = 0, failed = 0;
    for (const auto& [id, rec] : store) {
        (rec.at("status") == "ok" ? ok : failed) += 1;
    }
    mark_complete("generate", ok, failed);
}

void PipelineRunner::stage_elicit_iw() {
    IndicatorSchema indicators = std::filesystem::exists(data_file("indicators"))
                                     ? IndicatorSchema::load(data_file("indicators"))
                                     : IndicatorSchema::bundled();
    auto personas = load_store(run_dir_ / "personas.jsonl");
    auto path = run_dir_ / "indicators.jsonl";
    auto store = load_store(path);

    std::vector<PersonaProfile> pending;
    for (const auto& [id, rec] : personas) {
        if (rec.at("status") != "ok" || store.count(id)) continue;
        pending.push_back(profile_from_record(rec));
    }

    LlmGateway gateway = make_gateway();
    auto results = ordered_parallel_map(
        pending, manifest_.params.workers, [&](const PersonaProfile& p) {
            IndicatorRecord rec =
                elicit_indicators(indicators, p, gateway, manifest_.params.max_format_retries);
            json j;
            j["config_id"] = rec.config_id;
            j["status"] = rec.status;
            if (rec.status == "ok") {
                json values = json::object();
                for (size_t i = 0; i < indicators.indicators().size(); ++i) {
                    values[indicators.indicators()[i].name] = rec.values[i];
                }
                j["values"] = std::move(values);
            } else {
                j["error"] = rec.error;
            }
            return j;
        });
    append_records(path, results);
    for (auto& rec : results) store.emplace(rec.at("config_id").get<uint64_t>(), std::move(rec));

    long ok = 0, failed = 0;
    for (const auto& [id, rec] : store) {
        (rec.at("status") == "ok" ? ok : failed) += 1;
    }
    mark_complete("elicit-iw", ok, failed);
}

void PipelineRunner::stage_project() {
    IndicatorSchema indicators = std::filesystem::exists(data_file("indicators"))
                                     ? IndicatorSchema::load(data_file("indicators"))
                                     : IndicatorSchema::bundled();
    auto store = load_store(run_dir_ / "indicators.jsonl");

    std::vector<uint64_t> ids;
    std::vector<std::vector<double>> rows;
    for (const auto& [id, rec] : store) {
        if (rec.at("status") != "ok") continue;
        std::vector<double> row;
        for (const auto& ind : indicators.indicators()) {
            row.push_back(rec.at("values").at(ind.name).get<double>());
        }
        ids.push_back(id);
        rows.push_back(std::move(row));
    }
    if (ids.size() <= indicators.indicators().size()) {
        throw ValidationError("projection needs more personas than indicators (have " +
                              std::to_string(ids.size()) + ")");
    }

    Eigen::MatrixXd matrix(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(indicators.indicators().size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < rows[i].size(); ++j) {
            matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }

    auto standardized = standardize(matrix);
    auto result = pca_varimax(standardized.z, 2);
    result.model.means = standardized.means;
    result.model.stds = standardized.stds;
    result.model.degenerate_columns = standardized.degenerate;

    int anchor1 = indicators.index_of("justif_homosexuality");
    int anchor2 = indicators.index_of("importance_god");
    bool oriented = anchor1 >= 0 && anchor2 >= 0;
    if (oriented) orient_factors(result, anchor1, +1.0, anchor2, -1.0);

    std::vector<json> points;
    for (size_t i = 0; i < ids.size(); ++i) {
        double pc1 = result.scores(static_cast<Eigen::Index>(i), 0);
        double pc2 = result.scores(static_cast<Eigen::Index>(i), 1);
        auto [z1, z2] = rescale_to_iw(pc1, pc2);
        json j;
        j["config_id"] = ids[i];
        j["pc1"] = pc1;
        j["pc2"] = pc2;
        j["z1"] = z1;
        j["z2"] = z2;
        points.push_back(std::move(j));
    }
    write_store(run_dir_ / "iw_points.jsonl", points);

    json model;
    model["indicators"] = json::array();
    for (const auto& ind : indicators.indicators()) model["indicators"].push_back(ind.name);
    model["means"] = std::vector<double>(result.model.means.data(),
                                         result.model.means.data() + result.model.means.size());
    model["stds"] = std::vector<double>(result.model.stds.data(),
                                        result.model.stds.data() + result.model.stds.size());
    json loadings = json::array();
    for (Eigen::Index r = 0; r < result.model.loadings.rows(); ++r) {
        loadings.push_back({result.model.loadings(r, 0), result.model.loadings(r, 1)});
    }
    model["loadings"] = std::move(loadings);
    model["variance_explained"] = {result.model.variance_explained(0),
                                   result.model.variance_explained(1)};
    model["degenerate_columns"] = result.model.degenerate_columns;
    model["orientation"] = oriented ? "anchored" : "unanchored";
    model["axis_order"] = result.model.axis_order;
    model["axis_signs"] = result.model.axis_signs;
    model["varimax_criterion"] = result.criterion;
    model["varimax_sweeps"] = result.sweeps;
    write_text_file_atomic(run_dir_ / "factor_model.json", model.dump(2));

    mark_complete("project", static_cast<long>(ids.size()), 0);
}

void PipelineRunner::stage_mine() {
    auto points_store = load_store(run_dir_ / "iw_points.jsonl");
    std::vector<IWPoint> points;
    for (const auto& [id, rec] : points_store) {
        IWPoint p;
        p.config_id = id;
        p.pc1 = rec.at("pc1").get<double>();
        p.pc2 = rec.at("pc2").get<double>();
        p.z1 = rec.at("z1").get<double>();
        p.z2 = rec.at("z2").get<double>();
        points.push_back(p);
    }

    auto cells = grid_assign(points, manifest_.params.cell_side);

    std::vector<json> cell_records;
    std::vector<std::pair<GridCellKey, std::vector<uint64_t>>> cell_list(cells.begin(), cells.end());
    auto mined = ordered_parallel_map(
        cell_list, manifest_.params.workers,
        [&](const std::pair<GridCellKey, std::vector<uint64_t>>& cell) {
            std::vector<Transaction> transactions;
            for (uint64_t id : cell.second) {
                auto config = decode_configuration(schema_, id);
                Transaction t;
                for (size_t vi = 0; vi < schema_.variable_count(); ++vi) {
                    t.push_back(schema_.item_id(static_cast<int>(vi), config.level_indices[vi]));
                }
                transactions.push_back(std::move(t));
            }
            CellMiningResult result;
            result.cell = cell.first;
            result.n_transactions = transactions.size();
            result.patterns = mine_closed_itemsets(transactions, manifest_.params.min_support);
            return result;
        });

    std::vector<json> pattern_records;
    long total_patterns = 0;
    for (size_t i = 0; i < cell_list.size(); ++i) {
        json cell_rec;
        cell_rec["ix"] = cell_list[i].first.ix;
        cell_rec["iy"] = cell_list[i].first.iy;
        cell_rec["members"] = cell_list[i].second;
        cell_records.push_back(std::move(cell_rec));

        json pat_rec;
        pat_rec["ix"] = cell_list[i].first.ix;
        pat_rec["iy"] = cell_list[i].first.iy;
        pat_rec["n_members"] = mined[i].n_transactions;
        json patterns = json::array();
        for (const auto& p : mined[i].patterns) {
            json jp;
            json items = json::array();
            for (Item item : p.items) items.push_back(schema_.item_string(item));
            jp["items"] = std::move(items);
            jp["count"] = p.count;
            jp["support"] = p.support;
            patterns.push_back(std::move(jp));
            ++total_patterns;
        }
        pat_rec["patterns"] = std::move(patterns);
        pattern_records.push_back(std::move(pat_rec));
    }
    write_store(run_dir_ / "cells.jsonl", cell_records);
    write_store(run_dir_ / "cell_patterns.jsonl", pattern_records);

    AggregationParams agg_params;
    agg_params.rho = manifest_.params.rho;
    agg_params.min_cells = manifest_.params.min_cells;
    agg_params.itemset_string = [this](const std::vector<Item>& items) {
        std::string s;
        for (size_t i = 0; i < items.size(); ++i) {
            if (i) s += "; ";
            s += schema_.item_string(items[i]);
        }
        return s;
    };
    auto aggregated = filter_and_aggregate(mined, agg_params);

    std::vector<json> agg_records;
    for (const auto& ap : aggregated) {
        json j;
        json items = json::array();
        for (Item item : ap.items) items.push_back(schema_.item_string(item));
        j["items"] = std::move(items);
        j["label"] = ap.itemset_label;
        j["n_cells"] = ap.n_cells;
        j["avg_support"] = ap.avg_support;
        j["support_min"] = ap.support_min;
        j["support_max"] = ap.support_max;
        j["avg_cell_personas"] = ap.avg_cell_personas;
        agg_records.push_back(std::move(j));
    }
    // Stable store order: aggregation's own report order.
    std::string content;
    for (const auto& rec : agg_records) content += rec.dump() + "\n";
    write_text_file_atomic(run_dir_ / "aggregated_patterns.jsonl", content);

    mark_complete("mine", total_patterns, 0);
}

void PipelineRunner::stage_elicit_wvb() {
    WvbQuestionBank bank = WvbQuestionBank::load(data_file("question_bank"));
    auto personas = load_store(run_dir_ / "personas.jsonl");
    auto path = run_dir_ / "wvb_responses.jsonl";
    auto store = load_store(path);

    std::vector<PersonaProfile> pending;
    for (const auto& [id, rec] : personas) {
        if (rec.at("status") != "ok" || store.count(id)) continue;
        pending.push_back(profile_from_record(rec));
    }

    LlmGateway gateway = make_gateway();
    auto results = ordered_parallel_map(
        pending, manifest_.params.workers, [&](const PersonaProfile& p) {
            WvbResponse rec = elicit_wvb(p, bank, gateway, manifest_.params.max_format_retries);
            json j;
            j["config_id"] = rec.config_id;
            j["status"] = rec.status;
            if (rec.status == "ok") {
                j["continent"] = rec.triple.continent;
                j["area"] = rec.triple.area;
                j["education"] = rec.triple.education;
                j["answers"] = rec.answers;
            } else {
                j["error"] = rec.error;
            }
            return j;
        });
    append_records(path, results);
    for (auto& rec : results) store.emplace(rec.at("config_id").get<uint64_t>(), std::move(rec));

    long ok = 0, failed = 0;
    for (const auto& [id, rec] : store) {
        (rec.at("status") == "ok" ? ok : failed) += 1;
    }
    mark_complete("elicit-wvb", ok, failed);
}

void PipelineRunner::stage_align() {
    WvbQuestionBank bank = WvbQuestionBank::load(data_file("question_bank"));
    ReferenceTable reference = ReferenceTable::load(data_file("reference"));
    auto store = load_store(run_dir_ / "wvb_responses.jsonl");

    std::vector<WvbResponse> responses;
    std::map<DemographicTriple, long> counts;
    for (const auto& [id, rec] : store) {
        if (rec.at("status") != "ok") continue;
        WvbResponse r;
        r.config_id = id;
        r.status = "ok";
        r.triple = {rec.at("continent").get<std::string>(), rec.at("area").get<std::string>(),
                    rec.at("education").get<std::string>()};
        r.answers = rec.at("answers").get<std::vector<int>>();
        counts[r.triple] += 1;
        responses.push_back(std::move(r));
    }

    auto distributions = build_group_distributions(responses, bank);
    AlignmentReport report = alignment_report(distributions, counts, reference);

    std::vector<json> pair_records;
    for (const auto& pair : report.pairs) {
        json j;
        j["continent"] = pair.triple.continent;
        j["area"] = pair.triple.area;
        j["education"] = pair.triple.education;
        j["question_id"] = pair.question_id;
        j["emd"] = pair.emd_normalized;
        j["emd_raw"] = pair.emd_raw;
        pair_records.push_back(std::move(j));
    }
    write_store(run_dir_ / "alignment_pairs.jsonl", pair_records);

    std::vector<json> group_records;
    for (const auto& g : report.groups) {
        json j;
        j["continent"] = g.triple.continent;
        j["area"] = g.triple.area;
        j["education"] = g.triple.education;
        j["n_personas"] = g.persona_count;
        j["questions_scored"] = g.questions_scored;
        j["mean_emd"] = g.mean_emd;
        j["score"] = g.score;
        j["pct_below_04"] = g.pct_below_04;
        j["pct_below_02"] = g.pct_below_02;
        group_records.push_back(std::move(j));
    }
    std::string content;
    for (const auto& rec : group_records) content += rec.dump() + "\n";
    write_text_file_atomic(run_dir_ / "alignment_groups.jsonl", content);

    json summary;
    summary["groups_scored"] = report.groups.size();
    summary["reference_groups"] = reference.group_count();
    summary["unweighted_score"] = report.unweighted_score;
    summary["weighted_score"] = report.weighted_score;
    summary["unweighted_pct04"] = report.unweighted_pct04;
    summary["weighted_pct04"] = report.weighted_pct04;
    summary["unweighted_pct02"] = report.unweighted_pct02;
    summary["weighted_pct02"] = report.weighted_pct02;
    json unsupported = json::array();
    for (const auto& t : report.unsupported_groups) unsupported.push_back(t.label());
    summary["unsupported_groups"] = std::move(unsupported);
    write_text_file_atomic(run_dir_ / "alignment_summary.json", summary.dump(2));

    mark_complete("align", static_cast<long>(report.groups.size()), 0);
}

void PipelineRunner::stage_elicit_mfq() {
    MfqItems items = std::filesystem::exists(data_file("mfq_items"))
                         ? MfqItems::load(data_file("mfq_items"))
                         : MfqItems::bundled_placeholder();
    MfqItemMap item_map = std::filesystem::exists(data_file("mfq_item_map"))
                              ? MfqItemMap::load(data_file("mfq_item_map"))
                              : MfqItemMap::bundled_placeholder();
    auto personas = load_store(run_dir_ / "personas.jsonl");
    auto path = run_dir_ / "mfq_records.jsonl";
    auto store = load_store(path);

    std::vector<PersonaProfile> pending;
    for (const auto& [id, rec] : personas) {
        if (rec.at("status") != "ok" || store.count(id)) continue;
        pending.push_back(profile_from_record(rec));
    }

    LlmGateway gateway = make_gateway();
    auto results = ordered_parallel_map(
        pending, manifest_.params.workers, [&](const PersonaProfile& p) {
            MfqRecord rec =
                elicit_mfq(p, items, item_map, gateway, manifest_.params.max_format_retries);
            json j;
            j["config_id"] = rec.config_id;
            j["status"] = rec.status;
            if (rec.status == "ok") {
                j["answers"] = rec.answers;
                json scores = json::object();
                for (int f = 0; f < kFoundationCount; ++f) {
                    scores[kFoundations[static_cast<size_t>(f)]] =
                        rec.vector->scores[static_cast<size_t>(f)];
                }
                j["scores"] = std::move(scores);
            } else {
                j["error"] = rec.error;
            }
            return j;
        });
    append_records(path, results);
    for (auto& rec : results) store.emplace(rec.at("config_id").get<uint64_t>(), std::move(rec));

    long ok = 0, failed = 0;
    for (const auto& [id, rec] : store) {
        (rec.at("status") == "ok" ? ok : failed) += 1;
    }
    mark_complete("elicit-mfq", ok, failed);
}

void PipelineRunner::stage_moral_map() {
    OracleMatrix matrix = OracleMatrix::load(data_file("oracle_matrix"), schema_);
    auto personas = load_store(run_dir_ / "personas.jsonl");

    std::vector<int> all_vars;
    for (size_t vi = 0; vi < schema_.variable_count(); ++vi) all_vars.push_back(static_cast<int>(vi));

    std::vector<json> records;
    for (const auto& [id, rec] : personas) {
        if (rec.at("status") != "ok") continue;
        auto config = decode_configuration(schema_, id);
        MoralVector v = mft_inferred_vector(schema_, config, matrix, all_vars);
        json j;
        j["config_id"] = id;
        json scores = json::object();
        for (int f = 0; f < kFoundationCount; ++f) {
            scores[kFoundations[static_cast<size_t>(f)]] = v.scores[static_cast<size_t>(f)];
        }
        j["scores"] = std::move(scores);
        records.push_back(std::move(j));
    }
    write_store(run_dir_ / "mft_vectors.jsonl", records);
    mark_complete("moral-map", static_cast<long>(records.size()), 0);
}

void PipelineRunner::stage_select_core() {
    OracleMatrix matrix = OracleMatrix::load(data_file("oracle_matrix"), schema_);
    auto mfq_store = load_store(run_dir_ / "mfq_records.jsonl");

    std::vector<CulturalConfiguration> configs;
    std::array<std::vector<double>, kFoundationCount> scores;
    for (const auto& [id, rec] : mfq_store) {
        if (rec.at("status") != "ok") continue;
        configs.push_back(decode_configuration(schema_, id));
        for (int f = 0; f < kFoundationCount; ++f) {
            scores[static_cast<size_t>(f)].push_back(
                rec.at("scores").at(kFoundations[static_cast<size_t>(f)]).get<double>());
        }
    }

    GreedyParams params;
    params.runs = manifest_.params.greedy_runs;
    params.train_fraction = manifest_.params.greedy_train_fraction;
    params.epsilon = manifest_.params.greedy_epsilon;
    params.seed = mix64(manifest_.params.seed, fnv1a64("select-core"));

    std::string content;
    for (int f = 0; f < kFoundationCount; ++f) {
        CoreSetResult result =
            greedy_core_set_selection(f, scores[static_cast<size_t>(f)], configs, schema_, matrix,
                                      params);
        json j;
        j["foundation"] = kFoundations[static_cast<size_t>(f)];
        json core = json::array();
        for (int v : result.core_set) {
            core.push_back(schema_.variables()[static_cast<size_t>(v)].name);
        }
        j["core_set"] = std::move(core);
        j["mean_jaccard"] = result.mean_jaccard;
        json kdist = json::object();
        for (const auto& [k, count] : result.k_distribution) {
            kdist[std::to_string(k)] = count;
        }
        j["k_distribution"] = std::move(kdist);
        json support = json::object();
        for (const auto& [v, frac] : result.variable_support) {
            support[schema_.variables()[static_cast<size_t>(v)].name] = frac;
        }
        j["variable_support"] = std::move(support);
        long aborted = 0;
        for (const auto& run : result.runs) {
            if (run.aborted) ++aborted;
        }
        j["runs"] = result.runs.size();
        j["runs_aborted"] = aborted;
        content += j.dump() + "\n";
    }
    write_text_file_atomic(run_dir_ / "core_sets.jsonl", content);
    mark_complete("select-core", kFoundationCount, 0);
}

namespace {

std::vector<json> load_jsonl_rows(const std::filesystem::path& path) {
    std::vector<json> rows;
    if (!std::filesystem::exists(path)) return rows;
    for (const auto& line : split_lines(read_text_file(path))) {
        if (trim(line).empty()) continue;
        rows.push_back(json::parse(line));
    }
    return rows;
}

}  // namespace

void PipelineRunner::stage_report() {
    auto reports = reports_dir();
    std::filesystem::create_directories(reports);

    // Table 1 layout: closed frequent itemsets aggregated across cells.
    {
        auto rows = load_jsonl_rows(run_dir_ / "aggregated_patterns.jsonl");
        std::string csv = "itemset,n_cells,avg_support,support_min,support_max,avg_cell_personas\n";
        for (const auto& r : rows) {
            csv += csv_escape(r.at("label").get<std::string>()) + "," +
                   std::to_string(r.at("n_cells").get<int>()) + "," +
                   format_fixed(r.at("avg_support").get<double>(), 3) + "," +
                   format_fixed(r.at("support_min").get<double>(), 3) + "," +
                   format_fixed(r.at("support_max").get<double>(), 3) + "," +
                   format_fixed(r.at("avg_cell_personas").get<double>(), 1) + "\n";
        }
        write_text_file_atomic(reports / "patterns.csv", csv);
    }

    // Table 2 layout: global alignment aggregation.
    {
        json summary = json::parse(read_text_file(run_dir_ / "alignment_summary.json"));
        std::string csv = "aggregation,score,pct_emd_lt_04,pct_emd_lt_02\n";
        csv += "unweighted," + format_fixed(summary.at("unweighted_score").get<double>(), 3) + "," +
               format_fixed(summary.at("unweighted_pct04").get<double>(), 2) + "," +
               format_fixed(summary.at("unweighted_pct02").get<double>(), 2) + "\n";
        csv += "weighted," + format_fixed(summary.at("weighted_score").get<double>(), 3) + "," +
               format_fixed(summary.at("weighted_pct04").get<double>(), 2) + "," +
               format_fixed(summary.at("weighted_pct02").get<double>(), 2) + "\n";
        write_text_file_atomic(reports / "alignment.csv", csv);
    }

    // Table 10 layout: per-group breakdown.
    {
        auto rows = load_jsonl_rows(run_dir_ / "alignment_groups.jsonl");
        std::string csv = "continent,area,education,n_personas,score,pct_emd_lt_04,pct_emd_lt_02\n";
        for (const auto& r : rows) {
            csv += csv_escape(r.at("continent").get<std::string>()) + "," +
                   csv_escape(r.at("area").get<std::string>()) + "," +
                   csv_escape(r.at("education").get<std::string>()) + "," +
                   std::to_string(r.at("n_personas").get<long>()) + "," +
                   format_fixed(r.at("score").get<double>(), 3) + "," +
                   format_fixed(r.at("pct_below_04").get<double>(), 1) + "," +
                   format_fixed(r.at("pct_below_02").get<double>(), 1) + "\n";
        }
        write_text_file_atomic(reports / "alignment_groups.csv", csv);
    }

    // Table 11 layout: core-set stability.
    auto core_rows = load_jsonl_rows(run_dir_ / "core_sets.jsonl");
    {
        std::string csv = "foundation,mean_jaccard,k_distribution,selected_variables\n";
        for (const auto& r : core_rows) {
            std::string kdist;
            for (const auto& [k, count] : r.at("k_distribution").items()) {
                if (!kdist.empty()) kdist += "; ";
                kdist += "k=" + k + " (" + std::to_string(count.get<int>()) + ")";
            }
            // Support-descending listing, names tie-break.
            std::vector<std::pair<double, std::string>> supports;
            for (const auto& [name, frac] : r.at("variable_support").items()) {
                supports.emplace_back(frac.get<double>(), name);
            }
            std::sort(supports.begin(), supports.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            std::string selected;
            for (const auto& [frac, name] : supports) {
                if (!selected.empty()) selected += "; ";
                selected += name + " (" + format_fixed(frac, 2) + ")";
            }
            csv += r.at("foundation").get<std::string>() + "," +
                   format_fixed(r.at("mean_jaccard").get<double>(), 3) + "," + csv_escape(kdist) +
                   "," + csv_escape(selected) + "\n";
        }
        write_text_file_atomic(reports / "core_sets.csv", csv);
    }

    // MFQ scores joined with configurations, used by Table 12 and the series.
    auto mfq_rows = load_jsonl_rows(run_dir_ / "mfq_records.jsonl");
    std::vector<CulturalConfiguration> mfq_configs;
    std::array<std::vector<double>, kFoundationCount> mfq_scores;
    std::map<uint64_t, size_t> mfq_index;
    for (const auto& r : mfq_rows) {
        if (r.at("status") != "ok") continue;
        uint64_t id = r.at("config_id").get<uint64_t>();
        if (mfq_index.count(id)) continue;
        mfq_index[id] = mfq_configs.size();
        mfq_configs.push_back(decode_configuration(schema_, id));
        for (int f = 0; f < kFoundationCount; ++f) {
            mfq_scores[static_cast<size_t>(f)].push_back(
                r.at("scores").at(kFoundations[static_cast<size_t>(f)]).get<double>());
        }
    }

    // Table 12 layout: per-value statistics over each foundation's core set.
    {
        std::string csv = "foundation,variable,level,mean,median,q25,q75,p_ge_4\n";
        for (const auto& r : core_rows) {
            int f = foundation_index(r.at("foundation").get<std::string>());
            std::vector<int> vars;
            for (const auto& name : r.at("core_set")) {
                int vi = schema_.variable_index(name.get<std::string>());
                if (vi >= 0) vars.push_back(vi);
            }
            std::sort(vars.begin(), vars.end());
            for (int vi : vars) {
                auto stats = per_value_stats(f, vi, mfq_scores[static_cast<size_t>(f)], mfq_configs,
                                             schema_);
                const auto& var = schema_.variables()[static_cast<size_t>(vi)];
                for (const auto& s : stats) {
                    csv += std::string(kFoundations[static_cast<size_t>(f)]) + "," + var.name + "," +
                           var.levels[static_cast<size_t>(s.level)].id + ",";
                    if (s.n == 0) {
                        csv += ",,,,\n";
                    } else {
                        csv += format_fixed(s.mean, 3) + "," + format_fixed(s.median, 3) + "," +
                               format_fixed(s.q25, 3) + "," + format_fixed(s.q75, 3) + "," +
                               format_fixed(s.p_ge_4, 3) + "\n";
                    }
                }
            }
        }
        write_text_file_atomic(reports / "value_stats.csv", csv);
    }

    // Smoothed MFQ vs MFT comparison series (config_id ordering, binned means).
    {
        auto mft_rows = load_jsonl_rows(run_dir_ / "mft_vectors.jsonl");
        std::map<uint64_t, json> mft_by_id;
        for (const auto& r : mft_rows) mft_by_id[r.at("config_id").get<uint64_t>()] = r;

        OracleMatrix matrix = OracleMatrix::load(data_file("oracle_matrix"), schema_);
        std::map<int, std::vector<int>> core_vars;
        for (const auto& r : core_rows) {
            int f = foundation_index(r.at("foundation").get<std::string>());
            for (const auto& name : r.at("core_set")) {
                int vi = schema_.variable_index(name.get<std::string>());
                if (vi >= 0) core_vars[f].push_back(vi);
            }
            std::sort(core_vars[f].begin(), core_vars[f].end());
        }

        struct SeriesRow {
            uint64_t config_id;
            size_t mfq_idx;
        };
        std::vector<SeriesRow> joined;
        for (const auto& [id, idx] : mfq_index) {
            if (mft_by_id.count(id)) joined.push_back({id, idx});
        }
        std::sort(joined.begin(), joined.end(),
                  [](const SeriesRow& a, const SeriesRow& b) { return a.config_id < b.config_id; });

        int bin = std::max(1, manifest_.params.series_bin);
        std::string csv = "foundation,bin,mfq_mean,mft_default_mean,mft_core_mean\n";
        for (int f = 0; f < kFoundationCount; ++f) {
            for (size_t start = 0; start < joined.size(); start += static_cast<size_t>(bin)) {
                size_t end = std::min(joined.size(), start + static_cast<size_t>(bin));
                double mfq_sum = 0, mft_sum = 0, core_sum = 0;
                bool has_core = core_vars.count(f) && !core_vars[f].empty();
                for (size_t i = start; i < end; ++i) {
                    mfq_sum += mfq_scores[static_cast<size_t>(f)][joined[i].mfq_idx];
                    mft_sum += mft_by_id[joined[i].config_id]
                                   .at("scores")
                                   .at(kFoundations[static_cast<size_t>(f)])
                                   .get<double>();
                    if (has_core) {
                        auto config = decode_configuration(schema_, joined[i].config_id);
                        core_sum +=
                            mft_inferred_vector(schema_, config, matrix, core_vars[f])
                                .scores[static_cast<size_t>(f)];
                    }
                }
                double n = static_cast<double>(end - start);
                csv += std::string(kFoundations[static_cast<size_t>(f)]) + "," +
                       std::to_string(start / static_cast<size_t>(bin)) + "," +
                       format_fixed(mfq_sum / n, 4) + "," + format_fixed(mft_sum / n, 4) + ",";
                csv += has_core ? format_fixed(core_sum / n, 4) : std::string();
                csv += "\n";
            }
        }
        write_text_file_atomic(reports / "moral_series.csv", csv);
    }

    // IW scatter plot data with membership flags for the top aggregated patterns.
    auto point_rows = load_jsonl_rows(run_dir_ / "iw_points.jsonl");
    {
        auto agg_rows = load_jsonl_rows(run_dir_ / "aggregated_patterns.jsonl");
        const size_t flag_count = std::min<size_t>(agg_rows.size(), 6);
        std::vector<std::set<std::string>> flag_items(flag_count);
        std::string header = "config_id,z1,z2";
        for (size_t i = 0; i < flag_count; ++i) {
            header += ",pattern_" + std::to_string(i + 1);
            for (const auto& item : agg_rows[i].at("items")) {
                flag_items[i].insert(item.get<std::string>());
            }
        }
        std::string csv = header + "\n";
        for (const auto& r : point_rows) {
            uint64_t id = r.at("config_id").get<uint64_t>();
            auto config = decode_configuration(schema_, id);
            std::set<std::string> items;
            for (size_t vi = 0; vi < schema_.variable_count(); ++vi) {
                items.insert(schema_.item_string(
                    schema_.item_id(static_cast<int>(vi), config.level_indices[vi])));
            }
            csv += std::to_string(id) + "," + format_fixed(r.at("z1").get<double>(), 6) + "," +
                   format_fixed(r.at("z2").get<double>(), 6);
            for (size_t i = 0; i < flag_count; ++i) {
                bool member = std::includes(items.begin(), items.end(), flag_items[i].begin(),
                                            flag_items[i].end());
                csv += member ? ",1" : ",0";
            }
            csv += "\n";
        }
        write_text_file_atomic(reports / "iw_scatter.csv", csv);
    }

    // Demographic summary tables (Tables 6-9 layouts).
    {
        auto personas = load_store(run_dir_ / "personas.jsonl");
        std::vector<PersonaProfile> profiles;
        for (const auto& [id, rec] : personas) {
            if (rec.at("status") == "ok") profiles.push_back(profile_from_record(rec));
        }
        auto summary = demographic_summary(profiles, OccupationMapper::bundled());

        auto stat_row = [](const std::string& name, const LexicalStats& s) {
            return name + "," + format_fixed(s.mean, 1) + "," + format_fixed(s.stddev, 1) + "," +
                   std::to_string(s.min_v) + "," + std::to_string(s.max_v) + "\n";
        };
        std::string lexical = "metric,avg,std,min,max\n";
        lexical += stat_row("chars", summary.chars);
        lexical += stat_row("words", summary.words);
        lexical += stat_row("tokens", summary.tokens);
        write_text_file_atomic(reports / "lexical.csv", lexical);

        auto share_table = [](const std::string& header,
                              const std::map<std::string, double>& shares) {
            std::string csv = header + "\n";
            for (const auto& [key, share] : shares) {
                csv += csv_escape(key) + "," + percent(share) + "\n";
            }
            return csv;
        };
        write_text_file_atomic(reports / "gender.csv", share_table("gender,pct", summary.gender_shares));
        write_text_file_atomic(reports / "age_bands.csv",
                               share_table("age_band,pct", summary.age_band_shares));
        write_text_file_atomic(reports / "occupations.csv",
                               share_table("occupation_macro,pct", summary.occupation_macro_shares));
        write_text_file_atomic(reports / "countries.csv",
                               share_table("country,pct", summary.country_shares));
    }

    // Run summary.
    {
        std::ostringstream out;
        out << "run_id: " << manifest_.run_id << "\n";
        out << "schema_hash: " << manifest_.schema_hash << "\n";
        out << "configurations: " << schema_.configuration_count() << "\n";
        for (const auto& name : kStageNames) {
            const auto& s = manifest_.stages.at(name);
            out << "stage " << name << ": " << s.status << " (ok=" << s.ok
                << ", failed=" << s.failed << ")\n";
        }
        write_text_file_atomic(reports / "summary.txt", out.str());
    }

    if (options_.emit_svg) {
        double min_z1 = 0, max_z1 = 1, min_z2 = 0, max_z2 = 1;
        bool first = true;
        for (const auto& r : point_rows) {
            double z1 = r.at("z1").get<double>(), z2 = r.at("z2").get<double>();
            if (first) {
                min_z1 = max_z1 = z1;
                min_z2 = max_z2 = z2;
                first = false;
            }
            min_z1 = std::min(min_z1, z1);
            max_z1 = std::max(max_z1, z1);
            min_z2 = std::min(min_z2, z2);
            max_z2 = std::max(max_z2, z2);
        }
        double span1 = std::max(1e-9, max_z1 - min_z1), span2 = std::max(1e-9, max_z2 - min_z2);
        const double w = 800, h = 800, margin = 60;
        std::ostringstream svg;
        svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
            << "\">\n";
        svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        svg << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">Secular-rational</text>\n";
        svg << "<text x=\"" << w / 2 << "\" y=\"" << h - 10
            << "\" text-anchor=\"middle\">Traditional</text>\n";
        svg << "<text x=\"15\" y=\"" << h / 2
            << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << h / 2
            << ")\">Survival</text>\n";
        svg << "<text x=\"" << w - 15 << "\" y=\"" << h / 2
            << "\" text-anchor=\"middle\" transform=\"rotate(90 " << w - 15 << " " << h / 2
            << ")\">Self-expression</text>\n";
        for (const auto& r : point_rows) {
            double x = margin + (r.at("z1").get<double>() - min_z1) / span1 * (w - 2 * margin);
            double y = h - margin - (r.at("z2").get<double>() - min_z2) / span2 * (h - 2 * margin);
            svg << "<circle cx=\"" << format_fixed(x, 2) << "\" cy=\"" << format_fixed(y, 2)
                << "\" r=\"2\" fill=\"steelblue\" fill-opacity=\"0.5\"/>\n";
        }
        svg << "</svg>\n";
        write_text_file_atomic(reports / "iw_map.svg", svg.str());
    }

    mark_complete("report", 1, 0);
}

}  // namespace audit
