#include "kgfit/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "kgfit/clustering.hpp"
#include "kgfit/error.hpp"
#include "kgfit/evaluator.hpp"
#include "kgfit/fixtures.hpp"
#include "kgfit/hier_precompute.hpp"
#include "kgfit/hierarchy.hpp"
#include "kgfit/io.hpp"
#include "kgfit/kg_data.hpp"
#include "kgfit/kge_models.hpp"
#include "kgfit/llm_client.hpp"
#include "kgfit/refine.hpp"
#include "kgfit/text_embed.hpp"
#include "kgfit/trainer.hpp"

namespace kgfit::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct PipelineConfig {
    TrainConfig train;
    SweepRange sweep;
    LiveSettings live;
    std::string backend;
    std::string record_path;
    RefineOptions refine;
    int ancestor_levels = 2;
};

template <typename T>
T take(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void check_keys(const nlohmann::json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || it.key() == a;
        }
        if (!ok) {
            throw ConfigError("unknown key '" + it.key() + "' in " + section);
        }
    }
}

PipelineConfig load_pipeline_config(const std::string& path) {
    PipelineConfig pc;
    if (path.empty()) {
        return pc;
    }
    const std::string text = io::read_text(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        if (!j.is_object()) {
            throw ConfigError(path + ": config must be a JSON object");
        }
        if (j.contains("llm")) {
            const auto& l = j.at("llm");
            check_keys(l, "llm", {"backend", "endpoint", "model", "token_env", "timeout_s", "max_retries", "record"});
            pc.backend = take<std::string>(l, "backend", pc.backend);
            pc.live.endpoint = take<std::string>(l, "endpoint", pc.live.endpoint);
            pc.live.model = take<std::string>(l, "model", pc.live.model);
            pc.live.token_env = take<std::string>(l, "token_env", pc.live.token_env);
            pc.live.timeout = std::chrono::seconds(take<long>(l, "timeout_s", pc.live.timeout.count()));
            pc.live.max_retries = take<int>(l, "max_retries", pc.live.max_retries);
            pc.record_path = take<std::string>(l, "record", pc.record_path);
            j.erase("llm");
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            check_keys(s, "sweep", {"tau_min", "tau_max", "step"});
            pc.sweep.tau_min = take<double>(s, "tau_min", pc.sweep.tau_min);
            pc.sweep.tau_max = take<double>(s, "tau_max", pc.sweep.tau_max);
            pc.sweep.step = take<double>(s, "step", pc.sweep.step);
            j.erase("sweep");
        }
        if (j.contains("min_entities_in_leaf")) {
            pc.refine.min_entities_in_leaf = j.at("min_entities_in_leaf").get<std::size_t>();
            j.erase("min_entities_in_leaf");
        }
        if (j.contains("ancestor_levels")) {
            pc.ancestor_levels = j.at("ancestor_levels").get<int>();
            j.erase("ancestor_levels");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    pc.train = train_config_from_json(j.dump());
    return pc;
}

struct DataPaths {
    std::string data;
    std::string name_emb;
    std::string desc_emb;
    std::string descriptions;

    fs::path name() const { return name_emb.empty() ? fs::path(data) / "name.kgfe" : fs::path(name_emb); }
    fs::path desc() const { return desc_emb.empty() ? fs::path(data) / "desc.kgfe" : fs::path(desc_emb); }
    fs::path described() const {
        if (!descriptions.empty()) {
            return descriptions;
        }
        const fs::path p = fs::path(data) / "descriptions.jsonl";
        return fs::exists(p) ? p : fs::path();
    }
};

void add_data_options(CLI::App* sub, DataPaths& paths, bool embeddings) {
    sub->add_option("--data", paths.data, "dataset directory (train.tsv, valid.tsv, test.tsv)")->required();
    if (embeddings) {
        sub->add_option("--name-emb", paths.name_emb, "name embedding matrix (default <data>/name.kgfe)");
        sub->add_option("--desc-emb", paths.desc_emb, "description embedding matrix (default <data>/desc.kgfe)");
        sub->add_option("--descriptions", paths.descriptions, "descriptions JSONL (default <data>/descriptions.jsonl)");
    }
}

TextEmbeddingStore load_store(const DataPaths& paths, const Dataset& data) {
    return load_text_embeddings(paths.name(), paths.desc(), data.vocab.entities, paths.described());
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::unique_ptr<ChatClient> client_for(const PipelineConfig& pc) {
    if (pc.backend.empty()) {
        throw ConfigError("no LLM backend given; pass --backend live|replay:<path>|mock:<policy>");
    }
    return make_client(pc.backend, pc.live, pc.record_path);
}

std::string matrix_tsv(const Matrix& m, const NameTable& names) {
    std::ostringstream os;
    os.precision(9);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        os << names.name(static_cast<std::int32_t>(i));
        for (std::size_t j = 0; j < m.cols(); ++j) {
            os << '\t' << m(i, j);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchy-guided knowledge graph embedding fine-tuning", "kgfit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string backend, model, mode, anchor_sign;
    bool live_centroids = false;
    std::optional<std::size_t> epochs;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "pipeline config JSON");
        sub->add_option("--seed", seed, "seed for every random stage");
    };

    // describe
    DataPaths describe_paths;
    std::string describe_out, describe_hints;
    auto* describe = app.add_subcommand("describe", "generate entity descriptions with the LLM");
    add_data_options(describe, describe_paths, false);
    describe->add_option("--out", describe_out, "descriptions JSONL")->required();
    describe->add_option("--hints", describe_hints, "JSONL of existing descriptions used as hints");
    describe->add_option("--backend", backend, "live | replay:<path> | mock:<policy>");
    add_common(describe);

    // embed-check
    DataPaths check_paths;
    auto* embed_check = app.add_subcommand("embed-check", "validate the text embedding files against the dataset");
    add_data_options(embed_check, check_paths, true);
    add_common(embed_check);

    // cluster
    DataPaths cluster_paths;
    std::string cluster_out, cluster_trace;
    std::optional<double> tau_min, tau_max, tau_step;
    auto* cluster = app.add_subcommand("cluster", "build the seed hierarchy from enriched text embeddings");
    add_data_options(cluster, cluster_paths, true);
    cluster->add_option("--out", cluster_out, "seed hierarchy JSON")->required();
    cluster->add_option("--tau-min", tau_min, "smallest threshold (default 0.15)");
    cluster->add_option("--tau-max", tau_max, "largest threshold (default 0.85)");
    cluster->add_option("--tau-step", tau_step, "threshold step (default 0.01)");
    cluster->add_option("--trace", cluster_trace, "write the (tau, silhouette) sweep as TSV");
    add_common(cluster);

    // refine
    DataPaths refine_paths;
    std::string refine_in, refine_out, refine_stage = "both", refine_record;
    std::optional<std::size_t> min_leaf;
    auto* refine = app.add_subcommand("refine", "split and refine a seed hierarchy with the LLM");
    add_data_options(refine, refine_paths, false);
    refine->add_option("--in", refine_in, "seed hierarchy JSON")->required();
    refine->add_option("--out", refine_out, "refined hierarchy JSON")->required();
    refine->add_option("--backend", backend, "live | replay:<path> | mock:<policy>");
    refine->add_option("--record", refine_record, "append every exchange to this replay cache");
    refine->add_option("--stage", refine_stage, "split | refine | both")
        ->check(CLI::IsMember({"split", "refine", "both"}));
    refine->add_option("--min-leaf", min_leaf, "smallest leaf offered for splitting (default 4)");
    add_common(refine);

    // precompute
    DataPaths pre_paths;
    std::string pre_tree, pre_out;
    auto* precompute = app.add_subcommand("precompute", "precompute cluster, neighbor and parent vectors");
    add_data_options(precompute, pre_paths, true);
    precompute->add_option("--tree", pre_tree, "hierarchy JSON")->required();
    precompute->add_option("--out", pre_out, "output stem (<stem>.json, <stem>.kgfe)")->required();
    add_common(precompute);

    // train
    DataPaths train_paths;
    std::string train_tree, train_precomp, train_out;
    auto* train_cmd = app.add_subcommand("train", "fine-tune entity and relation embeddings");
    add_data_options(train_cmd, train_paths, true);
    train_cmd->add_option("--tree", train_tree, "hierarchy JSON")->required();
    train_cmd->add_option("--precomp", train_precomp, "precompute stem to reuse");
    train_cmd->add_option("--out", train_out, "checkpoint directory")->required();
    train_cmd->add_option("--model", model, "transe | distmult | complex | protate | rotate | hake");
    train_cmd->add_option("--mode", mode, "full | partial")->check(CLI::IsMember({"full", "partial"}));
    train_cmd->add_flag("--live-centroids", live_centroids, "recompute cluster vectors every epoch");
    train_cmd->add_option("--anchor-sign", anchor_sign, "attract | literal")
        ->check(CLI::IsMember({"attract", "literal"}));
    train_cmd->add_option("--epochs", epochs, "maximum epochs");
    add_common(train_cmd);

    // eval
    DataPaths eval_paths;
    std::string eval_ckpt, eval_split = "test", eval_out, eval_table, eval_per_triple;
    unsigned eval_threads = 1;
    bool zero_shot = false;
    auto* eval = app.add_subcommand("eval", "filtered link prediction metrics");
    add_data_options(eval, eval_paths, true);
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint directory");
    eval->add_option("--split", eval_split, "valid | test")->check(CLI::IsMember({"valid", "test"}));
    eval->add_option("--out", eval_out, "report JSON (default: stdout)");
    eval->add_option("--table", eval_table, "also write the aligned text table here");
    eval->add_option("--per-triple", eval_per_triple, "per-triple ranks TSV");
    eval->add_option("--threads", eval_threads, "evaluation threads");
    eval->add_flag("--zero-shot", zero_shot, "rank tails by cosine similarity of enriched text vectors");
    add_common(eval);

    // export
    DataPaths export_paths;
    std::string export_ckpt, export_out;
    auto* export_cmd = app.add_subcommand("export", "write checkpoint embeddings as matrix files and TSV");
    add_data_options(export_cmd, export_paths, false);
    export_cmd->add_option("--checkpoint", export_ckpt, "checkpoint directory")->required();
    export_cmd->add_option("--out", export_out, "output directory")->required();
    add_common(export_cmd);

    // stats
    DataPaths stats_paths;
    std::string stats_tree;
    bool stats_json = false;
    auto* stats_cmd = app.add_subcommand("stats", "hierarchy statistics");
    add_data_options(stats_cmd, stats_paths, false);
    stats_cmd->add_option("--tree", stats_tree, "hierarchy JSON")->required();
    stats_cmd->add_flag("--json", stats_json, "emit JSON instead of a table");
    add_common(stats_cmd);

    // fixtures gen
    std::string fixture_spec, fixture_out;
    auto* fixtures = app.add_subcommand("fixtures", "synthetic data");
    fixtures->require_subcommand(1);
    auto* gen = fixtures->add_subcommand("gen", "write a toy clustered KG");
    gen->add_option("--spec", fixture_spec, "toy KG spec JSON")->required();
    gen->add_option("--out", fixture_out, "output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "kgfit: " << e.what() << "\n";
        err << "run 'kgfit --help' for usage\n";
        return 2;
    }

    try {
        PipelineConfig pc = load_pipeline_config(config_path);
        if (seed) {
            pc.train.seed = *seed;
        }
        if (!backend.empty()) {
            pc.backend = backend;
        }

        if (describe->parsed()) {
            const Dataset data = load_dataset(describe_paths.data);
            std::map<EntityId, std::string> hints;
            if (!describe_hints.empty()) {
                hints = load_descriptions(describe_hints, data.vocab.entities);
            }
            auto client = client_for(pc);
            std::map<EntityId, std::string> result;
            for (std::size_t e = 0; e < data.vocab.num_entities(); ++e) {
                const auto id = static_cast<EntityId>(e);
                std::optional<std::string> hint;
                if (auto it = hints.find(id); it != hints.end()) {
                    hint = it->second;
                }
                result[id] = describe_entity(data.vocab.entities.name(id), hint, *client, pc.refine.max_retries);
            }
            save_descriptions(describe_out, result, data.vocab.entities);
            err << "described " << result.size() << " entities\n";
        } else if (embed_check->parsed()) {
            const Dataset data = load_dataset(check_paths.data);
            const auto store = load_store(check_paths, data);
            ordered_json j;
            j["entities"] = store.num_entities();
            j["text_dim"] = store.dim();
            j["enriched_dim"] = 2 * store.dim();
            j["max_entity_dim"] = 2 * store.dim();
            j["descriptions"] = store.descriptions.size();
            out << j.dump() << "\n";
        } else if (cluster->parsed()) {
            if (tau_min) pc.sweep.tau_min = *tau_min;
            if (tau_max) pc.sweep.tau_max = *tau_max;
            if (tau_step) pc.sweep.step = *tau_step;
            const Dataset data = load_dataset(cluster_paths.data);
            const auto store = load_store(cluster_paths, data);
            const DistanceMatrix distances(enrich(store));
            const Dendrogram dendrogram = agglomerate(distances);
            const SweepResult best = sweep(distances, dendrogram, pc.sweep);
            const HierarchyTree tree = build_seed(dendrogram, best.labels);
            save_tree(cluster_out, tree, data.vocab.entities);
            if (!cluster_trace.empty()) {
                std::ostringstream os;
                os << "tau\tsilhouette\n";
                for (const auto& [tau, score] : best.trace) {
                    os << ordered_json(tau).dump() << '\t' << ordered_json(score).dump() << '\n';
                }
                io::write_text(cluster_trace, os.str());
            }
            ordered_json j;
            j["tau"] = best.tau;
            j["silhouette"] = best.score;
            j["clusters"] = best.labels.num_clusters;
            j["nodes"] = tree.num_reachable();
            out << j.dump() << "\n";
        } else if (refine->parsed()) {
            if (min_leaf) pc.refine.min_entities_in_leaf = *min_leaf;
            if (!refine_record.empty()) pc.record_path = refine_record;
            const Dataset data = load_dataset(refine_paths.data);
            const auto& names = data.vocab.entities;
            auto client = client_for(pc);
            RefineReport report;
            HierarchyTree tree;
            if (refine_stage == "refine") {
                tree = load_tree(refine_in, names, TreeState::split);
            } else {
                tree = split_clusters(load_tree(refine_in, names, TreeState::seed), names, *client, pc.refine,
                                      &report);
            }
            if (refine_stage != "split") {
                tree = refine_bottom_up(tree, names, *client, pc.refine, &report);
            }
            save_tree(refine_out, tree, names);
            for (const auto& w : report.warnings) {
                err << "warning: " << w << "\n";
            }
            ordered_json j;
            j["calls"] = report.calls;
            j["warnings"] = report.warnings.size();
            j["nodes"] = tree.num_reachable();
            j["clusters"] = tree.leaves().size();
            out << j.dump() << "\n";
        } else if (precompute->parsed()) {
            const Dataset data = load_dataset(pre_paths.data);
            const auto store = load_store(pre_paths, data);
            const auto tree = load_tree(pre_tree, data.vocab.entities, TreeState::refined);
            const Matrix sliced = slice_init(store, pc.train.dim);
            const ModelState init = initial_state(pc.train, sliced, data.vocab.num_relations());
            PrecompConfig cfg{pc.train.neighbors, pc.ancestor_levels, pc.train.beta0, pc.train.phi};
            save_precomp(pre_out, build_precomp(tree, init.entities, cfg));
        } else if (train_cmd->parsed()) {
            if (!model.empty()) pc.train.model = model;
            if (!mode.empty()) pc.train.mode = mode == "full" ? ConstraintMode::full : ConstraintMode::partial;
            if (!anchor_sign.empty()) {
                pc.train.anchor_sign = anchor_sign == "attract" ? AnchorSign::attract : AnchorSign::literal;
            }
            if (live_centroids) pc.train.live_centroids = true;
            if (epochs) pc.train.max_epochs = *epochs;
            pc.train.validate();

            const Dataset data = load_dataset(train_paths.data);
            const auto store = load_store(train_paths, data);
            const auto tree = load_tree(train_tree, data.vocab.entities, TreeState::refined);
            tree.validate(data.vocab.num_entities());
            const Matrix sliced = slice_init(store, pc.train.dim);
            const ModelState init = initial_state(pc.train, sliced, data.vocab.num_relations());
            PrecompConfig cfg{pc.train.neighbors, pc.ancestor_levels, pc.train.beta0, pc.train.phi};
            const HierPrecomp precomp =
                train_precomp.empty() ? build_precomp(tree, init.entities, cfg) : load_precomp(train_precomp);

            std::vector<std::string> log_lines;
            const auto result = train(data, init, precomp, sliced, pc.train, [&](const EpochLog& log) {
                log_lines.push_back(epoch_log_json(log));
                err << "epoch " << log.epoch << " loss " << log.loss.total;
                if (log.val_mrr) {
                    err << " val_mrr " << *log.val_mrr;
                }
                err << "\n";
            });
            fs::create_directories(train_out);
            save_checkpoint(train_out, result.best, data.vocab);
            io::write_text(fs::path(train_out) / "train_log.jsonl", join_lines(log_lines));
            io::write_text(fs::path(train_out) / "config.json", train_config_to_json(pc.train));
            ordered_json j;
            j["epochs"] = result.logs.size();
            j["best_epoch"] = result.best_epoch;
            j["best_val_mrr"] = result.best_val_mrr ? ordered_json(*result.best_val_mrr) : ordered_json(nullptr);
            out << j.dump() << "\n";
        } else if (eval->parsed()) {
            const Dataset data = load_dataset(eval_paths.data);
            const auto& split = eval_split == "test" ? data.test : data.valid;
            const FilterIndex filter = build_filter_index(data);
            EvalReport report;
            std::vector<RankRow> rows;
            if (zero_shot) {
                const auto store = load_store(eval_paths, data);
                const Matrix vectors = enrich(store);
                std::vector<double> tails;
                for (const auto& t : split) {
                    tails.push_back(zero_shot_rank(vectors, t, {}, &filter));
                    rows.push_back({t, 0.0, tails.back()});
                }
                if (tails.empty()) {
                    throw EvalError("cannot evaluate an empty split");
                }
                report = metrics_from_ranks({}, tails);
            } else {
                if (eval_ckpt.empty()) {
                    throw ConfigError("eval needs --checkpoint unless --zero-shot is given");
                }
                const ModelState state = load_checkpoint(eval_ckpt, &data.vocab);
                EvalOptions options;
                options.threads = eval_threads;
                report = evaluate(split, state, filter, options, &rows);
            }
            const std::string json = report_json(report) + "\n";
            if (eval_out.empty()) {
                out << json;
            } else {
                io::write_text(eval_out, json);
            }
            if (!eval_table.empty()) {
                io::write_text(eval_table, report_table(report));
            } else {
                err << report_table(report);
            }
            if (!eval_per_triple.empty()) {
                io::write_text(eval_per_triple, per_triple_tsv(rows, data.vocab));
            }
        } else if (export_cmd->parsed()) {
            const Dataset data = load_dataset(export_paths.data);
            const ModelState state = load_checkpoint(export_ckpt, &data.vocab);
            const fs::path dir = export_out;
            fs::create_directories(dir);
            io::write_matrix(dir / "entity_embeddings.kgfe", state.entities);
            io::write_matrix(dir / "relation_embeddings.kgfe", state.relations);
            io::write_text(dir / "entity_embeddings.tsv", matrix_tsv(state.entities, data.vocab.entities));
            io::write_text(dir / "relation_embeddings.tsv", matrix_tsv(state.relations, data.vocab.relations));
        } else if (stats_cmd->parsed()) {
            const Dataset data = load_dataset(stats_paths.data);
            const auto tree = load_tree(stats_tree, data.vocab.entities, TreeState::refined);
            tree.validate(data.vocab.num_entities());
            const auto s = stats(tree);
            if (stats_json) {
                auto mma = [](const MinMaxAvg& m) {
                    ordered_json j;
                    j["min"] = m.min;
                    j["max"] = m.max;
                    j["avg"] = m.avg;
                    return j;
                };
                ordered_json j;
                j["clusters"] = s.clusters;
                j["nodes"] = s.nodes;
                j["entities_per_cluster"] = mma(s.entities_per_cluster);
                j["cluster_depth"] = mma(s.cluster_depth);
                j["branch_factor"] = mma(s.branch_factor);
                out << j.dump() << "\n";
            } else {
                out << format_stats(s);
            }
        } else if (gen->parsed()) {
            const ToyKGSpec spec = toy_spec_from_json(io::read_text(fixture_spec));
            const ToyKG toy = generate_toy(spec);
            fs::create_directories(fixture_out);
            save_toy(toy, fixture_out);
        }
    } catch (const Error& e) {
        err << "kgfit: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "kgfit: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace kgfit::cli
