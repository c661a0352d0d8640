// fpm: train, evaluate and inspect fairness-aware profit maximization policies.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 checkpoint mismatch.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fpm/fpm.hpp"

namespace {

enum ExitCode { ok = 0, usage_error = 1, data_error = 2, checkpoint_mismatch = 3 };

struct DatasetOptions {
    std::string dataset;
    bool directed = false;
    std::string attributes;
    std::string prob_model = "uniform";
    double uniform_p = 0.1;
    std::size_t n_train = 12;
    std::size_t n_test = 8;
    std::size_t nodes = 500;
    double cost_min = 1, cost_max = 100;
    double benefit_min = 1, benefit_max = 100;
    double minority_fraction = 0.2;
    std::uint64_t seed = 0;

    void add(CLI::App& app) {
        app.add_option("--dataset", dataset, "Edge list (SNAP format)")->required();
        app.add_flag("--directed", directed, "Treat edges as directed");
        app.add_option("--attributes", attributes, "CSV node_id,cost,benefit,community overriding generated attributes");
        app.add_option("--prob-model", prob_model, "Edge probability model")->check(CLI::IsMember({"uniform", "trivalency"}));
        app.add_option("--uniform-p", uniform_p, "Edge probability for the uniform model");
        app.add_option("--train-instances", n_train, "Sampled training instances");
        app.add_option("--test-instances", n_test, "Sampled test instances");
        app.add_option("--nodes", nodes, "Nodes per sampled instance");
        app.add_option("--cost-min", cost_min);
        app.add_option("--cost-max", cost_max);
        app.add_option("--benefit-min", benefit_min);
        app.add_option("--benefit-max", benefit_max);
        app.add_option("--minority-fraction", minority_fraction);
        app.add_option("--seed", seed, "Master seed");
    }

    fpm::PoolConfig pool_config() const {
        fpm::PoolConfig c;
        c.n_train = n_train;
        c.n_test = n_test;
        c.nodes_per_instance = nodes;
        c.probabilities = prob_model == "trivalency" ? fpm::ProbabilityModel::trivalency() : fpm::ProbabilityModel::uniform(uniform_p);
        c.cost_range = {cost_min, cost_max};
        c.benefit_range = {benefit_min, benefit_max};
        c.minority_fraction = minority_fraction;
        return c;
    }

    fpm::InstancePool build_pool() const {
        auto g = fpm::load_edge_list(dataset, directed);
        std::optional<fpm::SourceAttributes> source;
        if (!attributes.empty()) source = fpm::load_node_attributes_csv(attributes, g);
        auto cfg = pool_config();
        if (cfg.nodes_per_instance > g.num_nodes())
            throw fpm::DataError("--nodes exceeds the dataset's " + std::to_string(g.num_nodes()) + " nodes");
        return fpm::build_instance_pool(g, cfg, seed, source ? &*source : nullptr);
    }

    nlohmann::json to_json() const {
        return {{"dataset", dataset},     {"directed", directed},       {"attributes", attributes},
                {"prob_model", prob_model}, {"uniform_p", uniform_p},   {"train_instances", n_train},
                {"test_instances", n_test}, {"nodes", nodes},           {"cost_range", {cost_min, cost_max}},
                {"benefit_range", {benefit_min, benefit_max}},          {"minority_fraction", minority_fraction},
                {"seed", seed}};
    }
};

struct TrainOptions {
    fpm::TrainConfig cfg;
    std::string log_path;

    void add(CLI::App& app) {
        app.add_option("--budget", cfg.budget, "Training budget B");
        app.add_option("--episodes", cfg.episodes);
        app.add_option("--lr", cfg.learning_rate);
        app.add_option("--gamma", cfg.gamma);
        app.add_option("--eps-start", cfg.epsilon_start);
        app.add_option("--eps-min", cfg.epsilon_min);
        app.add_option("--eps-decay", cfg.epsilon_decay);
        app.add_option("--replay-capacity", cfg.replay_capacity);
        app.add_option("--batch-size", cfg.batch_size);
        app.add_option("--update-period", cfg.update_period);
        app.add_option("--phi", cfg.phi, "Fairness weight in the reward");
        app.add_option("--embedding-dim", cfg.embedding_dim);
        app.add_option("--embedding-iterations", cfg.embedding_iterations);
        app.add_option("--hidden-dim", cfg.hidden_dim);
        app.add_option("--train-log", log_path, "Per-episode progress CSV");
    }

    nlohmann::json to_json() const {
        return {{"budget", cfg.budget},
                {"episodes", cfg.episodes},
                {"lr", cfg.learning_rate},
                {"gamma", cfg.gamma},
                {"eps_start", cfg.epsilon_start},
                {"eps_min", cfg.epsilon_min},
                {"eps_decay", cfg.epsilon_decay},
                {"replay_capacity", cfg.replay_capacity},
                {"batch_size", cfg.batch_size},
                {"update_period", cfg.update_period},
                {"phi", cfg.phi},
                {"embedding_dim", cfg.embedding_dim},
                {"embedding_iterations", cfg.embedding_iterations},
                {"hidden_dim", cfg.hidden_dim}};
    }
};

void write_train_log(const std::string& path, const std::vector<fpm::EpisodeLog>& log) {
    std::ofstream os(path);
    if (!os) throw fpm::DataError("cannot write training log '" + path + "'");
    os << "episode,instance,epsilon,buffer_size,transitions,updated,loss,episode_return\n";
    for (const auto& e : log)
        os << e.episode << ',' << e.instance << ',' << fpm::detail::format_double(e.epsilon) << ',' << e.buffer_size << ','
           << e.transitions << ',' << (e.updated ? 1 : 0) << ',' << (e.updated ? fpm::detail::format_double(e.loss) : "")
           << ',' << fpm::detail::format_double(e.episode_return) << '\n';
}

fpm::PolicyModel train_model(const DatasetOptions& data, TrainOptions& train, const fpm::InstancePool& pool) {
    train.cfg.seed = data.seed;
    auto result = fpm::train(train.cfg, pool);
    if (!train.log_path.empty()) write_train_log(train.log_path, result.log);
    std::cerr << "trained " << train.cfg.episodes << " episodes, " << result.gradient_steps << " gradient steps\n";
    return std::move(result.model);
}

std::vector<std::uint32_t> parse_node_list(const std::vector<std::int64_t>& ids, const fpm::Graph& g) {
    std::vector<std::uint32_t> out;
    for (auto id : ids) {
        bool found = false;
        for (fpm::NodeId v = 0; v < g.num_nodes(); ++v)
            if (g.original_id(v) == id) {
                out.push_back(v);
                found = true;
                break;
            }
        if (!found) throw fpm::DataError("seed node " + std::to_string(id) + " is not in the graph");
    }
    return out;
}

void write_instance(const std::filesystem::path& dir, const std::string& stem, const fpm::Instance& inst) {
    std::ofstream edges(dir / (stem + ".edges"));
    std::ofstream attrs(dir / (stem + ".attrs.csv"));
    if (!edges || !attrs) throw fpm::DataError("cannot write instance files in '" + dir.string() + "'");
    edges << "# " << (inst.graph.directed() ? "directed" : "undirected") << " u v p; seed " << inst.seed << '\n';
    for (const auto& e : inst.graph.edges()) edges << e.u << ' ' << e.v << ' ' << fpm::detail::format_double(e.p) << '\n';
    attrs << "node_id,cost,benefit,community\n";
    for (fpm::NodeId v = 0; v < inst.graph.num_nodes(); ++v)
        attrs << v << ',' << fpm::detail::format_double(inst.attrs.cost[v]) << ','
              << fpm::detail::format_double(inst.attrs.benefit[v]) << ',' << inst.communities.community_of(v) << '\n';
}

constexpr const char* config_help = "Flat key=value file of long option names; command-line values win";

bool has_option(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// CLI11 reads config files for the top-level app only, so the subcommand's
// --config file is read here and its entries appended as ordinary options.
// Returns the arguments in the reversed order App::parse expects.
std::vector<std::string> with_config_file(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (!path.empty()) {
        if (!std::filesystem::is_regular_file(path)) throw CLI::FileError::Missing(path);
        for (const auto& item : CLI::ConfigTOML().from_file(path)) {
            const std::string flag = "--" + item.name;
            if (!item.parents.empty() || item.inputs.empty() || has_option(args, flag)) continue;
            std::string value = item.inputs.front();
            for (std::size_t k = 1; k < item.inputs.size(); ++k) value += "," + item.inputs[k];
            args.push_back(flag + "=" + value);
        }
    }
    std::reverse(args.begin(), args.end());
    return args;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fairness-aware profit maximization: deep Q-learning seed selection and baselines"};
    app.require_subcommand(1);

    // train
    DatasetOptions train_data;
    TrainOptions train_opts;
    std::string checkpoint_out;
    auto* train_cmd = app.add_subcommand("train", "Train a policy on sampled training instances");
    std::string config_file;
    train_cmd->add_option("--config", config_file, config_help);
    train_data.add(*train_cmd);
    train_opts.add(*train_cmd);
    train_cmd->add_option("--checkpoint-out", checkpoint_out, "Where to write the trained model")->required();

    // eval
    DatasetOptions eval_data;
    TrainOptions eval_train;
    std::string checkpoint_in, out_dir;
    std::vector<double> budgets{500, 1000, 1500, 2000, 2500, 3000};
    std::vector<std::string> algorithm_names{"rl4fpm", "random", "high_degree", "pagerank", "parity", "fair_pagerank"};
    std::size_t m = 1000;
    double tau = 0.0;
    bool no_wall_time = false;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate algorithms over a budget grid on the test instances");
    eval_cmd->add_option("--config", config_file, config_help);
    eval_data.add(*eval_cmd);
    eval_train.add(*eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint_in, "Trained model; trains first when absent and rl4fpm is requested");
    eval_cmd->add_option("--budgets", budgets, "Ascending budget grid")->delimiter(',');
    eval_cmd->add_option("--m", m, "Monte Carlo rollouts per evaluation");
    eval_cmd->add_option("--algorithms", algorithm_names)->delimiter(',');
    eval_cmd->add_option("--tau", tau, "Reported fairness threshold");
    eval_cmd->add_option("--out", out_dir, "Output directory")->required();
    eval_cmd->add_flag("--no-wall-time", no_wall_time, "Write 0 seconds into results.csv/summary.csv for byte-reproducible output");

    // oracle
    std::string oracle_edges, oracle_attrs;
    bool oracle_directed = false, oracle_with_p = false;
    double oracle_p = 1.0, oracle_phi = 1.0, oracle_cost = 1.0, oracle_benefit = 1.0;
    std::vector<std::int64_t> oracle_seeds;
    auto* oracle_cmd = app.add_subcommand("oracle", "Exact expected profit on a tiny graph (at most 20 edges)");
    oracle_cmd->add_option("--edges", oracle_edges, "Edge list")->required();
    oracle_cmd->add_flag("--directed", oracle_directed);
    oracle_cmd->add_flag("--with-probabilities", oracle_with_p, "Read edge probabilities from a third column");
    oracle_cmd->add_option("--p", oracle_p, "Uniform edge probability when no third column is read");
    oracle_cmd->add_option("--attributes", oracle_attrs, "CSV node_id,cost,benefit,community");
    oracle_cmd->add_option("--cost", oracle_cost, "Uniform node cost without an attribute file");
    oracle_cmd->add_option("--benefit", oracle_benefit, "Uniform node benefit without an attribute file");
    oracle_cmd->add_option("--seeds", oracle_seeds, "Seed node ids (original ids)")->delimiter(',');
    oracle_cmd->add_option("--phi", oracle_phi, "Fairness weight for the shaped objective");

    // sample
    DatasetOptions sample_data;
    std::string sample_out;
    auto* sample_cmd = app.add_subcommand("sample", "Materialize the instance pool to disk");
    sample_cmd->add_option("--config", config_file, config_help);
    sample_data.add(*sample_cmd);
    sample_cmd->add_option("--out", sample_out, "Output directory")->required();

    try {
        app.parse(with_config_file(argc, argv));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage_error;
    }

    try {
        if (*train_cmd) {
            auto pool = train_data.build_pool();
            auto model = train_model(train_data, train_opts, pool);
            fpm::save_checkpoint(checkpoint_out, model);
            return ok;
        }

        if (*eval_cmd) {
            fpm::ExperimentConfig cfg;
            cfg.budgets = budgets;
            cfg.m = m;
            cfg.tau = tau;
            cfg.seed = eval_data.seed;
            cfg.algorithms.clear();
            for (const auto& name : algorithm_names) {
                auto a = fpm::parse_algorithm(name);
                if (!a) {
                    std::cerr << "unknown algorithm '" << name << "'\n";
                    return usage_error;
                }
                cfg.algorithms.push_back(*a);
            }
            try {
                cfg.validate();
            } catch (const std::invalid_argument& e) {
                std::cerr << "error: " << e.what() << '\n';
                return usage_error;
            }

            auto pool = eval_data.build_pool();
            std::optional<fpm::PolicyModel> model;
            bool needs_model = std::find(cfg.algorithms.begin(), cfg.algorithms.end(), fpm::Algorithm::Rl4fpm) != cfg.algorithms.end();
            if (needs_model) {
                if (!checkpoint_in.empty()) {
                    auto arch = eval_train.cfg.architecture();
                    model = fpm::load_checkpoint(checkpoint_in, &arch);
                } else {
                    model = train_model(eval_data, eval_train, pool);
                }
            }
            auto results = fpm::run_experiment(cfg, pool.test, model ? &*model : nullptr);

            nlohmann::json meta;
            meta["command"] = "eval";
            meta["data"] = eval_data.to_json();
            meta["train"] = eval_train.to_json();
            meta["budgets"] = budgets;
            meta["m"] = m;
            meta["tau"] = tau;
            meta["algorithms"] = algorithm_names;
            meta["checkpoint"] = checkpoint_in;
            meta["wall_time_in_results"] = !no_wall_time;
            fpm::emit_report(results, out_dir, meta, no_wall_time);
            return ok;
        }

        if (*oracle_cmd) {
            auto g = fpm::load_edge_list(oracle_edges, fpm::EdgeListOptions{oracle_directed, oracle_with_p});
            if (!oracle_with_p) g = fpm::assign_edge_probabilities(g, fpm::ProbabilityModel::uniform(oracle_p), 0);
            fpm::NodeAttrs attrs;
            fpm::CommunityPartition parts;
            if (!oracle_attrs.empty()) {
                auto src = fpm::load_node_attributes_csv(oracle_attrs, g);
                attrs = src.attrs;
                parts = fpm::CommunityPartition::from_labels(fpm::compact_labels(src.community_labels), attrs);
            } else {
                attrs.cost.assign(g.num_nodes(), oracle_cost);
                attrs.benefit.assign(g.num_nodes(), oracle_benefit);
                attrs.validate(g.num_nodes());
                parts = fpm::CommunityPartition::single(attrs);
            }
            auto seeds = fpm::SeedSet::from_nodes(parse_node_list(oracle_seeds, g), attrs);
            nlohmann::json out;
            out["nodes"] = g.num_nodes();
            out["edges"] = g.num_edges();
            out["seed_cost"] = seeds.cost();
            out["expected_benefit"] = fpm::exact_expected_benefit(g, attrs, seeds);
            out["expected_profit"] = fpm::exact_expected_profit(g, attrs, seeds);
            out["shaped_objective"] = fpm::exact_shaped_objective(g, attrs, parts, seeds, oracle_phi);
            std::cout << out.dump(2) << '\n';
            return ok;
        }

        if (*sample_cmd) {
            auto pool = sample_data.build_pool();
            std::filesystem::path dir(sample_out);
            std::filesystem::create_directories(dir);
            nlohmann::json meta;
            meta["data"] = sample_data.to_json();
            for (const auto& inst : pool.train) {
                std::string stem = "train_" + std::to_string(inst.id);
                write_instance(dir, stem, inst);
                meta["train"].push_back({{"stem", stem}, {"seed", inst.seed}, {"nodes", inst.graph.num_nodes()},
                                         {"edges", inst.graph.num_edges()}});
            }
            for (const auto& inst : pool.test) {
                std::string stem = "test_" + std::to_string(inst.id);
                write_instance(dir, stem, inst);
                meta["test"].push_back({{"stem", stem}, {"seed", inst.seed}, {"nodes", inst.graph.num_nodes()},
                                        {"edges", inst.graph.num_edges()}});
            }
            std::ofstream(dir / "pool.json") << meta.dump(2) << '\n';
            return ok;
        }
    } catch (const fpm::CheckpointMismatch& e) {
        std::cerr << "checkpoint mismatch: " << e.what() << '\n';
        return checkpoint_mismatch;
    } catch (const fpm::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return data_error;
    } catch (const std::length_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    }
    return usage_error;
}
