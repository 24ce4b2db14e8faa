// Command-line front end: ingest -> congruity -> analyze -> train -> evaluate
// -> compare / ablate / grid, plus a synthetic-data generator. Every
// subcommand is deterministic given its flags; all randomness flows from
// explicit seeds. Exit codes: 0 success, 1 runtime failure (bad data,
// divergence), 2 usage or configuration error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "congrec/congrec.hpp"

namespace fs = std::filesystem;
using namespace congrec;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) {
            if (start < s.size()) out.push_back(s.substr(start));
            break;
        }
        if (comma > start) out.push_back(s.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::vector<double> parse_fraction_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split_list(s)) {
        try {
            std::size_t pos = 0;
            double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse '" + tok + "' as a number");
        }
    }
    if (out.empty()) throw ConfigError("empty list of train fractions");
    return out;
}

std::vector<int> parse_score_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split_list(s)) {
        try {
            std::size_t pos = 0;
            int v = std::stoi(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse '" + tok + "' as an integer score");
        }
    }
    return out;
}

std::string env_name(const std::string& long_flag) {
    std::string out = "CONGREC_";
    for (char c : long_flag) {
        if (c == '-') out += '_';
        else out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

// Adds --config plus an env fallback to every option of the subcommand.
// Precedence: command line > config file > environment > built-in default.
// The config file is expanded into extra tokens placed before the explicit
// flags (see expand_config below); TakeLast then lets explicit flags win.
void finish_subcommand(CLI::App* cmd) {
    static std::string config_path_sink;
    cmd->add_option("--config", config_path_sink,
                    "read key=value defaults from this file; explicit flags win");
    for (CLI::Option* opt : cmd->get_options()) {
        std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
        if (name.empty() || name == "config" || name == "help") continue;
        opt->envname(env_name(name));
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
}

// Reads a flat key=value file ('#' starts a comment) into --key=value tokens.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw IoError("cannot open config file " + path);
    std::vector<std::string> tokens;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        }
        tokens.push_back("--" + line);
    }
    return tokens;
}

// If the arguments name a config file, splice its tokens in right after the
// subcommand so explicit flags, which come later, override them.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    std::size_t at = 0;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            at = i;
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            at = i;
            break;
        }
    }
    if (!path.empty() && at >= 1) {
        auto extra = config_tokens(path);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
    return args;
}

struct DataOpts {
    std::string ratings_path;
    std::string trust_path;
    std::string helpfulness_path;
    bool no_preprocess = false;
    int min_user_ratings = 3;
    int min_item_ratings = 3;
    bool no_require_friend = false;
    std::string g_variant = "clamped";
    std::string positive_scores = "4,5";
    std::string negative_scores = "1,2";

    StrengthKind strength_kind() const {
        if (g_variant == "clamped") return StrengthKind::Clamped;
        if (g_variant == "bounded") return StrengthKind::BoundedAlternative;
        throw ConfigError("unknown strength variant '" + g_variant +
                          "'; valid: clamped, bounded");
    }

    InteractionThresholds thresholds() const {
        InteractionThresholds t;
        t.positive = parse_score_list(positive_scores);
        t.negative = parse_score_list(negative_scores);
        t.validate();
        return t;
    }
};

void add_data_options(CLI::App* cmd, DataOpts& o, bool need_helpfulness) {
    cmd->add_option("--ratings", o.ratings_path, "ratings CSV (user_id,item_id,rating)")
        ->required();
    cmd->add_option("--trust", o.trust_path, "trust CSV (user_id,friend_id)")->required();
    auto* h = cmd->add_option("--helpfulness", o.helpfulness_path,
                              "helpfulness CSV (rater_id,author_id,score)");
    if (need_helpfulness) h->required();
    cmd->add_flag("--no-preprocess", o.no_preprocess,
                  "skip the joint user/item filtering pass");
    cmd->add_option("--min-user-ratings", o.min_user_ratings,
                    "keep users with at least this many ratings")
        ->capture_default_str();
    cmd->add_option("--min-item-ratings", o.min_item_ratings,
                    "keep items with at least this many ratings")
        ->capture_default_str();
    cmd->add_flag("--no-require-friend", o.no_require_friend,
                  "keep users even when they have no surviving friend");
    cmd->add_option("--g-variant", o.g_variant,
                    "interaction strength function: clamped or bounded")
        ->capture_default_str();
    cmd->add_option("--positive-scores", o.positive_scores,
                    "helpfulness scores counted as endorsements")
        ->capture_default_str();
    cmd->add_option("--negative-scores", o.negative_scores,
                    "helpfulness scores counted as pans")
        ->capture_default_str();
}

DenseDataset load_dense(const DataOpts& o, std::vector<RetainedUser>* report = nullptr) {
    auto ratings = load_ratings_csv(o.ratings_path);
    auto edges = load_trust_csv(o.trust_path);
    std::vector<RawHelpfulness> events;
    if (!o.helpfulness_path.empty()) events = load_helpfulness_csv(o.helpfulness_path);
    DenseDataset dense = remap_ids(ratings, edges, events);
    if (o.no_preprocess) return dense;
    PreprocessConfig cfg;
    cfg.min_user_ratings = o.min_user_ratings;
    cfg.min_item_ratings = o.min_item_ratings;
    cfg.require_friend = !o.no_require_friend;
    PreprocessResult res = preprocess(dense, cfg);
    if (report != nullptr) *report = std::move(res.report);
    return std::move(res.data);
}

struct TrainOpts {
    TrainConfig cfg;
    std::string gradient_mode = "full";

    TrainConfig resolved() const {
        TrainConfig c = cfg;
        c.gradient_mode = parse_gradient_mode(gradient_mode);
        c.validate();
        return c;
    }
};

void add_train_options(CLI::App* cmd, TrainOpts& o) {
    cmd->add_option("--d", o.cfg.d, "latent factor dimension")->capture_default_str();
    cmd->add_option("--lambda", o.cfg.lambda, "ridge penalty weight")->capture_default_str();
    cmd->add_option("--gamma", o.cfg.gamma, "closeness penalty weight")
        ->capture_default_str();
    cmd->add_option("--delta", o.cfg.delta,
                    "blend weight of friendship vs congruity (csrr only)")
        ->capture_default_str();
    cmd->add_option("--learning-rate", o.cfg.learning_rate, "gradient step size")
        ->capture_default_str();
    cmd->add_option("--max-iters", o.cfg.max_iters, "iteration cap")->capture_default_str();
    cmd->add_option("--tol", o.cfg.tol, "relative objective change for convergence")
        ->capture_default_str();
    cmd->add_option("--seed", o.cfg.seed, "factor initialization seed")
        ->capture_default_str();
    cmd->add_option("--init-scale", o.cfg.init_scale, "Gaussian init standard deviation")
        ->capture_default_str();
    cmd->add_option("--gradient-mode", o.gradient_mode, "full or row-local")
        ->capture_default_str();
    cmd->add_flag("--clamp-predictions", o.cfg.clamp_predictions,
                  "clamp predictions into [1, 5]");
    cmd->add_flag("--clamp-closeness-nonnegative", o.cfg.clamp_closeness_nonnegative,
                  "drop non-positive congruity entries from the cr closeness matrix");
}

void write_manifest(const std::string& path,
                    std::vector<std::pair<std::string, std::string>> kv) {
    std::sort(kv.begin(), kv.end());
    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path);
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

std::string out_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

// --- subcommand state -------------------------------------------------------

struct PreprocessCmd {
    DataOpts data;
    std::string out_dir;
    bool report = false;
};

struct CongruityCmd {
    DataOpts data;
    std::string out;
};

struct AnalyzeCmd {
    DataOpts data;
    std::string out_dir;
    double alpha = 0.01;
    std::uint64_t seed = 42;
};

struct TrainCmd {
    DataOpts data;
    TrainOpts train;
    std::string method = "mf";
    double train_fraction = 0.0;  // 0 = train on everything
    std::string model_out;
    std::string trace_out;
};

struct EvaluateCmd {
    std::string model_path;
    std::string ratings_path;
    bool clamp = false;
};

struct CompareCmd {
    DataOpts data;
    TrainOpts train;
    std::string methods = "mf,cr";
    std::string fractions = "0.9";
    std::int32_t runs = 20;
    std::uint64_t base_seed = 42;
    std::int32_t jobs = 1;
    bool exclude_cold_start = false;
    std::string out_dir;
};

struct AblateCmd {
    DataOpts data;
    TrainOpts train;
    std::string fractions = "0.9";
    std::int32_t runs = 20;
    std::uint64_t base_seed = 42;
    std::int32_t jobs = 1;
    std::string out_dir;
};

struct GridCmd {
    DataOpts data;
    TrainOpts train;
    std::string method = "cr";
    std::string gammas;
    std::string lambdas;
    std::string fractions = "0.9";
    std::int32_t runs = 5;
    std::uint64_t base_seed = 42;
    std::int32_t jobs = 1;
    std::string out_dir;
};

struct SynthCmd {
    SyntheticConfig cfg;
    bool raw = false;
    bool independent = false;
    std::string out_dir;
};

int run_preprocess(const PreprocessCmd& c) {
    ensure_dir(c.out_dir);
    std::vector<RetainedUser> report;
    DenseDataset dense = load_dense(c.data, &report);
    write_ratings_csv(out_path(c.out_dir, "ratings.csv"), dense.ratings, dense.users,
                      dense.items);
    write_trust_csv(out_path(c.out_dir, "trust.csv"), dense.graph, dense.users);
    if (!c.data.helpfulness_path.empty()) {
        write_helpfulness_csv(out_path(c.out_dir, "helpfulness.csv"), dense.events,
                              dense.users);
    }
    if (c.report) {
        if (c.data.no_preprocess) {
            throw ConfigError("--report needs the filtering pass; drop --no-preprocess");
        }
        write_retained_report(out_path(c.out_dir, "retained_users.csv"), report);
    }
    std::cout << "retained " << dense.users.size() << " users, " << dense.items.size()
              << " items, " << dense.ratings.size() << " ratings, " << dense.graph.edge_count()
              << " friendships, " << dense.events.size() << " helpfulness events\n";
    return 0;
}

int run_congruity(const CongruityCmd& c) {
    DenseDataset dense = load_dense(c.data);
    auto counts = count_interactions(dense.users.size(), dense.events, c.data.thresholds());
    write_congruity_csv(c.out, counts, c.data.strength_kind(), dense.users);
    UserPairMatrix C = build_congruity(counts, c.data.strength_kind());
    std::cout << "wrote " << counts.pairs().size() << " interacting pairs ("
              << C.stored_pairs() << " with nonzero congruity) for " << dense.users.size()
              << " users\n";
    return 0;
}

int run_analyze(const AnalyzeCmd& c) {
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
        throw ConfigError("significance level must lie in (0, 1)");
    }
    ensure_dir(c.out_dir);
    DenseDataset dense = load_dense(c.data);
    auto counts = count_interactions(dense.users.size(), dense.events, c.data.thresholds());
    UserPairMatrix C = build_congruity(counts, c.data.strength_kind());
    PairTaxonomy tax = pair_taxonomy(C, dense.graph);
    write_taxonomy_csv(out_path(c.out_dir, "taxonomy.csv"), tax);

    std::vector<AnalysisRow> rows;
    {
        AnalysisRow row;
        row.name = "friend_congruence";
        try {
            row.test = friend_congruence_test(C, dense.graph).test;
        } catch (const DegenerateSampleError& e) {
            row.degenerate = true;
            row.note = e.what();
        }
        rows.push_back(std::move(row));
    }
    {
        AnalysisRow row;
        row.name = "congruity_preference";
        try {
            row.test = congruity_preference_test(C, dense.ratings, c.seed).test;
        } catch (const DegenerateSampleError& e) {
            row.degenerate = true;
            row.note = e.what();
        }
        rows.push_back(std::move(row));
    }
    write_analysis_report(out_path(c.out_dir, "analysis.csv"), rows, c.alpha);
    for (const auto& r : rows) {
        if (r.degenerate) {
            std::cout << r.name << ": not rejectable (" << r.note << ")\n";
        } else {
            std::cout << r.name << ": t=" << format_double(r.test.t)
                      << " df=" << format_double(r.test.df) << " p=" << format_double(r.test.p)
                      << (r.test.p < c.alpha ? " rejected" : " not rejected") << " at alpha="
                      << format_double(c.alpha) << "\n";
        }
    }
    return 0;
}

int run_train(const TrainCmd& c) {
    Variant variant = parse_variant(c.method);
    TrainConfig cfg = c.train.resolved();
    DenseDataset dense = load_dense(c.data);
    ExperimentDataset data = make_experiment_dataset(dense, c.data.strength_kind(),
                                                     c.data.thresholds());

    SparseRatings train_set = data.ratings;
    SparseRatings test_set;
    bool have_test = false;
    if (c.train_fraction != 0.0) {
        auto parts = split(data.ratings, {c.train_fraction, cfg.seed});
        train_set = std::move(parts.first);
        test_set = std::move(parts.second);
        have_test = true;
    }

    UserPairMatrix similarity;
    ClosenessInputs inputs;
    inputs.congruity = &data.congruity;
    inputs.graph = &data.graph;
    if (variant == Variant::SMF || variant == Variant::SoReg) {
        similarity = cosine_user_similarity(train_set);
        inputs.similarity = &similarity;
    }
    UserPairMatrix closeness = build_closeness(variant, data.ratings.n_users(), inputs,
                                               cfg.delta, cfg.clamp_closeness_nonnegative);
    TrainResult result = train(train_set, closeness, cfg, variant);
    result.model.user_names = dense.users.names();
    result.model.item_names = dense.items.names();

    if (!c.model_out.empty()) save_model(c.model_out, result.model);
    if (!c.trace_out.empty()) write_trace_csv(c.trace_out, result.trace);

    std::cout << "method=" << c.method << " iterations=" << result.iterations
              << " converged=" << (result.converged ? "true" : "false")
              << " objective=" << format_double(result.trace.back().objective) << "\n";
    if (have_test) {
        Metrics m = evaluate_metrics(result.model, test_set, cfg.clamp_predictions);
        std::cout << "test rmse=" << format_double(m.rmse) << " mae=" << format_double(m.mae)
                  << " entries=" << m.count << "\n";
    }
    return 0;
}

int run_evaluate(const EvaluateCmd& c) {
    FactorModel model = load_model(c.model_path);
    if (model.user_names.empty() || model.item_names.empty()) {
        throw DataError("model file carries no id maps; evaluate needs a model saved by "
                        "the train subcommand");
    }
    IdMap users = IdMap::from_names(model.user_names);
    IdMap items = IdMap::from_names(model.item_names);
    auto raw = load_ratings_csv(c.ratings_path);
    if (raw.empty()) throw DataError("no ratings to evaluate in " + c.ratings_path);
    double sq = 0.0;
    double ab = 0.0;
    for (const auto& r : raw) {
        const double pred = model.predict(users.at(r.user), items.at(r.item), c.clamp);
        const double err = pred - r.value;
        sq += err * err;
        ab += std::fabs(err);
    }
    const double n = static_cast<double>(raw.size());
    std::cout << "rmse=" << format_double(std::sqrt(sq / n))
              << " mae=" << format_double(ab / n) << " entries=" << raw.size() << "\n";
    return 0;
}

void write_comparison_outputs(const std::string& out_dir, const ComparisonReport& report) {
    write_aggregate_csv(out_path(out_dir, "comparison.csv"), report);
    write_pairwise_csv(out_path(out_dir, "pairwise.csv"), report);
    write_runs_csv(out_path(out_dir, "runs.csv"), report);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<std::pair<std::string, std::string>> manifest_common(const DataOpts& d,
                                                                 const TrainOpts& t) {
    TrainConfig cfg = t.resolved();
    return {
        {"ratings", d.ratings_path},
        {"trust", d.trust_path},
        {"helpfulness", d.helpfulness_path},
        {"no-preprocess", d.no_preprocess ? "true" : "false"},
        {"min-user-ratings", std::to_string(d.min_user_ratings)},
        {"min-item-ratings", std::to_string(d.min_item_ratings)},
        {"no-require-friend", d.no_require_friend ? "true" : "false"},
        {"g-variant", d.g_variant},
        {"positive-scores", d.positive_scores},
        {"negative-scores", d.negative_scores},
        {"d", std::to_string(cfg.d)},
        {"lambda", format_double(cfg.lambda)},
        {"gamma", format_double(cfg.gamma)},
        {"delta", format_double(cfg.delta)},
        {"learning-rate", format_double(cfg.learning_rate)},
        {"max-iters", std::to_string(cfg.max_iters)},
        {"tol", format_double(cfg.tol)},
        {"init-scale", format_double(cfg.init_scale)},
        {"gradient-mode", to_string(cfg.gradient_mode)},
        {"clamp-predictions", cfg.clamp_predictions ? "true" : "false"},
        {"clamp-closeness-nonnegative", cfg.clamp_closeness_nonnegative ? "true" : "false"},
    };
}

int run_compare(const CompareCmd& c) {
    ensure_dir(c.out_dir);
    TrainConfig cfg = c.train.resolved();
    auto labels = split_list(c.methods);
    if (labels.empty()) throw ConfigError("no methods requested");
    std::vector<MethodSpec> methods;
    for (const auto& label : labels) {
        methods.push_back({label, parse_variant(label), cfg});
    }
    DenseDataset dense = load_dense(c.data);
    ExperimentDataset data = make_experiment_dataset(dense, c.data.strength_kind(),
                                                     c.data.thresholds());
    auto fractions = parse_fraction_list(c.fractions);
    ComparisonReport report = run_comparison(data, methods, fractions, c.runs, c.base_seed,
                                             c.jobs, c.exclude_cold_start);
    write_comparison_outputs(c.out_dir, report);
    auto kv = manifest_common(c.data, c.train);
    kv.push_back({"command", "compare"});
    kv.push_back({"methods", c.methods});
    kv.push_back({"fractions", c.fractions});
    kv.push_back({"runs", std::to_string(c.runs)});
    kv.push_back({"base-seed", std::to_string(c.base_seed)});
    kv.push_back({"exclude-cold-start", c.exclude_cold_start ? "true" : "false"});
    write_manifest(out_path(c.out_dir, "run_manifest.cfg"), std::move(kv));
    std::cout << "wrote comparison for " << methods.size() << " methods, "
              << fractions.size() << " fractions, " << c.runs << " runs to " << c.out_dir
              << "\n";
    return 0;
}

int run_ablate_cmd(const AblateCmd& c) {
    ensure_dir(c.out_dir);
    TrainConfig cfg = c.train.resolved();
    DenseDataset dense = load_dense(c.data);
    ExperimentDataset data = make_experiment_dataset(dense, c.data.strength_kind(),
                                                     c.data.thresholds());
    auto fractions = parse_fraction_list(c.fractions);
    ComparisonReport report =
        run_ablation(data, cfg, cfg.delta, fractions, c.runs, c.base_seed, c.jobs);
    write_comparison_outputs(c.out_dir, report);
    auto kv = manifest_common(c.data, c.train);
    kv.push_back({"command", "ablate"});
    kv.push_back({"fractions", c.fractions});
    kv.push_back({"runs", std::to_string(c.runs)});
    kv.push_back({"base-seed", std::to_string(c.base_seed)});
    write_manifest(out_path(c.out_dir, "run_manifest.cfg"), std::move(kv));
    std::cout << "wrote ablation (csrr, csrr-s, csrr-c, csrr-cs) to " << c.out_dir << "\n";
    return 0;
}

int run_grid(const GridCmd& c) {
    ensure_dir(c.out_dir);
    TrainConfig base = c.train.resolved();
    Variant variant = parse_variant(c.method);
    std::vector<double> gammas = c.gammas.empty() ? std::vector<double>{base.gamma}
                                                  : parse_fraction_list(c.gammas);
    std::vector<double> lambdas = c.lambdas.empty() ? std::vector<double>{base.lambda}
                                                    : parse_fraction_list(c.lambdas);
    auto fractions = parse_fraction_list(c.fractions);
    DenseDataset dense = load_dense(c.data);
    ExperimentDataset data = make_experiment_dataset(dense, c.data.strength_kind(),
                                                     c.data.thresholds());

    CsvWriter w(out_path(c.out_dir, "grid.csv"),
                "method,gamma,lambda,train_fraction,metric,mean,std,runs");
    double best_rmse = std::numeric_limits<double>::infinity();
    double best_gamma = gammas.front();
    double best_lambda = lambdas.front();
    for (double g : gammas) {
        for (double l : lambdas) {
            TrainConfig cfg = base;
            cfg.gamma = g;
            cfg.lambda = l;
            ComparisonReport rep = run_comparison(data, {{c.method, variant, cfg}},
                                                  fractions, c.runs, c.base_seed, c.jobs);
            for (const auto& row : rep.aggregates) {
                w.row({c.method, format_double(g), format_double(l),
                       format_double(row.train_fraction), row.metric,
                       format_double(row.mean), format_double(row.stddev),
                       std::to_string(row.runs)});
                if (row.metric == "rmse" && row.runs > 0 && row.mean < best_rmse) {
                    best_rmse = row.mean;
                    best_gamma = g;
                    best_lambda = l;
                }
            }
            for (const auto& warning : rep.warnings) {
                std::cerr << "warning: " << warning << "\n";
            }
        }
    }
    w.close();
    std::cout << "best by mean rmse: gamma=" << format_double(best_gamma)
              << " lambda=" << format_double(best_lambda)
              << " rmse=" << format_double(best_rmse) << "\n";
    return 0;
}

int run_synth(const SynthCmd& c) {
    SyntheticConfig cfg = c.cfg;
    cfg.quantize = !c.raw;
    cfg.independent_congruity = c.independent;
    cfg.validate();
    ensure_dir(c.out_dir);
    SyntheticData data = generate_synthetic(cfg);
    write_synthetic_csvs(data, out_path(c.out_dir, "ratings.csv"),
                         out_path(c.out_dir, "trust.csv"),
                         out_path(c.out_dir, "helpfulness.csv"));
    write_manifest(out_path(c.out_dir, "run_manifest.cfg"),
                   {
                       {"command", "synth"},
                       {"n-users", std::to_string(cfg.n_users)},
                       {"n-items", std::to_string(cfg.n_items)},
                       {"d", std::to_string(cfg.d)},
                       {"seed", std::to_string(cfg.seed)},
                       {"rating-density", format_double(cfg.rating_density)},
                       {"noise-sigma", format_double(cfg.noise_sigma)},
                       {"raw", cfg.quantize ? "false" : "true"},
                       {"user-spread", format_double(cfg.user_spread)},
                       {"item-spread", format_double(cfg.item_spread)},
                       {"congruity-density", format_double(cfg.congruity_density)},
                       {"congruity-scale", format_double(cfg.congruity_scale)},
                       {"congruity-noise", format_double(cfg.congruity_noise)},
                       {"congruity-neg-fraction", format_double(cfg.congruity_neg_fraction)},
                       {"independent-congruity", cfg.independent_congruity ? "true" : "false"},
                       {"friend-density", format_double(cfg.friend_density)},
                       {"friend-sharpness", format_double(cfg.friend_sharpness)},
                       {"n-clusters", std::to_string(cfg.n_clusters)},
                       {"cluster-amp", format_double(cfg.cluster_amp)},
                       {"cluster-spread", format_double(cfg.cluster_spread)},
                   });
    std::cout << "wrote " << data.ratings.size() << " ratings, " << data.trust.size()
              << " friendships, " << data.helpfulness.size() << " helpfulness events to "
              << c.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"congruity-regularized recommendation toolkit"};
    app.require_subcommand(1);

    PreprocessCmd preprocess_cmd;
    CongruityCmd congruity_cmd;
    AnalyzeCmd analyze_cmd;
    TrainCmd train_cmd;
    EvaluateCmd evaluate_cmd;
    CompareCmd compare_cmd;
    AblateCmd ablate_cmd;
    GridCmd grid_cmd;
    SynthCmd synth_cmd;

    {
        auto* cmd = app.add_subcommand("preprocess",
                                       "filter and densify a dataset, write it back out");
        add_data_options(cmd, preprocess_cmd.data, false);
        cmd->add_option("--out-dir", preprocess_cmd.out_dir, "output directory")->required();
        cmd->add_flag("--report", preprocess_cmd.report, "also write retained_users.csv");
        finish_subcommand(cmd);
    }
    {
        auto* cmd = app.add_subcommand("congruity",
                                       "reconstruct pairwise congruity from helpfulness votes");
        add_data_options(cmd, congruity_cmd.data, true);
        cmd->add_option("--out", congruity_cmd.out, "output CSV path")->required();
        finish_subcommand(cmd);
    }
    {
        auto* cmd =
            app.add_subcommand("analyze", "pair taxonomy plus the two congruity t-tests");
        add_data_options(cmd, analyze_cmd.data, true);
        cmd->add_option("--out-dir", analyze_cmd.out_dir, "output directory")->required();
        cmd->add_option("--alpha", analyze_cmd.alpha, "significance level")
            ->capture_default_str();
        cmd->add_option("--seed", analyze_cmd.seed, "seed for comparison-partner draws")
            ->capture_default_str();
        finish_subcommand(cmd);
    }
    {
        auto* cmd = app.add_subcommand("train", "train one method, optionally on a split");
        add_data_options(cmd, train_cmd.data, true);
        cmd->add_option("--method", train_cmd.method, "mf, smf, soreg, cr or csrr")
            ->capture_default_str();
        add_train_options(cmd, train_cmd.train);
        cmd->add_option("--train-fraction", train_cmd.train_fraction,
                        "hold out the rest as a test set (0 trains on everything)")
            ->capture_default_str();
        cmd->add_option("--model-out", train_cmd.model_out, "write the trained model here");
        cmd->add_option("--trace-out", train_cmd.trace_out, "write the objective trace here");
        finish_subcommand(cmd);
    }
    {
        auto* cmd = app.add_subcommand("evaluate", "score a saved model against a ratings CSV");
        cmd->add_option("--model", evaluate_cmd.model_path, "model file from train")
            ->required();
        cmd->add_option("--ratings", evaluate_cmd.ratings_path, "ratings CSV to score")
            ->required();
        cmd->add_flag("--clamp", evaluate_cmd.clamp, "clamp predictions into [1, 5]");
        finish_subcommand(cmd);
    }
    {
        auto* cmd = app.add_subcommand("compare", "multi-run method comparison with t-tests");
        add_data_options(cmd, compare_cmd.data, true);
        add_train_options(cmd, compare_cmd.train);
        cmd->add_option("--methods", compare_cmd.methods, "comma-separated method list")
            ->capture_default_str();
        cmd->add_option("--fractions", compare_cmd.fractions,
                        "comma-separated train fractions")
            ->capture_default_str();
        cmd->add_option("--runs", compare_cmd.runs, "runs per method and fraction")
            ->capture_default_str();
        cmd->add_option("--base-seed", compare_cmd.base_seed, "root of all run seeds")
            ->capture_default_str();
        cmd->add_option("--jobs", compare_cmd.jobs, "parallel workers")
            ->capture_default_str();
        cmd->add_flag("--exclude-cold-start", compare_cmd.exclude_cold_start,
                      "drop test entries whose user or item is unseen in training");
        cmd->add_option("--out-dir", compare_cmd.out_dir, "output directory")->required();
        finish_subcommand(cmd);
    }
    {
        auto* cmd = app.add_subcommand(
            "ablate", "csrr ablation: full, no-social, no-congruity, neither");
        add_data_options(cmd, ablate_cmd.data, true);
        add_train_options(cmd, ablate_cmd.train);
        cmd->add_option("--fractions", ablate_cmd.fractions, "comma-separated train fractions")
            ->capture_default_str();
        cmd->add_option("--runs", ablate_cmd.runs, "runs per variant and fraction")
            ->capture_default_str();
        cmd->add_option("--base-seed", ablate_cmd.base_seed, "root of all run seeds")
            ->capture_default_str();
        cmd->add_option("--jobs", ablate_cmd.jobs, "parallel workers")->capture_default_str();
        cmd->add_option("--out-dir", ablate_cmd.out_dir, "output directory")->required();
        finish_subcommand(cmd);
    }
    {
        auto* cmd = app.add_subcommand("grid",
                                       "hyperparameter grid over gamma and lambda, "
                                       "min-error pick by mean rmse");
        add_data_options(cmd, grid_cmd.data, true);
        add_train_options(cmd, grid_cmd.train);
        cmd->add_option("--method", grid_cmd.method, "method to sweep")->capture_default_str();
        cmd->add_option("--gammas", grid_cmd.gammas, "comma-separated gamma values");
        cmd->add_option("--lambdas", grid_cmd.lambdas, "comma-separated lambda values");
        cmd->add_option("--fractions", grid_cmd.fractions, "comma-separated train fractions")
            ->capture_default_str();
        cmd->add_option("--runs", grid_cmd.runs, "runs per grid cell")->capture_default_str();
        cmd->add_option("--base-seed", grid_cmd.base_seed, "root of all run seeds")
            ->capture_default_str();
        cmd->add_option("--jobs", grid_cmd.jobs, "parallel workers")->capture_default_str();
        cmd->add_option("--out-dir", grid_cmd.out_dir, "output directory")->required();
        finish_subcommand(cmd);
    }
    {
        auto* cmd = app.add_subcommand("synth", "generate a planted-structure dataset");
        cmd->add_option("--out-dir", synth_cmd.out_dir, "output directory")->required();
        cmd->add_option("--n-users", synth_cmd.cfg.n_users, "number of users")
            ->capture_default_str();
        cmd->add_option("--n-items", synth_cmd.cfg.n_items, "number of items")
            ->capture_default_str();
        cmd->add_option("--d", synth_cmd.cfg.d, "latent dimension")->capture_default_str();
        cmd->add_option("--seed", synth_cmd.cfg.seed, "generator seed")->capture_default_str();
        cmd->add_option("--rating-density", synth_cmd.cfg.rating_density,
                        "observation probability per (user, item)")
            ->capture_default_str();
        cmd->add_option("--noise-sigma", synth_cmd.cfg.noise_sigma, "rating noise sd")
            ->capture_default_str();
        cmd->add_flag("--raw", synth_cmd.raw, "keep ratings unquantized in [1, 5]");
        cmd->add_option("--user-spread", synth_cmd.cfg.user_spread, "latent user spread")
            ->capture_default_str();
        cmd->add_option("--item-spread", synth_cmd.cfg.item_spread, "latent item spread")
            ->capture_default_str();
        cmd->add_option("--congruity-density", synth_cmd.cfg.congruity_density,
                        "fraction of user pairs given planted congruity")
            ->capture_default_str();
        cmd->add_option("--congruity-scale", synth_cmd.cfg.congruity_scale,
                        "target congruity per unit latent cosine")
            ->capture_default_str();
        cmd->add_option("--congruity-noise", synth_cmd.cfg.congruity_noise,
                        "noise on cosines before pair selection")
            ->capture_default_str();
        cmd->add_option("--congruity-neg-fraction", synth_cmd.cfg.congruity_neg_fraction,
                        "share of planted pairs made incongruent")
            ->capture_default_str();
        cmd->add_flag("--independent-congruity", synth_cmd.independent,
                      "plant congruity from a fresh latent draw (null calibration)");
        cmd->add_option("--friend-density", synth_cmd.cfg.friend_density,
                        "base friendship probability")
            ->capture_default_str();
        cmd->add_option("--friend-sharpness", synth_cmd.cfg.friend_sharpness,
                        "similarity slope of the friendship link")
            ->capture_default_str();
        cmd->add_option("--n-clusters", synth_cmd.cfg.n_clusters,
                        "latent user clusters (0 = unimodal)")
            ->capture_default_str();
        cmd->add_option("--cluster-amp", synth_cmd.cfg.cluster_amp,
                        "cluster center displacement")
            ->capture_default_str();
        cmd->add_option("--cluster-spread", synth_cmd.cfg.cluster_spread,
                        "within-cluster spread")
            ->capture_default_str();
        finish_subcommand(cmd);
    }

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        std::reverse(args.begin(), args.end());  // CLI11 consumes back to front
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("preprocess")) return run_preprocess(preprocess_cmd);
        if (app.got_subcommand("congruity")) return run_congruity(congruity_cmd);
        if (app.got_subcommand("analyze")) return run_analyze(analyze_cmd);
        if (app.got_subcommand("train")) return run_train(train_cmd);
        if (app.got_subcommand("evaluate")) return run_evaluate(evaluate_cmd);
        if (app.got_subcommand("compare")) return run_compare(compare_cmd);
        if (app.got_subcommand("ablate")) return run_ablate_cmd(ablate_cmd);
        if (app.got_subcommand("grid")) return run_grid(grid_cmd);
        if (app.got_subcommand("synth")) return run_synth(synth_cmd);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
