#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "congrec/congruity.hpp"
#include "congrec/core.hpp"
#include "congrec/csv.hpp"
#include "congrec/errors.hpp"
#include "congrec/factorization.hpp"
#include "congrec/ingest.hpp"
#include "congrec/rng.hpp"
#include "congrec/stats.hpp"

namespace congrec {

struct SplitSpec {
    double train_fraction = 0.9;
    std::uint64_t seed = 0;
};

inline std::size_t split_train_count(double fraction, std::size_t total) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
}

// Seeded uniform partition of the rating entries. Train gets round(x * total)
// entries; both sides must end up nonempty.
inline std::pair<SparseRatings, SparseRatings> split(const SparseRatings& ratings,
                                                     const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie strictly between 0 and 1");
    }
    const std::size_t total = ratings.size();
    const std::size_t n_train = split_train_count(spec.train_fraction, total);
    if (n_train == 0 || n_train == total) {
        throw DataError("train fraction " + format_double(spec.train_fraction) + " on " +
                        std::to_string(total) + " ratings leaves an empty side");
    }
    std::vector<std::size_t> perm(total);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(spec.seed);
    rng.shuffle(perm);
    std::vector<RatingEntry> train_entries;
    std::vector<RatingEntry> test_entries;
    train_entries.reserve(n_train);
    test_entries.reserve(total - n_train);
    const auto& entries = ratings.entries();
    for (std::size_t k = 0; k < total; ++k) {
        (k < n_train ? train_entries : test_entries).push_back(entries[perm[k]]);
    }
    return {SparseRatings(ratings.n_users(), ratings.n_items(), std::move(train_entries)),
            SparseRatings(ratings.n_users(), ratings.n_items(), std::move(test_entries))};
}

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t count = 0;
};

// Unclamped predictions by default; users or items absent from training keep
// their initialized factors and are still scored unless the caller filtered
// them out beforehand.
inline Metrics evaluate_metrics(const FactorModel& model, const SparseRatings& test,
                                bool clamp = false) {
    if (test.empty()) throw DataError("cannot evaluate on an empty test set");
    double sq = 0.0;
    double ab = 0.0;
    for (const auto& e : test.entries()) {
        const double err = model.predict(e.user, e.item, clamp) - e.value;
        sq += err * err;
        ab += std::fabs(err);
    }
    const double n = static_cast<double>(test.size());
    return {std::sqrt(sq / n), ab / n, test.size()};
}

inline double rmse(const FactorModel& model, const SparseRatings& test, bool clamp = false) {
    return evaluate_metrics(model, test, clamp).rmse;
}

inline double mae(const FactorModel& model, const SparseRatings& test, bool clamp = false) {
    return evaluate_metrics(model, test, clamp).mae;
}

// Drops test entries whose user or item never occurs in train; the flagged
// alternative to scoring cold-start rows from initialized factors.
inline SparseRatings drop_cold_start(const SparseRatings& train, const SparseRatings& test) {
    std::vector<RatingEntry> kept;
    for (const auto& e : test.entries()) {
        if (train.user_degree(e.user) > 0 && train.item_degree(e.item) > 0) {
            kept.push_back(e);
        }
    }
    if (kept.empty()) {
        throw DataError("every test entry is cold-start; nothing left to evaluate");
    }
    return SparseRatings(test.n_users(), test.n_items(), std::move(kept));
}

// Everything a comparison needs besides per-method configuration. Similarity
// for SMF/SoReg is rebuilt from each training split, not stored here, so the
// regularizer never sees test ratings.
struct ExperimentDataset {
    SparseRatings ratings;
    SocialGraph graph;
    UserPairMatrix congruity;
};

inline ExperimentDataset make_experiment_dataset(const DenseDataset& d,
                                                 StrengthKind kind = StrengthKind::Clamped,
                                                 const InteractionThresholds& thresholds = {}) {
    ExperimentDataset out;
    out.ratings = d.ratings;
    out.graph = d.graph;
    out.congruity = build_congruity(count_interactions(d.users.size(), d.events, thresholds), kind);
    return out;
}

struct MethodSpec {
    std::string label;
    Variant variant = Variant::MF;
    TrainConfig config;
};

struct RunRecord {
    std::string method;
    double train_fraction = 0.0;
    std::int32_t run = 0;
    bool failed = false;
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double mae = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct AggregateRow {
    std::string method;
    double train_fraction = 0.0;
    std::string metric;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
    std::int32_t runs = 0;
};

struct PairwiseRow {
    std::string method_a;
    std::string method_b;
    double train_fraction = 0.0;
    std::string metric;
    double p_value = std::numeric_limits<double>::quiet_NaN();
};

struct ComparisonReport {
    std::vector<RunRecord> runs;
    std::vector<AggregateRow> aggregates;
    std::vector<PairwiseRow> pairwise;
    std::vector<std::string> warnings;
};

// Seed derivation: splits depend on (base_seed, fraction, run) and training on
// the same triple, both independent of the method, so every method sees
// identical splits and identical factor initialization at equal run indices.
// That is what makes the gamma = 0 ablation bitwise-identical to plain MF.
inline std::uint64_t split_seed(std::uint64_t base_seed, std::size_t fraction_idx,
                                std::int32_t run) {
    return mix_seed(base_seed, {0x5117u, fraction_idx, static_cast<std::uint64_t>(run)});
}

inline std::uint64_t train_seed(std::uint64_t base_seed, std::size_t fraction_idx,
                                std::int32_t run) {
    return mix_seed(base_seed, {0x7121u, fraction_idx, static_cast<std::uint64_t>(run)});
}

namespace detail {

inline bool needs_similarity(Variant v) {
    return v == Variant::SMF || v == Variant::SoReg;
}

}  // namespace detail

// Runs every (method, fraction, run) cell: split, build the method's
// closeness matrix from training data, train, evaluate. Divergent runs are
// recorded as failed, excluded from aggregates, and reported in the warnings,
// never silently dropped. With jobs > 1 the cells run on a thread pool; each
// cell writes only its own slot, so results are schedule-independent.
inline ComparisonReport run_comparison(const ExperimentDataset& data,
                                       const std::vector<MethodSpec>& methods,
                                       const std::vector<double>& fractions,
                                       std::int32_t runs, std::uint64_t base_seed,
                                       std::int32_t jobs = 1,
                                       bool exclude_cold_start = false) {
    if (methods.empty()) throw ConfigError("no methods requested");
    if (runs < 2) throw ConfigError("need at least 2 runs for mean and spread");
    if (fractions.empty()) throw ConfigError("no train fractions requested");
    for (double x : fractions) {
        if (!(x > 0.0 && x < 1.0)) {
            throw ConfigError("train fraction must lie strictly between 0 and 1");
        }
    }
    for (std::size_t a = 0; a < methods.size(); ++a) {
        for (std::size_t b = a + 1; b < methods.size(); ++b) {
            if (methods[a].label == methods[b].label) {
                throw ConfigError("duplicate method label '" + methods[a].label + "'");
            }
        }
    }
    if (jobs < 1) throw ConfigError("jobs must be at least 1");

    struct Cell {
        std::size_t method_idx;
        std::size_t fraction_idx;
        std::int32_t run;
    };
    std::vector<Cell> cells;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
            for (std::int32_t r = 0; r < runs; ++r) cells.push_back({mi, fi, r});
        }
    }

    std::vector<RunRecord> records(cells.size());
    auto work = [&](std::size_t cell_idx) {
        const Cell& c = cells[cell_idx];
        const MethodSpec& method = methods[c.method_idx];
        RunRecord rec;
        rec.method = method.label;
        rec.train_fraction = fractions[c.fraction_idx];
        rec.run = c.run;
        try {
            auto [train_set, test_set] = split(
                data.ratings, {fractions[c.fraction_idx],
                               split_seed(base_seed, c.fraction_idx, c.run)});
            UserPairMatrix similarity;
            ClosenessInputs inputs;
            inputs.congruity = &data.congruity;
            inputs.graph = &data.graph;
            if (detail::needs_similarity(method.variant)) {
                similarity = cosine_user_similarity(train_set);
                inputs.similarity = &similarity;
            }
            UserPairMatrix closeness =
                build_closeness(method.variant, data.ratings.n_users(), inputs,
                                method.config.delta,
                                method.config.clamp_closeness_nonnegative);
            TrainConfig cfg = method.config;
            cfg.seed = train_seed(base_seed, c.fraction_idx, c.run);
            TrainResult trained = train(train_set, closeness, cfg, method.variant);
            const SparseRatings& eval_set =
                exclude_cold_start ? drop_cold_start(train_set, test_set) : test_set;
            Metrics m = evaluate_metrics(trained.model, eval_set, cfg.clamp_predictions);
            rec.rmse = m.rmse;
            rec.mae = m.mae;
        } catch (const Error& e) {
            rec.failed = true;
            rec.error = e.what();
        }
        records[cell_idx] = std::move(rec);
    };

    if (jobs == 1) {
        for (std::size_t k = 0; k < cells.size(); ++k) work(k);
    } else {
        const std::size_t workers = std::min<std::size_t>(
            static_cast<std::size_t>(jobs), std::max<std::size_t>(cells.size(), 1));
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t k = w; k < cells.size(); k += workers) work(k);
            });
        }
        for (auto& t : pool) t.join();
    }

    ComparisonReport report;
    report.runs = std::move(records);
    for (const auto& rec : report.runs) {
        if (rec.failed) {
            report.warnings.push_back("run failed: method=" + rec.method + " fraction=" +
                                      format_double(rec.train_fraction) + " run=" +
                                      std::to_string(rec.run) + ": " + rec.error);
        }
    }

    const char* metric_names[2] = {"rmse", "mae"};
    auto metric_samples = [&](std::size_t mi, std::size_t fi, int metric) {
        std::vector<double> xs;
        for (const auto& rec : report.runs) {
            if (rec.failed || rec.method != methods[mi].label ||
                rec.train_fraction != fractions[fi]) {
                continue;
            }
            xs.push_back(metric == 0 ? rec.rmse : rec.mae);
        }
        return xs;
    };

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
            for (int metric = 0; metric < 2; ++metric) {
                auto xs = metric_samples(mi, fi, metric);
                AggregateRow row;
                row.method = methods[mi].label;
                row.train_fraction = fractions[fi];
                row.metric = metric_names[metric];
                row.runs = static_cast<std::int32_t>(xs.size());
                if (!xs.empty()) {
                    row.mean = sample_mean(xs);
                    row.stddev = xs.size() > 1 ? std::sqrt(sample_variance(xs, row.mean)) : 0.0;
                }
                report.aggregates.push_back(std::move(row));
            }
        }
    }

    for (std::size_t a = 0; a < methods.size(); ++a) {
        for (std::size_t b = a + 1; b < methods.size(); ++b) {
            for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
                for (int metric = 0; metric < 2; ++metric) {
                    PairwiseRow row;
                    row.method_a = methods[a].label;
                    row.method_b = methods[b].label;
                    row.train_fraction = fractions[fi];
                    row.metric = metric_names[metric];
                    auto xa = metric_samples(a, fi, metric);
                    auto xb = metric_samples(b, fi, metric);
                    if (xa.size() >= 2 && xb.size() >= 2) {
                        row.p_value = welch_t_test(xa, xb, Tail::TwoSided).p;
                    } else {
                        report.warnings.push_back(
                            "too few successful runs to compare " + row.method_a + " vs " +
                            row.method_b + " on " + row.metric + " at fraction " +
                            format_double(fractions[fi]));
                    }
                    report.pairwise.push_back(std::move(row));
                }
            }
        }
    }
    return report;
}

// The four-way ablation of the blended variant: full blend, social component
// removed (delta = 0), congruity component removed (delta = 1), both removed
// (gamma = 0, which is plain factorization). Note the delta = 0 leg uses the
// rescaled congruity (C + 1) / 2 on the blend support, which is a different
// matrix from the raw-congruity variant whenever C has non-positive entries.
inline std::vector<MethodSpec> ablation_methods(const TrainConfig& base, double delta) {
    if (delta < 0.0 || delta > 1.0) throw ConfigError("delta must lie in [0, 1]");
    MethodSpec full{"csrr", Variant::CSRR, base};
    full.config.delta = delta;
    MethodSpec no_social{"csrr-s", Variant::CSRR, base};
    no_social.config.delta = 0.0;
    MethodSpec no_congruity{"csrr-c", Variant::CSRR, base};
    no_congruity.config.delta = 1.0;
    MethodSpec neither{"csrr-cs", Variant::CSRR, base};
    neither.config.gamma = 0.0;
    return {full, no_social, no_congruity, neither};
}

inline ComparisonReport run_ablation(const ExperimentDataset& data, const TrainConfig& base,
                                     double delta, const std::vector<double>& fractions,
                                     std::int32_t runs, std::uint64_t base_seed,
                                     std::int32_t jobs = 1) {
    return run_comparison(data, ablation_methods(base, delta), fractions, runs, base_seed,
                          jobs);
}

// --- report files -----------------------------------------------------------

inline void write_aggregate_csv(const std::string& path, const ComparisonReport& report) {
    CsvWriter w(path, "method,train_fraction,metric,mean,std,runs");
    for (const auto& r : report.aggregates) {
        w.row({r.method, format_double(r.train_fraction), r.metric, format_double(r.mean),
               format_double(r.stddev), std::to_string(r.runs)});
    }
}

inline void write_pairwise_csv(const std::string& path, const ComparisonReport& report) {
    CsvWriter w(path, "method_a,method_b,train_fraction,metric,p_value");
    for (const auto& r : report.pairwise) {
        w.row({r.method_a, r.method_b, format_double(r.train_fraction), r.metric,
               format_double(r.p_value)});
    }
}

// Long-format per-run export for plotting; failed runs keep their row with
// status=failed and empty metric values.
inline void write_runs_csv(const std::string& path, const ComparisonReport& report) {
    CsvWriter w(path, "method,train_fraction,run,metric,value,status");
    for (const auto& r : report.runs) {
        const char* status = r.failed ? "failed" : "ok";
        w.row({r.method, format_double(r.train_fraction), std::to_string(r.run), "rmse",
               r.failed ? "" : format_double(r.rmse), status});
        w.row({r.method, format_double(r.train_fraction), std::to_string(r.run), "mae",
               r.failed ? "" : format_double(r.mae), status});
    }
}

}  // namespace congrec
