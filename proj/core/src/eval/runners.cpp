#include "permdet/eval/runners.hpp"

#include <algorithm>
#include <chrono>

#include "permdet/corpus/sampling.hpp"
#include "permdet/eval/kfold.hpp"
#include "permdet/util/hash.hpp"

namespace permdet::eval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> true_labels(const nn::EncodedData& data) { return data.labels; }

// Metrics of `params` on an encoded eval set, including scores and loss.
template <typename T>
EvalMetrics evaluate_cell(const nn::ParameterStore<T>& params,
                          const nn::ModelConfig& cfg, const nn::EncodedData& eval,
                          ConfusionMatrix* cm_out) {
    auto preds = nn::predict(params, cfg, eval);
    std::vector<int> labels = true_labels(eval);
    std::vector<int> hard;
    std::vector<double> scores;
    hard.reserve(preds.size());
    scores.reserve(preds.size());
    for (const auto& p : preds) {
        hard.push_back(p.label);
        scores.push_back(p.probs.size() > 1 ? p.probs[1] : 0.0);
    }
    ConfusionMatrix cm = confusion(hard, labels);
    if (cm_out) *cm_out = cm;
    EvalMetrics m = metrics(cm, scores, labels);

    // Mean cross-entropy on the eval set.
    double loss_sum = 0.0;
    for (size_t start = 0; start < eval.size(); start += 64) {
        size_t stop = std::min(eval.size(), start + 64);
        nn::Batch batch = nn::Batch::from_sequences(
            std::span(eval.seqs).subspan(start, stop - start));
        std::vector<int> batch_labels(labels.begin() + static_cast<long>(start),
                                      labels.begin() + static_cast<long>(stop));
        auto fwd = nn::forward(params, cfg, batch);
        loss_sum += static_cast<double>(nn::cross_entropy(fwd.logits, batch_labels)) *
                    static_cast<double>(stop - start);
    }
    m.test_loss = eval.size() ? loss_sum / static_cast<double>(eval.size()) : 0.0;
    return m;
}

nn::EncodedData take_indices(const nn::EncodedData& data,
                             const std::vector<size_t>& idx) {
    nn::EncodedData out;
    out.seqs.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (size_t i : idx) {
        out.seqs.push_back(data.seqs[i]);
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

nlohmann::json cell_config_json(const nn::ModelConfig& model,
                                const nn::TrainConfig& train) {
    nlohmann::json j;
    j["model"] = nlohmann::json::parse(nn::to_json(model));
    j["train"] = nlohmann::json::parse(nn::to_json(train));
    return j;
}

}  // namespace

std::string dataset_hash(const corpus::Records& records) {
    std::string blob;
    for (const auto& r : records) {
        blob += r.id;
        blob += '|';
        blob += std::to_string(corpus::label_value(r.label));
        blob += '|';
        blob += r.text;
        if (r.vt_flags) blob += "|f" + std::to_string(*r.vt_flags);
        if (r.year) blob += "|y" + std::to_string(*r.year);
        blob += '\n';
    }
    return util::sha256_hex(
        std::span(reinterpret_cast<const uint8_t*>(blob.data()), blob.size()));
}

Report run_ablation(const corpus::Records& records, const ExperimentSpec& spec) {
    Report report;
    report.kind = "ablation";
    report.master_seed = spec.master_seed;
    report.best_metric = "mcc";
    std::string data_hash = dataset_hash(records);

    text::Vocabulary vocab =
        text::build_vocab(records, spec.segment_mode, spec.vocab_min_count);
    nn::ModelConfig base = spec.model;
    base.vocab_size = vocab.size();
    nn::EncodedData all = nn::encode_records(records, vocab, base.max_len);

    struct CellDef {
        const char* id;
        nn::Pooling pooling;
        bool fine_tune;
    };
    // Grid order mirrors the four classic configurations.
    const CellDef defs[] = {
        {"exp1_pooler_frozen", nn::Pooling::Pooler, false},
        {"exp2_lasthidden_frozen", nn::Pooling::LastHiddenMean, false},
        {"exp3_pooler_finetune", nn::Pooling::Pooler, true},
        {"exp4_lasthidden_finetune", nn::Pooling::LastHiddenMean, true},
    };

    double best_mcc = -2.0;
    for (const auto& def : defs) {
        auto start_time = Clock::now();
        nn::ModelConfig cfg = base;
        cfg.pooling = def.pooling;
        cfg.fine_tune_encoder = def.fine_tune;

        ReportCell cell;
        cell.id = def.id;
        cell.seed = util::derive_seed(spec.master_seed, def.id);
        cell.dataset_hash = data_hash;

        ConfusionMatrix pooled_cm;
        for (uint64_t seed : spec.seeds) {
            uint64_t cell_seed = util::derive_seed(cell.seed, std::to_string(seed));
            auto folds = kfold_split(all.size(), spec.folds, cell_seed);
            for (size_t f = 0; f < folds.size(); ++f) {
                std::vector<size_t> train_idx;
                for (size_t g = 0; g < folds.size(); ++g)
                    if (g != f)
                        train_idx.insert(train_idx.end(), folds[g].begin(),
                                         folds[g].end());
                nn::EncodedData train_data = take_indices(all, train_idx);
                nn::EncodedData eval_data = take_indices(all, folds[f]);

                nn::TrainConfig tc = spec.train;
                tc.seed = util::derive_seed(cell_seed, "fold" + std::to_string(f));
                auto trained = nn::train_model<float>(train_data, eval_data, cfg, tc);

                ConfusionMatrix cm;
                EvalMetrics m = evaluate_cell(trained.params, cfg, eval_data, &cm);
                pooled_cm.tp += cm.tp;
                pooled_cm.tn += cm.tn;
                pooled_cm.fp += cm.fp;
                pooled_cm.fn += cm.fn;
                cell.folds.push_back(m);
            }
        }
        cell.mean = metrics_mean(cell.folds);
        cell.stddev = metrics_stddev(cell.folds);
        cell.total_confusion = pooled_cm;
        cell.config = cell_config_json(cfg, spec.train);
        cell.config["pooling"] = def.pooling == nn::Pooling::Pooler ? "pooler"
                                                                    : "last_hidden_mean";
        cell.config["fine_tune"] = def.fine_tune;
        cell.wall_time_s = seconds_since(start_time);
        if (cell.mean.mcc > best_mcc) {
            best_mcc = cell.mean.mcc;
            report.best_cell = cell.id;
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

Report run_threshold_sweep(const corpus::Records& flag_records,
                           const std::vector<corpus::ThresholdRule>& rules,
                           const corpus::Records& eval_records,
                           const ExperimentSpec& spec,
                           const ThresholdSweepOptions& options) {
    Report report;
    report.kind = "threshold_sweep";
    report.master_seed = spec.master_seed;
    report.best_metric = "mcc";
    std::string pool_hash = dataset_hash(flag_records);
    std::string eval_hash = dataset_hash(eval_records);

    double best_mcc = -2.0;
    for (const auto& rule : rules) {
        auto start_time = Clock::now();
        std::string cell_id = rule.name();
        uint64_t cell_seed = util::derive_seed(spec.master_seed, cell_id);

        auto labeling = corpus::label_by_flags(flag_records, rule);
        size_t benign_total = 0, malware_total = 0;
        for (const auto& r : labeling.labeled)
            (r.label == corpus::Label::Benign ? benign_total : malware_total) += 1;

        size_t n_b = std::min(options.n_benign, benign_total);
        size_t n_m = std::min(options.n_malware, malware_total);
        corpus::Records training =
            corpus::stratified_sample(labeling.labeled, n_b, n_m, cell_seed);

        // Vocabulary comes from the flag-labeled pool; the eval set is
        // encoded with the same vocabulary, unknowns become [UNK].
        text::Vocabulary vocab =
            text::build_vocab(training, spec.segment_mode, spec.vocab_min_count);
        nn::ModelConfig cfg = spec.model;
        cfg.vocab_size = vocab.size();

        nn::TrainConfig tc = spec.train;
        tc.seed = cell_seed;
        tc.eval_fraction = spec.split;
        auto trained = nn::train_model<float>(training, vocab, cfg, tc);

        nn::EncodedData eval_data =
            nn::encode_records(eval_records, vocab, cfg.max_len);
        ReportCell cell;
        cell.id = cell_id;
        cell.seed = cell_seed;
        cell.dataset_hash = pool_hash;
        ConfusionMatrix cm;
        EvalMetrics m = evaluate_cell(trained.params, cfg, eval_data, &cm);
        cell.folds.push_back(m);
        cell.mean = m;
        cell.stddev = metrics_stddev(cell.folds);
        cell.total_confusion = cm;
        cell.config = cell_config_json(cfg, tc);
        cell.config["benign_max"] = rule.benign_max;
        cell.config["malware_min"] = rule.malware_min;
        cell.config["eval_dataset_hash"] = eval_hash;
        cell.extra["benign_total"] = static_cast<double>(benign_total);
        cell.extra["malware_total"] = static_cast<double>(malware_total);
        cell.extra["dropped"] = static_cast<double>(labeling.dropped);
        cell.extra["n_benign_sampled"] = static_cast<double>(n_b);
        cell.extra["n_malware_sampled"] = static_cast<double>(n_m);
        cell.wall_time_s = seconds_since(start_time);
        if (m.mcc > best_mcc) {
            best_mcc = m.mcc;
            report.best_cell = cell.id;
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

Report run_timecv(const corpus::Records& records,
                  const std::vector<std::set<int>>& train_pairs,
                  const std::vector<std::set<int>>& test_sets,
                  const ExperimentSpec& spec) {
    Report report;
    report.kind = "timecv";
    report.master_seed = spec.master_seed;
    report.best_metric = "";
    std::string data_hash = dataset_hash(records);

    auto bucket_name = [](const std::set<int>& ys) {
        std::string s;
        for (int y : ys) {
            if (!s.empty()) s += '-';
            s += std::to_string(y);
        }
        return s;
    };

    std::vector<std::set<int>> all_sets = train_pairs;
    all_sets.insert(all_sets.end(), test_sets.begin(), test_sets.end());
    auto buckets = corpus::partition_by_year(records, all_sets);

    for (size_t tp = 0; tp < train_pairs.size(); ++tp) {
        const auto& train_years = train_pairs[tp];
        const auto& train_bucket = buckets[tp];
        std::string train_name = bucket_name(train_years);
        if (train_bucket.records.empty()) {
            report.skipped.push_back("train_" + train_name + ": empty bucket");
            continue;
        }
        int train_max_year = *train_years.rbegin();
        uint64_t pair_seed = util::derive_seed(spec.master_seed, train_name);

        text::Vocabulary vocab = text::build_vocab(train_bucket.records,
                                                   spec.segment_mode,
                                                   spec.vocab_min_count);
        nn::ModelConfig cfg = spec.model;
        cfg.vocab_size = vocab.size();
        nn::TrainConfig tc = spec.train;
        tc.seed = pair_seed;
        tc.eval_fraction = spec.split;

        // Hold out `split` of the bucket as the same-period reference set.
        nn::EncodedData all = nn::encode_records(train_bucket.records, vocab,
                                                 cfg.max_len);
        std::vector<size_t> idx(all.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        util::Rng split_rng(util::splitmix64(pair_seed ^ 0x51173e4aULL));
        split_rng.shuffle(idx);
        auto n_eval = static_cast<size_t>(spec.split * static_cast<double>(all.size()));
        std::vector<size_t> eval_idx(idx.begin(), idx.begin() + static_cast<long>(n_eval));
        std::vector<size_t> train_idx(idx.begin() + static_cast<long>(n_eval), idx.end());
        nn::EncodedData same_period = take_indices(all, eval_idx);
        nn::EncodedData train_data = take_indices(all, train_idx);
        if (train_data.size() == 0) {
            report.skipped.push_back("train_" + train_name + ": empty after split");
            continue;
        }

        auto start_time = Clock::now();
        auto trained = nn::train_model<float>(train_data, same_period, cfg, tc);
        double train_wall = seconds_since(start_time);

        ConfusionMatrix same_cm;
        EvalMetrics same_m = evaluate_cell(trained.params, cfg, same_period, &same_cm);

        ReportCell same_cell;
        same_cell.id = "train_" + train_name + "_test_same_period";
        same_cell.seed = pair_seed;
        same_cell.dataset_hash = data_hash;
        same_cell.folds.push_back(same_m);
        same_cell.mean = same_m;
        same_cell.stddev = metrics_stddev(same_cell.folds);
        same_cell.total_confusion = same_cm;
        same_cell.config = cell_config_json(cfg, tc);
        same_cell.config["train_years"] = std::vector<int>(train_years.begin(),
                                                           train_years.end());
        same_cell.wall_time_s = train_wall;
        report.cells.push_back(same_cell);

        Series acc_series, f1_series;
        acc_series.name = "accuracy_train_" + train_name;
        f1_series.name = "f1_train_" + train_name;

        for (size_t ts = 0; ts < test_sets.size(); ++ts) {
            const auto& test_years = test_sets[ts];
            int test_min_year = *test_years.begin();
            if (test_min_year <= train_max_year) continue;  // strictly later only
            const auto& test_bucket = buckets[train_pairs.size() + ts];
            std::string test_name = bucket_name(test_years);
            std::string cell_id = "train_" + train_name + "_test_" + test_name;
            if (test_bucket.records.empty()) {
                report.skipped.push_back(cell_id + ": empty bucket");
                continue;
            }
            auto cell_start = Clock::now();
            nn::EncodedData test_data =
                nn::encode_records(test_bucket.records, vocab, cfg.max_len);
            ConfusionMatrix cm;
            EvalMetrics m = evaluate_cell(trained.params, cfg, test_data, &cm);

            ReportCell cell;
            cell.id = cell_id;
            cell.seed = pair_seed;
            cell.dataset_hash = data_hash;
            cell.folds.push_back(m);
            cell.mean = m;
            cell.stddev = metrics_stddev(cell.folds);
            cell.total_confusion = cm;
            cell.config = cell_config_json(cfg, tc);
            cell.config["train_years"] = std::vector<int>(train_years.begin(),
                                                          train_years.end());
            cell.config["test_years"] = std::vector<int>(test_years.begin(),
                                                         test_years.end());
            double acc_same = same_m.accuracy.weighted_avg;
            double acc_future = m.accuracy.weighted_avg;
            cell.extra["same_period_accuracy"] = acc_same;
            cell.extra["degradation_pct"] =
                acc_same == 0.0 ? 0.0 : 100.0 * (acc_same - acc_future) / acc_same;
            cell.wall_time_s = seconds_since(cell_start);
            report.cells.push_back(std::move(cell));

            acc_series.points.emplace_back(static_cast<double>(test_min_year),
                                           acc_future);
            f1_series.points.emplace_back(static_cast<double>(test_min_year),
                                          m.f1.weighted_avg);
        }
        report.series.push_back(std::move(acc_series));
        report.series.push_back(std::move(f1_series));
    }
    return report;
}

Report run_single(const corpus::Records& records, const ExperimentSpec& spec) {
    Report report;
    report.kind = "single";
    report.master_seed = spec.master_seed;
    report.best_metric = "mcc";

    auto start_time = Clock::now();
    text::Vocabulary vocab =
        text::build_vocab(records, spec.segment_mode, spec.vocab_min_count);
    nn::ModelConfig cfg = spec.model;
    cfg.vocab_size = vocab.size();
    nn::TrainConfig tc = spec.train;
    tc.seed = util::derive_seed(spec.master_seed, "single");
    tc.eval_fraction = spec.split;

    nn::EncodedData all = nn::encode_records(records, vocab, cfg.max_len);
    std::vector<size_t> idx(all.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    util::Rng split_rng(util::splitmix64(tc.seed ^ 0x51173e4aULL));
    split_rng.shuffle(idx);
    auto n_eval = static_cast<size_t>(spec.split * static_cast<double>(all.size()));
    nn::EncodedData eval_data =
        take_indices(all, {idx.begin(), idx.begin() + static_cast<long>(n_eval)});
    nn::EncodedData train_data =
        take_indices(all, {idx.begin() + static_cast<long>(n_eval), idx.end()});

    auto trained = nn::train_model<float>(train_data, eval_data, cfg, tc);
    ConfusionMatrix cm;
    EvalMetrics m = evaluate_cell(trained.params, cfg, eval_data, &cm);

    ReportCell cell;
    cell.id = "single";
    cell.seed = tc.seed;
    cell.dataset_hash = dataset_hash(records);
    cell.folds.push_back(m);
    cell.mean = m;
    cell.stddev = metrics_stddev(cell.folds);
    cell.total_confusion = cm;
    cell.config = cell_config_json(cfg, tc);
    cell.wall_time_s = seconds_since(start_time);
    report.best_cell = cell.id;
    report.cells.push_back(std::move(cell));
    return report;
}

}  // namespace permdet::eval
