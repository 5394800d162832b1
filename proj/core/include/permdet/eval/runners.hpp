#pragma once

#include <set>

#include "permdet/corpus/labeling.hpp"
#include "permdet/eval/report.hpp"
#include "permdet/nn/trainer.hpp"

namespace permdet::eval {

// Shared experiment settings. Per-cell seeds are derived from master_seed
// and the cell id, so cells are reproducible independent of ordering.
struct ExperimentSpec {
    nn::ModelConfig model;
    nn::TrainConfig train;
    int folds = 5;
    double split = 0.2;  // holdout fraction where a single split is used
    std::vector<uint64_t> seeds = {1, 2, 3};
    uint64_t master_seed = 0;
    text::SegmentMode segment_mode = text::SegmentMode::Split;
    int vocab_min_count = 1;
};

// Fingerprint of a record set, stamped into report cells.
std::string dataset_hash(const corpus::Records& records);

// The four-cell grid: {Pooler, LastHiddenMean} x {frozen, fine-tuned},
// K-fold cross-validated per listed seed; mean +/- std across all folds.
Report run_ablation(const corpus::Records& records, const ExperimentSpec& spec);

struct ThresholdSweepOptions {
    size_t n_benign = 200;   // stratified-sample size per class
    size_t n_malware = 200;
};

// Per rule: label_by_flags -> stratified_sample -> train -> evaluate on the
// independently labeled eval set. Best rule chosen by MCC.
Report run_threshold_sweep(const corpus::Records& flag_records,
                           const std::vector<corpus::ThresholdRule>& rules,
                           const corpus::Records& eval_records,
                           const ExperimentSpec& spec,
                           const ThresholdSweepOptions& options = {});

// For each train-year pair: train once (holding out `split` as the
// same-period eval), then test on every strictly later year set. Emits
// accuracy and f1 series per train pair plus the relative degradation
// (acc_same - acc_future) / acc_same. Empty buckets are skipped and listed.
Report run_timecv(const corpus::Records& records,
                  const std::vector<std::set<int>>& train_pairs,
                  const std::vector<std::set<int>>& test_sets,
                  const ExperimentSpec& spec);

// Single train/eval split with full metric output; the building block the
// grid runners share.
Report run_single(const corpus::Records& records, const ExperimentSpec& spec);

}  // namespace permdet::eval
