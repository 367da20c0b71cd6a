#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvscreen/types.hpp"
#include "mvscreen/view_select.hpp"

namespace mvscreen::eval {

// ---------------------------------------------------------------------------
// BLEU

struct BleuOptions {
  // Adds one to numerator and denominator of every order-2+ precision so a
  // short caption with no matching 4-gram still gets a non-zero score.
  bool add_one_smoothing = false;
};

/// Sentence-level BLEU-n with uniform weights over orders 1..n and the
/// brevity penalty min(1, exp(1 - r/c)), where r is the reference length
/// closest to the candidate length (ties go to the shorter reference).
/// n-gram counts are clipped by the maximum count in any single reference.
/// Text is tokenized with text::tokenize.
///
/// Throws EmptyCandidate if the candidate has no tokens, EmptyReference if
/// there are no references or any reference has no tokens, and
/// InvalidConfig if n is outside 1..4.
double bleu_n(std::string_view candidate, std::span<const std::string> references, int n,
              const BleuOptions& options = {});

std::array<double, 4> bleu_1_to_4(std::string_view candidate,
                                  std::span<const std::string> references,
                                  const BleuOptions& options = {});

// ---------------------------------------------------------------------------
// Binary confusion matrix, Screen is the positive class.

struct ConfusionMatrix2x2 {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  double accuracy() const;
  // Undefined rates (zero denominator) are nullopt.
  std::optional<double> sensitivity() const;  // tp / (tp + fn)
  std::optional<double> precision() const;    // tp / (tp + fp)
  std::optional<double> specificity() const;   // tn / (tn + fp)

  bool operator==(const ConfusionMatrix2x2&) const = default;
};

/// Pairs are (predicted, actual). Throws EmptyInput on an empty list.
ConfusionMatrix2x2 confusion(std::span<const std::pair<Binary, Binary>> outcomes);

// ---------------------------------------------------------------------------
// Per-type accuracy

/// Pairs are (predicted primary type, actual label). For each screen type t
/// with at least one actual-t sample: correct / count. Types without samples
/// are absent; actual NonScreen samples are not part of this table.
std::map<ScreenLabel, double> per_type_accuracy(
    std::span<const std::pair<ScreenLabel, ScreenLabel>> outcomes);

// ---------------------------------------------------------------------------
// Cross-validation folds

/// Partitions group ids into n_folds folds whose sizes differ by at most
/// one. Groups are stratified by `labels` (unlabelled groups form their own
/// stratum), shuffled per stratum with a seeded Mersenne Twister and dealt
/// round-robin. Each fold lists its ids sorted. The result does not depend
/// on the order of `groups`.
std::vector<std::vector<std::string>> make_folds(
    std::span<const select::MultiViewGroup> groups, std::size_t n_folds, std::uint64_t seed,
    const std::map<std::string, ScreenLabel>& labels = {});

// ---------------------------------------------------------------------------
// Reports

/// Everything known about one group at evaluation time.
struct EvalSample {
  std::string group_id;
  ScreenLabel predicted_primary = ScreenLabel::NonScreen;
  Binary predicted_binary = Binary::NonScreen;
  std::optional<ScreenLabel> actual;
  std::optional<std::string> candidate;   // generated description
  std::vector<std::string> references;    // ground-truth captions
};

struct EvalReport {
  std::optional<std::size_t> fold_id;
  std::size_t groups = 0;
  std::optional<std::array<double, 4>> bleu;  // mean over samples with references
  std::size_t bleu_samples = 0;
  std::map<ScreenLabel, double> per_type_accuracy;
  std::map<ScreenLabel, std::size_t> per_type_counts;
  std::optional<ConfusionMatrix2x2> binary;  // absent when no sample has a label
};

EvalReport evaluate(std::span<const EvalSample> samples, std::optional<std::size_t> fold_id = {},
                    const BleuOptions& bleu_options = {});

nlohmann::ordered_json to_json(const EvalReport& report);

// ---------------------------------------------------------------------------
// 2-D projection for plotting

/// Projects rows onto the two leading principal components of the centred
/// data. Each axis is sign-normalised so its largest-magnitude loading is
/// positive, which makes the output deterministic. Rows must share one
/// dimension; fewer than two rows project to the origin.
std::vector<std::array<double, 2>> pca_2d(const std::vector<std::vector<double>>& rows);

}  // namespace mvscreen::eval
