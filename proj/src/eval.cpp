#include "mvscreen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "mvscreen/error.hpp"
#include "mvscreen/text.hpp"

namespace mvscreen::eval {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> count_ngrams(const std::vector<std::string>& tokens, std::size_t order) {
  std::map<Ngram, std::size_t> counts;
  if (tokens.size() < order) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + order))];
  }
  return counts;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double bleu_n(std::string_view candidate, std::span<const std::string> references, int n,
              const BleuOptions& options) {
  if (n < 1 || n > 4) throw Error(Errc::InvalidConfig, "BLEU order must be in 1..4");
  const auto cand = text::tokenize(candidate);
  if (cand.empty()) throw Error(Errc::EmptyCandidate, "candidate has no tokens");
  if (references.empty()) throw Error(Errc::EmptyReference, "no reference captions");

  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) {
    refs.push_back(text::tokenize(r));
    if (refs.back().empty()) throw Error(Errc::EmptyReference, "reference has no tokens");
  }

  double log_sum = 0.0;
  for (int order = 1; order <= n; ++order) {
    const auto o = static_cast<std::size_t>(order);
    const auto cand_counts = count_ngrams(cand, o);
    std::map<Ngram, std::size_t> max_ref;
    for (const auto& r : refs) {
      for (const auto& [gram, count] : count_ngrams(r, o)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    std::size_t clipped = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      if (auto it = max_ref.find(gram); it != max_ref.end()) clipped += std::min(count, it->second);
    }
    double precision = 0.0;
    if (options.add_one_smoothing && order > 1) {
      precision = static_cast<double>(clipped + 1) / static_cast<double>(total + 1);
    } else if (total > 0) {
      precision = static_cast<double>(clipped) / static_cast<double>(total);
    }
    if (precision == 0.0) return 0.0;
    log_sum += std::log(precision);
  }

  const auto c = static_cast<double>(cand.size());
  double r = static_cast<double>(refs.front().size());
  for (const auto& ref : refs) {
    const auto len = static_cast<double>(ref.size());
    const auto diff = std::abs(len - c);
    const auto best = std::abs(r - c);
    if (diff < best || (diff == best && len < r)) r = len;
  }
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(brevity * std::exp(log_sum / n), 0.0, 1.0);
}

std::array<double, 4> bleu_1_to_4(std::string_view candidate,
                                  std::span<const std::string> references,
                                  const BleuOptions& options) {
  std::array<double, 4> out{};
  for (int n = 1; n <= 4; ++n) out[n - 1] = bleu_n(candidate, references, n, options);
  return out;
}

double ConfusionMatrix2x2::accuracy() const {
  if (total() == 0) throw Error(Errc::EmptyInput, "confusion matrix is empty");
  return static_cast<double>(tp + tn) / static_cast<double>(total());
}

std::optional<double> ConfusionMatrix2x2::sensitivity() const { return ratio(tp, tp + fn); }
std::optional<double> ConfusionMatrix2x2::precision() const { return ratio(tp, tp + fp); }
std::optional<double> ConfusionMatrix2x2::specificity() const { return ratio(tn, tn + fp); }

ConfusionMatrix2x2 confusion(std::span<const std::pair<Binary, Binary>> outcomes) {
  if (outcomes.empty()) throw Error(Errc::EmptyInput, "no outcomes to tabulate");
  ConfusionMatrix2x2 m;
  for (const auto& [predicted, actual] : outcomes) {
    const bool p = predicted == Binary::Screen;
    const bool a = actual == Binary::Screen;
    if (p && a) ++m.tp;
    else if (p) ++m.fp;
    else if (a) ++m.fn;
    else ++m.tn;
  }
  return m;
}

std::map<ScreenLabel, double> per_type_accuracy(
    std::span<const std::pair<ScreenLabel, ScreenLabel>> outcomes) {
  std::map<ScreenLabel, std::pair<std::size_t, std::size_t>> tally;  // correct, count
  for (const auto& [predicted, actual] : outcomes) {
    if (actual == ScreenLabel::NonScreen) continue;
    auto& [correct, count] = tally[actual];
    ++count;
    if (predicted == actual) ++correct;
  }
  std::map<ScreenLabel, double> out;
  for (const auto& [type, t] : tally) {
    out[type] = static_cast<double>(t.first) / static_cast<double>(t.second);
  }
  return out;
}

std::vector<std::vector<std::string>> make_folds(std::span<const select::MultiViewGroup> groups,
                                                 std::size_t n_folds, std::uint64_t seed,
                                                 const std::map<std::string, ScreenLabel>& labels) {
  if (n_folds < 2) throw Error(Errc::InvalidConfig, "need at least two folds");
  if (groups.empty()) throw Error(Errc::EmptyInput, "no groups to split");
  if (n_folds > groups.size()) {
    throw Error(Errc::TooFewGroups, std::to_string(groups.size()) + " group(s) for " +
                                        std::to_string(n_folds) + " folds");
  }

  // Stratum key: label index, or 4 for unlabelled.
  std::map<int, std::vector<std::string>> strata;
  std::set<std::string> seen;
  for (const auto& g : groups) {
    if (!seen.insert(g.group_id).second) {
      throw Error(Errc::MalformedRecord, "duplicate group id " + g.group_id);
    }
    auto it = labels.find(g.group_id);
    const int key = it == labels.end() ? 4 : static_cast<int>(it->second);
    strata[key].push_back(g.group_id);
  }

  // Fisher-Yates driven directly by mt19937_64 so the permutation is the
  // same on every standard library.
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> folds(n_folds);
  std::size_t dealt = 0;
  for (auto& [key, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = ids.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(ids[i - 1], ids[j]);
    }
    for (auto& id : ids) folds[dealt++ % n_folds].push_back(std::move(id));
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

EvalReport evaluate(std::span<const EvalSample> samples, std::optional<std::size_t> fold_id,
                    const BleuOptions& bleu_options) {
  EvalReport report;
  report.fold_id = fold_id;
  report.groups = samples.size();

  std::array<double, 4> bleu_sum{};
  std::vector<std::pair<Binary, Binary>> binary;
  std::vector<std::pair<ScreenLabel, ScreenLabel>> typed;
  for (const auto& s : samples) {
    if (s.candidate && !s.references.empty()) {
      const auto scores = bleu_1_to_4(*s.candidate, s.references, bleu_options);
      for (std::size_t i = 0; i < 4; ++i) bleu_sum[i] += scores[i];
      ++report.bleu_samples;
    }
    if (s.actual) {
      binary.emplace_back(s.predicted_binary, to_binary(*s.actual));
      typed.emplace_back(s.predicted_primary, *s.actual);
      if (*s.actual != ScreenLabel::NonScreen) ++report.per_type_counts[*s.actual];
    }
  }
  if (report.bleu_samples > 0) {
    std::array<double, 4> mean{};
    for (std::size_t i = 0; i < 4; ++i) {
      mean[i] = bleu_sum[i] / static_cast<double>(report.bleu_samples);
    }
    report.bleu = mean;
  }
  if (!binary.empty()) report.binary = confusion(binary);
  report.per_type_accuracy = per_type_accuracy(typed);
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json out;
  out["fold_id"] = report.fold_id ? nlohmann::ordered_json(*report.fold_id) : nullptr;
  out["groups"] = report.groups;
  if (report.bleu) {
    out["bleu"] = {{"samples", report.bleu_samples},
                   {"bleu1", (*report.bleu)[0]},
                   {"bleu2", (*report.bleu)[1]},
                   {"bleu3", (*report.bleu)[2]},
                   {"bleu4", (*report.bleu)[3]}};
  } else {
    out["bleu"] = nullptr;
  }
  auto per_type = nlohmann::ordered_json::object();
  for (auto type : kScreenTypes) {
    auto it = report.per_type_accuracy.find(type);
    if (it == report.per_type_accuracy.end()) continue;
    per_type[std::string(to_string(type))] = {{"accuracy", it->second},
                                              {"count", report.per_type_counts.at(type)}};
  }
  out["per_type_accuracy"] = std::move(per_type);
  if (report.binary) {
    const auto& m = *report.binary;
    auto opt = [](std::optional<double> v) {
      return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    out["binary"] = {{"tp", m.tp},
                     {"fp", m.fp},
                     {"fn", m.fn},
                     {"tn", m.tn},
                     {"total", m.total()},
                     {"accuracy", m.accuracy()},
                     {"sensitivity", opt(m.sensitivity())},
                     {"precision", opt(m.precision())},
                     {"specificity", opt(m.specificity())}};
  } else {
    out["binary"] = nullptr;
  }
  return out;
}

std::vector<std::array<double, 2>> pca_2d(const std::vector<std::vector<double>>& rows) {
  std::vector<std::array<double, 2>> out(rows.size(), {0.0, 0.0});
  if (rows.size() < 2) return out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd x(m, d);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != d) {
      throw Error(Errc::LengthMismatch, "PCA rows differ in dimension");
    }
    for (Eigen::Index c = 0; c < d; ++c) x(r, c) = row[static_cast<std::size_t>(c)];
  }
  x.rowwise() -= x.colwise().mean();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(d, 2);
  const auto available = std::min<Eigen::Index>(2, svd.matrixV().cols());
  for (Eigen::Index a = 0; a < available; ++a) {
    Eigen::VectorXd v = svd.matrixV().col(a);
    Eigen::Index pivot = 0;
    for (Eigen::Index c = 1; c < d; ++c) {
      if (std::abs(v(c)) > std::abs(v(pivot))) pivot = c;
    }
    if (v(pivot) < 0) v = -v;
    axes.col(a) = v;
  }
  const Eigen::MatrixXd projected = x * axes;
  for (Eigen::Index r = 0; r < m; ++r) {
    out[static_cast<std::size_t>(r)] = {projected(r, 0), projected(r, 1)};
  }
  return out;
}

}  // namespace mvscreen::eval
