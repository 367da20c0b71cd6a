#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "mvscreen/error.hpp"
#include "mvscreen/eval.hpp"
#include "mvscreen/text.hpp"

using namespace mvscreen;
using namespace mvscreen::eval;

namespace {

using Refs = std::vector<std::string>;
using Bleu4 = std::array<double, 4>;

void check_bleu(const std::string& cand, const Refs& refs, const Bleu4& expected, BleuOptions opt = {}) {
  CAPTURE(cand);
  const auto got = bleu_1_to_4(cand, refs, opt);
  for (int n = 0; n < 4; ++n) {
    CAPTURE(n + 1);
    CHECK(std::abs(got[n] - expected[n]) <= 1e-9);
  }
}

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::IoError;
}

// Straightforward second implementation used as a property oracle.
double oracle_bleu(const std::vector<std::string>& c, const std::vector<std::vector<std::string>>& refs, int N,
                   bool smooth) {
  auto grams = [](const std::vector<std::string>& t, int n) {
    std::map<std::vector<std::string>, int> m;
    for (int i = 0; i + n <= static_cast<int>(t.size()); ++i) ++m[{t.begin() + i, t.begin() + i + n}];
    return m;
  };
  double log_sum = 0;
  for (int n = 1; n <= N; ++n) {
    const auto cg = grams(c, n);
    int num = 0, den = 0;
    for (const auto& [g, cnt] : cg) {
      int best = 0;
      for (const auto& r : refs) {
        const auto rg = grams(r, n);
        auto it = rg.find(g);
        if (it != rg.end()) best = std::max(best, it->second);
      }
      num += std::min(cnt, best);
      den += cnt;
    }
    if (smooth && n >= 2) {
      ++num;
      ++den;
    }
    if (num == 0 || den == 0) return 0.0;
    log_sum += std::log(static_cast<double>(num) / den) / N;
  }
  const double clen = static_cast<double>(c.size());
  std::size_t r = refs[0].size();
  for (const auto& ref : refs) {
    const auto d = std::abs(static_cast<double>(ref.size()) - clen);
    const auto best = std::abs(static_cast<double>(r) - clen);
    if (d < best || (d == best && ref.size() < r)) r = ref.size();
  }
  const double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(r) / clen));
  return bp * std::exp(log_sum);
}

std::vector<std::pair<Binary, Binary>> outcomes(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  std::vector<std::pair<Binary, Binary>> out;
  out.insert(out.end(), tp, {Binary::Screen, Binary::Screen});
  out.insert(out.end(), fp, {Binary::Screen, Binary::NonScreen});
  out.insert(out.end(), fn, {Binary::NonScreen, Binary::Screen});
  out.insert(out.end(), tn, {Binary::NonScreen, Binary::NonScreen});
  return out;
}

std::vector<select::MultiViewGroup> groups_named(std::size_t n) {
  std::vector<select::MultiViewGroup> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({select::make_group_id("p01", i + 1), "p01", {}, 0});
  return out;
}

}  // namespace

TEST_CASE("BLEU matches the reference implementation") {
  check_bleu("a tv on the wall", {"a tv on the wall"}, {1, 1, 1, 1});
  const double bp = 0.67032004603563933;
  check_bleu("a tv on the wall", {"a tv on the wall near window"}, {bp, bp, bp, bp});
  check_bleu("a tv on the wall", {"children playing outside"}, {0, 0, 0, 0});
  check_bleu("the cat is on the mat", {"there is a cat on the mat"},
             {0.70540143740884509, 0.4887164517296948, 0.36973494931036327, 0});
  check_bleu("the the the the the the the", {"the cat is on the mat", "there is a cat on the mat"},
             {0.2857142857142857, 0, 0, 0});
  check_bleu("a child is holding a cell phone in the living room",
             {"a child holds a cell phone in the living room near the sofa"},
             {0.68216147842514774, 0.63097376036156394, 0.5691968482613845, 0.52656102192399046});
  check_bleu("A television is mounted on the wall of a living room.",
             {"A television is on the wall of the living room.",
              "The family room has a large television on a stand."},
             {0.90909090909090906, 0.7385489458759964, 0.5665163349427047, 0.38827267775222329});
  check_bleu("a laptop on a desk", {"a laptop is open on the kitchen desk"},
             {0.43904930887522114, 0.31045474358093589, 0.23647576541882492, 0.22177648397498501},
             {.add_one_smoothing = true});
}

TEST_CASE("BLEU errors") {
  const Refs refs = {"a tv"};
  CHECK(error_of([&] { bleu_n("", refs, 1); }) == Errc::EmptyCandidate);
  CHECK(error_of([&] { bleu_n(" ... ", refs, 1); }) == Errc::EmptyCandidate);
  CHECK(error_of([&] { bleu_n("a tv", Refs{}, 1); }) == Errc::EmptyReference);
  CHECK(error_of([&] { bleu_n("a tv", Refs{"a tv", ""}, 1); }) == Errc::EmptyReference);
  CHECK(error_of([&] { bleu_n("a tv", refs, 0); }) == Errc::InvalidConfig);
  CHECK(error_of([&] { bleu_n("a tv", refs, 5); }) == Errc::InvalidConfig);
}

TEST_CASE("property: BLEU agrees with a second implementation and stays in [0, 1]") {
  const std::vector<std::string> vocab = {"a", "the", "tv", "phone", "child", "on", "wall", "desk", "is", "room"};
  std::mt19937_64 rng(99);
  auto sentence = [&](std::size_t len) {
    std::vector<std::string> t;
    for (std::size_t i = 0; i < len; ++i) t.push_back(vocab[rng() % vocab.size()]);
    return t;
  };
  auto join = [](const std::vector<std::string>& t) {
    std::string s;
    for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
    return s;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const auto cand = sentence(1 + rng() % 12);
    std::vector<std::vector<std::string>> ref_tokens;
    Refs refs;
    for (std::size_t r = 0; r < 1 + rng() % 3; ++r) {
      ref_tokens.push_back(sentence(1 + rng() % 12));
      refs.push_back(join(ref_tokens.back()));
    }
    const bool smooth = trial % 2;
    for (int n = 1; n <= 4; ++n) {
      const double got = bleu_n(join(cand), refs, n, {smooth});
      REQUIRE(got >= 0.0);
      REQUIRE(got <= 1.0 + 1e-12);
      REQUIRE(std::abs(got - oracle_bleu(cand, ref_tokens, n, smooth)) <= 1e-9);
    }
    if (cand.size() >= 4) REQUIRE(bleu_n(join(cand), Refs{join(cand)}, 4) == doctest::Approx(1.0));
  }
}

TEST_CASE("confusion matrix metrics for fixed counts") {
  const auto m = confusion(outcomes(75, 10, 28, 41));
  CHECK(m == ConfusionMatrix2x2{75, 10, 28, 41});
  CHECK(m.total() == 154);
  CHECK(std::abs(m.accuracy() - 0.75325) <= 1e-5);
  CHECK(std::abs(*m.precision() - 0.88235) <= 1e-5);
  CHECK(std::abs(*m.sensitivity() - 0.72816) <= 1e-5);
  CHECK(m.accuracy() == doctest::Approx(116.0 / 154.0).epsilon(1e-12));
  CHECK(*m.specificity() == doctest::Approx(41.0 / 51.0).epsilon(1e-12));
}

TEST_CASE("confusion edge cases") {
  CHECK(error_of([] { confusion(std::vector<std::pair<Binary, Binary>>{}); }) == Errc::EmptyInput);
  const auto all_neg = confusion(outcomes(0, 0, 0, 5));
  CHECK(all_neg.accuracy() == 1.0);
  CHECK_FALSE(all_neg.sensitivity().has_value());
  CHECK_FALSE(all_neg.precision().has_value());
  CHECK(ConfusionMatrix2x2{}.total() == 0);
  CHECK_THROWS_AS(ConfusionMatrix2x2{}.accuracy(), Error);
}

TEST_CASE("property: counts are consistent and order-independent") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    auto outs = outcomes(rng() % 20, rng() % 20, rng() % 20, 1 + rng() % 20);
    std::shuffle(outs.begin(), outs.end(), rng);
    const auto m = confusion(outs);
    REQUIRE(m.total() == outs.size());
    std::size_t screen_actual = 0, correct = 0;
    for (auto [pred, act] : outs) {
      screen_actual += act == Binary::Screen;
      correct += pred == act;
    }
    REQUIRE(m.tp + m.fn == screen_actual);
    REQUIRE(m.accuracy() == doctest::Approx(static_cast<double>(correct) / outs.size()));
  }
}

TEST_CASE("per-type accuracy") {
  std::vector<std::pair<ScreenLabel, ScreenLabel>> tv(9, {ScreenLabel::TV, ScreenLabel::TV});
  tv.push_back({ScreenLabel::Computer, ScreenLabel::TV});
  const auto acc = per_type_accuracy(tv);
  CHECK(acc.size() == 1);
  CHECK(acc.at(ScreenLabel::TV) == doctest::Approx(0.9));

  // Hand-tallied: TV 5/6, Smartphone 3/5, Computer 2/4, NonScreen rows ignored.
  std::vector<std::pair<ScreenLabel, ScreenLabel>> mixed;
  auto add = [&](ScreenLabel pred, ScreenLabel act, int times) { mixed.insert(mixed.end(), times, {pred, act}); };
  add(ScreenLabel::TV, ScreenLabel::TV, 5);
  add(ScreenLabel::NonScreen, ScreenLabel::TV, 1);
  add(ScreenLabel::Smartphone, ScreenLabel::Smartphone, 3);
  add(ScreenLabel::Computer, ScreenLabel::Smartphone, 1);
  add(ScreenLabel::TV, ScreenLabel::Smartphone, 1);
  add(ScreenLabel::Computer, ScreenLabel::Computer, 2);
  add(ScreenLabel::Smartphone, ScreenLabel::Computer, 2);
  add(ScreenLabel::TV, ScreenLabel::NonScreen, 3);
  add(ScreenLabel::NonScreen, ScreenLabel::NonScreen, 2);
  REQUIRE(mixed.size() == 20);
  const auto m = per_type_accuracy(mixed);
  CHECK(m.size() == 3);
  CHECK(m.at(ScreenLabel::TV) == doctest::Approx(5.0 / 6.0));
  CHECK(m.at(ScreenLabel::Smartphone) == doctest::Approx(0.6));
  CHECK(m.at(ScreenLabel::Computer) == doctest::Approx(0.5));
  CHECK_FALSE(m.contains(ScreenLabel::NonScreen));
}

TEST_CASE("folds: sizes and errors") {
  const auto g397 = groups_named(397);
  const auto folds = make_folds(g397, 4, 42);
  REQUIRE(folds.size() == 4);
  std::multiset<std::size_t> sizes;
  for (const auto& f : folds) sizes.insert(f.size());
  CHECK(sizes == std::multiset<std::size_t>{99, 99, 99, 100});

  const auto four = make_folds(groups_named(4), 4, 1);
  for (const auto& f : four) CHECK(f.size() == 1);

  CHECK(error_of([] { make_folds(groups_named(3), 4, 1); }) == Errc::TooFewGroups);
  CHECK(error_of([] { make_folds(groups_named(10), 1, 1); }) == Errc::InvalidConfig);
  CHECK(error_of([] { make_folds(groups_named(0), 4, 1); }) == Errc::EmptyInput);
  auto dup = groups_named(5);
  dup.push_back(dup.front());
  CHECK(error_of([&] { make_folds(dup, 4, 1); }) == Errc::MalformedRecord);
}

TEST_CASE("property: folds partition, are deterministic and ignore input order") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_folds = 2 + trial % 5;
    const std::size_t n = n_folds + rng() % 60;
    auto groups = groups_named(n);
    std::map<std::string, ScreenLabel> labels;
    for (const auto& g : groups) {
      if (rng() % 5) labels[g.group_id] = static_cast<ScreenLabel>(rng() % 4);
    }
    const auto seed = rng();
    const auto folds = make_folds(groups, n_folds, seed, labels);
    std::shuffle(groups.begin(), groups.end(), rng);
    REQUIRE(make_folds(groups, n_folds, seed, labels) == folds);

    std::set<std::string> all;
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& f : folds) {
      REQUIRE(std::is_sorted(f.begin(), f.end()));
      all.insert(f.begin(), f.end());
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
    }
    REQUIRE(all.size() == n);
    REQUIRE(hi - lo <= 1);
  }
}

TEST_CASE("folds are stratified by label") {
  auto groups = groups_named(40);
  std::map<std::string, ScreenLabel> labels;
  for (std::size_t i = 0; i < groups.size(); ++i) labels[groups[i].group_id] = static_cast<ScreenLabel>(i % 4);
  const auto folds = make_folds(groups, 4, 3, labels);
  for (const auto& f : folds) {
    std::map<ScreenLabel, int> per;
    for (const auto& id : f) ++per[labels.at(id)];
    // Ten groups per label over four folds: two or three in each fold.
    for (int t = 0; t < 4; ++t) {
      const int c = per[static_cast<ScreenLabel>(t)];
      CHECK((c == 2 || c == 3));
    }
    CHECK(f.size() == 10);
  }
  CHECK(make_folds(groups, 4, 3, labels) != make_folds(groups, 4, 4, labels));
}

TEST_CASE("evaluate and to_json") {
  std::vector<EvalSample> samples = {
      {"g1", ScreenLabel::TV, Binary::Screen, ScreenLabel::TV, "a tv on the wall", {"a tv on the wall"}},
      {"g2", ScreenLabel::NonScreen, Binary::NonScreen, ScreenLabel::Smartphone, "a child", {}},
      {"g3", ScreenLabel::NonScreen, Binary::NonScreen, std::nullopt, std::nullopt, {}},
  };
  const auto r = evaluate(samples, 2);
  CHECK(r.groups == 3);
  CHECK(r.bleu_samples == 1);
  CHECK((*r.bleu)[3] == doctest::Approx(1.0));
  CHECK(r.per_type_accuracy.at(ScreenLabel::TV) == 1.0);
  CHECK(r.per_type_accuracy.at(ScreenLabel::Smartphone) == 0.0);
  CHECK(*r.binary == ConfusionMatrix2x2{1, 0, 1, 0});
  const auto j = to_json(r);
  CHECK(j["fold_id"] == 2);
  CHECK(j["binary"]["tp"] == 1);
  CHECK(j["binary"]["specificity"].is_null());

  const auto empty = evaluate(std::vector<EvalSample>{});
  CHECK_FALSE(empty.binary.has_value());
  CHECK(to_json(empty)["bleu"].is_null());
}

TEST_CASE("pca_2d") {
  // Points along (1, 1, 0) with a small uncorrelated spread along (0, 0, 1).
  const std::vector<std::vector<double>> rows = {{-2, -2, 0.1}, {-1, -1, -0.1}, {1, 1, -0.1}, {2, 2, 0.1}};
  const auto p = pca_2d(rows);
  REQUIRE(p.size() == 4);
  CHECK(p[0][0] == doctest::Approx(-2 * std::sqrt(2.0)));
  CHECK(p[3][0] == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(std::abs(p[0][1]) == doctest::Approx(0.1));
  double mean0 = 0;
  for (const auto& q : p) mean0 += q[0];
  CHECK(mean0 == doctest::Approx(0.0));
  CHECK(pca_2d({{1, 2, 3}}) == std::vector<std::array<double, 2>>{{0, 0}});
  CHECK(pca_2d({}).empty());
  CHECK_THROWS_AS(pca_2d({{1, 2}, {1}}), Error);
}
