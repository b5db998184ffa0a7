#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>

using namespace ndnreuse;
using testing_support::TempDir;

namespace {

std::vector<GrayImage>
tiny_images(int n)
{
  std::vector<GrayImage> out;
  for (int i = 0; i < n; ++i) {
    GrayImage g(3, 2);
    for (std::size_t p = 0; p < g.data.size(); ++p)
      g.data[p] = static_cast<std::uint8_t>(37 * i + 11 * p);
    out.push_back(g);
  }
  return out;
}

// Upper chi-square quantile at 1% by the Wilson-Hilferty approximation.
double
chi2_critical_99(int dof)
{
  double z = 2.326347874;
  double k = dof;
  double t = 1 - 2 / (9 * k) + z * std::sqrt(2 / (9 * k));
  return k * t * t * t;
}

} // namespace

TEST(Idx, RoundTripIsByteExact)
{
  TempDir dir;
  auto imgs = tiny_images(4);
  std::vector<std::uint8_t> labels{0, 1, 0, 1};
  write_idx_images(dir.file("i.idx"), imgs);
  write_idx_labels(dir.file("l.idx"), labels);
  auto back = read_idx_images(dir.file("i.idx"));
  ASSERT_EQ(back.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_EQ(back[i], imgs[i]);
  EXPECT_EQ(read_idx_labels(dir.file("l.idx")), labels);

  auto ds = make_dataset(back, read_idx_labels(dir.file("l.idx")), 0, 2);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.record(2, 1).pixels, imgs[3]);
}

TEST(Idx, ErrorsAreDistinct)
{
  TempDir dir;
  write_idx_images(dir.file("i.idx"), tiny_images(4));
  write_idx_labels(dir.file("l.idx"), {0, 1, 0});

  // Labels file where images are expected: wrong magic.
  try {
    read_idx_images(dir.file("l.idx"));
    FAIL() << "expected bad magic";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxErrorKind::BadMagic);
  }

  {
    std::ifstream in(dir.file("i.idx"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir.file("t.idx"), std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  }
  try {
    read_idx_images(dir.file("t.idx"));
    FAIL() << "expected truncation";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxErrorKind::Truncated);
  }

  try {
    load_mnist(dir.file("i.idx"), dir.file("l.idx"));
    FAIL() << "expected count mismatch";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxErrorKind::CountMismatch);
  }

  try {
    read_idx_images(dir.file("missing.idx"));
    FAIL() << "expected io error";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxErrorKind::Io);
  }
}

TEST(Mnist, TenClassesInLabelOrder)
{
  const auto& ds = testing_support::mnist();
  EXPECT_EQ(ds.K, 10);
  EXPECT_EQ(ds.m, 800u);
  EXPECT_EQ(ds.size(), 8000u);
  for (int k = 1; k <= 10; ++k)
    for (std::size_t i = 0; i < ds.m; i += 97)
      EXPECT_EQ(ds.record(k, i).class_id, k);
  // File order within a class.
  for (std::size_t i = 1; i < ds.m; ++i)
    EXPECT_LT(ds.record(3, i - 1).content_id, ds.record(3, i).content_id);
}

TEST(Mnist, TooFewImagesPerClassIsAnError)
{
  TempDir dir;
  write_idx_images(dir.file("i.idx"), tiny_images(4));
  write_idx_labels(dir.file("l.idx"), {0, 1, 0, 1});
  EXPECT_THROW(make_dataset(read_idx_images(dir.file("i.idx")), {0, 1, 0, 1}, 3, 2), std::invalid_argument);
}

TEST(Zipf, UniformWhenAlphaIsZero)
{
  for (double p : zipf_pmf({0.0, 5}))
    EXPECT_DOUBLE_EQ(p, 0.2);
}

TEST(Zipf, HandValuesForAlphaOne)
{
  auto p = zipf_pmf({1.0, 3});
  EXPECT_NEAR(p[0], 6.0 / 11, 1e-15);
  EXPECT_NEAR(p[1], 3.0 / 11, 1e-15);
  EXPECT_NEAR(p[2], 2.0 / 11, 1e-15);
}

TEST(Zipf, NormalizedAndNonIncreasing)
{
  for (double a : {0.1, 0.5, 0.9, 1.3, 3.0})
    for (int K : {1, 2, 10, 57}) {
      auto p = zipf_pmf({a, K});
      double s = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        s += p[i];
        if (i) {
          EXPECT_LE(p[i], p[i - 1]);
        }
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Sampling, DegenerateZipfHitsClassOne)
{
  const auto& ds = testing_support::mnist();
  RequestSampler s(ds, {50.0, 10});
  Rng rng(5);
  for (int i = 0; i < 2000; ++i)
    EXPECT_EQ(s.sample(rng, "recognition", static_cast<std::uint64_t>(i)).class_id, 1);
}

TEST(Sampling, ClassFrequenciesPassChiSquare)
{
  const auto& ds = testing_support::mnist();
  ZipfSpec spec{0.9, 10};
  RequestSampler s(ds, spec);
  Rng rng(17);
  const int n = 100000;
  std::vector<int> counts(10, 0);
  for (int i = 0; i < n; ++i)
    counts[static_cast<std::size_t>(s.sample_class(rng) - 1)]++;
  auto pmf = zipf_pmf(spec);
  double chi2 = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    double e = n * pmf[k];
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  EXPECT_LT(chi2, chi2_critical_99(9));
}

TEST(Sampling, NameFormatAndDeterminism)
{
  const auto& ds = testing_support::mnist();
  Rng a(3), b(3);
  for (int i = 0; i < 50; ++i) {
    auto x = sample_request(a, {0.9, 10}, ds, "recognition", static_cast<std::uint64_t>(i));
    auto y = sample_request(b, {0.9, 10}, ds, "recognition", static_cast<std::uint64_t>(i));
    EXPECT_EQ(x, y);
    EXPECT_EQ(x.rfind("/recognition/" + std::to_string(i) + "/img_", 0), 0u) << x;
    auto id = parse_image_name(x.substr(x.rfind('/') + 1));
    ASSERT_GE(id, 0);
    EXPECT_GE(ds.find(static_cast<std::uint32_t>(id)), 0);
  }
}

TEST(Sampling, ImageNamesRoundTrip)
{
  EXPECT_EQ(image_name(123), "img_00123");
  EXPECT_EQ(parse_image_name("img_00123"), 123);
  EXPECT_EQ(parse_image_name("img_"), -1);
  EXPECT_EQ(parse_image_name("pic_00001"), -1);
  EXPECT_EQ(parse_image_name("img_12a"), -1);
}

TEST(Poisson, MeanMatchesRate)
{
  Rng rng(99);
  const int n = 100000;
  double s = 0;
  for (int i = 0; i < n; ++i)
    s += next_arrival_poisson(rng, 40);
  EXPECT_NEAR(s / n, 0.025, 0.025 * 0.02);
}

TEST(Poisson, RatesScaleInverselyOnOneStream)
{
  Rng a(7), b(7);
  double s10 = 0, s20 = 0;
  for (int i = 0; i < 50000; ++i) {
    s10 += next_arrival_poisson(a, 10);
    s20 += next_arrival_poisson(b, 20);
  }
  EXPECT_NEAR(s10 / s20, 2.0, 2.0 * 0.03);
  EXPECT_THROW(next_arrival_poisson(a, 0), std::invalid_argument);
}

TEST(Poisson, Reproducible)
{
  Rng a(1), b(1);
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(next_arrival_poisson(a, 1), next_arrival_poisson(b, 1));
}

TEST(Mmpp, FrozenChainIsPoisson)
{
  MmppArrivals p;
  p.lambdas = {10, 20, 40};
  p.Q.assign(3, std::vector<double>(3, 0.0));
  for (int state : {0, 1, 2}) {
    ArrivalGenerator gen(p, state);
    Rng rng(static_cast<std::uint64_t>(state + 1));
    double s = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i)
      s += gen.next(rng);
    double expect = 1 / p.lambdas[static_cast<std::size_t>(state)];
    EXPECT_NEAR(s / n, expect, expect * 0.02);
    EXPECT_EQ(gen.state(), state);
  }
}

TEST(Mmpp, LongRunRateMatchesStationaryMean)
{
  MmppArrivals p;
  p.lambdas = {10, 20, 40};
  p.Q = {{-1.0, 0.6, 0.4}, {0.5, -1.5, 1.0}, {2.0, 1.0, -3.0}};

  // Oracle: power iteration on the uniformized chain, independent of the
  // elimination used by the library.
  double u = 4;
  std::vector<double> pi{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> nx(3, 0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        nx[static_cast<std::size_t>(j)] += pi[static_cast<std::size_t>(i)] *
                                           ((i == j ? 1.0 : 0.0) + p.Q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] / u);
    pi = nx;
  }
  auto lib = mmpp_stationary(p);
  double rate = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(lib[i], pi[i], 1e-9);
    rate += pi[i] * p.lambdas[i];
  }

  ArrivalGenerator gen(p, 0);
  Rng rng(11);
  double t = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i)
    t += gen.next(rng);
  EXPECT_NEAR(n / t, rate, rate * 0.03);
}

TEST(Mmpp, SojournTimesAreExponentialWithGeneratorMean)
{
  MmppArrivals p;
  p.lambdas = {5, 5, 5};
  p.Q = {{-2.0, 1.0, 1.0}, {1.0, -4.0, 3.0}, {0.5, 0.5, -1.0}};
  Rng rng(23);
  std::vector<double> total(3, 0.0);
  std::vector<int> visits(3, 0);
  int state = 0;
  double in_state = 0;
  for (int i = 0; i < 400000; ++i) {
    auto ev = mmpp_step(rng, state, p);
    in_state += ev.dt;
    if (!ev.arrival) {
      total[static_cast<std::size_t>(state)] += in_state;
      visits[static_cast<std::size_t>(state)]++;
      in_state = 0;
      state = ev.next_state;
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double expect = -1 / p.Q[i][i];
    ASSERT_GT(visits[i], 1000);
    EXPECT_NEAR(total[i] / visits[i], expect, expect * 0.03) << "state " << i;
  }
}

TEST(Mmpp, EqualRatesLookPoisson)
{
  auto p = default_mmpp(30, 0.5);
  p.lambdas = {30, 30, 30};
  ArrivalGenerator gen(p, 1);
  Rng a(31), b(31 + 1000);
  // Counts in unit windows: Poisson has mean = variance = 30.
  auto window_stats = [](auto&& next) {
    std::vector<int> counts;
    double t = 0, edge = 1;
    int c = 0;
    while (counts.size() < 4000) {
      t += next();
      while (t >= edge) {
        counts.push_back(c);
        c = 0;
        edge += 1;
      }
      ++c;
    }
    double m = 0, v = 0;
    for (int x : counts)
      m += x;
    m /= static_cast<double>(counts.size());
    for (int x : counts)
      v += (x - m) * (x - m);
    v /= static_cast<double>(counts.size() - 1);
    return std::pair{m, v};
  };
  auto [mm, mv] = window_stats([&] { return gen.next(a); });
  auto [pm, pv] = window_stats([&] { return next_arrival_poisson(b, 30); });
  EXPECT_NEAR(mm, pm, 0.05 * pm);
  EXPECT_NEAR(mv, pv, 0.05 * pv);
}

TEST(Mmpp, DefaultHasMatchedMeanAndValidGenerator)
{
  auto p = default_mmpp(40);
  EXPECT_NO_THROW(p.validate());
  auto pi = mmpp_stationary(p);
  double rate = 0;
  for (std::size_t i = 0; i < 3; ++i)
    rate += pi[i] * p.lambdas[i];
  EXPECT_NEAR(rate, 40, 1e-9);
  EXPECT_NEAR(-1 / p.Q[0][0], kDefaultMmppSojourn, 1e-12);
}

TEST(Mmpp, AbsorbingStateIsAnError)
{
  MmppArrivals p;
  p.lambdas = {1, 1};
  p.Q = {{0, 0}, {0, 0}};
  p.lambdas[0] = 0;
  Rng rng(1);
  EXPECT_THROW(mmpp_step(rng, 0, p), std::domain_error);
  EXPECT_THROW(mmpp_step(rng, 5, p), std::invalid_argument);
}

TEST(Mmpp, InvalidGeneratorsRejected)
{
  MmppArrivals p;
  p.lambdas = {1, 2};
  p.Q = {{-1, 0.5}, {1, -1}};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.Q = {{1, -1}, {1, -1}};
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
