#pragma once

#include "ndnreuse/common.hpp"
#include "ndnreuse/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace ndnreuse {

// ---------------------------------------------------------------------------
// MNIST IDX files

enum class IdxErrorKind { Io, BadMagic, Truncated, CountMismatch };

class IdxError : public std::runtime_error {
public:
  IdxError(IdxErrorKind kind, const std::string& what) : std::runtime_error(what), m_kind(kind) {}
  IdxErrorKind kind() const noexcept { return m_kind; }

private:
  IdxErrorKind m_kind;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

/// Whole-file read; gzip input (magic 1f 8b) is inflated transparently.
inline std::vector<std::uint8_t>
read_file_bytes(const std::string& path)
{
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr)
    throw IdxError(IdxErrorKind::Io, "cannot open " + path);
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> buf;
  int n;
  while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0)
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  int err = 0;
  gzerror(f, &err);
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END))
    throw IdxError(IdxErrorKind::Io, "read error in " + path);
  return out;
}

inline std::uint32_t
be32(const std::vector<std::uint8_t>& b, std::size_t off)
{
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

inline void
put_be32(std::ostream& os, std::uint32_t v)
{
  char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
               static_cast<char>(v)};
  os.write(b, 4);
}

} // namespace detail

inline std::vector<GrayImage>
read_idx_images(const std::string& path)
{
  auto b = detail::read_file_bytes(path);
  if (b.size() < 16)
    throw IdxError(b.size() >= 4 && detail::be32(b, 0) != kIdxImageMagic ? IdxErrorKind::BadMagic
                                                                          : IdxErrorKind::Truncated,
                   path + ": header truncated");
  if (detail::be32(b, 0) != kIdxImageMagic)
    throw IdxError(IdxErrorKind::BadMagic, path + ": bad image magic number");
  std::uint32_t count = detail::be32(b, 4);
  std::uint32_t rows = detail::be32(b, 8);
  std::uint32_t cols = detail::be32(b, 12);
  std::size_t per = std::size_t{rows} * cols;
  if (b.size() < 16 + per * count)
    throw IdxError(IdxErrorKind::Truncated, path + ": image payload truncated");
  std::vector<GrayImage> images;
  images.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto first = b.begin() + static_cast<std::ptrdiff_t>(16 + per * i);
    images.emplace_back(static_cast<int>(cols), static_cast<int>(rows),
                        std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(per)));
  }
  return images;
}

inline std::vector<std::uint8_t>
read_idx_labels(const std::string& path)
{
  auto b = detail::read_file_bytes(path);
  if (b.size() < 8)
    throw IdxError(b.size() >= 4 && detail::be32(b, 0) != kIdxLabelMagic ? IdxErrorKind::BadMagic
                                                                          : IdxErrorKind::Truncated,
                   path + ": header truncated");
  if (detail::be32(b, 0) != kIdxLabelMagic)
    throw IdxError(IdxErrorKind::BadMagic, path + ": bad label magic number");
  std::uint32_t count = detail::be32(b, 4);
  if (b.size() < 8 + std::size_t{count})
    throw IdxError(IdxErrorKind::Truncated, path + ": label payload truncated");
  return {b.begin() + 8, b.begin() + 8 + count};
}

/// Uncompressed IDX writer (all images must share one size).
inline void
write_idx_images(const std::string& path, const std::vector<GrayImage>& images)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw IdxError(IdxErrorKind::Io, "cannot write " + path);
  int rows = images.empty() ? 28 : images.front().height;
  int cols = images.empty() ? 28 : images.front().width;
  detail::put_be32(os, kIdxImageMagic);
  detail::put_be32(os, static_cast<std::uint32_t>(images.size()));
  detail::put_be32(os, static_cast<std::uint32_t>(rows));
  detail::put_be32(os, static_cast<std::uint32_t>(cols));
  for (const auto& img : images) {
    if (img.width != cols || img.height != rows)
      throw std::invalid_argument("write_idx_images: mixed image sizes");
    os.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  }
}

inline void
write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw IdxError(IdxErrorKind::Io, "cannot write " + path);
  detail::put_be32(os, kIdxLabelMagic);
  detail::put_be32(os, static_cast<std::uint32_t>(labels.size()));
  os.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

// ---------------------------------------------------------------------------
// Dataset

struct ImageRecord {
  std::uint32_t content_id = 0; // position in the source file
  int class_id = 1;             // 1..K
  GrayImage pixels;
};

/// Records grouped by class (class 1 first), file order within a class.
struct Dataset {
  std::vector<ImageRecord> records;
  int K = 0;
  std::size_t m = 0;

  std::size_t size() const noexcept { return records.size(); }

  const ImageRecord& record(int class_id, std::size_t i) const
  {
    return records[static_cast<std::size_t>(class_id - 1) * m + i];
  }

  /// Index into `records` by content id; -1 when absent.
  std::ptrdiff_t find(std::uint32_t content_id) const
  {
    auto it = std::lower_bound(m_by_id.begin(), m_by_id.end(), content_id,
                               [](const auto& p, std::uint32_t id) { return p.first < id; });
    if (it == m_by_id.end() || it->first != content_id)
      return -1;
    return static_cast<std::ptrdiff_t>(it->second);
  }

  void reindex()
  {
    m_by_id.clear();
    for (std::size_t i = 0; i < records.size(); ++i)
      m_by_id.emplace_back(records[i].content_id, i);
    std::sort(m_by_id.begin(), m_by_id.end());
  }

private:
  std::vector<std::pair<std::uint32_t, std::size_t>> m_by_id;
};

/// Group images into classes by label (label l -> class l + 1, or l when the
/// labels are already 1-based). Keeps the first `per_class` records of every
/// class in file order; per_class == 0 uses the smallest class size.
inline Dataset
make_dataset(const std::vector<GrayImage>& images, const std::vector<std::uint8_t>& labels,
             std::size_t per_class = 0, int classes = 10)
{
  if (images.size() != labels.size())
    throw IdxError(IdxErrorKind::CountMismatch, "image/label count mismatch: " + std::to_string(images.size()) +
                                                    " images, " + std::to_string(labels.size()) + " labels");
  std::vector<std::vector<std::uint32_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes)
      throw IdxError(IdxErrorKind::CountMismatch, "label " + std::to_string(labels[i]) + " out of range");
    by_class[labels[i]].push_back(static_cast<std::uint32_t>(i));
  }
  std::size_t smallest = images.size();
  for (const auto& c : by_class)
    smallest = std::min(smallest, c.size());
  std::size_t m = per_class == 0 ? smallest : per_class;
  if (m == 0 || m > smallest)
    throw std::invalid_argument("dataset: a class holds " + std::to_string(smallest) + " records, fewer than the " +
                                std::to_string(m) + " requested");

  Dataset ds;
  ds.K = classes;
  ds.m = m;
  ds.records.reserve(m * static_cast<std::size_t>(classes));
  for (int k = 0; k < classes; ++k)
    for (std::size_t i = 0; i < m; ++i) {
      std::uint32_t id = by_class[static_cast<std::size_t>(k)][i];
      ds.records.push_back({id, k + 1, images[id]});
    }
  ds.reindex();
  return ds;
}

inline Dataset
load_mnist(const std::string& image_path, const std::string& label_path, std::size_t per_class = 0)
{
  return make_dataset(read_idx_images(image_path), read_idx_labels(label_path), per_class);
}

// ---------------------------------------------------------------------------
// Popularity and request sampling

struct ZipfSpec {
  double alpha = 0.9;
  int K = 10;

  void validate() const
  {
    if (!(alpha >= 0) || K < 1)
      throw std::invalid_argument("ZipfSpec: need alpha >= 0 and K >= 1");
  }
};

/// Class popularity k^-alpha normalized over the K classes.
inline std::vector<double>
zipf_pmf(const ZipfSpec& spec)
{
  spec.validate();
  std::vector<double> p(static_cast<std::size_t>(spec.K));
  double sum = 0;
  for (int k = 1; k <= spec.K; ++k)
    sum += p[static_cast<std::size_t>(k - 1)] = std::pow(static_cast<double>(k), -spec.alpha);
  for (double& v : p)
    v /= sum;
  return p;
}

/// "img_00123" <-> 123
inline std::string
image_name(std::uint32_t content_id)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%05u", content_id);
  return buf;
}

inline std::ptrdiff_t
parse_image_name(std::string_view s)
{
  if (s.size() < 5 || s.substr(0, 4) != "img_")
    return -1;
  std::uint64_t v = 0;
  for (char c : s.substr(4)) {
    if (c < '0' || c > '9')
      return -1;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
    if (v > 0xffffffffULL)
      return -1;
  }
  return static_cast<std::ptrdiff_t>(v);
}

struct Request {
  std::string name;
  std::uint32_t content_id = 0;
  int class_id = 1;
};

/// Zipf over classes, uniform within a class.
class RequestSampler {
public:
  RequestSampler(const Dataset& ds, ZipfSpec spec) : m_ds(&ds)
  {
    if (ds.size() == 0 || ds.m == 0)
      throw std::invalid_argument("RequestSampler: empty dataset");
    if (spec.K != ds.K)
      throw std::invalid_argument("RequestSampler: Zipf K differs from dataset class count");
    auto pmf = zipf_pmf(spec);
    double acc = 0;
    for (double p : pmf)
      m_cdf.push_back(acc += p);
    m_cdf.back() = 1.0;
  }

  int sample_class(Rng& rng) const
  {
    double u = rng.uniform();
    auto it = std::upper_bound(m_cdf.begin(), m_cdf.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - m_cdf.begin(), std::ssize(m_cdf) - 1)) + 1;
  }

  /// Draws one request named /<service>/<id>/<image>.
  Request sample(Rng& rng, std::string_view service, std::uint64_t id) const
  {
    int k = sample_class(rng);
    const auto& rec = m_ds->record(k, rng.below(m_ds->m));
    return {"/" + std::string(service) + "/" + std::to_string(id) + "/" + image_name(rec.content_id),
            rec.content_id, k};
  }

private:
  const Dataset* m_ds;
  std::vector<double> m_cdf;
};

inline std::string
sample_request(Rng& rng, const ZipfSpec& spec, const Dataset& ds, std::string_view service = "recognition",
               std::uint64_t id = 0)
{
  return RequestSampler(ds, spec).sample(rng, service, id).name;
}

// ---------------------------------------------------------------------------
// Arrival processes

struct PoissonArrivals {
  double lambda = 40;
};

/// Markov-modulated Poisson process; states are 0-based here.
struct MmppArrivals {
  std::vector<std::vector<double>> Q; // generator, rates per second
  std::vector<double> lambdas;        // per-state arrival rate

  void validate() const
  {
    std::size_t n = lambdas.size();
    if (n == 0 || Q.size() != n)
      throw std::invalid_argument("MMPP: generator/rate dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (Q[i].size() != n)
        throw std::invalid_argument("MMPP: generator must be square");
      if (!(lambdas[i] > 0))
        throw std::invalid_argument("MMPP: state rates must be positive");
      double row = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && Q[i][j] < 0)
          throw std::invalid_argument("MMPP: negative off-diagonal rate");
        row += Q[i][j];
      }
      if (std::abs(row) > 1e-9 * (1 + std::abs(Q[i][i])))
        throw std::invalid_argument("MMPP: generator rows must sum to zero");
    }
  }
};

using ArrivalProcess = std::variant<PoissonArrivals, MmppArrivals>;

/// Default mean state sojourn in seconds, a fifth of the default service time.
inline constexpr double kDefaultMmppSojourn = 0.02;

/// Three-state low/medium/high MMPP with rates (0.5, 1, 1.5) x mean_rate and
/// symmetric switching; stationary distribution is uniform, so the long-run
/// rate equals mean_rate.
inline MmppArrivals
default_mmpp(double mean_rate, double mean_sojourn = kDefaultMmppSojourn)
{
  double out = 1.0 / mean_sojourn;
  MmppArrivals p;
  p.lambdas = {0.5 * mean_rate, 1.0 * mean_rate, 1.5 * mean_rate};
  p.Q.assign(3, std::vector<double>(3, out / 2));
  for (int i = 0; i < 3; ++i)
    p.Q[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = -out;
  return p;
}

/// Stationary distribution pi of the modulating chain (pi Q = 0, sum 1),
/// by Gaussian elimination with the normalization replacing one equation.
inline std::vector<double>
mmpp_stationary(const MmppArrivals& p)
{
  p.validate();
  std::size_t n = p.lambdas.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a[i][j] = p.Q[j][i];
  for (std::size_t j = 0; j < n; ++j)
    a[n - 1][j] = 1.0;
  a[n - 1][n] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col]))
        piv = r;
    if (std::abs(a[piv][col]) < 1e-300)
      throw std::domain_error("mmpp_stationary: chain is reducible");
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col)
        continue;
      double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c)
        a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i)
    pi[i] = a[i][n] / a[i][i];
  return pi;
}

inline double
next_arrival_poisson(Rng& rng, double lambda)
{
  if (!(lambda > 0))
    throw std::invalid_argument("Poisson rate must be positive");
  return rng.exponential(lambda);
}

struct MmppEvent {
  double dt = 0;
  bool arrival = false;
  int next_state = 0;
};

/// One competing-exponentials step from `state`.
inline MmppEvent
mmpp_step(Rng& rng, int state, const MmppArrivals& p)
{
  auto s = static_cast<std::size_t>(state);
  if (state < 0 || s >= p.lambdas.size())
    throw std::invalid_argument("mmpp_step: state out of range");
  double leave = -p.Q[s][s];
  double total = p.lambdas[s] + leave;
  if (!(total > 0))
    throw std::domain_error("mmpp_step: absorbing state with zero arrival rate");
  MmppEvent ev;
  ev.dt = rng.exponential(total);
  double u = rng.uniform() * total;
  if (u < p.lambdas[s] || leave <= 0) {
    ev.arrival = true;
    ev.next_state = state;
    return ev;
  }
  double pick = (u - p.lambdas[s]);
  double acc = 0;
  ev.next_state = state;
  for (std::size_t j = 0; j < p.lambdas.size(); ++j) {
    if (j == s)
      continue;
    acc += p.Q[s][j];
    ev.next_state = static_cast<int>(j);
    if (pick < acc)
      break;
  }
  return ev;
}

/// Interarrival generator over either process.
class ArrivalGenerator {
public:
  explicit ArrivalGenerator(ArrivalProcess process, int initial_state = 0)
    : m_process(std::move(process)), m_state(initial_state)
  {
    if (auto* m = std::get_if<MmppArrivals>(&m_process))
      m->validate();
    else if (!(std::get<PoissonArrivals>(m_process).lambda > 0))
      throw std::invalid_argument("Poisson rate must be positive");
  }

  double next(Rng& rng)
  {
    if (auto* p = std::get_if<PoissonArrivals>(&m_process))
      return next_arrival_poisson(rng, p->lambda);
    const auto& m = std::get<MmppArrivals>(m_process);
    double t = 0;
    for (;;) {
      auto ev = mmpp_step(rng, m_state, m);
      t += ev.dt;
      m_state = ev.next_state;
      if (ev.arrival)
        return t;
    }
  }

  int state() const noexcept { return m_state; }

private:
  ArrivalProcess m_process;
  int m_state;
};

} // namespace ndnreuse
