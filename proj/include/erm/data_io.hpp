#pragma once

// libsvm text I/O (optionally gzip-compressed), synthetic problem generators
// and dataset summaries.

#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "erm/dataset.hpp"
#include "erm/error.hpp"
#include "erm/problem.hpp"
#include "erm/sampling.hpp"

namespace erm {

struct LoadOptions {
  std::size_t dim = 0;          // 0: largest index seen
  bool classification = false;  // map label 0 to -1
  bool normalize = false;       // scale rows to unit l2 norm
};

namespace detail {

class LineReader {
 public:
  explicit LineReader(const std::string& path) : file_(gzopen(path.c_str(), "rb")) {
    if (!file_) throw Error("cannot open " + path);
    gzbuffer(file_, 1 << 17);
  }
  ~LineReader() { gzclose(file_); }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  /// Next line without the trailing newline; false at end of input.
  bool next(std::string& line) {
    line.clear();
    char buf[8192];
    while (gzgets(file_, buf, sizeof buf)) {
      line.append(buf);
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
    }
    int err = Z_OK;
    const char* msg = gzerror(file_, &err);
    if (err != Z_OK && err != Z_STREAM_END) throw Error(std::string("read error: ") + msg);
    return !line.empty();
  }

 private:
  gzFile file_;
};

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

inline Error line_error(std::size_t line_no, const std::string& what) {
  return Error("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace detail

/// Parses "label idx:val idx:val ..." rows with 1-based, strictly increasing
/// indices. Blank lines and lines starting with '#' are skipped.
inline Dataset load_libsvm(const std::string& path, const LoadOptions& opts = {}) {
  detail::LineReader reader(path);
  DatasetBuilder builder;
  std::vector<std::pair<Index, double>> entries;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_index = 0;
  while (reader.next(line)) {
    ++line_no;
    const char* p = line.c_str();
    while (detail::is_space(*p)) ++p;
    if (*p == '\0' || *p == '#') continue;

    char* end = nullptr;
    errno = 0;
    double label = std::strtod(p, &end);
    if (end == p || errno == ERANGE || !std::isfinite(label) || !(*end == '\0' || detail::is_space(*end)))
      throw detail::line_error(line_no, "malformed label");
    if (opts.classification && label == 0.0) label = -1.0;
    p = end;

    entries.clear();
    std::size_t prev = 0;
    for (;;) {
      while (detail::is_space(*p)) ++p;
      if (*p == '\0' || *p == '#') break;
      if (*p < '0' || *p > '9') throw detail::line_error(line_no, "malformed feature index");
      errno = 0;
      const unsigned long long idx = std::strtoull(p, &end, 10);
      if (end == p || *end != ':' || errno == ERANGE)
        throw detail::line_error(line_no, "malformed feature (expected idx:val)");
      if (idx == 0) throw detail::line_error(line_no, "feature indices are 1-based");
      if (idx > 0xFFFFFFFFull) throw detail::line_error(line_no, "feature index too large");
      if (idx <= prev) throw detail::line_error(line_no, "feature indices must be strictly increasing");
      prev = static_cast<std::size_t>(idx);
      p = end + 1;
      errno = 0;
      const double value = std::strtod(p, &end);
      if (end == p || errno == ERANGE || !std::isfinite(value) ||
          !(*end == '\0' || detail::is_space(*end)))
        throw detail::line_error(line_no, "malformed feature value");
      p = end;
      entries.emplace_back(static_cast<Index>(idx - 1), value);
      max_index = std::max(max_index, prev);
    }
    builder.add_row(entries, label);
  }
  if (builder.rows() == 0) throw Error(path + ": no data rows");
  std::size_t cols = max_index;
  if (opts.dim != 0) {
    if (opts.dim < max_index)
      throw Error("dimension override " + std::to_string(opts.dim) + " is below the largest index " +
                  std::to_string(max_index));
    cols = opts.dim;
  }
  if (cols == 0) cols = 1;
  Dataset data = std::move(builder).build(cols);
  return opts.normalize ? data.normalized_rows() : data;
}

/// Writes with %.17g so that reloading reproduces every double exactly.
inline void write_libsvm(const Dataset& a, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot write " + path);
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(f, &std::fclose);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fprintf(f, "%.17g", a.label(i));
    const SparseRow r = a.row(i);
    for (std::size_t l = 0; l < r.nnz(); ++l)
      std::fprintf(f, " %u:%.17g", static_cast<unsigned>(r.index[l]) + 1, r.value[l]);
    std::fputc('\n', f);
  }
  if (std::ferror(f)) throw Error("write error on " + path);
}

struct SyntheticSpec {
  enum class Kind { Lasso, RidgeLogistic };

  Kind kind = Kind::Lasso;
  std::size_t n = 100;
  std::size_t d = 10;
  double density = 1.0;
  double noise = 0.1;
  std::size_t sparsity = 0;  // 0: max(1, d/10)
  std::uint64_t seed = 1;

  void validate() const {
    detail::require(n >= 1 && d >= 1, "synthetic sizes must be positive");
    detail::require(density > 0.0 && density <= 1.0, "synthetic density must lie in (0, 1]");
    detail::require(noise >= 0.0 && std::isfinite(noise), "synthetic noise must be nonnegative");
    detail::require(sparsity <= d, "synthetic sparsity exceeds d");
  }
  std::size_t support() const { return sparsity ? sparsity : std::max<std::size_t>(1, d / 10); }
};

inline std::string to_string(SyntheticSpec::Kind k) {
  return k == SyntheticSpec::Kind::Lasso ? "lasso" : "ridge-logistic";
}

/// "kind=lasso,n=200,d=50,density=0.1,noise=0.01,sparsity=5,seed=3"; omitted keys keep defaults.
inline SyntheticSpec parse_synthetic(const std::string& text) {
  SyntheticSpec spec;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw Error("synthetic spec item without '=': " + item);
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    auto number = [&](double& out) {
      char* end = nullptr;
      out = std::strtod(value.c_str(), &end);
      if (value.empty() || *end != '\0') throw Error("bad value for synthetic " + key + ": " + value);
    };
    auto count = [&](auto& out) {
      double v;
      number(v);
      if (v < 0 || v != std::floor(v)) throw Error("synthetic " + key + " must be a nonnegative integer");
      out = static_cast<std::remove_reference_t<decltype(out)>>(v);
    };
    if (key == "kind") {
      if (value == "lasso")
        spec.kind = SyntheticSpec::Kind::Lasso;
      else if (value == "ridge-logistic" || value == "logistic")
        spec.kind = SyntheticSpec::Kind::RidgeLogistic;
      else
        throw Error("unknown synthetic kind: " + value);
    } else if (key == "n") {
      count(spec.n);
    } else if (key == "d") {
      count(spec.d);
    } else if (key == "density") {
      number(spec.density);
    } else if (key == "noise") {
      number(spec.noise);
    } else if (key == "sparsity") {
      count(spec.sparsity);
    } else if (key == "seed") {
      count(spec.seed);
    } else {
      throw Error("unknown synthetic key: " + key);
    }
  }
  spec.validate();
  return spec;
}

struct SyntheticData {
  Dataset data;
  Vector truth;  // ground-truth coefficients x*
};

/// Bernoulli(density) pattern with N(0,1) values (geometric skipping), a
/// `support()`-sparse ground truth with N(0,1) entries, and labels
///   lasso:          b = a^T x* + noise N(0,1)
///   ridge-logistic: b = sign(a^T x* + noise Logistic(0,1)), ties to +1.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  RngStream rng(spec.seed);
  Vector truth(spec.d, 0.0);
  {
    std::vector<std::size_t> perm(spec.d);
    for (std::size_t j = 0; j < spec.d; ++j) perm[j] = j;
    const std::size_t k = spec.support();
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t r = t + rng.uniform_index(spec.d - t);
      std::swap(perm[t], perm[r]);
      truth[perm[t]] = rng.normal();
    }
  }
  DatasetBuilder builder;
  std::vector<std::pair<Index, double>> entries;
  const double log_q = spec.density < 1.0 ? std::log1p(-spec.density) : 0.0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    entries.clear();
    double t = 0.0;
    std::size_t j = 0;
    for (;;) {
      if (spec.density < 1.0) {
        const double u = 1.0 - rng.uniform01();  // (0, 1]
        const double skip = std::floor(std::log(u) / log_q);
        if (skip >= static_cast<double>(spec.d - j)) break;
        j += static_cast<std::size_t>(skip);
      }
      if (j >= spec.d) break;
      const double v = rng.normal();
      entries.emplace_back(static_cast<Index>(j), v);
      t += v * truth[j];
      ++j;
    }
    double label;
    if (spec.kind == SyntheticSpec::Kind::Lasso) {
      label = t + spec.noise * rng.normal();
    } else {
      const double u = 1.0 - rng.uniform01();
      const double logistic = spec.noise > 0.0 ? spec.noise * std::log(u / (1.0 - u + 1e-300)) : 0.0;
      label = t + logistic >= 0.0 ? 1.0 : -1.0;
    }
    builder.add_row(entries, label);
  }
  return {std::move(builder).build(spec.d), std::move(truth)};
}

struct DatasetSummary {
  std::size_t n = 0, d = 0, nnz = 0;
  double density = 0.0;
  double mean_row_nnz = 0.0;
  std::size_t max_row_nnz = 0;
  std::size_t empty_rows = 0;
  std::size_t positive = 0, negative = 0;
  double mean_smoothness = 0.0, max_smoothness = 0.0;
};

inline DatasetSummary summarize(const Dataset& a, const Loss& loss) {
  DatasetSummary s;
  s.n = a.rows();
  s.d = a.cols();
  s.nnz = a.nnz();
  s.density = a.density();
  s.mean_row_nnz = static_cast<double>(a.nnz()) / static_cast<double>(a.rows());
  s.max_row_nnz = a.max_row_nnz();
  double lsum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const SparseRow r = a.row(i);
    if (r.nnz() == 0) ++s.empty_rows;
    if (a.label(i) > 0) ++s.positive;
    if (a.label(i) < 0) ++s.negative;
    const double li = smoothness_constant(loss, r);
    lsum += li;
    s.max_smoothness = std::max(s.max_smoothness, li);
  }
  s.mean_smoothness = lsum / static_cast<double>(a.rows());
  return s;
}

}  // namespace erm
