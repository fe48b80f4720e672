// Aggregate demand-shock models.
//
// Three kinds share one service set — support bounds, mean, CDF, quantile,
// IID sampling, and the partial expectations E[(X-y)^+] / E[(y-X)^+] that
// the expected-profit function consumes:
//
//   - TruncatedNormalShock: closed-form CDF and quantile; partial
//     expectations by adaptive Gauss-Legendre quadrature of the CDF.
//   - SumShock: the sum of n IID per-customer truncated normals. It has no
//     closed form, so its distribution services run off a one-time
//     high-precision sample table (default 2e6 draws of the full sum) with
//     the sample count and seed recorded, optionally cached on disk. A
//     cheaper CLT truncated-normal approximation can be selected instead.
//   - EmpiricalShock: an explicit sample set (e.g. loaded from a file);
//     sampling draws uniformly from the set.
//
// Values are immutable after construction/preparation and safe to share
// across replication workers; sampling takes an explicit generator.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "drsim/errors.hpp"
#include "drsim/quadrature.hpp"
#include "drsim/rng.hpp"
#include "drsim/truncated_normal.hpp"

namespace drsim {

/// Fixed default seed for quantile-table construction. Deliberately not
/// derived from the experiment base seed: the table approximates a fixed
/// distribution, so sharing one table across experiments keeps the oracle
/// benchmark identical everywhere (and makes the disk cache reusable).
inline constexpr std::uint64_t kDefaultTableSeed = 0x243f6a8885a308d3ULL;

/// Sorted sample set with prefix sums: O(log M) CDF, quantile, and partial
/// expectations with respect to the empirical distribution of the samples.
class SampleTable {
  public:
    SampleTable(std::vector<double> samples, std::uint64_t seed)
        : sorted_(std::move(samples)), seed_(seed) {
        if (sorted_.empty()) throw ConfigError("SampleTable: no samples");
        std::sort(sorted_.begin(), sorted_.end());
        prefix_.resize(sorted_.size() + 1);
        prefix_[0] = 0.0;
        for (std::size_t i = 0; i < sorted_.size(); ++i) prefix_[i + 1] = prefix_[i] + sorted_[i];
    }

    std::size_t size() const { return sorted_.size(); }
    std::uint64_t seed() const { return seed_; }
    double min() const { return sorted_.front(); }
    double max() const { return sorted_.back(); }
    double mean() const { return prefix_.back() / static_cast<double>(size()); }

    /// Fraction of samples <= x.
    double cdf(double x) const {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(size());
    }

    /// Order statistic with index ceil(M * alpha); equals
    /// inf{x : cdf(x) >= alpha} for the empirical distribution.
    double quantile(double alpha) const {
        const double m = static_cast<double>(size());
        auto i = static_cast<std::size_t>(std::ceil(m * alpha));
        if (i < 1) i = 1;
        if (i > size()) i = size();
        return sorted_[i - 1];
    }

    /// E[(X - y)^+] under the empirical distribution.
    double partial_plus(double y) const {
        const auto j = static_cast<std::size_t>(
            std::upper_bound(sorted_.begin(), sorted_.end(), y) - sorted_.begin());
        const double m = static_cast<double>(size());
        return (prefix_.back() - prefix_[j] - static_cast<double>(size() - j) * y) / m;
    }

    /// E[(y - X)^+] under the empirical distribution.
    double partial_minus(double y) const {
        const auto j = static_cast<std::size_t>(
            std::upper_bound(sorted_.begin(), sorted_.end(), y) - sorted_.begin());
        const double m = static_cast<double>(size());
        return (static_cast<double>(j) * y - prefix_[j]) / m;
    }

    /// Uniform draw from the sample set.
    double draw(Rng& rng) const {
        auto i = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(size()));
        if (i >= size()) i = size() - 1;
        return sorted_[i];
    }

    /// Binary cache (native endianness; the cache is a local artifact, not
    /// an interchange format).
    void save(const std::filesystem::path& file) const {
        const std::filesystem::path tmp = file.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw ConfigError("SampleTable: cannot write " + tmp.string());
            out.write(kMagic, 8);
            const std::uint64_t m = size();
            out.write(reinterpret_cast<const char*>(&m), sizeof m);
            out.write(reinterpret_cast<const char*>(&seed_), sizeof seed_);
            out.write(reinterpret_cast<const char*>(sorted_.data()),
                      static_cast<std::streamsize>(sorted_.size() * sizeof(double)));
            if (!out) throw ConfigError("SampleTable: write failed for " + tmp.string());
        }
        std::filesystem::rename(tmp, file);
    }

    static SampleTable load(const std::filesystem::path& file) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw ConfigError("SampleTable: cannot read " + file.string());
        char magic[8] = {};
        std::uint64_t m = 0, seed = 0;
        in.read(magic, 8);
        in.read(reinterpret_cast<char*>(&m), sizeof m);
        in.read(reinterpret_cast<char*>(&seed), sizeof seed);
        if (!in || std::memcmp(magic, kMagic, 8) != 0 || m == 0)
            throw ConfigError("SampleTable: bad header in " + file.string());
        std::vector<double> samples(m);
        in.read(reinterpret_cast<char*>(samples.data()),
                static_cast<std::streamsize>(m * sizeof(double)));
        if (!in) throw ConfigError("SampleTable: truncated data in " + file.string());
        SampleTable table(std::move(samples), seed);
        return table;
    }

  private:
    static constexpr const char* kMagic = "DRSIMTB1";

    std::vector<double> sorted_;
    std::vector<double> prefix_;
    std::uint64_t seed_;
};

/// Closed-form shock: N(0, sigma^2) truncated to [lo, hi].
class TruncatedNormalShock {
  public:
    /// abs_tol is the quadrature budget for the partial expectations; the
    /// default keeps them well inside 1e-6 of any contract scale.
    explicit TruncatedNormalShock(double sigma, double lo, double hi, double abs_tol = 0.0)
        : dist_(sigma, lo, hi),
          tol_(abs_tol > 0.0 ? abs_tol : 1e-11 * std::max(1.0, sigma)) {
        // Distribution mass outside [eff_lo_, eff_hi_] is below 1e-14; the
        // partial-expectation integrals treat the CDF as exactly 0 / 1
        // there, which keeps the quadrature interval O(sigma) wide even
        // when the truncation interval is enormous.
        eff_lo_ = dist_.quantile(1e-14);
        eff_hi_ = dist_.quantile(1.0 - 1e-14);
    }

    double support_lo() const { return dist_.lo(); }
    double support_hi() const { return dist_.hi(); }
    double mean() const { return dist_.mean(); }
    double variance() const { return dist_.variance(); }
    double cdf(double x) const { return dist_.cdf(x); }
    double quantile(double alpha) const { return dist_.quantile(alpha); }
    double sample(Rng& rng) const { return dist_.sample(rng); }
    const TruncatedNormal& distribution() const { return dist_; }

    /// E[(X - y)^+] = integral of (1 - F) over [y, hi], plus the linear part
    /// below the support.
    double partial_plus(double y) const {
        const double lo = dist_.lo(), hi = dist_.hi();
        if (y >= hi) return 0.0;
        double acc = 0.0;
        double a = y;
        if (a < lo) {
            acc += lo - a;
            a = lo;
        }
        if (a < eff_lo_) {
            acc += eff_lo_ - a;  // 1 - F is 1 up to rounding here
            a = eff_lo_;
        }
        const double b = std::min(hi, eff_hi_);  // beyond, 1 - F vanishes
        if (a < b)
            acc += integrate([this](double x) { return 1.0 - dist_.cdf(x); }, a, b, tol_);
        return acc;
    }

    /// E[(y - X)^+] = integral of F over [lo, y], plus the linear part above
    /// the support.
    double partial_minus(double y) const {
        const double lo = dist_.lo(), hi = dist_.hi();
        if (y <= lo) return 0.0;
        double acc = 0.0;
        double b = y;
        if (b > hi) {
            acc += b - hi;
            b = hi;
        }
        if (b > eff_hi_) {
            acc += b - eff_hi_;  // F is 1 up to rounding here
            b = eff_hi_;
        }
        const double a = std::max(lo, eff_lo_);  // below, F vanishes
        if (a < b) acc += integrate([this](double x) { return dist_.cdf(x); }, a, b, tol_);
        return acc;
    }

  private:
    TruncatedNormal dist_;
    double tol_;
    double eff_lo_, eff_hi_;
};

enum class SumShockMode {
    exact,  // sample the full per-customer sum; distribution via sample table
    clt,    // truncated-normal approximation matching mean 0 and variance
};

/// Sum of n IID zero-mean truncated normals (one per customer).
class SumShock {
  public:
    SumShock(std::size_t n, double sigma_i, double lo_i, double hi_i,
             SumShockMode mode = SumShockMode::exact)
        : n_(n), per_(sigma_i, lo_i, hi_i), mode_(mode) {
        if (n == 0) throw ConfigError("SumShock: customer count must be >= 1");
        const double nd = static_cast<double>(n);
        if (mode_ == SumShockMode::clt)
            clt_.emplace(std::sqrt(nd * per_.variance()), nd * lo_i, nd * hi_i);
    }

    std::size_t customers() const { return n_; }
    SumShockMode mode() const { return mode_; }
    const TruncatedNormal& per_customer() const { return per_; }
    double support_lo() const { return static_cast<double>(n_) * per_.lo(); }
    double support_hi() const { return static_cast<double>(n_) * per_.hi(); }

    bool prepared() const { return mode_ == SumShockMode::clt || table_ != nullptr; }
    const SampleTable* table() const { return table_.get(); }

    /// One aggregate draw. Exact mode sums n fresh per-customer draws, so
    /// sampling never depends on the table.
    double sample(Rng& rng) const {
        if (mode_ == SumShockMode::clt) return clt_->sample(rng);
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s += per_.sample(rng);
        return s;
    }

    double mean() const { return mode_ == SumShockMode::clt ? clt_->mean() : require_table().mean(); }
    double cdf(double x) const {
        return mode_ == SumShockMode::clt ? clt_->cdf(x) : require_table().cdf(x);
    }
    double quantile(double alpha) const {
        return mode_ == SumShockMode::clt ? clt_->quantile(alpha) : require_table().quantile(alpha);
    }
    double partial_plus(double y) const {
        return mode_ == SumShockMode::clt ? clt_->partial_plus(y) : require_table().partial_plus(y);
    }
    double partial_minus(double y) const {
        return mode_ == SumShockMode::clt ? clt_->partial_minus(y)
                                          : require_table().partial_minus(y);
    }

    /// Attach a prepared sample table (see prepare_shock below).
    void attach_table(std::shared_ptr<const SampleTable> table) { table_ = std::move(table); }

    /// Deterministic cache identity of this spec for a given (M, seed).
    std::string cache_key(std::size_t samples, std::uint64_t seed) const {
        char buf[192];
        std::snprintf(buf, sizeof buf, "sum;n=%zu;sigma=%.17g;lo=%.17g;hi=%.17g;M=%zu;seed=%llu",
                      n_, per_.sigma(), per_.lo(), per_.hi(), samples,
                      static_cast<unsigned long long>(seed));
        std::uint64_t h = 14695981039346656037ULL;
        for (const char* p = buf; *p; ++p) {
            h ^= static_cast<unsigned char>(*p);
            h *= 1099511628211ULL;
        }
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

  private:
    const SampleTable& require_table() const {
        if (!table_)
            throw StateError(
                "SumShock: distribution services in exact mode need prepare_shock() first");
        return *table_;
    }

    std::size_t n_;
    TruncatedNormal per_;
    SumShockMode mode_;
    std::optional<TruncatedNormalShock> clt_;  // clt mode only
    std::shared_ptr<const SampleTable> table_;  // exact mode, after preparation
};

/// Distribution given by an explicit sample set. Sampling draws uniformly
/// from the set; all other services are exact for the empirical law.
class EmpiricalShock {
  public:
    explicit EmpiricalShock(std::vector<double> samples, std::uint64_t seed = 0)
        : table_(std::make_shared<SampleTable>(std::move(samples), seed)) {}

    /// Newline-delimited numeric text; blank lines ignored.
    static EmpiricalShock from_file(const std::filesystem::path& file) {
        std::ifstream in(file);
        if (!in) throw ConfigError("EmpiricalShock: cannot read " + file.string());
        std::vector<double> samples;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::size_t b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            std::size_t e = line.find_last_not_of(" \t\r");
            try {
                std::size_t used = 0;
                const double v = std::stod(line.substr(b, e - b + 1), &used);
                if (used != e - b + 1) throw std::invalid_argument("trailing characters");
                samples.push_back(v);
            } catch (const std::exception&) {
                throw ConfigError("EmpiricalShock: " + file.string() + ":" +
                                  std::to_string(line_no) + ": not a number: " + line);
            }
        }
        if (samples.empty())
            throw ConfigError("EmpiricalShock: " + file.string() + " contains no samples");
        return EmpiricalShock(std::move(samples));
    }

    double support_lo() const { return table_->min(); }
    double support_hi() const { return table_->max(); }
    double mean() const { return table_->mean(); }
    double cdf(double x) const { return table_->cdf(x); }
    double quantile(double alpha) const { return table_->quantile(alpha); }
    double sample(Rng& rng) const { return table_->draw(rng); }
    double partial_plus(double y) const { return table_->partial_plus(y); }
    double partial_minus(double y) const { return table_->partial_minus(y); }
    const SampleTable& table() const { return *table_; }

  private:
    std::shared_ptr<const SampleTable> table_;
};

/// Unified shock model: one of the three kinds plus an optional bi-Lipschitz
/// bound used only by invariant checks.
class ShockModel {
  public:
    using Kind = std::variant<TruncatedNormalShock, SumShock, EmpiricalShock>;

    ShockModel(TruncatedNormalShock k) : kind_(std::move(k)) {}  // NOLINT(google-explicit-*)
    ShockModel(SumShock k) : kind_(std::move(k)) {}              // NOLINT
    ShockModel(EmpiricalShock k) : kind_(std::move(k)) {}        // NOLINT

    /// Assumption-2 constant for bound checks; not used by any computation.
    std::optional<double> lipschitz_bound;

    const Kind& kind() const { return kind_; }
    Kind& kind() { return kind_; }

    double support_lo() const {
        return std::visit([](const auto& k) { return k.support_lo(); }, kind_);
    }
    double support_hi() const {
        return std::visit([](const auto& k) { return k.support_hi(); }, kind_);
    }
    double mean() const {
        return std::visit([](const auto& k) { return k.mean(); }, kind_);
    }
    double cdf(double x) const {
        return std::visit([x](const auto& k) { return k.cdf(x); }, kind_);
    }
    /// inf{x : F(x) >= alpha}; alpha must lie in (0, 1).
    double quantile(double alpha) const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::domain_error("ShockModel::quantile: alpha must lie in (0,1)");
        return std::visit([alpha](const auto& k) { return k.quantile(alpha); }, kind_);
    }
    double sample(Rng& rng) const {
        return std::visit([&rng](const auto& k) { return k.sample(rng); }, kind_);
    }
    double partial_plus(double y) const {
        return std::visit([y](const auto& k) { return k.partial_plus(y); }, kind_);
    }
    double partial_minus(double y) const {
        return std::visit([y](const auto& k) { return k.partial_minus(y); }, kind_);
    }
    bool prepared() const {
        if (const auto* s = std::get_if<SumShock>(&kind_)) return s->prepared();
        return true;
    }

  private:
    Kind kind_;
};

/// Point mass at zero, as an empirical law with a single sample. Used where
/// a deterministic environment is wanted (tests, hand-checkable examples).
inline ShockModel degenerate_shock() { return ShockModel(EmpiricalShock({0.0})); }

/// Options for one-time sum-shock table construction.
struct TablePrepareOptions {
    std::string cache_dir;                 // empty: build in memory, no disk cache
    std::size_t samples = 2'000'000;       // M; the spec floor is 1e6
    std::uint64_t seed = kDefaultTableSeed;
};

/// Build (or load from cache) the sample table behind an exact-mode
/// SumShock. No-op for every other kind/mode. Call once at experiment setup,
/// before the model is shared across workers.
inline void prepare_shock(ShockModel& model, const TablePrepareOptions& opt = {}) {
    auto* sum = std::get_if<SumShock>(&model.kind());
    if (sum == nullptr || sum->mode() != SumShockMode::exact || sum->prepared()) return;
    if (opt.samples < 1'000'000)
        throw ConfigError("prepare_shock: quantile table needs at least 1e6 samples");

    std::filesystem::path file;
    if (!opt.cache_dir.empty()) {
        std::filesystem::create_directories(opt.cache_dir);
        file = std::filesystem::path(opt.cache_dir) /
               ("shock_table_" + sum->cache_key(opt.samples, opt.seed) + ".bin");
        if (std::filesystem::exists(file)) {
            try {
                auto table = std::make_shared<SampleTable>(SampleTable::load(file));
                if (table->size() == opt.samples && table->seed() == opt.seed) {
                    sum->attach_table(std::move(table));
                    return;
                }
            } catch (const std::exception&) {
                // Unreadable cache entry: fall through and rebuild it.
            }
        }
    }

    Rng rng(opt.seed);
    std::vector<double> samples(opt.samples);
    for (auto& s : samples) s = sum->sample(rng);
    auto table = std::make_shared<SampleTable>(std::move(samples), opt.seed);
    if (!file.empty()) table->save(file);
    sum->attach_table(std::move(table));
}

/// Assumption-2 audit: chord slopes of the CDF between adjacent grid points
/// must lie within [1/L, L]. Violations are reported, never thrown — the
/// bound is a modeling assumption, not an operational precondition.
struct BiLipschitzReport {
    double L = 0.0;
    int grid_points = 0;
    int upper_violations = 0;  // chord slope > L
    int lower_violations = 0;  // chord slope < 1/L
    double max_slope = 0.0;
    double min_slope = std::numeric_limits<double>::infinity();
    bool ok() const { return upper_violations == 0 && lower_violations == 0; }
};

inline BiLipschitzReport check_bilipschitz(const ShockModel& model, double L,
                                           int grid_points = 257) {
    if (!(L >= 1.0)) throw std::domain_error("check_bilipschitz: require L >= 1");
    if (grid_points < 2) throw std::domain_error("check_bilipschitz: need at least 2 grid points");
    BiLipschitzReport rep;
    rep.L = L;
    rep.grid_points = grid_points;
    const double lo = model.support_lo(), hi = model.support_hi();
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    double prev_x = lo, prev_f = model.cdf(lo);
    for (int i = 1; i < grid_points; ++i) {
        const double x = lo + step * static_cast<double>(i);
        const double f = model.cdf(x);
        const double slope = (f - prev_f) / (x - prev_x);
        rep.max_slope = std::max(rep.max_slope, slope);
        rep.min_slope = std::min(rep.min_slope, slope);
        if (slope > L) ++rep.upper_violations;
        if (slope < 1.0 / L) ++rep.lower_violations;
        prev_x = x;
        prev_f = f;
    }
    return rep;
}

}  // namespace drsim
