#pragma once

// Sample plumbing: pull-based sources and the SampleBatch bit matrix.
// Sources hand out one row (n bits) per pull; testers draw exactly what they
// need and report the count. Batch file format: header "m n seed", then m
// lines of n characters in {0,1}.

#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "bnprop/bayes_net.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/exact.hpp"
#include "bnprop/rng.hpp"

namespace bnprop {

class SampleBatch {
  public:
    SampleBatch() = default;
    SampleBatch(int n, std::uint64_t seed) : n_(n), seed_(seed) {
        if (n_ <= 20) histogram_.assign(std::size_t{1} << n_, 0);
    }

    int n() const { return n_; }
    std::uint64_t size() const { return static_cast<std::uint64_t>(rows_.size()); }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t row(std::uint64_t r) const { return rows_[r]; }
    bool bit(std::uint64_t r, int i) const { return (rows_[r] >> i) & 1u; }

    void push_row(std::uint64_t bits) {
        rows_.push_back(bits);
        if (!histogram_.empty()) ++histogram_[bits];
    }

    // Cell counts over the full state space; available for n <= 20.
    const std::vector<std::uint64_t>& histogram() const { return histogram_; }
    bool has_histogram() const { return !histogram_.empty(); }

    std::uint64_t count_ones(int coordinate) const {
        std::uint64_t c = 0;
        for (std::uint64_t r : rows_) c += (r >> coordinate) & 1u;
        return c;
    }

    void write(std::ostream& os) const {
        os << size() << ' ' << n_ << ' ' << seed_ << '\n';
        std::string line(static_cast<std::size_t>(n_), '0');
        for (std::uint64_t r : rows_) {
            for (int i = 0; i < n_; ++i) line[static_cast<std::size_t>(i)] = ((r >> i) & 1u) ? '1' : '0';
            os << line << '\n';
        }
    }

    static SampleBatch read(std::istream& is) {
        std::uint64_t m = 0, seed = 0;
        int n = 0;
        if (!(is >> m >> n >> seed)) throw InvalidParameter("bad sample batch header");
        if (n < 1 || n > 63) throw InvalidParameter("sample batch dimension out of range");
        SampleBatch b(n, seed);
        std::string line;
        for (std::uint64_t r = 0; r < m; ++r) {
            if (!(is >> line) || static_cast<int>(line.size()) != n)
                throw InvalidParameter("bad sample batch row " + std::to_string(r));
            std::uint64_t bits = 0;
            for (int i = 0; i < n; ++i) {
                if (line[static_cast<std::size_t>(i)] == '1')
                    bits |= std::uint64_t{1} << i;
                else if (line[static_cast<std::size_t>(i)] != '0')
                    throw InvalidParameter("sample batch has a non-binary character");
            }
            b.push_row(bits);
        }
        return b;
    }

  private:
    int n_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::uint64_t> rows_;
    std::vector<std::uint64_t> histogram_;
};

// Pull-based stream of samples over {0,1}^n (one uint64 row per pull, bit i =
// coordinate i). Throws SampleSourceExhausted when a finite source runs dry.
class SampleSource {
  public:
    virtual ~SampleSource() = default;
    virtual int n() const = 0;
    virtual std::uint64_t next() = 0;
};

class BayesNetSource final : public SampleSource {
  public:
    BayesNetSource(BayesNet net, std::uint64_t seed) : net_(std::move(net)), rng_(seed) {}
    int n() const override { return net_.n(); }
    std::uint64_t next() override { return ancestral_draw(net_, rng_); }

  private:
    BayesNet net_;
    Rng rng_;
};

class ProductSource final : public SampleSource {
  public:
    ProductSource(ProductSpec spec, std::uint64_t seed) : means_(std::move(spec.means)), rng_(seed) {
        // Precomputed 64-bit thresholds: bit set iff next_u64() < threshold.
        thresholds_.reserve(means_.size());
        for (double m : means_)
            thresholds_.push_back(static_cast<std::uint64_t>(
                m >= 1.0 ? ~std::uint64_t{0} : m * 18446744073709551616.0));
    }
    int n() const override { return static_cast<int>(means_.size()); }
    std::uint64_t next() override {
        std::uint64_t row = 0;
        for (std::size_t i = 0; i < thresholds_.size(); ++i)
            if (rng_.next_u64() < thresholds_[i]) row |= std::uint64_t{1} << i;
        return row;
    }

  private:
    std::vector<double> means_;
    std::vector<std::uint64_t> thresholds_;
    Rng rng_;
};

// Relabels coordinates: output bit r equals input bit ordering[r].
class PermutedSource final : public SampleSource {
  public:
    PermutedSource(SampleSource& inner, std::vector<int> ordering)
        : inner_(&inner), ordering_(std::move(ordering)) {}
    int n() const override { return static_cast<int>(ordering_.size()); }
    std::uint64_t next() override {
        const std::uint64_t x = inner_->next();
        std::uint64_t out = 0;
        for (std::size_t r = 0; r < ordering_.size(); ++r)
            out |= ((x >> ordering_[r]) & 1u) << r;
        return out;
    }

  private:
    SampleSource* inner_;
    std::vector<int> ordering_;
};

class BatchSource final : public SampleSource {
  public:
    explicit BatchSource(const SampleBatch& batch) : batch_(&batch) {}
    int n() const override { return batch_->n(); }
    std::uint64_t next() override {
        if (pos_ >= batch_->size()) throw SampleSourceExhausted("batch of " + std::to_string(batch_->size()));
        return batch_->row(pos_++);
    }

  private:
    const SampleBatch* batch_;
    std::uint64_t pos_ = 0;
};

// Ancestral sampling of a Bayes net; deterministic given the seed.
inline SampleBatch sample(const BayesNet& net, std::uint64_t m, std::uint64_t seed) {
    SampleBatch batch(net.n(), seed);
    Rng rng(seed);
    for (std::uint64_t t = 0; t < m; ++t) batch.push_row(ancestral_draw(net, rng));
    return batch;
}

inline SampleBatch collect(SampleSource& source, std::uint64_t m, std::uint64_t seed_tag = 0) {
    SampleBatch batch(source.n(), seed_tag);
    for (std::uint64_t t = 0; t < m; ++t) batch.push_row(source.next());
    return batch;
}

} // namespace bnprop
