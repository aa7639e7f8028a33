#pragma once

#include <cmath>
#include <cstdint>

namespace dynelab {

/// Neumaier compensated accumulator; keeps ensemble reductions
/// order-independent to ~1e-16 relative.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void merge(const CompensatedSum& other) {
        add(other.sum_);
        comp_ += other.comp_;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Running mean / standard error of one sample statistic.
struct MomentAccumulator {
    CompensatedSum sum;
    CompensatedSum sum_sq;
    std::int64_t n = 0;

    void add(double x) {
        sum.add(x);
        sum_sq.add(x * x);
        ++n;
    }
    void merge(const MomentAccumulator& other) {
        sum.merge(other.sum);
        sum_sq.merge(other.sum_sq);
        n += other.n;
    }
    double mean() const { return n > 0 ? sum.value() / static_cast<double>(n) : 0.0; }
    /// Sample standard deviation / sqrt(n).
    double stderr_mean() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = (sum_sq.value() - static_cast<double>(n) * m * m) /
                           static_cast<double>(n - 1);
        return var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    }
};

} // namespace dynelab
