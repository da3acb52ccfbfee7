#pragma once

#include <cstdint>
#include <vector>

namespace cohortrisk::cohort {

// Greenwald-Khanna summary. Rank error of any answer is at most delta * count().
class QuantileSketch {
public:
    explicit QuantileSketch(double delta = 0.01);

    void insert(double value);
    // q in [0, 1]; throws EmptySketch when nothing has been inserted.
    double query(double q) const;

    // After freeze() the sketch is read-only and safe to share across threads.
    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    double delta() const { return delta_; }
    std::int64_t count() const { return n_; }
    std::size_t summary_size() const { return tuples_.size(); }

private:
    struct Tuple {
        double v;
        std::int64_t g;
        std::int64_t d;
    };

    void compress();

    double delta_;
    std::int64_t n_ = 0;
    std::int64_t since_compress_ = 0;
    std::int64_t compress_every_;
    std::vector<Tuple> tuples_;
    bool frozen_ = false;
};

QuantileSketch& sketch_insert(QuantileSketch& sketch, double value);
double sketch_query(const QuantileSketch& sketch, double q);

}  // namespace cohortrisk::cohort
