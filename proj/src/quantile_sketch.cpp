#include "cohortrisk/quantile_sketch.hpp"

#include <algorithm>
#include <cmath>

#include "cohortrisk/errors.hpp"

namespace cohortrisk::cohort {

QuantileSketch::QuantileSketch(double delta) : delta_(delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw InvalidParameter("sketch delta must lie in (0, 0.5)");
    compress_every_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(1.0 / (2.0 * delta))));
}

void QuantileSketch::insert(double value) {
    if (frozen_) throw Error("insert into a frozen sketch");
    if (std::isnan(value)) throw ValidationError("cannot insert NaN into a sketch");
    ++n_;
    auto pos = std::upper_bound(tuples_.begin(), tuples_.end(), value,
                                [](double v, const Tuple& t) { return v < t.v; });
    std::int64_t d = 0;
    if (pos != tuples_.begin() && pos != tuples_.end()) {
        d = static_cast<std::int64_t>(std::floor(2.0 * delta_ * static_cast<double>(n_)));
        // Never claim more slack than the successor already carries.
        d = std::min(d, pos->g + pos->d - 1);
        d = std::max<std::int64_t>(d, 0);
    }
    tuples_.insert(pos, Tuple{value, 1, d});
    if (++since_compress_ >= compress_every_) {
        compress();
        since_compress_ = 0;
    }
}

void QuantileSketch::compress() {
    if (tuples_.size() < 3) return;
    const auto threshold = static_cast<std::int64_t>(std::floor(2.0 * delta_ * static_cast<double>(n_)));
    std::vector<Tuple> out;
    out.reserve(tuples_.size());
    // Walk right to left, folding a tuple into its right neighbour while the band allows it.
    // The first and last tuples are kept so the extremes stay exact.
    Tuple head = tuples_.back();
    for (std::size_t i = tuples_.size() - 1; i-- > 1;) {
        const Tuple& t = tuples_[i];
        if (t.g + head.g + head.d <= threshold) {
            head.g += t.g;
        } else {
            out.push_back(head);
            head = t;
        }
    }
    out.push_back(head);
    out.push_back(tuples_.front());
    std::reverse(out.begin(), out.end());
    tuples_.swap(out);
}

double QuantileSketch::query(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("quantile must lie in [0, 1]");
    if (n_ == 0) throw EmptySketch("query on an empty sketch");
    const double target = std::max(1.0, std::ceil(q * static_cast<double>(n_)));
    const double slack = delta_ * static_cast<double>(n_);
    std::int64_t rmin = 0;
    for (const auto& t : tuples_) {
        rmin += t.g;
        const std::int64_t rmax = rmin + t.d;
        if (target - slack <= static_cast<double>(rmin) && static_cast<double>(rmax) <= target + slack) return t.v;
    }
    // Unreachable while the GK invariant holds; fall back to the closest candidate by rank.
    rmin = 0;
    double best = tuples_.front().v;
    double best_gap = INFINITY;
    for (const auto& t : tuples_) {
        rmin += t.g;
        const double mid = static_cast<double>(rmin) + 0.5 * static_cast<double>(t.d);
        if (std::abs(mid - target) < best_gap) {
            best_gap = std::abs(mid - target);
            best = t.v;
        }
    }
    return best;
}

QuantileSketch& sketch_insert(QuantileSketch& sketch, double value) {
    sketch.insert(value);
    return sketch;
}

double sketch_query(const QuantileSketch& sketch, double q) { return sketch.query(q); }

}  // namespace cohortrisk::cohort
