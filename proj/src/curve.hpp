#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "domain.hpp"

namespace storarb {

// Marginal value of stored energy as a function of state of charge:
// a non-increasing, right-continuous step function on [0, E]. Segment i
// covers [upper_breaks[i-1], upper_breaks[i]) with value values[i]; the last
// segment additionally contains E itself. upper_breaks.back() == E.
//
// Right-continuity fixes tie-breaks everywhere downstream: evaluate() at an
// interior breakpoint returns the right segment's value, and inverse() of a
// level y returns the largest SoC whose marginal value is still >= y.
class MarginalValueCurve {
public:
    MarginalValueCurve() = default;
    MarginalValueCurve(std::vector<double> upper_breaks, std::vector<double> values);

    static MarginalValueCurve constant(double value, double capacity);

    double capacity() const noexcept { return upper_breaks_.back(); }
    std::size_t segment_count() const noexcept { return values_.size(); }
    const std::vector<double>& upper_breaks() const noexcept { return upper_breaks_; }
    const std::vector<double>& values() const noexcept { return values_; }

    // q(e) for e in [0, E]; throws ErrorCode::numeric outside.
    double evaluate(double e) const;
    // q(clamp(e, 0, E)) — the form threshold evaluation needs for e +/- power shifts.
    double evaluate_clamped(double e) const;
    // Largest e with q(e) >= y: 0 if y exceeds every value, E if no value is
    // below y, otherwise the upper break of the last qualifying segment.
    double inverse(double y) const;

    // Total stored value over [0, e'] differences are taken from; see ValueCurve.
    bool operator==(const MarginalValueCurve& other) const = default;

    // Columnar text serialization: one "upper_break value" pair per line,
    // '#' comments allowed. Round-trips exactly via shortest-round-trip floats.
    std::string to_text() const;
    static MarginalValueCurve from_text(const std::string& text);

private:
    void check_invariants() const;

    std::vector<double> upper_breaks_;
    std::vector<double> values_;
};

// Integral of a marginal curve: concave piecewise-linear Q with Q(0) = offset
// (offset defaults to 0; backward induction threads the DP constant through it).
class ValueCurve {
public:
    ValueCurve() = default;
    explicit ValueCurve(const MarginalValueCurve& marginal, double offset = 0.0);

    double capacity() const noexcept { return breaks_.back(); }
    double offset() const noexcept { return offset_; }
    double evaluate(double e) const;

private:
    std::vector<double> breaks_;   // upper breaks, as in the marginal curve
    std::vector<double> slopes_;   // segment values
    std::vector<double> cum_;      // cum_[i] = integral over [0, lower break of segment i]
    double offset_ = 0.0;
};

inline ValueCurve integrate(const MarginalValueCurve& m, double offset = 0.0) {
    return ValueCurve(m, offset);
}

// Incremental construction used by the Bellman backup: appends segments left
// to right, drops empty ones, merges equal-valued neighbors, and verifies the
// non-increasing invariant on finish().
class CurveBuilder {
public:
    explicit CurveBuilder(double capacity) : capacity_(capacity) {}

    // Extend coverage up to `upper` with constant `value`.
    void append(double upper, double value);
    // Copy `src` restricted to SoC window [src_lo, src_hi), translated by `shift`.
    void append_window(const MarginalValueCurve& src, double src_lo, double src_hi,
                       double shift);
    double cursor() const noexcept { return cursor_; }
    MarginalValueCurve finish();

private:
    double capacity_;
    double cursor_ = 0.0;
    std::vector<double> breaks_;
    std::vector<double> values_;
};

// Area-preserving coarsening onto a uniform grid of `segments` cells. Keeps
// monotonicity and the total integral exactly; a no-op when the curve already
// has at most `segments` segments. segments == 0 means "leave exact".
MarginalValueCurve resample(const MarginalValueCurve& curve, std::size_t segments);

}  // namespace storarb
