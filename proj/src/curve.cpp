#include "curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace storarb {

namespace {

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

MarginalValueCurve::MarginalValueCurve(std::vector<double> upper_breaks,
                                       std::vector<double> values)
    : upper_breaks_(std::move(upper_breaks)), values_(std::move(values)) {
    check_invariants();
}

MarginalValueCurve MarginalValueCurve::constant(double value, double capacity) {
    return MarginalValueCurve({capacity}, {value});
}

void MarginalValueCurve::check_invariants() const {
    if (upper_breaks_.empty() || upper_breaks_.size() != values_.size())
        throw_numeric("curve: breakpoint/value count mismatch or empty curve");
    double prev = 0.0;
    for (std::size_t i = 0; i < upper_breaks_.size(); ++i) {
        if (!std::isfinite(upper_breaks_[i]) || !std::isfinite(values_[i]))
            throw_numeric("curve: non-finite breakpoint or value");
        if (upper_breaks_[i] <= prev)
            throw_numeric("curve: breakpoints must be strictly increasing from 0");
        if (i > 0 && values_[i] > values_[i - 1])
            throw_numeric("curve: marginal values must be non-increasing");
        prev = upper_breaks_[i];
    }
}

double MarginalValueCurve::evaluate(double e) const {
    const double cap = capacity();
    if (!std::isfinite(e) || e < -1e-12 || e > cap * (1.0 + 1e-12) + 1e-12)
        throw_numeric("curve evaluate: SoC outside [0, capacity]");
    if (e >= upper_breaks_.back()) return values_.back();
    // First segment whose upper break exceeds e; right-continuity falls out of
    // the strict comparison.
    auto it = std::upper_bound(upper_breaks_.begin(), upper_breaks_.end(), e);
    return values_[static_cast<std::size_t>(it - upper_breaks_.begin())];
}

double MarginalValueCurve::evaluate_clamped(double e) const {
    return evaluate(std::clamp(e, 0.0, capacity()));
}

double MarginalValueCurve::inverse(double y) const {
    if (!std::isfinite(y)) throw_numeric("curve inverse: non-finite level");
    // Values are non-increasing: locate the first segment with value < y.
    auto it = std::partition_point(values_.begin(), values_.end(),
                                   [y](double v) { return v >= y; });
    if (it == values_.begin()) return 0.0;
    return upper_breaks_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

std::string MarginalValueCurve::to_text() const {
    std::string out = "# marginal value curve: upper_break value\n";
    for (std::size_t i = 0; i < values_.size(); ++i)
        out += fmt_double(upper_breaks_[i]) + " " + fmt_double(values_[i]) + "\n";
    return out;
}

MarginalValueCurve MarginalValueCurve::from_text(const std::string& text) {
    std::istringstream in(text);
    std::vector<double> breaks, values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double b, v;
        if (!(row >> b)) continue;  // blank / comment-only line
        if (!(row >> v))
            throw_data("curve text: expected 'break value' pair at line " +
                       std::to_string(lineno));
        std::string rest;
        if (row >> rest)
            throw_data("curve text: trailing tokens at line " + std::to_string(lineno));
        breaks.push_back(b);
        values.push_back(v);
    }
    if (breaks.empty()) throw_data("curve text: no data rows");
    try {
        return MarginalValueCurve(std::move(breaks), std::move(values));
    } catch (const Error& e) {
        throw_data(std::string("curve text: ") + e.what());
    }
}

ValueCurve::ValueCurve(const MarginalValueCurve& marginal, double offset)
    : breaks_(marginal.upper_breaks()), slopes_(marginal.values()), offset_(offset) {
    cum_.resize(breaks_.size() + 1, 0.0);
    double lo = 0.0;
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
        cum_[i + 1] = cum_[i] + slopes_[i] * (breaks_[i] - lo);
        lo = breaks_[i];
    }
}

double ValueCurve::evaluate(double e) const {
    if (breaks_.empty()) throw_numeric("value curve: empty");
    const double cap = breaks_.back();
    if (!std::isfinite(e) || e < -1e-12 || e > cap * (1.0 + 1e-12) + 1e-12)
        throw_numeric("value curve evaluate: SoC outside [0, capacity]");
    const double x = std::clamp(e, 0.0, cap);
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    if (it == breaks_.end()) --it;  // x == capacity
    const auto i = static_cast<std::size_t>(it - breaks_.begin());
    const double lo = i == 0 ? 0.0 : breaks_[i - 1];
    return offset_ + cum_[i] + slopes_[i] * (x - lo);
}

void CurveBuilder::append(double upper, double value) {
    const double clipped = std::min(upper, capacity_);
    if (clipped <= cursor_) return;
    if (!values_.empty() && values_.back() == value) {
        breaks_.back() = clipped;  // merge equal-valued neighbors
    } else {
        breaks_.push_back(clipped);
        values_.push_back(value);
    }
    cursor_ = clipped;
}

void CurveBuilder::append_window(const MarginalValueCurve& src, double src_lo,
                                 double src_hi, double shift) {
    if (src_hi <= src_lo) return;
    const auto& breaks = src.upper_breaks();
    const auto& values = src.values();
    double lo = 0.0;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        const double hi = breaks[i];
        const double a = std::max(lo, src_lo);
        const double b = std::min(hi, src_hi);
        if (b > a) append(b + shift, values[i]);
        lo = hi;
        if (lo >= src_hi) break;
    }
}

MarginalValueCurve CurveBuilder::finish() {
    if (cursor_ < capacity_)
        throw_numeric("curve builder: segments do not cover [0, capacity]");
    return MarginalValueCurve(std::move(breaks_), std::move(values_));
}

MarginalValueCurve resample(const MarginalValueCurve& curve, std::size_t segments) {
    if (segments == 0 || curve.segment_count() <= segments) return curve;
    const double cap = curve.capacity();
    const ValueCurve q = integrate(curve);
    std::vector<double> breaks(segments), values(segments);
    double prev_e = 0.0, prev_q = 0.0;
    for (std::size_t i = 0; i < segments; ++i) {
        // Average marginal value over the cell: preserves the integral per cell
        // and keeps the non-increasing property for equal-width cells.
        const double e = i + 1 == segments ? cap : cap * double(i + 1) / double(segments);
        const double qi = q.evaluate(e);
        breaks[i] = e;
        values[i] = (qi - prev_q) / (e - prev_e);
        prev_e = e;
        prev_q = qi;
    }
    // Guard against rounding inverting a flat pair.
    for (std::size_t i = 1; i < segments; ++i)
        values[i] = std::min(values[i], values[i - 1]);
    return MarginalValueCurve(std::move(breaks), std::move(values));
}

}  // namespace storarb
