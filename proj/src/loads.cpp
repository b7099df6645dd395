#include "thermodamage/loads.hpp"

#include <algorithm>
#include <cmath>

namespace thermodamage {

TimeSignal TimeSignal::table(std::vector<double> t, std::vector<double> v) {
    TimeSignal s;
    s.kind = Kind::Table;
    s.times = std::move(t);
    s.values = std::move(v);
    return s;
}

void TimeSignal::validate(const char* what) const {
    if (kind != Kind::Table) return;
    if (times.size() < 2 || times.size() != values.size())
        throw ConfigError(std::string(what) + ": table needs matching times/values, at least 2 points");
    for (size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw ConfigError(std::string(what) + ": table times must be strictly increasing");
}

double TimeSignal::eval(double t, double horizon) const {
    switch (kind) {
        case Kind::Constant:
            return value;
        case Kind::Ramp:
            return horizon > 0.0 ? value * t / horizon : 0.0;
        case Kind::Table: {
            if (t <= times.front()) return values.front();
            if (t >= times.back()) return values.back();
            auto it = std::upper_bound(times.begin(), times.end(), t);
            size_t i = static_cast<size_t>(it - times.begin());
            double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
            return (1.0 - w) * values[i - 1] + w * values[i];
        }
    }
    return 0.0;
}

double TimeSignal::integral(double t0, double t1, double horizon) const {
    if (t1 < t0) return -integral(t1, t0, horizon);
    switch (kind) {
        case Kind::Constant:
            return value * (t1 - t0);
        case Kind::Ramp:
            return horizon > 0.0 ? 0.5 * value * (t1 * t1 - t0 * t0) / horizon : 0.0;
        case Kind::Table: {
            // split at table knots; the integrand is linear on each piece
            double acc = 0.0;
            double a = t0;
            for (size_t i = 0; i < times.size() && a < t1; ++i) {
                if (times[i] <= a) continue;
                double b = std::min(times[i], t1);
                acc += 0.5 * (eval(a, horizon) + eval(b, horizon)) * (b - a);
                a = b;
            }
            if (a < t1) acc += 0.5 * (eval(a, horizon) + eval(t1, horizon)) * (t1 - a);
            return acc;
        }
    }
    return 0.0;
}

bool TimeSignal::nonnegative(double horizon) const {
    switch (kind) {
        case Kind::Constant:
            return value >= 0.0;
        case Kind::Ramp:
            return eval(0.0, horizon) >= 0.0 && eval(horizon, horizon) >= 0.0;
        case Kind::Table:
            return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0; });
    }
    return true;
}

double local_mean(const TimeSignal& g, double tau, int k, double horizon) {
    if (!(tau > 0.0)) throw ConfigError("local_mean: tau must be > 0");
    if (k < 1) throw ConfigError("local_mean: window index must be >= 1");
    return g.integral((k - 1) * tau, k * tau, horizon) / tau;
}

void LoadData::validate() const {
    fvol.validate("loads.volume_force");
    fsurf.validate("loads.traction");
    H.validate("loads.heat_source");
    hb.validate("loads.boundary_flux");
    if (!H.nonnegative(horizon))
        throw ConfigError("loads.heat_source: H must be >= 0 on [0, horizon]");
    if (!hb.nonnegative(horizon))
        throw ConfigError("loads.boundary_flux: h must be >= 0 on [0, horizon]");
}

} // namespace thermodamage
