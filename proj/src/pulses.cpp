#include "sphoton/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "sphoton/errors.hpp"
#include "sphoton/quadrature.hpp"

namespace sphoton {

namespace {

constexpr double kSupportTail = 1e-12;
constexpr double kNormTolerance = 1e-9;

void require_finite_positive(double x, const char *what) {
    if (!std::isfinite(x) || x <= 0.0)
        throw InvalidArgument(std::string(what) + " must be finite and positive");
}

void require_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw InvalidArgument("pulse: time must be finite and non-negative");
}

// int_0^1 |a (1 - u) + b u|^2 du
double segment_norm(Complex a, Complex b) {
    return (std::norm(a) + std::real(std::conj(a) * b) + std::norm(b)) / 3.0;
}

// int_0^u |a + (b - a) v|^2 dv
double partial_segment_norm(Complex a, Complex b, double u) {
    const Complex d = b - a;
    return std::norm(a) * u + std::real(std::conj(a) * d) * u * u + std::norm(d) * u * u * u / 3.0;
}

} // namespace

namespace detail {

Complex expm1(Complex z) {
    const double x = z.real();
    const double y = z.imag();
    const double s = std::sin(0.5 * y);
    return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

Complex phi1(Complex z) {
    if (std::abs(z) < 0.5) {
        Complex term = 1.0;
        Complex sum = 1.0;
        for (int n = 2; n < 30; ++n) {
            term *= z / static_cast<double>(n);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum))
                break;
        }
        return sum;
    }
    return expm1(z) / z;
}

Complex phi2(Complex z) {
    if (std::abs(z) < 0.5) {
        Complex term = 0.5;
        Complex sum = 0.5;
        for (int n = 3; n < 30; ++n) {
            term *= z / static_cast<double>(n);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum))
                break;
        }
        return sum;
    }
    return (expm1(z) - z) / (z * z);
}

} // namespace detail

ModelParams::ModelParams(double Gamma, double delta0) : gamma_rate_(Gamma), delta0_(delta0) {
    require_finite_positive(Gamma, "ModelParams: Gamma");
    if (!std::isfinite(delta0))
        throw InvalidArgument("ModelParams: Delta0 must be finite");
}

struct PulseEnvelope::Table {
    std::vector<double> t;
    std::vector<Complex> xi;
    std::vector<double> cumulative; // int_{t_0}^{t_i} |xi|^2
};

PulseEnvelope PulseEnvelope::square(double omega) {
    require_finite_positive(omega, "square pulse: Omega");
    PulseEnvelope p;
    p.kind_ = Kind::square;
    p.omega_ = omega;
    p.support_end_ = 2.0 / omega;
    p.breaks_ = {2.0 / omega};
    return p;
}

PulseEnvelope PulseEnvelope::exponential(double omega) {
    require_finite_positive(omega, "exponential pulse: Omega");
    PulseEnvelope p;
    p.kind_ = Kind::exponential;
    p.omega_ = omega;
    p.support_end_ = 2.0 * std::log(1e12) / omega;
    return p;
}

PulseEnvelope PulseEnvelope::vacuum() {
    PulseEnvelope p;
    p.kind_ = Kind::vacuum;
    return p;
}

PulseEnvelope PulseEnvelope::tabulated(std::vector<double> times, std::vector<Complex> values,
                                       Normalization policy) {
    if (times.size() != values.size() || times.size() < 2)
        throw InvalidArgument("tabulated pulse: need at least two (t, xi) samples");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || !std::isfinite(values[i].real()) ||
            !std::isfinite(values[i].imag()))
            throw InvalidArgument("tabulated pulse: non-finite sample");
        if (i == 0 ? times[0] < 0.0 : times[i] <= times[i - 1])
            throw InvalidArgument("tabulated pulse: times must be non-negative and strictly "
                                  "increasing");
    }
    auto table = std::make_shared<Table>();
    table->t = std::move(times);
    table->xi = std::move(values);

    auto accumulate = [&] {
        table->cumulative.assign(table->t.size(), 0.0);
        for (std::size_t i = 1; i < table->t.size(); ++i) {
            const double h = table->t[i] - table->t[i - 1];
            table->cumulative[i] =
                table->cumulative[i - 1] + h * segment_norm(table->xi[i - 1], table->xi[i]);
        }
    };
    accumulate();
    const double norm = table->cumulative.back();
    switch (policy) {
    case Normalization::require:
        if (std::abs(norm - 1.0) > kNormTolerance)
            throw InvalidArgument("tabulated pulse: norm " + std::to_string(norm) +
                                  " deviates from 1 by more than 1e-9");
        break;
    case Normalization::renormalize: {
        if (!(norm > 0.0))
            throw InvalidArgument("tabulated pulse: cannot renormalize a zero envelope");
        const double scale = 1.0 / std::sqrt(norm);
        for (auto &v : table->xi)
            v *= scale;
        accumulate();
        // make the total exactly one
        const double total = table->cumulative.back();
        for (auto &c : table->cumulative)
            c /= total;
        break;
    }
    case Normalization::waive:
        break;
    }

    PulseEnvelope p;
    p.kind_ = Kind::tabulated;
    p.breaks_ = table->t;
    p.table_ = std::move(table);

    // smallest T with tail(T) <= 1e-12, by bisection on the monotone tail
    double lo = 0.0;
    double hi = p.table_->t.back();
    if (p.tail(lo) <= kSupportTail) {
        p.support_end_ = 0.0;
    } else {
        for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (p.tail(mid) <= kSupportTail ? hi : lo) = mid;
        }
        p.support_end_ = hi;
    }
    return p;
}

PulseEnvelope PulseEnvelope::from_csv(const std::filesystem::path &path, Normalization policy) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open pulse file " + path.string());
    std::vector<double> times;
    std::vector<Complex> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> cols;
        double v;
        while (ss >> v)
            cols.push_back(v);
        if (!ss.eof()) {
            if (times.empty() && cols.empty())
                continue; // header
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) +
                                  ": unparsable pulse sample");
        }
        if (cols.size() < 2 || cols.size() > 3)
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 2 or 3 columns");
        times.push_back(cols[0]);
        values.emplace_back(cols[1], cols.size() == 3 ? cols[2] : 0.0);
    }
    return tabulated(std::move(times), std::move(values), policy);
}

const std::vector<double> &PulseEnvelope::grid_times() const noexcept {
    static const std::vector<double> empty;
    return table_ ? table_->t : empty;
}

const std::vector<Complex> &PulseEnvelope::grid_values() const noexcept {
    static const std::vector<Complex> empty;
    return table_ ? table_->xi : empty;
}

Complex PulseEnvelope::eval_unchecked(double t) const {
    switch (kind_) {
    case Kind::square:
        return (t >= 0.0 && t <= 2.0 / omega_) ? Complex(std::sqrt(0.5 * omega_)) : Complex(0.0);
    case Kind::exponential:
        return t >= 0.0 ? Complex(std::sqrt(omega_) * std::exp(-0.5 * omega_ * t)) : Complex(0.0);
    case Kind::tabulated: {
        const auto &tt = table_->t;
        if (t < tt.front() || t > tt.back())
            return 0.0;
        auto it = std::upper_bound(tt.begin(), tt.end(), t);
        if (it == tt.end())
            return table_->xi.back();
        const std::size_t i = static_cast<std::size_t>(it - tt.begin());
        const double u = (t - tt[i - 1]) / (tt[i] - tt[i - 1]);
        return table_->xi[i - 1] * (1.0 - u) + table_->xi[i] * u;
    }
    case Kind::vacuum:
        return 0.0;
    }
    return 0.0;
}

Complex PulseEnvelope::eval(double t) const {
    require_time(t);
    return eval_unchecked(t);
}

Complex PulseEnvelope::eval_from_above(double t) const {
    require_time(t);
    if (kind_ == Kind::square && t == 2.0 / omega_)
        return 0.0;
    if (kind_ == Kind::tabulated && t == table_->t.back())
        return 0.0;
    return eval_unchecked(t);
}

Complex PulseEnvelope::eval_from_below(double t) const {
    require_time(t);
    if (t == 0.0)
        return 0.0;
    if (kind_ == Kind::tabulated && t == table_->t.front())
        return 0.0;
    return eval_unchecked(t);
}

double PulseEnvelope::weight_before(double t) const {
    require_time(t);
    switch (kind_) {
    case Kind::square:
        return std::min(1.0, 0.5 * omega_ * t);
    case Kind::exponential:
        return -std::expm1(-omega_ * t);
    case Kind::tabulated: {
        const auto &tt = table_->t;
        if (t <= tt.front())
            return 0.0;
        if (t >= tt.back())
            return table_->cumulative.back();
        auto it = std::upper_bound(tt.begin(), tt.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - tt.begin());
        const double h = tt[i] - tt[i - 1];
        const double u = (t - tt[i - 1]) / h;
        return table_->cumulative[i - 1] +
               h * partial_segment_norm(table_->xi[i - 1], table_->xi[i], u);
    }
    case Kind::vacuum:
        return 0.0;
    }
    return 0.0;
}

double PulseEnvelope::tail(double t) const {
    require_time(t);
    switch (kind_) {
    case Kind::square:
        return std::max(0.0, 1.0 - 0.5 * omega_ * t);
    case Kind::exponential:
        return std::exp(-omega_ * t);
    case Kind::tabulated:
        return std::max(0.0, table_->cumulative.back() - weight_before(t));
    case Kind::vacuum:
        return 0.0;
    }
    return 0.0;
}

Complex PulseEnvelope::overlap(Complex z, double t) const {
    require_time(t);
    switch (kind_) {
    case Kind::square: {
        const double te = std::min(t, 2.0 / omega_);
        return std::sqrt(0.5 * omega_) * te * detail::phi1(z * te);
    }
    case Kind::exponential: {
        // int_0^t sqrt(Omega) exp((z - Omega/2) s) ds. phi1 switches to its
        // power series near the resonant point z = Omega / 2, so the same
        // expression covers the singular limit sqrt(Omega) t.
        const Complex w = z - 0.5 * omega_;
        return std::sqrt(omega_) * t * detail::phi1(w * t);
    }
    case Kind::tabulated: {
        // exact integral of the linear interpolant against exp(z s)
        const auto &tt = table_->t;
        const auto &xs = table_->xi;
        Complex sum = 0.0;
        for (std::size_t i = 1; i < tt.size() && tt[i - 1] < t; ++i) {
            const double t0 = tt[i - 1];
            const double t1 = std::min(tt[i], t);
            const double h = t1 - t0;
            const Complex a = xs[i - 1];
            const Complex b = t1 < tt[i] ? eval_unchecked(t1) : xs[i];
            const Complex w = z * h;
            const Complex p1 = detail::phi1(w);
            const Complex p2 = detail::phi2(w);
            sum += h * std::exp(z * t0) * (a * p2 + b * (p1 - p2));
        }
        return sum;
    }
    case Kind::vacuum:
        return 0.0;
    }
    return 0.0;
}

Complex PulseEnvelope::nested_overlap(Complex a, double t) const {
    require_time(t);
    switch (kind_) {
    case Kind::square: {
        // (Omega/2) int_0^te exp(a t1) int_0^t1 exp(-a s) ds dt1 = (Omega/2) te^2 phi2(a te)
        const double te = std::min(t, 2.0 / omega_);
        return 0.5 * omega_ * te * te * detail::phi2(a * te);
    }
    case Kind::exponential: {
        // Omega int_0^t exp((a - b) t1) (1 - exp(-(a + b) t1)) / (a + b) dt1, b = Omega/2:
        // a divided difference of F(z) = t phi1(z t) between z1 = a - b and z2 = -Omega.
        const double b = 0.5 * omega_;
        const Complex z1 = a - b;
        const Complex z2 = -omega_;
        const Complex gap = z1 - z2; // = a + b
        if (std::abs(gap) * std::max(t, 1e-300) > 1e-3) {
            const Complex f1 = t * detail::phi1(z1 * t);
            const Complex f2 = t * detail::phi1(z2 * t);
            return omega_ * (f1 - f2) / gap;
        }
        // near the resonant point the difference cancels; integrate the
        // closed-form inner integral instead
        auto integrand = [&](double t1) {
            return omega_ * std::exp(z1 * t1) * t1 * detail::phi1(-gap * t1);
        };
        QuadOptions opt;
        opt.abs_tol = 1e-300;
        opt.rel_tol = 1e-14;
        return integrate<Complex>(integrand, 0.0, t, opt);
    }
    case Kind::tabulated:
        return nested_overlap_sweep(a, t);
    case Kind::vacuum:
        return 0.0;
    }
    return 0.0;
}

Complex PulseEnvelope::nested_overlap_sweep(Complex a, double t, double rel_tol) const {
    require_time(t);
    if (t == 0.0 || kind_ == Kind::vacuum)
        return 0.0;

    // y = (inner, outer); inner' = xi exp(-a s), outer' = conj(xi) exp(a s) inner
    struct State {
        Complex inner, outer;
    };
    auto deriv = [&](double s, const State &y, Complex xi) {
        const Complex e = std::exp(a * s);
        return State{xi / e, std::conj(xi) * e * y.inner};
    };
    auto axpy = [](const State &y, double h, const State &k) {
        return State{y.inner + h * k.inner, y.outer + h * k.outer};
    };

    std::vector<double> cuts{0.0};
    for (double p : breaks_)
        if (p > 0.0 && p < t)
            cuts.push_back(p);
    cuts.push_back(t);

    State y{0.0, 0.0};
    double scale = 0.0;
    for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
        const double lo = cuts[seg];
        const double hi = cuts[seg + 1];
        // xi restricted to the closed segment, one-sided at the ends
        auto xi_at = [&](double s) {
            if (s <= lo)
                return eval_from_above(lo);
            if (s >= hi)
                return eval_from_below(hi);
            return eval_unchecked(s);
        };
        auto rk4 = [&](double s, const State &y0, double h) {
            const State k1 = deriv(s, y0, xi_at(s));
            const State k2 = deriv(s + 0.5 * h, axpy(y0, 0.5 * h, k1), xi_at(s + 0.5 * h));
            const State k3 = deriv(s + 0.5 * h, axpy(y0, 0.5 * h, k2), xi_at(s + 0.5 * h));
            const State k4 = deriv(s + h, axpy(y0, h, k3), xi_at(s + h));
            return State{y0.inner + h / 6.0 * (k1.inner + 2.0 * k2.inner + 2.0 * k3.inner + k4.inner),
                         y0.outer + h / 6.0 * (k1.outer + 2.0 * k2.outer + 2.0 * k3.outer + k4.outer)};
        };
        double s = lo;
        double h = std::min(hi - lo, 0.05);
        int guard = 0;
        while (s < hi) {
            if (++guard > 10'000'000)
                throw IntegrationFailure("nested_overlap_sweep: step budget exhausted", y.outer);
            h = std::min(h, hi - s);
            const State big = rk4(s, y, h);
            const State half = rk4(s, y, 0.5 * h);
            const State small = rk4(s + 0.5 * h, half, 0.5 * h);
            const double err = std::max(std::abs(small.inner - big.inner),
                                        std::abs(small.outer - big.outer)) /
                               15.0;
            const double mag = std::max({std::abs(small.inner), std::abs(small.outer), scale});
            const double allowed = std::max(rel_tol * mag * h / t, 1e-300);
            if (err <= allowed || h < 1e-12 * t) {
                // accept with Richardson extrapolation
                y.inner = small.inner + (small.inner - big.inner) / 15.0;
                y.outer = small.outer + (small.outer - big.outer) / 15.0;
                s = (h == hi - s) ? hi : s + h;
                scale = std::max({scale, std::abs(y.inner), std::abs(y.outer)});
                const double grow = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.2) : 4.0;
                h *= std::clamp(grow, 0.2, 4.0);
            } else {
                h *= std::clamp(0.9 * std::pow(allowed / err, 0.2), 0.1, 0.5);
            }
        }
    }
    return y.outer;
}

Complex overlap_I(const PulseEnvelope &p, const ModelParams &m, double t) {
    return p.overlap(m.gamma(), t);
}

Complex overlap_J(const PulseEnvelope &p, const ModelParams &m, double t) {
    return p.nested_overlap(std::conj(m.gamma()), t);
}

Complex overlap_K(const PulseEnvelope &p, const ModelParams &m, double t) {
    return p.nested_overlap(-m.gamma(), t);
}

} // namespace sphoton
