#pragma once

// Shared adaptive integrator: globally adaptive Gauss-Kronrod (7/15) with
// bisection of the worst panel. Works for any integrand value type that is a
// vector space over double with a magnitude() overload.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "sphoton/errors.hpp"
#include "sphoton/operators.hpp"

namespace sphoton {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const Complex &x) { return std::abs(x); }
template <std::size_t N> double magnitude(const Matrix<N> &x) { return max_abs(x); }

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    int max_panels = 4000;
};

template <class T> struct QuadResult {
    T value{};
    double error = 0.0;
    int panels = 0;
    bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T> struct Panel {
    double a, b;
    T value;
    double error;
    bool operator<(const Panel &o) const { return error < o.error; }
};

template <class T, class F> Panel<T> gk15(F &f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const T fc = f(c);
    T kronrod = fc * kKronrodWeights[7];
    T gauss = fc * kGaussWeights[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kKronrodNodes[j];
        const T f1 = f(c - dx);
        const T f2 = f(c + dx);
        const T sum = f1 + f2;
        kronrod = kronrod + sum * kKronrodWeights[j];
        if (j % 2 == 1)
            gauss = gauss + sum * kGaussWeights[j / 2];
    }
    kronrod = kronrod * h;
    gauss = gauss * h;
    const double err = magnitude(kronrod - gauss);
    return {a, b, kronrod, err};
}

} // namespace detail

/// Adaptive integral of f over [a, b]. Never throws on non-convergence; the
/// result carries the flag and the error estimate.
template <class T, class F>
QuadResult<T> integrate_adaptive(F &&f, double a, double b, const QuadOptions &opt = {}) {
    QuadResult<T> out;
    if (!(a <= b))
        throw InvalidArgument("integrate: requires a <= b");
    if (a == b) {
        out.converged = true;
        out.value = T{} * 0.0;
        return out;
    }
    std::priority_queue<detail::Panel<T>> heap;
    heap.push(detail::gk15<T>(f, a, b));
    T total = heap.top().value;
    double err = heap.top().error;
    int panels = 1;
    const double min_width = (b - a) * 1e-13;
    while (true) {
        const double target = std::max(opt.abs_tol, opt.rel_tol * magnitude(total));
        if (err <= target) {
            out.converged = true;
            break;
        }
        if (panels >= opt.max_panels)
            break;
        auto worst = heap.top();
        if (worst.b - worst.a < min_width)
            break;
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto left = detail::gk15<T>(f, worst.a, mid);
        auto right = detail::gk15<T>(f, mid, worst.b);
        total = total - worst.value + left.value + right.value;
        err = err - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    // re-sum to shed accumulated update roundoff
    T sum = T{} * 0.0;
    double esum = 0.0;
    while (!heap.empty()) {
        sum = sum + heap.top().value;
        esum += heap.top().error;
        heap.pop();
    }
    out.value = sum;
    out.error = esum;
    out.panels = panels;
    if (!out.converged)
        out.converged = esum <= std::max(opt.abs_tol, opt.rel_tol * magnitude(sum));
    return out;
}

/// Adaptive integral; throws IntegrationFailure (carrying the best estimate)
/// when the tolerance cannot be met.
template <class T, class F> T integrate(F &&f, double a, double b, const QuadOptions &opt = {}) {
    auto r = integrate_adaptive<T>(std::forward<F>(f), a, b, opt);
    if (!r.converged)
        throw IntegrationFailure("integrate: no convergence on [" + std::to_string(a) + ", " +
                                     std::to_string(b) + "], error estimate " +
                                     std::to_string(r.error),
                                 r.value, r.error);
    return r.value;
}

/// Integral over [a, b] split at the given interior breakpoints (points
/// outside (a, b) are ignored). The tolerance budget is shared by length.
template <class T, class F>
T integrate_piecewise(F &&f, double a, double b, std::span<const double> breaks,
                      const QuadOptions &opt = {}) {
    std::vector<double> cuts{a};
    for (double p : breaks)
        if (p > a && p < b)
            cuts.push_back(p);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    T total = T{} * 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        QuadOptions local = opt;
        if (b > a)
            local.abs_tol = opt.abs_tol * (cuts[i + 1] - cuts[i]) / (b - a);
        total = total + integrate<T>(f, cuts[i], cuts[i + 1], local);
    }
    return total;
}

/// Complex-valued adaptive quadrature with absolute error target tol.
Complex quadrature(const std::function<Complex(double)> &f, double a, double b,
                   double tol = 1e-10);

} // namespace sphoton
