#include "sphoton/operators.hpp"

#include <algorithm>

#include "sphoton/errors.hpp"

namespace sphoton {

Operator2 outer(const Ket2 &a, const Ket2 &b) {
    Operator2 r;
    r(0, 0) = a.g * std::conj(b.g);
    r(0, 1) = a.g * std::conj(b.e);
    r(1, 0) = a.e * std::conj(b.g);
    r(1, 1) = a.e * std::conj(b.e);
    return r;
}

Operator4 kron(const Operator2 &bath, const Operator2 &atom) {
    Operator4 r;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t l = 0; l < 2; ++l)
                    r(2 * i + k, 2 * j + l) = bath(i, j) * atom(k, l);
    return r;
}

namespace ops {
Operator2 sigma_minus() {
    Operator2 r;
    r(0, 1) = 1.0;
    return r;
}
Operator2 sigma_plus() {
    Operator2 r;
    r(1, 0) = 1.0;
    return r;
}
Operator2 sigma_z() {
    Operator2 r;
    r(0, 0) = -1.0;
    r(1, 1) = 1.0;
    return r;
}
Operator2 projector_g() {
    Operator2 r;
    r(0, 0) = 1.0;
    return r;
}
Operator2 projector_e() {
    Operator2 r;
    r(1, 1) = 1.0;
    return r;
}
} // namespace ops

bool is_hermitian(const Operator2 &x, const Tolerances &tol) {
    return is_finite(x) && max_abs_diff(x, dagger(x)) <= tol.hermitian;
}

HermitianEigen eigen_hermitian(const Operator2 &x, const Tolerances &tol) {
    if (!is_hermitian(x, tol))
        throw InvalidArgument("eigen_hermitian: operator is not Hermitian");
    const double a = x(0, 0).real();
    const double d = x(1, 1).real();
    // average the off-diagonal pair so tiny anti-Hermitian noise cancels
    const Complex b = 0.5 * (x(0, 1) + std::conj(x(1, 0)));
    const double mean = 0.5 * (a + d);
    const double half = 0.5 * (a - d);
    const double radius = std::hypot(half, std::abs(b));

    HermitianEigen out;
    out.values = {mean - radius, mean + radius};
    if (radius == 0.0) {
        out.vectors = {Ket2::ground(), Ket2::excited()};
        return out;
    }
    // Eigenvector for lambda_+ = mean + radius: pick the better-conditioned
    // of the two row equations.
    Ket2 vplus;
    if (half >= 0.0) {
        vplus = {half + radius, std::conj(b)};
    } else {
        vplus = {b, radius - half};
    }
    vplus *= 1.0 / std::sqrt(vplus.norm2());
    // orthogonal complement
    Ket2 vminus{-std::conj(vplus.e), std::conj(vplus.g)};
    out.vectors = {vminus, vplus};
    return out;
}

bool is_density_operator(const Operator2 &x, const Tolerances &tol) {
    if (!is_hermitian(x, tol))
        return false;
    if (std::abs(trace(x) - 1.0) > tol.density_trace)
        return false;
    return eigen_hermitian(x, tol).values[0] >= -tol.density_eig;
}

bool is_unitary(const Operator4 &u, const Tolerances &tol) {
    return is_finite(u) && max_abs_diff(dagger(u) * u, Operator4::identity()) <= tol.unitary;
}

double trace_distance(const Operator2 &a, const Operator2 &b, const Tolerances &tol) {
    if (!is_hermitian(a, tol) || !is_hermitian(b, tol))
        throw InvalidArgument("trace_distance: operands must be Hermitian");
    const auto ev = eigen_hermitian(a - b, tol);
    return 0.5 * (std::abs(ev.values[0]) + std::abs(ev.values[1]));
}

namespace {

template <std::size_t N> Matrix<N> expm_impl(const Matrix<N> &x) {
    if (!is_finite(x))
        throw InvalidArgument("expm: non-finite matrix entry");
    const double nrm = norm1(x);
    int squarings = 0;
    if (nrm > 0.5)
        squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    const Matrix<N> scaled = x * std::ldexp(1.0, -squarings);

    // Taylor series; with ||scaled|| <= 1/2 the 20th term is below 1e-25.
    Matrix<N> result = Matrix<N>::identity();
    Matrix<N> term = Matrix<N>::identity();
    for (int k = 1; k <= 24; ++k) {
        term = term * scaled;
        term *= 1.0 / k;
        result += term;
        if (max_abs(term) <= 1e-18 * max_abs(result))
            break;
    }
    for (int s = 0; s < squarings; ++s)
        result = result * result;
    return result;
}

} // namespace

Operator2 expm(const Operator2 &x) { return expm_impl(x); }
Operator4 expm4(const Operator4 &x) { return expm_impl(x); }

} // namespace sphoton
