#pragma once

// Fixed-size complex linear algebra on the atom space {|g>, |e>} and on one
// bath qubit tensor the atom. Everything is a value type; all operations are
// pure.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace sphoton {

using Complex = std::complex<double>;

inline constexpr Complex I_UNIT{0.0, 1.0};

/// Tolerances used by the structural predicates below. One record so a caller
/// can tighten or relax all of them at once.
struct Tolerances {
    double hermitian = 1e-12;     ///< max |A - A^dagger|
    double density_trace = 1e-10; ///< |tr rho - 1|
    double density_eig = 1e-10;   ///< smallest admissible eigenvalue is -this
    double unitary = 1e-10;       ///< max |U^dagger U - 1|
    double ket_norm = 1e-12;      ///< |<psi|psi> - 1| for normalized kets
};

/// Amplitudes on |g> and |e>.
struct Ket2 {
    Complex g{};
    Complex e{};

    static constexpr Ket2 ground() { return {1.0, 0.0}; }
    static constexpr Ket2 excited() { return {0.0, 1.0}; }
    static Ket2 plus() { return {M_SQRT1_2, M_SQRT1_2}; }

    double norm2() const { return std::norm(g) + std::norm(e); }

    Ket2 &operator+=(const Ket2 &o) {
        g += o.g;
        e += o.e;
        return *this;
    }
    Ket2 &operator-=(const Ket2 &o) {
        g -= o.g;
        e -= o.e;
        return *this;
    }
    Ket2 &operator*=(Complex s) {
        g *= s;
        e *= s;
        return *this;
    }
};

inline Ket2 operator+(Ket2 a, const Ket2 &b) { return a += b; }
inline Ket2 operator-(Ket2 a, const Ket2 &b) { return a -= b; }
inline Ket2 operator*(Complex s, Ket2 k) { return k *= s; }
inline Ket2 operator*(Ket2 k, Complex s) { return k *= s; }

/// <a|b>
inline Complex inner(const Ket2 &a, const Ket2 &b) {
    return std::conj(a.g) * b.g + std::conj(a.e) * b.e;
}

/// Dense N x N complex matrix, row-major. Index 0 is |g> for N = 2; for N = 4
/// the ordering is |0,g>, |0,e>, |1,g>, |1,e> (bath qubit first).
template <std::size_t N> struct Matrix {
    std::array<Complex, N * N> a{};

    static constexpr std::size_t dim = N;

    Complex &operator()(std::size_t r, std::size_t c) { return a[r * N + c]; }
    const Complex &operator()(std::size_t r, std::size_t c) const { return a[r * N + c]; }

    static Matrix identity() {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i)
            m(i, i) = 1.0;
        return m;
    }
    static Matrix zero() { return Matrix{}; }

    Matrix &operator+=(const Matrix &o) {
        for (std::size_t i = 0; i < N * N; ++i)
            a[i] += o.a[i];
        return *this;
    }
    Matrix &operator-=(const Matrix &o) {
        for (std::size_t i = 0; i < N * N; ++i)
            a[i] -= o.a[i];
        return *this;
    }
    Matrix &operator*=(Complex s) {
        for (auto &x : a)
            x *= s;
        return *this;
    }
    Matrix operator-() const {
        Matrix m = *this;
        for (auto &x : m.a)
            x = -x;
        return m;
    }
};

using Operator2 = Matrix<2>;
using Operator4 = Matrix<4>;

template <std::size_t N> Matrix<N> operator+(Matrix<N> x, const Matrix<N> &y) { return x += y; }
template <std::size_t N> Matrix<N> operator-(Matrix<N> x, const Matrix<N> &y) { return x -= y; }
template <std::size_t N> Matrix<N> operator*(Complex s, Matrix<N> x) { return x *= s; }
template <std::size_t N> Matrix<N> operator*(Matrix<N> x, Complex s) { return x *= s; }
template <std::size_t N> Matrix<N> operator*(double s, Matrix<N> x) { return x *= s; }
template <std::size_t N> Matrix<N> operator*(Matrix<N> x, double s) { return x *= s; }

template <std::size_t N> Matrix<N> operator*(const Matrix<N> &x, const Matrix<N> &y) {
    Matrix<N> r;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t k = 0; k < N; ++k) {
            const Complex xik = x(i, k);
            for (std::size_t j = 0; j < N; ++j)
                r(i, j) += xik * y(k, j);
        }
    return r;
}

inline Ket2 operator*(const Operator2 &m, const Ket2 &k) {
    return {m(0, 0) * k.g + m(0, 1) * k.e, m(1, 0) * k.g + m(1, 1) * k.e};
}

template <std::size_t N> Matrix<N> dagger(const Matrix<N> &x) {
    Matrix<N> r;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            r(i, j) = std::conj(x(j, i));
    return r;
}

template <std::size_t N> Complex trace(const Matrix<N> &x) {
    Complex s = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        s += x(i, i);
    return s;
}

template <std::size_t N> Matrix<N> commutator(const Matrix<N> &x, const Matrix<N> &y) {
    return x * y - y * x;
}

template <std::size_t N> Matrix<N> anticommutator(const Matrix<N> &x, const Matrix<N> &y) {
    return x * y + y * x;
}

/// max_ij |x_ij|
template <std::size_t N> double max_abs(const Matrix<N> &x) {
    double m = 0.0;
    for (const auto &v : x.a)
        m = std::max(m, std::abs(v));
    return m;
}

template <std::size_t N> double max_abs_diff(const Matrix<N> &x, const Matrix<N> &y) {
    return max_abs(x - y);
}

/// Induced 1-norm (max column sum).
template <std::size_t N> double norm1(const Matrix<N> &x) {
    double best = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            s += std::abs(x(i, j));
        best = std::max(best, s);
    }
    return best;
}

template <std::size_t N> bool is_finite(const Matrix<N> &x) {
    for (const auto &v : x.a)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            return false;
    return true;
}

inline bool is_finite(const Ket2 &k) {
    return std::isfinite(k.g.real()) && std::isfinite(k.g.imag()) && std::isfinite(k.e.real()) &&
           std::isfinite(k.e.imag());
}

/// |a><b|
Operator2 outer(const Ket2 &a, const Ket2 &b);

/// Kronecker product: bath-qubit operator (left) tensor atom operator (right).
Operator4 kron(const Operator2 &bath, const Operator2 &atom);

namespace ops {
/// sigma_- = |g><e|
Operator2 sigma_minus();
/// sigma_+ = |e><g|
Operator2 sigma_plus();
/// sigma_z = |e><e| - |g><g|
Operator2 sigma_z();
Operator2 projector_g();
Operator2 projector_e();
} // namespace ops

bool is_hermitian(const Operator2 &x, const Tolerances &tol = {});
bool is_density_operator(const Operator2 &x, const Tolerances &tol = {});
bool is_unitary(const Operator4 &u, const Tolerances &tol = {});

/// Eigen-decomposition of a Hermitian 2x2 operator by the closed-form
/// quadratic formula. Values ascending; vectors orthonormal.
struct HermitianEigen {
    std::array<double, 2> values{};
    std::array<Ket2, 2> vectors{};
};
HermitianEigen eigen_hermitian(const Operator2 &x, const Tolerances &tol = {});

/// 1/2 ||a - b||_1. Both operands must be Hermitian.
double trace_distance(const Operator2 &a, const Operator2 &b, const Tolerances &tol = {});

/// Matrix exponential by scaling and squaring of a Taylor series. Relative
/// accuracy ~1e-14 for ||A|| <= 10. Throws InvalidArgument on non-finite input.
Operator2 expm(const Operator2 &x);
Operator4 expm4(const Operator4 &x);

} // namespace sphoton
