#include "sphoton/quadrature.hpp"

namespace sphoton {

Complex quadrature(const std::function<Complex(double)> &f, double a, double b, double tol) {
    QuadOptions opt;
    opt.abs_tol = tol;
    return integrate<Complex>(f, a, b, opt);
}

} // namespace sphoton
