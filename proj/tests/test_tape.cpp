#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vfa/rng.hpp"
#include "vfa/tape.hpp"

using namespace vfa;

namespace {

// A deliberately gnarly composite touching every primitive.
template <class T>
T composite(const T& x, const T& y) {
  T a = ad::sigmoid(x * y - 0.3);
  T b = ad::tanh(x / (y + 2.0));
  T c = ad::exp(ad::vmin(a, b)) + ad::log(ad::vabs(x) + 1.5);
  T d = ad::sqrt(c * c + 1.0);
  std::vector<T> args = {a, b, c - d, ad::make_like(x, 0.0)};
  return ad::lse(args, 0.05) + ad::vmax(x, y) * 0.25;
}

}  // namespace

TEST_CASE("tape gradients match finite differences on a composite") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double x0 = rng.uniform(-2.0, 2.0);
    const double y0 = rng.uniform(-2.0, 2.0);
    // Stay away from the non-smooth min/max/abs ties.
    if (std::abs(x0 - y0) < 1e-3 || std::abs(x0) < 1e-3) continue;

    ad::Tape tape;
    ad::Var x = tape.leaf(x0);
    ad::Var y = tape.leaf(y0);
    ad::Var out = composite(x, y);

    CHECK(out.value() == composite(x0, y0));  // double path is bit-identical

    const std::vector<double> adj = tape.gradient(out);
    const double fdx =
        oracles::central_diff([&](double v) { return composite(v, y0); }, x0);
    const double fdy =
        oracles::central_diff([&](double v) { return composite(x0, v); }, y0);
    CHECK(oracles::rel_err(adj[x.index()], fdx) < 1e-6);
    CHECK(oracles::rel_err(adj[y.index()], fdy) < 1e-6);
  }
}

TEST_CASE("min/max ties take the first argument's subgradient") {
  ad::Tape tape;
  ad::Var a = tape.leaf(1.5);
  ad::Var b = tape.leaf(1.5);
  ad::Var mn = ad::vmin(a, b);
  ad::Var mx = ad::vmax(a, b);
  const std::vector<double> gmn = tape.gradient(mn);
  CHECK(gmn[a.index()] == 1.0);
  CHECK(gmn[b.index()] == 0.0);
  const std::vector<double> gmx = tape.gradient(mx);
  CHECK(gmx[a.index()] == 1.0);
  CHECK(gmx[b.index()] == 0.0);
}

TEST_CASE("lse upper-bounds the max and stays within tau*log(n)") {
  const std::vector<double> xs = {0.3, 0.1, 0.3, -0.2};
  const double tau = 0.02;
  const double soft = ad::lse(xs, tau);
  CHECK(soft >= 0.3);
  CHECK(soft <= 0.3 + tau * std::log(4.0));
}

TEST_CASE("division and reciprocal gradients") {
  ad::Tape tape;
  ad::Var x = tape.leaf(3.0);
  ad::Var y = tape.leaf(-1.5);
  ad::Var out = (2.0 / x) + (y / x) - (x - 1.0) * (0.5 - y);
  const std::vector<double> adj = tape.gradient(out);
  const auto f = [](double xv, double yv) {
    return 2.0 / xv + yv / xv - (xv - 1.0) * (0.5 - yv);
  };
  CHECK(oracles::rel_err(adj[x.index()],
                         oracles::central_diff([&](double v) { return f(v, -1.5); }, 3.0)) <
        1e-7);
  CHECK(oracles::rel_err(adj[y.index()],
                         oracles::central_diff([&](double v) { return f(3.0, v); }, -1.5)) <
        1e-7);
}
