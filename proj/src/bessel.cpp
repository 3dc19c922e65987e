#include "thinlimit/bessel.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "thinlimit/errors.hpp"

namespace thinlimit {

namespace {

constexpr double kAsymptoticSwitch = 20.0;
constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kRescaleAbove = 1e250;

// J_0 .. J_top by Miller's algorithm. The returned vector extends past `top`
// to the recurrence start so callers can sum tails of the Neumann series.
std::vector<double> miller_j(int top, double x) {
  const double anchor = std::max(static_cast<double>(top), x);
  int start = static_cast<int>(anchor) + 30 + static_cast<int>(6.0 * std::cbrt(anchor));
  start += start % 2;
  std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
  if (x < 1e-8) {
    // Two series terms are exact to rounding; the recurrence would overflow.
    const double h = 0.5 * x;
    double lead = 1.0;
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (k > 0) lead *= h / static_cast<double>(k);
      j[k] = lead * (1.0 - h * h / static_cast<double>(k + 1));
    }
    return j;
  }
  j[static_cast<std::size_t>(start) + 1] = 0.0;
  j[static_cast<std::size_t>(start)] = 1e-300;
  double even_sum = 0.0;
  for (int k = start; k >= 1; --k) {
    const auto ku = static_cast<std::size_t>(k);
    j[ku - 1] = (2.0 * k / x) * j[ku] - j[ku + 1];
    if (std::abs(j[ku - 1]) > kRescaleAbove) {
      for (std::size_t i = ku - 1; i < j.size(); ++i) j[i] /= kRescaleAbove;
      even_sum /= kRescaleAbove;
    }
    if ((k - 1) % 2 == 0 && k - 1 > 0) even_sum += j[ku - 1];
  }
  const double norm = j[0] + 2.0 * even_sum;
  for (double& v : j) v /= norm;
  return j;
}

struct OrderZeroOne {
  double j0, j1, y0, y1;
};

OrderZeroOne hankel_asymptotic(double x) {
  const double pi = std::numbers::pi;
  OrderZeroOne out{};
  for (int nu = 0; nu <= 1; ++nu) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0, q = 0.0, term = 1.0, prev = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * x);
      if (std::abs(term) > std::abs(prev) || std::abs(term) < 1e-18) break;
      prev = term;
      const int phase = k % 4;
      if (phase == 1) q += term;
      if (phase == 2) p -= term;
      if (phase == 3) q -= term;
      if (phase == 0) p += term;
    }
    const double chi = x - (0.5 * nu + 0.25) * pi;
    const double amp = std::sqrt(2.0 / (pi * x));
    const double c = std::cos(chi), s = std::sin(chi);
    const double jv = amp * (p * c - q * s);
    const double yv = amp * (p * s + q * c);
    if (nu == 0) {
      out.j0 = jv;
      out.y0 = yv;
    } else {
      out.j1 = jv;
      out.y1 = yv;
    }
  }
  return out;
}

// J_0 .. J_top for x > 0.
std::vector<double> j_sequence(int top, double x, const OrderZeroOne* asym) {
  if (asym != nullptr && top + 1 < x) {
    std::vector<double> j(static_cast<std::size_t>(top) + 1);
    j[0] = asym->j0;
    if (top >= 1) j[1] = asym->j1;
    for (int k = 1; k < top; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      j[ku + 1] = (2.0 * k / x) * j[ku] - j[ku - 1];
    }
    return j;
  }
  return miller_j(top, x);
}

}  // namespace

BesselEval bessel_jy(int order, double x) {
  if (order < 0) throw DomainError("bessel_jy: negative order " + std::to_string(order));
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("bessel_jy: Y requires x > 0");
  const double pi = std::numbers::pi;
  const int top = order + 1;

  std::vector<double> j;
  double y0 = 0.0, y1 = 0.0;
  if (x >= kAsymptoticSwitch) {
    const auto a = hankel_asymptotic(x);
    j = j_sequence(top, x, &a);
    y0 = a.y0;
    y1 = a.y1;
  } else {
    j = miller_j(top, x);
    const double lg = std::log(0.5 * x) + kEulerGamma;
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t k = 1; 2 * k + 1 < j.size(); ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      s0 += sign * j[2 * k] / static_cast<double>(k);
      s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / static_cast<double>(k);
    }
    y0 = (2.0 / pi) * lg * j[0] - (4.0 / pi) * s0;
    y1 = (2.0 / pi) * (lg * j[1] - j[0] / x) + (2.0 / pi) * s1;
  }

  std::vector<double> y(static_cast<std::size_t>(top) + 1);
  y[0] = y0;
  y[1] = y1;
  for (int k = 1; k < top; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    y[ku + 1] = (2.0 * k / x) * y[ku] - y[ku - 1];
  }

  const auto n = static_cast<std::size_t>(order);
  BesselEval e;
  e.order = order;
  e.x = x;
  e.j = j[n];
  e.y = y[n];
  if (order == 0) {
    e.jp = -j[1];
    e.yp = -y[1];
  } else {
    e.jp = 0.5 * (j[n - 1] - j[n + 1]);
    e.yp = 0.5 * (y[n - 1] - y[n + 1]);
  }
  return e;
}

double bessel_j(int order, double x) {
  if (order < 0) throw DomainError("bessel_j: negative order " + std::to_string(order));
  if (x < 0.0 || !std::isfinite(x)) throw DomainError("bessel_j: x must be >= 0");
  if (x == 0.0) return order == 0 ? 1.0 : 0.0;
  if (x >= kAsymptoticSwitch) {
    const auto a = hankel_asymptotic(x);
    return j_sequence(order, x, &a)[static_cast<std::size_t>(order)];
  }
  return miller_j(order, x)[static_cast<std::size_t>(order)];
}

double bessel_j_zero(int order, int k) {
  if (order < 0) throw DomainError("bessel_j_zero: negative order");
  if (k < 1) throw DomainError("bessel_j_zero: k must be >= 1");
  // J_n > 0 on (0, j_{n,1}) and j_{n,1} > n; consecutive zeros are more
  // than 2.5 apart, so a 0.5 step cannot skip a sign change.
  double lo = std::max(0.5 * order, 0.1);
  double f_lo = bessel_j(order, lo);
  int found = 0;
  while (true) {
    const double hi = lo + 0.5;
    const double f_hi = bessel_j(order, hi);
    if ((f_lo > 0.0) != (f_hi > 0.0) || f_hi == 0.0) {
      if (++found == k) {
        double a = lo, b = hi;
        const bool rising = f_hi > 0.0;
        for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * b; ++it) {
          const double m = 0.5 * (a + b);
          const double fm = bessel_j(order, m);
          if (fm == 0.0) return m;
          if ((fm > 0.0) == rising) {
            b = m;
          } else {
            a = m;
          }
        }
        return 0.5 * (a + b);
      }
    }
    lo = hi;
    f_lo = f_hi;
  }
}

}  // namespace thinlimit
