#pragma once

namespace thinlimit {

/// J_n, Y_n and their derivatives at one point.
struct BesselEval {
  int order = 0;
  double x = 0.0;
  double j = 0.0;
  double y = 0.0;
  double jp = 0.0;
  double yp = 0.0;
};

/// Bessel functions of the first and second kind of integer order n >= 0.
/// Throws DomainError for x <= 0 (Y is singular at the origin).
///
/// Below x = 20 the J_k come from Miller's backward recurrence normalised by
/// J_0 + 2 sum J_2k = 1 and Y_0, Y_1 from their Neumann series in the J_k;
/// above, Hankel's asymptotic expansion gives the order 0 and 1 values and
/// recurrences supply the rest. Y_k always uses forward recurrence.
BesselEval bessel_jy(int order, double x);

/// J_n(x) alone; defined for x >= 0.
double bessel_j(int order, double x);

/// k-th positive zero of J_n (k >= 1), to about machine precision.
double bessel_j_zero(int order, int k);

}  // namespace thinlimit
