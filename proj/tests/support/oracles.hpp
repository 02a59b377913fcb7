#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// Exact optimal assignment cost (Hungarian / Kuhn-Munkres with potentials),
/// divided by n: the OT cost between two uniform clouds of equal size.
inline double assignment_ot(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double c = 0.0;
  for (int j = 1; j <= n; ++j) c += a[p[j] - 1][j - 1];
  return c / n;
}

/// Exhaustive minimum over all permutations; for n <= 8.
inline double permutation_ot(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += a[i][perm[i]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

/// Minimum-image difference along one axis by scanning the images -2L..2L.
inline double image_delta(double a, double b, double L, bool periodic) {
  double d = a - b;
  if (!periodic) return d;
  double best = d;
  for (int k = -2; k <= 2; ++k)
    if (std::abs(d + k * L) < std::abs(best)) best = d + k * L;
  return best;
}

}  // namespace oracle
