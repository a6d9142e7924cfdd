#pragma once

#include <cmath>
#include <vector>

namespace logichint::testing {

// Definitional oracles: ranks by counting, kappa from pairwise squared differences.
inline double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto rank = [](const std::vector<double>& v) {
    std::vector<long double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      long double less = 0, equal = 0;
      for (double w : v) {
        if (w < v[i]) ++less;
        if (w == v[i]) ++equal;
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  auto rx = rank(x), ry = rank(y);
  long double n = rx.size(), sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxy += rx[i] * ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
  }
  long double cov = sxy - sx * sy / n;
  return static_cast<double>(cov / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n)));
}

inline double oracle_qwk(const std::vector<int>& x, const std::vector<int>& y) {
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - y[i]) * (x[i] - y[i]);
    for (std::size_t j = 0; j < y.size(); ++j) den += (x[i] - y[j]) * (x[i] - y[j]);
  }
  den /= x.size();
  return static_cast<double>(1 - num / den);
}

}  // namespace logichint::testing
