#include "vsf/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "vsf/errors.hpp"

namespace vsf {

double wilcoxon_exact(const std::vector<double>& diffs, Alternative alt) {
  std::vector<double> d;
  for (double v : diffs)
    if (v != 0.0) d.push_back(v);
  if (d.empty()) throw NumericError("wilcoxon: all differences are zero");
  const int n = int(d.size());
  if (n > 25) throw NumericError("wilcoxon: exact test limited to n <= 25");

  // average ranks of |d|, doubled so ties stay integral
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(d[a]) < std::abs(d[b]);
  });
  std::vector<int> rank2(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const int r2 = (i + 1) + j;  // 2 * average of ranks i+1 .. j
    for (int k = i; k < j; ++k) rank2[order[k]] = r2;
    i = j;
  }

  int w2 = 0, total2 = 0;
  for (int k = 0; k < n; ++k) {
    total2 += rank2[k];
    if (d[k] > 0.0) w2 += rank2[k];
  }

  // counts of sign assignments per doubled rank sum
  std::vector<double> ways(total2 + 1, 0.0);
  ways[0] = 1.0;
  for (int k = 0; k < n; ++k)
    for (int s = total2; s >= rank2[k]; --s) ways[s] += ways[s - rank2[k]];

  const double denom = std::ldexp(1.0, n);  // 2^n
  double ge = 0.0, le = 0.0;
  for (int s = 0; s <= total2; ++s) {
    if (s >= w2) ge += ways[s];
    if (s <= w2) le += ways[s];
  }
  const double p_greater = ge / denom;
  const double p_less = le / denom;
  switch (alt) {
    case Alternative::Greater:
      return p_greater;
    case Alternative::Less:
      return p_less;
    case Alternative::TwoSided:
      return std::min(1.0, 2.0 * std::min(p_greater, p_less));
  }
  return 1.0;
}

}  // namespace vsf
