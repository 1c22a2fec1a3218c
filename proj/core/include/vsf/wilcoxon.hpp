#pragma once

#include <vector>

namespace vsf {

enum class Alternative { Greater, Less, TwoSided };

/// Exact Wilcoxon signed-rank test on paired differences. Zero
/// differences are dropped; ties in |d| receive average ranks. The p-value
/// is computed from the full 2^n sign-flip distribution conditional on the
/// observed rank multiset, so it stays exact under ties. Throws
/// NumericError when every difference is zero or when n exceeds 25 after
/// zero removal.
double wilcoxon_exact(const std::vector<double>& diffs, Alternative alt);

}  // namespace vsf
