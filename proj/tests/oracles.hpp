#pragma once

// Reference computations written independently of the library, used to check
// derived values. Deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double product(const std::vector<double>& xs) {
  long double p = 1.0L;
  for (double x : xs) p *= x;
  return static_cast<double>(p);
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
  return d;
}

/// Indices i where frame i starts a new shot (i > 0).
inline std::vector<std::size_t> boundaries(const std::vector<std::vector<double>>& hists, double theta) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < hists.size(); ++i) {
    if (l1(hists[i - 1], hists[i]) > theta) out.push_back(i);
  }
  return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::vector<std::string> inter;
  std::vector<std::string> uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

/// tau after each of `cycles` evaporate-then-deposit cycles.
inline std::vector<double> pheromone_trajectory(double tau, double rho, double deposit, int cycles) {
  std::vector<double> out;
  for (int c = 0; c < cycles; ++c) {
    tau = tau * (1.0 - rho) + deposit;
    out.push_back(tau);
  }
  return out;
}

/// First cycle at which pure evaporation drops tau below theta.
inline int cycles_until_below(double tau, double rho, double theta) {
  int n = 0;
  while (!(tau < theta)) {
    tau *= (1.0 - rho);
    ++n;
  }
  return n;
}

/// Storyboard subsample: shot indices floor(i*(k-1)/(n-1)) for i in [0, n).
inline std::vector<std::size_t> subsample(std::size_t k, std::size_t n) {
  std::vector<std::size_t> out;
  if (n >= k) {
    for (std::size_t i = 0; i < k; ++i) out.push_back(i);
    return out;
  }
  if (n == 1) return {0};
  for (std::size_t i = 0; i < n; ++i) out.push_back(i * (k - 1) / (n - 1));
  return out;
}

/// Degree-weighted average of member vectors, then L1 normalized.
inline std::map<std::string, double> weighted_average(
    const std::vector<std::pair<double, std::map<std::string, double>>>& members) {
  std::map<std::string, double> acc;
  double total = 0.0;
  for (const auto& [deg, v] : members) {
    for (const auto& [k, w] : v) acc[k] += deg * w;
  }
  for (const auto& [k, w] : acc) total += w;
  if (total > 0) {
    for (auto& [k, w] : acc) w /= total;
  }
  return acc;
}

}  // namespace oracle
