#include "optexec/policy_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace optexec {

MoSchedule no_fill_mo_schedule(const PolicyGrid& policy, const GridSpec& grid) {
  MoSchedule s;
  std::int64_t q = policy.mo_size.cols() - 1;
  for (std::int64_t i = 0; i <= grid.n_time_steps() && q > 0; ++i) {
    while (q > 0 && policy.impulse_active(i, q)) {
      const std::int64_t z = policy.mo_size(i, q);
      s.entries.push_back({grid.time(i), q, z});
      q -= z;
    }
  }
  s.terminal_residual = q;
  return s;
}

std::vector<FirstBinding> first_binding_times(const PolicyGrid& policy, const GridSpec& grid) {
  const auto n_q = policy.impulse_active.cols();
  std::vector<FirstBinding> out(n_q, FirstBinding{grid.horizon(), false});
  for (Eigen::Index q = 1; q < n_q; ++q) {
    for (Eigen::Index i = 0; i <= grid.n_time_steps(); ++i) {
      if (policy.impulse_active(i, q)) {
        out[q] = {grid.time(i), true};
        break;
      }
    }
  }
  return out;
}

SampleSummary summarize(std::span<const double> sample) {
  SampleSummary s;
  s.count = static_cast<std::int64_t>(sample.size());
  if (sample.empty()) return s;
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double x : sorted) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  const auto quantile = [&](double p) {
    const double pos = p * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  s.min = sorted.front();
  s.max = sorted.back();
  s.q25 = quantile(0.25);
  s.q50 = quantile(0.5);
  s.q75 = quantile(0.75);
  return s;
}

std::vector<MoSizeStats> mo_size_stats(const PolicyGrid& policy, const GridSpec& grid,
                                       std::span<const double> times) {
  std::vector<MoSizeStats> out;
  for (double t : times) {
    const auto i = grid.index_of(t);
    std::vector<double> sample(policy.mo_size.cols());
    for (Eigen::Index q = 0; q < policy.mo_size.cols(); ++q) sample[q] = policy.mo_size(i, q);
    out.push_back({t, summarize(sample)});
  }
  return out;
}

std::string_view to_string(PolicyQuantity q) {
  switch (q) {
    case PolicyQuantity::LoDepth: return "lo_depth";
    case PolicyQuantity::MmSpread: return "mm_spread";
    case PolicyQuantity::MoSize: return "mo_size";
  }
  return "unknown";
}

PolicySlice policy_slice(const PolicyGrid& policy, const GridSpec& grid, PolicyQuantity quantity,
                         std::span<const double> times, std::span<const std::int64_t> inventories) {
  PolicySlice s{{times.begin(), times.end()},
                {inventories.begin(), inventories.end()},
                Eigen::MatrixXd(times.size(), inventories.size())};
  for (std::size_t a = 0; a < times.size(); ++a) {
    const auto i = grid.index_of(times[a]);
    for (std::size_t b = 0; b < inventories.size(); ++b) {
      const auto q = inventories[b];
      if (q < 0 || q >= policy.lo_depth.cols()) throw DomainError("policy_slice: inventory off grid");
      switch (quantity) {
        case PolicyQuantity::LoDepth: s.values(a, b) = policy.lo_depth(i, q); break;
        case PolicyQuantity::MmSpread: s.values(a, b) = policy.mm_spread(i, q); break;
        case PolicyQuantity::MoSize: s.values(a, b) = policy.mo_size(i, q); break;
      }
    }
  }
  return s;
}

}  // namespace optexec
