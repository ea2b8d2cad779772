/*
 * Copyright 2026 The fneval Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Bootstrap sizing of annotation budgets and rank correlations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "fneval/common.hpp"
#include "fneval/rng.hpp"
#include "json.hpp"

namespace fneval {

inline constexpr std::size_t kDefaultResamples = 10000;
inline const std::vector<std::size_t> kDefaultSampleSizes{500, 1000, 3000};

struct BootstrapResult {
  std::size_t sample_size = 0;
  std::size_t resamples = 0;
  std::uint64_t rng_seed = 0;
  double full_mean = 0.0;
  std::vector<double> deviations;  // |mean(resample) - full_mean|, in resample order
  double percentile_95 = 0.0;
};

inline double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Nearest-rank percentile: the ceil(q/100 * n)-th smallest value.
inline double nearest_rank_percentile(std::vector<double> values, unsigned percent) {
  require(!values.empty(), "percentile of an empty sample");
  require(percent >= 1 && percent <= 100, "percent must be in [1, 100]");
  std::size_t n = values.size();
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

// Draws `resamples` samples of `sample_size` query scores with replacement and
// records each resample mean's absolute deviation from the full-sample mean.
// Resample i uses its own stream Rng(seed, i), so the result does not depend
// on `threads`.
inline BootstrapResult bootstrap_deviation(std::span<const double> scores, std::size_t sample_size,
                                           std::size_t resamples, std::uint64_t seed, unsigned threads = 1) {
  require(!scores.empty(), "bootstrap needs at least one score");
  require(sample_size >= 1, "bootstrap sample size must be >= 1");
  require(resamples >= 1, "bootstrap resample count must be >= 1");

  BootstrapResult result;
  result.sample_size = sample_size;
  result.resamples = resamples;
  result.rng_seed = seed;
  result.full_mean = mean_of(scores);
  result.deviations.assign(resamples, 0.0);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng(seed, r);
      double sum = 0.0;
      for (std::size_t i = 0; i < sample_size; ++i) sum += scores[rng.below(scores.size())];
      result.deviations[r] = std::fabs(sum / static_cast<double>(sample_size) - result.full_mean);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(resamples)));
  if (threads == 1) {
    work(0, resamples);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (resamples + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      std::size_t begin = t * chunk;
      std::size_t end = std::min(resamples, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& thread : pool) thread.join();
  }
  result.percentile_95 = nearest_rank_percentile(result.deviations, 95);
  return result;
}

// `max_points` > 0 keeps an evenly strided subset of the sorted deviations.
inline nlohmann::ordered_json to_json(const BootstrapResult& result, std::size_t max_points = 0) {
  std::vector<double> sorted = result.deviations;
  std::sort(sorted.begin(), sorted.end());
  if (max_points > 0 && sorted.size() > max_points) {
    std::vector<double> sampled;
    sampled.reserve(max_points);
    for (std::size_t i = 0; i < max_points; ++i) sampled.push_back(sorted[i * sorted.size() / max_points]);
    sorted = std::move(sampled);
  }
  nlohmann::ordered_json doc;
  doc["sample_size"] = result.sample_size;
  doc["resamples"] = result.resamples;
  doc["rng_seed"] = result.rng_seed;
  doc["rng"] = "mt19937_64/splitmix64-stream/lemire";
  doc["full_mean"] = result.full_mean;
  doc["percentile_95"] = result.percentile_95;
  doc["deviations_sorted"] = sorted;
  return doc;
}

// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Spearman's rho as the Pearson correlation of average ranks. nullopt when
// either side has zero rank variance.
inline std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "spearman inputs differ in length");
  require(x.size() >= 2, "spearman needs at least two observations");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

namespace detail {

// Counts strict inversions while merge-sorting.
inline std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buffer, std::size_t lo,
                                     std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = count_inversions(v, buffer, lo, mid) + count_inversions(v, buffer, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buffer[k++] = v[j++];
    } else {
      buffer[k++] = v[i++];
    }
  }
  while (i < mid) buffer[k++] = v[i++];
  while (j < hi) buffer[k++] = v[j++];
  std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(lo), buffer.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Sum of t(t-1)/2 over runs of equal adjacent values.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal) {
  std::int64_t ties = 0, run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

}  // namespace detail

// Kendall's tau-b in O(n log n) (Knight's algorithm).
inline std::optional<double> kendall(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "kendall inputs differ in length");
  require(x.size() >= 2, "kendall needs at least two observations");
  std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  std::int64_t x_ties = detail::tied_pairs(n, [&](std::size_t i, std::size_t j) { return x[order[i]] == x[order[j]]; });
  std::int64_t joint_ties = detail::tied_pairs(
      n, [&](std::size_t i, std::size_t j) { return x[order[i]] == x[order[j]] && y[order[i]] == y[order[j]]; });

  std::vector<double> ys(n), buffer(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::int64_t swaps = detail::count_inversions(ys, buffer, 0, n);
  std::int64_t y_ties = detail::tied_pairs(n, [&](std::size_t i, std::size_t j) { return ys[i] == ys[j]; });

  std::int64_t numerator = n0 - x_ties - y_ties + joint_ties - 2 * swaps;
  double denominator = std::sqrt(static_cast<double>(n0 - x_ties) * static_cast<double>(n0 - y_ties));
  if (denominator == 0.0) return std::nullopt;
  return std::clamp(static_cast<double>(numerator) / denominator, -1.0, 1.0);
}

}  // namespace fneval
