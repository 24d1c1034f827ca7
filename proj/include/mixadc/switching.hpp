// SPDX-License-Identifier: Apache-2.0
//
// ADC switch policies: which K antennas get the high-resolution pairs.

#pragma once

#include "mixadc/common.hpp"
#include "mixadc/quantizer.hpp"
#include "mixadc/spectral.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mixadc {

/// High-resolution pairs go to the K antennas with the largest
/// sum_v ||h_n^v||^2. Ties go to the lower antenna index.
AdcSwitchVector norm_based_switch(const ChannelSet& channels, int k);

/// Uniform K-subset without replacement.
AdcSwitchVector random_switch(int n_antennas, int k, Rng& rng);

/// Antenna indices sorted by decreasing aggregate channel energy (stable).
std::vector<int> rank_by_norm(const ChannelSet& channels);

enum class SwitchKind { NormBased, Random, Fixed };

struct SwitchPolicy {
  SwitchKind kind = SwitchKind::NormBased;
  AdcSwitchVector fixed;  // used when kind == Fixed

  static SwitchPolicy norm_based() { return {}; }
  static SwitchPolicy random() { return {SwitchKind::Random, {}}; }
  static SwitchPolicy fixed_vector(AdcSwitchVector delta) { return {SwitchKind::Fixed, std::move(delta)}; }
  static SwitchPolicy from_name(const std::string& name);
  std::string name() const;

  /// Applies the policy. A Fixed policy ignores `k` beyond checking it
  /// matches the stored vector.
  AdcSwitchVector apply(const ChannelSet& channels, int k, Rng& rng) const;
};

}  // namespace mixadc

namespace mixadc {

/// Counts of ADC pairs per resolution, e.g. "hr:4,1:12" or "4:8,2:8".
struct AdcPopulation {
  std::vector<std::pair<AdcSpec, int>> groups;

  static AdcPopulation parse(const std::string& text);
  /// K high-resolution pairs, the rest one-bit.
  static AdcPopulation mixed(int n_antennas, int n_highres);
  int total() const;
  std::string to_string() const;
};

/// Per-antenna specs: the finest ADCs go to the first antennas of `order`
/// (high-resolution first, then decreasing bit width).
std::vector<AdcSpec> assign_population(const AdcPopulation& population, std::span<const int> order);

}  // namespace mixadc
