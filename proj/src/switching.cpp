// SPDX-License-Identifier: Apache-2.0

#include "mixadc/switching.hpp"

#include <algorithm>
#include <numeric>

namespace mixadc {

namespace {

void check_k(int n, int k) {
  if (k < 0 || k > n) throw InvalidArgument("K must lie in [0, N]");
}

}  // namespace

std::vector<int> rank_by_norm(const ChannelSet& channels) {
  const int n = channels.n_antennas();
  std::vector<double> energy(n);
  for (int i = 0; i < n; ++i) energy[i] = channels.tap_energy(i);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return energy[a] > energy[b]; });
  return order;
}

AdcSwitchVector norm_based_switch(const ChannelSet& channels, int k) {
  const int n = channels.n_antennas();
  check_k(n, k);
  const auto order = rank_by_norm(channels);
  AdcSwitchVector d = AdcSwitchVector::all(n, 0);
  for (int i = 0; i < k; ++i) d.delta[order[i]] = 1;
  return d;
}

AdcSwitchVector random_switch(int n_antennas, int k, Rng& rng) {
  check_k(n_antennas, k);
  // Partial Fisher-Yates with our own uniform draws, so the result does not
  // depend on the standard library's shuffle implementation.
  std::vector<int> idx(n_antennas);
  std::iota(idx.begin(), idx.end(), 0);
  AdcSwitchVector d = AdcSwitchVector::all(n_antennas, 0);
  for (int i = 0; i < k; ++i) {
    const int span = n_antennas - i;
    int j = i + static_cast<int>(rng.uniform() * span);
    if (j >= n_antennas) j = n_antennas - 1;
    std::swap(idx[i], idx[j]);
    d.delta[idx[i]] = 1;
  }
  return d;
}

SwitchPolicy SwitchPolicy::from_name(const std::string& name) {
  if (name == "norm" || name == "norm-based") return norm_based();
  if (name == "random") return random();
  throw InvalidArgument("unknown switch policy '" + name + "' (expected norm or random)");
}

std::string SwitchPolicy::name() const {
  switch (kind) {
    case SwitchKind::NormBased: return "norm";
    case SwitchKind::Random: return "random";
    case SwitchKind::Fixed: return "fixed";
  }
  return "unknown";
}

AdcSwitchVector SwitchPolicy::apply(const ChannelSet& channels, int k, Rng& rng) const {
  switch (kind) {
    case SwitchKind::NormBased: return norm_based_switch(channels, k);
    case SwitchKind::Random: return random_switch(channels.n_antennas(), k, rng);
    case SwitchKind::Fixed:
      if (fixed.size() != channels.n_antennas() || fixed.count() != k)
        throw InvalidArgument("fixed switch vector does not match N and K");
      return fixed;
  }
  throw InvalidArgument("unknown switch policy");
}

}  // namespace mixadc

namespace mixadc {

namespace {

// Sort key: high-resolution first, then more bits first.
int resolution_rank(const AdcSpec& s) {
  if (s.is_high_res()) return 1000;
  return s.bits;
}

}  // namespace

AdcPopulation AdcPopulation::parse(const std::string& text) {
  AdcPopulation p;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) throw InvalidArgument("ADC population entry '" + item + "' must be kind:count");
    const std::string kind = item.substr(0, colon);
    int count = 0;
    try {
      std::size_t used = 0;
      count = std::stoi(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidArgument("bad count in ADC population entry '" + item + "'");
    }
    if (count < 0) throw InvalidArgument("ADC counts must be nonnegative");
    if (count > 0) p.groups.emplace_back(AdcSpec::from_label(kind), count);
    pos = end + 1;
  }
  if (p.groups.empty()) throw InvalidArgument("ADC population is empty");
  return p;
}

AdcPopulation AdcPopulation::mixed(int n_antennas, int n_highres) {
  if (n_highres < 0 || n_highres > n_antennas) throw InvalidArgument("K must lie in [0, N]");
  AdcPopulation p;
  if (n_highres > 0) p.groups.emplace_back(AdcSpec::high_res(), n_highres);
  if (n_antennas > n_highres) p.groups.emplace_back(AdcSpec::one_bit(), n_antennas - n_highres);
  return p;
}

int AdcPopulation::total() const {
  int t = 0;
  for (const auto& g : groups) t += g.second;
  return t;
}

std::string AdcPopulation::to_string() const {
  std::string out;
  for (const auto& g : groups) {
    if (!out.empty()) out += ',';
    out += g.first.label() + ':' + std::to_string(g.second);
  }
  return out;
}

std::vector<AdcSpec> assign_population(const AdcPopulation& population, std::span<const int> order) {
  const int n = static_cast<int>(order.size());
  if (population.total() != n)
    throw InvalidArgument("ADC population covers " + std::to_string(population.total()) + " antennas, expected " +
                          std::to_string(n));
  auto groups = population.groups;
  std::stable_sort(groups.begin(), groups.end(),
                   [](const auto& a, const auto& b) { return resolution_rank(a.first) > resolution_rank(b.first); });
  std::vector<AdcSpec> specs(n);
  int i = 0;
  for (const auto& [spec, count] : groups)
    for (int c = 0; c < count; ++c) specs[order[i++]] = spec;
  return specs;
}

}  // namespace mixadc
