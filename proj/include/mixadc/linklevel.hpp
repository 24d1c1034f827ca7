// SPDX-License-Identifier: Apache-2.0
//
// Coded multi-user OFDM link through the mixed-ADC front end.
//
// Per user and frame: info bits -> rate-1/2 convolutional code (generators
// 110, 111, zero-tail) -> 16-QAM Gray -> one OFDM symbol with cyclic prefix
// -> multipath + noise -> CP removal -> per-antenna ADC -> DFT -> linear
// equalizer w^u = D^{-1} g^u -> scale by 1/a^u -> hard slicing -> Viterbi.
//
// One frame fills exactly one OFDM symbol: 4Q coded bits, 2Q - 2 info bits.

#pragma once

#include "mixadc/common.hpp"
#include "mixadc/quantizer.hpp"
#include "mixadc/spectral.hpp"
#include "mixadc/switching.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mixadc {

using Bits = std::vector<std::uint8_t>;

/// Shift-register encoding from the zero state, no tail: 2 output bits per
/// input bit, (b ^ s1, b ^ s1 ^ s2).
Bits conv_encode(std::span<const std::uint8_t> bits);

/// Appends two zero tail bits, then encodes: 2 (L + 2) output bits.
Bits conv_encode_terminated(std::span<const std::uint8_t> bits);

/// Hard-decision Viterbi on the 4-state trellis (Hamming metric). With
/// `terminated`, the path must end in the zero state and the two tail bits
/// are dropped from the output.
Bits viterbi_decode(std::span<const std::uint8_t> coded, bool terminated = true);

/// Gray-mapped 16-QAM: bits (b0, b1) pick the in-phase level, (b2, b3) the
/// quadrature level, from {-3, -1, 1, 3} / sqrt(10), scaled by sqrt(E_s).
cplx qam16(std::span<const std::uint8_t> bits, double symbol_energy = 1.0);

/// Slices symbol / scale to the nearest point of the E_s-scaled grid and
/// writes its 4 bits.
void qam16_demap(cplx symbol, double scale, double symbol_energy, std::span<std::uint8_t> out);

/// Cyclic prefix length used by the link: max_u T^u - 1.
int cyclic_prefix_length(const SystemConfig& config);

/// Noise-free received time samples (after CP removal) at every antenna for
/// time-domain user signals `x[u]` (length Q each): the transmit block with
/// prefix is linearly convolved with the taps.
std::vector<cvec> ofdm_receive(const ChannelSet& channels, std::span<const cvec> x, int cp_length,
                               std::span<const int> taps_per_user);

struct BerOptions {
  std::vector<double> snr_db{0.0};
  int frames = 100;
  /// Explicit ADC population; when empty, K = config.n_highres high-res
  /// pairs and one-bit ADCs elsewhere.
  std::optional<AdcPopulation> population;
  SwitchPolicy policy = SwitchPolicy::norm_based();
  /// Design the equalizer for the actual multi-bit ADCs instead of treating
  /// them as high-resolution.
  bool matched_multibit = false;
  bool noiseless = false;
  int threads = 1;
};

struct BerPoint {
  double snr_db = 0.0;
  double ebn0_db = 0.0;
  int user = 0;
  long frames = 0;
  long bits = 0;
  long bit_errors = 0;
  double ber = 0.0;
  double ci95 = 0.0;  // half-width of the 95% Wilson interval
};

struct BerReport {
  std::vector<BerPoint> points;  // snr-major, then user
  /// Pooled over users at snr index i.
  BerPoint pooled(std::size_t snr_index) const;
  int n_users = 0;
};

/// Half-width of the Wilson score interval at 95%.
double wilson_half_width(long errors, long trials);

BerReport simulate_ber(const SystemConfig& config, const BerOptions& options, std::uint64_t seed);

}  // namespace mixadc
