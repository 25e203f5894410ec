#pragma once

#include <cstdint>

#include "eelink/types.hpp"

namespace eelink {

// Deterministic random streams.
//
// Every stream is a pure function of its StreamKey, so draws are
// reproducible bit-for-bit across runs, platforms, and thread counts.
// The derivation is fixed:
//
//   state  = mix(mix(mix(mix(mix(master_seed) ^ replicate_id)
//                        ^ draw_id) ^ purpose) ^ retry_index)
//
// where mix is the splitmix64 finalizer, and the four 64-bit words of
// the xoshiro256++ generator are produced by iterating splitmix64 from
// that state. Variate transforms are equally pinned: uniforms map the
// top 53 bits of a 64-bit output into (0,1), exponentials are -log(u)
// with u in (0,1], and normals invert the standard normal CDF with the
// AS241 rational approximation (double precision). No libc distribution
// functions are used anywhere.

enum class StreamPurpose : std::uint32_t {
  data = 1,      // dataset generation for a replicate
  weights = 2,   // Dirichlet weights for a bootstrap draw
  retry = 3,     // fresh weights after a failed draw
  nuisance = 4,  // weights consumed by a plug-in nuisance posterior
};

struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint32_t replicate_id = 0;
  std::uint32_t draw_id = 0;
  StreamPurpose purpose = StreamPurpose::weights;
  std::uint32_t retry_index = 0;
};

// xoshiro256++ with the seeding scheme documented above.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed_state);

  std::uint64_t next_u64();

  // Open interval (0,1): (bits53 + 0.5) * 2^-53.
  double uniform01();

  // Half-open (0,1]: (bits53 + 1) * 2^-53. Used for exponentials.
  double uniform01_inclusive();

  // Standard exponential via inversion, -log(uniform01_inclusive()).
  double exponential();

  // Standard normal via the AS241 inverse-CDF approximation.
  double normal();

 private:
  std::uint64_t s_[4];
};

RandomStream derive_stream(const StreamKey& key);

// Inverse standard normal CDF (AS241, PPND16 variant), exposed for tests.
double inverse_normal_cdf(double p);

// Dirichlet(1,...,1) on the n-simplex: n independent standard
// exponentials normalized by their sum. A zero sum (probability zero)
// is redrawn once, then reported as an error.
WeightVector sample_dirichlet_uniform(int n, RandomStream& stream);

// Normalizes already-drawn exponential variates. Split out so tests can
// exercise the exchangeability of the construction directly.
WeightVector dirichlet_from_exponentials(const Vec& g);

// Uniform weights, every entry exactly 1.0/n.
WeightVector equal_weights(int n);

}  // namespace eelink
