#include "eelink/rng.hpp"

#include <cmath>

#include "eelink/errors.hpp"

namespace eelink {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// splitmix64 finalizer (stateless mixing step).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Full splitmix64 step, used to expand the mixed key into generator words.
inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
  return mix64(z);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed_state) {
  std::uint64_t s = seed_state;
  for (auto& word : s_) word = splitmix64(s);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // xoshiro forbids the zero state
}

std::uint64_t RandomStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RandomStream::uniform01() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::uniform01_inclusive() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RandomStream::exponential() { return -std::log(uniform01_inclusive()); }

double RandomStream::normal() { return inverse_normal_cdf(uniform01()); }

RandomStream derive_stream(const StreamKey& key) {
  std::uint64_t s = mix64(key.master_seed);
  s = mix64(s ^ static_cast<std::uint64_t>(key.replicate_id));
  s = mix64(s ^ static_cast<std::uint64_t>(key.draw_id));
  s = mix64(s ^ static_cast<std::uint64_t>(key.purpose));
  s = mix64(s ^ static_cast<std::uint64_t>(key.retry_index));
  return RandomStream(s);
}

// AS241 (PPND16): rational approximations on three regions, accurate to
// about 1e-16 over (0,1).
double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("inverse_normal_cdf requires p in (0,1)");
  }
  const double q = p - 0.5;
  double r, val;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    val = q *
          (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
              1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
            1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
          (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
              5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
            4.2313330701600911252e+1) * r + 1.0);
    return val;
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          ((((((1.42151175831644588870e-15 * r + 1.84631831751005468180e-6) * r +
               7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r +
             1.36929880922735805310e-1) * r + 5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

WeightVector dirichlet_from_exponentials(const Vec& g) {
  if (g.size() < 1) throw ValidationError("need at least one exponential variate");
  double sum = g.sum();
  if (!(sum > 0.0)) throw ValidationError("degenerate exponential variates (zero sum)");
  return WeightVector::from(g / sum);
}

WeightVector sample_dirichlet_uniform(int n, RandomStream& stream) {
  if (n < 1) throw ValidationError("sample_dirichlet_uniform requires n >= 1");
  Vec g(n);
  for (int attempt = 0; attempt < 2; ++attempt) {
    for (int i = 0; i < n; ++i) g[i] = stream.exponential();
    if (g.sum() > 0.0) return dirichlet_from_exponentials(g);
  }
  throw ValidationError("exponential variates summed to zero twice in a row");
}

WeightVector equal_weights(int n) { return WeightVector::equal(n); }

}  // namespace eelink
