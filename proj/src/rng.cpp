#include "modeq/rng.hpp"

#include <cmath>
#include <cstring>

#if defined(__AVX512F__) && defined(__AVX512DQ__)
#include <immintrin.h>
#define MODEQ_RNG_AVX512 1
#endif

namespace modeq::rng {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

// fdlibm log coefficients.
constexpr double kLg1 = 6.666666666666735130e-01;
constexpr double kLg2 = 3.999999999940941908e-01;
constexpr double kLg3 = 2.857142874366239149e-01;
constexpr double kLg4 = 2.222219843214978396e-01;
constexpr double kLg5 = 1.818357216161805012e-01;
constexpr double kLg6 = 1.531383769920937332e-01;
constexpr double kLg7 = 1.479819860511658591e-01;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kSqrt2 = 1.41421356237309504880;

// fdlibm sin/cos coefficients on [-pi/4, pi/4].
constexpr double kS1 = -1.66666666666666324348e-01;
constexpr double kS2 = 8.33333333332248946124e-03;
constexpr double kS3 = -1.98412698298579493134e-04;
constexpr double kS4 = 2.75573137070700676789e-06;
constexpr double kS5 = -2.50507602534068634195e-08;
constexpr double kS6 = 1.58969099521155010221e-10;
constexpr double kC1 = 4.16666666666666019037e-02;
constexpr double kC2 = -1.38888888888741095749e-03;
constexpr double kC3 = 2.48015872894767294178e-05;
constexpr double kC4 = -2.75573143513906633035e-07;
constexpr double kC5 = 2.08757232129817482790e-09;
constexpr double kC6 = -1.13596475577881948265e-11;
constexpr double kTwoPi = 6.28318530717958647693;

inline std::array<std::uint64_t, 2> philox_scalar(std::uint64_t key,
                                                  std::uint64_t stream,
                                                  std::uint64_t block) {
  std::uint32_t c0 = static_cast<std::uint32_t>(block);
  std::uint32_t c1 = static_cast<std::uint32_t>(block >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(stream);
  std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c2;
    const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
    const std::uint32_t n1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
    const std::uint32_t n3 = static_cast<std::uint32_t>(p0);
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return {(static_cast<std::uint64_t>(c1) << 32) | c0,
          (static_cast<std::uint64_t>(c3) << 32) | c2};
}

inline double u64_to_unit(std::uint64_t v) {
  return (static_cast<double>(v >> 11) + 0.5) * 0x1p-53;
}

// log(x) for x in (0,1]. Written with explicit fma so the scalar and the
// AVX-512 paths produce bit-identical results (this file is compiled with
// contraction disabled).
inline double log_unit(double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  double e = static_cast<double>(static_cast<int>((bits >> 52) & 0x7ff) - 1023);
  std::uint64_t mbits = (bits & 0x000fffffffffffffULL) | 0x3ff0000000000000ULL;
  double m;
  std::memcpy(&m, &mbits, 8);
  const bool big = m > kSqrt2;
  m = big ? m * 0.5 : m;
  e = big ? e + 1.0 : e;
  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  double p = std::fma(w, kLg6, kLg4);
  p = std::fma(w, p, kLg2);
  const double t1 = w * p;
  double q = std::fma(w, kLg7, kLg5);
  q = std::fma(w, q, kLg3);
  q = std::fma(w, q, kLg1);
  const double t2 = z * q;
  const double hfsq = 0.5 * (f * f);
  const double rhs = s * (hfsq + (t1 + t2));
  const double lnm = f - (hfsq - rhs);
  return std::fma(e, kLn2Hi, std::fma(e, kLn2Lo, lnm));
}

// sin and cos of 2*pi*u for u in (0,1). Quadrant reduction in turns keeps the
// reduced argument exact without a Cody-Waite split.
inline void sincos_2piu(double u, double* sin_out, double* cos_out) {
  const double q = std::floor(std::fma(4.0, u, 0.5));
  const double r = kTwoPi * (u - 0.25 * q);
  const long qi = static_cast<long>(q) & 3;
  const double z = r * r;
  double ps = std::fma(z, kS6, kS5);
  ps = std::fma(z, ps, kS4);
  ps = std::fma(z, ps, kS3);
  ps = std::fma(z, ps, kS2);
  ps = std::fma(z, ps, kS1);
  const double sp = std::fma(r * z, ps, r);
  double pc = std::fma(z, kC6, kC5);
  pc = std::fma(z, pc, kC4);
  pc = std::fma(z, pc, kC3);
  pc = std::fma(z, pc, kC2);
  pc = std::fma(z, pc, kC1);
  const double w = z * z;
  const double cp = std::fma(w, pc, std::fma(z, -0.5, 1.0));
  const bool swap = (qi & 1) != 0;
  const double sa = swap ? cp : sp;
  const double ca = swap ? sp : cp;
  *sin_out = (qi >= 2) ? (0.0 - sa) : sa;
  *cos_out = (qi == 1 || qi == 2) ? (0.0 - ca) : ca;
}

inline void normals_from_block(std::uint64_t lo, std::uint64_t hi, double* out) {
  const double u1 = u64_to_unit(lo);
  const double u2 = u64_to_unit(hi);
  const double rad = std::sqrt(-2.0 * log_unit(u1));
  double s, c;
  sincos_2piu(u2, &s, &c);
  out[0] = rad * c;
  out[1] = rad * s;
}

#ifdef MODEQ_RNG_AVX512

inline void philox_avx512_8(std::uint64_t key, std::uint64_t stream,
                            std::uint64_t base, __m512i* lo, __m512i* hi) {
  const __m512i idx = _mm512_setr_epi64(0, 1, 2, 3, 4, 5, 6, 7);
  const __m512i mask32 = _mm512_set1_epi64(0xffffffffLL);
  const __m512i m0 = _mm512_set1_epi64(static_cast<long long>(kPhiloxM0));
  const __m512i m1 = _mm512_set1_epi64(static_cast<long long>(kPhiloxM1));
  const __m512i ctr =
      _mm512_add_epi64(_mm512_set1_epi64(static_cast<long long>(base)), idx);
  __m512i c0 = _mm512_and_si512(ctr, mask32);
  __m512i c1 = _mm512_srli_epi64(ctr, 32);
  __m512i c2 = _mm512_set1_epi64(static_cast<long long>(stream & 0xffffffffULL));
  __m512i c3 = _mm512_set1_epi64(static_cast<long long>(stream >> 32));
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int r = 0; r < 10; ++r) {
    const __m512i p0 = _mm512_mul_epu32(m0, c0);
    const __m512i p1 = _mm512_mul_epu32(m1, c2);
    const __m512i kv0 = _mm512_set1_epi64(static_cast<long long>(k0));
    const __m512i kv1 = _mm512_set1_epi64(static_cast<long long>(k1));
    const __m512i n0 = _mm512_xor_si512(
        _mm512_xor_si512(_mm512_srli_epi64(p1, 32), c1), kv0);
    const __m512i n1 = _mm512_and_si512(p1, mask32);
    const __m512i n2 = _mm512_xor_si512(
        _mm512_xor_si512(_mm512_srli_epi64(p0, 32), c3), kv1);
    const __m512i n3 = _mm512_and_si512(p0, mask32);
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  *lo = _mm512_or_si512(_mm512_slli_epi64(c1, 32), c0);
  *hi = _mm512_or_si512(_mm512_slli_epi64(c3, 32), c2);
}

inline __m512d unit_from_u64(__m512i v) {
  const __m512d half = _mm512_set1_pd(0.5);
  const __m512d scale = _mm512_set1_pd(0x1p-53);
  const __m512d x = _mm512_cvtepu64_pd(_mm512_srli_epi64(v, 11));
  return _mm512_mul_pd(_mm512_add_pd(x, half), scale);
}

inline __m512d log_unit_avx512(__m512d x) {
  const __m512d one = _mm512_set1_pd(1.0);
  __m512d e = _mm512_getexp_pd(x);
  __m512d m = _mm512_getmant_pd(x, _MM_MANT_NORM_1_2, _MM_MANT_SIGN_zero);
  const __mmask8 big = _mm512_cmp_pd_mask(m, _mm512_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm512_mask_mul_pd(m, big, m, _mm512_set1_pd(0.5));
  e = _mm512_mask_add_pd(e, big, e, one);
  const __m512d f = _mm512_sub_pd(m, one);
  const __m512d s = _mm512_div_pd(f, _mm512_add_pd(_mm512_set1_pd(2.0), f));
  const __m512d z = _mm512_mul_pd(s, s);
  const __m512d w = _mm512_mul_pd(z, z);
  __m512d p = _mm512_fmadd_pd(w, _mm512_set1_pd(kLg6), _mm512_set1_pd(kLg4));
  p = _mm512_fmadd_pd(w, p, _mm512_set1_pd(kLg2));
  const __m512d t1 = _mm512_mul_pd(w, p);
  __m512d q = _mm512_fmadd_pd(w, _mm512_set1_pd(kLg7), _mm512_set1_pd(kLg5));
  q = _mm512_fmadd_pd(w, q, _mm512_set1_pd(kLg3));
  q = _mm512_fmadd_pd(w, q, _mm512_set1_pd(kLg1));
  const __m512d t2 = _mm512_mul_pd(z, q);
  const __m512d hfsq = _mm512_mul_pd(_mm512_set1_pd(0.5), _mm512_mul_pd(f, f));
  const __m512d rhs = _mm512_mul_pd(s, _mm512_add_pd(hfsq, _mm512_add_pd(t1, t2)));
  const __m512d lnm = _mm512_sub_pd(f, _mm512_sub_pd(hfsq, rhs));
  return _mm512_fmadd_pd(e, _mm512_set1_pd(kLn2Hi),
                         _mm512_fmadd_pd(e, _mm512_set1_pd(kLn2Lo), lnm));
}

inline void sincos_2piu_avx512(__m512d u, __m512d* sin_out, __m512d* cos_out) {
  const __m512d q = _mm512_roundscale_pd(
      _mm512_fmadd_pd(_mm512_set1_pd(4.0), u, _mm512_set1_pd(0.5)),
      _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
  const __m512d r = _mm512_mul_pd(
      _mm512_set1_pd(kTwoPi),
      _mm512_sub_pd(u, _mm512_mul_pd(_mm512_set1_pd(0.25), q)));
  const __m512i qi = _mm512_and_si512(_mm512_cvtpd_epi64(q), _mm512_set1_epi64(3));
  const __m512d z = _mm512_mul_pd(r, r);
  __m512d ps = _mm512_fmadd_pd(z, _mm512_set1_pd(kS6), _mm512_set1_pd(kS5));
  ps = _mm512_fmadd_pd(z, ps, _mm512_set1_pd(kS4));
  ps = _mm512_fmadd_pd(z, ps, _mm512_set1_pd(kS3));
  ps = _mm512_fmadd_pd(z, ps, _mm512_set1_pd(kS2));
  ps = _mm512_fmadd_pd(z, ps, _mm512_set1_pd(kS1));
  const __m512d sp = _mm512_fmadd_pd(_mm512_mul_pd(r, z), ps, r);
  __m512d pc = _mm512_fmadd_pd(z, _mm512_set1_pd(kC6), _mm512_set1_pd(kC5));
  pc = _mm512_fmadd_pd(z, pc, _mm512_set1_pd(kC4));
  pc = _mm512_fmadd_pd(z, pc, _mm512_set1_pd(kC3));
  pc = _mm512_fmadd_pd(z, pc, _mm512_set1_pd(kC2));
  pc = _mm512_fmadd_pd(z, pc, _mm512_set1_pd(kC1));
  const __m512d w = _mm512_mul_pd(z, z);
  const __m512d cp = _mm512_fmadd_pd(
      w, pc, _mm512_fmadd_pd(z, _mm512_set1_pd(-0.5), _mm512_set1_pd(1.0)));
  const __mmask8 swap =
      _mm512_test_epi64_mask(qi, _mm512_set1_epi64(1));
  const __m512d sa = _mm512_mask_blend_pd(swap, sp, cp);
  const __m512d ca = _mm512_mask_blend_pd(swap, cp, sp);
  const __mmask8 sneg = _mm512_cmp_epi64_mask(qi, _mm512_set1_epi64(2), _MM_CMPINT_NLT);
  const __mmask8 ceq1 = _mm512_cmp_epi64_mask(qi, _mm512_set1_epi64(1), _MM_CMPINT_EQ);
  const __mmask8 ceq2 = _mm512_cmp_epi64_mask(qi, _mm512_set1_epi64(2), _MM_CMPINT_EQ);
  const __m512d zero = _mm512_setzero_pd();
  *sin_out = _mm512_mask_sub_pd(sa, sneg, zero, sa);
  *cos_out = _mm512_mask_sub_pd(ca, ceq1 | ceq2, zero, ca);
}

// 8 blocks -> 16 normals, interleaved as (r*cos, r*sin) per block.
inline void normals_avx512_8(std::uint64_t key, std::uint64_t stream,
                             std::uint64_t base, double* out) {
  __m512i lo, hi;
  philox_avx512_8(key, stream, base, &lo, &hi);
  const __m512d u1 = unit_from_u64(lo);
  const __m512d u2 = unit_from_u64(hi);
  const __m512d rad = _mm512_sqrt_pd(
      _mm512_mul_pd(_mm512_set1_pd(-2.0), log_unit_avx512(u1)));
  __m512d s, c;
  sincos_2piu_avx512(u2, &s, &c);
  const __m512d z0 = _mm512_mul_pd(rad, c);
  const __m512d z1 = _mm512_mul_pd(rad, s);
  const __m512i idx_lo = _mm512_setr_epi64(0, 8, 1, 9, 2, 10, 3, 11);
  const __m512i idx_hi = _mm512_setr_epi64(4, 12, 5, 13, 6, 14, 7, 15);
  _mm512_storeu_pd(out, _mm512_permutex2var_pd(z0, idx_lo, z1));
  _mm512_storeu_pd(out + 8, _mm512_permutex2var_pd(z0, idx_hi, z1));
}

#endif  // MODEQ_RNG_AVX512

}  // namespace

std::array<std::uint64_t, 2> philox_block(std::uint64_t seed, std::uint64_t stream,
                                          std::uint64_t block) {
  return philox_scalar(seed, stream, block);
}

void fill_normals_reference(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t first_block, int nblocks, double* out) {
  for (int i = 0; i < nblocks; ++i) {
    const auto words = philox_scalar(seed, stream, first_block + i);
    normals_from_block(words[0], words[1], out + 2 * i);
  }
}

void fill_normals(std::uint64_t seed, std::uint64_t stream,
                  std::uint64_t first_block, int nblocks, double* out) {
#ifdef MODEQ_RNG_AVX512
  int i = 0;
  for (; i + 8 <= nblocks; i += 8) {
    normals_avx512_8(seed, stream, first_block + i, out + 2 * i);
  }
  if (i < nblocks) {
    fill_normals_reference(seed, stream, first_block + i, nblocks - i, out + 2 * i);
  }
#else
  fill_normals_reference(seed, stream, first_block, nblocks, out);
#endif
}

void fill_uniforms(std::uint64_t seed, std::uint64_t stream,
                   std::uint64_t first_block, int nblocks, double* out) {
  for (int i = 0; i < nblocks; ++i) {
    const auto words = philox_scalar(seed, stream, first_block + i);
    out[2 * i] = u64_to_unit(words[0]);
    out[2 * i + 1] = u64_to_unit(words[1]);
  }
}

void gaussian_vector(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t vector_index, int dim, double* out) {
  const int blocks = blocks_per_vector(dim);
  const std::uint64_t base = vector_index * static_cast<std::uint64_t>(blocks);
  int written = 0;
  for (int b = 0; b < blocks; ++b) {
    double pair[2];
    const auto words = philox_scalar(seed, stream, base + b);
    normals_from_block(words[0], words[1], pair);
    out[written++] = pair[0];
    if (written < dim) out[written++] = pair[1];
  }
}

bool vector_kernel_active() {
#ifdef MODEQ_RNG_AVX512
  return true;
#else
  return false;
#endif
}

}  // namespace modeq::rng
