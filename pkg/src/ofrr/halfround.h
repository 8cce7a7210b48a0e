#ifndef OFRR_HALFROUND_H
#define OFRR_HALFROUND_H

/* Round a double to IEEE binary16 and back, round-to-nearest-even.
 *
 * The double is first rounded to binary32.  Rounding through binary32 is
 * exact here: by the classical double-rounding bound, rounding to p bits via
 * an intermediate format with at least 2p+2 bits matches direct rounding,
 * and binary32 has exactly 2*11+2 = 24 significand bits. */

#include <stdint.h>
#include <string.h>

#if defined(__F16C__)
#include <immintrin.h>

static inline double ofrr_round_f16(double x) {
    float f = (float)x;
    return (double)_cvtsh_ss(_cvtss_sh(f, _MM_FROUND_TO_NEAREST_INT));
}

#else /* portable bit-level conversion (numpy halffloat algorithm) */

static inline uint16_t ofrr_float_to_half_bits(float f) {
    uint32_t fb;
    memcpy(&fb, &f, 4);
    uint16_t h_sgn = (uint16_t)((fb & 0x80000000u) >> 16);
    uint32_t f_exp = fb & 0x7f800000u;
    uint32_t f_sig = fb & 0x007fffffu;

    if (f_exp >= 0x47800000u) { /* overflow, inf, or nan */
        if (f_exp == 0x7f800000u && f_sig != 0) {
            uint16_t ret = (uint16_t)(0x7c00u + (f_sig >> 13));
            if (ret == 0x7c00u)
                ret++; /* keep it a nan */
            return (uint16_t)(h_sgn + ret);
        }
        return (uint16_t)(h_sgn + 0x7c00u);
    }
    if (f_exp <= 0x38000000u) { /* subnormal half or zero */
        if (f_exp < 0x33000000u)
            return h_sgn; /* underflow to signed zero */
        f_exp >>= 23;
        f_sig += 0x00800000u; /* make the implicit bit explicit */
        int shift = 126 - (int)f_exp;
        uint32_t rounded = f_sig >> shift;
        /* round to nearest even on the shifted-out bits */
        uint32_t rem = f_sig & ((1u << shift) - 1u);
        uint32_t half = 1u << (shift - 1);
        if (rem > half || (rem == half && (rounded & 1u)))
            rounded++;
        return (uint16_t)(h_sgn + rounded);
    }
    /* normal case: rebias exponent, round significand to 10 bits */
    uint16_t h_exp = (uint16_t)((f_exp - 0x38000000u) >> 13);
    uint16_t h_sig = (uint16_t)(f_sig >> 13);
    uint32_t rem = f_sig & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (h_sig & 1u)))
        h_sig++; /* may overflow into the exponent: that is correct */
    return (uint16_t)(h_sgn + h_exp + h_sig);
}

static inline float ofrr_half_bits_to_float(uint16_t h) {
    uint32_t f_sgn = ((uint32_t)(h & 0x8000u)) << 16;
    uint32_t h_exp = h & 0x7c00u;
    uint32_t h_sig = h & 0x03ffu;
    uint32_t fb;
    if (h_exp == 0) {
        if (h_sig == 0) {
            fb = f_sgn;
        } else { /* subnormal: normalize */
            int e = -1;
            do {
                h_sig <<= 1;
                e++;
            } while ((h_sig & 0x0400u) == 0);
            fb = f_sgn + (((uint32_t)(127 - 15 - e)) << 23) +
                 ((h_sig & 0x03ffu) << 13);
        }
    } else if (h_exp == 0x7c00u) {
        fb = f_sgn + 0x7f800000u + (h_sig << 13);
    } else {
        fb = f_sgn + ((((uint32_t)(h >> 10) & 0x1fu) + 112u) << 23) +
             (h_sig << 13);
    }
    float f;
    memcpy(&f, &fb, 4);
    return f;
}

static inline double ofrr_round_f16(double x) {
    float f = (float)x;
    return (double)ofrr_half_bits_to_float(ofrr_float_to_half_bits(f));
}

#endif /* __F16C__ */

static inline double ofrr_round_f32(double x) { return (double)(float)x; }

#endif /* OFRR_HALFROUND_H */
