//! Independent natural logarithm in big fixed-point arithmetic.
//!
//! ln(x) for a positive integer x: write x = 2^k * (a/b) with a/b in [1, 2),
//! then ln x = k*ln 2 + ln(a/b), and ln(p/q) = 2*atanh((p-q)/(p+q)) where the
//! atanh series sum_{odd n} z^n / n converges fast for |z| <= 1/3.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

const BITS: u32 = 320;

fn scale() -> BigInt {
    BigInt::one() << BITS
}

/// atanh(p/q) * 2^BITS, for 0 <= p/q <= 1/3.
fn atanh_fixed(p: &BigInt, q: &BigInt) -> BigInt {
    let mut power = (scale() * p) / q;
    let z2_num = p * p;
    let z2_den = q * q;
    let mut sum = BigInt::zero();
    let mut n = 1u32;
    while !power.is_zero() {
        sum += &power / n;
        power = (power * &z2_num) / &z2_den;
        n += 2;
    }
    sum
}

/// ln(p/q) * 2^BITS for p >= q > 0.
fn ln_ratio_fixed(p: &BigInt, q: &BigInt) -> BigInt {
    atanh_fixed(&(p - q), &(p + q)) * 2
}

pub fn ln_fixed(x: u64) -> BigInt {
    assert!(x >= 1);
    let k = 63 - x.leading_zeros();
    let ln2 = ln_ratio_fixed(&BigInt::from(2), &BigInt::one());
    let rest = ln_ratio_fixed(&BigInt::from(x), &(BigInt::one() << k));
    ln2 * k + rest
}

/// Exact-enough quotient of two fixed-point values as f64.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // 2^60 headroom keeps 60 significant bits before the f64 rounding.
    let q: BigInt = (num << 60u32) / den;
    q.to_f64().unwrap() / 2f64.powi(60)
}

/// n * log_base(s) computed from the big-number logarithms.
pub fn hartley_oracle(n: u64, s: u64, base: u64) -> f64 {
    let num = ln_fixed(s) * n;
    ratio_to_f64(&num, &ln_fixed(base))
}

pub fn log2_oracle(c: u64) -> f64 {
    hartley_oracle(1, c, 2)
}
