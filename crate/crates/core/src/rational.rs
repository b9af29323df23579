//! Exact rational arithmetic helpers shared by the solvers and file formats.
//!
//! All payoffs and probabilities parsed from documents are kept as exact
//! rationals; decimals like `0.25` convert without rounding. Solvers work
//! either in `f64` or directly on [`Q`] for the exact mode.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for payoffs, probabilities and exact solves.
pub type Q = BigRational;

/// Shorthand for `n/d`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for an integer rational.
pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Lossy conversion for reporting.
pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion from a short decimal/integer literal, e.g. `-1`, `0.25`.
/// Fractions (`1/3`) are assembled by the parser from two literals.
pub fn parse_decimal(text: &str) -> Option<Q> {
    let (sign, rest) = match text.strip_prefix('-') {
        Some(r) => (-1i64, r),
        None => (1, text),
    };
    if rest.is_empty() {
        return None;
    }
    let mut parts = rest.splitn(2, '.');
    let int_part = parts.next().unwrap_or("");
    let frac_part = parts.next();
    if int_part.is_empty() && frac_part.map_or(true, str::is_empty) {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut numer: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().ok()?
    };
    let mut denom = BigInt::one();
    if let Some(frac) = frac_part {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_numer: BigInt = frac.parse().ok()?;
        numer = numer * &scale + frac_numer;
        denom = scale;
    }
    Some(Q::new(numer * BigInt::from(sign), denom))
}

/// Canonical rendering: integers plainly, exact short decimals when the
/// denominator divides a power of ten, reduced fractions otherwise.
pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        return x.numer().to_string();
    }
    if let Some(digits) = decimal_exponent(x.denom()) {
        if digits <= 12 {
            let scale = BigInt::from(10u32).pow(digits);
            let scaled = (x.numer() * &scale) / x.denom();
            let neg = scaled.is_negative();
            let mut body = scaled.abs().to_string();
            let digits = digits as usize;
            if body.len() <= digits {
                body = format!("{}{}", "0".repeat(digits + 1 - body.len()), body);
            }
            let split = body.len() - digits;
            let mut out = String::new();
            if neg {
                out.push('-');
            }
            out.push_str(&body[..split]);
            out.push('.');
            out.push_str(&body[split..]);
            while out.ends_with('0') {
                out.pop();
            }
            if out.ends_with('.') {
                out.pop();
            }
            return out;
        }
    }
    format!("{}/{}", x.numer(), x.denom())
}

/// Smallest `k` with `denom | 10^k`, if the denominator is of the form
/// `2^a * 5^b`.
fn decimal_exponent(denom: &BigInt) -> Option<u32> {
    let mut d = denom.abs();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d.is_one() {
        Some(twos.max(fives))
    } else {
        None
    }
}


/// Best rational approximation with denominator at most `max_denom`,
/// by walking the continued-fraction convergents.
pub fn limit_denominator(x: &Q, max_denom: u64) -> Q {
    let cap = BigInt::from(max_denom);
    if x.denom() <= &cap {
        return x.clone();
    }
    let negative = x.is_negative();
    let mut n = x.numer().abs();
    let mut d = x.denom().clone();

    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    loop {
        let a = &n / &d;
        let q2 = &q0 + &a * &q1;
        if q2 > cap {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let r = &n - &a * &d;
        n = std::mem::replace(&mut d, r);
    }
    let k = (&cap - &q0) / &q1;
    let first = Q::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let second = Q::new(p1, q1);
    let target = Q::new(x.numer().abs(), x.denom().clone());
    let best = if (first.clone() - &target).abs() <= (second.clone() - &target).abs() {
        first
    } else {
        second
    };
    if negative {
        -best
    } else {
        best
    }
}

#[cfg(test)]
mod limit_tests {
    use super::*;

    #[test]
    fn recovers_simple_fractions_from_floats() {
        for (v, expected) in [
            (1.0f64 / 3.0, q(1, 3)),
            (2.0 / 3.0, q(2, 3)),
            (0.25, q(1, 4)),
            (-1.0 / 7.0, q(-1, 7)),
        ] {
            let exact = Q::from_float(v).unwrap();
            assert_eq!(limit_denominator(&exact, 1_000_000), expected);
        }
    }

    #[test]
    fn small_denominators_pass_through() {
        let x = q(22, 7);
        assert_eq!(limit_denominator(&x, 100), x);
    }
}
