//! Double-double arithmetic.
//!
//! A [`Dd`] is an unevaluated sum `hi + lo` of two `f64` with `|lo| <= ulp(hi)/2`,
//! giving roughly 106 bits (31-32 significant decimal digits). All operations are
//! built from the error-free transformations `two_sum` and `two_prod`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

/// Significant decimal digits carried by a [`Dd`].
pub const DD_DIGITS: u32 = 31;

/// Unit roundoff of double-double arithmetic (2^-104).
pub const DD_EPS: f64 = 4.930380657631324e-32;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

// 1/k! for k = 3..=12
const INV_FACT: [Dd; 10] = [
    Dd::from_parts_unchecked(1.666_666_666_666_666_6e-1, 9.251_858_538_542_97e-18),
    Dd::from_parts_unchecked(4.166_666_666_666_666_4e-2, 2.312_964_634_635_743e-18),
    Dd::from_parts_unchecked(8.333_333_333_333_333e-3, 1.156_482_317_317_871_6e-19),
    Dd::from_parts_unchecked(1.388_888_888_888_889e-3, -5.300_543_954_373_577e-20),
    Dd::from_parts_unchecked(1.984_126_984_126_984e-4, 1.720_955_829_342_070_5e-22),
    Dd::from_parts_unchecked(2.480_158_730_158_73e-5, 2.151_194_786_677_588e-23),
    Dd::from_parts_unchecked(2.755_731_922_398_589_3e-6, -1.858_393_274_046_472e-22),
    Dd::from_parts_unchecked(2.755_731_922_398_589e-7, 2.376_771_462_225_029_4e-23),
    Dd::from_parts_unchecked(2.505_210_838_544_172e-8, -1.448_814_070_935_912e-24),
    Dd::from_parts_unchecked(2.087_675_698_786_81e-9, -1.207_345_059_113_26e-25),
];

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };
    pub const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    const fn from_parts_unchecked(hi: f64, lo: f64) -> Dd {
        Dd { hi, lo }
    }

    /// Builds a normalized value from an arbitrary pair.
    pub fn from_parts(hi: f64, lo: f64) -> Dd {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    pub fn is_sign_negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }

    pub fn abs(self) -> Dd {
        if self.is_sign_negative() {
            -self
        } else {
            self
        }
    }

    pub fn max(self, other: Dd) -> Dd {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Dd) -> Dd {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, mut e) = two_prod(self.hi, b);
        e += self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn add_f64(self, b: f64) -> Dd {
        let (s, mut e) = two_sum(self.hi, b);
        e += self.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    /// Exact scaling by a power of two.
    pub fn ldexp(self, k: i32) -> Dd {
        let f = 2f64.powi(k);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn sqr(self) -> Dd {
        self * self
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn powi(self, n: i32) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base.sqr();
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    pub fn floor(self) -> Dd {
        let hi = self.hi.floor();
        if hi == self.hi {
            Dd::from_parts(hi, self.lo.floor())
        } else {
            Dd { hi, lo: 0.0 }
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let y = Dd::from(self.hi.sqrt());
        // one Newton step doubles the number of correct bits
        y + (self - y.sqr()) / y.mul_f64(2.0)
    }

    /// `exp(self)` to about 2^-103 relative accuracy.
    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd {
                hi: f64::INFINITY,
                lo: 0.0,
            };
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        if self.hi == 0.0 {
            return Dd::ONE;
        }
        let k = (self.hi / Dd::LN2.hi + 0.5).floor();
        let r = (self - Dd::LN2.mul_f64(k)).ldexp(-10);
        // expm1(r) by Taylor series, |r| < 3.4e-4
        let p = r.sqr();
        let mut s = r + p.mul_f64(0.5);
        let mut term = p * r;
        for inv in INV_FACT.iter().take(7) {
            s += term * *inv;
            term *= r;
        }
        // expm1(2x) = 2 expm1(x) + expm1(x)^2
        for _ in 0..10 {
            s = s.mul_f64(2.0) + s.sqr();
        }
        let e = s + Dd::ONE;
        // two-step scaling keeps subnormal results away from overflow in 2^k
        let k = k as i32;
        if k < -1000 {
            e.ldexp(k + 600).ldexp(-600)
        } else {
            e.ldexp(k)
        }
    }

    /// Natural logarithm by Newton iteration on `exp`.
    pub fn ln(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd {
                hi: f64::NAN,
                lo: 0.0,
            };
        }
        let mut x = Dd::from(self.hi.ln());
        for _ in 0..2 {
            x = x + self * (-x).exp() - Dd::ONE;
        }
        x
    }

    /// Decimal rendering with `digits` significant digits in scientific notation.
    pub fn to_sci_string(self, digits: usize) -> String {
        let digits = digits.clamp(1, 34);
        if self.hi == 0.0 {
            return "0".to_string();
        }
        if !self.is_finite() {
            return format!("{}", self.hi);
        }
        let neg = self.is_sign_negative();
        let mut x = self.abs();
        let mut e = x.hi.log10().floor() as i32;
        x = scale_pow10(x, -e);
        if x < Dd::ONE {
            x = x.mul_f64(10.0);
            e -= 1;
        } else if x >= Dd::from(10.0) {
            x = x / Dd::from(10.0);
            e += 1;
        }
        let mut ds: Vec<u8> = Vec::with_capacity(digits + 1);
        for _ in 0..=digits {
            let d = x.floor();
            let di = d.to_f64().clamp(0.0, 9.0) as u8;
            ds.push(di);
            x = (x - Dd::from(di as f64)).mul_f64(10.0);
        }
        // round half up on the guard digit
        let guard = ds.pop().unwrap_or(0);
        if guard >= 5 {
            let mut i = ds.len();
            loop {
                if i == 0 {
                    ds.insert(0, 1);
                    e += 1;
                    ds.pop();
                    break;
                }
                i -= 1;
                if ds[i] == 9 {
                    ds[i] = 0;
                } else {
                    ds[i] += 1;
                    break;
                }
            }
        }
        while ds.len() > 1 && *ds.last().unwrap() == 0 {
            ds.pop();
        }
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push((b'0' + ds[0]) as char);
        if ds.len() > 1 {
            out.push('.');
            for d in &ds[1..] {
                out.push((b'0' + d) as char);
            }
        }
        if e != 0 {
            out.push('e');
            out.push_str(&e.to_string());
        }
        out
    }
}

fn scale_pow10(x: Dd, e: i32) -> Dd {
    if e == 0 {
        x
    } else if e > 0 {
        x * Dd::from(10.0).powi(e)
    } else {
        x / Dd::from(10.0).powi(-e)
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }
}

impl From<i64> for Dd {
    fn from(v: i64) -> Dd {
        let hi = v as f64;
        let lo = (v - hi as i64) as f64;
        Dd::from_parts(hi, lo)
    }
}

impl From<u64> for Dd {
    fn from(v: u64) -> Dd {
        let hi = v as f64;
        let lo = (v as i128 - hi as i128) as f64;
        Dd::from_parts(hi, lo)
    }
}

impl From<i128> for Dd {
    fn from(v: i128) -> Dd {
        let hi = v as f64;
        let rest = v - hi as i128;
        Dd::from_parts(hi, rest as f64)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, mut e) = two_prod(self.hi, b.hi);
        e += self.hi * b.lo + self.lo * b.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add_f64(q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(32);
        f.write_str(&self.to_sci_string(digits))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDdError(pub String);

impl fmt::Display for ParseDdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid decimal literal `{}`", self.0)
    }
}

impl std::error::Error for ParseDdError {}

impl FromStr for Dd {
    type Err = ParseDdError;

    /// Parses `[-+]digits[.digits][e[-+]digits]`; digits beyond double-double
    /// precision are rounded.
    fn from_str(s: &str) -> Result<Dd, ParseDdError> {
        let err = || ParseDdError(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (mant, exp) = match body.find(['e', 'E']) {
            Some(i) => (
                &body[..i],
                body[i + 1..].parse::<i32>().map_err(|_| err())?,
            ),
            None => (body, 0),
        };
        let mut acc = Dd::ZERO;
        let mut frac_digits = 0i32;
        let mut seen_dot = false;
        let mut any = false;
        for c in mant.chars() {
            match c {
                '0'..='9' => {
                    acc = acc.mul_f64(10.0).add_f64((c as u8 - b'0') as f64);
                    if seen_dot {
                        frac_digits += 1;
                    }
                    any = true;
                }
                '.' if !seen_dot => seen_dot = true,
                _ => return Err(err()),
            }
        }
        if !any {
            return Err(err());
        }
        let v = scale_pow10(acc, exp - frac_digits);
        Ok(if neg { -v } else { v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: Dd, rel: f64) -> bool {
        let d = (a - b).abs().to_f64();
        d <= rel * b.abs().to_f64().max(1e-300)
    }

    #[test]
    fn exp_matches_reference_digits() {
        // references computed with mpmath at 40 digits
        let cases = [
            ("0.5", "1.648721270700128146848650787814163571654"),
            ("-1", "0.3678794411714423215955237701614608674458"),
            ("-3.75", "0.02351774585600910823615118510043293870"),
            ("-25", "1.388794386496402059466176374608685691e-11"),
            ("-69", "1.080639277707278494536649616247343147e-30"),
            ("12.25", "208981.2888697129615116957108891273"),
        ];
        for (x, want) in cases {
            let got = x.parse::<Dd>().unwrap().exp();
            let want: Dd = want.parse().unwrap();
            assert!(close(got, want, 1e-30), "exp({x}) = {got} want {want}");
        }
    }

    #[test]
    fn pi_and_sqrt() {
        let pi: Dd = "3.14159265358979323846264338327950288".parse().unwrap();
        assert!(close(Dd::PI, pi, 1e-32));
        let two = Dd::from(2.0);
        let r = two.sqrt();
        assert!(close(r * r, two, 1e-31));
    }

    #[test]
    fn ln_inverts_exp() {
        for x in [0.1, 1.0, 7.5, 123.0] {
            let v = Dd::from(x);
            assert!(close(v.ln().exp(), v, 1e-30));
        }
    }

    #[test]
    fn formatting_round_trips() {
        for s in ["1", "-2.5", "12.566370614359172953850573533118", "1e-30", "6.02214076e23"] {
            let v: Dd = s.parse().unwrap();
            let back: Dd = v.to_sci_string(32).parse().unwrap();
            assert!(close(back, v, 1e-31), "{s} -> {}", v.to_sci_string(32));
        }
        assert_eq!(Dd::from(4.0).to_string(), "4");
        assert_eq!(Dd::from(-0.25).to_string(), "-2.5e-1");
    }

    #[test]
    fn floor_handles_low_word() {
        let x = Dd::from_parts(3.0, -1e-20);
        assert_eq!(x.floor().to_f64(), 2.0);
        assert_eq!(Dd::from(2.5).floor().to_f64(), 2.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!("1.2.3".parse::<Dd>().is_err());
        assert!("".parse::<Dd>().is_err());
        assert!("abc".parse::<Dd>().is_err());
    }
}
