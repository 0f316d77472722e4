//! Compensated accumulation of double-double terms with a running rounding bound.

use super::dd::{Dd, DD_EPS};

/// Relative error of one accurate double-double addition, padded.
const ADD_REL: f64 = 4.0 * DD_EPS;

/// Accumulates `Dd` terms and tracks an upper bound on the accumulated rounding error.
///
/// Terms whose magnitude is far below the running total can be pushed through
/// [`CompensatedSum::add_small`], which keeps them in a separate error-free `f64`
/// accumulator so they cost one `two_sum` each.
#[derive(Clone, Debug, Default)]
pub struct CompensatedSum {
    sum: Dd,
    small_hi: f64,
    small_lo: f64,
    err: f64,
    terms: u64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `x`, whose own value is known to within `x_err` (absolute).
    pub fn add(&mut self, x: Dd, x_err: f64) {
        self.sum += x;
        self.err += x_err + ADD_REL * self.sum.abs().to_f64();
        self.terms += 1;
    }

    /// Adds an `f64` term known to within `x_err` (absolute).
    pub fn add_small(&mut self, x: f64, x_err: f64) {
        let s = self.small_hi + x;
        let bb = s - self.small_hi;
        let e = (self.small_hi - (s - bb)) + (x - bb);
        self.small_hi = s;
        self.small_lo += e;
        // the low word itself is rounded once per addition
        self.err += x_err + f64::EPSILON * self.small_lo.abs();
        self.terms += 1;
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    /// Final value and an upper bound on its absolute rounding error.
    pub fn finish(&self) -> (Dd, f64) {
        let small = Dd::from_parts(self.small_hi, self.small_lo);
        let total = self.sum + small;
        let err = self.err + ADD_REL * total.abs().to_f64();
        (total, err)
    }

    pub fn value(&self) -> Dd {
        self.finish().0
    }
}

impl Extend<Dd> for CompensatedSum {
    fn extend<I: IntoIterator<Item = Dd>>(&mut self, iter: I) {
        for x in iter {
            self.add(x, 0.0);
        }
    }
}

impl FromIterator<Dd> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Dd>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        s.extend(iter);
        s
    }
}
