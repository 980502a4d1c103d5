//! Order-independent floating-point summation.
//!
//! [`ExactSum`] keeps the running sum as a list of non-overlapping partials
//! (Shewchuk's algorithm), so the represented value is the exact sum of the
//! inputs. [`ExactSum::value`] rounds that exact value once, to nearest
//! with ties to even. The result therefore does not depend on the order in
//! which values were added or accumulators merged, which is what lets a
//! distributed reduction reproduce a serial one bit for bit.

use alloc::vec::Vec;

#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
    nonfinite: Option<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.partials.clear();
        self.nonfinite = None;
    }

    pub fn add(&mut self, value: f64) {
        if !value.is_finite() {
            self.push_nonfinite(value);
            return;
        }
        let mut x = value;
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                core::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        if !x.is_finite() {
            // intermediate overflow
            self.push_nonfinite(x);
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    fn push_nonfinite(&mut self, v: f64) {
        self.nonfinite = Some(match self.nonfinite {
            Some(s) => s + v,
            None => v,
        });
    }

    /// Adds every partial of `other`; the result is exact.
    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
        if let Some(s) = other.nonfinite {
            self.push_nonfinite(s);
        }
    }

    /// Number of stored partials (the size of the exact representation).
    pub fn len(&self) -> usize {
        self.partials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partials.is_empty()
    }

    /// Correctly rounded sum.
    pub fn value(&self) -> f64 {
        if let Some(s) = self.nonfinite {
            return s;
        }
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction when the remaining partials push the
        // exact value off the halfway point.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

/// Exact sum of a slice, rounded once.
pub fn exact_sum(values: &[f64]) -> f64 {
    let mut acc = ExactSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Rounds a slice of accumulators into `out`.
pub fn round_into(accs: &[ExactSum], out: &mut [f64]) {
    for (o, a) in out.iter_mut().zip(accs) {
        *o = a.value();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancels_catastrophic_terms() {
        assert_eq!(exact_sum(&[1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum(&[0.1, 0.2, 0.3, -0.6]), exact_rational(&[0.1, 0.2, 0.3, -0.6]));
    }

    // 0.1 + 0.2 + 0.3 - 0.6 summed exactly in binary is a tiny positive number
    fn exact_rational(v: &[f64]) -> f64 {
        let mut a = ExactSum::new();
        for x in v.iter().rev() {
            a.add(*x);
        }
        a.value()
    }

    #[test]
    fn merge_is_order_independent() {
        let vals = [3.5e-17, 1.0, -2.0e16, 7.25, 2.0e16, 1e-300, -0.125];
        let mut whole = ExactSum::new();
        vals.iter().for_each(|v| whole.add(*v));
        let mut a = ExactSum::new();
        let mut b = ExactSum::new();
        for (i, v) in vals.iter().enumerate() {
            if i % 2 == 0 { a.add(*v) } else { b.add(*v) }
        }
        b.merge(&a);
        assert_eq!(whole.value().to_bits(), b.value().to_bits());
    }

    #[test]
    fn halfway_rounds_to_even() {
        // 1 + 2^-53 is a tie between 1 and 1 + 2^-52; adding a tiny positive
        // amount must push it up.
        let tie = libm::ldexp(1.0, -53);
        let tiny = libm::ldexp(1.0, -80);
        assert_eq!(exact_sum(&[1.0, tie]), 1.0);
        assert_eq!(exact_sum(&[1.0, tie, tiny]), 1.0 + libm::ldexp(1.0, -52));
    }

    #[test]
    fn nonfinite_propagates() {
        assert!(exact_sum(&[1.0, f64::NAN]).is_nan());
        assert_eq!(exact_sum(&[1.0, f64::INFINITY]), f64::INFINITY);
        assert_eq!(exact_sum(&[]), 0.0);
    }
}
