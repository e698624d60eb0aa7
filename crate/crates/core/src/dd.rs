//! Double-double arithmetic, used by the reference linear solve of the
//! doublet relations.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn scale(self, s: f64) -> Self {
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    /// `e^x - 1` for `|x| <= 1/1024` by Taylor series.
    fn expm1_small(x: Dd) -> Dd {
        let mut term = x;
        let mut sum = x;
        let mut k = 2.0;
        while term.hi.abs() > 1e-36 * sum.hi.abs().max(1e-300) {
            term = term * x / Dd::from_f64(k);
            sum = sum + term;
            k += 1.0;
        }
        sum
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * Dd::from_f64(k);
        // e^r = (1 + t)^(2^10) with t = expm1(r / 2^10)
        let mut t = Self::expm1_small(r.scale(1.0 / 1024.0));
        for _ in 0..10 {
            t = t.scale(2.0) + t * t;
        }
        (t + Dd::ONE).scale(2f64.powi(k as i32))
    }

    /// `(sinh x, cosh x)`.
    pub fn sinh_cosh(self) -> (Dd, Dd) {
        if self.hi.abs() < 0.5 {
            let x2 = self * self;
            let mut term = self;
            let mut sinh = self;
            let mut k = 2.0;
            while term.hi.abs() > 1e-36 * sinh.hi.abs().max(1e-300) {
                term = term * x2 / Dd::from_f64(k * (k + 1.0));
                sinh = sinh + term;
                k += 2.0;
            }
            let cosh = (Dd::ONE + sinh * sinh).sqrt();
            return (sinh, cosh);
        }
        let e = self.exp();
        let inv = Dd::ONE / e;
        ((e - inv).scale(0.5), (e + inv).scale(0.5))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::from_f64(self.hi.sqrt());
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let corr = ((self.hi - p) - e + self.lo) / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, corr);
        Dd { hi, lo }
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
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}
