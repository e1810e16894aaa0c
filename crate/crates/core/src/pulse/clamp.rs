//! The saturating map Φ that bounds the control amplitude.
//!
//! Φ is the identity on [0, ¾κ], equal to κ on [5/4 κ, ∞), and a cubic Hermite
//! segment in between matching values (¾κ, κ) and slopes (1, 0). It is
//! extended to negative arguments as an odd function, so it is C¹ everywhere
//! and |Φ(x)| ≤ κ.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clamp {
    kappa: f64,
}

impl Clamp {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("clamp level must be positive, got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn knee(&self) -> f64 {
        0.75 * self.kappa
    }

    pub fn saturation(&self) -> f64 {
        1.25 * self.kappa
    }

    pub fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        let y = if a <= self.knee() {
            a
        } else if a >= self.saturation() {
            self.kappa
        } else {
            let (h00, h10, h01, _) = hermite_basis(self.local(a));
            let h = 0.5 * self.kappa;
            h00 * self.knee() + h10 * h + h01 * self.kappa
        };
        y.copysign(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= self.knee() {
            1.0
        } else if a >= self.saturation() {
            0.0
        } else {
            let t = self.local(a);
            let h = 0.5 * self.kappa;
            let d00 = 6.0 * t * t - 6.0 * t;
            let d10 = 3.0 * t * t - 4.0 * t + 1.0;
            let d01 = -d00;
            (d00 * self.knee() + d10 * h + d01 * self.kappa) / h
        }
    }

    fn local(&self, a: f64) -> f64 {
        (a - self.knee()) / (0.5 * self.kappa)
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

pub fn clamp_phi(x: f64, kappa: f64) -> Result<f64> {
    Ok(Clamp::new(kappa)?.value(x))
}

pub fn clamp_phi_prime(x: f64, kappa: f64) -> Result<f64> {
    Ok(Clamp::new(kappa)?.derivative(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const KAPPA: f64 = 10.0;

    #[test]
    fn identity_branch_and_saturation() {
        assert_eq!(clamp_phi(0.5 * KAPPA, KAPPA).unwrap(), 0.5 * KAPPA);
        assert_eq!(clamp_phi(2.0 * KAPPA, KAPPA).unwrap(), KAPPA);
        assert_eq!(clamp_phi(-2.0 * KAPPA, KAPPA).unwrap(), -KAPPA);
        assert_eq!(clamp_phi(0.0, KAPPA).unwrap(), 0.0);
    }

    #[test]
    fn spline_interior_value() {
        let v = clamp_phi(KAPPA, KAPPA).unwrap();
        assert!(v > 0.75 * KAPPA && v < KAPPA);
        // cubic Hermite at the midpoint: (1/2)(3/4) + (1/8)(1/2) + (1/2)(1) = 15/16
        assert!((v - 0.9375 * KAPPA).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_positive_kappa() {
        assert!(clamp_phi(1.0, 0.0).is_err());
        assert!(clamp_phi_prime(1.0, -1.0).is_err());
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-6;
        for &x in &[KAPPA, 0.8 * KAPPA, 1.2 * KAPPA, -0.9 * KAPPA, 0.3 * KAPPA, 2.0 * KAPPA] {
            let fd = (clamp_phi(x + h, KAPPA).unwrap() - clamp_phi(x - h, KAPPA).unwrap()) / (2.0 * h);
            let an = clamp_phi_prime(x, KAPPA).unwrap();
            assert!((fd - an).abs() < 1e-8, "x={x}: fd={fd} an={an}");
        }
    }

    #[test]
    fn continuity_at_knots() {
        let c = Clamp::new(KAPPA).unwrap();
        for &x in &[c.knee(), c.saturation()] {
            let e = 1e-9;
            assert!((c.value(x + e) - c.value(x - e)).abs() < 1e-8);
            assert!((c.derivative(x + e) - c.derivative(x - e)).abs() < 1e-7);
        }
    }

    proptest! {
        #[test]
        fn odd_bounded_monotone(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let c = Clamp::new(KAPPA).unwrap();
            prop_assert_eq!(c.value(-x), -c.value(x));
            prop_assert!(c.value(x).abs() <= KAPPA + 1e-12);
            if x <= y {
                prop_assert!(c.value(x) <= c.value(y) + 1e-15);
            }
            prop_assert!(c.derivative(x) >= 0.0 && c.derivative(x) <= 1.0 + 1e-15);
        }
    }
}
