//! Real branches of the Lambert W function.
//!
//! `W(a)` solves `w * exp(w) = a`. For real arguments two branches exist:
//! the principal branch `W0` on `[-1/e, inf)` with `w >= -1`, and the lower
//! branch `W-1` on `[-1/e, 0)` with `w <= -1`. Both meet at the branch point
//! `a = -1/e`, `w = -1`.
//!
//! Evaluation uses a branch-specific initial guess refined by Halley's
//! iteration.

use std::f64::consts::E;

use thiserror::Error;

/// `-1/e`, the common left end of both real branches.
pub const BRANCH_POINT: f64 = -1.0 / E;

const MAX_ITERATIONS: usize = 50;
const STEP_TOLERANCE: f64 = 1e-15;
/// Arguments this far below `-1/e` are rounding noise from the caller and are
/// snapped to the branch point.
const BRANCH_POINT_SLACK: f64 = 4.0 * f64::EPSILON;
/// `W-1` diverges to `-inf` at `0-`; arguments closer than this are rejected.
const MINUS1_POLE_GUARD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `W0`, the branch with `w >= -1`.
    Principal,
    /// `W-1`, the branch with `w <= -1`.
    Minus1,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LambertError {
    #[error("argument {arg} is outside the domain of the {branch:?} branch")]
    Domain { branch: Branch, arg: f64 },
    /// The lower branch tends to `-inf` as the argument approaches `0-`.
    #[error("argument {arg} is too close to the pole of the Minus1 branch")]
    Pole { arg: f64 },
}

/// Evaluates `W_branch(a)`.
pub fn lambert_w(branch: Branch, a: f64) -> Result<f64, LambertError> {
    if a.is_nan() {
        return Err(LambertError::Domain { branch, arg: a });
    }
    // Distance to the branch point in the natural variable `e*a + 1`.
    let q = E.mul_add(a, 1.0);
    if q < -BRANCH_POINT_SLACK {
        return Err(LambertError::Domain { branch, arg: a });
    }
    if q <= 0.0 || a == BRANCH_POINT {
        return Ok(-1.0);
    }
    match branch {
        Branch::Principal => {
            if a == 0.0 {
                return Ok(0.0);
            }
            if a.is_infinite() {
                return Ok(f64::INFINITY);
            }
            Ok(halley(a, principal_guess(a, q), Branch::Principal))
        }
        Branch::Minus1 => {
            if a >= 0.0 {
                return Err(LambertError::Domain { branch, arg: a });
            }
            if a > -MINUS1_POLE_GUARD {
                return Err(LambertError::Pole { arg: a });
            }
            Ok(halley(a, minus1_guess(a, q), Branch::Minus1))
        }
    }
}

/// Series of `W` around the branch point in `p = sqrt(2 (e a + 1))`.
/// The sign of `p` selects the branch.
fn branch_point_series(p: f64) -> f64 {
    -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
}

fn principal_guess(a: f64, q: f64) -> f64 {
    if a < -0.25 {
        branch_point_series((2.0 * q).sqrt())
    } else if a < 3.0 {
        // Pade-type approximant, adequate on the moderate range.
        let l = a.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    } else {
        let l1 = a.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

fn minus1_guess(a: f64, q: f64) -> f64 {
    if a < -0.25 {
        branch_point_series(-(2.0 * q).sqrt())
    } else {
        let l1 = (-a).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    }
}

fn halley(a: f64, mut w: f64, branch: Branch) -> f64 {
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - a;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        let mut next = w - step;
        // Keep the iterate on its own branch.
        match branch {
            Branch::Principal if next < -1.0 => next = 0.5 * (w - 1.0),
            Branch::Minus1 if next > -1.0 => next = 0.5 * (w - 1.0),
            _ => {}
        }
        let converged = (next - w).abs() <= STEP_TOLERANCE * next.abs().max(1.0);
        w = next;
        if converged {
            break;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(w: f64, a: f64) -> f64 {
        (w * w.exp() - a).abs()
    }

    /// Independent oracle: plain bisection on `w e^w - a` over `[-50, -1]`,
    /// where the map is monotone decreasing.
    fn bisect_minus1(a: f64) -> f64 {
        let (mut lo, mut hi) = (-50.0_f64, -1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn branch_point_is_exact() {
        assert_eq!(lambert_w(Branch::Minus1, BRANCH_POINT).unwrap(), -1.0);
        assert_eq!(lambert_w(Branch::Principal, BRANCH_POINT).unwrap(), -1.0);
    }

    #[test]
    fn principal_at_zero() {
        assert_eq!(lambert_w(Branch::Principal, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn minus1_matches_bisection() {
        let a = -0.35968;
        let w = lambert_w(Branch::Minus1, a).unwrap();
        let oracle = bisect_minus1(a);
        assert!((w - oracle).abs() < 1e-9, "{w} vs {oracle}");
        assert!((w - (-1.228)).abs() < 1e-3);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            lambert_w(Branch::Principal, -0.5),
            Err(LambertError::Domain { .. })
        ));
        assert!(matches!(
            lambert_w(Branch::Minus1, 0.1),
            Err(LambertError::Domain { .. })
        ));
        assert!(matches!(
            lambert_w(Branch::Minus1, 0.0),
            Err(LambertError::Domain { .. })
        ));
        assert!(matches!(
            lambert_w(Branch::Minus1, -1e-310),
            Err(LambertError::Pole { .. })
        ));
        assert!(lambert_w(Branch::Minus1, f64::NAN).is_err());
    }

    #[test]
    fn known_values() {
        // W0(1) is the omega constant.
        let omega = lambert_w(Branch::Principal, 1.0).unwrap();
        assert!((omega - 0.567_143_290_409_783_8).abs() < 1e-15);
        let w = lambert_w(Branch::Principal, E).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        let w = lambert_w(Branch::Minus1, -2.0 * (-2.0_f64).exp()).unwrap();
        assert!((w + 2.0).abs() < 1e-13);
    }

    #[test]
    fn residuals_on_wide_ranges() {
        for k in 0..=600 {
            let a = 10f64.powf(-300.0 + k as f64);
            let w = lambert_w(Branch::Principal, a).unwrap();
            assert!(residual(w, a) <= 1e-12 * a.max(1.0), "a={a} w={w}");
            if a < 0.36 {
                let w = lambert_w(Branch::Minus1, -a).unwrap();
                assert!(w <= -1.0);
                assert!(residual(w, -a) <= 1e-12, "a={} w={w}", -a);
            }
        }
    }

    #[test]
    fn minus1_strictly_decreasing() {
        let n = 5000;
        let mut prev = f64::INFINITY;
        for k in 1..n {
            let a = BRANCH_POINT + (-BRANCH_POINT) * k as f64 / n as f64;
            let w = lambert_w(Branch::Minus1, a).unwrap();
            assert!(w < prev, "not decreasing at a={a}");
            prev = w;
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn principal_above_minus1(t in 1e-12f64..1.0) {
                let a = BRANCH_POINT * t;
                let w0 = lambert_w(Branch::Principal, a).unwrap();
                let wm = lambert_w(Branch::Minus1, a).unwrap();
                prop_assert!(w0 > wm);
                prop_assert!(w0 >= -1.0 && wm <= -1.0);
            }

            #[test]
            fn principal_round_trip(a in -0.367_879f64..1e6) {
                let w = lambert_w(Branch::Principal, a).unwrap();
                prop_assert!(residual(w, a) <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
