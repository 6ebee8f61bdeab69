use crate::error::{Error, Result};

/// Outcome of a bracketing root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracketed {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Bisection on a sign-changing bracket until the bracket is at most `tol`
/// wide. `root` is the bracket midpoint.
pub fn bisect_root<G>(g: G, lo: f64, hi: f64, tol: f64) -> Result<Bracketed>
where
    G: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if !(g_lo.is_finite() && g_hi.is_finite()) || g_lo * g_hi > 0.0 {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    if g_lo == 0.0 {
        return Ok(Bracketed {
            root: lo,
            lo,
            hi: lo,
            iterations: 0,
        });
    }
    if g_hi == 0.0 {
        return Ok(Bracketed {
            root: hi,
            lo: hi,
            hi,
            iterations: 0,
        });
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        iterations += 1;
        if g_mid == 0.0 {
            return Ok(Bracketed {
                root: mid,
                lo: mid,
                hi: mid,
                iterations,
            });
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracketed {
        root: 0.5 * (lo + hi),
        lo,
        hi,
        iterations,
    })
}

/// Outcome of a scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub arg: f64,
    pub value: f64,
    pub iterations: usize,
    /// Final search bracket, widened to include `arg` when a boundary wins.
    pub lo: f64,
    pub hi: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimizer of a unimodal `g` on `[lo, hi]`.
/// The endpoints are compared against the interior result, so monotone
/// objectives return the better boundary.
pub fn golden_minimize<G>(g: G, lo: f64, hi: f64, tol: f64) -> Result<Minimum>
where
    G: Fn(f64) -> f64,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::domain(
            "interval",
            format!("need lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"),
        ));
    }
    let eval = |x: f64| -> Result<f64> {
        let v = g(x);
        if v.is_nan() {
            Err(Error::Evaluation { at: x, value: v })
        } else {
            Ok(v)
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = Minimum {
        arg: mid,
        value: eval(mid)?,
        iterations,
        lo: a,
        hi: b,
    };
    for x in [lo, hi] {
        let v = eval(x)?;
        if v < best.value {
            best = Minimum {
                arg: x,
                value: v,
                iterations,
                lo: a.min(x),
                hi: b.max(x),
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let r = bisect_root(|x| x - 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.root - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_two() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-10).unwrap();
        assert!((r.root - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn tolerance_honored() {
        for tol in [1e-3, 1e-7, 1e-12] {
            let r = bisect_root(|x| x.cos(), 0.0, 3.0, tol).unwrap();
            assert!(r.hi - r.lo <= tol);
            assert!(r.lo <= r.root && r.root <= r.hi);
            assert!(r.lo <= std::f64::consts::FRAC_PI_2 && std::f64::consts::FRAC_PI_2 <= r.hi);
        }
    }

    #[test]
    fn missing_sign_change() {
        assert!(matches!(
            bisect_root(|x| x * x + 1.0, -1.0, 1.0, 1e-6),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn golden_quadratic() {
        let m = golden_minimize(|x| (x - 2.0) * (x - 2.0), 0.0, 5.0, 1e-8).unwrap();
        assert!((m.arg - 2.0).abs() <= 1e-8);
        let m = golden_minimize(|x| 3.0 * (x - 0.3) * (x - 0.3), -1.0, 1.0, 1e-9).unwrap();
        assert!((m.arg - 0.3).abs() <= 1e-9);
        assert!(m.value < 1e-17);
    }

    #[test]
    fn golden_monotone_hits_boundary() {
        let m = golden_minimize(|x| x, 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(m.arg, 0.0);
        let m = golden_minimize(|x| -x, 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(m.arg, 1.0);
    }

    #[test]
    fn golden_rejects_empty_interval() {
        assert!(golden_minimize(|x| x, 1.0, 1.0, 1e-3).is_err());
    }
}
