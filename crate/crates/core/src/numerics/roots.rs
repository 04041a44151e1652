
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Brent's method on a sign-changing bracket.
///
/// The returned point always lies inside `[a, b]`; iteration stops once the
/// bracket containing the root is narrower than `tol`.
pub fn find_root_bracketed<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(Error::InvalidBracket { a, b, fa, fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Ok(b)
}

/// Real roots of `c3 x³ + c2 x² + c1 x + c0` (with `c3 ≠ 0`), ascending and
/// Newton-polished. Returns the roots buffer and how many entries are valid.
pub fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> ([f64; 3], usize) {
    let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let mut roots = [0.0; 3];
    let n;
    if disc < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        for (k, r) in roots.iter_mut().enumerate() {
            *r = m * (phi - 2.0 * core::f64::consts::PI * k as f64 / 3.0).cos() + shift;
        }
        n = 3;
    } else {
        let sq = disc.sqrt();
        let u = (-0.5 * q + sq).cbrt();
        let v = (-0.5 * q - sq).cbrt();
        roots[0] = u + v + shift;
        if p == 0.0 && q == 0.0 {
            roots[1] = roots[0];
            roots[2] = roots[0];
            n = 3;
        } else if disc == 0.0 {
            roots[1] = -0.5 * (u + v) + shift;
            n = 2;
        } else {
            n = 1;
        }
    }
    let eval = |x: f64| ((c3 * x + c2) * x + c1) * x + c0;
    let deriv = |x: f64| (3.0 * c3 * x + 2.0 * c2) * x + c1;
    for r in roots.iter_mut().take(n) {
        for _ in 0..4 {
            let d = deriv(*r);
            if d == 0.0 {
                break;
            }
            let step = eval(*r) / d;
            let next = *r - step;
            if !next.is_finite() || eval(next).abs() > eval(*r).abs() {
                break;
            }
            *r = next;
        }
    }
    roots[..n].sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    (roots, n)
}
