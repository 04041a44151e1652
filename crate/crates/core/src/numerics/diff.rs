
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Central,
    /// Central differences at `h` and `h/2` combined to cancel the `h²` term.
    Richardson,
}

/// Default step: `max(1e-6, 1e-3·|x|)`.
pub fn fd_derivative<F>(f: F, x: f64, scheme: FdScheme) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    fd_derivative_with_step(f, x, scheme, 1e-6f64.max(1e-3 * x.abs()))
}

pub fn fd_derivative_with_step<F>(mut f: F, x: f64, scheme: FdScheme, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut central = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    match scheme {
        FdScheme::Central => central(h),
        FdScheme::Richardson => {
            let coarse = central(h)?;
            let fine = central(0.5 * h)?;
            Ok((4.0 * fine - coarse) / 3.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn sine_at_zero() {
        let d = fd_derivative(|x| Ok(x.sin()), 0.0, FdScheme::Richardson).unwrap();
        assert!((d - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cube_at_two() {
        let d = fd_derivative(|x| Ok(x * x * x), 2.0, FdScheme::Central).unwrap();
        assert!((d - 12.0).abs() < 1e-5);
        let d = fd_derivative(|x| Ok(x * x * x), 2.0, FdScheme::Richardson).unwrap();
        assert!((d - 12.0).abs() < 1e-6);
    }

    #[test]
    fn richardson_gap_is_second_order() {
        // exp at 1: central error ≈ e·h²/6
        let h = 1e-2;
        let c = fd_derivative_with_step(|x| Ok(x.exp()), 1.0, FdScheme::Central, h).unwrap();
        let r = fd_derivative_with_step(|x| Ok(x.exp()), 1.0, FdScheme::Richardson, h).unwrap();
        let gap = (c - r).abs();
        let predicted = core::f64::consts::E * h * h / 6.0;
        assert!((gap / predicted - 1.0).abs() < 0.01, "gap {gap} predicted {predicted}");
    }

    #[test]
    fn domain_errors_propagate() {
        let f = |x: f64| if x < 0.0 { Err(Error::StencilOutOfDomain { x }) } else { Ok(x.sqrt()) };
        assert!(fd_derivative(f, 0.0, FdScheme::Central).is_err());
    }
}
