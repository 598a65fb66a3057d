//! Golden-section search for unimodal functions of one variable.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizer of `f` on [a, b] to bracket width `tol`. Returns `(x, f(x))`
/// for the best point evaluated. Errors from `f` abort the search.
pub fn golden_section_min<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(f64, f64), E> {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    if hi - lo <= tol {
        let x = 0.5 * (lo + hi);
        return Ok((x, f(x)?));
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Maximizer of `f` on [a, b]; see [`golden_section_min`].
pub fn golden_section_max<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(f64, f64), E> {
    let (x, v) = golden_section_min(|x| f(x).map(|v| -v), a, b, tol)?;
    Ok((x, -v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn quadratic_argmax() {
        let f = |x: f64| Ok::<_, Infallible>(1.0 - (x + 4.1) * (x + 4.1));
        let (x, v) = golden_section_max(f, -5.0, -3.0, 1e-8).unwrap();
        assert!((x + 4.1).abs() < 1e-8);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_interval() {
        let (x, _) = golden_section_min(|x| Ok::<_, Infallible>(x * x), 2.0, 2.0, 1e-3).unwrap();
        assert_eq!(x, 2.0);
    }

    #[test]
    fn errors_propagate() {
        let r = golden_section_min(|x| if x > 0.5 { Err("bad") } else { Ok(x) }, 0.0, 1.0, 1e-3);
        assert_eq!(r, Err("bad"));
    }
}
