//! Floating-point root finding for specialized fiber polynomials.
//!
//! Polynomials are coefficient slices, lowest degree first. Roots come back
//! polished by Newton's method and in canonical order, so the index of a
//! root in a fiber is a reproducible sheet label.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactpoly::BiPoly;

/// Residual tolerance relative to [`scale`].
pub const TOL_RES: f64 = 1e-10;
/// Minimum separation of distinct roots; closer values are treated as a
/// (near-)multiple root, i.e. a point at or near the branch locus.
pub const SEP_MIN: f64 = 1e-8;
pub const MAX_ITER: usize = 500;
pub const MAX_NEWTON: usize = 50;
/// Seed used by [`all_roots`].
pub const DEFAULT_SEED: u64 = 0;

const ROTATION: f64 = 0.730_296_743_340_221_5; // 1/sqrt(1.875), irrational

/// `max(1, Σ|c_k w^k|)`, the magnitude against which residuals are judged.
pub fn scale(q: &[Complex64], w: Complex64) -> f64 {
    let wn = w.norm();
    let mut power = 1.0;
    let mut acc = 0.0;
    for c in q {
        acc += c.norm() * power;
        power *= wn;
    }
    acc.max(1.0)
}

/// Value and derivative by Horner's rule.
pub fn eval_with_derivative(q: &[Complex64], w: Complex64) -> (Complex64, Complex64) {
    let mut f = Complex64::new(0.0, 0.0);
    let mut df = Complex64::new(0.0, 0.0);
    for c in q.iter().rev() {
        df = df * w + f;
        f = f * w + c;
    }
    (f, df)
}

pub fn eval(q: &[Complex64], w: Complex64) -> Complex64 {
    q.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c)
}

pub fn residual(q: &[Complex64], w: Complex64) -> f64 {
    eval(q, w).norm() / scale(q, w)
}

fn trimmed(q: &[Complex64]) -> Result<&[Complex64]> {
    let top = q
        .iter()
        .rposition(|c| c.norm() > 0.0)
        .ok_or_else(|| Error::Malformed("zero polynomial has no roots".into()))?;
    if top == 0 {
        return Err(Error::Malformed("constant polynomial has no roots".into()));
    }
    if q.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Malformed("non-finite coefficient".into()));
    }
    Ok(&q[..=top])
}

/// All roots with multiplicity, polished and canonically sorted.
pub fn all_roots(q: &[Complex64]) -> Result<Vec<Complex64>> {
    all_roots_seeded(q, DEFAULT_SEED)
}

/// [`all_roots`] with the Aberth starting circle rotated by a seed-derived
/// offset. The result is independent of the seed up to rounding.
pub fn all_roots_seeded(q: &[Complex64], seed: u64) -> Result<Vec<Complex64>> {
    let q = trimmed(q)?;
    let n = q.len() - 1;
    let lead = q[n];
    let monic: Vec<Complex64> = q.iter().map(|c| c / lead).collect();
    if n == 1 {
        return Ok(vec![-monic[0]]);
    }

    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let offset = ROTATION + (seed as f64 * 0.618_033_988_749_894_9).fract();
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * (k as f64 + offset) / n as f64;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut max_rel = 0.0f64;
        for i in 0..n {
            let (f, df) = eval_with_derivative(&monic, z[i]);
            if f.norm() == 0.0 {
                continue;
            }
            let ratio = f / df;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            max_rel = max_rel.max(step.norm() / z[i].norm().max(1.0));
        }
        if max_rel <= 1e-14 {
            converged = true;
            break;
        }
    }
    let worst = z.iter().map(|&w| residual(&monic, w)).fold(0.0, f64::max);
    if !converged && worst > TOL_RES {
        return Err(Error::NoConvergence {
            iterations,
            best: z,
            residual: worst,
        });
    }

    let mut roots = z
        .iter()
        .map(|&w| newton_polish(&monic, w))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::CriticalPoint { w, .. } => Error::NearMultipleRoot {
                cluster: vec![w],
                sep_min: SEP_MIN,
            },
            other => other,
        })?;
    if let Some((a, b)) = closest_pair(&roots) {
        if (roots[a] - roots[b]).norm() <= SEP_MIN {
            return Err(Error::NearMultipleRoot {
                cluster: vec![roots[a], roots[b]],
                sep_min: SEP_MIN,
            });
        }
    }
    // A root whose forward-error estimate is not far below the distance to
    // its nearest neighbour belongs to an unresolvable cluster.
    for (i, &w) in roots.iter().enumerate() {
        let (_, df) = eval_with_derivative(&monic, w);
        let err = 16.0 * f64::EPSILON * scale(&monic, w) / df.norm();
        let (nearest, dist) = roots
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, v)| (j, (v - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("degree >= 2");
        if !(err * 1e3 < dist) {
            return Err(Error::NearMultipleRoot {
                cluster: vec![w, roots[nearest]],
                sep_min: SEP_MIN,
            });
        }
    }
    sort_canonical(&mut roots);
    Ok(roots)
}

/// Newton's method from `w0` until the step stalls at rounding level.
pub fn newton_polish(q: &[Complex64], w0: Complex64) -> Result<Complex64> {
    let mut w = w0;
    let mut last_step = f64::INFINITY;
    let mut growth = 0;
    for _ in 0..MAX_NEWTON {
        let (f, df) = eval_with_derivative(q, w);
        if f.norm() == 0.0 {
            return Ok(w);
        }
        let dscale = q
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c.norm() * w.norm().powi(k as i32 - 1))
            .sum::<f64>()
            .max(1.0);
        if df.norm() <= 1e-13 * dscale {
            return Err(Error::CriticalPoint {
                w,
                derivative: df.norm(),
            });
        }
        let step = f / df;
        w -= step;
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::Divergence {
                start: w0,
                last: w,
                residual: f64::INFINITY,
            });
        }
        let s = step.norm();
        if s <= 4.0 * f64::EPSILON * w.norm().max(1.0) {
            break;
        }
        // quadratic convergence means steps shrink; repeated growth is divergence
        if s > last_step {
            growth += 1;
            if growth > 6 {
                break;
            }
        }
        last_step = s;
    }
    let r = residual(q, w);
    if r > TOL_RES {
        return Err(Error::Divergence {
            start: w0,
            last: w,
            residual: r,
        });
    }
    Ok(w)
}

/// Indices of the closest pair, if there are at least two values.
pub fn closest_pair(values: &[Complex64]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let d = (values[i] - values[j]).norm();
            if best.is_none_or(|(_, _, b)| d < b) {
                best = Some((i, j, d));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Minimum pairwise distance; `f64::MAX` for fewer than two values.
pub fn min_separation(values: &[Complex64]) -> f64 {
    match closest_pair(values) {
        Some((i, j)) => (values[i] - values[j]).norm(),
        None => f64::MAX,
    }
}

/// Lexicographic order by (re, im), with real parts that agree to
/// `1e-9·max(1, |v|)` treated as equal so conjugate pairs sort by their
/// imaginary parts regardless of rounding noise.
pub fn sort_canonical(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mag = values.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * mag;
    let mut start = 0;
    while start < values.len() {
        let anchor = values[start].re;
        let mut end = start + 1;
        while end < values.len() && values[end].re - anchor <= tol {
            end += 1;
        }
        values[start..end].sort_by(|a, b| a.im.total_cmp(&b.im));
        start = end;
    }
}

/// The `n` branch values over a base point, in canonical order; the sheet
/// label of a value is its index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fiber {
    pub z0: Complex64,
    pub values: Vec<Complex64>,
}

impl Fiber {
    pub fn at(poly: &BiPoly, z0: Complex64) -> Result<Fiber> {
        let q = poly.eval_fiber_poly(z0)?;
        let values = all_roots(&q)?;
        Ok(Fiber { z0, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_separation(&self) -> f64 {
        min_separation(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(coeffs: &[f64]) -> Vec<Complex64> {
        coeffs.iter().map(|&x| c(x, 0.0)).collect()
    }

    fn assert_close(got: &[Complex64], want: &[Complex64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).norm() <= tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn roots_of_small_polynomials() {
        assert_close(&all_roots(&real(&[-1.0, 0.0, 1.0])).unwrap(), &[c(-1.0, 0.0), c(1.0, 0.0)], 1e-14);
        assert_close(&all_roots(&real(&[-4.0, 0.0, 1.0])).unwrap(), &[c(-2.0, 0.0), c(2.0, 0.0)], 1e-14);
        let s3 = 3f64.sqrt();
        assert_close(
            &all_roots(&real(&[0.0, -3.0, 0.0, 1.0])).unwrap(),
            &[c(-s3, 0.0), c(0.0, 0.0), c(s3, 0.0)],
            1e-14,
        );
    }

    #[test]
    fn conjugate_pairs_sort_by_imaginary_part() {
        let r = all_roots(&real(&[1.0, 0.0, 1.0])).unwrap();
        assert_close(&r, &[c(0.0, -1.0), c(0.0, 1.0)], 1e-14);
    }

    #[test]
    fn roots_are_seed_independent() {
        let q = real(&[3.0, -2.0, 5.0, 1.0, -4.0, 1.0]);
        let a = all_roots_seeded(&q, 1).unwrap();
        let b = all_roots_seeded(&q, 977).unwrap();
        assert_close(&a, &b, 1e-10);
    }

    #[test]
    fn multiple_root_is_rejected() {
        let err = all_roots(&real(&[1.0, -2.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NearMultipleRoot { .. }), "{err}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(all_roots(&real(&[0.0, 0.0])).is_err());
        assert!(all_roots(&real(&[2.0])).is_err());
        // trailing zero leading coefficients are trimmed
        assert_close(&all_roots(&real(&[-5.0, 1.0, 0.0])).unwrap(), &[c(5.0, 0.0)], 0.0);
    }

    #[test]
    fn newton_examples() {
        let q = real(&[-4.0, 0.0, 1.0]);
        let r = newton_polish(&q, c(2.1, 0.0)).unwrap();
        assert!((r - c(2.0, 0.0)).norm() < 1e-12);

        let lin = real(&[-5.0, 1.0]);
        assert_eq!(newton_polish(&lin, c(0.0, 0.0)).unwrap(), c(5.0, 0.0));

        let sqrt_at_one = real(&[-1.0, 0.0, 1.0]);
        let r = newton_polish(&sqrt_at_one, c(0.9, 0.0)).unwrap();
        assert!((r - c(1.0, 0.0)).norm() < 1e-12);

        assert!(matches!(
            newton_polish(&q, c(0.0, 0.0)),
            Err(Error::CriticalPoint { .. })
        ));
    }

    #[test]
    fn separation_examples() {
        assert_eq!(min_separation(&[c(1.0, 0.0), c(-1.0, 0.0)]), 2.0);
        assert_eq!(min_separation(&[c(0.0, 0.0), c(3.0, 0.0), c(0.0, 4.0)]), 3.0);
        assert_eq!(min_separation(&[c(7.0, 0.0)]), f64::MAX);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
            let mut out = vec![c(0.0, 0.0); a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        }

        proptest! {
            #[test]
            fn product_of_linear_factors_reconstructs(
                coeffs in proptest::collection::vec(-5i32..=5, 1..=6)
            ) {
                let mut q: Vec<Complex64> = coeffs.iter().map(|&x| c(x as f64, 0.0)).collect();
                q.push(c(1.0, 0.0));
                let roots = match all_roots(&q) {
                    Ok(r) => r,
                    Err(Error::NearMultipleRoot { .. }) => return Ok(()),
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                };
                let mut prod = vec![c(1.0, 0.0)];
                for r in &roots {
                    prod = poly_mul(&prod, &[-r, c(1.0, 0.0)]);
                }
                let mag = q.iter().map(|x| x.norm()).fold(1.0, f64::max);
                for (a, b) in prod.iter().zip(&q) {
                    prop_assert!((a - b).norm() <= 1e-8 * mag, "{:?} vs {:?}", prod, q);
                }
            }

            #[test]
            fn polish_is_a_retraction(
                coeffs in proptest::collection::vec(-5i32..=5, 1..=6)
            ) {
                let mut q: Vec<Complex64> = coeffs.iter().map(|&x| c(x as f64, 0.0)).collect();
                q.push(c(1.0, 0.0));
                let Ok(roots) = all_roots(&q) else { return Ok(()) };
                for r in roots {
                    let again = newton_polish(&q, r).unwrap();
                    prop_assert!((again - r).norm() < 1e-13 * scale(&q, r));
                }
            }

            #[test]
            fn seeds_agree(coeffs in proptest::collection::vec(-5i32..=5, 1..=6)) {
                let mut q: Vec<Complex64> = coeffs.iter().map(|&x| c(x as f64, 0.0)).collect();
                q.push(c(1.0, 0.0));
                let (Ok(a), Ok(b)) = (all_roots_seeded(&q, 3), all_roots_seeded(&q, 11)) else {
                    return Ok(());
                };
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).norm() <= 1e-10 * x.norm().max(1.0));
                }
            }
        }
    }
}
