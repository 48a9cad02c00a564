//! The function-field side: minimal polynomials recovered from branch
//! values, functions written as polynomials in the root function `F`,
//! sums and products of algebraic functions, and covering maps between
//! curves.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::continuation::{transport, Curve, TrackOpts, AGREEMENT_TOL};
use crate::error::{Error, Result};
use crate::exactpoly::{BiPoly, RatFunc, Rational, UniPoly};
use crate::monodromy::{self, choose_base_point, loop_basis, match_fiber, Monodromy};
use crate::numroots;
use crate::permgroup::{orbits, Perm};

/// A polynomial in `F` (printed as `t`) with coefficients in `Q(z)`,
/// lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FPoly {
    coeffs: Vec<RatFunc>,
}

impl FPoly {
    pub fn new(mut coeffs: Vec<RatFunc>) -> FPoly {
        while coeffs.last().is_some_and(RatFunc::is_zero) {
            coeffs.pop();
        }
        FPoly { coeffs }
    }

    /// `F` itself.
    pub fn f() -> FPoly {
        FPoly::new(vec![RatFunc::zero(), RatFunc::one()])
    }

    pub fn constant(c: RatFunc) -> FPoly {
        FPoly::new(vec![c])
    }

    /// `t^k`.
    pub fn monomial(k: usize) -> FPoly {
        let mut coeffs = vec![RatFunc::zero(); k + 1];
        coeffs[k] = RatFunc::one();
        FPoly::new(coeffs)
    }

    pub fn coeffs(&self) -> &[RatFunc] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c.eval_complex(z))
    }

    /// Zeros of the coefficient denominators.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        let mut den = UniPoly::one();
        for c in &self.coeffs {
            den = &den * c.denom();
        }
        if den.degree().unwrap_or(0) == 0 {
            return Ok(Vec::new());
        }
        den.squarefree_part()?.complex_roots()
    }

    pub fn to_string_in(&self, var: &str) -> String {
        if self.coeffs.is_empty() {
            return "0".into();
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let cs = if c.is_polynomial() {
                    c.numer().to_string()
                } else {
                    c.to_string()
                };
                let power = match k {
                    0 => String::new(),
                    1 => var.to_string(),
                    _ => format!("{var}^{k}"),
                };
                match (k, cs.as_str()) {
                    (0, _) => cs,
                    (_, "1") => power,
                    _ if c.is_polynomial() && !cs.contains(['+', ' ']) => format!("{cs}*{power}"),
                    _ => format!("({cs})*{power}"),
                }
            })
            .collect();
        terms.join(" + ")
    }
}

impl fmt::Display for FPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_in("t"))
    }
}

/// Values of a function on every sheet over one sample point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchTuple {
    pub z_sample: Complex64,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOpts {
    /// Maximum numerator and denominator degree in `z`.
    pub deg_bound: usize,
    pub held_out: usize,
    pub den_cap: u64,
    pub dedup_tol: f64,
    pub seed: u64,
    pub validation_tol: f64,
}

impl Default for ReconstructOpts {
    fn default() -> Self {
        ReconstructOpts {
            deg_bound: 24,
            held_out: 6,
            den_cap: 1_000_000,
            dedup_tol: 1e-6,
            seed: 0,
            validation_tol: 1e-8,
        }
    }
}

impl ReconstructOpts {
    pub fn training_samples(&self) -> usize {
        2 * self.deg_bound + 2
    }

    pub fn sample_count(&self) -> usize {
        self.training_samples() + self.held_out.max(4)
    }
}

/// Seeded random points on the circle of radius `max|b| + 3`.
pub fn sample_points(points: &[Complex64], count: usize, seed: u64) -> Vec<Complex64> {
    let radius = points.iter().map(|b| b.norm()).fold(0.0, f64::max) + 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Complex64::from_polar(radius, std::f64::consts::TAU * rng.random::<f64>()))
        .collect()
}

/// Fiber values over each sample, transported from the base fiber along
/// spokes; index `j` of every row is sheet `j` of `start`.
pub fn sheet_values(
    curve: &Curve,
    locus: &[Complex64],
    z0: Complex64,
    start: &[Complex64],
    samples: &[Complex64],
    opts: &TrackOpts,
) -> Result<Vec<Vec<Complex64>>> {
    use rayon::prelude::*;
    samples
        .par_iter()
        .map(|&s| {
            let path = monodromy::spoke(locus, z0, s)?;
            transport(curve, &path, start, opts)
        })
        .collect()
}

/// Values of `expr(z, F)` on every sheet of `m` over each sample.
pub fn branch_samples(
    m: &Monodromy,
    expr: &FPoly,
    samples: &[Complex64],
    opts: &TrackOpts,
) -> Result<Vec<BranchTuple>> {
    let poles = expr.poles()?;
    let eps = m.locus.clearance();
    for s in samples {
        if let Some(p) = poles.iter().find(|p| (*p - s).norm() < eps) {
            return Err(Error::PathTooClose {
                branch: *p,
                distance: (p - s).norm(),
                clearance: eps,
            });
        }
    }
    let locus = m.locus.points();
    let rows = sheet_values(&m.curve, &locus, m.base_point(), &m.start_fiber.values, samples, opts)?;
    Ok(samples
        .iter()
        .zip(rows)
        .map(|(&s, ws)| BranchTuple {
            z_sample: s,
            values: ws.iter().map(|&w| expr.eval(s, w)).collect(),
        })
        .collect())
}

/// Distinct values (first occurrence kept) at a relative tolerance.
pub fn dedup_values(values: &[Complex64], tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    for &v in values {
        if !out.iter().any(|u| (u - v).norm() <= tol * u.norm().max(1.0)) {
            out.push(v);
        }
    }
    out
}

/// Coefficients (lowest first, monic) of `∏ (t − v)`.
pub fn poly_from_roots(values: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &v in values {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &a) in c.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * v;
        }
        c = next;
    }
    c
}

/// Nearest rational with denominator at most `den_cap` that agrees with
/// `x` to `rel_tol`, by continued fractions.
pub fn rationalize(x: f64, den_cap: u64, rel_tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let tol = rel_tol * x.abs().max(1.0);
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        if k2 > BigInt::from(den_cap) {
            return None;
        }
        let approx = h2.to_f64()? / k2.to_f64()?;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (approx - x).abs() <= tol {
            return Some(Rational::new(h1, k1));
        }
        let frac = r - a;
        if frac.abs() < 1e-300 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

/// A rational function with floating coefficients in `z` (lowest first,
/// monic denominator).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloatRatFunc {
    pub numer: Vec<Complex64>,
    pub denom: Vec<Complex64>,
}

impl FloatRatFunc {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        numroots::eval(&self.numer, z) / numroots::eval(&self.denom, z)
    }

    fn to_exact(&self, den_cap: u64) -> Option<RatFunc> {
        let conv = |cs: &[Complex64]| -> Option<UniPoly> {
            let mag = cs.iter().map(|c| c.norm()).fold(1.0, f64::max);
            let mut out = Vec::with_capacity(cs.len());
            for c in cs {
                if c.im.abs() > 1e-7 * mag {
                    return None;
                }
                if c.re.abs() <= 1e-10 * mag {
                    out.push(Rational::zero());
                } else {
                    out.push(rationalize(c.re, den_cap, 1e-9)?);
                }
            }
            Some(UniPoly::new(out))
        };
        RatFunc::new(conv(&self.numer)?, conv(&self.denom)?).ok()
    }
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn fit(zs: &[Complex64], ys: &[Complex64], a: usize, b: usize, radius: f64) -> Option<FloatRatFunc> {
    let ncol = a + b + 2;
    let mut mat = DMatrix::<Complex64>::zeros(zs.len(), ncol);
    for (i, (&z, &y)) in zs.iter().zip(ys).enumerate() {
        let u = z / radius;
        let wgt = 1.0 / y.norm().max(1.0);
        let mut pw = Complex64::new(wgt, 0.0);
        for k in 0..=a.max(b) {
            if k <= a {
                mat[(i, k)] = pw;
            }
            if k <= b {
                mat[(i, a + 1 + k)] = -y * pw;
            }
            pw *= u;
        }
    }
    let svd = mat.svd(false, true);
    let v_t = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let v: Vec<Complex64> = v_t.row(idx).iter().map(|c| c.conj()).collect();
    let lead = v[a + 1 + b];
    let vmax = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if lead.norm() <= 1e-10 * vmax {
        return None;
    }
    let rescale = |cs: &[Complex64]| -> Vec<Complex64> {
        cs.iter()
            .enumerate()
            .map(|(k, c)| c / lead / radius.powi(k as i32) * radius.powi(b as i32))
            .collect()
    };
    Some(FloatRatFunc {
        numer: rescale(&v[..=a]),
        denom: rescale(&v[a + 1..]),
    })
}

/// Lowest-degree rational function through the training pairs that also
/// matches the held-out pairs to `tol`.
pub fn rational_interpolate(
    train: (&[Complex64], &[Complex64]),
    held: (&[Complex64], &[Complex64]),
    deg_bound: usize,
    tol: f64,
) -> Option<FloatRatFunc> {
    let (zs, ys) = train;
    let radius = zs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for total in 0..=2 * deg_bound {
        for b in 0..=total.min(deg_bound) {
            let a = total - b;
            if a > deg_bound || a + b + 2 > zs.len() {
                continue;
            }
            let Some(f) = fit(zs, ys, a, b, radius) else {
                continue;
            };
            let ok = |(z, y): (&Complex64, &Complex64)| rel_err(f.eval(*z), *y) <= tol;
            if zs.iter().zip(ys).all(ok) && held.0.iter().zip(held.1).all(ok) {
                return Some(f);
            }
        }
    }
    None
}

/// Outcome of a reconstruction: the exact polynomial when rationalization
/// and validation succeed, otherwise only the floating fit.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub degree: usize,
    pub exact: Option<BiPoly>,
    pub float_coeffs: Vec<FloatRatFunc>,
    pub held_out_residual: f64,
    pub failure: Option<String>,
}

impl Reconstruction {
    pub fn into_exact(self) -> Result<BiPoly> {
        self.exact.ok_or_else(|| {
            Error::Reconstruction(format!(
                "{} (held-out residual {:e})",
                self.failure.unwrap_or_default(),
                self.held_out_residual
            ))
        })
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }
}

fn split<T>(v: &[T], train: usize) -> (&[T], &[T]) {
    v.split_at(train.min(v.len()))
}

/// Minimal polynomial of a function from its branch values: symmetric
/// functions of the distinct values at each sample, interpolated in `z`
/// and rationalized. The last `held_out` tuples are used only to validate.
pub fn minimal_poly(branches: &[BranchTuple], opts: &ReconstructOpts) -> Result<Reconstruction> {
    let need = opts.training_samples() + 4;
    if branches.len() < need {
        return Err(Error::Reconstruction(format!(
            "{} samples given, {need} needed",
            branches.len()
        )));
    }
    let orbits: Vec<Vec<Complex64>> = branches
        .iter()
        .map(|b| dedup_values(&b.values, opts.dedup_tol))
        .collect();
    let mut sizes: Vec<usize> = orbits.iter().map(Vec::len).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() != 1 {
        return Err(Error::BranchMultiplicity { sizes });
    }
    let d = sizes[0];
    let coeff_samples: Vec<Vec<Complex64>> = orbits.iter().map(|o| poly_from_roots(o)).collect();
    let zs: Vec<Complex64> = branches.iter().map(|b| b.z_sample).collect();
    let train = branches.len() - opts.held_out.max(4);
    let (z_train, z_held) = split(&zs, train);

    let mut float_coeffs = Vec::with_capacity(d + 1);
    for j in 0..d {
        let ys: Vec<Complex64> = coeff_samples.iter().map(|c| c[j]).collect();
        let (y_train, y_held) = split(&ys, train);
        let f = rational_interpolate((z_train, y_train), (z_held, y_held), opts.deg_bound, opts.validation_tol)
            .ok_or_else(|| Error::Reconstruction(format!("no rational fit for the coefficient of t^{j}")))?;
        float_coeffs.push(f);
    }
    float_coeffs.push(FloatRatFunc {
        numer: vec![Complex64::new(1.0, 0.0)],
        denom: vec![Complex64::new(1.0, 0.0)],
    });

    let exact_coeffs: Option<Vec<RatFunc>> = float_coeffs.iter().map(|f| f.to_exact(opts.den_cap)).collect();
    let Some(exact_coeffs) = exact_coeffs else {
        return Ok(Reconstruction {
            degree: d,
            exact: None,
            held_out_residual: float_residual(&float_coeffs, &branches[train..]),
            float_coeffs,
            failure: Some(format!("a coefficient has no rational form with denominator <= {}", opts.den_cap)),
        });
    };
    let poly = BiPoly::normalize_monic(&exact_coeffs)?;
    let residual = exact_residual(&poly, &branches[train..]);
    let pass = residual < opts.validation_tol;
    Ok(Reconstruction {
        degree: d,
        exact: pass.then_some(poly),
        float_coeffs,
        held_out_residual: residual,
        failure: (!pass).then(|| "held-out validation failed".to_string()),
    })
}

fn float_residual(coeffs: &[FloatRatFunc], held: &[BranchTuple]) -> f64 {
    held.iter()
        .flat_map(|b| {
            let q: Vec<Complex64> = coeffs.iter().map(|c| c.eval(b.z_sample)).collect();
            b.values.iter().map(move |&v| numroots::residual(&q, v)).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Worst scaled residual of the exact polynomial at the held-out branch
/// values.
pub fn exact_residual(poly: &BiPoly, held: &[BranchTuple]) -> f64 {
    held.iter()
        .flat_map(|b| {
            let q: Vec<Complex64> = poly.coeffs().iter().map(|c| c.eval_complex(b.z_sample)).collect();
            b.values.iter().map(move |&v| numroots::residual(&q, v)).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Samples used by the convenience wrappers: seeded points on the sample
/// circle of `m`'s locus.
pub fn default_samples(m: &Monodromy, opts: &ReconstructOpts) -> Vec<Complex64> {
    sample_points(&m.locus.points(), opts.sample_count(), opts.seed)
}

/// Reconstructs the defining polynomial of `m` from the tracked branches of
/// `F`; for squarefree irreducible input this returns the input exactly.
pub fn self_reconstruct(m: &Monodromy, track: &TrackOpts, opts: &ReconstructOpts) -> Result<Reconstruction> {
    let branches = branch_samples(m, &FPoly::f(), &default_samples(m, opts), track)?;
    minimal_poly(&branches, opts)
}

/// Result of writing a function as a polynomial in `F`.
#[derive(Clone, Debug)]
pub struct Expression {
    pub exact: Option<FPoly>,
    pub float_coeffs: Vec<FloatRatFunc>,
    pub held_out_residual: f64,
}

/// Finds `Q` with `deg Q < n` and `g = Q(F)`, from aligned branch tuples of
/// `g` and `F`.
pub fn express_in_f(g: &[BranchTuple], f: &[BranchTuple], opts: &ReconstructOpts) -> Result<Expression> {
    if g.len() != f.len() || g.iter().zip(f).any(|(a, b)| a.values.len() != b.values.len() || a.z_sample != b.z_sample)
    {
        return Err(Error::Malformed("branch tuples of g and F are not aligned".into()));
    }
    let n = f.first().map_or(0, |b| b.values.len());
    let mut per_sample = Vec::with_capacity(f.len());
    for (gb, fb) in g.iter().zip(f) {
        let scale = fb.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if numroots::min_separation(&fb.values) <= 1e-6 * scale {
            return Err(Error::IllConditioned { sample: fb.z_sample });
        }
        let vand = DMatrix::from_fn(n, n, |i, k| fb.values[i].powi(k as i32));
        let rhs = DMatrix::from_fn(n, 1, |i, _| gb.values[i]);
        let sol = vand
            .lu()
            .solve(&rhs)
            .ok_or(Error::IllConditioned { sample: fb.z_sample })?;
        per_sample.push(sol.iter().copied().collect::<Vec<Complex64>>());
    }
    let zs: Vec<Complex64> = f.iter().map(|b| b.z_sample).collect();
    let train = f.len() - opts.held_out.max(4).min(f.len());
    let (z_train, z_held) = split(&zs, train);
    let mut float_coeffs = Vec::with_capacity(n);
    for k in 0..n {
        let ys: Vec<Complex64> = per_sample.iter().map(|c| c[k]).collect();
        let (y_train, y_held) = split(&ys, train);
        float_coeffs.push(
            rational_interpolate((z_train, y_train), (z_held, y_held), opts.deg_bound, opts.validation_tol)
                .ok_or_else(|| Error::Reconstruction(format!("no rational fit for the coefficient of t^{k}")))?,
        );
    }
    let exact = float_coeffs
        .iter()
        .map(|c| c.to_exact(opts.den_cap))
        .collect::<Option<Vec<_>>>()
        .map(FPoly::new);
    let residual = |q: &dyn Fn(Complex64, Complex64) -> Complex64| {
        g[train..]
            .iter()
            .zip(&f[train..])
            .flat_map(|(gb, fb)| {
                gb.values
                    .iter()
                    .zip(&fb.values)
                    .map(|(&gv, &fv)| rel_err(q(fb.z_sample, fv), gv))
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    };
    let (exact, held_out_residual) = match exact {
        Some(q) => {
            let r = residual(&|z, w| q.eval(z, w));
            if r < opts.validation_tol {
                (Some(q), r)
            } else {
                (None, r)
            }
        }
        None => (
            None,
            residual(&|z, w| {
                float_coeffs
                    .iter()
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c.eval(z))
            }),
        ),
    };
    Ok(Expression {
        exact,
        float_coeffs,
        held_out_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    Add,
    Mul,
}

impl CombineOp {
    pub fn apply(self, a: Complex64, b: Complex64) -> Complex64 {
        match self {
            CombineOp::Add => a + b,
            CombineOp::Mul => a * b,
        }
    }
}

impl std::str::FromStr for CombineOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<CombineOp> {
        match s {
            "add" => Ok(CombineOp::Add),
            "mul" => Ok(CombineOp::Mul),
            _ => Err(Error::Malformed(format!("unknown operation {s:?}; expected add or mul"))),
        }
    }
}

/// Two curves over a shared base point, with fibers and loops for the
/// union of their branch loci.
#[derive(Clone, Debug)]
pub struct CurvePair {
    pub curves: [Curve; 2],
    pub locus: Vec<Complex64>,
    pub base_point: Complex64,
    pub fibers: [Vec<Complex64>; 2],
    /// Local monodromy of each merged loop on each curve.
    pub sigmas: [Vec<Perm>; 2],
    /// Terminal values after each merged loop, in start-sheet order.
    pub loop_ends: [Vec<Vec<Complex64>>; 2],
}

pub fn curve_pair(p1: &BiPoly, p2: &BiPoly, track: &TrackOpts) -> Result<CurvePair> {
    let b1: Vec<Complex64> = monodromy::finite_branch_points(p1)?.iter().map(|b| b.z).collect();
    let b2: Vec<Complex64> = monodromy::finite_branch_points(p2)?.iter().map(|b| b.z).collect();
    let mut locus = b1.clone();
    for z in &b2 {
        if !locus.iter().any(|b| (b - z).norm() <= monodromy::DEDUP_TOL * z.norm().max(1.0)) {
            locus.push(*z);
        }
    }
    numroots::sort_canonical(&mut locus);
    let z0 = choose_base_point(&locus);
    let basis = loop_basis(&locus, z0)?;
    let curves = [
        Curve::with_branch_points(p1.clone(), b1),
        Curve::with_branch_points(p2.clone(), b2),
    ];
    let fibers = [curves[0].fiber(z0)?.values, curves[1].fiber(z0)?.values];
    let mut sigmas: [Vec<Perm>; 2] = [Vec::new(), Vec::new()];
    let mut loop_ends: [Vec<Vec<Complex64>>; 2] = [Vec::new(), Vec::new()];
    for c in 0..2 {
        for (index, lp) in basis.loops.iter().enumerate() {
            let arrived = transport(&curves[c], &lp.path, &fibers[c], track).map_err(|e| Error::LoopTracking {
                index,
                source: Box::new(e),
            })?;
            sigmas[c].push(match_fiber(&fibers[c], &arrived)?);
            loop_ends[c].push(arrived);
        }
    }
    Ok(CurvePair {
        curves,
        locus,
        base_point: z0,
        fibers,
        sigmas,
        loop_ends,
    })
}

#[derive(Clone, Debug)]
pub struct Combined {
    pub reconstruction: Reconstruction,
    /// Sheet pairs in the orbit of the start pair, sorted.
    pub orbit: Vec<(usize, usize)>,
    /// Action of each merged loop on the orbit.
    pub orbit_perms: Vec<Perm>,
    pub base_point: Complex64,
    pub locus: Vec<Complex64>,
}

/// Minimal polynomial of `w1 op w2` for the germ pair `start` (sheet
/// indices at the shared base point), tracked on the component of the
/// fiber product containing it.
pub fn combine(
    p1: &BiPoly,
    p2: &BiPoly,
    op: CombineOp,
    start: (usize, usize),
    track: &TrackOpts,
    opts: &ReconstructOpts,
) -> Result<Combined> {
    let pair = curve_pair(p1, p2, track)?;
    let (n1, n2) = (pair.fibers[0].len(), pair.fibers[1].len());
    if start.0 >= n1 || start.1 >= n2 {
        return Err(Error::Malformed(format!("start pair {start:?} out of range")));
    }
    let product: Vec<Perm> = pair.sigmas[0]
        .iter()
        .zip(&pair.sigmas[1])
        .map(|(s1, s2)| {
            Perm::from_images((0..n1 * n2).map(|k| s1.apply(k / n2) * n2 + s2.apply(k % n2)).collect())
                .expect("product of bijections")
        })
        .collect();
    let start_point = start.0 * n2 + start.1;
    let orbit_points = orbits(n1 * n2, &product)
        .into_iter()
        .find(|o| o.contains(&start_point))
        .expect("every point lies in an orbit");
    let orbit: Vec<(usize, usize)> = orbit_points.iter().map(|&k| (k / n2, k % n2)).collect();
    let orbit_perms = product
        .iter()
        .map(|p| {
            Perm::from_images(
                orbit_points
                    .iter()
                    .map(|&k| orbit_points.binary_search(&p.apply(k)).expect("orbit is invariant"))
                    .collect(),
            )
            .expect("restriction of a bijection")
        })
        .collect();

    let samples = sample_points(&pair.locus, opts.sample_count(), opts.seed);
    let rows1 = sheet_values(&pair.curves[0], &pair.locus, pair.base_point, &pair.fibers[0], &samples, track)?;
    let rows2 = sheet_values(&pair.curves[1], &pair.locus, pair.base_point, &pair.fibers[1], &samples, track)?;
    let branches: Vec<BranchTuple> = samples
        .iter()
        .zip(rows1.iter().zip(&rows2))
        .map(|(&s, (r1, r2))| BranchTuple {
            z_sample: s,
            values: orbit.iter().map(|&(i, j)| op.apply(r1[i], r2[j])).collect(),
        })
        .collect();
    Ok(Combined {
        reconstruction: minimal_poly(&branches, opts)?,
        orbit,
        orbit_perms,
        base_point: pair.base_point,
        locus: pair.locus,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopCommutation {
    pub source_perm: String,
    pub target_perm: String,
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringReport {
    /// Source sheet -> target sheet at the base point.
    pub sheet_map: Vec<usize>,
    pub fiber_sizes: Vec<usize>,
    pub constant_fibers: bool,
    pub loops: Vec<LoopCommutation>,
    pub pass: bool,
}

/// Checks that `z, w ↦ (z, Q(z, w))` maps the source curve onto the target
/// as a covering compatible with transport around every merged loop.
pub fn verify_covering_map(q: &FPoly, source: &BiPoly, target: &BiPoly, track: &TrackOpts) -> Result<CoveringReport> {
    let pair = curve_pair(source, target, track)?;
    let z0 = pair.base_point;
    let image_sheet = |vals: &[Complex64], w: Complex64| -> Option<(usize, f64)> {
        vals.iter()
            .enumerate()
            .map(|(j, v)| (j, (v - q.eval(z0, w)).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };
    let mut sheet_map = Vec::with_capacity(pair.fibers[0].len());
    for &w in &pair.fibers[0] {
        match image_sheet(&pair.fibers[1], w) {
            Some((j, d)) if d <= AGREEMENT_TOL * q.eval(z0, w).norm().max(1.0) => sheet_map.push(j),
            _ => {
                return Err(Error::CoveringPrecondition(format!(
                    "Q({z0}, {w}) = {} is not a target branch value",
                    q.eval(z0, w)
                )))
            }
        }
    }
    let mut fiber_sizes = vec![0usize; pair.fibers[1].len()];
    for &j in &sheet_map {
        fiber_sizes[j] += 1;
    }
    let constant_fibers = fiber_sizes.iter().all(|&s| s > 0 && s == fiber_sizes[0]);

    let loops: Vec<LoopCommutation> = (0..pair.sigmas[0].len())
        .map(|k| {
            let src_end = &pair.loop_ends[0][k];
            let tgt_end = &pair.loop_ends[1][k];
            let max_error = src_end
                .iter()
                .zip(&sheet_map)
                .map(|(&w, &j)| (q.eval(z0, w) - tgt_end[j]).norm())
                .fold(0.0, f64::max);
            LoopCommutation {
                source_perm: pair.sigmas[0][k].to_string(),
                target_perm: pair.sigmas[1][k].to_string(),
                max_error,
                pass: max_error <= AGREEMENT_TOL,
            }
        })
        .collect();
    let pass = constant_fibers && loops.iter().all(|l| l.pass);
    Ok(CoveringReport {
        sheet_map,
        fiber_sizes,
        constant_fibers,
        loops,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::rat;
    use crate::monodromy::{monodromy_rep, MonodromyOpts};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn table(t: &[&[i64]]) -> BiPoly {
        BiPoly::from_int_table(t).unwrap()
    }

    fn rep(t: &[&[i64]]) -> Monodromy {
        monodromy_rep(&table(t), &MonodromyOpts::default()).unwrap()
    }

    fn zpoly(cs: &[i64]) -> RatFunc {
        RatFunc::poly(UniPoly::from_ints(cs))
    }

    const SQRT: &[&[i64]] = &[&[0, -1], &[], &[1]];

    #[test]
    fn branch_sample_examples() {
        let track = TrackOpts::default();
        let m = rep(SQRT);
        let b = branch_samples(&m, &FPoly::f(), &[c(4.0, 0.0)], &track).unwrap();
        let mut vals = b[0].values.clone();
        numroots::sort_canonical(&mut vals);
        assert!((vals[0] - c(-2.0, 0.0)).norm() < 1e-10 && (vals[1] - c(2.0, 0.0)).norm() < 1e-10);

        let z = c(1.5, -2.5);
        let b = branch_samples(&m, &FPoly::monomial(2), &[z], &track).unwrap();
        assert!(b[0].values.iter().all(|v| (v - z).norm() < 1e-10));

        let lin = rep(&[&[0, -1], &[1]]);
        let plus_one = FPoly::new(vec![RatFunc::one(), RatFunc::one()]);
        let b = branch_samples(&lin, &plus_one, &[c(3.0, 0.0)], &track).unwrap();
        assert_eq!(b[0].values.len(), 1);
        assert!((b[0].values[0] - c(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn minimal_poly_examples() {
        let track = TrackOpts::default();
        let opts = ReconstructOpts::default();
        let m = rep(SQRT);
        let samples = default_samples(&m, &opts);

        let r = minimal_poly(&branch_samples(&m, &FPoly::f(), &samples, &track).unwrap(), &opts).unwrap();
        assert_eq!(r.into_exact().unwrap(), table(SQRT));

        let r = minimal_poly(&branch_samples(&m, &FPoly::monomial(2), &samples, &track).unwrap(), &opts).unwrap();
        assert_eq!(r.degree, 1);
        assert_eq!(r.into_exact().unwrap().to_string_in("t"), "t - z");

        // F + 1/F = (1 + 1/z)·F
        let coeff = RatFunc::new(UniPoly::from_ints(&[1, 1]), UniPoly::from_ints(&[0, 1])).unwrap();
        let g = FPoly::new(vec![RatFunc::zero(), coeff]);
        let r = minimal_poly(&branch_samples(&m, &g, &samples, &track).unwrap(), &opts).unwrap();
        let p = r.into_exact().unwrap();
        assert_eq!(p.to_string_in("t"), "z*t^2 - z^2 - 2*z - 1");
    }

    #[test]
    fn orbit_size_must_be_constant() {
        let opts = ReconstructOpts::default();
        let mut tuples: Vec<BranchTuple> = (0..opts.sample_count())
            .map(|k| BranchTuple {
                z_sample: c(3.0, k as f64),
                values: vec![c(1.0, 0.0), c(-1.0, 0.0)],
            })
            .collect();
        tuples[3].values = vec![c(1.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(minimal_poly(&tuples, &opts), Err(Error::BranchMultiplicity { .. })));
    }

    #[test]
    fn express_examples() {
        let track = TrackOpts::default();
        let opts = ReconstructOpts::default();
        let m = rep(SQRT);
        let samples = default_samples(&m, &opts);
        let f = branch_samples(&m, &FPoly::f(), &samples, &track).unwrap();

        let zf = FPoly::new(vec![RatFunc::zero(), zpoly(&[0, 1])]);
        let g = branch_samples(&m, &zf, &samples, &track).unwrap();
        assert_eq!(express_in_f(&g, &f, &opts).unwrap().exact.unwrap(), zf);

        let three = FPoly::constant(RatFunc::constant(rat(3, 1)));
        let g = branch_samples(&m, &three, &samples, &track).unwrap();
        assert_eq!(express_in_f(&g, &f, &opts).unwrap().exact.unwrap(), three);

        let f_plus_z = FPoly::new(vec![zpoly(&[0, 1]), RatFunc::one()]);
        let g = branch_samples(&m, &f_plus_z, &samples, &track).unwrap();
        let q = express_in_f(&g, &f, &opts).unwrap().exact.unwrap();
        assert_eq!(q.to_string(), "t + z");
    }

    #[test]
    fn combine_examples() {
        let track = TrackOpts::default();
        let opts = ReconstructOpts::default();
        let cbrt = table(&[&[0, -1], &[], &[], &[1]]);
        let sum = combine(&table(SQRT), &cbrt, CombineOp::Add, (0, 0), &track, &opts).unwrap();
        assert_eq!(sum.orbit.len(), 6);
        assert_eq!(
            sum.reconstruction.into_exact().unwrap().to_string_in("t"),
            "t^6 - 3*z*t^4 - 2*z*t^3 + 3*z^2*t^2 - 6*z^2*t - z^3 + z^2"
        );

        let sq = combine(&table(SQRT), &table(SQRT), CombineOp::Mul, (0, 0), &track, &opts).unwrap();
        assert_eq!(sq.orbit, vec![(0, 0), (1, 1)]);
        assert_eq!(sq.reconstruction.into_exact().unwrap().to_string_in("t"), "t - z");

        let shifted = combine(&table(&[&[0, -1], &[1]]), &table(SQRT), CombineOp::Add, (0, 0), &track, &opts).unwrap();
        assert_eq!(
            shifted.reconstruction.into_exact().unwrap().to_string_in("t"),
            "t^2 - 2*z*t + z^2 - z"
        );
    }

    #[test]
    fn covering_map_examples() {
        let track = TrackOpts::default();
        let w6 = table(&[&[0, -1], &[], &[], &[], &[], &[], &[1]]);
        let r = verify_covering_map(&FPoly::monomial(3), &w6, &table(SQRT), &track).unwrap();
        assert!(r.pass);
        assert_eq!(r.fiber_sizes, vec![3, 3]);
        assert_eq!(r.loops[0].target_perm, "(1 2)");
        assert_eq!(Perm::parse_cycles(6, &r.loops[0].source_perm).unwrap().cycle_type(), vec![6]);

        let r = verify_covering_map(&FPoly::monomial(2), &w6, &table(&[&[0, -1], &[], &[], &[1]]), &track).unwrap();
        assert!(r.pass);
        assert_eq!(r.fiber_sizes, vec![2, 2, 2]);

        let cubic = table(&[&[0, -1], &[-3], &[], &[1]]);
        let r = verify_covering_map(&FPoly::f(), &cubic, &cubic, &track).unwrap();
        assert!(r.pass);
        assert_eq!(r.sheet_map, vec![0, 1, 2]);

        assert!(matches!(
            verify_covering_map(&FPoly::monomial(2), &w6, &table(SQRT), &track),
            Err(Error::CoveringPrecondition(_))
        ));
    }

    #[test]
    fn rationalize_examples() {
        assert_eq!(rationalize(0.75, 1000, 1e-12), Some(rat(3, 4)));
        assert_eq!(rationalize(-27.0 / 4.0, 1000, 1e-12), Some(rat(-27, 4)));
        assert_eq!(rationalize(1.0 / 3.0 + 1e-14, 1000, 1e-9), Some(rat(1, 3)));
        assert_eq!(rationalize(std::f64::consts::PI, 100, 1e-12), None);
        assert_eq!(rationalize(0.0, 10, 1e-12), Some(rat(0, 1)));
    }

    #[test]
    fn rational_interpolation_recovers_low_degree() {
        // (z^2 - 3) / (z + 1/2)
        let f = |z: Complex64| (z * z - 3.0) / (z + 0.5);
        let zs = sample_points(&[c(0.0, 0.0)], 20, 7);
        let ys: Vec<Complex64> = zs.iter().map(|&z| f(z)).collect();
        let fit = rational_interpolate((&zs[..16], &ys[..16]), (&zs[16..], &ys[16..]), 6, 1e-10).unwrap();
        assert_eq!(fit.numer.len(), 3);
        assert_eq!(fit.denom.len(), 2);
        let exact = fit.to_exact(1000).unwrap();
        assert_eq!(exact.to_string(), "(z^2 - 3)/(z + 1/2)");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn symmetric_functions_ignore_order(
            vals in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..6),
            seed in any::<u64>(),
        ) {
            let vs: Vec<Complex64> = vals.iter().map(|&(a, b)| c(a, b)).collect();
            let mut shuffled = vs.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rand::Rng::random_range(&mut rng, 0..=i));
            }
            let a = poly_from_roots(&vs);
            let b = poly_from_roots(&shuffled);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0));
            }
        }

        #[test]
        fn rationalize_recovers_small_fractions(n in -5000i64..5000, d in 1i64..2000) {
            let r = rat(n, d);
            prop_assert_eq!(rationalize(n as f64 / d as f64, 1_000_000, 1e-12), Some(r));
        }
    }
}
