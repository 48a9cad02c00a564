//! End-to-end checks over an analyzed curve: the product relation, path
//! reversal and concatenation, invariance under homotopic perturbations of
//! the loops, self-reconstruction of the polynomial and the full subgroup
//! correspondence.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::continuation::{transport, PathSpec, TrackOpts, AGREEMENT_TOL};
use crate::error::Result;
use crate::funcfield::{self, ReconstructOpts};
use crate::galois::{self, Check};
use crate::monodromy::{match_fiber, Monodromy};
use crate::permgroup::Perm;

fn check(name: &str, pass: bool, detail: Option<String>) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

fn failed(name: &str, e: impl std::fmt::Display) -> Check {
    check(name, false, Some(e.to_string()))
}

fn loop_perm(m: &Monodromy, path: &PathSpec, track: &TrackOpts) -> Result<(Perm, Vec<Complex64>)> {
    let arrived = transport(&m.curve, path, &m.start_fiber.values, track)?;
    Ok((match_fiber(&m.start_fiber.values, &arrived)?, arrived))
}

/// `σ_1 ⋯ σ_m · σ_∞ = id`, and every σ a bijection of the right degree.
pub fn product_identity(m: &Monodromy) -> Check {
    let n = m.degree();
    let product = m
        .sigmas
        .iter()
        .chain(std::iter::once(&m.sigma_inf))
        .fold(Perm::identity(n), |acc, s| acc.then(s));
    let degrees_ok = m.sigmas.iter().all(|s| s.degree() == n) && m.sigma_inf.degree() == n;
    check(
        "product_identity",
        product.is_identity() && degrees_ok,
        (!product.is_identity()).then(|| format!("product is {product}")),
    )
}

/// Each loop followed by its reverse returns every sheet to its start
/// value; the reversed loop induces the inverse permutation.
pub fn reversal(m: &Monodromy, track: &TrackOpts) -> Check {
    let run = || -> Result<Option<String>> {
        for (k, lp) in m.basis.loops.iter().enumerate() {
            let there = transport(&m.curve, &lp.path, &m.start_fiber.values, track)?;
            let back = transport(&m.curve, &lp.path.reversed(), &there, track)?;
            let err = back
                .iter()
                .zip(&m.start_fiber.values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if err > AGREEMENT_TOL {
                return Ok(Some(format!("loop {k}: returned {err:e} away")));
            }
            let (inv, _) = loop_perm(m, &lp.path.reversed(), track)?;
            if inv != m.sigmas[k].inverse() {
                return Ok(Some(format!("loop {k}: reversed loop gives {inv}")));
            }
        }
        Ok(None)
    };
    match run() {
        Ok(witness) => check("reversal", witness.is_none(), witness),
        Err(e) => failed("reversal", e),
    }
}

/// Tracking along `γ_k · γ_{k+1}` equals tracking the two loops one after
/// the other, and induces `σ_k σ_{k+1}`.
pub fn concatenation(m: &Monodromy, track: &TrackOpts) -> Check {
    let run = || -> Result<Option<String>> {
        for k in 0..m.basis.loops.len().saturating_sub(1) {
            let (a, b) = (&m.basis.loops[k].path, &m.basis.loops[k + 1].path);
            let joined = a.then(b)?;
            let whole = transport(&m.curve, &joined, &m.start_fiber.values, track)?;
            let first = transport(&m.curve, a, &m.start_fiber.values, track)?;
            let stepwise = transport(&m.curve, b, &first, track)?;
            if whole != stepwise {
                return Ok(Some(format!("loops {k},{}: concatenation differs", k + 1)));
            }
            let p = match_fiber(&m.start_fiber.values, &whole)?;
            if p != m.sigmas[k].then(&m.sigmas[k + 1]) {
                return Ok(Some(format!("loops {k},{}: {p}", k + 1)));
            }
        }
        Ok(None)
    };
    match run() {
        Ok(witness) => check("concatenation", witness.is_none(), witness),
        Err(e) => failed("concatenation", e),
    }
}

/// Distance from `path` to the locus, and a jittered polyline copy whose
/// vertices move by at most 40% of it, hence homotopic in the punctured
/// plane.
pub fn perturbed<R: rand::Rng>(path: &PathSpec, locus: &[Complex64], rng: &mut R) -> PathSpec {
    let d = path.clearance_from(locus);
    let shift = if d.is_finite() { 0.4 * d } else { 0.5 };
    path.jittered(shift, 32, rng)
}

/// Continues every start germ along `count` random perturbations of the
/// loops (cycling through the basis) and compares the terminal values with
/// the unperturbed loop after a final polish.
pub fn homotopy_battery(m: &Monodromy, count: usize, seed: u64, track: &TrackOpts) -> Check {
    if m.basis.loops.is_empty() {
        return check("homotopy_invariance", true, Some("no loops".into()));
    }
    let locus = m.locus.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z0 = m.base_point();
    let run = |rng: &mut ChaCha8Rng| -> Result<(usize, f64)> {
        let mut agree = 0;
        let mut worst = 0.0f64;
        let reference: Vec<Vec<Complex64>> = m
            .basis
            .loops
            .iter()
            .map(|lp| transport(&m.curve, &lp.path, &m.start_fiber.values, track))
            .collect::<Result<_>>()?;
        for i in 0..count {
            let k = i % m.basis.loops.len();
            let path = perturbed(&m.basis.loops[k].path, &locus, rng);
            let got = transport(&m.curve, &path, &m.start_fiber.values, track)?;
            let mut dist = 0.0f64;
            for (a, b) in got.iter().zip(&reference[k]) {
                let a = m.curve.polish(z0, *a)?;
                let b = m.curve.polish(z0, *b)?;
                dist = dist.max((a - b).norm());
            }
            worst = worst.max(dist);
            if dist <= AGREEMENT_TOL {
                agree += 1;
            }
        }
        Ok((agree, worst))
    };
    match run(&mut rng) {
        Ok((agree, worst)) => check(
            "homotopy_invariance",
            agree == count,
            Some(format!("{agree}/{count} agree, worst distance {worst:e}")),
        ),
        Err(e) => failed("homotopy_invariance", e),
    }
}

/// The tracked branches of `F` reproduce the input polynomial exactly.
pub fn self_reconstruction(m: &Monodromy, track: &TrackOpts, opts: &ReconstructOpts) -> Check {
    match funcfield::self_reconstruct(m, track, opts) {
        Ok(r) => {
            let residual = r.held_out_residual;
            match r.exact {
                Some(p) if p == *m.curve.poly() => {
                    check("self_reconstruction", true, Some(format!("held-out residual {residual:e}")))
                }
                Some(p) => check("self_reconstruction", false, Some(format!("reconstructed {p}"))),
                None => check(
                    "self_reconstruction",
                    false,
                    Some(r.failure.unwrap_or_else(|| "no exact result".into())),
                ),
            }
        }
        Err(e) => failed("self_reconstruction", e),
    }
}

/// The correspondence report over the Galois closure, summarized as one
/// check; non-transitive input is skipped.
pub fn correspondence(m: &Monodromy, cap: usize) -> Check {
    if !m.is_transitive() {
        return check("correspondence", true, Some("skipped: reducible cover".into()));
    }
    match galois::galois_closure(m, cap).and_then(|c| galois::correspondence_report(&c)) {
        Ok(r) => check(
            "correspondence",
            r.pass,
            Some(if r.pass {
                format!("{} subgroups", r.nodes.len())
            } else {
                r.failures.join("; ")
            }),
        ),
        Err(e) => failed("correspondence", e),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BatteryOpts {
    pub track: TrackOpts,
    pub reconstruct: ReconstructOpts,
    pub perturbations: usize,
    pub seed: u64,
    pub cap: usize,
}

impl Default for BatteryOpts {
    fn default() -> Self {
        BatteryOpts {
            track: TrackOpts::default(),
            reconstruct: ReconstructOpts::default(),
            perturbations: 20,
            seed: 0,
            cap: crate::permgroup::DEFAULT_GROUP_ORDER_CAP,
        }
    }
}

/// Runs every check in order.
pub fn run_all(m: &Monodromy, opts: &BatteryOpts) -> Vec<Check> {
    vec![
        product_identity(m),
        reversal(m, &opts.track),
        concatenation(m, &opts.track),
        homotopy_battery(m, opts.perturbations, opts.seed, &opts.track),
        self_reconstruction(m, &opts.track, &opts.reconstruct),
        correspondence(m, opts.cap),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::BiPoly;
    use crate::monodromy::{monodromy_rep, MonodromyOpts};

    #[test]
    fn battery_passes_on_small_examples() {
        for t in [
            &[&[0i64, -1][..], &[], &[1]][..],
            &[&[0, -1], &[-3], &[], &[1]],
            &[&[0, -1], &[1]],
        ] {
            let m = monodromy_rep(&BiPoly::from_int_table(t).unwrap(), &MonodromyOpts::default()).unwrap();
            for c in run_all(&m, &BatteryOpts::default()) {
                assert!(c.pass, "{}: {:?}", c.name, c.detail);
            }
        }
    }
}
