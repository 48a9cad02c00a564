//! Branch locus, loop basis and the monodromy permutation representation.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuation::{branch_clearance, transport, Curve, PathSpec, PolyId, Segment, TrackOpts};
use crate::error::{Error, Result};
use crate::exactpoly::BiPoly;
use crate::numroots::{self, Fiber};
use crate::permgroup::{self, Perm, PermGroup, DEFAULT_GROUP_ORDER_CAP};

/// Branch points closer than this are identified.
pub const DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchOrigin {
    Discriminant,
    Pole,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub z: Complex64,
    pub origin: BranchOrigin,
    /// Set once the local monodromy is known to be trivial.
    pub unramified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchLocus {
    pub finite_points: Vec<BranchPoint>,
    pub includes_infinity: bool,
}

impl BranchLocus {
    pub fn points(&self) -> Vec<Complex64> {
        self.finite_points.iter().map(|b| b.z).collect()
    }

    pub fn clearance(&self) -> f64 {
        branch_clearance(&self.points())
    }
}

fn merge_points(into: &mut Vec<BranchPoint>, z: Complex64, origin: BranchOrigin) {
    let tol = DEDUP_TOL * z.norm().max(1.0);
    if let Some(b) = into.iter_mut().find(|b| (b.z - z).norm() <= tol) {
        if b.origin != origin {
            b.origin = BranchOrigin::Both;
        }
    } else {
        into.push(BranchPoint {
            z,
            origin,
            unramified: false,
        });
    }
}

/// Roots of the squarefree discriminant numerator together with the
/// excluded values, canonically ordered.
pub fn finite_branch_points(poly: &BiPoly) -> Result<Vec<BranchPoint>> {
    let disc = poly.discriminant_z();
    if disc.is_zero() {
        return Err(Error::NotSquarefree);
    }
    let mut points = Vec::new();
    let sf = disc.numer().squarefree_part()?;
    if sf.degree().unwrap_or(0) > 0 {
        for z in sf.complex_roots()? {
            merge_points(&mut points, z, BranchOrigin::Discriminant);
        }
    }
    for &z in poly.excluded_z() {
        merge_points(&mut points, z, BranchOrigin::Pole);
    }
    let mut zs: Vec<Complex64> = points.iter().map(|b| b.z).collect();
    numroots::sort_canonical(&mut zs);
    let ordered = zs
        .iter()
        .map(|z| points.iter().find(|b| b.z == *z).cloned().expect("same set"))
        .collect::<Vec<_>>();
    let sep = numroots::min_separation(&zs);
    if sep != f64::MAX && sep <= 2.0 * branch_clearance(&zs) {
        return Err(Error::Geometry(format!(
            "branch points only {sep:e} apart"
        )));
    }
    Ok(ordered)
}

/// `max|b| + 2` on the positive real axis, pushed right by 1 while it sits
/// within `2·ε_b` of a branch point; `1` for an empty locus.
pub fn choose_base_point(points: &[Complex64]) -> Complex64 {
    if points.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let eps = branch_clearance(points);
    let mut z0 = Complex64::new(points.iter().map(|b| b.norm()).fold(0.0, f64::max) + 2.0, 0.0);
    while points.iter().any(|b| (b - z0).norm() <= 2.0 * eps) {
        z0 += 1.0;
    }
    z0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    /// Index into the locus' finite points.
    pub branch_index: usize,
    pub center: Complex64,
    pub radius: f64,
    pub approach: PathSpec,
    pub path: PathSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopBasis {
    pub base_point: Complex64,
    /// Direction (angle) from which loop arguments are measured; the
    /// large loop around the whole locus leaves along it.
    pub cut_angle: f64,
    pub loops: Vec<Loop>,
}

fn cut_angle(points: &[Complex64], z0: Complex64) -> f64 {
    if points.iter().all(|b| (b - z0).re < 0.0) {
        return 0.0;
    }
    let mut args: Vec<f64> = points
        .iter()
        .map(|b| {
            let d = b - z0;
            d.im.atan2(d.re).rem_euclid(TAU)
        })
        .collect();
    args.sort_by(f64::total_cmp);
    let mut best = (args[0] + TAU - args[args.len() - 1], args[args.len() - 1]);
    for w in args.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    (best.1 + best.0 / 2.0).rem_euclid(TAU)
}

/// Straight corridor from `from` to `to`, bent around every obstacle disc
/// it would cut through. The arc keeps the side the chord passes on; a
/// chord hitting a center exactly passes on its left.
fn corridor(from: Complex64, to: Complex64, obstacles: &[(Complex64, f64)]) -> Result<Vec<Segment>> {
    let d = to - from;
    let len = d.norm();
    let u = d / len;
    let mut hits = Vec::new();
    for &(c, rho) in obstacles {
        let rel = c - from;
        let t = (rel * u.conj()).re;
        let foot = from + u * t;
        let off = c - foot;
        let h = off.norm();
        if h >= rho || t <= 0.0 || t >= len {
            continue;
        }
        let half = (rho * rho - h * h).sqrt();
        let (t_in, mut t_out) = (t - half, t + half);
        // discs of neighbouring branch points may touch at the corridor end
        if t_out >= len && t_out <= len * (1.0 + 1e-9) {
            t_out = len;
        }
        if t_in <= 0.0 || t_out > len {
            return Err(Error::Geometry(format!(
                "corridor endpoint inside the disc about {c}"
            )));
        }
        // side of the chord the arc stays on, seen from the center
        let side = if h > 1e-12 * rho { -off / h } else { u * Complex64::i() };
        hits.push((t_in, t_out, c, rho, side));
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    // collinear neighbours with touching discs share a chord endpoint
    for k in 1..hits.len() {
        let prev_out = hits[k - 1].1;
        if hits[k].0 < prev_out {
            if prev_out - hits[k].0 > 1e-9 * len {
                return Err(Error::Geometry("overlapping obstacle discs on a corridor".into()));
            }
            hits[k].0 = prev_out;
        }
    }
    let mut segs = Vec::new();
    let mut cur = from;
    for (t_in, t_out, c, rho, side) in hits {
        let p_in = from + u * t_in;
        let p_out = if t_out == len { to } else { from + u * t_out };
        if (p_in - cur).norm() > 0.0 {
            segs.push(Segment::Line { a: cur, b: p_in });
        }
        let a_in = (p_in - c).im.atan2((p_in - c).re);
        let a_out = (p_out - c).im.atan2((p_out - c).re);
        let a_mid = side.im.atan2(side.re);
        let ccw = (a_out - a_in).rem_euclid(TAU);
        let theta1 = if (a_in + ccw / 2.0 - a_mid).cos() > 0.0 {
            a_in + ccw
        } else {
            a_in - (TAU - ccw)
        };
        segs.push(Segment::Arc {
            center: c,
            radius: rho,
            theta0: a_in,
            theta1,
        });
        cur = p_out;
    }
    if (to - cur).norm() > 0.0 {
        segs.push(Segment::Line { a: cur, b: to });
    }
    Ok(segs)
}

/// `r_k = ½·min(min_{j≠k} |b_k − b_j|, |z0 − b_k|)`.
pub fn loop_radii(points: &[Complex64], z0: Complex64) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let others = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, c)| (b - c).norm())
                .fold(f64::INFINITY, f64::min);
            0.5 * others.min((b - z0).norm())
        })
        .collect()
}

/// Path from `z0` to `target` that keeps the loop-basis discs (shrunk
/// where needed so `target` stays outside them) on the side the straight
/// segment passes.
pub fn spoke(points: &[Complex64], z0: Complex64, target: Complex64) -> Result<PathSpec> {
    if target == z0 {
        return Ok(PathSpec::line(z0, z0));
    }
    let obstacles: Vec<(Complex64, f64)> = points
        .iter()
        .zip(loop_radii(points, z0))
        .map(|(&b, r)| (b, r.min(0.5 * (target - b).norm())))
        .collect();
    PathSpec::new(corridor(z0, target, &obstacles)?)
}

/// One loop per branch point, ordered by the argument of `b - z0` measured
/// counterclockwise from the cut direction, ties by modulus.
pub fn loop_basis(points: &[Complex64], z0: Complex64) -> Result<LoopBasis> {
    if points.is_empty() {
        return Ok(LoopBasis {
            base_point: z0,
            cut_angle: 0.0,
            loops: Vec::new(),
        });
    }
    let eps = branch_clearance(points);
    if let Some(b) = points.iter().find(|b| (*b - z0).norm() <= 2.0 * eps) {
        return Err(Error::Geometry(format!("base point {z0} too close to branch point {b}")));
    }
    let cut = cut_angle(points, z0);
    let radii = loop_radii(points, z0);

    let mut order: Vec<usize> = (0..points.len()).collect();
    let key = |k: usize| {
        let d = points[k] - z0;
        ((d.im.atan2(d.re) - cut).rem_euclid(TAU), d.norm())
    };
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });

    let mut loops = Vec::with_capacity(points.len());
    for k in order {
        let b = points[k];
        let r = radii[k];
        let u = (b - z0) / (b - z0).norm();
        let entry = b - u * r;
        let obstacles: Vec<(Complex64, f64)> = points
            .iter()
            .zip(&radii)
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, (&c, &rho))| (c, rho))
            .collect();
        let approach = PathSpec::new(corridor(z0, entry, &obstacles)?)?;
        let theta0 = (entry - b).im.atan2((entry - b).re);
        let path = approach
            .then(&PathSpec::circle(b, r, theta0))?
            .then(&approach.reversed())?;
        loops.push(Loop {
            branch_index: k,
            center: b,
            radius: r,
            approach,
            path,
        });
    }
    Ok(LoopBasis {
        base_point: z0,
        cut_angle: cut,
        loops,
    })
}

/// Ray from `z0` along the cut to radius `|z0| + max|b| + 1`, a full
/// counterclockwise circle about 0, and back.
pub fn infinity_loop(points: &[Complex64], z0: Complex64, cut: f64) -> Result<PathSpec> {
    let big = z0.norm() + points.iter().map(|b| b.norm()).fold(0.0, f64::max) + 1.0;
    let u = Complex64::from_polar(1.0, cut);
    let proj = (z0 * u.conj()).re;
    let t = -proj + (proj * proj - z0.norm_sqr() + big * big).sqrt();
    let far = z0 + u * t;
    let ray = PathSpec::line(z0, far);
    ray.then(&PathSpec::circle(Complex64::new(0.0, 0.0), big, far.im.atan2(far.re)))?
        .then(&ray.reversed())
}

/// Identifies transported values with the start fiber; each must land
/// within a third of the fiber separation of a unique start value.
pub fn match_fiber(start: &[Complex64], arrived: &[Complex64]) -> Result<Perm> {
    let sep = numroots::min_separation(start);
    let tol = if sep == f64::MAX { f64::INFINITY } else { sep / 3.0 };
    let mut images = Vec::with_capacity(arrived.len());
    for w in arrived {
        let (j, d) = start
            .iter()
            .enumerate()
            .map(|(j, v)| (j, (v - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::Inconsistent("empty fiber".into()))?;
        if d > tol {
            return Err(Error::Inconsistent(format!(
                "transported value {w} is {d:e} from the nearest start value"
            )));
        }
        images.push(j);
    }
    Perm::from_images(images).map_err(|_| Error::Inconsistent("two sheets returned to the same value".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyOpts {
    pub track: TrackOpts,
    pub base_point: Option<Complex64>,
    pub group_order_cap: usize,
}

impl Default for MonodromyOpts {
    fn default() -> Self {
        MonodromyOpts {
            track: TrackOpts::default(),
            base_point: None,
            group_order_cap: DEFAULT_GROUP_ORDER_CAP,
        }
    }
}

/// Locus with the point at infinity classified by tracking a large loop.
pub fn branch_points(poly: &BiPoly) -> Result<BranchLocus> {
    let curve = Curve::new(poly.clone())?;
    let finite_points = finite_branch_points(poly)?;
    let zs: Vec<Complex64> = finite_points.iter().map(|b| b.z).collect();
    let z0 = choose_base_point(&zs);
    let includes_infinity = if poly.w_degree() == 1 {
        false
    } else {
        let fiber = curve.fiber(z0)?;
        let path = infinity_loop(&zs, z0, cut_angle_or_zero(&zs, z0))?;
        let arrived = transport(&curve, &path, &fiber.values, &TrackOpts::default())?;
        !match_fiber(&fiber.values, &arrived)?.is_identity()
    };
    Ok(BranchLocus {
        finite_points,
        includes_infinity,
    })
}

fn cut_angle_or_zero(points: &[Complex64], z0: Complex64) -> f64 {
    if points.is_empty() {
        0.0
    } else {
        cut_angle(points, z0)
    }
}

/// Monodromy of the cover at a base point: one permutation per loop of the
/// basis (sheet labels are indices into the canonically sorted fiber).
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub curve: Curve,
    pub locus: BranchLocus,
    pub basis: LoopBasis,
    pub start_fiber: Fiber,
    pub sigmas: Vec<Perm>,
    pub sigma_inf: Perm,
    /// `None` when the closure exceeds the order cap.
    pub group: Option<PermGroup>,
    pub orbits: Vec<Vec<usize>>,
}

impl Monodromy {
    pub fn degree(&self) -> usize {
        self.start_fiber.len()
    }

    pub fn poly_id(&self) -> PolyId {
        self.curve.id()
    }

    pub fn base_point(&self) -> Complex64 {
        self.basis.base_point
    }

    pub fn is_transitive(&self) -> bool {
        self.orbits.len() == 1
    }

    /// The closed group, or the cap error.
    pub fn group(&self, cap: usize) -> Result<&PermGroup> {
        self.group.as_ref().ok_or(Error::GroupTooLarge { cap })
    }
}

pub fn monodromy_rep(poly: &BiPoly, opts: &MonodromyOpts) -> Result<Monodromy> {
    let n = poly.w_degree();
    let mut finite_points = finite_branch_points(poly)?;
    let zs: Vec<Complex64> = finite_points.iter().map(|b| b.z).collect();
    let curve = Curve::with_branch_points(poly.clone(), zs.clone());
    let z0 = opts.base_point.unwrap_or_else(|| choose_base_point(&zs));
    let start_fiber = curve.fiber(z0)?;
    let basis = loop_basis(&zs, z0)?;

    let tracked: Vec<Result<Perm>> = basis
        .loops
        .par_iter()
        .map(|lp| {
            transport(&curve, &lp.path, &start_fiber.values, &opts.track)
                .and_then(|arrived| match_fiber(&start_fiber.values, &arrived))
        })
        .collect();
    let mut sigmas = Vec::with_capacity(tracked.len());
    for (index, r) in tracked.into_iter().enumerate() {
        sigmas.push(r.map_err(|e| Error::LoopTracking {
            index,
            source: Box::new(e),
        })?);
    }

    let product = sigmas.iter().fold(Perm::identity(n), |acc, s| acc.then(s));
    let sigma_inf = product.inverse();
    if !product.then(&sigma_inf).is_identity() {
        return Err(Error::Inconsistent("product relation".into()));
    }
    if n > 1 {
        let big = infinity_loop(&zs, z0, basis.cut_angle)?;
        let arrived = transport(&curve, &big, &start_fiber.values, &opts.track).map_err(|e| {
            Error::LoopTracking {
                index: sigmas.len(),
                source: Box::new(e),
            }
        })?;
        let sigma_big = match_fiber(&start_fiber.values, &arrived)?;
        if sigma_big != product {
            return Err(Error::Inconsistent(format!(
                "large loop gives {sigma_big} but the product of local monodromies is {product}"
            )));
        }
    }

    for (lp, s) in basis.loops.iter().zip(&sigmas) {
        finite_points[lp.branch_index].unramified = s.is_identity();
    }
    let locus = BranchLocus {
        finite_points,
        includes_infinity: !sigma_inf.is_identity(),
    };
    let orbits = permgroup::orbits(n, &sigmas);
    let group = match PermGroup::close(n, &sigmas, opts.group_order_cap) {
        Ok(g) => Some(g),
        Err(Error::GroupTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Monodromy {
        curve,
        locus,
        basis,
        start_fiber,
        sigmas,
        sigma_inf,
        group,
        orbits,
    })
}

/// Rebuilds a representation from a stored locus, base point and local
/// monodromies without tracking. The fiber and loop basis are recomputed,
/// which is deterministic, so the result matches the original run.
pub fn monodromy_from_parts(
    poly: &BiPoly,
    locus: BranchLocus,
    base_point: Complex64,
    sigmas: Vec<Perm>,
    cap: usize,
) -> Result<Monodromy> {
    let n = poly.w_degree();
    let zs = locus.points();
    let curve = Curve::with_branch_points(poly.clone(), zs.clone());
    let start_fiber = curve.fiber(base_point)?;
    let basis = loop_basis(&zs, base_point)?;
    if sigmas.len() != basis.loops.len() || sigmas.iter().any(|s| s.degree() != n) {
        return Err(Error::Inconsistent("stored monodromy does not fit the loop basis".into()));
    }
    let sigma_inf = sigmas.iter().fold(Perm::identity(n), |acc, s| acc.then(s)).inverse();
    let orbits = permgroup::orbits(n, &sigmas);
    let group = match PermGroup::close(n, &sigmas, cap) {
        Ok(g) => Some(g),
        Err(Error::GroupTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Monodromy {
        curve,
        locus,
        basis,
        start_fiber,
        sigmas,
        sigma_inf,
        group,
        orbits,
    })
}

/// Relabeling that conjugates one list of local monodromies into another,
/// if any.
pub fn simultaneous_conjugator(a: &[Perm], b: &[Perm]) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    permgroup::permutation_isomorphism(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn table(t: &[&[i64]]) -> BiPoly {
        BiPoly::from_int_table(t).unwrap()
    }

    #[test]
    fn branch_point_examples() {
        let l = branch_points(&table(&[&[0, -1], &[], &[1]])).unwrap();
        assert_eq!(l.finite_points.len(), 1);
        assert!(l.finite_points[0].z.norm() < 1e-12);
        assert!(l.includes_infinity);

        let l = branch_points(&table(&[&[0, -1], &[-3], &[], &[1]])).unwrap();
        let zs = l.points();
        assert_eq!(zs.len(), 2);
        assert!((zs[0] - c(-2.0, 0.0)).norm() < 1e-12);
        assert!((zs[1] - c(2.0, 0.0)).norm() < 1e-12);

        let l = branch_points(&table(&[&[0, -1], &[1]])).unwrap();
        assert!(l.finite_points.is_empty());
        assert!(!l.includes_infinity);

        assert!(matches!(
            branch_points(&table(&[&[1], &[2], &[1]])),
            Err(Error::NotSquarefree)
        ));
    }

    #[test]
    fn base_point_examples() {
        assert_eq!(choose_base_point(&[c(0.0, 0.0)]), c(2.0, 0.0));
        assert_eq!(choose_base_point(&[c(2.0, 0.0), c(-2.0, 0.0)]), c(4.0, 0.0));
        assert_eq!(choose_base_point(&[]), c(1.0, 0.0));
        // widely spaced points have a clearance of 2, so 2002 is too close
        assert_eq!(choose_base_point(&[c(0.0, 0.0), c(2000.0, 0.0)]), c(2005.0, 0.0));
    }

    #[test]
    fn loop_basis_examples() {
        let b = loop_basis(&[c(0.0, 0.0)], c(2.0, 0.0)).unwrap();
        assert_eq!(b.loops.len(), 1);
        assert_eq!(b.loops[0].radius, 1.0);
        assert!(b.loops[0].path.is_closed());

        let b = loop_basis(&[c(-2.0, 0.0), c(2.0, 0.0)], c(4.0, 0.0)).unwrap();
        let radii: Vec<f64> = b.loops.iter().map(|l| l.radius).collect();
        assert_eq!(radii, vec![1.0, 2.0]);
        assert_eq!(b.loops[0].center, c(2.0, 0.0));
        // the corridor to -2 bends around the disc about 2
        let far = &b.loops[1];
        assert!(far.approach.segments().iter().any(|s| matches!(s, Segment::Arc { .. })));
        assert!(far.path.distance_to(c(2.0, 0.0)) >= 1.0 - 1e-12);
        // passes below (on the left of the leftward corridor)
        assert!(far.approach.distance_to(c(2.0, -1.0)) < 1e-12);

        assert!(loop_basis(&[], c(1.0, 0.0)).unwrap().loops.is_empty());
    }

    #[test]
    fn loops_clear_every_other_branch_point() {
        let pts = [c(0.0, 0.0), c(1.0, 0.2), c(-1.0, 1.0), c(0.5, -2.0), c(2.0, 0.0)];
        let z0 = choose_base_point(&pts);
        let basis = loop_basis(&pts, z0).unwrap();
        let eps = branch_clearance(&pts);
        for lp in &basis.loops {
            assert!(lp.path.is_closed());
            for (j, b) in pts.iter().enumerate() {
                let d = lp.path.distance_to(*b);
                if j == lp.branch_index {
                    assert!((d - lp.radius).abs() < 1e-12);
                } else {
                    assert!(d >= eps);
                }
            }
        }
    }

    #[test]
    fn square_root_monodromy() {
        let m = monodromy_rep(&table(&[&[0, -1], &[], &[1]]), &MonodromyOpts::default()).unwrap();
        assert_eq!(m.sigmas.len(), 1);
        assert_eq!(m.sigmas[0].to_string(), "(1 2)");
        assert_eq!(m.sigma_inf.to_string(), "(1 2)");
        assert_eq!(m.group.as_ref().unwrap().order(), 2);
        assert!(m.is_transitive());
        assert!(m.locus.includes_infinity);
    }

    #[test]
    fn sixth_root_monodromy() {
        let m = monodromy_rep(&table(&[&[0, -1], &[], &[], &[], &[], &[], &[1]]), &MonodromyOpts::default())
            .unwrap();
        assert_eq!(m.sigmas.len(), 1);
        assert_eq!(m.sigmas[0].cycle_type(), vec![6]);
        assert_eq!(m.group.as_ref().unwrap().order(), 6);
    }

    #[test]
    fn reducible_product_has_two_orbits() {
        // (w^2 - z)(w^3 - z) = w^5 - z w^3 - z w^2 + z^2
        let m = monodromy_rep(&table(&[&[0, 0, 1], &[], &[0, -1], &[0, -1], &[], &[1]]), &MonodromyOpts::default())
            .unwrap();
        let mut sizes: Vec<usize> = m.orbits.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
        assert!(!m.is_transitive());
        assert_eq!(m.degree(), 5);
    }

    #[test]
    fn base_point_independence() {
        let p = table(&[&[0, -1], &[-3], &[], &[1]]);
        let a = monodromy_rep(&p, &MonodromyOpts::default()).unwrap();
        let b = monodromy_rep(
            &p,
            &MonodromyOpts {
                base_point: Some(c(3.0, 1.0)),
                ..MonodromyOpts::default()
            },
        )
        .unwrap();
        assert_eq!(a.group.as_ref().unwrap().order(), 6);
        assert!(simultaneous_conjugator(&a.sigmas, &b.sigmas).is_some());
    }

    #[test]
    fn unramified_pole_is_flagged() {
        // w = 1/z: a coefficient pole at 0 with trivial monodromy
        let p = table(&[&[-1], &[0, 1]]);
        let m = monodromy_rep(&p, &MonodromyOpts::default()).unwrap();
        assert_eq!(m.locus.finite_points.len(), 1);
        assert_eq!(m.locus.finite_points[0].origin, BranchOrigin::Pole);
        assert!(m.locus.finite_points[0].unramified);
    }

    #[test]
    fn rebuilt_from_parts_matches() {
        let p = table(&[&[0, -1], &[-3], &[], &[1]]);
        let m = monodromy_rep(&p, &MonodromyOpts::default()).unwrap();
        let r = monodromy_from_parts(&p, m.locus.clone(), m.base_point(), m.sigmas.clone(), 512).unwrap();
        assert_eq!(r.start_fiber, m.start_fiber);
        assert_eq!(r.basis, m.basis);
        assert_eq!(r.sigma_inf, m.sigma_inf);
        assert_eq!(r.group.unwrap().order(), 6);
        assert!(monodromy_from_parts(&p, m.locus.clone(), m.base_point(), vec![], 512).is_err());
    }

    #[test]
    fn touching_collinear_discs() {
        let pts = [c(-4.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0), c(5.0, 0.0)];
        let z0 = choose_base_point(&pts);
        let basis = loop_basis(&pts, z0).unwrap();
        for lp in &basis.loops {
            assert!(lp.path.clearance_from(&pts) >= 0.5 - 1e-9);
        }
    }
}
