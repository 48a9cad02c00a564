//! Analytic continuation of root-function germs along paths.
//!
//! A path is a chain of line segments and circular arcs. Fibers are carried
//! along it by an Euler predictor (`dw/dz = -P_z/P_w`) and a Newton
//! corrector; a step is kept only when every corrected root stays close to
//! its prediction relative to the current fiber separation, which pins the
//! sheet each root belongs to.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactpoly::BiPoly;
use crate::monodromy;
use crate::numroots::{self, Fiber, SEP_MIN, TOL_RES};
use crate::permgroup::Perm;

/// Absolute tolerance for deciding that two germs coincide.
pub const AGREEMENT_TOL: f64 = 1e-8;
/// Endpoints of consecutive segments must agree to this (scaled) tolerance.
pub const JOIN_TOL: f64 = 1e-12;

/// Stable identifier of a normalized polynomial (FNV-1a of its canonical
/// text).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolyId(pub u64);

impl PolyId {
    pub fn of(poly: &BiPoly) -> PolyId {
        let text = poly.to_string();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        PolyId(h)
    }
}

impl fmt::Display for PolyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// A curve ready for tracking: the normalized polynomial, its
/// denominator-free floating-point form and its finite branch locus.
#[derive(Clone, Debug)]
pub struct Curve {
    poly: BiPoly,
    id: PolyId,
    /// `coeffs[k][j]`: coefficient of `z^j w^k` in `L·P`.
    coeffs: Vec<Vec<f64>>,
    branch_points: Vec<Complex64>,
    clearance: f64,
}

/// `max(1e-6, 1e-3 · min distance between distinct branch points)`.
pub fn branch_clearance(points: &[Complex64]) -> f64 {
    let sep = numroots::min_separation(points);
    if sep == f64::MAX {
        1e-6
    } else {
        (1e-3 * sep).max(1e-6)
    }
}

impl Curve {
    pub fn new(poly: BiPoly) -> Result<Curve> {
        let points = monodromy::finite_branch_points(&poly)?;
        Ok(Self::with_branch_points(poly, points.iter().map(|b| b.z).collect()))
    }

    /// Uses a caller-supplied finite branch locus (which must contain the
    /// true one).
    pub fn with_branch_points(poly: BiPoly, branch_points: Vec<Complex64>) -> Curve {
        let coeffs = poly.cleared().iter().map(|c| c.to_f64_coeffs()).collect();
        let clearance = branch_clearance(&branch_points);
        Curve {
            id: PolyId::of(&poly),
            poly,
            coeffs,
            branch_points,
            clearance,
        }
    }

    pub fn poly(&self) -> &BiPoly {
        &self.poly
    }

    pub fn id(&self) -> PolyId {
        self.id
    }

    pub fn degree(&self) -> usize {
        self.poly.w_degree()
    }

    pub fn branch_points(&self) -> &[Complex64] {
        &self.branch_points
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    /// Coefficients in `w` of the (denominator-free) fiber polynomial.
    pub fn fiber_coeffs(&self, z: Complex64) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| horner_real(c, z)).collect()
    }

    fn fiber_coeffs_dz(&self, z: Complex64) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .map(|c| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &a) in c.iter().enumerate().skip(1).rev() {
                    acc = acc * z + a * j as f64;
                }
                acc
            })
            .collect()
    }

    /// `dw/dz = -P_z / P_w` at a regular point of the curve.
    pub fn slope(&self, z: Complex64, w: Complex64) -> Complex64 {
        let (_, pw) = numroots::eval_with_derivative(&self.fiber_coeffs(z), w);
        let pz = numroots::eval(&self.fiber_coeffs_dz(z), w);
        -pz / pw
    }

    pub fn fiber(&self, z: Complex64) -> Result<Fiber> {
        if self.poly.is_excluded(z, 1e-9) {
            return Err(Error::DegenerateBasePoint { z });
        }
        let values = numroots::all_roots(&self.fiber_coeffs(z))?;
        Ok(Fiber { z0: z, values })
    }

    /// Residual of `P(z, w)` relative to the usual scale.
    pub fn residual(&self, z: Complex64, w: Complex64) -> f64 {
        numroots::residual(&self.fiber_coeffs(z), w)
    }

    pub fn polish(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        numroots::newton_polish(&self.fiber_coeffs(z), w)
    }

    fn distance_to_locus(&self, z: Complex64) -> f64 {
        self.branch_points
            .iter()
            .map(|b| (b - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Rejects paths that come within the branch clearance of the locus.
    pub fn check_clearance(&self, path: &PathSpec) -> Result<()> {
        for b in &self.branch_points {
            let d = path.distance_to(*b);
            if d < self.clearance {
                return Err(Error::PathTooClose {
                    branch: *b,
                    distance: d,
                    clearance: self.clearance,
                });
            }
        }
        Ok(())
    }
}

fn horner_real(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// A germ of a root function: a point of the curve off the branch locus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Germ {
    pub poly_id: PolyId,
    pub z: Complex64,
    pub w: Complex64,
}

impl Germ {
    pub fn new(curve: &Curve, z: Complex64, w: Complex64) -> Result<Germ> {
        let residual = curve.residual(z, w);
        if residual > TOL_RES {
            return Err(Error::NotOnCurve { z, w, residual });
        }
        if curve.distance_to_locus(z) < curve.clearance() {
            return Err(Error::PathTooClose {
                branch: z,
                distance: curve.distance_to_locus(z),
                clearance: curve.clearance(),
            });
        }
        Ok(Germ {
            poly_id: curve.id(),
            z,
            w,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Line {
        a: Complex64,
        b: Complex64,
    },
    /// Counterclockwise when `theta1 > theta0`.
    Arc {
        center: Complex64,
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
}

impl Segment {
    pub fn point(&self, t: f64) -> Complex64 {
        match *self {
            Segment::Line { a, b } => a + (b - a) * t,
            Segment::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => center + Complex64::from_polar(radius, theta0 + (theta1 - theta0) * t),
        }
    }

    pub fn start(&self) -> Complex64 {
        self.point(0.0)
    }

    pub fn end(&self) -> Complex64 {
        self.point(1.0)
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { a, b } => (b - a).norm(),
            Segment::Arc {
                radius,
                theta0,
                theta1,
                ..
            } => radius * (theta1 - theta0).abs(),
        }
    }

    pub fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { a, b } => Segment::Line { a: b, b: a },
            Segment::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => Segment::Arc {
                center,
                radius,
                theta0: theta1,
                theta1: theta0,
            },
        }
    }

    pub fn distance_to(&self, p: Complex64) -> f64 {
        match *self {
            Segment::Line { a, b } => {
                let d = b - a;
                let len2 = d.norm_sqr();
                if len2 == 0.0 {
                    return (p - a).norm();
                }
                let t = ((p - a) * d.conj()).re / len2;
                (p - self.point(t.clamp(0.0, 1.0))).norm()
            }
            Segment::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => {
                let rel = p - center;
                let (lo, hi) = (theta0.min(theta1), theta0.max(theta1));
                let within = hi - lo >= TAU || {
                    let phi = rel.im.atan2(rel.re);
                    lo + (phi - lo).rem_euclid(TAU) <= hi
                };
                if within {
                    (rel.norm() - radius).abs()
                } else {
                    (p - self.start()).norm().min((p - self.end()).norm())
                }
            }
        }
    }
}

/// A continuous chain of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    segments: Vec<Segment>,
}

fn joins(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= JOIN_TOL * a.norm().max(b.norm()).max(1.0)
}

impl PathSpec {
    pub fn new(segments: Vec<Segment>) -> Result<PathSpec> {
        if segments.is_empty() {
            return Err(Error::InvalidPath("no segments".into()));
        }
        for s in &segments {
            let finite = match *s {
                Segment::Line { a, b } => a.is_finite() && b.is_finite(),
                Segment::Arc {
                    center,
                    radius,
                    theta0,
                    theta1,
                } => center.is_finite() && radius.is_finite() && radius > 0.0 && theta0.is_finite() && theta1.is_finite(),
            };
            if !finite {
                return Err(Error::InvalidPath(format!("degenerate segment {s:?}")));
            }
        }
        for (k, w) in segments.windows(2).enumerate() {
            if !joins(w[0].end(), w[1].start()) {
                return Err(Error::InvalidPath(format!(
                    "segment {k} ends at {} but segment {} starts at {}",
                    w[0].end(),
                    k + 1,
                    w[1].start()
                )));
            }
        }
        Ok(PathSpec { segments })
    }

    pub fn line(a: Complex64, b: Complex64) -> PathSpec {
        PathSpec {
            segments: vec![Segment::Line { a, b }],
        }
    }

    /// Polyline through the given vertices.
    pub fn polyline(vertices: &[Complex64]) -> Result<PathSpec> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath("polyline needs two vertices".into()));
        }
        PathSpec::new(
            vertices
                .windows(2)
                .map(|w| Segment::Line { a: w[0], b: w[1] })
                .collect(),
        )
    }

    /// Full counterclockwise circle about `center` starting at angle
    /// `theta0`.
    pub fn circle(center: Complex64, radius: f64, theta0: f64) -> PathSpec {
        PathSpec {
            segments: vec![Segment::Arc {
                center,
                radius,
                theta0,
                theta1: theta0 + TAU,
            }],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> Complex64 {
        self.segments[0].start()
    }

    pub fn end(&self) -> Complex64 {
        self.segments[self.segments.len() - 1].end()
    }

    pub fn is_closed(&self) -> bool {
        joins(self.start(), self.end())
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    pub fn reversed(&self) -> PathSpec {
        PathSpec {
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
        }
    }

    pub fn then(&self, other: &PathSpec) -> Result<PathSpec> {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        PathSpec::new(segments)
    }

    pub fn distance_to(&self, p: Complex64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance from the path to any of `points`.
    pub fn clearance_from(&self, points: &[Complex64]) -> f64 {
        points
            .iter()
            .map(|&p| self.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Resamples every segment into `per_segment` chords.
    pub fn to_polyline(&self, per_segment: usize) -> PathSpec {
        let mut vertices = vec![self.start()];
        for s in &self.segments {
            let k = match s {
                Segment::Line { .. } => 1,
                Segment::Arc { .. } => per_segment.max(1),
            };
            for i in 1..=k {
                vertices.push(s.point(i as f64 / k as f64));
            }
        }
        PathSpec {
            segments: vertices
                .windows(2)
                .map(|w| Segment::Line { a: w[0], b: w[1] })
                .collect(),
        }
    }

    /// The polyline form of this path with each interior vertex moved by
    /// at most `max_shift`; endpoints stay fixed. Lines are subdivided so
    /// the jitter bends them too.
    pub fn jittered<R: Rng>(&self, max_shift: f64, per_segment: usize, rng: &mut R) -> PathSpec {
        let mut vertices = vec![self.start()];
        for s in &self.segments {
            let k = per_segment.max(1);
            for i in 1..=k {
                vertices.push(s.point(i as f64 / k as f64));
            }
        }
        let last = vertices.len() - 1;
        for v in &mut vertices[1..last] {
            let r = max_shift * rng.random::<f64>().sqrt();
            let theta = TAU * rng.random::<f64>();
            *v += Complex64::from_polar(r, theta);
        }
        PathSpec {
            segments: vertices
                .windows(2)
                .map(|w| Segment::Line { a: w[0], b: w[1] })
                .collect(),
        }
    }

    /// One segment per line: `L re_a im_a re_b im_b` or
    /// `A re_c im_c radius theta0 theta1`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match *s {
                Segment::Line { a, b } => {
                    out.push_str(&format!("L {} {} {} {}\n", a.re, a.im, b.re, b.im));
                }
                Segment::Arc {
                    center,
                    radius,
                    theta0,
                    theta1,
                } => {
                    out.push_str(&format!(
                        "A {} {} {} {} {}\n",
                        center.re, center.im, radius, theta0, theta1
                    ));
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<PathSpec> {
        let mut segments = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or_default();
            let nums = parts
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidPath(format!("line {}: {e}", lineno + 1)))?;
            let seg = match (tag, nums.as_slice()) {
                ("L", &[ar, ai, br, bi]) => Segment::Line {
                    a: Complex64::new(ar, ai),
                    b: Complex64::new(br, bi),
                },
                ("A", &[cr, ci, radius, theta0, theta1]) => Segment::Arc {
                    center: Complex64::new(cr, ci),
                    radius,
                    theta0,
                    theta1,
                },
                _ => {
                    return Err(Error::InvalidPath(format!(
                        "line {}: expected `L a.re a.im b.re b.im` or `A c.re c.im r t0 t1`",
                        lineno + 1
                    )))
                }
            };
            segments.push(seg);
        }
        PathSpec::new(segments)
    }
}

/// Step-control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOpts {
    pub tol_res: f64,
    /// Corrected roots must stay within this fraction of the fiber
    /// separation from their predictions.
    pub sep_fraction: f64,
    /// Initial step as a fraction of each segment's length.
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for TrackOpts {
    fn default() -> Self {
        TrackOpts {
            tol_res: TOL_RES,
            sep_fraction: 1.0 / 3.0,
            h_init: 0.1,
            h_min: 1e-12,
            max_steps: 200_000,
        }
    }
}

impl TrackOpts {
    pub fn validate(&self) -> Result<()> {
        if !(self.sep_fraction > 0.0 && self.sep_fraction <= 0.5) {
            return Err(Error::Malformed("sep_fraction must lie in (0, 1/2]".into()));
        }
        if !(self.h_min > 0.0) || !(self.h_init > 0.0) || !(self.tol_res > 0.0) {
            return Err(Error::Malformed("tolerances and step sizes must be positive".into()));
        }
        Ok(())
    }
}

fn correct(q: &[Complex64], start: Complex64, tol_res: f64) -> Option<Complex64> {
    let mut w = start;
    for _ in 0..8 {
        let (f, df) = numroots::eval_with_derivative(q, w);
        if df.norm() == 0.0 {
            return None;
        }
        let step = f / df;
        w -= step;
        if !w.is_finite() {
            return None;
        }
        if step.norm() <= 4.0 * f64::EPSILON * w.norm().max(1.0) {
            break;
        }
    }
    (numroots::residual(q, w) <= tol_res).then_some(w)
}

/// Carries the full fiber `values` (indexed by sheet) along `path`; the
/// returned values keep the input indexing.
pub fn transport(
    curve: &Curve,
    path: &PathSpec,
    values: &[Complex64],
    opts: &TrackOpts,
) -> Result<Vec<Complex64>> {
    opts.validate()?;
    curve.check_clearance(path)?;
    let total = path.length();
    let mut done = 0.0;
    let mut ws = values.to_vec();
    let mut steps = 0usize;
    for seg in path.segments() {
        let len = seg.length();
        if len == 0.0 {
            continue;
        }
        let mut s = 0.0f64;
        let mut h = opts.h_init * len;
        let mut easy = 0;
        let mut z = seg.start();
        while s < len {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::CannotCertify {
                    furthest: done + s,
                    total,
                });
            }
            let mut h_eff = h.min(len - s).min(0.5 * curve.distance_to_locus(z));
            if len - s - h_eff <= 1e-14 * len {
                h_eff = len - s;
            }
            let s_new = if h_eff == len - s { len } else { s + h_eff };
            let z_new = seg.point(s_new / len);
            let dz = z_new - z;
            let q = curve.fiber_coeffs(z_new);

            let mut accepted = true;
            let mut corrected = Vec::with_capacity(ws.len());
            let mut worst_pc = 0.0f64;
            let mut worst_move = 0.0f64;
            for &w in &ws {
                let pred = w + curve.slope(z, w) * dz;
                match correct(&q, pred, opts.tol_res) {
                    Some(c) => {
                        worst_pc = worst_pc.max((c - pred).norm());
                        worst_move = worst_move.max((c - w).norm());
                        corrected.push(c);
                    }
                    None => {
                        accepted = false;
                        break;
                    }
                }
            }
            if accepted {
                let sep_new = numroots::min_separation(&corrected);
                let sep = numroots::min_separation(&ws).min(sep_new);
                accepted = sep_new > SEP_MIN
                    && worst_pc <= opts.sep_fraction * sep
                    && worst_move <= 0.5 * sep;
            }
            if accepted {
                ws = corrected;
                s = s_new;
                z = z_new;
                easy += 1;
                if easy >= 3 {
                    h *= 2.0;
                    easy = 0;
                }
            } else {
                h = h_eff / 2.0;
                easy = 0;
                if h < opts.h_min {
                    return Err(Error::CannotCertify {
                        furthest: done + s,
                        total,
                    });
                }
            }
        }
        done += len;
    }
    Ok(ws)
}

fn check_start(path: &PathSpec, z: Complex64) -> Result<()> {
    if joins(path.start(), z) {
        Ok(())
    } else {
        Err(Error::InvalidPath(format!(
            "path starts at {} but the germ lives over {}",
            path.start(),
            z
        )))
    }
}

/// Transports a whole fiber; returns the arrival fiber in canonical order
/// and the permutation `pi` with `arrival[pi(i)] = transport(start[i])`.
pub fn continue_fiber(
    curve: &Curve,
    fiber: &Fiber,
    path: &PathSpec,
    opts: &TrackOpts,
) -> Result<(Fiber, Perm)> {
    check_start(path, fiber.z0)?;
    let arrived = transport(curve, path, &fiber.values, opts)?;
    let mut sorted = arrived.clone();
    numroots::sort_canonical(&mut sorted);
    let images = arrived
        .iter()
        .map(|w| sorted.iter().position(|v| v == w).expect("sorted copy"))
        .collect();
    let perm = Perm::from_images(images)
        .map_err(|_| Error::Inconsistent("transported sheets collided".into()))?;
    Ok((
        Fiber {
            z0: path.end(),
            values: sorted,
        },
        perm,
    ))
}

/// Continues a single germ along `path` (the rest of its fiber is carried
/// along to certify each step).
pub fn continue_germ(curve: &Curve, germ: &Germ, path: &PathSpec, opts: &TrackOpts) -> Result<Germ> {
    if germ.poly_id != curve.id() {
        return Err(Error::Malformed("germ belongs to a different polynomial".into()));
    }
    check_start(path, germ.z)?;
    let mut fiber = curve.fiber(germ.z)?;
    let slot = fiber
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - germ.w).norm().total_cmp(&(b.1 - germ.w).norm()))
        .map(|(i, _)| i)
        .expect("nonempty fiber");
    fiber.values[slot] = germ.w;
    let arrived = transport(curve, path, &fiber.values, opts)?;
    Ok(Germ {
        poly_id: germ.poly_id,
        z: path.end(),
        w: arrived[slot],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyCheck {
    pub agree: bool,
    pub distance: f64,
    pub end_1: Complex64,
    pub end_2: Complex64,
}

/// Continues `germ` along both paths and compares the terminal values
/// after a final Newton polish.
pub fn check_homotopy_invariance(
    curve: &Curve,
    germ: &Germ,
    p1: &PathSpec,
    p2: &PathSpec,
    opts: &TrackOpts,
) -> Result<HomotopyCheck> {
    if !joins(p1.start(), p2.start()) || !joins(p1.end(), p2.end()) {
        return Err(Error::InvalidPath("paths do not share endpoints".into()));
    }
    let g1 = continue_germ(curve, germ, p1, opts)?;
    let g2 = continue_germ(curve, germ, p2, opts)?;
    let z = p1.end();
    let a = curve.polish(z, g1.w)?;
    let b = curve.polish(z, g2.w)?;
    let distance = (a - b).norm();
    Ok(HomotopyCheck {
        agree: distance <= AGREEMENT_TOL,
        distance,
        end_1: a,
        end_2: b,
    })
}
