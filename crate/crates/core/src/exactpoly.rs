//! Exact polynomial arithmetic over `Q` and `Q(z)`.
//!
//! [`UniPoly`] is a univariate polynomial in `z` with rational coefficients,
//! [`RatFunc`] a reduced quotient of two of them, and [`BiPoly`] a polynomial
//! in `w` whose coefficients are rational functions of `z`, normalized to be
//! monic in `w`. Discriminants are computed with a subresultant
//! pseudo-remainder sequence over `Q[z]`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numroots;

pub type Rational = BigRational;

/// Renders a rational as `num/den`, always with an explicit denominator.
pub fn rational_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` or a bare integer.
pub fn rational_from_str(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Malformed(format!("not a rational: {s:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse(d)?;
            if d.is_zero() {
                return Err(Error::Malformed(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(parse(n)?, d))
        }
        None => Ok(Rational::from_integer(parse(s)?)),
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // out of f64 range: saturate with the right sign
        if r.is_negative() {
            f64::MIN
        } else {
            f64::MAX
        }
    })
}

/// Neumaier-compensated sum of complex terms.
fn compensated_sum(terms: impl Iterator<Item = Complex64>) -> Complex64 {
    fn push(sum: &mut f64, comp: &mut f64, x: f64) {
        let t = *sum + x;
        if sum.abs() >= x.abs() {
            *comp += (*sum - t) + x;
        } else {
            *comp += (x - t) + *sum;
        }
        *sum = t;
    }
    let (mut re, mut re_c, mut im, mut im_c) = (0.0, 0.0, 0.0, 0.0);
    for t in terms {
        push(&mut re, &mut re_c, t.re);
        push(&mut im, &mut im_c, t.im);
    }
    Complex64::new(re + re_c, im + im_c)
}

/// Polynomial in `z` with rational coefficients, lowest degree first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct UniPoly {
    coeffs: Vec<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Rational::from_integer(c.into())).collect())
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `z`.
    pub fn z() -> Self {
        Self::new(vec![Rational::zero(), Rational::one()])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn lead(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn monic(&self) -> Self {
        match self.lead() {
            Some(l) if !l.is_one() => self.scale(&l.recip()),
            _ => self.clone(),
        }
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(k.into()))
                .collect(),
        )
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead_inv = divisor.coeffs[dd].recip();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rational::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let top = rem.len() - 1;
            let c = &rem[top] * &lead_inv;
            let shift = top - dd;
            for (k, d) in divisor.coeffs.iter().enumerate() {
                rem[shift + k] -= &c * d;
            }
            quot[shift] = c;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Division known to be exact.
    pub fn exact_div(&self, divisor: &Self) -> Self {
        let (q, r) = self.div_rem(divisor);
        debug_assert!(r.is_zero(), "inexact division");
        q
    }

    /// Monic greatest common divisor (zero only when both inputs are zero).
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.monic(), other.monic());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// Product of the distinct irreducible factors, made monic.
    pub fn squarefree_part(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Malformed("squarefree part of the zero polynomial".into()));
        }
        let g = self.gcd(&self.derivative());
        Ok(self.exact_div(&g).monic())
    }

    pub fn eval(&self, z: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * z + c)
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational_to_f64).collect()
    }

    /// Complex evaluation with compensated summation of the terms.
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        let mut power = Complex64::new(1.0, 0.0);
        let terms = self.coeffs.iter().map(|c| {
            let t = power * rational_to_f64(c);
            power *= z;
            t
        });
        compensated_sum(terms.collect::<Vec<_>>().into_iter())
    }

    /// Numerical roots (with the usual separation requirements of
    /// [`numroots::all_roots`]); empty for constants.
    pub fn complex_roots(&self) -> Result<Vec<Complex64>> {
        match self.degree() {
            None | Some(0) => Ok(Vec::new()),
            Some(_) => {
                let q: Vec<Complex64> = self
                    .to_f64_coeffs()
                    .into_iter()
                    .map(|c| Complex64::new(c, 0.0))
                    .collect();
                numroots::all_roots(&q)
            }
        }
    }

    /// Canonical text with the given variable name, highest degree first.
    pub fn to_string_in(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match k {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{k}"),
            };
            push_term(&mut out, c, &mono);
        }
        out
    }
}

/// Appends `c*mono` to a sum being rendered, handling signs and unit
/// coefficients.
fn push_term(out: &mut String, c: &Rational, mono: &str) {
    let neg = c.is_negative();
    if out.is_empty() {
        if neg {
            out.push('-');
        }
    } else {
        out.push_str(if neg { " - " } else { " + " });
    }
    let a = c.abs();
    if mono.is_empty() {
        out.push_str(&a.to_string());
    } else if a.is_one() {
        out.push_str(mono);
    } else {
        out.push_str(&format!("{a}*{mono}"));
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_in("z"))
    }
}

impl fmt::Debug for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UniPoly({self})")
    }
}

impl Add for &UniPoly {
    type Output = UniPoly;
    fn add(self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UniPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &UniPoly {
    type Output = UniPoly;
    fn sub(self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UniPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &UniPoly {
    type Output = UniPoly;
    fn mul(self, rhs: &UniPoly) -> UniPoly {
        if self.is_zero() || rhs.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }
}

impl Neg for &UniPoly {
    type Output = UniPoly;
    fn neg(self) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

/// Reduced rational function `numer/denom` with monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    numer: UniPoly,
    denom: UniPoly,
}

impl RatFunc {
    pub fn new(numer: UniPoly, denom: UniPoly) -> Result<Self> {
        if denom.is_zero() {
            return Err(Error::Malformed("rational function with zero denominator".into()));
        }
        if numer.is_zero() {
            return Ok(Self::zero());
        }
        let g = numer.gcd(&denom);
        let (n, d) = (numer.exact_div(&g), denom.exact_div(&g));
        let l = d.lead().expect("nonzero").recip();
        Ok(RatFunc {
            numer: n.scale(&l),
            denom: d.scale(&l),
        })
    }

    pub fn poly(p: UniPoly) -> Self {
        RatFunc {
            numer: p,
            denom: UniPoly::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Self::poly(UniPoly::constant(c))
    }

    pub fn zero() -> Self {
        Self::poly(UniPoly::zero())
    }

    pub fn one() -> Self {
        Self::poly(UniPoly::one())
    }

    pub fn numer(&self) -> &UniPoly {
        &self.numer
    }

    pub fn denom(&self) -> &UniPoly {
        &self.denom
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.numer.is_one() && self.denom.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.denom.is_one()
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Malformed("reciprocal of zero".into()));
        }
        RatFunc::new(self.denom.clone(), self.numer.clone())
    }

    pub fn div(&self, rhs: &RatFunc) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn eval(&self, z: &Rational) -> Option<Rational> {
        let d = self.denom.eval(z);
        (!d.is_zero()).then(|| self.numer.eval(z) / d)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.numer.eval_complex(z) / self.denom.eval_complex(z)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom.is_one() {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "({})/({})", self.numer, self.denom)
        }
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFunc({self})")
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        let n = &(&self.numer * &rhs.denom) + &(&rhs.numer * &self.denom);
        RatFunc::new(n, &self.denom * &rhs.denom).expect("nonzero denominators")
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self + &(-rhs)
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        RatFunc::new(&self.numer * &rhs.numer, &self.denom * &rhs.denom)
            .expect("nonzero denominators")
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc {
            numer: -&self.numer,
            denom: self.denom.clone(),
        }
    }
}

/// Monic polynomial in `w` over `Q(z)`.
#[derive(Clone)]
pub struct BiPoly {
    /// `coeffs[k]` multiplies `w^k`; `coeffs[n] == 1`.
    coeffs: Vec<RatFunc>,
    /// Monic squarefree polynomial whose roots are the excluded z-values.
    excluded: UniPoly,
    excluded_points: Vec<Complex64>,
}

impl BiPoly {
    /// Normalizes a polynomial in `w` (coefficients lowest power first) to
    /// be monic, recording where the original leading coefficient or any
    /// denominator vanishes.
    pub fn normalize_monic(raw: &[RatFunc]) -> Result<Self> {
        let top = raw
            .iter()
            .rposition(|c| !c.is_zero())
            .ok_or_else(|| Error::Malformed("zero polynomial in w".into()))?;
        if top == 0 {
            return Err(Error::Malformed("polynomial has degree 0 in w".into()));
        }
        let lead = &raw[top];
        let lead_inv = lead.recip()?;
        let coeffs: Vec<RatFunc> = raw[..=top].iter().map(|c| c * &lead_inv).collect();
        let mut bad = lead.numer().clone();
        for c in raw[..=top].iter().chain(coeffs.iter()) {
            bad = &bad * c.denom();
        }
        let excluded = bad.squarefree_part()?;
        let excluded_points = excluded.complex_roots()?;
        Ok(BiPoly {
            coeffs,
            excluded,
            excluded_points,
        })
    }

    /// Convenience constructor from polynomial coefficients in `Q[z]`.
    pub fn from_polys(raw: &[UniPoly]) -> Result<Self> {
        let rf: Vec<RatFunc> = raw.iter().cloned().map(RatFunc::poly).collect();
        Self::normalize_monic(&rf)
    }

    /// Integer coefficient table: `table[k]` lists the coefficients of the
    /// `Q[z]` coefficient of `w^k`, lowest power of `z` first.
    pub fn from_int_table(table: &[&[i64]]) -> Result<Self> {
        let polys: Vec<UniPoly> = table.iter().map(|c| UniPoly::from_ints(c)).collect();
        Self::from_polys(&polys)
    }

    pub fn w_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[RatFunc] {
        &self.coeffs
    }

    pub fn excluded_poly(&self) -> &UniPoly {
        &self.excluded
    }

    /// Numerical values of the excluded z-values.
    pub fn excluded_z(&self) -> &[Complex64] {
        &self.excluded_points
    }

    /// Monic least common multiple of the coefficient denominators.
    pub fn denominator_lcm(&self) -> UniPoly {
        self.coeffs.iter().fold(UniPoly::one(), |acc, c| {
            let g = acc.gcd(c.denom());
            (&acc * c.denom()).exact_div(&g).monic()
        })
    }

    /// `L·P` with `L` the denominator lcm, as a polynomial in `Q[z][w]`.
    pub fn cleared(&self) -> Vec<UniPoly> {
        let l = self.denominator_lcm();
        self.coeffs
            .iter()
            .map(|c| (&l * c.numer()).exact_div(c.denom()))
            .collect()
    }

    /// Partial derivative in `w`, as a polynomial in `Q(z)[w]`.
    pub fn derivative_w(&self) -> Vec<RatFunc> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * &RatFunc::constant(Rational::from_integer(k.into())))
            .collect()
    }

    /// Discriminant of `P` in `w`, as a rational function of `z`. For monic
    /// `P` this equals the product of squared root differences.
    pub fn discriminant_z(&self) -> RatFunc {
        let n = self.w_degree();
        let cleared = self.cleared();
        let lead = cleared[n].clone();
        let deriv: Vec<UniPoly> = cleared
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale(&Rational::from_integer(k.into())))
            .collect();
        let res = resultant_w(&cleared, &deriv);
        let sign = if (n * (n - 1) / 2) % 2 == 1 {
            -Rational::one()
        } else {
            Rational::one()
        };
        RatFunc::new(res.scale(&sign), lead.pow((2 * n - 1) as u32))
            .expect("leading coefficient is nonzero")
    }

    /// Specialization at `z0`: the monic fiber polynomial in `w`.
    pub fn eval_fiber_poly(&self, z0: Complex64) -> Result<Vec<Complex64>> {
        if self.is_excluded(z0, 1e-9) {
            return Err(Error::DegenerateBasePoint { z: z0 });
        }
        Ok(self.coeffs.iter().map(|c| c.eval_complex(z0)).collect())
    }

    /// Whether `z0` lies within `tol` (relative to `max(1,|z0|)`) of an
    /// excluded value.
    pub fn is_excluded(&self, z0: Complex64, tol: f64) -> bool {
        let scale = z0.norm().max(1.0);
        self.excluded_points
            .iter()
            .any(|e| (e - z0).norm() <= tol * scale)
    }

    /// Canonical text: the denominator-cleared polynomial with terms ordered
    /// by (w-degree desc, z-degree desc), in the variable `var`.
    pub fn to_string_in(&self, var: &str) -> String {
        let cleared = self.cleared();
        let mut out = String::new();
        for (k, c) in cleared.iter().enumerate().rev() {
            for (j, a) in c.coeffs().iter().enumerate().rev() {
                if a.is_zero() {
                    continue;
                }
                let zpart = match j {
                    0 => None,
                    1 => Some("z".to_string()),
                    _ => Some(format!("z^{j}")),
                };
                let wpart = match k {
                    0 => None,
                    1 => Some(var.to_string()),
                    _ => Some(format!("{var}^{k}")),
                };
                let mono = [zpart, wpart].into_iter().flatten().collect::<Vec<_>>().join("*");
                push_term(&mut out, a, &mono);
            }
        }
        out
    }
}

impl PartialEq for BiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs && self.excluded == other.excluded
    }
}

impl Eq for BiPoly {}

impl std::hash::Hash for BiPoly {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
        self.excluded.hash(state);
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_in("w"))
    }
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiPoly({self})")
    }
}

fn w_degree(p: &[UniPoly]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

fn trim_w(mut p: Vec<UniPoly>) -> Vec<UniPoly> {
    while p.last().is_some_and(UniPoly::is_zero) {
        p.pop();
    }
    p
}

/// Pseudo-remainder of `a` by `b` in `Q[z][w]`:
/// `lc(b)^(deg a - deg b + 1) · a = q·b + r`.
fn pseudo_rem(a: &[UniPoly], b: &[UniPoly]) -> Vec<UniPoly> {
    let db = w_degree(b).expect("nonzero divisor");
    let lb = &b[db];
    let mut r = trim_w(a.to_vec());
    let da = match w_degree(&r) {
        Some(d) if d >= db => d,
        _ => return r,
    };
    let mut steps = 0usize;
    while let Some(dr) = w_degree(&r) {
        if dr < db {
            break;
        }
        let lr = r[dr].clone();
        let shift = dr - db;
        for c in r.iter_mut() {
            *c = &*c * lb;
        }
        for (k, bk) in b.iter().enumerate() {
            r[shift + k] = &r[shift + k] - &(&lr * bk);
        }
        r = trim_w(r);
        steps += 1;
    }
    let missing = (da - db + 1) - steps;
    if missing > 0 {
        let f = lb.pow(missing as u32);
        for c in r.iter_mut() {
            *c = &*c * &f;
        }
    }
    r
}

/// Resultant in `w` of two polynomials in `Q[z][w]`, by the subresultant
/// pseudo-remainder sequence.
pub fn resultant_w(a: &[UniPoly], b: &[UniPoly]) -> UniPoly {
    let (mut a, mut b) = (trim_w(a.to_vec()), trim_w(b.to_vec()));
    let (Some(mut da), Some(mut db)) = (w_degree(&a), w_degree(&b)) else {
        return UniPoly::zero();
    };
    let mut sign_negative = false;
    if da < db {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut da, &mut db);
        if da % 2 == 1 && db % 2 == 1 {
            sign_negative = true;
        }
    }
    let mut g = UniPoly::one();
    let mut h = UniPoly::one();
    while db > 0 {
        let delta = da - db;
        if da % 2 == 1 && db % 2 == 1 {
            sign_negative = !sign_negative;
        }
        let r = pseudo_rem(&a, &b);
        let Some(dr) = w_degree(&r) else {
            return UniPoly::zero();
        };
        let divisor = &g * &h.pow(delta as u32);
        a = b;
        da = db;
        b = r.iter().map(|c| c.exact_div(&divisor)).collect();
        db = dr;
        g = a[da].clone();
        h = match delta {
            0 => h,
            1 => g.clone(),
            _ => g.pow(delta as u32).exact_div(&h.pow(delta as u32 - 1)),
        };
    }
    // b is a nonzero constant in w
    let lb = &b[0];
    let res = match da {
        0 => UniPoly::one(),
        _ => lb.pow(da as u32).exact_div(&h.pow(da as u32 - 1)),
    };
    if sign_negative {
        -&res
    } else {
        res
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> UniPoly {
        UniPoly::from_ints(c)
    }

    /// Sylvester-matrix determinant over Q, by fraction-free elimination on
    /// exact rationals. Independent of the subresultant path.
    fn sylvester_det(a: &[Rational], b: &[Rational]) -> Rational {
        let m = a.len() - 1;
        let n = b.len() - 1;
        let size = m + n;
        let mut mat = vec![vec![Rational::zero(); size]; size];
        for i in 0..n {
            for (k, c) in a.iter().rev().enumerate() {
                mat[i][i + k] = c.clone();
            }
        }
        for i in 0..m {
            for (k, c) in b.iter().rev().enumerate() {
                mat[n + i][i + k] = c.clone();
            }
        }
        let mut det = Rational::one();
        for col in 0..size {
            let Some(piv) = (col..size).find(|&r| !mat[r][col].is_zero()) else {
                return Rational::zero();
            };
            if piv != col {
                mat.swap(piv, col);
                det = -det;
            }
            let pv = mat[col][col].clone();
            det *= &pv;
            for r in col + 1..size {
                let f = &mat[r][col] / &pv;
                if f.is_zero() {
                    continue;
                }
                for c in col..size {
                    let t = &f * &mat[col][c];
                    mat[r][c] -= t;
                }
            }
        }
        det
    }

    #[test]
    fn normalize_examples() {
        let a = BiPoly::from_int_table(&[&[0, -2], &[], &[2]]).unwrap();
        assert_eq!(a.to_string(), "w^2 - z");
        assert!(a.excluded_poly().is_one());

        let b = BiPoly::from_int_table(&[&[0, 0, -1], &[], &[0, 1]]).unwrap();
        assert_eq!(b.to_string(), "w^2 - z");
        assert_eq!(b.excluded_poly(), &p(&[0, 1]));
        assert_eq!(b.excluded_z().len(), 1);
        assert!(b.excluded_z()[0].norm() < 1e-12);

        let c = BiPoly::from_int_table(&[&[0, -1], &[-3], &[], &[1]]).unwrap();
        assert_eq!(c.to_string(), "w^3 - 3*w - z");
    }

    #[test]
    fn normalize_rejects_zero_and_constant() {
        assert!(matches!(
            BiPoly::from_int_table(&[&[], &[0]]),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            BiPoly::from_int_table(&[&[1, 1]]),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    fn discriminant_examples() {
        let sqrt = BiPoly::from_int_table(&[&[0, -1], &[], &[1]]).unwrap();
        let d = sqrt.discriminant_z();
        assert_eq!(d.numer(), &p(&[0, 4]));
        assert!(d.denom().is_one());

        let cubic = BiPoly::from_int_table(&[&[0, -1], &[-3], &[], &[1]]).unwrap();
        let d = cubic.discriminant_z();
        // -4p^3 - 27q^2 with p = -3, q = -z
        assert_eq!(d.numer(), &p(&[108, 0, -27]));

        let lin = BiPoly::from_int_table(&[&[0, -1], &[1]]).unwrap();
        let d = lin.discriminant_z();
        assert_eq!(d.numer().degree(), Some(0));
    }

    #[test]
    fn discriminant_with_nonmonic_input() {
        // z*w^2 - 1: roots ±z^{-1/2}, disc of monic w^2 - 1/z is 4/z
        let q = BiPoly::from_int_table(&[&[-1], &[], &[0, 1]]).unwrap();
        let d = q.discriminant_z();
        assert_eq!(d.numer(), &p(&[4]));
        assert_eq!(d.denom(), &p(&[0, 1]));
    }

    #[test]
    fn resultant_matches_sylvester_at_rational_points() {
        // P = w^3 + (z-1) w^2 - 2z w + z^2 + 3
        let poly = vec![p(&[3, 0, 1]), p(&[0, -2]), p(&[-1, 1]), p(&[1])];
        let deriv: Vec<UniPoly> = poly
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale(&Rational::from_integer(k.into())))
            .collect();
        let res = resultant_w(&poly, &deriv);
        for z in [rat(0, 1), rat(1, 2), rat(-3, 1), rat(7, 5), rat(2, 1)] {
            let a: Vec<Rational> = poly.iter().map(|c| c.eval(&z)).collect();
            let b: Vec<Rational> = deriv.iter().map(|c| c.eval(&z)).collect();
            assert_eq!(res.eval(&z), sylvester_det(&a, &b), "z = {z}");
        }
    }

    #[test]
    fn resultant_of_unequal_degrees_and_constants() {
        // Res(w^2 - z, w - 1) = 1 - z ; Res(w - 1, w^2 - z) = 1 - z (deg product 2 even)
        let a = vec![p(&[0, -1]), p(&[]), p(&[1])];
        let b = vec![p(&[-1]), p(&[1])];
        assert_eq!(resultant_w(&a, &b), p(&[1, -1]));
        assert_eq!(resultant_w(&b, &a), p(&[1, -1]));
        let c = vec![p(&[5])];
        assert_eq!(resultant_w(&a, &c), p(&[25]));
        assert!(resultant_w(&a, &[]).is_zero());
    }

    #[test]
    fn squarefree_examples() {
        assert_eq!(p(&[0, 0, 1]).squarefree_part().unwrap(), p(&[0, 1]));
        // z(z-1)^2 = z^3 - 2z^2 + z
        assert_eq!(p(&[0, 1, -2, 1]).squarefree_part().unwrap(), p(&[0, -1, 1]));
        assert_eq!(p(&[1, 0, 1]).squarefree_part().unwrap(), p(&[1, 0, 1]));
        assert!(UniPoly::zero().squarefree_part().is_err());
    }

    #[test]
    fn fiber_poly_examples() {
        let sqrt = BiPoly::from_int_table(&[&[0, -1], &[], &[1]]).unwrap();
        let f = sqrt.eval_fiber_poly(Complex64::new(4.0, 0.0)).unwrap();
        assert_eq!(f, vec![Complex64::new(-4.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let f = sqrt.eval_fiber_poly(Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(f[0], Complex64::new(0.0, -1.0));

        let cubic = BiPoly::from_int_table(&[&[0, -1], &[-3], &[], &[1]]).unwrap();
        let f = cubic.eval_fiber_poly(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(f[0], Complex64::new(0.0, 0.0));
        assert_eq!(f[1], Complex64::new(-3.0, 0.0));

        let pole = BiPoly::from_int_table(&[&[0, 0, -1], &[], &[0, 1]]).unwrap();
        assert!(matches!(
            pole.eval_fiber_poly(Complex64::new(0.0, 0.0)),
            Err(Error::DegenerateBasePoint { .. })
        ));
    }

    #[test]
    fn ratfunc_normalizes() {
        let r = RatFunc::new(p(&[0, 2, 2]), p(&[0, 4])).unwrap();
        assert_eq!(r.numer(), &p(&[1, 1]).scale(&rat(1, 2)));
        assert!(r.denom().is_one());
        let s = RatFunc::new(p(&[1]), p(&[0, 2])).unwrap();
        assert_eq!(s.denom(), &p(&[0, 1]));
        assert_eq!(s.numer(), &p(&[1]).scale(&rat(1, 2)));
        assert_eq!((&s + &s).to_string(), "(1)/(z)");
    }

    #[test]
    fn canonical_printing() {
        let q = BiPoly::from_int_table(&[&[-1, -2, -1], &[], &[0, 1]]).unwrap();
        // monic form t^2 - (z+1)^2/z, cleared by z
        assert_eq!(q.to_string_in("t"), "z*t^2 - z^2 - 2*z - 1");
        let h = BiPoly::from_polys(&[UniPoly::constant(rat(-1, 2)), UniPoly::one()]).unwrap();
        assert_eq!(h.to_string_in("w"), "w - 1/2");
        assert_eq!(rational_to_string(&rat(3, 1)), "3/1");
        assert_eq!(rational_from_str("-6/4").unwrap(), rat(-3, 2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_poly() -> impl Strategy<Value = UniPoly> {
            proptest::collection::vec(-4i64..=4, 1..6).prop_map(|c| UniPoly::from_ints(&c))
        }

        proptest! {
            #[test]
            fn squarefree_idempotent(a in small_poly(), b in small_poly()) {
                let q = &(&a * &a) * &b;
                prop_assume!(!q.is_zero());
                let s = q.squarefree_part().unwrap();
                prop_assert_eq!(s.squarefree_part().unwrap(), s);
            }

            #[test]
            fn discriminant_invariant_under_scaling(
                c0 in small_poly(), c1 in small_poly(), k in 1i64..6
            ) {
                let raw = [c0.clone(), c1.clone(), UniPoly::one()];
                let scaled: Vec<UniPoly> = raw.iter().map(|c| c.scale(&rat(k, 3))).collect();
                let a = BiPoly::from_polys(&raw).unwrap();
                let b = BiPoly::from_polys(&scaled).unwrap();
                let (da, db) = (a.discriminant_z(), b.discriminant_z());
                // equal up to a nonzero rational unit
                if da.is_zero() {
                    prop_assert!(db.is_zero());
                } else {
                    let ratio = da.div(&db).unwrap();
                    prop_assert!(ratio.numer().degree() == Some(0) && ratio.denom().is_one());
                }
            }
        }
    }
}
