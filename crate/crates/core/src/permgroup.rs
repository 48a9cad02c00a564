//! Finite permutation groups small enough to enumerate.
//!
//! Products follow the right-action convention: `a * b` applies `a` first,
//! then `b`, so `i^(ab) = (i^a)^b`. Monodromy composes this way along
//! concatenated loops. Elements of a [`PermGroup`] are stored sorted, so an
//! element index is canonical; the identity is always index 0.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GROUP_ORDER_CAP: usize = 512;

/// A bijection of `{0, .., m-1}`; rendered 1-based in cycle notation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Perm {
    images: Vec<u32>,
}

impl Perm {
    pub fn identity(degree: usize) -> Perm {
        Perm {
            images: (0..degree as u32).collect(),
        }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Perm> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Malformed(format!("not a permutation: {images:?}")));
            }
        }
        Ok(Perm {
            images: images.into_iter().map(|i| i as u32).collect(),
        })
    }

    /// Builds a permutation from 1-based cycles.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Perm> {
        let mut images: Vec<usize> = (0..degree).collect();
        let mut touched = vec![false; degree];
        for cycle in cycles {
            for (k, &p) in cycle.iter().enumerate() {
                let q = cycle[(k + 1) % cycle.len()];
                if p == 0 || p > degree || q == 0 || q > degree || touched[p - 1] {
                    return Err(Error::Malformed(format!("bad cycle {cycle:?} on {degree} points")));
                }
                touched[p - 1] = true;
                images[p - 1] = q - 1;
            }
        }
        Perm::from_images(images)
    }

    /// Parses disjoint-cycle notation such as `(1 2)(3 4 5)` or `()`.
    pub fn parse_cycles(degree: usize, s: &str) -> Result<Perm> {
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let inner_end = rest
                .find(')')
                .filter(|_| rest.starts_with('('))
                .ok_or_else(|| Error::Malformed(format!("bad cycle notation {s:?}")))?;
            let body = &rest[1..inner_end];
            let cycle = body
                .split([' ', ','])
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Malformed(format!("bad cycle notation {s:?}")))?;
            if !cycle.is_empty() {
                cycles.push(cycle);
            }
            rest = rest[inner_end + 1..].trim_start();
        }
        let refs: Vec<&[usize]> = cycles.iter().map(Vec::as_slice).collect();
        Perm::from_cycles(degree, &refs)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i] as usize
    }

    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i as usize).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i as u32 == j)
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0u32; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j as usize] = i as u32;
        }
        Perm { images: inv }
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Perm) -> Perm {
        assert_eq!(self.degree(), other.degree(), "degree mismatch");
        Perm {
            images: self.images.iter().map(|&i| other.images[i as usize]).collect(),
        }
    }

    /// Disjoint cycles of length > 1, 1-based, each starting at its
    /// smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i + 1);
                i = self.apply(i);
            }
            if cycle.len() > 1 {
                out.push(cycle);
            }
        }
        out
    }

    /// Cycle lengths including fixed points, sorted descending.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut seen = vec![false; self.degree()];
        let mut lens = Vec::new();
        for start in 0..self.degree() {
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                len += 1;
                i = self.apply(i);
            }
            if len > 0 {
                lens.push(len);
            }
        }
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }

    pub fn order(&self) -> usize {
        self.cycle_type()
            .into_iter()
            .fold(1, num_integer::lcm)
    }
}

impl Mul for &Perm {
    type Output = Perm;
    fn mul(self, rhs: &Perm) -> Perm {
        self.then(rhs)
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("()");
        }
        for c in cycles {
            let body: Vec<String> = c.iter().map(usize::to_string).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{self}")
    }
}

/// Orbits of the group generated by `gens` on `{0, .., degree-1}`, each
/// sorted, ordered by smallest point.
pub fn orbits(degree: usize, gens: &[Perm]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; degree];
    let mut out = Vec::new();
    for start in 0..degree {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut orbit = vec![start];
        let mut k = 0;
        while k < orbit.len() {
            let p = orbit[k];
            for g in gens {
                let q = g.apply(p);
                if !seen[q] {
                    seen[q] = true;
                    orbit.push(q);
                }
            }
            k += 1;
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    out
}

/// A bijection `phi` of points with `phi(i^a_k) = phi(i)^b_k` for every
/// paired generator, if one exists.
pub fn permutation_isomorphism(a: &[Perm], b: &[Perm]) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    let degree = a.first().map_or(0, Perm::degree);
    if b.iter().chain(a).any(|p| p.degree() != degree) {
        return None;
    }
    let orbits_a = orbits(degree, a);
    let mut phi = vec![usize::MAX; degree];
    let mut used = vec![false; degree];
    fn extend(
        k: usize,
        orbits_a: &[Vec<usize>],
        a: &[Perm],
        b: &[Perm],
        phi: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let Some(orbit) = orbits_a.get(k) else {
            return true;
        };
        let start = orbit[0];
        for target in 0..phi.len() {
            if used[target] {
                continue;
            }
            // propagate phi(start) = target along generator edges
            let mut assigned = vec![(start, target)];
            phi[start] = target;
            used[target] = true;
            let mut ok = true;
            let mut idx = 0;
            while ok && idx < assigned.len() {
                let (p, q) = assigned[idx];
                idx += 1;
                for (ga, gb) in a.iter().zip(b) {
                    let (p2, q2) = (ga.apply(p), gb.apply(q));
                    if phi[p2] == usize::MAX {
                        if used[q2] {
                            ok = false;
                            break;
                        }
                        phi[p2] = q2;
                        used[q2] = true;
                        assigned.push((p2, q2));
                    } else if phi[p2] != q2 {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && extend(k + 1, orbits_a, a, b, phi, used) {
                return true;
            }
            for (p, q) in assigned {
                phi[p] = usize::MAX;
                used[q] = false;
            }
        }
        false
    }
    extend(0, &orbits_a, a, b, &mut phi, &mut used).then_some(phi)
}

/// Fixed-size bitset over element indices.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn is_subset(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
    fn members(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (w, &word) in self.0.iter().enumerate() {
            let mut x = word;
            while x != 0 {
                let t = x.trailing_zeros();
                out.push((w * 64) as u32 + t);
                x &= x - 1;
            }
        }
        out
    }
}

/// A finite permutation group with its full element list and Cayley table.
#[derive(Clone)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Perm>,
    elements: Vec<Perm>,
    index: HashMap<Perm, u32>,
    table: Vec<u32>,
    inverses: Vec<u32>,
}

impl PermGroup {
    /// Breadth-first closure of `gens` acting on `degree` points.
    pub fn close(degree: usize, gens: &[Perm], cap: usize) -> Result<PermGroup> {
        if let Some(g) = gens.iter().find(|g| g.degree() != degree) {
            return Err(Error::DegreeMismatch(format!(
                "generator {g} has degree {} not {degree}",
                g.degree()
            )));
        }
        let id = Perm::identity(degree);
        let mut seen: HashSet<Perm> = HashSet::from([id.clone()]);
        let mut queue = VecDeque::from([id]);
        let mut elements = Vec::new();
        while let Some(x) = queue.pop_front() {
            for g in gens {
                let y = x.then(g);
                if !seen.contains(&y) {
                    if seen.len() >= cap {
                        return Err(Error::GroupTooLarge { cap });
                    }
                    seen.insert(y.clone());
                    queue.push_back(y);
                }
            }
            elements.push(x);
        }
        elements.sort();
        let index: HashMap<Perm, u32> = elements
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        let n = elements.len();
        let mut table = vec![0u32; n * n];
        for (a, pa) in elements.iter().enumerate() {
            for (b, pb) in elements.iter().enumerate() {
                table[a * n + b] = index[&pa.then(pb)];
            }
        }
        let inverses = elements.iter().map(|p| index[&p.inverse()]).collect();
        Ok(PermGroup {
            degree,
            generators: gens.to_vec(),
            elements,
            index,
            table,
            inverses,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Perm {
        &self.elements[i]
    }

    pub fn index_of(&self, p: &Perm) -> Option<usize> {
        self.index.get(p).map(|&i| i as usize)
    }

    /// Index of the product `a * b` (a first).
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order() + b] as usize
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverses[a] as usize
    }

    /// `g⁻¹ x g`.
    pub fn conj(&self, x: usize, g: usize) -> usize {
        self.mul(self.mul(self.inv(g), x), g)
    }

    pub fn generator_indices(&self) -> Vec<usize> {
        self.generators
            .iter()
            .map(|g| self.index_of(g).expect("generator is an element"))
            .collect()
    }

    pub fn orbits(&self) -> Vec<Vec<usize>> {
        orbits(self.degree, &self.generators)
    }

    pub fn is_transitive(&self) -> bool {
        self.degree <= 1 || self.orbits().len() == 1
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn whole(&self) -> Subgroup {
        Subgroup {
            members: (0..self.order() as u32).collect(),
        }
    }

    pub fn trivial(&self) -> Subgroup {
        Subgroup { members: vec![0] }
    }

    fn closure_bits(&self, gens: &[usize]) -> Bits {
        let mut bits = Bits::new(self.order());
        bits.set(0);
        let mut list = vec![0usize];
        let mut k = 0;
        while k < list.len() {
            let x = list[k];
            for &g in gens {
                let y = self.mul(x, g);
                if !bits.get(y) {
                    bits.set(y);
                    list.push(y);
                }
            }
            k += 1;
        }
        bits
    }

    /// Subgroup generated by the given element indices.
    pub fn generate(&self, gens: &[usize]) -> Subgroup {
        Subgroup {
            members: self.closure_bits(gens).members(),
        }
    }

    /// Validates that `members` (element indices) form a subgroup.
    pub fn subgroup_from(&self, mut members: Vec<usize>) -> Result<Subgroup> {
        members.sort_unstable();
        members.dedup();
        if members.first() != Some(&0) || members.iter().any(|&m| m >= self.order()) {
            return Err(Error::NotSubgroup("missing identity or out of range".into()));
        }
        let set: HashSet<usize> = members.iter().copied().collect();
        for &a in &members {
            for &b in &members {
                if !set.contains(&self.mul(a, b)) {
                    return Err(Error::NotSubgroup(format!(
                        "{} * {} escapes the subset",
                        self.elements[a], self.elements[b]
                    )));
                }
            }
        }
        Ok(Subgroup {
            members: members.into_iter().map(|m| m as u32).collect(),
        })
    }

    /// Every subgroup, found by repeatedly joining cyclic subgroups onto
    /// known subgroups, sorted by (order, element list).
    pub fn subgroups(&self) -> Vec<Subgroup> {
        let n = self.order();
        let mut cyclic: Vec<(usize, Bits)> = Vec::new();
        let mut seen_cyclic: HashSet<Bits> = HashSet::new();
        for g in 0..n {
            let b = self.closure_bits(&[g]);
            if seen_cyclic.insert(b.clone()) {
                cyclic.push((g, b));
            }
        }
        let mut found: HashSet<Bits> = HashSet::new();
        let mut list: Vec<(Bits, Vec<usize>)> = Vec::new();
        let trivial = self.closure_bits(&[]);
        found.insert(trivial.clone());
        list.push((trivial, Vec::new()));
        let mut k = 0;
        while k < list.len() {
            let (bits, gens) = list[k].clone();
            for (g, cb) in &cyclic {
                if cb.is_subset(&bits) {
                    continue;
                }
                let mut g2 = gens.clone();
                g2.push(*g);
                let joined = self.closure_bits(&g2);
                if found.insert(joined.clone()) {
                    list.push((joined, g2));
                }
            }
            k += 1;
        }
        let mut subs: Vec<Subgroup> = list
            .into_iter()
            .map(|(b, _)| Subgroup { members: b.members() })
            .collect();
        subs.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.members.cmp(&b.members)));
        subs
    }

    /// `g E g⁻¹`.
    pub fn conjugate(&self, e: &Subgroup, g: usize) -> Subgroup {
        let gi = self.inv(g);
        let mut members: Vec<u32> = e
            .members
            .iter()
            .map(|&x| self.mul(self.mul(g, x as usize), gi) as u32)
            .collect();
        members.sort_unstable();
        Subgroup { members }
    }

    pub fn is_normal(&self, e: &Subgroup) -> bool {
        self.generator_indices()
            .into_iter()
            .all(|g| self.conjugate(e, g) == *e)
    }

    pub fn normalizer(&self, e: &Subgroup) -> Subgroup {
        Subgroup {
            members: (0..self.order())
                .filter(|&g| self.conjugate(e, g) == *e)
                .map(|g| g as u32)
                .collect(),
        }
    }

    /// Intersection of all conjugates of `e`.
    pub fn core(&self, e: &Subgroup) -> Subgroup {
        let mut members = e.members.clone();
        for g in 0..self.order() {
            let c = self.conjugate(e, g);
            members.retain(|m| c.contains(*m as usize));
        }
        Subgroup { members }
    }

    /// Conjugacy-class label for each subgroup in `subs` (labels are the
    /// position of the class's first member).
    pub fn conjugacy_classes(&self, subs: &[Subgroup]) -> Vec<usize> {
        let pos: HashMap<&Subgroup, usize> = subs.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut label = vec![usize::MAX; subs.len()];
        for i in 0..subs.len() {
            if label[i] != usize::MAX {
                continue;
            }
            for g in 0..self.order() {
                let c = self.conjugate(&subs[i], g);
                if let Some(&j) = pos.get(&c) {
                    label[j] = i;
                }
            }
        }
        label
    }

    pub fn cayley_table(&self) -> CayleyTable {
        CayleyTable {
            order: self.order(),
            table: self.table.clone(),
        }
    }

    /// Multiplication table of `G/N` on the canonically ordered cosets.
    pub fn quotient_table(&self, normal: &Subgroup) -> Result<CayleyTable> {
        if !self.is_normal(normal) {
            return Err(Error::NotSubgroup("quotient by a non-normal subgroup".into()));
        }
        let action = coset_action(self, normal)?;
        let k = action.cosets.len();
        let mut table = vec![0u32; k * k];
        for a in 0..k {
            for b in 0..k {
                let x = self.mul(action.cosets[a][0], action.cosets[b][0]);
                table[a * k + b] = action.coset_of[x] as u32;
            }
        }
        Ok(CayleyTable { order: k, table })
    }
}

impl fmt::Debug for PermGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators.iter().map(Perm::to_string).collect();
        write!(f, "PermGroup(degree {}, order {}, <{}>)", self.degree, self.order(), gens.join(", "))
    }
}

/// A subgroup as the sorted list of its element indices in the parent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subgroup {
    members: Vec<u32>,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> Vec<usize> {
        self.members.iter().map(|&m| m as usize).collect()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&(x as u32)).is_ok()
    }

    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.members.iter().all(|&m| other.contains(m as usize))
    }

    pub fn intersection(&self, other: &Subgroup) -> Subgroup {
        Subgroup {
            members: self
                .members
                .iter()
                .copied()
                .filter(|&m| other.contains(m as usize))
                .collect(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }

    /// A small generating set, chosen greedily from the largest element
    /// indices down.
    pub fn generators(&self, parent: &PermGroup) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = parent.trivial();
        for &m in self.members.iter().rev() {
            if !span.contains(m as usize) {
                gens.push(m as usize);
                span = parent.generate(&gens);
                if span.order() == self.order() {
                    break;
                }
            }
        }
        gens
    }

    pub fn elements<'a>(&self, parent: &'a PermGroup) -> Vec<&'a Perm> {
        self.members.iter().map(|&m| parent.element(m as usize)).collect()
    }
}

/// The action of `G` on the right cosets `E\G` by right multiplication.
#[derive(Clone, Debug)]
pub struct CosetAction {
    /// Cosets ordered by their smallest element; each coset sorted.
    pub cosets: Vec<Vec<usize>>,
    /// Element index -> coset index.
    pub coset_of: Vec<usize>,
    /// Image of each generator of `G`.
    pub generator_images: Vec<Perm>,
    /// The image group acting on `[G:E]` points.
    pub image: PermGroup,
}

impl CosetAction {
    pub fn degree(&self) -> usize {
        self.cosets.len()
    }

    /// The permutation of cosets induced by right multiplication by `g`.
    pub fn image_of(&self, group: &PermGroup, g: usize) -> Perm {
        let images = self
            .cosets
            .iter()
            .map(|c| self.coset_of[group.mul(c[0], g)])
            .collect();
        Perm::from_images(images).expect("right multiplication permutes cosets")
    }

    /// Elements acting trivially on every coset.
    pub fn kernel(&self, group: &PermGroup) -> Subgroup {
        Subgroup {
            members: (0..group.order())
                .filter(|&g| self.image_of(group, g).is_identity())
                .map(|g| g as u32)
                .collect(),
        }
    }
}

pub fn coset_action(group: &PermGroup, e: &Subgroup) -> Result<CosetAction> {
    if e.members.first() != Some(&0) || e.members.iter().any(|&m| m as usize >= group.order()) {
        return Err(Error::NotSubgroup("not a subset of the group".into()));
    }
    let n = group.order();
    let mut coset_of = vec![usize::MAX; n];
    let mut cosets: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        if coset_of[x] != usize::MAX {
            continue;
        }
        let mut coset: Vec<usize> = e.members.iter().map(|&m| group.mul(m as usize, x)).collect();
        coset.sort_unstable();
        coset.dedup();
        if coset.len() != e.order() || coset.iter().any(|&c| coset_of[c] != usize::MAX) {
            return Err(Error::NotSubgroup("cosets do not partition the group".into()));
        }
        for &c in &coset {
            coset_of[c] = cosets.len();
        }
        cosets.push(coset);
    }
    let mut action = CosetAction {
        cosets,
        coset_of,
        generator_images: Vec::new(),
        image: PermGroup::close(1, &[], 1)?,
    };
    action.generator_images = group
        .generator_indices()
        .into_iter()
        .map(|g| action.image_of(group, g))
        .collect();
    action.image = PermGroup::close(action.degree(), &action.generator_images, n.max(1))?;
    Ok(action)
}

#[derive(Clone, Debug)]
pub struct SubgroupInvariants {
    pub index: usize,
    pub is_normal: bool,
    pub normalizer: Subgroup,
    pub core: Subgroup,
    pub quotient_table: Option<CayleyTable>,
}

pub fn subgroup_invariants(group: &PermGroup, e: &Subgroup) -> Result<SubgroupInvariants> {
    if !group.order().is_multiple_of(e.order()) {
        return Err(Error::NotSubgroup("order does not divide the group order".into()));
    }
    let is_normal = group.is_normal(e);
    Ok(SubgroupInvariants {
        index: group.order() / e.order(),
        is_normal,
        normalizer: group.normalizer(e),
        core: group.core(e),
        quotient_table: if is_normal {
            Some(group.quotient_table(e)?)
        } else {
            None
        },
    })
}

/// An abstract finite group given by its multiplication table; element 0
/// is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CayleyTable {
    order: usize,
    table: Vec<u32>,
}

impl CayleyTable {
    /// Builds a table from row-major products; element 0 must be the
    /// identity.
    pub fn new(order: usize, table: Vec<u32>) -> Result<CayleyTable> {
        if table.len() != order * order
            || (0..order).any(|a| table[a] as usize != a || table[a * order] as usize != a)
        {
            return Err(Error::Malformed("table is not a group table with identity 0".into()));
        }
        Ok(CayleyTable { order, table })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
            if k > self.order {
                return 0;
            }
        }
        k
    }

    fn span(&self, gens: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut list = vec![0];
        let mut k = 0;
        while k < list.len() {
            for &g in gens {
                let y = self.mul(list[k], g);
                if !seen[y] {
                    seen[y] = true;
                    list.push(y);
                }
            }
            k += 1;
        }
        seen
    }

    fn generating_set(&self) -> Vec<usize> {
        let mut by_order: Vec<usize> = (1..self.order).collect();
        by_order.sort_by_key(|&a| std::cmp::Reverse(self.element_order(a)));
        let mut gens = Vec::new();
        let mut span = self.span(&gens);
        for a in by_order {
            if !span[a] {
                gens.push(a);
                span = self.span(&gens);
            }
        }
        gens
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Abstract isomorphism test by backtracking over generator images.
    pub fn is_isomorphic(&self, other: &CayleyTable) -> bool {
        if self.order != other.order {
            return false;
        }
        let profile = |t: &CayleyTable| {
            let mut v: Vec<usize> = (0..t.order).map(|a| t.element_order(a)).collect();
            v.sort_unstable();
            v
        };
        if profile(self) != profile(other) || self.is_abelian() != other.is_abelian() {
            return false;
        }
        let gens = self.generating_set();
        let mut images = Vec::with_capacity(gens.len());
        self.search(other, &gens, &mut images)
    }

    fn search(&self, other: &CayleyTable, gens: &[usize], images: &mut Vec<usize>) -> bool {
        if images.len() == gens.len() {
            return self.extends_to_isomorphism(other, gens, images);
        }
        let want = self.element_order(gens[images.len()]);
        for cand in 0..other.order {
            if other.element_order(cand) != want {
                continue;
            }
            images.push(cand);
            if self.search(other, gens, images) {
                return true;
            }
            images.pop();
        }
        false
    }

    fn extends_to_isomorphism(&self, other: &CayleyTable, gens: &[usize], images: &[usize]) -> bool {
        let mut phi = vec![usize::MAX; self.order];
        let mut used = vec![false; self.order];
        phi[0] = 0;
        used[0] = true;
        let mut list = vec![0];
        let mut k = 0;
        while k < list.len() {
            let x = list[k];
            for (&g, &h) in gens.iter().zip(images) {
                let y = self.mul(x, g);
                let fy = other.mul(phi[x], h);
                if phi[y] == usize::MAX {
                    if used[fy] {
                        return false;
                    }
                    phi[y] = fy;
                    used[fy] = true;
                    list.push(y);
                } else if phi[y] != fy {
                    return false;
                }
            }
            k += 1;
        }
        if list.len() != self.order {
            return false;
        }
        (0..self.order).all(|a| (0..self.order).all(|b| phi[self.mul(a, b)] == other.mul(phi[a], phi[b])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(degree: usize, cycles: &[&[usize]]) -> Perm {
        Perm::from_cycles(degree, cycles).unwrap()
    }

    fn s3() -> PermGroup {
        PermGroup::close(3, &[perm(3, &[&[1, 2]]), perm(3, &[&[1, 2, 3]])], 512).unwrap()
    }

    fn cyclic(n: usize) -> PermGroup {
        let cycle: Vec<usize> = (1..=n).collect();
        PermGroup::close(n, &[perm(n, &[&cycle])], 512).unwrap()
    }

    /// All subsets of the group closed under multiplication (exhaustive for
    /// small orders).
    fn brute_force_subgroup_count(g: &PermGroup) -> usize {
        let n = g.order();
        assert!(n <= 16);
        (0u32..1 << n)
            .filter(|mask| mask & 1 == 1)
            .filter(|mask| {
                (0..n).filter(|a| mask >> a & 1 == 1).all(|a| {
                    (0..n)
                        .filter(|b| mask >> b & 1 == 1)
                        .all(|b| mask >> g.mul(a, b) & 1 == 1)
                })
            })
            .count()
    }

    #[test]
    fn perm_basics() {
        let a = perm(3, &[&[1, 2]]);
        let b = perm(3, &[&[1, 2, 3]]);
        // (1 2) then (1 2 3): 1 -> 2 -> 3, 2 -> 1 -> 2, 3 -> 3 -> 1
        assert_eq!((&a * &b).to_string(), "(1 3)");
        assert_eq!(b.inverse().to_string(), "(1 3 2)");
        assert_eq!(Perm::identity(4).to_string(), "()");
        assert_eq!(Perm::parse_cycles(5, "(1 2)(3 5 4)").unwrap().to_string(), "(1 2)(3 5 4)");
        assert_eq!(Perm::parse_cycles(3, "()").unwrap(), Perm::identity(3));
        assert_eq!(perm(6, &[&[1, 2, 3, 4, 5, 6]]).order(), 6);
        assert!(Perm::from_images(vec![0, 0]).is_err());
    }

    #[test]
    fn close_examples() {
        assert_eq!(PermGroup::close(2, &[perm(2, &[&[1, 2]])], 512).unwrap().order(), 2);
        assert_eq!(s3().order(), 6);
        assert_eq!(PermGroup::close(3, &[], 512).unwrap().order(), 1);
        let s5 = PermGroup::close(5, &[perm(5, &[&[1, 2]]), perm(5, &[&[1, 2, 3, 4, 5]])], 100);
        assert!(matches!(s5, Err(Error::GroupTooLarge { cap: 100 })));
    }

    #[test]
    fn subgroup_counts() {
        let c6 = cyclic(6);
        let subs = c6.subgroups();
        assert_eq!(subs.iter().map(Subgroup::order).collect::<Vec<_>>(), vec![1, 2, 3, 6]);
        let s = s3().subgroups();
        assert_eq!(s.iter().map(Subgroup::order).collect::<Vec<_>>(), vec![1, 2, 2, 2, 3, 6]);
        assert_eq!(PermGroup::close(4, &[], 8).unwrap().subgroups().len(), 1);
    }

    #[test]
    fn subgroup_counts_match_brute_force() {
        let d4 = PermGroup::close(4, &[perm(4, &[&[1, 2, 3, 4]]), perm(4, &[&[1, 3]])], 512).unwrap();
        let q = PermGroup::close(
            8,
            &[
                perm(8, &[&[1, 2, 3, 4], &[5, 6, 7, 8]]),
                perm(8, &[&[1, 5, 3, 7], &[2, 8, 4, 6]]),
            ],
            512,
        )
        .unwrap();
        assert_eq!(q.order(), 8);
        for g in [cyclic(6), s3(), d4, q, cyclic(8)] {
            assert_eq!(g.subgroups().len(), brute_force_subgroup_count(&g), "{g:?}");
        }
    }

    #[test]
    fn coset_action_examples() {
        let g = s3();
        let subs = g.subgroups();
        let c2 = &subs[1];
        let act = coset_action(&g, c2).unwrap();
        assert_eq!(act.degree(), 3);
        assert_eq!(act.image.order(), 6);
        assert!(act.image.is_transitive());

        let a3 = &subs[4];
        let act = coset_action(&g, a3).unwrap();
        assert_eq!(act.degree(), 2);
        assert_eq!(act.image.order(), 2);

        let act = coset_action(&g, &g.whole()).unwrap();
        assert_eq!(act.degree(), 1);
        assert_eq!(act.image.order(), 1);
    }

    #[test]
    fn invariants_examples() {
        let g = s3();
        let subs = g.subgroups();
        let inv = subgroup_invariants(&g, &subs[4]).unwrap();
        assert_eq!(inv.index, 2);
        assert!(inv.is_normal);
        assert_eq!(inv.quotient_table.unwrap().order(), 2);

        let c2 = &subs[1];
        let inv = subgroup_invariants(&g, c2).unwrap();
        assert_eq!(inv.index, 3);
        assert!(!inv.is_normal);
        assert_eq!(&inv.normalizer, c2);
        assert!(inv.core.is_trivial());
        assert!(inv.quotient_table.is_none());

        let inv = subgroup_invariants(&g, &g.whole()).unwrap();
        assert_eq!(inv.index, 1);
        assert!(inv.is_normal);
        assert_eq!(inv.quotient_table.unwrap().order(), 1);
    }

    #[test]
    fn subgroup_from_validates() {
        let g = s3();
        let t = g.element(1).clone();
        let idx = g.index_of(&t).unwrap();
        let ok = g.subgroup_from(vec![0, idx]);
        assert_eq!(ok.is_ok(), g.element_order(idx) == 2);
        assert!(g.subgroup_from(vec![1]).is_err());
    }

    #[test]
    fn isomorphism_test() {
        let c6 = cyclic(6).cayley_table();
        let s3 = s3().cayley_table();
        assert!(!c6.is_isomorphic(&s3));
        assert!(s3.is_isomorphic(&s3));
        let c2xc3 = PermGroup::close(5, &[perm(5, &[&[1, 2]]), perm(5, &[&[3, 4, 5]])], 512)
            .unwrap()
            .cayley_table();
        assert!(c6.is_isomorphic(&c2xc3));
    }

    #[test]
    fn permutation_isomorphism_finds_relabeling() {
        let a = [perm(3, &[&[1, 2]]), perm(3, &[&[1, 2, 3]])];
        let relabel = perm(3, &[&[1, 3]]);
        let b: Vec<Perm> = a.iter().map(|p| &(&relabel.inverse() * p) * &relabel).collect();
        let phi = permutation_isomorphism(&a, &b).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            for i in 0..3 {
                assert_eq!(phi[pa.apply(i)], pb.apply(phi[i]));
            }
        }
        assert!(permutation_isomorphism(&[perm(3, &[&[1, 2]])], &[perm(3, &[&[1, 2, 3]])]).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_group() -> impl Strategy<Value = PermGroup> {
            (3usize..=5, proptest::collection::vec(proptest::collection::vec(0usize..100, 5), 1..=2))
                .prop_map(|(deg, raw)| {
                    let gens: Vec<Perm> = raw
                        .into_iter()
                        .map(|keys| {
                            let mut idx: Vec<usize> = (0..deg).collect();
                            idx.sort_by_key(|&i| (keys[i], i));
                            Perm::from_images(idx).unwrap()
                        })
                        .collect();
                    PermGroup::close(deg, &gens, 512).unwrap()
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn lagrange_core_and_normalizer(g in small_group()) {
                let subs = g.subgroups();
                prop_assert!(subs.first().unwrap().is_trivial());
                prop_assert_eq!(subs.last().unwrap().order(), g.order());
                for e in &subs {
                    let inv = subgroup_invariants(&g, e).unwrap();
                    prop_assert_eq!(e.order() * inv.index, g.order());
                    let act = coset_action(&g, e).unwrap();
                    let ker = act.kernel(&g);
                    prop_assert_eq!(&ker, &inv.core);
                    prop_assert!(g.is_normal(&inv.core));
                    prop_assert!(inv.core.is_subset_of(e));
                    prop_assert!(e.is_subset_of(&inv.normalizer));
                    prop_assert_eq!(inv.is_normal, inv.normalizer.order() == g.order());
                    prop_assert_eq!(act.image.order() * inv.core.order(), g.order());
                }
                if g.order() <= 48 {
                    let set: HashSet<&Subgroup> = subs.iter().collect();
                    for a in &subs {
                        for b in &subs {
                            prop_assert!(set.contains(&a.intersection(b)));
                        }
                    }
                }
            }
        }
    }
}
