//! Galois closure of a monodromy representation and the lattice of
//! intermediate covers.
//!
//! Conventions: the closure's group `D` acts on its own elements by right
//! multiplication (that is the monodromy of the regular cover), deck
//! transformations act by left multiplication, and the intermediate cover
//! attached to `E ≤ D` has the right cosets `E\D` as its fiber. The deck
//! group of that cover is then `N_D(E)/E`.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::monodromy::Monodromy;
use crate::permgroup::{
    coset_action, permutation_isomorphism, CayleyTable, CosetAction, Perm, PermGroup, Subgroup,
};

/// The Galois closure: the monodromy group in its right regular action.
#[derive(Clone, Debug)]
pub struct ClosureRep {
    /// The source monodromy group on the `n` sheets.
    pub source: PermGroup,
    pub source_sigmas: Vec<Perm>,
    pub d: PermGroup,
    /// Stabilizer of sheet 1, as a subgroup of `D`.
    pub h_orig: Subgroup,
    /// The loops' local monodromies as elements of `D`.
    pub loop_images: Vec<usize>,
    /// Element index in `source` -> element index in `D`.
    to_d: Vec<usize>,
    /// Element index in `D` -> element index in `source`.
    from_d: Vec<usize>,
}

pub fn galois_closure(m: &Monodromy, cap: usize) -> Result<ClosureRep> {
    if !m.is_transitive() {
        return Err(Error::NotTransitive {
            orbit_sizes: m.orbits.iter().map(Vec::len).collect(),
        });
    }
    let g = m.group(cap)?;
    closure_of(g, &m.sigmas, cap)
}

/// Closure of a transitive group given with the list of loop generators.
pub fn closure_of(g: &PermGroup, sigmas: &[Perm], cap: usize) -> Result<ClosureRep> {
    if !g.is_transitive() {
        return Err(Error::NotTransitive {
            orbit_sizes: g.orbits().iter().map(Vec::len).collect(),
        });
    }
    let order = g.order();
    let regular = |x: usize| {
        Perm::from_images((0..order).map(|y| g.mul(y, x)).collect()).expect("right multiplication")
    };
    let sigma_idx: Vec<usize> = sigmas
        .iter()
        .map(|s| {
            g.index_of(s)
                .ok_or_else(|| Error::NotSubgroup(format!("{s} is not in the group")))
        })
        .collect::<Result<_>>()?;
    let gens: Vec<Perm> = sigma_idx.iter().map(|&s| regular(s)).collect();
    let d = PermGroup::close(order, &gens, cap)?;
    if d.order() != order {
        return Err(Error::Inconsistent("regular representation changed the group order".into()));
    }
    let to_d: Vec<usize> = (0..order)
        .map(|x| d.index_of(&regular(x)).expect("generated by the same elements"))
        .collect();
    let mut from_d = vec![0; order];
    for (x, &y) in to_d.iter().enumerate() {
        from_d[y] = x;
    }
    let stab: Vec<usize> = (0..order)
        .filter(|&x| g.element(x).apply(0) == 0)
        .map(|x| to_d[x])
        .collect();
    let h_orig = d.subgroup_from(stab)?;
    Ok(ClosureRep {
        source: g.clone(),
        source_sigmas: sigmas.to_vec(),
        loop_images: sigma_idx.iter().map(|&s| to_d[s]).collect(),
        d,
        h_orig,
        to_d,
        from_d,
    })
}

impl ClosureRep {
    pub fn order(&self) -> usize {
        self.d.order()
    }

    /// The element of the source group corresponding to `x ∈ D`.
    pub fn source_element(&self, x: usize) -> &Perm {
        self.source.element(self.from_d[x])
    }

    pub fn d_index_of_source(&self, source_index: usize) -> usize {
        self.to_d[source_index]
    }

    /// Generators of `E` written as permutations of the source sheets.
    pub fn source_generators(&self, e: &Subgroup) -> Vec<Perm> {
        e.generators(&self.d)
            .into_iter()
            .map(|x| self.source_element(x).clone())
            .collect()
    }

    pub fn subgroups(&self) -> Vec<Subgroup> {
        self.d.subgroups()
    }
}

/// An intermediate cover `Z_E`, stored by its subgroup.
#[derive(Clone, Debug)]
pub struct CoverNode {
    pub e: Subgroup,
    pub degree: usize,
    pub fiber_action: CosetAction,
    /// Monodromy of each original loop on the cosets.
    pub loop_perms: Vec<Perm>,
}

pub fn gamma(c: &ClosureRep, e: &Subgroup) -> Result<CoverNode> {
    let action = coset_action(&c.d, e)?;
    let loop_perms = c
        .loop_images
        .iter()
        .map(|&x| action.image_of(&c.d, x))
        .collect();
    Ok(CoverNode {
        e: e.clone(),
        degree: action.degree(),
        fiber_action: action,
        loop_perms,
    })
}

/// Deck group of the regular cover over `Z`: the left multiplications that
/// keep every point of `Z`'s fiber (a right coset) in place. Computed from
/// the coset partition alone.
pub fn delta(c: &ClosureRep, z: &CoverNode) -> Subgroup {
    let cosets = &z.fiber_action.cosets;
    let coset_of = &z.fiber_action.coset_of;
    let members: Vec<usize> = (0..c.order())
        .filter(|&l| {
            cosets
                .iter()
                .enumerate()
                .all(|(i, cs)| cs.iter().all(|&x| coset_of[c.d.mul(l, x)] == i))
        })
        .collect();
    c.d.subgroup_from(members)
        .expect("coset stabilizers form a subgroup")
}

/// All bijections of `0..m` commuting with every generator, for a
/// transitive action. Each is pinned down by the image of point 0.
pub fn commuting_bijections(m: usize, gens: &[Perm]) -> Vec<Perm> {
    let mut out = Vec::new();
    'target: for target in 0..m {
        let mut map = vec![usize::MAX; m];
        map[0] = target;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for g in gens {
                let (xg, yg) = (g.apply(x), g.apply(map[x]));
                if map[xg] == usize::MAX {
                    map[xg] = yg;
                    queue.push_back(xg);
                } else if map[xg] != yg {
                    continue 'target;
                }
            }
        }
        if map.contains(&usize::MAX) {
            continue;
        }
        if let Ok(p) = Perm::from_images(map) {
            out.push(p);
        }
    }
    out
}

fn table_of(perms: &[Perm]) -> Result<CayleyTable> {
    let mut sorted = perms.to_vec();
    sorted.sort_by_key(|p| (!p.is_identity(), p.images()));
    let index: HashMap<&Perm, usize> = sorted.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let n = sorted.len();
    let mut table = Vec::with_capacity(n * n);
    for a in &sorted {
        for b in &sorted {
            let ab = a.then(b);
            let k = index
                .get(&ab)
                .ok_or_else(|| Error::Inconsistent("deck transformations not closed".into()))?;
            table.push(*k as u32);
        }
    }
    CayleyTable::new(n, table)
}

#[derive(Clone, Debug)]
pub struct DeckGroup {
    pub order: usize,
    /// `|N_D(E)| / |E|`.
    pub formula_order: usize,
    pub elements: Vec<Perm>,
    pub table: CayleyTable,
}

impl DeckGroup {
    pub fn is_transitive(&self, degree: usize) -> bool {
        self.order == degree
    }
}

/// Fiber automorphisms of `Z` commuting with its monodromy, alongside the
/// normalizer count.
pub fn deck_group(c: &ClosureRep, z: &CoverNode) -> Result<DeckGroup> {
    let elements = commuting_bijections(z.degree, &z.loop_perms);
    let formula_order = c.d.normalizer(&z.e).order() / z.e.order();
    if elements.len() != formula_order {
        return Err(Error::Inconsistent(format!(
            "{} fiber automorphisms but |N(E)/E| = {formula_order}",
            elements.len()
        )));
    }
    Ok(DeckGroup {
        order: elements.len(),
        formula_order,
        table: table_of(&elements)?,
        elements,
    })
}

/// `N_D(E)/E` as an abstract table.
fn normalizer_quotient(c: &ClosureRep, e: &Subgroup) -> Result<CayleyTable> {
    let n = c.d.normalizer(e);
    let gens: Vec<Perm> = n.generators(&c.d).into_iter().map(|x| c.d.element(x).clone()).collect();
    let ng = PermGroup::close(c.d.degree(), &gens, c.order().max(1))?;
    let e_in_n = ng.subgroup_from(
        e.members()
            .into_iter()
            .map(|x| ng.index_of(c.d.element(x)).expect("E lies in its normalizer"))
            .collect(),
    )?;
    ng.quotient_table(&e_in_n)
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &str, pass: bool, detail: Option<String>) -> Check {
        Check {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeRecord {
    pub id: usize,
    pub order: usize,
    pub index: usize,
    pub degree: usize,
    pub normal: bool,
    pub galois: bool,
    pub deck_order: usize,
    pub conjugacy_class: usize,
    pub is_source: bool,
    /// Generators as permutations of the source sheets.
    pub generators: Vec<String>,
    pub checks: Vec<Check>,
}

impl NodeRecord {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrespondenceReport {
    pub group_order: usize,
    pub source_degree: usize,
    pub nodes: Vec<NodeRecord>,
    pub inclusion_reversal: Check,
    pub source_node: usize,
    pub note: String,
    pub pass: bool,
    pub failures: Vec<String>,
}

const FINITE_NOTE: &str = "finite deck group: every subgroup is closed and the quotient topology is discrete";

fn node_record(c: &ClosureRep, id: usize, e: &Subgroup, class: usize) -> Result<NodeRecord> {
    let node = gamma(c, e)?;
    let mut checks = Vec::new();

    let back = delta(c, &node);
    checks.push(Check::new(
        "delta_gamma",
        back == *e,
        (back != *e).then(|| format!("Delta returned a subgroup of order {}", back.order())),
    ));

    let block_sizes_ok = node.fiber_action.cosets.iter().all(|cs| cs.len() == e.order());
    checks.push(Check::new(
        "order_formulas",
        block_sizes_ok && node.degree * e.order() == c.order(),
        None,
    ));

    let normal = c.d.is_normal(e);
    let deck = deck_group(c, &node)?;
    let galois = deck.is_transitive(node.degree);
    checks.push(Check::new(
        "galois_iff_normal",
        galois == normal,
        (galois != normal).then(|| format!("normal={normal} but deck transitive={galois}")),
    ));

    let nq = normalizer_quotient(c, e)?;
    let mut deck_ok = deck.table.is_isomorphic(&nq);
    if normal {
        deck_ok &= deck.table.is_isomorphic(&c.d.quotient_table(e)?);
    }
    checks.push(Check::new("deck_quotient", deck_ok, None));

    let core = c.d.core(e);
    let kernel = node.fiber_action.kernel(&c.d);
    let image_table = node.fiber_action.image.cayley_table();
    let image_ok = kernel == core && image_table.is_isomorphic(&c.d.quotient_table(&core)?);
    checks.push(Check::new("coset_image", image_ok, None));

    Ok(NodeRecord {
        id,
        order: e.order(),
        index: c.order() / e.order(),
        degree: node.degree,
        normal,
        galois,
        deck_order: deck.order,
        conjugacy_class: class,
        is_source: *e == c.h_orig,
        generators: c.source_generators(e).iter().map(Perm::to_string).collect(),
        checks,
    })
}

/// The canonical map `E1\D -> E2\D`, `E1 x ↦ E2 x`, if well defined and
/// compatible with the loops.
pub fn coset_surjection(z1: &CoverNode, z2: &CoverNode) -> Option<Vec<usize>> {
    let f: Vec<usize> = z1
        .fiber_action
        .cosets
        .iter()
        .map(|cs| z2.fiber_action.coset_of[cs[0]])
        .collect();
    let well_defined = z1
        .fiber_action
        .cosets
        .iter()
        .zip(&f)
        .all(|(cs, &t)| cs.iter().all(|&x| z2.fiber_action.coset_of[x] == t));
    let commutes = z1.loop_perms.iter().zip(&z2.loop_perms).all(|(p1, p2)| {
        (0..z1.degree).all(|i| f[p1.apply(i)] == p2.apply(f[i]))
    });
    (well_defined && commutes).then_some(f)
}

/// Runs every check of the correspondence over all subgroups of `D`.
pub fn correspondence_report(c: &ClosureRep) -> Result<CorrespondenceReport> {
    let subs = c.subgroups();
    let classes = c.d.conjugacy_classes(&subs);
    let nodes: Vec<NodeRecord> = subs
        .par_iter()
        .enumerate()
        .map(|(i, e)| node_record(c, i, e, classes[i]))
        .collect::<Result<_>>()?;

    let covers: Vec<CoverNode> = subs.iter().map(|e| gamma(c, e)).collect::<Result<_>>()?;
    let witness = (0..subs.len())
        .into_par_iter()
        .flat_map_iter(|i| (0..subs.len()).map(move |j| (i, j)))
        .find_first(|&(i, j)| {
            subs[i].is_subset_of(&subs[j]) != coset_surjection(&covers[i], &covers[j]).is_some()
        });
    let inclusion_reversal = Check::new(
        "inclusion_reversal",
        witness.is_none(),
        witness.map(|(i, j)| format!("subgroups {i} and {j}")),
    );

    let source_node = subs
        .iter()
        .position(|e| *e == c.h_orig)
        .ok_or_else(|| Error::Inconsistent("source stabilizer missing from the lattice".into()))?;
    let source_cover = &covers[source_node];
    let source_ok = permutation_isomorphism(&source_cover.loop_perms, &c.source_sigmas).is_some();

    let mut failures: Vec<String> = nodes
        .iter()
        .flat_map(|n| {
            n.checks
                .iter()
                .filter(|ch| !ch.pass)
                .map(move |ch| format!("subgroup {}: {}", n.id, ch.name))
        })
        .collect();
    if !inclusion_reversal.pass {
        failures.push(format!(
            "inclusion_reversal: {}",
            inclusion_reversal.detail.clone().unwrap_or_default()
        ));
    }
    if !source_ok {
        failures.push("source cover not recovered from the stabilizer".into());
    }
    Ok(CorrespondenceReport {
        group_order: c.order(),
        source_degree: c.source.degree(),
        nodes,
        inclusion_reversal,
        source_node,
        note: FINITE_NOTE.into(),
        pass: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permgroup::DEFAULT_GROUP_ORDER_CAP;

    fn group(degree: usize, gens: &[&str]) -> (PermGroup, Vec<Perm>) {
        let gens: Vec<Perm> = gens.iter().map(|s| Perm::parse_cycles(degree, s).unwrap()).collect();
        (PermGroup::close(degree, &gens, DEFAULT_GROUP_ORDER_CAP).unwrap(), gens)
    }

    fn closure(degree: usize, gens: &[&str]) -> ClosureRep {
        let (g, s) = group(degree, gens);
        closure_of(&g, &s, DEFAULT_GROUP_ORDER_CAP).unwrap()
    }

    #[test]
    fn closure_examples() {
        let c6 = closure(6, &["(1 2 3 4 5 6)"]);
        assert_eq!(c6.order(), 6);
        assert_eq!(c6.d.degree(), 6);
        assert!(c6.h_orig.is_trivial());

        let s3 = closure(3, &["(1 2)", "(2 3)"]);
        assert_eq!(s3.order(), 6);
        assert_eq!(s3.h_orig.order(), 2);

        let triv = closure(1, &[]);
        assert_eq!(triv.order(), 1);

        let (g, s) = group(4, &["(1 2)", "(3 4)"]);
        assert!(matches!(closure_of(&g, &s, 512), Err(Error::NotTransitive { .. })));
    }

    #[test]
    fn regular_action_has_trivial_stabilizers() {
        let c = closure(4, &["(1 2 3 4)", "(1 3)"]);
        for x in 0..c.order() {
            let p = c.d.element(x);
            if !p.is_identity() {
                assert!((0..c.order()).all(|i| p.apply(i) != i));
            }
        }
    }

    #[test]
    fn delta_and_gamma_examples() {
        let c = closure(6, &["(1 2 3 4 5 6)"]);
        let subs = c.subgroups();
        for e in &subs {
            let z = gamma(&c, e).unwrap();
            assert_eq!(delta(&c, &z), *e);
            assert_eq!(z.degree, 6 / e.order());
        }
        let c2 = subs.iter().find(|e| e.order() == 2).unwrap();
        assert_eq!(gamma(&c, c2).unwrap().degree, 3);
        let c3 = subs.iter().find(|e| e.order() == 3).unwrap();
        let z = gamma(&c, c3).unwrap();
        assert_eq!(z.degree, 2);
        assert_eq!(z.fiber_action.image.order(), 2);

        let s3 = closure(3, &["(1 2)", "(2 3)"]);
        let z = gamma(&s3, &s3.h_orig).unwrap();
        assert_eq!(z.degree, 3);
        assert!(permutation_isomorphism(&z.loop_perms, &s3.source_sigmas).is_some());
        let top = gamma(&s3, &s3.d.trivial()).unwrap();
        assert_eq!(top.degree, 6);
    }

    #[test]
    fn deck_group_examples() {
        let s3 = closure(3, &["(1 2)", "(2 3)"]);
        for e in s3.subgroups() {
            let z = gamma(&s3, &e).unwrap();
            let deck = deck_group(&s3, &z).unwrap();
            match e.order() {
                1 => assert_eq!(deck.order, 6),
                2 => assert_eq!(deck.order, 1),
                3 => assert_eq!(deck.order, 2),
                _ => assert_eq!(deck.order, 1),
            }
        }
        let top = gamma(&s3, &s3.d.trivial()).unwrap();
        let deck = deck_group(&s3, &top).unwrap();
        assert!(deck.table.is_isomorphic(&s3.d.cayley_table()));
        assert!(!deck.table.is_abelian());
    }

    #[test]
    fn cyclic_report() {
        let r = correspondence_report(&closure(6, &["(1 2 3 4 5 6)"])).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        assert_eq!(r.nodes.len(), 4);
        assert!(r.nodes.iter().all(|n| n.normal && n.galois));
        let mut degrees: Vec<usize> = r.nodes.iter().map(|n| n.degree).collect();
        degrees.sort();
        assert_eq!(degrees, vec![1, 2, 3, 6]);
    }

    #[test]
    fn symmetric_report() {
        let r = correspondence_report(&closure(3, &["(1 2)", "(2 3)"])).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        assert_eq!(r.nodes.len(), 6);
        let order_two: Vec<&NodeRecord> = r.nodes.iter().filter(|n| n.order == 2).collect();
        assert_eq!(order_two.len(), 3);
        for n in &order_two {
            assert!(!n.galois && !n.normal);
            assert_eq!(n.degree, 3);
            assert_eq!(n.deck_order, 1);
            assert_eq!(n.conjugacy_class, order_two[0].conjugacy_class);
        }
        let a3 = r.nodes.iter().find(|n| n.order == 3).unwrap();
        assert!(a3.galois && a3.degree == 2);
        assert_eq!(r.nodes.iter().filter(|n| n.is_source).count(), 1);
        assert_eq!(r.nodes[r.source_node].order, 2);
    }

    #[test]
    fn degree_one_report() {
        let r = correspondence_report(&closure(1, &[])).unwrap();
        assert!(r.pass);
        assert_eq!(r.nodes.len(), 1);
    }

    #[test]
    fn larger_lattices_pass() {
        for (deg, gens) in [
            (4, vec!["(1 2 3 4)", "(1 3)"]),
            (4, vec!["(1 2 3 4)", "(1 2)"]),
            (4, vec!["(1 2 3)", "(2 3 4)"]),
            (5, vec!["(1 2 3 4 5)", "(2 5)(3 4)"]),
        ] {
            let r = correspondence_report(&closure(deg, &gens)).unwrap();
            assert!(r.pass, "{gens:?}: {:?}", r.failures);
        }
    }

    #[test]
    fn inclusion_needs_containment() {
        let c = closure(3, &["(1 2)", "(2 3)"]);
        let subs = c.subgroups();
        let a = gamma(&c, &subs[1]).unwrap();
        let b = gamma(&c, &subs[2]).unwrap();
        assert!(coset_surjection(&a, &b).is_none());
        let top = gamma(&c, &c.d.whole()).unwrap();
        assert_eq!(coset_surjection(&a, &top), Some(vec![0, 0, 0]));
    }
}
