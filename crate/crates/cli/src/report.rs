//! JSON and text rendering. Floats are written with 17 significant digits
//! so that a report read back reproduces every value bit for bit.

use std::str::FromStr;

use algcover::galois::{Check, ClosureRep, CorrespondenceReport};
use algcover::monodromy::{BranchLocus, BranchOrigin, BranchPoint, Monodromy};
use algcover::permgroup::Perm;
use algcover::{Error, Result};
use num_complex::Complex64;
use serde_json::{json, Map, Number, Value};

pub const SCHEMA: u64 = 1;

pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let x = if x == 0.0 { 0.0 } else { x };
    Number::from_str(&format!("{x:.16e}")).map(Value::Number).unwrap_or(Value::Null)
}

pub fn complex(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn perm(p: &Perm) -> Value {
    Value::String(p.to_string())
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn origin_name(o: BranchOrigin) -> &'static str {
    match o {
        BranchOrigin::Discriminant => "discriminant",
        BranchOrigin::Pole => "pole",
        BranchOrigin::Both => "both",
    }
}

/// The block shared by every single-curve report; also the cache document.
pub fn monodromy_block(m: &Monodromy) -> Value {
    let branch_points: Vec<Value> = m
        .locus
        .finite_points
        .iter()
        .map(|b| json!({"z": complex(b.z), "origin": origin_name(b.origin), "unramified": b.unramified}))
        .collect();
    let loops: Vec<Value> = m
        .basis
        .loops
        .iter()
        .zip(&m.sigmas)
        .map(|(lp, s)| {
            json!({
                "branch_index": lp.branch_index,
                "center": complex(lp.center),
                "radius": num(lp.radius),
                "sigma": perm(s),
            })
        })
        .collect();
    json!({
        "poly": m.curve.poly().to_string(),
        "degree": m.degree(),
        "base_point": complex(m.base_point()),
        "start_fiber": m.start_fiber.values.iter().map(|&w| complex(w)).collect::<Vec<_>>(),
        "branch_points": branch_points,
        "infinity": m.locus.includes_infinity,
        "cut_angle": num(m.basis.cut_angle),
        "loops": loops,
        "sigma_inf": perm(&m.sigma_inf),
        "group_order": m.group.as_ref().map(|g| g.order()),
        "transitive": m.is_transitive(),
        "orbits": m.orbits.iter().map(|o| one_based(o)).collect::<Vec<_>>(),
    })
}

/// Pieces of a stored block needed to rebuild the representation.
pub struct StoredMonodromy {
    pub poly: String,
    pub locus: BranchLocus,
    pub base_point: Complex64,
    pub sigmas: Vec<Perm>,
}

fn bad(what: &str) -> Error {
    Error::Malformed(format!("cached monodromy: bad {what}"))
}

fn read_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| bad(what))
}

fn read_complex(v: &Value, what: &str) -> Result<Complex64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Complex64::new(read_f64(re, what)?, read_f64(im, what)?)),
        _ => Err(bad(what)),
    }
}

pub fn parse_block(v: &Value) -> Result<StoredMonodromy> {
    let degree = v["degree"].as_u64().ok_or_else(|| bad("degree"))? as usize;
    let finite_points = v["branch_points"]
        .as_array()
        .ok_or_else(|| bad("branch_points"))?
        .iter()
        .map(|b| {
            let origin = match b["origin"].as_str() {
                Some("discriminant") => BranchOrigin::Discriminant,
                Some("pole") => BranchOrigin::Pole,
                Some("both") => BranchOrigin::Both,
                _ => return Err(bad("origin")),
            };
            Ok(BranchPoint {
                z: read_complex(&b["z"], "branch point")?,
                origin,
                unramified: b["unramified"].as_bool().ok_or_else(|| bad("unramified"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sigmas = v["loops"]
        .as_array()
        .ok_or_else(|| bad("loops"))?
        .iter()
        .map(|lp| Perm::parse_cycles(degree, lp["sigma"].as_str().ok_or_else(|| bad("sigma"))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(StoredMonodromy {
        poly: v["poly"].as_str().ok_or_else(|| bad("poly"))?.to_string(),
        locus: BranchLocus {
            finite_points,
            includes_infinity: v["infinity"].as_bool().ok_or_else(|| bad("infinity"))?,
        },
        base_point: read_complex(&v["base_point"], "base_point")?,
        sigmas,
    })
}

pub fn closure_block(c: &ClosureRep) -> Value {
    let mut gens: Vec<&Perm> = c.source_sigmas.iter().filter(|p| !p.is_identity()).collect();
    gens.sort();
    gens.dedup();
    json!({
        "order": c.order(),
        "generators": gens.into_iter().map(perm).collect::<Vec<_>>(),
    })
}

pub fn correspondence_block(r: &CorrespondenceReport) -> Value {
    serde_json::to_value(r).expect("report is serializable")
}

pub fn checks_block(checks: &[Check]) -> Value {
    serde_json::to_value(checks).expect("checks are serializable")
}

/// Top-level document: schema tag first, then the given fields in order.
pub fn document(command: &str, job: Value, fields: Vec<(&str, Value)>, pass: bool) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), json!(SCHEMA));
    map.insert("command".into(), json!(command));
    map.insert("job".into(), job);
    for (k, v) in fields {
        map.insert(k.into(), v);
    }
    map.insert("verdict".into(), json!(if pass { "pass" } else { "fail" }));
    Value::Object(map)
}

fn fmt_complex(v: &Value) -> String {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => format!("{re} {im}i"),
        _ => v.to_string(),
    }
}

pub fn monodromy_text(b: &Value, out: &mut String) {
    let n = b["degree"].as_u64().unwrap_or(0);
    out.push_str(&format!("polynomial: {}\n", b["poly"].as_str().unwrap_or("")));
    out.push_str(&format!("sheets: {n}\n"));
    out.push_str(&format!("base point: {}\n", fmt_complex(&b["base_point"])));
    let mut names: Vec<String> = b["branch_points"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|p| {
            let tag = if p["unramified"].as_bool() == Some(true) { " (unramified)" } else { "" };
            format!("{}{tag}", fmt_complex(&p["z"]))
        })
        .collect();
    if b["infinity"].as_bool() == Some(true) {
        names.push("infinity".into());
    }
    out.push_str(&format!("branch points: {}\n", if names.is_empty() { "none".into() } else { names.join(", ") }));
    for (k, lp) in b["loops"].as_array().into_iter().flatten().enumerate() {
        out.push_str(&format!("  sigma_{} = {}\n", k + 1, lp["sigma"].as_str().unwrap_or("")));
    }
    out.push_str(&format!("  sigma_inf = {}\n", b["sigma_inf"].as_str().unwrap_or("")));
    match b["group_order"].as_u64() {
        Some(o) => out.push_str(&format!("group order: {o}\n")),
        None => out.push_str("group order: above cap\n"),
    }
    out.push_str(&format!("transitive: {}\n", b["transitive"]));
}

pub fn correspondence_text(r: &CorrespondenceReport, out: &mut String) {
    out.push_str(&format!("subgroups: {}\n", r.nodes.len()));
    out.push_str("  id  order  index  degree  normal  galois  deck  class  checks\n");
    for n in &r.nodes {
        out.push_str(&format!(
            "  {:>2}  {:>5}  {:>5}  {:>6}  {:>6}  {:>6}  {:>4}  {:>5}  {}{}\n",
            n.id,
            n.order,
            n.index,
            n.degree,
            n.normal,
            n.galois,
            n.deck_order,
            n.conjugacy_class,
            if n.pass() { "pass" } else { "FAIL" },
            if n.is_source { "  (source)" } else { "" },
        ));
    }
    for f in &r.failures {
        out.push_str(&format!("failure: {f}\n"));
    }
}

pub fn checks_text(checks: &[Check], out: &mut String) {
    for c in checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        match &c.detail {
            Some(d) => out.push_str(&format!("{verdict} {}: {d}\n", c.name)),
            None => out.push_str(&format!("{verdict} {}\n", c.name)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        for x in [0.1, -2.5e-300, 1.0 / 3.0, 6.02214076e23, 0.0] {
            let v = num(x);
            let s = v.to_string();
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
        assert_eq!(num(f64::NAN), Value::Null);
    }
}
