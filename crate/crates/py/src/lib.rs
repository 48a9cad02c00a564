use algcover::continuation::TrackOpts;
use algcover::exactpoly::BiPoly;
use algcover::funcfield::{self, CombineOp, ReconstructOpts};
use algcover::galois;
use algcover::job::parse_poly;
use algcover::monodromy::{self, MonodromyOpts};
use algcover::numroots;
use algcover::permgroup::DEFAULT_GROUP_ORDER_CAP;
use algcover::verify::{self, BatteryOpts};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(pyalgcover, AlgcoverError, PyException);

fn to_py(e: algcover::Error) -> PyErr {
    match e {
        algcover::Error::Parse { .. } | algcover::Error::Malformed(_) => PyValueError::new_err(e.to_string()),
        other => AlgcoverError::new_err(other.to_string()),
    }
}

/// A polynomial in `w` over `Q(z)`, normalized monic in `w`.
#[pyclass(frozen, name = "Poly")]
struct PyPoly {
    inner: BiPoly,
}

#[pymethods]
impl PyPoly {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyPoly {
            inner: parse_poly(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.w_degree()
    }

    /// Discriminant in `w` as text, `numer` or `numer/denom`.
    fn discriminant(&self) -> String {
        let d = self.inner.discriminant_z();
        if d.denom().is_one() {
            d.numer().to_string_in("z")
        } else {
            format!("({})/({})", d.numer().to_string_in("z"), d.denom().to_string_in("z"))
        }
    }

    fn branch_points(&self) -> PyResult<Vec<Complex64>> {
        let pts = monodromy::finite_branch_points(&self.inner).map_err(to_py)?;
        Ok(pts.into_iter().map(|b| b.z).collect())
    }

    /// Roots in `w` of the fiber over `z`, canonically sorted.
    fn fiber(&self, z: Complex64) -> PyResult<Vec<Complex64>> {
        let q = self.inner.eval_fiber_poly(z).map_err(to_py)?;
        let mut roots = numroots::all_roots(&q).map_err(to_py)?;
        numroots::sort_canonical(&mut roots);
        Ok(roots)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Poly('{}')", self.inner)
    }
}

#[pyclass(frozen, get_all, name = "SubgroupNode")]
struct PyNode {
    order: usize,
    index: usize,
    degree: usize,
    normal: bool,
    galois: bool,
    deck_order: usize,
    conjugacy_class: usize,
    is_source: bool,
    generators: Vec<String>,
    passed: bool,
}

#[pymethods]
impl PyNode {
    fn __repr__(&self) -> String {
        format!(
            "SubgroupNode(order={}, degree={}, galois={}, deck_order={})",
            self.order,
            self.degree,
            if self.galois { "True" } else { "False" },
            self.deck_order
        )
    }
}

/// Monodromy of a curve at a base point.
#[pyclass(frozen, name = "Monodromy")]
struct PyMonodromy {
    inner: monodromy::Monodromy,
    track: TrackOpts,
    cap: usize,
}

#[pymethods]
impl PyMonodromy {
    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn base_point(&self) -> Complex64 {
        self.inner.base_point()
    }

    #[getter]
    fn branch_points(&self) -> Vec<Complex64> {
        self.inner.locus.points()
    }

    #[getter]
    fn infinity_is_branch_point(&self) -> bool {
        self.inner.locus.includes_infinity
    }

    /// Local monodromies in cycle notation, one per loop.
    #[getter]
    fn sigmas(&self) -> Vec<String> {
        self.inner.sigmas.iter().map(ToString::to_string).collect()
    }

    #[getter]
    fn sigma_inf(&self) -> String {
        self.inner.sigma_inf.to_string()
    }

    /// `None` when the group exceeds the order cap.
    #[getter]
    fn group_order(&self) -> Option<usize> {
        self.inner.group.as_ref().map(|g| g.order())
    }

    #[getter]
    fn transitive(&self) -> bool {
        self.inner.is_transitive()
    }

    #[getter]
    fn orbits(&self) -> Vec<Vec<usize>> {
        self.inner.orbits.clone()
    }

    /// One node per subgroup of the Galois closure.
    fn lattice(&self, py: Python<'_>) -> PyResult<Vec<PyNode>> {
        let report = py
            .detach(|| galois::galois_closure(&self.inner, self.cap).and_then(|c| galois::correspondence_report(&c)))
            .map_err(to_py)?;
        Ok(report
            .nodes
            .into_iter()
            .map(|n| PyNode {
                passed: n.pass(),
                order: n.order,
                index: n.index,
                degree: n.degree,
                normal: n.normal,
                galois: n.galois,
                deck_order: n.deck_order,
                conjugacy_class: n.conjugacy_class,
                is_source: n.is_source,
                generators: n.generators,
            })
            .collect())
    }

    /// Runs the check battery; returns `(name, passed, detail)` triples.
    #[pyo3(signature = (perturbations=20, seed=0))]
    fn verify(&self, py: Python<'_>, perturbations: usize, seed: u64) -> Vec<(String, bool, Option<String>)> {
        let opts = BatteryOpts {
            track: self.track,
            reconstruct: ReconstructOpts {
                seed,
                ..ReconstructOpts::default()
            },
            perturbations,
            seed,
            cap: self.cap,
        };
        py.detach(|| verify::run_all(&self.inner, &opts))
            .into_iter()
            .map(|c| (c.name, c.pass, c.detail))
            .collect()
    }

    /// The defining polynomial recovered from the tracked branches.
    fn reconstruct(&self, py: Python<'_>) -> PyResult<String> {
        let r = py
            .detach(|| funcfield::self_reconstruct(&self.inner, &self.track, &ReconstructOpts::default()))
            .map_err(to_py)?;
        r.into_exact().map(|p| p.to_string()).map_err(to_py)
    }
}

fn track_opts(tol: Option<f64>) -> TrackOpts {
    let mut t = TrackOpts::default();
    if let Some(tol) = tol {
        t.tol_res = tol;
    }
    t
}

#[pyfunction]
#[pyo3(signature = (poly, tol=None, base=None, cap=DEFAULT_GROUP_ORDER_CAP))]
fn analyze(py: Python<'_>, poly: &PyPoly, tol: Option<f64>, base: Option<Complex64>, cap: usize) -> PyResult<PyMonodromy> {
    let opts = MonodromyOpts {
        track: track_opts(tol),
        base_point: base,
        group_order_cap: cap,
    };
    let inner = py.detach(|| monodromy::monodromy_rep(&poly.inner, &opts)).map_err(to_py)?;
    Ok(PyMonodromy {
        inner,
        track: opts.track,
        cap,
    })
}

/// Minimal polynomial (in `t`) of `w1 op w2` on the orbit of the sheet
/// pair `start`. Returns `(poly or None, degree, held_out_residual)`.
#[pyfunction]
#[pyo3(signature = (p1, p2, op="add", start=(0, 0), seed=0))]
fn combine(
    py: Python<'_>,
    p1: &PyPoly,
    p2: &PyPoly,
    op: &str,
    start: (usize, usize),
    seed: u64,
) -> PyResult<(Option<String>, usize, f64)> {
    let op: CombineOp = op.parse().map_err(to_py)?;
    let opts = ReconstructOpts {
        seed,
        ..ReconstructOpts::default()
    };
    let c = py
        .detach(|| funcfield::combine(&p1.inner, &p2.inner, op, start, &TrackOpts::default(), &opts))
        .map_err(to_py)?;
    let r = c.reconstruction;
    Ok((r.exact.map(|p| p.to_string_in("t")), r.degree, r.held_out_residual))
}

/// All complex roots of `c[0] + c[1] x + ...`, canonically sorted.
#[pyfunction]
fn roots(coeffs: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let mut r = numroots::all_roots(&coeffs).map_err(to_py)?;
    numroots::sort_canonical(&mut r);
    Ok(r)
}

#[pymodule]
fn pyalgcover(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AlgcoverError", m.py().get_type::<AlgcoverError>())?;
    m.add_class::<PyPoly>()?;
    m.add_class::<PyMonodromy>()?;
    m.add_class::<PyNode>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(combine, m)?)?;
    m.add_function(wrap_pyfunction!(roots, m)?)?;
    Ok(())
}
