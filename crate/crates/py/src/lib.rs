use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use commutant::closure::{closure_table_with, detect_central, render_multi_index, GeneratorSet};
use commutant::invariants::{invariant_space_with, sweep_with, Direct, GradedCommutant, SolverConfig, DEFAULT_BUDGET};
use commutant::labels::{functional_rank, label_counts};
use commutant::parse::parse_chain_document;
use commutant::{bidegree_components, poisson_bracket, ChainSpec, Error, ErrorKind, Polynomial};

create_exception!(commutant, CommutantError, PyException);
create_exception!(commutant, ParseError, CommutantError);
create_exception!(commutant, ValidationError, CommutantError);
create_exception!(commutant, ResourceError, CommutantError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.kind() {
        ErrorKind::Parse => ParseError::new_err(msg),
        ErrorKind::Validation => ValidationError::new_err(msg),
        ErrorKind::Resource => ResourceError::new_err(msg),
        ErrorKind::Internal => CommutantError::new_err(msg),
    }
}

fn solver(budget: Option<usize>) -> SolverConfig {
    SolverConfig { budget: budget.unwrap_or(DEFAULT_BUDGET) }
}

/// A Lie algebra with a chosen subalgebra.
#[pyclass(name = "Chain", module = "commutant", frozen)]
struct PyChain {
    inner: ChainSpec,
}

impl PyChain {
    fn poly(&self, text: &str) -> PyResult<Polynomial> {
        Polynomial::parse(text, self.inner.generators()).map_err(to_py)
    }

    fn render(&self, p: &Polynomial) -> String {
        p.render(self.inner.generators())
    }
}

#[pymethods]
impl PyChain {
    /// One of the shipped chains: elliott, seniority, supermultiplet, surfon.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        commutant::builtin_chain(name).map(|inner| PyChain { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (text, name = "custom"))]
    fn parse(text: &str, name: &str) -> PyResult<Self> {
        parse_chain_document(text, name).map(|inner| PyChain { inner }).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn generators(&self) -> Vec<String> {
        self.inner.generators().to_vec()
    }

    #[getter]
    fn subalgebra(&self) -> Vec<String> {
        self.inner.subalgebra().iter().map(|&k| self.inner.generators()[k].clone()).collect()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// Canonical form of a polynomial written in the chain's coordinates.
    fn normalize(&self, p: &str) -> PyResult<String> {
        Ok(self.render(&self.poly(p)?))
    }

    /// Lie–Poisson bracket of two polynomials.
    fn bracket(&self, p: &str, q: &str) -> PyResult<String> {
        Ok(self.render(&poisson_bracket(&self.poly(p)?, &self.poly(q)?, self.inner.algebra())))
    }

    fn is_invariant(&self, p: &str) -> PyResult<bool> {
        Ok(commutant::invariants::is_invariant(&self.poly(p)?, &self.inner))
    }

    fn is_casimir(&self, p: &str) -> PyResult<bool> {
        Ok(commutant::invariants::is_casimir(&self.poly(p)?, &self.inner))
    }

    /// Gradings `(subalgebra degree, complement degree)` of the monomials of `p`.
    fn grading(&self, p: &str) -> PyResult<Vec<(u32, u32)>> {
        let g = bidegree_components(&self.poly(p)?, &self.inner).map_err(to_py)?;
        Ok(g.components().copied().collect())
    }

    /// Reduced echelon basis of the degree-`k` invariants.
    #[pyo3(signature = (k, budget = None))]
    fn invariant_space(&self, py: Python<'_>, k: u32, budget: Option<usize>) -> PyResult<Vec<String>> {
        let (basis, _) = py.detach(|| invariant_space_with(&self.inner, k, &solver(budget))).map_err(to_py)?;
        Ok(basis.basis.iter().map(|p| self.render(p)).collect())
    }

    /// Invariants and indecomposable generators for degrees `1..=max_degree`.
    #[pyo3(signature = (max_degree, budget = None))]
    fn sweep(&self, py: Python<'_>, max_degree: u32, budget: Option<usize>) -> PyResult<PyCommutant> {
        let gc = py.detach(|| sweep_with(&self.inner, max_degree, &solver(budget), &Direct)).map_err(to_py)?;
        Ok(PyCommutant { inner: gc })
    }

    /// Label counts `i0`, `rho0`, `n0` for the given ranks.
    #[pyo3(signature = (rank, sub_rank, l0 = 0))]
    fn label_counts(&self, rank: u32, sub_rank: u32, l0: u32) -> PyResult<BTreeMap<String, u32>> {
        let c = label_counts(&self.inner, (rank, sub_rank), l0).map_err(to_py)?;
        Ok(BTreeMap::from([("i0".into(), c.i0), ("rho0".into(), c.rho0), ("n0".into(), c.n0)]))
    }

    /// Rank of the Jacobian of `polys` at seeded rational points.
    #[pyo3(signature = (polys, trials = 8, seed = 0))]
    fn functional_rank(&self, polys: Vec<String>, trials: usize, seed: u64) -> PyResult<usize> {
        let ps = polys.iter().map(|p| self.poly(p)).collect::<PyResult<Vec<_>>>()?;
        functional_rank(&ps, trials, seed).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Chain({:?}, dim={}, subalgebra={:?})", self.inner.name(), self.inner.dim(), self.subalgebra())
    }
}

/// The graded commutant up to a maximal degree.
#[pyclass(name = "Commutant", module = "commutant", frozen)]
struct PyCommutant {
    inner: GradedCommutant,
}

#[pymethods]
impl PyCommutant {
    #[getter]
    fn max_degree(&self) -> u32 {
        self.inner.max_degree
    }

    #[getter]
    fn dimensions(&self) -> Vec<usize> {
        self.inner.dimensions()
    }

    #[getter]
    fn indecomposable_counts(&self) -> Vec<usize> {
        self.inner.indecomposable_counts()
    }

    fn basis(&self, k: u32) -> Vec<String> {
        let g = self.inner.chain.generators();
        self.inner.per_degree.get(&k).map_or_else(Vec::new, |b| b.basis.iter().map(|p| p.render(g)).collect())
    }

    fn indecomposables(&self, k: u32) -> Vec<String> {
        let g = self.inner.chain.generators();
        self.inner.indecomposables.get(&k).map_or_else(Vec::new, |v| v.iter().map(|p| p.render(g)).collect())
    }

    /// Generators adapted to the Poisson structure, central ones first.
    fn generators(&self) -> PyResult<PyGenerators> {
        let set = GeneratorSet::adapted(&self.inner).map_err(to_py)?;
        Ok(PyGenerators { set, chain: self.inner.chain.clone() })
    }
}

/// A labeled generator set and its closure relations.
#[pyclass(name = "Generators", module = "commutant", frozen)]
struct PyGenerators {
    set: GeneratorSet,
    chain: ChainSpec,
}

#[pymethods]
impl PyGenerators {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.set.labels().into_iter().map(String::from).collect()
    }

    #[getter]
    fn central(&self) -> Vec<String> {
        self.set.iter().filter(|g| g.central).map(|g| g.label.clone()).collect()
    }

    #[getter]
    fn casimirs(&self) -> Vec<String> {
        detect_central(&self.set, &self.chain)
    }

    fn polynomial(&self, label: &str) -> PyResult<String> {
        Ok(self.set.get(label).map_err(to_py)?.poly.render(self.chain.generators()))
    }

    fn degree(&self, label: &str) -> PyResult<u32> {
        Ok(self.set.get(label).map_err(to_py)?.degree)
    }

    /// Pairwise brackets expanded in generator monomials: a list of
    /// `(left, right, [(monomial, coefficient)], residual)`.
    #[pyo3(signature = (budget = None))]
    #[allow(clippy::type_complexity)]
    fn closure(
        &self,
        py: Python<'_>,
        budget: Option<usize>,
    ) -> PyResult<Vec<(String, String, Vec<(String, String)>, String)>> {
        let table = py.detach(|| closure_table_with(&self.set, &self.chain, &solver(budget))).map_err(to_py)?;
        Ok(table
            .relations
            .iter()
            .map(|r| {
                let terms = r
                    .expansion
                    .iter()
                    .rev()
                    .map(|(idx, c)| (render_multi_index(idx, &self.set), c.to_string()))
                    .collect();
                (r.left.clone(), r.right.clone(), terms, r.residual.render(self.chain.generators()))
            })
            .collect())
    }

    fn __len__(&self) -> usize {
        self.set.len()
    }
}

/// Runs the command-line driver in-process; returns `(exit_code, report_json)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> PyResult<(i32, String)> {
    use clap::Parser;
    let argv = std::iter::once("commutant".to_string()).chain(args);
    let cli = commutant::cli::Cli::try_parse_from(argv).map_err(|e| ParseError::new_err(e.to_string()))?;
    let config = commutant::cli::RunConfig::from_cli(cli).map_err(to_py)?;
    let outcome = py.detach(|| commutant::cli::execute(&config));
    Ok((outcome.exit_code, outcome.report.to_string()))
}

#[pymodule(name = "commutant")]
fn commutant_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChain>()?;
    m.add_class::<PyCommutant>()?;
    m.add_class::<PyGenerators>()?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    let py = m.py();
    m.add("CommutantError", py.get_type::<CommutantError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("ResourceError", py.get_type::<ResourceError>())?;
    m.add("BUILTIN_CHAINS", commutant::chain::BUILTIN_CHAINS.to_vec())?;
    Ok(())
}
