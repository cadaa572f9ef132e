//! The graded Poisson commutant: invariant spaces degree by degree,
//! decomposable sub-spans and indecomposable generators.
//!
//! At degree `k` the invariants are the kernel of `p ↦ ({x_u, p})_u` on the
//! homogeneous polynomials of degree `k`. The solve is split into
//! independent blocks before any elimination happens:
//!
//! * coordinates are grouped into classes that the subalgebra action mixes;
//!   the degree in each class is preserved by every constraint, so each
//!   class multidegree is a separate linear system;
//! * a subalgebra element acting diagonally on the coordinates forces every
//!   monomial of nonzero weight to have coefficient zero, so such monomials
//!   are dropped instead of producing constraint rows;
//! * only a Lie-generating subset of the subalgebra contributes rows, since
//!   invariance under `x_u` and `x_v` implies invariance under `{x_u, x_v}`.
//!
//! Every returned basis element is re-checked against all subalgebra
//! coordinates with the exact bracket.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::linalg::{kernel_rref, Inserted, KernelMethod, Row, SparseVec, TrackedEchelon};
use crate::poly::{bidegree_components, poisson_bracket, BidegreeSet, Monomial, Polynomial};
use crate::scalar::GaussianRational;

/// Default cap on the number of degree-`k` monomials.
pub const DEFAULT_BUDGET: usize = 2_000_000;

static SOLVES: AtomicU64 = AtomicU64::new(0);

/// Number of invariant-space solves run by this process so far.
pub fn solver_invocations() -> u64 {
    SOLVES.load(Ordering::SeqCst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Maximum number of degree-`k` monomials in the full ring.
    pub budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { budget: DEFAULT_BUDGET }
    }
}

/// Reduced echelon basis of the degree-`k` invariants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeBasis {
    pub degree: u32,
    /// Sorted by descending leading monomial; leading coefficients are one.
    pub basis: Vec<Polynomial>,
    /// Basis indices grouped by their grading.
    pub bidegree_split: BTreeMap<BidegreeSet, Vec<usize>>,
}

impl DegreeBasis {
    /// Wraps rows that are already in reduced echelon form.
    pub fn from_rows(chain: &ChainSpec, degree: u32, mut basis: Vec<Polynomial>) -> Result<Self> {
        basis.sort_by(|a, b| b.leading_monomial().cmp(&a.leading_monomial()));
        let mut bidegree_split: BTreeMap<BidegreeSet, Vec<usize>> = BTreeMap::new();
        for (i, p) in basis.iter().enumerate() {
            if p.homogeneous_degree() != Some(degree) {
                return Err(Error::DegreeMismatch { expected: degree, found: p.degree().unwrap_or(0) });
            }
            bidegree_split.entry(bidegree_components(p, chain)?).or_default().push(i);
        }
        Ok(DegreeBasis { degree, basis, bidegree_split })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Checks the reduced echelon conditions.
    pub fn is_reduced_echelon(&self) -> bool {
        let leads: Vec<&Monomial> = self.basis.iter().filter_map(|p| p.leading_monomial()).collect();
        if leads.len() != self.basis.len() || leads.windows(2).any(|w| w[0] <= w[1]) {
            return false;
        }
        self.basis.iter().enumerate().all(|(i, p)| {
            p.leading_term().map(|(_, c)| c.is_one()).unwrap_or(false)
                && leads.iter().enumerate().all(|(j, m)| i == j || p.coeff(m).is_none())
        })
    }
}

/// Per-degree counts and solver notes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DegreeDiagnostics {
    pub dimension: usize,
    pub decomposable_rank: usize,
    pub indecomposable_count: usize,
    /// Monomials that survived the weight filter.
    pub columns: usize,
    pub blocks: usize,
    /// Number of primes, or `None` for exact elimination or a cache hit.
    pub primes: Option<usize>,
    pub cached: bool,
}

/// The commutant up to a maximal degree.
#[derive(Clone, Debug)]
pub struct GradedCommutant {
    pub chain: ChainSpec,
    pub max_degree: u32,
    pub per_degree: BTreeMap<u32, DegreeBasis>,
    pub indecomposables: BTreeMap<u32, Vec<Polynomial>>,
    pub diagnostics: BTreeMap<u32, DegreeDiagnostics>,
}

impl GradedCommutant {
    pub fn new(chain: ChainSpec) -> Self {
        GradedCommutant {
            chain,
            max_degree: 0,
            per_degree: BTreeMap::new(),
            indecomposables: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    /// `(degree, count)` of indecomposables for `1..=max_degree`.
    pub fn indecomposable_counts(&self) -> Vec<usize> {
        (1..=self.max_degree).map(|k| self.indecomposables.get(&k).map_or(0, Vec::len)).collect()
    }

    pub fn dimensions(&self) -> Vec<usize> {
        (1..=self.max_degree).map(|k| self.per_degree.get(&k).map_or(0, DegreeBasis::dim)).collect()
    }

    /// All indecomposables in ascending degree, with their degrees.
    pub fn generators(&self) -> Vec<(u32, &Polynomial)> {
        self.indecomposables.iter().flat_map(|(k, v)| v.iter().map(move |p| (*k, p))).collect()
    }
}

/// `{x_u, p} = 0` for every subalgebra coordinate.
pub fn is_invariant(p: &Polynomial, chain: &ChainSpec) -> bool {
    let n = chain.dim();
    chain.subalgebra().iter().all(|&u| poisson_bracket(&Polynomial::var(n, u), p, chain.algebra()).is_zero())
}

/// `{x_j, p} = 0` for every coordinate of the algebra.
pub fn is_casimir(p: &Polynomial, chain: &ChainSpec) -> bool {
    let n = chain.dim();
    (0..n).all(|j| poisson_bracket(&Polynomial::var(n, j), p, chain.algebra()).is_zero())
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Number of degree-`k` monomials in `n` variables.
pub fn monomial_count(n: usize, k: u32) -> u128 {
    if n == 0 {
        return u128::from(k == 0);
    }
    binomial(n as u128 + k as u128 - 1, k as u128)
}

fn check_budget(n: usize, k: u32, cfg: &SolverConfig) -> Result<()> {
    let required = monomial_count(n, k);
    if required > cfg.budget as u128 {
        return Err(Error::Resource { degree: k, required, budget: cfg.budget });
    }
    Ok(())
}

fn for_each_monomial(n: usize, k: u32, f: &mut impl FnMut(&[u8])) {
    fn rec(exps: &mut Vec<u8>, i: usize, left: u32, f: &mut impl FnMut(&[u8])) {
        if i + 1 == exps.len() {
            exps[i] = left as u8;
            f(exps);
            exps[i] = 0;
            return;
        }
        for e in (0..=left).rev() {
            exps[i] = e as u8;
            rec(exps, i + 1, left - e, f);
        }
        exps[i] = 0;
    }
    if n > 0 {
        let mut exps = vec![0u8; n];
        rec(&mut exps, 0, k, f);
    }
}

/// How the subalgebra action is split into filters, classes and constraints.
struct ActionPlan {
    /// Weights of each diagonal subalgebra element on the coordinates.
    weights: Vec<Vec<GaussianRational>>,
    class_of: Vec<usize>,
    nclasses: usize,
    constraints: Vec<usize>,
}

fn diagonal_weights(chain: &ChainSpec, u: usize) -> Option<Vec<GaussianRational>> {
    let alg = chain.algebra();
    (0..chain.dim())
        .map(|j| match alg.bracket_terms(u, j) {
            [] => Some(GaussianRational::zero()),
            [(k, c)] if *k == j => Some(c.clone()),
            _ => None,
        })
        .collect()
}

fn plan(chain: &ChainSpec) -> ActionPlan {
    let n = chain.dim();
    let alg = chain.algebra();
    let sub = chain.subalgebra();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for &u in sub {
        for j in 0..n {
            for (k, _) in alg.bracket_terms(u, j) {
                let (a, b) = (find(&mut parent, j), find(&mut parent, *k));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut class_ids: BTreeMap<usize, usize> = BTreeMap::new();
    let class_of: Vec<usize> = (0..n)
        .map(|j| {
            let r = find(&mut parent, j);
            let next = class_ids.len();
            *class_ids.entry(r).or_insert(next)
        })
        .collect();

    let diag: Vec<Option<Vec<GaussianRational>>> = sub.iter().map(|&u| diagonal_weights(chain, u)).collect();
    let weights: Vec<Vec<GaussianRational>> =
        diag.iter().flatten().filter(|w| w.iter().any(|c| !c.is_zero())).cloned().collect();

    // Lie-generating subset, diagonal elements first since they cost no rows
    let mut order: Vec<usize> = (0..sub.len()).filter(|&a| diag[a].is_some()).collect();
    order.extend((0..sub.len()).filter(|&a| diag[a].is_none()));
    let mut chosen: Vec<usize> = Vec::new();
    let mut span: TrackedEchelon<usize> = TrackedEchelon::new(false);
    let mut span_elems: Vec<SparseVec<usize>> = Vec::new();
    for a in order {
        let u = sub[a];
        let xu: SparseVec<usize> = [(u, GaussianRational::one())].into_iter().collect();
        if span.contains(&xu) {
            continue;
        }
        chosen.push(u);
        // close the span under brackets
        let mut queue = vec![xu];
        while let Some(v) = queue.pop() {
            if let Inserted::Independent(_) = span.insert(v.clone()) {
                for w in span_elems.iter() {
                    let mut br: SparseVec<usize> = BTreeMap::new();
                    for (i, ci) in &v {
                        for (j, cj) in w {
                            for (k, ck) in alg.bracket_terms(*i, *j) {
                                crate::linalg::axpy(&mut br, &(ci * cj), &[(*k, ck.clone())].into_iter().collect());
                            }
                        }
                    }
                    if !br.is_empty() && !span.contains(&br) {
                        queue.push(br);
                    }
                }
                span_elems.push(v);
            }
        }
    }
    let constraints = chosen.into_iter().filter(|&u| diagonal_weights(chain, u).is_none()).collect();
    ActionPlan { weights, class_of, nclasses: class_ids.len(), constraints }
}

/// Computes the degree-`k` invariant space; also returns solver diagnostics.
pub fn invariant_space_with(chain: &ChainSpec, k: u32, cfg: &SolverConfig) -> Result<(DegreeBasis, DegreeDiagnostics)> {
    if k == 0 {
        return Err(Error::InvalidDegree(k));
    }
    let n = chain.dim();
    check_budget(n, k, cfg)?;
    SOLVES.fetch_add(1, Ordering::SeqCst);
    let plan = plan(chain);
    let alg = chain.algebra();

    let mut blocks: BTreeMap<Vec<u32>, Vec<Monomial>> = BTreeMap::new();
    for_each_monomial(n, k, &mut |e| {
        for w in &plan.weights {
            let mut s = GaussianRational::zero();
            for (j, &ej) in e.iter().enumerate() {
                if ej > 0 && !w[j].is_zero() {
                    s += &w[j].scale_int(ej as i64);
                }
            }
            if !s.is_zero() {
                return;
            }
        }
        let mut key = vec![0u32; plan.nclasses];
        for (j, &ej) in e.iter().enumerate() {
            key[plan.class_of[j]] += ej as u32;
        }
        blocks.entry(key).or_default().push(Monomial::from_exponents(e));
    });
    let columns = blocks.values().map(Vec::len).sum();
    let nblocks = blocks.len();

    let solved: Vec<(Vec<Polynomial>, KernelMethod)> = blocks
        .into_par_iter()
        .map(|(_, mut monos)| {
            monos.sort();
            let mut rows: BTreeMap<(usize, Monomial), BTreeMap<u32, GaussianRational>> = BTreeMap::new();
            for &u in &plan.constraints {
                for (col, m) in monos.iter().enumerate() {
                    for (j, &ej) in m.exponents().iter().enumerate() {
                        if ej == 0 {
                            continue;
                        }
                        let base = m.div_var(j).unwrap();
                        for (t, c) in alg.bracket_terms(u, j) {
                            let out = base.times_var(*t);
                            let e = rows.entry((u, out)).or_default().entry(col as u32).or_default();
                            *e += &c.scale_int(ej as i64);
                        }
                    }
                }
            }
            let rows: Vec<Row> = rows
                .into_values()
                .map(|r| r.into_iter().filter(|(_, c)| !c.is_zero()).collect::<Row>())
                .filter(|r| !r.is_empty())
                .collect();
            let (vecs, method) = kernel_rref(&rows, monos.len());
            let polys = vecs
                .into_iter()
                .map(|v| Polynomial::normal_form(n, v.into_iter().map(|(c, x)| (monos[c as usize].clone(), x))))
                .collect();
            (polys, method)
        })
        .collect();

    let mut basis = Vec::new();
    let mut primes: Option<usize> = None;
    for (polys, method) in solved {
        if let KernelMethod::Modular { primes: p } = method {
            primes = Some(primes.map_or(p, |q| q.max(p)));
        }
        basis.extend(polys);
    }
    if let Some(bad) = basis.par_iter().position_first(|p| !is_invariant(p, chain)) {
        return Err(Error::Internal(format!("degree {k} basis element {bad} failed the invariance check")));
    }
    let db = DegreeBasis::from_rows(chain, k, basis)?;
    let diag = DegreeDiagnostics { dimension: db.dim(), columns, blocks: nblocks, primes, ..Default::default() };
    Ok((db, diag))
}

/// The degree-`k` invariant space with the default budget.
pub fn invariant_space(chain: &ChainSpec, k: u32) -> Result<DegreeBasis> {
    invariant_space_with(chain, k, &SolverConfig::default()).map(|r| r.0)
}

fn to_sparse(p: &Polynomial) -> SparseVec<Monomial> {
    p.terms().map(|(m, c)| (m.clone(), c.clone())).collect()
}

fn from_sparse(n: usize, v: SparseVec<Monomial>) -> Polynomial {
    Polynomial::normal_form(n, v)
}

/// Multisets of generator indices whose degrees sum to `k`, in a fixed order.
pub(crate) fn degree_multisets(degrees: &[u32], k: u32) -> Vec<Vec<usize>> {
    fn rec(degrees: &[u32], start: usize, left: u32, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for g in start..degrees.len() {
            if degrees[g] > 0 && degrees[g] <= left {
                cur.push(g);
                rec(degrees, g, left - degrees[g], cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(degrees, 0, k, &mut Vec::new(), &mut out);
    out
}

/// Products of lower-degree indecomposables of total degree `k`, in reduced
/// echelon form.
pub fn decomposable_span(lower: &GradedCommutant, k: u32) -> Result<DegreeBasis> {
    decomposable_span_with(lower, k, &SolverConfig::default())
}

pub fn decomposable_span_with(lower: &GradedCommutant, k: u32, cfg: &SolverConfig) -> Result<DegreeBasis> {
    if k == 0 {
        return Err(Error::InvalidDegree(k));
    }
    let chain = &lower.chain;
    let n = chain.dim();
    check_budget(n, k, cfg)?;
    for d in 1..k {
        if !lower.indecomposables.contains_key(&d) {
            return Err(Error::MissingInput(format!("indecomposables of degree {d} are needed for degree {k}")));
        }
    }
    let gens: Vec<(u32, &Polynomial)> = lower.generators().into_iter().filter(|(d, _)| *d < k).collect();
    let degrees: Vec<u32> = gens.iter().map(|g| g.0).collect();
    let products: Vec<Polynomial> = degree_multisets(&degrees, k)
        .par_iter()
        .map(|ms| {
            let mut p = Polynomial::one(n);
            for &g in ms {
                p = p.checked_mul(gens[g].1)?;
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;
    let mut ech = TrackedEchelon::new(false);
    for p in &products {
        ech.insert(to_sparse(p));
    }
    let rows = ech.rref().into_iter().map(|v| from_sparse(n, v)).collect();
    DegreeBasis::from_rows(chain, k, rows)
}

/// A canonical complement of the decomposable span inside the invariants:
/// invariant rows are reduced modulo the decomposables and the remainders
/// brought to reduced echelon form.
pub fn indecomposable_generators(chain: &ChainSpec, k: u32, lower: &GradedCommutant) -> Result<Vec<Polynomial>> {
    let inv = invariant_space(chain, k)?;
    let dec = decomposable_span(lower, k)?;
    Ok(complement(chain.dim(), &inv, &dec))
}

fn complement(n: usize, inv: &DegreeBasis, dec: &DegreeBasis) -> Vec<Polynomial> {
    let mut d = TrackedEchelon::new(false);
    for p in &dec.basis {
        d.insert(to_sparse(p));
    }
    let mut rest = TrackedEchelon::new(false);
    for p in &inv.basis {
        let (r, _) = d.reduce(&to_sparse(p));
        if !r.is_empty() {
            rest.insert(r);
        }
    }
    rest.rref().into_iter().map(|v| from_sparse(n, v)).collect()
}

/// Where sweep gets its invariant bases from.
pub trait BasisSource: Sync {
    /// Returns the basis and whether it was served without solving.
    fn basis(&self, chain: &ChainSpec, k: u32, cfg: &SolverConfig) -> Result<(DegreeBasis, DegreeDiagnostics)>;
}

/// Always solves.
pub struct Direct;

impl BasisSource for Direct {
    fn basis(&self, chain: &ChainSpec, k: u32, cfg: &SolverConfig) -> Result<(DegreeBasis, DegreeDiagnostics)> {
        invariant_space_with(chain, k, cfg)
    }
}

/// Runs degrees `1..=zeta` in order.
pub fn sweep(chain: &ChainSpec, zeta: u32) -> Result<GradedCommutant> {
    sweep_with(chain, zeta, &SolverConfig::default(), &Direct)
}

pub fn sweep_with(
    chain: &ChainSpec,
    zeta: u32,
    cfg: &SolverConfig,
    source: &dyn BasisSource,
) -> Result<GradedCommutant> {
    if zeta == 0 {
        return Err(Error::InvalidDegree(zeta));
    }
    let mut gc = GradedCommutant::new(chain.clone());
    for k in 1..=zeta {
        let step = (|| {
            let (inv, mut diag) = source.basis(chain, k, cfg)?;
            let dec = decomposable_span_with(&gc, k, cfg)?;
            let ind = complement(chain.dim(), &inv, &dec);
            diag.dimension = inv.dim();
            diag.decomposable_rank = dec.dim();
            diag.indecomposable_count = ind.len();
            Ok((inv, ind, diag))
        })();
        match step {
            Ok((inv, ind, diag)) => {
                log::info!("degree {k}: dim {} decomposable {} new {}", inv.dim(), diag.decomposable_rank, ind.len());
                gc.per_degree.insert(k, inv);
                gc.indecomposables.insert(k, ind);
                gc.diagnostics.insert(k, diag);
                gc.max_degree = k;
            }
            Err(e) => return Err(Error::PartialSweep { degree: k, source: Box::new(e), partial: Box::new(gc) }),
        }
    }
    Ok(gc)
}

/// Coordinates of `p` in `basis`, or `None` when `p` is outside the span.
pub fn span_membership(p: &Polynomial, basis: &DegreeBasis) -> Result<Option<Vec<GaussianRational>>> {
    if !p.is_zero() && p.homogeneous_degree() != Some(basis.degree) {
        return Err(Error::DegreeMismatch { expected: basis.degree, found: p.degree().unwrap_or(0) });
    }
    let mut rest = p.clone();
    let mut coords = Vec::with_capacity(basis.dim());
    for row in &basis.basis {
        let (lead, _) = row.leading_term().unwrap();
        let c = rest.coeff(lead).cloned().unwrap_or_else(GaussianRational::zero);
        if !c.is_zero() {
            rest.add_scaled(&-c.clone(), row);
        }
        coords.push(c);
    }
    Ok(if rest.is_zero() { Some(coords) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::builtin_chain;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomial_count(10, 4), 715);
        assert_eq!(monomial_count(3, 0), 1);
        let mut seen = 0;
        for_each_monomial(4, 3, &mut |e| {
            assert_eq!(e.iter().map(|&x| x as u32).sum::<u32>(), 3);
            seen += 1;
        });
        assert_eq!(seen, 20);
    }

    #[test]
    fn multisets() {
        // degrees 2,2,4: 6 = 2+2+2 (x4) + 2+4 (x2)
        assert_eq!(degree_multisets(&[2, 2, 4], 6).len(), 6);
        assert_eq!(degree_multisets(&[3], 4), Vec::<Vec<usize>>::new());
    }

    #[test]
    fn surfon_plan() {
        let c = builtin_chain("surfon").unwrap();
        let p = plan(&c);
        assert_eq!(p.weights.len(), 1);
        assert_eq!(p.constraints, vec![1, 2]);
        // subalgebra and the q's are separate classes
        assert_eq!(p.nclasses, 2);
    }

    #[test]
    fn small_degrees() {
        let c = builtin_chain("surfon").unwrap();
        assert_eq!(invariant_space(&c, 1).unwrap().dim(), 0);
        let b = invariant_space(&c, 2).unwrap();
        assert_eq!(b.dim(), 2);
        assert!(b.is_reduced_echelon());
        let b1 = Polynomial::parse("l0^2 + l1*lm1", c.generators()).unwrap();
        assert!(span_membership(&b1, &b).unwrap().is_some());
        let l0sq = Polynomial::parse("l0^2", c.generators()).unwrap();
        assert_eq!(span_membership(&l0sq, &b).unwrap(), None);
        assert!(matches!(span_membership(&Polynomial::var(10, 0), &b), Err(Error::DegreeMismatch { .. })));
        assert_eq!(invariant_space(&c, 3).unwrap().dim(), 0);
        assert!(matches!(invariant_space(&c, 0), Err(Error::InvalidDegree(0))));
    }

    #[test]
    fn budget_is_a_resource_error() {
        let c = builtin_chain("surfon").unwrap();
        let cfg = SolverConfig { budget: 100 };
        match invariant_space_with(&c, 3, &cfg) {
            Err(e @ Error::Resource { required: 220, .. }) => assert_eq!(e.kind(), crate::error::ErrorKind::Resource),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_sweep_keeps_lower_degrees() {
        let c = builtin_chain("elliott").unwrap();
        let cfg = SolverConfig { budget: 200 };
        match sweep_with(&c, 4, &cfg, &Direct) {
            Err(Error::PartialSweep { degree: 4, partial, source }) => {
                assert!(matches!(*source, Error::Resource { .. }));
                assert_eq!(partial.max_degree, 3);
                assert_eq!(partial.indecomposable_counts(), vec![0, 2, 2]);
            }
            other => panic!("{other:?}"),
        }
    }
}
