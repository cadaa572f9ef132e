//! The polynomial Poisson algebra spanned by commutant generators: central
//! elements, bracket expansions in generator monomials, and syzygies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::invariants::{degree_multisets, is_casimir, is_invariant, monomial_count, GradedCommutant, SolverConfig};
use crate::linalg::{Inserted, SparseVec, TrackedEchelon};
use crate::poly::{poisson_bracket, Monomial, Polynomial};
use crate::scalar::GaussianRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub label: String,
    pub poly: Polynomial,
    pub degree: u32,
    /// Poisson-commutes with every generator of the set.
    pub central: bool,
}

/// Labeled generators with central ones first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GeneratorSet {
    entries: Vec<Generator>,
}

fn make_entry(label: String, poly: Polynomial) -> Result<Generator> {
    let degree = match poly.homogeneous_degree() {
        Some(d) if d > 0 => d,
        _ => {
            return Err(Error::InvalidGenerator(format!(
                "`{label}` must be nonzero and homogeneous of positive degree"
            )))
        }
    };
    Ok(Generator { label, poly, degree, central: false })
}

fn check_labels(entries: &[Generator]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for e in entries {
        if !seen.insert(e.label.as_str()) {
            return Err(Error::InvalidGenerator(format!("duplicate label `{}`", e.label)));
        }
    }
    Ok(())
}

impl GeneratorSet {
    /// Builds a set and flags the elements that commute with all others.
    pub fn new(chain: &ChainSpec, entries: Vec<(String, Polynomial)>) -> Result<Self> {
        let mut set = Self::unflagged(entries)?;
        let alg = chain.algebra();
        let n = set.entries.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let zero: Vec<bool> = pairs
            .par_iter()
            .map(|&(i, j)| poisson_bracket(&set.entries[i].poly, &set.entries[j].poly, alg).is_zero())
            .collect();
        let mut central = vec![true; n];
        for (&(i, j), z) in pairs.iter().zip(zero) {
            if !z {
                central[i] = false;
                central[j] = false;
            }
        }
        for (e, c) in set.entries.iter_mut().zip(central) {
            e.central = c;
        }
        set.entries.sort_by_key(|e| !e.central);
        Ok(set)
    }

    /// Builds a set in the given order with every central flag cleared.
    pub fn unflagged(entries: Vec<(String, Polynomial)>) -> Result<Self> {
        let entries = entries.into_iter().map(|(l, p)| make_entry(l, p)).collect::<Result<Vec<_>>>()?;
        check_labels(&entries)?;
        Ok(GeneratorSet { entries })
    }

    /// The sweep's indecomposables, labeled `p1^(k)`, `p2^(k)`, ...
    pub fn from_commutant(gc: &GradedCommutant) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, v) in &gc.indecomposables {
            for (m, p) in v.iter().enumerate() {
                entries.push((format!("p{}^({k})", m + 1), p.clone()));
            }
        }
        Self::new(&gc.chain, entries)
    }

    /// Generators adapted to the centre. At each degree, the invariants that
    /// commute with every sweep generator are found first; those that are
    /// new modulo products of lower generators become central generators,
    /// and a canonical complement supplies the remaining ones. Labels are
    /// `p1^(k)`, `p2^(k)`, ... with central generators numbered first.
    pub fn adapted(gc: &GradedCommutant) -> Result<Self> {
        let chain = &gc.chain;
        let n = chain.dim();
        let alg = chain.algebra();
        let canonical: Vec<(u32, &Polynomial)> = gc.generators();
        let mut chosen: Vec<(u32, Polynomial, bool)> = Vec::new();
        for k in 1..=gc.max_degree {
            let want = gc.indecomposables.get(&k).map_or(0, Vec::len);
            if want == 0 {
                continue;
            }
            let inv = &gc.per_degree[&k];
            // centre of the commutant inside the degree-k invariants
            let images: Vec<SparseVec<(usize, Monomial)>> = inv
                .basis
                .par_iter()
                .map(|v| {
                    let mut out = SparseVec::new();
                    for (g, (_, w)) in canonical.iter().enumerate() {
                        for (m, c) in poisson_bracket(v, w, alg).terms() {
                            out.insert((g, m.clone()), c.clone());
                        }
                    }
                    out
                })
                .collect();
            let centre = kernel_combinations(n, &inv.basis, images);
            // Casimirs of the whole algebra go first
            let coord_images: Vec<SparseVec<(usize, Monomial)>> = inv
                .basis
                .par_iter()
                .map(|v| {
                    let mut out = SparseVec::new();
                    for j in 0..n {
                        for (m, c) in poisson_bracket(&Polynomial::var(n, j), v, alg).terms() {
                            out.insert((j, m.clone()), c.clone());
                        }
                    }
                    out
                })
                .collect();
            let mut centre_first = kernel_combinations(n, &inv.basis, coord_images);
            centre_first.extend(centre);
            let centre = centre_first;

            let lower: Vec<Polynomial> = products(n, &chosen.iter().map(|(d, p, _)| (*d, p)).collect::<Vec<_>>(), k)?;
            let mut span = TrackedEchelon::new(false);
            for p in &lower {
                span.insert(to_sparse(p));
            }
            let mut new_central = Vec::new();
            for z in centre {
                if let Inserted::Independent(_) = span.insert(to_sparse(&z)) {
                    new_central.push(z);
                }
            }
            let mut rest = TrackedEchelon::new(false);
            for v in &inv.basis {
                let (r, _) = span.reduce(&to_sparse(v));
                if !r.is_empty() {
                    rest.insert(r);
                }
            }
            let others: Vec<Polynomial> = rest.rref().into_iter().map(|v| Polynomial::normal_form(n, v)).collect();
            if new_central.len() + others.len() != want {
                return Err(Error::Internal(format!(
                    "degree {k}: adapted basis has {} generators, sweep found {want}",
                    new_central.len() + others.len()
                )));
            }
            chosen.extend(new_central.into_iter().map(|p| (k, p, true)));
            chosen.extend(others.into_iter().map(|p| (k, p, false)));
        }
        let mut entries = Vec::new();
        let mut counter: BTreeMap<u32, usize> = BTreeMap::new();
        for (k, p, _) in &chosen {
            let m = counter.entry(*k).or_insert(0);
            *m += 1;
            entries.push((format!("p{m}^({k})"), p.clone()));
        }
        Self::new(chain, entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Generator] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &Generator> {
        self.entries.iter()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.label.as_str()).collect()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.entries.iter().position(|e| e.label == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn get(&self, label: &str) -> Result<&Generator> {
        Ok(&self.entries[self.index_of(label)?])
    }

    pub fn relabel(&mut self, old: &str, new: &str) -> Result<()> {
        let i = self.index_of(old)?;
        if old != new && self.index_of(new).is_ok() {
            return Err(Error::InvalidGenerator(format!("duplicate label `{new}`")));
        }
        self.entries[i].label = new.to_string();
        Ok(())
    }

    /// Replaces the polynomial of `label` by `{a, b}` when that bracket can
    /// stand in for it: same degree, and together with the other generators
    /// it spans the same products at that degree.
    pub fn rebase_to_bracket(&mut self, label: &str, a: &str, b: &str, chain: &ChainSpec) -> Result<()> {
        let t = self.index_of(label)?;
        let br = poisson_bracket(&self.get(a)?.poly, &self.get(b)?.poly, chain.algebra());
        let k = self.entries[t].degree;
        if br.homogeneous_degree() != Some(k) {
            return Err(Error::InvalidGenerator(format!("{{{a}, {b}}} is not of degree {k}")));
        }
        let n = chain.dim();
        let others: Vec<(u32, &Polynomial)> =
            self.entries.iter().enumerate().filter(|(i, _)| *i != t).map(|(_, e)| (e.degree, &e.poly)).collect();
        let mut span = TrackedEchelon::new(false);
        for p in products(n, &others, k)? {
            span.insert(to_sparse(&p));
        }
        let before = span.clone();
        if span.contains(&to_sparse(&br)) || !span_plus(&before, &br).contains(&to_sparse(&self.entries[t].poly)) {
            return Err(Error::InvalidGenerator(format!("{{{a}, {b}}} cannot replace `{label}`")));
        }
        self.entries[t].poly = br;
        Ok(())
    }
}

/// Reduced echelon basis of the combinations of `basis` whose images vanish.
fn kernel_combinations(n: usize, basis: &[Polynomial], images: Vec<SparseVec<(usize, Monomial)>>) -> Vec<Polynomial> {
    let mut ech = TrackedEchelon::new(true);
    let mut out = TrackedEchelon::new(false);
    for img in images {
        if let Inserted::Dependent(rel) = ech.insert(img) {
            let mut z = Polynomial::zero(n);
            for (t, c) in &rel {
                z.add_scaled(c, &basis[*t]);
            }
            out.insert(to_sparse(&z));
        }
    }
    out.rref().into_iter().map(|v| Polynomial::normal_form(n, v)).collect()
}

fn span_plus(e: &TrackedEchelon<Monomial>, p: &Polynomial) -> TrackedEchelon<Monomial> {
    let mut out = e.clone();
    out.insert(to_sparse(p));
    out
}

fn to_sparse(p: &Polynomial) -> SparseVec<Monomial> {
    p.terms().map(|(m, c)| (m.clone(), c.clone())).collect()
}

/// All products of the given generators with total degree `k`.
fn products(n: usize, gens: &[(u32, &Polynomial)], k: u32) -> Result<Vec<Polynomial>> {
    let degrees: Vec<u32> = gens.iter().map(|g| g.0).collect();
    degree_multisets(&degrees, k)
        .par_iter()
        .map(|ms| {
            let mut p = Polynomial::one(n);
            for &g in ms {
                p = p.checked_mul(gens[g].1)?;
            }
            Ok(p)
        })
        .collect()
}

/// Labels whose polynomial commutes with every coordinate of the algebra.
pub fn detect_central(gens: &GeneratorSet, chain: &ChainSpec) -> Vec<String> {
    let flags: Vec<bool> = gens.entries.par_iter().map(|g| is_casimir(&g.poly, chain)).collect();
    gens.entries.iter().zip(flags).filter(|(_, f)| *f).map(|(g, _)| g.label.clone()).collect()
}

/// Exponents over the generators of a set, in set order.
pub type MultiIndex = Vec<u32>;

/// `{left, right} = Σ coeff · Π gens^index + residual`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureRelation {
    pub left: String,
    pub right: String,
    pub degree: u32,
    pub expansion: BTreeMap<MultiIndex, GaussianRational>,
    pub residual: Polynomial,
}

impl ClosureRelation {
    pub fn closes(&self) -> bool {
        self.residual.is_zero()
    }

    /// Right-hand side rebuilt from the generators, residual included.
    pub fn reconstruct(&self, gens: &GeneratorSet) -> Polynomial {
        let mut out = self.residual.clone();
        for (idx, c) in &self.expansion {
            out.add_scaled(c, &monomial_in(gens, idx));
        }
        out
    }

    /// Largest total exponent of non-central generators in the expansion.
    pub fn noncentral_degree(&self, gens: &GeneratorSet) -> u32 {
        self.expansion
            .keys()
            .map(|idx| idx.iter().zip(gens.entries.iter()).filter(|(_, g)| !g.central).map(|(e, _)| *e).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn render_expansion(&self, gens: &GeneratorSet) -> String {
        render_combination(&self.expansion, gens)
    }
}

fn monomial_in(gens: &GeneratorSet, idx: &[u32]) -> Polynomial {
    let n = gens.entries.first().map_or(0, |g| g.poly.nvars());
    let mut p = Polynomial::one(n);
    for (g, &e) in gens.entries.iter().zip(idx) {
        for _ in 0..e {
            p = &p * &g.poly;
        }
    }
    p
}

/// Renders a generator monomial such as `p1^(2)^2*A`.
pub fn render_multi_index(idx: &[u32], gens: &GeneratorSet) -> String {
    let parts: Vec<String> = gens
        .entries
        .iter()
        .zip(idx)
        .filter(|(_, &e)| e > 0)
        .map(|(g, &e)| if e == 1 { g.label.clone() } else { format!("{}^{e}", g.label) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

fn render_combination(terms: &BTreeMap<MultiIndex, GaussianRational>, gens: &GeneratorSet) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (idx, c)) in terms.iter().rev().enumerate() {
        let st = c.signed_text();
        if i == 0 {
            if st.negative {
                out.push('-');
            }
        } else {
            out.push_str(if st.negative { " - " } else { " + " });
        }
        if !st.body.is_empty() {
            out.push_str(&st.body);
            out.push('*');
        }
        out.push_str(&render_multi_index(idx, gens));
    }
    out
}

/// A linear dependency among generator monomials of one degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Syzygy {
    pub degree: u32,
    pub terms: BTreeMap<MultiIndex, GaussianRational>,
}

impl Syzygy {
    pub fn render(&self, gens: &GeneratorSet) -> String {
        format!("{} = 0", render_combination(&self.terms, gens))
    }
}

/// Generator monomials of one degree, in a fixed order, with an echelon
/// form of their products that remembers which monomials built each row.
#[derive(Clone, Debug)]
pub struct ProductBasis {
    pub degree: u32,
    pub monomials: Vec<MultiIndex>,
    echelon: TrackedEchelon<Monomial>,
    pub syzygies: Vec<Syzygy>,
}

impl ProductBasis {
    /// Uses the generator monomials of degree `k` accepted by `keep`.
    pub fn build(gens: &GeneratorSet, k: u32, cfg: &SolverConfig, keep: &dyn Fn(&[u32]) -> bool) -> Result<Self> {
        let n = gens.entries.first().map_or(0, |g| g.poly.nvars());
        let required = monomial_count(n, k);
        if required > cfg.budget as u128 {
            return Err(Error::Resource { degree: k, required, budget: cfg.budget });
        }
        let degrees: Vec<u32> = gens.entries.iter().map(|g| g.degree).collect();
        let monomials: Vec<MultiIndex> = degree_multisets(&degrees, k)
            .into_iter()
            .map(|ms| {
                let mut idx = vec![0u32; gens.len()];
                for g in ms {
                    idx[g] += 1;
                }
                idx
            })
            .filter(|idx| keep(idx))
            .collect();
        let polys: Vec<Polynomial> = monomials.par_iter().map(|idx| monomial_in(gens, idx)).collect();
        let mut echelon = TrackedEchelon::new(true);
        let mut syzygies = Vec::new();
        for p in &polys {
            if let Inserted::Dependent(rel) = echelon.insert(to_sparse(p)) {
                let terms = rel.into_iter().map(|(t, c)| (monomials[t].clone(), c)).collect();
                syzygies.push(Syzygy { degree: k, terms });
            }
        }
        Ok(ProductBasis { degree: k, monomials, echelon, syzygies })
    }

    pub fn rank(&self) -> usize {
        self.echelon.rank()
    }

    /// Expands `target` over the products: canonical coefficients and the
    /// part that is not in their span.
    pub fn expand(&self, target: &Polynomial) -> (BTreeMap<MultiIndex, GaussianRational>, Polynomial) {
        let n = target.nvars();
        let (rest, coords) = self.echelon.reduce(&to_sparse(target));
        let expansion = coords.into_iter().map(|(t, c)| (self.monomials[t].clone(), c)).collect();
        (expansion, Polynomial::normal_form(n, rest))
    }
}

fn relation_from(
    left: &Generator,
    right: &Generator,
    target: Polynomial,
    basis: Option<&ProductBasis>,
) -> ClosureRelation {
    let degree = left.degree + right.degree - 1;
    let (expansion, residual) = match basis {
        Some(b) if !target.is_zero() => b.expand(&target),
        _ => (BTreeMap::new(), target),
    };
    ClosureRelation { left: left.label.clone(), right: right.label.clone(), degree, expansion, residual }
}

/// Expands `{i, j}` over all generator monomials of degree `k_i + k_j − 1`.
pub fn express_bracket(i: &str, j: &str, gens: &GeneratorSet, chain: &ChainSpec) -> Result<ClosureRelation> {
    express_bracket_with(i, j, gens, chain, &SolverConfig::default(), &|_| true)
}

/// As [`express_bracket`], restricted to the monomials accepted by `keep`.
pub fn express_bracket_with(
    i: &str,
    j: &str,
    gens: &GeneratorSet,
    chain: &ChainSpec,
    cfg: &SolverConfig,
    keep: &dyn Fn(&[u32]) -> bool,
) -> Result<ClosureRelation> {
    let (a, b) = (gens.get(i)?, gens.get(j)?);
    let target = poisson_bracket(&a.poly, &b.poly, chain.algebra());
    if target.is_zero() {
        return Ok(relation_from(a, b, target, None));
    }
    let basis = ProductBasis::build(gens, a.degree + b.degree - 1, cfg, keep)?;
    Ok(relation_from(a, b, target, Some(&basis)))
}

/// All pairwise relations of a generator set.
#[derive(Clone, Debug)]
pub struct StructureReport {
    pub generators: GeneratorSet,
    /// Pairs `(i, j)` with `i < j` in set order.
    pub relations: Vec<ClosureRelation>,
    pub non_closing: Vec<(String, String)>,
    /// Missing-generator candidates: residuals of non-closing pairs that
    /// are themselves invariants.
    pub candidates: Vec<(String, String, Polynomial)>,
    pub syzygies: BTreeMap<u32, Vec<Syzygy>>,
}

impl StructureReport {
    pub fn relation(&self, left: &str, right: &str) -> Option<ClosureRelation> {
        self.relations.iter().find_map(|r| {
            if r.left == left && r.right == right {
                Some(r.clone())
            } else if r.left == right && r.right == left {
                Some(ClosureRelation {
                    left: left.to_string(),
                    right: right.to_string(),
                    degree: r.degree,
                    expansion: r.expansion.iter().map(|(k, c)| (k.clone(), -c)).collect(),
                    residual: -&r.residual,
                })
            } else {
                None
            }
        })
    }
}

pub fn closure_table(gens: &GeneratorSet, chain: &ChainSpec) -> Result<StructureReport> {
    closure_table_with(gens, chain, &SolverConfig::default())
}

pub fn closure_table_with(gens: &GeneratorSet, chain: &ChainSpec, cfg: &SolverConfig) -> Result<StructureReport> {
    let n = gens.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let brackets: Vec<Polynomial> = pairs
        .par_iter()
        .map(|&(i, j)| poisson_bracket(&gens.entries[i].poly, &gens.entries[j].poly, chain.algebra()))
        .collect();
    let mut degrees: BTreeSet<u32> = BTreeSet::new();
    for (&(i, j), br) in pairs.iter().zip(&brackets) {
        if !br.is_zero() {
            degrees.insert(gens.entries[i].degree + gens.entries[j].degree - 1);
        }
    }
    let bases: BTreeMap<u32, ProductBasis> = degrees
        .into_par_iter()
        .map(|k| Ok((k, ProductBasis::build(gens, k, cfg, &|_| true)?)))
        .collect::<Result<_>>()?;
    let relations: Vec<ClosureRelation> = pairs
        .par_iter()
        .zip(brackets.into_par_iter())
        .map(|(&(i, j), br)| {
            let (a, b) = (&gens.entries[i], &gens.entries[j]);
            relation_from(a, b, br, bases.get(&(a.degree + b.degree - 1)))
        })
        .collect();
    let mut non_closing = Vec::new();
    let mut candidates = Vec::new();
    for r in &relations {
        if !r.closes() {
            non_closing.push((r.left.clone(), r.right.clone()));
            if is_invariant(&r.residual, chain) {
                candidates.push((r.left.clone(), r.right.clone(), r.residual.clone()));
            }
        }
    }
    let syzygies = bases.into_iter().filter(|(_, b)| !b.syzygies.is_empty()).map(|(k, b)| (k, b.syzygies)).collect();
    Ok(StructureReport { generators: gens.clone(), relations, non_closing, candidates, syzygies })
}

/// All linear dependencies among generator monomials of degree `k`.
pub fn syzygies_at_degree(gens: &GeneratorSet, k: u32, chain: &ChainSpec) -> Result<Vec<Syzygy>> {
    syzygies_at_degree_with(gens, k, chain, &SolverConfig::default())
}

pub fn syzygies_at_degree_with(
    gens: &GeneratorSet,
    k: u32,
    chain: &ChainSpec,
    cfg: &SolverConfig,
) -> Result<Vec<Syzygy>> {
    if gens.entries.iter().any(|g| g.poly.nvars() != chain.dim()) {
        return Err(Error::InvalidGenerator("generator does not match the chain".into()));
    }
    Ok(ProductBasis::build(gens, k, cfg, &|_| true)?.syzygies)
}

impl fmt::Display for ClosureRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.left, self.right)
    }
}

/// True when every coefficient of a multi-index map is one of `allowed`.
pub fn support_within(expansion: &BTreeMap<MultiIndex, GaussianRational>, allowed: &dyn Fn(&[u32]) -> bool) -> bool {
    expansion.keys().all(|k| allowed(k))
}

/// Coefficient of a single generator monomial, zero when absent.
pub fn coefficient(expansion: &BTreeMap<MultiIndex, GaussianRational>, idx: &[u32]) -> GaussianRational {
    expansion.get(idx).cloned().unwrap_or_else(GaussianRational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::builtin_chain;
    use crate::invariants::sweep;

    #[test]
    fn empty_set_gives_empty_report() {
        let c = builtin_chain("elliott").unwrap();
        let r = closure_table(&GeneratorSet::default(), &c).unwrap();
        assert!(r.relations.is_empty() && r.non_closing.is_empty() && r.syzygies.is_empty());
    }

    #[test]
    fn self_bracket_is_trivial() {
        let c = builtin_chain("surfon").unwrap();
        let gc = sweep(&c, 4).unwrap();
        let gens = GeneratorSet::from_commutant(&gc).unwrap();
        let l = gens.labels()[3].to_string();
        let r = express_bracket(&l, &l, &gens, &c).unwrap();
        assert!(r.expansion.is_empty() && r.closes());
    }

    #[test]
    fn labels_are_checked() {
        let c = builtin_chain("surfon").unwrap();
        let b1 = Polynomial::parse("l0^2 + l1*lm1", c.generators()).unwrap();
        assert!(GeneratorSet::unflagged(vec![("a".into(), b1.clone()), ("a".into(), b1.clone())]).is_err());
        assert!(GeneratorSet::unflagged(vec![("z".into(), Polynomial::zero(10))]).is_err());
        let g = GeneratorSet::new(&c, vec![("b1".into(), b1)]).unwrap();
        assert!(matches!(express_bracket("b1", "nope", &g, &c), Err(Error::UnknownLabel(_))));
    }
}
