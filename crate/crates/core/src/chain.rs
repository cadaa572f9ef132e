//! Lie algebras given by structure constants, and reduction chains `g ⊃ g′`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::parse::parse_chain_document;
use crate::poly::{Monomial, Polynomial};
use crate::scalar::GaussianRational;

/// Sparse linear combination `Σ c_k x_k`, sorted by index, no zero entries.
pub type LinearTerms = Vec<(usize, GaussianRational)>;

/// A Lie algebra in a fixed basis `x_1..x_n`. Only `{x_i,x_j}` with `i<j` is
/// stored; the full antisymmetric table is derived at construction.
#[derive(Clone, Debug)]
pub struct LieAlgebraSpec {
    name: String,
    generators: Vec<String>,
    brackets: BTreeMap<(usize, usize), LinearTerms>,
    table: Vec<LinearTerms>,
}

fn normalize_terms(terms: impl IntoIterator<Item = (usize, GaussianRational)>) -> LinearTerms {
    let mut acc: BTreeMap<usize, GaussianRational> = BTreeMap::new();
    for (k, c) in terms {
        *acc.entry(k).or_default() += &c;
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

impl LieAlgebraSpec {
    pub fn new(
        name: impl Into<String>,
        generators: Vec<String>,
        brackets: BTreeMap<(usize, usize), LinearTerms>,
    ) -> Result<Self> {
        let n = generators.len();
        if n == 0 {
            return Err(Error::InvalidGenerator("algebra has no generators".into()));
        }
        for (a, g) in generators.iter().enumerate() {
            if generators[..a].contains(g) {
                return Err(Error::InvalidGenerator(format!("duplicate generator `{g}`")));
            }
        }
        let mut stored = BTreeMap::new();
        let mut table = vec![Vec::new(); n * n];
        for ((i, j), terms) in brackets {
            if i >= j || j >= n {
                return Err(Error::InvalidGenerator(format!("bracket key ({i},{j}) must satisfy i < j < {n}")));
            }
            if let Some((k, _)) = terms.iter().find(|(k, _)| *k >= n) {
                return Err(Error::InvalidGenerator(format!("bracket target index {k} out of range")));
            }
            let terms = normalize_terms(terms);
            if terms.is_empty() {
                continue;
            }
            table[j * n + i] = terms.iter().map(|(k, c)| (*k, -c)).collect();
            table[i * n + j] = terms.clone();
            stored.insert((i, j), terms);
        }
        Ok(LieAlgebraSpec { name: name.into(), generators, brackets: stored, table })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g == name)
    }

    /// Stored brackets, keyed by `(i, j)` with `i < j`.
    pub fn brackets(&self) -> &BTreeMap<(usize, usize), LinearTerms> {
        &self.brackets
    }

    /// `{x_i, x_j}` for any ordered pair (zero-based).
    pub fn bracket_terms(&self, i: usize, j: usize) -> &[(usize, GaussianRational)] {
        &self.table[i * self.dim() + j]
    }

    pub fn bracket_polynomial(&self, i: usize, j: usize) -> Polynomial {
        let n = self.dim();
        Polynomial::normal_form(n, self.bracket_terms(i, j).iter().map(|(k, c)| (Monomial::var(n, *k), c.clone())))
    }

    fn bracket_linear(&self, i: usize, v: &LinearTerms) -> LinearTerms {
        normalize_terms(v.iter().flat_map(|(m, c)| self.bracket_terms(i, *m).iter().map(move |(k, d)| (*k, c * d))))
    }

    /// Exact Jacobi check over every triple `i < j < k`.
    pub fn validate_structure(&self) -> JacobiReport {
        let n = self.dim();
        let mut failures = Vec::new();
        let mut checked = 0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    checked += 1;
                    let mut sum = self.bracket_linear(i, &self.bracket_terms(j, k).to_vec());
                    sum.extend(self.bracket_linear(j, &self.bracket_terms(k, i).to_vec()));
                    sum.extend(self.bracket_linear(k, &self.bracket_terms(i, j).to_vec()));
                    let residual = normalize_terms(sum);
                    if !residual.is_empty() {
                        failures.push(JacobiFailure { triple: (i, j, k), residual });
                    }
                }
            }
        }
        JacobiReport { checked, failures }
    }
}

impl PartialEq for LieAlgebraSpec {
    /// Structural equality; the name is a label only.
    fn eq(&self, other: &Self) -> bool {
        self.generators == other.generators && self.brackets == other.brackets
    }
}

impl Eq for LieAlgebraSpec {}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiFailure {
    /// Zero-based generator indices.
    pub triple: (usize, usize, usize),
    pub residual: LinearTerms,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiReport {
    pub checked: usize,
    pub failures: Vec<JacobiFailure>,
}

impl JacobiReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// An algebra together with a subalgebra spanned by a subset of its basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSpec {
    algebra: Arc<LieAlgebraSpec>,
    subalgebra: Vec<usize>,
    complement: Vec<usize>,
}

impl ChainSpec {
    pub fn new(algebra: LieAlgebraSpec, subalgebra: Vec<usize>) -> Result<Self> {
        let n = algebra.dim();
        let mut sub = subalgebra;
        sub.sort_unstable();
        sub.dedup();
        if sub.is_empty() {
            return Err(Error::InvalidSubalgebra("subalgebra is empty".into()));
        }
        if sub.len() == n {
            return Err(Error::InvalidSubalgebra("subalgebra is the whole algebra".into()));
        }
        if let Some(&k) = sub.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidSubalgebra(format!("index {k} out of range")));
        }
        let g = algebra.generators();
        for (a, &i) in sub.iter().enumerate() {
            for &j in &sub[a + 1..] {
                if let Some((k, _)) = algebra.bracket_terms(i, j).iter().find(|(k, _)| sub.binary_search(k).is_err()) {
                    return Err(Error::SubalgebraNotClosed {
                        left: g[i].clone(),
                        right: g[j].clone(),
                        outside: g[*k].clone(),
                    });
                }
            }
        }
        let complement = (0..n).filter(|k| sub.binary_search(k).is_err()).collect();
        Ok(ChainSpec { algebra: Arc::new(algebra), subalgebra: sub, complement })
    }

    pub fn name(&self) -> &str {
        self.algebra.name()
    }

    pub fn algebra(&self) -> &LieAlgebraSpec {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn generators(&self) -> &[String] {
        self.algebra.generators()
    }

    /// Sorted zero-based indices of the subalgebra basis.
    pub fn subalgebra(&self) -> &[usize] {
        &self.subalgebra
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    /// Canonical chain document; `parse_chain_file` inverts it.
    pub fn serialize(&self) -> String {
        let g = self.generators();
        let mut out = String::from("[generators]\n");
        out.push_str(&g.join(" "));
        out.push_str("\n\n[brackets]\n");
        for &(i, j) in self.algebra.brackets().keys() {
            let rhs = self.algebra.bracket_polynomial(i, j).render(g);
            out.push_str(&format!("{} {} = {}\n", g[i], g[j], rhs));
        }
        out.push_str("\n[subalgebra]\n");
        let sub: Vec<&str> = self.subalgebra.iter().map(|&k| g[k].as_str()).collect();
        out.push_str(&sub.join(" "));
        out.push('\n');
        out
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Parses a chain document, named `custom`.
pub fn parse_chain_file(text: &str) -> Result<ChainSpec> {
    parse_chain_document(text, "custom")
}

pub const BUILTIN_CHAINS: [&str; 4] = ["elliott", "seniority", "supermultiplet", "surfon"];

pub fn builtin_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "elliott" => include_str!("../chains/elliott.chain"),
        "seniority" => include_str!("../chains/seniority.chain"),
        "supermultiplet" => include_str!("../chains/supermultiplet.chain"),
        "surfon" => include_str!("../chains/surfon.chain"),
        _ => return None,
    })
}

pub fn builtin_chain(name: &str) -> Result<ChainSpec> {
    let text = builtin_source(name).ok_or_else(|| Error::UnknownChain(name.to_string()))?;
    parse_chain_document(text, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for name in BUILTIN_CHAINS {
            let c = builtin_chain(name).unwrap();
            let r = c.algebra().validate_structure();
            assert!(r.passed(), "{name}: {:?}", r.failures);
            assert_eq!(c.name(), name);
        }
        assert!(matches!(builtin_chain("foo"), Err(Error::UnknownChain(_))));
    }

    #[test]
    fn builtin_shapes() {
        let e = builtin_chain("elliott").unwrap();
        assert_eq!(e.generators(), ["l1", "l2", "l3", "t11", "t12", "t13", "t22", "t23"]);
        assert_eq!(e.subalgebra(), [0, 1, 2]);
        let s = builtin_chain("surfon").unwrap();
        assert_eq!(s.generators(), ["l0", "l1", "lm1", "q3", "q2", "q1", "q0", "qm1", "qm2", "qm3"]);
        assert_eq!(s.subalgebra(), [0, 1, 2]);
        assert_eq!(builtin_chain("seniority").unwrap().dim(), 10);
        assert_eq!(builtin_chain("supermultiplet").unwrap().dim(), 15);
    }

    #[test]
    fn serialization_round_trip_and_file_text() {
        for name in BUILTIN_CHAINS {
            let c = builtin_chain(name).unwrap();
            let again = parse_chain_file(&c.serialize()).unwrap();
            assert_eq!(again, c);
            assert_eq!(again.serialize(), c.serialize());
            // the shipped files are already canonical apart from the comment line
            let body: String = builtin_source(name).unwrap().lines().skip(1).map(|l| format!("{l}\n")).collect();
            assert_eq!(body, c.serialize(), "{name}");
        }
    }

    #[test]
    fn hash_ignores_bracket_order() {
        let c = builtin_chain("elliott").unwrap();
        let text = c.serialize();
        let (head, rest) = text.split_once("[brackets]\n").unwrap();
        let (body, tail) = rest.split_once("\n\n").unwrap();
        let mut lines: Vec<&str> = body.lines().collect();
        lines.reverse();
        let shuffled = format!("{head}[brackets]\n{}\n\n{tail}", lines.join("\n"));
        assert_ne!(shuffled, text);
        assert_eq!(parse_chain_file(&shuffled).unwrap().content_hash(), c.content_hash());
    }

    #[test]
    fn abelian_passes() {
        let g: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let alg = LieAlgebraSpec::new("ab", g, BTreeMap::new()).unwrap();
        let r = alg.validate_structure();
        assert!(r.passed());
        assert_eq!(r.checked, 1);
    }
}
