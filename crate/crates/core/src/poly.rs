//! Sparse multivariate polynomials over Q(i) in the dual coordinates of a
//! Lie algebra, with the Lie-Poisson bracket.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use smallvec::SmallVec;

use crate::chain::{ChainSpec, LieAlgebraSpec};
use crate::error::{Error, Result};
use crate::scalar::GaussianRational;

type Exponents = SmallVec<[u8; 16]>;

/// `x_1^{a_1} ... x_n^{a_n}`; exponents are capped at 255.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Exponents);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(SmallVec::from_elem(0, nvars))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = Self::one(nvars);
        m.0[i] = 1;
        m
    }

    pub fn from_exponents(exps: &[u8]) -> Self {
        Monomial(SmallVec::from_slice(exps))
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn checked_mul(&self, other: &Monomial) -> Result<Monomial> {
        let mut out = self.0.clone();
        for (i, (a, b)) in out.iter_mut().zip(other.0.iter()).enumerate() {
            *a = a.checked_add(*b).ok_or(Error::ExponentOverflow { var: i + 1 })?;
        }
        Ok(Monomial(out))
    }

    /// Multiplies by `x_i`.
    pub fn times_var(&self, i: usize) -> Monomial {
        let mut out = self.0.clone();
        out[i] = out[i].checked_add(1).expect("exponent overflow (> 255)");
        Monomial(out)
    }

    /// Divides by `x_i`, if it divides.
    pub fn div_var(&self, i: usize) -> Option<Monomial> {
        if self.0[i] == 0 {
            return None;
        }
        let mut out = self.0.clone();
        out[i] -= 1;
        Some(Monomial(out))
    }

    /// Degree restricted to the variables in `vars`.
    pub fn partial_degree(&self, vars: &[usize]) -> u32 {
        vars.iter().map(|&v| self.0[v] as u32).sum()
    }

    pub fn render(&self, names: &[String]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| if e == 1 { names[i].clone() } else { format!("{}^{}", names[i], e) })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for Monomial {
    /// Graded reverse lexicographic order with `x_1 > x_2 > ... > x_n`.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        for (a, b) in self.0.iter().zip(other.0.iter()).rev() {
            if a != b {
                // smaller exponent in the last differing variable wins
                return b.cmp(a);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in canonical form: no zero coefficients, monomials kept in
/// ascending term order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: GaussianRational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nvars), c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, GaussianRational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(Monomial::var(nvars, i), GaussianRational::one())
    }

    pub fn monomial(m: Monomial, c: GaussianRational) -> Self {
        let nvars = m.nvars();
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// Merges duplicate monomials, drops zeros and sorts.
    pub fn normal_form(nvars: usize, raw: impl IntoIterator<Item = (Monomial, GaussianRational)>) -> Self {
        let mut terms: BTreeMap<Monomial, GaussianRational> = BTreeMap::new();
        for (m, c) in raw {
            debug_assert_eq!(m.nvars(), nvars);
            match terms.get_mut(&m) {
                Some(acc) => *acc += &c,
                None => {
                    terms.insert(m, c);
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Polynomial { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending term order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &GaussianRational)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn into_term_map(self) -> BTreeMap<Monomial, GaussianRational> {
        self.terms
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&GaussianRational> {
        self.terms.get(m)
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &GaussianRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_monomial(&self) -> Option<&Monomial> {
        self.terms.keys().next_back()
    }

    /// Maximal total degree; `None` for zero.
    pub fn degree(&self) -> Option<u32> {
        self.leading_monomial().map(Monomial::degree)
    }

    /// `Some(k)` if every term has total degree `k`.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let first = self.terms.keys().next()?.degree();
        let last = self.terms.keys().next_back()?.degree();
        (first == last).then_some(first)
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial { nvars: self.nvars, terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect() }
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Self {
        match self.leading_term() {
            Some((_, c)) => self.scale(&c.inv().expect("nonzero leading coefficient")),
            None => self.clone(),
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: &GaussianRational, other: &Polynomial) {
        if c.is_zero() {
            return;
        }
        for (m, a) in &other.terms {
            let delta = c * a;
            match self.terms.get_mut(m) {
                Some(acc) => {
                    *acc += &delta;
                    if acc.is_zero() {
                        self.terms.remove(m);
                    }
                }
                None => {
                    self.terms.insert(m.clone(), delta);
                }
            }
        }
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        assert_eq!(self.nvars, other.nvars, "polynomials over different generator counts");
        let mut acc: HashMap<Monomial, GaussianRational> = HashMap::with_capacity(self.len() * other.len());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = m1.checked_mul(m2)?;
                let c = c1 * c2;
                acc.entry(m).and_modify(|a| *a += &c).or_insert(c);
            }
        }
        Ok(Self::normal_form(self.nvars, acc))
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::one(self.nvars);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// `∂p/∂x_i`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let raw = self.terms.iter().filter_map(|(m, c)| {
            let e = m.exponents()[i];
            m.div_var(i).map(|d| (d, c.scale_int(e as i64)))
        });
        Self::normal_form(self.nvars, raw)
    }

    /// Exact substitution `x_j -> point[j]`.
    pub fn evaluate_at(&self, point: &[GaussianRational]) -> Result<GaussianRational> {
        if point.len() != self.nvars {
            return Err(Error::LengthMismatch { expected: self.nvars, found: point.len() });
        }
        let mut powers: Vec<Vec<GaussianRational>> =
            point.iter().map(|x| vec![GaussianRational::one(), x.clone()]).collect();
        let mut total = GaussianRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (j, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let pw = &mut powers[j];
                while pw.len() <= e as usize {
                    let next = &pw[pw.len() - 1] * &pw[1];
                    pw.push(next);
                }
                t = &t * &pw[e as usize];
            }
            total += &t;
        }
        Ok(total)
    }

    /// Canonical textual rendering, terms in descending term order.
    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let t = c.signed_text();
            let mono = if m.is_one() { String::new() } else { m.render(names) };
            let body = match (t.body.is_empty(), mono.is_empty()) {
                (true, true) => "1".to_string(),
                (true, false) => mono,
                (false, true) => t.body,
                (false, false) => format!("{}*{}", t.body, mono),
            };
            if idx == 0 {
                if t.negative {
                    out.push('-');
                }
            } else {
                out.push_str(if t.negative { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        out
    }

    pub fn parse(text: &str, names: &[String]) -> Result<Polynomial> {
        crate::parse::parse_polynomial(text, names)
    }

    /// Rendering with default coordinate names `x1..xn`.
    pub fn display(&self) -> String {
        let names: Vec<String> = (1..=self.nvars).map(|i| format!("x{i}")).collect();
        self.render(&names)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out.add_scaled(&GaussianRational::one(), rhs);
        out
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out.add_scaled(&GaussianRational::from_int(-1), rhs);
        out
    }
}

impl Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    /// Panics on exponent overflow; see [`Polynomial::checked_mul`].
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("exponent overflow (> 255)")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&GaussianRational::from_int(-1))
    }
}

macro_rules! forward_poly {
    ($tr:ident, $m:ident) => {
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_poly!(Add, add);
forward_poly!(Sub, sub);
forward_poly!(Mul, mul);

fn partials(p: &Polynomial) -> Vec<Vec<(Monomial, GaussianRational)>> {
    let mut out = vec![Vec::new(); p.nvars];
    for (m, c) in &p.terms {
        for (i, &e) in m.exponents().iter().enumerate() {
            if e > 0 {
                out[i].push((m.div_var(i).unwrap(), c.scale_int(e as i64)));
            }
        }
    }
    out
}

/// Lie-Poisson bracket `{p,q} = Σ C_ij^k x_k ∂_i p ∂_j q`, summed over the
/// variable pairs that actually occur in `p` and `q`.
pub fn poisson_bracket(p: &Polynomial, q: &Polynomial, alg: &LieAlgebraSpec) -> Polynomial {
    let n = alg.dim();
    assert_eq!(p.nvars, n, "polynomial does not match the algebra dimension");
    assert_eq!(q.nvars, n, "polynomial does not match the algebra dimension");
    let dp = partials(p);
    let dq = partials(q);
    let mut acc: HashMap<Monomial, GaussianRational> = HashMap::new();
    for (i, di) in dp.iter().enumerate() {
        if di.is_empty() {
            continue;
        }
        for (j, dj) in dq.iter().enumerate() {
            let targets = alg.bracket_terms(i, j);
            if targets.is_empty() || dj.is_empty() {
                continue;
            }
            for (m1, c1) in di {
                for (m2, c2) in dj {
                    let base = m1.checked_mul(m2).expect("exponent overflow (> 255)");
                    let c12 = c1 * c2;
                    for (k, ck) in targets {
                        let c = &c12 * ck;
                        acc.entry(base.times_var(*k)).and_modify(|a| *a += &c).or_insert(c);
                    }
                }
            }
        }
    }
    Polynomial::normal_form(n, acc)
}

/// Set of (subalgebra degree, complement degree) pairs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct BidegreeSet(pub BTreeSet<(u32, u32)>);

impl BidegreeSet {
    pub fn is_homogeneous(&self) -> bool {
        self.0.len() == 1
    }

    pub fn components(&self) -> impl Iterator<Item = &(u32, u32)> {
        self.0.iter().rev()
    }
}

impl fmt::Display for BidegreeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().rev().map(|(a, b)| format!("({a},{b})")).collect();
        f.write_str(&parts.join("+"))
    }
}

/// The gradings occurring among the monomials of `p`.
pub fn bidegree_components(p: &Polynomial, chain: &ChainSpec) -> Result<BidegreeSet> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let sub = chain.subalgebra();
    Ok(BidegreeSet(
        p.terms
            .keys()
            .map(|m| {
                let a = m.partial_degree(sub);
                (a, m.degree() - a)
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::builtin_chain;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn grevlex_order() {
        let m = |e: &[u8]| Monomial::from_exponents(e);
        // higher degree first
        assert!(m(&[0, 0, 2]) > m(&[1, 0, 0]));
        // x1 > x2 > x3
        assert!(m(&[1, 0, 0]) > m(&[0, 1, 0]));
        // x1*x3 < x2^2 in grevlex
        assert!(m(&[1, 0, 1]) < m(&[0, 2, 0]));
        assert!(m(&[2, 0, 0]) > m(&[1, 1, 0]));
    }

    #[test]
    fn normal_form_merges_and_drops() {
        let x1 = Monomial::var(2, 0);
        let one = GaussianRational::one();
        let p = Polynomial::normal_form(2, vec![(x1.clone(), one.clone()), (x1.clone(), one.clone())]);
        assert_eq!(p.render(&names(2)), "2*x1");
        let z = Polynomial::normal_form(2, vec![(x1.clone(), one.clone()), (x1, -one)]);
        assert!(z.is_zero());
        assert_eq!(Polynomial::normal_form(2, p.clone().into_term_map()), p);
    }

    #[test]
    fn multiplication_identities() {
        let x1 = Polynomial::var(3, 0);
        assert_eq!(&x1 * &Polynomial::one(3), x1);
        assert_eq!((&x1 * &x1).render(&names(3)), "x1^2");
    }

    #[test]
    fn square_of_surfon_b1_has_three_terms() {
        let chain = builtin_chain("surfon").unwrap();
        let b1 = Polynomial::parse("l0^2 + l1*lm1", chain.algebra().generators()).unwrap();
        let sq = &b1 * &b1;
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.render(chain.algebra().generators()), "l0^4 + 2*l0^2*l1*lm1 + l1^2*lm1^2");
    }

    #[test]
    fn exponent_overflow_is_an_error() {
        let big = Polynomial::monomial(Monomial::from_exponents(&[200]), GaussianRational::one());
        assert!(matches!(big.checked_mul(&big), Err(Error::ExponentOverflow { var: 1 })));
    }

    #[test]
    fn brackets_from_the_tables() {
        let ell = builtin_chain("elliott").unwrap();
        let a = ell.algebra();
        let l = |i| Polynomial::var(8, i);
        assert_eq!(poisson_bracket(&l(0), &l(1), a).render(a.generators()), "i*l3");

        let sur = builtin_chain("surfon").unwrap();
        let s = sur.algebra();
        let v = |name: &str| Polynomial::parse(name, s.generators()).unwrap();
        assert_eq!(poisson_bracket(&v("l0"), &v("q3"), s), v("3*q3"));
        assert!(poisson_bracket(&v("l0"), &v("q3*qm3"), s).is_zero());
        let p = v("l0*q2 + 3*q1^2 - qm3");
        assert!(poisson_bracket(&p, &p, s).is_zero());
    }

    #[test]
    fn bidegrees() {
        let sur = builtin_chain("surfon").unwrap();
        let g = sur.algebra().generators();
        let b1 = Polynomial::parse("l0^2 + l1*lm1", g).unwrap();
        assert_eq!(bidegree_components(&b1, &sur).unwrap().to_string(), "(2,0)");
        let mixed = Polynomial::parse("l0^6*q1^3 + l0^5*q1^4 + l0^4*q1^5", g).unwrap();
        assert_eq!(bidegree_components(&mixed, &sur).unwrap().to_string(), "(6,3)+(5,4)+(4,5)");
        assert_eq!(bidegree_components(&Polynomial::one(10), &sur).unwrap().to_string(), "(0,0)");
        assert!(matches!(bidegree_components(&Polynomial::zero(10), &sur), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn evaluation() {
        let sur = builtin_chain("surfon").unwrap();
        let b1 = Polynomial::parse("l0^2 + l1*lm1", sur.algebra().generators()).unwrap();
        let mut pt = vec![GaussianRational::zero(); 10];
        pt[0] = 1.into();
        pt[1] = 2.into();
        pt[2] = 3.into();
        assert_eq!(b1.evaluate_at(&pt).unwrap(), GaussianRational::from_int(7));
        assert!(Polynomial::zero(10).evaluate_at(&pt).unwrap().is_zero());
        assert!(matches!(b1.evaluate_at(&pt[..3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn render_mixed_coefficients() {
        let n = names(2);
        let p = Polynomial::parse("-x1^2 + (1/2 - 3*i)*x1*x2 - 5/3*i*x2 + 7", &n).unwrap();
        assert_eq!(p.render(&n), "-x1^2 + (1/2-3*i)*x1*x2 - 5/3*i*x2 + 7");
        assert_eq!(Polynomial::parse(&p.render(&n), &n).unwrap(), p);
    }
}
