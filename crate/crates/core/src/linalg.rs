//! Exact sparse linear algebra over Q(i).
//!
//! Two tools live here. [`TrackedEchelon`] is an incremental row echelon form
//! over arbitrary ordered keys that can remember how each row was built from
//! its inputs; it answers span, rank and relation questions. [`kernel_rref`]
//! computes the canonical reduced-echelon basis of a nullspace, using
//! multi-modular elimination with rational reconstruction when every row is
//! real (after an optional factor of `-i`) and exact elimination otherwise.
//! A modular answer is only returned after it has been checked against the
//! original rows exactly.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::scalar::{GaussianRational, Rational};

pub type SparseVec<K> = BTreeMap<K, GaussianRational>;

/// `v += a * w`, dropping cancelled entries.
pub fn axpy<K: Ord + Clone>(v: &mut SparseVec<K>, a: &GaussianRational, w: &SparseVec<K>) {
    for (k, c) in w {
        let d = a * c;
        match v.get_mut(k) {
            Some(e) => {
                *e += &d;
                if e.is_zero() {
                    v.remove(k);
                }
            }
            None => {
                v.insert(k.clone(), d);
            }
        }
    }
}

/// Outcome of [`TrackedEchelon::insert`].
#[derive(Clone, Debug, PartialEq)]
pub enum Inserted {
    /// The input became a new row with this index.
    Independent(usize),
    /// The input was dependent; `Σ rel[t] · input_t = 0` with `rel[new] = 1`.
    Dependent(SparseVec<usize>),
}

/// Row echelon form whose pivot is the largest key of each row.
#[derive(Clone, Debug)]
pub struct TrackedEchelon<K: Ord + Clone> {
    rows: Vec<SparseVec<K>>,
    combos: Vec<SparseVec<usize>>,
    pivots: BTreeMap<K, usize>,
    inputs: usize,
    track: bool,
}

impl<K: Ord + Clone> TrackedEchelon<K> {
    pub fn new(track: bool) -> Self {
        TrackedEchelon { rows: Vec::new(), combos: Vec::new(), pivots: BTreeMap::new(), inputs: 0, track }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn is_pivot(&self, k: &K) -> bool {
        self.pivots.contains_key(k)
    }

    pub fn insert(&mut self, v: SparseVec<K>) -> Inserted {
        let id = self.inputs;
        self.inputs += 1;
        let mut v = v;
        let mut combo = SparseVec::new();
        if self.track {
            combo.insert(id, GaussianRational::one());
        }
        while let Some((lead, c)) = v.iter().next_back() {
            let Some(&r) = self.pivots.get(lead) else { break };
            let a = -c;
            if self.track {
                axpy(&mut combo, &a, &self.combos[r]);
            }
            axpy(&mut v, &a, &self.rows[r]);
        }
        match v.iter().next_back() {
            None => Inserted::Dependent(combo),
            Some((lead, c)) => {
                let inv = c.inv().unwrap();
                let lead = lead.clone();
                for e in v.values_mut() {
                    *e = &*e * &inv;
                }
                if self.track {
                    for e in combo.values_mut() {
                        *e = &*e * &inv;
                    }
                }
                let r = self.rows.len();
                self.rows.push(v);
                self.combos.push(combo);
                self.pivots.insert(lead, r);
                Inserted::Independent(r)
            }
        }
    }

    /// Full reduction: `v = Σ coords[t] · input_t + remainder`, where no key of
    /// the remainder is a pivot. `coords` is empty when tracking is off.
    pub fn reduce(&self, v: &SparseVec<K>) -> (SparseVec<K>, SparseVec<usize>) {
        let mut v = v.clone();
        let mut coords = SparseVec::new();
        let mut cursor: Option<K> = None;
        loop {
            let next = {
                let mut it: Box<dyn Iterator<Item = (&K, &GaussianRational)>> = match &cursor {
                    None => Box::new(v.iter().rev()),
                    Some(k) => Box::new(v.range(..k.clone()).rev()),
                };
                it.find(|(k, _)| self.pivots.contains_key(*k)).map(|(k, c)| (k.clone(), c.clone()))
            };
            let Some((k, c)) = next else { break };
            let r = self.pivots[&k];
            if self.track {
                axpy(&mut coords, &c, &self.combos[r]);
            }
            axpy(&mut v, &-c, &self.rows[r]);
            cursor = Some(k);
        }
        (v, coords)
    }

    pub fn contains(&self, v: &SparseVec<K>) -> bool {
        self.reduce(v).0.is_empty()
    }

    /// The reduced echelon basis of the span, sorted by descending pivot.
    pub fn rref(&self) -> Vec<SparseVec<K>> {
        // ascending pivots: every tail key is below its pivot, so reducing
        // against the already finished rows is enough
        let mut fin: TrackedEchelon<K> = TrackedEchelon::new(false);
        for (lead, &r) in self.pivots.iter() {
            let mut tail = self.rows[r].clone();
            let lc = tail.remove(lead).unwrap();
            let (mut red, _) = fin.reduce(&tail);
            red.insert(lead.clone(), lc);
            fin.pivots.insert(lead.clone(), fin.rows.len());
            fin.rows.push(red);
        }
        fin.rows.reverse();
        fin.rows
    }
}

/// One constraint row: `(column, coefficient)` pairs.
pub type Row = Vec<(u32, GaussianRational)>;

/// Which elimination produced a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelMethod {
    Modular { primes: usize },
    Exact,
}

/// Reduced echelon basis of `{v : A v = 0}` with columns read in ascending
/// order of importance: column `ncols-1` is the most significant. Each basis
/// vector has its largest column free with coefficient one, and no free
/// column appears in two vectors. Vectors are returned by descending lead.
pub fn kernel_rref(rows: &[Row], ncols: usize) -> (Vec<Vec<(u32, GaussianRational)>>, KernelMethod) {
    if ncols == 0 {
        return (Vec::new(), KernelMethod::Exact);
    }
    if let Some(int_rows) = integer_rows(rows) {
        if let Some((k, primes)) = modular_kernel(&int_rows, rows, ncols) {
            return (k, KernelMethod::Modular { primes });
        }
    }
    (exact_kernel(rows, ncols), KernelMethod::Exact)
}

/// Scales every row to integers, multiplying purely imaginary rows by `-i`.
/// `None` if some row is genuinely complex.
fn integer_rows(rows: &[Row]) -> Option<Vec<Vec<(u32, BigInt)>>> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let real = if row.iter().all(|(_, c)| c.is_real()) {
            row.iter().map(|(j, c)| (*j, c.re.clone())).collect::<Vec<_>>()
        } else if row.iter().all(|(_, c)| c.is_imaginary()) {
            row.iter().map(|(j, c)| (*j, c.im.clone())).collect()
        } else {
            return None;
        };
        let l = real.iter().fold(BigInt::one(), |l, (_, c)| l.lcm(c.denom()));
        out.push(real.into_iter().map(|(j, c)| (j, (c * Rational::from_integer(l.clone())).to_integer())).collect());
    }
    Some(out)
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Primes below 2^62, descending.
fn primes() -> impl Iterator<Item = u64> {
    let mut n = (1u64 << 62) - 1;
    std::iter::from_fn(move || {
        while !is_prime_u64(n) {
            n -= 2;
        }
        let p = n;
        n -= 2;
        Some(p)
    })
}

struct ModEchelon {
    /// Rows with pivot (smallest column) first and normalized to one.
    rows: Vec<Vec<(u32, u64)>>,
    pivot_of: Vec<Option<u32>>,
}

fn echelon_mod(int_rows: &[Vec<(u32, BigInt)>], order: &[usize], ncols: usize, p: u64) -> ModEchelon {
    let pb = BigInt::from(p);
    let mut acc = vec![0u64; ncols];
    let mut marked = vec![false; ncols];
    let mut heap: BinaryHeap<Reverse<u32>> = BinaryHeap::new();
    let mut rows: Vec<Vec<(u32, u64)>> = Vec::new();
    let mut pivot_of: Vec<Option<u32>> = vec![None; ncols];
    for &ri in order {
        for (j, c) in &int_rows[ri] {
            let v = c.mod_floor(&pb).to_u64().unwrap();
            if v != 0 {
                acc[*j as usize] = v;
                marked[*j as usize] = true;
                heap.push(Reverse(*j));
            }
        }
        while let Some(Reverse(c)) = heap.pop() {
            let cu = c as usize;
            marked[cu] = false;
            let a = acc[cu];
            if a == 0 {
                continue;
            }
            acc[cu] = 0;
            if let Some(r) = pivot_of[cu] {
                let f = p - a;
                for &(cc, v) in &rows[r as usize][1..] {
                    let ccu = cc as usize;
                    acc[ccu] = (acc[ccu] + mulmod(f, v, p)) % p;
                    if !marked[ccu] {
                        marked[ccu] = true;
                        heap.push(Reverse(cc));
                    }
                }
            } else {
                let inv = invmod(a, p);
                let mut row = vec![(c, 1u64)];
                let mut rest: Vec<(u32, u64)> = Vec::new();
                while let Some(Reverse(cc)) = heap.pop() {
                    let ccu = cc as usize;
                    marked[ccu] = false;
                    if acc[ccu] != 0 {
                        rest.push((cc, mulmod(acc[ccu], inv, p)));
                        acc[ccu] = 0;
                    }
                }
                rest.sort_unstable_by_key(|e| e.0);
                row.extend(rest);
                pivot_of[cu] = Some(rows.len() as u32);
                rows.push(row);
                break;
            }
        }
    }
    ModEchelon { rows, pivot_of }
}

/// Kernel vectors mod `p`, one per free column (ascending).
fn kernel_mod(e: &ModEchelon, ncols: usize, p: u64) -> Vec<(u32, Vec<(u32, u64)>)> {
    let free: Vec<u32> = (0..ncols as u32).filter(|&c| e.pivot_of[c as usize].is_none()).collect();
    free.par_iter()
        .map(|&f| {
            let mut x = vec![0u64; f as usize + 1];
            x[f as usize] = 1;
            for c in (0..f).rev() {
                if let Some(r) = e.pivot_of[c as usize] {
                    let mut s = 0u64;
                    for &(cc, v) in &e.rows[r as usize][1..] {
                        if cc > f {
                            break;
                        }
                        let xv = x[cc as usize];
                        if xv != 0 {
                            s = (s + mulmod(v, xv, p)) % p;
                        }
                    }
                    x[c as usize] = (p - s) % p;
                }
            }
            let v: Vec<(u32, u64)> =
                x.iter().enumerate().filter(|(_, &v)| v != 0).map(|(c, &v)| (c as u32, v)).collect();
            (f, v)
        })
        .collect()
}

/// Rational reconstruction of `a mod m` with numerator and denominator
/// bounded by `sqrt(m/2)`.
pub fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<Rational> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r2);
        let t2 = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    let r = Rational::new(r1, t1);
    if (r.denom().gcd(m)).is_one() {
        Some(r)
    } else {
        None
    }
}

const MAX_PRIMES: usize = 200;

fn modular_kernel(int_rows: &[Vec<(u32, BigInt)>], rows: &[Row], ncols: usize) -> Option<(Vec<Row>, usize)> {
    // sparse, early-pivot rows first keeps fill-in down
    let mut order: Vec<usize> = (0..int_rows.len()).filter(|&r| !int_rows[r].is_empty()).collect();
    order.sort_by_key(|&r| (int_rows[r].iter().map(|e| e.0).min().unwrap(), int_rows[r].len()));
    order.dedup_by(|a, b| int_rows[*a] == int_rows[*b]);

    let mut modulus = BigInt::one();
    let mut free_cols: Option<Vec<u32>> = None;
    let mut residues: Vec<BTreeMap<u32, BigInt>> = Vec::new();
    let mut previous: Option<Vec<Vec<(u32, Rational)>>> = None;
    for (used, p) in primes().take(MAX_PRIMES).enumerate() {
        let e = echelon_mod(int_rows, &order, ncols, p);
        let ker = kernel_mod(&e, ncols, p);
        let fc: Vec<u32> = ker.iter().map(|k| k.0).collect();
        match &free_cols {
            None => {
                free_cols = Some(fc);
                residues = vec![BTreeMap::new(); ker.len()];
            }
            Some(prev) if *prev != fc => {
                // an unlucky prime loses rank and so gains free columns
                if fc.len() < prev.len() {
                    free_cols = Some(fc);
                    residues = vec![BTreeMap::new(); ker.len()];
                    modulus = BigInt::one();
                    previous = None;
                } else {
                    continue;
                }
            }
            _ => {}
        }
        let pb = BigInt::from(p);
        for (slot, (_, vec)) in residues.iter_mut().zip(ker.iter()) {
            let incoming: BTreeMap<u32, u64> = vec.iter().copied().collect();
            let keys: Vec<u32> = slot.keys().copied().chain(incoming.keys().copied()).collect();
            for k in keys {
                let old = slot.get(&k).cloned().unwrap_or_else(BigInt::zero);
                let new = BigInt::from(incoming.get(&k).copied().unwrap_or(0));
                slot.insert(k, crt(&old, &modulus, &new, &pb));
            }
        }
        modulus *= &pb;
        let mut candidate = Vec::with_capacity(residues.len());
        let mut ok = true;
        for slot in &residues {
            let mut v = Vec::new();
            for (k, a) in slot {
                if a.is_zero() {
                    continue;
                }
                match rational_reconstruct(a, &modulus) {
                    Some(r) => v.push((*k, r)),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            candidate.push(v);
        }
        if !ok {
            previous = None;
            continue;
        }
        if previous.as_ref() == Some(&candidate) {
            let vecs: Vec<Vec<(u32, GaussianRational)>> = candidate
                .into_iter()
                .map(|v| v.into_iter().map(|(k, r)| (k, GaussianRational::real(r))).collect())
                .collect();
            if vecs.par_iter().all(|v| annihilates(rows, v)) {
                let mut vecs = vecs;
                vecs.reverse();
                return Some((vecs, used + 1));
            }
            previous = None;
            continue;
        }
        previous = Some(candidate);
    }
    None
}

fn crt(a: &BigInt, m: &BigInt, b: &BigInt, p: &BigInt) -> BigInt {
    if m.is_one() {
        return b.mod_floor(p);
    }
    // x = a + m * t with t = (b - a) * m^{-1} mod p
    let minv = m.mod_floor(p).modpow(&(p - BigInt::from(2)), p);
    let t = ((b - a) * minv).mod_floor(p);
    a + m * t
}

/// Exact check `A v = 0`.
pub fn annihilates(rows: &[Row], v: &[(u32, GaussianRational)]) -> bool {
    let x: BTreeMap<u32, &GaussianRational> = v.iter().map(|(k, c)| (*k, c)).collect();
    rows.iter().all(|row| {
        let mut s = GaussianRational::zero();
        for (j, c) in row {
            if let Some(xv) = x.get(j) {
                s += &(c * *xv);
            }
        }
        s.is_zero()
    })
}

fn exact_kernel(rows: &[Row], ncols: usize) -> Vec<Vec<(u32, GaussianRational)>> {
    // pivot on the smallest column: key Reverse(col) makes it the "largest"
    let mut ech: TrackedEchelon<Reverse<u32>> = TrackedEchelon::new(false);
    for row in rows {
        let v: SparseVec<Reverse<u32>> =
            row.iter().filter(|(_, c)| !c.is_zero()).map(|(j, c)| (Reverse(*j), c.clone())).collect();
        if !v.is_empty() {
            ech.insert(v);
        }
    }
    let pivot_row: BTreeMap<u32, &SparseVec<Reverse<u32>>> =
        ech.pivots.iter().map(|(k, &r)| (k.0, &ech.rows[r])).collect();
    let free: Vec<u32> = (0..ncols as u32).filter(|c| !pivot_row.contains_key(c)).collect();
    let mut out: Vec<Vec<(u32, GaussianRational)>> = free
        .par_iter()
        .map(|&f| {
            let mut x: BTreeMap<u32, GaussianRational> = BTreeMap::new();
            x.insert(f, GaussianRational::one());
            for (&c, row) in pivot_row.range(..f).rev() {
                let mut s = GaussianRational::zero();
                for (Reverse(cc), v) in row.iter() {
                    if *cc != c {
                        if let Some(xv) = x.get(cc) {
                            s += &(v * xv);
                        }
                    }
                }
                if !s.is_zero() {
                    x.insert(c, -s);
                }
            }
            x.into_iter().collect()
        })
        .collect();
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gr(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    fn sv(e: &[(u32, i64)]) -> SparseVec<u32> {
        e.iter().map(|(k, c)| (*k, gr(*c))).collect()
    }

    #[test]
    fn miller_rabin() {
        let small: Vec<u64> = (0..50).filter(|&n| is_prime_u64(n)).collect();
        assert_eq!(small, [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]);
        assert!(is_prime_u64(2_305_843_009_213_693_951)); // 2^61 - 1
        assert!(!is_prime_u64(3_215_031_751)); // strong pseudoprime to 2,3,5,7
    }

    #[test]
    fn reconstruction() {
        let m = BigInt::from(1_000_000_007u64) * BigInt::from(998_244_353u64);
        let r = Rational::new(BigInt::from(-355), BigInt::from(113));
        let a = (r.numer() * r.denom().modpow(&(BigInt::from(998_244_353u64) - 2), &BigInt::from(998_244_353u64)))
            .mod_floor(&BigInt::from(998_244_353u64));
        let _ = a;
        // direct: find a with a*113 = -355 mod m
        let inv = {
            let p1 = BigInt::from(1_000_000_007u64);
            let p2 = BigInt::from(998_244_353u64);
            let i1 = BigInt::from(113).modpow(&(&p1 - 2), &p1);
            let i2 = BigInt::from(113).modpow(&(&p2 - 2), &p2);
            crt(&i1, &p1, &i2, &p2)
        };
        let a = (BigInt::from(-355) * inv).mod_floor(&m);
        assert_eq!(rational_reconstruct(&a, &m), Some(r));
    }

    #[test]
    fn echelon_tracks_relations() {
        let mut e = TrackedEchelon::new(true);
        assert_eq!(e.insert(sv(&[(0, 1), (2, 1)])), Inserted::Independent(0));
        assert_eq!(e.insert(sv(&[(1, 1), (2, 1)])), Inserted::Independent(1));
        match e.insert(sv(&[(0, 1), (1, -1)])) {
            Inserted::Dependent(rel) => {
                assert_eq!(rel, sv(&[(0, -1), (1, 1), (2, 1)]).into_iter().map(|(k, c)| (k as usize, c)).collect())
            }
            other => panic!("{other:?}"),
        }
        let (rem, coords) = e.reduce(&sv(&[(0, 2), (1, 3), (2, 5), (3, 1)]));
        assert_eq!(rem, sv(&[(3, 1)]));
        assert_eq!(coords, [(0usize, gr(2)), (1, gr(3))].into_iter().collect());
    }

    #[test]
    fn rref_is_canonical() {
        let mut a = TrackedEchelon::new(false);
        a.insert(sv(&[(0, 1), (1, 2), (2, 3)]));
        a.insert(sv(&[(0, 4), (1, 5), (2, 6)]));
        let mut b = TrackedEchelon::new(false);
        b.insert(sv(&[(0, 5), (1, 7), (2, 9)]));
        b.insert(sv(&[(0, 3), (1, 3), (2, 3)]));
        let ra = a.rref();
        assert_eq!(ra, b.rref());
        assert_eq!(ra, vec![sv(&[(0, -1), (2, 1)]), sv(&[(0, 2), (1, 1)])]);
    }

    fn rows(m: &[&[i64]]) -> Vec<Row> {
        m.iter()
            .map(|r| r.iter().enumerate().filter(|(_, &c)| c != 0).map(|(j, &c)| (j as u32, gr(c))).collect())
            .collect()
    }

    #[test]
    fn kernels_agree() {
        let a = rows(&[&[1, 2, 3, 4, 5], &[2, 4, 6, 8, 11], &[0, 0, 1, 1, 1]]);
        let (km, method) = kernel_rref(&a, 5);
        assert!(matches!(method, KernelMethod::Modular { .. }));
        assert_eq!(km, exact_kernel(&a, 5));
        assert_eq!(km.len(), 2);
        for v in &km {
            assert!(annihilates(&a, v));
            assert_eq!(v.last().unwrap().1, gr(1));
        }
        // leading columns are the free columns 3 and 1
        assert_eq!(km[0].last().unwrap().0, 3);
        assert_eq!(km[1].last().unwrap().0, 1);
    }

    #[test]
    fn imaginary_rows_and_fractions() {
        let i = GaussianRational::i();
        let a: Vec<Row> = vec![
            vec![(0, i.clone()), (1, i.scale_int(-3))],
            vec![(1, GaussianRational::from_frac(1, 3)), (2, GaussianRational::from_frac(-1, 7))],
        ];
        let (k, method) = kernel_rref(&a, 3);
        assert!(matches!(method, KernelMethod::Modular { .. }));
        assert_eq!(
            k,
            vec![vec![(0, GaussianRational::from_frac(9, 7)), (1, GaussianRational::from_frac(3, 7)), (2, gr(1))]]
        );
        let mixed: Vec<Row> = vec![vec![(0, GaussianRational::new(Rational::one(), Rational::one())), (1, gr(1))]];
        let (k, method) = kernel_rref(&mixed, 2);
        assert_eq!(method, KernelMethod::Exact);
        assert_eq!(k.len(), 1);
        assert!(annihilates(&mixed, &k[0]));
    }
}
