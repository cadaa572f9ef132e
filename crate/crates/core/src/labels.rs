//! Missing-label bookkeeping: the label counting formulas, Jacobian ranks at
//! random rational points, and pairwise commutation scans.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ChainSpec;
use crate::closure::GeneratorSet;
use crate::error::{Error, Result};
use crate::linalg::{SparseVec, TrackedEchelon};
use crate::poly::{poisson_bracket, Polynomial};
use crate::scalar::{GaussianRational, Rational};

/// Label counts together with the inputs they were computed from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabelCounts {
    pub i0: u32,
    pub rho0: u32,
    pub n0: u32,
    pub dim_g: u32,
    pub rank_g: u32,
    pub dim_sub: u32,
    pub rank_sub: u32,
    pub l0: u32,
}

fn half(numerator: i64, formula: &'static str) -> Result<i64> {
    if numerator < 0 || numerator % 2 != 0 {
        return Err(Error::Parity { formula });
    }
    Ok(numerator / 2)
}

fn non_negative(v: i64, formula: &'static str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Parity { formula })
}

/// `i0 = (dim g + ℓ)/2`, `ρ0 = (dim g′ + ℓ′)/2 − ℓ0`,
/// `n0 = (dim g − ℓ − dim g′ − ℓ′)/2 + ℓ0`.
pub fn label_counts(chain: &ChainSpec, ranks: (u32, u32), l0: u32) -> Result<LabelCounts> {
    let dim_g = chain.dim() as i64;
    let dim_sub = chain.subalgebra().len() as i64;
    let (l, lp) = (ranks.0 as i64, ranks.1 as i64);
    let l0i = l0 as i64;
    const I0: &str = "i0 = (dim g + l)/2";
    const RHO0: &str = "rho0 = (dim g' + l')/2 - l0";
    const N0: &str = "n0 = (dim g - l - dim g' - l')/2 + l0";
    let i0 = non_negative(half(dim_g + l, I0)?, I0)?;
    let rho0 = non_negative(half(dim_sub + lp, RHO0)? - l0i, RHO0)?;
    let n0 = non_negative(half(dim_g - l - dim_sub - lp, N0)? + l0i, N0)?;
    Ok(LabelCounts {
        i0,
        rho0,
        n0,
        dim_g: dim_g as u32,
        rank_g: ranks.0,
        dim_sub: dim_sub as u32,
        rank_sub: ranks.1,
        l0,
    })
}

/// Ranks `(ℓ, ℓ′)` of the algebra and subalgebra of a builtin chain.
pub fn builtin_ranks(name: &str) -> Option<(u32, u32)> {
    match name {
        "elliott" => Some((2, 1)),
        "seniority" => Some((2, 2)),
        "supermultiplet" => Some((3, 2)),
        "surfon" => Some((2, 1)),
        _ => None,
    }
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<GaussianRational> {
    (0..n)
        .map(|_| {
            let num: i64 = rng.gen_range(-9..=9);
            let den: i64 = rng.gen_range(1..=5);
            GaussianRational::real(Rational::new(BigInt::from(num), BigInt::from(den)))
        })
        .collect()
}

/// Largest rank of the Jacobian of `polys` over `trials` seeded random
/// rational points. A lower bound on the generic rank.
pub fn functional_rank(polys: &[Polynomial], trials: usize, seed: u64) -> Result<usize> {
    let Some(first) = polys.first() else { return Ok(0) };
    let n = first.nvars();
    if polys.iter().any(|p| p.nvars() != n) {
        return Err(Error::InvalidGenerator("polynomials over different generator counts".into()));
    }
    let cap = polys.len().min(n);
    let grads: Vec<Vec<Polynomial>> = polys.par_iter().map(|p| (0..n).map(|j| p.derivative(j)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0;
    for _ in 0..trials.max(1) {
        let point = random_point(&mut rng, n);
        let rows: Vec<SparseVec<usize>> = grads
            .par_iter()
            .map(|g| {
                let mut row = SparseVec::new();
                for (j, d) in g.iter().enumerate() {
                    let v = d.evaluate_at(&point)?;
                    if !num_traits::Zero::is_zero(&v) {
                        row.insert(j, v);
                    }
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut ech = TrackedEchelon::new(false);
        for r in rows {
            if !r.is_empty() {
                ech.insert(r);
            }
        }
        best = best.max(ech.rank());
        if best == cap {
            break;
        }
    }
    Ok(best)
}

/// Unordered pairs of generators, in set order, whose bracket vanishes.
pub fn commuting_pairs(gens: &GeneratorSet, chain: &ChainSpec) -> Vec<(String, String)> {
    let e = gens.entries();
    let pairs: Vec<(usize, usize)> = (0..e.len()).flat_map(|i| (i + 1..e.len()).map(move |j| (i, j))).collect();
    let zero: Vec<bool> =
        pairs.par_iter().map(|&(i, j)| poisson_bracket(&e[i].poly, &e[j].poly, chain.algebra()).is_zero()).collect();
    pairs
        .into_iter()
        .zip(zero)
        .filter(|(_, z)| *z)
        .map(|((i, j), _)| (e[i].label.clone(), e[j].label.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{builtin_chain, parse_chain_file};

    #[test]
    fn counts() {
        let e = builtin_chain("elliott").unwrap();
        let c = label_counts(&e, (2, 1), 0).unwrap();
        assert_eq!((c.i0, c.rho0, c.n0), (5, 2, 1));
        let s = builtin_chain("seniority").unwrap();
        assert_eq!(label_counts(&s, (2, 2), 0).unwrap().n0, 1);
        let su2 =
            parse_chain_file("[generators]\na b c\n[brackets]\na b = c\nb c = a\nc a = b\n[subalgebra]\nc\n").unwrap();
        let c = label_counts(&su2, (1, 1), 0).unwrap();
        assert_eq!((c.i0, c.rho0, c.n0), (2, 1, 0));
        assert!(matches!(label_counts(&e, (1, 1), 0), Err(Error::Parity { formula }) if formula.starts_with("i0")));
        assert!(matches!(label_counts(&e, (2, 1), 3), Err(Error::Parity { formula }) if formula.starts_with("rho0")));
    }

    #[test]
    fn rank_of_dependent_set() {
        let c = builtin_chain("surfon").unwrap();
        let b1 = Polynomial::parse("l0^2 + l1*lm1", c.generators()).unwrap();
        let sq = &b1 * &b1;
        assert_eq!(functional_rank(&[b1.clone(), sq], 5, 1).unwrap(), 1);
        assert_eq!(functional_rank(&[], 5, 1).unwrap(), 0);
    }
}
