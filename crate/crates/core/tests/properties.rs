use commutant::chain::{builtin_source, parse_chain_file};
use commutant::invariants::{invariant_space, is_invariant};
use commutant::labels::functional_rank;
use commutant::{
    bidegree_components, builtin_chain, poisson_bracket, ChainSpec, GaussianRational, Monomial, Polynomial,
};
use proptest::prelude::*;
use std::sync::OnceLock;

const CHAINS: [&str; 4] = ["elliott", "seniority", "supermultiplet", "surfon"];

fn chain(idx: usize) -> &'static ChainSpec {
    static CACHE: OnceLock<Vec<ChainSpec>> = OnceLock::new();
    &CACHE.get_or_init(|| CHAINS.iter().map(|n| builtin_chain(n).unwrap()).collect())[idx]
}

fn gr(re: i64, im: i64) -> GaussianRational {
    &GaussianRational::from_int(re) + &GaussianRational::from_int(im).mul_i()
}

/// Up to `terms` random monomials of total degree at most `deg` in `n` variables.
fn poly(n: usize, deg: u32, terms: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0..n, 0..=deg as usize), -4i64..=4, -2i64..=2), 0..=terms).prop_map(
        move |raw| {
            let items = raw.into_iter().map(|(vars, re, im)| {
                let mut e = vec![0u8; n];
                for v in vars {
                    e[v] += 1;
                }
                (Monomial::from_exponents(&e), gr(re, im))
            });
            Polynomial::normal_form(n, items)
        },
    )
}

/// Random homogeneous polynomial of degree exactly `deg`.
fn homogeneous(n: usize, deg: usize, terms: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0..n, deg), -4i64..=4, -2i64..=2), 1..=terms).prop_map(move |raw| {
        let items = raw.into_iter().map(|(vars, re, im)| {
            let mut e = vec![0u8; n];
            for v in vars {
                e[v] += 1;
            }
            (Monomial::from_exponents(&e), gr(re, im))
        });
        Polynomial::normal_form(n, items)
    })
}

fn chain_and_polys(count: usize, deg: u32, terms: usize) -> impl Strategy<Value = (usize, Vec<Polynomial>)> {
    (0..CHAINS.len()).prop_flat_map(move |c| {
        let n = chain(c).dim();
        (Just(c), prop::collection::vec(poly(n, deg, terms), count))
    })
}

fn br(c: usize, p: &Polynomial, q: &Polynomial) -> Polynomial {
    poisson_bracket(p, q, chain(c).algebra())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_antisymmetric((c, ps) in chain_and_polys(2, 3, 5)) {
        let lhs = br(c, &ps[0], &ps[1]);
        prop_assert_eq!(lhs, -&br(c, &ps[1], &ps[0]));
    }

    #[test]
    fn bracket_obeys_leibniz((c, ps) in chain_and_polys(3, 2, 4)) {
        let (p, q, r) = (&ps[0], &ps[1], &ps[2]);
        let lhs = br(c, p, &(q * r));
        let rhs = &(&br(c, p, q) * r) + &(q * &br(c, p, r));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bracket_obeys_jacobi((c, ps) in chain_and_polys(3, 2, 3)) {
        let (p, q, r) = (&ps[0], &ps[1], &ps[2]);
        let sum = &(&br(c, p, &br(c, q, r)) + &br(c, q, &br(c, r, p))) + &br(c, r, &br(c, p, q));
        prop_assert!(sum.is_zero());
    }

    #[test]
    fn bracket_degree_law((c, p, q) in (0..4usize, 1..4usize, 1..4usize).prop_flat_map(|(c, a, b)| {
        let n = chain(c).dim();
        (Just(c), homogeneous(n, a, 4), homogeneous(n, b, 4))
    })) {
        let r = br(c, &p, &q);
        if !r.is_zero() {
            prop_assert_eq!(r.homogeneous_degree(), Some(p.degree().unwrap() + q.degree().unwrap() - 1));
        }
    }

    #[test]
    fn bidegrees_add_under_products((c, ps) in chain_and_polys(2, 3, 4)) {
        let (p, q) = (&ps[0], &ps[1]);
        let prod = p * q;
        prop_assume!(!prod.is_zero());
        let bp = bidegree_components(p, chain(c)).unwrap();
        let bq = bidegree_components(q, chain(c)).unwrap();
        for &(x, y) in bidegree_components(&prod, chain(c)).unwrap().components() {
            prop_assert!(bp.components().any(|&(a, b)| bq.components().any(|&(c2, d)| (a + c2, b + d) == (x, y))));
        }
    }

    #[test]
    fn normal_form_is_canonical((c, ps) in chain_and_polys(2, 3, 6)) {
        let n = chain(c).dim();
        let (p, q) = (&ps[0], &ps[1]);
        // no stored zero, strictly ascending monomials
        for (_, coef) in p.terms() {
            prop_assert!(*coef != GaussianRational::from_int(0));
        }
        let ms: Vec<_> = p.terms().map(|(m, _)| m.clone()).collect();
        prop_assert!(ms.windows(2).all(|w| w[0] < w[1]));
        // re-normalizing a shuffled, split term list changes nothing
        let mut raw: Vec<_> = p.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
        raw.extend(q.terms().map(|(m, c)| (m.clone(), c.clone())));
        raw.extend(q.terms().map(|(m, c)| (m.clone(), -c)));
        raw.reverse();
        prop_assert_eq!(&Polynomial::normal_form(n, raw), p);
        prop_assert!((&(p + q) - q) == *p);
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism((c, ps) in chain_and_polys(2, 3, 4), pt in prop::collection::vec((-5i64..=5, 1i64..=4, -3i64..=3), 20)) {
        let n = chain(c).dim();
        let point: Vec<_> = pt.iter().take(n).map(|&(a, d, b)| &GaussianRational::from_frac(a, d) + &GaussianRational::from_int(b).mul_i()).collect();
        let (p, q) = (&ps[0], &ps[1]);
        let ep = p.evaluate_at(&point).unwrap();
        let eq = q.evaluate_at(&point).unwrap();
        prop_assert_eq!((p * q).evaluate_at(&point).unwrap(), &ep * &eq);
        prop_assert_eq!((p + q).evaluate_at(&point).unwrap(), &ep + &eq);
    }

    #[test]
    fn chain_documents_round_trip(c in 0..4usize, order in prop::collection::vec(any::<u32>(), 64), flip in prop::collection::vec(any::<bool>(), 64)) {
        let spec = chain(c);
        let text = spec.serialize();
        // shuffle bracket lines and write some pairs reversed with negated coefficients
        let (head, rest) = text.split_once("[brackets]\n").unwrap();
        let (body, tail) = rest.split_once("\n\n").unwrap();
        let mut lines: Vec<(u32, String)> = body.lines().enumerate().map(|(k, l)| {
            let (pair, rhs) = l.split_once(" = ").unwrap();
            let (a, b) = pair.split_once(' ').unwrap();
            let line = if flip[k % flip.len()] { format!("{b} {a} = -({rhs})") } else { l.to_string() };
            (order[k % order.len()], line)
        }).collect();
        lines.sort();
        let shuffled = format!("{head}[brackets]\n{}\n\n{tail}", lines.into_iter().map(|(_, l)| l).collect::<Vec<_>>().join("\n"));
        let parsed = parse_chain_file(&shuffled).unwrap();
        prop_assert_eq!(parsed.serialize(), text.clone());
        prop_assert_eq!(parsed.content_hash(), spec.content_hash());
        let again = parse_chain_file(&text).unwrap();
        prop_assert_eq!(again.algebra(), spec.algebra());
        prop_assert_eq!(again.subalgebra(), spec.subalgebra());
    }

    #[test]
    fn functional_rank_monotone_and_bounded((c, ps) in chain_and_polys(4, 2, 3), t in 1usize..4, seed in any::<u64>()) {
        let n = chain(c).dim();
        let few = functional_rank(&ps, t, seed).unwrap();
        let more = functional_rank(&ps, t + 3, seed).unwrap();
        prop_assert!(few <= more);
        prop_assert!(more <= ps.len().min(n));
    }

    #[test]
    fn functional_rank_ignores_squares((c, ps) in chain_and_polys(3, 2, 3), seed in any::<u64>()) {
        let base = functional_rank(&ps, 6, seed).unwrap();
        let mut with_square = ps.clone();
        with_square.push(&ps[0] * &ps[0]);
        prop_assert_eq!(functional_rank(&with_square, 6, seed).unwrap(), base);
        let _ = c;
    }
}

#[test]
fn builtin_chains_satisfy_jacobi_and_closure() {
    for name in CHAINS {
        let c = builtin_chain(name).unwrap();
        assert!(c.algebra().validate_structure().passed(), "{name}");
        let sub = c.subalgebra();
        for (a, &i) in sub.iter().enumerate() {
            for &j in &sub[a + 1..] {
                for (k, _) in c.algebra().bracket_terms(i, j) {
                    assert!(sub.contains(k), "{name}: bracket leaves the subalgebra");
                }
            }
        }
        assert!(builtin_source(name).is_some());
    }
}

#[test]
fn linear_brackets_reproduce_the_table() {
    for name in CHAINS {
        let c = builtin_chain(name).unwrap();
        let n = c.dim();
        for i in 0..n {
            for j in 0..n {
                let got = poisson_bracket(&Polynomial::var(n, i), &Polynomial::var(n, j), c.algebra());
                let want = Polynomial::normal_form(
                    n,
                    c.algebra().bracket_terms(i, j).iter().map(|(k, v)| (Monomial::var(n, *k), v.clone())),
                );
                assert_eq!(got, want, "{name} {i} {j}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Random elements of computed invariant spaces stay invariant under brackets.
    #[test]
    fn brackets_of_invariants_are_invariant(c in 0..4usize, k1 in 2u32..4, k2 in 2u32..4, a in prop::collection::vec(-3i64..=3, 12), b in prop::collection::vec(-3i64..=3, 12)) {
        let ch = chain(c);
        let b1 = invariant_space(ch, k1).unwrap();
        let b2 = invariant_space(ch, k2).unwrap();
        let combo = |basis: &[Polynomial], w: &[i64]| {
            let mut p = Polynomial::zero(ch.dim());
            for (row, &x) in basis.iter().zip(w) {
                p.add_scaled(&GaussianRational::from_int(x), row);
            }
            p
        };
        let p = combo(&b1.basis, &a);
        let q = combo(&b2.basis, &b);
        prop_assert!(is_invariant(&p, ch));
        prop_assert!(is_invariant(&br(c, &p, &q), ch));
    }
}
