use std::sync::OnceLock;

use commutant::closure::{closure_table, GeneratorSet, StructureReport};
use commutant::invariants::{
    decomposable_span, invariant_space, is_casimir, is_invariant, span_membership, sweep, GradedCommutant,
};
use commutant::labels::{builtin_ranks, commuting_pairs, label_counts};
use commutant::linalg::TrackedEchelon;
use commutant::{builtin_chain, poisson_bracket, ChainSpec, Polynomial};

const CHAINS: [&str; 4] = ["elliott", "seniority", "supermultiplet", "surfon"];

fn swept(name: &str) -> &'static GradedCommutant {
    static CACHE: OnceLock<Vec<GradedCommutant>> = OnceLock::new();
    let all = CACHE.get_or_init(|| CHAINS.iter().map(|n| sweep(&builtin_chain(n).unwrap(), 5).unwrap()).collect());
    &all[CHAINS.iter().position(|c| *c == name).unwrap()]
}

fn elliott_table() -> &'static StructureReport {
    static CACHE: OnceLock<StructureReport> = OnceLock::new();
    CACHE.get_or_init(|| {
        let gc = sweep(&builtin_chain("elliott").unwrap(), 6).unwrap();
        let gens = GeneratorSet::adapted(&gc).unwrap();
        closure_table(&gens, &gc.chain).unwrap()
    })
}

fn rank_of(polys: &[&Polynomial]) -> usize {
    let mut ech = TrackedEchelon::new(false);
    for p in polys {
        ech.insert(p.terms().map(|(m, c)| (m.clone(), c.clone())).collect());
    }
    ech.rank()
}

#[test]
fn every_basis_element_is_invariant() {
    for name in CHAINS {
        let gc = swept(name);
        for b in gc.per_degree.values() {
            assert!(b.is_reduced_echelon(), "{name} degree {}", b.degree);
            for p in &b.basis {
                assert!(is_invariant(p, &gc.chain), "{name} degree {}", b.degree);
            }
        }
    }
}

#[test]
fn grading_pieces_are_invariant() {
    for name in CHAINS {
        let gc = swept(name);
        let sub = gc.chain.subalgebra();
        for b in gc.per_degree.values() {
            for p in &b.basis {
                let mut pieces: std::collections::BTreeMap<u32, Vec<_>> = Default::default();
                for (m, c) in p.terms() {
                    pieces.entry(m.partial_degree(sub)).or_default().push((m.clone(), c.clone()));
                }
                for (_, terms) in pieces {
                    let piece = Polynomial::normal_form(gc.chain.dim(), terms);
                    assert!(is_invariant(&piece, &gc.chain), "{name}");
                }
            }
        }
    }
}

#[test]
fn decomposables_lie_in_the_invariant_space() {
    for name in CHAINS {
        let gc = swept(name);
        for k in 2..=gc.max_degree {
            let dec = decomposable_span(gc, k).unwrap();
            let inv = &gc.per_degree[&k];
            let mut all: Vec<&Polynomial> = inv.basis.iter().collect();
            all.extend(dec.basis.iter());
            assert_eq!(rank_of(&all), inv.dim(), "{name} degree {k}");
            assert_eq!(gc.diagnostics[&k].decomposable_rank, dec.dim());
        }
    }
}

#[test]
fn solves_are_deterministic() {
    for name in CHAINS {
        let chain = builtin_chain(name).unwrap();
        for k in 1..=4 {
            let a = invariant_space(&chain, k).unwrap();
            let b = invariant_space(&chain, k).unwrap();
            let render = |x: &commutant::invariants::DegreeBasis| {
                x.basis.iter().map(|p| p.render(chain.generators())).collect::<Vec<_>>().join("\n")
            };
            assert_eq!(render(&a), render(&b), "{name} degree {k}");
        }
    }
}

/// The su(3) quadratic Casimir is invariant for every closed subalgebra.
#[test]
fn casimirs_are_invariant_for_any_subalgebra() {
    let chain = builtin_chain("elliott").unwrap();
    let gc = swept("elliott");
    let casimir = gc.per_degree[&2].basis.iter().find(|p| is_casimir(p, &chain)).cloned().or_else(|| {
        // some combination of the two quadratics
        let b = &gc.per_degree[&2].basis;
        (-4i64..=4).flat_map(|a| (-4i64..=4).map(move |c| (a, c))).find_map(|(a, c)| {
            let mut p = b[0].scale(&a.into());
            p.add_scaled(&c.into(), &b[1]);
            (!p.is_zero() && is_casimir(&p, &chain)).then_some(p)
        })
    });
    let casimir = casimir.expect("quadratic Casimir");
    let g = chain.algebra().clone();
    let idx = |s: &str| chain.generators().iter().position(|x| x == s).unwrap();
    for sub in [vec![idx("l3")], vec![idx("l1"), idx("l2"), idx("l3")], vec![idx("t11"), idx("t22")]] {
        let other = ChainSpec::new(g.clone(), sub).unwrap();
        let basis = invariant_space(&other, 2).unwrap();
        assert!(span_membership(&casimir, &basis).unwrap().is_some());
    }
}

#[test]
fn closure_relations_reconstruct_the_brackets() {
    let table = elliott_table();
    let gens = &table.generators;
    for r in &table.relations {
        let a = gens.get(&r.left).unwrap();
        let b = gens.get(&r.right).unwrap();
        let bracket = poisson_bracket(&a.poly, &b.poly, table_chain().algebra());
        assert_eq!(r.reconstruct(gens), bracket, "{} {}", r.left, r.right);
        assert!(r.closes(), "{} {}", r.left, r.right);
        for idx in r.expansion.keys() {
            let deg: u32 = idx.iter().zip(gens.iter()).map(|(e, g)| e * g.degree).sum();
            assert_eq!(deg, a.degree + b.degree - 1);
        }
    }
}

fn table_chain() -> ChainSpec {
    builtin_chain("elliott").unwrap()
}

#[test]
fn closure_table_is_antisymmetric() {
    let table = elliott_table();
    for r in &table.relations {
        let back = table.relation(&r.right, &r.left).unwrap();
        assert_eq!(back.residual, -&r.residual);
        for (idx, c) in &r.expansion {
            assert_eq!(back.expansion[idx], -c);
        }
        assert_eq!(back.expansion.len(), r.expansion.len());
    }
}

#[test]
fn central_generators_have_zero_rows() {
    let table = elliott_table();
    for g in table.generators.iter().filter(|g| g.central) {
        for r in table.relations.iter().filter(|r| r.left == g.label || r.right == g.label) {
            assert!(r.expansion.is_empty() && r.residual.is_zero(), "{} {}", r.left, r.right);
        }
    }
}

#[test]
fn central_generators_commute_with_everything() {
    let table = elliott_table();
    let gens = &table.generators;
    let pairs = commuting_pairs(gens, &table_chain());
    for c in gens.iter().filter(|g| g.central) {
        for other in gens.iter().filter(|g| g.label != c.label) {
            assert!(
                pairs.iter().any(|(a, b)| (a == &c.label && b == &other.label) || (b == &c.label && a == &other.label)),
                "{} {}",
                c.label,
                other.label
            );
        }
    }
}

#[test]
fn builtin_label_counts_are_integral() {
    for name in CHAINS {
        let chain = builtin_chain(name).unwrap();
        let (l, lp) = builtin_ranks(name).unwrap();
        assert_eq!((chain.dim() as u32 + l) % 2, 0, "{name}");
        label_counts(&chain, (l, lp), 0).unwrap();
    }
}
