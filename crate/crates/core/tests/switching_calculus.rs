use opinion_core::eigen::dense_eigenvalues;
use opinion_core::graph::generators::{random_assignment, random_balanced, random_signed, random_strongly_connected};
use opinion_core::graph::{BalanceCertificate, SwitchingAssignment};
use opinion_core::rng::substream;
use opinion_core::spectral::leading_eigenpair;
use proptest::prelude::*;

/// Coefficients of `prod (λ - z_i)`, highest degree first. Symmetric
/// functions stay well conditioned when a defective eigenvalue splits into a
/// cluster, unlike the individual roots.
fn char_poly(roots: &[nalgebra::Complex<f64>]) -> Vec<nalgebra::Complex<f64>> {
    let mut c = vec![nalgebra::Complex::new(1.0, 0.0)];
    for z in roots {
        let mut next = vec![nalgebra::Complex::new(0.0, 0.0); c.len() + 1];
        for (j, cj) in c.iter().enumerate() {
            next[j] += cj;
            next[j + 1] -= cj * z;
        }
        c = next;
    }
    c
}

fn same_spectrum(a: &[nalgebra::Complex<f64>], b: &[nalgebra::Complex<f64>]) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{} vs {} eigenvalues", a.len(), b.len()));
    }
    let (pa, pb) = (char_poly(a), char_poly(b));
    for (x, y) in pa.iter().zip(&pb) {
        if (x - y).norm() > 1e-8 * x.norm().max(1.0) {
            return Err(format!("{pa:?} vs {pb:?}"));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn switching_is_an_involution(n in 1usize..12, p in 0.0f64..0.6, seed: u64) {
        let mut rng = substream(seed, 0);
        let g = random_signed(n, p, &mut rng);
        let w = random_assignment(n, &mut rng);
        prop_assert_eq!(g.switch(&w).unwrap().switch(&w).unwrap(), g);
    }

    #[test]
    fn switching_composes(n in 1usize..12, p in 0.0f64..0.6, seed: u64) {
        let mut rng = substream(seed, 1);
        let g = random_signed(n, p, &mut rng);
        let w1 = random_assignment(n, &mut rng);
        let w2 = random_assignment(n, &mut rng);
        let stepwise = g.switch(&w1).unwrap().switch(&w2).unwrap();
        prop_assert_eq!(stepwise, g.switch(&w1.compose(&w2).unwrap()).unwrap());
    }

    #[test]
    fn complement_gives_the_same_graph(n in 1usize..12, p in 0.0f64..0.6, seed: u64) {
        let mut rng = substream(seed, 2);
        let g = random_signed(n, p, &mut rng);
        let w = random_assignment(n, &mut rng);
        prop_assert_eq!(g.switch(&w).unwrap(), g.switch(&w.complement()).unwrap());
    }

    #[test]
    fn balance_is_switching_invariant(n in 2usize..12, p in 0.0f64..0.6, seed: u64) {
        let mut rng = substream(seed, 3);
        let (g, _) = random_balanced(n, p, &mut rng);
        let w = random_assignment(n, &mut rng);
        let gw = g.switch(&w).unwrap();
        let cert = gw.balance_certificate();
        prop_assert!(cert.verify(&gw));
        let theta = cert.theta().unwrap();
        prop_assert!(gw.switch(theta).unwrap().is_all_positive());
    }

    #[test]
    fn certificates_verify_on_arbitrary_signatures(n in 2usize..12, p in 0.0f64..0.6, seed: u64) {
        let mut rng = substream(seed, 4);
        let g = random_signed(n, p, &mut rng);
        let cert = g.balance_certificate();
        prop_assert!(cert.verify(&g));
        if let BalanceCertificate::Unbalanced(cycle) = &cert {
            prop_assert!(cycle.is_consistent_with(&g));
            prop_assert_eq!(cycle.sign_product(), -1);
            prop_assert_eq!(cycle.negative_count() % 2, 1);
        }
    }

    #[test]
    fn switching_is_isospectral(n in 2usize..10, p in 0.1f64..0.6, seed: u64) {
        let mut rng = substream(seed, 5);
        let g = random_signed(n, p, &mut rng);
        let w = random_assignment(n, &mut rng);
        let a = dense_eigenvalues(&g.adjacency_matrix()).unwrap();
        let b = dense_eigenvalues(&g.switch(&w).unwrap().adjacency_matrix()).unwrap();
        prop_assert!(same_spectrum(&a, &b).is_ok(), "{:?}", same_spectrum(&a, &b));
    }

    #[test]
    fn eigenvectors_map_through_theta(n in 2usize..10, p in 0.1f64..0.6, seed: u64) {
        let mut rng = substream(seed, 6);
        let g = random_strongly_connected(n, p, &mut rng);
        let w = random_assignment(n, &mut rng);
        let s = leading_eigenpair(&g).unwrap();
        let sw = leading_eigenpair(&g.switch(&w).unwrap()).unwrap();
        prop_assert!((s.lambda_star - sw.lambda_star).abs() < 1e-9);
        let mapped = w.apply(&s.v_star);
        let dot: f64 = mapped.iter().zip(&sw.v_star).map(|(a, b)| a * b).sum();
        prop_assert!((dot.abs() - 1.0).abs() < 1e-9, "dot = {}", dot);
        let mapped_w = w.apply(&s.w_unit);
        let dot_w: f64 = mapped_w.iter().zip(&sw.w_unit).map(|(a, b)| a * b).sum();
        prop_assert!((dot_w.abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dense_solver_agrees_with_nalgebra(n in 1usize..14, p in 0.0f64..0.7, seed: u64) {
        let mut rng = substream(seed, 7);
        let g = random_signed(n, p, &mut rng);
        let m = g.adjacency_matrix();
        let ours = dense_eigenvalues(&m).unwrap();
        // the reference Schur iteration is uncapped by default and can cycle
        let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000);
        prop_assume!(schur.is_some());
        let reference: Vec<_> = schur.unwrap().complex_eigenvalues().iter().cloned().collect();
        prop_assert!(same_spectrum(&ours, &reference).is_ok(), "{:?}", same_spectrum(&ours, &reference));
    }
}

#[test]
fn identity_and_full_assignments() {
    let mut rng = substream(11, 0);
    let g = random_signed(7, 0.4, &mut rng);
    assert_eq!(g.switch(&SwitchingAssignment::identity(7)).unwrap(), g);
    assert_eq!(g.switch(&SwitchingAssignment::all(7)).unwrap(), g);
}
