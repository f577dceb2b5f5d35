use faer::Mat;
use proptest::prelude::*;
use wittenlab::complexes::{build_torus_grid, Cochain, InnerProductComplex};
use wittenlab::derham::{harmonic_euler, hodge_decompose};
use wittenlab::linalg::EigenOptions;
use wittenlab::torsion::{check_anomaly_identity, random_isomorphism, volume_of};
use wittenlab::witten::deform;

fn torus(n: usize, res: usize) -> InnerProductComplex {
    InnerProductComplex::from_cell_complex(&build_torus_grid(n, res, &vec![1.0; n]).unwrap()).unwrap()
}

/// Per-cell weights drawn from `raw`, cycled to fill every degree.
fn weights(ipc: &InnerProductComplex, raw: &[f64]) -> Vec<Vec<f64>> {
    let mut it = raw.iter().cycle();
    ipc.dims().iter().map(|&n| (0..n).map(|_| *it.next().unwrap()).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deformation_is_a_complex(n in 1usize..=3, t in -20.0f64..20.0, raw in prop::collection::vec(-1.0f64..1.0, 7..40)) {
        let ipc = torus(n, 4);
        let dc = deform(&ipc, &weights(&ipc, &raw), t).unwrap();
        prop_assert_eq!(dc.nilpotency_defect(), 0.0);
        prop_assert!(dc.materialized_nilpotency_defect() <= 1e-13);
        for q in 0..=n {
            prop_assert!(dc.complex.self_adjointness_defect(q).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn deformation_preserves_the_index(t in -3.0f64..3.0, raw in prop::collection::vec(-1.0f64..1.0, 5..20)) {
        let ipc = torus(2, 4);
        let dc = deform(&ipc, &weights(&ipc, &raw), t).unwrap();
        prop_assert_eq!(harmonic_euler(&dc.complex, &EigenOptions::default()).unwrap(), 0);
    }

    #[test]
    fn hodge_pieces_are_orthogonal(q in 0usize..=2, raw in prop::collection::vec(-1.0f64..1.0, 200)) {
        let ipc = torus(2, 5);
        let values: Vec<f64> = raw.iter().take(ipc.dim(q)).cloned().collect();
        let split = hodge_decompose(&ipc, &Cochain { degree: q, values: values.clone() }).unwrap();
        let ip = &ipc.inner[q];
        let norm = ip.inner(&values, &values).sqrt().max(1.0);
        let pieces = [&split.exact.values, &split.coexact.values, &split.harmonic.values];
        for i in 0..3 {
            for j in i + 1..3 {
                prop_assert!(ip.inner(pieces[i], pieces[j]).abs() <= 1e-9 * norm * norm);
            }
        }
        prop_assert!(ipc.laplacian_apply(q, &split.harmonic.values).iter().all(|v| v.abs() <= 1e-8 * norm));
    }

    #[test]
    fn anomaly_identity_holds(seed in any::<u64>()) {
        let chk = check_anomaly_identity(&random_isomorphism(seed).unwrap()).unwrap();
        prop_assert!(chk.relative_error <= 1e-9, "{:?}", chk);
    }

    #[test]
    fn volume_ignores_orthogonal_changes_of_basis(raw in prop::collection::vec(-1.0f64..1.0, 15), angles in prop::collection::vec(0.0f64..6.3, 3)) {
        let a = Mat::from_fn(5, 3, |i, j| raw[3 * i + j]);
        let mut rot = Mat::<f64>::identity(3, 3);
        for (k, th) in angles.iter().enumerate() {
            let (i, j) = (k, (k + 1) % 3);
            let mut g = Mat::<f64>::identity(3, 3);
            g[(i, i)] = th.cos();
            g[(j, j)] = th.cos();
            g[(i, j)] = -th.sin();
            g[(j, i)] = th.sin();
            rot = &rot * &g;
        }
        let v = volume_of(&a);
        prop_assert!((v - volume_of(&(&a * &rot))).abs() <= 1e-12 * (1.0 + v));
    }
}
