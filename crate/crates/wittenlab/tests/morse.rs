use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wittenlab::complexes::{build_torus_grid, CellComplex, Cochain};
use wittenlab::morse::*;

fn random_cochain(cx: &CellComplex, q: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cx.count(q)).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `‖Int(dω) − ∂ Int(ω)‖_∞` in degree `q`.
fn chain_map_defect(cx: &CellComplex, mf: &dyn MorseFunction, md: &MorseData, q: usize, omega: &[f64]) -> f64 {
    let opts = ShootOptions::default();
    let domega = cx.coboundary[q].to_f64().matvec(omega);
    let lhs = int_matrix(cx, mf, md, q + 1, &opts).unwrap().matvec(&domega);
    let rhs = md.incidence[q].to_f64().matvec(&int_matrix(cx, mf, md, q, &opts).unwrap().matvec(omega));
    lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn smooth_one_form(cx: &CellComplex) -> Vec<f64> {
    // cochain of sin(2πy) dx + cos(2πx)·x dy by the midpoint rule
    let h = cx.periods[0] / cx.resolution as f64;
    cx.barycenters[1]
        .iter()
        .zip(&cx.cells[1])
        .map(|(b, c)| {
            let wittenlab::complexes::CellShape::Cube { dirs, .. } = c else { unreachable!() };
            let tau = std::f64::consts::TAU;
            if *dirs == 1 {
                (tau * b[1]).sin() * h
            } else {
                (tau * b[0]).cos() * h
            }
        })
        .collect()
}

fn smooth_zero_form(cx: &CellComplex) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    cx.barycenters[0].iter().map(|b| (tau * b[0]).sin() * (tau * b[1]).cos() + (tau * b[1]).sin()).collect()
}

#[test]
fn product_cells_give_exact_chain_map() {
    let mf = ProductCosine::two_four_two();
    let md = compute_morse_data(&mf, 8, &ShootOptions::default()).unwrap();
    let cx = build_torus_grid(2, 32, &[1.0, 1.0]).unwrap();
    assert!(chain_map_defect(&cx, &mf, &md, 0, &random_cochain(&cx, 0, 3)) < 1e-12);
    assert!(chain_map_defect(&cx, &mf, &md, 1, &random_cochain(&cx, 1, 4)) < 1e-12);
}

#[test]
fn constant_top_form_on_the_maximum() {
    let mf = ProductCosine::standard(2);
    let md = compute_morse_data(&mf, 8, &ShootOptions::default()).unwrap();
    let cx = build_torus_grid(2, 16, &[1.0, 1.0]).unwrap();
    let vol = cx.count(2) as f64;
    let omega = Cochain { degree: 2, values: vec![1.0 / vol; cx.count(2)] };
    let max = md.by_index[2][0];
    let v = integrate_over_unstable(&cx, &mf, &md, &omega, max, None, &ShootOptions::default()).unwrap();
    assert!((v - 1.0).abs() < 1e-12);
    // the twist multiplies by e^{t f} cell by cell
    let f = vec![0.5; cx.count(2)];
    let tw = integrate_over_unstable(&cx, &mf, &md, &omega, max, Some((&f, 2.0)), &ShootOptions::default()).unwrap();
    assert!((tw - 1f64.exp()).abs() < 1e-12);
}

#[test]
fn zero_cells_evaluate_the_nearest_vertex() {
    let mf = ProductCosine::standard(2);
    let md = compute_morse_data(&mf, 8, &ShootOptions::default()).unwrap();
    let cx = build_torus_grid(2, 16, &[1.0, 1.0]).unwrap();
    let w = random_cochain(&cx, 0, 9);
    let min = md.by_index[0][0];
    let v = integrate_over_unstable(&cx, &mf, &md, &Cochain { degree: 0, values: w.clone() }, min, None, &ShootOptions::default()).unwrap();
    assert_eq!(v, w[cx.torus_vertex(&[8, 8])]);
}

#[test]
fn misaligned_product_cells_are_rejected() {
    let mf = ProductCosine::two_four_two();
    let md = compute_morse_data(&mf, 8, &ShootOptions::default()).unwrap();
    let cx = build_torus_grid(2, 10, &[1.0, 1.0]).unwrap();
    assert!(int_matrix(&cx, &mf, &md, 1, &ShootOptions::default()).is_err());
}

#[test]
fn axial_separatrices_pair_exactly() {
    let mf = ExactChart::new(ProductCosine::two_four_two(), 0.1).unwrap();
    let md = compute_morse_data(&mf, 8, &ShootOptions::default()).unwrap();
    let cx = build_torus_grid(2, 16, &[1.0, 1.0]).unwrap();
    assert!(chain_map_defect(&cx, &mf, &md, 0, &smooth_zero_form(&cx)) < 1e-12);
    assert!(chain_map_defect(&cx, &mf, &md, 1, &smooth_one_form(&cx)) < 1e-12);
}

/// `(cos 4πx + cos 2π(x+y))/4π²`: two maxima whose basins meet along slanted separatrices.
#[derive(Debug)]
struct Sheared(Manifold);

impl MorseFunction for Sheared {
    fn manifold(&self) -> &Manifold {
        &self.0
    }
    fn value(&self, x: &[f64]) -> f64 {
        let t = std::f64::consts::TAU;
        ((2.0 * t * x[0]).cos() + (t * (x[0] + x[1])).cos()) / (t * t)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let t = std::f64::consts::TAU;
        let (a, b) = ((2.0 * t * x[0]).sin(), (t * (x[0] + x[1])).sin());
        vec![-(2.0 * a + b) / t, -b / t]
    }
    fn hessian(&self, x: &[f64]) -> faer::Mat<f64> {
        let t = std::f64::consts::TAU;
        let (a, b) = ((2.0 * t * x[0]).cos(), (t * (x[0] + x[1])).cos());
        faer::Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => -(4.0 * a + b),
            _ => -b,
        })
    }
}

#[test]
fn slanted_separatrix_defect_shrinks_with_h() {
    let mf = Sheared(Manifold::Torus { periods: vec![1.0, 1.0] });
    let md = compute_morse_data(&mf, 8, &ShootOptions::default()).unwrap();
    assert_eq!(md.counts(), vec![2, 4, 2]);
    assert_eq!(md.cohomology_ranks(), vec![1, 2, 1]);
    let mut defects = Vec::new();
    for res in [16, 32, 64] {
        let cx = build_torus_grid(2, res, &[1.0, 1.0]).unwrap();
        // degree 0 pairs separatrix ends with vertices: exact up to quadrature
        assert!(chain_map_defect(&cx, &mf, &md, 0, &smooth_zero_form(&cx)) < 1e-9);
        defects.push(chain_map_defect(&cx, &mf, &md, 1, &smooth_one_form(&cx)));
    }
    assert!(defects[2] < 0.6 * defects[0], "{defects:?}");
    assert!(defects[2] < 0.05, "{defects:?}");
}
