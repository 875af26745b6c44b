use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holo_rmt::asymptotics::{analyze, outage_probability};
use holo_rmt::channel::ChannelModel;
use holo_rmt::geometry::enumerate_lattice;
use holo_rmt::linalg::CMatrix;
use holo_rmt::montecarlo::{compute_mi, run_mc, run_mc_range, sample_channel, MiSampleSet};
use holo_rmt::profile::{profile_nonseparable_gaussian, profile_separable_isotropic, VarianceProfile};
use holo_rmt::solver::{solve_deltas, SolverOptions};
use holo_rmt::validation::invariant_violations;

fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

fn model(n: usize, m: usize, zeta: f64, los: f64, seed: u64) -> ChannelModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = DMatrix::from_fn(n, m, |_, _| 0.05 + rng.gen::<f64>());
    let a = CMatrix::from_fn(n, m, |_, _| cgauss(&mut rng) * los);
    ChannelModel::new(a, VarianceProfile::new(sigma).unwrap(), zeta).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize, f64, f64, u64)> {
    (1usize..10, 1usize..10, -2.0f64..1.5, 0.0f64..2.0, any::<u64>())
        .prop_map(|(n, m, lz, los, seed)| (n, m, 10f64.powf(lz), los, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn structural_invariants_hold((n, m, zeta, los, seed) in dims()) {
        let md = model(n, m, zeta, los, seed);
        let an = analyze(&md, &SolverOptions::default()).unwrap();
        let bad = invariant_violations(&md, &an);
        prop_assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn gamma_and_xi_are_symmetric((n, m, zeta, los, seed) in dims()) {
        let b = analyze(&model(n, m, zeta, los, seed), &SolverOptions::default()).unwrap().b;
        for j in 0..m {
            for k in 0..m {
                let g = b.gamma[(j, k)];
                prop_assert!((g - b.gamma[(k, j)]).abs() <= 1e-12 * g.abs().max(1e-300));
                let x = b.xi[(j, k)];
                prop_assert!((x - b.xi[(k, j)]).abs() <= 1e-12 * x.abs().max(1e-300));
            }
            prop_assert_eq!(b.xi[(j, j)], 0.0);
        }
    }

    #[test]
    fn deltas_decrease_with_rho((n, m, zeta, los, seed) in dims()) {
        let md = model(n, m, zeta, los, seed);
        let (lo, _) = solve_deltas(&md, &SolverOptions::default()).unwrap();
        let (hi, _) = solve_deltas(&md.with_zeta(zeta * 1.5).unwrap(), &SolverOptions::default()).unwrap();
        prop_assert!(lo.delta.iter().zip(hi.delta.iter()).all(|(a, b)| b < a));
        prop_assert!(lo.delta_tilde.iter().zip(hi.delta_tilde.iter()).all(|(a, b)| b < a));
    }

    #[test]
    fn emi_nonincreasing_in_zeta((n, m, zeta, los, seed) in dims()) {
        let md = model(n, m, zeta, los, seed);
        let c1 = analyze(&md, &SolverOptions::default()).unwrap().stats.emi;
        let c2 = analyze(&md.with_zeta(zeta * 2.0).unwrap(), &SolverOptions::default()).unwrap().stats.emi;
        prop_assert!(c2 <= c1 * (1.0 + 1e-12));
    }

    #[test]
    fn outage_is_a_cdf((n, m, zeta, los, seed) in dims(), r in prop::collection::vec(-5.0f64..5.0, 2..20)) {
        let st = analyze(&model(n, m, zeta, los, seed), &SolverOptions::default()).unwrap().stats;
        let sd = st.variance.sqrt();
        let mut rates: Vec<f64> = r.iter().map(|z| st.emi + z * sd).collect();
        rates.sort_by(f64::total_cmp);
        let p: Vec<f64> = rates.iter().map(|&x| outage_probability(&st, x)).collect();
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(outage_probability(&st, st.emi - 40.0 * sd) < 1e-12);
        prop_assert!(outage_probability(&st, st.emi + 40.0 * sd) == 1.0);
    }

    #[test]
    fn mi_nonnegative_and_rotation_invariant((n, m, zeta, los, seed) in dims()) {
        let md = model(n, m, zeta, los, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let h = sample_channel(&md, &mut rng);
        let u = CMatrix::from_fn(n, n, |_, _| cgauss(&mut rng)).qr().q();
        let v = CMatrix::from_fn(m, m, |_, _| cgauss(&mut rng)).qr().q();
        let c = compute_mi(&h, zeta).unwrap();
        let c_rot = compute_mi(&(&u * &h * v.adjoint()), zeta).unwrap();
        prop_assert!(c >= 0.0);
        prop_assert!((c - c_rot).abs() <= 1e-10 * c.max(1.0));
    }

    #[test]
    fn separable_sampling_is_bit_identical(n in 1usize..8, m in 1usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..n).map(|_| 0.01 + rng.gen::<f64>()).collect();
        let dt: Vec<f64> = (0..m).map(|_| 0.01 + rng.gen::<f64>()).collect();
        let a = CMatrix::from_fn(n, m, |_, _| cgauss(&mut rng));
        let md = ChannelModel::kronecker(a, d, dt, 1.0).unwrap();
        let x = CMatrix::from_fn(n, m, |_, _| cgauss(&mut rng));
        prop_assert_eq!(md.channel_from_noise(&x), md.kronecker_channel_from_noise(&x).unwrap());
    }

    #[test]
    fn split_runs_merge_to_the_full_run(split in 1u64..39, seed in any::<u64>()) {
        let md = model(3, 4, 0.5, 1.0, seed);
        let full = run_mc(&md, 40, seed).unwrap();
        let merged = MiSampleSet::merge(vec![
            run_mc_range(&md, seed, split..40).unwrap(),
            run_mc_range(&md, seed, 0..split).unwrap(),
        ])
        .unwrap();
        prop_assert_eq!(full, merged);
    }

    #[test]
    fn lattice_is_point_symmetric(lx in 0.3f64..6.0, ly in 0.3f64..6.0) {
        let lat = enumerate_lattice(lx, ly, 1.0);
        prop_assert!(lat.len() % 2 == 1);
        for &(a, b) in &lat.points {
            prop_assert!(lat.index_of((-a, -b)).is_some());
        }
        let sq = enumerate_lattice(lx, lx, 1.0);
        for &(a, b) in &sq.points {
            prop_assert!(sq.index_of((b, a)).is_some());
        }
    }

    #[test]
    fn lattice_grows_with_aperture(lx in 0.3f64..6.0, ly in 0.3f64..6.0, dx in 0.0f64..2.0, dy in 0.0f64..2.0) {
        prop_assert!(enumerate_lattice(lx + dx, ly + dy, 1.0).len() >= enumerate_lattice(lx, ly, 1.0).len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_profiles_respect_positivity(side in 0.5f64..3.0, a in 0.2f64..4.0) {
        let rx = enumerate_lattice(side, side, 1.0);
        let tx = enumerate_lattice(side * 0.8, side, 1.0);
        let sep = profile_separable_isotropic(&rx, &tx).unwrap();
        let ns = profile_nonseparable_gaussian(&sep, &rx, &tx, a).unwrap();
        prop_assert!(sep.min_entry() > 0.0 && ns.min_entry() > 0.0);
        let floor = ns.max_entry() * 1e-12;
        for (x, y) in ns.matrix().iter().zip(sep.matrix().iter()) {
            prop_assert!(*x <= y.max(floor));
        }
    }
}

#[test]
fn lattice_area_law_error_shrinks() {
    let rel = |l: f64| {
        let n = enumerate_lattice(l, l, 1.0).len() as f64;
        (n - std::f64::consts::PI * l * l).abs() / (l * l)
    };
    assert!(rel(20.0) < rel(10.0) && rel(10.0) < rel(5.0));
}
