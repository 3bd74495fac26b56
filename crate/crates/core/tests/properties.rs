use proptest::prelude::*;
use refract_core::levy_models::{ExpTerm, JumpSpec, LevySpec};
use refract_core::model_file::{JumpTable, ModelFile, TermEntry};
use refract_core::monte_carlo::{simulate_u, SimConfig};
use refract_core::potential::{refracted_cdf, RefractionProblem};
use refract_core::roots::{phi_root, varphi_root};
use refract_core::Execution;

/// Spectrally negative jump diffusions with up to two exponential jump rates.
fn sn_model() -> impl Strategy<Value = LevySpec> {
    (0.2f64..2.0, -1.0f64..1.0, 0.0f64..2.0, 0.5f64..4.0, 0.0f64..1.0, 0.5f64..4.0).prop_map(|(s, mu, lam, r1, w, r2)| {
        let jumps = if lam < 0.1 {
            JumpSpec::none()
        } else {
            JumpSpec::rational(lam, vec![ExpTerm::real(w, r1, 1), ExpTerm::real(1.0 - w, r1 + r2, 1)])
        };
        LevySpec::jump_diffusion(s, mu, jumps, JumpSpec::none())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_is_convex_and_vanishes_at_zero(m in sn_model(), t1 in 0.0f64..3.0, d2 in 0.01f64..2.0, d3 in 0.01f64..2.0) {
        prop_assert_eq!(m.laplace_exponent(0.0).unwrap(), 0.0);
        let (t2, t3) = (t1 + d2, t1 + d2 + d3);
        let (p1, p2, p3) = (m.laplace_exponent(t1).unwrap(), m.laplace_exponent(t2).unwrap(), m.laplace_exponent(t3).unwrap());
        let chord = p1 + (p3 - p1) * (t2 - t1) / (t3 - t1);
        prop_assert!(p2 <= chord + 1e-10 * chord.abs().max(1.0));
    }

    #[test]
    fn roots_are_ordered_by_delta(m in sn_model(), q in 0.1f64..3.0, delta in -2.0f64..2.0) {
        let phi = phi_root(&m, q).unwrap();
        let vphi = varphi_root(&m, q, delta).unwrap();
        prop_assert!((m.laplace_exponent(phi).unwrap() - q).abs() <= 1e-9 * q.max(1.0));
        if delta > 1e-9 {
            prop_assert!(vphi > phi);
        } else if delta < -1e-9 {
            prop_assert!(vphi < phi);
        }
    }

    #[test]
    fn phi_increases_with_q(m in sn_model(), q in 0.1f64..3.0, dq in 0.01f64..1.0) {
        prop_assert!(phi_root(&m, q + dq).unwrap() > phi_root(&m, q).unwrap());
    }

    #[test]
    fn model_files_round_trip(
        sigma in 0.0f64..5.0,
        drift in proptest::num::f64::NORMAL,
        intensity in 0.0f64..10.0,
        weights in proptest::collection::vec((0.0f64..1.0, 0.1f64..50.0, 1u32..4), 1..5),
    ) {
        let down = JumpTable {
            intensity,
            terms: weights.iter().map(|&(w, r, p)| TermEntry { weight: w, rate: r, power: p, weight_im: 0.0, rate_im: 0.0 }).collect(),
        };
        let file = ModelFile::TwoSided { sigma, drift, down: Some(down.clone()), up: Some(down) };
        let text = file.to_toml();
        let back = ModelFile::parse(&text).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_toml(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn refracted_law_is_shift_equivariant(shift in -2.0f64..2.0, delta in prop_oneof![Just(1.0), Just(-1.0)]) {
        // Shift by a multiple of the grid step so both grids align exactly.
        let dx = 1.0 / 64.0;
        let shift = (shift / dx).round() * dx;
        let solve = |b: f64, x: f64| {
            let p = RefractionProblem::new(LevySpec::brownian(1.0, 0.25), 1.0, delta, b, x).with_grid(Some(dx), Some(12.0));
            refracted_cdf(&p).unwrap()
        };
        let a = solve(0.5, 0.0);
        let b = solve(0.5 + shift, shift);
        for i in (0..a.cdf.len()).step_by(17) {
            let y = a.cdf.x(i);
            prop_assert!((a.cdf_at(y) - b.cdf_at(y + shift)).abs() <= 1e-9);
        }
    }

    #[test]
    fn simulation_is_seed_deterministic(seed in any::<u64>(), delta in -1.0f64..1.0) {
        let p = RefractionProblem::new(LevySpec::brownian(1.0, 0.0), 1.0, delta, 0.0, 0.0);
        let c = SimConfig { n_paths: 500, step_h: 1e-2, seed };
        let a = simulate_u(&p, &c).unwrap();
        let b = simulate_u(&p.clone().with_execution(Execution::Sequential), &c).unwrap();
        prop_assert_eq!(a.samples, b.samples);
    }
}
