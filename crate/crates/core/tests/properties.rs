use cellular_ia::bounds::{
    decomposition_dof_per_user, fraction_set, gamma_critical, mac_bc_bound, optimal_sdof_two_cell,
    prior_outer_bound, proper_limit, xnet_outer_bound,
};
use cellular_ia::numerics::{gaussian_matrix, nullspace_basis, numerical_rank, NullspaceProjector};
use cellular_ia::usap::{usap, UsapStatus};
use cellular_ia::verify::{verify_alignment, Direction};
use cellular_ia::{c64, ChannelSet, CMat, DofDemand, NetworkConfig, Rational, TolerancePolicy};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if r == 0 {
        return CMat::zeros(m, n);
    }
    gaussian_matrix(&mut rng, m, r) * gaussian_matrix(&mut rng, r, n)
}

fn cfg(g: usize, k: usize, m: usize, n: usize) -> NetworkConfig {
    NetworkConfig::new(g, k, m, n).unwrap()
}

fn q(v: usize) -> Rational {
    Rational::from_integer(v as i64)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn rank_plus_nullity(m in 1usize..12, n in 1usize..12, r in 0usize..12, seed in any::<u64>()) {
        let pol = TolerancePolicy::default();
        let r = r.min(m).min(n);
        let a = low_rank(m, n, r, seed);
        prop_assert_eq!(numerical_rank(&a, &pol), r);
        let z = nullspace_basis(&a, &pol);
        prop_assert_eq!(z.ncols(), n - r);
        if z.ncols() > 0 {
            let res = (&a * &z).norm_l2() / a.norm_l2().max(1.0);
            prop_assert!(res < 1e-10, "residual {}", res);
        }
    }

    #[test]
    fn rank_is_scale_invariant(m in 1usize..10, n in 1usize..10, r in 1usize..10,
                               exp in -6i32..=6, seed in any::<u64>()) {
        let pol = TolerancePolicy::default();
        let r = r.min(m).min(n);
        let a = low_rank(m, n, r, seed);
        let s = 10f64.powi(exp);
        let scaled = &a * faer::Scale(c64::new(s, 0.0));
        prop_assert_eq!(numerical_rank(&scaled, &pol), numerical_rank(&a, &pol));
    }

    #[test]
    fn projection_is_idempotent(m in 1usize..10, extra in 1usize..6, seed in any::<u64>()) {
        let pol = TolerancePolicy::default();
        let n = m + extra;
        let a = low_rank(m, n, m, seed);
        let p = NullspaceProjector::new(&a, &pol);
        prop_assert_eq!(p.nullity(), extra);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x = gaussian_matrix(&mut rng, n, 1).col(0).to_owned();
        let once = p.project(x).unwrap();
        prop_assert!(once.residual < 1e-10);
        let twice = p.project(once.vector.clone()).unwrap();
        prop_assert!((&twice.vector - &once.vector).norm_l2() < 1e-10);
    }

    #[test]
    fn inner_never_exceeds_outer(g in 2usize..6, k in 1usize..6, m in 1usize..40, n in 1usize..40) {
        let c = cfg(g, k, m, n);
        let inner = decomposition_dof_per_user(&c);
        prop_assert!(inner <= xnet_outer_bound(&c).unwrap());
        prop_assert!(inner <= prior_outer_bound(&c));
        prop_assert!(inner <= mac_bc_bound(&c));
    }

    #[test]
    fn decomposition_meets_xnet_on_fraction_set(g in 2usize..6, k in 1usize..6, t in 1usize..5, idx in 0usize..64) {
        let set = fraction_set(g, k).unwrap();
        let r = *set.iter().nth(idx % set.len()).unwrap();
        let (m, n) = (*r.numer() as usize * t, *r.denom() as usize * t);
        let c = cfg(g, k, m, n);
        prop_assert_eq!(decomposition_dof_per_user(&c), xnet_outer_bound(&c).unwrap());
    }

    #[test]
    fn bounds_are_homogeneous(g in 2usize..5, k in 1usize..5, m in 1usize..15, n in 1usize..15, t in 1usize..7) {
        let (a, b) = (cfg(g, k, m, n), cfg(g, k, t * m, t * n));
        prop_assert_eq!(decomposition_dof_per_user(&b), decomposition_dof_per_user(&a).scale(q(t)));
        prop_assert_eq!(xnet_outer_bound(&b).unwrap(), xnet_outer_bound(&a).unwrap().scale(q(t)));
        prop_assert_eq!(prior_outer_bound(&b), prior_outer_bound(&a).scale(q(t)));
        if g == 2 && matches!(k, 2 | 3) {
            let d = optimal_sdof_two_cell(k, m, n).unwrap();
            prop_assert_eq!(optimal_sdof_two_cell(k, t * m, t * n).unwrap(), d.scale(q(t)));
        }
    }

    #[test]
    fn two_cell_optimum_between_bounds(k in 2usize..4, m in 1usize..40, n in 1usize..40) {
        let c = cfg(2, k, m, n);
        let d = optimal_sdof_two_cell(k, m, n).unwrap();
        prop_assert!(decomposition_dof_per_user(&c) <= d);
        prop_assert!(d <= xnet_outer_bound(&c).unwrap());
        prop_assert!(d <= prior_outer_bound(&c));
    }

    #[test]
    fn critical_ratios_meet_proper_limit(g in 2usize..7, k in 1usize..7) {
        // At γ_l and γ_r the decomposition curve γ/(Kγ+1) meets (γ+1)/(GK+1).
        if let Ok((l, r)) = gamma_critical(g, k) {
            for root in [l, r] {
                match root.exact() {
                    Some(x) => {
                        let gamma_over = cfg(g, k, *x.numer() as usize, *x.denom() as usize);
                        prop_assert_eq!(decomposition_dof_per_user(&gamma_over), proper_limit(&gamma_over));
                    }
                    None => {
                        let x = root.to_f64();
                        let (kf, gkf) = (k as f64, (g * k) as f64);
                        let gap = x / (kf * x + 1.0) - (x + 1.0) / (gkf + 1.0);
                        prop_assert!(gap.abs() < 1e-12, "gap {} at {}", gap, x);
                    }
                }
            }
        }
    }

    #[test]
    fn channel_draws_are_seed_deterministic(g in 1usize..4, k in 1usize..4, m in 1usize..5, n in 1usize..5, seed in any::<u64>()) {
        let c = cfg(g, k, m, n);
        let (a, b) = (ChannelSet::generate(c, seed), ChannelSet::generate(c, seed));
        for ((_, x), (_, y)) in a.iter().zip(b.iter()) {
            prop_assert_eq!(x, y);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn usap_success_verifies_and_repeats(g in 2usize..4, k in 1usize..3, m in 1usize..7, n in 1usize..9,
                                         d in 1usize..3, down in any::<bool>(), seed in any::<u64>()) {
        let pol = TolerancePolicy::default();
        let c = cfg(g, k, m, n);
        let ch = ChannelSet::generate(c, seed);
        let dir = if down { Direction::Downlink } else { Direction::Uplink };
        let dd = DofDemand::new(d).unwrap();
        let a = usap(&ch, dd, dir, seed, &pol);
        let b = usap(&ch, dd, dir, seed, &pol);
        prop_assert_eq!(a.status, b.status);
        if a.status == UsapStatus::Success {
            let bf = a.beamformers.as_ref().unwrap();
            prop_assert_eq!(bf.precoders(), b.beamformers.as_ref().unwrap().precoders());
            let rep = verify_alignment(&ch, bf, &pol).unwrap();
            prop_assert!(rep.pass);
        }
    }
}
