//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test -p cellular-ia --test acceptance`.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use cellular_ia::bounds::{
    decomposition_dof_per_user, fraction_set, gamma_critical, mac_bc_bound, optimal_sdof_two_cell,
    prior_outer_bound, proper_test, xnet_outer_bound,
};
use cellular_ia::numerics::{gaussian_matrix, nullspace_basis, numerical_rank};
use cellular_ia::structured::build_two_cell_design;
use cellular_ia::sweep::{
    emit_bound_curves, enumerate_grid, extract_boundary, run_sweep, write_csv, Region, Scheme, SweepRecord,
    SweepSpec,
};
use cellular_ia::usap::{usap, usap_uplink, UsapStatus};
use cellular_ia::verify::{verify_alignment, Direction};
use cellular_ia::{ChannelSet, DofDemand, NetworkConfig, Rational, TolerancePolicy};
use num_integer::Integer;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Written straight to stderr so the lines show up without `--nocapture`.
fn report(id: usize, name: &str, elapsed: Duration, o: &Outcome) -> bool {
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id} [{}] {name} ({:.1}s): {}",
        if o.pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        o.detail
    );
    o.pass
}

fn r(a: usize, b: usize) -> Rational {
    Rational::new(a as i64, b as i64)
}

fn cfg(g: usize, k: usize, m: usize, n: usize) -> NetworkConfig {
    NetworkConfig::new(g, k, m, n).unwrap()
}

fn worked_examples() -> Outcome {
    let pol = TolerancePolicy::default();
    let d = DofDemand::new(1).unwrap();
    let mut bad = Vec::new();
    for seed in 0..5u64 {
        let out = usap_uplink(&ChannelSet::generate(cfg(3, 2, 3, 4), seed), d, seed, &pol);
        let dg = &out.diagnostics;
        if out.status != UsapStatus::EmptyNullspace || (dg.rows, dg.cols, dg.rank) != (24, 18, 18) {
            bad.push(format!("(3,2,3,4) seed {seed}: {} {}x{} rank {}", out.status, dg.rows, dg.cols, dg.rank));
        }
        let out = usap_uplink(&ChannelSet::generate(cfg(3, 2, 3, 5), seed), d, seed, &pol);
        let res = out.diagnostics.residual.unwrap_or(f64::INFINITY);
        if out.status != UsapStatus::Success || res > 1e-8 {
            bad.push(format!("(3,2,3,5) seed {seed}: {} residual {res:e}", out.status));
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            "EmptyNullspace on 24x18 and Success on (3,2,3,5) for 5/5 seeds".into()
        } else {
            bad.join("; ")
        },
    }
}

fn boundary_point() -> Outcome {
    let pol = TolerancePolicy::default();
    let c = cfg(4, 1, 11, 29);
    let d = DofDemand::new(8).unwrap();
    let ok = (0..5u64)
        .filter(|&s| usap_uplink(&ChannelSet::generate(c, s), d, s, &pol).status == UsapStatus::Success)
        .count();
    let proper_eq = c.m() + c.n() == (c.users() + 1) * d.get() && proper_test(&c, d);
    Outcome {
        pass: ok == 5 && proper_eq,
        detail: format!("{ok}/5 seeds succeed, proper with equality: {proper_eq}"),
    }
}

fn structured_achievability() -> Outcome {
    use rayon::prelude::*;
    let pol = TolerancePolicy::default();
    let pts: Vec<(usize, usize, usize)> = [2usize, 3]
        .iter()
        .flat_map(|&k| (1..=12).flat_map(move |m| (1..=12).map(move |n| (k, m, n))))
        .collect();
    let bad: Vec<String> = pts
        .par_iter()
        .filter_map(|&(k, m, n)| {
            let want = optimal_sdof_two_cell(k, m, n).unwrap();
            match build_two_cell_design(&cfg(2, k, m, n), (k * 1000 + m * 31 + n) as u64, &pol) {
                Ok(dz) if dz.achieved_dof == want && dz.report.pass => None,
                Ok(dz) => Some(format!("(2,{k},{m},{n}): {} vs {want}, pass {}", dz.achieved_dof, dz.report.pass)),
                Err(e) => Some(format!("(2,{k},{m},{n}): {e}")),
            }
        })
        .collect();
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{} designs match the optimum and verify", pts.len())
        } else {
            bad.join("; ")
        },
    }
}

fn xnet_equality() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for g in 2..=4 {
        for k in 1..=4 {
            let q = fraction_set(g, k).unwrap();
            for m in 1..=24 {
                for n in 1..=24 {
                    if !q.contains(&r(m, n)) {
                        continue;
                    }
                    let c = cfg(g, k, m, n);
                    checked += 1;
                    if decomposition_dof_per_user(&c) != xnet_outer_bound(&c).unwrap() {
                        bad.push(c.to_string());
                    }
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty() && checked > 0,
        detail: format!("{checked} configurations, {} mismatches {}", bad.len(), bad.join(" ")),
    }
}

/// Per-user sDoF over `N` of the three-user MIMO interference channel:
/// with `μ = min/max` and `p = ⌈μ/(1−μ)⌉`, the per-user value is
/// `min(p·min/(2p−1), p·max/(2p+1))`, and `N/2` when `M = N`.
fn three_user_ic_oracle(gamma: Rational) -> Rational {
    let (m, n) = (*gamma.numer(), *gamma.denom());
    if m == n {
        return Rational::new(1, 2);
    }
    let (a, b) = (m.min(n), m.max(n));
    // μ/(1−μ) = a/(b−a)
    let p = (a + (b - a) - 1) / (b - a);
    let v = Rational::new(p * a, 2 * p - 1).min(Rational::new(p * b, 2 * p + 1));
    v / Rational::from_integer(n)
}

/// Gates that exclude `(M, N, d)` from the grid.
fn excluded_by(spec: &SweepSpec, m: usize, n: usize, d: usize) -> Vec<&'static str> {
    let (g, k) = (spec.g, spec.k);
    let l = (g * k * d) as i64 - n as i64;
    let mut why = Vec::new();
    if l <= 0 {
        why.push("L>0");
    }
    if l * n as i64 >= (k * m * d) as i64 {
        why.push("LN<KMd");
    }
    if d > m {
        why.push("d<=M");
    }
    if k * d > n {
        why.push("Kd<=N");
    }
    if m >= g * k * d {
        why.push("M<GKd");
    }
    if m.gcd(&n).gcd(&d) != 1 {
        why.push("gcd");
    }
    if m + n < (g * k + 1) * d {
        why.push("proper");
    }
    why
}

fn ic_boundary() -> (Outcome, Vec<SweepRecord>) {
    let spec = SweepSpec::new(3, 1, 30, 30, Scheme::UsapUplink);
    let records = run_sweep(&spec).unwrap();
    let boundary = extract_boundary(&records);
    let mut matched = 0;
    let mut gap_gammas = 0;
    let mut gaps: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut bad = Vec::new();
    for &(gamma, dn) in &boundary {
        let want = three_user_ic_oracle(gamma);
        if dn == want {
            matched += 1;
            continue;
        }
        if dn > want {
            bad.push(format!("gamma {gamma}: {dn} above optimum {want}"));
            continue;
        }
        // Is the optimum reachable on this grid at all?
        let (p, q) = (*gamma.numer() as usize, *gamma.denom() as usize);
        let mut reasons = Vec::new();
        let mut reachable = false;
        for t in 1..=30 / p.max(q) {
            let (m, n) = (p * t, q * t);
            let dd = want * Rational::from_integer(n as i64);
            if !dd.is_integer() {
                reasons.push("non-integer d");
                continue;
            }
            let d = dd.to_integer() as usize;
            let why = excluded_by(&spec, m, n, d);
            if why.is_empty() {
                reachable = true;
            }
            reasons.extend(why);
        }
        if reachable {
            bad.push(format!("gamma {gamma}: boundary {dn} below reachable optimum {want}"));
        } else {
            gap_gammas += 1;
            for w in reasons {
                *gaps.entry(w).or_default() += 1;
            }
        }
    }
    // Separation: no success anywhere above the optimal curve.
    let above = records
        .iter()
        .filter(|r| r.is_success() && r.dn > three_user_ic_oracle(r.gamma))
        .count();
    if above > 0 {
        bad.push(format!("{above} successes above the optimum"));
    }
    (
        Outcome {
            pass: bad.is_empty() && matched > 0,
            detail: format!(
                "{} points, {} gamma values on the boundary, {matched} exact matches, {gap_gammas} expected gaps {:?} {}",
                records.len(),
                boundary.len(),
                gaps,
                bad.join("; ")
            ),
        },
        records,
    )
}

fn region_two() -> (Outcome, Vec<SweepRecord>) {
    let mut spec = SweepSpec::new(3, 2, 20, 20, Scheme::UsapUplink);
    spec.relax_usap_gate = true;
    spec.region = Some(Region::BelowDecomposition);
    let records = run_sweep(&spec).unwrap();
    let mut bad = Vec::new();
    let mut pit = 0;
    let mut first_fail = 0;
    for rec in &records {
        let c = cfg(3, 2, rec.m, rec.n);
        let gate = cellular_ia::bounds::usap_uplink_necessary(&c, DofDemand::new(rec.d).unwrap());
        if rec.is_success() != gate {
            bad.push(format!("({},{},{}) {} with gate {gate}", rec.m, rec.n, rec.d, rec.status));
        }
        if rec.status == UsapStatus::PitFailure.as_str() {
            pit += 1;
        }
        if let Some(det) = &rec.detail {
            if det.nullity.unwrap_or(0) > 0 && det.first_draw_pit_pass < rec.seeds {
                first_fail += 1;
            }
        }
    }
    let gated = records
        .iter()
        .filter(|r| cellular_ia::bounds::usap_uplink_necessary(&cfg(3, 2, r.m, r.n), DofDemand::new(r.d).unwrap()))
        .count();
    (
        Outcome {
            pass: bad.is_empty() && pit == 0 && !records.is_empty(),
            detail: format!(
                "{} region points ({gated} pass the gate), {} mismatches, {pit} identity-test failures, {first_fail} points needed a redraw {}",
                records.len(),
                bad.len(),
                bad.join("; ")
            ),
        },
        records,
    )
}

fn tangency() -> Outcome {
    let (l, rr) = gamma_critical(2, 4).unwrap();
    let half = Rational::new(1, 2);
    let exact = l.exact() == Some(half) && rr.exact() == Some(half);
    let row = &emit_bound_curves(2, 4, &[half])[0];
    let touch = row.decomposition == row.proper && row.proper == Rational::new(1, 6);
    Outcome {
        pass: exact && touch,
        detail: format!(
            "gamma_critical(2,4) = ({l}, {rr}); decomposition {} and proper {} at 1/2",
            row.decomposition, row.proper
        ),
    }
}

fn properties(sweeps: &[&[SweepRecord]]) -> Outcome {
    let pol = TolerancePolicy::default();
    let mut fails = Vec::new();

    // Rank plus nullity equals the column count.
    let mut runner = TestRunner::new(Config { cases: 64, ..Config::default() });
    let rn = runner.run(&(1usize..10, 1usize..10, 0usize..10, any::<u64>()), |(m, n, k, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = k.min(m).min(n);
        let a = if rank == 0 {
            cellular_ia::CMat::zeros(m, n)
        } else {
            gaussian_matrix(&mut rng, m, rank) * gaussian_matrix(&mut rng, rank, n)
        };
        let nr = numerical_rank(&a, &pol);
        prop_assert_eq!(nr, rank);
        prop_assert_eq!(nr + nullspace_basis(&a, &pol).ncols(), n);
        Ok(())
    });
    if let Err(e) = rn {
        fails.push(format!("rank-nullity: {e}"));
    }

    // Seed determinism: byte-identical CSV from identical specs.
    let mut spec = SweepSpec::new(3, 2, 8, 8, Scheme::UsapUplink);
    spec.seeds = 2;
    let csv = |s: &SweepSpec| {
        let mut buf = Vec::new();
        write_csv(&run_sweep(s).unwrap(), &mut buf).unwrap();
        buf
    };
    if csv(&spec) != csv(&spec) {
        fails.push("seed determinism: CSV differs between identical runs".into());
    }

    // Inner bound never exceeds an outer bound.
    let mut inner_checked = 0;
    for g in 2..=4 {
        for k in 1..=4 {
            for m in 1..=24 {
                for n in 1..=24 {
                    let c = cfg(g, k, m, n);
                    let inner = decomposition_dof_per_user(&c);
                    let outer = [xnet_outer_bound(&c).unwrap(), prior_outer_bound(&c), mac_bc_bound(&c)];
                    inner_checked += 1;
                    if outer.iter().any(|o| inner > *o) {
                        fails.push(format!("inner above outer at {c}"));
                    }
                    if g == 2 && matches!(k, 2 | 3) {
                        let opt = optimal_sdof_two_cell(k, m, n).unwrap();
                        if opt < inner || outer.iter().any(|o| opt > *o) {
                            fails.push(format!("optimum outside bounds at {c}"));
                        }
                    }
                }
            }
        }
    }

    // Every recorded success verifies when rebuilt from its seeds.
    let mut reverified = 0;
    for recs in sweeps {
        for rec in recs.iter().filter(|r| r.is_success()).step_by(7) {
            let spec = SweepSpec::new(rec.g, rec.k, rec.m, rec.n, Scheme::UsapUplink);
            let c = cfg(rec.g, rec.k, rec.m, rec.n);
            let d = DofDemand::new(rec.d).unwrap();
            for s in 0..rec.seeds {
                let seed = cellular_ia::sweep::trial_seed(&spec, rec.m, rec.n, rec.d, s);
                let ch = ChannelSet::generate(c, cellular_ia::usap::sub_seed(seed, 1 << 32));
                let out = usap(&ch, d, Direction::Uplink, seed, &pol);
                let ok = out.status == UsapStatus::Success
                    && out
                        .beamformers
                        .as_ref()
                        .map(|bf| verify_alignment(&ch, bf, &pol).map(|rep| rep.pass).unwrap_or(false))
                        .unwrap_or(false);
                reverified += 1;
                if !ok {
                    fails.push(format!("success at {c} d={} seed {s} does not verify", rec.d));
                }
            }
        }
    }

    // Homogeneity of the two-cell optimum under spatial extension.
    let mut homog = 0;
    for k in [2, 3] {
        for m in 1..=12 {
            for n in 1..=12 {
                let base = optimal_sdof_two_cell(k, m, n).unwrap();
                for q in 1..=6 {
                    homog += 1;
                    if optimal_sdof_two_cell(k, q * m, q * n).unwrap() != base.scale(Rational::from_integer(q as i64)) {
                        fails.push(format!("homogeneity at K={k} ({m},{n}) q={q}"));
                    }
                }
            }
        }
    }

    Outcome {
        pass: fails.is_empty() && reverified > 0,
        detail: format!(
            "64 rank-nullity cases, determinism, {inner_checked} bound orderings, {reverified} re-verified successes, {homog} homogeneity checks {}",
            fails.join("; ")
        ),
    }
}

#[test]
fn acceptance() {
    let mut all = true;

    let t = Instant::now();
    let o = worked_examples();
    let e = t.elapsed();
    all &= report(1, "worked examples", e, &Outcome { pass: o.pass && e < Duration::from_secs(1), ..o });

    let t = Instant::now();
    let o = boundary_point();
    let e = t.elapsed();
    all &= report(2, "(4,1,11,29) d=8 boundary point", e, &Outcome { pass: o.pass && e < Duration::from_secs(5), ..o });

    let t = Instant::now();
    let o = structured_achievability();
    let e = t.elapsed();
    all &= report(3, "two-cell structured achievability", e, &o);

    let t = Instant::now();
    let o = xnet_equality();
    all &= report(4, "decomposition equals xnet bound", t.elapsed(), &o);

    let t = Instant::now();
    let (o, ic) = ic_boundary();
    let e = t.elapsed();
    all &= report(5, "three-user IC boundary", e, &Outcome { pass: o.pass && e < Duration::from_secs(20 * 60), ..o });

    let t = Instant::now();
    let (o, reg) = region_two();
    let e = t.elapsed();
    all &= report(6, "region II gate decides success", e, &Outcome { pass: o.pass && e < Duration::from_secs(10 * 60), ..o });

    let t = Instant::now();
    let o = tangency();
    all &= report(7, "tangency at gamma = 1/2", t.elapsed(), &o);

    let t = Instant::now();
    let o = properties(&[&ic, &reg]);
    all &= report(8, "property suites", t.elapsed(), &o);

    assert!(all, "at least one acceptance criterion failed");
}

#[test]
fn ic_grid_size() {
    assert_eq!(enumerate_grid(&SweepSpec::new(3, 1, 30, 30, Scheme::UsapUplink)).len(), 850);
}
