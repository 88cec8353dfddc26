//! The invariant suite behind `statdist selftest`.
//!
//! Every criterion uses fixed seeds and returns a [`Report`] whose checks
//! carry the measured worst case next to its limit, so two runs can be
//! compared byte for byte.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;

use crate::defaults::{TOL_BOUND, TOL_EQUIDIAG, TOL_PROTOCOL};
use crate::equidiag::{diagonal_residual, equi_diagonalize, tolerance_scale};
use crate::linalg::{identity, trace, unitarity_defect};
use crate::locc::{check_stage_cascade, discriminate_orthogonal, locc_distance, run_locc, verify_transcript};
use crate::measure::{global_distance, Povm};
use crate::mixed::{bures_angle, mixed_measurement_distance, transition_equidiag_gap, MixedState};
use crate::oracle::{optimize_global_measurement, sample_bound_check, SearchConfig};
use crate::report::{Check, Report};
use crate::rng::{derive_seed, CounterRng};
use crate::statekit::{random_orthogonal_pair, random_state_pair, PartyLayout, PureState};
use crate::Result;

/// Number of criteria in the suite.
pub const CRITERIA: u8 = 10;

pub const CENTRAL_LAYOUTS: [&[usize]; 6] = [&[2, 2], &[2, 3], &[3, 3], &[2, 2, 2], &[2, 2, 3], &[4, 4]];
pub const CENTRAL_SEEDS: u64 = 100;
pub const ORDER_SEEDS: u64 = 20;
pub const EQUIDIAG_MATRICES: u64 = 200;
pub const BOUND_DIMS: [usize; 5] = [2, 3, 4, 6, 8];
pub const BOUND_TRIALS: usize = 1000;
pub const TIGHTNESS_INSTANCES: u64 = 100;
pub const TIGHTNESS_REQUIRED: f64 = 95.0;
pub const TIGHTNESS_TOL: f64 = 1e-6;
pub const ORTHOGONAL_SEEDS: u64 = 20;
pub const PURE_CONSISTENCY_TOL: f64 = 1e-10;
pub const MIXED_PAIRS: u64 = 100;
pub const POVMS_PER_PAIR: u64 = 100;
pub const GAP_SEEDS: u64 = 100;
pub const GAP_WITNESS: f64 = 1e-3;

pub fn criterion_title(k: u8) -> &'static str {
    match k {
        1 => "LOCC distance equals global distance",
        2 => "stage cascade identities",
        3 => "party-order invariance",
        4 => "equi-diagonalization contract",
        5 => "measurement bound on sampled POVMs",
        6 => "oracle search reaches the bound",
        7 => "product versus Bell worked example",
        8 => "orthogonal pairs perfectly discriminated",
        9 => "mixed-state demonstrator",
        10 => "determinism",
        _ => "unknown criterion",
    }
}

fn report_for(k: u8) -> Report {
    let mut r = Report::new("selftest");
    r.config("criterion", k);
    r
}

struct CentralStats {
    optimality: f64,
    constancy: f64,
    cascade: f64,
    completeness: f64,
    instances: usize,
}

fn central_stats() -> Result<CentralStats> {
    let mut s = CentralStats { optimality: 0.0, constancy: 0.0, cascade: 0.0, completeness: 0.0, instances: 0 };
    for dims in CENTRAL_LAYOUTS {
        let layout = PartyLayout::new(dims.to_vec())?;
        let order: Vec<usize> = (0..layout.parties()).collect();
        for seed in 0..CENTRAL_SEEDS {
            let (s1, s2) = random_state_pair(&layout, seed);
            let t = run_locc(&s1, &s2, &order)?;
            let inv = verify_transcript(&t);
            s.optimality = s.optimality.max(inv.optimality);
            s.constancy = s.constancy.max(inv.leaf_constancy);
            s.completeness = s.completeness.max(inv.completeness).max(inv.probability);
            s.cascade = s.cascade.max(check_stage_cascade(&t).max());
            s.instances += 1;
        }
    }
    Ok(s)
}

fn central_theorem() -> Result<Report> {
    let s = central_stats()?;
    let mut r = report_for(1);
    r.config("layouts", "2x2 2x3 3x3 2x2x2 2x2x3 4x4").config("seeds", format!("0..{CENTRAL_SEEDS}"));
    r.value("instances", s.instances as f64);
    r.check(Check::at_most("amplitude_sum_vs_overlap", s.optimality, TOL_PROTOCOL));
    r.check(Check::at_most("leaf_amplitude_constancy", s.constancy, TOL_PROTOCOL));
    r.check(Check::at_most("completeness_and_probability", s.completeness, TOL_PROTOCOL));
    Ok(r)
}

fn cascade() -> Result<Report> {
    let s = central_stats()?;
    let mut r = report_for(2);
    r.config("layouts", "2x2 2x3 3x3 2x2x2 2x2x3 4x4").config("seeds", format!("0..{CENTRAL_SEEDS}"));
    r.value("instances", s.instances as f64);
    r.check(Check::at_most("cascade_max_violation", s.cascade, TOL_PROTOCOL));
    Ok(r)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for x in 0..n {
            if !prefix.contains(&x) {
                prefix.push(x);
                rec(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, &mut out);
    out
}

fn order_invariance() -> Result<Report> {
    let layout = PartyLayout::new(vec![2, 3, 2])?;
    let orders = permutations(3);
    let mut spread = 0.0f64;
    let mut vs_global = 0.0f64;
    for seed in 0..ORDER_SEEDS {
        let (s1, s2) = random_state_pair(&layout, seed);
        let dg = global_distance(&s1, &s2)?;
        let ds = orders.iter().map(|o| Ok(locc_distance(&run_locc(&s1, &s2, o)?))).collect::<Result<Vec<f64>>>()?;
        let lo = ds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
        vs_global = ds.iter().fold(vs_global, |m, d| m.max((d - dg).abs()));
    }
    let mut r = report_for(3);
    r.config("layout", "2x3x2").config("seeds", format!("0..{ORDER_SEEDS}")).config("orders", orders.len());
    r.check(Check::at_most("order_spread", spread, TOL_PROTOCOL));
    r.check(Check::at_most("locc_vs_global", vs_global, TOL_PROTOCOL));
    Ok(r)
}

/// Matrix `i` of the equi-diagonalization sweep: `n = 2 + i mod 15`.
pub fn sweep_matrix(i: u64) -> crate::CMatrix {
    let n = 2 + (i % 15) as usize;
    CounterRng::new(derive_seed(i, 4)).ginibre(n, n)
}

fn equidiag_contract() -> Result<Report> {
    let mut residual = 0.0f64;
    let mut unitarity = 0.0f64;
    let mut traceless = 0.0f64;
    for i in 0..EQUIDIAG_MATRICES {
        let m = sweep_matrix(i);
        let eq = equi_diagonalize(&m, TOL_EQUIDIAG)?;
        residual = residual.max(diagonal_residual(&m, &eq.basis, eq.tau) / tolerance_scale(&m));
        unitarity = unitarity.max(unitarity_defect(&eq.basis));

        let n = m.nrows();
        let m0 = &m - identity(n) * (trace(&m) / n as f64);
        let eq0 = equi_diagonalize(&m0, TOL_EQUIDIAG)?;
        let t = eq0.basis.adjoint() * &m0 * &eq0.basis;
        let worst = (0..n).map(|k| t[(k, k)].norm()).fold(0.0, f64::max);
        traceless = traceless.max(worst);
        unitarity = unitarity.max(unitarity_defect(&eq0.basis));
    }
    let mut r = report_for(4);
    r.config("matrices", EQUIDIAG_MATRICES).config("sizes", "2..=16");
    r.check(Check::at_most("relative_diagonal_residual", residual, TOL_EQUIDIAG));
    r.check(Check::at_most("unitarity_defect", unitarity, 1e-12));
    r.check(Check::at_most("traceless_diagonal_magnitude", traceless, TOL_EQUIDIAG));
    Ok(r)
}

fn bound() -> Result<Report> {
    let mut r = report_for(5);
    r.config("trials", BOUND_TRIALS).config("seed", 0);
    for dim in BOUND_DIMS {
        let v = sample_bound_check(dim, BOUND_TRIALS, 0)?;
        r.check(Check::at_most(format!("bound_violation_dim{dim}"), v, TOL_BOUND));
    }
    Ok(r)
}

/// Instance `i` of the tightness run: a random pair in dimension `2 + i mod 5`.
pub fn tightness_instance(i: u64) -> Result<(PureState, PureState)> {
    let layout = PartyLayout::single(2 + (i % 5) as usize)?;
    Ok(random_state_pair(&layout, i))
}

fn tightness() -> Result<Report> {
    let mut hits = 0usize;
    let mut worst_gap = 0.0f64;
    let mut overshoot = f64::NEG_INFINITY;
    for i in 0..TIGHTNESS_INSTANCES {
        let (s1, s2) = tightness_instance(i)?;
        let cfg = SearchConfig { seed: i, ..SearchConfig::default() };
        let (d, _) = optimize_global_measurement(&s1, &s2, &cfg)?;
        let dg = global_distance(&s1, &s2)?;
        let gap = (dg - d).abs();
        if gap <= TIGHTNESS_TOL {
            hits += 1;
        }
        worst_gap = worst_gap.max(gap);
        overshoot = overshoot.max(d - dg);
    }
    let cfg = SearchConfig::default();
    let mut r = report_for(6);
    r.config("instances", TIGHTNESS_INSTANCES).config("restarts", cfg.restarts).config("steps", cfg.steps);
    r.value("worst_gap", worst_gap);
    r.check(Check::at_least("instances_within_1e-6", hits as f64, TIGHTNESS_REQUIRED));
    r.check(Check::at_most("search_exceeds_global", overshoot, TOL_BOUND));
    Ok(r)
}

/// `|00⟩` and `(|00⟩ + |11⟩)/√2`.
pub fn product_bell_pair() -> (PureState, PureState) {
    let l = PartyLayout::new(vec![2, 2]).expect("valid layout");
    let z = Complex64::new(0.0, 0.0);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let s1 = PureState::basis(l.clone(), 0).expect("index 0");
    let s2 = PureState::new(l, vec![h, z, z, h]).expect("normalized");
    (s1, s2)
}

fn worked_example() -> Result<Report> {
    let (s1, s2) = product_bell_pair();
    let t = run_locc(&s1, &s2, &[0, 1])?;
    let dg = global_distance(&s1, &s2)?;
    let dl = locc_distance(&t);
    let target = Complex64::new(1.0 / (4.0 * 2f64.sqrt()), 0.0);
    let leaf = t.leaves.iter().map(|l| (l.amplitude - target).norm()).fold(0.0, f64::max);
    let mut r = report_for(7);
    r.value("d_global", dg).value("d_locc", dl);
    r.check(Check::at_most("d_global_vs_quarter_pi", (dg - FRAC_PI_4).abs(), TOL_PROTOCOL));
    r.check(Check::at_most("d_locc_vs_quarter_pi", (dl - FRAC_PI_4).abs(), TOL_PROTOCOL));
    r.check(Check::at_most("leaf_amplitude_vs_target", leaf, TOL_PROTOCOL));
    Ok(r)
}

fn orthogonal() -> Result<Report> {
    let mut r = report_for(8);
    r.config("seeds", format!("0..{ORTHOGONAL_SEEDS}"));
    for dims in [vec![2, 2], vec![3, 3]] {
        let layout = PartyLayout::new(dims.clone())?;
        let mut worst = 0.0f64;
        for seed in 0..ORTHOGONAL_SEEDS {
            let (s1, s2) = random_orthogonal_pair(&layout, seed);
            worst = worst.max(discriminate_orthogonal(&s1, &s2, &[0, 1])?.worst_confusion);
        }
        let tag = dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        r.check(Check::at_most(format!("worst_confusion_{tag}"), worst, crate::locc::ZERO_PROBABILITY));
    }
    Ok(r)
}

/// Full-rank pair `seed` of the mixed-state sweeps.
pub fn mixed_pair(dim: usize, seed: u64) -> (MixedState, MixedState) {
    (MixedState::random_full_rank(dim, derive_seed(seed, 1)), MixedState::random_full_rank(dim, derive_seed(seed, 2)))
}

fn mixed() -> Result<Report> {
    let mut pure_dev = 0.0f64;
    for seed in 0..50u64 {
        let layout = PartyLayout::single(2 + (seed % 3) as usize)?;
        let (s1, s2) = random_state_pair(&layout, seed);
        let b = bures_angle(&MixedState::pure(&s1), &MixedState::pure(&s2))?;
        pure_dev = pure_dev.max((b - global_distance(&s1, &s2)?).abs());
    }

    let mut excess = f64::NEG_INFINITY;
    for p in 0..MIXED_PAIRS {
        let (r1, r2) = mixed_pair(2, p);
        let bures = bures_angle(&r1, &r2)?;
        let mut rng = CounterRng::new(derive_seed(p, 3));
        for _ in 0..POVMS_PER_PAIR {
            let n = if rng.uniform() < 0.5 { 2 } else { 4 };
            let povm = Povm::random(2, n, &mut rng)?;
            excess = excess.max(mixed_measurement_distance(&r1, &r2, &povm)? - bures);
        }
    }

    let mut best_gap = f64::NEG_INFINITY;
    let mut best_seed = 0u64;
    for seed in 0..GAP_SEEDS {
        let (r1, r2) = mixed_pair(2, seed);
        let g = transition_equidiag_gap(&r1, &r2)?.gap;
        if g > best_gap {
            best_gap = g;
            best_seed = seed;
        }
    }

    let mut r = report_for(9);
    r.config("povms", MIXED_PAIRS * POVMS_PER_PAIR).config("gap_seeds", format!("0..{GAP_SEEDS}"));
    r.value("best_gap_seed", best_seed as f64);
    r.check(Check::at_most("bures_vs_global_on_pure", pure_dev, PURE_CONSISTENCY_TOL));
    r.check(Check::at_most("measurement_exceeds_bures", excess, TOL_PROTOCOL));
    r.check(Check::at_least("transition_gap_witness", best_gap, GAP_WITNESS));
    Ok(r)
}

/// Runs criteria 1 to 9 twice and compares the rendered reports.
fn determinism() -> Result<Report> {
    let mut mismatches = 0.0;
    for k in 1..CRITERIA {
        if run_criterion(k)?.render() != run_criterion(k)?.render() {
            mismatches += 1.0;
        }
    }
    let mut r = report_for(10);
    r.check(Check::at_most("reports_differing_between_runs", mismatches, 0.0));
    Ok(r)
}

/// Run criterion `k` (1 to [`CRITERIA`]).
pub fn run_criterion(k: u8) -> Result<Report> {
    match k {
        1 => central_theorem(),
        2 => cascade(),
        3 => order_invariance(),
        4 => equidiag_contract(),
        5 => bound(),
        6 => tightness(),
        7 => worked_example(),
        8 => orthogonal(),
        9 => mixed(),
        10 => determinism(),
        _ => Err(crate::Error::Usage(format!("no criterion {k}"))),
    }
}

/// Criteria 1 to 9 merged into one report; check names are prefixed with
/// the criterion number. Determinism is left to callers that can afford a
/// second pass.
pub fn run_suite() -> Result<Report> {
    let mut r = Report::new("selftest");
    for k in 1..CRITERIA {
        let part = run_criterion(k)?;
        for c in part.checks {
            r.checks.push(Check { name: format!("c{k}.{}", c.name), ..c });
        }
        for (key, v) in part.values {
            r.values.push((format!("c{k}.{key}"), v));
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_of_three() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
        assert_eq!(p[5], vec![2, 1, 0]);
    }

    #[test]
    fn worked_example_passes() {
        let r = run_criterion(7).unwrap();
        assert!(r.failed_checks().is_empty(), "{}", r.render());
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_criterion(11).is_err());
        assert!(run_criterion(0).is_err());
    }
}
