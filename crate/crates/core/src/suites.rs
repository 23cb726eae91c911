//! Seeded property suites behind `check`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{check_lemma_1_2, scalar_recursion};
use crate::engine::direct::reduction_suite;
use crate::error::{Error, Result};
use crate::operators::{check_nonexpansive, fixed_set, lipschitz_ratio, DomainSpec, OperatorSpec};
use crate::schedules::ScheduleSpec;
use crate::space::{continuity_probe, dual_norm, duality_map, generalized_duality_map, pairing, SpaceSpec, Vector};

pub const SUITES: [&str; 5] = ["duality", "lemma12", "lemma13", "operators", "reductions"];

pub const DUALITY_TOL: f64 = 1e-10;
pub const LEMMA12_TOL: f64 = 1e-9;
pub const LEMMA13_BOUND: f64 = 1e-2;
pub const LEMMA13_N: u64 = 100_000;
pub const REDUCTION_TOL: f64 = 1e-12;
pub const NONEXPANSIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation measured, in the suite's own units.
    pub max_violation: f64,
    pub lines: Vec<String>,
}

fn line(ok: bool, text: String) -> String {
    format!("  [{}] {text}", if ok { "ok" } else { "FAIL" })
}

/// Worst relative errors of `⟨x, Jx⟩ = ‖x‖²` and `‖Jx‖_q = ‖x‖` over
/// `samples` points drawn with per-coordinate scales spanning many decades.
pub fn duality_identity_violation(space: SpaceSpec, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pair_err, mut norm_err) = (0.0_f64, 0.0_f64);
    for _ in 0..samples {
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let coords: Vec<f64> = (0..space.dim()).map(|_| scale * rng.gen_range(-1.0..=1.0)).collect();
        let x = Vector::new(space, coords).expect("finite draw");
        let j = duality_map(&x);
        let n = x.norm();
        let ip = pairing(&x, &j).expect("same space");
        pair_err = pair_err.max((ip - n * n).abs() / (n * n).max(1.0));
        norm_err = norm_err.max((dual_norm(&j) - n).abs() / n.max(1.0));
    }
    (pair_err, norm_err)
}

pub fn duality_suite(seed: u64) -> SuiteResult {
    let mut lines = Vec::new();
    let mut worst = 0.0_f64;
    for p in [1.5, 2.0, 3.0, 4.0] {
        for d in [2, 10] {
            let space = SpaceSpec::new(d, p).expect("catalog space");
            let (a, b) = duality_identity_violation(space, 10_000, seed);
            worst = worst.max(a).max(b);
            lines.push(line(
                a <= DUALITY_TOL && b <= DUALITY_TOL,
                format!("p={p} d={d}: pairing {a:.3e}, dual norm {b:.3e} (10000 samples)"),
            ));
        }
    }
    // homogeneity, oddness, gauge-2 coincidence
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let mut homog = 0.0_f64;
    let mut odd_ok = true;
    let mut gauge_ok = true;
    for p in [1.5, 3.0] {
        let space = SpaceSpec::new(3, p).expect("catalog space");
        for _ in 0..1000 {
            let x = Vector::new(space, (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect()).expect("finite");
            let lam = rng.gen_range(0.01..100.0);
            let jx = duality_map(&x);
            let jl = duality_map(&x.scale(lam));
            let diff = jl.distance(&jx.scale(lam)).expect("same space");
            homog = homog.max(diff / (lam * jx.norm()).max(1.0));
            odd_ok &= duality_map(&x.scale(-1.0)).coords() == jx.scale(-1.0).coords();
            gauge_ok &= generalized_duality_map(&x, 2.0).expect("gauge 2").coords() == jx.coords();
        }
    }
    lines.push(line(homog <= 1e-12, format!("J(λx) = λJ(x): {homog:.3e}")));
    lines.push(line(odd_ok, "J(−x) = −J(x) exactly".into()));
    lines.push(line(gauge_ok, "J_2 equals J bit for bit".into()));
    let space = SpaceSpec::new(2, 3.0).expect("catalog space");
    let deltas = [0.0, 1e-3, 1e-2, 1e-1, 1.0];
    let probes: Vec<f64> = deltas.iter().map(|&d| continuity_probe(space, 1.0, d, 2000, seed)).collect();
    let monotone = probes.windows(2).all(|w| w[0] <= w[1]);
    let shown: Vec<String> = probes.iter().map(|v| format!("{v:.3e}")).collect();
    lines.push(line(monotone, format!("continuity probe in l_3 non-decreasing in δ: {}", shown.join(" "))));
    worst = worst.max(homog);
    SuiteResult {
        name: "duality",
        passed: worst <= DUALITY_TOL && odd_ok && gauge_ok && monotone,
        max_violation: worst,
        lines,
    }
}

pub fn lemma12_suite(seed: u64) -> SuiteResult {
    let mut lines = Vec::new();
    let mut passed = true;
    let mut worst = f64::NEG_INFINITY;
    for (p, gauge) in [(2.0, 2.0), (2.0, 3.0), (3.0, 3.0), (1.5, 2.0)] {
        let space = SpaceSpec::new(3, p).expect("catalog space");
        let r = check_lemma_1_2(space, gauge, 10_000, seed, 10.0).expect("valid gauge");
        passed &= r.passed;
        worst = worst.max(r.max_violation / r.scale);
        lines.push(line(
            r.passed,
            format!(
                "p={p} π={gauge}: max ‖x+y‖^π − ‖x‖^π − π⟨y, J_π(x+y)⟩ = {:.3e} (limit {:.3e})",
                r.max_violation,
                LEMMA12_TOL * r.scale
            ),
        ));
    }
    SuiteResult {
        name: "lemma12",
        passed,
        max_violation: worst,
        lines,
    }
}

/// `a_0 = 1`, `t_n = 1/(n+2)`, `b_n = 1/(n+1)²`, `c_n = 2^{−n}`.
pub fn lemma13_default() -> Result<(ScheduleSpec, ScheduleSpec, ScheduleSpec)> {
    Ok((
        ScheduleSpec::power(1.0, 1.0, 2)?,
        ScheduleSpec::power(1.0, 2.0, 1)?,
        ScheduleSpec::geometric(1.0, 0.5)?,
    ))
}

pub fn lemma13_suite(_seed: u64) -> SuiteResult {
    let (t, b, c) = lemma13_default().expect("valid schedules");
    let seq = scalar_recursion(1.0, &t, &b, &c, LEMMA13_N).expect("valid recursion");
    let a_n = *seq.last().expect("nonempty");
    let nonneg = seq.iter().all(|&a| a >= 0.0);
    let lines = vec![
        line(a_n <= LEMMA13_BOUND, format!("a_{LEMMA13_N} = {a_n:.6e} (bound {LEMMA13_BOUND:e})")),
        line(nonneg, "sequence nonnegative".into()),
    ];
    SuiteResult {
        name: "lemma13",
        passed: a_n <= LEMMA13_BOUND && nonneg,
        max_violation: a_n,
        lines,
    }
}

/// Catalog instances with a nonexpansive claim, each with a sampling domain.
pub fn nonexpansive_catalog() -> Vec<(&'static str, SpaceSpec, OperatorSpec, DomainSpec)> {
    let l2 = SpaceSpec::euclidean(2);
    let l3 = SpaceSpec::new(3, 3.0).expect("catalog space");
    let l15 = SpaceSpec::new(2, 1.5).expect("catalog space");
    let square = DomainSpec::Box { lo: vec![-3.0; 2], hi: vec![3.0; 2] };
    let cube = DomainSpec::Box { lo: vec![-3.0; 3], hi: vec![3.0; 3] };
    let rot = OperatorSpec::rotation(0.7, vec![0.2, -0.1]);
    let clamp2 = OperatorSpec::box_clamp(vec![0.0, 0.0], vec![1.0, 1.0]);
    let seg = OperatorSpec::segment_projection(vec![0.0, 0.0], vec![1.0, 0.5]);
    vec![
        ("rotation2d in l_2", l2, rot.clone(), square.clone()),
        ("box_clamp in l_3", l3, OperatorSpec::box_clamp(vec![-1.0; 3], vec![0.5, 1.0, 2.0]), cube.clone()),
        ("box_clamp in l_1.5", l15, clamp2.clone(), square.clone()),
        ("segment_projection in l_2", l2, seg.clone(), square.clone()),
        ("convex_combination in l_2", l2, OperatorSpec::convex(0.3, rot.clone(), seg.clone()), square.clone()),
        ("composition in l_2", l2, OperatorSpec::compose(clamp2.clone(), rot), square.clone()),
        ("composition in l_1.5", l15, OperatorSpec::compose(clamp2.clone(), OperatorSpec::Identity), square),
        ("identity in l_3", l3, OperatorSpec::Identity, cube),
    ]
}

/// The pair `x = (√2/2, √2/2)`, `y = 0` under a quarter-turn-and-a-half
/// rotation in `ℓ_3`: ratio `2^{1/6}`.
pub fn rotation_l3_adversarial_ratio() -> Result<f64> {
    let l3 = SpaceSpec::new(2, 3.0)?;
    let op = OperatorSpec::rotation(std::f64::consts::FRAC_PI_4, vec![0.0, 0.0]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    lipschitz_ratio(&op, &l3.vector(vec![h, h])?, &l3.zero())
}

pub fn operators_suite(seed: u64) -> SuiteResult {
    let mut lines = Vec::new();
    let mut passed = true;
    let mut worst = 0.0_f64;
    for (name, space, op, domain) in nonexpansive_catalog() {
        let claimed = op.claims_nonexpansive(space);
        let r = check_nonexpansive(&op, space, &domain, 10_000, seed).expect("valid operator");
        let ok = claimed && r.nonexpansive(NONEXPANSIVE_TOL);
        passed &= ok;
        worst = worst.max(r.ratio - 1.0);
        lines.push(line(ok, format!("{name}: sampled ratio {:.12} (10000 pairs)", r.ratio)));
        let fixed = fixed_set(&op, space);
        if fixed.is_known() {
            let grid = fixed.grid(space, 21);
            let res = grid
                .iter()
                .map(|p| op.apply(p).and_then(|tp| tp.distance(p)).unwrap_or(f64::INFINITY))
                .fold(0.0_f64, f64::max);
            passed &= res <= 1e-12;
            lines.push(line(res <= 1e-12, format!("{name}: fixed-set residual {res:.3e} on {} points", grid.len())));
        }
    }
    match rotation_l3_adversarial_ratio() {
        Ok(ratio) => {
            let ok = ratio > 1.05;
            passed &= ok;
            lines.push(line(ok, format!("rotation2d(π/4) in l_3 rejected: adversarial ratio {ratio:.6}")));
        }
        Err(e) => {
            passed = false;
            lines.push(line(false, format!("adversarial pair: {e}")));
        }
    }
    SuiteResult {
        name: "operators",
        passed,
        max_violation: worst.max(0.0),
        lines,
    }
}

pub fn reductions_suite(seed: u64) -> SuiteResult {
    match reduction_suite(seed, 1000) {
        Ok(gaps) => {
            let worst = gaps.iter().map(|g| g.max_gap).fold(0.0_f64, f64::max);
            let lines = gaps
                .iter()
                .map(|g| line(g.max_gap <= REDUCTION_TOL, format!("{}: max per-step gap {:.3e} over {} steps", g.scheme, g.max_gap, g.steps)))
                .collect();
            SuiteResult {
                name: "reductions",
                passed: worst <= REDUCTION_TOL,
                max_violation: worst,
                lines,
            }
        }
        Err(e) => SuiteResult {
            name: "reductions",
            passed: false,
            max_violation: f64::INFINITY,
            lines: vec![line(false, e.to_string())],
        },
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteResult> {
    Ok(match name {
        "duality" => duality_suite(seed),
        "lemma12" => lemma12_suite(seed),
        "lemma13" => lemma13_suite(seed),
        "operators" => operators_suite(seed),
        "reductions" => reductions_suite(seed),
        other => return Err(Error::InvalidArgument(format!("unknown suite {other:?}"))),
    })
}

/// Runs the suites concurrently; results come back in input order.
pub fn run_suites(names: &[&str], seed: u64) -> Result<Vec<SuiteResult>> {
    for n in names {
        if !SUITES.contains(n) {
            return Err(Error::InvalidArgument(format!("unknown suite {n:?}")));
        }
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = names.iter().map(|n| s.spawn(move || run_suite(n, seed))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::InvalidArgument("suite panicked".into()))))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_suites_pass() {
        for name in ["lemma13", "operators"] {
            let r = run_suite(name, 3).unwrap();
            assert!(r.passed, "{name}: {:#?}", r.lines);
        }
    }

    #[test]
    fn adversarial_rotation_pair() {
        // ‖(1,0)‖_3 / ‖(h,h)‖_3 = 1 / (2 h³)^{1/3} = 2^{1/6}
        let r = rotation_l3_adversarial_ratio().unwrap();
        assert!((r - 2f64.powf(1.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn ordered_and_unknown() {
        let out = run_suites(&["lemma13", "operators"], 1).unwrap();
        assert_eq!(out.iter().map(|r| r.name).collect::<Vec<_>>(), ["lemma13", "operators"]);
        assert!(run_suites(&["nope"], 1).is_err());
    }
}
