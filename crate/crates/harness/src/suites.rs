//! Randomized verification suites, one per bound family.
//!
//! Each suite has one or more configurations. Trial `t` of configuration `c`
//! uses the seed `derive_seed(derive_seed(derive_seed(base, suite), c), t)`,
//! so a trial replays alone from `(suite, config, seed)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use opineq_core::bounds::{
    admissible, alpha_difference_bound, arg_mixtures, difference_bound, general_bound, ratio_bound, special_g,
    BoundReport, FKind, GSign, InequalityInstance, Side, SpecialKind,
};
use opineq_core::hyperfunc::{BoxDomain, MultiFunc, ScalarFunc1D};
use opineq_core::random::{derive_seed, seeded, uniform, uniform_in, uniform_int, Rng64};
use opineq_core::sobolev::{
    constant_c2, constant_c3, embedding_norms, lemma_c2_violations, lemma_c3_violations, sobolev_conjugate,
    sobolev_constants, verify_sobolev_mean, verify_sobolev_original, SobolevExponents,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::generate::{build_instance, InstanceSpec, MapKind, WeightMode, DEFAULT_ENVELOPE_GRID};

type F1 = ScalarFunc1D<f64>;

/// Slack on spectra of the mixtures `T_i`.
pub const MIXTURE_SPECTRUM_TOL: f64 = 1e-8;

/// Points per axis of the scalar lemma grids.
pub const LEMMA_GRID: usize = 201;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "thm2.3")]
    Thm23,
    #[serde(rename = "thm2.4")]
    Thm24,
    #[serde(rename = "thm2.9")]
    Thm29,
    #[serde(rename = "thm2.15")]
    Thm215,
    #[serde(rename = "cor-g")]
    CorG,
    #[serde(rename = "sobolev")]
    Sobolev,
    #[serde(rename = "sobolev-mean")]
    SobolevMean,
    #[serde(rename = "kantorovich")]
    Kantorovich,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Thm23,
        Suite::Thm24,
        Suite::Thm29,
        Suite::Thm215,
        Suite::CorG,
        Suite::Sobolev,
        Suite::SobolevMean,
        Suite::Kantorovich,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Suite::Thm23 => "thm2.3",
            Suite::Thm24 => "thm2.4",
            Suite::Thm29 => "thm2.9",
            Suite::Thm215 => "thm2.15",
            Suite::CorG => "cor-g",
            Suite::Sobolev => "sobolev",
            Suite::SobolevMean => "sobolev-mean",
            Suite::Kantorovich => "kantorovich",
        }
    }

    fn index(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64
    }

    pub fn configs(self) -> Vec<Config> {
        match self {
            Suite::Thm23 => vec![Config::General],
            Suite::Thm24 => [-1.0, 0.5, 1.0, 2.0].into_iter().map(Config::Alpha).collect(),
            Suite::Thm29 => vec![
                Config::Ratio(GKind::Power(-1.0)),
                Config::Ratio(GKind::Power(0.5)),
                Config::Ratio(GKind::Power(2.0)),
                Config::Ratio(GKind::Exp),
                Config::Ratio(GKind::LogPositive),
                Config::Ratio(GKind::LogNegative),
            ],
            Suite::Thm215 => vec![Config::General],
            Suite::CorG => vec![
                Config::Special(SpecialTag::Power),
                Config::Special(SpecialTag::Log),
                Config::Special(SpecialTag::Exp),
            ],
            Suite::Sobolev => vec![Config::Sobolev { m: 3, p: 2.0 }, Config::Sobolev { m: 4, p: 2.0 }],
            Suite::SobolevMean => vec![Config::Sobolev { m: 3, p: 2.0 }, Config::Sobolev { m: 4, p: 2.0 }],
            Suite::Kantorovich => vec![Config::Kantorovich],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.tag() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GKind {
    Power(f64),
    Exp,
    LogPositive,
    LogNegative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpecialTag {
    Power,
    Log,
    Exp,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Config {
    General,
    Alpha(f64),
    Ratio(GKind),
    Special(SpecialTag),
    Sobolev { m: u32, p: f64 },
    Kantorovich,
}

impl Config {
    pub fn name(&self) -> String {
        match self {
            Config::General => "general".into(),
            Config::Alpha(a) => format!("alpha={a}"),
            Config::Ratio(GKind::Power(q)) => format!("power({q})"),
            Config::Ratio(GKind::Exp) => "exp".into(),
            Config::Ratio(GKind::LogPositive) => "log+".into(),
            Config::Ratio(GKind::LogNegative) => "log-".into(),
            Config::Special(SpecialTag::Power) => "power".into(),
            Config::Special(SpecialTag::Log) => "log".into(),
            Config::Special(SpecialTag::Exp) => "exp".into(),
            Config::Sobolev { m, p } => format!("m={m},p={p}"),
            Config::Kantorovich => "m=1,M=2".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub holds: bool,
    pub margin: f64,
    pub tolerance: f64,
    pub constant: Option<f64>,
    pub argpoint: Vec<f64>,
}

impl CheckOutcome {
    fn from_report(name: &str, r: &BoundReport<f64>) -> Self {
        Self {
            name: name.into(),
            holds: r.verdict.holds,
            margin: r.verdict.margin,
            tolerance: r.verdict.tolerance,
            constant: Some(r.scalar_constant),
            argpoint: r.argpoint.clone(),
        }
    }

    /// A scalar check `value <= limit`; the margin is `limit - value`.
    fn scalar(name: &str, value: f64, limit: f64, constant: Option<f64>) -> Self {
        Self {
            name: name.into(),
            holds: value <= limit,
            margin: limit - value,
            tolerance: 0.0,
            constant,
            argpoint: vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub config: String,
    pub seed: u64,
    pub n: usize,
    pub dim: usize,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
    pub spectrum_violations: usize,
    pub envelope_nodes: usize,
    pub envelope_violations: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub passed: usize,
    pub failed: usize,
    pub worst_margin: Option<f64>,
    /// Smallest `margin / tolerance`; below `-1` means failure.
    pub worst_margin_over_tol: Option<f64>,
    pub constant_min: Option<f64>,
    pub constant_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub config: String,
    pub seed: u64,
    pub check: String,
    pub margin: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials_per_config: usize,
    pub tol: f64,
    pub passed: usize,
    pub failed: usize,
    pub configs: Vec<ConfigSummary>,
    /// Keyed by `config/check`.
    pub checks: BTreeMap<String, CheckSummary>,
    pub spectrum_violations: usize,
    pub envelope_violations: usize,
    pub envelope_nodes: usize,
    pub failures: Vec<FailureRecord>,
    pub outcomes: Vec<TrialOutcome>,
    pub wall_time_secs: f64,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

pub fn trial_seed(base: u64, suite: Suite, config_index: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(derive_seed(base, suite.index()), config_index as u64), trial as u64)
}

/// Runs `trials` trials of every configuration of `suite` on up to `threads`
/// worker threads. Results do not depend on `threads`.
pub fn run_suite(suite: Suite, trials: usize, seed: u64, tol: f64, threads: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let configs = suite.configs();
    let tasks: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::Usage(format!("thread pool: {e}")))?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, t)| run_trial(suite, &configs[c], trial_seed(seed, suite, c, t), tol))
            .collect()
    });

    let mut report = SuiteReport {
        suite,
        seed,
        trials_per_config: trials,
        tol,
        passed: 0,
        failed: 0,
        configs: configs
            .iter()
            .map(|c| ConfigSummary {
                name: c.name(),
                trials: 0,
                passed: 0,
                failed: 0,
            })
            .collect(),
        checks: BTreeMap::new(),
        spectrum_violations: 0,
        envelope_violations: 0,
        envelope_nodes: 0,
        failures: vec![],
        outcomes: vec![],
        wall_time_secs: 0.0,
    };
    for ((c, _), o) in tasks.iter().zip(&outcomes) {
        let cs = &mut report.configs[*c];
        cs.trials += 1;
        if o.passed {
            cs.passed += 1;
            report.passed += 1;
        } else {
            cs.failed += 1;
            report.failed += 1;
        }
        report.spectrum_violations += o.spectrum_violations;
        report.envelope_violations += o.envelope_violations;
        report.envelope_nodes += o.envelope_nodes;
        if let Some(e) = &o.error {
            report.failures.push(FailureRecord {
                config: o.config.clone(),
                seed: o.seed,
                check: "error".into(),
                margin: None,
                error: Some(e.clone()),
            });
        }
        for ch in &o.checks {
            let s = report.checks.entry(format!("{}/{}", o.config, ch.name)).or_default();
            if ch.holds {
                s.passed += 1;
            } else {
                s.failed += 1;
                report.failures.push(FailureRecord {
                    config: o.config.clone(),
                    seed: o.seed,
                    check: ch.name.clone(),
                    margin: Some(ch.margin),
                    error: None,
                });
            }
            let min = |a: Option<f64>, b: f64| Some(a.map_or(b, |a| a.min(b)));
            let max = |a: Option<f64>, b: f64| Some(a.map_or(b, |a| a.max(b)));
            s.worst_margin = min(s.worst_margin, ch.margin);
            if ch.tolerance > 0.0 {
                s.worst_margin_over_tol = min(s.worst_margin_over_tol, ch.margin / ch.tolerance);
            }
            if let Some(k) = ch.constant {
                s.constant_min = min(s.constant_min, k);
                s.constant_max = max(s.constant_max, k);
            }
        }
    }
    report.outcomes = outcomes;
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Re-runs one trial from its configuration name and seed.
pub fn replay_trial(suite: Suite, config: &str, seed: u64, tol: f64) -> Result<TrialOutcome> {
    let c = suite
        .configs()
        .into_iter()
        .find(|c| c.name() == config)
        .ok_or_else(|| HarnessError::Usage(format!("suite {suite} has no configuration {config:?}")))?;
    Ok(run_trial(suite, &c, seed, tol))
}

/// Spec of the random instance used by a trial.
pub fn trial_spec(suite: Suite, config: &Config, seed: u64) -> InstanceSpec {
    let mut rng = seeded(derive_seed(seed, 0x5eed));
    let rng = &mut rng;
    match (suite, *config) {
        (Suite::Kantorovich, _) => {
            let k = uniform_int(rng, 1, 3);
            base_spec(rng, seed, 8, vec![k], vec![[1.0, 2.0]], separable(vec![F1::Reciprocal]), composite(vec![1.0], F1::power(-1.0)))
        }
        (_, Config::Ratio(kind)) => ratio_spec(rng, seed, kind),
        (_, Config::Special(tag)) => special_spec(rng, seed, tag),
        (Suite::Sobolev, _) => sobolev_spec(rng, seed, true),
        (Suite::SobolevMean, _) => sobolev_spec(rng, seed, false),
        _ => general_spec(rng, seed),
    }
}

fn separable(us: Vec<F1>) -> MultiFunc<f64> {
    MultiFunc::separable(us).expect("nonempty")
}

fn composite(beta: Vec<f64>, outer: F1) -> MultiFunc<f64> {
    MultiFunc::composite(beta, outer).expect("nonnegative weights")
}

fn pick<T: Clone>(rng: &mut Rng64, items: &[T]) -> T {
    items[uniform_int(rng, 0, items.len() - 1)].clone()
}

fn base_spec(
    rng: &mut Rng64,
    seed: u64,
    max_dim: usize,
    ks: Vec<usize>,
    boxes: Vec<[f64; 2]>,
    f: MultiFunc<f64>,
    g: MultiFunc<f64>,
) -> InstanceSpec {
    let dim = uniform_int(rng, 1, max_dim);
    let map = match uniform_int(rng, 0, 3) {
        0 => MapKind::Identity,
        1 => MapKind::Pinching,
        _ => MapKind::RandomKraus {
            n_kraus: uniform_int(rng, 1, 3),
        },
    };
    let weights = if uniform(rng) < 0.5 {
        WeightMode::Uniform
    } else {
        WeightMode::RandomDirichlet
    };
    InstanceSpec {
        seed,
        dim,
        ks,
        boxes,
        f,
        g,
        map,
        weights,
        envelope_grid: DEFAULT_ENVELOPE_GRID,
    }
}

/// `n` in `1..=3`, biased towards small arity.
fn draw_arity(rng: &mut Rng64) -> usize {
    pick(rng, &[1, 1, 2, 2, 2, 3])
}

fn draw_ks(rng: &mut Rng64, n: usize) -> Vec<usize> {
    (0..n).map(|_| uniform_int(rng, 1, 3)).collect()
}

fn draw_boxes(rng: &mut Rng64, n: usize, lo: (f64, f64), width: (f64, f64)) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let m = uniform_in(rng, lo.0, lo.1);
            [m, m + uniform_in(rng, width.0, width.1)]
        })
        .collect()
}

fn draw_beta(rng: &mut Rng64, n: usize, range: (f64, f64)) -> Vec<f64> {
    (0..n).map(|_| uniform_in(rng, range.0, range.1)).collect()
}

fn s_range(beta: &[f64], boxes: &[[f64; 2]]) -> (f64, f64) {
    let lo = beta.iter().zip(boxes).map(|(b, x)| b * x[0]).sum();
    let hi = beta.iter().zip(boxes).map(|(b, x)| b * x[1]).sum();
    (lo, hi)
}

/// Outer functions defined on `(0, ∞)`.
fn random_outer(rng: &mut Rng64) -> F1 {
    match uniform_int(rng, 0, 7) {
        0 => F1::Exp,
        1 => F1::Log,
        2 => F1::power(0.5),
        3 => F1::power(2.0),
        4 => F1::power(3.0),
        5 => F1::power(-1.0),
        6 => F1::Reciprocal,
        _ => F1::polynomial((0..3).map(|_| uniform_in(rng, -1.0, 1.0)).collect()),
    }
}

/// Outer functions positive on `[s_lo, ∞)`, `s_lo > 0`.
fn positive_outer(rng: &mut Rng64, s_lo: f64) -> F1 {
    let mut options = vec![F1::Exp, F1::power(-1.0), F1::power(0.5), F1::power(2.0)];
    if s_lo > 1.0 {
        options.push(F1::Log);
    }
    pick(rng, &options)
}

/// Outer functions positive with derivative bounded away from zero on
/// `[s_lo, ∞)`.
fn monotone_outer(rng: &mut Rng64, s_lo: f64) -> F1 {
    let mut options = vec![F1::Exp, F1::power(2.0), F1::power(0.5), F1::power(3.0)];
    options.push(F1::affine(uniform_in(rng, 0.5, 2.0), uniform_in(rng, 0.1, 1.0)));
    if s_lo > 1.05 {
        options.push(F1::Log);
    }
    pick(rng, &options)
}

/// Half composites sharing `β` between `f` and `g`, half separable pairs.
fn general_spec(rng: &mut Rng64, seed: u64) -> InstanceSpec {
    let n = draw_arity(rng);
    let ks = draw_ks(rng, n);
    let boxes = draw_boxes(rng, n, (0.2, 1.0), (0.5, 1.5));
    let (f, g) = if uniform(rng) < 0.5 {
        let beta = draw_beta(rng, n, (0.2, 1.0));
        let (s_lo, _) = s_range(&beta, &boxes);
        let f = composite(beta.clone(), random_outer(rng));
        let g = composite(beta, positive_outer(rng, s_lo));
        (f, g)
    } else {
        let f = separable((0..n).map(|_| random_outer(rng)).collect());
        let g = separable(boxes.iter().map(|b| positive_outer(rng, b[0])).collect());
        (f, g)
    };
    base_spec(rng, seed, 8, ks, boxes, f, g)
}

fn ratio_spec(rng: &mut Rng64, seed: u64, kind: GKind) -> InstanceSpec {
    let n = draw_arity(rng);
    let ks = draw_ks(rng, n);
    let (boxes, beta) = match kind {
        GKind::LogPositive => (draw_boxes(rng, n, (1.05, 1.5), (0.3, 1.0)), draw_beta(rng, n, (1.0, 1.2))),
        GKind::LogNegative => (
            draw_boxes(rng, n, (0.2, 0.5), (0.3, 1.0)),
            draw_beta(rng, n, (0.1, 0.6 / n as f64)),
        ),
        _ => (draw_boxes(rng, n, (0.2, 1.0), (0.5, 1.5)), draw_beta(rng, n, (0.2, 1.0))),
    };
    let f = composite(beta.clone(), random_outer(rng));
    let outer = match kind {
        GKind::Power(q) => F1::power(q),
        GKind::Exp => F1::Exp,
        GKind::LogPositive | GKind::LogNegative => F1::Log,
    };
    base_spec(rng, seed, 8, ks, boxes, f, composite(beta, outer))
}

fn special_spec(rng: &mut Rng64, seed: u64, tag: SpecialTag) -> InstanceSpec {
    let n = draw_arity(rng);
    let ks = draw_ks(rng, n);
    let boxes = draw_boxes(rng, n, (0.2, 1.0), (0.5, 1.5));
    let beta = draw_beta(rng, n, (0.2, 1.0));
    let f = composite(beta.clone(), random_outer(rng));
    let outer = match tag {
        SpecialTag::Power => F1::power(pick(rng, &[-1.0, 0.5, 2.0, 3.0])),
        SpecialTag::Log => F1::Log,
        SpecialTag::Exp => F1::Exp,
    };
    base_spec(rng, seed, 8, ks, boxes, f, composite(beta, outer))
}

/// Positive `f` with nonvanishing gradient. The mean variant needs `|f|^p`
/// in closed form, so it only draws composites or one-variable functions.
fn sobolev_spec(rng: &mut Rng64, seed: u64, allow_separable: bool) -> InstanceSpec {
    let n = uniform_int(rng, 1, 2);
    let ks = draw_ks(rng, n);
    let boxes = draw_boxes(rng, n, (0.2, 1.5), (0.5, 1.0));
    let f = if n == 1 || (allow_separable && uniform(rng) < 0.5) {
        separable(boxes.iter().map(|b| monotone_outer(rng, b[0])).collect())
    } else {
        let beta = draw_beta(rng, n, (0.3, 1.0));
        let (s_lo, _) = s_range(&beta, &boxes);
        composite(beta, monotone_outer(rng, s_lo))
    };
    base_spec(rng, seed, 6, ks, boxes, f.clone(), f)
}

/// Mixture spectra outside their box intervals, by more than the slack.
fn spectrum_violations(inst: &InequalityInstance<f64>) -> opineq_core::Result<usize> {
    let bx = inst.box_domain();
    let mut bad = 0;
    for (i, t) in arg_mixtures(inst)?.iter().enumerate() {
        for e in t.eigenvalues()? {
            if e < bx.lo(i) - MIXTURE_SPECTRUM_TOL || e > bx.hi(i) + MIXTURE_SPECTRUM_TOL {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

fn run_trial(suite: Suite, config: &Config, seed: u64, tol: f64) -> TrialOutcome {
    let spec = trial_spec(suite, config, seed);
    let mut out = TrialOutcome {
        config: config.name(),
        seed,
        n: spec.n(),
        dim: spec.dim,
        passed: false,
        checks: vec![],
        spectrum_violations: 0,
        envelope_nodes: 0,
        envelope_violations: 0,
        error: None,
    };
    let inst = match build_instance(&spec) {
        Ok(mut inst) => {
            inst.set_verdict_tol(tol);
            inst
        }
        Err(e) => {
            if let HarnessError::Core(opineq_core::Error::EnvelopeViolated { violations, .. }) = &e {
                out.envelope_violations = *violations;
            }
            out.error = Some(e.to_string());
            return out;
        }
    };
    if let Some(chk) = inst.envelope_check() {
        out.envelope_nodes = chk.nodes;
        out.envelope_violations = chk.violations;
    }
    let result = spectrum_violations(&inst).and_then(|v| {
        out.spectrum_violations = v;
        checks_for(suite, config, &inst, &mut out.checks)
    });
    if let Err(e) = result {
        out.error = Some(e.to_string());
    }
    out.passed = out.error.is_none()
        && out.spectrum_violations == 0
        && out.envelope_violations == 0
        && out.checks.iter().all(|c| c.holds);
    out
}

fn checks_for(
    suite: Suite,
    config: &Config,
    inst: &InequalityInstance<f64>,
    out: &mut Vec<CheckOutcome>,
) -> opineq_core::Result<()> {
    let sides = [(Side::Upper, "upper"), (Side::Lower, "lower")];
    match (suite, *config) {
        (Suite::Thm23, _) => {
            let alpha = [-1.0, 0.0, 0.5, 1.0, 2.0][(inst_hash(inst) % 5) as usize];
            for fk in [FKind::Difference(alpha), FKind::Congruence] {
                if !admissible(inst, fk) {
                    continue;
                }
                let name = match fk {
                    FKind::Difference(_) => "difference",
                    FKind::Congruence => "congruence",
                };
                for (side, s) in sides {
                    let r = general_bound(inst, fk, side)?;
                    out.push(CheckOutcome::from_report(&format!("{name}-{s}"), &r));
                }
            }
        }
        (Suite::Thm24, Config::Alpha(alpha)) => {
            if !admissible(inst, FKind::Difference(alpha)) {
                out.push(CheckOutcome::scalar("admissible", 1.0, 0.0, None));
                return Ok(());
            }
            for (side, s) in sides {
                let r = alpha_difference_bound(inst, alpha, side)?;
                out.push(CheckOutcome::from_report(s, &r));
                if alpha == 1.0 {
                    let d = difference_bound(inst, side)?;
                    let gap = (r.rhs.matrix() - d.rhs.matrix()).max_abs();
                    out.push(CheckOutcome::scalar(&format!("consistency-{s}"), gap, 1e-12, None));
                }
            }
        }
        (Suite::Thm29, Config::Ratio(kind)) => {
            let beta = match inst.g().form() {
                opineq_core::hyperfunc::Form::CompositeAffine { beta, .. } => beta.clone(),
                _ => unreachable!("ratio suites draw composite g"),
            };
            let sk = match kind {
                GKind::Power(q) => SpecialKind::Power { q },
                GKind::Exp => SpecialKind::Exp,
                GKind::LogPositive | GKind::LogNegative => SpecialKind::Log,
            };
            let sg = special_g(sk, beta, inst.box_domain())?;
            let expected = match kind {
                GKind::LogNegative => GSign::Negative,
                _ => GSign::Positive,
            };
            if matches!(kind, GKind::LogPositive | GKind::LogNegative) {
                let (lo, hi) = sg.s_range;
                let want = if lo.ln() > 0.0 && hi.ln() > 0.0 {
                    Some(GSign::Positive)
                } else if lo.ln() < 0.0 && hi.ln() < 0.0 {
                    Some(GSign::Negative)
                } else {
                    None
                };
                let ok = sg.sign == want && want == Some(expected);
                out.push(CheckOutcome::scalar("routing", if ok { 0.0 } else { 1.0 }, 0.0, None));
            }
            let sign = sg.sign.unwrap_or(expected);
            if !admissible(inst, FKind::Congruence) {
                out.push(CheckOutcome::scalar("admissible", 1.0, 0.0, None));
                return Ok(());
            }
            for (side, s) in sides {
                let r = ratio_bound(inst, side, sign)?;
                out.push(CheckOutcome::from_report(s, &r));
            }
        }
        (Suite::Thm215, _) | (Suite::CorG, _) => {
            if !admissible(inst, FKind::Difference(1.0)) {
                out.push(CheckOutcome::scalar("admissible", 1.0, 0.0, None));
                return Ok(());
            }
            for (side, s) in sides {
                let r = difference_bound(inst, side)?;
                out.push(CheckOutcome::from_report(s, &r));
            }
        }
        (Suite::Sobolev, Config::Sobolev { m, p }) => sobolev_checks(inst, &sobolev_conjugate(m, p)?, out)?,
        (Suite::SobolevMean, Config::Sobolev { m, p }) => {
            let r = verify_sobolev_mean(inst, &sobolev_conjugate(m, p)?)?;
            out.push(CheckOutcome::from_report("mean", &r));
        }
        (Suite::Kantorovich, _) => {
            let r = ratio_bound(inst, Side::Upper, GSign::Positive)?;
            out.push(CheckOutcome::from_report("upper", &r));
            let (m, big_m) = (1.0, 2.0);
            let formula: f64 = (big_m + m) * (big_m + m) / (4.0 * big_m * m);
            out.push(CheckOutcome::scalar(
                "constant",
                (r.scalar_constant - formula).abs(),
                1e-6,
                Some(r.scalar_constant),
            ));
        }
        _ => unreachable!("configuration does not belong to suite"),
    }
    Ok(())
}

fn sobolev_checks(
    inst: &InequalityInstance<f64>,
    exps: &SobolevExponents<f64>,
    out: &mut Vec<CheckOutcome>,
) -> opineq_core::Result<()> {
    let r = verify_sobolev_original(inst, exps)?;
    out.push(CheckOutcome::from_report("original", &r));

    let k = sobolev_constants(inst, exps)?;
    let identity_gap = (k.c1 - k.c3_prime / k.c2).abs();
    out.push(CheckOutcome::scalar("c1-identity", identity_gap, 1e-12 * (1.0 + k.c1.abs()), Some(k.c1)));

    let bx: &BoxDomain<f64> = inst.box_domain();
    let c2 = constant_c2(inst.f(), bx, exps)?;
    let bad = lemma_c2_violations(inst.f(), bx, exps, c2, LEMMA_GRID)?;
    out.push(CheckOutcome::scalar("lemma-c2-grid", bad as f64, 0.0, Some(c2)));
    let c3 = constant_c3(inst.f(), bx, exps)?;
    let bad = lemma_c3_violations(inst.f(), bx, exps, c3, LEMMA_GRID)?;
    out.push(CheckOutcome::scalar("lemma-c3-grid", bad as f64, 0.0, Some(c3)));

    let norms = embedding_norms(inst, exps)?;
    let limit = r.scalar_constant * norms.w_norm * (1.0 + 1e-8) + 1e-12;
    let mut emb = CheckOutcome::scalar("embedding", norms.l_norm, limit, Some(norms.w_norm));
    emb.holds &= norms.member();
    out.push(emb);
    Ok(())
}

/// Stable per-instance choice that does not consume generator state.
fn inst_hash(inst: &InequalityInstance<f64>) -> u64 {
    let mut h = 0u64;
    for ops in inst.axes() {
        for a in ops {
            h = derive_seed(h, a.matrix()[(0, 0)].re.to_bits());
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.tag().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.tag()));
        }
        assert!("thm9".parse::<Suite>().is_err());
    }

    #[test]
    fn zero_trials_is_empty() {
        let r = run_suite(Suite::Thm23, 0, 1, 1e-8, 1).unwrap();
        assert_eq!(r.passed + r.failed, 0);
        assert!(r.outcomes.is_empty());
    }

    #[test]
    fn kantorovich_small_run() {
        let r = run_suite(Suite::Kantorovich, 5, 7, 1e-8, 1).unwrap();
        assert_eq!(r.passed, 5, "{:?}", r.failures);
        let c = &r.checks["m=1,M=2/constant"];
        assert!((c.constant_min.unwrap() - 1.125).abs() < 1e-6);
    }

    #[test]
    fn replay_matches() {
        let r = run_suite(Suite::Thm29, 2, 3, 1e-8, 1).unwrap();
        for o in &r.outcomes {
            let again = replay_trial(Suite::Thm29, &o.config, o.seed, 1e-8).unwrap();
            assert_eq!(&again, o);
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let mut a = run_suite(Suite::Thm215, 3, 11, 1e-8, 1).unwrap();
        let mut b = run_suite(Suite::Thm215, 3, 11, 1e-8, 3).unwrap();
        a.wall_time_secs = 0.0;
        b.wall_time_secs = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn report_round_trips() {
        let r = run_suite(Suite::Sobolev, 1, 2, 1e-8, 1).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: SuiteReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
