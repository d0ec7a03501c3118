//! `verify-prop41`: the scalar bound sup F ≤ −δ₀ on Ω, the two elementary
//! infima, the regrouping identity, and the master inequality
//! `L(log v) + C₁|∇log v|² ≥ ½(3 − v)|B|²` on random and adversarial samples.
//!
//! Master-inequality margins are homogeneous of degree two in h, so samples
//! are judged by the ratio `margin / |B|²`; a sample is a violation candidate
//! when the ratio is below `−margin_tolerance`, and candidates are re-decided
//! in exact rational arithmetic.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shrinker_core::inequality::search::exact_master_margin_sign;
use shrinker_core::inequality::{
    adversarial_search, group_bounds_check, group_terms, h1, master_inequality_check, minimize_on_interval,
    sample_subcritical, sweep_slice, GroupSample, HPattern, SweepReport, VGrid, DELTA0,
};

use super::{max_or_nan, RunContext};
use crate::config::{Prop41Config, RunConfig};
use crate::error::{LabError, LabResult};
use crate::formats;
use crate::report::{CheckRecord, RunReport};
use crate::rng;

pub const CERTIFICATE_SCHEMA: &str = "shrinker-lab/prop41-certificate/v1";
pub const COUNTEREXAMPLE_SCHEMA: &str = "shrinker-lab/counterexample/v1";

const SAMPLE_CHUNK: usize = 4096;
const RESTART_CHUNK: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: String,
    pub bound: f64,
    pub worst_value: f64,
    pub samples: usize,
    pub seed: u64,
    pub arg_max: ArgMax,
    pub grid: GridSpec,
    pub poles: usize,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgMax {
    pub v: f64,
    pub r: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub v_lo: f64,
    pub v_hi: f64,
    pub v_count: usize,
    pub r_resolution: usize,
}

/// A group sample in plain form: `h[α·n·n + i·n + j]`, symmetric in i, j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub n: usize,
    pub m: usize,
    pub lambda: Vec<f64>,
    pub h: Vec<f64>,
}

impl SampleSpec {
    pub fn of(s: &GroupSample) -> Self {
        SampleSpec {
            n: s.n(),
            m: s.m(),
            lambda: s.lambda().to_vec(),
            h: s.h_values().to_vec(),
        }
    }

    pub fn to_sample(&self) -> LabResult<GroupSample> {
        GroupSample::new(self.n, self.m, self.lambda.clone(), self.h.clone())
            .map_err(|e| LabError::Config(format!("sample (n={}, m={}): {e}", self.n, self.m)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupValues {
    pub rest: f64,
    pub one: Vec<(usize, f64)>,
    pub two: Vec<([usize; 3], f64)>,
    pub three: Vec<([usize; 3], f64)>,
    pub four: Vec<(usize, f64)>,
    pub grouped_total: f64,
    pub direct_total: f64,
}

/// Everything needed to recompute a violation by hand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub schema: String,
    pub sample: SampleSpec,
    pub c1: f64,
    pub v: f64,
    pub b_norm_sq: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Sign of the margin in exact rational arithmetic.
    pub exact_sign: String,
    pub groups: GroupValues,
    pub group_margins: GroupMarginValues,
}

/// Each group's value minus its lower bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMarginValues {
    pub rest: f64,
    pub one: Vec<(usize, f64)>,
    pub two: Vec<([usize; 3], f64)>,
    pub three: Vec<([usize; 3], f64)>,
    pub four: Vec<(usize, f64)>,
    pub min: f64,
}

fn counterexample(s: &GroupSample, c1: f64) -> LabResult<Counterexample> {
    let mc = master_inequality_check(s, c1)?;
    let gt = group_terms(s, c1);
    let gm = group_bounds_check(s, c1)?;
    Ok(Counterexample {
        schema: COUNTEREXAMPLE_SCHEMA.into(),
        sample: SampleSpec::of(s),
        c1,
        v: mc.v,
        b_norm_sq: s.b_norm_sq(),
        lhs: mc.lhs,
        rhs: mc.rhs,
        margin: mc.margin,
        exact_sign: format!("{:?}", exact_master_margin_sign(s, c1)),
        groups: GroupValues {
            rest: gt.rest,
            one: gt.one,
            two: gt.two,
            three: gt.three,
            four: gt.four,
            grouped_total: gt.grouped_total,
            direct_total: gt.direct_total,
        },
        group_margins: GroupMarginValues {
            min: gm.min(),
            rest: gm.rest,
            one: gm.one,
            two: gm.two,
            three: gm.three,
            four: gm.four,
        },
    })
}

/// Draws (n, m) with n, m ≤ 5 and p = min(n, m) ≤ 4.
fn random_shape<R: Rng>(rng: &mut R) -> (usize, usize) {
    loop {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=5);
        if n.min(m) <= 4 {
            return (n, m);
        }
    }
}

/// Random subcritical sample. A quarter of the draws pin v to 3 − 10⁻ᵏ,
/// k = 1…8, to exercise the critical end.
fn random_sample<R: Rng>(rng: &mut R) -> LabResult<(GroupSample, HPattern)> {
    let (n, m) = random_shape(rng);
    let pattern = HPattern::ALL[rng.random_range(0..HPattern::ALL.len())];
    let v_target = (rng.random::<f64>() < 0.25).then(|| 3.0 - 10f64.powi(-rng.random_range(1..=8)));
    Ok((sample_subcritical(rng, n, m, pattern, v_target)?, pattern))
}

/// Aggregated master-inequality results over a batch of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub samples: usize,
    pub min_master_ratio: f64,
    pub min_group_ratio: f64,
    pub candidates: Vec<GroupSample>,
    pub confirmed: Vec<GroupSample>,
    /// Per (n, m, pattern): count, minimum master ratio.
    pub by_shape: Vec<ShapeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeRow {
    pub n: usize,
    pub m: usize,
    pub pattern: &'static str,
    pub samples: usize,
    pub min_master_ratio: f64,
    pub min_group_ratio: f64,
}

impl SampleStats {
    fn empty() -> Self {
        SampleStats {
            samples: 0,
            min_master_ratio: f64::INFINITY,
            min_group_ratio: f64::INFINITY,
            candidates: Vec::new(),
            confirmed: Vec::new(),
            by_shape: Vec::new(),
        }
    }

    fn absorb(&mut self, other: SampleStats) {
        self.samples += other.samples;
        self.min_master_ratio = self.min_master_ratio.min(other.min_master_ratio);
        self.min_group_ratio = self.min_group_ratio.min(other.min_group_ratio);
        self.candidates.extend(other.candidates);
        self.confirmed.extend(other.confirmed);
        for row in other.by_shape {
            self.shape_row(row.n, row.m, row.pattern).merge(&row);
        }
    }

    fn shape_row(&mut self, n: usize, m: usize, pattern: &'static str) -> &mut ShapeRow {
        let pos = match self
            .by_shape
            .iter()
            .position(|r| (r.n, r.m, r.pattern) == (n, m, pattern))
        {
            Some(p) => p,
            None => {
                self.by_shape.push(ShapeRow {
                    n,
                    m,
                    pattern,
                    samples: 0,
                    min_master_ratio: f64::INFINITY,
                    min_group_ratio: f64::INFINITY,
                });
                self.by_shape.len() - 1
            }
        };
        &mut self.by_shape[pos]
    }
}

impl ShapeRow {
    fn merge(&mut self, o: &ShapeRow) {
        self.samples += o.samples;
        self.min_master_ratio = self.min_master_ratio.min(o.min_master_ratio);
        self.min_group_ratio = self.min_group_ratio.min(o.min_group_ratio);
    }
}

/// Checks `count` random samples; chunk c draws from stream `base + c`.
pub fn master_samples(count: usize, c1: f64, tol: f64, seed: u64, base: u64) -> LabResult<SampleStats> {
    let parts: Vec<LabResult<SampleStats>> = rng::chunks(count, SAMPLE_CHUNK)
        .into_par_iter()
        .map(|(c, _, len)| {
            let mut r = rng::stream(seed, base + c);
            let mut st = SampleStats::empty();
            for _ in 0..len {
                let (s, pattern) = random_sample(&mut r)?;
                let b2 = s.b_norm_sq();
                let mc = master_inequality_check(&s, c1)?;
                let gm = group_bounds_check(&s, c1)?;
                let (ratio, gratio) = if b2 > 0.0 {
                    (mc.margin / b2, gm.min() / b2)
                } else {
                    (0.0, 0.0)
                };
                st.samples += 1;
                st.min_master_ratio = st.min_master_ratio.min(ratio);
                st.min_group_ratio = st.min_group_ratio.min(gratio);
                let row = st.shape_row(s.n(), s.m(), pattern.name());
                row.samples += 1;
                row.min_master_ratio = row.min_master_ratio.min(ratio);
                row.min_group_ratio = row.min_group_ratio.min(gratio);
                if ratio < -tol || ratio.is_nan() {
                    if exact_master_margin_sign(&s, c1) == Ordering::Less {
                        st.confirmed.push(s.clone());
                    }
                    st.candidates.push(s);
                }
            }
            Ok(st)
        })
        .collect();
    let mut total = SampleStats::empty();
    for p in parts {
        total.absorb(p?);
    }
    total
        .by_shape
        .sort_by(|a, b| (a.n, a.m, a.pattern).cmp(&(b.n, b.m, b.pattern)));
    Ok(total)
}

/// Largest |grouped − direct| over random samples.
pub fn regrouping_defect(count: usize, c1: f64, seed: u64, base: u64) -> LabResult<f64> {
    let parts: Vec<LabResult<f64>> = rng::chunks(count, SAMPLE_CHUNK)
        .into_par_iter()
        .map(|(c, _, len)| {
            let mut r = rng::stream(seed, base + c);
            let mut worst: f64 = 0.0;
            for _ in 0..len {
                let (s, _) = random_sample(&mut r)?;
                worst = max_or_nan(worst, group_terms(&s, c1).regrouping_defect());
            }
            Ok(worst)
        })
        .collect();
    parts.into_iter().try_fold(0.0, |acc, p| Ok(max_or_nan(acc, p?)))
}

/// Largest |margin| at λ = 0 (v = 1), where the inequality is an identity.
pub fn tight_case_margin(count: usize, c1: f64, seed: u64, stream: u64) -> LabResult<f64> {
    let mut r = rng::stream(seed, stream);
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let (n, m) = random_shape(&mut r);
        let pattern = HPattern::ALL[k % HPattern::ALL.len()];
        let mut s = sample_subcritical(&mut r, n, m, pattern, None)?;
        let zeros = vec![0.0; s.p()];
        s = GroupSample::new(n, m, zeros, s.h_values().to_vec())?;
        worst = max_or_nan(worst, master_inequality_check(&s, c1)?.margin.abs());
    }
    Ok(worst)
}

/// Adversarial restarts in chunks; chunk c draws from stream `base + c`.
pub fn adversarial(
    restarts: usize,
    c1: f64,
    tol: f64,
    seed: u64,
    base: u64,
) -> LabResult<(f64, usize, Vec<GroupSample>)> {
    let parts: Vec<LabResult<_>> = rng::chunks(restarts, RESTART_CHUNK)
        .into_par_iter()
        .map(|(c, _, len)| {
            let mut r = rng::stream(seed, base + c);
            Ok(adversarial_search(&mut r, len, c1, tol)?)
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut candidates = 0;
    let mut confirmed = Vec::new();
    for p in parts {
        let rep = p?;
        worst = worst.min(rep.worst_ratio);
        candidates += rep.candidates;
        confirmed.extend(rep.confirmed);
    }
    Ok((worst, candidates, confirmed))
}

/// The scalar sweep, one v-slice per task.
pub fn sweep(pc: &Prop41Config) -> LabResult<SweepReport> {
    let grid = VGrid {
        lo: pc.v_lo,
        hi: pc.v_hi,
        count: pc.v_count,
    };
    grid.validate()?;
    let slices: Vec<_> = (0..grid.count)
        .into_par_iter()
        .map(|k| sweep_slice(grid.value(k), pc.r_resolution))
        .collect();
    Ok(SweepReport::merge(grid, pc.r_resolution, &slices)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepRow {
    v: f64,
    sup_f: f64,
    margin: f64,
}

pub fn run(cfg: &RunConfig) -> LabResult<RunReport> {
    let pc = &cfg.lab.prop41;
    let seed = cfg.lab.seed;
    let c1 = pc.c1;
    let mut ctx = RunContext::open(cfg)?;

    // User samples come first: a supercritical one is an input error.
    if let Some(path) = &pc.samples_file {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        let specs: Vec<SampleSpec> =
            serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        let mut worst = f64::INFINITY;
        for spec in &specs {
            let s = spec.to_sample()?;
            let mc = master_inequality_check(&s, c1).map_err(LabError::Domain)?;
            let b2 = s.b_norm_sq();
            worst = worst.min(if b2 > 0.0 { mc.margin / b2 } else { 0.0 });
        }
        ctx.report.push(CheckRecord::at_least(
            "user_samples_min_ratio",
            worst,
            0.0,
            pc.margin_tolerance,
            specs.len(),
        ));
    }

    // Scalar sweep and certificate.
    let rep = sweep(pc)?;
    let rows: Vec<SweepRow> = rep
        .worst_per_v
        .iter()
        .enumerate()
        .map(|(k, &f)| SweepRow {
            v: rep.grid.value(k),
            sup_f: f,
            margin: -DELTA0 - f,
        })
        .collect();
    formats::write_csv(&ctx.artifact("sweep_margins.csv"), &rows)?;
    let holds = rep.passes(pc.sweep_tolerance);
    let cert = Certificate {
        schema: CERTIFICATE_SCHEMA.into(),
        bound: -DELTA0,
        worst_value: rep.worst,
        samples: rep.samples,
        seed,
        arg_max: ArgMax {
            v: rep.arg_max.0,
            r: rep.arg_max.1,
            t: rep.arg_max.2,
        },
        grid: GridSpec {
            v_lo: pc.v_lo,
            v_hi: pc.v_hi,
            v_count: pc.v_count,
            r_resolution: pc.r_resolution,
        },
        poles: rep.poles,
        tolerance: pc.sweep_tolerance,
        holds,
    };
    formats::write_json(&ctx.artifact("certificate.json"), &cert)?;
    ctx.report.push(
        CheckRecord::at_most("sup_F_on_Omega", rep.worst, -DELTA0, pc.sweep_tolerance, rep.samples).with_note(format!(
            "argmax (v, r, t) = ({}, {}, {}); {} pole samples excluded; {} empty slices",
            rep.arg_max.0, rep.arg_max.1, rep.arg_max.2, rep.poles, rep.empty_slices
        )),
    );

    // Elementary infima.
    ctx.report.push(CheckRecord::residual(
        "H1(1,3/2)-1",
        h1(1.0, 1.5) - 1.0,
        pc.infimum_tolerance,
        1,
    ));
    let (th, val) = minimize_on_interval(|t| t * (t - 1.0) * (t - 1.0), 2.0, 4.0, pc.infimum_samples);
    ctx.report.push(CheckRecord::residual(
        "min_theta(theta-1)^2_on_[2,4]-2",
        val - 2.0,
        pc.infimum_tolerance,
        pc.infimum_samples,
    ));
    ctx.report.push(CheckRecord::residual(
        "argmin_theta(theta-1)^2-2",
        th - 2.0,
        pc.infimum_tolerance,
        pc.infimum_samples,
    ));
    let (_, h1min) = minimize_on_interval(|t| h1(1.0, t), 0.5, 2.0, pc.infimum_samples);
    ctx.report.push(CheckRecord::residual(
        "min_theta_H1(1,theta)-1",
        h1min - 1.0,
        pc.infimum_tolerance,
        pc.infimum_samples,
    ));

    // Regrouping identity.
    let defect = regrouping_defect(pc.regroup_samples, c1, seed, 1 << 20)?;
    ctx.report.push(CheckRecord::residual(
        "regrouping_defect",
        defect,
        pc.regroup_tolerance,
        pc.regroup_samples,
    ));

    // Master inequality: random samples.
    let stats = master_samples(pc.samples, c1, pc.margin_tolerance, seed, 2 << 20)?;
    formats::write_csv(&ctx.artifact("sample_margins.csv"), &stats.by_shape)?;
    ctx.report.push(
        CheckRecord::at_least(
            "master_min_ratio",
            stats.min_master_ratio,
            0.0,
            pc.margin_tolerance,
            stats.samples,
        )
        .with_note(format!("{} candidates below tolerance", stats.candidates.len())),
    );
    ctx.report.push(CheckRecord::at_least(
        "group_bounds_min_ratio",
        stats.min_group_ratio,
        0.0,
        pc.margin_tolerance,
        stats.samples,
    ));

    // Tight cases.
    let tight = tight_case_margin(pc.tight_samples, c1, seed, 3 << 20)?;
    ctx.report.push(CheckRecord::residual(
        "tight_case_lambda0_margin",
        tight,
        pc.tight_tolerance,
        pc.tight_samples,
    ));

    // Adversarial restarts.
    let (worst, adv_candidates, adv_confirmed) = adversarial(pc.restarts, c1, pc.margin_tolerance, seed, 4 << 20)?;
    ctx.report.push(
        CheckRecord::at_least("adversarial_min_ratio", worst, 0.0, pc.margin_tolerance, pc.restarts)
            .with_note(format!("{adv_candidates} candidates below tolerance")),
    );

    let confirmed: Vec<GroupSample> = stats.confirmed.into_iter().chain(adv_confirmed).collect();
    ctx.report.push(CheckRecord::residual(
        "exactly_confirmed_violations",
        confirmed.len() as f64,
        0.5,
        stats.samples + pc.restarts,
    ));
    if !confirmed.is_empty() {
        let dumps = confirmed
            .iter()
            .map(|s| counterexample(s, c1))
            .collect::<LabResult<Vec<_>>>()?;
        formats::write_json(&ctx.artifact("counterexamples.json"), &dumps)?;
    }

    // A supercritical sample must be refused.
    let s = GroupSample::zeros(2, 2, vec![3.0, 0.0])?;
    let refused = matches!(
        master_inequality_check(&s, c1),
        Err(shrinker_core::Error::NotSubcritical { .. })
    );
    ctx.report.push(
        CheckRecord::at_least(
            "supercritical_sample_refused",
            if refused { 1.0 } else { 0.0 },
            1.0,
            0.5,
            1,
        )
        .with_note("λ = (3, 0), v = √10"),
    );
    ctx.finish()
}
