//! Oracle checks behind `lmdan verify`: exhaustive transport enumeration,
//! finite-difference gradients and hand-evaluated weight formulas.
//!
//! Every check reports the largest error it observed next to its tolerance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::{
    lr_classifier, lr_discriminator, objective_gradients, objective_losses, AdversarialNets, Architecture, MlpModel,
    ScheduleState, StepBatch, StepOptions,
};
use crate::numerics::{Matrix, ProbMatrix, Rng};
use crate::ot::{build_cost_matrix, solve_exact, solve_sinkhorn, CostMatrix, Marginals, SinkhornParams};
use crate::weighting::{class_weights, guide_matrix, normalize_weights, WeightGuidingMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, cases: usize, max_error: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: max_error <= tolerance,
            cases,
            max_error,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub ot_instances: usize,
    pub sinkhorn_instances: usize,
    pub sinkhorn_eps: f64,
    pub gradient_seeds: Vec<u64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ot_instances: 200,
            sinkhorn_instances: 50,
            sinkhorn_eps: 1e-3,
            gradient_seeds: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    Ok(VerifyReport {
        config: cfg.clone(),
        checks: vec![
            check_ot_oracle(cfg.ot_instances, cfg.seed)?,
            check_ot_pipeline(build_cost_matrix, cfg.ot_instances, cfg.seed)?,
            check_sinkhorn(cfg.sinkhorn_instances, cfg.sinkhorn_eps, cfg.seed)?,
            check_class_weights()?,
            check_weight_scale_invariance(cfg.ot_instances / 4, cfg.seed)?,
            check_gradients(&cfg.gradient_seeds)?,
            check_schedules(),
        ],
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Minimum transport cost under uniform marginals, by exhaustive search.
///
/// Marginals `1/n_s` and `1/n_t` become whole units of `1/lcm(n_s, n_t)`.
/// Integral supplies make every vertex of the transport polytope integral,
/// so the minimum over integral plans is the LP optimum. Rows are filled one
/// at a time, trying every split of the row's units over the columns'
/// remaining capacity, memoized on the remaining capacities.
pub fn brute_force_ot(cost: &Matrix<f64>) -> f64 {
    let (ns, nt) = cost.shape();
    assert!(ns >= 1 && (1..=16).contains(&nt), "brute_force_ot supports up to 16 columns");
    let total = ns / gcd(ns, nt) * nt;
    let (src_units, tgt_units) = (total / ns, total / nt);
    assert!(tgt_units < 16);

    fn rows(
        cost: &Matrix<f64>,
        row: usize,
        rem: &mut Vec<usize>,
        src_units: usize,
        memo: &mut HashMap<(usize, Vec<usize>), f64>,
    ) -> f64 {
        if row == cost.rows() {
            return 0.0;
        }
        if let Some(&v) = memo.get(&(row, rem.clone())) {
            return v;
        }
        let mut best = f64::INFINITY;
        split(cost, row, 0, src_units, 0.0, rem, src_units, memo, &mut best);
        memo.insert((row, rem.clone()), best);
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn split(
        cost: &Matrix<f64>,
        row: usize,
        col: usize,
        left: usize,
        acc: f64,
        rem: &mut Vec<usize>,
        src_units: usize,
        memo: &mut HashMap<(usize, Vec<usize>), f64>,
        best: &mut f64,
    ) {
        if left == 0 {
            let v = acc + rows(cost, row + 1, rem, src_units, memo);
            if v < *best {
                *best = v;
            }
            return;
        }
        if col == rem.len() {
            return;
        }
        let cap = rem[col].min(left);
        for q in 0..=cap {
            rem[col] -= q;
            split(cost, row, col + 1, left - q, acc + q as f64 * cost[(row, col)], rem, src_units, memo, best);
            rem[col] += q;
        }
    }

    let mut rem = vec![tgt_units; nt];
    let mut memo = HashMap::new();
    rows(cost, 0, &mut rem, src_units, &mut memo) / total as f64
}

fn random_cost(rng: &mut Rng, ns: usize, nt: usize, max: f64) -> Matrix<f64> {
    let data = (0..ns * nt).map(|_| rng.uniform_range(0.0, max)).collect();
    Matrix::from_vec(ns, nt, data).unwrap()
}

fn random_probs(rng: &mut Rng, n: usize, classes: usize) -> ProbMatrix<f64> {
    let logits = (0..n * classes).map(|_| rng.gaussian(0.0, 2.0)).collect();
    ProbMatrix::from_logits(&Matrix::from_vec(n, classes, logits).unwrap()).unwrap()
}

/// `solve_exact` against [`brute_force_ot`] on random sizes `2..=6` and
/// costs in `[0, 10]`.
pub fn check_ot_oracle(instances: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = Rng::stream(seed, 100);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let ns = 2 + rng.below(5);
        let nt = 2 + rng.below(5);
        let m = random_cost(&mut rng, ns, nt, 10.0);
        let plan = solve_exact(&CostMatrix::new(m.clone())?, &Marginals::uniform(ns, nt))?;
        worst = worst.max((plan.objective - brute_force_ot(&m)).abs());
    }
    Ok(CheckResult::new(
        "ot_exact_vs_enumeration",
        instances,
        worst,
        1e-9,
        "|solve_exact objective - enumerated optimum|".into(),
    ))
}

/// Signature of a cost-matrix builder, so tests can substitute a faulty one.
pub type CostBuilder = fn(&ProbMatrix<f64>, &ProbMatrix<f64>) -> Result<CostMatrix<f64>>;

/// Probabilities → `builder` → `solve_exact`, scored against enumeration on
/// Euclidean distances computed here independently.
pub fn check_ot_pipeline(builder: CostBuilder, instances: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = Rng::stream(seed, 101);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let ns = 2 + rng.below(5);
        let nt = 2 + rng.below(5);
        let classes = 2 + rng.below(4);
        let p = random_probs(&mut rng, ns, classes);
        let q = random_probs(&mut rng, nt, classes);
        let mut reference = Matrix::zeros(ns, nt);
        for i in 0..ns {
            for j in 0..nt {
                let d2: f64 = p.row(i).iter().zip(q.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                reference.row_mut(i)[j] = d2.sqrt();
            }
        }
        let plan = solve_exact(&builder(&p, &q)?, &Marginals::uniform(ns, nt))?;
        let achieved = plan.gamma.frobenius_dot(&reference)?;
        let err = (achieved - brute_force_ot(&reference)).abs().max((plan.objective - achieved).abs());
        worst = worst.max(err);
    }
    Ok(CheckResult::new(
        "ot_pipeline_vs_enumeration",
        instances,
        worst,
        1e-9,
        "cost builder + solve_exact against enumeration on reference Euclidean costs".into(),
    ))
}

/// Sinkhorn on random 10×10 problems with costs in `[0, 10]`: objective gap to
/// the exact optimum as a fraction of the largest cost, and marginal L1 error.
pub fn check_sinkhorn(instances: usize, eps: f64, seed: u64) -> Result<CheckResult> {
    let mut rng = Rng::stream(seed, 102);
    let mut worst_gap: f64 = 0.0;
    let mut worst_marg: f64 = 0.0;
    let mut unconverged = 0;
    for _ in 0..instances {
        let cost = CostMatrix::new(random_cost(&mut rng, 10, 10, 10.0))?;
        let marg = Marginals::uniform(10, 10);
        let exact = solve_exact(&cost, &marg)?;
        let params = SinkhornParams { tol: 1e-7, ..SinkhornParams::new(eps) };
        let approx = solve_sinkhorn(&cost, &marg, &params)?;
        if !approx.converged {
            unconverged += 1;
        }
        worst_gap = worst_gap.max((approx.objective - exact.objective).abs() / cost.max());
        worst_marg = worst_marg.max(approx.marginal_error);
    }
    // Both criteria share one report line: the gap (tolerance 0.05) and the
    // marginal error scaled onto the same tolerance.
    let scaled = worst_gap.max(worst_marg * 0.05 / 1e-6);
    Ok(CheckResult::new(
        "sinkhorn_vs_exact",
        instances,
        scaled,
        0.05,
        format!(
            "eps {eps}: max gap/max_cost {worst_gap:.3e}, max marginal L1 {worst_marg:.3e} (limit 1e-6), {unconverged} unconverged"
        ),
    ))
}

/// The hand-evaluated class-weight cases for `α ∈ {0, 1, 2}`.
pub fn check_class_weights() -> Result<CheckResult> {
    let guide = |rows: &[f64]| WeightGuidingMatrix::from_matrix(Matrix::from_vec(rows.len(), 1, rows.to_vec()).unwrap());
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut cmp = |got: Option<f64>, want: f64| {
        cases += 1;
        worst = worst.max(got.map_or(f64::INFINITY, |g| (g - want).abs()));
    };
    let two_class = guide(&[0.2, 0.3, 0.1])?;
    for alpha in [0.0, 1.0, 2.0] {
        let w = class_weights(&two_class, &[0, 0, 1], alpha, 1e-8)?;
        cmp(w.get(0), 1.0 / (2f64.powf(alpha) * 0.5));
        cmp(w.get(1), 1.0 / 0.1);
        let single = guide(&[0.25, 0.5, 0.125])?;
        let w = class_weights(&single, &[3, 3, 3], alpha, 1e-8)?;
        cmp(w.get(3), 1.0 / (3f64.powf(alpha) * 0.875));
        cmp((w.weights.len() == 1).then_some(0.0), 0.0);
        let floored = guide(&[0.0, 1e-12])?;
        let w = class_weights(&floored, &[1, 1], alpha, 1e-8)?;
        cmp(w.get(1), 1e8);
    }
    Ok(CheckResult::new(
        "class_weight_hand_cases",
        cases,
        worst,
        1e-12,
        "two-class, single-class and floored cases for alpha 0, 1, 2".into(),
    ))
}

/// Normalized weights are unchanged when the cost matrix is scaled.
pub fn check_weight_scale_invariance(instances: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = Rng::stream(seed, 103);
    let mut worst: f64 = 0.0;
    for _ in 0..instances.max(1) {
        let ns = 2 + rng.below(7);
        let nt = 2 + rng.below(7);
        let labels: Vec<usize> = (0..ns).map(|_| rng.below(3)).collect();
        let m = random_cost(&mut rng, ns, nt, 10.0);
        let alpha = [0.0, 1.0, 2.0][rng.below(3)];
        let weights = |scale: f64| -> Result<Vec<f64>> {
            let cost = CostMatrix::new(m.scale(scale))?;
            let plan = solve_exact(&cost, &Marginals::uniform(ns, nt))?;
            let w = normalize_weights(&class_weights(&guide_matrix(&plan, &cost)?, &labels, alpha, 1e-300)?, &labels)?;
            Ok(w.weights.values().copied().collect())
        };
        let base = weights(1.0)?;
        for scale in [1e-3, 0.5, 7.0, 1e4] {
            for (a, b) in base.iter().zip(weights(scale)?) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(CheckResult::new(
        "weight_cost_scale_invariance",
        instances.max(1),
        worst,
        1e-9,
        "normalized class weights under cost scaling by 1e-3, 0.5, 7, 1e4".into(),
    ))
}

fn fd_relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central differences (`h = 1e-5`) of `L₁` in F and G and of `L₂` in F and D,
/// against backpropagation, for each seed.
pub fn check_gradients(seeds: &[u64]) -> Result<CheckResult> {
    const H: f64 = 1e-5;
    let mut worst: f64 = 0.0;
    let mut params = 0;
    for &seed in seeds {
        let mut rng = Rng::stream(seed, 104);
        let arch = Architecture {
            input_dim: 3,
            encoder: vec![6, 5],
            classes: 3,
            discriminator: vec![4],
        };
        let mut nets = AdversarialNets::init(&arch, &mut rng)?;
        // Zero biases put a ReLU exactly on its kink whenever the layer input
        // is all zeros, where central differences are meaningless.
        for model in [&mut nets.encoder, &mut nets.classifier, &mut nets.discriminator] {
            let weight_count: usize = model.layers().iter().map(|l| l.weights.as_slice().len()).sum();
            for idx in weight_count..model.params().count() {
                *model.param_mut(idx) = rng.uniform_range(-0.1, 0.1);
            }
        }
        let x_src = Matrix::from_vec(5, 3, (0..15).map(|_| rng.gaussian(0.0, 1.0)).collect())?;
        let x_tgt = Matrix::from_vec(4, 3, (0..12).map(|_| rng.gaussian(0.5, 1.0)).collect())?;
        let y_src: Vec<usize> = (0..5).map(|_| rng.below(3)).collect();
        let v: Vec<f64> = (0..5).map(|_| rng.uniform_range(0.5, 2.0)).collect();
        let batch = StepBatch {
            x_src: &x_src,
            y_src: &y_src,
            x_tgt: &x_tgt,
        };
        let opts = StepOptions { adversarial: true };

        for lambda in [0.0, 1.0] {
            let grads = objective_gradients(&nets, &batch, &v, lambda, &opts)?;
            let objective = |n: &AdversarialNets<f64>, which: usize| -> Result<f64> {
                let (l1, l2) = objective_losses(n, &batch, &v, &opts)?;
                let l2 = l2.unwrap_or(0.0);
                Ok(match which {
                    0 => l1 + lambda * l2,
                    1 => l1,
                    _ => l2,
                })
            };
            let models: [(usize, fn(&mut AdversarialNets<f64>) -> &mut MlpModel<f64>, Vec<f64>); 3] = [
                (0, |n| &mut n.encoder, grads.encoder.iter().collect()),
                (1, |n| &mut n.classifier, grads.classifier.iter().collect()),
                (2, |n| &mut n.discriminator, grads.discriminator.as_ref().unwrap().iter().collect()),
            ];
            for (which, pick, analytic) in models {
                for (idx, &g) in analytic.iter().enumerate() {
                    let mut plus = nets.clone();
                    *pick(&mut plus).param_mut(idx) += H;
                    let mut minus = nets.clone();
                    *pick(&mut minus).param_mut(idx) -= H;
                    let numeric = (objective(&plus, which)? - objective(&minus, which)?) / (2.0 * H);
                    worst = worst.max(fd_relative_error(g, numeric));
                    params += 1;
                }
            }
        }
    }
    Ok(CheckResult::new(
        "gradient_finite_difference",
        params,
        worst,
        1e-4,
        format!("{} seeds, lambda 0 and 1, F/G on L1 (+ lambda L2), D on L2", seeds.len()),
    ))
}

/// Schedules at the endpoints and midpoint against direct evaluation.
pub fn check_schedules() -> CheckResult {
    let mut worst: f64 = 0.0;
    for (p, lr) in [(0.0, 0.01), (0.5, 0.01), (1.0, 0.01), (0.25, 0.3)] {
        let s = ScheduleState { p, lr, lambda: 1.0 };
        let want_c = lr * (1.0 + 10.0 * p).powf(-0.75);
        let e = (-10.0 * p).exp();
        let want_d = lr * (1.0 - e) / (1.0 + e);
        worst = worst
            .max((lr_classifier(&s) - want_c).abs() / want_c)
            .max((lr_discriminator(&s) - want_d).abs() / lr);
    }
    CheckResult::new("schedules", 4, worst, 1e-12, "lr_c and lr_d at p in {0, 0.25, 0.5, 1}".into())
}
