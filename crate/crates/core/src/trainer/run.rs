use crate::data::{derive_seed, label_distribution, kl_divergence, BalancedBatches, LabeledDataset, UnlabeledDataset};
use crate::error::{Error, Result};
use crate::nn::{adversarial_step, AdversarialNets, Momentum, ScheduleState, StepBatch, StepOptions};
use crate::numerics::{Matrix, Rng};
use crate::ot::{build_cost_matrix, solve_exact, solve_sinkhorn, Marginals, SinkhornParams};
use crate::trainer::config::{CountSource, Method, OtMode, TrainConfig};
use crate::trainer::evaluate::{evaluate, Evaluation};
use crate::trainer::report::{EpochRecord, RunReport, StepRecord};
use crate::weighting::{
    class_weights, class_weights_with_counts, guide_matrix, normalize_weights, per_sample_weights, ClassWeights,
};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOptions {
    /// Use `w = 1` for every class instead of the transport-guided weights.
    pub force_unit_weights: bool,
    /// Stop after this many steps. The schedules still span the full run.
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: RunReport,
    pub nets: AdversarialNets<f64>,
    pub trace: Vec<StepRecord>,
}

pub fn train_lmdan(src: &LabeledDataset, tgt: &LabeledDataset, cfg: &TrainConfig) -> Result<RunReport> {
    Ok(train(Method::Lmdan, src, tgt, cfg, &TrainOptions::default())?.report)
}

pub fn train_dann(src: &LabeledDataset, tgt: &LabeledDataset, cfg: &TrainConfig) -> Result<RunReport> {
    Ok(train(Method::Dann, src, tgt, cfg, &TrainOptions::default())?.report)
}

/// Minimizes the unweighted classification loss; `lambda` and `alpha` are unused.
pub fn train_source_only(src: &LabeledDataset, tgt: &LabeledDataset, cfg: &TrainConfig) -> Result<RunReport> {
    Ok(train(Method::SourceOnly, src, tgt, cfg, &TrainOptions::default())?.report)
}

struct EpochStats {
    l1: f64,
    l2: Option<f64>,
    effective: Vec<f64>,
}

/// Trains `method` on `src` and the unlabeled view of `tgt`. Target labels
/// are used only to score the model after each epoch.
pub fn train(
    method: Method,
    src: &LabeledDataset,
    tgt: &LabeledDataset,
    cfg: &TrainConfig,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if src.dim() != tgt.dim() || src.class_count() != tgt.class_count() {
        return Err(Error::invalid(format!(
            "source ({} features, {} classes) and target ({} features, {} classes) disagree",
            src.dim(),
            src.class_count(),
            tgt.dim(),
            tgt.class_count()
        )));
    }
    let classes = src.class_count();
    let target_dist = label_distribution(&tgt.class_counts(), 0.0);
    let kl_smoothing = if tgt.class_counts().contains(&0) { 0.5 } else { 0.0 };
    let target_smoothed = label_distribution(&tgt.class_counts(), kl_smoothing);

    let mut epochs = Vec::new();
    let mut on_epoch = |epoch: usize, nets: &AdversarialNets<f64>, stats: EpochStats| -> Result<()> {
        let eval = evaluate(nets, tgt)?;
        let label_kl = kl_divergence(&stats.effective, &target_smoothed)?;
        log::info!(
            "{method} epoch {epoch}: L1 {:.4} L2 {:?} acc {:.4} label KL {:.4}",
            stats.l1,
            stats.l2,
            eval.accuracy,
            label_kl
        );
        epochs.push(EpochRecord {
            epoch,
            l1: stats.l1,
            l2: stats.l2,
            accuracy: eval.accuracy,
            per_class_accuracy: eval.per_class,
            effective_label_distribution: stats.effective,
            label_kl,
        });
        Ok(())
    };
    let fit = fit(method, src, &tgt.strip_labels(), cfg, opts, &mut on_epoch)?;
    let Evaluation {
        accuracy,
        per_class,
        macro_accuracy,
    } = evaluate(&fit.nets, tgt)?;
    let report = RunReport {
        method,
        config: cfg.clone(),
        classes,
        steps: fit.trace.len(),
        accuracy,
        macro_accuracy,
        per_class_accuracy: per_class,
        final_weights: fit.last_weights.to_dense(classes),
        effective_label_distribution: epochs
            .last()
            .map_or_else(|| vec![0.0; classes], |e| e.effective_label_distribution.clone()),
        target_label_distribution: target_dist,
        label_kl_trajectory: epochs.iter().map(|e| e.label_kl).collect(),
        epochs,
        diverged: fit.diverged,
    };
    Ok(TrainOutcome {
        report,
        nets: fit.nets,
        trace: fit.trace,
    })
}

struct Fit {
    nets: AdversarialNets<f64>,
    trace: Vec<StepRecord>,
    last_weights: ClassWeights<f64>,
    diverged: Option<String>,
}

fn fit(
    method: Method,
    src: &LabeledDataset,
    tgt: &UnlabeledDataset,
    cfg: &TrainConfig,
    opts: &TrainOptions,
    on_epoch: &mut dyn FnMut(usize, &AdversarialNets<f64>, EpochStats) -> Result<()>,
) -> Result<Fit> {
    let classes = src.class_count();
    let arch = cfg.architecture(src.dim(), classes);
    let mut nets = AdversarialNets::init(&arch, &mut Rng::stream(cfg.seed, 0))?;
    let mut sampler = BalancedBatches::new(src.len(), tgt.len(), cfg.batch, derive_seed(cfg.seed, 1))?;
    let total_steps = cfg.epochs * sampler.pairs_per_epoch();
    let step_opts = StepOptions {
        adversarial: method != Method::SourceOnly,
    };
    let lambda = if method == Method::SourceOnly { 0.0 } else { cfg.lambda };
    let use_ot = method == Method::Lmdan && !opts.force_unit_weights;
    let src_counts = src.class_counts();
    let mut momentum = Momentum::new(cfg.momentum);

    let mut trace = Vec::new();
    let mut last_weights = ClassWeights::ones(classes);
    let mut step = 0;
    'epochs: for epoch in 1..=cfg.epochs {
        let mut l1_sum = 0.0;
        let mut l2_sum = 0.0;
        let mut mass = vec![0.0; classes];
        let mut steps_in_epoch = 0;
        for pair in sampler.next_epoch() {
            if opts.max_steps.is_some_and(|m| step >= m) {
                break 'epochs;
            }
            let x_src = src.features().select_rows(&pair.source);
            let y_src: Vec<usize> = pair.source.iter().map(|&i| src.labels()[i]).collect();
            let x_tgt = tgt.features().select_rows(&pair.target);

            let before = nets.clone();
            let outcome = (|| {
                let weights = if use_ot {
                    ot_weights(&nets, &x_src, &y_src, &x_tgt, cfg, &src_counts)?
                } else {
                    ClassWeights::ones(classes)
                };
                let v = per_sample_weights(&weights, &y_src)?;
                let sched = ScheduleState::at_step(step, total_steps, cfg.lr, lambda);
                let batch = StepBatch {
                    x_src: &x_src,
                    y_src: &y_src,
                    x_tgt: &x_tgt,
                };
                let r = adversarial_step(&mut nets, &batch, &v, &sched, &step_opts, &mut momentum)?;
                Ok((weights, v, r))
            })();
            match outcome {
                Ok((weights, v, r)) => {
                    l1_sum += r.l1;
                    l2_sum += r.l2.unwrap_or(0.0);
                    for (&y, &vi) in y_src.iter().zip(&v) {
                        mass[y] += vi;
                    }
                    trace.push(StepRecord {
                        l1: r.l1,
                        l2: r.l2,
                        weights: v,
                    });
                    last_weights = weights;
                }
                Err(e @ (Error::Diverged { .. } | Error::NonFinite(_))) => {
                    let detail = match e {
                        Error::Diverged { detail, .. } => detail,
                        other => other.to_string(),
                    };
                    log::warn!("{method}: non-finite loss at step {step}: {detail}");
                    return Ok(Fit {
                        nets: before,
                        trace,
                        last_weights,
                        diverged: Some(format!("step {step} (epoch {epoch}): {detail}")),
                    });
                }
                Err(e) => return Err(e),
            }
            step += 1;
            steps_in_epoch += 1;
        }
        if steps_in_epoch == 0 {
            break;
        }
        let n = steps_in_epoch as f64;
        let total: f64 = mass.iter().sum();
        on_epoch(
            epoch,
            &nets,
            EpochStats {
                l1: l1_sum / n,
                l2: step_opts.adversarial.then_some(l2_sum / n),
                effective: mass.iter().map(|m| m / total).collect(),
            },
        )?;
    }
    Ok(Fit {
        nets,
        trace,
        last_weights,
        diverged: None,
    })
}

/// Transport-guided class weights for one mini-batch, from current-model
/// class probabilities on both sides.
fn ot_weights(
    nets: &AdversarialNets<f64>,
    x_src: &Matrix<f64>,
    y_src: &[usize],
    x_tgt: &Matrix<f64>,
    cfg: &TrainConfig,
    dataset_counts: &[usize],
) -> Result<ClassWeights<f64>> {
    let p_src = nets.class_probs(x_src)?;
    let p_tgt = nets.class_probs(x_tgt)?;
    let cost = build_cost_matrix(&p_src, &p_tgt)?;
    let marg = Marginals::uniform(p_src.rows(), p_tgt.rows());
    let plan = match cfg.ot {
        OtMode::Exact => solve_exact(&cost, &marg)?,
        OtMode::Sinkhorn => {
            let params = SinkhornParams {
                tol: cfg.sinkhorn_tol,
                max_iter: cfg.sinkhorn_max_iter,
                ..SinkhornParams::new(cfg.sinkhorn_eps)
            };
            let plan = solve_sinkhorn(&cost, &marg, &params)?;
            if !plan.converged {
                log::warn!("sinkhorn did not converge (marginal error {})", plan.marginal_error);
            }
            plan
        }
    };
    let guide = guide_matrix(&plan, &cost)?;
    let w = match cfg.count_source {
        CountSource::Batch => class_weights(&guide, y_src, cfg.alpha, cfg.eps_floor)?,
        CountSource::Dataset => class_weights_with_counts(&guide, y_src, cfg.alpha, cfg.eps_floor, dataset_counts)?,
    };
    if cfg.normalize {
        normalize_weights(&w, y_src)
    } else {
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_blob_pair, BlobConfig};

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch: 16,
            encoder: vec![8, 8],
            discriminator: vec![4],
            ..TrainConfig::default()
        }
    }

    fn data() -> (LabeledDataset, LabeledDataset) {
        gen_blob_pair(&BlobConfig { per_class: 20, ..BlobConfig::default() }, 0).unwrap()
    }

    #[test]
    fn report_shape() {
        let (s, t) = data();
        let r = train_lmdan(&s, &t, &small_cfg()).unwrap();
        assert_eq!(r.epochs.len(), 3);
        assert_eq!(r.steps, 3 * 5);
        assert_eq!(r.per_class_accuracy.len(), 4);
        assert_eq!(r.label_kl_trajectory.len(), 3);
        assert!((0.0..=1.0).contains(&r.accuracy));
        assert!((r.effective_label_distribution.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.diverged.is_none());
    }

    #[test]
    fn deterministic() {
        let (s, t) = data();
        let a = train_lmdan(&s, &t, &small_cfg()).unwrap();
        let b = train_lmdan(&s, &t, &small_cfg()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn source_only_ignores_lambda_and_alpha() {
        let (s, t) = data();
        let a = train_source_only(&s, &t, &small_cfg()).unwrap();
        let b = train_source_only(&s, &t, &TrainConfig { lambda: 3.0, alpha: 0.5, ..small_cfg() }).unwrap();
        assert_eq!(a.epochs, b.epochs);
        assert!(a.epochs[0].l2.is_none());
    }

    #[test]
    fn divergence_returns_last_good_report() {
        let (s, t) = data();
        let cfg = TrainConfig { lr: 1e300, ..small_cfg() };
        let r = train_dann(&s, &t, &cfg).unwrap();
        assert!(r.diverged.is_some());
        assert!(r.accuracy.is_finite());
    }

    #[test]
    fn mismatched_domains() {
        let (s, _) = data();
        let (t, _) = gen_blob_pair(&BlobConfig { class_count: 3, per_class: 20, ..BlobConfig::default() }, 0).unwrap();
        assert!(train_dann(&s, &t, &small_cfg()).is_err());
    }
}
