//! Optimizers and the per-experiment Adam → L-BFGS phase schedule.

mod adam;
mod lbfgs;

pub use adam::{AdamConfig, AdamState};
pub use lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsOutcome, LbfgsStatus};

use crate::autodiff::Objective;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// When the L-BFGS phase runs after Adam stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum LbfgsActivation {
    /// Always run L-BFGS after the Adam phase.
    AlwaysAfter,
    /// Only when Adam stopped in fewer than `max_epochs` epochs.
    OnlyIfAdamEpochsBelow { max_epochs: usize },
    /// Only when the loss at the end of the Adam phase is below `threshold`.
    OnlyIfLossBelow { threshold: f64 },
}

/// The Adam-then-L-BFGS training schedule of one ASM iteration.
///
/// Adam runs until the loss drops below `switch_loss_threshold` or
/// `adam_max_epochs` is reached; `lbfgs_activation` then decides whether the
/// L-BFGS phase runs at all.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    pub adam: AdamConfig,
    pub adam_max_epochs: usize,
    pub switch_loss_threshold: f64,
    pub lbfgs_activation: LbfgsActivation,
    pub lbfgs: LbfgsConfig,
}

impl PhaseSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.switch_loss_threshold <= 0.0 {
            return Err(Error::config("switch_loss_threshold must be positive"));
        }
        Ok(())
    }
}

/// Which optimizer produced a loss-trace row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Adam,
    Lbfgs,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Adam => "adam",
            Phase::Lbfgs => "lbfgs",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub adam_epochs: usize,
    pub lbfgs_iterations: usize,
    pub lbfgs_status: Option<LbfgsStatus>,
    pub final_loss: f64,
}

/// Run one full schedule on `params` in place.
///
/// `on_record(phase, step, loss, params)` fires once per Adam epoch and per
/// L-BFGS iteration. Divergence errors carry the offending epoch index.
pub fn run_phase_schedule(
    schedule: &PhaseSchedule,
    obj: &dyn Objective,
    params: &mut Vec<f64>,
    mut on_record: impl FnMut(Phase, usize, f64, &[f64]),
) -> Result<PhaseOutcome> {
    schedule.validate()?;
    let n = params.len();
    let mut adam = AdamState::new(n, schedule.adam.clone());
    let mut grad = vec![0.0; n];
    let mut adam_epochs = 0;
    let mut loss = obj.value_and_grad(params, &mut grad)?;
    if !loss.is_finite() {
        return Err(Error::Divergence { epoch: 0, detail: "non-finite loss at schedule start".into() });
    }
    while loss >= schedule.switch_loss_threshold && adam_epochs < schedule.adam_max_epochs {
        adam.step(params, &grad).map_err(|e| match e {
            Error::Divergence { detail, .. } => Error::Divergence { epoch: adam_epochs, detail },
            other => other,
        })?;
        adam_epochs += 1;
        loss = obj.value_and_grad(params, &mut grad)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch: adam_epochs,
                detail: "non-finite loss during Adam phase".into(),
            });
        }
        on_record(Phase::Adam, adam_epochs, loss, params);
    }

    let activate = match schedule.lbfgs_activation {
        LbfgsActivation::AlwaysAfter => true,
        LbfgsActivation::OnlyIfAdamEpochsBelow { max_epochs } => adam_epochs < max_epochs,
        LbfgsActivation::OnlyIfLossBelow { threshold } => loss < threshold,
    };

    let mut lbfgs_iterations = 0;
    let mut lbfgs_status = None;
    if activate {
        let out = lbfgs_minimize(obj, std::mem::take(params), &schedule.lbfgs, |it, f, x| {
            lbfgs_iterations = it;
            on_record(Phase::Lbfgs, it, f, x);
        })?;
        *params = out.params;
        loss = out.loss;
        lbfgs_status = Some(out.status);
    }

    Ok(PhaseOutcome { adam_epochs, lbfgs_iterations, lbfgs_status, final_loss: loss })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic1D;

    impl Objective for Quadratic1D {
        fn dim(&self) -> usize {
            1
        }

        fn value_and_grad(&self, p: &[f64], grad: &mut [f64]) -> Result<f64> {
            grad[0] = p[0];
            Ok(0.5 * p[0] * p[0])
        }
    }

    fn schedule() -> PhaseSchedule {
        PhaseSchedule {
            adam: AdamConfig::with_lr(0.1),
            adam_max_epochs: 500,
            switch_loss_threshold: 1e-4,
            lbfgs_activation: LbfgsActivation::AlwaysAfter,
            lbfgs: LbfgsConfig::default(),
        }
    }

    #[test]
    fn adam_stops_at_threshold_then_lbfgs_polishes() {
        let mut p = vec![1.0];
        let out = run_phase_schedule(&schedule(), &Quadratic1D, &mut p, |_, _, _, _| {}).unwrap();
        assert!(out.adam_epochs < 500);
        assert!(0.5 * p[0] * p[0] < 1e-4);
        assert!(out.lbfgs_status.is_some());
        assert!(out.final_loss <= 1e-4);
    }

    #[test]
    fn threshold_already_met_gives_zero_adam_epochs() {
        let mut p = vec![1e-6];
        let out = run_phase_schedule(&schedule(), &Quadratic1D, &mut p, |_, _, _, _| {}).unwrap();
        assert_eq!(out.adam_epochs, 0);
    }

    #[test]
    fn activation_rule_epochs_below() {
        let mut sched = schedule();
        sched.lbfgs_activation = LbfgsActivation::OnlyIfAdamEpochsBelow { max_epochs: 1 };
        // Adam needs many epochs here, so L-BFGS must not run.
        let mut p = vec![1.0];
        let out = run_phase_schedule(&sched, &Quadratic1D, &mut p, |_, _, _, _| {}).unwrap();
        assert!(out.adam_epochs > 1);
        assert!(out.lbfgs_status.is_none());
        assert_eq!(out.lbfgs_iterations, 0);
    }

    #[test]
    fn budgets_are_never_exceeded() {
        let mut sched = schedule();
        sched.adam_max_epochs = 7;
        sched.lbfgs.max_iterations = 5;
        let mut p = vec![100.0];
        let mut adam_count = 0;
        let mut lbfgs_count = 0;
        run_phase_schedule(&sched, &Quadratic1D, &mut p, |phase, _, _, _| match phase {
            Phase::Adam => adam_count += 1,
            Phase::Lbfgs => lbfgs_count += 1,
        })
        .unwrap();
        assert!(adam_count <= 7);
        assert!(lbfgs_count <= 5);
    }
}
