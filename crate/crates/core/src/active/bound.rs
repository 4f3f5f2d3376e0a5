use serde::Serialize;

use super::coordination::Components;
use super::search::{centralized_joint_walk, for_each_joint_walk, plan_components, JointWalkModel};
use crate::error::{Error, Result};
use crate::linalg::Factor;

/// `K^1.5 L^2.5 κ ξ ε` and, when it is below one, the entropy-loss bound
/// `ε̄ = ½ log(1 / (1 − c²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossBound {
    pub condition_value: f64,
    pub epsilon_bar: Option<f64>,
}

impl LossBound {
    pub fn holds(&self) -> bool {
        self.epsilon_bar.is_some()
    }
}

pub fn loss_bound(
    sensors: usize,
    walk_length: usize,
    kappa: usize,
    xi: f64,
    epsilon: f64,
) -> LossBound {
    let c =
        (sensors as f64).powf(1.5) * (walk_length as f64).powf(2.5) * kappa as f64 * xi * epsilon;
    let epsilon_bar = (c < 1.0).then(|| 0.5 * (1.0 / (1.0 - c * c)).ln());
    LossBound {
        condition_value: c,
        epsilon_bar,
    }
}

/// Largest absolute entry of any inverse joint covariance, over every joint
/// walk of every component. Empty covariances contribute nothing; a
/// covariance that only factors with jitter is reported as not positive
/// definite.
pub fn compute_xi<M: JointWalkModel + ?Sized>(model: &M, components: &Components) -> Result<f64> {
    let mut xi = 0.0_f64;
    for group in &components.groups {
        for_each_joint_walk(model, group, |choice| {
            let cov = model.joint_covariance(group, choice);
            if cov.nrows() > 0 {
                let factor = Factor::new(&cov, model.scale())?;
                if factor.jitter() > 0.0 {
                    return Err(Error::NotPositiveDefinite {
                        order: cov.nrows(),
                        jitter: factor.jitter(),
                    });
                }
                let inv = factor.inverse();
                xi = inv.iter().fold(xi, |m, v| m.max(v.abs()));
            }
            Ok(())
        })?;
    }
    Ok(xi)
}

/// Compares the centralized optimum with the per-component plan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub xi: f64,
    pub epsilon: f64,
    pub kappa: usize,
    #[serde(rename = "K")]
    pub sensors: usize,
    #[serde(rename = "L")]
    pub walk_length: usize,
    pub condition_value: f64,
    pub epsilon_bar: Option<f64>,
    pub centralized_entropy: f64,
    pub decentralized_entropy: f64,
    pub achieved_gap: f64,
    pub centralized_choice: Vec<usize>,
    pub decentralized_choice: Vec<usize>,
}

impl BoundReport {
    /// `Some(true)` when the bound applies and the gap respects it.
    pub fn satisfied(&self, tolerance: f64) -> Option<bool> {
        self.epsilon_bar.map(|b| self.achieved_gap <= b + tolerance)
    }
}

pub fn bound_report<M: JointWalkModel + ?Sized>(
    model: &M,
    components: &Components,
    epsilon: f64,
    walk_length: usize,
    budget: u64,
) -> Result<BoundReport> {
    let k = model.walk_sets().len();
    let all: Vec<usize> = (0..k).collect();
    let best = centralized_joint_walk(model, budget)?;
    let plan = plan_components(model, components, budget)?;
    let decentralized_entropy = model.entropy(&all, &plan)?;
    // A singular joint covariance makes ξ unbounded, so the condition fails.
    let xi = match compute_xi(model, components) {
        Err(Error::NotPositiveDefinite { .. }) => f64::INFINITY,
        other => other?,
    };
    let bound = loss_bound(k, walk_length, components.kappa, xi, epsilon);
    Ok(BoundReport {
        xi,
        epsilon,
        kappa: components.kappa,
        sensors: k,
        walk_length,
        condition_value: bound.condition_value,
        epsilon_bar: bound.epsilon_bar,
        centralized_entropy: best.entropy,
        decentralized_entropy,
        achieved_gap: best.entropy - decentralized_entropy,
        centralized_choice: best.choice,
        decentralized_choice: plan,
    })
}
