use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::coordination::{Components, CoordinationState, Phi};
use super::walks::WalkSet;
use crate::error::{Error, Result};
use crate::fusion::FusedPredictor;
use crate::linalg::{gaussian_entropy, symmetrized};

/// Cap on joint walks examined by one exhaustive search.
pub const DEFAULT_SEARCH_BUDGET: u64 = 1_000_000;

/// Scores joint walks: a choice of one walk index per listed sensor.
pub trait JointWalkModel: Sync {
    fn walk_sets(&self) -> &[WalkSet];

    /// Covariance of the segments the joint walk would newly observe.
    fn joint_covariance(&self, sensors: &[usize], choice: &[usize]) -> DMatrix<f64>;

    /// Magnitude used to size the jitter when factorizing covariances.
    fn scale(&self) -> f64;

    /// Joint entropy of the induced segments; zero if there are none.
    fn entropy(&self, sensors: &[usize], choice: &[usize]) -> Result<f64> {
        gaussian_entropy(&self.joint_covariance(sensors, choice), self.scale())
    }
}

/// Predictive covariance from a fused global summary, assembled per sensor:
/// each sensor's own block is `Σ_{YY|U} + ΦᵀΦ` and blocks across sensors
/// are `Φ_kᵀ Φ_{k'}`. A sensor's candidate set is deduplicated; segments
/// shared by two sensors appear in both blocks.
#[derive(Clone, Debug)]
pub struct FusedJointModel {
    walk_sets: Vec<WalkSet>,
    conditional: Vec<DMatrix<f64>>,
    phis: Vec<Phi>,
    psi: DMatrix<f64>,
    scale: f64,
}

impl FusedJointModel {
    /// `walk_sets[k]` must belong to sensor `k`.
    pub fn new(predictor: &FusedPredictor<'_>, walk_sets: Vec<WalkSet>) -> Result<Self> {
        let ctx = predictor.context();
        let parts = walk_sets
            .par_iter()
            .map(|ws| {
                let phi = predictor.phi(&ws.candidates)?;
                let cond = ctx.conditional_covariance(&ws.candidates);
                Ok((
                    cond,
                    Phi {
                        sensor: ws.sensor,
                        segments: ws.candidates.clone(),
                        vectors: phi,
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let (conditional, phis) = parts.into_iter().unzip();
        Ok(FusedJointModel {
            walk_sets,
            conditional,
            phis,
            psi: predictor.psi(),
            scale: ctx.kernel().signal_variance(),
        })
    }

    pub fn phis(&self) -> &[Phi] {
        &self.phis
    }

    pub fn coordination(&self, epsilon: f64) -> CoordinationState {
        CoordinationState::from_phis(self.psi.clone(), self.phis.clone(), epsilon)
    }
}

impl JointWalkModel for FusedJointModel {
    fn walk_sets(&self) -> &[WalkSet] {
        &self.walk_sets
    }

    fn joint_covariance(&self, sensors: &[usize], choice: &[usize]) -> DMatrix<f64> {
        let picks: Vec<(usize, &[usize])> = sensors
            .iter()
            .zip(choice)
            .map(|(&k, &w)| (k, self.walk_sets[k].induced_positions(w)))
            .collect();
        let n: usize = picks.iter().map(|(_, p)| p.len()).sum();
        let mut cov = DMatrix::zeros(n, n);
        let mut row = 0;
        for &(ka, pa) in &picks {
            let mut col = 0;
            for &(kb, pb) in &picks {
                let (fa, fb) = (&self.phis[ka].vectors, &self.phis[kb].vectors);
                for (i, &a) in pa.iter().enumerate() {
                    for (j, &b) in pb.iter().enumerate() {
                        let mut v = fa.column(a).dot(&fb.column(b));
                        if ka == kb {
                            v += self.conditional[ka][(a, b)];
                        }
                        cov[(row + i, col + j)] = v;
                    }
                }
                col += pb.len();
            }
            row += pa.len();
        }
        symmetrized(&cov)
    }

    fn scale(&self) -> f64 {
        self.scale
    }
}

/// Scores joint walks with one explicit covariance over every candidate
/// segment; the segments of a joint walk are deduplicated across sensors.
#[derive(Clone, Debug)]
pub struct PosteriorJointModel {
    walk_sets: Vec<WalkSet>,
    union: Vec<usize>,
    cov: DMatrix<f64>,
    positions: Vec<Vec<Vec<usize>>>,
    scale: f64,
}

impl PosteriorJointModel {
    /// `covariance` is called once with the ascending union of all
    /// candidate sets and must return the covariance over it.
    pub fn new(
        walk_sets: Vec<WalkSet>,
        scale: f64,
        covariance: impl FnOnce(&[usize]) -> Result<DMatrix<f64>>,
    ) -> Result<Self> {
        let union: Vec<usize> = walk_sets
            .iter()
            .flat_map(|ws| ws.candidates.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cov = covariance(&union)?;
        if cov.nrows() != union.len() || cov.ncols() != union.len() {
            return Err(Error::LengthMismatch {
                left: cov.nrows(),
                right: union.len(),
            });
        }
        let positions = walk_sets
            .iter()
            .map(|ws| {
                (0..ws.len())
                    .map(|w| {
                        ws.induced_positions(w)
                            .iter()
                            .map(|&p| {
                                union
                                    .binary_search(&ws.candidates[p])
                                    .expect("union holds every candidate")
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(PosteriorJointModel {
            walk_sets,
            union,
            cov,
            positions,
            scale,
        })
    }

    pub fn candidates(&self) -> &[usize] {
        &self.union
    }
}

impl JointWalkModel for PosteriorJointModel {
    fn walk_sets(&self) -> &[WalkSet] {
        &self.walk_sets
    }

    fn joint_covariance(&self, sensors: &[usize], choice: &[usize]) -> DMatrix<f64> {
        let idx: Vec<usize> = sensors
            .iter()
            .zip(choice)
            .flat_map(|(&k, &w)| self.positions[k][w].iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        self.cov.select_rows(&idx).select_columns(&idx)
    }

    fn scale(&self) -> f64 {
        self.scale
    }
}

/// A choice of walk per sensor in `sensors` and its joint entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct JointWalk {
    pub sensors: Vec<usize>,
    pub choice: Vec<usize>,
    pub entropy: f64,
}

/// Number of joint walks over `sensors`, saturating.
pub fn joint_space_size<M: JointWalkModel + ?Sized>(model: &M, sensors: &[usize]) -> u128 {
    sensors.iter().fold(1u128, |acc, &k| {
        acc.saturating_mul(model.walk_sets()[k].len() as u128)
    })
}

fn check_budget<M: JointWalkModel + ?Sized>(
    model: &M,
    sensors: &[usize],
    budget: u64,
) -> Result<()> {
    if sensors.is_empty() {
        return Err(Error::EmptyComponent);
    }
    let required = joint_space_size(model, sensors);
    if required > budget as u128 {
        return Err(Error::SearchBudgetExceeded { required, budget });
    }
    Ok(())
}

/// Calls `visit` on every joint walk in lexicographic order of walk indices.
pub(crate) fn for_each_joint_walk<M: JointWalkModel + ?Sized>(
    model: &M,
    sensors: &[usize],
    mut visit: impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    let sizes: Vec<usize> = sensors
        .iter()
        .map(|&k| model.walk_sets()[k].len())
        .collect();
    if sizes.contains(&0) {
        return Ok(());
    }
    let mut choice = vec![0; sensors.len()];
    loop {
        visit(&choice)?;
        let mut pos = choice.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < sizes[pos] {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// Exhaustive arg max of the joint entropy over the joint walks of
/// `sensors`. The first maximizer in lexicographic order wins ties.
pub fn max_entropy_joint_walk<M: JointWalkModel + ?Sized>(
    model: &M,
    sensors: &[usize],
    budget: u64,
) -> Result<JointWalk> {
    check_budget(model, sensors, budget)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_joint_walk(model, sensors, |choice| {
        let h = model.entropy(sensors, choice)?;
        if best.as_ref().is_none_or(|(_, b)| h > *b) {
            best = Some((choice.to_vec(), h));
        }
        Ok(())
    })?;
    let (choice, entropy) = best.ok_or(Error::EmptyComponent)?;
    Ok(JointWalk {
        sensors: sensors.to_vec(),
        choice,
        entropy,
    })
}

/// Arg max over the joint walks of all sensors at once.
pub fn centralized_joint_walk<M: JointWalkModel + ?Sized>(
    model: &M,
    budget: u64,
) -> Result<JointWalk> {
    let all: Vec<usize> = (0..model.walk_sets().len()).collect();
    max_entropy_joint_walk(model, &all, budget)
}

/// Plans every component independently and returns one walk index per
/// sensor. Budgets are checked for all components before any search runs.
pub fn plan_components<M: JointWalkModel + ?Sized>(
    model: &M,
    components: &Components,
    budget: u64,
) -> Result<Vec<usize>> {
    for group in &components.groups {
        check_budget(model, group, budget)?;
    }
    let plans = components
        .groups
        .par_iter()
        .map(|g| max_entropy_joint_walk(model, g, budget))
        .collect::<Result<Vec<_>>>()?;
    let mut choice = vec![0; model.walk_sets().len()];
    for plan in plans {
        for (&k, &w) in plan.sensors.iter().zip(&plan.choice) {
            choice[k] = w;
        }
    }
    Ok(choice)
}
