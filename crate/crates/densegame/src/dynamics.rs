//! Boltzmann pseudo-dynamical iteration: per-player softmax responses to
//! reduced payoff matrices, trajectory recording, and pattern
//! (convergence / cycle) detection.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::game::{payoff_reduced, reduced_payoff, AbstractGame, DensityProfile};
use crate::linalg::{eigh, off_diagonal_residual, C64, CMatrix, DensityMatrix, NumericPolicy};
use crate::nash::nash_map;

/// Player update policy for one dynamics step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateOrder {
    /// Sequential updates in player-index order, each immediately visible
    /// to later players.
    RoundRobin,
    /// Sequential updates in a fixed custom permutation of players.
    Custom(Vec<usize>),
    /// All updates computed from the step-start profile.
    Simultaneous,
}

#[derive(Debug, Clone)]
pub struct PdeConfig {
    /// Inverse-temperature weight on the payoff.
    pub beta: f64,
    pub order: UpdateOrder,
    pub tol: f64,
    pub max_steps: usize,
    /// How many recent states the cycle detector remembers.
    pub cycle_window: usize,
    /// Keep every k-th trajectory step (1 = full fidelity). States inside
    /// the cycle-detection window are always tracked regardless.
    pub thinning: usize,
    /// Accept non-diagonal reduced payoff matrices (an extrapolation of
    /// the classical derivation to general Hermitian operators).
    pub allow_nondiagonal: bool,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            beta: 1.0,
            order: UpdateOrder::RoundRobin,
            tol: 1e-10,
            max_steps: 10_000,
            cycle_window: 64,
            thinning: 1,
            allow_nondiagonal: false,
        }
    }
}

impl PdeConfig {
    pub fn validate(&self, n_players: usize) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::Invalid(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if self.max_steps < 1 {
            return Err(Error::Invalid("max_steps must be >= 1".into()));
        }
        if let UpdateOrder::Custom(perm) = &self.order {
            let mut seen = vec![false; n_players];
            if perm.len() != n_players || perm.iter().any(|&p| p >= n_players || std::mem::replace(&mut seen[p], true)) {
                return Err(Error::Invalid(format!(
                    "custom order {perm:?} is not a permutation of 0..{n_players}"
                )));
            }
        }
        Ok(())
    }
}

/// One recorded step of a run.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub step: usize,
    /// Per-player diagonal probabilities of the profile after the step.
    pub probs: Vec<Vec<f64>>,
    pub payoffs: Vec<f64>,
    /// Per-player reduced-payoff diagonals at the recorded profile.
    pub reduced_diagonals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    /// CSV export: `step,player,entry_index,probability,payoff`, one row
    /// per diagonal entry per player per recorded step, LF line endings,
    /// 17 significant digits.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(b"step,player,entry_index,probability,payoff\n")?;
        for s in &self.steps {
            for (player, probs) in s.probs.iter().enumerate() {
                for (entry, &p) in probs.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{:.16e},{:.16e}",
                        s.step, player, entry, p, s.payoffs[player]
                    )?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternKind {
    Converged,
    Cycle { period: usize },
    None,
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PatternKind::Converged => write!(f, "converged"),
            PatternKind::Cycle { period } => write!(f, "cycle:{period}"),
            PatternKind::None => write!(f, "none"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PatternReport {
    pub kind: PatternKind,
    pub residual: f64,
    pub steps_taken: usize,
}

/// Boltzmann response e^{βH_R} / Tr e^{βH_R}, stabilized by shifting the
/// spectrum by its maximum before exponentiating (the trace
/// normalization cancels the shift exactly). `beta = +∞` is handled as a
/// dedicated best-response mode: uniform mass over the argmax set.
pub fn boltzmann_update(h_r: &CMatrix, beta: f64, policy: &NumericPolicy) -> Result<DensityMatrix> {
    let d = h_r.nrows();
    if off_diagonal_residual(h_r) <= policy.hermiticity {
        // diagonal fast path: softmax of the diagonal
        let diag: Vec<f64> = (0..d).map(|k| h_r[(k, k)].re).collect();
        let probs = stabilized_softmax(&diag, beta);
        return DensityMatrix::from_probs(&probs, policy);
    }
    let (vals, vecs) = eigh(h_r, policy.hermiticity)?;
    let weights = stabilized_softmax(&vals, beta);
    let mut m = CMatrix::zeros(d, d);
    for (k, &w) in weights.iter().enumerate() {
        m[(k, k)] = C64::new(w, 0.0);
    }
    DensityMatrix::new(&vecs * m * vecs.adjoint(), policy)
}

fn stabilized_softmax(vals: &[f64], beta: f64) -> Vec<f64> {
    let max = vals.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    if beta.is_infinite() {
        // ties within 1e-12 of the max split equally
        let hits: Vec<bool> = vals.iter().map(|&v| max - v <= 1e-12).collect();
        let count = hits.iter().filter(|&&h| h).count() as f64;
        return hits
            .iter()
            .map(|&h| if h { 1.0 / count } else { 0.0 })
            .collect();
    }
    let raw: Vec<f64> = vals.iter().map(|&v| (beta * (v - max)).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|&x| x / sum).collect()
}

/// One dynamics step. Sequential modes replace each player's factor in
/// the configured order, each update immediately visible to later
/// players; simultaneous mode computes every update from the step-start
/// profile.
pub fn pde_step(
    game: &AbstractGame,
    rho: &DensityProfile,
    cfg: &PdeConfig,
    policy: &NumericPolicy,
) -> Result<DensityProfile> {
    let n = rho.n_players();
    let response = |current: &DensityProfile, i: usize| -> Result<DensityMatrix> {
        let h_r = reduced_payoff(game, current, i)?;
        if !cfg.allow_nondiagonal && off_diagonal_residual(&h_r) > policy.hermiticity {
            return Err(Error::NotDiagonal {
                residual: off_diagonal_residual(&h_r),
                tol: policy.hermiticity,
            });
        }
        boltzmann_update(&h_r, cfg.beta, policy)
    };
    match &cfg.order {
        UpdateOrder::Simultaneous => {
            let factors = (0..n)
                .map(|i| response(rho, i))
                .collect::<Result<Vec<_>>>()?;
            Ok(DensityProfile::new(factors))
        }
        order => {
            let sequence: Vec<usize> = match order {
                UpdateOrder::RoundRobin => (0..n).collect(),
                UpdateOrder::Custom(perm) => perm.clone(),
                UpdateOrder::Simultaneous => unreachable!(),
            };
            let mut current = rho.clone();
            for &i in &sequence {
                let f = response(&current, i)?;
                current.set_factor(i, f);
            }
            Ok(current)
        }
    }
}

/// Quantize a profile's diagonals for cycle detection.
fn state_key(rho: &DensityProfile) -> Vec<i64> {
    rho.diagonal_probs()
        .iter()
        .flatten()
        .map(|&p| (p / 1e-9).round() as i64)
        .collect()
}

fn record_step(
    game: &AbstractGame,
    rho: &DensityProfile,
    step: usize,
    traj: &mut Trajectory,
) -> Result<()> {
    let n = rho.n_players();
    let mut payoffs = Vec::with_capacity(n);
    let mut reduced = Vec::with_capacity(n);
    for i in 0..n {
        let h_r = reduced_payoff(game, rho, i)?;
        payoffs.push(payoff_reduced(rho.factor(i), &h_r)?);
        reduced.push((0..h_r.nrows()).map(|k| h_r[(k, k)].re).collect());
    }
    traj.steps.push(TrajectoryStep {
        step,
        probs: rho.diagonal_probs(),
        payoffs,
        reduced_diagonals: reduced,
    });
    Ok(())
}

/// Run the iteration until the residual drops below tolerance, a state
/// revisit is detected inside the cycle window, or max_steps is hit.
pub fn pde_run(
    game: &AbstractGame,
    rho0: &DensityProfile,
    cfg: &PdeConfig,
    policy: &NumericPolicy,
) -> Result<(Trajectory, PatternReport)> {
    cfg.validate(rho0.n_players())?;
    let mut traj = Trajectory::default();
    record_step(game, rho0, 0, &mut traj)?;
    let mut recent: VecDeque<Vec<i64>> = VecDeque::with_capacity(cfg.cycle_window);
    recent.push_back(state_key(rho0));
    let mut current = rho0.clone();
    let thin = cfg.thinning.max(1);
    for step in 1..=cfg.max_steps {
        let next = pde_step(game, &current, cfg, policy)?;
        let residual = next.l1_diagonal_distance(&current);
        current = next;
        if step % thin == 0 || residual < cfg.tol {
            record_step(game, &current, step, &mut traj)?;
        }
        if residual < cfg.tol {
            return Ok((
                traj,
                PatternReport {
                    kind: PatternKind::Converged,
                    residual,
                    steps_taken: step,
                },
            ));
        }
        let key = state_key(&current);
        if let Some(pos) = recent.iter().rposition(|k| *k == key) {
            let period = recent.len() - pos;
            if period >= 2 {
                return Ok((
                    traj,
                    PatternReport {
                        kind: PatternKind::Cycle { period },
                        residual,
                        steps_taken: step,
                    },
                ));
            }
        }
        recent.push_back(key);
        if recent.len() > cfg.cycle_window {
            recent.pop_front();
        }
    }
    let residual = traj
        .steps
        .last()
        .map(|_| {
            let prev = pde_step(game, &current, cfg, policy).unwrap_or_else(|_| current.clone());
            prev.l1_diagonal_distance(&current)
        })
        .unwrap_or(f64::INFINITY);
    Ok((
        traj,
        PatternReport {
            kind: PatternKind::None,
            residual,
            steps_taken: cfg.max_steps,
        },
    ))
}

/// Master-equation right-hand side dp(x)/dt with the source-independent
/// transition rate w(x'→x) = e^{βE(x)} / Σ_y e^{βE(y)}. Components sum
/// to zero exactly (probability conservation).
pub fn master_equation_rhs(p: &[f64], payoffs: &[f64], beta: f64) -> Result<Vec<f64>> {
    if p.len() != payoffs.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: payoffs.len(),
            context: "master equation payoff vector".into(),
        });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-10 || p.iter().any(|&x| x < -1e-12) {
        return Err(Error::InvalidDistribution {
            reason: format!("p sums to {sum}"),
        });
    }
    let w = stabilized_softmax(payoffs, beta); // target distribution
    // Σ_{x'} w(x'→x) p(x') − Σ_{x'} w(x→x') p(x) = w(x) − p(x)·Σ_y w(y)
    Ok(p.iter().zip(&w).map(|(&px, &wx)| wx - px).collect())
}

/// Diagnostic comparing one constructive-mapping step against one
/// simultaneous Boltzmann step: returns both profiles and the L1
/// distance between them. No equality is claimed.
pub fn nash_map_comparison(
    game: &AbstractGame,
    rho: &DensityProfile,
    beta: f64,
    policy: &NumericPolicy,
) -> Result<(DensityProfile, DensityProfile, f64)> {
    let mapped = nash_map(game, rho, policy)?;
    let cfg = PdeConfig {
        beta,
        order: UpdateOrder::Simultaneous,
        ..PdeConfig::default()
    };
    let stepped = pde_step(game, rho, &cfg, policy)?;
    let dist = mapped.l1_diagonal_distance(&stepped);
    Ok((mapped, stepped, dist))
}
