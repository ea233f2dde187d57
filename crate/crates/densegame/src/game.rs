//! Classical games as payoff tensors, their lift to diagonal Hermitian
//! payoff operators, and every payoff-evaluation path (multilinear sum,
//! full trace, reduced-matrix trace).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    hermiticity_residual, trace, C64, CMatrix, DensityMatrix, NumericPolicy,
    SpaceShape,
};

/// N-player game given by per-player real payoff tensors over joint pure
/// strategies, flattened row-major in player declaration order.
#[derive(Debug, Clone)]
pub struct ClassicalGame {
    dims: SpaceShape,
    payoff_tensors: Vec<Vec<f64>>,
}

impl ClassicalGame {
    pub fn new(dims: SpaceShape, payoff_tensors: Vec<Vec<f64>>) -> Result<Self> {
        let joint = dims.joint_dim();
        if payoff_tensors.len() != dims.n_players() {
            return Err(Error::InvalidGame {
                field: "payoff_tensors".into(),
                reason: format!(
                    "expected one tensor per player ({}), got {}",
                    dims.n_players(),
                    payoff_tensors.len()
                ),
            });
        }
        for (i, t) in payoff_tensors.iter().enumerate() {
            if t.len() != joint {
                return Err(Error::InvalidGame {
                    field: format!("payoff_tensors[{i}]"),
                    reason: format!("expected {joint} entries, got {}", t.len()),
                });
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame {
                    field: format!("payoff_tensors[{i}]"),
                    reason: "non-finite payoff entry".into(),
                });
            }
        }
        Ok(ClassicalGame {
            dims,
            payoff_tensors,
        })
    }

    pub fn dims(&self) -> &SpaceShape {
        &self.dims
    }

    pub fn n_players(&self) -> usize {
        self.dims.n_players()
    }

    pub fn tensor(&self, i: usize) -> &[f64] {
        &self.payoff_tensors[i]
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.payoff_tensors
    }

    /// Payoff tensor entry for a joint pure-strategy profile.
    pub fn entry(&self, i: usize, multi: &[usize]) -> f64 {
        self.payoff_tensors[i][self.dims.joint_index(multi)]
    }
}

/// Game over the joint space given directly by Hermitian payoff operators.
/// Houses both classical-diagonal lifts and quantum games.
#[derive(Debug, Clone)]
pub struct AbstractGame {
    dims: SpaceShape,
    payoff_operators: Vec<CMatrix>,
}

impl AbstractGame {
    pub fn new(dims: SpaceShape, payoff_operators: Vec<CMatrix>) -> Result<Self> {
        let joint = dims.joint_dim();
        if payoff_operators.is_empty() {
            return Err(Error::InvalidGame {
                field: "payoff_operators".into(),
                reason: "at least one payoff operator required".into(),
            });
        }
        for (i, h) in payoff_operators.iter().enumerate() {
            if h.nrows() != joint || h.ncols() != joint {
                return Err(Error::DimensionMismatch {
                    expected: joint,
                    got: h.nrows(),
                    context: format!("payoff operator {i}"),
                });
            }
            let res = hermiticity_residual(h);
            if res > 1e-10 {
                return Err(Error::NotHermitian {
                    residual: res,
                    tol: 1e-10,
                });
            }
        }
        Ok(AbstractGame {
            dims,
            payoff_operators,
        })
    }

    pub fn dims(&self) -> &SpaceShape {
        &self.dims
    }

    pub fn n_players(&self) -> usize {
        self.dims.n_players()
    }

    pub fn payoff_operator(&self, i: usize) -> &CMatrix {
        &self.payoff_operators[i]
    }

    pub fn payoff_operators(&self) -> &[CMatrix] {
        &self.payoff_operators
    }
}

/// Per-player probability vectors over pure strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    probs: Vec<Vec<f64>>,
}

impl MixedProfile {
    pub fn new(probs: Vec<Vec<f64>>, policy: &NumericPolicy) -> Result<Self> {
        for (i, p) in probs.iter().enumerate() {
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > policy.equality {
                return Err(Error::InvalidDistribution {
                    reason: format!("player {i}: probabilities sum to {sum}"),
                });
            }
            if p.iter().any(|&x| x < -policy.equality) {
                return Err(Error::InvalidDistribution {
                    reason: format!("player {i}: negative probability"),
                });
            }
        }
        Ok(MixedProfile { probs })
    }

    pub fn uniform(dims: &SpaceShape) -> Self {
        MixedProfile {
            probs: dims
                .dims()
                .iter()
                .map(|&d| vec![1.0 / d as f64; d])
                .collect(),
        }
    }

    pub fn pure(dims: &SpaceShape, choices: &[usize]) -> Self {
        MixedProfile {
            probs: dims
                .dims()
                .iter()
                .zip(choices)
                .map(|(&d, &k)| {
                    let mut p = vec![0.0; d];
                    p[k] = 1.0;
                    p
                })
                .collect(),
        }
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn player(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }

    pub fn n_players(&self) -> usize {
        self.probs.len()
    }
}

/// Per-player density matrices; diagonal for classical play, general for
/// quantum strategy spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    factors: Vec<DensityMatrix>,
}

impl DensityProfile {
    pub fn new(factors: Vec<DensityMatrix>) -> Self {
        DensityProfile { factors }
    }

    pub fn factors(&self) -> &[DensityMatrix] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &DensityMatrix {
        &self.factors[i]
    }

    pub fn n_players(&self) -> usize {
        self.factors.len()
    }

    pub fn set_factor(&mut self, i: usize, f: DensityMatrix) {
        self.factors[i] = f;
    }

    /// Joint system state ρ^S = ⊗ᵢ ρ^i.
    pub fn joint(&self) -> CMatrix {
        let refs: Vec<&CMatrix> = self.factors.iter().map(|f| f.matrix()).collect();
        crate::linalg::kron_all(&refs)
    }

    /// Per-player diagonal probability vectors (real parts of diagonals).
    pub fn diagonal_probs(&self) -> Vec<Vec<f64>> {
        self.factors.iter().map(|f| f.diagonal_probs()).collect()
    }

    /// Max off-diagonal magnitude across factors.
    pub fn off_diagonal_residual(&self) -> f64 {
        self.factors
            .iter()
            .fold(0.0f64, |a, f| a.max(f.off_diagonal_residual()))
    }

    /// L1 distance between the diagonals of two profiles.
    pub fn l1_diagonal_distance(&self, other: &DensityProfile) -> f64 {
        self.factors
            .iter()
            .zip(other.factors.iter())
            .map(|(a, b)| {
                a.diagonal_probs()
                    .iter()
                    .zip(b.diagonal_probs())
                    .map(|(x, y)| (x - y).abs())
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Lift payoff tensors to diagonal payoff operators: H^i_{SS} = G^i_S
/// under the row-major composite index.
pub fn build_h_from_g(g: &ClassicalGame) -> AbstractGame {
    let joint = g.dims().joint_dim();
    let ops = g
        .tensors()
        .iter()
        .map(|t| {
            let mut h = CMatrix::zeros(joint, joint);
            for (s, &v) in t.iter().enumerate() {
                h[(s, s)] = C64::new(v, 0.0);
            }
            h
        })
        .collect();
    AbstractGame::new(g.dims().clone(), ops).expect("diagonal lift is always Hermitian")
}

/// Multilinear expectation Σ_S G^i_S p^1 ... p^N.
pub fn payoff_classical(g: &ClassicalGame, p: &MixedProfile, player: usize) -> Result<f64> {
    if p.n_players() != g.n_players() {
        return Err(Error::DimensionMismatch {
            expected: g.n_players(),
            got: p.n_players(),
            context: "mixed profile player count".into(),
        });
    }
    for (i, pi) in p.probs().iter().enumerate() {
        if pi.len() != g.dims().dim_of(i) {
            return Err(Error::DimensionMismatch {
                expected: g.dims().dim_of(i),
                got: pi.len(),
                context: format!("player {i} strategy count"),
            });
        }
    }
    let tensor = g.tensor(player);
    let mut total = 0.0;
    for (s, &gv) in tensor.iter().enumerate() {
        let multi = g.dims().multi_index(s);
        let weight: f64 = multi
            .iter()
            .enumerate()
            .map(|(j, &m)| p.player(j)[m])
            .product();
        total += gv * weight;
    }
    Ok(total)
}

fn check_profile(game: &AbstractGame, rho: &DensityProfile) -> Result<()> {
    if rho.n_players() != game.n_players() {
        return Err(Error::DimensionMismatch {
            expected: game.n_players(),
            got: rho.n_players(),
            context: "density profile player count".into(),
        });
    }
    for (i, f) in rho.factors().iter().enumerate() {
        if f.dim() != game.dims().dim_of(i) {
            return Err(Error::DimensionMismatch {
                expected: game.dims().dim_of(i),
                got: f.dim(),
                context: format!("player {i} factor dimension"),
            });
        }
    }
    Ok(())
}

fn real_trace_checked(t: Complex<f64>, tol: f64) -> Result<f64> {
    if t.im.abs() > tol {
        return Err(Error::ImaginaryResidue {
            residual: t.im.abs(),
            tol,
        });
    }
    Ok(t.re)
}

/// Trace payoff E^i = Tr(ρ^S H^i).
pub fn payoff_trace(game: &AbstractGame, rho: &DensityProfile, player: usize) -> Result<f64> {
    check_profile(game, rho)?;
    let h = game.payoff_operator(player);
    let joint = rho.joint();
    // Tr(ρS H) without materializing the product matrix
    let d = joint.nrows();
    let mut t = C64::new(0.0, 0.0);
    for r in 0..d {
        for c in 0..d {
            t += joint[(r, c)] * h[(c, r)];
        }
    }
    real_trace_checked(t, 1e-10)
}

/// Reduced payoff matrix H^i_R = Tr_{-i}((⊗_{j≠i} ρ^j) H^i): the
/// opponents' factors are contracted directly, never forming ρ^S.
pub fn reduced_payoff(game: &AbstractGame, rho: &DensityProfile, player: usize) -> Result<CMatrix> {
    check_profile(game, rho)?;
    let opponents: Vec<&CMatrix> = (0..game.n_players())
        .filter(|&j| j != player)
        .map(|j| rho.factor(j).matrix())
        .collect();
    crate::linalg::contract_except(game.payoff_operator(player), game.dims(), player, &opponents)
}

/// E^i = Tr^i(ρ^i H^i_R).
pub fn payoff_reduced(rho_i: &DensityMatrix, h_r: &CMatrix) -> Result<f64> {
    if h_r.nrows() != rho_i.dim() || h_r.ncols() != rho_i.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho_i.dim(),
            got: h_r.nrows(),
            context: "reduced payoff matrix".into(),
        });
    }
    let res = hermiticity_residual(h_r);
    if res > 1e-10 {
        return Err(Error::NotHermitian {
            residual: res,
            tol: 1e-10,
        });
    }
    let t = trace(&(rho_i.matrix() * h_r));
    real_trace_checked(t, 1e-10)
}

/// Diagonal density profile from a mixed profile.
pub fn mixed_to_density(p: &MixedProfile, policy: &NumericPolicy) -> Result<DensityProfile> {
    let factors = p
        .probs()
        .iter()
        .map(|probs| DensityMatrix::from_probs(probs, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityProfile::new(factors))
}

/// p_μ = |φ_μ|² of a normalized amplitude vector.
pub fn wavefunction_to_mixed(phi: &[C64], policy: &NumericPolicy) -> Result<Vec<f64>> {
    let norm2: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized {
            reason: format!("amplitude vector has squared norm {norm2}"),
        });
    }
    let _ = policy;
    Ok(phi.iter().map(|c| c.norm_sqr()).collect())
}
