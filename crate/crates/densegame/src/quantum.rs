//! Operator-level quantum games and their compilation to abstract games
//! over operator-strategy spaces, plus classification of payoff-operator
//! structure (diagonal / co-diagonalizable / general).

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::game::AbstractGame;
use crate::linalg::{
    commutation_residual, hermiticity_residual, kron_all, off_diagonal_residual, trace, C64,
    CMatrix, DensityMatrix, SpaceShape,
};

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0., 0.),
            C64::new(1., 0.),
            C64::new(1., 0.),
            C64::new(0., 0.),
        ],
    )
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0., 0.),
            C64::new(0., -1.),
            C64::new(0., 1.),
            C64::new(0., 0.),
        ],
    )
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(1., 0.),
            C64::new(0., 0.),
            C64::new(0., 0.),
            C64::new(-1., 0.),
        ],
    )
}

/// Elementary operator-basis element |μ><ν| on a q-dimensional space.
pub fn basis_operator(q: usize, mu: usize, nu: usize) -> CMatrix {
    let mut m = CMatrix::zeros(q, q);
    m[(mu, nu)] = C64::new(1.0, 0.0);
    m
}

/// The full Q² elementary basis in row-major (μ, ν) order.
pub fn full_operator_basis(q: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(q * q);
    for mu in 0..q {
        for nu in 0..q {
            out.push(basis_operator(q, mu, nu));
        }
    }
    out
}

/// The quantum object being played on.
#[derive(Debug, Clone)]
pub struct QuantumObject {
    dim: usize,
    rho0: DensityMatrix,
}

impl QuantumObject {
    pub fn new(rho0: DensityMatrix) -> Self {
        QuantumObject {
            dim: rho0.dim(),
            rho0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.rho0
    }
}

/// A strategy operator together with its expansion in an operator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerOperator {
    matrix: CMatrix,
}

impl PlayerOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
                context: "player operator must be square".into(),
            });
        }
        Ok(PlayerOperator { matrix })
    }

    pub fn identity(q: usize) -> Self {
        PlayerOperator {
            matrix: crate::linalg::identity(q),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Expansion coefficients over a basis, via the operator inner
    /// product (assumes the basis orthonormal under it).
    pub fn coefficients(&self, basis: &[CMatrix]) -> Vec<C64> {
        basis
            .iter()
            .map(|b| operator_inner_matrices(b, &self.matrix))
            .collect()
    }

    /// Reassemble an operator from basis coefficients.
    pub fn from_coefficients(basis: &[CMatrix], coeffs: &[C64]) -> Result<Self> {
        if basis.len() != coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coeffs.len(),
                context: "coefficient count".into(),
            });
        }
        let q = basis[0].nrows();
        let mut m = CMatrix::zeros(q, q);
        for (b, &c) in basis.iter().zip(coeffs) {
            m += b.map(|v| v * c);
        }
        PlayerOperator::new(m)
    }

    /// Max |U†U - I| entry.
    pub fn unitarity_residual(&self) -> f64 {
        let q = self.dim();
        crate::linalg::max_abs(&(self.matrix.adjoint() * &self.matrix - crate::linalg::identity(q)))
    }
}

/// Operator inner product (U, V) = Tr(U†V).
pub fn operator_inner(u: &PlayerOperator, v: &PlayerOperator) -> Result<C64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
            context: "operator inner product".into(),
        });
    }
    Ok(operator_inner_matrices(&u.matrix, &v.matrix))
}

fn operator_inner_matrices(u: &CMatrix, v: &CMatrix) -> C64 {
    trace(&(u.adjoint() * v))
}

/// Multilinear rule combining the players' operators into one operator on
/// the quantum object.
#[derive(Debug, Clone)]
pub enum JointRule {
    /// U = U^N ⋯ U^1: operators applied in player declaration order,
    /// player 1 innermost. Every operator acts on the full object space.
    OrderedProduct,
    /// U = U^1 ⊗ ⋯ ⊗ U^N; the object dimension is the product of the
    /// player operator dimensions.
    DirectProduct,
    /// Linear extension of an explicit table over elementary
    /// basis-operator tuples: `table[t]` is the object-space operator for
    /// the joint tuple `t`, row-major over per-player (μ, ν) indices.
    Custom {
        player_dims: Vec<usize>,
        table: Vec<CMatrix>,
    },
}

impl JointRule {
    pub fn kind(&self) -> &'static str {
        match self {
            JointRule::OrderedProduct => "ordered-product",
            JointRule::DirectProduct => "direct-product",
            JointRule::Custom { .. } => "custom",
        }
    }

    /// Evaluate the joint operator for concrete player operators.
    pub fn apply(&self, ops: &[CMatrix], object_dim: usize) -> Result<CMatrix> {
        match self {
            JointRule::OrderedProduct => {
                for (i, op) in ops.iter().enumerate() {
                    if op.nrows() != object_dim || op.ncols() != object_dim {
                        return Err(Error::DimensionMismatch {
                            expected: object_dim,
                            got: op.nrows(),
                            context: format!("player {i} operator under the product rule"),
                        });
                    }
                }
                let mut u = crate::linalg::identity(object_dim);
                for op in ops {
                    u = op * u; // later players compose on the left
                }
                Ok(u)
            }
            JointRule::DirectProduct => {
                let refs: Vec<&CMatrix> = ops.iter().collect();
                let u = kron_all(&refs);
                if u.nrows() != object_dim {
                    return Err(Error::DimensionMismatch {
                        expected: object_dim,
                        got: u.nrows(),
                        context: "direct-product joint operator".into(),
                    });
                }
                Ok(u)
            }
            JointRule::Custom { player_dims, table } => {
                if ops.len() != player_dims.len() {
                    return Err(Error::DimensionMismatch {
                        expected: player_dims.len(),
                        got: ops.len(),
                        context: "custom rule operator count".into(),
                    });
                }
                let sizes: Vec<usize> = player_dims.iter().map(|&d| d * d).collect();
                let total: usize = sizes.iter().product();
                if table.len() != total {
                    return Err(Error::InvalidGame {
                        field: "rule.table".into(),
                        reason: format!("expected {total} entries, got {}", table.len()),
                    });
                }
                let mut out = CMatrix::zeros(object_dim, object_dim);
                for (t, entry) in table.iter().enumerate() {
                    if entry.nrows() != object_dim || entry.ncols() != object_dim {
                        return Err(Error::InvalidGame {
                            field: "rule.table".into(),
                            reason: format!("entry {t} is not {object_dim}x{object_dim}"),
                        });
                    }
                    // coefficient ∏_i (op_i)[μ_i, ν_i] for this tuple
                    let mut rem = t;
                    let mut coeff = C64::new(1.0, 0.0);
                    for (i, &sz) in sizes.iter().enumerate().rev() {
                        let k = rem % sz;
                        rem /= sz;
                        let q = player_dims[i];
                        coeff *= ops[i][(k / q, k % q)];
                    }
                    if coeff.norm_sqr() == 0.0 {
                        continue;
                    }
                    out += entry.map(|v| v * coeff);
                }
                Ok(out)
            }
        }
    }
}

/// Random scalar pull-out check of the rule's multilinearity; the rule is
/// passed as a closure so deliberately corrupted rules can be probed too.
pub fn check_linearity<F>(
    apply: F,
    player_dims: &[usize],
    rng: &mut impl Rng,
    tol: f64,
) -> Result<bool>
where
    F: Fn(&[CMatrix]) -> Result<CMatrix>,
{
    for i in 0..player_dims.len() {
        let ops: Vec<CMatrix> = player_dims
            .iter()
            .map(|&q| {
                let mut m = CMatrix::zeros(q, q);
                for r in 0..q {
                    for c in 0..q {
                        m[(r, c)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    }
                }
                m
            })
            .collect();
        let alpha = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mut scaled = ops.clone();
        scaled[i] = scaled[i].map(|v| v * alpha);
        let lhs = apply(&scaled)?;
        let rhs = apply(&ops)?.map(|v| v * alpha);
        if crate::linalg::max_abs(&(lhs - rhs)) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Quantum game at the operator (manipulation) level.
#[derive(Debug, Clone)]
pub struct OperatorGame {
    object: QuantumObject,
    bases: Vec<Vec<CMatrix>>,
    rule: JointRule,
    payoff_scales: Vec<CMatrix>,
}

impl OperatorGame {
    pub fn new(
        object: QuantumObject,
        bases: Vec<Vec<CMatrix>>,
        rule: JointRule,
        payoff_scales: Vec<CMatrix>,
    ) -> Result<Self> {
        if bases.len() != payoff_scales.len() || bases.is_empty() {
            return Err(Error::InvalidGame {
                field: "bases/payoff_scales".into(),
                reason: "one basis and one payoff scale matrix per player required".into(),
            });
        }
        let q = object.dim();
        for (i, p) in payoff_scales.iter().enumerate() {
            if p.nrows() != q || p.ncols() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: p.nrows(),
                    context: format!("payoff scale matrix {i}"),
                });
            }
            let res = hermiticity_residual(p);
            if res > 1e-12 {
                return Err(Error::NotHermitian {
                    residual: res,
                    tol: 1e-12,
                });
            }
        }
        Ok(OperatorGame {
            object,
            bases,
            rule,
            payoff_scales,
        })
    }

    /// Game with the full Q² elementary basis for every player.
    pub fn with_full_bases(
        object: QuantumObject,
        n_players: usize,
        rule: JointRule,
        payoff_scales: Vec<CMatrix>,
    ) -> Result<Self> {
        let q = object.dim();
        let bases = vec![full_operator_basis(q); n_players];
        OperatorGame::new(object, bases, rule, payoff_scales)
    }

    pub fn object(&self) -> &QuantumObject {
        &self.object
    }

    pub fn n_players(&self) -> usize {
        self.bases.len()
    }

    pub fn basis(&self, i: usize) -> &[CMatrix] {
        &self.bases[i]
    }

    pub fn rule(&self) -> &JointRule {
        &self.rule
    }

    pub fn payoff_scale(&self, i: usize) -> &CMatrix {
        &self.payoff_scales[i]
    }

    /// True when every player's strategy operator is unitary within tol.
    pub fn strategies_unitary(ops: &[PlayerOperator], tol: f64) -> bool {
        ops.iter().all(|op| op.unitarity_residual() <= tol)
    }
}

/// End state of the quantum object: L(ops) ρ0 L(ops)†. Trace may drop
/// below one for non-unitary strategies; that is accepted and reported
/// through the payoff rather than rejected.
pub fn end_state(rule: &JointRule, ops: &[PlayerOperator], rho0: &DensityMatrix) -> Result<CMatrix> {
    let mats: Vec<CMatrix> = ops.iter().map(|o| o.matrix.clone()).collect();
    let u = rule.apply(&mats, rho0.dim())?;
    Ok(&u * rho0.matrix() * u.adjoint())
}

/// E = Tr(P ρ_q) with a Hermitian payoff scale matrix.
pub fn payoff_operator_level(p: &CMatrix, rho_q: &CMatrix) -> Result<f64> {
    let res = hermiticity_residual(p);
    if res > 1e-10 {
        return Err(Error::NotHermitian {
            residual: res,
            tol: 1e-10,
        });
    }
    let t = trace(&(p * rho_q));
    if t.im.abs() > 1e-10 {
        return Err(Error::ImaginaryResidue {
            residual: t.im.abs(),
            tol: 1e-10,
        });
    }
    Ok(t.re)
}

/// Compile an operator-level game to an abstract game on the joint
/// operator-strategy space: H^i_{SS'} = Tr(P^i L(φ̂) ρ0 L†(ψ̂)) over
/// basis tuples φ̂, ψ̂.
pub fn build_abstract(og: &OperatorGame) -> Result<AbstractGame> {
    let sizes: Vec<usize> = og.bases.iter().map(|b| b.len()).collect();
    let dims = SpaceShape::new(sizes.clone())?;
    let joint = dims.joint_dim();
    let q = og.object.dim();
    // precompute L(basis tuple) for every joint tuple
    let mut joint_ops = Vec::with_capacity(joint);
    for s in 0..joint {
        let multi = dims.multi_index(s);
        let mats: Vec<CMatrix> = multi
            .iter()
            .enumerate()
            .map(|(i, &k)| og.bases[i][k].clone())
            .collect();
        joint_ops.push(og.rule.apply(&mats, q)?);
    }
    let rho0 = og.object.initial_state().matrix();
    let mut operators = Vec::with_capacity(og.n_players());
    for i in 0..og.n_players() {
        let p = og.payoff_scale(i);
        let mut h = CMatrix::zeros(joint, joint);
        // index layout chosen so the matrix trace Tr(ρ_S H) against
        // strategy densities ρ = u u† reproduces the operator level
        // exactly: rows take the ψ̂ tuple, columns the φ̂ tuple
        for s in 0..joint {
            let left = &joint_ops[s] * rho0;
            for sp in 0..joint {
                h[(sp, s)] = trace(&(p * &left * joint_ops[sp].adjoint()));
            }
        }
        let res = hermiticity_residual(&h);
        if res > 1e-10 {
            return Err(Error::NotHermitian {
                residual: res,
                tol: 1e-10,
            });
        }
        // clean roundoff so downstream checks see an exactly Hermitian H
        operators.push((&h + h.adjoint()).scale(0.5));
    }
    AbstractGame::new(dims, operators)
}

/// Payoff in the abstract representation for per-player coefficient
/// vectors over the operator bases: E^i = Tr(ρ^S H^i) with
/// ρ^j = c^j (c^j)†. No normalization is imposed; the equivalence with
/// the operator level is exact for any coefficients.
pub fn payoff_abstract(game: &AbstractGame, coeffs: &[Vec<C64>], player: usize) -> Result<f64> {
    let dims = game.dims();
    if coeffs.len() != dims.n_players() {
        return Err(Error::DimensionMismatch {
            expected: dims.n_players(),
            got: coeffs.len(),
            context: "coefficient vector count".into(),
        });
    }
    let factors: Vec<CMatrix> = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d = dims.dim_of(i);
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.len(),
                    context: format!("player {i} coefficient vector"),
                });
            }
            let mut m = CMatrix::zeros(d, d);
            for r in 0..d {
                for cc in 0..d {
                    m[(r, cc)] = c[r] * c[cc].conj();
                }
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&CMatrix> = factors.iter().collect();
    let rho_s = kron_all(&refs);
    let t = trace(&(rho_s * game.payoff_operator(player)));
    if t.im.abs() > 1e-9 {
        return Err(Error::ImaginaryResidue {
            residual: t.im.abs(),
            tol: 1e-9,
        });
    }
    Ok(t.re)
}

/// Max |operator-level payoff − abstract payoff| over random normalized
/// strategy tuples. `game` must be the compilation of `og`.
pub fn verify_equivalence(
    og: &OperatorGame,
    game: &AbstractGame,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = crate::generators::seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let coeffs: Vec<Vec<C64>> = og
            .bases
            .iter()
            .map(|b| crate::generators::random_coefficients(b.len(), &mut rng))
            .collect();
        let ops: Vec<PlayerOperator> = coeffs
            .iter()
            .zip(&og.bases)
            .map(|(c, b)| PlayerOperator::from_coefficients(b, c))
            .collect::<Result<Vec<_>>>()?;
        let rho_q = end_state(&og.rule, &ops, og.object.initial_state())?;
        for i in 0..og.n_players() {
            let op_level = payoff_operator_level(og.payoff_scale(i), &rho_q)?;
            let abstract_level = payoff_abstract(game, &coeffs, i)?;
            worst = worst.max((op_level - abstract_level).abs());
        }
    }
    Ok(worst)
}

/// Unitary 2×2 operator Û = ξI + i x σx + i y σy + i z σz; unit sum of
/// squares is required for unitarity and enforced as a precondition.
pub fn unitary_2x2(xi: f64, x: f64, y: f64, z: f64) -> Result<PlayerOperator> {
    let norm2 = xi * xi + x * x + y * y + z * z;
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized {
            reason: format!("ξ²+x²+y²+z² = {norm2}, expected 1"),
        });
    }
    let i = C64::new(0.0, 1.0);
    let m = crate::linalg::identity(2).map(|v| v * C64::new(xi, 0.0))
        + sigma_x().map(|v| v * i * Complex::new(x, 0.0))
        + sigma_y().map(|v| v * i * Complex::new(y, 0.0))
        + sigma_z().map(|v| v * i * Complex::new(z, 0.0));
    PlayerOperator::new(m)
}

/// Payoff-operator structure classes across the game taxonomy. Entangled
/// strategy spaces are a property of the allowed state set, annotated by
/// the caller, not derived from the operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameClass {
    /// Every payoff operator diagonal: classical (CG / QCG) regime.
    Diagonal,
    /// Commuting family: a shared basis makes the game classical-like.
    CoDiagonalizable,
    /// Genuinely non-commuting payoff operators (PQG / QG regime).
    General,
}

impl std::fmt::Display for GameClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GameClass::Diagonal => write!(f, "diagonal"),
            GameClass::CoDiagonalizable => write!(f, "co-diagonalizable"),
            GameClass::General => write!(f, "general"),
        }
    }
}

pub fn classify(game: &AbstractGame) -> GameClass {
    let all_diagonal = game
        .payoff_operators()
        .iter()
        .all(|h| off_diagonal_residual(h) <= 1e-10);
    if all_diagonal {
        return GameClass::Diagonal;
    }
    match commutation_residual(game.payoff_operators()) {
        Ok(res) if res <= 1e-9 => GameClass::CoDiagonalizable,
        _ => GameClass::General,
    }
}

/// The Penny Flip payoff scales: assign +1 to the up state and -1 to the
/// down state for player 1, the negation for player 2.
pub fn penny_flip_scales() -> (CMatrix, CMatrix) {
    let p1 = sigma_z();
    let p2 = p1.map(|v| -v);
    (p1, p2)
}
