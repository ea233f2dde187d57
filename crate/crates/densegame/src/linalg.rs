//! Complex dense linear algebra over multi-party state spaces.
//!
//! Everything here works on `CMatrix` (a dense `nalgebra` matrix of
//! `Complex<f64>`) and is specialized to tensor-product structure:
//! Kronecker products, partial traces over player factors, Hermitian
//! exponentials and simultaneous diagonalization of commuting families.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Centralized numeric tolerances. All checks take these unless a caller
/// overrides a tolerance explicitly.
#[derive(Debug, Clone, Copy)]
pub struct NumericPolicy {
    /// Max allowed |M - M†| entry for a matrix to count as Hermitian.
    pub hermiticity: f64,
    /// Floor on the smallest eigenvalue of a density matrix.
    pub psd_floor: f64,
    /// Generic equality tolerance (traces, probabilities).
    pub equality: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            hermiticity: 1e-10,
            psd_floor: -1e-10,
            equality: 1e-12,
        }
    }
}

/// Joint-space dimension cap; `DENSEGAME_MAX_DIM` overrides the default.
pub fn dim_cap() -> usize {
    std::env::var("DENSEGAME_MAX_DIM")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_DIM_CAP)
}

/// Ordered per-player space dimensions; the joint space is their
/// row-major tensor product in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceShape {
    dims: Vec<usize>,
}

impl SpaceShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 1) {
            return Err(Error::Invalid(
                "space shape requires at least one player, all dims >= 1".into(),
            ));
        }
        let joint: usize = dims.iter().product();
        let cap = dim_cap();
        if joint > cap {
            return Err(Error::DimensionCap { dim: joint, cap });
        }
        Ok(SpaceShape { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_players(&self) -> usize {
        self.dims.len()
    }

    pub fn joint_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dim_of(&self, i: usize) -> usize {
        self.dims[i]
    }

    /// Product of dims strictly before player `i`.
    pub fn pre_dim(&self, i: usize) -> usize {
        self.dims[..i].iter().product()
    }

    /// Product of dims strictly after player `i`.
    pub fn post_dim(&self, i: usize) -> usize {
        self.dims[i + 1..].iter().product()
    }

    /// Row-major composite index of a joint pure strategy.
    pub fn joint_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims.len());
        multi
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&m, &d)| acc * d + m)
    }

    /// Decompose a composite index into per-player indices.
    pub fn multi_index(&self, mut s: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = s % d;
            s /= d;
        }
        out
    }

    fn check_player(&self, i: usize) -> Result<()> {
        if i >= self.dims.len() {
            return Err(Error::Invalid(format!(
                "player index {i} out of range for {} players",
                self.dims.len()
            )));
        }
        Ok(())
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, policy: &NumericPolicy) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
                context: "density matrix must be square".into(),
            });
        }
        let herm = hermiticity_residual(&matrix);
        // density matrices use the tighter equality tolerance for hermiticity
        if herm > 1e-12_f64.max(policy.equality) {
            return Err(Error::NotDensity {
                reason: format!("hermiticity residual {herm:e}"),
            });
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > policy.equality || tr.im.abs() > policy.equality {
            return Err(Error::NotDensity {
                reason: format!("trace {} + {}i != 1", tr.re, tr.im),
            });
        }
        let (vals, _) = eigh_unchecked(&matrix);
        if let Some(&min) = vals.first() {
            if min < policy.psd_floor {
                return Err(Error::NotDensity {
                    reason: format!("min eigenvalue {min:e} below PSD floor"),
                });
            }
        }
        Ok(DensityMatrix { matrix })
    }

    /// Diagonal density matrix from a probability vector.
    pub fn from_probs(probs: &[f64], policy: &NumericPolicy) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > policy.equality || probs.iter().any(|&p| p < -policy.equality) {
            return Err(Error::InvalidDistribution {
                reason: format!("entries {probs:?} (sum {sum})"),
            });
        }
        let n = probs.len();
        let mut m = CMatrix::zeros(n, n);
        for (k, &p) in probs.iter().enumerate() {
            m[(k, k)] = C64::new(p.max(0.0), 0.0);
        }
        Ok(DensityMatrix { matrix: m })
    }

    /// Rank-1 projector |v><v| of a normalized state vector.
    pub fn pure_state(v: &[C64], policy: &NumericPolicy) -> Result<Self> {
        let norm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-10_f64.max(policy.equality) {
            return Err(Error::Unnormalized {
                reason: format!("state vector has squared norm {norm2}"),
            });
        }
        let n = v.len();
        let mut m = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = v[r] * v[c].conj() / norm2;
            }
        }
        Ok(DensityMatrix { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Real parts of the diagonal.
    pub fn diagonal_probs(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.matrix[(k, k)].re).collect()
    }

    /// Max off-diagonal entry magnitude.
    pub fn off_diagonal_residual(&self) -> f64 {
        off_diagonal_residual(&self.matrix)
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|k| m[(k, k)]).sum()
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            let d = (m[(r, c)] - m[(c, r)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn off_diagonal_residual(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r != c {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Tensor product of a list of factors in declaration order.
pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    let mut iter = factors.iter();
    let first = iter.next().expect("kron_all needs at least one factor");
    iter.fold((*first).clone(), |acc, m| acc.kronecker(m))
}

fn check_joint(m: &CMatrix, shape: &SpaceShape, context: &str) -> Result<()> {
    let d = shape.joint_dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: m.nrows(),
            context: context.into(),
        });
    }
    Ok(())
}

/// Trace out every factor except player `i`.
pub fn partial_trace_keep(m: &CMatrix, shape: &SpaceShape, i: usize) -> Result<CMatrix> {
    shape.check_player(i)?;
    check_joint(m, shape, "partial_trace_keep input")?;
    let d = shape.dim_of(i);
    let pre = shape.pre_dim(i);
    let post = shape.post_dim(i);
    let mut out = CMatrix::zeros(d, d);
    for m1 in 0..d {
        for m2 in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..pre {
                for b in 0..post {
                    let r = (a * d + m1) * post + b;
                    let c = (a * d + m2) * post + b;
                    acc += m[(r, c)];
                }
            }
            out[(m1, m2)] = acc;
        }
    }
    Ok(out)
}

/// Trace over player `i`'s factor only, leaving an
/// operator on the remaining players' space.
pub fn trace_in(m: &CMatrix, shape: &SpaceShape, i: usize) -> Result<CMatrix> {
    shape.check_player(i)?;
    check_joint(m, shape, "trace_in input")?;
    let d = shape.dim_of(i);
    let pre = shape.pre_dim(i);
    let post = shape.post_dim(i);
    let rest = pre * post;
    let mut out = CMatrix::zeros(rest, rest);
    for a1 in 0..pre {
        for b1 in 0..post {
            for a2 in 0..pre {
                for b2 in 0..post {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..d {
                        let r = (a1 * d + k) * post + b1;
                        let c = (a2 * d + k) * post + b2;
                        acc += m[(r, c)];
                    }
                    out[(a1 * post + b1, a2 * post + b2)] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Contract a joint-space operator H against one operator per opponent,
/// keeping player `i`'s factor:
/// out = Tr_{-i}((A^1 ⊗ ... ⊗ I_i ⊗ ... ⊗ A^N) H),
/// where `opponents` lists the A^j for j ≠ i in player order. With density
/// matrices as opponents this is the reduced payoff matrix.
pub fn contract_except(
    h: &CMatrix,
    shape: &SpaceShape,
    i: usize,
    opponents: &[&CMatrix],
) -> Result<CMatrix> {
    shape.check_player(i)?;
    check_joint(h, shape, "contract_except input")?;
    let n = shape.n_players();
    if opponents.len() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: opponents.len(),
            context: "opponent operator count".into(),
        });
    }
    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    for (k, &j) in others.iter().enumerate() {
        if opponents[k].nrows() != shape.dim_of(j) || opponents[k].ncols() != shape.dim_of(j) {
            return Err(Error::DimensionMismatch {
                expected: shape.dim_of(j),
                got: opponents[k].nrows(),
                context: format!("opponent operator for player {j}"),
            });
        }
    }
    let d = shape.dim_of(i);
    let other_dims: Vec<usize> = others.iter().map(|&j| shape.dim_of(j)).collect();
    let rest: usize = other_dims.iter().product();
    let decompose = |mut s: usize| -> Vec<usize> {
        let mut out = vec![0; other_dims.len()];
        for (k, &dk) in other_dims.iter().enumerate().rev() {
            out[k] = s % dk;
            s /= dk;
        }
        out
    };
    let joint_of = |own: usize, rest_multi: &[usize]| -> usize {
        let mut multi = vec![0; n];
        multi[i] = own;
        for (k, &j) in others.iter().enumerate() {
            multi[j] = rest_multi[k];
        }
        shape.joint_index(&multi)
    };
    let mut out = CMatrix::zeros(d, d);
    for m1 in 0..d {
        for m2 in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..rest {
                let km = decompose(k);
                for s in 0..rest {
                    let sm = decompose(s);
                    let mut w = C64::new(1.0, 0.0);
                    for (idx, _) in others.iter().enumerate() {
                        w *= opponents[idx][(km[idx], sm[idx])];
                        if w.norm_sqr() == 0.0 {
                            break;
                        }
                    }
                    if w.norm_sqr() == 0.0 {
                        continue;
                    }
                    acc += w * h[(joint_of(m1, &sm), joint_of(m2, &km))];
                }
            }
            out[(m1, m2)] = acc;
        }
    }
    Ok(out)
}

/// Contract player `i`'s reduced payoff against a joint operator on the
/// other players' space (in their collapsed (pre, post) index order):
/// out[m1, m2] = Σ_{r, s} sigma[r, s] H[(s, m1), (r, m2)].
/// This is contract_except with a possibly entangled opponent state.
pub fn contract_except_joint(
    h: &CMatrix,
    shape: &SpaceShape,
    i: usize,
    sigma: &CMatrix,
) -> Result<CMatrix> {
    shape.check_player(i)?;
    check_joint(h, shape, "contract_except_joint input")?;
    let d = shape.dim_of(i);
    let pre = shape.pre_dim(i);
    let post = shape.post_dim(i);
    let rest = pre * post;
    if sigma.nrows() != rest || sigma.ncols() != rest {
        return Err(Error::DimensionMismatch {
            expected: rest,
            got: sigma.nrows(),
            context: "opponents' joint operator".into(),
        });
    }
    let joint_of = |own: usize, r: usize| -> usize {
        let (a, b) = (r / post, r % post);
        (a * d + own) * post + b
    };
    let mut out = CMatrix::zeros(d, d);
    for m1 in 0..d {
        for m2 in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..rest {
                for s in 0..rest {
                    let w = sigma[(r, s)];
                    if w.norm_sqr() == 0.0 {
                        continue;
                    }
                    acc += w * h[(joint_of(m1, s), joint_of(m2, r))];
                }
            }
            out[(m1, m2)] = acc;
        }
    }
    Ok(out)
}

/// Tensor a factor back into slot `i` of an operator on the other
/// players' space: out = rest ⊗ factor with the factor interleaved at
/// player i's position.
pub fn insert_factor(
    rest_op: &CMatrix,
    factor: &CMatrix,
    shape: &SpaceShape,
    i: usize,
) -> Result<CMatrix> {
    shape.check_player(i)?;
    let d = shape.dim_of(i);
    let pre = shape.pre_dim(i);
    let post = shape.post_dim(i);
    let rest = pre * post;
    if rest_op.nrows() != rest || rest_op.ncols() != rest {
        return Err(Error::DimensionMismatch {
            expected: rest,
            got: rest_op.nrows(),
            context: "insert_factor rest operator".into(),
        });
    }
    if factor.nrows() != d || factor.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: factor.nrows(),
            context: "insert_factor factor".into(),
        });
    }
    let joint = shape.joint_dim();
    let mut out = CMatrix::zeros(joint, joint);
    for a1 in 0..pre {
        for b1 in 0..post {
            for a2 in 0..pre {
                for b2 in 0..post {
                    let w = rest_op[(a1 * post + b1, a2 * post + b2)];
                    if w.norm_sqr() == 0.0 {
                        continue;
                    }
                    for m1 in 0..d {
                        for m2 in 0..d {
                            let r = (a1 * d + m1) * post + b1;
                            let c = (a2 * d + m2) * post + b2;
                            out[(r, c)] = w * factor[(m1, m2)];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// AB - BA.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() || a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
            context: "commutator requires equal square matrices".into(),
        });
    }
    Ok(a * b - b * a)
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues
/// and a unitary whose columns are the matching eigenvectors.
pub fn eigh(m: &CMatrix, hermiticity_tol: f64) -> Result<(Vec<f64>, CMatrix)> {
    let res = hermiticity_residual(m);
    if res > hermiticity_tol {
        return Err(Error::NotHermitian {
            residual: res,
            tol: hermiticity_tol,
        });
    }
    Ok(eigh_unchecked(m))
}

fn eigh_unchecked(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    // symmetrize so roundoff in the input cannot leak into the solver
    let h = (m + m.adjoint()).scale(0.5);
    let se = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let n = m.nrows();
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vals.push(se.eigenvalues[k]);
        vecs.set_column(col, &se.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// e^{βH} of a Hermitian matrix via eigendecomposition.
///
/// The result is Hermitian with strictly positive spectrum. Callers that
/// normalize by the trace afterwards (the Boltzmann update) should prefer
/// the stabilized path in `dynamics::boltzmann_update`, which shifts the
/// spectrum before exponentiating.
pub fn herm_expm(h: &CMatrix, beta: f64, policy: &NumericPolicy) -> Result<CMatrix> {
    let (vals, vecs) = eigh(h, policy.hermiticity)?;
    let n = h.nrows();
    let mut d = CMatrix::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        d[(k, k)] = C64::new((beta * v).exp(), 0.0);
    }
    Ok(&vecs * d * vecs.adjoint())
}

/// Max pairwise commutator entry over a family of operators.
pub fn commutation_residual(hs: &[CMatrix]) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            worst = worst.max(max_abs(&commutator(&hs[i], &hs[j])?));
        }
    }
    Ok(worst)
}

/// Unitary V with V†HᵢV diagonal for every Hᵢ of a commuting Hermitian
/// family. Degenerate spectra are handled by recursive block
/// diagonalization within eigenspaces.
pub fn simultaneous_diagonalization(hs: &[CMatrix], tol: f64) -> Result<CMatrix> {
    if hs.is_empty() {
        return Err(Error::Invalid("empty operator family".into()));
    }
    let n = hs[0].nrows();
    for h in hs {
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.nrows(),
                context: "simultaneous diagonalization family".into(),
            });
        }
        let res = hermiticity_residual(h);
        if res > tol {
            return Err(Error::NotHermitian { residual: res, tol });
        }
    }
    let comm = commutation_residual(hs)?;
    if comm > tol {
        return Err(Error::NonCommuting {
            residual: comm,
            tol,
        });
    }
    let v = simdiag_recursive(hs)?;
    // distinguish numerical failure from the non-commuting case above
    for h in hs {
        let rotated = v.adjoint() * h * &v;
        let res = off_diagonal_residual(&rotated);
        if res > tol.max(1e-9) {
            return Err(Error::DiagonalizationFailed(format!(
                "off-diagonal residual {res:e} after rotation"
            )));
        }
    }
    Ok(v)
}

fn simdiag_recursive(hs: &[CMatrix]) -> Result<CMatrix> {
    let n = hs[0].nrows();
    if n <= 1 {
        return Ok(identity(n));
    }
    let (vals, mut v) = eigh_unchecked(&hs[0]);
    if hs.len() == 1 {
        return Ok(v);
    }
    let scale = vals.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
    let cluster_tol = 1e-9 * scale;
    // group near-equal eigenvalues; each group spans an eigenspace of hs[0]
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[end - 1]).abs() <= cluster_tol {
            end += 1;
        }
        let width = end - start;
        if width > 1 {
            let block = v.columns(start, width).into_owned();
            let sub: Vec<CMatrix> = hs[1..]
                .iter()
                .map(|h| block.adjoint() * h * &block)
                .collect();
            let w = simdiag_recursive(&sub)?;
            let refined = &block * w;
            for k in 0..width {
                v.set_column(start + k, &refined.column(k));
            }
        }
        start = end;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    pub fn sigma_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
    }

    pub fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    fn diag(entries: &[f64]) -> CMatrix {
        let n = entries.len();
        let mut m = CMatrix::zeros(n, n);
        for (k, &e) in entries.iter().enumerate() {
            m[(k, k)] = c(e, 0.0);
        }
        m
    }

    fn approx_eq(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) <= tol
    }

    fn random_hermitian(n: usize, rng: &mut impl rand::Rng) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for r in 0..n {
            for cidx in 0..n {
                m[(r, cidx)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        (&m + m.adjoint()).scale(0.5)
    }

    #[test]
    fn kron_identity_case() {
        let i2 = identity(2);
        assert!(approx_eq(&kron(&i2, &i2), &identity(4), 0.0));
    }

    #[test]
    fn kron_diagonal_index_arithmetic() {
        let a = diag(&[1.0, 0.0]);
        let b = diag(&[0.0, 1.0]);
        assert!(approx_eq(&kron(&a, &b), &diag(&[0.0, 1.0, 0.0, 0.0]), 0.0));
    }

    #[test]
    fn kron_pauli_involution() {
        let xx = kron(&sigma_x(), &sigma_x());
        assert!(approx_eq(&(&xx * &xx), &identity(4), 1e-15));
    }

    #[test]
    fn kron_multiplicative_on_traces() {
        let mut rng = crate::generators::seeded_rng(7);
        let a = random_hermitian(3, &mut rng);
        let b = random_hermitian(2, &mut rng);
        let lhs = trace(&kron(&a, &b));
        let rhs = trace(&a) * trace(&b);
        assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn partial_trace_product_state() {
        let policy = NumericPolicy::default();
        let r1 = DensityMatrix::from_probs(&[0.3, 0.7], &policy).unwrap();
        let r2 = DensityMatrix::from_probs(&[0.9, 0.1], &policy).unwrap();
        let joint = kron(r1.matrix(), r2.matrix());
        let shape = SpaceShape::new(vec![2, 2]).unwrap();
        let kept = partial_trace_keep(&joint, &shape, 0).unwrap();
        assert!(approx_eq(&kept, r1.matrix(), 1e-12));
    }

    #[test]
    fn partial_trace_identity() {
        let shape = SpaceShape::new(vec![2, 2]).unwrap();
        let kept = partial_trace_keep(&identity(4), &shape, 1).unwrap();
        assert!(approx_eq(&kept, &identity(2).scale(2.0), 0.0));
    }

    #[test]
    fn partial_trace_matches_index_summation_oracle() {
        // brute-force quadruple-index summation over a random 2⊗2 operator
        let mut rng = crate::generators::seeded_rng(11);
        let m = random_hermitian(4, &mut rng);
        let shape = SpaceShape::new(vec![2, 2]).unwrap();
        for player in 0..2 {
            let fast = partial_trace_keep(&m, &shape, player).unwrap();
            let mut slow = CMatrix::zeros(2, 2);
            for m1 in 0..2 {
                for m2 in 0..2 {
                    for k in 0..2 {
                        let (r, ccol) = if player == 0 {
                            (m1 * 2 + k, m2 * 2 + k)
                        } else {
                            (k * 2 + m1, k * 2 + m2)
                        };
                        slow[(m1, m2)] += m[(r, ccol)];
                    }
                }
            }
            assert!(approx_eq(&fast, &slow, 1e-13));
        }
    }

    #[test]
    fn partial_trace_preserves_total_trace() {
        let mut rng = crate::generators::seeded_rng(13);
        let shape = SpaceShape::new(vec![2, 3]).unwrap();
        let m = random_hermitian(6, &mut rng);
        for i in 0..2 {
            let kept = partial_trace_keep(&m, &shape, i).unwrap();
            assert!((trace(&kept) - trace(&m)).norm() <= 1e-12);
        }
    }

    #[test]
    fn trace_in_normalized_factor() {
        let policy = NumericPolicy::default();
        let r1 = DensityMatrix::from_probs(&[0.25, 0.75], &policy).unwrap();
        let r2 = DensityMatrix::from_probs(&[0.5, 0.5], &policy).unwrap();
        let joint = kron(r1.matrix(), r2.matrix());
        let shape = SpaceShape::new(vec![2, 2]).unwrap();
        let rest = trace_in(&joint, &shape, 1).unwrap();
        assert!(approx_eq(&rest, r1.matrix(), 1e-13));
    }

    #[test]
    fn trace_in_identity_and_composition() {
        let shape = SpaceShape::new(vec![2, 2]).unwrap();
        let rest = trace_in(&identity(4), &shape, 0).unwrap();
        assert!(approx_eq(&rest, &identity(2).scale(2.0), 0.0));

        let mut rng = crate::generators::seeded_rng(17);
        let m = random_hermitian(4, &mut rng);
        let rest = trace_in(&m, &shape, 0).unwrap();
        assert!((trace(&rest) - trace(&m)).norm() <= 1e-13);
    }

    #[test]
    fn herm_expm_zero_matrix() {
        let policy = NumericPolicy::default();
        let e = herm_expm(&CMatrix::zeros(3, 3), 2.5, &policy).unwrap();
        assert!(approx_eq(&e, &identity(3), 1e-14));
    }

    #[test]
    fn herm_expm_diagonal_scalar_exponential() {
        let policy = NumericPolicy::default();
        let e = herm_expm(&diag(&[1.0, 0.0]), 3f64.ln(), &policy).unwrap();
        assert!(approx_eq(&e, &diag(&[3.0, 1.0]), 1e-12));
    }

    #[test]
    fn herm_expm_inverse_identity() {
        let policy = NumericPolicy::default();
        let mut rng = crate::generators::seeded_rng(23);
        let h = random_hermitian(4, &mut rng);
        let plus = herm_expm(&h, 1.0, &policy).unwrap();
        let minus = herm_expm(&h, -1.0, &policy).unwrap();
        assert!(approx_eq(&(&plus * &minus), &identity(4), 1e-9));
        assert!(hermiticity_residual(&plus) <= 1e-10);
        let (vals, _) = eigh(&plus, 1e-10).unwrap();
        assert!(vals.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn herm_expm_rejects_non_hermitian() {
        let policy = NumericPolicy::default();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            herm_expm(&m, 1.0, &policy),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn commutator_cases() {
        let a = sigma_x();
        assert!(approx_eq(
            &commutator(&identity(2), &a).unwrap(),
            &CMatrix::zeros(2, 2),
            0.0
        ));
        let xy = commutator(&sigma_x(), &sigma_y()).unwrap();
        let two_i_z = sigma_z().map(|v| v * c(0.0, 2.0));
        assert!(approx_eq(&xy, &two_i_z, 1e-15));
        let d1 = diag(&[1.0, 2.0]);
        let d2 = diag(&[5.0, -3.0]);
        assert!(approx_eq(
            &commutator(&d1, &d2).unwrap(),
            &CMatrix::zeros(2, 2),
            0.0
        ));
    }

    #[test]
    fn simdiag_single_matrix() {
        let mut rng = crate::generators::seeded_rng(31);
        let h = random_hermitian(4, &mut rng);
        let v = simultaneous_diagonalization(std::slice::from_ref(&h), 1e-9).unwrap();
        let rotated = v.adjoint() * &h * &v;
        assert!(off_diagonal_residual(&rotated) <= 1e-12);
        assert!(approx_eq(&(v.adjoint() * &v), &identity(4), 1e-10));
    }

    #[test]
    fn simdiag_degenerate_spectrum() {
        let h1 = diag(&[1.0, 2.0]);
        let h2 = diag(&[3.0, 3.0]);
        let v = simultaneous_diagonalization(&[h1.clone(), h2.clone()], 1e-9).unwrap();
        for h in [&h1, &h2] {
            assert!(off_diagonal_residual(&(v.adjoint() * h * &v)) <= 1e-12);
        }
    }

    #[test]
    fn simdiag_construct_then_recover() {
        let mut rng = crate::generators::seeded_rng(37);
        let u = crate::generators::random_unitary(4, &mut rng);
        // shared eigenbasis with a degenerate pair in the first spectrum
        let d1 = diag(&[1.0, 1.0, 2.0, 5.0]);
        let d2 = diag(&[0.5, -0.5, 1.5, 2.5]);
        let h1 = &u * d1 * u.adjoint();
        let h2 = &u * d2 * u.adjoint();
        let v = simultaneous_diagonalization(&[h1.clone(), h2.clone()], 1e-9).unwrap();
        assert!(approx_eq(&(v.adjoint() * &v), &identity(4), 1e-10));
        for h in [&h1, &h2] {
            assert!(off_diagonal_residual(&(v.adjoint() * h * &v)) <= 1e-9);
        }
    }

    #[test]
    fn simdiag_non_commuting_is_distinct_error() {
        let err = simultaneous_diagonalization(&[sigma_x(), sigma_z()], 1e-9).unwrap_err();
        assert!(matches!(err, Error::NonCommuting { .. }));
    }

    #[test]
    fn density_matrix_validation() {
        let policy = NumericPolicy::default();
        assert!(DensityMatrix::from_probs(&[0.5, 0.5], &policy).is_ok());
        assert!(DensityMatrix::from_probs(&[0.7, 0.7], &policy).is_err());
        let mut bad = identity(2).scale(0.5);
        bad[(0, 1)] = c(2.0, 0.0); // not PSD / not hermitian
        assert!(DensityMatrix::new(bad, &policy).is_err());
    }

    #[test]
    fn dimension_cap_enforced() {
        let err = SpaceShape::new(vec![64, 64, 64]).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { .. }));
    }
}
