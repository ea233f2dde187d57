//! Nash-equilibrium machinery: the constructive fixed-point mapping,
//! equilibrium verification, a brute-force oracle, and the quantum /
//! entangled equilibrium predicates with their provable special cases.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{
    payoff_reduced, reduced_payoff, AbstractGame, ClassicalGame, DensityProfile, MixedProfile,
    build_h_from_g, mixed_to_density,
};
use crate::linalg::{
    commutation_residual, contract_except, contract_except_joint, eigh,
    identity, insert_factor, off_diagonal_residual, simultaneous_diagonalization, trace, C64,
    CMatrix, DensityMatrix, NumericPolicy,
};

/// Internal seed for the deterministic probe operators used when hunting
/// for a product eigenbasis of a commuting family.
const PROBE_SEED: u64 = 0xD15EA5E;

/// Equilibrium certificate: per-player maximum payoff improvement by
/// unilateral deviation; valid iff no gain exceeds epsilon.
#[derive(Debug, Clone)]
pub struct NashCertificate {
    pub profile: DensityProfile,
    pub epsilon: f64,
    pub per_player_gain: Vec<f64>,
}

impl NashCertificate {
    pub fn max_gain(&self) -> f64 {
        self.per_player_gain
            .iter()
            .fold(f64::NEG_INFINITY, |a, &g| a.max(g))
    }

    pub fn is_valid(&self) -> bool {
        self.max_gain() <= self.epsilon
    }
}

/// Certificate over a joint (possibly entangled) state.
#[derive(Debug, Clone)]
pub struct GneCertificate {
    pub state: JointState,
    pub epsilon: f64,
    pub per_player_gain: Vec<f64>,
}

impl GneCertificate {
    pub fn max_gain(&self) -> f64 {
        self.per_player_gain
            .iter()
            .fold(f64::NEG_INFINITY, |a, &g| a.max(g))
    }

    pub fn is_valid(&self) -> bool {
        self.max_gain() <= self.epsilon
    }
}

/// Joint system state on the full space, not necessarily a product.
#[derive(Debug, Clone)]
pub struct JointState {
    rho: DensityMatrix,
}

impl JointState {
    pub fn new(rho: DensityMatrix) -> Self {
        JointState { rho }
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn matrix(&self) -> &CMatrix {
        self.rho.matrix()
    }
}

/// Fixed-point iteration outcome. `converged` is only claimed when the
/// successive L1 residual dropped below the tolerance.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub final_profile: DensityProfile,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub delta_e_norm: f64,
}

/// Gain matrix ΔE = max(0, H_R - E·I) entrywise on the diagonal.
/// Classical mode: rejects a non-diagonal reduced matrix.
pub fn delta_e(h_r: &CMatrix, e: f64, policy: &NumericPolicy) -> Result<CMatrix> {
    let off = off_diagonal_residual(h_r);
    if off > policy.hermiticity {
        return Err(Error::NotDiagonal {
            residual: off,
            tol: policy.hermiticity,
        });
    }
    let d = h_r.nrows();
    let mut out = CMatrix::zeros(d, d);
    for k in 0..d {
        out[(k, k)] = C64::new((h_r[(k, k)].re - e).max(0.0), 0.0);
    }
    Ok(out)
}

/// One application of the constructive mapping:
/// ρ^{i,'} = (ρ^i + ΔE^i) / (1 + Tr ΔE^i) per player, with E^i taken from
/// the current full profile.
pub fn nash_map(
    game: &AbstractGame,
    rho: &DensityProfile,
    policy: &NumericPolicy,
) -> Result<DensityProfile> {
    let mut factors = Vec::with_capacity(rho.n_players());
    for i in 0..rho.n_players() {
        let h_r = reduced_payoff(game, rho, i)?;
        let e = payoff_reduced(rho.factor(i), &h_r)?;
        let de = delta_e(&h_r, e, policy)?;
        let tr_de = trace(&de).re;
        let probs = rho.factor(i).diagonal_probs();
        let mut next: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(k, &p)| (p + de[(k, k)].re) / (1.0 + tr_de))
            .collect();
        let sum: f64 = next.iter().sum();
        for p in &mut next {
            *p /= sum;
        }
        factors.push(DensityMatrix::from_probs(&next, policy)?);
    }
    Ok(DensityProfile::new(factors))
}

/// Repeat `nash_map` until the successive L1 distance drops below `tol`
/// or `max_iter` is hit. Non-convergence is a report state, not an error.
pub fn iterate_nash_map(
    game: &AbstractGame,
    rho0: &DensityProfile,
    tol: f64,
    max_iter: usize,
    policy: &NumericPolicy,
) -> Result<FixedPointReport> {
    let mut current = rho0.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=max_iter {
        let next = nash_map(game, &current, policy)?;
        residual = next.l1_diagonal_distance(&current);
        current = next;
        iterations = it;
        if residual < tol {
            break;
        }
    }
    let converged = residual < tol;
    // total gain mass at the final profile
    let mut delta_e_norm = 0.0f64;
    for i in 0..current.n_players() {
        let h_r = reduced_payoff(game, &current, i)?;
        let e = payoff_reduced(current.factor(i), &h_r)?;
        let de = delta_e(&h_r, e, policy)?;
        delta_e_norm = delta_e_norm.max(trace(&de).re);
    }
    Ok(FixedPointReport {
        final_profile: current,
        iterations,
        residual,
        converged,
        delta_e_norm,
    })
}

/// Best unilateral deviation payoff given a reduced payoff matrix:
/// max diagonal entry when H_R is diagonal, max eigenvalue otherwise
/// (pure deviations are extremal in either case).
fn best_deviation_payoff(h_r: &CMatrix, policy: &NumericPolicy) -> Result<f64> {
    if off_diagonal_residual(h_r) <= policy.hermiticity {
        Ok((0..h_r.nrows()).fold(f64::NEG_INFINITY, |a, k| a.max(h_r[(k, k)].re)))
    } else {
        let (vals, _) = eigh(h_r, policy.hermiticity)?;
        Ok(*vals.last().expect("non-empty spectrum"))
    }
}

/// Verify the Nash condition at a product profile: per player, the gain
/// is the best pure deviation payoff minus the current payoff.
pub fn verify_ne(
    game: &AbstractGame,
    rho: &DensityProfile,
    eps: f64,
    policy: &NumericPolicy,
) -> Result<NashCertificate> {
    let mut gains = Vec::with_capacity(rho.n_players());
    for i in 0..rho.n_players() {
        let h_r = reduced_payoff(game, rho, i)?;
        let e = payoff_reduced(rho.factor(i), &h_r)?;
        gains.push(best_deviation_payoff(&h_r, policy)? - e);
    }
    Ok(NashCertificate {
        profile: rho.clone(),
        epsilon: eps,
        per_player_gain: gains,
    })
}

/// Verify the generalized (GCNE/GQNE) condition at a joint state:
/// deviations replace player i's marginal by an arbitrary state tensored
/// against Tr^i(ρ_S). The extremal deviation is the top eigenvector of
/// the induced reduced matrix; `random_deviations` adds sampled density
/// deviations as extra confidence.
pub fn verify_gne(
    game: &AbstractGame,
    rho_s: &JointState,
    eps: f64,
    random_deviations: usize,
    rng: &mut impl Rng,
    policy: &NumericPolicy,
) -> Result<GneCertificate> {
    let shape = game.dims();
    let joint = shape.joint_dim();
    if rho_s.matrix().nrows() != joint {
        return Err(Error::DimensionMismatch {
            expected: joint,
            got: rho_s.matrix().nrows(),
            context: "joint state".into(),
        });
    }
    let mut gains = Vec::with_capacity(shape.n_players());
    for i in 0..shape.n_players() {
        let h = game.payoff_operator(i);
        let e = {
            let t = trace(&(rho_s.matrix() * h));
            if t.im.abs() > 1e-10 {
                return Err(Error::ImaginaryResidue {
                    residual: t.im.abs(),
                    tol: 1e-10,
                });
            }
            t.re
        };
        let sigma = crate::linalg::trace_in(rho_s.matrix(), shape, i)?;
        let k = contract_except_joint(h, shape, i, &sigma)?;
        let mut best = best_deviation_payoff(&k, policy)?;
        for _ in 0..random_deviations {
            let dev = crate::generators::random_density(shape.dim_of(i), rng);
            let state = insert_factor(&sigma, dev.matrix(), shape, i)?;
            best = best.max(trace(&(state * h)).re);
        }
        gains.push(best - e);
    }
    Ok(GneCertificate {
        state: rho_s.clone(),
        epsilon: eps,
        per_player_gain: gains,
    })
}

/// If every payoff operator shares an eigenvector attaining its maximum
/// eigenvalue, return that vector's projector; absence is a valid answer.
pub fn common_max_eigenvector(game: &AbstractGame, tol: f64) -> Option<JointState> {
    let policy = NumericPolicy::default();
    let hs = game.payoff_operators();
    let (vals0, vecs0) = eigh(&hs[0], policy.hermiticity).ok()?;
    let lmax0 = *vals0.last()?;
    let n = hs[0].nrows();
    let top: Vec<usize> = (0..n).filter(|&k| lmax0 - vals0[k] <= tol).collect();
    let mut basis = CMatrix::zeros(n, top.len());
    for (c, &k) in top.iter().enumerate() {
        basis.set_column(c, &vecs0.column(k));
    }
    for h in &hs[1..] {
        let (vals, _) = eigh(h, policy.hermiticity).ok()?;
        let lmax = *vals.last()?;
        let m = basis.adjoint() * h * &basis;
        let (mvals, mvecs) = eigh(&m, 1e-8).ok()?;
        let keep: Vec<usize> = (0..mvals.len())
            .filter(|&k| lmax - mvals[k] <= tol)
            .collect();
        if keep.is_empty() {
            return None;
        }
        let mut next = CMatrix::zeros(n, keep.len());
        for (c, &k) in keep.iter().enumerate() {
            next.set_column(c, &(&basis * mvecs.column(k)));
        }
        basis = next;
    }
    // first surviving direction, residual-checked against every operator
    let v: Vec<C64> = basis.column(0).iter().copied().collect();
    let vcol = DMatrix::from_column_slice(n, 1, &v);
    for h in hs {
        let (vals, _) = eigh(h, policy.hermiticity).ok()?;
        let lmax = *vals.last()?;
        let resid = h * &vcol - vcol.scale(lmax);
        let scale = vals.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        if crate::linalg::max_abs(&resid) > tol * 10.0 * scale {
            return None;
        }
    }
    let rho = DensityMatrix::pure_state(&v, &policy).ok()?;
    Some(JointState::new(rho))
}

/// QNE for commuting payoff operators: find a product eigenbasis, solve
/// the induced classical game there, rotate the equilibrium back and
/// certify it in the original basis. Non-commuting input yields `None`;
/// a genuinely non-product common eigenbasis also yields `None` since no
/// product-state certificate exists on that route.
pub fn qne_commuting(
    game: &AbstractGame,
    tol: f64,
    policy: &NumericPolicy,
) -> Result<Option<NashCertificate>> {
    let hs = game.payoff_operators();
    let comm = commutation_residual(hs)?;
    if comm > tol {
        return Ok(None);
    }
    let shape = game.dims();
    let n = shape.n_players();

    // Local diagonalizing basis per player, recovered by contracting the
    // payoff operators against deterministic Hermitian probes on the
    // other slots. When a product eigenbasis exists every such
    // contraction is diagonal in it.
    let mut rng = crate::generators::seeded_rng(PROBE_SEED);
    let mut local_bases: Vec<CMatrix> = Vec::with_capacity(n);
    for j in 0..n {
        let mut family: Vec<CMatrix> = Vec::new();
        for h in hs {
            let ids: Vec<CMatrix> = (0..n)
                .filter(|&k| k != j)
                .map(|k| identity(shape.dim_of(k)))
                .collect();
            let refs: Vec<&CMatrix> = ids.iter().collect();
            family.push(contract_except(h, shape, j, &refs)?);
        }
        for _ in 0..3 {
            let probes: Vec<CMatrix> = (0..n)
                .filter(|&k| k != j)
                .map(|k| crate::generators::random_hermitian(shape.dim_of(k), &mut rng))
                .collect();
            for h in hs {
                let refs: Vec<&CMatrix> = probes.iter().collect();
                family.push(contract_except(h, shape, j, &refs)?);
            }
        }
        let scale = family.iter().fold(1.0f64, |a, m| a.max(crate::linalg::max_abs(m)));
        match simultaneous_diagonalization(&family, (tol * scale).max(1e-8)) {
            Ok(v) => local_bases.push(v),
            Err(Error::NonCommuting { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }

    // verify the product basis really diagonalizes every payoff operator
    let refs: Vec<&CMatrix> = local_bases.iter().collect();
    let v_joint = crate::linalg::kron_all(&refs);
    let mut diagonals: Vec<Vec<f64>> = Vec::with_capacity(hs.len());
    for h in hs {
        let rotated = v_joint.adjoint() * h * &v_joint;
        let scale = crate::linalg::max_abs(h).max(1.0);
        if off_diagonal_residual(&rotated) > (tol * scale).max(1e-8) {
            return Ok(None);
        }
        diagonals.push((0..rotated.nrows()).map(|k| rotated[(k, k)].re).collect());
    }

    // induced classical game in the rotated frame
    let classical = ClassicalGame::new(shape.clone(), diagonals)?;
    let lifted = build_h_from_g(&classical);
    let mut candidates: Vec<DensityProfile> = Vec::new();
    let uniform = mixed_to_density(&MixedProfile::uniform(shape), policy)?;
    let report = iterate_nash_map(&lifted, &uniform, 1e-12, 50_000, policy)?;
    if report.converged {
        candidates.push(report.final_profile);
    }
    if candidates.is_empty() {
        if let Ok(certs) = brute_force_ne(&classical, 50) {
            candidates.extend(certs.into_iter().map(|c| c.profile));
        }
    }

    for tilde in candidates {
        // rotate each factor back to the original basis
        let factors = (0..n)
            .map(|j| {
                let m = &local_bases[j] * tilde.factor(j).matrix() * local_bases[j].adjoint();
                DensityMatrix::new(m, policy)
            })
            .collect::<Result<Vec<_>>>()?;
        let profile = DensityProfile::new(factors);
        let cert = verify_ne(game, &profile, 1e-8, policy)?;
        if cert.is_valid() {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

/// Brute-force oracle: support enumeration for 2-player games, simplex
/// grid search for 3 players. Results are deterministically ordered.
pub fn brute_force_ne(g: &ClassicalGame, resolution: usize) -> Result<Vec<NashCertificate>> {
    let dims = g.dims();
    if dims.n_players() > 3 {
        return Err(Error::OracleLimits(format!(
            "{} players (max 3)",
            dims.n_players()
        )));
    }
    if dims.dims().iter().any(|&d| d > 4) {
        return Err(Error::OracleLimits("strategy sets larger than 4".into()));
    }
    if resolution > 50 {
        return Err(Error::OracleLimits(format!(
            "resolution {resolution} (max 50)"
        )));
    }
    let mut certs = match dims.n_players() {
        2 => support_enumeration(g)?,
        _ => grid_search(g, resolution.max(1))?,
    };
    dedupe_and_sort(&mut certs);
    Ok(certs)
}

fn certificate_for(g: &ClassicalGame, probs: Vec<Vec<f64>>) -> Result<NashCertificate> {
    let policy = NumericPolicy::default();
    let profile = MixedProfile::new(probs, &policy)?;
    let rho = mixed_to_density(&profile, &policy)?;
    let lifted = build_h_from_g(g);
    let mut cert = verify_ne(&lifted, &rho, 0.0, &policy)?;
    // report the epsilon actually achieved
    cert.epsilon = cert.max_gain().max(0.0).max(1e-12);
    Ok(cert)
}

fn support_enumeration(g: &ClassicalGame) -> Result<Vec<NashCertificate>> {
    let d1 = g.dims().dim_of(0);
    let d2 = g.dims().dim_of(1);
    let a = |r: usize, c: usize| g.entry(0, &[r, c]);
    let b = |r: usize, c: usize| g.entry(1, &[r, c]);
    let tol = 1e-9;
    let mut out = Vec::new();

    for k in 1..=d1.min(d2) {
        for s1 in subsets(d1, k) {
            for s2 in subsets(d2, k) {
                // p2's probabilities on s2 making p1 indifferent across s1
                let y = solve_indifference(&s1, &s2, d2, &a);
                // p1's probabilities on s1 making p2 indifferent across s2
                let x = solve_indifference(&s2, &s1, d1, &|r, c| b(c, r));
                let (Some((y, v1)), Some((x, v2))) = (y, x) else {
                    continue;
                };
                if x.iter().chain(y.iter()).any(|&p| p < -tol) {
                    continue;
                }
                let clamp = |v: Vec<f64>| -> Vec<f64> {
                    let cleaned: Vec<f64> = v.iter().map(|&p| p.max(0.0)).collect();
                    let sum: f64 = cleaned.iter().sum();
                    cleaned.iter().map(|&p| p / sum).collect()
                };
                let x = clamp(x);
                let y = clamp(y);
                // best-response check outside the supports
                let p1_ok = (0..d1).all(|r| {
                    s1.contains(&r) || (0..d2).map(|c| a(r, c) * y_full(&s2, &y, d2)[c]).sum::<f64>() <= v1 + tol
                });
                let p2_ok = (0..d2).all(|c| {
                    s2.contains(&c) || (0..d1).map(|r| b(r, c) * y_full(&s1, &x, d1)[r]).sum::<f64>() <= v2 + tol
                });
                if !(p1_ok && p2_ok) {
                    continue;
                }
                let probs = vec![y_full(&s1, &x, d1), y_full(&s2, &y, d2)];
                out.push(certificate_for(g, probs)?);
            }
        }
    }
    Ok(out)
}

fn y_full(support: &[usize], vals: &[f64], dim: usize) -> Vec<f64> {
    let mut full = vec![0.0; dim];
    for (k, &s) in support.iter().enumerate() {
        full[s] = vals[k];
    }
    full
}

/// Solve Σ_{c ∈ own_support... } payoff-indifference system: find weights
/// w over `their_support` and a value v with
/// Σ_b M[a][b] w_b = v for every a in `own_support`, Σ w = 1.
fn solve_indifference(
    own_support: &[usize],
    their_support: &[usize],
    _their_dim: usize,
    payoff: &dyn Fn(usize, usize) -> f64,
) -> Option<(Vec<f64>, f64)> {
    let k = own_support.len();
    debug_assert_eq!(k, their_support.len());
    let mut m = nalgebra::DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k + 1);
    for (row, &astrat) in own_support.iter().enumerate() {
        for (col, &bstrat) in their_support.iter().enumerate() {
            m[(row, col)] = payoff(astrat, bstrat);
        }
        m[(row, k)] = -1.0; // -v
    }
    for col in 0..k {
        m[(k, col)] = 1.0;
    }
    rhs[k] = 1.0;
    let lu = m.full_piv_lu();
    let sol = lu.solve(&rhs)?;
    let w: Vec<f64> = sol.iter().take(k).copied().collect();
    if w.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((w, sol[k]))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Compositions of `resolution` into `parts` nonnegative integers,
/// interpreted as simplex grid points.
fn compositions(resolution: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(idx: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if idx == cur.len() - 1 {
            cur[idx] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[idx] = v;
            rec(idx + 1, left - v, cur, out);
        }
    }
    rec(0, resolution, &mut cur, &mut out);
    out
}

fn grid_search(g: &ClassicalGame, resolution: usize) -> Result<Vec<NashCertificate>> {
    let dims = g.dims();
    let per_player: Vec<Vec<Vec<f64>>> = dims
        .dims()
        .iter()
        .map(|&d| {
            compositions(resolution, d)
                .into_iter()
                .map(|c| c.iter().map(|&x| x as f64 / resolution as f64).collect())
                .collect()
        })
        .collect();
    let mut best_gain = f64::INFINITY;
    let mut kept: Vec<(f64, Vec<Vec<f64>>)> = Vec::new();
    let mut idx = vec![0usize; dims.n_players()];
    loop {
        let probs: Vec<Vec<f64>> = idx
            .iter()
            .enumerate()
            .map(|(j, &k)| per_player[j][k].clone())
            .collect();
        let gain = pure_deviation_gain(g, &probs)?;
        if gain < best_gain - 1e-12 {
            best_gain = gain;
            kept.retain(|(gv, _)| *gv <= best_gain + 1e-9);
        }
        if gain <= best_gain + 1e-9 {
            kept.push((gain, probs));
        }
        // odometer over grid indices
        let mut j = dims.n_players();
        loop {
            if j == 0 {
                break;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < per_player[j].len() {
                break;
            }
            idx[j] = 0;
            if j == 0 {
                j = usize::MAX;
                break;
            }
        }
        if j == usize::MAX {
            break;
        }
    }
    kept.retain(|(gv, _)| *gv <= best_gain + 1e-9);
    kept.into_iter()
        .map(|(_, probs)| certificate_for(g, probs))
        .collect()
}

/// Max payoff improvement over pure deviations at a mixed profile.
fn pure_deviation_gain(g: &ClassicalGame, probs: &[Vec<f64>]) -> Result<f64> {
    let policy = NumericPolicy::default();
    let profile = MixedProfile::new(probs.to_vec(), &policy)?;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..g.n_players() {
        let e = crate::game::payoff_classical(g, &profile, i)?;
        let d = g.dims().dim_of(i);
        for s in 0..d {
            let mut dev = probs.to_vec();
            dev[i] = vec![0.0; d];
            dev[i][s] = 1.0;
            let dev_profile = MixedProfile::new(dev, &policy)?;
            let ev = crate::game::payoff_classical(g, &dev_profile, i)?;
            worst = worst.max(ev - e);
        }
    }
    Ok(worst)
}

fn dedupe_and_sort(certs: &mut Vec<NashCertificate>) {
    let key = |c: &NashCertificate| -> (Vec<Vec<bool>>, Vec<Vec<i64>>) {
        let probs = c.profile.diagonal_probs();
        let support = probs
            .iter()
            .map(|p| p.iter().map(|&x| x > 1e-9).collect())
            .collect();
        let quantized = probs
            .iter()
            .map(|p| p.iter().map(|&x| (x / 1e-9).round() as i64).collect())
            .collect();
        (support, quantized)
    };
    certs.sort_by(|a, b| key(a).cmp(&key(b)));
    certs.dedup_by(|a, b| {
        a.profile.l1_diagonal_distance(&b.profile) < 1e-8
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::linalg::SpaceShape;

    fn policy() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn game2(g1: [[f64; 2]; 2], g2: [[f64; 2]; 2]) -> ClassicalGame {
        let dims = SpaceShape::new(vec![2, 2]).unwrap();
        let flat = |g: [[f64; 2]; 2]| vec![g[0][0], g[0][1], g[1][0], g[1][1]];
        ClassicalGame::new(dims, vec![flat(g1), flat(g2)]).unwrap()
    }

    fn matching_pennies() -> ClassicalGame {
        game2([[1., -1.], [-1., 1.]], [[-1., 1.], [1., -1.]])
    }

    fn dominant_strategy() -> ClassicalGame {
        // row 1 / column 1 strictly dominant for both (prisoner's-dilemma shape)
        game2([[3., 0.], [5., 1.]], [[3., 5.], [0., 1.]])
    }

    fn coordination() -> ClassicalGame {
        game2([[1., 0.], [0., 1.]], [[1., 0.], [0., 1.]])
    }

    fn diag_profile(p1: &[f64], p2: &[f64]) -> DensityProfile {
        let pol = policy();
        mixed_to_density(
            &MixedProfile::new(vec![p1.to_vec(), p2.to_vec()], &pol).unwrap(),
            &pol,
        )
        .unwrap()
    }

    #[test]
    fn delta_e_direct_arithmetic() {
        let pol = policy();
        let hr = |a: f64, b: f64| {
            let mut m = CMatrix::zeros(2, 2);
            m[(0, 0)] = C64::new(a, 0.0);
            m[(1, 1)] = C64::new(b, 0.0);
            m
        };
        let de = delta_e(&hr(3., 1.), 3.0, &pol).unwrap();
        assert_eq!(crate::linalg::max_abs(&de), 0.0);
        let de = delta_e(&hr(3., 1.), 2.0, &pol).unwrap();
        assert_eq!(de[(0, 0)].re, 1.0);
        assert_eq!(de[(1, 1)].re, 0.0);
        let de = delta_e(&hr(0., 0.), 0.0, &pol).unwrap();
        assert_eq!(crate::linalg::max_abs(&de), 0.0);
        let mut bad = hr(1., 1.);
        bad[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(
            delta_e(&bad, 0.0, &pol),
            Err(Error::NotDiagonal { .. })
        ));
    }

    #[test]
    fn nash_map_fixes_strict_pure_ne() {
        let g = dominant_strategy();
        let a = build_h_from_g(&g);
        let rho = diag_profile(&[0., 1.], &[0., 1.]);
        let next = nash_map(&a, &rho, &policy()).unwrap();
        assert!(next.l1_diagonal_distance(&rho) <= 1e-14);
    }

    #[test]
    fn nash_map_direct_arithmetic_case() {
        // ρ¹ uniform vs pure opponent giving H¹_R = diag(3,1): E = 2,
        // ΔE = diag(1,0), so ρ¹' = (0.5+1, 0.5)/2 = (0.75, 0.25)
        let g = game2([[3., 3.], [1., 1.]], [[0., 0.], [0., 0.]]);
        let a = build_h_from_g(&g);
        let rho = diag_profile(&[0.5, 0.5], &[1.0, 0.0]);
        let next = nash_map(&a, &rho, &policy()).unwrap();
        let probs = next.factor(0).diagonal_probs();
        assert!((probs[0] - 0.75).abs() <= 1e-14);
        assert!((probs[1] - 0.25).abs() <= 1e-14);
    }

    #[test]
    fn nash_map_fixes_matching_pennies_uniform() {
        let a = build_h_from_g(&matching_pennies());
        let rho = diag_profile(&[0.5, 0.5], &[0.5, 0.5]);
        let next = nash_map(&a, &rho, &policy()).unwrap();
        assert!(next.l1_diagonal_distance(&rho) <= 1e-14);
    }

    #[test]
    fn nash_map_preserves_validity() {
        let mut rng = generators::seeded_rng(55);
        let dims = SpaceShape::new(vec![3, 2]).unwrap();
        let g = generators::random_classical_game(&dims, &mut rng);
        let a = build_h_from_g(&g);
        let p = generators::random_mixed_profile(&dims, &mut rng);
        let rho = mixed_to_density(&p, &policy()).unwrap();
        let next = nash_map(&a, &rho, &policy()).unwrap();
        for f in next.factors() {
            let probs = f.diagonal_probs();
            assert!(probs.iter().all(|&x| x >= 0.0));
            assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn iterate_from_strict_ne_converges_immediately() {
        let a = build_h_from_g(&dominant_strategy());
        let rho = diag_profile(&[0., 1.], &[0., 1.]);
        let report = iterate_nash_map(&a, &rho, 1e-10, 100, &policy()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.residual, 0.0);
    }

    #[test]
    fn iterate_dominant_strategy_verified_or_honest() {
        let g = dominant_strategy();
        let a = build_h_from_g(&g);
        let rho = diag_profile(&[0.5, 0.5], &[0.5, 0.5]);
        let report = iterate_nash_map(&a, &rho, 1e-10, 100_000, &policy()).unwrap();
        if report.converged {
            let cert = verify_ne(&a, &report.final_profile, 1e-6, &policy()).unwrap();
            assert!(cert.is_valid(), "gains {:?}", cert.per_player_gain);
        }
    }

    #[test]
    fn iterate_matching_pennies_uniform_fixed_point() {
        let a = build_h_from_g(&matching_pennies());
        let rho = diag_profile(&[0.5, 0.5], &[0.5, 0.5]);
        let report = iterate_nash_map(&a, &rho, 1e-10, 10, &policy()).unwrap();
        assert!(report.converged);
        assert_eq!(report.residual, 0.0);
    }

    #[test]
    fn verify_ne_canonical_cases() {
        let pol = policy();
        // dominant-strategy game at mutual defection: exact NE
        let a = build_h_from_g(&dominant_strategy());
        let cert = verify_ne(&a, &diag_profile(&[0., 1.], &[0., 1.]), 0.0, &pol).unwrap();
        assert!(cert.is_valid());
        // matching pennies at uniform: NE; at pure: gain 2
        let mp = build_h_from_g(&matching_pennies());
        let cert = verify_ne(&mp, &diag_profile(&[0.5, 0.5], &[0.5, 0.5]), 1e-12, &pol).unwrap();
        assert!(cert.is_valid());
        let cert = verify_ne(&mp, &diag_profile(&[1., 0.], &[1., 0.]), 1e-12, &pol).unwrap();
        assert!(!cert.is_valid());
        assert!((cert.max_gain() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn verify_ne_pure_deviations_match_random_mixed() {
        let pol = policy();
        let mut rng = generators::seeded_rng(77);
        let dims = SpaceShape::new(vec![2, 3]).unwrap();
        let g = generators::random_classical_game(&dims, &mut rng);
        let a = build_h_from_g(&g);
        let p = generators::random_mixed_profile(&dims, &mut rng);
        let rho = mixed_to_density(&p, &pol).unwrap();
        let cert = verify_ne(&a, &rho, 0.0, &pol).unwrap();
        for i in 0..2 {
            let e = crate::game::payoff_trace(&a, &rho, i).unwrap();
            let mut best = f64::NEG_INFINITY;
            for _ in 0..10_000 {
                let dev = generators::random_mixed_profile(&dims, &mut rng);
                let mut dev_rho = rho.clone();
                dev_rho.set_factor(
                    i,
                    DensityMatrix::from_probs(dev.player(i), &pol).unwrap(),
                );
                best = best.max(crate::game::payoff_trace(&a, &dev_rho, i).unwrap());
            }
            let mixed_gain = best - e;
            assert!(mixed_gain <= cert.per_player_gain[i] + 1e-9);
        }
    }

    #[test]
    fn oracle_matching_pennies_unique_uniform() {
        let certs = brute_force_ne(&matching_pennies(), 10).unwrap();
        assert_eq!(certs.len(), 1);
        let probs = certs[0].profile.diagonal_probs();
        for p in probs.iter().flatten() {
            assert!((p - 0.5).abs() <= 1e-10);
        }
    }

    #[test]
    fn oracle_coordination_three_equilibria() {
        let certs = brute_force_ne(&coordination(), 10).unwrap();
        assert_eq!(certs.len(), 3);
        let mixed: Vec<_> = certs
            .iter()
            .filter(|c| {
                c.profile.diagonal_probs()[0]
                    .iter()
                    .all(|&p| (p - 0.5).abs() <= 1e-10)
            })
            .collect();
        assert_eq!(mixed.len(), 1);
    }

    #[test]
    fn oracle_dominant_strategy_unique_pure() {
        let certs = brute_force_ne(&dominant_strategy(), 10).unwrap();
        assert_eq!(certs.len(), 1);
        let probs = certs[0].profile.diagonal_probs();
        assert_eq!(probs[0], vec![0.0, 1.0]);
        assert_eq!(probs[1], vec![0.0, 1.0]);
    }

    #[test]
    fn oracle_limits_rejected() {
        let dims = SpaceShape::new(vec![2, 2, 2, 2]).unwrap();
        let g = ClassicalGame::new(dims, vec![vec![0.0; 16]; 4]).unwrap();
        assert!(matches!(
            brute_force_ne(&g, 10),
            Err(Error::OracleLimits(_))
        ));
    }

    #[test]
    fn oracle_three_player_grid() {
        let dims = SpaceShape::new(vec![2, 2, 2]).unwrap();
        // everyone strictly prefers strategy 1 regardless of others
        let mut tensors = Vec::new();
        for i in 0..3 {
            let mut t = vec![0.0; 8];
            for s in 0..8 {
                let multi = dims.multi_index(s);
                t[s] = if multi[i] == 1 { 1.0 } else { 0.0 };
            }
            tensors.push(t);
        }
        let g = ClassicalGame::new(dims, tensors).unwrap();
        let certs = brute_force_ne(&g, 10).unwrap();
        assert_eq!(certs.len(), 1);
        for p in certs[0].profile.diagonal_probs() {
            assert_eq!(p, vec![0.0, 1.0]);
        }
    }

    #[test]
    fn fixed_point_soundness_both_directions() {
        let pol = policy();
        let mut rng = generators::seeded_rng(99);
        let dims = SpaceShape::new(vec![2, 2]).unwrap();
        for _ in 0..20 {
            let g = generators::random_classical_game(&dims, &mut rng);
            let a = build_h_from_g(&g);
            for cert in brute_force_ne(&g, 10).unwrap() {
                if cert.max_gain() > 1e-10 {
                    continue; // degenerate near-NE from the oracle
                }
                let mapped = nash_map(&a, &cert.profile, &pol).unwrap();
                assert!(
                    mapped.l1_diagonal_distance(&cert.profile) <= 1e-9,
                    "oracle NE must be a fixed point"
                );
            }
            let uniform = diag_profile(&[0.5, 0.5], &[0.5, 0.5]);
            let report = iterate_nash_map(&a, &uniform, 1e-10, 20_000, &pol).unwrap();
            if report.converged {
                let cert = verify_ne(&a, &report.final_profile, 1e-8, &pol).unwrap();
                assert!(cert.is_valid(), "converged fixed point must verify");
            }
        }
    }

    #[test]
    fn gne_on_product_state_matches_ne() {
        let pol = policy();
        let mut rng = generators::seeded_rng(123);
        let dims = SpaceShape::new(vec![2, 2]).unwrap();
        let ops: Vec<CMatrix> = (0..2)
            .map(|_| generators::random_hermitian(4, &mut rng))
            .collect();
        let a = AbstractGame::new(dims, ops).unwrap();
        let rho = DensityProfile::new(vec![
            generators::random_density(2, &mut rng),
            generators::random_density(2, &mut rng),
        ]);
        let joint = JointState::new(
            DensityMatrix::new(rho.joint(), &pol).unwrap(),
        );
        let ne = verify_ne(&a, &rho, 0.0, &pol).unwrap();
        let gne = verify_gne(&a, &joint, 0.0, 0, &mut rng, &pol).unwrap();
        for (g1, g2) in ne.per_player_gain.iter().zip(&gne.per_player_gain) {
            assert!((g1 - g2).abs() <= 1e-12);
        }
    }

    #[test]
    fn gne_maximally_mixed_on_zero_game() {
        let pol = policy();
        let mut rng = generators::seeded_rng(1);
        let dims = SpaceShape::new(vec![2, 2]).unwrap();
        let a = AbstractGame::new(dims, vec![CMatrix::zeros(4, 4), CMatrix::zeros(4, 4)]).unwrap();
        let joint = JointState::new(
            DensityMatrix::new(identity(4).scale(0.25), &pol).unwrap(),
        );
        let cert = verify_gne(&a, &joint, 0.0, 4, &mut rng, &pol).unwrap();
        assert!(cert.is_valid());
    }

    #[test]
    fn common_max_eigenvector_cases() {
        let dims = SpaceShape::new(vec![2, 2]).unwrap();
        let dg = |entries: [f64; 4]| {
            let mut m = CMatrix::zeros(4, 4);
            for (k, &e) in entries.iter().enumerate() {
                m[(k, k)] = C64::new(e, 0.0);
            }
            m
        };
        // shared top eigenvector e0
        let a = AbstractGame::new(
            dims.clone(),
            vec![dg([1., 0., 0., 0.]), dg([1., 0., 0., 0.])],
        )
        .unwrap();
        let state = common_max_eigenvector(&a, 1e-9).unwrap();
        assert!((state.matrix()[(0, 0)].re - 1.0).abs() <= 1e-10);
        let mut rng = generators::seeded_rng(2);
        let cert = verify_gne(&a, &state, 0.0, 0, &mut rng, &policy()).unwrap();
        assert!(cert.is_valid());
        // disagreeing maxima
        let b = AbstractGame::new(
            dims.clone(),
            vec![dg([1., 0., 0., 0.]), dg([0., 1., 0., 0.])],
        )
        .unwrap();
        assert!(common_max_eigenvector(&b, 1e-9).is_none());
        // all equal: top eigenvector projector returned
        let mut rng = generators::seeded_rng(3);
        let h = generators::random_hermitian(4, &mut rng);
        let c = AbstractGame::new(dims, vec![h.clone(), h.clone()]).unwrap();
        let state = common_max_eigenvector(&c, 1e-9).unwrap();
        let (vals, _) = eigh(&h, 1e-10).unwrap();
        let lmax = *vals.last().unwrap();
        let e = trace(&(state.matrix() * &h)).re;
        assert!((e - lmax).abs() <= 1e-9);
    }

    #[test]
    fn qne_commuting_already_diagonal() {
        let g = dominant_strategy();
        let a = build_h_from_g(&g);
        let cert = qne_commuting(&a, 1e-9, &policy()).unwrap().unwrap();
        assert!(cert.is_valid());
        let probs = cert.profile.diagonal_probs();
        assert!((probs[0][1] - 1.0).abs() <= 1e-9);
        assert!((probs[1][1] - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn qne_commuting_conjugation_round_trip() {
        let pol = policy();
        let mut rng = generators::seeded_rng(321);
        let g = dominant_strategy();
        let lifted = build_h_from_g(&g);
        let u1 = generators::random_unitary(2, &mut rng);
        let u2 = generators::random_unitary(2, &mut rng);
        let u = crate::linalg::kron(&u1, &u2);
        let ops: Vec<CMatrix> = lifted
            .payoff_operators()
            .iter()
            .map(|h| &u * h * u.adjoint())
            .collect();
        let quantum = AbstractGame::new(g.dims().clone(), ops).unwrap();
        let cert = qne_commuting(&quantum, 1e-9, &pol).unwrap().unwrap();
        assert!(cert.is_valid());
        // payoffs match the classical NE payoffs (3-ish: mutual defection gives 1,1)
        for i in 0..2 {
            let e = crate::game::payoff_trace(&quantum, &cert.profile, i).unwrap();
            assert!((e - 1.0).abs() <= 1e-8, "player {i} payoff {e}");
        }
    }

    #[test]
    fn qne_commuting_rejects_non_commuting() {
        let dims = SpaceShape::new(vec![2, 2]).unwrap();
        let sx = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0., 0.), C64::new(1., 0.), C64::new(1., 0.), C64::new(0., 0.)],
        );
        let sz = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1., 0.), C64::new(0., 0.), C64::new(0., 0.), C64::new(-1., 0.)],
        );
        let h1 = crate::linalg::kron(&sx, &identity(2));
        let h2 = crate::linalg::kron(&sz, &identity(2));
        let a = AbstractGame::new(dims, vec![h1, h2]).unwrap();
        assert!(qne_commuting(&a, 1e-9, &policy()).unwrap().is_none());
    }
}
