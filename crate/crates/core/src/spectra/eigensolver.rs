//! Interior eigenpairs of the pencil `K u = eps M u` by spectrum slicing:
//! inertia counts of `K - s M` split the window into slices, and each slice
//! is solved by shift-invert Lanczos in the `M` inner product with full
//! reorthogonalization around its midpoint.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::domain::DiscretizedDomain;
use super::sparse::{Analysis, Factor};
use super::IrrepLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Upper bound on eigenvalues resolved by one shift.
    pub max_per_slice: usize,
    /// Required `||(K - eps M) u|| / ||M u||`.
    pub residual_tol: f64,
    /// Recount the window at doubled resolution and warn on disagreement.
    pub check_doubled: bool,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_per_slice: 60,
            residual_tol: 1e-8,
            check_doubled: false,
            seed: 0x5ca7,
        }
    }
}

/// One eigenstate of an irrep sector, with nodal values on the reduced mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub energy: f64,
    pub irrep: IrrepLabel,
    /// Position in the sector's spectrum, counted from 0 at the ground state
    /// (E levels counted once).
    pub index: usize,
    /// `psi` for A1 and A2; `u1, u2` for E.
    pub fields: Vec<Vec<f64>>,
    /// Integral of the density over the reduced domain, `1/6`.
    pub reduced_norm: f64,
    pub residual: f64,
}

/// Number of eigenvalues of the sector below `energy`.
pub fn count_below(domain: &DiscretizedDomain, energy: f64) -> Result<usize> {
    let analysis = Analysis::new(&domain.pattern)?;
    Ok(factor_at(domain, &analysis, energy)?.1)
}

/// All eigenpairs with energy in `[lo, hi)`, sorted by energy.
pub fn solve_eigenpairs(domain: &DiscretizedDomain, window: (f64, f64), opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    let mut out = Vec::new();
    solve_eigenpairs_with(domain, window, opts, |p| {
        out.push(p);
        Ok(())
    })?;
    Ok(out)
}

/// The lowest `count` eigenpairs of the sector.
pub fn lowest_eigenpairs(domain: &DiscretizedDomain, count: usize, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    let analysis = Analysis::new(&domain.pattern)?;
    let top = domain.window.1;
    let available = factor_at(domain, &analysis, top)?.1;
    if available < count {
        return Err(Error::InvalidParameter(format!(
            "only {available} levels below the domain's window top {top}, {count} requested"
        )));
    }
    // bracket the energy of level `count` so the solve stays small
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let c = factor_at(domain, &analysis, mid)?.1;
        if c >= count {
            hi = mid;
            if c <= count + 2 {
                break;
            }
        } else {
            lo = mid;
        }
    }
    drop(analysis);
    let mut pairs = solve_eigenpairs(domain, (0.0, hi), opts)?;
    pairs.truncate(count);
    Ok(pairs)
}

/// Streams the eigenpairs in `[lo, hi)` to `sink` in ascending order, so
/// large windows need not hold every eigenvector. Returns how many were
/// delivered.
pub fn solve_eigenpairs_with<F>(domain: &DiscretizedDomain, window: (f64, f64), opts: &SolverOptions, mut sink: F) -> Result<usize>
where
    F: FnMut(EigenPair) -> Result<()>,
{
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("empty window [{lo}, {hi})")));
    }
    let analysis = Analysis::new(&domain.pattern)?;
    let c_lo = factor_at(domain, &analysis, lo)?.1;
    let c_hi = factor_at(domain, &analysis, hi)?.1;
    if opts.check_doubled {
        check_doubled(domain, window, c_hi - c_lo);
    }
    let mut pending = vec![(lo, hi, c_lo, c_hi)];
    let mut delivered = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // depth-first, lower half first, so output stays sorted
    while let Some((a, b, ca, cb)) = pending.pop() {
        let m = cb - ca;
        if m == 0 {
            continue;
        }
        if m > opts.max_per_slice {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                return Err(Error::SolverStagnation(format!("cannot split slice [{a}, {b}) holding {m} levels")));
            }
            let cm = factor_at(domain, &analysis, mid)?.1;
            pending.push((mid, b, cm, cb));
            pending.push((a, mid, ca, cm));
            continue;
        }
        let found = solve_slice(domain, &analysis, (a, b), m, opts, &mut rng)?;
        for (rank, (energy, x, residual)) in found.into_iter().enumerate() {
            let mut fields = domain.expand(&x);
            let scale = (1.0f64 / 6.0).sqrt();
            for f in fields.iter_mut() {
                f.iter_mut().for_each(|v| *v *= scale);
            }
            sink(EigenPair {
                energy,
                irrep: domain.irrep,
                index: ca + rank,
                fields,
                reduced_norm: 1.0 / 6.0,
                residual,
            })?;
            delivered += 1;
        }
    }
    Ok(delivered)
}

fn check_doubled(domain: &DiscretizedDomain, window: (f64, f64), count: usize) {
    let mut opts = domain.options;
    opts.resolution *= 2.0;
    let fine = super::domain::build_domain_with_cut(domain.irrep, domain.eta, domain.window, domain.model, domain.cut_level, &opts)
        .and_then(|d| Ok(count_below(&d, window.1)? - count_below(&d, window.0)?));
    match fine {
        Ok(c) if c != count => log::warn!(
            "MissedLevel: {} levels in [{}, {}) at the working resolution, {c} at doubled resolution",
            count,
            window.0,
            window.1
        ),
        Ok(_) => {}
        Err(e) => log::warn!("doubled-resolution recount failed: {e}"),
    }
}

/// Factors `K - s M`, nudging `s` if it hits a zero pivot, and returns the
/// factor with its negative-pivot count.
fn factor_at<'a>(domain: &DiscretizedDomain, analysis: &'a Analysis, s: f64) -> Result<(Factor<'a>, usize)> {
    let mut shift = s;
    let mut last = None;
    for attempt in 0..4 {
        match analysis.factorize(&domain.pattern, &domain.shifted(shift)) {
            Ok(f) => {
                let c = f.negative_pivots();
                return Ok((f, c));
            }
            Err(e) => {
                last = Some(e);
                shift = s * (1.0 + 1e-12 * (attempt + 1) as f64) + 1e-14;
            }
        }
    }
    Err(last.unwrap())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Makes `w` M-orthogonal to `basis` (two classical Gram-Schmidt passes) and
/// returns its M-norm.
fn m_orthogonalize(domain: &DiscretizedDomain, basis: &[&[f64]], w: &mut [f64], mw: &mut [f64]) -> f64 {
    for _ in 0..2 {
        domain.apply_mass(w, mw);
        let coeffs: Vec<f64> = basis.iter().map(|v| dot(v, mw)).collect();
        for (v, c) in basis.iter().zip(&coeffs) {
            axpy(-c, v, w);
        }
    }
    domain.apply_mass(w, mw);
    dot(w, mw).max(0.0).sqrt()
}

type Converged = Vec<(f64, Vec<f64>, f64)>;

/// Eigenpairs in `[a, b)` of a slice known to hold `m` of them.
fn solve_slice(
    domain: &DiscretizedDomain,
    analysis: &Analysis,
    (a, b): (f64, f64),
    m: usize,
    opts: &SolverOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Converged> {
    let sigma = 0.5 * (a + b);
    let (mut factor, _) = factor_at(domain, analysis, sigma)?;
    let n = domain.dim();
    let mut locked: Converged = Vec::new();
    let max_steps = (3 * m + 60).min(n);
    for _restart in 0..6 {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps + 1);
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut mw = vec![0.0; n];
        let start = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>() - 0.5).collect() };
        let mut v = start(rng);
        {
            let refs: Vec<&[f64]> = locked.iter().map(|l| l.1.as_slice()).collect();
            let nv = m_orthogonalize(domain, &refs, &mut v, &mut mw);
            v.iter_mut().for_each(|x| *x /= nv);
        }
        basis.push(v);
        let mut ritz: Option<Converged> = None;
        let mut j = 0;
        while j < max_steps {
            // w = (K - sigma M)^{-1} M v_j
            domain.apply_mass(&basis[j], &mut mw);
            let mut w = mw.clone();
            factor.solve(&mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            domain.apply_mass(&w, &mut mw);
            let aj = dot(&basis[j], &mw);
            axpy(-aj, &basis[j], &mut w);
            alpha.push(aj);
            let mut refs: Vec<&[f64]> = basis.iter().map(|v| v.as_slice()).collect();
            refs.extend(locked.iter().map(|l| l.1.as_slice()));
            let mut bj = m_orthogonalize(domain, &refs, &mut w, &mut mw);
            if bj < 1e-10 * aj.abs().max(1e-300) {
                // invariant subspace: continue from a fresh direction
                w = start(rng);
                let nv = m_orthogonalize(domain, &refs, &mut w, &mut mw);
                w.iter_mut().for_each(|x| *x /= nv);
                bj = 0.0;
            } else {
                w.iter_mut().for_each(|x| *x /= bj);
            }
            beta.push(bj);
            basis.push(w);
            j += 1;
            let want = m - locked.len();
            if j >= want && (j % 10 == 0 || j == max_steps) {
                let conv = converged_ritz(&alpha, &beta, sigma, (a, b));
                if conv.len() >= want {
                    ritz = Some(assemble_ritz(domain, &basis[..j], &conv));
                    break;
                }
            }
        }
        let found = match ritz {
            Some(r) => r,
            None => {
                let conv = converged_ritz(&alpha, &beta, sigma, (a, b));
                assemble_ritz(domain, &basis[..j], &conv)
            }
        };
        for (lam, x, res) in found {
            // a copy of a locked vector shows up again after restarts
            if locked.iter().any(|l| (l.0 - lam).abs() < 1e-12 * lam.abs().max(1.0) && overlap(domain, &l.1, &x) > 0.5) {
                continue;
            }
            locked.push((lam, x, res));
        }
        if locked.len() >= m {
            break;
        }
    }
    if locked.len() != m {
        return Err(Error::SolverStagnation(format!(
            "slice [{a}, {b}) holds {m} eigenvalues by inertia, Lanczos converged {}",
            locked.len()
        )));
    }
    locked.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    if let Some(bad) = locked.iter().find(|l| !(l.2 < opts.residual_tol)) {
        return Err(Error::SolverStagnation(format!(
            "eigenvalue {} has residual {:e} above {:e}",
            bad.0, bad.2, opts.residual_tol
        )));
    }
    Ok(locked)
}

fn overlap(domain: &DiscretizedDomain, x: &[f64], y: &[f64]) -> f64 {
    let mut my = vec![0.0; y.len()];
    domain.apply_mass(y, &mut my);
    dot(x, &my).abs()
}

/// Converged Ritz pairs of the tridiagonal matrix whose eigenvalue
/// `sigma + 1/theta` falls in the slice: `(lambda, coefficients)`.
fn converged_ritz(alpha: &[f64], beta: &[f64], sigma: f64, (a, b): (f64, f64)) -> Vec<(f64, Vec<f64>)> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let last = beta[k - 1];
    let theta_max = eig.eigenvalues.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut out = Vec::new();
    for i in 0..k {
        let theta = eig.eigenvalues[i];
        if theta == 0.0 {
            continue;
        }
        let lam = sigma + 1.0 / theta;
        if !(lam >= a && lam < b) {
            continue;
        }
        let bound = (last * eig.eigenvectors[(k - 1, i)]).abs();
        if bound <= (1e-13 * theta.abs()).max(1e-15 * theta_max) {
            out.push((lam, eig.eigenvectors.column(i).iter().copied().collect()));
        }
    }
    out
}

/// Ritz vectors `V s`, M-normalized, with Rayleigh-quotient energies and
/// residuals `||(K - eps M) x|| / ||M x||`.
fn assemble_ritz(domain: &DiscretizedDomain, basis: &[Vec<f64>], conv: &[(f64, Vec<f64>)]) -> Converged {
    let n = domain.dim();
    let mut kx = vec![0.0; n];
    let mut mx = vec![0.0; n];
    conv.iter()
        .map(|(_, s)| {
            let mut x = vec![0.0; n];
            for (v, c) in basis.iter().zip(s) {
                axpy(*c, v, &mut x);
            }
            domain.apply_mass(&x, &mut mx);
            let nm = dot(&x, &mx).sqrt();
            x.iter_mut().for_each(|v| *v /= nm);
            mx.iter_mut().for_each(|v| *v /= nm);
            domain.apply_stiffness(&x, &mut kx);
            let lam = dot(&x, &kx);
            let r: f64 = kx.iter().zip(&mx).map(|(k, m)| (k - lam * m).powi(2)).sum::<f64>().sqrt();
            let scale = dot(&mx, &mx).sqrt();
            (lam, x, r / scale)
        })
        .collect()
}
