//! Dense factorizations: a one-sided Jacobi SVD, plus Schur form and inverses from nalgebra.

use alloc::vec::Vec;

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_traits::Zero;

use crate::tensor::C64;
use crate::{Error, Result};

pub type CMatrix = DMatrix<C64>;

/// Full SVD `a = u · diag(s) · vᴴ` with `u` (`m × m`) and `v` (`p × p`) unitary
/// and `s` sorted in descending order.
#[derive(Clone, Debug)]
pub(crate) struct FullSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub(crate) fn svd_complex(a: &CMatrix) -> Result<FullSvd> {
    let (m, p) = a.shape();
    if m >= p {
        let (u, s, v) = jacobi_svd(a.clone())?;
        Ok(sorted_full(u, s, v, m, p))
    } else {
        let (v, s, u) = jacobi_svd(a.adjoint())?;
        Ok(sorted_full(u, s, v, m, p))
    }
}

/// Same as [`svd_complex`] for a real matrix; the factors are exactly real.
pub(crate) fn svd_real(a: &DMatrix<f64>) -> Result<FullSvd> {
    let mut f = svd_complex(&a.map(|x| C64::new(x, 0.0)))?;
    for z in f.u.iter_mut().chain(f.v.iter_mut()) {
        z.im = 0.0;
    }
    Ok(f)
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a tall matrix `a` (`m ≥ p`): returns
/// `u` (`m × p`, orthonormal where `s > 0`), `s` and unitary `v` (`p × p`).
/// Rotations use unit phases `γ/|γ|`, so real input stays real.
fn jacobi_svd(mut w: CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (m, p) = w.shape();
    let mut v = CMatrix::identity(p, p);
    let mut converged = p < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        converged = true;
        for i in 0..p {
            for j in i + 1..p {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, C64::zero());
                for r in 0..m {
                    let (wi, wj) = (w[(r, i)], w[(r, j)]);
                    alpha += wi.norm_sqr();
                    beta += wj.norm_sqr();
                    gamma += wi.conj() * wj;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, phase, c, s);
                rotate(&mut v, i, j, phase, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi SVD"));
    }
    let s: Vec<f64> = (0..p).map(|j| w.column(j).norm()).collect();
    let mut u = CMatrix::zeros(m, p);
    for (j, &sj) in s.iter().enumerate() {
        if sj > 0.0 {
            u.set_column(j, &(w.column(j) / C64::new(sj, 0.0)));
        }
    }
    Ok((u, s, v))
}

/// `(x_i, x_j) ← (c x_i − s ē x_j, s x_i + c ē x_j)` with `e = phase`.
fn rotate(x: &mut CMatrix, i: usize, j: usize, phase: C64, c: f64, s: f64) {
    let e = phase.conj();
    for r in 0..x.nrows() {
        let xi = x[(r, i)];
        let xj = x[(r, j)] * e;
        x[(r, i)] = xi * c - xj * s;
        x[(r, j)] = xi * s + xj * c;
    }
}

fn sorted_full(u: CMatrix, s: Vec<f64>, v: CMatrix, m: usize, p: usize) -> FullSvd {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let smax = s.iter().copied().fold(0.0, f64::max);
    // columns of u belonging to negligible singular values are rebuilt by completion
    let keep = order.iter().take_while(|&&j| s[j] > 1e-14 * smax).count();
    let u = CMatrix::from_fn(m, keep, |i, j| u[(i, order[j])]);
    let v = CMatrix::from_fn(p, order.len(), |i, j| v[(i, order[j])]);
    let s = order.iter().map(|&j| s[j]).collect();
    FullSvd {
        u: complete_unitary(&u),
        s,
        v: complete_unitary(&v),
    }
}

/// Extends orthonormal columns to a square unitary matrix by Gram-Schmidt
/// against the standard basis, picking the basis vector with the largest
/// residual at each step.
pub(crate) fn complete_unitary(cols: &CMatrix) -> CMatrix {
    let (rows, have) = cols.shape();
    if have >= rows {
        return cols.clone();
    }
    let mut basis: Vec<Vec<C64>> = (0..have)
        .map(|j| cols.column(j).iter().copied().collect())
        .collect();
    let mut used = alloc::vec![false; rows];
    while basis.len() < rows {
        let mut best: Option<(usize, Vec<C64>, f64)> = None;
        for (e, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut v = alloc::vec![C64::zero(); rows];
            v[e] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &basis {
                    let proj: C64 = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= proj * bi;
                    }
                }
            }
            let norm = norm2(&v);
            if best.as_ref().is_none_or(|(_, _, bn)| norm > *bn) {
                best = Some((e, v, norm));
            }
        }
        let (e, mut v, norm) = best.expect("a basis vector remains");
        used[e] = true;
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }
    CMatrix::from_fn(rows, rows, |i, j| basis[j][i])
}

fn norm2(v: &[C64]) -> f64 {
    num_traits::Float::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// Ratio of extreme singular values; infinite for singular input.
pub(crate) fn condition_number(a: &CMatrix) -> f64 {
    let s = match svd_complex(a) {
        Ok(f) => f.s,
        Err(_) => return f64::INFINITY,
    };
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub(crate) fn inverse(a: &CMatrix) -> Option<CMatrix> {
    a.clone().try_inverse()
}

/// Complex Schur form `a = q · t · qᴴ` with `t` upper triangular.
pub(crate) fn schur_complex(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    let (q, mut t) = Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or(Error::NoConvergence("complex Schur"))?
        .unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = C64::zero();
        }
    }
    let resid = (&q * &t * q.adjoint() - a).norm();
    if resid > 1e-10 * a.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NoConvergence("complex Schur"));
    }
    Ok((q, t))
}
