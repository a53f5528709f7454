//! The tSVDM `X = U ⋆ S ⋆ Vᴴ`, its rank notions and truncations.
//!
//! Singular values are computed once per idempotent group: the first slice
//! of a conjugate pair is factorized and the second gets the conjugated
//! factors, so the spatial factors come out real. Real groups use a real SVD.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::algebra::back;
use crate::linalg::{svd_complex, svd_real, CMatrix};
use crate::tensor::{Domain, Tensor3, C64};
use crate::transform::{IdempotentStructure, Transform};
use crate::{Error, Result};

/// Target rank of a truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankSpec {
    /// The same rank on every transform slice.
    TRank(usize),
    /// One rank per transform slice; must be constant on idempotent groups.
    MultiRank(Vec<usize>),
    /// One rank per idempotent group.
    TubalLength(Vec<usize>),
}

/// `r_k = λ_{τ(k)}`.
pub fn length_to_multirank(lambda: &[usize], structure: &IdempotentStructure) -> Result<Vec<usize>> {
    if lambda.len() != structure.ell() {
        return Err(Error::Shape(format!(
            "tubal length has {} entries, transform has {} idempotent groups",
            lambda.len(),
            structure.ell()
        )));
    }
    Ok(structure.tau_map().iter().map(|&j| lambda[j]).collect())
}

/// Inverse of [`length_to_multirank`]; rejects ranks that differ inside a group.
pub fn multirank_to_length(ranks: &[usize], structure: &IdempotentStructure) -> Result<Vec<usize>> {
    check_multirank(ranks, structure)?;
    Ok(structure.groups().iter().map(|g| ranks[g[0]]).collect())
}

fn check_multirank(ranks: &[usize], structure: &IdempotentStructure) -> Result<()> {
    if ranks.len() != structure.n() {
        return Err(Error::Shape(format!(
            "multirank has {} entries, expected {}",
            ranks.len(),
            structure.n()
        )));
    }
    for g in structure.groups() {
        for &k in &g[1..] {
            if ranks[k] != ranks[g[0]] {
                return Err(Error::InvalidMultirank {
                    ranks: ranks.to_vec(),
                    first: g[0],
                    second: k,
                });
            }
        }
    }
    Ok(())
}

/// Factors of a tSVDM, kept in the transform domain.
#[derive(Clone, Debug)]
pub struct Tsvdm<'t> {
    transform: &'t Transform,
    dims: (usize, usize, usize),
    u_hat: Tensor3,
    s_hat: DMatrix<f64>,
    v_hat: Tensor3,
    norm_sqr: f64,
}

/// Per-slice truncated factors `Û_k[:, :r_k]`, `ŝ_k[:r_k]`, `V̂_k[:, :r_k]`.
#[derive(Clone, Debug)]
pub struct CompactFactors {
    pub ranks: Vec<usize>,
    pub u: Vec<CMatrix>,
    pub s: Vec<Vec<f64>>,
    pub v: Vec<CMatrix>,
}

impl CompactFactors {
    /// Scalars stored by the factors, counting one per slice entry.
    pub fn stored_entries(&self) -> usize {
        self.u
            .iter()
            .zip(&self.v)
            .zip(&self.s)
            .map(|((u, v), s)| u.len() + v.len() + s.len())
            .sum()
    }
}

pub fn tsvdm<'t>(x: &Tensor3, t: &'t Transform) -> Result<Tsvdm<'t>> {
    t.require_real_ring()?;
    if x.domain() != Domain::Spatial {
        return Err(Error::Domain(format!("tsvdm input must be spatial, got {:?}", x.domain())));
    }
    if !x.is_real() {
        return Err(Error::NotReal(x.max_imag()));
    }
    let (m, p, n) = x.dims();
    let q = m.min(p);
    let xh = t.forward(x)?;
    let mut u_slices = vec![CMatrix::zeros(m, m); n];
    let mut v_slices = vec![CMatrix::zeros(p, p); n];
    let mut s_hat = DMatrix::zeros(q, n);
    for group in t.structure().groups() {
        let k0 = group[0];
        let f = if group.len() == 1 {
            svd_real(&xh.slice(k0).map(|z| z.re))?
        } else {
            svd_complex(&xh.slice(k0))?
        };
        for &k in group {
            let mirror = k != k0;
            u_slices[k] = if mirror { f.u.map(|z| z.conj()) } else { f.u.clone() };
            v_slices[k] = if mirror { f.v.map(|z| z.conj()) } else { f.v.clone() };
            for (j, s) in f.s.iter().enumerate() {
                s_hat[(j, k)] = *s;
            }
        }
    }
    let domain = t.domain();
    Ok(Tsvdm {
        transform: t,
        dims: (m, p, n),
        u_hat: Tensor3::from_slices(&u_slices, domain)?,
        s_hat,
        v_hat: Tensor3::from_slices(&v_slices, domain)?,
        norm_sqr: xh.frob_norm_sqr(),
    })
}

impl<'t> Tsvdm<'t> {
    pub fn transform(&self) -> &'t Transform {
        self.transform
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    /// `ŝ_{j,j,k}` as a `min(m,p) × n` matrix.
    pub fn s_hat(&self) -> &DMatrix<f64> {
        &self.s_hat
    }

    pub fn u_hat(&self) -> &Tensor3 {
        &self.u_hat
    }

    pub fn v_hat(&self) -> &Tensor3 {
        &self.v_hat
    }

    /// Squared Frobenius norm of the input in the transform domain.
    pub fn transform_energy(&self) -> f64 {
        self.norm_sqr
    }

    pub fn u(&self) -> Result<Tensor3> {
        back(self.transform, &self.u_hat, true)
    }

    pub fn v(&self) -> Result<Tensor3> {
        back(self.transform, &self.v_hat, true)
    }

    /// The f-diagonal `m × p × n` spatial factor `S`.
    pub fn s(&self) -> Result<Tensor3> {
        let (m, p, n) = self.dims;
        let mut sh = Tensor3::zeros(m, p, n).with_domain(self.transform.domain());
        for k in 0..n {
            for j in 0..m.min(p) {
                sh.set(j, j, k, C64::new(self.s_hat[(j, k)], 0.0));
            }
        }
        back(self.transform, &sh, true)
    }

    pub fn s_max(&self) -> f64 {
        self.s_hat.iter().copied().fold(0.0, f64::max)
    }

    fn nonzero(&self, tol: f64) -> impl Fn(f64) -> bool {
        let cut = tol * self.s_max();
        move |s| s > cut && s > 0.0
    }

    /// Number of indices `j` with `max_k ŝ_{j,j,k}` above `tol · ŝ_max`.
    pub fn t_rank(&self, tol: f64) -> usize {
        let nz = self.nonzero(tol);
        (0..self.s_hat.nrows())
            .filter(|&j| nz(self.s_hat.row(j).iter().copied().fold(0.0, f64::max)))
            .count()
    }

    pub fn multirank(&self, tol: f64) -> Vec<usize> {
        let nz = self.nonzero(tol);
        (0..self.dims.2)
            .map(|k| self.s_hat.column(k).iter().filter(|&&s| nz(s)).count())
            .collect()
    }

    pub fn implicit_rank(&self, tol: f64) -> usize {
        self.multirank(tol).iter().sum()
    }

    pub fn tubal_length(&self, tol: f64) -> Vec<usize> {
        let r = self.multirank(tol);
        self.transform.structure().groups().iter().map(|g| r[g[0]]).collect()
    }

    /// Validates `spec` against the factor dimensions and the group structure
    /// and returns the per-slice ranks.
    pub fn resolve(&self, spec: &RankSpec) -> Result<Vec<usize>> {
        let (m, p, n) = self.dims;
        let q = m.min(p);
        let structure = self.transform.structure();
        let ranks = match spec {
            RankSpec::TRank(r) => vec![*r; n],
            RankSpec::MultiRank(r) => {
                check_multirank(r, structure)?;
                r.clone()
            }
            RankSpec::TubalLength(l) => length_to_multirank(l, structure)?,
        };
        if let Some(r) = ranks.iter().find(|&&r| r > q) {
            return Err(Error::RankOutOfRange(format!("rank {r} exceeds min(m, p) = {q}")));
        }
        Ok(ranks)
    }

    fn truncated_hat(&self, ranks: &[usize]) -> Result<Tensor3> {
        let (m, p, n) = self.dims;
        let mut out = Tensor3::zeros(m, p, n).with_domain(self.transform.domain());
        for (k, &r) in ranks.iter().enumerate() {
            let u = self.u_hat.slice(k);
            let v = self.v_hat.slice(k);
            let mut acc = CMatrix::zeros(m, p);
            for j in 0..r {
                let s = C64::new(self.s_hat[(j, k)], 0.0);
                acc += (u.column(j) * s) * v.column(j).adjoint();
            }
            out.set_slice(k, &acc)?;
        }
        Ok(out)
    }

    /// The truncated tensor as a real spatial tensor.
    pub fn truncate(&self, spec: &RankSpec) -> Result<Tensor3> {
        let ranks = self.resolve(spec)?;
        back(self.transform, &self.truncated_hat(&ranks)?, true)
    }

    pub fn truncate_multirank(&self, ranks: &[usize]) -> Result<Tensor3> {
        self.truncate(&RankSpec::MultiRank(ranks.to_vec()))
    }

    pub fn reconstruct(&self) -> Result<Tensor3> {
        self.truncate(&RankSpec::TRank(self.dims.0.min(self.dims.1)))
    }

    /// `Σ_k μ_{τ(k)}⁻² Σ_{j > r_k} ŝ²_{j,j,k}`: the squared spatial error of
    /// [`Tsvdm::truncate`] for Eckart-Young valid transforms.
    pub fn truncation_error(&self, spec: &RankSpec) -> Result<f64> {
        let cert = self.transform.certificate();
        if !cert.valid {
            return Err(Error::NotEckartYoung);
        }
        let ranks = self.resolve(spec)?;
        let structure = self.transform.structure();
        Ok(ranks
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let mu = cert.mu[structure.tau(k)];
                let tail: f64 = self.s_hat.column(k).iter().skip(r).map(|s| s * s).sum();
                tail / (mu * mu)
            })
            .sum())
    }

    /// Transform-domain energy fraction kept by the per-slice ranks.
    pub fn retained_energy(&self, ranks: &[usize]) -> f64 {
        if self.norm_sqr == 0.0 {
            return 1.0;
        }
        let kept: f64 = ranks
            .iter()
            .enumerate()
            .map(|(k, &r)| self.s_hat.column(k).iter().take(r).map(|s| s * s).sum::<f64>())
            .sum();
        let total: f64 = self.s_hat.iter().map(|s| s * s).sum();
        if total == 0.0 {
            1.0
        } else {
            kept / total
        }
    }

    pub fn compact(&self, spec: &RankSpec) -> Result<CompactFactors> {
        let ranks = self.resolve(spec)?;
        let mut out = CompactFactors {
            ranks: ranks.clone(),
            u: Vec::with_capacity(ranks.len()),
            s: Vec::with_capacity(ranks.len()),
            v: Vec::with_capacity(ranks.len()),
        };
        for (k, &r) in ranks.iter().enumerate() {
            out.u.push(self.u_hat.slice(k).columns(0, r).into_owned());
            out.v.push(self.v_hat.slice(k).columns(0, r).into_owned());
            out.s.push(self.s_hat.column(k).iter().take(r).copied().collect());
        }
        Ok(out)
    }

    /// Energy-adaptive multirank: sort all `ŝ²` descending, take the
    /// smallest count `r_γ` whose cumulative fraction reaches `γ`, then keep
    /// on each slice every value at least as large as the `r_γ`-th.
    pub fn energy_multirank(&self, gamma: f64) -> Result<(Vec<usize>, usize)> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::GammaOutOfRange(gamma));
        }
        let n = self.dims.2;
        let mut nu: Vec<f64> = self.s_hat.iter().map(|s| s * s).collect();
        nu.sort_by(|a, b| b.total_cmp(a));
        let mut omega = Vec::with_capacity(nu.len());
        let mut acc = 0.0;
        for v in &nu {
            acc += v;
            omega.push(acc);
        }
        let total = acc;
        if total == 0.0 {
            return Ok((vec![0; n], 0));
        }
        let r_gamma = omega.iter().position(|w| w / total >= gamma).map_or(nu.len(), |i| i + 1);
        let cut = nu[r_gamma - 1];
        let rho = (0..n)
            .map(|k| self.s_hat.column(k).iter().filter(|&&s| s * s >= cut).count())
            .collect();
        Ok((rho, r_gamma))
    }
}

/// Result of the energy-adaptive truncation.
#[derive(Clone, Debug)]
pub struct Tsvdm2 {
    pub approx: Tensor3,
    pub rho: Vec<usize>,
    pub r_gamma: usize,
    pub retained_energy: f64,
}

pub fn tsvdm2(x: &Tensor3, t: &Transform, gamma: f64) -> Result<Tsvdm2> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::GammaOutOfRange(gamma));
    }
    let f = tsvdm(x, t)?;
    let (rho, r_gamma) = f.energy_multirank(gamma)?;
    Ok(Tsvdm2 {
        approx: f.truncate_multirank(&rho)?,
        retained_energy: f.retained_energy(&rho),
        rho,
        r_gamma,
    })
}
