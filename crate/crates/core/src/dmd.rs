//! Tubal dynamic mode decomposition.
//!
//! Lateral slices of the input are snapshots. With `X` the first `p` and
//! `Y` the last `p` of them, the fit truncates `X = U ⋆ S ⋆ Vᴴ`, forms
//! `K = Uᴴ ⋆ Y ⋆ V ⋆ S⁺`, takes a facewise Schur form `K = W ⋆ T ⋆ Wᴴ` and
//! keeps the modes `Z = U ⋆ W`, so that `A_DMD = Z ⋆ T ⋆ Zᴴ`.
//!
//! Modes and the triangular factor are stored in the transform domain.
//! Conjugate slices get conjugated Schur factors, which keeps `A_DMD` real
//! while individual modes stay complex.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::back;
use crate::linalg::{schur_complex, CMatrix};
use crate::random::{random_orthogonal, rng, uniform, TubalRng};
use crate::tensor::{Domain, Tensor3, C64};
use crate::transform::{Transform, TransformId};
use crate::tsvdm::{tsvdm, RankSpec};
use crate::{Error, Result, ZERO_TUBE_TOL};

/// Rank used to truncate the snapshot factorization.
#[derive(Clone, Debug, PartialEq)]
pub enum FitRank {
    Spec(RankSpec),
    /// Energy-adaptive multirank retaining this fraction.
    Energy(f64),
}

#[derive(Clone, Debug)]
pub struct DmdModel {
    transform: TransformId,
    z_hat: Tensor3,
    t_hat: Tensor3,
    ranks: Vec<usize>,
    rank_used: FitRank,
    fit_error: f64,
}

impl DmdModel {
    /// Reassembles a model from stored parts.
    pub fn from_parts(
        transform: TransformId,
        z_hat: Tensor3,
        t_hat: Tensor3,
        ranks: Vec<usize>,
        rank_used: FitRank,
        fit_error: f64,
    ) -> Result<Self> {
        let (_, r, n) = z_hat.dims();
        if t_hat.dims() != (r, r, n) || ranks.len() != n {
            return Err(Error::Shape(format!(
                "modes {:?}, Schur factor {:?}, {} ranks",
                z_hat.dims(),
                t_hat.dims(),
                ranks.len()
            )));
        }
        let domain = Domain::Transform(transform);
        if z_hat.domain() != domain || t_hat.domain() != domain {
            return Err(Error::Domain("model factors must live in the transform domain".into()));
        }
        Ok(Self {
            transform,
            z_hat,
            t_hat,
            ranks,
            rank_used,
            fit_error,
        })
    }

    pub fn transform(&self) -> TransformId {
        self.transform
    }

    /// Modes `Ẑ` (`m × r̃ × n`), transform domain.
    pub fn z_hat(&self) -> &Tensor3 {
        &self.z_hat
    }

    /// Upper-triangular Schur factor `T̂` (`r̃ × r̃ × n`), transform domain.
    pub fn t_hat(&self) -> &Tensor3 {
        &self.t_hat
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank_used(&self) -> &FitRank {
        &self.rank_used
    }

    pub fn fit_error(&self) -> f64 {
        self.fit_error
    }

    /// `r̃`, the largest per-slice rank.
    pub fn width(&self) -> usize {
        self.z_hat.p()
    }

    /// Eigenvalues of `A_DMD` restricted to each transform slice.
    pub fn eigenvalues(&self) -> Vec<Vec<C64>> {
        (0..self.t_hat.n())
            .map(|k| (0..self.width()).map(|j| self.t_hat.get(j, j, k)).collect())
            .collect()
    }

    fn check(&self, t: &Transform) -> Result<()> {
        if t.id() != self.transform {
            return Err(Error::Domain("model was fitted under a different transform".into()));
        }
        Ok(())
    }

    /// `A_DMD = Z ⋆ T ⋆ Zᴴ` as a spatial tensor.
    pub fn operator(&self, t: &Transform) -> Result<Tensor3> {
        self.check(t)?;
        let a = self.z_hat.facewise(&self.t_hat)?.facewise(&self.z_hat.facewise_adjoint())?;
        back(t, &a, true)
    }

    /// Lateral slice `k` is `A_DMD^(k+1) ⋆ x0`.
    pub fn predict(&self, t: &Transform, x0: &Tensor3, steps: usize) -> Result<Tensor3> {
        self.check(t)?;
        let (m, r, n) = self.z_hat.dims();
        if x0.dims() != (m, 1, n) {
            return Err(Error::Shape(format!("initial state {:?}, expected {:?}", x0.dims(), (m, 1, n))));
        }
        let xh = t.forward(x0)?;
        let mut out = Tensor3::zeros(m, steps, n).with_domain(t.domain());
        for k in 0..n {
            let z = self.z_hat.slice(k);
            let tk = self.t_hat.slice(k);
            let mut b = z.adjoint() * xh.slice(k);
            let mut cols = CMatrix::zeros(m, steps);
            for s in 0..steps {
                b = &tk * b;
                cols.set_column(s, &(&z * &b).column(0));
            }
            debug_assert_eq!(b.nrows(), r);
            out.set_slice(k, &cols)?;
        }
        back(t, &out, x0.is_real())
    }
}

/// Fits a tubal DMD model to the snapshots `x` (`m × (p+1) × n`).
pub fn tdmd_fit(x: &Tensor3, t: &Transform, rank: &FitRank) -> Result<DmdModel> {
    let (m, cols, n) = x.dims();
    if cols < 2 {
        return Err(Error::Shape(format!("need at least two snapshots, got {cols}")));
    }
    let train = x.lateral(0..cols - 1)?;
    let next = x.lateral(1..cols)?;
    if train.frob_norm() == 0.0 {
        return Err(Error::Degenerate("training snapshots are all zero"));
    }
    let f = tsvdm(&train, t)?;
    let ranks = match rank {
        FitRank::Spec(spec) => f.resolve(spec)?,
        FitRank::Energy(gamma) => f.energy_multirank(*gamma)?.0,
    };
    let width = ranks.iter().copied().max().unwrap_or(0);
    let cut = ZERO_TUBE_TOL * f.s_max();
    let yh = t.forward(&next)?;
    let domain = t.domain();
    let mut z_slices = vec![CMatrix::zeros(m, width); n];
    let mut t_slices = vec![CMatrix::zeros(width, width); n];
    for group in t.structure().groups() {
        let k0 = group[0];
        let u = f.u_hat().slice(k0).columns(0, width).into_owned();
        let v = f.v_hat().slice(k0).columns(0, width).into_owned();
        let mut s_pinv = CMatrix::zeros(width, width);
        for j in 0..ranks[k0] {
            let s = f.s_hat()[(j, k0)];
            if s > cut {
                s_pinv[(j, j)] = C64::new(1.0 / s, 0.0);
            }
        }
        let kmat = u.adjoint() * yh.slice(k0) * &v * s_pinv;
        let (w, tri) = schur_complex(&kmat)?;
        let z = u * w;
        for &k in group {
            if k == k0 {
                z_slices[k] = z.clone();
                t_slices[k] = tri.clone();
            } else {
                z_slices[k] = z.map(|c| c.conj());
                t_slices[k] = tri.map(|c| c.conj());
            }
        }
    }
    let (z_hat, t_hat) = if width == 0 {
        (Tensor3::zeros(m, 0, n).with_domain(domain), Tensor3::zeros(0, 0, n).with_domain(domain))
    } else {
        (Tensor3::from_slices(&z_slices, domain)?, Tensor3::from_slices(&t_slices, domain)?)
    };
    let mut model = DmdModel {
        transform: t.id(),
        z_hat,
        t_hat,
        ranks,
        rank_used: rank.clone(),
        fit_error: 0.0,
    };
    let xh = t.forward(&train)?;
    let z = &model.z_hat;
    let pred = z.facewise(&model.t_hat)?.facewise(&z.facewise_adjoint().facewise(&xh)?)?;
    let resid = t.backward(&pred.sub(&yh)?)?;
    let denom = next.frob_norm();
    model.fit_error = if denom == 0.0 { resid.frob_norm() } else { resid.frob_norm() / denom };
    Ok(model)
}

/// Pseudo-inverse of an f-diagonal tensor: transform-domain diagonal entries
/// above `tol` times the largest one are inverted, the rest set to zero.
pub fn pseudo_inverse_fdiag(s: &Tensor3, t: &Transform, tol: f64) -> Result<Tensor3> {
    let (m, p, n) = s.dims();
    let sh = t.forward(s)?;
    let q = m.min(p);
    let max = (0..n)
        .flat_map(|k| (0..q).map(move |j| (j, k)))
        .map(|(j, k)| sh.get(j, j, k).norm())
        .fold(0.0, f64::max);
    let mut out = Tensor3::zeros(p, m, n).with_domain(t.domain());
    for k in 0..n {
        for j in 0..q {
            let z = sh.get(j, j, k);
            if z.norm() > tol * max {
                out.set(j, j, k, z.inv());
            }
        }
    }
    back(t, &out, s.is_real())
}

/// Random `m × m × n` operator of t-rank `rank`: each group's representative
/// slice is `Q diag(λ) Qᴴ` on `rank` orthonormal columns with
/// `|λ| ∈ [0.8, 1]` (real `λ` and `Q` on real slices), mirrored onto pairs.
pub fn synthetic_operator(m: usize, rank: usize, t: &Transform, seed: u64) -> Result<Tensor3> {
    t.require_real_ring()?;
    if rank > m {
        return Err(Error::RankOutOfRange(format!("operator rank {rank} exceeds {m}")));
    }
    let mut r = rng(seed);
    let n = t.n();
    let mut slices = vec![CMatrix::zeros(m, m); n];
    for group in t.structure().groups() {
        let real = group.len() == 1;
        let q = basis(m, real, &mut r);
        let mut d = CMatrix::zeros(m, m);
        for j in 0..rank {
            let mag = uniform(&mut r, 0.8, 1.0);
            d[(j, j)] = if real {
                C64::new(if uniform(&mut r, 0.0, 1.0) < 0.5 { -mag } else { mag }, 0.0)
            } else {
                C64::from_polar(mag, uniform(&mut r, -core::f64::consts::PI, core::f64::consts::PI))
            };
        }
        let a = &q * d * q.adjoint();
        for &k in group {
            slices[k] = if k == group[0] { a.clone() } else { a.map(|c| c.conj()) };
        }
    }
    let hat = Tensor3::from_slices(&slices, t.domain())?;
    back(t, &hat, true)
}

fn basis(m: usize, real: bool, r: &mut TubalRng) -> CMatrix {
    let o = random_orthogonal(m, r);
    if real {
        return o.map(|x| C64::new(x, 0.0));
    }
    let o2 = random_orthogonal(m, r);
    let g = CMatrix::from_fn(m, m, |i, j| C64::new(o[(i, j)], o2[(i, j)]));
    g.qr().q()
}

/// Snapshots `[x0, A⋆x0, …, A^steps⋆x0]` as an `m × (steps+1) × n` tensor.
pub fn trajectory(a: &Tensor3, x0: &Tensor3, steps: usize, t: &Transform) -> Result<Tensor3> {
    let (m, _, n) = x0.dims();
    let ah = t.forward(a)?;
    let mut cur = t.forward(x0)?;
    let mut out = Tensor3::zeros(m, steps + 1, n).with_domain(t.domain());
    for s in 0..=steps {
        for k in 0..n {
            for i in 0..m {
                out.set(i, s, k, cur.get(i, 0, k));
            }
        }
        cur = ah.facewise(&cur)?;
    }
    back(t, &out, a.is_real() && x0.is_real())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{identity_tensor, starm};
    use crate::random::random_real_tensor;

    fn system(m: usize, rank: usize, steps: usize, t: &Transform, seed: u64) -> (Tensor3, Tensor3) {
        let a = synthetic_operator(m, rank, t, seed).unwrap();
        let mut r = rng(seed + 100);
        let x0 = random_real_tensor(m, 1, t.n(), &mut r);
        (a.clone(), trajectory(&a, &x0, steps, t).unwrap())
    }

    #[test]
    fn synthetic_operator_is_real_with_requested_rank() {
        let t = Transform::dft(4);
        let a = synthetic_operator(5, 2, &t, 1).unwrap();
        assert!(a.is_real());
        let f = tsvdm(&a, &t).unwrap();
        assert_eq!(f.t_rank(ZERO_TUBE_TOL), 2);
    }

    #[test]
    fn trajectory_matches_repeated_products() {
        let t = Transform::dct(3);
        let (a, x) = system(4, 2, 3, &t, 2);
        let x1 = x.lateral(1..2).unwrap();
        let want = starm(&a, &x.lateral(0..1).unwrap(), &t).unwrap();
        assert!(x1.distance(&want).unwrap() < 1e-13);
    }

    #[test]
    fn exact_recovery_at_full_rank() {
        for (t, seed) in [(Transform::dft(4), 3), (Transform::dct(4), 4), (Transform::random_valid(5, 2), 5)] {
            for rank in 1..=3 {
                let (a, x) = system(6, rank, 20, &t, seed + rank as u64);
                let model = tdmd_fit(&x, &t, &FitRank::Spec(RankSpec::TRank(6))).unwrap();
                assert!(model.fit_error() <= 1e-8, "fit error {}", model.fit_error());
                let op = model.operator(&t).unwrap();
                assert!(op.is_real());
                // the operator is only identifiable on the visited subspace
                let x0 = x.lateral(0..1).unwrap();
                let pred = model.predict(&t, &x0, 5).unwrap();
                let truth = x.lateral(1..6).unwrap();
                assert!(pred.distance(&truth).unwrap() <= 1e-6 * truth.frob_norm());
                let _ = a;
            }
        }
    }

    #[test]
    fn model_invariants() {
        let t = Transform::dft(4);
        let (_, x) = system(5, 3, 12, &t, 9);
        let model = tdmd_fit(&x, &t, &FitRank::Spec(RankSpec::TRank(4))).unwrap();
        let w = model.width();
        for k in 0..4 {
            let z = model.z_hat().slice(k);
            assert!((z.adjoint() * &z - CMatrix::identity(w, w)).norm() < 1e-8);
            let tk = model.t_hat().slice(k);
            for j in 0..w {
                for i in j + 1..w {
                    assert!(tk[(i, j)].norm() <= 1e-10);
                }
            }
        }
        let y = random_real_tensor(5, 2, 4, &mut rng(1));
        let ay = starm(&model.operator(&t).unwrap(), &y, &t).unwrap();
        assert!(ay.is_real());
    }

    #[test]
    fn underfit_is_not_exact() {
        let t = Transform::dct(4);
        let (_, x) = system(6, 3, 20, &t, 11);
        let model = tdmd_fit(&x, &t, &FitRank::Spec(RankSpec::TRank(1))).unwrap();
        assert!(model.fit_error() > 1e-3);
        let energy = tdmd_fit(&x, &t, &FitRank::Energy(0.5)).unwrap();
        assert!(energy.fit_error() > 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        let t = Transform::dct(2);
        assert!(matches!(
            tdmd_fit(&Tensor3::zeros(3, 4, 2), &t, &FitRank::Spec(RankSpec::TRank(1))),
            Err(Error::Degenerate(_))
        ));
        assert!(tdmd_fit(&Tensor3::zeros(3, 1, 2), &t, &FitRank::Spec(RankSpec::TRank(1))).is_err());
    }

    #[test]
    fn predict_edges() {
        let t = Transform::dct(3);
        let (_, x) = system(4, 2, 10, &t, 12);
        let model = tdmd_fit(&x, &t, &FitRank::Spec(RankSpec::TRank(4))).unwrap();
        let x0 = x.lateral(0..1).unwrap();
        assert_eq!(model.predict(&t, &x0, 0).unwrap().dims(), (4, 0, 3));
        assert!(model.predict(&Transform::dft(3), &x0, 1).is_err());

        // T = I and Z spanning x0 gives back x0
        let id = identity_tensor(4, &t).unwrap();
        let zh = t.forward(&id).unwrap();
        let th = t.forward(&identity_tensor(4, &t).unwrap()).unwrap();
        let m = DmdModel::from_parts(t.id(), zh, th, vec![4; 3], FitRank::Spec(RankSpec::TRank(4)), 0.0).unwrap();
        let p = m.predict(&t, &x0, 1).unwrap();
        assert!(p.distance(&x0).unwrap() < 1e-13);
    }

    #[test]
    fn contractive_prediction_norms_decrease() {
        let t = Transform::dft(4);
        let (_, x) = system(5, 5, 15, &t, 13);
        let model = tdmd_fit(&x, &t, &FitRank::Spec(RankSpec::TRank(5))).unwrap();
        let mut scaled = model.t_hat().clone();
        // shrink all eigenvalues well inside the unit circle
        for k in 0..4 {
            let s = scaled.slice(k) * C64::new(0.3, 0.0);
            scaled.set_slice(k, &s).unwrap();
        }
        let m = DmdModel::from_parts(t.id(), model.z_hat().clone(), scaled, model.ranks().to_vec(), model.rank_used().clone(), 0.0).unwrap();
        let x0 = x.lateral(0..1).unwrap();
        let p = m.predict(&t, &x0, 8).unwrap();
        let norms: Vec<f64> = (0..8).map(|s| p.lateral(s..s + 1).unwrap().frob_norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fdiag_pseudo_inverse() {
        let t = Transform::dft(4);
        let i = identity_tensor(3, &t).unwrap();
        assert!(pseudo_inverse_fdiag(&i, &t, 1e-12).unwrap().distance(&i).unwrap() < 1e-14);
        assert_eq!(pseudo_inverse_fdiag(&Tensor3::zeros(2, 3, 4), &t, 1e-12).unwrap().frob_norm(), 0.0);

        let mut sh = Tensor3::zeros(3, 2, 4).with_domain(t.domain());
        sh.set(0, 0, 0, C64::new(2.0, 0.0));
        sh.set(1, 1, 2, C64::new(0.5, 0.0));
        for k in [1, 3] {
            sh.set(0, 0, k, C64::new(4.0, 0.0));
        }
        let s = t.backward(&sh).unwrap().into_real_checked().unwrap();
        let sp = pseudo_inverse_fdiag(&s, &t, 1e-12).unwrap();
        assert_eq!(sp.dims(), (2, 3, 4));
        let sss = starm(&starm(&s, &sp, &t).unwrap(), &s, &t).unwrap();
        assert!(sss.distance(&s).unwrap() <= 1e-10 * s.frob_norm());
        let proj = t.forward(&starm(&s, &sp, &t).unwrap()).unwrap();
        for k in 0..4 {
            for j in 0..3 {
                let want = if j < 2 && sh.get(j, j, k).norm() > 0.0 { 1.0 } else { 0.0 };
                assert!((proj.get(j, j, k) - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}
