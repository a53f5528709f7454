//! The `⋆M` product family.
//!
//! Every product runs through the transform domain: one mode-3 product by
//! `M`, a facewise product, one mode-3 product by `M⁻¹`. When the ring is real
//! and all inputs are real, results are cleaned back to real storage.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::linalg::CMatrix;
use crate::tensor::{Domain, Tensor3, Tube, C64};
use crate::transform::Transform;
use crate::{Error, Result};

/// Default threshold of [`tube_weak_inverse`], relative to the tube's largest
/// transform-domain magnitude.
pub const WEAK_INVERSE_TOL: f64 = 1e-12;

fn spatial(x: &Tensor3, what: &str) -> Result<()> {
    if x.domain() != Domain::Spatial {
        return Err(Error::Domain(format!("{what} must be spatial, got {:?}", x.domain())));
    }
    Ok(())
}

/// Maps a transform-domain result back and drops the imaginary part when the
/// result is known to be real.
pub(crate) fn back(t: &Transform, xhat: &Tensor3, real: bool) -> Result<Tensor3> {
    let x = t.backward(xhat)?;
    if real && t.is_real_ring() {
        x.into_real_checked()
    } else {
        Ok(x)
    }
}

pub fn starm(a: &Tensor3, b: &Tensor3, t: &Transform) -> Result<Tensor3> {
    spatial(a, "left factor")?;
    spatial(b, "right factor")?;
    if a.p() != b.m() || a.n() != b.n() {
        return Err(Error::Shape(format!("⋆M product {:?} · {:?}", a.dims(), b.dims())));
    }
    let prod = t.forward(a)?.facewise(&t.forward(b)?)?;
    back(t, &prod, a.is_real() && b.is_real())
}

pub fn tube_mul(a: &Tube, b: &Tube, t: &Transform) -> Result<Tube> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("tube lengths {} and {}", a.len(), b.len())));
    }
    Tube::from_tensor(&starm(&a.to_tensor(), &b.to_tensor(), t)?)
}

/// Multiplies every tube of `a` by `b`.
pub fn tube_scale(b: &Tube, a: &Tensor3, t: &Transform) -> Result<Tensor3> {
    if b.len() != a.n() {
        return Err(Error::Shape(format!("tube length {} vs tensor depth {}", b.len(), a.n())));
    }
    spatial(a, "tensor")?;
    let bt = b.to_tensor();
    spatial(&bt, "tube")?;
    let bh = t.forward(&bt)?;
    let mut ah = t.forward(a)?;
    let mp = a.m() * a.p();
    for (k, chunk) in ah.data_mut().chunks_mut(mp.max(1)).enumerate().take(a.n()) {
        let s = bh.data()[k];
        for z in chunk {
            *z *= s;
        }
    }
    back(t, &ah, a.is_real() && bt.is_real())
}

pub fn conj_transpose(a: &Tensor3, t: &Transform) -> Result<Tensor3> {
    spatial(a, "tensor")?;
    let h = t.forward(a)?.facewise_adjoint();
    back(t, &h, a.is_real())
}

/// The tensor whose transform-domain slices are all `I_m`.
pub fn identity_tensor(m: usize, t: &Transform) -> Result<Tensor3> {
    let n = t.n();
    let eye = CMatrix::identity(m, m);
    let slices: Vec<CMatrix> = (0..n).map(|_| eye.clone()).collect();
    let hat = Tensor3::from_slices(&slices, t.domain())?;
    back(t, &hat, true)
}

/// `‖Qᴴ ⋆ Q − I‖_F ≤ tol`.
pub fn is_unitary(q: &Tensor3, t: &Transform, tol: f64) -> Result<bool> {
    Ok(unitarity_error(q, t)? <= tol)
}

pub fn unitarity_error(q: &Tensor3, t: &Transform) -> Result<f64> {
    let qh = conj_transpose(q, t)?;
    let prod = starm(&qh, q, t)?;
    prod.distance(&identity_tensor(q.p(), t)?)
}

/// Reciprocal of the transform-domain entries above `tol` relative to the
/// largest one; zero elsewhere.
pub fn tube_weak_inverse(s: &Tube, t: &Transform, tol: f64) -> Result<Tube> {
    let st = s.to_tensor();
    spatial(&st, "tube")?;
    let mut sh = t.forward(&st)?;
    let max = sh.max_abs();
    for z in sh.data_mut() {
        *z = if z.norm() > tol * max { z.inv() } else { C64::zero() };
    }
    Tube::from_tensor(&back(t, &sh, st.is_real())?)
}

/// Circular t-product by direct summation over the block-circulant structure:
/// `C[:,:,k] = Σ_j A[:,:,(k−j) mod n] · B[:,:,j]`.
pub fn t_product_circulant(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.p() != b.m() || a.n() != b.n() {
        return Err(Error::Shape(format!("t-product {:?} · {:?}", a.dims(), b.dims())));
    }
    let n = a.n();
    let mut slices = Vec::with_capacity(n);
    for k in 0..n {
        let mut c = CMatrix::zeros(a.m(), b.p());
        for j in 0..n {
            c += a.slice((k + n - j) % n) * b.slice(j);
        }
        slices.push(c);
    }
    if n == 0 {
        return Ok(Tensor3::zeros(a.m(), b.p(), 0));
    }
    Tensor3::from_slices(&slices, Domain::Spatial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_complex_tensor, random_real_tensor, rng};
    use alloc::vec;

    fn rel(a: &Tensor3, b: &Tensor3) -> f64 {
        a.distance(b).unwrap() / b.frob_norm().max(1e-300)
    }

    fn transforms() -> Vec<Transform> {
        vec![
            Transform::identity(4),
            Transform::dft(4),
            Transform::dct(4),
            Transform::random_valid(4, 9),
            Transform::new(CMatrix::from_fn(4, 4, |i, j| C64::new(if i <= j { 1.0 } else { 0.0 }, 0.0))).unwrap(),
        ]
    }

    #[test]
    fn identity_tube_and_identity_transform() {
        let t = Transform::dft(4);
        let e = Tube::from_tensor(&identity_tensor(1, &t).unwrap()).unwrap();
        let b = Tube::from_real(&[1.0, -2.0, 0.5, 3.0]);
        assert!(tube_mul(&e, &b, &t).unwrap().distance(&b) < 1e-14);
        // DFT identity is the first canonical tube
        assert!(e.distance(&Tube::from_real(&[1.0, 0.0, 0.0, 0.0])) < 1e-15);

        let id = Transform::identity(3);
        let a = Tube::from_real(&[2.0, 3.0, -1.0]);
        let c = tube_mul(&a, &Tube::from_real(&[0.5, -1.0, 4.0]), &id).unwrap();
        assert_eq!(c, Tube::from_real(&[1.0, -3.0, -4.0]));
    }

    #[test]
    fn dft_tube_product_is_circular_convolution() {
        let t = Transform::dft(4);
        let a = [0.0, 1.0, 0.0, 0.0];
        let b = [1.0, 2.0, 3.0, 4.0];
        let mut conv = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                conv[(i + j) % 4] += a[i] * b[j];
            }
        }
        let c = tube_mul(&Tube::from_real(&a), &Tube::from_real(&b), &t).unwrap();
        assert!(c.distance(&Tube::from_real(&conv)) < 1e-14);
        assert_eq!(conv, [4.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn tube_mul_commutes_and_associates() {
        let mut r = rng(5);
        for t in transforms() {
            let x: Vec<Tube> = (0..3)
                .map(|_| Tube::from_tensor(&random_real_tensor(1, 1, 4, &mut r)).unwrap())
                .collect();
            let ab = tube_mul(&x[0], &x[1], &t).unwrap();
            assert!(ab.distance(&tube_mul(&x[1], &x[0], &t).unwrap()) < 1e-12 * ab.norm());
            let l = tube_mul(&ab, &x[2], &t).unwrap();
            let rr = tube_mul(&x[0], &tube_mul(&x[1], &x[2], &t).unwrap(), &t).unwrap();
            assert!(l.distance(&rr) < 1e-12 * l.norm().max(1.0));
        }
        assert!(tube_mul(&Tube::zeros(3), &Tube::zeros(4), &Transform::identity(3)).is_err());
    }

    #[test]
    fn starm_matches_entrywise_tube_formula() {
        let mut r = rng(6);
        for t in transforms() {
            let a = random_real_tensor(2, 3, 4, &mut r);
            let b = random_real_tensor(3, 2, 4, &mut r);
            let c = starm(&a, &b, &t).unwrap();
            assert!(c.is_real());
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = Tube::zeros(4);
                    for k in 0..3 {
                        let ai = Tube::new(a.tube(i, k), Domain::Spatial);
                        let bj = Tube::new(b.tube(k, j), Domain::Spatial);
                        let p = tube_mul(&ai, &bj, &t).unwrap();
                        let sum: Vec<C64> = acc.values().iter().zip(p.values()).map(|(x, y)| x + y).collect();
                        acc = Tube::new(sum, Domain::Spatial);
                    }
                    let got = Tube::new(c.tube(i, j), Domain::Spatial);
                    assert!(got.distance(&acc) <= 1e-11 * c.frob_norm());
                }
            }
        }
    }

    #[test]
    fn starm_identity_associativity_distributivity() {
        let mut r = rng(7);
        for t in transforms() {
            let a = random_real_tensor(3, 2, 4, &mut r);
            let b = random_real_tensor(2, 4, 4, &mut r);
            let b2 = random_real_tensor(2, 4, 4, &mut r);
            let c = random_real_tensor(4, 2, 4, &mut r);
            let i3 = identity_tensor(3, &t).unwrap();
            let i2 = identity_tensor(2, &t).unwrap();
            assert!(rel(&starm(&i3, &a, &t).unwrap(), &a) < 1e-12);
            assert!(rel(&starm(&a, &i2, &t).unwrap(), &a) < 1e-12);
            let l = starm(&starm(&a, &b, &t).unwrap(), &c, &t).unwrap();
            let rr = starm(&a, &starm(&b, &c, &t).unwrap(), &t).unwrap();
            assert!(rel(&l, &rr) < 1e-11);
            let d = starm(&a, &b.add(&b2).unwrap(), &t).unwrap();
            let e = starm(&a, &b, &t).unwrap().add(&starm(&a, &b2, &t).unwrap()).unwrap();
            assert!(rel(&d, &e) < 1e-11);
        }
        let t = Transform::identity(4);
        assert!(starm(&Tensor3::zeros(2, 3, 4), &Tensor3::zeros(2, 3, 4), &t).is_err());
        let xh = t.forward(&Tensor3::zeros(2, 2, 4)).unwrap();
        assert!(matches!(starm(&xh, &xh, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn single_slice_is_matrix_product() {
        let mut r = rng(8);
        let t = Transform::dct(1);
        let a = random_real_tensor(3, 2, 1, &mut r);
        let b = random_real_tensor(2, 4, 1, &mut r);
        let c = starm(&a, &b, &t).unwrap();
        let want = a.slice(0) * b.slice(0);
        assert!((c.slice(0) - want).norm() < 1e-13);
    }

    #[test]
    fn identity_tensor_spatial_forms() {
        let t = Transform::dft(4);
        let i = identity_tensor(2, &t).unwrap();
        assert!((i.slice(0) - CMatrix::identity(2, 2)).norm() < 1e-15);
        for k in 1..4 {
            assert!(i.slice(k).norm() < 1e-15);
        }
        // for M = I every transform slice is I, so is every spatial slice
        let i = identity_tensor(3, &Transform::identity(2)).unwrap();
        for k in 0..2 {
            assert_eq!(i.slice(k), CMatrix::identity(3, 3));
        }
        let e = identity_tensor(1, &Transform::dct(3)).unwrap();
        assert_eq!(e.dims(), (1, 1, 3));
        let hat = t.forward(&identity_tensor(2, &t).unwrap()).unwrap();
        assert!((hat.slice(2) - CMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn tube_scale_matches_fiber_loop() {
        let mut r = rng(9);
        let t = Transform::dft(4);
        let a = random_real_tensor(2, 2, 4, &mut r);
        let b = Tube::from_tensor(&random_real_tensor(1, 1, 4, &mut r)).unwrap();
        let s = tube_scale(&b, &a, &t).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let f = tube_mul(&b, &Tube::new(a.tube(i, j), Domain::Spatial), &t).unwrap();
                assert!(Tube::new(s.tube(i, j), Domain::Spatial).distance(&f) < 1e-12);
            }
        }
        let e = Tube::from_tensor(&identity_tensor(1, &t).unwrap()).unwrap();
        assert!(rel(&tube_scale(&e, &a, &t).unwrap(), &a) < 1e-14);
        assert_eq!(tube_scale(&Tube::zeros(4), &a, &t).unwrap().frob_norm(), 0.0);
        assert!(tube_scale(&Tube::zeros(3), &a, &t).is_err());
    }

    #[test]
    fn conj_transpose_properties() {
        let mut r = rng(10);
        let id = Transform::identity(3);
        let mut sym = random_real_tensor(3, 3, 3, &mut r);
        for k in 0..3 {
            let s = sym.slice(k);
            sym.set_slice(k, &(&s + s.transpose())).unwrap();
        }
        assert!(rel(&conj_transpose(&sym, &id).unwrap(), &sym) < 1e-15);

        let t = Transform::dft(3);
        let a = random_real_tensor(2, 2, 3, &mut r);
        let b = random_real_tensor(2, 2, 3, &mut r);
        let ah = conj_transpose(&a, &t).unwrap();
        assert!(rel(&conj_transpose(&ah, &t).unwrap(), &a) < 1e-14);
        let l = conj_transpose(&starm(&a, &b, &t).unwrap(), &t).unwrap();
        let rr = starm(&conj_transpose(&b, &t).unwrap(), &ah, &t).unwrap();
        assert!(rel(&l, &rr) < 1e-12);

        let z = random_complex_tensor(2, 3, 4, &mut r);
        let t4 = Transform::dct(4);
        let zz = conj_transpose(&conj_transpose(&z, &t4).unwrap(), &t4).unwrap();
        assert!(rel(&zz, &z) < 1e-14);
    }

    #[test]
    fn unitarity_checks() {
        let t = Transform::dct(4);
        assert!(is_unitary(&identity_tensor(3, &t).unwrap(), &t, 1e-12).unwrap());
        let mut r = rng(11);
        let noise = random_real_tensor(3, 3, 4, &mut r).scale(C64::new(0.1, 0.0));
        let q = identity_tensor(3, &t).unwrap().add(&noise).unwrap();
        assert!(!is_unitary(&q, &t, 1e-6).unwrap());
    }

    #[test]
    fn weak_inverse() {
        let t = Transform::dft(2);
        // ŝ = (2, 0) ⇔ s = F⁻¹ŝ = (1, 1)
        let s = Tube::from_real(&[1.0, 1.0]);
        let sp = tube_weak_inverse(&s, &t, WEAK_INVERSE_TOL).unwrap();
        let p = tube_mul(&s, &sp, &t).unwrap();
        let ph = t.forward(&p.to_tensor()).unwrap();
        assert!((ph.data()[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(ph.data()[1].norm() < 1e-15);
        assert!(tube_mul(&p, &p, &t).unwrap().distance(&p) < 1e-15);
        assert!(tube_mul(&p, &s, &t).unwrap().distance(&s) < 1e-15);

        let z = tube_weak_inverse(&Tube::zeros(3), &Transform::dct(3), WEAK_INVERSE_TOL).unwrap();
        assert_eq!(z.norm(), 0.0);
        let t = Transform::random_valid(5, 1);
        let e = Tube::from_tensor(&identity_tensor(1, &t).unwrap()).unwrap();
        assert!(tube_weak_inverse(&e, &t, WEAK_INVERSE_TOL).unwrap().distance(&e) < 1e-12);
    }

    #[test]
    fn circulant_oracle_agrees_with_dft_starm() {
        let mut r = rng(12);
        let t = Transform::dft(4);
        let a = random_real_tensor(2, 3, 4, &mut r);
        let b = random_real_tensor(3, 2, 4, &mut r);
        let c = t_product_circulant(&a, &b).unwrap();
        assert!(rel(&starm(&a, &b, &t).unwrap(), &c) < 1e-11);

        let a1 = random_real_tensor(2, 3, 1, &mut r);
        let b1 = random_real_tensor(3, 2, 1, &mut r);
        let c1 = t_product_circulant(&a1, &b1).unwrap();
        assert!((c1.slice(0) - a1.slice(0) * b1.slice(0)).norm() < 1e-14);

        let mut id = Tensor3::zeros(3, 3, 4);
        for i in 0..3 {
            id.set(i, i, 0, C64::new(1.0, 0.0));
        }
        assert_eq!(t_product_circulant(&a, &id).unwrap(), a);
    }

    #[test]
    fn real_ring_closure_and_energy_split() {
        let mut r = rng(13);
        for t in [Transform::dft(5), Transform::random_valid(5, 2), Transform::dct(5).scaled(&[2.0, 1.0, 0.5, 1.0, 3.0]).unwrap()] {
            let x = random_real_tensor(3, 2, 5, &mut r);
            let total: f64 = (0..t.structure().ell())
                .map(|j| tube_scale(&t.idempotent_tube(j).unwrap(), &x, &t).unwrap().frob_norm_sqr())
                .sum();
            assert!((total - x.frob_norm_sqr()).abs() <= 1e-10 * x.frob_norm_sqr());
        }
    }
}
