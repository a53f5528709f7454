//! Invertible transforms, their idempotent group structure and the
//! Eckart-Young certificate.
//!
//! A transform defines a real tubal ring when every row of `M` is either
//! real or the entrywise conjugate of another row. Each real row is its own
//! idempotent group (degree 1); each conjugate pair forms one group of
//! degree 2. Groups are ordered by their smallest row index and user
//! matrices are never permuted.
//!
//! Tubal truncations are Eckart-Young optimal exactly when the rows of `M`
//! are pairwise orthogonal and rows of the same group share a norm `μ_j`,
//! i.e. `M = D·Q` with `Q` unitary and `D = diag(μ_{τ(s)})`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Zero;

use crate::linalg::{condition_number, inverse, CMatrix};
use crate::random::{gaussian, permutation, random_orthogonal, rng, uniform};
use crate::tensor::{Domain, Tensor3, Tube, C64};
use crate::{Error, Result, TRANSFORM_TOL};

/// Largest accepted condition number `σ_max / σ_min` of `M`.
pub const MAX_CONDITION: f64 = 1e12;

/// Fingerprint of a transform matrix, used to tag transform-domain data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransformId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Real,
    PairedWith(usize),
    /// Neither real nor paired; only possible when the ring is not real.
    Unpaired,
}

/// The index allocation maps between idempotent groups and transform slices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdempotentStructure {
    groups: Vec<Vec<usize>>,
    tau: Vec<usize>,
}

impl IdempotentStructure {
    fn from_rows(rows: &[RowKind]) -> Self {
        let n = rows.len();
        let mut tau = vec![usize::MAX; n];
        let mut groups = Vec::new();
        for s in 0..n {
            if tau[s] != usize::MAX {
                continue;
            }
            let j = groups.len();
            tau[s] = j;
            match rows[s] {
                RowKind::PairedWith(t) => {
                    tau[t] = j;
                    groups.push(vec![s, t]);
                }
                _ => groups.push(vec![s]),
            }
        }
        Self { groups, tau }
    }

    /// Number of principal idempotents `ℓ`.
    pub fn ell(&self) -> usize {
        self.groups.len()
    }

    pub fn n(&self) -> usize {
        self.tau.len()
    }

    /// Slice indices `ς(j)`, ascending.
    pub fn group(&self, j: usize) -> &[usize] {
        &self.groups[j]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn degree(&self, j: usize) -> usize {
        self.groups[j].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Group `τ(k)` of transform slice `k`.
    pub fn tau(&self, k: usize) -> usize {
        self.tau[k]
    }

    pub fn tau_map(&self) -> &[usize] {
        &self.tau
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// Rows of different groups are not orthogonal.
    CrossGroup,
    /// The two rows of a conjugate pair are not orthogonal.
    InGroupNonOrthogonal,
    /// Rows of one group have different norms.
    UnequalNorms,
    /// Row `s` is neither real nor conjugate-paired.
    NotRealRing,
}

/// First failing check. `gram` is `M_s M_tᴴ` for orthogonality failures and
/// `‖M_t‖² − ‖M_s‖²` for unequal norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub s: usize,
    pub t: usize,
    pub gram: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EckartYoungCertificate {
    pub valid: bool,
    /// Group scales `μ_j`, present iff valid.
    pub mu: Vec<f64>,
    pub violation: Option<Violation>,
}

impl EckartYoungCertificate {
    fn invalid(v: Violation) -> Self {
        Self {
            valid: false,
            mu: Vec::new(),
            violation: Some(v),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Transform {
    matrix: CMatrix,
    inverse: CMatrix,
    rows: Vec<RowKind>,
    real_ring: bool,
    tol: f64,
    structure: IdempotentStructure,
    certificate: EckartYoungCertificate,
    id: TransformId,
}

impl PartialEq for Transform {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.matrix == other.matrix
    }
}

impl Transform {
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::build(mat, TRANSFORM_TOL)
    }

    /// Validates `mat`, computes its inverse, detects the row pairing and
    /// certifies (or refutes) the Eckart-Young condition.
    ///
    /// A matrix whose rows do not pair up is still accepted; the result
    /// reports `is_real_ring() == false` and real-only operations refuse it.
    pub fn build(mat: CMatrix, tol: f64) -> Result<Self> {
        let n = mat.nrows();
        if n == 0 || mat.ncols() != n {
            return Err(Error::Shape(format!("transform must be square, got {:?}", mat.shape())));
        }
        let cond = condition_number(&mat);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::NotInvertible(cond));
        }
        let inv = inverse(&mat).ok_or(Error::NotInvertible(f64::INFINITY))?;
        let residual = (&mat * &inv - CMatrix::identity(n, n)).norm();
        if residual > 1e-10 * n as f64 {
            return Err(Error::NotInvertible(cond));
        }

        let rows = detect_pairing(&mat, tol);
        let real_ring = rows.iter().all(|r| *r != RowKind::Unpaired);
        let structure = IdempotentStructure::from_rows(&rows);
        let id = fingerprint(&mat);
        let mut t = Self {
            matrix: mat,
            inverse: inv,
            rows,
            real_ring,
            tol,
            structure,
            certificate: EckartYoungCertificate {
                valid: false,
                mu: Vec::new(),
                violation: None,
            },
            id,
        };
        t.certificate = t.check_eckart_young(tol);
        Ok(t)
    }

    pub fn identity(n: usize) -> Self {
        Self::new(CMatrix::identity(n, n)).expect("identity is a valid transform")
    }

    /// Unnormalized DFT, `F[k, j] = exp(−2πi·jk/n)`. Rows `k` and `n − k`
    /// are exact conjugates; rows `0` and `n/2` are exactly real.
    pub fn dft(n: usize) -> Self {
        let mut f = CMatrix::zeros(n, n);
        for k in 0..=n / 2 {
            for j in 0..n {
                f[(k, j)] = unit_root((j * k) % n, n);
            }
        }
        for k in n / 2 + 1..n {
            for j in 0..n {
                f[(k, j)] = f[(n - k, j)].conj();
            }
        }
        Self::new(f).expect("DFT is a valid transform")
    }

    /// Orthonormal DCT-II.
    pub fn dct(n: usize) -> Self {
        let nf = n as f64;
        let f = CMatrix::from_fn(n, n, |k, j| {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            C64::new(scale * (PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos(), 0.0)
        });
        Self::new(f).expect("DCT is a valid transform")
    }

    /// A random `M = D·Q`: `Q` unitary with a random number of conjugate row
    /// pairs at random positions, `D` with group scales drawn from `[0.5, 2)`.
    pub fn random_valid(n: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let o = random_orthogonal(n, &mut r);
        let pairs = if n >= 2 { (uniform(&mut r, 0.0, 1.0) * (n / 2 + 1) as f64) as usize } else { 0 };
        let pairs = pairs.min(n / 2);
        let slots = permutation(n, &mut r);
        let mut q = CMatrix::zeros(n, n);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let mut mu_rows = vec![0.0; n];
        for pi in 0..pairs {
            let (a, b) = (2 * pi, 2 * pi + 1);
            let (s, t) = (slots[a], slots[b]);
            let mu = uniform(&mut r, 0.5, 2.0);
            for c in 0..n {
                let z = C64::new(o[(a, c)] * h, o[(b, c)] * h);
                q[(s, c)] = z;
                q[(t, c)] = z.conj();
            }
            mu_rows[s] = mu;
            mu_rows[t] = mu;
        }
        for a in 2 * pairs..n {
            let s = slots[a];
            mu_rows[s] = uniform(&mut r, 0.5, 2.0);
            for c in 0..n {
                q[(s, c)] = C64::new(o[(a, c)], 0.0);
            }
        }
        for (s, mu) in mu_rows.iter().enumerate() {
            q.row_mut(s).scale_mut(*mu);
        }
        // keep the generator's stream position independent of n for reproducibility checks
        let _ = gaussian(&mut r);
        Self::new(q).expect("D·Q with positive D and unitary Q is invertible")
    }

    /// A real-ring transform with one conjugate pair whose inverse Gram
    /// block is `[[S/2, ḡ], [g, S/2]]` for `s < s′`, i.e. `(M⁻¹_{:,s′})ᴴ M⁻¹_{:,s} = g`
    /// and `‖M⁻¹_{:,s}‖² = S/2`. All other columns of `M⁻¹` are real,
    /// orthonormal and orthogonal to the pair. Needs `n ≥ 2`, `|g| < S/2`.
    pub fn with_pair_gram(n: usize, gram: C64, big_s: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Shape(format!("a conjugate pair needs n ≥ 2, got {n}")));
        }
        if !(big_s > 0.0 && gram.norm() < big_s / 2.0) {
            return Err(Error::Degenerate("pair Gram entry must satisfy |g| < S/2"));
        }
        let mut r = rng(seed);
        let o = random_orthogonal(n, &mut r);
        let x2 = (big_s / 2.0 + gram.re) / 2.0;
        let y2 = (big_s / 2.0 - gram.re) / 2.0;
        let xy = gram.im / 2.0;
        let (xa, ya, yb) = (x2.sqrt(), xy / x2.sqrt(), (y2 - xy * xy / x2).max(0.0).sqrt());
        let mut slots = permutation(n, &mut r);
        if slots[0] > slots[1] {
            slots.swap(0, 1);
        }
        let mut inv = CMatrix::zeros(n, n);
        for i in 0..n {
            let c = C64::new(xa * o[(i, 0)], ya * o[(i, 0)] + yb * o[(i, 1)]);
            inv[(i, slots[0])] = c;
            inv[(i, slots[1])] = c.conj();
            for a in 2..n {
                inv[(i, slots[a])] = C64::new(o[(i, a)], 0.0);
            }
        }
        let mat = inverse(&inv).ok_or(Error::NotInvertible(f64::INFINITY))?;
        Self::new(mat)
    }

    /// Multiplies the rows of group `j` by `weights[j]`.
    pub fn scaled(&self, weights: &[f64]) -> Result<Self> {
        let ell = self.structure.ell();
        if weights.len() != ell {
            return Err(Error::WeightCount {
                expected: ell,
                got: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::NonPositiveWeight(w));
        }
        let mut mat = self.matrix.clone();
        for s in 0..self.n() {
            mat.row_mut(s).scale_mut(weights[self.structure.tau(s)]);
        }
        Self::build(mat, self.tol)
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.inverse
    }

    pub fn id(&self) -> TransformId {
        self.id
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn rows(&self) -> &[RowKind] {
        &self.rows
    }

    pub fn is_real_ring(&self) -> bool {
        self.real_ring
    }

    pub fn require_real_ring(&self) -> Result<()> {
        match self.rows.iter().position(|r| *r == RowKind::Unpaired) {
            Some(row) => Err(Error::NotRealRing { row }),
            None => Ok(()),
        }
    }

    pub fn structure(&self) -> &IdempotentStructure {
        &self.structure
    }

    pub fn certificate(&self) -> &EckartYoungCertificate {
        &self.certificate
    }

    pub fn is_eckart_young(&self) -> bool {
        self.certificate.valid
    }

    pub fn domain(&self) -> Domain {
        Domain::Transform(self.id)
    }

    /// Orthogonality and norm checks on the rows of `M`, each relative to the
    /// row norms involved. Reports the first failing Gram entry.
    pub fn check_eckart_young(&self, tol: f64) -> EckartYoungCertificate {
        if let Some(row) = self.rows.iter().position(|r| *r == RowKind::Unpaired) {
            return EckartYoungCertificate::invalid(Violation {
                kind: ViolationKind::NotRealRing,
                s: row,
                t: row,
                gram: C64::zero(),
            });
        }
        let n = self.n();
        let gram = &self.matrix * self.matrix.adjoint();
        let norms: Vec<f64> = (0..n).map(|s| gram[(s, s)].re.max(0.0).sqrt()).collect();
        for s in 0..n {
            for t in s + 1..n {
                let g = gram[(s, t)];
                if g.norm() > tol * norms[s] * norms[t] {
                    let kind = if self.structure.tau(s) == self.structure.tau(t) {
                        ViolationKind::InGroupNonOrthogonal
                    } else {
                        ViolationKind::CrossGroup
                    };
                    return EckartYoungCertificate::invalid(Violation { kind, s, t, gram: g });
                }
            }
        }
        let mut mu = Vec::with_capacity(self.structure.ell());
        for group in self.structure.groups() {
            let s = group[0];
            for &t in &group[1..] {
                if (norms[s] - norms[t]).abs() > tol * norms[s].max(norms[t]) {
                    return EckartYoungCertificate::invalid(Violation {
                        kind: ViolationKind::UnequalNorms,
                        s,
                        t,
                        gram: gram[(t, t)] - gram[(s, s)],
                    });
                }
            }
            mu.push(group.iter().map(|&k| norms[k]).sum::<f64>() / group.len() as f64);
        }
        EckartYoungCertificate {
            valid: true,
            mu,
            violation: None,
        }
    }

    /// `G = (M Mᴴ)⁻¹ = M⁻ᴴ M⁻¹`, the Gram matrix of the columns of `M⁻¹`.
    pub fn inverse_gram(&self) -> CMatrix {
        self.inverse.adjoint() * &self.inverse
    }

    /// Principal idempotent `e_j`: the sum of the columns of `M⁻¹` indexed by `ς(j)`.
    pub fn idempotent_tube(&self, j: usize) -> Result<Tube> {
        let ell = self.structure.ell();
        if j >= ell {
            return Err(Error::GroupIndex { index: j, ell });
        }
        let n = self.n();
        let mut values = vec![C64::zero(); n];
        for &k in self.structure.group(j) {
            for (i, v) in values.iter_mut().enumerate() {
                *v += self.inverse[(i, k)];
            }
        }
        if self.real_ring {
            let t = Tube::new(values, Domain::Spatial).to_tensor().into_real_checked()?;
            return Tube::from_tensor(&t);
        }
        Ok(Tube::new(values, Domain::Spatial))
    }

    /// `x ×₃ M`.
    pub fn forward(&self, x: &Tensor3) -> Result<Tensor3> {
        if x.n() != self.n() {
            return Err(Error::Shape(format!("tube length {} vs transform size {}", x.n(), self.n())));
        }
        if x.domain() != Domain::Spatial {
            return Err(Error::Domain(format!("forward transform of a {:?} tensor", x.domain())));
        }
        Ok(x.mode3(&self.matrix).with_domain(self.domain()))
    }

    /// `x̂ ×₃ M⁻¹`, tagged spatial; complex in general.
    pub fn backward(&self, xhat: &Tensor3) -> Result<Tensor3> {
        if xhat.n() != self.n() {
            return Err(Error::Shape(format!("tube length {} vs transform size {}", xhat.n(), self.n())));
        }
        if xhat.domain() != self.domain() {
            return Err(Error::Domain(format!(
                "expected data in the domain of {:?}, got {:?}",
                self.id,
                xhat.domain()
            )));
        }
        Ok(xhat.mode3(&self.inverse).with_domain(Domain::Spatial))
    }
}

fn unit_root(a: usize, n: usize) -> C64 {
    // exp(-2πi a/n) with exact values on the axes
    if (4 * a).is_multiple_of(n) {
        return match (4 * a / n) % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, -1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, 1.0),
        };
    }
    let theta = -2.0 * PI * a as f64 / n as f64;
    C64::new(theta.cos(), theta.sin())
}

fn detect_pairing(mat: &CMatrix, tol: f64) -> Vec<RowKind> {
    let n = mat.nrows();
    let row_norm = |s: usize| mat.row(s).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut rows = vec![None; n];
    for s in 0..n {
        if rows[s].is_some() {
            continue;
        }
        let norm = row_norm(s);
        let imag = mat.row(s).iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        if imag <= tol * norm {
            rows[s] = Some(RowKind::Real);
            continue;
        }
        let partner = (s + 1..n).find(|&t| {
            rows[t].is_none() && {
                let d = mat
                    .row(s)
                    .iter()
                    .zip(mat.row(t).iter())
                    .map(|(a, b)| (a.conj() - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                d <= tol * norm
            }
        });
        match partner {
            Some(t) => {
                rows[s] = Some(RowKind::PairedWith(t));
                rows[t] = Some(RowKind::PairedWith(s));
            }
            None => rows[s] = Some(RowKind::Unpaired),
        }
    }
    rows.into_iter().map(|r| r.expect("every row classified")).collect()
}

fn fingerprint(mat: &CMatrix) -> TransformId {
    // FNV-1a over the shape and the bit patterns of all entries
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(mat.nrows() as u64);
    for z in mat.iter() {
        eat(z.re.to_bits());
        eat(z.im.to_bits());
    }
    TransformId(h)
}

impl Tensor3 {
    /// Drops imaginary parts that are at most [`crate::REALNESS_TOL`] relative
    /// to the largest magnitude; fails on larger residuals.
    pub fn into_real_checked(self) -> Result<Self> {
        let scale = self.max_abs();
        let imag = self.max_imag();
        if imag > crate::REALNESS_TOL * scale {
            return Err(Error::ImaginaryResidual(imag / scale));
        }
        Ok(self.into_real())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::tube_mul;
    use crate::random::random_real_tensor;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_structure() {
        let t = Transform::identity(4);
        assert!(t.is_real_ring());
        assert_eq!(t.structure().ell(), 4);
        assert_eq!(t.structure().degrees(), vec![1, 1, 1, 1]);
        let cert = t.certificate();
        assert!(cert.valid);
        assert_eq!(cert.mu, vec![1.0; 4]);
    }

    #[test]
    fn dft4_pairs_rows_one_and_three() {
        let t = Transform::dft(4);
        // direct conjugate comparison of the DFT rows
        let m = t.matrix();
        for j in 0..4 {
            assert_eq!(m[(3, j)], m[(1, j)].conj());
            assert_eq!(m[(0, j)].im, 0.0);
            assert_eq!(m[(2, j)].im, 0.0);
        }
        assert_eq!(t.rows(), &[RowKind::Real, RowKind::PairedWith(3), RowKind::Real, RowKind::PairedWith(1)]);
        let s = t.structure();
        assert_eq!(s.ell(), 3);
        assert_eq!(s.degrees(), vec![1, 2, 1]);
        assert_eq!(s.tau_map(), &[0, 1, 2, 1]);
        let cert = t.certificate();
        assert!(cert.valid);
        for mu in &cert.mu {
            assert!((mu - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn conjugate_pair_example_has_single_group() {
        let m1 = c(0.3, 1.1);
        let m2 = c(-0.7, 0.4);
        let mat = CMatrix::from_row_slice(2, 2, &[m1, m2, m1.conj(), m2.conj()]);
        let t = Transform::new(mat).unwrap();
        assert_eq!(t.structure().ell(), 1);
        assert_eq!(t.structure().group(0), &[0, 1]);
        assert_eq!(t.structure().degree(0), 2);
    }

    #[test]
    fn groups_partition_slices() {
        for seed in 0..20 {
            let t = Transform::random_valid(2 + (seed as usize % 7), seed);
            let s = t.structure();
            let mut seen = vec![0usize; t.n()];
            for (j, g) in s.groups().iter().enumerate() {
                for &k in g {
                    seen[k] += 1;
                    assert_eq!(s.tau(k), j);
                }
                match g.len() {
                    1 => assert_eq!(t.rows()[g[0]], RowKind::Real),
                    2 => assert_eq!(t.rows()[g[0]], RowKind::PairedWith(g[1])),
                    _ => panic!("group of degree {}", g.len()),
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
            assert_eq!(s.degrees().iter().sum::<usize>(), t.n());
        }
    }

    #[test]
    fn rejects_singular_and_flags_complex_rows() {
        let sing = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert!(matches!(Transform::new(sing), Err(Error::NotInvertible(_))));
        let ill = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-14, 0.0)]);
        assert!(matches!(Transform::new(ill), Err(Error::NotInvertible(_))));
        let complex = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, -2.0)]);
        let t = Transform::new(complex).unwrap();
        assert!(!t.is_real_ring());
        assert!(matches!(t.require_real_ring(), Err(Error::NotRealRing { row: 0 })));
        assert_eq!(t.certificate().violation.unwrap().kind, ViolationKind::NotRealRing);
    }

    #[test]
    fn scaled_dct_certificate() {
        let t = Transform::dct(4);
        let same = t.scaled(&[1.0; 4]).unwrap();
        assert_eq!(same.matrix(), t.matrix());
        let s = t.scaled(&[2.0, 1.0, 1.0, 1.0]).unwrap();
        let cert = s.certificate();
        assert!(cert.valid);
        for (mu, want) in cert.mu.iter().zip([2.0, 1.0, 1.0, 1.0]) {
            assert!((mu - want).abs() < 1e-14);
        }
        assert!(matches!(t.scaled(&[1.0, 0.0, 1.0, 1.0]), Err(Error::NonPositiveWeight(_))));
        assert!(matches!(t.scaled(&[1.0, -1.0, 1.0, 1.0]), Err(Error::NonPositiveWeight(_))));
        assert!(matches!(t.scaled(&[1.0; 3]), Err(Error::WeightCount { expected: 4, got: 3 })));
    }

    #[test]
    fn upper_triangular_transform_is_refuted() {
        let mat = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let t = Transform::new(mat).unwrap();
        let cert = t.certificate();
        assert!(!cert.valid);
        let v = cert.violation.unwrap();
        // both rows real: separate groups, M_0 M_1ᴴ = 1
        assert_eq!(v.kind, ViolationKind::CrossGroup);
        assert_eq!((v.s, v.t), (0, 1));
        assert_eq!(v.gram, c(1.0, 0.0));
    }

    #[test]
    fn perturbed_orthogonal_pair() {
        let mat = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, -1.0)]);
        let t = Transform::new(mat.clone()).unwrap();
        assert!(t.certificate().valid);
        assert_eq!(t.structure().ell(), 1);

        // perturbing both entries of the pair keeps it conjugate but breaks orthogonality
        let eps = 1e-3;
        let mut p = mat.clone();
        p[(0, 0)] += c(eps, 0.0);
        p[(1, 0)] += c(eps, 0.0);
        let t = Transform::new(p).unwrap();
        let v = t.certificate().violation.unwrap();
        assert_eq!(v.kind, ViolationKind::InGroupNonOrthogonal);
        // (1+ε)² + i·conj(−i) = (1+ε)² − 1
        assert!((v.gram - c((1.0 + eps) * (1.0 + eps) - 1.0, 0.0)).norm() < 1e-15);

        // a single perturbed entry breaks the pairing itself
        let mut q = mat;
        q[(0, 0)] += c(eps, 0.0);
        let t = Transform::new(q).unwrap();
        assert!(!t.is_real_ring());
        assert!(!t.certificate().valid);
    }

    #[test]
    fn random_valid_passes_checks_deterministically() {
        let a = Transform::random_valid(6, 7);
        let b = Transform::random_valid(6, 7);
        assert_eq!(a.matrix(), b.matrix());
        assert!(a.is_real_ring());
        assert!(a.certificate().valid);
        let gram = a.matrix() * a.matrix().adjoint();
        for s in 0..6 {
            for t in 0..6 {
                let want = if s == t {
                    let mu = a.certificate().mu[a.structure().tau(s)];
                    mu * mu
                } else {
                    0.0
                };
                assert!((gram[(s, t)] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn idempotent_tubes() {
        let t = Transform::identity(3);
        for j in 0..3 {
            let e = t.idempotent_tube(j).unwrap();
            for k in 0..3 {
                assert_eq!(e.values()[k], c(if j == k { 1.0 } else { 0.0 }, 0.0));
            }
        }
        assert!(matches!(t.idempotent_tube(3), Err(Error::GroupIndex { index: 3, ell: 3 })));

        let t = Transform::dft(2);
        let e1 = t.idempotent_tube(0).unwrap();
        let e2 = t.idempotent_tube(1).unwrap();
        // columns of F₂⁻¹ = ½[[1,1],[1,−1]]
        assert!((e1.values()[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((e2.values()[1] - c(-0.5, 0.0)).norm() < 1e-15);
        let sum: Vec<C64> = e1.values().iter().zip(e2.values()).map(|(a, b)| a + b).collect();
        assert!((sum[0] - c(1.0, 0.0)).norm() < 1e-15 && sum[1].norm() < 1e-15);

        let m1 = c(0.3, 1.1);
        let m2 = c(-0.7, 0.4);
        let pair = Transform::new(CMatrix::from_row_slice(2, 2, &[m1, m2, m1.conj(), m2.conj()])).unwrap();
        let e = pair.idempotent_tube(0).unwrap();
        let b = Tube::from_real(&[0.4, -1.3]);
        assert!(tube_mul(&e, &b, &pair).unwrap().distance(&b) < 1e-13);
    }

    #[test]
    fn idempotents_are_orthogonal_and_complete() {
        for t in [Transform::dft(5), Transform::random_valid(6, 3), Transform::dct(3)] {
            let ell = t.structure().ell();
            let es: Vec<Tube> = (0..ell).map(|j| t.idempotent_tube(j).unwrap()).collect();
            let n = t.n();
            for j in 0..ell {
                let ee = tube_mul(&es[j], &es[j], &t).unwrap();
                assert!(ee.distance(&es[j]) < 1e-12);
                for h in 0..ell {
                    if h != j {
                        assert!(tube_mul(&es[j], &es[h], &t).unwrap().norm() < 1e-12);
                    }
                }
                let image = t.forward(&es[j].to_tensor()).unwrap();
                for k in 0..n {
                    let want = if t.structure().tau(k) == j { 1.0 } else { 0.0 };
                    assert!((image.data()[k] - c(want, 0.0)).norm() < 1e-12);
                }
            }
            let mut r = crate::random::rng(1);
            let a = Tube::from_tensor(&random_real_tensor(1, 1, n, &mut r)).unwrap();
            let mut acc = vec![C64::zero(); n];
            for e in &es {
                for (s, v) in acc.iter_mut().zip(tube_mul(e, &a, &t).unwrap().values()) {
                    *s += v;
                }
            }
            let acc = Tube::new(acc, Domain::Spatial);
            assert!(acc.distance(&a) <= 1e-11 * a.norm());
        }
    }

    #[test]
    fn crafted_pair_gram() {
        for (n, g) in [(2, c(0.2, 0.0)), (3, c(0.0, 0.3)), (5, c(-0.1, 0.25))] {
            let t = Transform::with_pair_gram(n, g, 1.0, 4).unwrap();
            assert!(t.is_real_ring());
            assert!(!t.certificate().valid);
            let pair = t.structure().groups().iter().find(|grp| grp.len() == 2).unwrap().clone();
            assert_eq!(t.structure().ell(), n - 1);
            let gram = t.inverse_gram();
            let (s, s2) = (pair[0], pair[1]);
            assert!((gram[(s2, s)] - g).norm() < 1e-12);
            assert!((gram[(s, s)].re + gram[(s2, s2)].re - 1.0).abs() < 1e-12);
            for a in 0..n {
                for b in 0..n {
                    let same = t.structure().tau(a) == t.structure().tau(b);
                    if !same {
                        assert!(gram[(a, b)].norm() < 1e-12);
                    }
                }
            }
        }
        assert!(Transform::with_pair_gram(3, c(0.6, 0.0), 1.0, 0).is_err());
        assert!(Transform::with_pair_gram(1, c(0.1, 0.0), 1.0, 0).is_err());
    }

    #[test]
    fn forward_backward_round_trip_and_domain_tags() {
        let t = Transform::random_valid(5, 11);
        let mut r = crate::random::rng(2);
        let x = random_real_tensor(3, 2, 5, &mut r);
        let xh = t.forward(&x).unwrap();
        assert_eq!(xh.domain(), t.domain());
        assert!(t.forward(&xh).is_err());
        let back = t.backward(&xh).unwrap();
        assert!(back.distance(&x).unwrap() < 1e-13 * x.frob_norm());
        assert!(Transform::dct(5).backward(&xh).is_err());
    }
}
