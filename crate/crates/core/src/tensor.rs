//! Dense order-3 tensors and the mode-wise primitives.
//!
//! Entries are stored column-major: entry `(i, j, k)` of an `m × p × n`
//! tensor lives at offset `i + m·(j + p·k)`, so each frontal slice is a
//! contiguous column-major `m × p` block. Unfoldings use the same ordering
//! for the remaining two indices:
//!
//! | mode | rows | column index |
//! |------|------|--------------|
//! | 1    | `i`  | `j + p·k`    |
//! | 2    | `j`  | `i + m·k`    |
//! | 3    | `k`  | `i + m·j`    |

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex;
use num_traits::Zero;

use crate::linalg::CMatrix;
use crate::transform::TransformId;
use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Which representation a tensor's values are in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Spatial,
    Transform(TransformId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    fn try_from(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            other => Err(Error::InvalidMode(other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<C64>,
    domain: Domain,
}

impl Tensor3 {
    pub fn zeros(m: usize, p: usize, n: usize) -> Self {
        Self {
            dims: [m, p, n],
            data: vec![C64::zero(); m * p * n],
            domain: Domain::Spatial,
        }
    }

    /// Spatial tensor from real values in storage order.
    pub fn from_real(m: usize, p: usize, n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != m * p * n {
            return Err(Error::Shape(format!(
                "{} values for a {m}×{p}×{n} tensor",
                values.len()
            )));
        }
        Ok(Self {
            dims: [m, p, n],
            data: values.iter().map(|&v| C64::new(v, 0.0)).collect(),
            domain: Domain::Spatial,
        })
    }

    pub fn from_complex(m: usize, p: usize, n: usize, values: Vec<C64>, domain: Domain) -> Result<Self> {
        if values.len() != m * p * n {
            return Err(Error::Shape(format!(
                "{} values for a {m}×{p}×{n} tensor",
                values.len()
            )));
        }
        Ok(Self {
            dims: [m, p, n],
            data: values,
            domain,
        })
    }

    pub fn from_fn(m: usize, p: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(m * p * n);
        for k in 0..n {
            for j in 0..p {
                for i in 0..m {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            dims: [m, p, n],
            data,
            domain: Domain::Spatial,
        }
    }

    /// Stacks equally sized matrices as frontal slices.
    pub fn from_slices(slices: &[CMatrix], domain: Domain) -> Result<Self> {
        let (m, p) = slices.first().map_or((0, 0), |s| s.shape());
        let mut data = Vec::with_capacity(m * p * slices.len());
        for s in slices {
            if s.shape() != (m, p) {
                return Err(Error::Shape(format!(
                    "frontal slice {:?} differs from {:?}",
                    s.shape(),
                    (m, p)
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Self {
            dims: [m, p, slices.len()],
            data,
            domain,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dims[0], self.dims[1], self.dims[2])
    }

    pub fn m(&self) -> usize {
        self.dims[0]
    }

    pub fn p(&self) -> usize {
        self.dims[1]
    }

    pub fn n(&self) -> usize {
        self.dims[2]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// Values in storage order.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: C64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    pub fn slice(&self, k: usize) -> CMatrix {
        let (m, p, _) = self.dims();
        CMatrix::from_column_slice(m, p, &self.data[k * m * p..(k + 1) * m * p])
    }

    pub fn slice_data(&self, k: usize) -> &[C64] {
        let mp = self.dims[0] * self.dims[1];
        &self.data[k * mp..(k + 1) * mp]
    }

    pub fn set_slice(&mut self, k: usize, mat: &CMatrix) -> Result<()> {
        let (m, p, _) = self.dims();
        if mat.shape() != (m, p) {
            return Err(Error::Shape(format!(
                "slice {:?} into a tensor with {m}×{p} slices",
                mat.shape()
            )));
        }
        self.data[k * m * p..(k + 1) * m * p].copy_from_slice(mat.as_slice());
        Ok(())
    }

    pub fn tube(&self, i: usize, j: usize) -> Vec<C64> {
        (0..self.n()).map(|k| self.get(i, j, k)).collect()
    }

    /// Lateral slices `cols` as a new `m × |cols| × n` tensor.
    pub fn lateral(&self, cols: Range<usize>) -> Result<Self> {
        if cols.end > self.p() || cols.start > cols.end {
            return Err(Error::Shape(format!(
                "lateral range {cols:?} of a tensor with {} columns",
                self.p()
            )));
        }
        let (m, _, n) = self.dims();
        let width = cols.len();
        let mut out = Self::zeros(m, width, n).with_domain(self.domain);
        for k in 0..n {
            for (jj, j) in cols.clone().enumerate() {
                for i in 0..m {
                    out.set(i, jj, k, self.get(i, j, k));
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    /// Drops imaginary parts.
    pub fn into_real(mut self) -> Self {
        for z in &mut self.data {
            z.im = 0.0;
        }
        self
    }

    pub fn conj(&self) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|z| z.conj()).collect(),
            domain: self.domain,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|z| z * factor).collect(),
            domain: self.domain,
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        if self.domain != other.domain {
            return Err(Error::Domain(format!("{:?} vs {:?}", self.domain, other.domain)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            domain: self.domain,
        }
    }

    /// `⟨a, b⟩_F = Σ a_{ijk} · conj(b_{ijk})`.
    pub fn frob_inner(&self, other: &Self) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    pub fn frob_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sqr().sqrt()
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.frob_norm())
    }

    pub fn unfold(&self, mode: Mode) -> CMatrix {
        let (m, p, n) = self.dims();
        match mode {
            Mode::One => CMatrix::from_column_slice(m, p * n, &self.data),
            Mode::Two => CMatrix::from_fn(p, m * n, |j, c| self.get(c % m, j, c / m)),
            Mode::Three => CMatrix::from_fn(n, m * p, |k, c| self.get(c % m, c / m, k)),
        }
    }

    /// Inverse of [`Tensor3::unfold`]; the result is tagged spatial.
    pub fn fold(mat: &CMatrix, mode: Mode, dims: (usize, usize, usize)) -> Result<Self> {
        let (m, p, n) = dims;
        let d = [m, p, n];
        let k = mode.index();
        let rest: usize = d.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &v)| v).product();
        if mat.shape() != (d[k], rest) {
            return Err(Error::Shape(format!(
                "cannot fold a {:?} matrix along mode {} into {m}×{p}×{n}",
                mat.shape(),
                k + 1
            )));
        }
        Ok(match mode {
            Mode::One => Self::from_complex(m, p, n, mat.as_slice().to_vec(), Domain::Spatial)?,
            Mode::Two => Self::from_fn(m, p, n, |i, j, kk| mat[(j, i + m * kk)]),
            Mode::Three => Self::from_fn(m, p, n, |i, j, kk| mat[(kk, i + m * j)]),
        })
    }

    /// Mode-k product `self ×_k mat`; the domain tag is kept.
    pub fn ttm(&self, mat: &CMatrix, mode: Mode) -> Result<Self> {
        let d = self.dims;
        let k = mode.index();
        if mat.ncols() != d[k] {
            return Err(Error::Shape(format!(
                "mode-{} product needs {} matrix columns, got {}",
                k + 1,
                d[k],
                mat.ncols()
            )));
        }
        if mode == Mode::Three {
            return Ok(self.mode3(mat));
        }
        let mut nd = d;
        nd[k] = mat.nrows();
        let prod = mat * self.unfold(mode);
        Ok(Self::fold(&prod, mode, (nd[0], nd[1], nd[2]))?.with_domain(self.domain))
    }

    /// Applies `mat` to every tube: `out[:,:,l] = Σ_k mat[l,k] · self[:,:,k]`.
    pub(crate) fn mode3(&self, mat: &CMatrix) -> Self {
        let (m, p, n) = self.dims();
        let q = mat.nrows();
        debug_assert_eq!(mat.ncols(), n);
        let mp = m * p;
        let mut data = vec![C64::zero(); mp * q];
        for l in 0..q {
            let out = &mut data[l * mp..(l + 1) * mp];
            for k in 0..n {
                let c = mat[(l, k)];
                if c.is_zero() {
                    continue;
                }
                for (o, x) in out.iter_mut().zip(&self.data[k * mp..(k + 1) * mp]) {
                    *o += c * x;
                }
            }
        }
        Self {
            dims: [m, p, q],
            data,
            domain: self.domain,
        }
    }

    /// Facewise product: slice `k` of the result is `a[:,:,k] · b[:,:,k]`.
    pub fn facewise(&self, other: &Self) -> Result<Self> {
        let (m, p, n) = self.dims();
        let (p2, q, n2) = other.dims();
        if p != p2 || n != n2 {
            return Err(Error::Shape(format!(
                "facewise {m}×{p}×{n} · {p2}×{q}×{n2}"
            )));
        }
        if self.domain != other.domain {
            return Err(Error::Domain(format!("{:?} vs {:?}", self.domain, other.domain)));
        }
        let mut out = Self::zeros(m, q, n).with_domain(self.domain);
        for k in 0..n {
            let a = self.slice_data(k);
            let b = other.slice_data(k);
            let o = &mut out.data[k * m * q..(k + 1) * m * q];
            for j in 0..q {
                for l in 0..p {
                    let blj = b[l + p * j];
                    if blj.is_zero() {
                        continue;
                    }
                    let col = &a[l * m..(l + 1) * m];
                    for (oi, ai) in o[j * m..(j + 1) * m].iter_mut().zip(col) {
                        *oi += ai * blj;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Slice-wise conjugate transpose, `p × m × n`, keeping the domain tag.
    pub fn facewise_adjoint(&self) -> Self {
        let (m, p, n) = self.dims();
        let mut out = Self::zeros(p, m, n).with_domain(self.domain);
        for k in 0..n {
            for j in 0..p {
                for i in 0..m {
                    out.set(j, i, k, self.get(i, j, k).conj());
                }
            }
        }
        out
    }
}

/// A `1 × 1 × n` fiber treated as a ring element.
#[derive(Clone, Debug, PartialEq)]
pub struct Tube {
    values: Vec<C64>,
    domain: Domain,
}

impl Tube {
    pub fn new(values: Vec<C64>, domain: Domain) -> Self {
        Self { values, domain }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            values: values.iter().map(|&v| C64::new(v, 0.0)).collect(),
            domain: Domain::Spatial,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![C64::zero(); n], Domain::Spatial)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn to_tensor(&self) -> Tensor3 {
        Tensor3 {
            dims: [1, 1, self.values.len()],
            data: self.values.clone(),
            domain: self.domain,
        }
    }

    pub fn from_tensor(t: &Tensor3) -> Result<Self> {
        if t.m() != 1 || t.p() != 1 {
            return Err(Error::Shape(format!("{:?} is not a tube", t.dims())));
        }
        Ok(Self::new(t.data.clone(), t.domain))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}
