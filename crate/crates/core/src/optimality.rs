//! Executable checks of tubal Eckart-Young optimality.
//!
//! For a transform with a conjugate pair `(s, s′)` whose inverse Gram entry
//! `g = [(M Mᴴ)⁻¹]_{s′,s}` is nonzero, a 2 × 2 tensor supported on that pair
//! is built so that the tubal-length truncation picks the wrong diagonal
//! entry. The spatial error of a component with transform value `α` on
//! slice `s` (and `ᾱ` on `s′`) is `|α|² S + 2 Re(α² g)` with
//! `S = g_{s,s} + g_{s′,s′}`; the constructions below are tuned with the
//! cross term `κ = −g`.
//!
//! Anything else (cross-group coupling, user-supplied probes, valid
//! transforms) goes through a seeded random search over competitors of
//! bounded tubal length.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;

use crate::linalg::CMatrix;
use crate::random::{complex_gaussian, gaussian, random_real_tensor, stream_rng, uniform};
use crate::tensor::{Tensor3, C64};
use crate::transform::{Transform, TransformId};
use crate::tsvdm::{tsvdm, RankSpec, Tsvdm};
use crate::{Error, Result};

/// Smallest error reduction (absolute, on Frobenius norms) accepted as a witness.
pub const WITNESS_GAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    /// `Re g ≠ 0`: diagonal `(1, α₂)` with `α₂` purely imaginary.
    RealPart,
    /// `Im g ≠ 0`: diagonal `(a·α, ᾱ)` with `α = (1 − i)/√2`.
    ImagPart,
}

/// A closed-form counterexample on one conjugate pair.
#[derive(Clone, Debug)]
pub struct CounterexampleWitness {
    pub construction: Construction,
    pub group: usize,
    pub s: usize,
    pub s_prime: usize,
    /// `g_{s′,s}`.
    pub gram: C64,
    /// `κ = −g_{s′,s}`, the coefficient the constructions are tuned with.
    pub cross_term: C64,
    pub big_s: f64,
    pub alpha: C64,
    pub a_scale: f64,
    pub target: Vec<usize>,
    pub x: Tensor3,
    pub truncated: Tensor3,
    pub better: Tensor3,
    pub err_truncated: f64,
    pub err_better: f64,
    pub gap: f64,
    /// Squared error ratio between the two diagonal competitors, measured.
    pub ratio: f64,
    /// The same ratio from the closed form.
    pub predicted_ratio: f64,
}

/// A competitor found by random search.
#[derive(Clone, Debug)]
pub struct SearchWitness {
    pub trial: u64,
    pub target: Vec<usize>,
    pub x: Tensor3,
    pub truncated: Tensor3,
    pub better: Tensor3,
    pub err_truncated: f64,
    pub err_better: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub enum Witness {
    ClosedForm(CounterexampleWitness),
    Search(SearchWitness),
}

impl Witness {
    pub fn gap(&self) -> f64 {
        match self {
            Witness::ClosedForm(w) => w.gap,
            Witness::Search(w) => w.gap,
        }
    }

    /// The probe tensor and the strictly better competitor.
    pub fn pair(&self) -> (&Tensor3, &Tensor3) {
        match self {
            Witness::ClosedForm(w) => (&w.x, &w.better),
            Witness::Search(w) => (&w.x, &w.better),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    /// Certificate holds; `max_violation` is the largest error reduction
    /// any sampled competitor achieved (0 when none improved).
    ConfirmedValid { trials: u64, max_violation: f64 },
    RefutedInvalid(Witness),
    /// Certificate fails but neither construction nor search produced a witness.
    Unrefuted { trials: u64 },
}

#[derive(Clone, Debug)]
pub struct EckartYoungReport {
    pub transform: TransformId,
    pub verdict: Verdict,
}

/// Summary of a batch of search trials.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub trials: u64,
    /// Largest `‖X − X_Λ‖ − ‖X − Y‖` over the batch.
    pub best_gap: f64,
    /// First trial whose gap exceeds [`WITNESS_GAP`].
    pub witness: Option<SearchWitness>,
}

impl SearchOutcome {
    /// Combines batches; the witness with the smallest trial index wins.
    pub fn merge(mut self, other: SearchOutcome) -> SearchOutcome {
        self.trials += other.trials;
        self.best_gap = self.best_gap.max(other.best_gap);
        self.witness = match (self.witness, other.witness) {
            (Some(a), Some(b)) => Some(if a.trial <= b.trial { a } else { b }),
            (a, b) => a.or(b),
        };
        self
    }
}

fn pair_gram(t: &Transform, j: usize) -> Result<(usize, usize, C64, f64)> {
    t.require_real_ring()?;
    let st = t.structure();
    if j >= st.ell() {
        return Err(Error::GroupIndex { index: j, ell: st.ell() });
    }
    if st.degree(j) != 2 {
        return Err(Error::NotApplicable("group is not a conjugate pair"));
    }
    let (s, s2) = (st.group(j)[0], st.group(j)[1]);
    let g = t.inverse_gram();
    Ok((s, s2, g[(s2, s)], g[(s, s)].re + g[(s2, s2)].re))
}

fn delta(ell: usize, j: usize) -> Vec<usize> {
    let mut l = vec![0; ell];
    l[j] = 1;
    l
}

/// Spatial tensor from a 2 × 2 diagonal on slice `s`, mirrored onto `s′`.
fn pair_diagonal(t: &Transform, s: usize, s2: usize, d: [C64; 2]) -> Result<Tensor3> {
    let mut h = Tensor3::zeros(2, 2, t.n()).with_domain(t.domain());
    for (i, z) in d.iter().enumerate() {
        h.set(i, i, s, *z);
        h.set(i, i, s2, z.conj());
    }
    t.backward(&h)?.into_real_checked()
}

fn closed_form(t: &Transform, j: usize, construction: Construction) -> Result<CounterexampleWitness> {
    let (s, s2, g, big_s) = pair_gram(t, j)?;
    let kappa = -g;
    let zero = 1e-10 * big_s;
    let i = C64::new(0.0, 1.0);
    let (alpha, a_scale, d1, d2, predicted, prefer_second) = match construction {
        Construction::RealPart => {
            if g.re.abs() <= zero {
                return Err(Error::NotApplicable("Re g vanishes"));
            }
            let b = ((big_s - 2.0 * kappa.re) / (big_s + kappa.re)).sqrt();
            let alpha2 = i * b;
            let predicted = (big_s + 2.0 * kappa.re) / (big_s + kappa.re);
            (alpha2, 1.0, C64::new(1.0, 0.0), alpha2, predicted, kappa.re > 0.0)
        }
        Construction::ImagPart => {
            if g.im.abs() <= zero {
                return Err(Error::NotApplicable("Im g vanishes"));
            }
            let alpha = C64::new(1.0, -1.0) * core::f64::consts::FRAC_1_SQRT_2;
            let a = ((big_s + 2.0 * kappa.im) / (big_s - kappa.im)).sqrt();
            let predicted = a * a * (big_s - 2.0 * kappa.im) / (big_s + 2.0 * kappa.im);
            (alpha, a, alpha * a, alpha.conj(), predicted, kappa.im > 0.0)
        }
    };
    let zero_c = C64::new(0.0, 0.0);
    let x = pair_diagonal(t, s, s2, [d1, d2])?;
    let first = pair_diagonal(t, s, s2, [d1, zero_c])?;
    let second = pair_diagonal(t, s, s2, [zero_c, d2])?;
    let target = delta(t.structure().ell(), j);
    let truncated = tsvdm(&x, t)?.truncate(&RankSpec::TubalLength(target.clone()))?;
    let err_first = x.distance(&first)?;
    let err_second = x.distance(&second)?;
    let ratio = match construction {
        Construction::RealPart => (err_first / err_second).powi(2),
        Construction::ImagPart => (err_second / err_first).powi(2),
    };
    let (better, err_better) = if prefer_second { (second, err_second) } else { (first, err_first) };
    let err_truncated = x.distance(&truncated)?;
    let gap = err_truncated - err_better;
    if !(gap > 0.0) {
        return Err(Error::Degenerate("closed-form competitor does not improve on the truncation"));
    }
    Ok(CounterexampleWitness {
        construction,
        group: j,
        s,
        s_prime: s2,
        gram: g,
        cross_term: kappa,
        big_s,
        alpha,
        a_scale,
        target,
        x,
        truncated,
        better,
        err_truncated,
        err_better,
        gap,
        ratio,
        predicted_ratio: predicted,
    })
}

/// Counterexample for a conjugate pair with `Re g ≠ 0`.
pub fn counterexample_real_gram(t: &Transform, j: usize) -> Result<CounterexampleWitness> {
    closed_form(t, j, Construction::RealPart)
}

/// Counterexample for a conjugate pair with `Im g ≠ 0`.
pub fn counterexample_imag_gram(t: &Transform, j: usize) -> Result<CounterexampleWitness> {
    closed_form(t, j, Construction::ImagPart)
}

/// Tries the real-part construction first, then the imaginary-part one, on
/// every conjugate pair.
pub fn counterexample(t: &Transform) -> Option<CounterexampleWitness> {
    let st = t.structure();
    (0..st.ell()).filter(|&j| st.degree(j) == 2).find_map(|j| {
        counterexample_real_gram(t, j)
            .or_else(|_| counterexample_imag_gram(t, j))
            .ok()
            .filter(|w| w.gap > WITNESS_GAP)
    })
}

/// Precomputed state shared by all trials on one `(x, Λ)` probe.
struct Probe<'a, 't> {
    f: &'a Tsvdm<'t>,
    ranks: Vec<usize>,
    x: &'a Tensor3,
    x_hat: Tensor3,
    truncated: Tensor3,
    err_truncated: f64,
    scale: f64,
}

impl<'a, 't> Probe<'a, 't> {
    fn new(x: &'a Tensor3, f: &'a Tsvdm<'t>, lambda: &[usize]) -> Result<Self> {
        let t = f.transform();
        let ranks = f.resolve(&RankSpec::TubalLength(lambda.to_vec()))?;
        let truncated = f.truncate_multirank(&ranks)?;
        Ok(Self {
            f,
            ranks,
            x,
            x_hat: t.forward(x)?,
            err_truncated: x.distance(&truncated)?,
            truncated,
            scale: f.s_max().max(f64::MIN_POSITIVE),
        })
    }

    /// Transform-domain competitor with rank ≤ λ_j on every group, built on
    /// the representative slice and mirrored onto its conjugate partner.
    fn competitor(&self, r: &mut impl Rng) -> Tensor3 {
        let t = self.f.transform();
        let (m, p, n) = self.f.dims();
        let local = r.random::<f64>() < 0.75;
        let mut y = Tensor3::zeros(m, p, n).with_domain(t.domain());
        for group in t.structure().groups() {
            let k0 = group[0];
            let lam = self.ranks[k0];
            if lam == 0 {
                continue;
            }
            let real = group.len() == 1;
            let (left, right) = if local {
                let mut left = self.f.u_hat().slice(k0).columns(0, lam).into_owned();
                for (c, mut col) in left.column_iter_mut().enumerate() {
                    col *= C64::new(self.f.s_hat()[(c, k0)], 0.0);
                }
                let v = self.f.v_hat().slice(k0).columns(0, lam).into_owned();
                let eps = self.scale * 10f64.powf(uniform(r, -4.0, 0.0));
                let eps2 = 10f64.powf(uniform(r, -4.0, 0.0));
                let e1 = noise(m, lam, real, r);
                let e2 = noise(p, lam, real, r);
                (left + e1 * C64::new(eps, 0.0), v + e2 * C64::new(eps2, 0.0))
            } else {
                let sc = self.scale / (lam as f64).sqrt();
                let e1 = noise(m, lam, real, r);
                let e2 = noise(p, lam, real, r);
                (e1 * C64::new(sc, 0.0), e2 * C64::new(1.0 / (p as f64).sqrt(), 0.0))
            };
            let slice = left * right.adjoint();
            for &k in group {
                let s = if k == k0 { slice.clone() } else { slice.map(|z| z.conj()) };
                y.set_slice(k, &s).expect("slice shape matches");
            }
        }
        y
    }

    fn trial(&self, seed: u64, index: u64) -> Result<(f64, Option<SearchWitness>)> {
        let t = self.f.transform();
        let mut r = stream_rng(seed, index);
        let y_hat = self.competitor(&mut r);
        let diff = self.x_hat.sub(&y_hat)?;
        let err = t.backward(&diff)?.frob_norm();
        let gap = self.err_truncated - err;
        if gap > WITNESS_GAP {
            let better = t.backward(&y_hat)?.into_real_checked()?;
            let err_better = self.x.distance(&better)?;
            return Ok((
                gap,
                Some(SearchWitness {
                    trial: index,
                    target: Vec::new(),
                    x: self.x.clone(),
                    truncated: self.truncated.clone(),
                    better,
                    err_truncated: self.err_truncated,
                    err_better,
                    gap: self.err_truncated - err_better,
                }),
            ));
        }
        Ok((gap, None))
    }
}

fn noise(rows: usize, cols: usize, real: bool, r: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| if real { C64::new(gaussian(r), 0.0) } else { complex_gaussian(r) })
}

/// Runs trials `range` of the search on probe `(x, Λ)`. Trial `i` draws from
/// `stream_rng(seed, i)`, so any split of the range gives the same result.
pub fn refute_random_range(
    x: &Tensor3,
    t: &Transform,
    lambda: &[usize],
    seed: u64,
    range: Range<u64>,
) -> Result<SearchOutcome> {
    let f = tsvdm(x, t)?;
    let probe = Probe::new(x, &f, lambda)?;
    let mut out = SearchOutcome {
        trials: 0,
        best_gap: f64::NEG_INFINITY,
        witness: None,
    };
    for i in range {
        let (gap, w) = probe.trial(seed, i)?;
        out.trials += 1;
        out.best_gap = out.best_gap.max(gap);
        if let Some(mut w) = w {
            w.target = lambda.to_vec();
            out.witness = Some(w);
            break;
        }
    }
    Ok(out)
}

/// Searches `trials` random competitors with tubal length ≤ Λ for one that
/// beats the tubal-length truncation of `x` by more than [`WITNESS_GAP`].
pub fn refute_random(
    x: &Tensor3,
    t: &Transform,
    lambda: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Option<SearchWitness>> {
    Ok(refute_random_range(x, t, lambda, seed, 0..trials)?.witness)
}

/// Search settings for [`certify`].
#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub trials: u64,
    pub seed: u64,
    /// Probe tensor and target tubal length; tube-level probes on every
    /// group are generated when absent.
    pub probe: Option<(Tensor3, Vec<usize>)>,
    /// Run the random search even when a verdict is already available.
    pub search: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            probe: None,
            search: false,
        }
    }
}

/// Tube-level probes `(x, δ_j)`, one per group, for the default search.
pub fn tube_probes(t: &Transform, seed: u64) -> Vec<(Tensor3, Vec<usize>)> {
    let ell = t.structure().ell();
    (0..ell)
        .map(|j| {
            let mut r = stream_rng(seed, u64::MAX - j as u64);
            (random_real_tensor(1, 1, t.n(), &mut r), delta(ell, j))
        })
        .collect()
}

pub fn certify(t: &Transform, opts: &CertifyOptions) -> Result<EckartYoungReport> {
    let report = |verdict| EckartYoungReport {
        transform: t.id(),
        verdict,
    };
    if !t.is_real_ring() {
        return Ok(report(Verdict::Unrefuted { trials: 0 }));
    }
    let valid = t.certificate().valid;
    if !valid {
        if let Some(w) = counterexample(t) {
            return Ok(report(Verdict::RefutedInvalid(Witness::ClosedForm(w))));
        }
    } else if !opts.search {
        return Ok(report(Verdict::ConfirmedValid {
            trials: 0,
            max_violation: 0.0,
        }));
    }
    let probes = match &opts.probe {
        Some(p) => vec![p.clone()],
        None => tube_probes(t, opts.seed),
    };
    let per = (opts.trials / probes.len().max(1) as u64).max(1);
    let mut total = SearchOutcome {
        trials: 0,
        best_gap: f64::NEG_INFINITY,
        witness: None,
    };
    for (x, lambda) in &probes {
        total = total.merge(refute_random_range(x, t, lambda, opts.seed, 0..per)?);
        if let Some(w) = total.witness.take() {
            return Ok(report(Verdict::RefutedInvalid(Witness::Search(w))));
        }
    }
    Ok(report(if valid {
        Verdict::ConfirmedValid {
            trials: total.trials,
            max_violation: total.best_gap.max(0.0),
        }
    } else {
        Verdict::Unrefuted { trials: total.trials }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedRankComparison {
    pub err_q: f64,
    pub err_dq: f64,
    pub trunc_diff: f64,
}

/// Truncates `x` at the same spec under `q` and `dq`.
pub fn compare_fixed_rank(x: &Tensor3, q: &Transform, dq: &Transform, spec: &RankSpec) -> Result<FixedRankComparison> {
    check_same_n(q, dq)?;
    let tq = tsvdm(x, q)?.truncate(spec)?;
    let tdq = tsvdm(x, dq)?.truncate(spec)?;
    Ok(FixedRankComparison {
        err_q: x.distance(&tq)?,
        err_dq: x.distance(&tdq)?,
        trunc_diff: tq.distance(&tdq)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GammaComparison {
    pub r_gamma_q: usize,
    pub r_gamma_dq: usize,
    /// `r_gamma_q ≤ r_gamma_dq`.
    pub holds: bool,
}

/// Energy-adaptive truncation counts `r_γ` under `q` and `dq`.
pub fn compare_gamma(x: &Tensor3, q: &Transform, dq: &Transform, gamma: f64) -> Result<GammaComparison> {
    check_same_n(q, dq)?;
    let (_, rq) = tsvdm(x, q)?.energy_multirank(gamma)?;
    let (_, rdq) = tsvdm(x, dq)?.energy_multirank(gamma)?;
    Ok(GammaComparison {
        r_gamma_q: rq,
        r_gamma_dq: rdq,
        holds: rq <= rdq,
    })
}

fn check_same_n(q: &Transform, dq: &Transform) -> Result<()> {
    if q.n() != dq.n() {
        return Err(Error::Shape(format!("transform sizes {} and {}", q.n(), dq.n())));
    }
    Ok(())
}
