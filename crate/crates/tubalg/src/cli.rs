//! Command-line surface. Every command prints a JSON report on stdout.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tubalg_core::algebra::starm;
use tubalg_core::dmd::{synthetic_operator, tdmd_fit, trajectory, DmdModel, FitRank};
use tubalg_core::optimality::{
    compare_fixed_rank, compare_gamma, counterexample, refute_random_range, tube_probes, Construction,
    SearchOutcome, Witness,
};
use tubalg_core::random::{random_real_tensor, rng};
use tubalg_core::{
    tsvdm, tsvdm2, Domain, RankSpec, Tensor3, Transform, ViolationKind, C64, ZERO_TUBE_TOL,
};

use crate::report::{complex, to_json, transform_id};
use crate::{tbt, transform_io, CliError};

#[derive(Debug, Parser)]
#[command(name = "tubalg", version, about = "Tubal tensor algebra under invertible transforms")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Relative tolerance for transform structure checks (row pairing, Gram entries).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Product A ⋆M B.
    Mul {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        transform: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Factorize, optionally truncate, and report ranks and errors.
    Tsvdm {
        tensor: PathBuf,
        #[arg(long)]
        transform: String,
        #[command(flatten)]
        rank: RankArgs,
        /// Where to write the (truncated) approximation.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Truncate to a given rank and write the approximation.
    Truncate {
        tensor: PathBuf,
        #[arg(long)]
        transform: String,
        #[command(flatten)]
        rank: RankArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Energy-adaptive truncation keeping a `gamma` fraction of the energy.
    Tsvdm2 {
        tensor: PathBuf,
        #[arg(long)]
        transform: String,
        #[arg(long)]
        gamma: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Transform inspection.
    #[command(subcommand)]
    Transform(TransformCommand),
    /// Decide whether truncation is optimal under a transform.
    Certify {
        transform: String,
        /// Run the random competitor search as well.
        #[arg(long)]
        refute: bool,
        /// Probe tensor for the search; tube probes on every group otherwise.
        #[arg(long, requires = "refute")]
        tensor: Option<PathBuf>,
        /// Target tubal length for the probe tensor.
        #[arg(long, value_delimiter = ',', requires = "tensor")]
        length: Option<Vec<usize>>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Directory receiving the witness pair as TBT1 files.
        #[arg(long)]
        witness_dir: Option<PathBuf>,
    },
    /// Compare truncations under Q and D·Q, with D given by group weights.
    Compare {
        tensor: PathBuf,
        #[arg(long)]
        transform: String,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[command(flatten)]
        rank: RankArgs,
    },
    /// Tubal dynamic mode decomposition.
    #[command(subcommand)]
    Dmd(DmdCommand),
    /// Synthetic inputs.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Subcommand)]
pub enum TransformCommand {
    /// Structure and Eckart-Young certificate.
    Check { transform: String },
}

#[derive(Debug, Subcommand)]
pub enum DmdCommand {
    /// Fit a model; the model directory holds z.tbt, t.tbt, transform.tbt and model.json.
    Fit {
        tensor: PathBuf,
        #[arg(long)]
        transform: String,
        /// `trank:R`, `multirank:R,…`, `length:L,…`, `gamma:G`, or a bare t-rank.
        #[arg(long)]
        rank: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Roll a fitted model forward from `x0`.
    Predict {
        model: PathBuf,
        x0: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Gaussian real tensor.
    Tensor {
        #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
        dims: Vec<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Snapshots of a random tubal-linear system of given t-rank.
    Trajectory {
        #[arg(long)]
        transform: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        steps: usize,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the operator.
        #[arg(long)]
        operator: Option<PathBuf>,
    },
    /// A transform file (CSV for `.csv`, TBT1 otherwise).
    Transform {
        #[arg(long, value_enum)]
        kind: TransformKind,
        #[arg(long)]
        n: usize,
        /// Pair Gram entry `re,im` for `--kind pair`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gram: Option<Vec<f64>>,
        /// Pair column energy `S` for `--kind pair`.
        #[arg(long, default_value_t = 1.0)]
        big_s: f64,
        /// Group weights applied after construction.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TransformKind {
    Identity,
    Dft,
    Dct,
    /// Random `D·Q` satisfying the Eckart-Young condition.
    RandomValid,
    /// One conjugate pair with a prescribed (generally invalid) Gram entry.
    Pair,
    /// `(1/√2)[[1, i], [1, −i]]`.
    Pair2,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct RankArgs {
    #[arg(long)]
    pub trank: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub multirank: Option<Vec<usize>>,
    /// Tubal length, one rank per idempotent group.
    #[arg(long, value_delimiter = ',')]
    pub length: Option<Vec<usize>>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

enum Target {
    Spec(RankSpec),
    Gamma(f64),
}

impl RankArgs {
    fn target(&self) -> Option<Target> {
        if let Some(r) = self.trank {
            Some(Target::Spec(RankSpec::TRank(r)))
        } else if let Some(r) = &self.multirank {
            Some(Target::Spec(RankSpec::MultiRank(r.clone())))
        } else if let Some(l) = &self.length {
            Some(Target::Spec(RankSpec::TubalLength(l.clone())))
        } else {
            self.gamma.map(Target::Gamma)
        }
    }
}

/// Caps rayon's pool at `TUBALG_THREADS` when set.
pub fn init_threads() {
    if let Some(n) = std::env::var("TUBALG_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs a parsed command and returns the JSON report.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let tol = cli.tol;
    match &cli.command {
        Command::Mul {
            a,
            b,
            transform,
            output,
        } => {
            let t = transform_io::load(transform, tol)?;
            let c = starm(&tbt::read(a)?, &tbt::read(b)?, &t)?;
            tbt::write(output, &c)?;
            #[derive(Serialize)]
            struct Mul {
                transform: String,
                dims: (usize, usize, usize),
                output: String,
            }
            Ok(to_json(
                "mul",
                &Mul {
                    transform: transform_id(t.id()),
                    dims: c.dims(),
                    output: output.display().to_string(),
                },
            ))
        }
        Command::Tsvdm {
            tensor,
            transform,
            rank,
            output,
        } => factorize("tsvdm", tensor, transform, tol, rank.target(), output.as_deref()),
        Command::Truncate {
            tensor,
            transform,
            rank,
            output,
        } => {
            let target = rank
                .target()
                .ok_or_else(|| CliError::Usage("truncate needs one of --trank, --multirank, --length, --gamma".into()))?;
            factorize("truncate", tensor, transform, tol, Some(target), output.as_deref())
        }
        Command::Tsvdm2 {
            tensor,
            transform,
            gamma,
            output,
        } => factorize("tsvdm2", tensor, transform, tol, Some(Target::Gamma(*gamma)), output.as_deref()),
        Command::Transform(TransformCommand::Check { transform }) => {
            let t = transform_io::load(transform, tol)?;
            Ok(to_json("transform check", &structure_report(&t)))
        }
        Command::Certify {
            transform,
            refute,
            tensor,
            length,
            trials,
            witness_dir,
        } => {
            let t = transform_io::load(transform, tol)?;
            let probe = match tensor {
                Some(path) => {
                    let x = tbt::read(path)?;
                    let lambda = match length {
                        Some(l) => l.clone(),
                        None => default_length(&x, &t),
                    };
                    Some((x, lambda))
                }
                None => None,
            };
            certify(&t, *refute, probe, *trials, cli.seed, witness_dir.as_deref())
        }
        Command::Compare {
            tensor,
            transform,
            weights,
            rank,
        } => {
            let q = transform_io::load(transform, tol)?;
            let dq = q.scaled(weights)?;
            let x = tbt::read(tensor)?;
            #[derive(Serialize)]
            struct Compare {
                q: String,
                dq: String,
                weights: Vec<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                err_q: Option<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                err_dq: Option<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                trunc_diff: Option<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                gamma: Option<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                r_gamma_q: Option<usize>,
                #[serde(skip_serializing_if = "Option::is_none")]
                r_gamma_dq: Option<usize>,
                #[serde(skip_serializing_if = "Option::is_none")]
                holds: Option<bool>,
            }
            let mut out = Compare {
                q: transform_id(q.id()),
                dq: transform_id(dq.id()),
                weights: weights.clone(),
                err_q: None,
                err_dq: None,
                trunc_diff: None,
                gamma: None,
                r_gamma_q: None,
                r_gamma_dq: None,
                holds: None,
            };
            match rank.target() {
                Some(Target::Spec(spec)) => {
                    let c = compare_fixed_rank(&x, &q, &dq, &spec)?;
                    (out.err_q, out.err_dq, out.trunc_diff) = (Some(c.err_q), Some(c.err_dq), Some(c.trunc_diff));
                }
                Some(Target::Gamma(g)) => {
                    let c = compare_gamma(&x, &q, &dq, g)?;
                    out.gamma = Some(g);
                    (out.r_gamma_q, out.r_gamma_dq, out.holds) = (Some(c.r_gamma_q), Some(c.r_gamma_dq), Some(c.holds));
                }
                None => {
                    return Err(CliError::Usage(
                        "compare needs one of --trank, --multirank, --length, --gamma".into(),
                    ))
                }
            }
            Ok(to_json("compare", &out))
        }
        Command::Dmd(DmdCommand::Fit {
            tensor,
            transform,
            rank,
            output,
        }) => {
            let t = transform_io::load(transform, tol)?;
            let fit = parse_fit_rank(rank)?;
            let model = tdmd_fit(&tbt::read(tensor)?, &t, &fit)?;
            save_model(output, &t, &model, rank)
        }
        Command::Dmd(DmdCommand::Predict {
            model,
            x0,
            steps,
            output,
        }) => {
            let (t, m) = load_model(model, tol)?;
            let pred = m.predict(&t, &tbt::read(x0)?, *steps)?;
            tbt::write(output, &pred)?;
            #[derive(Serialize)]
            struct Predict {
                transform: String,
                steps: usize,
                dims: (usize, usize, usize),
                output: String,
            }
            Ok(to_json(
                "dmd predict",
                &Predict {
                    transform: transform_id(t.id()),
                    steps: *steps,
                    dims: pred.dims(),
                    output: output.display().to_string(),
                },
            ))
        }
        Command::Gen(g) => generate(g, cli.seed, tol),
    }
}

/// Half of the full rank on every group, at least one tube.
fn default_length(x: &Tensor3, t: &Transform) -> Vec<usize> {
    vec![(x.m().min(x.p()) / 2).max(1); t.structure().ell()]
}

#[derive(Serialize)]
struct Factorization {
    transform: String,
    dims: (usize, usize, usize),
    t_rank: usize,
    multirank: Vec<usize>,
    tubal_length: Vec<usize>,
    singular_values: Vec<Vec<f64>>,
    ranks: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_gamma: Option<usize>,
    error: f64,
    relative_error: f64,
    retained_energy: f64,
    storage_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
}

fn factorize(
    command: &str,
    tensor: &Path,
    transform: &str,
    tol: Option<f64>,
    target: Option<Target>,
    output: Option<&Path>,
) -> Result<String, CliError> {
    let t = transform_io::load(transform, tol)?;
    let x = tbt::read(tensor)?;
    let f = tsvdm(&x, &t)?;
    let full = f.multirank(ZERO_TUBE_TOL);
    let (ranks, r_gamma, approx) = match target {
        None => (full.clone(), None, f.reconstruct()?),
        Some(Target::Spec(spec)) => {
            let ranks = f.resolve(&spec)?;
            let approx = f.truncate_multirank(&ranks)?;
            (ranks, None, approx)
        }
        Some(Target::Gamma(g)) => {
            let out = tsvdm2(&x, &t, g)?;
            (out.rho, Some(out.r_gamma), out.approx)
        }
    };
    let compact = f.compact(&RankSpec::MultiRank(ranks.clone()))?;
    let error = x.distance(&approx)?;
    let norm = x.frob_norm();
    let s = f.s_hat();
    if let Some(path) = output {
        tbt::write(path, &approx)?;
    }
    let report = Factorization {
        transform: transform_id(t.id()),
        dims: x.dims(),
        t_rank: f.t_rank(ZERO_TUBE_TOL),
        tubal_length: f.tubal_length(ZERO_TUBE_TOL),
        multirank: full,
        singular_values: (0..s.ncols()).map(|k| s.column(k).iter().copied().collect()).collect(),
        retained_energy: f.retained_energy(&ranks),
        storage_ratio: compact.stored_entries() as f64 / x.len().max(1) as f64,
        ranks,
        r_gamma,
        error,
        relative_error: if norm > 0.0 { error / norm } else { 0.0 },
        output: output.map(|p| p.display().to_string()),
    };
    Ok(to_json(command, &report))
}

#[derive(Serialize)]
struct ViolationReport {
    kind: &'static str,
    s: usize,
    t: usize,
    gram: [f64; 2],
}

#[derive(Serialize)]
struct StructureReport {
    transform: String,
    n: usize,
    real_ring: bool,
    valid: bool,
    ell: usize,
    groups: Vec<Vec<usize>>,
    mu: Vec<f64>,
    violation: Option<ViolationReport>,
}

fn structure_report(t: &Transform) -> StructureReport {
    let cert = t.certificate();
    let st = t.structure();
    StructureReport {
        transform: transform_id(t.id()),
        n: t.n(),
        real_ring: t.is_real_ring(),
        valid: cert.valid,
        ell: st.ell(),
        groups: st.groups().to_vec(),
        mu: cert.mu.clone(),
        violation: cert.violation.map(|v| ViolationReport {
            kind: match v.kind {
                ViolationKind::CrossGroup => "cross_group",
                ViolationKind::InGroupNonOrthogonal => "in_group_non_orthogonal",
                ViolationKind::UnequalNorms => "unequal_norms",
                ViolationKind::NotRealRing => "not_real_ring",
            },
            s: v.s,
            t: v.t,
            gram: complex(v.gram),
        }),
    }
}

#[derive(Serialize)]
struct WitnessReport {
    source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    construction: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_term: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trial: Option<u64>,
    target: Vec<usize>,
    err_truncated: f64,
    err_better: f64,
    gap: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    files: Vec<String>,
}

#[derive(Serialize)]
struct CertifyReport {
    #[serde(flatten)]
    structure: StructureReport,
    verdict: &'static str,
    trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessReport>,
}

const CHUNK: u64 = 1000;

/// Splits trials into fixed chunks searched in parallel; the merge keeps
/// the lowest-index witness, so the result does not depend on scheduling.
fn parallel_search(x: &Tensor3, t: &Transform, lambda: &[usize], seed: u64, trials: u64) -> Result<SearchOutcome, CliError> {
    let chunks: Vec<Range<u64>> = (0..trials.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(trials))
        .collect();
    let parts: Vec<SearchOutcome> = chunks
        .into_par_iter()
        .map(|r| refute_random_range(x, t, lambda, seed, r))
        .collect::<Result<_, _>>()?;
    Ok(parts.into_iter().fold(
        SearchOutcome {
            trials: 0,
            best_gap: f64::NEG_INFINITY,
            witness: None,
        },
        SearchOutcome::merge,
    ))
}

fn certify(
    t: &Transform,
    refute: bool,
    probe: Option<(Tensor3, Vec<usize>)>,
    trials: u64,
    seed: u64,
    witness_dir: Option<&Path>,
) -> Result<String, CliError> {
    let structure = structure_report(t);
    let valid = structure.valid;
    let mut report = CertifyReport {
        structure,
        verdict: if valid { "confirmed_valid" } else { "unrefuted" },
        trials: 0,
        max_violation: valid.then_some(0.0),
        witness: None,
    };
    let mut witness = None;
    if t.is_real_ring() {
        if !valid {
            witness = counterexample(t).map(Witness::ClosedForm);
        }
        if witness.is_none() && (refute || !valid) {
            let probes = match probe {
                Some(p) => vec![p],
                None => tube_probes(t, seed),
            };
            let per = (trials / probes.len().max(1) as u64).max(1);
            let mut best = f64::NEG_INFINITY;
            for (x, lambda) in &probes {
                let out = parallel_search(x, t, lambda, seed, per)?;
                report.trials += out.trials;
                best = best.max(out.best_gap);
                if let Some(w) = out.witness {
                    witness = Some(Witness::Search(w));
                    break;
                }
            }
            if valid {
                report.max_violation = Some(best.max(0.0));
            }
        }
    }
    if let Some(w) = witness {
        report.verdict = "refuted_invalid";
        report.max_violation = None;
        let mut files = Vec::new();
        if let Some(dir) = witness_dir {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let (x, better) = w.pair();
            for (name, tensor) in [("x.tbt", x), ("better.tbt", better)] {
                let path = dir.join(name);
                tbt::write(&path, tensor)?;
                files.push(path.display().to_string());
            }
        }
        report.witness = Some(match w {
            Witness::ClosedForm(c) => WitnessReport {
                source: "closed_form",
                construction: Some(match c.construction {
                    Construction::RealPart => "real_part",
                    Construction::ImagPart => "imag_part",
                }),
                group: Some(c.group),
                cross_term: Some(complex(c.cross_term)),
                ratio: Some(c.ratio),
                predicted_ratio: Some(c.predicted_ratio),
                trial: None,
                target: c.target,
                err_truncated: c.err_truncated,
                err_better: c.err_better,
                gap: c.gap,
                files,
            },
            Witness::Search(s) => WitnessReport {
                source: "search",
                construction: None,
                group: None,
                cross_term: None,
                ratio: None,
                predicted_ratio: None,
                trial: Some(s.trial),
                target: s.target,
                err_truncated: s.err_truncated,
                err_better: s.err_better,
                gap: s.gap,
                files,
            },
        });
    }
    Ok(to_json("certify", &report))
}

pub fn parse_fit_rank(s: &str) -> Result<FitRank, CliError> {
    let bad = || CliError::Usage(format!("cannot parse rank {s:?}; use trank:R, multirank:R,…, length:L,… or gamma:G"));
    let list = |v: &str| -> Result<Vec<usize>, CliError> {
        v.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
    };
    let (kind, value) = s.split_once(':').unwrap_or(("trank", s));
    Ok(match kind {
        "trank" => FitRank::Spec(RankSpec::TRank(value.trim().parse().map_err(|_| bad())?)),
        "multirank" => FitRank::Spec(RankSpec::MultiRank(list(value)?)),
        "length" => FitRank::Spec(RankSpec::TubalLength(list(value)?)),
        "gamma" => FitRank::Energy(value.trim().parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    })
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    transform: String,
    rank: String,
    ranks: Vec<usize>,
    width: usize,
    fit_error: f64,
    eigenvalues: Vec<Vec<[f64; 2]>>,
}

fn save_model(dir: &Path, t: &Transform, model: &DmdModel, rank: &str) -> Result<String, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    tbt::write(&dir.join("z.tbt"), model.z_hat())?;
    tbt::write(&dir.join("t.tbt"), model.t_hat())?;
    transform_io::save(&dir.join("transform.tbt"), t)?;
    let meta = ModelMeta {
        transform: transform_id(t.id()),
        rank: rank.to_string(),
        ranks: model.ranks().to_vec(),
        width: model.width(),
        fit_error: model.fit_error(),
        eigenvalues: model
            .eigenvalues()
            .into_iter()
            .map(|v| v.into_iter().map(complex).collect())
            .collect(),
    };
    let json = to_json("dmd fit", &meta);
    let path = dir.join("model.json");
    fs::write(&path, &json).map_err(|e| CliError::io(&path, e))?;
    Ok(json)
}

fn load_model(dir: &Path, tol: Option<f64>) -> Result<(Transform, DmdModel), CliError> {
    let path = dir.join("model.json");
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let meta: ModelMeta = serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.clone(),
        source: crate::FormatError::Csv {
            offset: byte_offset(&text, e.line(), e.column()),
            message: e.to_string(),
        },
    })?;
    let t = transform_io::load(&dir.join("transform.tbt").display().to_string(), tol)?;
    if transform_id(t.id()) != meta.transform {
        return Err(CliError::Usage(format!(
            "model transform {} does not match stored matrix {}",
            meta.transform,
            transform_id(t.id())
        )));
    }
    let domain = Domain::Transform(t.id());
    let z = tbt::read(&dir.join("z.tbt"))?.with_domain(domain);
    let tri = tbt::read(&dir.join("t.tbt"))?.with_domain(domain);
    let model = DmdModel::from_parts(t.id(), z, tri, meta.ranks, parse_fit_rank(&meta.rank)?, meta.fit_error)?;
    Ok((t, model))
}

fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    let before: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (before + column.saturating_sub(1)) as u64
}

fn generate(g: &GenCommand, seed: u64, tol: Option<f64>) -> Result<String, CliError> {
    #[derive(Serialize)]
    struct Generated {
        kind: &'static str,
        dims: (usize, usize, usize),
        #[serde(skip_serializing_if = "Option::is_none")]
        transform: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        valid: Option<bool>,
        output: String,
    }
    let report = match g {
        GenCommand::Tensor { dims, output } => {
            let &[m, p, n] = dims.as_slice() else {
                return Err(CliError::Usage(format!("--dims needs three sizes m,p,n, got {dims:?}")));
            };
            let x = random_real_tensor(m, p, n, &mut rng(seed));
            tbt::write(output, &x)?;
            Generated {
                kind: "tensor",
                dims: x.dims(),
                transform: None,
                valid: None,
                output: output.display().to_string(),
            }
        }
        GenCommand::Trajectory {
            transform,
            m,
            rank,
            steps,
            output,
            operator,
        } => {
            let t = transform_io::load(transform, tol)?;
            let a = synthetic_operator(*m, *rank, &t, seed)?;
            let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
            let x0 = random_real_tensor(*m, 1, t.n(), &mut r);
            let x = trajectory(&a, &x0, *steps, &t)?;
            tbt::write(output, &x)?;
            if let Some(path) = operator {
                tbt::write(path, &a)?;
            }
            Generated {
                kind: "trajectory",
                dims: x.dims(),
                transform: Some(transform_id(t.id())),
                valid: None,
                output: output.display().to_string(),
            }
        }
        GenCommand::Transform {
            kind,
            n,
            gram,
            big_s,
            weights,
            output,
        } => {
            let n = *n;
            if n == 0 {
                return Err(CliError::Usage("--n must be positive".into()));
            }
            let mut t = match kind {
                TransformKind::Identity => Transform::identity(n),
                TransformKind::Dft => Transform::dft(n),
                TransformKind::Dct => Transform::dct(n),
                TransformKind::RandomValid => Transform::random_valid(n, seed),
                TransformKind::Pair => {
                    let g = match gram.as_deref() {
                        Some(&[re, im]) => C64::new(re, im),
                        _ => return Err(CliError::Usage("--kind pair needs --gram re,im".into())),
                    };
                    Transform::with_pair_gram(n, g, *big_s, seed)?
                }
                TransformKind::Pair2 => {
                    if n != 2 {
                        return Err(CliError::Usage("--kind pair2 is the 2 x 2 transform; use --n 2".into()));
                    }
                    let h = std::f64::consts::FRAC_1_SQRT_2;
                    let mat = tubalg_core::CMatrix::from_row_slice(
                        2,
                        2,
                        &[C64::new(h, 0.0), C64::new(0.0, h), C64::new(h, 0.0), C64::new(0.0, -h)],
                    );
                    Transform::new(mat)?
                }
            };
            if let Some(w) = weights {
                t = t.scaled(w)?;
            }
            transform_io::save(output, &t)?;
            Generated {
                kind: "transform",
                dims: (n, n, 1),
                transform: Some(transform_id(t.id())),
                valid: Some(t.is_eckart_young()),
                output: output.display().to_string(),
            }
        }
    };
    Ok(to_json("gen", &report))
}
