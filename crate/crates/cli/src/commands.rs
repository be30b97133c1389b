//! The five experiments. Each task (one graph) writes into its own directory.

use std::path::Path;

use graphon_turing::continuation::{
    fit_normal_form, reflection_basis, trivial_branch_scan, Branch, BranchCandidate, Continuation, Controls, Event,
    FitOptions, NormalFormFit, Termination,
};
use graphon_turing::dynamics::{SHParams, SwiftHohenberg};
use graphon_turing::graphon::{bipartite_spectrum, graphon_spectrum, BipartiteSpectrum, GraphonModel, GraphonSpectrum, DEFAULT_K};
use graphon_turing::sampler::{deterministic_graph, grid, random_graph, GraphRealization};
use graphon_turing::spectral::{
    align_to_fourier, concentration_report, eig_sym, fourier_correlation, fourier_real_block, match_eigenvalues,
    quad_self_interaction, AlignmentReport, ConcentrationReport, MatchBudget, SpectralData,
};
use graphon_turing::theory::{
    pitchfork, random_prediction, resonance, GraphonPrediction, RandomPrediction, ResonancePrediction, Sign,
};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, KappaRule, MatchingConfig, ModelConfig};
use crate::error::CliError;
use crate::output::{
    create_dir, eigenvalue_rows, profile_rows, write_csv, write_json, BranchRow, ConcentrationRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Bifurcate,
    Resonance,
    Bipartite,
    Concentration,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Spectrum,
        Command::Bifurcate,
        Command::Resonance,
        Command::Bipartite,
        Command::Concentration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Bifurcate => "bifurcate",
            Command::Resonance => "resonance",
            Command::Bipartite => "bipartite",
            Command::Concentration => "concentration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "graph", rename_all = "snake_case")]
pub enum GraphChoice {
    Deterministic,
    Random { seed: u64 },
    /// Seeds `base..base + count`, used by the concentration experiment.
    Ensemble { base: u64, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Task {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(flatten)]
    pub graph: GraphChoice,
}

impl Task {
    /// Directory name of the task, e.g. `N400-seed1`.
    pub fn label(&self) -> String {
        match self.graph {
            GraphChoice::Deterministic => format!("N{}-deterministic", self.n),
            GraphChoice::Random { seed } => format!("N{}-seed{seed}", self.n),
            GraphChoice::Ensemble { .. } => format!("N{}", self.n),
        }
    }

    fn seeds(&self) -> Vec<u64> {
        match self.graph {
            GraphChoice::Deterministic => Vec::new(),
            GraphChoice::Random { seed } => vec![seed],
            GraphChoice::Ensemble { base, count } => (0..count).map(|t| graphon_turing::spectral::trial_seed(base, t)).collect(),
        }
    }
}

pub fn tasks(cmd: Command, cfg: &ExperimentConfig) -> Vec<Task> {
    let mut out = Vec::new();
    for &n in &cfg.sizes {
        if cmd == Command::Concentration {
            out.push(Task {
                n,
                graph: GraphChoice::Ensemble {
                    base: cfg.seeds.base,
                    count: cfg.seeds.count,
                },
            });
            continue;
        }
        if cfg.graphs.deterministic {
            out.push(Task {
                n,
                graph: GraphChoice::Deterministic,
            });
        }
        if cfg.graphs.random {
            out.extend(cfg.seeds.list().into_iter().map(|seed| Task {
                n,
                graph: GraphChoice::Random { seed },
            }));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskStatus {
    #[serde(flatten)]
    pub task: Task,
    pub dir: String,
    pub status: Status,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    rows: Vec<ConcentrationRow>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: Option<Task>,
    seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    controls: Option<Controls>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_options: Option<FitOptions>,
    status: Status,
    diagnostics: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    tasks: Vec<TaskStatus>,
}

#[derive(Default)]
struct Outcome {
    controls: Option<Controls>,
    fit_options: Option<FitOptions>,
    notes: Vec<String>,
    rows: Vec<ConcentrationRow>,
}

#[derive(Debug)]
pub struct Report {
    pub tasks: Vec<TaskStatus>,
}

/// Runs `cmd` and writes its outputs under `out_root/<command>/`.
///
/// A numerical failure in one task is recorded in that task's `metadata.json`;
/// the others still run, and the call then returns [`CliError::Numerical`].
pub fn execute(cmd: Command, cfg: &ExperimentConfig, out_root: &Path, jobs: Option<usize>) -> Result<Report, CliError> {
    cfg.validate()?;
    check_requirements(cmd, cfg)?;
    let dir = out_root.join(cmd.name());
    create_dir(&dir)?;
    let tasks = tasks(cmd, cfg);
    let run = || tasks.par_iter().map(|t| run_task(cmd, cfg, t, &dir)).collect::<Vec<_>>();
    let results = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {j} workers: {e}")))?
            .install(run),
        None => run(),
    };
    let statuses = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    match cmd {
        Command::Spectrum => write_json(&dir.join("prediction.json"), &reference_spectrum(&cfg.graphon)?)?,
        Command::Bipartite => write_json(&dir.join("prediction.json"), &reference_spectrum(&cfg.graphon)?)?,
        Command::Concentration => {
            let rows: Vec<&ConcentrationRow> = statuses.iter().flat_map(|s| &s.rows).collect();
            write_csv(&dir.join("concentration.csv"), &rows)?;
        }
        _ => {}
    }

    let failed: Vec<&TaskStatus> = statuses.iter().filter(|s| s.status == Status::Failed).collect();
    let diagnostics = failed
        .iter()
        .map(|s| format!("{}: {}", s.dir, s.diagnostics.join("; ")))
        .collect();
    let summary = Metadata {
        tool: "graphon-turing",
        version: graphon_turing::VERSION,
        command: cmd.name(),
        config: cfg,
        task: None,
        seeds: cfg.seeds.list(),
        controls: None,
        fit_options: None,
        status: if failed.is_empty() { Status::Ok } else { Status::Failed },
        diagnostics,
        tasks: statuses.clone(),
    };
    write_json(&dir.join("metadata.json"), &summary)?;
    if !failed.is_empty() {
        return Err(CliError::Numerical(format!(
            "{} of {} tasks failed, see {}",
            failed.len(),
            statuses.len(),
            dir.join("metadata.json").display()
        )));
    }
    Ok(Report { tasks: statuses })
}

fn check_requirements(cmd: Command, cfg: &ExperimentConfig) -> Result<(), CliError> {
    if matches!(cmd, Command::Bifurcate | Command::Resonance) && cfg.model.is_none() {
        return Err(CliError::Config(format!("{} needs a [model] section", cmd.name())));
    }
    if cmd == Command::Bipartite && !matches!(cfg.graphon, GraphonModel::Bipartite { .. }) {
        return Err(CliError::Config("bipartite needs a bipartite graphon".into()));
    }
    if let Some(m) = &cfg.matching {
        ring_budget(&cfg.graphon, m).map_err(|e| CliError::Config(format!("matching: {e}")))?;
    }
    Ok(())
}

fn run_task(cmd: Command, cfg: &ExperimentConfig, task: &Task, dir: &Path) -> Result<TaskStatus, CliError> {
    let label = task.label();
    let tdir = dir.join(&label);
    create_dir(&tdir)?;
    let result = match cmd {
        Command::Spectrum => spectrum_task(cfg, task, &tdir),
        Command::Bifurcate | Command::Resonance => branch_task(cmd, cfg, task, &tdir),
        Command::Bipartite => bipartite_task(cfg, task, &tdir),
        Command::Concentration => concentration_task(cfg, task, &tdir),
    };
    let (outcome, status, diagnostics) = match result {
        Ok(o) => {
            let notes = o.notes.clone();
            (o, Status::Ok, notes)
        }
        Err(CliError::Numerical(msg)) => (Outcome::default(), Status::Failed, vec![msg]),
        Err(e) => return Err(e),
    };
    let meta = Metadata {
        tool: "graphon-turing",
        version: graphon_turing::VERSION,
        command: cmd.name(),
        config: cfg,
        task: Some(*task),
        seeds: task.seeds(),
        controls: outcome.controls,
        fit_options: outcome.fit_options,
        status,
        diagnostics: diagnostics.clone(),
        tasks: Vec::new(),
    };
    write_json(&tdir.join("metadata.json"), &meta)?;
    Ok(TaskStatus {
        task: *task,
        dir: label,
        status,
        diagnostics,
        rows: outcome.rows,
    })
}

fn realize(model: &GraphonModel, task: &Task) -> Result<GraphRealization, CliError> {
    Ok(match task.graph {
        GraphChoice::Deterministic => deterministic_graph(model, task.n)?,
        GraphChoice::Random { seed } => random_graph(model, task.n, seed)?,
        GraphChoice::Ensemble { .. } => unreachable!("ensembles are not realized as one graph"),
    })
}

fn eigenvalue_list(spec: &SpectralData) -> Vec<f64> {
    spec.eigenvalues.iter().copied().collect()
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Reference {
    Ring { spectrum: GraphonSpectrum },
    Bipartite { spectrum: BipartiteSpectrum },
}

fn reference_spectrum(model: &GraphonModel) -> Result<Reference, CliError> {
    Ok(match model {
        GraphonModel::Bipartite { p, alpha } => Reference::Bipartite {
            spectrum: bipartite_spectrum(*p, *alpha)?,
        },
        _ => Reference::Ring {
            spectrum: graphon_spectrum(model, DEFAULT_K)?,
        },
    })
}

fn ring_budget(model: &GraphonModel, m: &MatchingConfig) -> graphon_turing::Result<(GraphonSpectrum, MatchBudget)> {
    let gs = graphon_spectrum(model, DEFAULT_K.max(2 * m.k_star))?;
    let entry = gs
        .entries
        .iter()
        .find(|e| e.k == m.k_star)
        .ok_or_else(|| graphon_turing::Error::InvalidInput(format!("mode {} not in the graphon spectrum", m.k_star)))?;
    let budget = MatchBudget::new(entry.lambda, m.delta, gs.isolation_radius(entry.lambda), m.gamma, entry.multiplicity)?;
    Ok((gs, budget))
}

#[derive(Serialize)]
struct AlignmentOut<'a> {
    #[serde(flatten)]
    report: &'a AlignmentReport,
    abs_coefficients: Vec<f64>,
}

fn align(spec: &SpectralData, budget: &MatchBudget, k_star: usize) -> graphon_turing::Result<AlignmentReport> {
    let n = spec.n();
    let matched = match_eigenvalues(spec, budget, n);
    if !matched.is_empty() && matched.len() != budget.m {
        return Err(graphon_turing::Error::InvalidInput(format!(
            "matched {} of {} eigenvalues",
            matched.len(),
            budget.m
        )));
    }
    align_to_fourier(spec, &matched, k_star, budget, &fourier_real_block(n, k_star))
}

fn write_alignment(path: &Path, al: &AlignmentReport) -> Result<(), CliError> {
    let abs_coefficients = al.coefficients.iter().map(|(re, im)| re.hypot(*im)).collect();
    write_json(
        path,
        &AlignmentOut {
            report: al,
            abs_coefficients,
        },
    )
}

fn spectrum_task(cfg: &ExperimentConfig, task: &Task, dir: &Path) -> Result<Outcome, CliError> {
    let g = realize(&cfg.graphon, task)?;
    let spec = eig_sym(&g.laplacian)?;
    write_csv(&dir.join("eigenvalues.csv"), &eigenvalue_rows(&eigenvalue_list(&spec)))?;
    let mut out = Outcome::default();
    if let Some(m) = &cfg.matching {
        let (_, budget) = ring_budget(&cfg.graphon, m)?;
        match align(&spec, &budget, m.k_star) {
            Ok(al) => write_alignment(&dir.join("alignment.json"), &al)?,
            Err(e) => out.notes.push(format!("no alignment: {e}")),
        }
    }
    Ok(out)
}

/// Index of the critical eigenvalue, `κ`, and the eigenvalues the rule considered.
fn select_kappa(eigs: &[f64], rule: KappaRule) -> Result<(usize, f64, Vec<f64>), CliError> {
    let n = eigs.len();
    let nearest = |target: f64| {
        (0..n)
            .min_by(|&a, &b| (eigs[a] - target).abs().total_cmp(&(eigs[b] - target).abs()))
            .unwrap_or(0)
    };
    match rule {
        KappaRule::Index(i) if (1..=n).contains(&i) => Ok((i - 1, eigs[i - 1], vec![eigs[i - 1]])),
        KappaRule::Index(i) => Err(CliError::Config(format!("kappa index {i} outside 1..={n}"))),
        KappaRule::Value(v) => {
            let i = nearest(v);
            Ok((i, v, vec![eigs[i]]))
        }
        KappaRule::LargestNear { center, radius } => {
            let nf = n as f64;
            let near: Vec<usize> = (0..n).filter(|&i| (eigs[i] - center * nf).abs() <= radius * nf).collect();
            match near.first() {
                Some(&i) => Ok((i, eigs[i], near.iter().map(|&j| eigs[j]).collect())),
                None => Err(CliError::Numerical(format!(
                    "no eigenvalue within {} of {}",
                    radius * nf,
                    center * nf
                ))),
            }
        }
    }
}

/// Critical vector and, on circulant graphs, the reflection-symmetric subspace.
fn critical_direction(
    spec: &SpectralData,
    crit: usize,
    circulant: bool,
    notes: &mut Vec<String>,
) -> (Option<nalgebra::DMatrix<f64>>, DVector<f64>) {
    let fallback = spec.vector(crit);
    if !circulant {
        return (None, fallback);
    }
    let lam = spec.eigenvalues[crit];
    let tie = 1e-8 * lam.abs().max(1.0);
    let block: Vec<usize> = (0..spec.n()).filter(|&i| (spec.eigenvalues[i] - lam).abs() <= tie).collect();
    let p = reflection_basis(spec.n());
    let m = p.transpose() * spec.block(&block);
    let svd = m.svd(true, false);
    let best = (0..svd.singular_values.len())
        .max_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap_or(0);
    if svd.singular_values[best] < 0.9 {
        notes.push("critical eigenspace has no reflection-symmetric vector; continuing in the full space".into());
        return (None, fallback);
    }
    let u = svd.u.as_ref().expect("left singular vectors requested").column(best).into_owned();
    let mut v = (&p * u).normalize();
    if v.iter().find(|x| x.abs() > 1e-6).is_some_and(|x| *x < 0.0) {
        v.neg_mut();
    }
    (Some(p), v)
}

#[derive(Serialize)]
struct ProfileSummary {
    step: usize,
    epsilon: f64,
    amplitude: f64,
    supnorm: f64,
    stable: bool,
    /// Single Fourier mode with the largest correlation.
    dominant_mode: usize,
    dominant_correlation: f64,
}

fn profile_summary(branch: &Branch, step: usize) -> ProfileSummary {
    let pt = &branch.points[step];
    let n = pt.u.len();
    let (dominant_mode, dominant_correlation) = (1..=n / 2)
        .map(|k| (k, fourier_correlation(&pt.u, &[k])))
        .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    ProfileSummary {
        step,
        epsilon: pt.epsilon,
        amplitude: pt.amplitude,
        supnorm: pt.supnorm,
        stable: pt.stable,
        dominant_mode,
        dominant_correlation,
    }
}

/// Point of the branch closest to `target` in `ε`; ties go to the smaller amplitude.
fn profile_step(branch: &Branch, target: f64) -> usize {
    (0..branch.points.len())
        .filter(|&i| branch.points[i].amplitude != 0.0)
        .min_by(|&a, &b| {
            let (pa, pb) = (&branch.points[a], &branch.points[b]);
            (pa.epsilon - target)
                .abs()
                .total_cmp(&(pb.epsilon - target).abs())
                .then(pa.amplitude.abs().total_cmp(&pb.amplitude.abs()))
        })
        .unwrap_or(0)
}

#[derive(Serialize)]
struct EventsOut<'a> {
    kappa: f64,
    critical_index: usize,
    branch_point_epsilon: f64,
    trivial_branch_candidates: Vec<BranchCandidate>,
    /// `vᵀ(v∘v)` for the critical vector.
    quadratic_self_interaction: f64,
    events: &'a [Event],
    folds: Vec<f64>,
    terminations: &'a [Termination],
    fit: Option<NormalFormFit>,
    profile: ProfileSummary,
}

#[derive(Serialize)]
struct CurvePoint {
    epsilon: f64,
    amplitude_plus: Option<f64>,
    amplitude_minus: Option<f64>,
}

#[derive(Serialize)]
struct BifurcationPrediction {
    kappa: f64,
    /// Whether the matched top eigenvalue is the chosen `κ`, so that `random` describes this branch.
    applies: bool,
    random: Option<RandomPrediction>,
    curve: Vec<CurvePoint>,
    graphon: Option<GraphonPrediction>,
    /// Correlation of the reported profile with the mode `k*`.
    profile_mode_correlation: Option<f64>,
}

#[derive(Serialize)]
struct ResonanceOut {
    kappa: f64,
    /// Eigenvalues inside the selection window.
    cluster: Vec<f64>,
    predictions: Vec<ResonancePrediction>,
    /// Correlation of the reported profile with the modes `k1` and `2k1`.
    profile_two_mode_correlation: f64,
    /// Smallest two-mode correlation over the fit window.
    min_two_mode_correlation: f64,
}

const CURVE_SAMPLES: usize = 201;

fn prediction_curve(pred: &RandomPrediction, branch: &Branch, window: f64) -> Vec<CurvePoint> {
    let eps: Vec<f64> = branch
        .points
        .iter()
        .filter(|p| p.amplitude.abs() <= window)
        .map(|p| p.epsilon)
        .chain([pred.epsilon_sn])
        .collect();
    let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Vec::new();
    }
    (0..CURVE_SAMPLES)
        .map(|i| {
            let epsilon = lo + (hi - lo) * i as f64 / (CURVE_SAMPLES - 1) as f64;
            let roots = pred.z1(epsilon);
            CurvePoint {
                epsilon,
                amplitude_plus: roots.map(|r| pred.amplitude(r.0)),
                amplitude_minus: roots.map(|r| pred.amplitude(r.1)),
            }
        })
        .collect()
}

fn branch_task(cmd: Command, cfg: &ExperimentConfig, task: &Task, dir: &Path) -> Result<Outcome, CliError> {
    let model: &ModelConfig = cfg.model.as_ref().expect("checked before running");
    let n = task.n;
    let g = realize(&cfg.graphon, task)?;
    let spec = eig_sym(&g.laplacian)?;
    let eigs = eigenvalue_list(&spec);
    let (crit, kappa, cluster) = select_kappa(&eigs, model.kappa)?;
    let controls = cfg.continuation.controls(n);
    let eps_bp = (eigs[crit] - kappa).powi(2);
    if !(controls.epsilon_min..=controls.epsilon_max).contains(&eps_bp) {
        return Err(CliError::Numerical(format!(
            "branch point ε = {eps_bp} outside [{}, {}]",
            controls.epsilon_min, controls.epsilon_max
        )));
    }
    let candidates = trivial_branch_scan(&eigs, kappa, controls.epsilon_min, controls.epsilon_max, 1e-12);
    let mut out = Outcome {
        controls: Some(controls),
        ..Outcome::default()
    };
    let circulant = task.graph == GraphChoice::Deterministic && cfg.graphon.is_ring();
    let (basis, v) = critical_direction(&spec, crit, circulant, &mut out.notes);
    let sys = SwiftHohenberg::new(&g.laplacian, kappa)?;
    let params = SHParams::new(kappa, eps_bp, model.r, model.b)?;
    let cont = Continuation::new(&sys, params, basis, &v, controls)?;
    let branch = cont.bifurcating_branch(eps_bp)?;
    if branch.points.iter().all(|p| p.amplitude == 0.0) {
        return Err(CliError::Numerical("continuation found no nontrivial points".into()));
    }
    let fit_opts = cfg.continuation.fit_options(n, sys.linear().amax());
    out.fit_options = Some(fit_opts);
    let fit = match fit_normal_form(&branch, eps_bp, &fit_opts) {
        Ok(f) => Some(f),
        Err(e) => {
            out.notes.push(format!("no normal-form fit: {e}"));
            None
        }
    };

    let rows: Vec<BranchRow> = branch
        .points
        .iter()
        .enumerate()
        .map(|(step, p)| BranchRow {
            step,
            epsilon: p.epsilon,
            amplitude: p.amplitude,
            supnorm: p.supnorm,
            stable: p.stable,
        })
        .collect();
    write_csv(&dir.join("branch.csv"), &rows)?;
    let step = profile_step(&branch, model.profile_epsilon);
    let profile = &branch.points[step].u;
    write_csv(&dir.join("profile.csv"), &profile_rows(profile.as_slice()))?;

    match cmd {
        Command::Resonance => {
            let rc = cfg.resonance.unwrap_or(crate::config::ResonanceConfig {
                k1: 1,
                reference_epsilon: 1e-3,
            });
            let modes = [rc.k1, 2 * rc.k1];
            let mut predictions = Vec::new();
            for sign in [Sign::Plus, Sign::Minus] {
                match resonance(rc.k1, model.r, rc.reference_epsilon, 0.0, sign) {
                    Ok(p) => predictions.push(p),
                    Err(e) => out.notes.push(format!("no resonance prediction: {e}")),
                }
            }
            let min_two_mode_correlation = branch
                .points
                .iter()
                .filter(|p| p.amplitude != 0.0 && p.amplitude.abs() <= fit_opts.window)
                .map(|p| fourier_correlation(&p.u, &modes))
                .fold(1.0, f64::min);
            write_json(
                &dir.join("prediction.json"),
                &ResonanceOut {
                    kappa,
                    cluster,
                    predictions,
                    profile_two_mode_correlation: fourier_correlation(profile, &modes),
                    min_two_mode_correlation,
                },
            )?;
        }
        _ => {
            let mut pred = BifurcationPrediction {
                kappa,
                applies: false,
                random: None,
                curve: Vec::new(),
                graphon: None,
                profile_mode_correlation: None,
            };
            if let Some(m) = &cfg.matching {
                let (gs, budget) = ring_budget(&cfg.graphon, m)?;
                pred.profile_mode_correlation = Some(fourier_correlation(profile, &[m.k_star]));
                match pitchfork(&gs, m.k_star, model.r, model.b) {
                    Ok(p) => pred.graphon = Some(p),
                    Err(e) => out.notes.push(format!("no graphon prediction: {e}")),
                }
                match align(&spec, &budget, m.k_star) {
                    Ok(al) => {
                        write_alignment(&dir.join("alignment.json"), &al)?;
                        let target = n as f64 * gs.lambda(2 * m.k_star).unwrap_or(gs.accumulation_point);
                        match random_prediction(&spec, &al, target, m.l3_radius * n as f64, model.r, model.b) {
                            Ok(rp) => {
                                pred.applies = rp.kappa == kappa;
                                pred.curve = prediction_curve(&rp, &branch, fit_opts.window);
                                pred.random = Some(rp);
                            }
                            Err(e) => out.notes.push(format!("no random-graph prediction: {e}")),
                        }
                    }
                    Err(e) => out.notes.push(format!("no alignment: {e}")),
                }
            }
            write_json(&dir.join("prediction.json"), &pred)?;
        }
    }

    let events = EventsOut {
        kappa,
        critical_index: crit + 1,
        branch_point_epsilon: eps_bp,
        trivial_branch_candidates: candidates,
        quadratic_self_interaction: quad_self_interaction(&v)?,
        events: &branch.events,
        folds: branch.folds().map(Event::epsilon).collect(),
        terminations: &branch.terminations,
        fit,
        profile: profile_summary(&branch, step),
    };
    write_json(&dir.join("events.json"), &events)?;
    Ok(out)
}

#[derive(Serialize)]
struct Cluster {
    value: f64,
    isolated: bool,
    radius: f64,
    count: usize,
}

#[derive(Serialize)]
struct Group {
    lower: f64,
    upper: f64,
    mean: f64,
    std: f64,
}

#[derive(Serialize)]
struct BipartiteOut {
    graphon: BipartiteSpectrum,
    /// The two middle values coincide (`α = 1/2`).
    merged_middle: bool,
    clusters: Vec<Cluster>,
    /// Normalized eigenvalues in no cluster window.
    unclustered: usize,
    eigenvector_index: usize,
    eigenvalue: f64,
    groups: [Group; 2],
    /// Largest within-group standard deviation over the gap between the group means.
    std_over_gap: f64,
}

/// Windows for the isolated and the accumulating eigenvalues of the graphon.
const ISOLATED_RADIUS: f64 = 0.02;
const CLUSTER_RADIUS: f64 = 0.05;

fn bipartite_task(cfg: &ExperimentConfig, task: &Task, dir: &Path) -> Result<Outcome, CliError> {
    let GraphonModel::Bipartite { p, alpha } = cfg.graphon else {
        return Err(CliError::Config("bipartite needs a bipartite graphon".into()));
    };
    let n = task.n;
    let g = realize(&cfg.graphon, task)?;
    let spec = eig_sym(&g.laplacian)?;
    let eigs = eigenvalue_list(&spec);
    write_csv(&dir.join("eigenvalues.csv"), &eigenvalue_rows(&eigs))?;
    let bs = bipartite_spectrum(p, alpha)?;
    let nf = n as f64;
    let norm: Vec<f64> = eigs.iter().map(|l| l / nf).collect();
    let radius = |iso: bool| if iso { ISOLATED_RADIUS } else { CLUSTER_RADIUS };
    let clusters: Vec<Cluster> = bs
        .eigenvalues
        .iter()
        .map(|e| Cluster {
            value: e.value,
            isolated: e.isolated,
            radius: radius(e.isolated),
            count: norm.iter().filter(|l| (*l - e.value).abs() <= radius(e.isolated)).count(),
        })
        .collect();
    let unclustered = norm
        .iter()
        .filter(|l| bs.eigenvalues.iter().all(|e| (*l - e.value).abs() > radius(e.isolated)))
        .count();
    let idx = (0..n)
        .min_by(|&a, &b| (norm[a] + p).abs().total_cmp(&(norm[b] + p).abs()))
        .unwrap_or(0);
    let v = spec.vector(idx);
    write_csv(&dir.join("profile.csv"), &profile_rows(v.as_slice()))?;
    let x = grid(n);
    let group = |lower: f64, upper: f64| {
        let vals: Vec<f64> = (0..n).filter(|&i| x[i] > lower && x[i] <= upper).map(|i| v[i]).collect();
        let k = vals.len().max(1) as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let std = (vals.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k).sqrt();
        Group { lower, upper, mean, std }
    };
    let groups = [group(0.0, alpha), group(alpha, 1.0)];
    let gap = (groups[0].mean - groups[1].mean).abs();
    let std_over_gap = groups[0].std.max(groups[1].std) / gap;
    let [_, mid1, mid2, _] = bs.eigenvalues;
    write_json(
        &dir.join("prediction.json"),
        &BipartiteOut {
            merged_middle: mid1.value == mid2.value,
            graphon: bs,
            clusters,
            unclustered,
            eigenvector_index: idx + 1,
            eigenvalue: eigs[idx],
            groups,
            std_over_gap,
        },
    )?;
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct ConcentrationOut<'a> {
    #[serde(flatten)]
    report: &'a ConcentrationReport,
    max_ratio: f64,
    median_ratio: f64,
}

fn concentration_task(cfg: &ExperimentConfig, task: &Task, dir: &Path) -> Result<Outcome, CliError> {
    let GraphChoice::Ensemble { base, count } = task.graph else {
        unreachable!("concentration tasks are ensembles")
    };
    let report = concentration_report(&cfg.graphon, task.n, cfg.concentration.gamma, count, base)?;
    let mut sorted = report.ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() / 2;
    let median_ratio = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[m - 1] + sorted[m])
    } else {
        sorted[m]
    };
    write_json(
        &dir.join("concentration.json"),
        &ConcentrationOut {
            report: &report,
            max_ratio: sorted.last().copied().unwrap_or(f64::NAN),
            median_ratio,
        },
    )?;
    let rows = report
        .seeds
        .iter()
        .zip(report.norms.iter().zip(&report.ratios))
        .map(|(&seed, (&norm, &ratio))| ConcentrationRow {
            n: task.n,
            seed,
            norm,
            ratio,
        })
        .collect();
    Ok(Outcome {
        rows,
        ..Outcome::default()
    })
}
