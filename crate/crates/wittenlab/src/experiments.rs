//! Named experiments driven by an [`ExperimentConfig`], producing staged [`Artifacts`].

use std::collections::BTreeMap;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complexes::{CellComplex, InnerProductComplex};
use crate::config::ExperimentConfig;
use crate::derham::{betti_numbers, harmonic_euler, kernel_package, lattice_volume, spectral_package, KernelSplit, LatticeVolume};
use crate::error::{Error, Result};
use crate::io::{num, Artifacts};
use crate::linalg::dense;
use crate::morse::{compute_morse_data, find_critical_points, geometric_complex, MorseData, MorseFunction};
use crate::oscillator::{brute_force_model_spectrum, cluster_cardinalities, enumerate_symbols, fd_oscillator_richardson, multiplicity, CutoffProfile};
use crate::torsion::{
    a_alternating, a_function, a_inverse_degree, build_comparison, check_anomaly_identity, log_torsion, random_isomorphism, torsion_formula_rhs, volume_of, ChainMap,
    ComparisonDiagnostics,
};
use crate::witten::{detect_gap, sample_function, track_branches, virtually_small_package, BranchFamily, ClusterLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectra,
    Branches,
    Morse,
    TorsionCheck,
    OscillatorTables,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectra => "spectra",
            Command::Branches => "branches",
            Command::Morse => "morse",
            Command::TorsionCheck => "torsion-check",
            Command::OscillatorTables => "oscillator-tables",
        }
    }

    pub const ALL: [Command; 5] = [Command::Spectra, Command::Branches, Command::Morse, Command::TorsionCheck, Command::OscillatorTables];
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::InvalidArgument(format!("unknown command {s:?}")))
    }
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Artifacts> {
    crate::linalg::init();
    let mut art = Artifacts::new(&cfg.hash());
    match cmd {
        Command::Spectra => run_spectra(cfg, &mut art),
        Command::Branches => run_branches(cfg, &mut art),
        Command::Morse => run_morse(cfg, &mut art),
        Command::TorsionCheck => run_torsion(cfg, &mut art),
        Command::OscillatorTables => run_oscillator_tables(cfg, &mut art),
    }?;
    Ok(art)
}

struct Model {
    cx: CellComplex,
    ipc: InnerProductComplex,
}

fn model(cfg: &ExperimentConfig) -> Result<Model> {
    let cx = cfg.manifold.build().map_err(|e| e.context("complexes"))?;
    let ipc = InnerProductComplex::from_cell_complex(&cx).map_err(|e| e.context("complexes"))?;
    Ok(Model { cx, ipc })
}

#[derive(Serialize)]
struct SpectraSummary {
    cell_counts: Vec<usize>,
    mesh_size: f64,
    euler: i64,
    harmonic_euler: i64,
    betti: Vec<usize>,
    kernel: Vec<KernelSplit>,
    lattice_volumes: Vec<LatticeVolume>,
}

fn run_spectra(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let Model { cx, ipc } = model(cfg)?;
    let eig = cfg.solver.eigen();
    let n = cx.dimension;
    let mut kernel = Vec::new();
    for q in 0..=n {
        let count = cfg.solver.eigencount.min(ipc.dim(q));
        let pkg = spectral_package(&ipc, q, count, cfg.solver.tol_group, &eig).map_err(|e| e.context("derham"))?;
        let mut group = vec![0usize; pkg.values.len()];
        for (g, members) in pkg.groups.iter().enumerate() {
            members.iter().for_each(|&i| group[i] = g);
        }
        let rows: Vec<Vec<String>> = pkg.values.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v), group[i].to_string(), num(pkg.residuals[i])]).collect();
        art.csv(&format!("spectrum_q{q}.csv"), &["index", "eigenvalue", "group", "residual"], &rows)?;
        kernel.push(kernel_package(&ipc, q, &eig).map_err(|e| e.context("derham"))?.1);
    }
    let lattice_volumes = (0..=n).map(|q| lattice_volume(&ipc, &cx, q, &eig)).collect::<Result<Vec<_>>>().map_err(|e| e.context("derham"))?;
    let body = SpectraSummary {
        cell_counts: cx.counts(),
        mesh_size: cx.mesh_size(),
        euler: cx.euler_characteristic(),
        harmonic_euler: harmonic_euler(&ipc, &eig).map_err(|e| e.context("derham"))?,
        betti: kernel.iter().map(|k| k.dimension).collect(),
        kernel,
        lattice_volumes,
    };
    art.summary(Command::Spectra.name(), &cfg.experiment, &body)
}

#[derive(Serialize)]
struct DegreeBranches {
    degree: usize,
    branches: usize,
    below_gap_count: usize,
    gap_ratio: f64,
    no_gap: bool,
    /// Branch counts per cluster label `k`.
    label_counts: BTreeMap<u32, usize>,
    unresolved: usize,
    oscillator_cardinalities: Option<Vec<usize>>,
    cardinalities_match: Option<bool>,
}

#[derive(Serialize)]
struct BranchesSummary {
    t_max: f64,
    critical_indices: Option<Vec<usize>>,
    below_gap_counts: Vec<usize>,
    degrees: Vec<DegreeBranches>,
    warnings: usize,
}

fn track(cfg: &ExperimentConfig, ipc: &InnerProductComplex, samples: &[Vec<f64>], q: usize, grid: &[f64], m: usize, adaptive: bool) -> Result<BranchFamily> {
    track_branches(ipc, samples, q, grid, m.min(ipc.dim(q)), &cfg.solver.branches(adaptive)).map_err(|e| e.context("witten"))
}

fn run_branches(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let Model { cx, ipc } = model(cfg)?;
    let grid_spec = cfg.t_grid()?;
    let grid = grid_spec.points();
    let t_max = *grid.last().unwrap();
    cfg.check_cap(&cx, t_max, "t_grid.max")?;
    let mf = cfg.function()?.build()?;
    let samples = sample_function(&cx, |x| mf.value(x));
    let indices = find_critical_points(mf.as_ref(), cfg.morse.seed_resolution).ok().map(|c| c.iter().map(|p| p.index).collect::<Vec<_>>());
    let n = cx.dimension;
    let mut gap_rows = Vec::new();
    let mut degrees = Vec::new();
    for q in 0..=n {
        let bf = track(cfg, &ipc, &samples, q, &grid, cfg.solver.eigencount, grid_spec.adaptive)?;
        let mut rows = Vec::new();
        for a in 0..bf.m {
            for (i, t) in bf.t_grid.iter().enumerate() {
                rows.push(vec![a.to_string(), num(*t), num(bf.values[a][i]), num(bf.overlaps[a][i])]);
            }
        }
        art.csv(&format!("branches_q{q}.csv"), &["branch", "t", "eigenvalue", "overlap"], &rows)?;
        let last = bf.t_grid.len() - 1;
        let labels: Vec<Vec<String>> = (0..bf.m)
            .map(|a| vec![a.to_string(), bf.labels[a].to_string(), num(bf.slopes[a]), bf.is_resolved(a).to_string(), num(bf.min_overlap(a)), num(bf.values[a][last])])
            .collect();
        art.csv(&format!("labels_q{q}.csv"), &["branch", "label", "slope", "resolved", "min_overlap", "eigenvalue_t_max"], &labels)?;
        let mut final_gap = None;
        for (i, t) in bf.t_grid.iter().enumerate() {
            if bf.spectra[i].len() < 2 {
                continue;
            }
            let g = detect_gap(&bf.spectra[i], q, *t, cfg.solver.gap_floor)?;
            gap_rows.push(vec![q.to_string(), num(*t), num(g.lower), num(g.upper), g.count.to_string(), num(g.ratio), g.no_gap.to_string()]);
            final_gap = Some(g);
        }
        let mut label_counts = BTreeMap::new();
        for l in &bf.labels {
            if let ClusterLabel::Cluster(k) = l {
                *label_counts.entry(*k).or_insert(0) += 1;
            }
        }
        let card = indices.as_ref().map(|ix| cluster_cardinalities(n, ix, q, 2));
        let matches = card.as_ref().map(|c| c.iter().enumerate().all(|(k, &v)| label_counts.get(&(k as u32)).copied().unwrap_or(0) == v));
        let (below, ratio, no_gap) = final_gap.map_or((0, f64::NAN, true), |g| (g.count, g.ratio, g.no_gap));
        degrees.push(DegreeBranches {
            degree: q,
            branches: bf.m,
            below_gap_count: below,
            gap_ratio: ratio,
            no_gap,
            label_counts,
            unresolved: bf.unresolved_count(),
            oscillator_cardinalities: card,
            cardinalities_match: matches,
        });
    }
    art.csv("gaps.csv", &["degree", "t", "lower", "upper", "count", "ratio", "no_gap"], &gap_rows)?;
    let body = BranchesSummary {
        t_max,
        critical_indices: indices,
        below_gap_counts: degrees.iter().map(|d| d.below_gap_count).collect(),
        warnings: degrees.iter().map(|d| d.unresolved).sum(),
        degrees,
    };
    art.summary(Command::Branches.name(), &cfg.experiment, &body)
}

#[derive(Serialize)]
struct MorseSummary {
    counts: Vec<usize>,
    cohomology_ranks: Vec<usize>,
    mesh_betti: Vec<usize>,
    morse_inequalities_hold: bool,
    nilpotency_defect: i64,
    trajectories: usize,
    capture_radius: f64,
    shoot_radius: f64,
}

fn morse_data(cfg: &ExperimentConfig, mf: &dyn MorseFunction) -> Result<MorseData> {
    compute_morse_data(mf, cfg.morse.seed_resolution, &cfg.morse.shoot).map_err(|e| e.context("morse"))
}

fn run_morse(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let Model { ipc, .. } = model(cfg)?;
    let mf = cfg.function()?.build()?;
    let md = morse_data(cfg, mf.as_ref())?;
    let width = md.critical_points.first().map_or(0, |c| c.location.len());
    let mut header: Vec<String> = vec!["id".into(), "index".into(), "value".into()];
    header.extend((0..width).map(|i| format!("x{i}")));
    header.extend((0..md.dimension).map(|i| format!("hessian_{i}")));
    let rows: Vec<Vec<String>> = md
        .critical_points
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let mut r = vec![id.to_string(), c.index.to_string(), num(c.value)];
            r.extend(c.location.iter().map(|v| num(*v)));
            r.extend(c.eigenvalues.iter().map(|v| num(*v)));
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    art.csv("critical_points.csv", &header, &rows)?;
    let mut inc = Vec::new();
    for (q, m) in md.incidence.iter().enumerate() {
        for (r, c, v) in m.triplets() {
            inc.push(vec![q.to_string(), md.by_index[q + 1][r].to_string(), md.by_index[q][c].to_string(), v.to_string()]);
        }
    }
    art.csv("incidence.csv", &["degree", "upper", "lower", "coefficient"], &inc)?;
    let traj: Vec<Vec<String>> = md
        .diagnostics
        .trajectories
        .iter()
        .map(|t| vec![t.from.to_string(), t.to.to_string(), t.sign.to_string(), num(t.parameter), t.points.len().to_string()])
        .collect();
    art.csv("trajectories.csv", &["from", "to", "sign", "parameter", "points"], &traj)?;
    let betti = betti_numbers(&ipc, &cfg.solver.eigen()).map_err(|e| e.context("derham"))?;
    let body = MorseSummary {
        counts: md.counts(),
        cohomology_ranks: md.cohomology_ranks(),
        morse_inequalities_hold: md.morse_inequalities_hold(&betti),
        mesh_betti: betti,
        nilpotency_defect: md.nilpotency_defect(),
        trajectories: md.diagnostics.trajectories.len(),
        capture_radius: md.diagnostics.capture_radius,
        shoot_radius: md.diagnostics.shoot_radius,
    };
    art.summary(Command::Morse.name(), &cfg.experiment, &body)
}

#[derive(Serialize)]
struct CorpusCase {
    seed: u64,
    lhs: f64,
    rhs: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct CorpusSummary {
    size: usize,
    max_relative_error: f64,
    tolerance: f64,
    pass: bool,
    hand_example_rhs: f64,
    hand_example_lhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub degree: usize,
    pub t: f64,
    pub lr_defect: f64,
    pub a: f64,
    /// `|a(VQ) − a(V)|/a(V)` for a random orthogonal `Q`.
    pub rotation_defect: f64,
    pub diagnostics: ComparisonDiagnostics,
}

#[derive(Serialize)]
struct DegreeComparison {
    degree: usize,
    t_defect_at_first: f64,
    t_defect_max: f64,
    /// `max_t t‖LR − Id‖ / (t₀‖L(t₀)R(t₀) − Id‖)`.
    growth: f64,
    bounded: bool,
    a_positive: bool,
    max_rotation_defect: f64,
}

#[derive(Serialize)]
struct TorsionFormulaSummary {
    rhs: f64,
    tolerance: f64,
    within_tolerance: bool,
    spectral_term: f64,
    a0: Vec<f64>,
    ln_a0: f64,
    lattice_volumes: Vec<f64>,
    vs_plus: Vec<Vec<f64>>,
    counts: Vec<usize>,
    morse_complex_log_torsion: f64,
}

#[derive(Serialize, Default)]
struct TorsionSummary {
    corpus: Option<CorpusSummary>,
    comparison: Option<Vec<DegreeComparison>>,
    torsion_formula: Option<TorsionFormulaSummary>,
}

fn run_torsion(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    if cfg.corpus.is_none() && cfg.comparison.is_none() && cfg.torsion_formula.is_none() {
        return Err(Error::Config { path: ".".into(), message: "torsion-check needs at least one of corpus, comparison, torsion_formula".into() });
    }
    let mut body = TorsionSummary::default();
    if let Some(c) = &cfg.corpus {
        body.corpus = Some(identity_corpus(cfg.solver.seed, c.size, c.tolerance, art)?);
    }
    if cfg.comparison.is_some() || cfg.torsion_formula.is_some() {
        let Model { cx, ipc } = model(cfg)?;
        let mf = cfg.function()?.build()?;
        let samples = sample_function(&cx, |x| mf.value(x));
        let md = morse_data(cfg, mf.as_ref())?;
        if cfg.comparison.is_some() {
            let rows = comparison_rows(cfg, &cx, &ipc, &samples, mf.as_ref(), &md)?;
            body.comparison = Some(comparison_tables(&rows, md.dimension, art)?);
        }
        if let Some(t62) = &cfg.torsion_formula {
            body.torsion_formula = Some(torsion_formula(cfg, t62, &cx, &ipc, &samples, mf.as_ref(), &md)?);
        }
    }
    art.summary(Command::TorsionCheck.name(), &cfg.experiment, &body)
}

fn identity_corpus(seed: u64, size: usize, tolerance: f64, art: &mut Artifacts) -> Result<CorpusSummary> {
    let mut cases = Vec::with_capacity(size);
    for i in 0..size as u64 {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(i);
        let chk = check_anomaly_identity(&random_isomorphism(s)?).map_err(|e| e.context("torsion"))?;
        cases.push(CorpusCase { seed: s, lhs: chk.lhs, rhs: chk.rhs, relative_error: chk.relative_error });
    }
    art.json("identity_corpus.json", &cases)?;
    let one = |c: f64| {
        InnerProductComplex::new(
            vec![crate::complexes::InnerProduct::Diagonal(vec![1.0]); 2],
            vec![crate::linalg::Csr::from_triplets(1, 1, &[(0, 0, c)])],
        )
    };
    let phi = ChainMap::new(one(1.0)?, one(2.0)?, vec![dense::identity(1), Mat::from_fn(1, 1, |_, _| 2.0)])?;
    let hand = check_anomaly_identity(&phi)?;
    let max = cases.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    Ok(CorpusSummary { size, max_relative_error: max, tolerance, pass: max <= tolerance, hand_example_lhs: hand.lhs, hand_example_rhs: hand.rhs })
}

fn random_orthogonal(rng: &mut ChaCha8Rng, m: usize) -> Mat<f64> {
    let a = Mat::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    dense::orthonormal_columns(a.as_ref())
}

/// Comparison maps on the configured `t_values`, one row per degree and `t`.
pub fn comparison_rows(
    cfg: &ExperimentConfig,
    cx: &CellComplex,
    ipc: &InnerProductComplex,
    samples: &[Vec<f64>],
    mf: &dyn MorseFunction,
    md: &MorseData,
) -> Result<Vec<ComparisonRow>> {
    let cs = cfg.comparison.as_ref().ok_or_else(|| Error::Config { path: "comparison".into(), message: "missing".into() })?;
    let g = cfg.t_grid()?;
    let grid = g.points();
    cfg.check_cap(cx, *grid.last().unwrap(), "t_grid.max")?;
    let profile = CutoffProfile::Bump { eta: cs.cutoff_eta };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.seed);
    let mut rows = Vec::new();
    for q in 0..=md.dimension {
        let c = md.counts()[q];
        if c == 0 {
            continue;
        }
        let bf = track(cfg, ipc, samples, q, &grid, cfg.solver.eigencount.max(c + 2), g.adaptive)?;
        for &t in &cs.t_values {
            let vs = virtually_small_package(&bf, t).and_then(|v| v.restrict_to(c)).map_err(|e| e.context("witten"))?;
            let b = build_comparison(cx, ipc, samples, mf, md, &vs, &profile, &cfg.morse.shoot).map_err(|e| e.context("torsion"))?;
            let a = b.a_value();
            let rot = random_orthogonal(&mut rng, vs.vectors.len());
            let rotated = volume_of(&(&b.int_vs * &rot));
            rows.push(ComparisonRow {
                degree: q,
                t,
                lr_defect: b.lr_defect()?,
                a,
                rotation_defect: (rotated - a).abs() / a.abs().max(f64::MIN_POSITIVE),
                diagnostics: b.diagnostics,
            });
        }
    }
    Ok(rows)
}

fn comparison_tables(rows: &[ComparisonRow], n: usize, art: &mut Artifacts) -> Result<Vec<DegreeComparison>> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.degree.to_string(),
                num(r.t),
                num(r.lr_defect),
                num(r.t * r.lr_defect),
                num(r.a),
                num(r.rotation_defect),
                num(r.diagnostics.min_singular_i),
                num(r.diagnostics.condition_i),
                num(r.diagnostics.projector_defect),
                num(r.diagnostics.isometry_defect),
            ]
        })
        .collect();
    art.csv(
        "comparison.csv",
        &["degree", "t", "lr_defect", "t_lr_defect", "a", "rotation_defect", "min_singular_i", "condition_i", "projector_defect", "isometry_defect"],
        &table,
    )?;
    let mut ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let traces: Vec<Vec<String>> = ts
        .iter()
        .map(|&t| {
            let a: Vec<f64> = (0..=n).map(|q| rows.iter().find(|r| r.degree == q && r.t == t).map_or(1.0, |r| r.a)).collect();
            let mut row = vec![num(t)];
            row.extend(a.iter().map(|v| num(*v)));
            row.push(num(a_alternating(&a)));
            row.push(num(a_inverse_degree(&a)));
            row
        })
        .collect();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..=n).map(|q| format!("a{q}")));
    header.push("a_alternating".into());
    header.push("a_inverse_degree".into());
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    art.csv("a_traces.csv", &header, &traces)?;
    let mut out = Vec::new();
    for q in 0..=n {
        let mine: Vec<&ComparisonRow> = rows.iter().filter(|r| r.degree == q).collect();
        let Some(first) = mine.first() else { continue };
        let t0 = first.t * first.lr_defect;
        let tmax = mine.iter().map(|r| r.t * r.lr_defect).fold(0.0, f64::max);
        let growth = tmax / t0;
        out.push(DegreeComparison {
            degree: q,
            t_defect_at_first: t0,
            t_defect_max: tmax,
            growth,
            bounded: growth <= 10.0,
            a_positive: mine.iter().all(|r| r.a > 0.0),
            max_rotation_defect: mine.iter().map(|r| r.rotation_defect).fold(0.0, f64::max),
        });
    }
    Ok(out)
}

fn torsion_formula(
    cfg: &ExperimentConfig,
    t62: &crate::config::TorsionFormulaSettings,
    cx: &CellComplex,
    ipc: &InnerProductComplex,
    samples: &[Vec<f64>],
    mf: &dyn MorseFunction,
    md: &MorseData,
) -> Result<TorsionFormulaSummary> {
    cfg.check_cap(cx, t62.t_max, "torsion_formula.t_max")?;
    let grid: Vec<f64> = (0..t62.count).map(|i| t62.t_max * i as f64 / (t62.count - 1) as f64).collect();
    let n = md.dimension;
    let mut vs_plus = Vec::new();
    let mut a0 = Vec::new();
    for q in 0..=n {
        let c = md.counts()[q];
        if c == 0 {
            vs_plus.push(vec![]);
            a0.push(1.0);
            continue;
        }
        let bf = track(cfg, ipc, samples, q, &grid, cfg.solver.eigencount.max(c + 2), true)?;
        let end = virtually_small_package(&bf, t62.t_max).and_then(|v| v.restrict_to(c)).map_err(|e| e.context("witten"))?;
        let vs0 = end.at(&bf, 0.0)?;
        vs_plus.push(vs0.positive.iter().map(|&k| vs0.values[k]).collect());
        a0.push(a_function(cx, samples, mf, md, &vs0, &cfg.morse.shoot).map_err(|e| e.context("torsion"))?);
    }
    let volumes = (0..=n).map(|q| lattice_volume(ipc, cx, q, &cfg.solver.eigen()).map(|v| v.value)).collect::<Result<Vec<_>>>().map_err(|e| e.context("derham"))?;
    let a = a_alternating(&a0);
    let rhs = torsion_formula_rhs(&vs_plus, a, &volumes);
    let spectral = torsion_formula_rhs(&vs_plus, 1.0, &vec![1.0; n + 1]);
    let mc = log_torsion(&geometric_complex(md)?)?;
    Ok(TorsionFormulaSummary {
        rhs,
        tolerance: t62.tolerance,
        within_tolerance: rhs.abs() <= t62.tolerance,
        spectral_term: spectral,
        ln_a0: a.ln(),
        a0,
        lattice_volumes: volumes,
        vs_plus,
        counts: md.counts(),
        morse_complex_log_torsion: mc,
    })
}

#[derive(Serialize)]
struct OscillatorSummary {
    cases: usize,
    all_match: bool,
    fd_max_error: f64,
}

fn run_oscillator_tables(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let o = &cfg.oscillator;
    let mut rows = Vec::new();
    let mut all = true;
    for n in 1..=o.max_dimension {
        for q in 0..=n {
            for k in 0..=n {
                let (_, counts) = enumerate_symbols(n, q, k, o.max_order);
                let spec = brute_force_model_spectrum(n, q, k, o.t, o.basis_size).map_err(|e| e.context("oscillator"))?;
                for (order, &c) in counts.iter().enumerate() {
                    let b = multiplicity(&spec, 2.0 * o.t * order as f64, 1e-8);
                    all &= b == c;
                    rows.push(vec![n.to_string(), q.to_string(), k.to_string(), order.to_string(), c.to_string(), b.to_string()]);
                }
            }
        }
    }
    let cases = rows.len();
    art.csv("symbols.csv", &["n", "q", "k", "order", "symbol_multiplicity", "brute_force_multiplicity"], &rows)?;
    let fd = fd_oscillator_richardson(o.fd_half_width, o.fd_cells, o.fd_count);
    let fd_rows: Vec<Vec<String>> = fd.iter().enumerate().map(|(j, v)| vec![j.to_string(), num(*v), num((2 * j + 1) as f64 - v)]).collect();
    art.csv("fd_oscillator.csv", &["j", "eigenvalue", "error"], &fd_rows)?;
    let fd_max_error = fd.iter().enumerate().map(|(j, v)| (v - (2 * j + 1) as f64).abs()).fold(0.0, f64::max);
    art.summary(Command::OscillatorTables.name(), &cfg.experiment, &OscillatorSummary { cases, all_match: all, fd_max_error })
}
