use std::time::Instant;

use qex_core::extremal::{self, CriticalSolution, SpectralResult};
use qex_core::linalg;
use qex_core::oracle::{eigen_oracle, permutation_means, trace_bounds};
use qex_core::positivity::{self, AdmissibilityStatus, PurityConstraints, RegionSample};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{ConstantArgs, ExtremalArgs, Format, RegionArgs, SpectrumArgs, SweepArgs};
use crate::error::CliError;
use crate::operator_file::{Entry, OperatorFile};
use crate::report::*;

/// Agreement threshold for `--verify`.
pub const VERIFY_TOL: f64 = 1e-9;

fn summary(file: &OperatorFile) -> InputSummary {
    InputSummary {
        name: file.name.clone(),
        d: file.d,
        digest: file.digest(),
    }
}

fn solution_report(s: &CriticalSolution, weights: Option<Vec<f64>>) -> SolutionReport {
    SolutionReport {
        label: s.label,
        mean_value: s.mean_value,
        bloch: s.bloch.lambda.iter().copied().collect(),
        matrix: s.rho.row_iter().map(|r| r.iter().map(|z| Entry::from(*z)).collect()).collect(),
        commutator_residual: s.commutator_residual,
        purity: linalg::trace_product_re(&s.rho, &s.rho),
        constants: s.purity.values().to_vec(),
        weights,
    }
}

fn spectrum_summary(spec: &SpectralResult) -> SpectrumSummary {
    SpectrumSummary {
        eigenvalues: spec.eigenvalues.clone(),
        completeness_residual: spec.completeness_residual,
        rounds: spec.rounds,
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn elapsed(start: Instant, enabled: bool) -> Option<Timing> {
    enabled.then(|| Timing {
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn spectrum_report(file: &OperatorFile, seed: u64, verify: bool, timing: bool) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let op = file.operator()?;
    let spec = extremal::extremal_spectrum(&op, seed)?;
    let verification = if verify {
        let oracle = eigen_oracle(&file.matrix())?.eigenvalues;
        let max_deviation = spec
            .eigenvalues
            .iter()
            .zip(&oracle)
            .map(|(a, b)| relative_gap(*a, *b))
            .fold(0.0, f64::max);
        Some(Verification {
            passed: max_deviation < VERIFY_TOL && oracle.len() == spec.eigenvalues.len(),
            oracle_eigenvalues: oracle,
            max_deviation,
            permutation_means: None,
            trace_bounds: None,
        })
    } else {
        None
    };
    Ok(RunReport {
        schema: SCHEMA_VERSION.into(),
        mode: Mode::Spectrum,
        input: summary(file),
        seed,
        constants: None,
        admissibility: None,
        solutions: spec.projectors.iter().map(|p| solution_report(p, None)).collect(),
        spectrum: Some(spectrum_summary(&spec)),
        verification,
        timing: elapsed(start, timing),
    })
}

fn constraints(file: &OperatorFile, args: &ConstantArgs) -> Result<PurityConstraints, CliError> {
    Ok(match args.values(file.d)? {
        None => PurityConstraints::pure(file.d)?,
        Some(c) => PurityConstraints::new(file.d, c)?,
    })
}

fn admissible(c: &PurityConstraints) -> Result<AdmissibilityStatus, CliError> {
    let adm = c.admissibility();
    if !adm.is_admissible() {
        let condition = adm.violated.clone().unwrap_or_default();
        return Err(CliError::Validation(format!("inadmissible constants: violates {condition}")));
    }
    Ok(adm.status)
}

pub fn extremal_report(file: &OperatorFile, c: &PurityConstraints, seed: u64, verify: bool, timing: bool) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let status = admissible(c)?;
    let op = file.operator()?;
    let states = extremal::extremal_states(&op, c, seed)?;
    let pure = match extremal::extremal_spectrum(&op, seed) {
        Ok(p) => Some(p),
        Err(qex_core::Error::ScalarOperator) => None,
        Err(e) => return Err(e.into()),
    };
    let solutions = states
        .iter()
        .map(|s| {
            let weights = pure
                .as_ref()
                .and_then(|p| extremal::convex_decomposition(s, p).ok())
                .map(|dec| dec.weights);
            solution_report(s, weights)
        })
        .collect();
    let verification = if verify { Some(verify_mixed(file, &states)?) } else { None };
    Ok(RunReport {
        schema: SCHEMA_VERSION.into(),
        mode: if c.is_pure() { Mode::Pure } else { Mode::Mixed },
        input: summary(file),
        seed,
        constants: Some(c.values().to_vec()),
        admissibility: Some(format!("{status:?}").to_lowercase()),
        solutions,
        spectrum: pure.as_ref().map(spectrum_summary),
        verification,
        timing: elapsed(start, timing),
    })
}

/// Every mean must be one of the permutation means and lie inside the
/// trace bounds; with a non-degenerate spectrum every permutation mean must
/// be hit.
fn verify_mixed(file: &OperatorFile, states: &[CriticalSolution]) -> Result<Verification, CliError> {
    let oracle = eigen_oracle(&file.matrix())?.eigenvalues;
    let gammas = eigen_oracle(&states[0].rho)?.eigenvalues;
    let perms = permutation_means(&oracle, &gammas)?;
    let (lo, hi) = trace_bounds(&oracle, &gammas)?;
    let max_deviation = states
        .iter()
        .map(|s| perms.iter().map(|p| relative_gap(s.mean_value, *p)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let inside = states
        .iter()
        .all(|s| s.mean_value >= lo - VERIFY_TOL * lo.abs().max(1.0) && s.mean_value <= hi + VERIFY_TOL * hi.abs().max(1.0));
    let covered = perms
        .iter()
        .all(|p| states.iter().any(|s| relative_gap(s.mean_value, *p) < VERIFY_TOL));
    Ok(Verification {
        passed: max_deviation < VERIFY_TOL && inside && covered,
        oracle_eigenvalues: oracle,
        max_deviation,
        permutation_means: Some(perms),
        trace_bounds: Some((lo, hi)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionRow {
    pub label: usize,
    pub mean_value: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub branch_id: usize,
    pub mean_value: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRow {
    pub c2: f64,
    pub c3: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c4: Option<f64>,
    pub status: String,
    /// Boundary points count as admissible.
    pub admissible: bool,
    /// First violated condition, if any.
    pub violated: String,
    /// Conditions holding with equality, `;`-separated.
    pub active: String,
}

/// Runs `f` on a pool capped by `QEX_THREADS` when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match std::env::var("QEX_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Io(e.to_string()))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

pub fn sweep_grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 || from == to {
        return vec![from];
    }
    (0..steps).map(|i| from + (to - from) * i as f64 / (steps - 1) as f64).collect()
}

/// `(mean, purity)` pairs at one parameter value, sorted by mean descending.
fn sweep_point(file: &OperatorFile, param: &str, value: f64, c: &PurityConstraints, seed: u64) -> Result<Vec<(f64, f64)>, CliError> {
    let op = file.with_parameter(param, value)?.operator()?;
    let states = if c.is_pure() {
        match extremal::extremal_spectrum(&op, seed) {
            Ok(spec) => spec.projectors,
            Err(qex_core::Error::ScalarOperator) => extremal::extremal_states(&op, c, seed)?,
            Err(e) => return Err(e.into()),
        }
    } else {
        extremal::extremal_states(&op, c, seed)?
    };
    let mut out: Vec<(f64, f64)> = states
        .iter()
        .map(|s| (s.mean_value, linalg::trace_product_re(&s.rho, &s.rho)))
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(out)
}

/// Nearest-neighbour continuation: closest pairs are matched first and
/// unmatched points open new branches.
fn assign_branches(points: &[Vec<(f64, f64)>]) -> Vec<Vec<usize>> {
    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(points.len());
    let mut next = 0;
    for (step, pts) in points.iter().enumerate() {
        let mut assigned = vec![usize::MAX; pts.len()];
        if step > 0 {
            let prev = &points[step - 1];
            let prev_ids = &ids[step - 1];
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (i, p) in prev.iter().enumerate() {
                for (j, q) in pts.iter().enumerate() {
                    pairs.push(((p.0 - q.0).abs(), i, j));
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut used = vec![false; prev.len()];
            for (_, i, j) in pairs {
                if !used[i] && assigned[j] == usize::MAX {
                    used[i] = true;
                    assigned[j] = prev_ids[i];
                }
            }
        }
        for a in assigned.iter_mut().filter(|a| **a == usize::MAX) {
            *a = next;
            next += 1;
        }
        ids.push(assigned);
    }
    ids
}

pub fn sweep_rows(file: &OperatorFile, param: &str, grid: &[f64], c: &PurityConstraints, seed: u64) -> Result<Vec<SweepRow>, CliError> {
    admissible(c)?;
    file.with_parameter(param, grid[0])?;
    let points = with_pool(|| {
        grid.par_iter()
            .map(|&v| sweep_point(file, param, v, c, seed))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let ids = assign_branches(&points);
    let mut rows = Vec::new();
    for ((v, pts), branch) in grid.iter().zip(&points).zip(&ids) {
        let mut step: Vec<SweepRow> = pts
            .iter()
            .zip(branch)
            .map(|(&(mean_value, purity), &branch_id)| SweepRow {
                param: *v,
                branch_id,
                mean_value,
                purity,
            })
            .collect();
        step.sort_by_key(|r| r.branch_id);
        rows.extend(step);
    }
    Ok(rows)
}

pub fn region_rows(d: usize, resolution: usize) -> Result<Vec<RegionRow>, CliError> {
    let grid = positivity::region_grid(d, resolution)?;
    let samples: Vec<RegionSample> = with_pool(|| {
        grid.into_par_iter()
            .map(|c| positivity::sample_point(d, c))
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(samples
        .into_iter()
        .map(|s| RegionRow {
            c2: s.c[0],
            c3: s.c[1],
            c4: s.c.get(2).copied(),
            status: format!("{:?}", s.admissibility.status).to_lowercase(),
            admissible: s.admissibility.is_admissible(),
            violated: s.admissibility.violated.clone().unwrap_or_default(),
            active: s.admissibility.active.join(";"),
        })
        .collect())
}

fn solution_rows(report: &RunReport) -> Vec<SolutionRow> {
    report
        .solutions
        .iter()
        .map(|s| SolutionRow {
            label: s.label,
            mean_value: s.mean_value,
            purity: s.purity,
        })
        .collect()
}

fn render(report: &RunReport, format: Option<Format>) -> Result<String, CliError> {
    match format.unwrap_or(Format::Json) {
        Format::Json => to_json(report),
        Format::Csv => to_csv(&solution_rows(report)),
    }
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<String, CliError> {
    let file = OperatorFile::load(&args.common.input)?;
    let report = spectrum_report(&file, args.common.seed, args.verify, args.common.timing)?;
    render(&report, args.common.format)
}

pub fn cmd_extremal(args: &ExtremalArgs) -> Result<String, CliError> {
    let file = OperatorFile::load(&args.common.input)?;
    let c = constraints(&file, &args.constants)?;
    let report = extremal_report(&file, &c, args.common.seed, args.verify, args.common.timing)?;
    render(&report, args.common.format)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let file = OperatorFile::load(&args.common.input)?;
    let c = constraints(&file, &args.constants)?;
    let grid = sweep_grid(args.from, args.to, args.steps);
    let rows = sweep_rows(&file, &args.param, &grid, &c, args.common.seed)?;
    match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&rows),
        Format::Json => to_json(&rows),
    }
}

pub fn cmd_region(args: &RegionArgs) -> Result<String, CliError> {
    let rows = region_rows(args.d, args.resolution)?;
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&rows),
        Format::Json => to_json(&rows),
    }
}
