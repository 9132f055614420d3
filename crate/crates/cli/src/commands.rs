use std::path::Path;

use polylin::analysis::{self, BoundKind, CurvatureIntegrals};
use polylin::eval::{self, Evaluator};
use polylin::fit::{self, FitOptions, FitReport};
use polylin::partition::{build_distribution, optimized_partition, partition_from_distribution, uniform_partition};
use polylin::{parallel, Partition, PolygonalFunction, TargetFunction};

use crate::function::FunctionSpec;
use crate::model::{ModelFile, ReportRecord, SCHEMA_VERSION};
use crate::table::{Cell, Table};
use crate::{Common, Experiment, Failure, FitKind, Format, PartitionKind};

pub const SWEEP: [usize; 5] = [31, 63, 127, 255, 511];
pub const QUAD_TOL_ENV: &str = "POLYLIN_QUAD_TOL";

pub fn render(t: &Table, format: Format) -> String {
    match format {
        Format::Csv => t.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&t.to_json()).expect("table serializes");
            s.push('\n');
            s
        }
    }
}

struct Target {
    spec: FunctionSpec,
    f: TargetFunction,
    a: f64,
    b: f64,
}

fn target(spec: &str, interval: Option<&[f64]>) -> Result<Target, Failure> {
    let spec = FunctionSpec::parse(spec)?;
    let (a, b) = match interval {
        Some([a, b]) => (*a, *b),
        Some(_) => return Err(Failure::config("--interval takes two numbers")),
        None => spec
            .default_interval()
            .ok_or_else(|| Failure::config("--interval is required for poly: and expr: functions"))?,
    };
    let f = spec.build(a, b)?;
    Ok(Target { spec, f, a, b })
}

pub fn fit_options() -> Result<FitOptions, Failure> {
    let mut opts = FitOptions::default();
    if let Ok(raw) = std::env::var(QUAD_TOL_ENV) {
        let tol: f64 = raw
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("{QUAD_TOL_ENV}={raw:?} is not a number")))?;
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Failure::config(format!("{QUAD_TOL_ENV} must be positive")));
        }
        opts.quadrature_tol = tol;
    }
    Ok(opts)
}

/// The bound used to turn a tolerance into N. L2 fits are planned with the
/// interpolant bound.
fn planning_kind(p: PartitionKind, fit: FitKind) -> BoundKind {
    match (p, fit) {
        (PartitionKind::Uniform, FitKind::L1) => BoundKind::UniformBestL1,
        (PartitionKind::Optimized, FitKind::L1) => BoundKind::OptimizedBestL1,
        (PartitionKind::Uniform, _) => BoundKind::UniformInterpolant,
        (PartitionKind::Optimized, _) => BoundKind::OptimizedInterpolant,
    }
}

fn segments(c: &Common, t: &Target) -> Result<usize, Failure> {
    match (c.segments, c.tolerance) {
        (Some(0), _) => Err(Failure::config("--segments must be at least 1")),
        (Some(n), None) => Ok(n),
        (None, Some(tol)) => Ok(analysis::min_segments_for_tolerance(
            &t.f,
            t.a,
            t.b,
            tol,
            planning_kind(c.partition, c.fit),
        )?),
        (None, None) => Err(Failure::config("one of --segments or --tolerance is required")),
        (Some(_), Some(_)) => Err(Failure::config("--segments and --tolerance are mutually exclusive")),
    }
}

fn build_partition(kind: PartitionKind, t: &Target, n: usize) -> Result<Partition, Failure> {
    Ok(match kind {
        PartitionKind::Uniform => uniform_partition(t.a, t.b, n)?,
        PartitionKind::Optimized => optimized_partition(&t.f, t.a, t.b, n)?,
    })
}

fn approximate(
    kind: FitKind,
    f: &TargetFunction,
    p: &Partition,
    opts: &FitOptions,
) -> Result<(PolygonalFunction, Option<FitReport>), Failure> {
    Ok(match kind {
        FitKind::Interpolant => (fit::interpolant(f, p)?, None),
        FitKind::L2 => (fit::l2_projection(f, p)?, None),
        FitKind::L1 => {
            let (g, r) = fit::best_l1_fit(f, p, opts)?;
            (g, Some(r))
        }
    })
}

pub fn partition(c: &Common) -> Result<Table, Failure> {
    let t = target(&c.function, c.interval.as_deref())?;
    let n = segments(c, &t)?;
    let p = build_partition(c.partition, &t, n)?;
    let mut table = Table::new(&["i", "x"]);
    for (i, x) in p.knots().iter().enumerate() {
        table.push(vec![i.into(), (*x).into()]);
    }
    Ok(table)
}

/// Returns the rendered output and whether the fit converged; the output is
/// written either way.
pub fn fit(c: &Common) -> Result<(String, Result<(), Failure>), Failure> {
    let t = target(&c.function, c.interval.as_deref())?;
    let n = segments(c, &t)?;
    let opts = fit_options()?;
    let p = build_partition(c.partition, &t, n)?;
    let (g, report) = approximate(c.fit, &t.f, &p, &opts)?;
    let l1_error = match &report {
        Some(r) => r.final_cost,
        None => analysis::l1_distance(&t.f, &g)?,
    };
    let outcome = match &report {
        Some(r) if !r.converged => Err(Failure::numeric(format!(
            "best-L1 fit did not converge (gradient norm {:e}, tolerance {:e})",
            r.final_gradient_norm, opts.cost_tol
        ))),
        _ => Ok(()),
    };
    let text = match c.format.unwrap_or(Format::Json) {
        Format::Json => ModelFile {
            schema_version: SCHEMA_VERSION,
            function: t.spec.to_spec_string(),
            interval: [t.a, t.b],
            partition: c.partition.name().into(),
            fit: c.fit.name().into(),
            segments: n,
            knots: p.knots().to_vec(),
            ordinates: g.ordinates().to_vec(),
            l1_error,
            report: report.as_ref().map(ReportRecord::from),
        }
        .to_json(),
        Format::Csv => {
            let mut table = Table::new(&["i", "x", "y"]);
            for (i, (x, y)) in p.knots().iter().zip(g.ordinates()).enumerate() {
                table.push(vec![i.into(), (*x).into(), (*y).into()]);
            }
            table.to_csv()
        }
    };
    Ok((text, outcome))
}

fn bound_cells(f: &TargetFunction, a: f64, b: f64, n: usize) -> Result<Vec<Cell>, Failure> {
    let ci = CurvatureIntegrals::for_target(f, a, b)?;
    Ok(BoundKind::ALL.iter().map(|&k| ci.bound(k, a, b, n).into()).collect())
}

const BOUND_COLUMNS: [&str; 4] = [
    "bound_uniform_interpolant",
    "bound_optimized_interpolant",
    "bound_uniform_best_l1",
    "bound_optimized_best_l1",
];

pub fn error(c: &Common, model: Option<&Path>) -> Result<Table, Failure> {
    if let Some(path) = model {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let m = ModelFile::from_json(&text)?;
        let t = target(&m.function, Some(&m.interval))?;
        let g = m.polygonal()?;
        let measured = analysis::l1_distance(&t.f, &g)?;
        let mut cols = vec!["function", "partition", "fit", "segments", "measured", "stored"];
        cols.extend(BOUND_COLUMNS);
        let mut table = Table::new(&cols);
        let mut row: Vec<Cell> = vec![
            m.function.clone().into(),
            m.partition.clone().into(),
            m.fit.clone().into(),
            g.partition().segments().into(),
            measured.into(),
            m.l1_error.into(),
        ];
        row.extend(bound_cells(&t.f, t.a, t.b, g.partition().segments())?);
        table.push(row);
        return Ok(table);
    }
    let t = target(&c.function, c.interval.as_deref())?;
    let n = segments(c, &t)?;
    let opts = fit_options()?;
    let p = build_partition(c.partition, &t, n)?;
    let (g, report) = approximate(c.fit, &t.f, &p, &opts)?;
    let measured = match report {
        Some(r) => r.final_cost,
        None => analysis::l1_distance(&t.f, &g)?,
    };
    let mut cols = vec!["function", "partition", "fit", "segments", "measured"];
    cols.extend(BOUND_COLUMNS);
    let mut table = Table::new(&cols);
    let mut row: Vec<Cell> = vec![
        t.spec.to_spec_string().into(),
        c.partition.name().into(),
        c.fit.name().into(),
        n.into(),
        measured.into(),
    ];
    row.extend(bound_cells(&t.f, t.a, t.b, n)?);
    table.push(row);
    Ok(table)
}

pub fn plan(c: &Common) -> Result<Table, Failure> {
    let t = target(&c.function, c.interval.as_deref())?;
    let tol = c.tolerance.ok_or_else(|| Failure::config("plan needs --tolerance"))?;
    let mut table = Table::new(&["kind", "segments", "segments_real"]);
    let ci = CurvatureIntegrals::for_target(&t.f, t.a, t.b)?;
    for kind in BoundKind::ALL {
        let n = analysis::min_segments_for_tolerance(&t.f, t.a, t.b, tol, kind)?;
        table.push(vec![
            kind.name().into(),
            n.into(),
            ci.segments_for(kind, t.a, t.b, tol).into(),
        ]);
    }
    Ok(table)
}

pub fn bench(c: &Common, evals: usize) -> Result<Table, Failure> {
    let t = target(&c.function, c.interval.as_deref())?;
    let sizes: Vec<usize> = match (c.segments, c.tolerance) {
        (None, None) => SWEEP.to_vec(),
        _ => vec![segments(c, &t)?],
    };
    let opts = fit_options()?;
    let mut table = Table::new(&["segments", "partition", "mode", "mean_ns", "min_ns", "checksum"]);
    for n in sizes {
        let p = build_partition(c.partition, &t, n)?;
        let (g, _) = approximate(c.fit, &t.f, &p, &opts)?;
        let e = Evaluator::new(g);
        let stats = eval::bench(&e, evals, c.seed);
        let mode = match e.mode() {
            eval::EvalMode::UniformDirect => "uniform_direct",
            eval::EvalMode::BinarySearch => "binary_search",
        };
        table.push(vec![
            n.into(),
            c.partition.name().into(),
            mode.into(),
            stats.mean_ns.into(),
            stats.min_ns.into(),
            stats.checksum.into(),
        ]);
    }
    Ok(table)
}

fn sweep(spec: FunctionSpec, a: f64, b: f64) -> Result<Table, Failure> {
    let f = spec.build(a, b)?;
    let dist = build_distribution(&f, a, b)?;
    let ci = CurvatureIntegrals::for_target(&f, a, b)?;
    let opts = fit_options()?;
    let rows = parallel::try_map_indexed(SWEEP.len(), |i| -> Result<Vec<Cell>, Failure> {
        let n = SWEEP[i];
        let pu = uniform_partition(a, b, n)?;
        let po = partition_from_distribution(&dist, n)?;
        let iu = analysis::l1_distance(&f, &fit::interpolant(&f, &pu)?)?;
        let io = analysis::l1_distance(&f, &fit::interpolant(&f, &po)?)?;
        let mut l1 = [0.0; 2];
        for (slot, p) in l1.iter_mut().zip([&pu, &po]) {
            let (_, r) = fit::best_l1_fit(&f, p, &opts)?;
            if !r.converged {
                return Err(Failure::numeric(format!(
                    "best-L1 fit did not converge at N={n} (gradient norm {:e})",
                    r.final_gradient_norm
                )));
            }
            *slot = r.final_cost;
        }
        Ok(vec![
            n.into(),
            iu.into(),
            ci.bound(BoundKind::UniformInterpolant, a, b, n).into(),
            io.into(),
            ci.bound(BoundKind::OptimizedInterpolant, a, b, n).into(),
            l1[0].into(),
            ci.bound(BoundKind::UniformBestL1, a, b, n).into(),
            l1[1].into(),
            ci.bound(BoundKind::OptimizedBestL1, a, b, n).into(),
            (l1[0] / iu).into(),
            (l1[1] / io).into(),
        ])
    })?;
    let mut table = Table::new(&[
        "N",
        "interp_uniform",
        "interp_uniform_bound",
        "interp_optimized",
        "interp_optimized_bound",
        "l1_uniform",
        "l1_uniform_bound",
        "l1_optimized",
        "l1_optimized_bound",
        "l1_over_interp_uniform",
        "l1_over_interp_optimized",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

fn gain_curve() -> Result<Table, Failure> {
    let ends: Vec<f64> = (1..=32).map(|i| 0.5 * i as f64).collect();
    let gains = parallel::try_map_indexed(ends.len(), |i| {
        let f = polylin::builtins::gaussian(0.0, ends[i])?;
        analysis::partition_gain(&f, 0.0, ends[i])
    })?;
    let mut table = Table::new(&["b", "gain", "gain_over_b2"]);
    for (b, g) in ends.iter().zip(gains) {
        table.push(vec![(*b).into(), g.into(), (g / (b * b)).into()]);
    }
    Ok(table)
}

pub fn reproduce(e: Experiment) -> Result<Table, Failure> {
    match e {
        Experiment::Gaussian04 => sweep(FunctionSpec::Gaussian, 0.0, 4.0),
        Experiment::Gaussian08 => sweep(FunctionSpec::Gaussian, 0.0, 8.0),
        Experiment::Chirp => sweep(FunctionSpec::Chirp, 0.0, 1.0),
        Experiment::Gain => gain_curve(),
    }
}
