use std::collections::BTreeMap;
use std::fmt;
use std::fs;

use anyhow::{Context, Result};
use jostline::bound::{bound_state_scan, ScanOptions};
use jostline::config::load_profile;
use jostline::jost::{integrate_jost, GridSpec};
use jostline::oracle::transfer_matrix_solve;
use jostline::presets::{sample_energies, Region};
use jostline::residual::Residuals;
use jostline::smatrix::{
    closed_open_residuals, determinant_residuals, scattering_matrices, symmetry_residuals, unitarity_residuals,
    ScatteringSet,
};
use jostline::transition::{
    bilinear_residuals, conjugation_residuals, transition_at, transition_matrices, TransitionSet,
};
use jostline::{Error, Medium, Point, Tolerances, C};
use rayon::prelude::*;

use crate::records::{self, CheckRow, ResidualRow, SweepRow};
use crate::{Common, Format, LambdaRange, Method};

/// Raised by `verify` when at least one check fails.
#[derive(Debug)]
pub struct ChecksFailed(pub usize);

impl fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for ChecksFailed {}

/// Bad command-line usage that clap cannot catch.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn load(args: &Common) -> Result<(Medium<f64>, Tolerances)> {
    let tol = args.tolerances()?;
    let profile = load_profile::<f64>(&args.profile)?;
    let medium = Medium::new(profile, &tol)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    Ok((medium, tol))
}

fn energies(args: &Common) -> Result<Option<Vec<f64>>> {
    match (args.lambda, args.range()?) {
        (Some(_), Some(_)) => Err(usage("give either --lambda or --lambda-range, not both")),
        (Some(l), None) => Ok(Some(vec![l])),
        (None, Some(r)) => Ok(Some(r.points())),
        (None, None) => Ok(None),
    }
}

struct Evaluation {
    ts: TransitionSet<f64>,
    ss: ScatteringSet<f64>,
    /// Checks that need the full field (absent for the transfer method).
    field: Residuals,
}

fn evaluate(medium: &Medium<f64>, lambda: f64, tol: &Tolerances, method: Method) -> Result<Evaluation, Error> {
    let point = Point::physical(lambda, medium.channels());
    let mut field_checks = Residuals::new();
    let (ts, ss) = match method {
        Method::Ode => {
            let spec = GridSpec::from_tolerances(tol, medium.half_width());
            let field = integrate_jost(medium, &point, &spec, tol)?;
            field_checks.push("wronskian.drift", field.wronskian_drift());
            field_checks.push("wronskian.basic", field.basic_wronskian_residual());
            let ts = transition_matrices(&field);
            if let Some(e) = ts.expansion_residual {
                field_checks.push("expansion", e);
            }
            let ss = scattering_matrices(medium, &ts, tol)?;
            (ts, ss)
        }
        Method::Transfer => transfer_matrix_solve(medium, &point, tol)?,
    };
    Ok(Evaluation {
        ts,
        ss,
        field: field_checks,
    })
}

/// Every identity that must hold at real λ.
fn identity_checks(medium: &Medium<f64>, ev: &Evaluation, tol: &Tolerances) -> Result<Residuals, Error> {
    let mut r = ev.field.clone();
    r.extend(bilinear_residuals(&ev.ts));
    r.extend(conjugation_residuals(medium, &ev.ts, tol)?);
    r.extend(symmetry_residuals(&ev.ss));
    r.extend(determinant_residuals(&ev.ss));
    r.extend(unitarity_residuals(&ev.ss)?.residuals);
    match closed_open_residuals(&ev.ss) {
        Ok(c) => r.extend(c),
        Err(Error::DegenerateSplit { .. }) => {}
        Err(e) => return Err(e),
    }
    if let Some(p) = &ev.ss.projector {
        let p = &p.report;
        r.push("projector.rank", p.rank.abs_diff(p.expected_rank) as f64);
        r.push("projector.hermitian", p.hermitian);
        r.push("projector.idempotent", p.idempotent);
        r.push("projector.partner", p.partner_mismatch);
        r.push("projector.right_inverse", p.right_inverse);
    }
    Ok(r)
}

pub fn scatter(args: &Common, method: Method) -> Result<()> {
    let (medium, tol) = load(args)?;
    let lambda = args.lambda.ok_or_else(|| usage("scatter needs --lambda"))?;
    if args.lambda_range.is_some() {
        return Err(usage("scatter takes a single --lambda"));
    }
    let ev = evaluate(&medium, lambda, &tol, method)?;
    let mut res = identity_checks(&medium, &ev, &tol)?;
    res.push("unitarity.full_tilde", unitarity_residuals(&ev.ss)?.full_tilde);

    let tag = method.label();
    let transition = records::transition_rows(&ev.ts, tag);
    let smatrix = records::matrix_rows(&ev.ss, tag);
    let channels = records::channel_rows(&medium, &ev.ss);
    let residuals: Vec<ResidualRow> = res
        .iter()
        .map(|r| ResidualRow {
            lambda,
            check_name: r.name.clone(),
            residual: r.value,
        })
        .collect();
    match args.format {
        Format::Csv => {
            records::write_csv(&args.out.join("transition.csv"), &transition)?;
            records::write_csv(&args.out.join("smatrix.csv"), &smatrix)?;
            records::write_csv(&args.out.join("residuals.csv"), &residuals)?;
            records::write_csv(&args.out.join("channels.csv"), &channels)?;
        }
        Format::Json => {
            let doc = serde_json::json!({
                "lambda": lambda,
                "method": tag,
                "channels": channels,
                "transition": transition,
                "smatrix": smatrix,
                "residuals": residuals,
            });
            records::write_json(&args.out.join("scatter.json"), &doc)?;
        }
    }
    let cls = ev.ss.classification.as_ref().expect("real lambda");
    println!(
        "lambda = {lambda}: open left {}, open right {}, |det S~| - 1 = {:e}",
        cls.l_open(),
        cls.r_open(),
        ev.ss.det_s_tilde().norm() - 1.0
    );
    Ok(())
}

fn sweep_row(medium: &Medium<f64>, lambda: f64, tol: &Tolerances) -> Result<SweepRow, Error> {
    let spec = GridSpec::from_tolerances(tol, medium.half_width());
    let ts = transition_at(medium, &Point::physical(lambda, medium.channels()), &spec, tol)?;
    let ss = scattering_matrices(medium, &ts, tol)?;
    let cls = ss.classification.as_ref().expect("real lambda");
    let n = medium.channels();
    let prob = |m: &jostline::CMat<f64>, rows: &[usize], j: usize| rows.iter().map(|&i| m[(i, j)].norm_sqr()).sum();
    let mut transmission = vec![None; n];
    let mut reflection = vec![None; n];
    for &j in &cls.open_left {
        transmission[j] = Some(prob(&ss.t1_tilde, &cls.open_right, j));
        reflection[j] = Some(prob(&ss.r1_tilde, &cls.open_left, j));
    }
    let rep = unitarity_residuals(&ss)?;
    let unitarity = if rep.residuals.is_empty() {
        0.0
    } else {
        rep.residuals.max()
    };
    Ok(SweepRow {
        lambda,
        transmission,
        reflection,
        unitarity,
    })
}

pub fn sweep(args: &Common) -> Result<()> {
    let (medium, tol) = load(args)?;
    let lambdas = energies(args)?.ok_or_else(|| usage("sweep needs --lambda-range or --lambda"))?;
    let results: Vec<(f64, Result<SweepRow, Error>)> = args
        .pool()?
        .install(|| lambdas.par_iter().map(|&l| (l, sweep_row(&medium, l, &tol))).collect());
    let mut rows = Vec::with_capacity(results.len());
    for (l, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e @ (Error::AtThreshold { .. } | Error::SingularPhiPlus { .. })) => {
                eprintln!("notice: skipping lambda = {l}: {e}")
            }
            Err(e) => return Err(e.into()),
        }
    }
    match args.format {
        Format::Json => records::write_json(&args.out.join("sweep.json"), &rows)?,
        Format::Csv => {
            let n = medium.channels();
            let path = args.out.join("sweep.csv");
            let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut header = vec!["lambda".to_string()];
            header.extend((0..n).map(|j| format!("T_{j}")));
            header.extend((0..n).map(|j| format!("R_{j}")));
            header.push("unitarity".into());
            w.write_record(&header)?;
            let cell = |x: &Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
            for r in &rows {
                let mut rec = vec![format!("{:?}", r.lambda)];
                rec.extend(r.transmission.iter().map(cell));
                rec.extend(r.reflection.iter().map(cell));
                rec.push(format!("{:?}", r.unitarity));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
    }
    println!("{} of {} energies written", rows.len(), lambdas.len());
    Ok(())
}

pub fn bound(args: &Common) -> Result<()> {
    let (medium, tol) = load(args)?;
    let range: LambdaRange = args
        .range()?
        .ok_or_else(|| usage("bound needs --lambda-range LO:HI:N"))?;
    if args.lambda.is_some() {
        return Err(usage("bound takes --lambda-range, not --lambda"));
    }
    let opts = ScanOptions {
        min_nodes: range.count.max(2),
        ..ScanOptions::default()
    };
    let rep = bound_state_scan(&medium, range.lo, range.hi, &tol, &opts)?;
    let whole = rep.skipped_open.iter().map(|(a, b)| b - a).sum::<f64>() >= range.hi - range.lo;
    if whole {
        eprintln!("notice: all channels open: no bound states possible");
    } else {
        for (a, b) in &rep.skipped_open {
            eprintln!("notice: [{a}, {b}] skipped, all channels open: no bound states possible");
        }
    }
    for w in &rep.warnings {
        eprintln!("warning: {}", serde_json::to_string(w)?);
    }
    records::write_json(&args.out.join("bound_states.json"), &rep.states)?;
    match args.format {
        Format::Csv => {
            let path = args.out.join("scan_trace.csv");
            rep.write_trace_csv(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?)?
        }
        Format::Json => {
            let trace: Vec<_> = rep
                .trace
                .iter()
                .map(|(l, d)| serde_json::json!({"lambda": l, "re_D": d[0], "im_D": d[1], "abs_D": d[0].hypot(d[1])}))
                .collect();
            records::write_json(&args.out.join("scan_trace.json"), &trace)?
        }
    }
    println!("{} bound state(s)", rep.states.len());
    for s in &rep.states {
        println!("  lambda = {}", s.lambda);
    }
    Ok(())
}

/// Fixed seed so default verification energies are reproducible.
const VERIFY_SEED: u64 = 20;

/// Five energies in each of the all-open, mixed and all-closed classes.
fn default_energies(medium: &Medium<f64>) -> Vec<f64> {
    let mut out = sample_energies(medium, Region::AllOpen, 5, VERIFY_SEED, 0.05);
    let mixed = sample_energies(medium, Region::Mixed, 5, VERIFY_SEED, 0.05);
    if mixed.is_empty() {
        out.extend(sample_energies(medium, Region::Partial, 5, VERIFY_SEED, 0.05));
    } else {
        out.extend(mixed);
    }
    out.extend(sample_energies(medium, Region::AllClosed, 5, VERIFY_SEED, 0.05));
    out
}

fn corrupt(ev: &mut Evaluation) {
    let kick = C::new(1e-3 * (1.0 + ev.ss.t1[(0, 0)].norm()), 0.0);
    ev.ss.t1[(0, 0)] += kick;
    ev.ss.s[(0, 0)] += kick;
}

fn battery(
    medium: &Medium<f64>,
    lambda: f64,
    tol: &Tolerances,
    corrupt_s: bool,
) -> Result<(Residuals, Vec<String>), Error> {
    let mut notes = Vec::new();
    let mut ev = evaluate(medium, lambda, tol, Method::Ode)?;
    if corrupt_s {
        corrupt(&mut ev);
    }
    let mut r = identity_checks(medium, &ev, tol)?;
    if medium.profile().is_piecewise_constant() {
        match evaluate(medium, lambda, tol, Method::Transfer) {
            Ok(exact) => {
                let ts_scale = 1.0f64.max(exact.ts.scale());
                let ss_scale = 1.0f64.max(exact.ss.scale());
                r.push("oracle.transition", ev.ts.max_deviation(&exact.ts) / ts_scale);
                r.push("oracle.smatrix", ev.ss.max_deviation(&exact.ss) / ss_scale);
            }
            Err(e) => notes.push(format!("oracle comparison skipped at lambda = {lambda}: {e}")),
        }
    }
    Ok((r, notes))
}

pub fn verify(args: &Common, corrupt_s: bool) -> Result<()> {
    let (medium, tol) = load(args)?;
    let lambdas = match energies(args)? {
        Some(l) => l,
        None => default_energies(&medium),
    };
    if !medium.profile().is_piecewise_constant() {
        eprintln!("notice: profile has sampled layers, oracle comparison skipped");
    }
    let results: Vec<(f64, Result<(Residuals, Vec<String>), Error>)> = args.pool()?.install(|| {
        lambdas
            .par_iter()
            .map(|&l| (l, battery(&medium, l, &tol, corrupt_s)))
            .collect()
    });

    let mut rows = Vec::new();
    for (lambda, res) in results {
        match res {
            Ok((r, notes)) => {
                for n in notes {
                    eprintln!("notice: {n}");
                }
                rows.extend(r.iter().map(|c| CheckRow {
                    lambda,
                    check_name: c.name.clone(),
                    residual: c.value,
                    limit: tol.check,
                    passed: c.value <= tol.check,
                }));
            }
            Err(e @ (Error::AtThreshold { .. } | Error::SingularPhiPlus { .. })) => {
                eprintln!("notice: skipping lambda = {lambda}: {e}")
            }
            Err(e) => return Err(e.into()),
        }
    }
    records::write_rows(&args.out, "verify", args.format, &rows)?;

    let mut table: BTreeMap<&str, (f64, usize, usize)> = BTreeMap::new();
    for r in &rows {
        let e = table.entry(&r.check_name).or_insert((0.0, 0, 0));
        e.0 = if r.residual.is_nan() {
            f64::NAN
        } else {
            e.0.max(r.residual)
        };
        e.1 += 1;
        e.2 += usize::from(!r.passed);
    }
    let energies = {
        let mut l: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
        l.dedup();
        l.len()
    };
    println!("{:<36} {:>12} {:>6}  status", "check", "worst", "count");
    for (name, (worst, count, failed)) in &table {
        let status = if *failed == 0 { "PASS" } else { "FAIL" };
        println!("{name:<36} {worst:>12.3e} {count:>6}  {status}");
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!(
        "{} checks at {energies} energies, {failed} failed (limit {:e})",
        rows.len(),
        tol.check
    );
    if failed > 0 {
        return Err(ChecksFailed(failed).into());
    }
    Ok(())
}
