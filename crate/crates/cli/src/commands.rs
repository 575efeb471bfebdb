use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ncpick::asymptotics::{anp_norm, AnpTrace};
use ncpick::linalg::{identity, max_abs_diff, r, CMat};
use ncpick::pick::{
    alg_member as membership, feasible as feasibility, np_norm, np_norm_preconditioned, pick_matrix, BlockTarget,
    PickBundle, RowTuple, Tolerances,
};
use ncpick::schema::{parse_target, MatrixJson, RowTupleJson};
use ncpick::search::{deterministic_colrow, random_search, SearchConfig, SearchRecord, TrialOutcome, CSV_HEADER};
use ncpick::tensor::choi_matrix;
use ncpick::verify::{run_verify, VerifyOptions};
use ncpick::zoo::{choi_point, NodeKind, NodeSpec};
use ncpick::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::manifest::{manifest_path, now_ms, write_json, RunManifest};
use crate::{
    AlgMemberArgs, ExamplesArgs, Failure, FeasibleArgs, NpnormArgs, SearchArgs, TolArgs, VerifyArgs, EXIT_BUDGET,
    EXIT_INFEASIBLE, EXIT_NOT_IN_ALGEBRA, EXIT_OK, EXIT_VERIFY,
};

/// stdout line that tolerates a closed pipe.
fn say(line: &str) {
    // the test harness only captures the print macros
    if cfg!(test) {
        println!("{line}");
    } else {
        let _ = writeln!(io::stdout().lock(), "{line}");
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

/// Tuple JSON, or a node spec to be built.
fn load_node(path: &Path) -> Result<RowTuple, Failure> {
    let text = read(path)?;
    if let Ok(t) = serde_json::from_str::<RowTupleJson>(&text) {
        return Ok(t.to_tuple()?);
    }
    match serde_json::from_str::<NodeSpec>(&text) {
        Ok(spec) => Ok(spec.build()?),
        Err(e) => Err(Failure::usage(format!("{}: neither tuple JSON nor node spec ({e})", path.display()))),
    }
}

fn load_target(path: &Path) -> Result<BlockTarget, Failure> {
    Ok(parse_target(&read(path)?)?)
}

fn load_matrix(path: &Path) -> Result<CMat, Failure> {
    let m: MatrixJson =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(m.to_matrix()?)
}

fn tolerances(t: &TolArgs) -> Result<Tolerances, Failure> {
    let tol = Tolerances { rank_tol: t.rank_tol, psd_tol: t.psd_tol, ..Tolerances::default() };
    tol.validate()?;
    Ok(tol)
}

/// Prints to stdout, or writes `out` plus its manifest.
fn emit(
    command: &str,
    args: &impl Serialize,
    seed: Option<u64>,
    started: u64,
    out: Option<&Path>,
    report: &impl Serialize,
) -> Result<(), Failure> {
    match out {
        None => {
            say(&serde_json::to_string_pretty(report).expect("reports serialize"));
            Ok(())
        }
        Some(path) => {
            write_json(path, report)?;
            RunManifest::new(command, args, seed, started).write(&manifest_path(path), &[path])
        }
    }
}

fn not_in_algebra_report(e: &Error) -> Option<Value> {
    match e {
        Error::NotInAlgebra(blocks) => Some(json!({ "feasible": false, "notInAlgebra": blocks })),
        _ => None,
    }
}

pub fn feasible(a: &FeasibleArgs) -> Result<u8, Failure> {
    let started = now_ms();
    let tol = tolerances(&a.tol)?;
    let x = load_node(&a.node)?;
    let y = load_target(&a.target)?;
    let b = pick_matrix(&x, tol)?;
    match feasibility(&b, &y, tol) {
        Ok(v) => {
            emit("feasible", a, None, started, a.out.as_deref(), &v)?;
            Ok(if v.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Err(e) => match not_in_algebra_report(&e) {
            Some(rep) => {
                emit("feasible", a, None, started, a.out.as_deref(), &rep)?;
                Ok(EXIT_NOT_IN_ALGEBRA)
            }
            None => Err(e.into()),
        },
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct NpReport {
    np_norm: f64,
    target_norm: f64,
    ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    preconditioned: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_np_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_gap: Option<f64>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum NpOutput {
    Plain(NpReport),
    Anp(AnpReport),
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AnpReport {
    anp_trace: AnpTrace,
    target_norm: f64,
    ratio: f64,
}

/// `C_n + t²/(n(1−t²)) I` after checking the node really is `t·(Choi point)`.
fn choi_closed_form(x: &RowTuple, t: f64) -> Result<CMat, Failure> {
    let n = x.n();
    if !(t > 0.0 && t < 1.0) {
        return Err(Failure::usage(format!("--choi-t {t} not in (0, 1)")));
    }
    let expected = choi_point(n)?.scaled(t);
    let matches = expected.d() == x.d()
        && expected.mats().iter().zip(x.mats()).all(|(p, q)| max_abs_diff(p, q) <= 1e-12);
    if !matches {
        return Err(Failure::usage(format!("node is not {t}·(Choi point of size {n})")));
    }
    Ok(choi_matrix(n) + identity(n * n) * r(t * t / (n as f64 * (1.0 - t * t))))
}

pub fn npnorm(a: &NpnormArgs) -> Result<u8, Failure> {
    let started = now_ms();
    let tol = tolerances(&a.tol)?;
    let x = load_node(&a.node)?;
    let y = load_target(&a.target)?;
    let result: Result<NpOutput, Error> = (|| {
        if a.anp {
            let trace = anp_norm(&x, &y, &a.t_grid, tol)?;
            let target_norm = y.norm();
            let ratio = trace.value / target_norm;
            return Ok(NpOutput::Anp(AnpReport { anp_trace: trace, target_norm, ratio }));
        }
        let b = pick_matrix(&x, tol)?;
        let (np, preconditioned) = match &a.precondition {
            Some(path) => {
                let d = load_matrix(path).map_err(|f| Error::InvalidArgument(f.message))?;
                (np_norm_preconditioned(&b, &y, &d)?, Some(true))
            }
            None => (np_norm(&b, &y)?, None),
        };
        let target_norm = y.norm();
        let mut rep = NpReport {
            np_norm: np,
            target_norm,
            ratio: np / target_norm,
            preconditioned,
            closed_form_np_norm: None,
            closed_form_gap: None,
        };
        if let Some(t) = a.choi_t {
            let p = choi_closed_form(&x, t).map_err(|f| Error::InvalidArgument(f.message))?;
            let closed = np_norm(&PickBundle::from_matrix(&x, p, tol)?, &y)?;
            rep.closed_form_np_norm = Some(closed);
            rep.closed_form_gap = Some((closed - np).abs());
        }
        Ok(NpOutput::Plain(rep))
    })();
    match result {
        Ok(rep) => {
            emit("npnorm", a, None, started, a.out.as_deref(), &rep)?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            if let Some(rep) = not_in_algebra_report(&e) {
                emit("npnorm", a, None, started, a.out.as_deref(), &rep)?;
            }
            Err(e.into())
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SearchReport {
    success: bool,
    trials_run: usize,
    max_ratio: f64,
    failures: usize,
    dominance_violations: usize,
    bound_violations: usize,
    best: Option<ncpick::search::SearchRecordJson>,
}

/// A search config, or the `config` of a manifest written by an earlier search.
fn load_search_config(path: &Path) -> Result<SearchConfig, Failure> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let cfg_value = match value.get("command") {
        Some(cmd) if cmd == "search" => value.get("config").cloned().unwrap_or(Value::Null),
        Some(other) => return Err(Failure::usage(format!("manifest is for command {other}, not search"))),
        None => value,
    };
    let cfg: SearchConfig =
        serde_json::from_value(cfg_value).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    w.write_record(CSV_HEADER).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(w)
}

fn csv_row(w: &mut csv::Writer<fs::File>, rec: &SearchRecord) -> Result<(), Failure> {
    w.write_record(rec.csv_fields()).map_err(|e| Failure::usage(e.to_string()))
}

pub fn search(a: &SearchArgs, jobs: Option<usize>) -> Result<u8, Failure> {
    let started = now_ms();
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::io(&a.out_dir, e))?;
    let csv_path = a.out_dir.join("search.csv");
    let best_path = a.out_dir.join("best.json");
    let manifest = a.out_dir.join("manifest.json");
    let outputs: [&Path; 2] = [&csv_path, &best_path];

    if a.deterministic {
        let (n, t) = match (a.n, a.t) {
            (Some(n), Some(t)) => (n, t),
            _ => return Err(Failure::usage("--deterministic needs --n and --t")),
        };
        let rec = deterministic_colrow(n, t)?;
        let mut w = csv_writer(&csv_path)?;
        csv_row(&mut w, &rec)?;
        w.flush().map_err(|e| Failure::io(&csv_path, e))?;
        let report = SearchReport {
            success: true,
            trials_run: 1,
            max_ratio: rec.ratio,
            failures: 0,
            dominance_violations: usize::from(!rec.dominance_ok()),
            bound_violations: usize::from(!rec.within_bound()),
            best: Some(rec.to_json()),
        };
        write_json(&best_path, &report)?;
        say(&format!("deterministic n={n} t={t}: ratio {} (sqrt(n) = {})", rec.ratio, (n as f64).sqrt()));
        let cfg = json!({ "deterministic": true, "n": n, "t": t });
        RunManifest::new("search", &cfg, None, started).write(&manifest, &outputs)?;
        return Ok(EXIT_OK);
    }

    let path = a.config.as_ref().expect("clap requires --config");
    let mut cfg = load_search_config(path)?;
    if cfg.trial_parallelism.is_none() {
        cfg.trial_parallelism = jobs;
    }
    let mut w = csv_writer(&csv_path)?;
    let mut write_err = None;
    let summary = random_search(&cfg, |outcome| match outcome {
        TrialOutcome::Record(rec) => {
            if write_err.is_none() {
                write_err = csv_row(&mut w, rec).err();
            }
        }
        TrialOutcome::Failed(f) => eprintln!("trial {} (seed {}) skipped: {}", f.trial_index, f.seed, f.message),
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    w.flush().map_err(|e| Failure::io(&csv_path, e))?;
    let report = SearchReport {
        success: summary.success,
        trials_run: summary.trials_run,
        max_ratio: summary.max_ratio(),
        failures: summary.failures,
        dominance_violations: summary.dominance_violations,
        bound_violations: summary.bound_violations,
        best: summary.best.as_ref().map(SearchRecord::to_json),
    };
    write_json(&best_path, &report)?;
    if summary.dominance_violations > 0 || summary.bound_violations > 0 {
        eprintln!(
            "warning: {} records with row < column, {} above sqrt(m)",
            summary.dominance_violations, summary.bound_violations
        );
    }
    say(&format!(
        "{} after {} trials; max ratio {} (gamma {})",
        if summary.success { "success" } else { "budget exhausted" },
        summary.trials_run,
        summary.max_ratio(),
        cfg.gamma
    ));
    RunManifest::new("search", &cfg, Some(cfg.seed), started).write(&manifest, &outputs)?;
    Ok(if summary.success { EXIT_OK } else { EXIT_BUDGET })
}

pub fn verify(a: &VerifyArgs) -> Result<u8, Failure> {
    let started = now_ms();
    let opts = VerifyOptions { level: a.level.parse()?, seed: a.seed, corrupt_psi: a.corrupt_psi };
    let report = run_verify(opts);
    say(report.table().trim_end());
    if let Some(path) = &a.out {
        write_json(path, &report)?;
        RunManifest::new("verify", a, Some(a.seed), started).write(&manifest_path(path), &[path])?;
    }
    if report.passed {
        Ok(EXIT_OK)
    } else {
        eprintln!("failing suites: {}", report.failing().join(", "));
        Ok(EXIT_VERIFY)
    }
}

pub fn examples(a: &ExamplesArgs) -> Result<u8, Failure> {
    let started = now_ms();
    let kind: NodeKind = a.kind.parse()?;
    let weights = match &a.weights {
        Some(text) => Some(serde_json::from_str(text).map_err(|e| Failure::usage(format!("--weights: {e}")))?),
        None => None,
    };
    let spec = NodeSpec { kind, n: a.n, d: a.d, weights, epsilon: a.epsilon, seed: a.seed };
    let x = spec.build()?;
    emit("examples", &spec, a.seed, started, a.out.as_deref(), &RowTupleJson::from_tuple(&x))?;
    Ok(EXIT_OK)
}

pub fn alg_member(a: &AlgMemberArgs) -> Result<u8, Failure> {
    let started = now_ms();
    let tol = tolerances(&a.tol)?;
    let x = load_node(&a.node)?;
    let z = load_matrix(&a.matrix)?;
    let m = membership(&z, &pick_matrix(&x, tol)?, tol)?;
    emit("alg-member", a, None, started, a.out.as_deref(), &m)?;
    Ok(if m.member { EXIT_OK } else { EXIT_NOT_IN_ALGEBRA })
}
