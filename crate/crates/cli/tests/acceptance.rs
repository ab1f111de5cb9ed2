//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use blockmt::Method;
use blockmt_cli::args::Preset;
use blockmt_cli::checks::{self, CheckResult};
use blockmt_cli::simulate::{read_csv, rho_grid, run_grid, Grid, CSV_HEADER};

const SEED: u64 = 42;
const REPS: usize = 2000;

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

impl Line {
    fn print(&self) {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {}: {}", self.id, self.title, self.detail);
    }
}

fn combine(results: &[CheckResult]) -> (bool, String) {
    let passed = results.iter().all(|r| r.passed);
    let detail = results
        .iter()
        .map(|r| format!("{}: {}", r.name, r.detail))
        .collect::<Vec<_>>()
        .join("; ");
    (passed, detail)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

fn oracle() -> Line {
    let (res, secs) = timed(|| checks::oracle_checks(1000, SEED).expect("oracle run"));
    let (ok, detail) = combine(&res);
    Line {
        id: 1,
        title: "oracle equivalence",
        passed: ok && secs < 10.0,
        detail: format!("{detail}; {secs:.2}s (limit 10s)"),
    }
}

fn certification() -> Line {
    let (res, secs) = timed(|| checks::property1_check(12, 4).expect("certification run"));
    Line {
        id: 2,
        title: "exact certification at and above threshold",
        passed: res.passed && secs < 30.0,
        detail: format!("{}; {secs:.2}s (limit 30s)", res.detail),
    }
}

fn identities() -> Line {
    let res = vec![
        checks::identity_check().expect("identity"),
        checks::lemma1_check(1000, SEED).expect("rearrangement"),
        checks::lemma2_check().expect("monotonicity"),
    ];
    let (passed, detail) = combine(&res);
    Line {
        id: 3,
        title: "exact identities",
        passed,
        detail,
    }
}

fn reductions() -> Line {
    let (passed, detail) = combine(&checks::reduction_checks(1000, SEED).expect("reductions"));
    Line {
        id: 4,
        title: "reductions",
        passed,
        detail,
    }
}

/// One parsed CSV row.
#[derive(Debug, Clone)]
struct Row {
    method: String,
    s: usize,
    lambda: f64,
    rho: f64,
    fdr: f64,
    fdr_se: f64,
    fwer: f64,
    fwer_se: f64,
    power: f64,
    power_se: f64,
}

fn parse_rows(path: &Path) -> Vec<Row> {
    let col: HashMap<&str, usize> = CSV_HEADER.iter().enumerate().map(|(i, h)| (*h, i)).collect();
    read_csv(path)
        .expect("read csv")
        .iter()
        .map(|r| {
            let f = |k: &str| -> f64 { r[col[k]].parse().unwrap_or(f64::NAN) };
            Row {
                method: r[col["method"]].to_string(),
                s: r[col["s"]].parse().unwrap(),
                lambda: f("lambda"),
                rho: f("rho"),
                fdr: f("fdr"),
                fdr_se: f("fdr_se"),
                fwer: f("fwer"),
                fwer_se: f("fwer_se"),
                power: f("power"),
                power_se: f("power_se"),
            }
        })
        .collect()
}

fn grid_rows(grid: &Grid) -> Vec<Row> {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("grid.csv");
    let reports = run_grid(grid).expect("simulation grid");
    let mut f = std::fs::File::create(&path).expect("create csv");
    blockmt_cli::simulate::write_csv(&mut f, &reports).expect("write csv");
    drop(f);
    parse_rows(&path)
}

fn base_grid(preset: Preset) -> Grid {
    let mut g = Grid::preset(preset);
    g.reps = REPS;
    g.seed = SEED;
    g
}

/// Largest `value - bound` over rows; non-positive means every row passed.
fn worst_excess<'a>(
    rows: impl Iterator<Item = &'a Row>,
    value: impl Fn(&Row) -> f64,
    bound: impl Fn(&Row) -> f64,
) -> (f64, usize, Option<Row>) {
    let mut worst = (f64::NEG_INFINITY, 0, None);
    for r in rows {
        worst.1 += 1;
        let ex = value(r) - bound(r);
        if ex > worst.0 {
            worst.0 = ex;
            worst.2 = Some(r.clone());
        }
    }
    worst
}

fn describe(row: &Option<Row>) -> String {
    row.as_ref().map_or("-".into(), |r| {
        format!("s={} lambda={} rho={}", r.s, r.lambda, r.rho)
    })
}

fn adaptive_bonferroni_fwer() -> Line {
    let mut g = base_grid(Preset::FwerFigures);
    g.block_sizes = vec![10, 20];
    g.lambdas = vec![0.8];
    g.methods = vec![Method::AdBon2];
    let rows = grid_rows(&g);
    let (ex, count, at) =
        worst_excess(rows.iter(), |r| r.fwer, |r| g.alpha + 3.0 * r.fwer_se);
    let max_fwer = rows.iter().map(|r| r.fwer).fold(0.0, f64::max);
    Line {
        id: 5,
        title: "adBon2 FWER <= alpha + 3se",
        passed: count == 20 && ex <= 0.0,
        detail: format!(
            "{count} cells, max fwer {max_fwer:.4}, worst margin {:.4} at {}",
            -ex,
            describe(&at)
        ),
    }
}

fn two_stage_fdr() -> Line {
    let mut g = base_grid(Preset::FdrFigures);
    g.lambdas = vec![0.5];
    g.methods = vec![Method::TsBh];
    let rows = grid_rows(&g);
    let pi0_alpha = g.alpha * g.n0 as f64 / g.n as f64;
    let (ex, count, at) = worst_excess(rows.iter(), |r| r.fdr, |r| pi0_alpha + 3.0 * r.fdr_se);
    let max_fdr = rows.iter().map(|r| r.fdr).fold(0.0, f64::max);
    Line {
        id: 6,
        title: "tsBH FDR <= pi0*alpha + 3se",
        passed: count == 40 && ex <= 0.0,
        detail: format!(
            "{count} cells, max fdr {max_fdr:.4}, worst margin {:.4} at {}",
            -ex,
            describe(&at)
        ),
    }
}

fn adaptive_bh_fdr(rows: &[Row]) -> Line {
    let panel: Vec<&Row> = rows.iter().filter(|r| r.method == "adBH2").collect();
    let (ex, count, at) =
        worst_excess(panel.iter().copied(), |r| r.fdr, |r| 0.05 + 3.0 * r.fdr_se);
    let mut spread_fail = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for &s in &[2, 3, 4, 6] {
        for &lambda in &[0.2, 0.5, 0.8] {
            let cells: Vec<&&Row> = panel.iter().filter(|r| r.s == s && r.lambda == lambda).collect();
            let hi = cells.iter().map(|r| r.fdr).fold(f64::NEG_INFINITY, f64::max);
            let lo = cells.iter().map(|r| r.fdr).fold(f64::INFINITY, f64::min);
            let se = cells.iter().map(|r| r.fdr_se).fold(0.0, f64::max);
            worst_ratio = worst_ratio.max((hi - lo) / se);
            if cells.len() != rho_grid().len() || hi - lo > 6.0 * se {
                spread_fail.push(format!("s={s} lambda={lambda}: spread {:.4} se {se:.4}", hi - lo));
            }
        }
    }
    Line {
        id: 7,
        title: "adBH2 FDR <= alpha + 3se, flat in rho",
        passed: count == 120 && ex <= 0.0 && spread_fail.is_empty(),
        detail: format!(
            "{count} cells, worst margin {:.4} at {}; max spread/se {worst_ratio:.2} (limit 6){}",
            -ex,
            describe(&at),
            if spread_fail.is_empty() {
                String::new()
            } else {
                format!("; failing panels: {}", spread_fail.join(", "))
            }
        ),
    }
}

fn adaptive_power(rows: &[Row]) -> Line {
    let mut checked = 0;
    let mut fails = Vec::new();
    let mut worst = f64::INFINITY;
    for bh in rows.iter().filter(|r| r.method == "BH" && r.s == 2) {
        let ad = rows
            .iter()
            .find(|r| r.method == "adBH2" && r.s == 2 && r.lambda == bh.lambda && r.rho == bh.rho)
            .expect("matching adBH2 row");
        checked += 1;
        let se = ad.power_se.max(bh.power_se);
        let margin = ad.power - (bh.power - 2.0 * se);
        worst = worst.min(margin);
        if margin < 0.0 {
            fails.push(describe(&Some(bh.clone())));
        }
    }
    Line {
        id: 8,
        title: "adBH2 power >= BH power - 2se at s=2",
        passed: checked == 30 && fails.is_empty(),
        detail: format!("{checked} cells, worst margin {worst:.4}{}", if fails.is_empty() {
            String::new()
        } else {
            format!("; failing: {}", fails.join(", "))
        }),
    }
}

fn independent_bh() -> Line {
    let mut g = base_grid(Preset::FdrFigures);
    g.block_sizes = vec![1];
    g.lambdas = vec![0.5];
    g.rhos = vec![0.0];
    g.methods = vec![Method::Bh];
    let rows = grid_rows(&g);
    let r = &rows[0];
    let target = g.alpha * g.n0 as f64 / g.n as f64;
    Line {
        id: 9,
        title: "BH under independence: FDR = pi0*alpha +- 3se",
        passed: (r.fdr - target).abs() <= 3.0 * r.fdr_se,
        detail: format!(
            "fdr {:.5} target {target} se {:.5} ({:.2} se away)",
            r.fdr,
            r.fdr_se,
            (r.fdr - target).abs() / r.fdr_se
        ),
    }
}

fn preset_run(out: &Path) -> (bool, f64) {
    let (status, secs) = timed(|| {
        Command::new(env!("CARGO_BIN_EXE_blockmt"))
            .env_remove("BLOCKMT_SEED")
            .args(["simulate", "--preset", "fdr-figures", "--seed", "42", "--output"])
            .arg(out)
            .status()
            .expect("spawn blockmt")
    });
    (status.success(), secs)
}

fn main() -> ExitCode {
    let mut lines = Vec::new();
    let mut report = |line: Line| {
        line.print();
        lines.push(line.passed);
    };

    report(oracle());
    report(certification());
    report(identities());
    report(reductions());
    report(adaptive_bonferroni_fwer());
    report(two_stage_fdr());

    let dir = tempfile::tempdir().expect("tempdir");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let (ok_a, secs_a) = preset_run(&a);
    let (ok_b, secs_b) = preset_run(&b);
    let rows = if ok_a { parse_rows(&a) } else { Vec::new() };

    report(adaptive_bh_fdr(&rows));
    report(adaptive_power(&rows));
    report(independent_bh());

    let same = ok_a && ok_b && std::fs::read(&a).ok() == std::fs::read(&b).ok();
    let n_rows = rows.len();
    report(Line {
        id: 10,
        title: "determinism of simulate --preset fdr-figures --seed 42",
        passed: same && n_rows == 480,
        detail: format!(
            "{n_rows} rows, byte-identical: {same}, runs {secs_a:.1}s and {secs_b:.1}s"
        ),
    });

    let failed = lines.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
