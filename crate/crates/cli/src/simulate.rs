//! `blockmt simulate`: grids of Monte Carlo cells written as CSV.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use blockmt::{run_mc, Estimate, Method, SimConfig, SimReport};

use crate::args::{GlobalArgs, Preset, SimulateArgs, DEFAULT_ALPHA};
use crate::commands::open_output;
use crate::error::{CliError, CliResult};
use crate::format::machine;

pub const CSV_HEADER: [&str; 15] = [
    "method", "n", "n0", "s", "lambda", "rho", "alpha", "reps", "seed", "fdr", "fdr_se", "fwer",
    "fwer_se", "power", "power_se",
];

/// `0, 0.1, ..., 0.9`.
pub fn rho_grid() -> Vec<f64> {
    (0..10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub n0: usize,
    pub block_sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub d: f64,
}

impl Grid {
    pub fn preset(p: Preset) -> Self {
        let base = |n, n0, block_sizes, methods| Grid {
            n,
            n0,
            block_sizes,
            lambdas: vec![0.2, 0.5, 0.8],
            rhos: rho_grid(),
            methods,
            reps: SimConfig::DEFAULT_REPS,
            seed: crate::args::DEFAULT_SEED,
            alpha: DEFAULT_ALPHA,
            d: SimConfig::default_d(),
        };
        match p {
            Preset::FdrFigures => base(
                240,
                120,
                vec![2, 3, 4, 6],
                vec![Method::Bh, Method::AdBh1, Method::AdBh2, Method::AdBh3],
            ),
            Preset::FwerFigures => base(
                100,
                50,
                vec![2, 4, 10, 20],
                vec![Method::Bonf, Method::AdBon1, Method::AdBon2],
            ),
        }
    }

    /// Cells in output order: block size, then lambda, then rho.
    pub fn cells(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &s in &self.block_sizes {
            for &lambda in &self.lambdas {
                for &rho in &self.rhos {
                    let mut c = SimConfig::new(self.n, self.n0, s, rho, lambda, self.methods.clone());
                    c.reps = self.reps;
                    c.seed = self.seed;
                    c.alpha = self.alpha;
                    c.d = self.d;
                    out.push(c);
                }
            }
        }
        out
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.block_sizes.is_empty() || self.lambdas.is_empty() || self.rhos.is_empty() {
            return Err(CliError::parameter("grid has an empty axis"));
        }
        for c in self.cells() {
            c.validate()?;
        }
        Ok(())
    }

    /// Applies one `key=value` setting.
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn one<T: FromStr>(v: &str) -> Result<T, String> {
            v.trim().parse().map_err(|_| format!("invalid value {v:?}"))
        }
        fn list<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
            v.split(',').map(one).collect()
        }
        match key {
            "n" => self.n = one(value)?,
            "n0" => self.n0 = one(value)?,
            "s" | "block_sizes" => self.block_sizes = list(value)?,
            "lambda" | "lambdas" => self.lambdas = list(value)?,
            "rho" | "rhos" => self.rhos = list(value)?,
            "methods" => self.methods = list(value)?,
            "reps" => self.reps = one(value)?,
            "seed" => self.seed = one(value)?,
            "alpha" => self.alpha = one(value)?,
            "d" => self.d = one(value)?,
            "preset" => {
                let p = match value.trim() {
                    "fdr-figures" => Preset::FdrFigures,
                    "fwer-figures" => Preset::FwerFigures,
                    other => return Err(format!("unknown preset {other:?}")),
                };
                *self = Grid::preset(p);
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies a `key=value` file; blank lines and `#` comments are ignored.
    pub fn apply_config(&mut self, text: &str) -> CliResult<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("line {}: expected key=value", k + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::parameter(format!("line {}: {e}", k + 1)))?;
        }
        Ok(())
    }
}

/// Builds the grid from preset, config file, then flags, later sources
/// overriding earlier ones. Without a preset the FDR grid is the base.
pub fn build_grid(global: &GlobalArgs, args: &SimulateArgs) -> CliResult<Grid> {
    let mut g = Grid::preset(args.preset.unwrap_or(Preset::FdrFigures));
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        g.apply_config(&text)?;
    }
    if let Some(v) = args.n {
        g.n = v;
    }
    if let Some(v) = args.n0 {
        g.n0 = v;
    }
    if let Some(v) = &args.block_sizes {
        g.block_sizes = v.clone();
    }
    if let Some(l) = global.lambda {
        g.lambdas = vec![l];
    }
    if let Some(v) = &args.lambdas {
        g.lambdas = v.clone();
    }
    if let Some(v) = &args.rhos {
        g.rhos = v.clone();
    }
    if let Some(v) = &args.methods {
        g.methods = v
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = args.reps {
        g.reps = v;
    }
    if let Some(v) = args.d {
        g.d = v;
    }
    if let Some(v) = global.seed {
        g.seed = v;
    }
    if let Some(v) = global.alpha {
        g.alpha = v;
    }
    g.validate()?;
    Ok(g)
}

pub fn run_grid(grid: &Grid) -> CliResult<Vec<SimReport>> {
    grid.cells()
        .iter()
        .map(|c| run_mc(c).map_err(CliError::from))
        .collect()
}

fn se_field(e: &Estimate) -> String {
    e.se.map(machine).unwrap_or_default()
}

pub fn write_csv(out: &mut dyn Write, reports: &[SimReport]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| CliError::input(format!("writing output: {e}"));
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in reports {
        let c = &r.config;
        for m in &r.summaries {
            let (power, power_se) = match &m.power {
                Some(p) => (machine(p.mean), se_field(p)),
                None => (String::new(), String::new()),
            };
            w.write_record([
                m.method.name().to_string(),
                c.n.to_string(),
                c.n0.to_string(),
                c.s.to_string(),
                machine(c.lambda),
                machine(c.rho),
                machine(c.alpha),
                c.reps.to_string(),
                c.seed.to_string(),
                machine(m.fdr.mean),
                se_field(&m.fdr),
                machine(m.fwer.mean),
                se_field(&m.fwer),
                power,
                power_se,
            ])
            .map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> CliResult<T> + Send,
) -> CliResult<T> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::parameter("--threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::parameter(format!("cannot start thread pool: {e}")))?
            .install(f),
    }
}

pub fn cmd_simulate(global: &GlobalArgs, args: &SimulateArgs) -> CliResult<()> {
    let grid = build_grid(global, args)?;
    let reports = with_threads(global.threads, || run_grid(&grid))?;
    let mut out = open_output(global.output.as_deref())?;
    write_csv(&mut out, &reports)?;
    out.flush()?;
    Ok(())
}

/// Reads the CSV written by [`write_csv`] into string records keyed by
/// header, for tests and downstream checks.
pub fn read_csv(path: &Path) -> CliResult<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    r.records()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::input(e.to_string()))
}
