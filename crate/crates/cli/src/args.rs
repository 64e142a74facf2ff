//! Flag definitions, the flat `key = value` config file, and value parsers.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sketchlab::ensembles::{default_rect_alpha, InstanceKind, SpikeParams, DEFAULT_ALPHA_CONSTANT};

#[derive(Debug, Parser, Serialize)]
#[command(name = "sketchlab", version, about = "Sketching lower-bound experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Trials per grid cell; each command has its own default.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "SKETCHLAB_OUT_DIR", default_value = "sketchlab-out")]
    pub out_dir: PathBuf,
    /// Flat `key = value` file with flag names as keys; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact bilinear Gaussian MGF against Monte Carlo on random contractions.
    VerifyLemma(LemmaArgs),
    /// Mean of the sketched shift norm ξ against k‖s‖².
    Xi(GridArgs),
    /// Conditioned χ² estimate and the closed-form TV bounds.
    Chi2(GridArgs),
    /// Advantage curve of a detection test over a k grid.
    Detect(DetectArgs),
    /// Advantage curve labelled by regime of k‖s‖⁴.
    Sweep(SweepArgs),
    /// Norm gap between the null and spiked ensembles of a preset instance.
    Gap(InstanceArgs),
    /// Write a random orthonormal sketch in the binary dump format.
    DumpSketch(DumpArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyLemma(_) => "verify-lemma",
            Command::Xi(_) => "xi",
            Command::Chi2(_) => "chi2",
            Command::Detect(_) => "detect",
            Command::Sweep(_) => "sweep",
            Command::Gap(_) => "gap",
            Command::DumpSketch(_) => "dump-sketch",
        }
    }
}

pub const SUBCOMMANDS: [&str; 7] = ["verify-lemma", "xi", "chi2", "detect", "sweep", "gap", "dump-sketch"];

#[derive(Debug, Args, Serialize)]
pub struct LemmaArgs {
    /// Matrix shapes, e.g. `1x1,2x3,4x4`.
    #[arg(long, value_delimiter = ',', value_parser = parse_dims, default_value = "1x1,2x3,4x4,8x8")]
    pub dims: Vec<(usize, usize)>,
    /// Frobenius norms the random matrices are scaled to.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.6,0.9")]
    pub frobenius_cap: Vec<f64>,
    /// Monte Carlo samples per matrix.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Random matrices per (shape, norm) cell.
    #[arg(long, default_value_t = 50)]
    pub matrices: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, value_parser = parse_k_grid, default_value = "1,16,256")]
    pub k_grid: KGrid,
    /// Spike ranks.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub r: Vec<usize>,
    /// Values of ‖s‖², split evenly over the rank.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub norm_sq: Vec<f64>,
    /// Explicit spike magnitudes; replaces `--r` and `--norm-sq`.
    #[arg(long, value_delimiter = ',')]
    pub spike: Option<Vec<f64>>,
    /// Matrix shape `MxN`.
    #[arg(long, value_parser = parse_dims, default_value = "32x32")]
    pub dims: (usize, usize),
    /// Values of c for the total variation bound table.
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.05")]
    pub c_grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KGrid(pub Vec<usize>);

#[derive(Debug, Args, Serialize)]
pub struct InstanceArgs {
    /// Preset: alpha-operator, schatten-p, eps-operator-rect or kyfan.
    #[arg(long)]
    pub instance: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Constant in the alpha-operator spike magnitude `C·α/√n`.
    #[arg(long)]
    pub constant: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Ky-Fan order.
    #[arg(long)]
    pub s: Option<usize>,
    /// Accept Ky-Fan orders outside the provable regime.
    #[arg(long)]
    pub allow_outside_regime: bool,
    /// Spike rank for raw (non-preset) runs.
    #[arg(long)]
    pub r: Option<usize>,
    /// ‖s‖² for raw runs, split evenly over the rank.
    #[arg(long)]
    pub norm_sq: Option<f64>,
    /// Explicit spike magnitudes for raw runs.
    #[arg(long, value_delimiter = ',')]
    pub spike: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Comma list, or `logspace:LO:HI:COUNT` for COUNT geometrically spaced k from LO to HI.
    #[arg(long, value_parser = parse_k_grid, default_value = "1,10,100")]
    pub k_grid: KGrid,
    /// norm-squared-threshold or mean-shift-projection.
    #[arg(long, default_value = "norm-squared-threshold")]
    pub statistic: String,
    /// Draw a fresh sketch per trial instead of per k.
    #[arg(long)]
    pub resample_per_trial: bool,
    /// Trials per side for the instance gap check (0 skips it).
    #[arg(long, default_value_t = 100)]
    pub gap_trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub detect: DetectArgs,
    /// k‖s‖⁴ at or below which a point is sub-critical.
    #[arg(long, default_value_t = 0.01)]
    pub sub_level: f64,
    /// k‖s‖⁴ at or above which a point is super-critical.
    #[arg(long, default_value_t = 100.0)]
    pub super_level: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DumpArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "sketch.bin")]
    pub file: String,
}

pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected MxN, got {s:?}"))?;
    let m: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let n: usize = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if m == 0 || n == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((m, n))
}

pub fn parse_k_grid(s: &str) -> Result<KGrid, String> {
    let grid: Vec<usize> = if let Some(rest) = s.strip_prefix("logspace:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(format!("expected logspace:LO:HI:COUNT, got {s:?}"));
        };
        let lo: f64 = lo.parse().map_err(|e| format!("{lo:?}: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("{hi:?}: {e}"))?;
        let count: usize = count.parse().map_err(|e| format!("{count:?}: {e}"))?;
        if !(lo >= 1.0 && hi >= lo) || count == 0 {
            return Err("logspace needs 1 ≤ LO ≤ HI and COUNT ≥ 1".into());
        }
        let mut v: Vec<usize> = (0..count)
            .map(|i| {
                let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
                (lo.ln() + t * (hi.ln() - lo.ln())).exp().round() as usize
            })
            .collect();
        v.dedup();
        v
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() || grid.contains(&0) {
        return Err("k values must be positive".into());
    }
    Ok(KGrid(grid))
}

/// Parses the flat config file into `(flag, value)` pairs; `true` marks a bare switch.
pub fn config_entries(path: &PathBuf) -> Result<Vec<(String, Option<String>)>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), no + 1))?;
        let key = key.trim().trim_start_matches("--").to_owned();
        if key == "config" {
            return Err(format!("{}:{}: nested config files are not supported", path.display(), no + 1));
        }
        match value.trim() {
            "true" => out.push((key, None)),
            "false" => {}
            v => out.push((key, Some(v.to_owned()))),
        }
    }
    Ok(out)
}

/// Inserts config-file arguments after the subcommand, skipping any flag given explicitly.
pub fn merge_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let path = argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_owned)
        }
    });
    let Some(path) = path else {
        return Ok(argv);
    };
    let entries = config_entries(&PathBuf::from(path))?;
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let explicit: Vec<&str> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split_once('=').map_or(a, |(k, _)| k))
        .collect();
    let mut out = argv[..=pos].to_vec();
    for (key, value) in entries {
        if explicit.contains(&key.as_str()) {
            continue;
        }
        out.push(format!("--{key}"));
        out.extend(value);
    }
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

impl InstanceArgs {
    /// The preset named by `--instance`, with per-preset defaults for missing parameters.
    pub fn kind(&self) -> Result<Option<InstanceKind>, String> {
        let Some(name) = self.instance.as_deref() else {
            return Ok(None);
        };
        let kind = match name {
            "alpha-operator" => InstanceKind::AlphaOperator {
                n: self.n.unwrap_or(256),
                alpha: self.alpha.unwrap_or(4.0),
                constant: self.constant.unwrap_or(DEFAULT_ALPHA_CONSTANT),
            },
            "schatten-p" => InstanceKind::SchattenP {
                n: self.n.unwrap_or(64),
                p: self.p.unwrap_or(4.0),
            },
            "eps-operator-rect" => InstanceKind::EpsOperatorRect {
                d: self.d.unwrap_or(64),
                eps: self.eps.unwrap_or(0.25),
                alpha: self.alpha.unwrap_or_else(default_rect_alpha),
            },
            "kyfan" => InstanceKind::KyFan {
                n: self.n.unwrap_or(256),
                s: self.s.unwrap_or(1),
                allow_outside_regime: self.allow_outside_regime,
            },
            other => return Err(format!("unknown instance {other:?}")),
        };
        Ok(Some(kind))
    }

    /// Dimensions and spike for runs without a preset.
    pub fn raw(&self) -> Result<(usize, usize, SpikeParams), String> {
        let n = self.n.unwrap_or(32);
        let m = self.m.unwrap_or(n);
        let spike = match &self.spike {
            Some(s) => SpikeParams::new(s.clone()),
            None => SpikeParams::uniform(self.r.unwrap_or(1), self.norm_sq.unwrap_or(0.1)),
        }
        .map_err(|e| e.to_string())?;
        Ok((m, n, spike))
    }
}
