//! Command-line front end. Every run writes its report to stdout (or
//! `--output`) and a run manifest to stderr (or `--manifest`).

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverings::{certify_non_sliding, perfect_coverings, CoveringFamily};
use crate::enumeration::{canonical_counts_with, partition_function_marked, Budget, FugacityMap};
use crate::error::{invalid, Error, Result};
use crate::gfc::{bulk_c_k, bz_certificate, enumerate_gfcs, truncated_cluster_log, verify_gfc_identity, BzParams, HoleCache};
use crate::lattice::{ModelSpec, Site};
use crate::leeyang::{find_zeros, verify_zero_identities};
use crate::ratio::{parse_rational, rational_string};
use crate::region::{Region, RegionFile, Window};
use crate::series::{gaunt_fisher_coefficients, region_series, stabilization_report, SeriesKind};

/// Default search bound for perfect coverings.
pub const DEFAULT_PERIOD_BOUND: usize = 12;

#[derive(Parser, Debug)]
#[command(name = "latgas", version, about = "Exact workbench for hard-core lattice gases")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cap on live transfer states and enumerated configurations
    /// (overrides LATGAS_BUDGET).
    #[arg(long, global = true)]
    pub max_states: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Write the run manifest here instead of stderr.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// Built-in model name or path to a JSON model file.
    #[arg(long)]
    pub model: String,
    /// Largest torus period searched for perfect coverings.
    #[arg(long, default_value_t = DEFAULT_PERIOD_BOUND)]
    pub period_bound: usize,
}

#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct RegionArgs {
    /// Periodic box, e.g. `6x6`.
    #[arg(long)]
    pub torus: Option<String>,
    /// Ring of length L (1-D torus).
    #[arg(long)]
    pub ring: Option<i32>,
    /// Box window tiled by covering `--tiling` (default: `--nu` or 1).
    #[arg(long)]
    pub window: Option<String>,
    /// Boundary phase label of a window (1-based).
    #[arg(long)]
    pub nu: Option<usize>,
    /// Covering that tiles a box window (1-based).
    #[arg(long)]
    pub tiling: Option<usize>,
    /// JSON region file: `{"torus": [..]}` or `{"window": {...}}`.
    #[arg(long)]
    pub region_file: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    /// Low-fugacity coefficients b_k.
    #[value(alias = "b")]
    Mayer,
    /// High-fugacity coefficients c_k.
    #[value(alias = "c")]
    Gf,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Perfect coverings and their symmetry maps.
    Coverings {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Bounded non-sliding certificate.
    CheckSliding {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 3)]
        max_particles: usize,
    },
    /// Partition polynomial, or its value at `--z`.
    Partition {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long)]
        z: Option<String>,
        /// JSON `{"uniform": "p/q", "overrides": [{"site": [..], "z": "p/q"}]}`.
        #[arg(long)]
        fugacity_file: Option<PathBuf>,
    },
    /// Series coefficients over a family of regions with stabilization verdicts.
    Series {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Comma-separated ring lengths.
        #[arg(long, value_delimiter = ',')]
        rings: Vec<i32>,
        /// Comma-separated torus extents, e.g. `4x4,6x6`.
        #[arg(long, value_delimiter = ',')]
        tori: Vec<String>,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Number of perfect coverings (default: computed).
        #[arg(long)]
        tau: Option<usize>,
    },
    /// Lee-Yang zeros as CSV, with identity checks in the manifest.
    Zeros {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long, default_value_t = 30)]
        digits: u32,
        #[arg(long)]
        tau: Option<usize>,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Exact check of the GFc expansion of a window partition function.
    GfcVerify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        region: RegionArgs,
        /// Comma-separated exact fugacities.
        #[arg(long, value_delimiter = ',', default_value = "3")]
        z: Vec<String>,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Truncated cluster expansion on a window, or bulk c_k.
    ClusterPressure {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long, default_value = "100")]
        z: String,
        #[arg(long, default_value_t = 3)]
        max_cluster: usize,
        /// Compute bulk per-site coefficients up to this order instead.
        #[arg(long)]
        bulk_order: Option<usize>,
    },
    /// Cutoff-bounded convergence certificate.
    BzCertificate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        z: String,
        #[arg(long, default_value_t = 1)]
        nu: usize,
        #[arg(long, default_value_t = 0.25)]
        theta: f64,
        #[arg(long, default_value_t = 0.25)]
        xi: f64,
        #[arg(long, default_value_t = 1.0)]
        varsigma: f64,
        #[arg(long, default_value_t = 20)]
        cutoff: usize,
    },
}

/// Reproducibility record of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub model: Option<String>,
    pub region: Option<String>,
    pub parameters: serde_json::Value,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    pub output_sha256: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

/// Report text, exit status and optional manifest details.
struct Outcome {
    text: String,
    code: i32,
    details: Option<serde_json::Value>,
}

impl Outcome {
    fn json(value: &serde_json::Value, pass: bool) -> Result<Outcome> {
        Ok(Outcome {
            text: serde_json::to_string_pretty(value)? + "\n",
            code: if pass { 0 } else { 4 },
            details: None,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FugacityFile {
    uniform: String,
    #[serde(default)]
    overrides: Vec<FugacityOverride>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FugacityOverride {
    site: Vec<i32>,
    z: String,
}

fn parse_extents(text: &str) -> Result<Vec<i32>> {
    text.split('x')
        .map(|p| p.trim().parse::<i32>().map_err(|_| Error::Validation(format!("'{text}': expected extents like 6x6"))))
        .collect()
}

fn load_family(model: &ModelSpec, args: &ModelArgs) -> Result<CoveringFamily> {
    perfect_coverings(model, args.period_bound)
}

impl RegionArgs {
    fn spec(&self) -> Result<RegionFile> {
        let given = [self.torus.is_some(), self.ring.is_some(), self.window.is_some(), self.region_file.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return invalid("exactly one of --torus, --ring, --window and --region-file is required");
        }
        if let Some(t) = &self.torus {
            return Ok(RegionFile::Torus(parse_extents(t)?));
        }
        if let Some(l) = self.ring {
            return Ok(RegionFile::Torus(vec![l]));
        }
        if let Some(w) = &self.window {
            return Ok(RegionFile::Window(crate::region::WindowFile {
                box_extents: Some(parse_extents(w)?),
                sites: None,
                tiling: self.tiling,
                nu: self.nu,
            }));
        }
        let path = self.region_file.as_ref().expect("checked above");
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn build(&self, model: &ModelSpec, margs: &ModelArgs) -> Result<(Region, Option<CoveringFamily>)> {
        let spec = self.spec()?;
        let family = match spec {
            RegionFile::Window(_) => Some(load_family(model, margs)?),
            RegionFile::Torus(_) => None,
        };
        Ok((spec.build(model, family.as_ref())?, family))
    }
}

fn window_of(region: &Region) -> Result<&Window> {
    match region {
        Region::Window(w) if w.boundary().is_some() => Ok(w),
        _ => invalid("this command needs a window with a phase boundary (--window AxB --nu N)"),
    }
}

fn run_command(cli: &Cli, budget: &Budget) -> Result<Outcome> {
    match &cli.command {
        Command::Coverings { model: margs } => {
            let model = ModelSpec::load(&margs.model)?;
            let family = load_family(&model, margs)?;
            Outcome::json(&family.to_json(&model), true)
        }
        Command::CheckSliding { model: margs, max_particles } => {
            let model = ModelSpec::load(&margs.model)?;
            let family = load_family(&model, margs)?;
            let cert = certify_non_sliding(&model, &family, *max_particles)?;
            Outcome::json(&serde_json::to_value(&cert)?, cert.passed)
        }
        Command::Partition {
            model: margs,
            region,
            z,
            fugacity_file,
        } => {
            let model = ModelSpec::load(&margs.model)?;
            let (region, _) = region.build(&model, margs)?;
            let fug = match (z, fugacity_file) {
                (Some(_), Some(_)) => return invalid("give at most one of --z and --fugacity-file"),
                (Some(z), None) => Some(FugacityMap::uniform(parse_rational(z)?)),
                (None, Some(path)) => {
                    let file: FugacityFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                    let mut fug = FugacityMap::uniform(parse_rational(&file.uniform)?);
                    for o in file.overrides {
                        if o.site.len() != model.dim() {
                            return invalid(format!("overrides.site: {:?} must have {} coordinates", o.site, model.dim()));
                        }
                        fug = fug.with_override(Site::new(&o.site), parse_rational(&o.z)?);
                    }
                    Some(fug)
                }
                (None, None) => None,
            };
            let value = match fug {
                None => canonical_counts_with(&model, &region, budget)?.to_json(),
                Some(fug) => {
                    let v = partition_function_marked(&model, &region, &fug, &[], budget)?;
                    serde_json::json!({
                        "region": region.describe(),
                        "z": rational_string(&fug.uniform),
                        "overrides": fug.overrides.len(),
                        "value": rational_string(&v),
                    })
                }
            };
            Outcome::json(&value, true)
        }
        Command::Series {
            model: margs,
            kind,
            rings,
            tori,
            order,
            tau,
        } => {
            let model = ModelSpec::load(&margs.model)?;
            let mut regions = Vec::new();
            for &l in rings {
                regions.push(Region::torus(&[l])?);
            }
            for t in tori {
                regions.push(Region::torus(&parse_extents(t)?)?);
            }
            if regions.is_empty() {
                return invalid("give --rings or --tori");
            }
            let kind = match kind {
                KindArg::Mayer => SeriesKind::MayerB,
                KindArg::Gf => SeriesKind::GauntFisherC,
            };
            let tau = match (kind, tau) {
                (_, Some(t)) => *t,
                (SeriesKind::MayerB, None) => 1,
                (SeriesKind::GauntFisherC, None) => load_family(&model, margs)?.tau(),
            };
            if regions.len() >= 3 {
                let report = stabilization_report(&model, &regions, kind, *order, tau, budget)?;
                Outcome::json(&report.to_json(), true)
            } else {
                let rows: Vec<serde_json::Value> = regions
                    .iter()
                    .map(|r| {
                        let s = region_series(&model, r, kind, *order, tau, budget)?;
                        Ok(serde_json::json!({
                            "region": s.region,
                            "volume": s.volume,
                            "tau": s.tau,
                            "coefficients": s.values.iter().map(rational_string).collect::<Vec<_>>(),
                        }))
                    })
                    .collect::<Result<_>>()?;
                Outcome::json(&serde_json::json!({ "kind": kind, "regions": rows }), true)
            }
        }
        Command::Zeros {
            model: margs,
            region,
            digits,
            tau,
            tolerance,
        } => {
            let model = ModelSpec::load(&margs.model)?;
            let (region, family) = region.build(&model, margs)?;
            let p = canonical_counts_with(&model, &region, budget)?;
            let zeros = find_zeros(&p, *digits)?;
            let q: Vec<num_bigint::BigUint> = p.coefficients().iter().rev().cloned().collect();
            let tau = match (tau, &family) {
                (Some(t), _) => *t,
                (None, Some(f)) => f.tau(),
                (None, None) => q[0].clone().try_into().unwrap_or(1usize),
            };
            let order = p.n_max().clamp(1, 12);
            let c = gaunt_fisher_coefficients(&q, tau, p.volume(), order, p.region())?;
            let report = verify_zero_identities(&zeros, &q[0], &c, *tolerance)?;
            Ok(Outcome {
                text: zeros.to_csv()?,
                code: if report.passed { 0 } else { 4 },
                details: Some(serde_json::to_value(&report)?),
            })
        }
        Command::GfcVerify {
            model: margs,
            region,
            z,
            cutoff,
        } => {
            let model = ModelSpec::load(&margs.model)?;
            let (region, family) = region.build(&model, margs)?;
            let family = family.expect("windows carry a family");
            let window = window_of(&region)?;
            let catalog = enumerate_gfcs(&model, &family, window, *cutoff, budget)?;
            let cache = HoleCache::new();
            let mut checks = Vec::new();
            for z in z {
                let fug = FugacityMap::uniform(parse_rational(z)?);
                checks.push(verify_gfc_identity(&model, &family, window, &catalog, &fug, &cache, budget)?);
            }
            let all = checks.iter().all(|c| c.exact_match) && catalog.unrealizable.is_empty();
            Outcome::json(
                &serde_json::json!({
                    "verdict": if all { "exact match" } else { "mismatch" },
                    "region": region.describe(),
                    "gfcs": catalog.gfcs.len(),
                    "largest_support": catalog.largest_support,
                    "configurations": catalog.configurations,
                    "unrealizable": catalog.unrealizable.iter().map(|&i| catalog.gfcs[i].to_json(model.dim())).collect::<Vec<_>>(),
                    "checks": checks,
                }),
                all,
            )
        }
        Command::ClusterPressure {
            model: margs,
            region,
            z,
            max_cluster,
            bulk_order,
        } => {
            let model = ModelSpec::load(&margs.model)?;
            if let Some(order) = bulk_order {
                let family = load_family(&model, margs)?;
                let phase = region.nu.unwrap_or(1).checked_sub(1).ok_or_else(|| Error::Validation("--nu starts at 1".into()))?;
                let s = bulk_c_k(&model, &family, phase, *order, budget)?;
                return Outcome::json(&serde_json::to_value(&s)?, true);
            }
            let (region, family) = region.build(&model, margs)?;
            let family = family.expect("windows carry a family");
            let window = window_of(&region)?;
            let log = truncated_cluster_log(&model, &family, window, &parse_rational(z)?, *max_cluster, budget)?;
            Outcome::json(&serde_json::to_value(&log)?, !log.error_increased)
        }
        Command::BzCertificate {
            model: margs,
            z,
            nu,
            theta,
            xi,
            varsigma,
            cutoff,
        } => {
            let model = ModelSpec::load(&margs.model)?;
            let family = load_family(&model, margs)?;
            if *nu == 0 || *nu > family.len() {
                return invalid(format!("--nu must be between 1 and {}", family.len()));
            }
            let params = BzParams {
                theta: *theta,
                xi: *xi,
                varsigma: *varsigma,
            };
            let z: BigRational = parse_rational(z)?;
            let report = bz_certificate(&model, &family, nu - 1, &z, params, *cutoff, budget)?;
            Outcome::json(&serde_json::to_value(&report)?, report.passed)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Coverings { .. } => "coverings",
        Command::CheckSliding { .. } => "check-sliding",
        Command::Partition { .. } => "partition",
        Command::Series { .. } => "series",
        Command::Zeros { .. } => "zeros",
        Command::GfcVerify { .. } => "gfc-verify",
        Command::ClusterPressure { .. } => "cluster-pressure",
        Command::BzCertificate { .. } => "bz-certificate",
    }
}

fn model_and_region(c: &Command) -> (Option<String>, Option<String>) {
    let describe = |r: &RegionArgs| -> Option<String> {
        r.spec().ok().and_then(|s| serde_json::to_string(&s).ok())
    };
    match c {
        Command::Coverings { model } | Command::CheckSliding { model, .. } | Command::BzCertificate { model, .. } => {
            (Some(model.model.clone()), None)
        }
        Command::Series { model, .. } => (Some(model.model.clone()), None),
        Command::Partition { model, region, .. }
        | Command::Zeros { model, region, .. }
        | Command::GfcVerify { model, region, .. }
        | Command::ClusterPressure { model, region, .. } => (Some(model.model.clone()), describe(region)),
    }
}

/// Parses arguments, runs one command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not configure {n} threads: {e}");
        }
    }
    let mut budget = Budget::from_env();
    if let Some(m) = cli.max_states {
        budget.max_states = m;
    }
    let start = Instant::now();
    let result = run_command(&cli, &budget);
    let (text, code, details, error) = match result {
        Ok(o) => (o.text, o.code, o.details, None),
        Err(e) => {
            let witness = match &e {
                Error::SlidingViolation { witness, .. } => Some(serde_json::json!({ "witness": witness })),
                Error::NonConvergence { partial, .. } => Some(serde_json::json!({ "partial_roots": partial })),
                _ => None,
            };
            let body = serde_json::json!({ "error": e.to_string(), "details": witness });
            (serde_json::to_string_pretty(&body).unwrap_or_default() + "\n", e.exit_code(), None, Some(e.to_string()))
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| e.to_string()),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    let (model, region) = model_and_region(&cli.command);
    let manifest = RunManifest {
        command: command_name(&cli.command).into(),
        model,
        region,
        parameters: serde_json::to_value(&cli.command).unwrap_or(serde_json::Value::Null),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        output_sha256: format!("{:x}", Sha256::digest(text.as_bytes())),
        exit_code: code,
        error,
        details,
    };
    let manifest_text = serde_json::to_string_pretty(&manifest).unwrap_or_default() + "\n";
    match &cli.manifest {
        Some(path) => {
            if let Err(e) = std::fs::write(path, manifest_text) {
                eprintln!("error: cannot write manifest: {e}");
                return 2;
            }
        }
        None => eprint!("{manifest_text}"),
    }
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return 2;
    }
    code
}
