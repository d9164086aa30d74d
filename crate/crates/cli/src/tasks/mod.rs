//! One runner per subcommand. Each declares its config keys; the same list
//! validates the config and renders the `--help` text.

mod attention;
mod cluster;
mod embed;
mod generate;
mod regress;

use std::f64::consts::PI;

use locuskit::synth::blobs;
use locuskit::{Kernel, PointSet};

use crate::config::{key, Config, Key, Kind};
use crate::csvio::cell;
use crate::error::{CliError, CliResult};
use crate::output::Artifacts;
use crate::svg::Pt;

pub struct Task {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
    pub run: fn(&Config) -> CliResult<Artifacts>,
}

pub const TASKS: &[Task] = &[
    regress::LOCAL_LINEAR,
    regress::LOCAL_MEAN,
    regress::CLASSIFY,
    cluster::MEANSHIFT,
    cluster::MEDOIDSHIFT,
    cluster::RELAX,
    embed::LLE,
    embed::AMDS,
    embed::TRIMAP,
    embed::WORDS,
    regress::KDE,
    generate::DIFFUSION,
    generate::NLM,
    regress::TUNE,
    attention::QKV,
    attention::TRANSFORMER,
];

pub fn find(name: &str) -> Option<&'static Task> {
    TASKS.iter().find(|t| t.name == name)
}

pub const KERNELS: &[&str] = &["gaussian", "epanechnikov", "uniform"];

const fn kernel_key() -> Key {
    key("kernel", Kind::Choice(KERNELS), Some("\"gaussian\""), "localization kernel")
}

pub fn kernel(cfg: &Config) -> CliResult<Kernel> {
    Ok(match cfg.str("kernel")? {
        "gaussian" => Kernel::gaussian(cfg.positive("bandwidth")?)?,
        "epanechnikov" => Kernel::epanechnikov(cfg.positive("bandwidth")?)?,
        _ => Kernel::uniform(),
    })
}

/// Keys of the built-in blob generator used when no input file is given.
macro_rules! blob_keys {
    () => {
        [
            crate::config::key("n", crate::config::Kind::Int, Some("300"), "synthetic: number of points"),
            crate::config::key("clusters", crate::config::Kind::Int, Some("3"), "synthetic: number of blobs"),
            crate::config::key("spread", crate::config::Kind::Float, Some("3.0"), "synthetic: radius of the blob-center circle"),
            crate::config::key("sigma", crate::config::Kind::Float, Some("0.4"), "synthetic: blob standard deviation"),
        ]
    };
}
pub(crate) use blob_keys;

/// Blobs with centers evenly spaced on a circle.
pub fn synthetic_blobs(cfg: &Config) -> CliResult<(PointSet, Vec<usize>)> {
    let k = cfg.at_least("clusters", 1)?;
    let r = cfg.f64("spread")?;
    let centers: Vec<Vec<f64>> = (0..k).map(|j| 2.0 * PI * j as f64 / k as f64).map(|a| vec![r * a.cos(), r * a.sin()]).collect();
    Ok(blobs(&centers, cfg.at_least("n", k)?, cfg.positive("sigma")?, cfg.seed()?)?)
}

pub fn coord_names(prefix: &str, p: usize) -> Vec<String> {
    (0..p).map(|j| format!("{prefix}{j}")).collect()
}

pub fn cells(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| cell(*x)).collect()
}

/// First two coordinates, or (x, 0) for one-dimensional points.
pub fn plane(x: &PointSet) -> Vec<Pt> {
    x.rows().map(|r| (r[0], r.get(1).copied().unwrap_or(0.0))).collect()
}

pub fn need(cond: bool, msg: impl Into<String>) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::validation(msg))
    }
}
