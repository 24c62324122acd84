pub mod catalog;
pub mod chain;
pub mod map;
pub mod otto;
pub mod selftest;
pub mod set;

use rctk_core::catalog::{lookup, CatalogEntry};
use rctk_core::specdens::{GridSpec, MappingKind, SpectralDensity, Statistics};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cli::{DensitySource, MappingArg, StatisticsArg};
use crate::error::{CliError, Result};
use crate::io::Meta;

pub const DENSITY_UNITS: &str = "energies in the units of the input density; hbar = k_B = 1";

/// What gets hashed into output headers: the resolved configuration plus a
/// digest of any input file it points to.
#[derive(Serialize)]
pub struct RunRecord<'a, T: Serialize> {
    pub command: &'a str,
    pub config: &'a T,
    pub input_sha256: Option<String>,
}

impl<'a, T: Serialize> RunRecord<'a, T> {
    pub fn meta(&self, units: &str) -> Meta {
        Meta::new(self, units)
    }
}

pub struct Source {
    pub density: SpectralDensity,
    pub entry: Option<(&'static CatalogEntry, Vec<f64>)>,
    pub kind: MappingKind,
    pub input_sha256: Option<String>,
}

fn statistics(s: StatisticsArg) -> Statistics {
    match s {
        StatisticsArg::Bosonic => Statistics::BosonicOdd,
        StatisticsArg::Fermionic => Statistics::FermionicFullAxis,
    }
}

pub fn resolve(src: &DensitySource) -> Result<Source> {
    let stats = src.statistics.map(statistics);
    let (density, entry, input_sha256) = match (&src.family, &src.density) {
        (Some(id), None) => {
            let e = lookup(id)?;
            if let Some(k) = src.params.keys().find(|k| !e.params.contains(&k.as_str())) {
                return Err(CliError::invalid(format!("family `{id}` has no parameter `{k}`")));
            }
            let p = e
                .params
                .iter()
                .map(|n| {
                    src.params.get(*n).copied().ok_or_else(|| CliError::invalid(format!("family `{id}` needs --{n}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if stats.is_some_and(|s| s != e.statistics) {
                return Err(CliError::invalid(format!("family `{id}` has fixed statistics")));
            }
            (e.input(&p)?, Some((e, p)), None)
        }
        (None, Some(path)) => {
            if !src.params.is_empty() {
                return Err(CliError::invalid("family parameters given together with a density file"));
            }
            let bytes = std::fs::read(path).map_err(CliError::io(path))?;
            let hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
            (crate::io::read_density(path, stats)?, None, Some(hash))
        }
        _ => return Err(CliError::invalid("give exactly one of --family or --density")),
    };
    let kind = match (src.mapping, density.statistics) {
        (Some(MappingArg::Phonon), Statistics::BosonicOdd) | (None, Statistics::BosonicOdd) => MappingKind::Phonon,
        (Some(MappingArg::Particle), _) => MappingKind::Particle,
        (Some(MappingArg::Fermionic), Statistics::FermionicFullAxis) | (None, Statistics::FermionicFullAxis) => {
            MappingKind::Fermionic
        }
        (Some(m), s) => return Err(CliError::invalid(format!("{m:?} mapping does not apply to {s:?} densities"))),
    };
    Ok(Source { density, entry, kind, input_sha256 })
}

/// Sample points for a density table: cell centres across a finite support,
/// otherwise a window of ten widths around the main weight.
pub fn table_points(d: &SpectralDensity, n: usize) -> Vec<f64> {
    let s = d.support;
    if s.lo.is_finite() && s.hi.is_finite() {
        GridSpec::new(s.lo, s.hi, n).nodes()
    } else {
        d.default_grid(n, 10.0).nodes()
    }
}

pub fn kind_name(k: MappingKind) -> &'static str {
    match k {
        MappingKind::Phonon => "phonon",
        MappingKind::Particle => "particle",
        MappingKind::Fermionic => "fermionic",
    }
}

pub fn say(log: &mut dyn std::io::Write, msg: impl std::fmt::Display) {
    // progress output is best effort
    let _ = writeln!(log, "{msg}");
}
