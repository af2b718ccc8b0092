//! Run configuration: a TOML file, overridden field by field from the
//! command line, then validated into [`Settings`].

use std::path::{Path, PathBuf};

use scarlab::orbits::Family;
use scarlab::spectra::{DomainOptions, IrrepLabel};
use scarlab::PotentialModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Everything a run can be configured with. All fields are optional here;
/// each command checks for the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub eta: Option<f64>,
    pub energy: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub irreps: Option<Vec<String>>,
    pub family: Option<String>,
    pub emin: Option<f64>,
    pub emax: Option<f64>,
    pub de: Option<f64>,
    pub seed_energy: Option<f64>,
    pub resolution: Option<f64>,
    pub cut_margin: Option<f64>,
    pub tube_radius: Option<f64>,
    pub tube_samples: Option<usize>,
    pub crossings: Option<usize>,
    pub seeds: Option<String>,
    pub trace_points: Option<usize>,
    pub raster: Option<usize>,
    pub check_doubled: Option<bool>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those of `self`.
    pub fn merge(&mut self, other: RunConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            model, eta, energy, window, irreps, family, emin, emax, de, seed_energy, resolution, cut_margin, tube_radius,
            tube_samples, crossings, seeds, trace_points, raster, check_doubled, out_dir
        );
    }
}

/// Initial conditions for a surface of section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SeedSpec {
    /// `ny x npy` points spread over the allowed part of the section.
    Grid { ny: usize, npy: usize },
    /// Explicit `(y, py)` pairs.
    List(Vec<(f64, f64)>),
}

impl std::str::FromStr for SeedSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("bad seed spec '{s}' (expected grid:NxM or list:y,py;y,py;...)"));
        if let Some(rest) = s.strip_prefix("grid:") {
            let (a, b) = rest.split_once('x').ok_or_else(bad)?;
            let (ny, npy) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if ny == 0 || npy == 0 {
                return Err(bad());
            }
            Ok(SeedSpec::Grid { ny, npy })
        } else if let Some(rest) = s.strip_prefix("list:") {
            let pts = rest
                .split(';')
                .filter(|p| !p.trim().is_empty())
                .map(|p| {
                    let (y, py) = p.split_once(',').ok_or_else(bad)?;
                    Ok((y.trim().parse().map_err(|_| bad())?, py.trim().parse().map_err(|_| bad())?))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            if pts.is_empty() {
                return Err(bad());
            }
            Ok(SeedSpec::List(pts))
        } else {
            Err(bad())
        }
    }
}

/// Validated configuration with defaults filled in.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub model: PotentialModel,
    pub eta: Option<f64>,
    pub energy: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub irreps: Vec<IrrepLabel>,
    pub family: Family,
    pub emin: Option<f64>,
    pub emax: Option<f64>,
    pub de: Option<f64>,
    pub seed_energy: Option<f64>,
    pub domain: DomainOptions,
    pub tube_radius: f64,
    pub tube_samples: usize,
    pub crossings: usize,
    pub seeds: SeedSpec,
    pub trace_points: usize,
    pub raster: usize,
    pub check_doubled: bool,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>, CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Config(format!("{name} must be positive, got {x}"))),
        _ => Ok(v),
    }
}

impl Settings {
    pub fn from_config(c: &RunConfig) -> Result<Self, CliError> {
        let cfg = |e: scarlab::Error| CliError::Config(e.to_string());
        let model: PotentialModel = c
            .model
            .as_deref()
            .ok_or_else(|| CliError::Config("no model given (ring or hh)".into()))?
            .parse()
            .map_err(cfg)?;
        let eta = positive("eta", c.eta)?;
        let energy = positive("energy", c.energy)?;
        let window = match c.window {
            Some([lo, hi]) if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) => {
                return Err(CliError::Config(format!("window must satisfy 0 <= lo < hi, got {lo}:{hi}")));
            }
            Some([lo, hi]) => Some((lo, hi)),
            None => None,
        };
        let irreps = match &c.irreps {
            None => IrrepLabel::ALL.to_vec(),
            Some(list) => {
                let mut v = Vec::new();
                for s in list {
                    if s.eq_ignore_ascii_case("all") {
                        v.extend(IrrepLabel::ALL);
                    } else {
                        v.push(s.parse().map_err(cfg)?);
                    }
                }
                v.sort();
                v.dedup();
                v
            }
        };
        let family = c.family.as_deref().unwrap_or("B").parse().map_err(cfg)?;
        let (emin, emax) = (positive("emin", c.emin)?, positive("emax", c.emax)?);
        if let (Some(a), Some(b)) = (emin, emax) {
            if b < a {
                return Err(CliError::Config(format!("emax {b} below emin {a}")));
            }
        }
        let de = positive("de", c.de)?;
        let mut domain = DomainOptions::default();
        if let Some(r) = c.resolution {
            if !(r >= scarlab::spectra::MIN_RESOLUTION) {
                return Err(CliError::Config(format!("resolution must be at least {}, got {r}", scarlab::spectra::MIN_RESOLUTION)));
            }
            domain.resolution = r;
        }
        if let Some(m) = positive("cut_margin", c.cut_margin)? {
            domain.cut_margin = m;
        }
        let tube_radius = positive("tube_radius", c.tube_radius)?.unwrap_or(0.1);
        let tube_samples = c.tube_samples.unwrap_or(2000);
        let crossings = c.crossings.unwrap_or(1000);
        let trace_points = c.trace_points.unwrap_or(4001);
        let raster = c.raster.unwrap_or(201);
        for (name, v, min) in [("tube_samples", tube_samples, 10), ("crossings", crossings, 1), ("trace_points", trace_points, 3), ("raster", raster, 2)] {
            if v < min {
                return Err(CliError::Config(format!("{name} must be at least {min}, got {v}")));
            }
        }
        let seeds = c.seeds.as_deref().unwrap_or("grid:10x10").parse()?;
        for (name, e) in [("energy", energy), ("emax", emax), ("window top", window.map(|w| w.1))] {
            if let Some(e) = e {
                if e >= model.escape_energy() {
                    return Err(CliError::Config(format!("{name} {e} is at or above the escape energy {}", model.escape_energy())));
                }
            }
        }
        Ok(Settings {
            model,
            eta,
            energy,
            window,
            irreps,
            family,
            emin,
            emax,
            de,
            seed_energy: positive("seed_energy", c.seed_energy)?,
            domain,
            tube_radius,
            tube_samples,
            crossings,
            seeds,
            trace_points,
            raster,
            check_doubled: c.check_doubled.unwrap_or(false),
            out_dir: c.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        })
    }

    pub fn require_eta(&self) -> Result<f64, CliError> {
        self.eta.ok_or_else(|| CliError::Config("eta is required".into()))
    }

    pub fn require_window(&self) -> Result<(f64, f64), CliError> {
        self.window.ok_or_else(|| CliError::Config("window is required (lo:hi)".into()))
    }

    /// SHA-256 of the settings in canonical TOML form, as hex.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("settings serialize");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses `lo:hi`.
pub fn parse_window(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([lo, hi])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig {
            model: Some("hh".into()),
            ..Default::default()
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: Result<RunConfig, _> = toml::from_str("model = \"ring\"\nbogus = 1\n");
        assert!(r.is_err());
        let ok: RunConfig = toml::from_str("model = \"ring\"\nwindow = [6.5, 7.5]\nirreps = [\"A1\", \"E\"]\n").unwrap();
        assert_eq!(ok.window, Some([6.5, 7.5]));
    }

    #[test]
    fn overrides_win() {
        let mut a = base();
        a.eta = Some(0.01);
        a.merge(RunConfig {
            eta: Some(0.02),
            ..Default::default()
        });
        assert_eq!(a.eta, Some(0.02));
        assert_eq!(a.model.as_deref(), Some("hh"));
    }

    #[test]
    fn validation() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = base();
            f(&mut c);
            Settings::from_config(&c).is_err()
        };
        assert!(bad(|c| c.model = None));
        assert!(bad(|c| c.eta = Some(-1.0)));
        assert!(bad(|c| c.window = Some([0.2, 0.1])));
        assert!(bad(|c| c.window = Some([0.1, 0.2])));
        assert!(bad(|c| c.irreps = Some(vec!["B1".into()])));
        assert!(bad(|c| c.resolution = Some(4.0)));
        assert!(bad(|c| c.seeds = Some("grid:3".into())));
        assert!(!bad(|c| c.window = Some([0.11, 0.15])));
    }

    #[test]
    fn seed_specs() {
        assert_eq!("grid:20x5".parse::<SeedSpec>().unwrap(), SeedSpec::Grid { ny: 20, npy: 5 });
        assert_eq!("list:0.1,0.2;-0.3,0".parse::<SeedSpec>().unwrap(), SeedSpec::List(vec![(0.1, 0.2), (-0.3, 0.0)]));
        assert!("list:".parse::<SeedSpec>().is_err());
    }

    #[test]
    fn hash_tracks_settings() {
        let s = Settings::from_config(&base()).unwrap();
        let mut c = base();
        c.tube_radius = Some(0.2);
        let t = Settings::from_config(&c).unwrap();
        assert_eq!(s.hash(), Settings::from_config(&base()).unwrap().hash());
        assert_ne!(s.hash(), t.hash());
        assert_eq!(s.hash().len(), 64);
    }
}
