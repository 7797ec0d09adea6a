use std::fs;
use std::path::{Path, PathBuf};

use lptransport::evolve::{cells_for, EDGE_FRACTION};
use lptransport::fiber::apply_q;
use lptransport::potential::exponential_schedule;
use lptransport::transport::default_family;
use lptransport::{EcFamily, Gaussian, PeriodicPotential, WavePacket};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Values given on the command line or in a config file; every field is
/// optional so the two sources can be layered.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub potential: Option<PathBuf>,
    pub family: Option<PathBuf>,
    pub packet: Option<PacketSpec>,
    pub kpoints: Option<usize>,
    pub cutoff: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub depth: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub max_energy: Option<f64>,
    pub t: Option<f64>,
    pub k: Option<f64>,
    pub emin: Option<f64>,
    pub emax: Option<f64>,
    pub points: Option<usize>,
    pub samples_per_cell: Option<usize>,
    pub cells: Option<usize>,
}

/// `"center,width,wavenumber"` or a table with those keys.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PacketSpec {
    Text(String),
    Table(Gaussian),
}

impl PacketSpec {
    pub fn gaussian(&self) -> Result<Gaussian, Failure> {
        match self {
            PacketSpec::Table(g) => Ok(*g),
            PacketSpec::Text(s) => parse_packet(s),
        }
    }
}

pub fn parse_packet(s: &str) -> Result<Gaussian, Failure> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::usage(format!("packet {s:?}: {e}")))?;
    match parts[..] {
        [center, width, wavenumber] => Ok(Gaussian {
            center,
            width,
            wavenumber,
        }),
        _ => Err(Failure::usage(format!(
            "packet {s:?}: expected center,width,wavenumber"
        ))),
    }
}

impl Layer {
    /// Fields set in `top` win.
    fn over(self, base: Layer) -> Layer {
        Layer {
            potential: self.potential.or(base.potential),
            family: self.family.or(base.family),
            packet: self.packet.or(base.packet),
            kpoints: self.kpoints.or(base.kpoints),
            cutoff: self.cutoff.or(base.cutoff),
            dt: self.dt.or(base.dt),
            horizon: self.horizon.or(base.horizon),
            depth: self.depth.or(base.depth),
            out: self.out.or(base.out),
            seed: self.seed.or(base.seed),
            max_energy: self.max_energy.or(base.max_energy),
            t: self.t.or(base.t),
            k: self.k.or(base.k),
            emin: self.emin.or(base.emin),
            emax: self.emax.or(base.emax),
            points: self.points.or(base.points),
            samples_per_cell: self.samples_per_cell.or(base.samples_per_cell),
            cells: self.cells.or(base.cells),
        }
    }
}

/// Fully resolved configuration; its JSON form (plus input file contents)
/// names the output files.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub potential: Option<PathBuf>,
    pub family: Option<PathBuf>,
    pub packet: Gaussian,
    pub kpoints: usize,
    pub cutoff: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: f64,
    pub depth: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
    pub seed: u64,
    pub max_energy: Option<f64>,
    pub t: f64,
    pub k: Option<f64>,
    pub emin: Option<f64>,
    pub emax: f64,
    pub points: usize,
    pub samples_per_cell: Option<usize>,
    pub cells: Option<usize>,
}

impl RunConfig {
    /// Layers `config file > flags > defaults` and validates ranges.
    pub fn resolve(command: &str, flags: Layer, config: Option<&Path>) -> Result<Self, Failure> {
        let file = match config {
            Some(path) => {
                let text = read_input(path)?;
                toml::from_str::<Layer>(&text)
                    .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
            }
            None => Layer::default(),
        };
        let l = file.over(flags);
        let packet = match &l.packet {
            Some(p) => p.gaussian()?,
            None => Gaussian {
                center: 0.0,
                width: 4.0,
                wavenumber: 1.0,
            },
        };
        let cfg = RunConfig {
            command: command.to_string(),
            potential: l.potential,
            family: l.family,
            packet,
            kpoints: l.kpoints.unwrap_or(32),
            cutoff: l.cutoff,
            dt: l.dt,
            horizon: l.horizon.unwrap_or(20.0),
            depth: l.depth,
            out: l.out.unwrap_or_else(|| PathBuf::from("out")),
            seed: l.seed.unwrap_or(0),
            max_energy: l.max_energy,
            t: l.t.unwrap_or(10.0),
            k: l.k,
            emin: l.emin,
            emax: l.emax.unwrap_or(60.0),
            points: l.points.unwrap_or(200),
            samples_per_cell: l.samples_per_cell,
            cells: l.cells,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Failure::usage(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("packet width", self.packet.width)?;
        if !(self.packet.center.is_finite() && self.packet.wavenumber.is_finite()) {
            return Err(Failure::usage("packet center and wavenumber must be finite"));
        }
        positive("horizon", self.horizon)?;
        positive("t", self.t)?;
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if let Some(e) = self.max_energy {
            if !e.is_finite() {
                return Err(Failure::usage("max-energy must be finite"));
            }
        }
        if let Some(k) = self.k {
            if !k.is_finite() {
                return Err(Failure::usage("k must be finite"));
            }
        }
        if let Some(e) = self.emin {
            if !(e.is_finite() && e < self.emax) {
                return Err(Failure::usage("emin must be finite and below emax"));
            }
        }
        if !self.emax.is_finite() {
            return Err(Failure::usage("emax must be finite"));
        }
        if self.kpoints < 2 {
            return Err(Failure::usage("kpoints must be at least 2"));
        }
        if self.points < 2 {
            return Err(Failure::usage("points must be at least 2"));
        }
        if self.cutoff == Some(0) {
            return Err(Failure::usage("cutoff must be positive"));
        }
        if matches!(self.samples_per_cell, Some(m) if m < 4) {
            return Err(Failure::usage("samples-per-cell must be at least 4"));
        }
        if self.cells == Some(0) {
            return Err(Failure::usage("cells must be positive"));
        }
        Ok(())
    }

    pub fn load_potential(&self) -> Result<PeriodicPotential, Failure> {
        match &self.potential {
            Some(path) => load_potential(path),
            None => Err(Failure::usage(format!("{} requires --potential", self.command))),
        }
    }

    /// The free potential of period `2 pi` when no file is given.
    pub fn potential_or_free(&self) -> Result<PeriodicPotential, Failure> {
        match &self.potential {
            Some(path) => load_potential(path),
            None => Ok(PeriodicPotential::zero(2.0 * std::f64::consts::PI)?),
        }
    }

    pub fn load_family(&self) -> Result<EcFamily, Failure> {
        match &self.family {
            Some(path) => load_family(path),
            None => Ok(default_family()),
        }
    }

    /// Grid for the configured packet around `potential`, sized for an
    /// evolution up to `t` unless `cells` is set. `multiple` is the cell
    /// count of one period of the slowest component.
    pub fn packet_for(&self, potential: &PeriodicPotential, base_period: f64, multiple: usize, t: f64) -> Result<WavePacket, Failure> {
        let g = &self.packet;
        let m = self.samples_per_cell.unwrap_or_else(|| {
            // Keep h * xi_max below pi / 2.
            let need = (2.0 * base_period * g.max_wavenumber() / std::f64::consts::PI).ceil() as usize;
            need.max(16)
        });
        let support = 2.0 * g.support_radius();
        let cells = match self.cells {
            Some(c) => c.div_ceil(multiple) * multiple,
            None => {
                // Sized in periods of `potential`, then converted to base cells.
                let p = potential.period();
                let probe = WavePacket::gaussian(g, base_period, cells_for(support, 0.0, 0.0, p, 1) * multiple, m, 0.5)?;
                let speed = apply_q(potential, &probe.with_period(p)?, self.cutoff)?.occupied_speed(1e-8);
                // The monitored strip must stay clear as well.
                let periods = cells_for(support, speed, t, p, 1) as f64 * (1.0 + 2.0 * EDGE_FRACTION);
                periods.ceil() as usize * multiple
            }
        };
        Ok(WavePacket::gaussian(g, base_period, cells, m, 0.5)?)
    }

    /// Bytes that identify the inputs beyond the config itself.
    pub fn input_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for path in [&self.potential, &self.family].into_iter().flatten() {
            if let Ok(b) = fs::read(path) {
                out.extend(b);
            }
        }
        out
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = read_input(path)?;
    if is_json(path) {
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

/// JSON (`.json`) or TOML file with `period` and `coefficients`.
pub fn load_potential(path: &Path) -> Result<PeriodicPotential, Failure> {
    parse_file(path)
}

/// Family file: either build parameters (`p0`, `ratios`, `eta`, optional
/// `amplitudes`) or a serialized family with explicit components.
#[derive(Deserialize)]
#[serde(untagged)]
enum FamilyFile {
    Build {
        p0: f64,
        ratios: Vec<u32>,
        eta: f64,
        amplitudes: Option<Vec<f64>>,
    },
    Full(EcFamily),
}

pub fn load_family(path: &Path) -> Result<EcFamily, Failure> {
    match parse_file::<FamilyFile>(path)? {
        FamilyFile::Full(f) => {
            let components = (0..=f.depth())
                .map(|n| f.component(n).cloned())
                .collect::<lptransport::Result<Vec<_>>>()?;
            Ok(EcFamily::from_components(f.base_period(), f.ratios(), f.eta(), components)?)
        }
        FamilyFile::Build {
            p0,
            ratios,
            eta,
            amplitudes,
        } => {
            let amps = match amplitudes {
                Some(a) => a,
                None => {
                    let mut a = exponential_schedule(p0, &ratios, eta)?;
                    a[0] = 1.0;
                    a
                }
            };
            Ok(EcFamily::build(p0, &ratios, eta, &amps)?)
        }
    }
}
