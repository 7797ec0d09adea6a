use std::io::Write;

use lptransport::bands::{band_edges, default_max_energy, zone_grid, BandTable};
use lptransport::evolve::{default_dt, evolve as run_evolution};
use lptransport::fiber::{default_cutoff, fiber_eigensystem};
use lptransport::monodromy::{discriminant_scan, write_csv};
use lptransport::transport::{beta_fit, cascade_with, periodic_convergence, CascadeOptions};
use serde_json::json;

use crate::config::RunConfig;
use crate::output::Artifacts;
use crate::Failure;

pub fn bands(cfg: &RunConfig) -> Result<(), Failure> {
    let v = cfg.load_potential()?;
    let emax = cfg.max_energy.unwrap_or_else(|| default_max_energy(&v));
    let table = BandTable::new(&v, cfg.kpoints, emax)?;
    let art = Artifacts::new(cfg)?;
    art.csv("table", |w| table.write_csv(w))?;
    art.json(
        "edges",
        &json!({
            "period": table.period,
            "max_energy": emax,
            "bands": table.bands(),
            "edges": table.edges,
            "c2_hat": table.c2_hat,
            "sup_derivative": table.sup_derivative,
            "holder_constant": table.holder_constant(),
            "velocity_identity_residual": table.velocity_identity_residual(),
        }),
    )?;
    Ok(())
}

pub fn discriminant(cfg: &RunConfig) -> Result<(), Failure> {
    let v = cfg.load_potential()?;
    let lo = cfg.emin.unwrap_or(-v.sup_bound() - 1.0);
    let hi = cfg.emax;
    if lo >= hi {
        return Err(Failure::usage(format!("empty energy range [{lo}, {hi}]")));
    }
    let n = cfg.points;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let rows = discriminant_scan(&v, &grid)?;
    let edges: Vec<_> = band_edges(&v, hi)?.into_iter().filter(|e| e.energy >= lo).collect();
    let art = Artifacts::new(cfg)?;
    art.csv("scan", |w| write_csv(w, &rows))?;
    art.json(
        "summary",
        &json!({
            "emin": lo,
            "emax": hi,
            "points": n,
            "max_det_residual": rows.iter().map(|r| r.det_residual).fold(0.0, f64::max),
            "edges": edges,
        }),
    )?;
    Ok(())
}

pub fn fiber(cfg: &RunConfig) -> Result<(), Failure> {
    let v = cfg.load_potential()?;
    let emax = cfg.max_energy.unwrap_or_else(|| default_max_energy(&v));
    let cutoff = cfg.cutoff.unwrap_or_else(|| default_cutoff(&v, emax));
    let ks = match cfg.k {
        Some(k) => vec![k],
        None => zone_grid(v.period(), cfg.kpoints),
    };
    let systems = ks
        .iter()
        .map(|&k| fiber_eigensystem(&v, k, cutoff))
        .collect::<lptransport::Result<Vec<_>>>()?;
    let art = Artifacts::new(cfg)?;
    art.csv("bands", |w| {
        writeln!(w, "k,n,E,v,residual")?;
        for es in &systems {
            for n in 0..es.retained() {
                writeln!(
                    w,
                    "{:.11e},{},{:.11e},{:.11e},{:.11e}",
                    es.k,
                    n + 1,
                    es.eigenvalues[n],
                    es.velocities[n],
                    es.residuals[n]
                )?;
            }
        }
        Ok(())
    })?;
    art.json("eigensystems", &json!({ "cutoff": cutoff, "systems": systems }))?;
    Ok(())
}

pub fn evolve(cfg: &RunConfig) -> Result<(), Failure> {
    let v = cfg.load_potential()?;
    let psi = cfg.packet_for(&v, v.period(), 1, cfg.t)?;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&v, &psi));
    let out = run_evolution(&v, &psi, cfg.t, dt)?;
    let art = Artifacts::new(cfg)?;
    art.csv("packet", |w| {
        writeln!(w, "x,re,im,density")?;
        for (i, a) in out.amplitudes().iter().enumerate() {
            writeln!(w, "{:.11e},{:.11e},{:.11e},{:.11e}", out.position(i), a.re, a.im, a.norm_sqr())?;
        }
        Ok(())
    })?;
    art.json(
        "summary",
        &json!({
            "t": cfg.t,
            "dt": dt,
            "cells": out.cells(),
            "samples_per_cell": out.samples_per_cell(),
            "box_length": out.box_length(),
            "norm": out.norm(),
            "mean_position": out.mean_position()?,
            "second_moment": out.position_mul().norm_sqr(),
            "initial_second_moment": psi.position_mul().norm_sqr(),
            "edge_mass": out.edge_mass(lptransport::evolve::EDGE_FRACTION),
        }),
    )?;
    Ok(())
}

pub fn cascade(cfg: &RunConfig) -> Result<(), Failure> {
    let fam = cfg.load_family()?;
    let depth = cfg.depth.unwrap_or(fam.depth());
    if depth > fam.depth() {
        return Err(Failure::usage(format!("depth {depth} exceeds family depth {}", fam.depth())));
    }
    let deepest = fam.approximant(depth)?;
    let multiple = (deepest.period() / fam.base_period()).round() as usize;
    let psi = cfg.packet_for(&deepest, fam.base_period(), multiple, cfg.horizon)?;
    let opts = CascadeOptions {
        horizon: cfg.horizon,
        dt: cfg.dt,
        kpoints: cfg.kpoints,
        ..CascadeOptions::default()
    };
    let report = cascade_with(&fam, &psi, depth, &opts)?;
    let invariants = report.invariants();
    let art = Artifacts::new(cfg)?;
    art.csv("series", |w| report.write_series_csv(w))?;
    art.json(
        "report",
        &json!({
            "cells": psi.cells(),
            "samples_per_cell": psi.samples_per_cell(),
            "report": report,
            "invariants": invariants,
        }),
    )?;
    let failed: Vec<&str> = invariants.iter().filter(|i| !i.pass).map(|i| i.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical("InvariantFailure", format!("failed: {}", failed.join(", "))))
    }
}

pub fn convergence(cfg: &RunConfig) -> Result<(), Failure> {
    let v = cfg.load_potential()?;
    let psi = cfg.packet_for(&v, v.period(), 1, cfg.horizon)?;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&v, &psi));
    let lo = cfg.horizon / 10.0;
    let times: Vec<f64> = (0..=10).map(|i| lo * 10f64.powf(i as f64 / 10.0)).collect();
    let s = periodic_convergence(&v, &psi, &times, dt)?;
    let (beta, fit) = beta_fit(&s.moments, (lo, cfg.horizon))?;
    let art = Artifacts::new(cfg)?;
    art.csv("series", |w| {
        writeln!(w, "t,residual,second_moment")?;
        for i in 0..s.times.len() {
            writeln!(w, "{:.11e},{:.11e},{:.11e}", s.times[i], s.residual[i], s.moments.second[i])?;
        }
        Ok(())
    })?;
    art.json(
        "summary",
        &json!({
            "cells": psi.cells(),
            "dt": dt,
            "q_norm": s.q_norm,
            "q_cutoff": s.q_cutoff,
            "decay_exponent": s.decay_exponent,
            "beta_fit": beta,
            "beta_fit_residual": fit.residual,
            "alpha_bound": s.moments.alpha_fit,
            "beta_bound": s.moments.beta_fit,
            "max_edge_mass": s.moments.max_edge_mass,
        }),
    )?;
    Ok(())
}
