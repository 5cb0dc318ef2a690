//! Parameter sweeps over ensembles.
//!
//! Cell `k` (row-major flattened grid index) runs with master seed
//! `mix(base.master_seed, k)`, so adding grid points leaves existing cells
//! untouched. With common random numbers every cell reuses
//! `base.master_seed`, sharing noise realizations across cells.

use serde_json::{json, Value};
use std::io::Write;

use crate::config::config_to_value;
use crate::engine::{run_ensemble, EnsembleResult, SimConfig};
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::output::real;
use crate::rng;
use crate::schedule::SequenceKind;
use crate::waveplate::WaveplateSpec;

/// Largest flip-angle error fraction covered by the contour sweep's nominal range.
pub const CONTOUR_EPSILON_RANGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepSettings {
    pub common_random_numbers: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    WaveplateCount,
    Contour,
    FreeDecay,
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::WaveplateCount => "waveplate_count",
            SweepKind::Contour => "contour",
            SweepKind::FreeDecay => "free_decay",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub fidelity: f64,
    pub std_error: f64,
}

impl From<&EnsembleResult> for Cell {
    fn from(r: &EnsembleResult) -> Self {
        Cell {
            fidelity: r.fidelity,
            std_error: r.fidelity_std_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    /// One or two axes; cells are row-major over them.
    pub axes: Vec<Axis>,
    pub cells: Vec<Cell>,
    /// Base configuration the sweep was run from (its `master_seed` included).
    pub base: SimConfig,
    pub settings: SweepSettings,
}

impl SweepResult {
    pub fn cell(&self, index: &[usize]) -> Cell {
        match index {
            [i] => self.cells[*i],
            [i, j] => self.cells[i * self.axes[1].values.len() + j],
            _ => panic!("sweeps have one or two axes"),
        }
    }

    /// Re-runs the sweep from its recorded base config, settings and axes.
    pub fn replay(&self) -> Result<SweepResult> {
        match self.kind {
            SweepKind::WaveplateCount => {
                let counts: Vec<usize> = self.axes[0].values.iter().map(|&v| v as usize).collect();
                sweep_waveplate_count(&self.base, &counts, self.settings)
            }
            SweepKind::Contour => sweep_contour(
                &self.base,
                &self.axes[0].values,
                &self.axes[1].values,
                self.settings,
            ),
            SweepKind::FreeDecay => {
                free_decay_curve(&self.base, &self.axes[0].values, self.settings)
            }
        }
    }

    /// 1-D: `param,fidelity,std_error`; 2-D: `sigma_dphi,epsilon,fidelity,std_error`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match self.axes.as_slice() {
            [a] => {
                writeln!(w, "param,fidelity,std_error")?;
                for (v, c) in a.values.iter().zip(&self.cells) {
                    writeln!(w, "{},{},{}", real(*v), real(c.fidelity), real(c.std_error))?;
                }
            }
            [rows, cols] => {
                writeln!(w, "{},{},fidelity,std_error", rows.name, cols.name)?;
                for (i, r) in rows.values.iter().enumerate() {
                    for (j, c) in cols.values.iter().enumerate() {
                        let cell = self.cells[i * cols.values.len() + j];
                        writeln!(
                            w,
                            "{},{},{},{}",
                            real(*r),
                            real(*c),
                            real(cell.fidelity),
                            real(cell.std_error)
                        )?;
                    }
                }
            }
            _ => unreachable!("sweeps have one or two axes"),
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind.name(),
            "axes": self.axes.iter().map(|a| json!({"name": a.name, "values": a.values})).collect::<Vec<_>>(),
            "cells": self.cells.iter().map(|c| json!({"fidelity": c.fidelity, "std_error": c.std_error})).collect::<Vec<_>>(),
            "provenance": {
                "master_seed": self.base.master_seed,
                "common_random_numbers": self.settings.common_random_numbers,
                "config": config_to_value(&self.base),
            },
        })
    }
}

/// Master seed used by flattened cell `index`.
pub fn cell_seed(master_seed: u64, index: usize, settings: SweepSettings) -> u64 {
    if settings.common_random_numbers {
        master_seed
    } else {
        rng::mix(master_seed, index as u64)
    }
}

fn run_cells(
    base: &SimConfig,
    configs: Vec<(String, SimConfig)>,
    settings: SweepSettings,
) -> Result<Vec<Cell>> {
    configs
        .into_iter()
        .enumerate()
        .map(|(index, (label, mut cfg))| {
            cfg.master_seed = cell_seed(base.master_seed, index, settings);
            run_ensemble(&cfg)
                .map(|r| Cell::from(&r))
                .map_err(|e| Error::Cell {
                    index,
                    label,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// One ensemble per waveplate count, everything else from `base`.
pub fn sweep_waveplate_count(
    base: &SimConfig,
    counts: &[usize],
    settings: SweepSettings,
) -> Result<SweepResult> {
    if counts.is_empty() {
        return Err(Error::invalid("waveplate sweep needs at least one count"));
    }
    for &n in counts {
        base.sequence
            .check_count(n)
            .map_err(|e| Error::invalid(format!("waveplate count {n}: {e}")))?;
    }
    let configs = counts
        .iter()
        .map(|&n| {
            let mut c = base.clone();
            c.num_waveplates = n;
            (format!("num_waveplates={n}"), c)
        })
        .collect();
    Ok(SweepResult {
        kind: SweepKind::WaveplateCount,
        axes: vec![Axis {
            name: "num_waveplates".into(),
            values: counts.iter().map(|&n| n as f64).collect(),
        }],
        cells: run_cells(base, configs, settings)?,
        base: base.clone(),
        settings,
    })
}

/// Configuration of contour cell (`sigma_dphi`, `epsilon`).
pub fn contour_cell_config(base: &SimConfig, sigma_dphi: f64, epsilon: f64) -> Result<SimConfig> {
    let mut c = base.clone();
    c.noise = NoiseParams::from_sigma_dphi(
        sigma_dphi,
        base.noise.mean_segment_length,
        base.noise.segment_length_spread,
        base.noise.wavelength,
    )?;
    c.waveplate = WaveplateSpec::direct(base.waveplate.axis, epsilon);
    Ok(c)
}

/// Grid of ensembles over noise strength and direct flip-angle error.
pub fn sweep_contour(
    base: &SimConfig,
    sigma_dphi_values: &[f64],
    epsilon_values: &[f64],
    settings: SweepSettings,
) -> Result<SweepResult> {
    if sigma_dphi_values.is_empty() || epsilon_values.is_empty() {
        return Err(Error::invalid(
            "contour sweep needs non-empty sigma and epsilon lists",
        ));
    }
    if base.sequence == SequenceKind::FreeEvolution {
        return Err(Error::invalid("contour sweep needs a decoupling sequence"));
    }
    for &e in epsilon_values {
        if e > CONTOUR_EPSILON_RANGE {
            log::warn!("flip-angle error fraction {e} is outside the nominal [0, 0.5] range");
        }
    }
    let mut configs = Vec::with_capacity(sigma_dphi_values.len() * epsilon_values.len());
    for &s in sigma_dphi_values {
        for &e in epsilon_values {
            configs.push((
                format!("sigma_dphi={s}, epsilon={e}"),
                contour_cell_config(base, s, e)?,
            ));
        }
    }
    Ok(SweepResult {
        kind: SweepKind::Contour,
        axes: vec![
            Axis {
                name: "sigma_dphi".into(),
                values: sigma_dphi_values.to_vec(),
            },
            Axis {
                name: "epsilon".into(),
                values: epsilon_values.to_vec(),
            },
        ],
        cells: run_cells(base, configs, settings)?,
        base: base.clone(),
        settings,
    })
}

/// Free-evolution fidelity at each fiber length.
pub fn free_decay_curve(
    base: &SimConfig,
    lengths: &[f64],
    settings: SweepSettings,
) -> Result<SweepResult> {
    if lengths.is_empty() {
        return Err(Error::invalid("free-decay curve needs at least one length"));
    }
    if lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(Error::invalid("free-decay lengths must be positive"));
    }
    if lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "free-decay lengths must be strictly ascending",
        ));
    }
    let configs = lengths
        .iter()
        .map(|&l| {
            let mut c = base.clone();
            c.sequence = SequenceKind::FreeEvolution;
            c.num_waveplates = 0;
            c.fiber_length = l;
            (format!("fiber_length_m={l}"), c)
        })
        .collect();
    Ok(SweepResult {
        kind: SweepKind::FreeDecay,
        axes: vec![Axis {
            name: "fiber_length_m".into(),
            values: lengths.to_vec(),
        }],
        cells: run_cells(base, configs, settings)?,
        base: base.clone(),
        settings,
    })
}
