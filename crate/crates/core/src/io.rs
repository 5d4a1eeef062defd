//! Emission of the on-disk artifact formats: configurations and samples as
//! CSV, densities as CSV, everything structured as JSON. Floats are written
//! with Rust's shortest round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::bathtub::{BathtubDensity, BathtubResult};
use crate::error::Result;
use crate::gibbs::DensityEstimate;
use crate::model::Configuration;

/// `index,x,y` rows, one per point.
pub fn write_configuration_csv(w: &mut impl Write, cfg: &Configuration) -> Result<()> {
    writeln!(w, "index,x,y")?;
    for (i, p) in cfg.points().iter().enumerate() {
        writeln!(w, "{},{},{}", i, p.x, p.y)?;
    }
    Ok(())
}

pub fn save_configuration_csv(path: impl AsRef<Path>, cfg: &Configuration) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_configuration_csv(&mut w, cfg)?;
    Ok(w.flush()?)
}

/// `step,particle,x,y` rows; `step` is the index of the recorded sample.
pub fn write_samples_csv(w: &mut impl Write, samples: &[Configuration]) -> Result<()> {
    writeln!(w, "step,particle,x,y")?;
    for (step, cfg) in samples.iter().enumerate() {
        for (j, p) in cfg.points().iter().enumerate() {
            writeln!(w, "{},{},{},{}", step, j, p.x, p.y)?;
        }
    }
    Ok(())
}

pub fn save_samples_csv(path: impl AsRef<Path>, samples: &[Configuration]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_samples_csv(&mut w, samples)?;
    Ok(w.flush()?)
}

/// Radial estimates as `r_lo,r_hi,value,std_error`; grid estimates as
/// `x,y,value` at cell centers.
pub fn write_density_csv(w: &mut impl Write, est: &DensityEstimate) -> Result<()> {
    match est {
        DensityEstimate::Radial {
            bin_edges,
            values,
            standard_errors,
            ..
        } => {
            writeln!(w, "r_lo,r_hi,value,std_error")?;
            for (k, v) in values.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    bin_edges[k],
                    bin_edges[k + 1],
                    v,
                    standard_errors[k]
                )?;
            }
        }
        DensityEstimate::Grid {
            x_min,
            y_min,
            cell,
            nx,
            values,
            ..
        } => {
            writeln!(w, "x,y,value")?;
            for (idx, v) in values.iter().enumerate() {
                let ix = idx % nx;
                let iy = idx / nx;
                let x = x_min + (ix as f64 + 0.5) * cell;
                let y = y_min + (iy as f64 + 0.5) * cell;
                writeln!(w, "{},{},{}", x, y, v)?;
            }
        }
    }
    Ok(())
}

pub fn save_density_csv(path: impl AsRef<Path>, est: &DensityEstimate) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_density_csv(&mut w, est)?;
    Ok(w.flush()?)
}

/// Grid bathtub densities as `x,y,rho`. Closed-form results have no grid and
/// write only the header.
pub fn write_bathtub_density_csv(w: &mut impl Write, res: &BathtubResult) -> Result<()> {
    writeln!(w, "x,y,rho")?;
    if let BathtubDensity::Grid { grid, values } = &res.density {
        for (idx, rho) in values.iter().enumerate() {
            let c = grid.center(idx);
            writeln!(w, "{},{},{}", c.x, c.y, rho)?;
        }
    }
    Ok(())
}

pub fn save_bathtub_density_csv(path: impl AsRef<Path>, res: &BathtubResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_bathtub_density_csv(&mut w, res)?;
    Ok(w.flush()?)
}

/// Pretty-printed JSON file.
pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))?;
    writeln!(w)?;
    Ok(w.flush()?)
}
