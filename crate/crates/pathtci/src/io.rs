//! Ensemble containers.
//!
//! Binary format (little-endian, bit-exact round trip):
//! magic, version, then a header `(dim, n_steps, horizon, n_paths, seed,
//! flags)`, then per-path blocks: node values, then increments when present.
//! Coupled containers carry two value blocks per pair (base, shifted), the
//! shared increments, the difference path, per-step energies, and the
//! per-pair scalars (log-density, truncation flag).
//!
//! The CSV form is one row per `(path, node)` with values and the increment
//! of the outgoing step; floats are printed in shortest round-trip form, so
//! reading back reproduces the exact bits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::girsanov::{CoupledEnsemble, CoupledPair};
use crate::grid::TimeGrid;
use crate::path::{PathEnsemble, PathSample};

const ENSEMBLE_MAGIC: &[u8; 4] = b"PTCE";
const COUPLED_MAGIC: &[u8; 4] = b"PTCC";
const FORMAT_VERSION: u32 = 1;

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn u32(&mut self, v: u32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        for v in vs {
            self.f64(*v)?;
        }
        Ok(())
    }
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.inner.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.f64()?);
        }
        Ok(out)
    }
}

const FLAG_NOISE: u32 = 1;
const FLAG_WEIGHTS: u32 = 2;

pub fn write_ensemble_binary(path: &Path, ens: &PathEnsemble) -> Result<()> {
    let file = File::create(path)?;
    let mut w = Writer {
        inner: BufWriter::new(file),
    };
    w.inner.write_all(ENSEMBLE_MAGIC)?;
    w.u32(FORMAT_VERSION)?;
    w.u32(ens.dim() as u32)?;
    w.u64(ens.grid().n_steps() as u64)?;
    w.f64(ens.grid().horizon())?;
    w.u64(ens.n_paths() as u64)?;
    w.u64(ens.seed())?;
    let has_noise = ens.paths().iter().all(|p| p.noise_flat().is_some());
    let mut flags = 0u32;
    if has_noise {
        flags |= FLAG_NOISE;
    }
    if ens.explicit_weights().is_some() {
        flags |= FLAG_WEIGHTS;
    }
    w.u32(flags)?;
    for p in ens.paths() {
        w.f64s(p.values_flat())?;
        if has_noise {
            w.f64s(p.noise_flat().expect("checked above"))?;
        }
    }
    if let Some(weights) = ens.explicit_weights() {
        w.f64s(weights)?;
    }
    w.inner.flush()?;
    Ok(())
}

pub fn read_ensemble_binary(path: &Path) -> Result<PathEnsemble> {
    let file = File::open(path)?;
    let mut r = Reader {
        inner: BufReader::new(file),
    };
    let mut magic = [0u8; 4];
    r.inner.read_exact(&mut magic)?;
    if &magic != ENSEMBLE_MAGIC {
        return Err(Error::Format("not an ensemble container".into()));
    }
    if r.u32()? != FORMAT_VERSION {
        return Err(Error::Format("unsupported container version".into()));
    }
    let dim = r.u32()? as usize;
    let n_steps = r.u64()? as usize;
    let horizon = r.f64()?;
    let n_paths = r.u64()? as usize;
    let seed = r.u64()?;
    let flags = r.u32()?;
    let grid = TimeGrid::new(horizon, n_steps)?;
    let mut paths = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        let values = r.f64s((n_steps + 1) * dim)?;
        let noise = if flags & FLAG_NOISE != 0 {
            Some(r.f64s(n_steps * dim)?)
        } else {
            None
        };
        paths.push(PathSample::new(dim, values, noise)?);
    }
    let ens = PathEnsemble::new(grid, paths, seed)?;
    if flags & FLAG_WEIGHTS != 0 {
        let weights = r.f64s(n_paths)?;
        return ens.with_weights(weights);
    }
    Ok(ens)
}

pub fn write_ensemble_csv(path: &Path, ens: &PathEnsemble) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "# dim={} n_steps={} horizon={} n_paths={} seed={} noise={}",
        ens.dim(),
        ens.grid().n_steps(),
        ens.grid().horizon(),
        ens.n_paths(),
        ens.seed(),
        u8::from(ens.paths().iter().all(|p| p.noise_flat().is_some())),
    )?;
    let d = ens.dim();
    let mut header = String::from("path,node,t");
    for j in 0..d {
        header.push_str(&format!(",v{j}"));
    }
    for j in 0..d {
        header.push_str(&format!(",dw{j}"));
    }
    writeln!(w, "{header}")?;
    for (i, p) in ens.paths().iter().enumerate() {
        for k in 0..p.n_nodes() {
            let mut row = format!("{i},{k},{}", ens.grid().time(k));
            for v in p.node(k) {
                row.push_str(&format!(",{v}"));
            }
            if k < p.n_steps() {
                if let Some(dw) = p.noise_step(k) {
                    for v in dw {
                        row.push_str(&format!(",{v}"));
                    }
                }
            }
            writeln!(w, "{row}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_ensemble_csv(path: &Path) -> Result<PathEnsemble> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))?;
    let mut dim = 0usize;
    let mut n_steps = 0usize;
    let mut horizon = f64::NAN;
    let mut n_paths = 0usize;
    let mut seed = 0u64;
    let mut has_noise = false;
    for field in header.trim_start_matches('#').split_whitespace() {
        let Some((key, value)) = field.split_once('=') else {
            continue;
        };
        match key {
            "dim" => dim = value.parse().map_err(fmt_err)?,
            "n_steps" => n_steps = value.parse().map_err(fmt_err)?,
            "horizon" => horizon = value.parse().map_err(fmt_err)?,
            "n_paths" => n_paths = value.parse().map_err(fmt_err)?,
            "seed" => seed = value.parse().map_err(fmt_err)?,
            "noise" => has_noise = value == "1",
            _ => {}
        }
    }
    lines.next(); // column header
    let grid = TimeGrid::new(horizon, n_steps)?;
    let mut values = vec![Vec::with_capacity((n_steps + 1) * dim); n_paths];
    let mut noise = vec![Vec::with_capacity(n_steps * dim); n_paths];
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 3 + dim {
            return Err(Error::Format(format!("short CSV row: {line}")));
        }
        let path_idx: usize = cells[0].parse().map_err(fmt_err)?;
        let node_idx: usize = cells[1].parse().map_err(fmt_err)?;
        for j in 0..dim {
            values[path_idx].push(cells[3 + j].parse().map_err(fmt_err)?);
        }
        if has_noise && node_idx < n_steps {
            for j in 0..dim {
                noise[path_idx].push(cells[3 + dim + j].parse().map_err(fmt_err)?);
            }
        }
    }
    let mut paths = Vec::with_capacity(n_paths);
    for (v, dw) in values.into_iter().zip(noise) {
        paths.push(PathSample::new(dim, v, has_noise.then_some(dw))?);
    }
    PathEnsemble::new(grid, paths, seed)
}

fn fmt_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Format(e.to_string())
}

pub fn write_coupled_binary(path: &Path, ens: &CoupledEnsemble) -> Result<()> {
    let file = File::create(path)?;
    let mut w = Writer {
        inner: BufWriter::new(file),
    };
    let grid = ens.grid();
    let dim = ens.pairs()[0].base.dim();
    w.inner.write_all(COUPLED_MAGIC)?;
    w.u32(FORMAT_VERSION)?;
    w.u32(dim as u32)?;
    w.u64(grid.n_steps() as u64)?;
    w.f64(grid.horizon())?;
    w.u64(ens.n_pairs() as u64)?;
    w.u64(ens.seed())?;
    w.u32(0)?;
    for pair in ens.pairs() {
        w.f64s(pair.base.values_flat())?;
        w.f64s(pair.shifted.values_flat())?;
        w.f64s(pair.base.noise_flat().expect("coupled pairs carry noise"))?;
        for k in 0..grid.n_nodes() {
            w.f64s(pair.diff_node(k))?;
        }
        w.f64s(pair.step_energies())?;
        w.f64(pair.log_density)?;
        w.u32(u32::from(pair.truncated))?;
    }
    w.inner.flush()?;
    Ok(())
}

/// Summary of a coupled container read back from disk; pairs are rebuilt
/// with the same invariants the simulator guarantees.
pub fn read_coupled_binary(path: &Path) -> Result<CoupledEnsemble> {
    let file = File::open(path)?;
    let mut r = Reader {
        inner: BufReader::new(file),
    };
    let mut magic = [0u8; 4];
    r.inner.read_exact(&mut magic)?;
    if &magic != COUPLED_MAGIC {
        return Err(Error::Format("not a coupled container".into()));
    }
    if r.u32()? != FORMAT_VERSION {
        return Err(Error::Format("unsupported container version".into()));
    }
    let dim = r.u32()? as usize;
    let n_steps = r.u64()? as usize;
    let horizon = r.f64()?;
    let n_pairs = r.u64()? as usize;
    let seed = r.u64()?;
    let _flags = r.u32()?;
    let grid = TimeGrid::new(horizon, n_steps)?;
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let base_values = r.f64s((n_steps + 1) * dim)?;
        let shifted_values = r.f64s((n_steps + 1) * dim)?;
        let noise = r.f64s(n_steps * dim)?;
        let diff = r.f64s((n_steps + 1) * dim)?;
        let step_energies = r.f64s(n_steps)?;
        let log_density = r.f64()?;
        let truncated = r.u32()? != 0;
        pairs.push(CoupledPair::from_parts(
            PathSample::new(dim, base_values, Some(noise))?,
            PathSample::new(dim, shifted_values, None)?,
            diff,
            step_energies,
            log_density,
            truncated,
        )?);
    }
    CoupledEnsemble::from_parts(grid, seed, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::girsanov::{simulate_coupled, DriftPerturbation};
    use crate::sde::{linear_drift, scalar_diffusion, simulate_paths, SdeProblem};

    fn sample_ensemble() -> PathEnsemble {
        let problem = SdeProblem::new(vec![0.3, -0.2], linear_drift(-0.5), scalar_diffusion(0.7))
            .unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        simulate_paths(&problem, &grid, 5, 123).unwrap()
    }

    #[test]
    fn binary_roundtrip_is_bit_exact() {
        let ens = sample_ensemble();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("ens.ptce");
        write_ensemble_binary(&file, &ens).unwrap();
        let back = read_ensemble_binary(&file).unwrap();
        assert_eq!(back.n_paths(), ens.n_paths());
        assert_eq!(back.seed(), ens.seed());
        assert!(back.grid().matches(ens.grid()));
        for (a, b) in ens.paths().iter().zip(back.paths()) {
            assert_eq!(a.values_flat(), b.values_flat());
            assert_eq!(a.noise_flat(), b.noise_flat());
        }
    }

    #[test]
    fn binary_roundtrip_preserves_weights() {
        let ens = sample_ensemble()
            .with_weights(vec![0.1, 0.2, 0.3, 0.25, 0.15])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("w.ptce");
        write_ensemble_binary(&file, &ens).unwrap();
        let back = read_ensemble_binary(&file).unwrap();
        assert_eq!(back.explicit_weights(), ens.explicit_weights());
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let ens = sample_ensemble();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("ens.csv");
        write_ensemble_csv(&file, &ens).unwrap();
        let back = read_ensemble_csv(&file).unwrap();
        for (a, b) in ens.paths().iter().zip(back.paths()) {
            assert_eq!(a.values_flat(), b.values_flat());
            assert_eq!(a.noise_flat(), b.noise_flat());
        }
    }

    #[test]
    fn coupled_roundtrip_is_bit_exact() {
        let problem = SdeProblem::new(vec![0.0], linear_drift(-1.0), scalar_diffusion(1.0))
            .unwrap();
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let ens = simulate_coupled(&problem, &DriftPerturbation::constant(1.0), &grid, 4, 7)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("pairs.ptcc");
        write_coupled_binary(&file, &ens).unwrap();
        let back = read_coupled_binary(&file).unwrap();
        assert_eq!(back.n_pairs(), ens.n_pairs());
        for (a, b) in ens.pairs().iter().zip(back.pairs()) {
            assert_eq!(a.base.values_flat(), b.base.values_flat());
            assert_eq!(a.shifted.values_flat(), b.shifted.values_flat());
            assert_eq!(a.step_energies(), b.step_energies());
            assert_eq!(a.log_density, b.log_density);
            for k in 0..grid.n_nodes() {
                assert_eq!(a.diff_node(k), b.diff_node(k));
            }
        }
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("junk.bin");
        std::fs::write(&file, b"NOPE0000").unwrap();
        assert!(matches!(
            read_ensemble_binary(&file),
            Err(Error::Format(_))
        ));
    }
}
