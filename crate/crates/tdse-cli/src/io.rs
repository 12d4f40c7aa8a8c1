//! Field and datum dumps: raw little-endian complex128 arrays next to a
//! JSON sidecar describing layout and grid, round-tripping bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tdse_core::grid::{DataFunction, DataGrid, Grid, SpacetimeField, C64};

use crate::CliError;

/// Sidecar metadata stored as `<name>.c128.json` next to `<name>.c128`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    /// Always `complex128`: interleaved `f64` re/im pairs.
    pub dtype: String,
    /// Always `little`.
    pub byte_order: String,
    /// Row-major dimensions: `[slices, spatial]` for a field, `[points]`
    /// for a datum.
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_grid: Option<DataGrid>,
}

fn write_raw(path: &Path, values: impl Iterator<Item = C64>, len: usize) -> Result<(), CliError> {
    let mut bytes = Vec::with_capacity(16 * len);
    for v in values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(path, bytes).map_err(CliError::from)
}

fn read_raw(path: &Path, expected: usize) -> Result<Vec<C64>, CliError> {
    let bytes = fs::read(path)?;
    if bytes.len() != 16 * expected {
        return Err(CliError::ConfigInvalid(format!(
            "{}: expected {} complex values ({} bytes), found {} bytes",
            path.display(),
            expected,
            16 * expected,
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(expected);
    for chunk in bytes.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        out.push(C64::new(re, im));
    }
    Ok(out)
}

fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    text.push('\n');
    fs::write(path, text).map_err(CliError::from)
}

fn read_sidecar(path: &Path) -> Result<Sidecar, CliError> {
    let text = fs::read_to_string(path)?;
    let sc: Sidecar = serde_json::from_str(&text).map_err(|e| {
        CliError::ConfigInvalid(format!("{}: {e}", path.display()))
    })?;
    if sc.dtype != "complex128" || sc.byte_order != "little" {
        return Err(CliError::ConfigInvalid(format!(
            "{}: unsupported dtype/byte order {}/{}",
            path.display(),
            sc.dtype,
            sc.byte_order
        )));
    }
    Ok(sc)
}

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    let raw = dir.join(format!("{stem}.c128"));
    let sidecar = dir.join(format!("{stem}.c128.json"));
    (raw, sidecar)
}

/// Dump a spacetime field; returns the raw-file name.
pub fn write_field(dir: &Path, stem: &str, u: &SpacetimeField) -> Result<String, CliError> {
    let (raw, sidecar) = paths(dir, stem);
    write_raw(&raw, u.values.iter().copied(), u.values.len())?;
    write_sidecar(
        &sidecar,
        &Sidecar {
            dtype: "complex128".into(),
            byte_order: "little".into(),
            shape: vec![u.grid.num_slices(), u.grid.spatial_size()],
            grid: Some(u.grid),
            data_grid: None,
        },
    )?;
    Ok(format!("{stem}.c128"))
}

/// Read a spacetime field dumped by [`write_field`].
pub fn read_field(dir: &Path, stem: &str) -> Result<SpacetimeField, CliError> {
    let (raw, sidecar) = paths(dir, stem);
    let sc = read_sidecar(&sidecar)?;
    let grid = sc.grid.ok_or_else(|| {
        CliError::ConfigInvalid(format!("{}: sidecar has no grid", sidecar.display()))
    })?;
    let expect = [grid.num_slices(), grid.spatial_size()];
    if sc.shape != expect {
        return Err(CliError::ConfigInvalid(format!(
            "{}: shape {:?} does not match the grid ({:?})",
            sidecar.display(),
            sc.shape,
            expect
        )));
    }
    let values = read_raw(&raw, expect[0] * expect[1])?;
    let mut field = SpacetimeField::zeros(grid);
    for (dst, src) in field.values.iter_mut().zip(values) {
        *dst = src;
    }
    Ok(field)
}

/// Dump a datum; returns the raw-file name.
pub fn write_datum(dir: &Path, stem: &str, f: &DataFunction) -> Result<String, CliError> {
    let (raw, sidecar) = paths(dir, stem);
    write_raw(&raw, f.values.iter().copied(), f.values.len())?;
    write_sidecar(
        &sidecar,
        &Sidecar {
            dtype: "complex128".into(),
            byte_order: "little".into(),
            shape: vec![f.values.len()],
            grid: None,
            data_grid: Some(f.grid),
        },
    )?;
    Ok(format!("{stem}.c128"))
}

/// Read a datum dumped by [`write_datum`].  `path` names the raw file; the
/// sidecar is found next to it.
pub fn read_datum(path: &Path) -> Result<DataFunction, CliError> {
    let sidecar_path = PathBuf::from(format!("{}.json", path.display()));
    let sc = read_sidecar(&sidecar_path)?;
    let dg = sc.data_grid.ok_or_else(|| {
        CliError::ConfigInvalid(format!(
            "{}: sidecar has no data_grid",
            sidecar_path.display()
        ))
    })?;
    if sc.shape != [dg.total_points()] {
        return Err(CliError::ConfigInvalid(format!(
            "{}: shape {:?} does not match the window ({} points)",
            sidecar_path.display(),
            sc.shape,
            dg.total_points()
        )));
    }
    let values = read_raw(path, dg.total_points())?;
    let mut f = DataFunction::zeros(dg);
    f.values = values;
    Ok(f)
}

/// True when two fields agree bit for bit.
pub fn bit_identical(a: &SpacetimeField, b: &SpacetimeField) -> bool {
    a.grid == b.grid
        && a.values
            .iter()
            .zip(b.values.iter())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
}
