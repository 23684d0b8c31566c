//! System and reduced-model bundles: a directory of MatrixMarket files plus a TOML manifest.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use shiftbt::rom::{Method, Rom};
use shiftbt::LtiSystem;

use crate::error::CliError;
use crate::fsutil::write_atomic;
use crate::mtx;

pub const MANIFEST: &str = "manifest.toml";
pub const ROM_META: &str = "meta.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    #[serde(default)]
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemBundle {
    pub name: String,
    pub system: LtiSystem,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = toml::to_string(value).map_err(|e| CliError::Format(e.to_string()))?;
    write_atomic(path, text.as_bytes())
}

fn expect_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<(), CliError> {
    if m.shape() != (rows, cols) {
        return Err(CliError::Format(format!("{name} is {}x{}, manifest says {rows}x{cols}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Reads `A`, `B`, `C` and the optional `D` (default zero) and `X0` (required when `q > 0`).
pub fn read_system(dir: &Path) -> Result<SystemBundle, CliError> {
    let manifest: Manifest = read_toml(&dir.join(MANIFEST))?;
    let Manifest { n, m, p, q, .. } = manifest;
    let a = mtx::read(&dir.join("A.mtx"))?;
    expect_shape("A", &a, n, n)?;
    let b = mtx::read(&dir.join("B.mtx"))?;
    expect_shape("B", &b, n, m)?;
    let c = mtx::read(&dir.join("C.mtx"))?;
    expect_shape("C", &c, p, n)?;
    let d_path = dir.join("D.mtx");
    let d = if d_path.exists() { mtx::read(&d_path)? } else { DMatrix::zeros(p, m) };
    expect_shape("D", &d, p, m)?;
    let x0_path = dir.join("X0.mtx");
    let x0 = if x0_path.exists() {
        mtx::read(&x0_path)?
    } else if q == 0 {
        DMatrix::zeros(n, 0)
    } else {
        return Err(CliError::Format(format!("manifest has q = {q} but X0.mtx is missing")));
    };
    expect_shape("X0", &x0, n, q)?;
    Ok(SystemBundle { name: manifest.name, system: LtiSystem::new(a, b, c, d, x0)? })
}

pub fn write_system(dir: &Path, name: &str, sys: &LtiSystem) -> Result<(), CliError> {
    let manifest =
        Manifest { name: name.to_string(), n: sys.order(), m: sys.inputs(), p: sys.outputs(), q: sys.initial_dim() };
    mtx::write(&dir.join("A.mtx"), &sys.a)?;
    mtx::write(&dir.join("B.mtx"), &sys.b)?;
    mtx::write(&dir.join("C.mtx"), &sys.c)?;
    mtx::write(&dir.join("D.mtx"), &sys.d)?;
    if sys.initial_dim() > 0 {
        mtx::write(&dir.join("X0.mtx"), &sys.x0)?;
    }
    write_toml(&dir.join(MANIFEST), &manifest)
}

/// Metadata stored next to the reduced matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomMeta {
    pub method: String,
    pub orders: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub hsv: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
    /// `(α, c_u(α))` pairs visited while choosing α.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha_trace: Vec<[f64; 2]>,
}

const ROM_FILES: [&str; 6] = ["Ar", "Br", "Cr", "Dr", "X0r", "Fr"];

pub fn write_rom(dir: &Path, rom: &Rom, meta: &RomMeta) -> Result<(), CliError> {
    for (name, m) in ROM_FILES.iter().zip([&rom.a, &rom.b, &rom.c, &rom.d, &rom.x0, &rom.f]) {
        mtx::write(&dir.join(format!("{name}.mtx")), m)?;
    }
    write_toml(&dir.join(ROM_META), meta)
}

pub fn read_rom(dir: &Path) -> Result<(Rom, RomMeta), CliError> {
    let meta: RomMeta = read_toml(&dir.join(ROM_META))?;
    let mut mats = Vec::with_capacity(6);
    for name in ROM_FILES {
        mats.push(mtx::read(&dir.join(format!("{name}.mtx")))?);
    }
    let method: Method = meta.method.parse()?;
    let [a, b, c, d, x0, f]: [DMatrix<f64>; 6] = mats.try_into().expect("six matrices");
    let r = a.nrows();
    let (m, p, q) = (b.ncols(), c.nrows(), x0.ncols());
    expect_shape("Ar", &a, r, r)?;
    expect_shape("Br", &b, r, m)?;
    expect_shape("Cr", &c, p, r)?;
    expect_shape("Dr", &d, p, m)?;
    expect_shape("X0r", &x0, r, q)?;
    expect_shape("Fr", &f, p, q)?;
    let rom = Rom { a, b, c, d, x0, f, alpha: meta.alpha, beta: meta.beta, method, hsv: meta.hsv.clone() };
    Ok((rom, meta))
}
