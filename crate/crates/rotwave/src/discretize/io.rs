//! Raw little-endian f64 field files with a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ComplexField, Field, Grid, RealField};
use crate::{Error, Result};

pub const ORDERING: &str = "row-major nodes (axis 0 slowest), components contiguous per node";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Sidecar {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub m: usize,
    pub components: Vec<String>,
    pub ordering: String,
}

fn paths(base: &Path) -> (PathBuf, PathBuf) {
    (base.with_extension("bin"), base.with_extension("json"))
}

pub fn write_field(base: &Path, field: &RealField, components: &[String]) -> Result<()> {
    if components.len() != field.m {
        return Err(Error::Dimension("one component name per component".into()));
    }
    let (bin, json) = paths(base);
    let bytes: Vec<u8> = field.data.iter().flat_map(|x| x.to_le_bytes()).collect();
    fs::write(bin, bytes)?;
    let g = field.grid;
    let side = Sidecar { d: g.d, n: g.n, r: g.r, m: field.m, components: components.to_vec(), ordering: ORDERING.into() };
    fs::write(json, serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

/// Complex fields are stored as interleaved real and imaginary parts.
pub fn write_complex_field(base: &Path, field: &ComplexField, names: &[String]) -> Result<()> {
    let comps: Vec<String> = names.iter().flat_map(|n| [format!("re({n})"), format!("im({n})")]).collect();
    let data = field.data.iter().flat_map(|z| [z.re, z.im]).collect();
    write_field(base, &Field { grid: field.grid, m: 2 * field.m, data }, &comps)
}

pub fn read_field(base: &Path) -> Result<(RealField, Sidecar)> {
    let (bin, json) = paths(base);
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(json)?)?;
    let grid = Grid::new(side.d, side.r, side.n)?;
    let bytes = fs::read(bin)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Invalid("field file length is not a multiple of 8".into()));
    }
    let data = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    Ok((Field::from_vec(grid, side.m, data)?, side))
}
