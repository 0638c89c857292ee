//! On-disk formats: binary field dumps, CSV tables, polyline lists.
//!
//! Field dumps are little-endian IEEE-754 doubles behind a 13-byte header:
//! magic `FGL1`, u32 N_θ, u32 N_φ, and a one-byte kind tag (0 = real
//! scalar, 1 = complex scalar, 2 = real 1-form). Values follow in
//! row-major node order (θ-major); complex nodes store re then im,
//! 1-forms store the θ then the φ component per node.
//!
//! CSV files use shortest-roundtrip float formatting, which is
//! deterministic, so identical runs produce byte-identical artifacts.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::energy::EnergyBreakdown;
use crate::grid::{Field, OneForm, PeriodicGrid, RealField, ScalarField};
use crate::solver::{SolverTrace, SweepRow};
use crate::vortex::{PolylineCurrent, VortexSet};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"FGL1";

/// A dumpable field with its kind tag.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldData {
    Real(RealField),
    Complex(ScalarField),
    Form(OneForm<f64>),
}

impl FieldData {
    fn kind_tag(&self) -> u8 {
        match self {
            FieldData::Real(_) => 0,
            FieldData::Complex(_) => 1,
            FieldData::Form(_) => 2,
        }
    }

    fn grid(&self) -> PeriodicGrid {
        match self {
            FieldData::Real(f) => f.grid(),
            FieldData::Complex(f) => f.grid(),
            FieldData::Form(f) => f.grid(),
        }
    }
}

pub fn encode_field(field: &FieldData, out: &mut impl Write) -> Result<()> {
    let grid = field.grid();
    out.write_all(MAGIC)?;
    out.write_all(&(grid.n_theta() as u32).to_le_bytes())?;
    out.write_all(&(grid.n_phi() as u32).to_le_bytes())?;
    out.write_all(&[field.kind_tag()])?;
    match field {
        FieldData::Real(f) => {
            for v in f.data() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        FieldData::Complex(f) => {
            for v in f.data() {
                out.write_all(&v.re.to_le_bytes())?;
                out.write_all(&v.im.to_le_bytes())?;
            }
        }
        FieldData::Form(f) => {
            for k in 0..grid.len() {
                out.write_all(&f.theta[k].to_le_bytes())?;
                out.write_all(&f.phi[k].to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn decode_field(input: &mut impl Read) -> Result<FieldData> {
    let mut header = [0u8; 13];
    input.read_exact(&mut header).map_err(|_| {
        Error::Format("field dump too short for header".into())
    })?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic; not a field dump".into()));
    }
    let n_theta = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let n_phi = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let kind = header[12];
    let grid = PeriodicGrid::new(n_theta, n_phi)?;

    let mut read_doubles = |count: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; count * 8];
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("field dump truncated".into()))?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };

    match kind {
        0 => Ok(FieldData::Real(Field::from_vec(grid, read_doubles(grid.len())?)?)),
        1 => {
            let raw = read_doubles(2 * grid.len())?;
            let data = raw
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect();
            Ok(FieldData::Complex(Field::from_vec(grid, data)?))
        }
        2 => {
            let raw = read_doubles(2 * grid.len())?;
            let mut theta = Vec::with_capacity(grid.len());
            let mut phi = Vec::with_capacity(grid.len());
            for c in raw.chunks_exact(2) {
                theta.push(c[0]);
                phi.push(c[1]);
            }
            Ok(FieldData::Form(OneForm::from_components(grid, theta, phi)?))
        }
        other => Err(Error::Format(format!("unknown field kind tag {other}"))),
    }
}

pub fn write_field_dump(path: &Path, field: &FieldData) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    encode_field(field, &mut out)
}

pub fn read_field_dump(path: &Path) -> Result<FieldData> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    decode_field(&mut input)
}

// ----------------------------------------------------------------------
// CSV writers
// ----------------------------------------------------------------------

pub fn write_trace_csv(out: &mut impl Write, trace: &SolverTrace) -> Result<()> {
    writeln!(out, "iter,kinetic,maxwell,potential,total,grad_norm,step,reprojected")?;
    for row in &trace.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.iter,
            row.energy.kinetic,
            row.energy.maxwell,
            row.energy.potential,
            row.energy.total,
            row.grad_norm,
            row.step,
            row.reprojected as u8
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv(out: &mut impl Write, rows: &[SweepRow]) -> Result<()> {
    writeln!(
        out,
        "epsilon,N,total,kinetic,maxwell,potential,vortex_count,energy_over_logeps"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.epsilon,
            r.n,
            r.energy.total,
            r.energy.kinetic,
            r.energy.maxwell,
            r.energy.potential,
            r.vortex_count,
            r.energy_over_logeps
        )?;
    }
    Ok(())
}

pub fn write_vortices_csv(out: &mut impl Write, set: &VortexSet) -> Result<()> {
    writeln!(out, "theta,phi,degree")?;
    for v in &set.vortices {
        writeln!(out, "{},{},{}", v.position.theta, v.position.phi, v.degree)?;
    }
    Ok(())
}

pub fn write_sigma_csv(out: &mut impl Write, sigma: &RealField) -> Result<()> {
    writeln!(out, "theta,phi,sigma")?;
    let grid = sigma.grid();
    for i in 0..grid.n_theta() {
        for j in 0..grid.n_phi() {
            writeln!(out, "{},{},{}", grid.theta(i), grid.phi(j), sigma.at(i, j))?;
        }
    }
    Ok(())
}

pub fn write_energy_summary_csv(out: &mut impl Write, e: &EnergyBreakdown) -> Result<()> {
    writeln!(out, "kinetic,maxwell,potential,total")?;
    writeln!(out, "{},{},{},{}", e.kinetic, e.maxwell, e.potential, e.total)?;
    Ok(())
}

// ----------------------------------------------------------------------
// Polyline CSV
// ----------------------------------------------------------------------

/// Vertex list with a metadata header line:
/// `# multiplicity=<k> closed=<bool>` followed by `theta,phi` rows.
pub fn write_polyline_csv(out: &mut impl Write, curve: &PolylineCurrent) -> Result<()> {
    writeln!(
        out,
        "# multiplicity={} closed={}",
        curve.multiplicity(),
        curve.is_closed()
    )?;
    writeln!(out, "theta,phi")?;
    for v in curve.vertices() {
        writeln!(out, "{},{}", v[0], v[1])?;
    }
    Ok(())
}

pub fn read_polyline_csv(input: &mut impl Read) -> Result<PolylineCurrent> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty polyline file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("polyline file must start with a # metadata line".into()))?;
    let mut multiplicity = None;
    let mut closed = None;
    for token in header.split_whitespace() {
        if let Some(v) = token.strip_prefix("multiplicity=") {
            multiplicity = Some(v.parse::<i64>().map_err(|e| {
                Error::Format(format!("bad multiplicity '{v}': {e}"))
            })?);
        } else if let Some(v) = token.strip_prefix("closed=") {
            closed = Some(v.parse::<bool>().map_err(|e| {
                Error::Format(format!("bad closed flag '{v}': {e}"))
            })?);
        }
    }
    let multiplicity = multiplicity
        .ok_or_else(|| Error::Format("missing multiplicity in polyline header".into()))?;
    let closed =
        closed.ok_or_else(|| Error::Format("missing closed flag in polyline header".into()))?;

    let mut vertices = Vec::new();
    for (k, line) in lines.enumerate() {
        if k == 0 && line.trim() == "theta,phi" {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let theta: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("bad vertex line '{line}'")))?;
        let phi: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("bad vertex line '{line}'")))?;
        vertices.push([theta, phi]);
    }
    PolylineCurrent::new(vertices, closed, multiplicity)
}
