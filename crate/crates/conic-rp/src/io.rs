//! Instance serialization: native JSON documents and SDPA sparse import.
//!
//! The native format is a single JSON object
//!
//! ```json
//! { "cone": [{"type": "psd", "side": 3}], "m": 2, "theta": 6.0,
//!   "c": [...], "b": [...], "A": [[...], [...]] }
//! ```
//!
//! where every element is given by its flat coordinates in the scaled
//! vectorization. Floats survive a write/read cycle bit-exactly (the writer
//! emits shortest round-trip decimal forms). Projected programs carry an
//! extra `sketch` object describing the projection family, dimension, and
//! seed — enough to re-materialize the sketching matrix deterministically —
//! plus an optional `source` identifier.
//!
//! SDPA sparse files (`.dat-s`) restricted to a single PSD block can be
//! imported; the trace bound `θ`, which the format does not carry, is
//! supplied by the caller. Data is mapped verbatim: the cost matrix block
//! (matrix 0) becomes `c`, constraint matrix `i` becomes `Aᵢ`, and the
//! vector on the fourth line becomes `b`, so the native model minimizes
//! `⟨F₀, x⟩` subject to `⟨Fᵢ, x⟩ = bᵢ`. Callers that want the SDPA
//! dual-maximization reading negate the optimum.

use crate::jordan::{AlgebraElement, BlockSpec, ConeSpec};
use crate::model::{ConicProgram, ModelError};
use crate::sketch::SketchDescriptor;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};
use std::path::Path;
use thiserror::Error;

/// Errors reading or writing instance files.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid program data: {0}")]
    Model(#[from] ModelError),
    #[error("invalid cone specification: {0}")]
    Algebra(#[from] crate::jordan::AlgebraError),
    #[error("document is inconsistent: {0}")]
    Inconsistent(String),
    #[error("SDPA parse error at line {line}: {msg}")]
    Sdpa { line: usize, msg: String },
    #[error("unsupported SDPA structure: {0}")]
    Unsupported(String),
}

/// On-disk form of a program, possibly annotated with sketch provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProgramDoc {
    pub cone: Vec<BlockSpec>,
    pub m: usize,
    pub theta: f64,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    /// Present on projected programs: how the sketch was drawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sketch: Option<SketchDescriptor>,
    /// Present on projected programs: identifier of the source instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl ProgramDoc {
    /// Captures a program (no sketch annotation).
    pub fn from_program(p: &ConicProgram) -> Self {
        ProgramDoc {
            cone: p.spec().blocks().to_vec(),
            m: p.m(),
            theta: p.theta,
            c: p.c.coords().iter().copied().collect(),
            b: p.b.iter().copied().collect(),
            a: p.a.iter().map(|row| row.coords().iter().copied().collect()).collect(),
            sketch: None,
            source: None,
        }
    }

    /// Validates and converts back into a program.
    pub fn into_program(self) -> Result<ConicProgram, FormatError> {
        let spec = ConeSpec::new(self.cone)?;
        if self.a.len() != self.m {
            return Err(FormatError::Inconsistent(format!(
                "m = {} but A has {} rows",
                self.m,
                self.a.len()
            )));
        }
        let c = AlgebraElement::new(spec.clone(), DVector::from_vec(self.c))
            .map_err(FormatError::Algebra)?;
        let a = self
            .a
            .into_iter()
            .map(|row| AlgebraElement::new(spec.clone(), DVector::from_vec(row)))
            .collect::<Result<Vec<_>, _>>()?;
        let b = DVector::from_vec(self.b);
        Ok(ConicProgram::new(spec, c, a, b, self.theta)?)
    }
}

/// Writes a program as native JSON.
pub fn write_program<W: Write>(w: W, p: &ConicProgram) -> Result<(), FormatError> {
    let doc = ProgramDoc::from_program(p);
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

/// Reads a native JSON program.
pub fn read_program<R: Read>(r: R) -> Result<ConicProgram, FormatError> {
    let doc: ProgramDoc = serde_json::from_reader(r)?;
    doc.into_program()
}

/// Loads an instance from a path, dispatching on the extension: `.dat-s`
/// parses SDPA (requiring `theta`), anything else parses native JSON.
pub fn load_instance(path: &Path, theta: Option<f64>) -> Result<ConicProgram, FormatError> {
    let file = std::fs::File::open(path)?;
    let is_sdpa = path
        .file_name()
        .and_then(|s| s.to_str())
        .is_some_and(|s| s.ends_with(".dat-s"));
    if is_sdpa {
        let theta = theta.ok_or_else(|| {
            FormatError::Unsupported("SDPA import needs a trace bound (--theta)".into())
        })?;
        read_sdpa(std::io::BufReader::new(file), theta)
    } else {
        read_program(std::io::BufReader::new(file))
    }
}

/// Parses an SDPA sparse (`.dat-s`) file holding a single PSD block.
pub fn read_sdpa<R: BufRead>(r: R, theta: f64) -> Result<ConicProgram, FormatError> {
    let mut m: Option<usize> = None;
    let mut nblocks: Option<usize> = None;
    let mut side: Option<usize> = None;
    let mut b: Vec<f64> = Vec::new();
    let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new(); // (mat, i, j, v)
    let mut header_stage = 0usize;

    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('"') || trimmed.starts_with('*') {
            continue;
        }
        // The format allows {}(), and commas as separators.
        let cleaned: String = trimmed
            .chars()
            .map(|ch| if matches!(ch, '{' | '}' | '(' | ')' | ',') { ' ' } else { ch })
            .collect();
        let toks: Vec<&str> = cleaned.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let bad = |msg: String| FormatError::Sdpa { line: lineno, msg };
        match header_stage {
            0 => {
                m = Some(
                    toks[0].parse().map_err(|_| bad(format!("bad mDIM token {:?}", toks[0])))?,
                );
                header_stage = 1;
            }
            1 => {
                nblocks = Some(
                    toks[0].parse().map_err(|_| bad(format!("bad nBLOCK token {:?}", toks[0])))?,
                );
                header_stage = 2;
            }
            2 => {
                if nblocks != Some(1) || toks.len() != 1 {
                    return Err(FormatError::Unsupported(format!(
                        "only single-block files are supported, got {} blocks",
                        nblocks.unwrap_or(toks.len())
                    )));
                }
                let sz: i64 =
                    toks[0].parse().map_err(|_| bad(format!("bad block size {:?}", toks[0])))?;
                if sz <= 0 {
                    return Err(FormatError::Unsupported(
                        "diagonal (negative-size) blocks are not supported".into(),
                    ));
                }
                side = Some(sz as usize);
                header_stage = 3;
            }
            3 => {
                for t in &toks {
                    b.push(t.parse().map_err(|_| bad(format!("bad rhs value {t:?}")))?);
                }
                if b.len() >= m.unwrap() {
                    header_stage = 4;
                }
            }
            _ => {
                if toks.len() != 5 {
                    return Err(bad(format!("expected 5 fields, got {}", toks.len())));
                }
                let mat: usize =
                    toks[0].parse().map_err(|_| bad(format!("bad matrix index {:?}", toks[0])))?;
                let blk: usize =
                    toks[1].parse().map_err(|_| bad(format!("bad block index {:?}", toks[1])))?;
                if blk != 1 {
                    return Err(bad(format!("block index {blk} in a single-block file")));
                }
                let i: usize =
                    toks[2].parse().map_err(|_| bad(format!("bad row index {:?}", toks[2])))?;
                let j: usize =
                    toks[3].parse().map_err(|_| bad(format!("bad column index {:?}", toks[3])))?;
                let v: f64 =
                    toks[4].parse().map_err(|_| bad(format!("bad value {:?}", toks[4])))?;
                let s = side.unwrap();
                if i == 0 || j == 0 || i > s || j > s {
                    return Err(bad(format!("entry ({i},{j}) outside block of side {s}")));
                }
                entries.push((mat, i - 1, j - 1, v));
            }
        }
    }

    let (m, side) = match (m, side) {
        (Some(m), Some(s)) => (m, s),
        _ => {
            return Err(FormatError::Sdpa { line: 0, msg: "incomplete header".into() });
        }
    };
    if b.len() != m {
        return Err(FormatError::Inconsistent(format!(
            "header promises {m} constraints, rhs line has {}",
            b.len()
        )));
    }
    if entries.iter().any(|&(mat, ..)| mat > m) {
        return Err(FormatError::Inconsistent("entry references matrix index > mDIM".into()));
    }

    let spec = ConeSpec::psd(side);
    let mut dense = vec![nalgebra::DMatrix::<f64>::zeros(side, side); m + 1];
    for (mat, i, j, v) in entries {
        dense[mat][(i, j)] = v;
        dense[mat][(j, i)] = v;
    }
    let to_elem = |mat: &nalgebra::DMatrix<f64>| {
        let mut coords = DVector::zeros(spec.dimension());
        crate::jordan::psd_from_matrix(side, mat, coords.as_mut_slice());
        AlgebraElement::new(spec.clone(), coords).expect("sized above")
    };
    let c = to_elem(&dense[0]);
    let a: Vec<_> = dense[1..].iter().map(to_elem).collect();
    Ok(ConicProgram::new(spec, c, a, DVector::from_vec(b), theta)?)
}
