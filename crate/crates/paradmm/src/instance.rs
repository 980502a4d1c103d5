//! Instance directories: one matrix file per array plus a `meta.json`
//! manifest recording the kind, dimensions, seed and a SHA-256 checksum of
//! the data files in manifest order.

use std::fs;
use std::path::{Path, PathBuf};

use paradmm_core::problems::{BasisPursuitInstance, ExchangeInstance};
use paradmm_core::solvers::Reference;
use paradmm_core::{BlockFunction, BlockOperator, BlockVector, Matrix, Problem, SeparableObjective};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::format;

pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Exchange,
    BasisPursuit,
    /// Bare coupling blocks `A_i` and `c` with `f_i = 0`.
    Operator,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub n_blocks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub role: String,
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub format_version: u32,
    pub kind: InstanceKind,
    pub dims: Dims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Nonzero positions of a sparse planted solution, in draw order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
    pub files: Vec<FileEntry>,
    /// Hex SHA-256 over the files' bytes, in `files` order.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Exchange(ExchangeInstance),
    BasisPursuit(BasisPursuitInstance),
    Operator { blocks: Vec<Matrix>, rhs: Vec<f64> },
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Exchange(_) => InstanceKind::Exchange,
            Instance::BasisPursuit(_) => InstanceKind::BasisPursuit,
            Instance::Operator { .. } => InstanceKind::Operator,
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        Ok(match self {
            Instance::Exchange(e) => e.problem(),
            Instance::BasisPursuit(b) => b.problem(),
            Instance::Operator { blocks, rhs } => {
                let op = BlockOperator::new(blocks.clone(), rhs.clone())?;
                let n = op.num_blocks();
                Problem::new(op, SeparableObjective::uniform(n, BlockFunction::Zero))?
            }
        })
    }

    /// Planted solution, with `λ* = 0` where it is known.
    pub fn reference(&self) -> Option<Reference> {
        match self {
            Instance::Exchange(e) => Some(Reference {
                x: e.x_star.clone(),
                lambda: Some(vec![0.0; e.n]),
            }),
            Instance::BasisPursuit(b) => Some(Reference {
                x: b.x_star_blocks(),
                lambda: None,
            }),
            Instance::Operator { .. } => None,
        }
    }

    fn arrays(&self) -> (Dims, Vec<(String, String, Matrix)>) {
        let mut files = Vec::new();
        let dims = match self {
            Instance::Exchange(e) => {
                for (i, c) in e.c.iter().enumerate() {
                    files.push((format!("C[{i}]"), format!("C_{i:05}.jadm"), c.clone()));
                }
                files.push(("d".into(), "d.jadm".into(), columns(&e.d)));
                files.push(("x_star".into(), "x_star.jadm".into(), columns(e.x_star.blocks())));
                Dims {
                    n: Some(e.n),
                    n_blocks: e.n_blocks,
                    p: Some(e.p),
                    ..Dims::default()
                }
            }
            Instance::BasisPursuit(b) => {
                files.push(("A".into(), "A.jadm".into(), b.a.clone()));
                files.push(("c".into(), "c.jadm".into(), format::vector_matrix(&b.c)));
                files.push(("x_star".into(), "x_star.jadm".into(), format::vector_matrix(&b.x_star)));
                Dims {
                    n: Some(b.n),
                    n_blocks: b.n_blocks,
                    m: Some(b.m),
                    k: Some(b.k),
                    ..Dims::default()
                }
            }
            Instance::Operator { blocks, rhs } => {
                for (i, a) in blocks.iter().enumerate() {
                    files.push((format!("A[{i}]"), format!("A_{i:05}.jadm"), a.clone()));
                }
                files.push(("c".into(), "c.jadm".into(), format::vector_matrix(rhs)));
                Dims {
                    n_blocks: blocks.len(),
                    m: Some(rhs.len()),
                    ..Dims::default()
                }
            }
        };
        (dims, files)
    }

    /// Writes the instance into `dir` (created if missing) and returns its
    /// metadata.
    pub fn save(&self, dir: &Path) -> Result<Meta> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (dims, arrays) = self.arrays();
        let mut hasher = Sha256::new();
        let mut files = Vec::with_capacity(arrays.len());
        for (role, file, m) in arrays {
            let bytes = format::encode_matrix(&m);
            hasher.update(&bytes);
            let path = dir.join(&file);
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            files.push(FileEntry {
                role,
                file,
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let (seed, sigma, support) = match self {
            Instance::Exchange(e) => (Some(e.seed), None, None),
            Instance::BasisPursuit(b) => (Some(b.seed), Some(b.sigma), Some(b.support.clone())),
            Instance::Operator { .. } => (None, None, None),
        };
        let meta = Meta {
            format_version: format::VERSION,
            kind: self.kind(),
            dims,
            seed,
            sigma,
            support,
            files,
            sha256: hex::encode(hasher.finalize()),
        };
        let path = dir.join(META_FILE);
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(meta)
    }

    /// Reads and checksums an instance directory.
    pub fn load(dir: &Path) -> Result<(Instance, Meta)> {
        let meta = read_meta(dir)?;
        let mut hasher = Sha256::new();
        let mut arrays = Vec::with_capacity(meta.files.len());
        for f in &meta.files {
            let path = dir.join(&f.file);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            hasher.update(&bytes);
            let m = format::decode_matrix(&bytes, &path)?;
            if (m.rows(), m.cols()) != (f.rows, f.cols) {
                return Err(Error::format(
                    &path,
                    format!("manifest says {}×{}, file holds {}×{}", f.rows, f.cols, m.rows(), m.cols()),
                ));
            }
            arrays.push((f.role.as_str(), m, path));
        }
        let sum = hex::encode(hasher.finalize());
        if sum != meta.sha256 {
            return Err(Error::format(
                dir.join(META_FILE),
                format!("checksum mismatch: manifest {}, data {sum}", meta.sha256),
            ));
        }
        let inst = build(&meta, arrays, dir)?;
        Ok((inst, meta))
    }
}

pub fn read_meta(dir: &Path) -> Result<Meta> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))
}

fn columns(vs: &[Vec<f64>]) -> Matrix {
    let rows = vs.first().map_or(0, Vec::len);
    Matrix::from_col_major(rows, vs.len(), vs.concat()).expect("equal lengths")
}

fn take(arrays: &mut Vec<(&str, Matrix, PathBuf)>, role: &str, dir: &Path) -> Result<(Matrix, PathBuf)> {
    let at = arrays
        .iter()
        .position(|(r, _, _)| *r == role)
        .ok_or_else(|| Error::format(dir.join(META_FILE), format!("no file with role {role}")))?;
    let (_, m, p) = arrays.remove(at);
    Ok((m, p))
}

fn need(v: Option<usize>, name: &str, dir: &Path) -> Result<usize> {
    v.ok_or_else(|| Error::format(dir.join(META_FILE), format!("dims.{name} is missing")))
}

fn as_vector(m: Matrix, path: &Path) -> Result<Vec<f64>> {
    if m.cols() != 1 {
        return Err(Error::format(path, "expected a vector"));
    }
    Ok(m.into_col_major())
}

fn split_columns(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.cols()).map(|j| m.col(j).to_vec()).collect()
}

fn build(meta: &Meta, mut arrays: Vec<(&str, Matrix, PathBuf)>, dir: &Path) -> Result<Instance> {
    let n_blocks = meta.dims.n_blocks;
    let inst = match meta.kind {
        InstanceKind::Exchange => {
            let c = (0..n_blocks)
                .map(|i| take(&mut arrays, &format!("C[{i}]"), dir).map(|(m, _)| m))
                .collect::<Result<Vec<_>>>()?;
            let (d, _) = take(&mut arrays, "d", dir)?;
            let (xs, _) = take(&mut arrays, "x_star", dir)?;
            Instance::Exchange(ExchangeInstance {
                n: need(meta.dims.n, "n", dir)?,
                n_blocks,
                p: need(meta.dims.p, "p", dir)?,
                c,
                d: split_columns(&d),
                x_star: BlockVector::new(split_columns(&xs))?,
                seed: meta.seed.unwrap_or(0),
            })
        }
        InstanceKind::BasisPursuit => {
            let (a, _) = take(&mut arrays, "A", dir)?;
            let (c, pc) = take(&mut arrays, "c", dir)?;
            let (xs, px) = take(&mut arrays, "x_star", dir)?;
            Instance::BasisPursuit(BasisPursuitInstance {
                m: need(meta.dims.m, "m", dir)?,
                n: need(meta.dims.n, "n", dir)?,
                n_blocks,
                k: need(meta.dims.k, "k", dir)?,
                sigma: meta.sigma.unwrap_or(0.0),
                seed: meta.seed.unwrap_or(0),
                a,
                x_star: as_vector(xs, &px)?,
                support: meta.support.clone().unwrap_or_default(),
                c: as_vector(c, &pc)?,
            })
        }
        InstanceKind::Operator => {
            let blocks = (0..n_blocks)
                .map(|i| take(&mut arrays, &format!("A[{i}]"), dir).map(|(m, _)| m))
                .collect::<Result<Vec<_>>>()?;
            let (c, pc) = take(&mut arrays, "c", dir)?;
            Instance::Operator {
                blocks,
                rhs: as_vector(c, &pc)?,
            }
        }
    };
    // shapes must agree with the metadata
    inst.problem()?;
    Ok(inst)
}
