//! File formats.
//!
//! Matrices are stored either as CSV or as a little-endian binary blob.
//!
//! CSV: a header line `rows,cols,p,m`, one line with those four values, then
//! `rows` lines of `cols` comma-separated reals. Values are written in the
//! shortest form that parses back to the same `f64`.
//!
//! Binary: the bytes `MAGM`, then `rows`, `cols`, `p`, `m` as `u64`, then
//! `rows · cols` row-major `f64`, all little-endian.
//!
//! `cols` must equal `p · m`: a square matrix is a `p × p` grid of `m × m`
//! blocks, and a data matrix has one sample per row.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use magl_core::admm::IterationTrace;
use magl_core::select::BicRecord;
use magl_core::{BlockMatrix, EdgeSet, Matrix};

use crate::error::{MaglError, Result};

pub const MAGIC: &[u8; 4] = b"MAGM";
pub const CSV_HEADER: &str = "rows,cols,p,m";

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub data: Matrix,
    pub p: usize,
    pub m: usize,
}

impl MatrixFile {
    pub fn new(data: Matrix, p: usize, m: usize) -> Result<Self> {
        if p == 0 || m == 0 || data.cols() != p * m {
            return Err(MaglError::Data(format!(
                "{}x{} matrix does not match p = {p}, m = {m}",
                data.rows(),
                data.cols()
            )));
        }
        Ok(MatrixFile { data, p, m })
    }

    pub fn from_block(b: &BlockMatrix) -> Self {
        MatrixFile { data: b.matrix().clone(), p: b.p(), m: b.m() }
    }

    pub fn into_block(self) -> Result<BlockMatrix> {
        Ok(BlockMatrix::symmetric(self.data, self.p, self.m)?)
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| MaglError::io(dir, e))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| MaglError::io(path, e))?))
}

/// Writes text to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| MaglError::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn matrix_to_csv(f: &MatrixFile) -> String {
    let mut s = format!("{CSV_HEADER}\n{},{},{},{}\n", f.data.rows(), f.data.cols(), f.p, f.m);
    for i in 0..f.data.rows() {
        let row: Vec<String> = f.data.row(i).iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn matrix_to_binary(f: &MatrixFile) -> Vec<u8> {
    let mut out = Vec::with_capacity(36 + 8 * f.data.as_slice().len());
    out.extend_from_slice(MAGIC);
    for v in [f.data.rows(), f.data.cols(), f.p, f.m] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for x in f.data.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| MaglError::Data(format!("bad {what} `{s}`")))
}

pub fn matrix_from_csv(text: &str) -> Result<MatrixFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| MaglError::Data("empty matrix file".into()))?;
    if header.trim().replace(' ', "") != CSV_HEADER {
        return Err(MaglError::Data(format!("expected header `{CSV_HEADER}`, got `{header}`")));
    }
    let dims = lines.next().ok_or_else(|| MaglError::Data("missing dimension line".into()))?;
    let dims: Vec<&str> = dims.split(',').collect();
    if dims.len() != 4 {
        return Err(MaglError::Data("dimension line needs 4 values".into()));
    }
    let rows = parse_usize(dims[0], "rows")?;
    let cols = parse_usize(dims[1], "cols")?;
    let p = parse_usize(dims[2], "p")?;
    let m = parse_usize(dims[3], "m")?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (i, line) in lines.enumerate() {
        let before = data.len();
        for tok in line.split(',') {
            let x: f64 = tok
                .trim()
                .parse()
                .map_err(|_| MaglError::Data(format!("row {i}: bad value `{tok}`")))?;
            data.push(x);
        }
        if data.len() - before != cols {
            return Err(MaglError::Data(format!("row {i}: expected {cols} values, got {}", data.len() - before)));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(MaglError::Data(format!("expected {rows} rows, got {seen}")));
    }
    MatrixFile::new(Matrix::from_vec(rows, cols, data)?, p, m)
}

pub fn matrix_from_binary(bytes: &[u8]) -> Result<MatrixFile> {
    if bytes.len() < 36 || &bytes[..4] != MAGIC {
        return Err(MaglError::Data("not a MAGM matrix file".into()));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[4 + 8 * k..12 + 8 * k].try_into().unwrap());
    let (rows, cols, p, m) = (word(0), word(1), word(2), word(3));
    let count = rows.checked_mul(cols).and_then(|c| usize::try_from(c).ok());
    let body = &bytes[36..];
    match count {
        Some(c) if c.checked_mul(8) == Some(body.len()) => {}
        _ => return Err(MaglError::Data(format!("{rows}x{cols} does not match a {}-byte payload", body.len()))),
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    MatrixFile::new(Matrix::from_vec(rows as usize, cols as usize, data)?, p as usize, m as usize)
}

/// Reads either format, detected by the magic bytes.
pub fn read_matrix(path: &Path) -> Result<MatrixFile> {
    let bytes = fs::read(path).map_err(|e| MaglError::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        matrix_from_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| MaglError::Data(format!("{}: not UTF-8", path.display())))?;
        matrix_from_csv(&text)
    }
}

fn is_binary_path(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("bin" | "magm"))
}

/// Writes binary for `.bin`/`.magm` paths and CSV otherwise.
pub fn write_matrix(path: &Path, f: &MatrixFile) -> Result<()> {
    let bytes = if is_binary_path(path) { matrix_to_binary(f) } else { matrix_to_csv(f).into_bytes() };
    let mut w = create(path)?;
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| MaglError::io(path, e))
}

/// Tab-separated `node_a node_b weight`, one line per edge, weight being
/// the Frobenius norm of the estimated block. With `labels`, node columns
/// carry names and two trailing columns carry group labels.
pub fn edge_list_tsv(edges: &EdgeSet, omega_hat: &BlockMatrix, names: Option<&[String]>, groups: Option<&[String]>) -> String {
    let mut s = String::from("node_a\tnode_b\tweight");
    if groups.is_some() {
        s.push_str("\tgroup_a\tgroup_b");
    }
    s.push('\n');
    for (a, b) in edges.iter() {
        let label = |k: usize| names.and_then(|n| n.get(k).cloned()).unwrap_or_else(|| k.to_string());
        s.push_str(&format!("{}\t{}\t{}", label(a), label(b), omega_hat.block_frobenius(a, b)));
        if let Some(g) = groups {
            let group = |k: usize| g.get(k).map(String::as_str).unwrap_or("");
            s.push_str(&format!("\t{}\t{}", group(a), group(b)));
        }
        s.push('\n');
    }
    s
}

pub fn bic_table_csv(table: &[BicRecord]) -> String {
    let mut s = String::from("lambda,alpha,bic,n_edges,converged\n");
    for r in table {
        s.push_str(&format!("{},{},{},{},{}\n", r.lambda, r.alpha, r.bic, r.n_edges, r.converged));
    }
    s
}

pub fn trace_csv(trace: &[IterationTrace]) -> String {
    let mut s = String::from("iteration,primal_residual,dual_residual,rho,objective\n");
    for t in trace {
        s.push_str(&format!("{},{},{},{},{}\n", t.iteration, t.primal_residual, t.dual_residual, t.rho, t.objective));
    }
    s
}

/// Reads the first line of a file, for sniffing headers.
pub fn first_line(path: &Path) -> Result<String> {
    let f = fs::File::open(path).map_err(|e| MaglError::io(path, e))?;
    let mut line = String::new();
    BufReader::new(f).read_line(&mut line).map_err(|e| MaglError::io(path, e))?;
    Ok(line.trim_end().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MatrixFile {
        let data = Matrix::from_rows(&[[1.0, 0.1, -2.5e-17, 0.3], [0.1, 2.0, 1.0 / 3.0, 0.0]]).unwrap();
        MatrixFile::new(data, 2, 2).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = sample();
        let text = matrix_to_csv(&f);
        assert!(text.starts_with("rows,cols,p,m\n2,4,2,2\n"));
        assert_eq!(matrix_from_csv(&text).unwrap(), f);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let f = sample();
        let bytes = matrix_to_binary(&f);
        assert_eq!(&bytes[..4], b"MAGM");
        assert_eq!(bytes.len(), 36 + 8 * 8);
        assert_eq!(matrix_from_binary(&bytes).unwrap(), f);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matrix_from_csv("").is_err());
        assert!(matrix_from_csv("rows,cols,p,m\n1,2,1,2\n1.0\n").is_err());
        assert!(matrix_from_csv("rows,cols,p,m\n2,2,1,2\n1,2\n").is_err());
        assert!(matrix_from_csv("rows,cols,p,m\n1,2,3,2\n1,2\n").is_err());
        assert!(matrix_from_csv("a,b\n1,1,1,1\n1\n").is_err());
        let mut bytes = matrix_to_binary(&sample());
        bytes.pop();
        assert!(matrix_from_binary(&bytes).is_err());
        assert!(matrix_from_binary(b"XXXX").is_err());
    }

    #[test]
    fn edge_list() {
        let mut omega = BlockMatrix::identity(3, 1);
        omega.matrix_mut()[(0, 2)] = -0.5;
        omega.matrix_mut()[(2, 0)] = -0.5;
        let edges = EdgeSet::from_pairs(3, [(0, 2)]).unwrap();
        assert_eq!(edge_list_tsv(&edges, &omega, None, None), "node_a\tnode_b\tweight\n0\t2\t0.5\n");
        let names = ["A".to_string(), "B".to_string(), "C".to_string()];
        let groups = ["x".to_string(), "y".to_string(), "z".to_string()];
        assert_eq!(
            edge_list_tsv(&edges, &omega, Some(&names), Some(&groups)),
            "node_a\tnode_b\tweight\tgroup_a\tgroup_b\nA\tC\t0.5\tx\tz\n"
        );
    }
}
