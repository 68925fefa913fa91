//! Plain CSV tables for meshes and nodal fields.
//!
//! Node table: `id,x[,y],boundary`. Element table: `id,n0,n1[,n2],weight`.
//! Field table: `id,x[,y],value`.

use std::io::{BufRead, Write};

use super::{GridFunction, Mesh};
use crate::error::{Error, Result};

fn io_err(e: std::io::Error) -> Error {
    Error::domain(format!("i/o error: {e}"))
}

pub fn write_mesh_csv<W1: Write, W2: Write>(mesh: &Mesh, nodes: &mut W1, elements: &mut W2) -> Result<()> {
    let two_d = mesh.dim() == 2;
    writeln!(nodes, "{}", if two_d { "id,x,y,boundary" } else { "id,x,boundary" }).map_err(io_err)?;
    for (i, c) in mesh.coords().iter().enumerate() {
        let b = mesh.is_boundary(i) as u8;
        if two_d {
            writeln!(nodes, "{i},{:e},{:e},{b}", c[0], c[1])
        } else {
            writeln!(nodes, "{i},{:e},{b}", c[0])
        }
        .map_err(io_err)?;
    }
    writeln!(elements, "{}", if two_d { "id,n0,n1,n2,weight" } else { "id,n0,n1,weight" }).map_err(io_err)?;
    for e in 0..mesh.num_elements() {
        let ids: Vec<String> = mesh.element(e).iter().map(|i| i.to_string()).collect();
        writeln!(elements, "{e},{},{:e}", ids.join(","), mesh.weight(e)).map_err(io_err)?;
    }
    Ok(())
}

fn rows<R: BufRead>(r: R) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        out.push(line.split(',').map(|s| s.trim().to_string()).collect());
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::config(format!("cannot parse {what} from {s:?}")))
}

/// Reads a mesh written by [`write_mesh_csv`]. The boundary column is checked
/// against the recomputed geometric boundary.
pub fn read_mesh_csv<R1: BufRead, R2: BufRead>(nodes: R1, elements: R2, ambient_n: usize) -> Result<Mesh> {
    let nrows = rows(nodes)?;
    let erows = rows(elements)?;
    let dim = match nrows.first().map(|r| r.len()) {
        Some(3) => 1,
        Some(4) => 2,
        _ => return Err(Error::config("node table must have 3 (1D) or 4 (2D) columns")),
    };
    let mut coords = Vec::with_capacity(nrows.len());
    let mut flags = Vec::with_capacity(nrows.len());
    for (k, r) in nrows.iter().enumerate() {
        if r.len() != dim + 2 || num::<usize>(&r[0], "node id")? != k {
            return Err(Error::config(format!("bad node row {k}")));
        }
        let x = num(&r[1], "x")?;
        let y = if dim == 2 { num(&r[2], "y")? } else { 0.0 };
        coords.push([x, y]);
        flags.push(num::<u8>(&r[dim + 1], "boundary flag")? != 0);
    }
    let mut cells = Vec::new();
    let mut weights = Vec::new();
    for (k, r) in erows.iter().enumerate() {
        if r.len() != dim + 3 || num::<usize>(&r[0], "element id")? != k {
            return Err(Error::config(format!("bad element row {k}")));
        }
        for c in &r[1..dim + 2] {
            cells.push(num(c, "node index")?);
        }
        weights.push(num(&r[dim + 2], "weight")?);
    }
    let mesh = Mesh::from_parts(dim, ambient_n, coords, cells, Some(weights))?;
    if mesh.boundary_flags() != flags.as_slice() {
        return Err(Error::config("boundary flags disagree with the element table"));
    }
    Ok(mesh)
}

pub fn write_field_csv<W: Write>(u: &GridFunction, out: &mut W) -> Result<()> {
    let mesh = u.mesh();
    let two_d = mesh.dim() == 2;
    writeln!(out, "{}", if two_d { "id,x,y,value" } else { "id,x,value" }).map_err(io_err)?;
    for (i, c) in mesh.coords().iter().enumerate() {
        if two_d {
            writeln!(out, "{i},{:e},{:e},{:e}", c[0], c[1], u.value(i))
        } else {
            writeln!(out, "{i},{:e},{:e}", c[0], u.value(i))
        }
        .map_err(io_err)?;
    }
    Ok(())
}
