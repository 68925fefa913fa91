//! P1 meshes on intervals and structured rectangles.
//!
//! A mesh carries, per element, its measure, a positive measure weight and the
//! (constant) gradients of the nodal hat functions. The weight emulates the
//! radial measure `r^{n-1} dr` when a 1D mesh stands in for a ball or annulus of
//! `R^n`; it multiplies every element integral uniformly.

mod csv;
mod exhaustion;

pub use self::csv::{read_mesh_csv, write_field_csv, write_mesh_csv};
pub use exhaustion::{
    make_exhaustion, ExhaustionKind, ExhaustionMember, ExhaustionParams, ExhaustionSchedule,
    RadiusScale,
};

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::KahanSum;

/// Node spacing inside a 1D segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    #[default]
    Uniform,
    /// Geometric spacing (uniform in `log r`); requires positive coordinates.
    Log,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    ambient_n: usize,
    coords: Vec<[f64; 2]>,
    cells: Vec<usize>,
    measure: Vec<f64>,
    weight: Vec<f64>,
    midpoint: Vec<[f64; 2]>,
    grads: Vec<[[f64; 2]; 3]>,
    boundary: Vec<bool>,
    diam: f64,
}

impl Mesh {
    /// Uniform mesh of `(a, b)` with `n` segments.
    ///
    /// With `ambient_n > 1` the interval is a radial coordinate and elements are
    /// weighted by `midpoint^{ambient_n - 1}`.
    pub fn interval(a: f64, b: f64, n: usize, ambient_n: usize) -> Result<Mesh> {
        Self::interval_graded(&[a, b], n, Grading::Uniform, ambient_n)
    }

    /// 1D mesh whose nodes include every breakpoint. `n` elements are
    /// distributed over the segments proportionally to their (log-)length.
    pub fn interval_graded(
        breakpoints: &[f64],
        n: usize,
        grading: Grading,
        ambient_n: usize,
    ) -> Result<Mesh> {
        if breakpoints.len() < 2 {
            return Err(Error::config("need at least two breakpoints"));
        }
        if !breakpoints.iter().all(|x| x.is_finite())
            || breakpoints.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::config(format!(
                "invalid bounds: breakpoints must be finite and increasing, got {breakpoints:?}"
            )));
        }
        let segs = breakpoints.len() - 1;
        if n < 2 || n < segs {
            return Err(Error::config(format!("element count {n} too small")));
        }
        if ambient_n == 0 {
            return Err(Error::config("ambient dimension must be >= 1"));
        }
        if ambient_n > 1 && breakpoints[0] < 0.0 {
            return Err(Error::config(
                "radial meshes (ambient_n > 1) need a nonnegative left end",
            ));
        }
        if grading == Grading::Log && breakpoints[0] <= 0.0 {
            return Err(Error::config("log grading needs a positive left end"));
        }
        let len = |a: f64, b: f64| match grading {
            Grading::Uniform => b - a,
            Grading::Log => (b / a).ln(),
        };
        let total = len(breakpoints[0], *breakpoints.last().unwrap());
        // largest-remainder apportionment, at least one element per segment
        let raw: Vec<f64> = breakpoints
            .windows(2)
            .map(|w| len(w[0], w[1]) / total * n as f64)
            .collect();
        let mut counts: Vec<usize> = raw.iter().map(|r| (r.floor() as usize).max(1)).collect();
        while counts.iter().sum::<usize>() < n {
            let k = (0..segs)
                .max_by(|&i, &j| {
                    let ri = raw[i] - counts[i] as f64;
                    let rj = raw[j] - counts[j] as f64;
                    ri.partial_cmp(&rj).unwrap().then(j.cmp(&i))
                })
                .unwrap();
            counts[k] += 1;
        }
        while counts.iter().sum::<usize>() > n {
            let k = (0..segs)
                .filter(|&i| counts[i] > 1)
                .min_by(|&i, &j| {
                    let ri = raw[i] - counts[i] as f64;
                    let rj = raw[j] - counts[j] as f64;
                    ri.partial_cmp(&rj).unwrap()
                })
                .ok_or_else(|| Error::config("cannot apportion elements"))?;
            counts[k] -= 1;
        }
        let mut nodes = vec![breakpoints[0]];
        for (s, w) in breakpoints.windows(2).enumerate() {
            let m = counts[s];
            for k in 1..=m {
                let t = k as f64 / m as f64;
                let x = if k == m {
                    w[1]
                } else {
                    match grading {
                        Grading::Uniform => w[0] + t * (w[1] - w[0]),
                        Grading::Log => w[0] * (w[1] / w[0]).powf(t),
                    }
                };
                nodes.push(x);
            }
        }
        Self::from_nodes_1d(&nodes, ambient_n)
    }

    /// 1D mesh from an increasing node list.
    pub fn from_nodes_1d(nodes: &[f64], ambient_n: usize) -> Result<Mesh> {
        if nodes.len() < 3 {
            return Err(Error::config("need at least 2 elements"));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("invalid bounds: nodes must be increasing"));
        }
        let coords = nodes.iter().map(|&x| [x, 0.0]).collect();
        let cells = (0..nodes.len() - 1).flat_map(|i| [i, i + 1]).collect();
        Self::from_parts(1, ambient_n, coords, cells, None)
    }

    /// Structured triangulation of `[x0,x1] x [y0,y1]`, each cell split along
    /// its diagonal into two triangles.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if !(x0 < x1) || !(y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::config(format!(
                "invalid bounds: [{x0},{x1}] x [{y0},{y1}]"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::config("need nx, ny >= 2"));
        }
        let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
            for i in 0..=nx {
                let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
                coords.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut cells = Vec::with_capacity(6 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                cells.extend_from_slice(&[a, b, c, a, c, d]);
            }
        }
        Self::from_parts(2, 2, coords, cells, None)
    }

    /// Assembles a mesh from raw tables. `cells` is flat with stride `dim + 1`.
    /// Without explicit weights, radial weights are used for 1D meshes with
    /// `ambient_n > 1` and unit weights otherwise.
    pub fn from_parts(
        dim: usize,
        ambient_n: usize,
        coords: Vec<[f64; 2]>,
        mut cells: Vec<usize>,
        weights: Option<Vec<f64>>,
    ) -> Result<Mesh> {
        if dim != 1 && dim != 2 {
            return Err(Error::config(format!("unsupported mesh dimension {dim}")));
        }
        if ambient_n == 0 || (dim == 2 && ambient_n != 2) {
            return Err(Error::config(format!(
                "ambient dimension {ambient_n} incompatible with a {dim}D mesh"
            )));
        }
        let stride = dim + 1;
        if cells.is_empty() || cells.len() % stride != 0 {
            return Err(Error::config("element table has wrong length"));
        }
        let ne = cells.len() / stride;
        if cells.iter().any(|&c| c >= coords.len()) {
            return Err(Error::config("element references missing node"));
        }
        if coords.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(Error::NonFinite("node coordinates"));
        }
        let mut measure = Vec::with_capacity(ne);
        let mut midpoint = Vec::with_capacity(ne);
        let mut grads = Vec::with_capacity(ne);
        for e in 0..ne {
            let cell = &mut cells[e * stride..(e + 1) * stride];
            if dim == 1 {
                let (mut a, mut b) = (coords[cell[0]][0], coords[cell[1]][0]);
                if b < a {
                    cell.swap(0, 1);
                    std::mem::swap(&mut a, &mut b);
                }
                let h = b - a;
                if !(h > 0.0) {
                    return Err(Error::config(format!("element {e} has nonpositive length")));
                }
                measure.push(h);
                midpoint.push([0.5 * (a + b), 0.0]);
                grads.push([[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]);
            } else {
                let (p0, p1, p2) = (coords[cell[0]], coords[cell[1]], coords[cell[2]]);
                let mut det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                if det < 0.0 {
                    cell.swap(1, 2);
                    det = -det;
                }
                if !(det > 0.0) {
                    return Err(Error::config(format!("element {e} has nonpositive area")));
                }
                let (p0, p1, p2) = (coords[cell[0]], coords[cell[1]], coords[cell[2]]);
                let area = 0.5 * det;
                // grad of barycentric coordinate k: rotated opposite edge / (2 area)
                let g = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
                grads.push([g(p1, p2), g(p2, p0), g(p0, p1)]);
                measure.push(area);
                midpoint.push([
                    (p0[0] + p1[0] + p2[0]) / 3.0,
                    (p0[1] + p1[1] + p2[1]) / 3.0,
                ]);
            }
        }
        let weight = match weights {
            Some(w) => {
                if w.len() != ne {
                    return Err(Error::SizeMismatch {
                        what: "element weights",
                        expected: ne,
                        got: w.len(),
                    });
                }
                w
            }
            None if dim == 1 && ambient_n > 1 => midpoint
                .iter()
                .map(|m| m[0].powi(ambient_n as i32 - 1))
                .collect(),
            None => vec![1.0; ne],
        };
        if weight.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::config("measure weights must be positive and finite"));
        }
        let boundary = detect_boundary(dim, coords.len(), &cells);
        let diam = diameter(&coords, &boundary);
        Ok(Mesh {
            dim,
            ambient_n,
            coords,
            cells,
            measure,
            weight,
            midpoint,
            grads,
            boundary,
            diam,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    /// True for 1D meshes emulating a radial coordinate in `R^n`, `n > 1`.
    pub fn is_radial(&self) -> bool {
        self.dim == 1 && self.ambient_n > 1
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_elements(&self) -> usize {
        self.measure.len()
    }

    /// Vertices per element.
    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.cells[e * s..(e + 1) * s]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn measure(&self, e: usize) -> f64 {
        self.measure[e]
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weight[e]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Weighted element measure, the factor of every element integral.
    #[inline]
    pub fn dx(&self, e: usize) -> f64 {
        self.measure[e] * self.weight[e]
    }

    pub fn midpoint(&self, e: usize) -> [f64; 2] {
        self.midpoint[e]
    }

    /// Gradients of the local hat functions, one per element vertex.
    #[inline]
    pub fn basis_grads(&self, e: usize) -> &[[f64; 2]] {
        &self.grads[e][..self.dim + 1]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| self.boundary[i]).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Unweighted total measure of the domain.
    pub fn total_measure(&self) -> f64 {
        let mut acc = KahanSum::new();
        self.measure.iter().for_each(|&m| acc.add(m));
        acc.value()
    }

    /// Value of the P1 interpolant at the element midpoint.
    #[inline]
    pub fn mid_value(&self, u: &[f64], e: usize) -> f64 {
        let cell = self.element(e);
        cell.iter().map(|&i| u[i]).sum::<f64>() / cell.len() as f64
    }

    /// Gradient of the P1 interpolant on element `e`.
    #[inline]
    pub fn grad_on(&self, u: &[f64], e: usize) -> [f64; 2] {
        let cell = self.element(e);
        let g = &self.grads[e];
        let mut out = [0.0; 2];
        for (k, &i) in cell.iter().enumerate() {
            out[0] += g[k][0] * u[i];
            out[1] += g[k][1] * u[i];
        }
        out
    }

    /// `sum_e f_e * |e| * w_e` with compensated summation.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.num_elements() {
            return Err(Error::SizeMismatch {
                what: "per-element integrand",
                expected: self.num_elements(),
                got: f.len(),
            });
        }
        let mut acc = KahanSum::new();
        for (e, &v) in f.iter().enumerate() {
            acc.add(v * self.dx(e));
        }
        Ok(acc.value())
    }

    /// Integral of a per-element function given by a closure.
    pub fn integrate_with(&self, f: impl Fn(usize) -> f64) -> f64 {
        let mut acc = KahanSum::new();
        for e in 0..self.num_elements() {
            acc.add(f(e) * self.dx(e));
        }
        acc.value()
    }

    /// Per-element gradient of a nodal function (exact for P1).
    pub fn gradient(&self, u: &GridFunction) -> Result<Vec<[f64; 2]>> {
        self.check_len(u.values())?;
        Ok((0..self.num_elements())
            .map(|e| self.grad_on(u.values(), e))
            .collect())
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.num_nodes() {
            return Err(Error::SizeMismatch {
                what: "nodal values",
                expected: self.num_nodes(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Nearest node to `x` and its distance (the snap distance).
    pub fn nearest_node(&self, x: [f64; 2]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.coords.iter().enumerate() {
            let d = ((c[0] - x[0]).powi(2) + (c[1] - x[1]).powi(2)).sqrt();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Sub-mesh made of the elements for which `keep` holds. Returns the new
    /// mesh and, for each of its nodes, the index of the same node here.
    /// Element weights are inherited.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Result<(Mesh, Vec<usize>)> {
        let mut new_id: HashMap<usize, usize> = HashMap::new();
        let mut to_parent = Vec::new();
        let mut cells = Vec::new();
        let mut weights = Vec::new();
        // keep parent node order so band structure survives
        let kept: Vec<usize> = (0..self.num_elements()).filter(|&e| keep(e)).collect();
        if kept.is_empty() {
            return Err(Error::config("restriction keeps no elements"));
        }
        let mut used = vec![false; self.num_nodes()];
        for &e in &kept {
            for &i in self.element(e) {
                used[i] = true;
            }
        }
        for (i, &u) in used.iter().enumerate() {
            if u {
                new_id.insert(i, to_parent.len());
                to_parent.push(i);
            }
        }
        for &e in &kept {
            cells.extend(self.element(e).iter().map(|i| new_id[i]));
            weights.push(self.weight[e]);
        }
        let coords = to_parent.iter().map(|&i| self.coords[i]).collect();
        let mesh = Mesh::from_parts(self.dim, self.ambient_n, coords, cells, Some(weights))?;
        Ok((mesh, to_parent))
    }

    /// Copy of this mesh with all coordinates divided by `r` (weights recomputed
    /// for radial meshes, unit otherwise).
    pub fn scaled_down(&self, r: f64) -> Result<Mesh> {
        if !(r > 0.0) {
            return Err(Error::config("scale factor must be positive"));
        }
        let coords = self.coords.iter().map(|c| [c[0] / r, c[1] / r]).collect();
        let weights = if self.is_radial() {
            None
        } else {
            Some(self.weight.clone())
        };
        Mesh::from_parts(self.dim, self.ambient_n, coords, self.cells.clone(), weights)
    }
}

fn detect_boundary(dim: usize, nn: usize, cells: &[usize]) -> Vec<bool> {
    let mut flags = vec![false; nn];
    if dim == 1 {
        let mut count = vec![0u32; nn];
        for &c in cells {
            count[c] += 1;
        }
        for i in 0..nn {
            flags[i] = count[i] == 1;
        }
    } else {
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        for t in cells.chunks(3) {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for ((a, b), c) in edges {
            if c == 1 {
                flags[a] = true;
                flags[b] = true;
            }
        }
    }
    flags
}

fn diameter(coords: &[[f64; 2]], boundary: &[bool]) -> f64 {
    let pts: Vec<[f64; 2]> = coords
        .iter()
        .zip(boundary)
        .filter(|(_, &b)| b)
        .map(|(c, _)| *c)
        .collect();
    let mut d2: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dx = pts[i][0] - pts[j][0];
            let dy = pts[i][1] - pts[j][1];
            d2 = d2.max(dx * dx + dy * dy);
        }
    }
    d2.sqrt()
}

/// Nodal values on a mesh.
#[derive(Debug, Clone)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        mesh.check_len(&values)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function"));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_nodes();
        Self {
            mesh,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = mesh.coords().iter().map(|&c| f(c)).collect();
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(Self {
            mesh: self.mesh.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    /// Same values with boundary nodes set to zero.
    pub fn with_zero_boundary(&self) -> GridFunction {
        let mut values = self.values.clone();
        for (i, v) in values.iter_mut().enumerate() {
            if self.mesh.is_boundary(i) {
                *v = 0.0;
            }
        }
        Self {
            mesh: self.mesh.clone(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_interior(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.mesh.is_boundary(*i))
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min)
    }

    /// `int |u|^p` with midpoint evaluation.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let m = &self.mesh;
        m.integrate_with(|e| m.mid_value(&self.values, e).abs().powf(p))
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norm_pow(p).powf(1.0 / p)
    }

    /// `int |grad u|^p` (Euclidean norm of the gradient).
    pub fn grad_lp_norm_pow(&self, p: f64) -> f64 {
        let m = &self.mesh;
        m.integrate_with(|e| {
            let g = m.grad_on(&self.values, e);
            (g[0] * g[0] + g[1] * g[1]).sqrt().powf(p)
        })
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_nodes_and_weights() {
        let m = Mesh::interval(0.0, 1.0, 4, 1).unwrap();
        let xs: Vec<f64> = m.coords().iter().map(|c| c[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(m.weights().iter().all(|&w| w == 1.0));
        assert_eq!(m.boundary_nodes(), vec![0, 4]);
    }

    #[test]
    fn radial_weights_are_midpoint_powers() {
        let m = Mesh::interval(0.0, 1.0, 4, 3).unwrap();
        let expect = [0.125f64.powi(2), 0.375f64.powi(2), 0.625f64.powi(2), 0.875f64.powi(2)];
        for (w, e) in m.weights().iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn reversed_bounds_rejected() {
        assert!(matches!(Mesh::interval(1.0, 0.0, 4, 1), Err(Error::Config(_))));
        assert!(Mesh::interval(0.0, 1.0, 1, 1).is_err());
        assert!(Mesh::interval(-1.0, 1.0, 4, 3).is_err());
    }

    #[test]
    fn rectangle_counts() {
        let m = Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 2, 2).unwrap();
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.num_elements(), 8);
        assert_eq!(m.boundary_nodes().len(), 8);
        assert!(!m.is_boundary(4));
        assert!(Mesh::rectangle(0.0, 0.0, 0.0, 1.0, 2, 2).is_err());
    }

    #[test]
    fn rectangle_tiles_unit_square() {
        let m = Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 64, 64).unwrap();
        assert!((m.total_measure() - 1.0).abs() < 1e-12);
        assert!((m.diam() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn integrate_examples() {
        let m = Mesh::interval(0.0, 1.0, 10, 1).unwrap();
        assert!((m.integrate(&vec![1.0; 10]).unwrap() - 1.0).abs() < 1e-15);
        let m3 = Mesh::interval(0.0, 1.0, 512, 3).unwrap();
        let v = m3.integrate(&vec![1.0; 512]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-4);
        let sq = Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 8, 8).unwrap();
        let v = sq.integrate(&vec![2.0; sq.num_elements()]).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert!(sq.integrate(&[1.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let m = Arc::new(Mesh::interval(-1.0, 2.0, 7, 1).unwrap());
        let u = GridFunction::from_fn(m.clone(), |x| x[0]).unwrap();
        assert!(m.gradient(&u).unwrap().iter().all(|g| (g[0] - 1.0).abs() < 1e-13));
        let c = GridFunction::from_fn(m.clone(), |_| 4.0).unwrap();
        assert!(m.gradient(&c).unwrap().iter().all(|g| g[0].abs() < 1e-13));
        let sq = Arc::new(Mesh::rectangle(0.0, 0.0, 2.0, 1.0, 5, 3).unwrap());
        let u = GridFunction::from_fn(sq.clone(), |x| 2.0 * x[0] + 3.0 * x[1]).unwrap();
        for g in sq.gradient(&u).unwrap() {
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn graded_mesh_contains_breakpoints() {
        let m = Mesh::interval_graded(&[0.125, 0.5, 2.0, 8.0], 64, Grading::Log, 3).unwrap();
        for b in [0.125, 0.5, 2.0, 8.0] {
            let (_, d) = m.nearest_node([b, 0.0]);
            assert_eq!(d, 0.0);
        }
        assert_eq!(m.num_elements(), 64);
    }

    #[test]
    fn restriction_recomputes_boundary() {
        let m = Mesh::rectangle(-1.0, -1.0, 1.0, 1.0, 16, 16).unwrap();
        let (disk, map) = m
            .restrict(|e| {
                let c = m.midpoint(e);
                c[0] * c[0] + c[1] * c[1] < 1.0
            })
            .unwrap();
        assert_eq!(map.len(), disk.num_nodes());
        let (c, d) = disk.nearest_node([0.0, 0.0]);
        assert_eq!(d, 0.0);
        assert!(!disk.is_boundary(c));
        assert!(disk.boundary_nodes().len() > 16);
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        // int_0^1 x^2 dx with midpoint values of the exact integrand
        let err = |n: usize| {
            let m = Mesh::interval(0.0, 1.0, n, 1).unwrap();
            let f: Vec<f64> = (0..n).map(|e| m.midpoint(e)[0].powi(2)).collect();
            (m.integrate(&f).unwrap() - 1.0 / 3.0).abs()
        };
        let (e1, e2) = (err(16), err(32));
        assert!((e1 / e2 - 4.0).abs() < 0.05);
    }
}
