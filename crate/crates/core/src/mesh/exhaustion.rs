//! Nested subdomain sequences `omega_1 ⊂ omega_2 ⊂ ...` cut from one parent mesh.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{GridFunction, Grading, Mesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustionKind {
    /// `(-R_i, R_i)`.
    IntervalGrowing,
    /// `(1/R_i, R_i)` in a radial coordinate.
    Annulus,
    /// `(-R_i, R_i)^2`.
    SquareGrowing,
}

/// How the member size `R_i` depends on the level index `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum RadiusScale {
    /// `R_i = i`.
    Linear,
    /// `R_i = base^i`.
    Geometric { base: f64 },
}

impl RadiusScale {
    pub fn radius(&self, i: usize) -> f64 {
        match *self {
            RadiusScale::Linear => i as f64,
            RadiusScale::Geometric { base } => base.powi(i as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionParams {
    pub kind: ExhaustionKind,
    pub scale: RadiusScale,
    /// Index of the first member.
    pub first: usize,
    /// Elements of the largest member (per axis for squares).
    pub elements: usize,
    #[serde(default)]
    pub grading: Grading,
    /// Ambient dimension; only meaningful for annuli.
    #[serde(default = "default_ambient")]
    pub ambient_n: usize,
    /// Normalisation points snapped to the nearest node (x_0, optionally x_1).
    #[serde(default)]
    pub anchors: Vec<[f64; 2]>,
}

fn default_ambient() -> usize {
    1
}

impl ExhaustionParams {
    pub fn new(kind: ExhaustionKind, scale: RadiusScale, first: usize, elements: usize) -> Self {
        Self {
            kind,
            scale,
            first,
            elements,
            grading: match kind {
                ExhaustionKind::Annulus => Grading::Log,
                _ => Grading::Uniform,
            },
            ambient_n: match kind {
                ExhaustionKind::Annulus => 3,
                ExhaustionKind::IntervalGrowing => 1,
                ExhaustionKind::SquareGrowing => 2,
            },
            anchors: Vec::new(),
        }
    }

    pub fn with_anchors(mut self, anchors: Vec<[f64; 2]>) -> Self {
        self.anchors = anchors;
        self
    }

    pub fn with_ambient(mut self, n: usize) -> Self {
        self.ambient_n = n;
        self
    }

    pub fn with_grading(mut self, g: Grading) -> Self {
        self.grading = g;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExhaustionMember {
    pub index: usize,
    pub radius: f64,
    pub mesh: Arc<Mesh>,
    /// Member node -> parent node.
    pub to_parent: Vec<usize>,
    /// Member node -> node of the next member (None for the last one).
    pub to_next: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct ExhaustionSchedule {
    pub kind: ExhaustionKind,
    pub parent: Arc<Mesh>,
    pub members: Vec<ExhaustionMember>,
    /// Parent node of each anchor and the snap distance.
    pub anchors: Vec<(usize, f64)>,
}

/// Builds `count` nested members.
pub fn make_exhaustion(params: &ExhaustionParams, count: usize) -> Result<ExhaustionSchedule> {
    if count < 2 {
        return Err(Error::config("an exhaustion needs at least 2 members"));
    }
    let radii: Vec<f64> = (0..count)
        .map(|k| params.scale.radius(params.first + k))
        .collect();
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || radii.windows(2).any(|w| !(w[0] < w[1]))
    {
        return Err(Error::config(format!(
            "exhaustion family is not monotone: radii {radii:?}"
        )));
    }
    if params.kind == ExhaustionKind::Annulus && radii[0] <= 1.0 {
        return Err(Error::config("annuli (1/R, R) need R > 1"));
    }
    let rmax = *radii.last().unwrap();
    let parent = match params.kind {
        ExhaustionKind::IntervalGrowing => {
            let mut bps: Vec<f64> = radii.iter().rev().map(|r| -r).collect();
            bps.push(0.0);
            bps.extend(radii.iter().copied());
            for a in &params.anchors {
                bps.push(a[0]);
            }
            bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            bps.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * rmax);
            Mesh::interval_graded(&bps, params.elements, params.grading, 1)?
        }
        ExhaustionKind::Annulus => {
            let mut bps: Vec<f64> = radii.iter().rev().map(|r| 1.0 / r).collect();
            bps.push(1.0);
            bps.extend(radii.iter().copied());
            for a in &params.anchors {
                if a[0] > 1.0 / rmax && a[0] < rmax {
                    bps.push(a[0]);
                }
            }
            bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            bps.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * rmax);
            Mesh::interval_graded(&bps, params.elements, params.grading, params.ambient_n)?
        }
        ExhaustionKind::SquareGrowing => {
            let n = params.elements;
            if n % 2 != 0 {
                return Err(Error::config("square exhaustion needs an even element count"));
            }
            let h = 2.0 * rmax / n as f64;
            for r in &radii {
                let k = r / h;
                if (k - k.round()).abs() > 1e-9 {
                    return Err(Error::config(format!(
                        "square member half-width {r} is not a multiple of the grid step {h}"
                    )));
                }
            }
            Mesh::rectangle(-rmax, -rmax, rmax, rmax, n, n)?
        }
    };
    let parent = Arc::new(parent);
    let tol = 1e-12 * rmax;
    let mut members = Vec::with_capacity(count);
    for (k, &r) in radii.iter().enumerate() {
        let inside = |e: usize| {
            let c = parent.midpoint(e);
            match params.kind {
                ExhaustionKind::IntervalGrowing => c[0].abs() < r - tol,
                ExhaustionKind::Annulus => c[0] > 1.0 / r + tol && c[0] < r - tol,
                ExhaustionKind::SquareGrowing => c[0].abs() < r - tol && c[1].abs() < r - tol,
            }
        };
        let (mesh, to_parent) = parent.restrict(inside)?;
        members.push(ExhaustionMember {
            index: params.first + k,
            radius: r,
            mesh: Arc::new(mesh),
            to_parent,
            to_next: None,
        });
    }
    for k in 0..count - 1 {
        let mut inv = vec![usize::MAX; parent.num_nodes()];
        for (j, &pj) in members[k + 1].to_parent.iter().enumerate() {
            inv[pj] = j;
        }
        let map: Vec<usize> = members[k].to_parent.iter().map(|&p| inv[p]).collect();
        if map.iter().any(|&j| j == usize::MAX) {
            return Err(Error::config("exhaustion members are not nested"));
        }
        members[k].to_next = Some(map);
    }
    let anchors = params
        .anchors
        .iter()
        .map(|&a| parent.nearest_node(a))
        .collect();
    Ok(ExhaustionSchedule {
        kind: params.kind,
        parent,
        members,
        anchors,
    })
}

impl ExhaustionSchedule {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn last(&self) -> &ExhaustionMember {
        self.members.last().unwrap()
    }

    /// Node of member `k` sitting on parent node `parent_node`, if present.
    pub fn local_node(&self, k: usize, parent_node: usize) -> Option<usize> {
        self.members[k]
            .to_parent
            .iter()
            .position(|&p| p == parent_node)
    }

    /// Node of anchor `a` in member `k`.
    pub fn anchor_in(&self, k: usize, a: usize) -> Option<usize> {
        let (pnode, _) = *self.anchors.get(a)?;
        self.local_node(k, pnode)
    }

    /// Zero extension of a function on member `from` to member `to >= from`.
    pub fn zero_extend(&self, u: &GridFunction, from: usize, to: usize) -> Result<GridFunction> {
        if to < from || to >= self.len() {
            return Err(Error::config("zero extension goes to a larger member"));
        }
        if !Arc::ptr_eq(u.mesh(), &self.members[from].mesh) {
            return Err(Error::MeshMismatch);
        }
        let mut vals = u.values().to_vec();
        for k in from..to {
            let map = self.members[k].to_next.as_ref().unwrap();
            let mut next = vec![0.0; self.members[k + 1].mesh.num_nodes()];
            for (i, &j) in map.iter().enumerate() {
                next[j] = vals[i];
            }
            vals = next;
        }
        GridFunction::new(self.members[to].mesh.clone(), vals)
    }

    /// Restriction of a parent-mesh function to member `k`.
    pub fn restrict_from_parent(&self, k: usize, parent_values: &[f64]) -> Result<GridFunction> {
        let m = &self.members[k];
        GridFunction::new(
            m.mesh.clone(),
            m.to_parent.iter().map(|&p| parent_values[p]).collect(),
        )
    }

    /// Member function lifted to the parent (zero outside the member).
    pub fn lift_to_parent(&self, k: usize, u: &GridFunction) -> Vec<f64> {
        let mut out = vec![0.0; self.parent.num_nodes()];
        for (i, &p) in self.members[k].to_parent.iter().enumerate() {
            out[p] = u.value(i);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growing_intervals_contain_origin() {
        let p = ExhaustionParams::new(ExhaustionKind::IntervalGrowing, RadiusScale::Linear, 1, 48)
            .with_anchors(vec![[0.0, 0.0]]);
        let s = make_exhaustion(&p, 3).unwrap();
        assert_eq!(s.len(), 3);
        for (k, m) in s.members.iter().enumerate() {
            let r = (k + 1) as f64;
            let xs: Vec<f64> = m.mesh.coords().iter().map(|c| c[0]).collect();
            assert_eq!(xs.first().copied(), Some(-r));
            assert_eq!(xs.last().copied(), Some(r));
            assert!(s.anchor_in(k, 0).is_some());
        }
        assert_eq!(s.anchors[0].1, 0.0);
    }

    #[test]
    fn annuli_are_nested() {
        let p = ExhaustionParams::new(ExhaustionKind::Annulus, RadiusScale::Linear, 2, 96);
        let s = make_exhaustion(&p, 3).unwrap();
        for (k, m) in s.members.iter().enumerate() {
            let r = (k + 2) as f64;
            let c = m.mesh.coords();
            assert!((c[0][0] - 1.0 / r).abs() < 1e-12);
            assert!((c[c.len() - 1][0] - r).abs() < 1e-12);
            assert!(m.mesh.is_radial());
        }
    }

    #[test]
    fn single_member_rejected() {
        let p = ExhaustionParams::new(ExhaustionKind::IntervalGrowing, RadiusScale::Linear, 1, 32);
        assert!(make_exhaustion(&p, 1).is_err());
        let bad = ExhaustionParams::new(
            ExhaustionKind::IntervalGrowing,
            RadiusScale::Geometric { base: 0.5 },
            1,
            32,
        );
        assert!(make_exhaustion(&bad, 3).is_err());
    }

    #[test]
    fn zero_extension_preserves_lp_mass() {
        let p = ExhaustionParams::new(ExhaustionKind::SquareGrowing, RadiusScale::Linear, 1, 12);
        let s = make_exhaustion(&p, 3).unwrap();
        let m0 = s.members[0].mesh.clone();
        let u = GridFunction::from_fn(m0, |x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) + 0.3)
            .unwrap()
            .with_zero_boundary();
        let w = s.zero_extend(&u, 0, 2).unwrap();
        for p in [1.5, 2.0, 3.0] {
            assert_eq!(u.lp_norm_pow(p), w.lp_norm_pow(p));
        }
    }
}
