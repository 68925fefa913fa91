//! Positive solutions of minimal growth at an isolated pole, the minimal
//! Green function and the removable/blowup dichotomy at a point.
//!
//! Level `i` solves `Q'[v] = f_i` on the level domain with a closed ball
//! around the pole removed, where `f_i` is a unit-mass indicator of the
//! annulus just outside the hole. Each `v_i` is normalized at a reference
//! node `x1` and the normalized levels are compared on a probe region away
//! from the pole.

use serde::{Deserialize, Serialize};

use crate::criticality::Verdict;
use crate::error::{Error, Result};
use crate::mesh::{GridFunction, Mesh};
use crate::qcore::{harnack_ratio, nodes_in_shell, residual, residual_full, same_mesh, ProblemSpec};
use crate::solver::{minimize, Constraints, SolveOptions};

/// Radii of the removed balls: `r1 / (i + 1)` or `r1 * base^(-i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HoleSchedule {
    #[default]
    Linear,
    Geometric { base: f64 },
}

impl HoleSchedule {
    /// Hole radius at level `i >= 1` as a fraction of `r1`.
    pub fn fraction(&self, i: usize) -> f64 {
        match *self {
            HoleSchedule::Linear => 1.0 / (i as f64 + 1.0),
            HoleSchedule::Geometric { base } => base.powi(-(i as i32)),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            HoleSchedule::Geometric { base } if !(base > 1.0) => {
                Err(Error::config("geometric hole base must exceed 1"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    /// Required ratio of the innermost to the outermost sphere minimum.
    pub growth_factor: f64,
    /// Largest admissible `max/min` on a sphere in the inner half of the ladder.
    pub harnack_plateau: f64,
    /// Largest relative spread of the extrapolated pole value.
    pub confidence: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            growth_factor: 10.0,
            harnack_plateau: 1.5,
            confidence: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Singularity {
    RemovableBounded,
    Blowup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityProfile {
    pub pole: [f64; 2],
    pub radii: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Least-squares slope of `log u` against `log r`.
    pub power_slope: f64,
    /// Least-squares slope of `u` against `log(1/r)`.
    pub log_slope: f64,
    /// Relative disagreement of the log slope fitted on the outer and the
    /// inner half of the ladder; `None` for fewer than four radii.
    pub log_slope_spread: Option<f64>,
    /// Innermost over outermost sphere minimum.
    pub growth: f64,
    /// `max/min` per sphere.
    pub harnack: Vec<f64>,
    pub plateau_ok: bool,
    /// Limit at the pole extrapolated linearly in `r` (bounded case only).
    pub pole_value: Option<f64>,
    /// Relative spread between the three- and two-point extrapolations.
    pub pole_value_spread: Option<f64>,
    pub classification: Singularity,
    pub options: ClassifyOptions,
}

impl SingularityProfile {
    /// A bounded profile whose extrapolated limit is positive and reliable.
    pub fn positive_limit(&self) -> bool {
        matches!(
            (self.pole_value, self.pole_value_spread),
            (Some(c), Some(s)) if c > 0.0 && s <= self.options.confidence
        )
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn intercept(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s = slope(x, y);
    (y.iter().sum::<f64>() - s * x.iter().sum::<f64>()) / n
}

/// Geometric radii from `outer` down to no less than `inner`.
pub fn radius_ladder(outer: f64, inner: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(outer > inner && inner > 0.0 && ratio > 0.0 && ratio < 1.0) {
        return Err(Error::config("ladder needs outer > inner > 0 and a ratio in (0, 1)"));
    }
    let mut r = vec![outer];
    while r[r.len() - 1] * ratio >= inner {
        r.push(r[r.len() - 1] * ratio);
    }
    if r.len() < 2 {
        return Err(Error::config("ladder has fewer than two radii"));
    }
    Ok(r)
}

/// Nodes in the shell `[r/kappa, r kappa]`, or the nodes closest to the
/// sphere when the shell is thinner than the mesh.
fn sphere_nodes(u: &GridFunction, x0: [f64; 2], r: f64, kappa: f64) -> Result<Vec<usize>> {
    let shell = nodes_in_shell(u, x0, r / kappa, r * kappa);
    if !shell.is_empty() {
        return Ok(shell);
    }
    let gap: Vec<f64> = u.mesh().coords().iter().map(|&c| (dist(c, x0) - r).abs()).collect();
    let best = gap.iter().cloned().fold(f64::INFINITY, f64::min);
    if best > 0.5 * r {
        return Err(Error::config(format!("no nodes near the sphere of radius {r}")));
    }
    Ok((0..gap.len()).filter(|&i| gap[i] <= best * (1.0 + 1e-9) + 1e-15).collect())
}

/// Samples `u` on thin shells around `x0` and decides between a bounded
/// (removable) and a blowing-up singularity.
pub fn classify_singularity(
    u: &GridFunction,
    x0: [f64; 2],
    ladder: &[f64],
    opts: &ClassifyOptions,
) -> Result<SingularityProfile> {
    if ladder.len() < 2 {
        return Err(Error::config("ladder needs at least two radii"));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) || !(ladder[ladder.len() - 1] > 0.0) {
        return Err(Error::config("ladder radii must be positive and strictly decreasing"));
    }
    // shells half as wide as the closest gap in log r never overlap
    let kappa = ladder
        .windows(2)
        .map(|w| (w[0] / w[1]).powf(0.25))
        .fold(f64::INFINITY, f64::min)
        .min(1.05);
    let reach = u.mesh().coords().iter().map(|&c| dist(c, x0)).fold(0.0, f64::max);
    let (mut min, mut max) = (Vec::new(), Vec::new());
    for &r in ladder {
        if r > reach {
            return Err(Error::config(format!("radius {r} lies outside the mesh")));
        }
        let shell = sphere_nodes(u, x0, r, kappa)?;
        let (lo, hi) = shell.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(u.value(i)), hi.max(u.value(i)))
        });
        if !(lo > 0.0) {
            return Err(Error::domain(format!("u is not positive on the sphere of radius {r}")));
        }
        min.push(lo);
        max.push(hi);
    }
    let mean: Vec<f64> = min.iter().zip(&max).map(|(a, b)| 0.5 * (a + b)).collect();
    let log_r: Vec<f64> = ladder.iter().map(|r| r.ln()).collect();
    let log_inv: Vec<f64> = log_r.iter().map(|x| -x).collect();
    let power_slope = slope(&log_r, &mean.iter().map(|m| m.ln()).collect::<Vec<_>>());
    let log_slope = slope(&log_inv, &mean);
    let k = ladder.len();
    let log_slope_spread = (k >= 4).then(|| {
        let h = k / 2;
        let a = slope(&log_inv[..h], &mean[..h]);
        let b = slope(&log_inv[k - h..], &mean[k - h..]);
        let s = a.abs().max(b.abs());
        if s == 0.0 {
            0.0
        } else {
            (a - b).abs() / s
        }
    });
    let growth = min[k - 1] / min[0];
    let harnack: Vec<f64> = min.iter().zip(&max).map(|(a, b)| b / a).collect();
    // near the outer radius the shell feels the boundary; the annular
    // Harnack bound is a statement close to the pole
    let inner: Vec<f64> = ladder
        .iter()
        .zip(&harnack)
        .filter(|(r, _)| **r <= 0.5 * ladder[0])
        .map(|(_, h)| *h)
        .collect();
    let plateau_ok = if inner.is_empty() { &harnack } else { &inner }
        .iter()
        .all(|&h| h <= opts.harnack_plateau);
    let classification = if growth >= opts.growth_factor && plateau_ok {
        Singularity::Blowup
    } else {
        Singularity::RemovableBounded
    };
    let (pole_value, pole_value_spread) = match classification {
        Singularity::Blowup => (None, None),
        Singularity::RemovableBounded => {
            let m = k.min(3);
            let c3 = intercept(&ladder[k - m..], &mean[k - m..]);
            let c2 = intercept(&ladder[k - 2..], &mean[k - 2..]);
            let spread = if c3 == 0.0 { f64::INFINITY } else { (c3 - c2).abs() / c3.abs() };
            (Some(c3), Some(spread))
        }
    };
    Ok(SingularityProfile {
        pole: x0,
        radii: ladder.to_vec(),
        min,
        max,
        power_slope,
        log_slope,
        log_slope_spread,
        growth,
        harnack,
        plateau_ok,
        pole_value,
        pole_value_spread,
        classification,
        options: *opts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenOptions {
    pub levels: usize,
    pub holes: HoleSchedule,
    /// Reference point; defaults to `x0 + (3/4) r1 e_1`.
    pub x1: Option<[f64; 2]>,
    /// Relative sup-change on the probe region accepted as stabilized.
    pub stabilization_tol: f64,
    /// Slack in the domain-monotonicity flag, relative to the solution sup.
    pub monotone_tol: f64,
    /// Ratio of consecutive ladder radii.
    pub ladder_ratio: f64,
    pub classify: ClassifyOptions,
    pub solve: SolveOptions,
}

impl Default for GreenOptions {
    fn default() -> Self {
        Self {
            levels: 8,
            holes: HoleSchedule::Linear,
            x1: None,
            stabilization_tol: 1e-2,
            monotone_tol: 1e-6,
            ladder_ratio: std::f64::consts::FRAC_1_SQRT_2,
            classify: ClassifyOptions::default(),
            solve: SolveOptions {
                record_trace: false,
                ..SolveOptions::default()
            },
        }
    }
}

impl GreenOptions {
    fn validate(&self) -> Result<()> {
        self.holes.validate()?;
        if self.levels < 2 {
            return Err(Error::config("at least two levels are required"));
        }
        if !(self.stabilization_tol > 0.0) || !(self.monotone_tol >= 0.0) {
            return Err(Error::config("tolerances must be positive"));
        }
        if !(self.ladder_ratio > 0.0 && self.ladder_ratio < 1.0) {
            return Err(Error::config("ladder ratio must lie in (0, 1)"));
        }
        self.solve.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Index into the domain list used at this level.
    pub domain: usize,
    pub hole_radius: f64,
    pub source_outer: f64,
    pub source_elements: usize,
    /// `v_i(x1)` before normalization.
    pub value_at_x1: f64,
    /// Sup-change against the previous level on the probe region, relative
    /// to the probe sup.
    pub sup_change: Option<f64>,
    /// `max/min` of the normalized level on the shell `r1/2 <= |x - x0| <= 3 r1/4`.
    pub harnack: Option<f64>,
    /// Outward flux of the normalized level through a sphere between this
    /// and the previous source annulus (from level 2 on).
    pub flux: Option<f64>,
    /// When the domain grew: smallest `v' - v` relative to `sup v`, where
    /// `v` solved the previous level and `v'` the same problem on this
    /// level's domain.
    pub domain_gap: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct MinimalGrowth {
    /// Normalized solution of the last level, `u(x1) = 1`.
    pub u: GridFunction,
    pub spec: ProblemSpec,
    pub pole: [f64; 2],
    pub x1: [f64; 2],
    /// Distance from the pole to the boundary of the first domain.
    pub r1: f64,
    pub levels: Vec<LevelRecord>,
    pub stabilized: bool,
    /// Solutions with a fixed source grow with the domain, at every level
    /// where the domain changed.
    pub monotone: bool,
}

impl MinimalGrowth {
    pub fn last(&self) -> &LevelRecord {
        &self.levels[self.levels.len() - 1]
    }
}

fn interior_node(mesh: &Mesh, x: [f64; 2], what: &str) -> Result<usize> {
    let (i, d) = mesh.nearest_node(x);
    let h = mesh.diam() * 1e-9 + 1e-12;
    if d > h {
        return Err(Error::config(format!("{what} {x:?} is not a mesh node")));
    }
    if mesh.is_boundary(i) {
        return Err(Error::config(format!("{what} {x:?} is a boundary node")));
    }
    Ok(i)
}

fn boundary_distance(mesh: &Mesh, x0: [f64; 2]) -> f64 {
    mesh.boundary_nodes().iter().map(|&i| dist(mesh.node(i), x0)).fold(f64::INFINITY, f64::min)
}

/// Zero data on the boundary and on the closed ball of radius `hole`, with
/// a unit-mass indicator source on the annulus `hole < |x - x0| < outer`.
fn level_problem(mesh: &Mesh, x0: [f64; 2], hole: f64, outer: f64) -> Option<(Constraints, Vec<f64>, usize)> {
    let mut cons = Constraints::homogeneous(mesh);
    for (i, &c) in mesh.coords().iter().enumerate() {
        if dist(c, x0) <= hole {
            cons.pin(i, 0.0);
        }
    }
    let mut load = vec![0.0; mesh.num_elements()];
    let (mut mass, mut count) = (0.0, 0);
    for (e, l) in load.iter_mut().enumerate() {
        let d = dist(mesh.midpoint(e), x0);
        if d > hole && d < outer {
            *l = 1.0;
            mass += mesh.dx(e);
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    load.iter_mut().for_each(|l| *l /= mass);
    Some((cons, load, count))
}

fn matching_node(mesh: &Mesh, x: [f64; 2]) -> Result<usize> {
    let (i, d) = mesh.nearest_node(x);
    if d > 1e-9 * (1.0 + mesh.diam()) {
        return Err(Error::config("level domains are not nested"));
    }
    Ok(i)
}

/// Sum of the load-free residual over the nodes within `radius` of the
/// pole: the outward flux through that sphere.
fn flux_through(spec: &ProblemSpec, u: &GridFunction, x0: [f64; 2], radius: f64) -> Result<f64> {
    let r = residual_full(spec, u, None)?;
    Ok(spec
        .mesh
        .coords()
        .iter()
        .zip(&r)
        .filter(|(c, _)| dist(**c, x0) < radius)
        .map(|(_, v)| v)
        .sum())
}

/// Exhausts the punctured domain by level problems with shrinking holes
/// and unit-mass annular sources; level `i` lives on
/// `domains[min(i - 1, len - 1)]`, so a single domain stays fixed.
pub fn minimal_growth_solution(
    domains: &[ProblemSpec],
    x0: [f64; 2],
    opts: &GreenOptions,
) -> Result<MinimalGrowth> {
    opts.validate()?;
    let first = domains.first().ok_or_else(|| Error::config("no domains"))?;
    let p = first.p;
    if domains.iter().any(|d| d.p != p) {
        return Err(Error::config("all domains must share p"));
    }
    for d in domains {
        interior_node(&d.mesh, x0, "pole")?;
    }
    let r1 = boundary_distance(&first.mesh, x0);
    let x1 = opts.x1.unwrap_or([x0[0] + 0.75 * r1, x0[1]]);
    if dist(x1, x0) <= r1 * opts.holes.fraction(1) {
        return Err(Error::config("x1 must lie outside the first hole and differ from the pole"));
    }
    let x1_first = interior_node(&first.mesh, x1, "x1")?;
    let x1 = first.mesh.node(x1_first);
    let probe: Vec<[f64; 2]> = first
        .mesh
        .interior_nodes()
        .into_iter()
        .map(|i| first.mesh.node(i))
        .filter(|&c| dist(c, x0) > 0.5 * r1)
        .collect();
    if probe.is_empty() {
        return Err(Error::config("probe region is empty"));
    }

    let mut records: Vec<LevelRecord> = Vec::new();
    // normalized solution, its probe values, the raw solution and its radii
    let mut prev: Option<(GridFunction, Vec<f64>, GridFunction, f64, f64)> = None;
    for level in 1..=opts.levels {
        let di = (level - 1).min(domains.len() - 1);
        let spec = &domains[di];
        let mesh = &spec.mesh;
        let hole = r1 * opts.holes.fraction(level);
        let outer = r1 * opts.holes.fraction(level - 1);
        let (cons, load, count) = level_problem(mesh, x0, hole, outer)
            .ok_or_else(|| Error::config(format!("level {level}: no element in the source annulus")))?;
        let init = prev
            .as_ref()
            .filter(|q| same_mesh(q.2.mesh(), mesh))
            .map(|q| q.2.values().to_vec());
        let sol = minimize(spec, &load, &cons, init.as_deref(), &opts.solve)?;
        let x1_node = interior_node(mesh, x1, "x1")?;
        let at_x1 = sol.u.value(x1_node);
        if !(at_x1 > 0.0) {
            return Err(Error::domain(format!("level {level}: solution vanishes at x1")));
        }
        let u = sol.u.scaled(1.0 / at_x1);
        let on_probe: Vec<f64> = probe
            .iter()
            .map(|&c| matching_node(mesh, c).map(|i| u.value(i)))
            .collect::<Result<_>>()?;
        let sup = on_probe.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let sup_change = prev.as_ref().map(|q| {
            let d = on_probe.iter().zip(&q.1).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
            d / sup.max(f64::MIN_POSITIVE)
        });
        // the previous level's problem re-solved on the larger domain
        let domain_gap = match &prev {
            Some((_, _, raw, h, o)) if !same_mesh(raw.mesh(), mesh) => {
                let (c, l, _) = level_problem(mesh, x0, *h, *o)
                    .ok_or_else(|| Error::config(format!("level {level}: previous annulus not resolved")))?;
                let wide = minimize(spec, &l, &c, None, &opts.solve)?.u;
                let scale = raw.max_abs().max(f64::MIN_POSITIVE);
                let mut gap = f64::INFINITY;
                for (j, &c) in raw.mesh().coords().iter().enumerate() {
                    gap = gap.min((wide.value(matching_node(mesh, c)?) - raw.value(j)) / scale);
                }
                Some(gap)
            }
            _ => None,
        };
        let shell = nodes_in_shell(&u, x0, 0.6 * r1, 0.8 * r1);
        let harnack = harnack_ratio(&u, &shell, &shell).ok();
        let flux = if level >= 2 {
            let radius = (0.5 * (outer + r1 * opts.holes.fraction(level - 2))).min(2.0 * outer);
            Some(flux_through(spec, &u, x0, radius)?)
        } else {
            None
        };
        records.push(LevelRecord {
            level,
            domain: di,
            hole_radius: hole,
            source_outer: outer,
            source_elements: count,
            value_at_x1: at_x1,
            sup_change,
            harnack,
            flux,
            domain_gap,
            iterations: sol.iterations,
        });
        prev = Some((u, on_probe, sol.u, hole, outer));
    }
    let monotone = records
        .iter()
        .filter_map(|r| r.domain_gap)
        .all(|g| g >= -opts.monotone_tol);
    let u = prev.expect("at least two levels").0;
    let stabilized = records
        .last()
        .and_then(|r| r.sup_change)
        .is_some_and(|d| d <= opts.stabilization_tol);
    let spec = domains[(opts.levels - 1).min(domains.len() - 1)].clone();
    Ok(MinimalGrowth {
        u,
        spec,
        pole: x0,
        x1,
        r1,
        levels: records,
        stabilized,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenVerdict {
    GreenExists,
    CriticalNoGreen,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub x1: [f64; 2],
    /// Factor applied to the `x1`-normalized solution to give unit flux;
    /// 1 when no Green function is reported.
    pub scale: f64,
    /// Flux of the `x1`-normalized solution at the last level.
    pub flux: f64,
    /// Last over first recorded level flux.
    pub flux_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenResult {
    pub pole: [f64; 2],
    pub p: f64,
    pub n: usize,
    #[serde(skip)]
    pub g: GridFunction,
    pub normalization: Normalization,
    pub verdict: GreenVerdict,
    pub profile: SingularityProfile,
    pub levels: Vec<LevelRecord>,
    pub stabilized: bool,
    pub monotone: bool,
    /// Verdict of an independent global criticality test, when supplied.
    pub criticality: Option<Verdict>,
    pub note: String,
}

/// Minimal-growth solution at `x0`, its singularity class and the
/// existence of a minimal Green function. When `criticality` is given,
/// disagreement with it makes the verdict inconclusive.
pub fn green_function(
    domains: &[ProblemSpec],
    x0: [f64; 2],
    opts: &GreenOptions,
    criticality: Option<Verdict>,
) -> Result<GreenResult> {
    let mg = minimal_growth_solution(domains, x0, opts)?;
    let p = mg.spec.p;
    let n = mg.spec.mesh.ambient_n();
    let last = mg.last();
    let ladder = radius_ladder(0.8 * mg.r1, 1.5 * last.source_outer, opts.ladder_ratio)?;
    let profile = classify_singularity(&mg.u, x0, &ladder, &opts.classify)?;
    let fluxes: Vec<f64> = mg.levels.iter().filter_map(|r| r.flux).collect();
    let flux = *fluxes.last().expect("levels >= 2");
    let flux_ratio = flux / fluxes[0];
    let source_survives = flux > 0.0 && flux_ratio >= 0.1;
    let mut notes = Vec::new();
    let mut verdict = if p <= n as f64 {
        match profile.classification {
            Singularity::Blowup => GreenVerdict::GreenExists,
            Singularity::RemovableBounded => GreenVerdict::CriticalNoGreen,
        }
    } else if profile.classification == Singularity::RemovableBounded
        && profile.positive_limit()
        && source_survives
    {
        GreenVerdict::GreenExists
    } else if !source_survives {
        GreenVerdict::CriticalNoGreen
    } else {
        notes.push("bounded limit without a reliable positive pole value".to_string());
        GreenVerdict::Inconclusive
    };
    if !mg.stabilized {
        notes.push(format!(
            "levels did not stabilize (last change {:.3e})",
            last.sup_change.unwrap_or(f64::NAN)
        ));
        verdict = GreenVerdict::Inconclusive;
    }
    if let Some(c) = criticality {
        let agree = match c {
            Verdict::Subcritical => verdict == GreenVerdict::GreenExists,
            Verdict::Critical => verdict == GreenVerdict::CriticalNoGreen,
            _ => false,
        };
        if !agree && verdict != GreenVerdict::Inconclusive {
            notes.push(format!("criticality test says {c:?}"));
            verdict = GreenVerdict::Inconclusive;
        }
    }
    let scale = if verdict == GreenVerdict::GreenExists {
        flux.powf(-1.0 / (p - 1.0))
    } else {
        1.0
    };
    Ok(GreenResult {
        pole: x0,
        p,
        n,
        g: mg.u.scaled(scale),
        normalization: Normalization {
            x1: mg.x1,
            scale,
            flux,
            flux_ratio,
        },
        verdict,
        profile,
        levels: mg.levels,
        stabilized: mg.stabilized,
        monotone: mg.monotone,
        criticality,
        note: notes.join("; "),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalGrowthComparison {
    /// Factor making `u <= scale * v` on the sphere.
    pub scale: f64,
    /// Largest `u - scale * v` outside the ball, relative to `sup u`.
    pub max_excess: f64,
    /// `v` is a supersolution outside the ball.
    pub supersolution: bool,
    pub holds: bool,
}

/// Checks `u <= v` outside `B_radius(x0)` after scaling the positive
/// supersolution `v` to dominate `u` on the sphere of that radius.
pub fn minimal_growth_comparison(
    spec: &ProblemSpec,
    u: &GridFunction,
    v: &GridFunction,
    x0: [f64; 2],
    radius: f64,
    tol: f64,
) -> Result<MinimalGrowthComparison> {
    let mesh = &spec.mesh;
    mesh.check_len(u.values())?;
    mesh.check_len(v.values())?;
    let h = mesh
        .coords()
        .iter()
        .map(|&c| (dist(c, x0) - radius).abs())
        .fold(f64::INFINITY, f64::min);
    let sphere = nodes_in_shell(u, x0, radius - h - 1e-12, radius + h + 1e-12);
    if sphere.is_empty() {
        return Err(Error::config("no nodes on the comparison sphere"));
    }
    let mut scale = 0.0f64;
    for &i in &sphere {
        if !(v.value(i) > 0.0) {
            return Err(Error::domain(format!("v is not positive at node {i}")));
        }
        scale = scale.max(u.value(i) / v.value(i));
    }
    let r = residual(spec, v, None)?;
    let (rmax, mut supersolution) = (r.max_abs(), true);
    let sup = u.max_abs().max(f64::MIN_POSITIVE);
    let mut excess = f64::NEG_INFINITY;
    for (i, &c) in mesh.coords().iter().enumerate() {
        if dist(c, x0) > radius + h {
            excess = excess.max((u.value(i) - scale * v.value(i)) / sup);
            if r.value(i) < -tol * (1.0 + rmax) {
                supersolution = false;
            }
        }
    }
    Ok(MinimalGrowthComparison {
        scale,
        max_excess: excess,
        supersolution,
        holds: excess <= tol,
    })
}
