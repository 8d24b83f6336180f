//! Numerical side: backward expansion `I(x, u; f^n)`, cone census of the
//! preimage tree, grid minima of `J_i`, and forward Lyapunov exponents.
//!
//! Everything here is evidence computed on finite samples, not a proof.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{half_floor, l_general, recursion_constants};
use crate::endo::{ComposedEndo, Variant};
use crate::error::{Error, Result};
use crate::mat::{vec_max_norm, Mat2};
use crate::torus::TorusPoint;

/// Largest number of leaves `d^n` a single tree walk may visit.
pub const NODE_CAP: u64 = 10_000_000;
pub const DEFAULT_BURN_IN: usize = 1000;

/// Default depth: 3 for `d = 25`-sized degrees, 4 for `d <= 9`.
pub fn default_depth(d: usize) -> usize {
    if d <= 9 {
        4
    } else {
        3
    }
}

fn check_budget(d: usize, n: usize) -> Result<()> {
    let needed = (d as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if needed > NODE_CAP {
        return Err(Error::Budget {
            needed,
            cap: NODE_CAP,
        });
    }
    Ok(())
}

fn unit(u: [f64; 2]) -> Result<[f64; 2]> {
    let n = vec_max_norm(u);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidInput(
            "zero or non-finite tangent vector".into(),
        ));
    }
    Ok([u[0] / n, u[1] / n])
}

/// `(1/d) Σ_y log |(D_y f)⁻¹ u|` for `u` rescaled to max-norm one.
pub fn i_one_step(f: &ComposedEndo, x: TorusPoint, u: [f64; 2]) -> Result<f64> {
    let u = unit(u)?;
    let mut acc = 0.0;
    f.for_each_branch(x, |_, inv| acc += vec_max_norm(inv.apply(u)).ln());
    Ok(acc / f.degree() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IExpansionSeries {
    pub j: Vec<f64>,
    /// `partial[i] = J_0 + ... + J_i`.
    pub partial: Vec<f64>,
}

impl IExpansionSeries {
    fn from_j(j: Vec<f64>) -> Self {
        let partial = j
            .iter()
            .scan(0.0, |s, x| {
                *s += x;
                Some(*s)
            })
            .collect();
        IExpansionSeries { j, partial }
    }

    /// `I(x, u; f^n)`.
    pub fn total(&self) -> f64 {
        self.partial.last().copied().unwrap_or(0.0)
    }
}

/// Depth-first walk of the preimage tree carrying several tangent vectors
/// at once. `acc[i][m]` receives `Σ log|(D f)⁻¹ w| / d^(i+1)` over the nodes
/// at level `i`, with `w` the normalized pullback of direction `m`.
struct Walk<'a> {
    f: &'a ComposedEndo,
    depth: usize,
    weights: Vec<f64>,
    acc: Vec<Vec<f64>>,
}

impl Walk<'_> {
    fn visit(&mut self, y: TorusPoint, ws: &[[f64; 2]], level: usize) {
        let m = ws.len();
        let mut children: Vec<(TorusPoint, Mat2)> = Vec::with_capacity(self.f.degree());
        self.f.for_each_branch(y, |z, inv| children.push((z, inv)));
        let wt = self.weights[level];
        let mut next = vec![[0.0; 2]; m];
        for (z, inv) in children {
            for (k, w) in ws.iter().enumerate() {
                let v = inv.apply(*w);
                let n = vec_max_norm(v);
                self.acc[level][k] += n.ln() * wt;
                next[k] = [v[0] / n, v[1] / n];
            }
            if level + 1 < self.depth {
                self.visit(z, &next, level + 1);
            }
        }
    }
}

/// `J_i` for each direction in `dirs`; result indexed `[direction][level]`.
fn j_series_multi(f: &ComposedEndo, x: TorusPoint, dirs: &[[f64; 2]], n: usize) -> Vec<Vec<f64>> {
    let d = f.degree() as f64;
    let mut walk = Walk {
        f,
        depth: n,
        weights: (0..n).map(|i| 1.0 / d.powi(i as i32 + 1)).collect(),
        acc: vec![vec![0.0; dirs.len()]; n],
    };
    if n > 0 {
        walk.visit(x, dirs, 0);
    }
    (0..dirs.len())
        .map(|k| (0..n).map(|i| walk.acc[i][k]).collect())
        .collect()
}

/// `J_i = Σ_{y ∈ f^{-i}(x)} I(y, F_y^{-i} u; f) / d^i` for `i < n`.
pub fn i_n_recursive(
    f: &ComposedEndo,
    x: TorusPoint,
    u: [f64; 2],
    n: usize,
) -> Result<IExpansionSeries> {
    if n == 0 {
        return Err(Error::InvalidInput("depth must be >= 1".into()));
    }
    check_budget(f.degree(), n)?;
    let u = unit(u)?;
    let j = j_series_multi(f, x, &[u], n).remove(0);
    Ok(IExpansionSeries::from_j(j))
}

/// `Σ_{y ∈ f^{-n}(x)} log |(D_y f^n)⁻¹ u| / d^n`, with `D_y f^n` built from
/// forward Jacobians along each branch and inverted at the end.
pub fn i_n_direct(f: &ComposedEndo, x: TorusPoint, u: [f64; 2], n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    check_budget(f.degree(), n)?;
    let u = unit(u)?;
    // each frontier entry: a point y of f^{-i}(x) and D_y f^i
    let mut frontier = vec![(x, Mat2::IDENTITY)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(frontier.len() * f.degree());
        for (y, dfi) in &frontier {
            for rec in f.preimages_f(*y) {
                next.push((rec.y, dfi.mul(f.jacobian_f(rec.y))));
            }
        }
        frontier = next;
    }
    let dn = frontier.len() as f64;
    // the shears preserve area, so det D_y f^n = (det E)^n exactly; the
    // entrywise ad - bc would cancel catastrophically
    let det = (f.matrix().determinant() as f64).powi(n as i32);
    let mut acc = 0.0;
    for (_, m) in &frontier {
        let [[a, b], [c, d]] = m.0;
        let inv = Mat2::new(d / det, -b / det, -c / det, a / det);
        acc += vec_max_norm(inv.apply(u)).ln();
    }
    Ok(acc / dn)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCensus {
    /// Nodes at level `i` whose pulled-back vector lies in the vertical cone.
    pub g: Vec<u64>,
    pub b: Vec<u64>,
    pub a: Vec<f64>,
    /// Recursion lower bound on `a_i`.
    pub bound: Vec<f64>,
}

impl ConeCensus {
    /// Smallest `a_i - bound_i`.
    pub fn min_margin(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.bound)
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Lower bounds `a_i >= e/(1-c) (1 - c^i)` for `i = 0..=n`.
pub fn census_bounds(f: &ComposedEndo, n: usize) -> Result<Vec<f64>> {
    let (c, e) = match &f.variant {
        Variant::Homothety { k, .. } => {
            let (c, e) = recursion_constants(*k)?;
            (c.to_f64().unwrap(), e.to_f64().unwrap())
        }
        Variant::General { tilde, .. } => {
            let (t1, t2) = (tilde.tau1 as f64, tilde.tau2 as f64);
            let d = t1 * t2;
            let frac = half_floor(tilde.tau2 as i64) as f64 / t2;
            ((d - 1.0) / d - frac, frac)
        }
    };
    if let Variant::General { tilde, .. } = &f.variant {
        // e/(1-c) must reproduce L(tau1, tau2)
        debug_assert!(
            (e / (1.0 - c) - l_general(tilde.tau1, tilde.tau2)?.to_f64().unwrap()).abs() < 1e-12
        );
    }
    Ok((0..=n)
        .map(|i| e / (1.0 - c) * (1.0 - c.powi(i as i32)))
        .collect())
}

/// Counts of vertical-cone vectors at each level `0..=n` of the tree.
pub fn cone_census(f: &ComposedEndo, x: TorusPoint, u: [f64; 2], n: usize) -> Result<ConeCensus> {
    check_budget(f.degree(), n)?;
    let u = unit(u)?;
    let cone = f.cone();
    let mut g = vec![0u64; n + 1];
    fn walk(
        f: &ComposedEndo,
        cone: crate::torus::ConeSpec,
        y: TorusPoint,
        w: [f64; 2],
        level: usize,
        n: usize,
        g: &mut [u64],
    ) {
        if cone.is_vertical(w) {
            g[level] += 1;
        }
        if level == n {
            return;
        }
        let mut kids = Vec::with_capacity(f.degree());
        f.for_each_branch(y, |z, inv| kids.push((z, inv)));
        for (z, inv) in kids {
            let v = inv.apply(w);
            let s = vec_max_norm(v);
            walk(f, cone, z, [v[0] / s, v[1] / s], level + 1, n, g);
        }
    }
    walk(f, cone, x, u, 0, n, &mut g);
    let d = f.degree() as u64;
    let sizes: Vec<u64> = (0..=n).map(|i| d.pow(i as u32)).collect();
    let b = g.iter().zip(&sizes).map(|(g, s)| s - g).collect();
    let a = g
        .iter()
        .zip(&sizes)
        .map(|(g, s)| *g as f64 / *s as f64)
        .collect();
    Ok(ConeCensus {
        g,
        b,
        a,
        bound: census_bounds(f, n)?,
    })
}

/// Unit max-norm directions: the four cone-edge vectors, then
/// `count - 4` angles `π j / (count - 4)`.
pub fn direction_fan(alpha: f64, count: usize) -> Vec<[f64; 2]> {
    let mut out = vec![
        [1.0 / alpha, 1.0],
        [-1.0 / alpha, 1.0],
        [1.0 / alpha, -1.0],
        [-1.0 / alpha, -1.0],
    ];
    let m = count.saturating_sub(4);
    for j in 0..m {
        let th = std::f64::consts::PI * j as f64 / m as f64;
        let v = [th.cos(), th.sin()];
        let n = vec_max_norm(v);
        out.push([v[0] / n, v[1] / n]);
    }
    out.truncate(count.max(1));
    out
}

/// Cell-centred points of a `w × h` grid.
pub fn spatial_grid(w: usize, h: usize) -> Vec<TorusPoint> {
    (0..w)
        .flat_map(|i| {
            (0..h).map(move |j| {
                TorusPoint::wrapped((i as f64 + 0.5) / w as f64, (j as f64 + 0.5) / h as f64)
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMinReport {
    pub depth: usize,
    pub points: usize,
    pub directions: usize,
    /// Minimum of `J_i` over the samples, per level.
    pub min_j: Vec<f64>,
    /// Minimum of `I(x, u; f^n) / n`.
    pub min_average: f64,
    pub argmin_x: TorusPoint,
    pub argmin_u: [f64; 2],
}

/// Minima of `J_i` and `I / n` over `points × dirs`.
pub fn grid_min_j(
    f: &ComposedEndo,
    n: usize,
    points: &[TorusPoint],
    dirs: &[[f64; 2]],
) -> Result<GridMinReport> {
    if n == 0 || points.is_empty() || dirs.is_empty() {
        return Err(Error::InvalidInput("empty grid or zero depth".into()));
    }
    check_budget(f.degree(), n)?;
    let dirs: Vec<[f64; 2]> = dirs.iter().map(|u| unit(*u)).collect::<Result<_>>()?;
    // per point: [direction][level]; collected in point order
    let per_point: Vec<Vec<Vec<f64>>> = points
        .par_iter()
        .map(|x| j_series_multi(f, *x, &dirs, n))
        .collect();
    let mut min_j = vec![f64::INFINITY; n];
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for (p, series) in per_point.iter().enumerate() {
        for (k, js) in series.iter().enumerate() {
            for (i, v) in js.iter().enumerate() {
                min_j[i] = min_j[i].min(*v);
            }
            let avg = js.iter().sum::<f64>() / n as f64;
            if avg < best.0 {
                best = (avg, p, k);
            }
        }
    }
    Ok(GridMinReport {
        depth: n,
        points: points.len(),
        directions: dirs.len(),
        min_j,
        min_average: best.0,
        argmin_x: points[best.1],
        argmin_u: dirs[best.2],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub start: TorusPoint,
}

/// Top exponent by pushing a vector forward and renormalizing each step;
/// the bottom one follows from `det D f = d`.
pub fn lyapunov_forward(
    f: &ComposedEndo,
    x0: TorusPoint,
    steps: usize,
    burn_in: usize,
) -> Result<LyapunovEstimate> {
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be >= 1".into()));
    }
    let mut x = x0;
    let mut v = [1.0, 1.0];
    let mut acc = 0.0;
    for i in 0..burn_in + steps {
        let w = f.jacobian_f(x).apply(v);
        let n = vec_max_norm(w);
        if i >= burn_in {
            acc += n.ln();
        }
        v = [w[0] / n, w[1] / n];
        x = f.apply_f(x);
    }
    let lambda_plus = acc / steps as f64;
    let log_d = (f.degree() as f64).ln();
    Ok(LyapunovEstimate {
        lambda_plus,
        lambda_minus: complement(log_d, lambda_plus),
        steps,
        burn_in,
        start: x0,
    })
}

/// `m` with `p + m == total` in floating point, found by stepping the
/// rounded difference one ulp at a time.
fn complement(total: f64, p: f64) -> f64 {
    let mut m = total - p;
    for _ in 0..4 {
        let s = p + m;
        if s == total {
            break;
        }
        m = if s > total {
            m.next_down()
        } else {
            m.next_up()
        };
    }
    m
}

/// Start point drawn from a seeded generator.
pub fn lyapunov_seeded(
    f: &ComposedEndo,
    seed: u64,
    steps: usize,
    burn_in: usize,
) -> Result<LyapunovEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = TorusPoint::wrapped(rng.gen(), rng.gen());
    lyapunov_forward(f, x0, steps, burn_in)
}

/// `log` of a uniform bound on `|D_x f|` in the max operator norm.
pub fn log_sup_derivative(f: &ComposedEndo) -> f64 {
    let e = f.matrix().to_mat2().max_operator_norm();
    let b = f.profile.b;
    let v = match &f.variant {
        Variant::Homothety { params, .. } => 1.0 + params.r * b,
        Variant::General { tilde, .. } => 1.0 + tilde.s.derivative_bound(1),
    };
    (e * v * (1.0 + f.t() * b)).ln()
}

/// CSV with columns `i, J_i, partialSum, g_i, a_i, bound_i`.
pub fn series_csv(series: &IExpansionSeries, census: Option<&ConeCensus>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["i", "J_i", "partialSum", "g_i", "a_i", "bound_i"])
        .map_err(io)?;
    for i in 0..series.j.len() {
        let (g, a, b) = match census {
            Some(c) if i < c.g.len() => (
                c.g[i].to_string(),
                c.a[i].to_string(),
                c.bound[i].to_string(),
            ),
            _ => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            i.to_string(),
            series.j[i].to_string(),
            series.partial[i].to_string(),
            g,
            a,
            b,
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
