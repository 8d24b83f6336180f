//! Integer 2×2 endomorphisms of the torus.
//!
//! Everything here that touches the lattice `E⁻¹Z²` is computed with exact
//! integers and rationals; floating point only appears when a rational
//! offset is added to a real base point.

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat2;
use crate::torus::{wrap_unchecked, ConeSpec, TorusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix(pub [[i64; 2]; 2]);

impl IntMatrix {
    pub const IDENTITY: IntMatrix = IntMatrix([[1, 0], [0, 1]]);

    pub fn new(e11: i64, e12: i64, e21: i64, e22: i64) -> Self {
        IntMatrix([[e11, e12], [e21, e22]])
    }

    pub fn homothety(k: i64) -> Self {
        IntMatrix([[k, 0], [0, k]])
    }

    pub fn determinant(&self) -> i64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Topological degree `|det|`.
    pub fn degree(&self) -> Result<u64> {
        match self.determinant() {
            0 => Err(Error::DegenerateMatrix),
            d => Ok(d.unsigned_abs()),
        }
    }

    pub fn is_homothety(&self) -> bool {
        let m = self.0;
        m[0][1] == 0 && m[1][0] == 0 && m[0][0] == m[1][1]
    }

    pub fn mul(&self, o: &IntMatrix) -> IntMatrix {
        let (a, b) = (self.0, o.0);
        IntMatrix([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, v: [i64; 2]) -> [i64; 2] {
        let m = self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Inverse of a unimodular matrix.
    pub fn unimodular_inverse(&self) -> Option<IntMatrix> {
        let m = self.0;
        match self.determinant() {
            1 => Some(IntMatrix([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]])),
            -1 => Some(IntMatrix([[-m[1][1], m[0][1]], [m[1][0], -m[0][0]]])),
            _ => None,
        }
    }

    /// Exact rational inverse.
    pub fn rational_inverse(&self) -> Result<[[Rational64; 2]; 2]> {
        let det = self.determinant();
        if det == 0 {
            return Err(Error::DegenerateMatrix);
        }
        let m = self.0;
        let r = |n: i64| Rational64::new(n, det);
        Ok([[r(m[1][1]), r(-m[0][1])], [r(-m[1][0]), r(m[0][0])]])
    }

    pub fn to_mat2(&self) -> Mat2 {
        let m = self.0;
        Mat2::new(
            m[0][0] as f64,
            m[0][1] as f64,
            m[1][0] as f64,
            m[1][1] as f64,
        )
    }

    pub fn inverse_mat2(&self) -> Result<Mat2> {
        let r = self.rational_inverse()?;
        let f = |q: Rational64| q.to_f64().unwrap_or(f64::NAN);
        Ok(Mat2::new(f(r[0][0]), f(r[0][1]), f(r[1][0]), f(r[1][1])))
    }

    /// Whether `(0,1)` is an eigenvector.
    pub fn has_vertical_eigenvector(&self) -> bool {
        self.0[0][1] == 0
    }

    fn entries_gcd(&self) -> i64 {
        let m = self.0;
        m[0][0].gcd(&m[0][1]).gcd(&m[1][0]).gcd(&m[1][1])
    }
}

pub fn determinant(e: &IntMatrix) -> i64 {
    e.determinant()
}

pub fn degree(e: &IntMatrix) -> Result<u64> {
    e.degree()
}

pub fn is_homothety(e: &IntMatrix) -> bool {
    e.is_homothety()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementaryDivisors {
    pub tau1: u64,
    pub tau2: u64,
}

impl ElementaryDivisors {
    pub fn degree(&self) -> u64 {
        self.tau1 * self.tau2
    }
}

/// `tau1` = gcd of the entries, `tau2 = |det| / tau1`.
pub fn elementary_divisors(e: &IntMatrix) -> Result<ElementaryDivisors> {
    let d = e.degree()?;
    let tau1 = e.entries_gcd().unsigned_abs();
    Ok(ElementaryDivisors {
        tau1,
        tau2: d / tau1,
    })
}

/// Smith form of a nonsingular 2×2 integer matrix: `U·M·V = diag(d1, d2)`
/// with `U`, `V` unimodular, `d1 | d2` and both positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmithForm {
    pub diag: [i64; 2],
    pub u: IntMatrix,
    pub v: IntMatrix,
}

pub fn smith_form(m: &IntMatrix) -> Result<SmithForm> {
    if m.determinant() == 0 {
        return Err(Error::DegenerateMatrix);
    }
    let mut a = m.0;
    let mut u = IntMatrix::IDENTITY.0;
    let mut v = IntMatrix::IDENTITY.0;

    fn swap_rows(x: &mut [[i64; 2]; 2]) {
        x.swap(0, 1);
    }
    fn swap_cols(x: &mut [[i64; 2]; 2]) {
        for row in x.iter_mut() {
            row.swap(0, 1);
        }
    }
    // row_i -= q * row_j
    fn row_sub(x: &mut [[i64; 2]; 2], i: usize, j: usize, q: i64) {
        for c in 0..2 {
            x[i][c] -= q * x[j][c];
        }
    }
    fn col_sub(x: &mut [[i64; 2]; 2], i: usize, j: usize, q: i64) {
        for row in x.iter_mut() {
            row[i] -= q * row[j];
        }
    }

    loop {
        // pivot: smallest nonzero entry to (0,0)
        let mut best = (0usize, 0usize);
        let mut best_abs = i64::MAX;
        for (r, row) in a.iter().enumerate() {
            for (c, &val) in row.iter().enumerate() {
                if val != 0 && val.abs() < best_abs {
                    best_abs = val.abs();
                    best = (r, c);
                }
            }
        }
        if best.0 == 1 {
            swap_rows(&mut a);
            swap_rows(&mut u);
        }
        if best.1 == 1 {
            swap_cols(&mut a);
            swap_cols(&mut v);
        }
        let p = a[0][0];
        let q_row = Integer::div_floor(&a[1][0], &p);
        row_sub(&mut a, 1, 0, q_row);
        row_sub(&mut u, 1, 0, q_row);
        let q_col = Integer::div_floor(&a[0][1], &p);
        col_sub(&mut a, 1, 0, q_col);
        col_sub(&mut v, 1, 0, q_col);
        if a[1][0] != 0 || a[0][1] != 0 {
            continue;
        }
        if a[1][1] % a[0][0] != 0 {
            // row_0 += row_1 brings a non-multiple into the pivot row
            row_sub(&mut a, 0, 1, -1);
            row_sub(&mut u, 0, 1, -1);
            continue;
        }
        break;
    }
    for r in 0..2 {
        if a[r][r] < 0 {
            for c in 0..2 {
                a[r][c] = -a[r][c];
                u[r][c] = -u[r][c];
            }
        }
    }
    Ok(SmithForm {
        diag: [a[0][0], a[1][1]],
        u: IntMatrix(u),
        v: IntMatrix(v),
    })
}

/// Unimodular change of coordinates `G = P⁻¹ E P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinateChange {
    pub p: IntMatrix,
    pub g: IntMatrix,
    pub divisors: ElementaryDivisors,
}

/// Whether `G⁻¹Z² = (1/tau2)Z × (1/tau1)Z`, i.e. `G·diag(1/tau2, 1/tau1)`
/// is an integer unimodular matrix.
pub fn has_normalized_lattice(g: &IntMatrix, div: ElementaryDivisors) -> bool {
    let (t1, t2) = (div.tau1 as i64, div.tau2 as i64);
    let m = g.0;
    if m[0][0] % t2 != 0 || m[1][0] % t2 != 0 || m[0][1] % t1 != 0 || m[1][1] % t1 != 0 {
        return false;
    }
    let scaled = IntMatrix([[m[0][0] / t2, m[0][1] / t1], [m[1][0] / t2, m[1][1] / t1]]);
    scaled.determinant().abs() == 1
}

pub fn check_coordinate_change(e: &IntMatrix, cc: &CoordinateChange) -> bool {
    let Some(p_inv) = cc.p.unimodular_inverse() else {
        return false;
    };
    p_inv.mul(e).mul(&cc.p) == cc.g
        && has_normalized_lattice(&cc.g, cc.divisors)
        && !cc.g.has_vertical_eigenvector()
}

/// Find `P` in `GL2(Z)` so that `G = P⁻¹EP` has the lattice
/// `(1/tau2)Z × (1/tau1)Z` as `G⁻¹Z²` and does not fix the direction `(0,1)`.
pub fn normalize_coordinates(e: &IntMatrix) -> Result<CoordinateChange> {
    if e.is_homothety() {
        return Err(Error::Unsupported(
            "homothety: no change of coordinates removes the (0,1) eigenvector".into(),
        ));
    }
    let divisors = elementary_divisors(e)?;
    let identity = CoordinateChange {
        p: IntMatrix::IDENTITY,
        g: *e,
        divisors,
    };
    if check_coordinate_change(e, &identity) {
        return Ok(identity);
    }

    let t1 = divisors.tau1 as i64;
    let primitive = IntMatrix(e.0.map(|row| row.map(|x| x / t1)));
    let snf = smith_form(&primitive)?;
    // columns of V: p1 spans the cyclic part of E'^{-1}Z² / Z²
    let v = snf.v.0;
    let p1 = [v[0][1], v[1][1]];
    let p2 = [v[0][0], v[1][0]];
    for lambda in [0i64, 1, -1, 2, -2, 3, -3] {
        let q = [p2[0] + lambda * p1[0], p2[1] + lambda * p1[1]];
        let p = IntMatrix([[p1[0], q[0]], [p1[1], q[1]]]);
        let Some(p_inv) = p.unimodular_inverse() else {
            continue;
        };
        let cc = CoordinateChange {
            p,
            g: p_inv.mul(e).mul(&p),
            divisors,
        };
        if check_coordinate_change(e, &cc) {
            return Ok(cc);
        }
    }
    Err(Error::SearchFailure(format!(
        "no normalizing change of coordinates found for {:?}",
        e.0
    )))
}

/// The `d` points of `E⁻¹(x)` come from `E⁻¹x` plus a fixed set of exact
/// rational offsets; this caches both.
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageLattice {
    pub matrix: IntMatrix,
    inverse: Mat2,
    /// Offsets in lexicographic lattice-index order.
    offsets: Vec<[f64; 2]>,
    homothety: Option<i64>,
}

impl PreimageLattice {
    pub fn new(e: &IntMatrix) -> Result<Self> {
        let d = e.degree()?;
        let inverse = e.inverse_mat2()?;
        let homothety = e.is_homothety().then(|| e.0[0][0]);
        let offsets = exact_offsets(e)?
            .into_iter()
            .map(|o| [o[0].to_f64().unwrap(), o[1].to_f64().unwrap()])
            .collect::<Vec<_>>();
        debug_assert_eq!(offsets.len() as u64, d);
        Ok(Self {
            matrix: *e,
            inverse,
            offsets,
            homothety,
        })
    }

    pub fn degree(&self) -> usize {
        self.offsets.len()
    }

    pub fn inverse(&self) -> Mat2 {
        self.inverse
    }

    /// Offsets `E⁻¹n mod Z²` as floats.
    pub fn offsets(&self) -> &[[f64; 2]] {
        &self.offsets
    }

    pub fn for_each_preimage(&self, x: TorusPoint, mut f: impl FnMut(TorusPoint)) {
        if let Some(k) = self.homothety {
            let kf = k.unsigned_abs() as f64;
            let n = k.unsigned_abs();
            let sign = if k < 0 { -1.0 } else { 1.0 };
            for i in 0..n {
                for j in 0..n {
                    f(TorusPoint::wrapped(
                        sign * (x.x1 + i as f64) / kf,
                        sign * (x.x2 + j as f64) / kf,
                    ));
                }
            }
            return;
        }
        let base = self.inverse.apply([x.x1, x.x2]);
        for o in &self.offsets {
            f(TorusPoint::wrapped(base[0] + o[0], base[1] + o[1]));
        }
    }

    pub fn preimages(&self, x: TorusPoint) -> Vec<TorusPoint> {
        let mut out = Vec::with_capacity(self.degree());
        self.for_each_preimage(x, |p| out.push(p));
        out
    }
}

/// Representatives of `E⁻¹Z² / Z²` in `[0,1)²`, exact.
///
/// With Smith form `U E V = diag(d1, d2)`, `E⁻¹Z² = V·diag(1/d1, 1/d2)Z²`.
pub fn exact_offsets(e: &IntMatrix) -> Result<Vec<[Rational64; 2]>> {
    let snf = smith_form(e)?;
    let [d1, d2] = snf.diag;
    let v = snf.v.0;
    let frac = |q: Rational64| q - q.floor();
    let mut out = Vec::with_capacity((d1 * d2) as usize);
    if e.is_homothety() {
        let k = e.0[0][0].abs();
        for i in 0..k {
            for j in 0..k {
                out.push([Rational64::new(i, k), Rational64::new(j, k)]);
            }
        }
        return Ok(out);
    }
    if let Some(div) = elementary_divisors(e)
        .ok()
        .filter(|d| has_normalized_lattice(e, *d))
    {
        let (t1, t2) = (div.tau1 as i64, div.tau2 as i64);
        for i in 0..t2 {
            for j in 0..t1 {
                out.push([Rational64::new(i, t2), Rational64::new(j, t1)]);
            }
        }
        return Ok(out);
    }
    for i in 0..d1 {
        for j in 0..d2 {
            let a = Rational64::new(i, d1);
            let b = Rational64::new(j, d2);
            let x = Rational64::from_integer(v[0][0]) * a + Rational64::from_integer(v[0][1]) * b;
            let y = Rational64::from_integer(v[1][0]) * a + Rational64::from_integer(v[1][1]) * b;
            out.push([frac(x), frac(y)]);
        }
    }
    Ok(out)
}

pub fn preimage_lattice(e: &IntMatrix, x: TorusPoint) -> Result<Vec<TorusPoint>> {
    Ok(PreimageLattice::new(e)?.preimages(x))
}

/// Apply `E` as a torus map.
pub fn apply_linear(e: &IntMatrix, p: TorusPoint) -> TorusPoint {
    let m = e.0;
    TorusPoint {
        x1: wrap_unchecked(m[0][0] as f64 * p.x1 + m[0][1] as f64 * p.x2),
        x2: wrap_unchecked(m[1][0] as f64 * p.x1 + m[1][1] as f64 * p.x2),
    }
}

/// Result of the cone-aperture search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearch {
    /// Smallest aperture (to bisection accuracy) with the strict inclusion.
    pub threshold: f64,
    /// Aperture used downstream: `max(threshold, tau2) * safety`.
    pub alpha: f64,
}

pub const ALPHA_CAP: f64 = 1e6;
pub const ALPHA_REL_WIDTH: f64 = 1e-6;
pub const ALPHA_SAFETY: f64 = 1.01;

/// Directions sampled along the closed vertical cone `|u2| >= alpha |u1|`,
/// with unit second coordinate, endpoints included.
pub fn vertical_cone_fan(alpha: f64, n: usize) -> impl Iterator<Item = [f64; 2]> {
    (0..=n).map(move |i| {
        let s = -1.0 + 2.0 * i as f64 / n as f64;
        [s / alpha, 1.0]
    })
}

/// Whether `M` maps the closed vertical cone of aperture `alpha` into the
/// interior of the horizontal cone, tested on a fan including both edges.
pub fn maps_vertical_into_horizontal(m: &Mat2, alpha: f64, fan: usize) -> bool {
    vertical_cone_fan(alpha, fan).all(|u| {
        let w = m.apply(u);
        w[1].abs() < alpha * w[0].abs()
    })
}

/// Smallest `alpha` with `closure(E⁻¹ Δ^v_alpha) ⊂ int Δ^h_alpha`, by bisection.
pub fn min_alpha(e: &IntMatrix) -> Result<AlphaSearch> {
    if e.has_vertical_eigenvector() {
        return Err(Error::Unsupported(
            "(0,1) is an eigenvector: the inclusion fails on the eigendirection".into(),
        ));
    }
    let inv = e.inverse_mat2()?;
    let div = elementary_divisors(e)?;
    const FAN: usize = 256;
    let ok = |a: f64| maps_vertical_into_horizontal(&inv, a, FAN);
    if !ok(ALPHA_CAP) {
        return Err(Error::SearchFailure(format!(
            "no cone aperture below {ALPHA_CAP}"
        )));
    }
    let (mut lo, mut hi) = (1.0_f64, ALPHA_CAP);
    while (hi - lo) > ALPHA_REL_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha = hi.max(div.tau2 as f64).max(1.0) * ALPHA_SAFETY;
    debug_assert!(ok(alpha));
    let _ = ConeSpec::new(alpha)?;
    Ok(AlphaSearch {
        threshold: hi,
        alpha,
    })
}

/// Exact check that a rational point lies in `E⁻¹Z²` (used by tests and the
/// normalization report).
pub fn in_preimage_lattice(e: &IntMatrix, q: [Rational64; 2]) -> bool {
    let m = e.0;
    let r = |n: i64| Rational64::from_integer(n);
    let y0 = r(m[0][0]) * q[0] + r(m[0][1]) * q[1];
    let y1 = r(m[1][0]) * q[0] + r(m[1][1]) * q[1];
    y0.is_integer() && y1.is_integer()
}
