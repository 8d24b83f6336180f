//! Closed-form lower bounds on the limit of the averaged backward expansion
//! `J_i`, and the constants behind them.
//!
//! Combinatorial constants are exact rationals; only the log terms are
//! floating point.

use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::IntMatrix;
use crate::mat::{vec_max_norm, Mat2};
use crate::trig::TrigPoly;

/// Relative factor applied to the smallest accepted `beta`.
pub const BETA_SAFETY: f64 = 1.01;
/// Factor applied to sampled infima `e_v`, `e_h`.
pub const EXPANSION_SAFETY: f64 = 0.99;
pub const BETA_CAP: f64 = 1e6;
/// Absolute tolerance under which the verbatim and derived bounds agree.
pub const MODE_AGREEMENT_TOL: f64 = 1e-9;

/// A rational with its float value, as it appears in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exact {
    pub num: i64,
    pub den: i64,
    pub value: f64,
}

impl From<Rational64> for Exact {
    fn from(q: Rational64) -> Self {
        Exact {
            num: *q.numer(),
            den: *q.denom(),
            value: q.to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl std::fmt::Display for Exact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn check_k(k: u32) -> Result<i64> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
    }
    Ok(k as i64)
}

/// `⌊(n-1)/2⌋`.
pub fn half_floor(n: i64) -> i64 {
    (n - 1).div_euclid(2)
}

pub fn l_homothety(k: u32) -> Result<Rational64> {
    let k = check_k(k)?;
    let c = half_floor(k);
    Ok(q(c * (k + c), 2 * k - 1 + c * (k - 1 + c)))
}

/// `(c, e)` of the recursion `a_{n+1} >= c a_n + e`.
pub fn recursion_constants(k: u32) -> Result<(Rational64, Rational64)> {
    let k = check_k(k)?;
    let ck = half_floor(k);
    let k2 = k * k;
    Ok((
        q((k - 1) * (k - 1) - ck * (k - 1 + ck), k2),
        q(ck * (k + ck), k2),
    ))
}

fn big(x: Rational64) -> BigRational {
    BigRational::from_i64(*x.numer()).unwrap() / BigRational::from_i64(*x.denom()).unwrap()
}

/// `(e/(1-c))(1 - c^n)`, exact.
pub fn recursion_lower_bound(k: u32, n: u32) -> Result<BigRational> {
    let (c, e) = recursion_constants(k)?;
    let (c, e) = (big(c), big(e));
    let one = BigRational::one();
    let mut cn = one.clone();
    for _ in 0..n {
        cn *= &c;
    }
    Ok(e / (&one - &c) * (one - cn))
}

pub fn l_general(tau1: u32, tau2: u32) -> Result<Rational64> {
    if tau1 == 0 || tau2 == 0 {
        return Err(Error::InvalidInput("divisors must be positive".into()));
    }
    let (t1, t2) = (tau1 as i64, tau2 as i64);
    let c = half_floor(t2);
    Ok(q(c, t2) * q(t1 * t2, 1 + t1 * c))
}

/// `log r` and `log t` coefficients of the two one-step bounds `V`, `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomothetyCoefficients {
    pub v_log_r: Rational64,
    pub v_log_t: Rational64,
    pub h_log_r: Rational64,
    pub h_log_t: Rational64,
    pub limit_log_r: Rational64,
    pub limit_log_t: Rational64,
}

pub fn homothety_coefficients(k: u32) -> Result<HomothetyCoefficients> {
    let l = l_homothety(k)?;
    let k = k as i64;
    let c = half_floor(k);
    let k2 = k * k;
    let r = |n: i64| Rational64::from_integer(n);
    Ok(HomothetyCoefficients {
        v_log_r: q((k - 1) * (k - 1), k2),
        v_log_t: q(k2 - 4 * k + 2 + c, k2),
        h_log_r: -q(k2 - (k - 1) * c, k2),
        h_log_t: -q(k2 - c * (2 * k - 1 + c), k2),
        limit_log_r: (l * r((k - 1) * (2 * k - c) + 1) - r(k2 - (k - 1) * c)) / r(k2),
        limit_log_t: (l * r(2 * (k - 1) * (k - 1) - c * (2 * (k - 1) + c))
            - r(k2 - c * (2 * k - 1 + c)))
            / r(k2),
    })
}

/// `log t` coefficient of the non-homothety limit bound as displayed:
/// `((tau1 - 2/tau2) c - 1) / (1 + tau1 c)`.
pub fn general_coeff_log_t(tau1: u32, tau2: u32) -> Result<Rational64> {
    l_general(tau1, tau2)?;
    let (t1, t2) = (tau1 as i64, tau2 as i64);
    let c = half_floor(t2);
    Ok(((Rational64::from_integer(t1) - q(2, t2)) * c - 1) / (1 + t1 * c))
}

/// `L (d-1)/d - (1 - L)(1 - c/tau2)`: the same coefficient recombined from
/// the one-step bounds.
pub fn general_coeff_log_t_recombined(tau1: u32, tau2: u32) -> Result<Rational64> {
    let l = l_general(tau1, tau2)?;
    let (t1, t2) = (tau1 as i64, tau2 as i64);
    let d = t1 * t2;
    let c = half_floor(t2);
    Ok(l * q(d - 1, d) - (Rational64::one() - l) * (Rational64::one() - q(c, t2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomothetyInput {
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub t: f64,
    pub r: f64,
}

impl HomothetyInput {
    /// `2 alpha / a`; `t` and `r` must exceed it.
    pub fn threshold(&self) -> f64 {
        2.0 * self.alpha / self.a
    }

    fn validate(&self) -> Result<()> {
        check_k(self.k)?;
        let vals = [self.a, self.b, self.alpha, self.t, self.r];
        if vals.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "a, b, alpha, t, r must be positive and finite: {vals:?}"
            )));
        }
        Ok(())
    }

    fn preconditions(&self) -> bool {
        self.t > self.threshold() && self.r > self.threshold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralInput {
    pub tau1: u32,
    pub tau2: u32,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub t: f64,
    pub e_v: f64,
    pub e_h: f64,
}

impl GeneralInput {
    pub fn threshold(&self) -> f64 {
        2.0 * self.beta / self.a
    }
}

/// Right-hand sides of the one-step bounds for `E = k Id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VhBounds {
    /// Printed form, vertical `u`.
    pub v: f64,
    /// Printed form, horizontal `u`.
    pub h: f64,
    pub c1: f64,
    pub c2: f64,
    /// Recomputed from per-bucket bounds and bucket counts.
    pub v_derived: f64,
    pub h_derived: f64,
}

pub fn v_h_bounds_homothety(inp: &HomothetyInput) -> Result<VhBounds> {
    inp.validate()?;
    if !inp.preconditions() {
        return Err(Error::Preconditions(format!(
            "t = {}, r = {} must exceed 2 alpha / a = {}",
            inp.t,
            inp.r,
            inp.threshold()
        )));
    }
    let HomothetyInput {
        k,
        a,
        b,
        alpha,
        t,
        r,
    } = *inp;
    let co = homothety_coefficients(k)?;
    let kf = k as f64;
    let ck = half_floor(k as i64) as f64;
    let k2 = kf * kf;
    let at = a - alpha / t;
    let ar = a - alpha / r;
    let bt = b + 1.0 / t;
    let f = |x: Rational64| x.to_f64().unwrap();

    let c1 = -(alpha * kf).ln() + (kf - 1.0).powi(2) / k2 * (at * ar).ln()
        - (2.0 * kf - 1.0 - ck) / k2 * bt.ln();
    let c2 = -kf.ln()
        + ((kf - 1.0) * ck / k2 - 1.0) * (at / alpha).ln()
        + (ck * (kf + ck) / k2 - 1.0) * bt.ln();
    let v = f(co.v_log_r) * r.ln() + f(co.v_log_t) * t.ln() + c1;
    let h = f(co.h_log_r) * r.ln() + f(co.h_log_t) * t.ln() + c2;

    // bucket bounds: A, B, V_h and C, D, H_h
    let la = (at / alpha * (ar / alpha) * t * r / kf).ln();
    let lb = (1.0 / (alpha * kf)).ln();
    let lvh = (1.0 / ((b * t + 1.0) * alpha * kf)).ln();
    let lc = (at * t / (alpha * kf)).ln();
    let ld = (1.0 / ((b * r + 1.0) * kf)).ln();
    let lhh = (1.0 / ((b * t + 1.0) * (b * r + 1.0) * kf)).ln();
    let v_derived = ((kf - 1.0).powi(2) * la + ck * lb + (2.0 * kf - 1.0 - ck) * lvh) / k2;
    let h_derived =
        ((kf - 1.0) * ck * lc + ck * (1.0 + ck) * ld + (k2 - ck * (kf + ck)) * lhh) / k2;
    Ok(VhBounds {
        v,
        h,
        c1,
        c2,
        v_derived,
        h_derived,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    NotCertified,
    PreconditionsUnmet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum CertificateInput {
    Homothety(HomothetyInput),
    General(GeneralInput),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub input: CertificateInput,
    pub l: Exact,
    pub c: Option<Exact>,
    pub e: Option<Exact>,
    pub coeff_log_t: Exact,
    pub coeff_log_r: Option<Exact>,
    /// General case: the coefficient recombined from `L V + (1 - L) H`.
    pub coeff_log_t_recombined: Option<Exact>,
    pub precondition_threshold: f64,
    pub preconditions_met: bool,
    pub v: Option<f64>,
    pub h: Option<f64>,
    pub v_derived: Option<f64>,
    pub h_derived: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c_bound: Option<f64>,
    pub limit_verbatim: Option<f64>,
    pub limit_derived: Option<f64>,
    pub modes_agree: Option<bool>,
    /// Bound used for the verdict.
    pub limit_ji_lower_bound: Option<f64>,
    pub verdict: Verdict,
    pub minimal_params: Option<(f64, f64)>,
    pub c_det: f64,
    pub u1_margin: Option<f64>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn verdict(pre: bool, bound: Option<f64>) -> Verdict {
    match (pre, bound) {
        (false, _) | (_, None) => Verdict::PreconditionsUnmet,
        (true, Some(x)) if x > 0.0 => Verdict::Certified,
        _ => Verdict::NotCertified,
    }
}

/// `C_det = log d` (the Jacobian determinant is constant) and the margin
/// `bound + C_det / 2`.
pub fn c_det_and_u1(degree: u64, limit_bound: f64) -> (f64, f64) {
    let c_det = (degree as f64).ln();
    (c_det, limit_bound + 0.5 * c_det)
}

pub fn limit_ji_bound_homothety(inp: &HomothetyInput) -> Result<CertificateReport> {
    inp.validate()?;
    let l = l_homothety(inp.k)?;
    let (c, e) = recursion_constants(inp.k)?;
    let co = homothety_coefficients(inp.k)?;
    let lf = l.to_f64().unwrap();
    let pre = inp.preconditions();
    let bounds = if pre {
        Some(v_h_bounds_homothety(inp)?)
    } else {
        None
    };
    let mut notes = Vec::new();
    let (c_bound, lim_v, lim_d) = match bounds {
        Some(b) => {
            let c_bound = lf * b.c1 + (1.0 - lf) * b.c2;
            let lim_v = c_bound
                + co.limit_log_r.to_f64().unwrap() * inp.r.ln()
                + co.limit_log_t.to_f64().unwrap() * inp.t.ln();
            let lim_d = lf * b.v_derived + (1.0 - lf) * b.h_derived;
            (Some(c_bound), Some(lim_v), Some(lim_d))
        }
        None => (None, None, None),
    };
    let agree = lim_v
        .zip(lim_d)
        .map(|(x, y)| (x - y).abs() <= MODE_AGREEMENT_TOL);
    let official = match agree {
        Some(true) => lim_v,
        Some(false) => {
            notes.push(format!(
                "printed and derived bounds differ ({:.6} vs {:.6}); derived bound used",
                lim_v.unwrap(),
                lim_d.unwrap()
            ));
            lim_d
        }
        None => None,
    };
    let d = (inp.k as u64).pow(2);
    let (c_det, u1) = c_det_and_u1(d, official.unwrap_or(f64::NAN));
    Ok(CertificateReport {
        input: CertificateInput::Homothety(*inp),
        l: l.into(),
        c: Some(c.into()),
        e: Some(e.into()),
        coeff_log_t: co.limit_log_t.into(),
        coeff_log_r: Some(co.limit_log_r.into()),
        coeff_log_t_recombined: None,
        precondition_threshold: inp.threshold(),
        preconditions_met: pre,
        v: bounds.map(|b| b.v),
        h: bounds.map(|b| b.h),
        v_derived: bounds.map(|b| b.v_derived),
        h_derived: bounds.map(|b| b.h_derived),
        c1: bounds.map(|b| b.c1),
        c2: bounds.map(|b| b.c2),
        c_bound,
        limit_verbatim: lim_v,
        limit_derived: lim_d,
        modes_agree: agree,
        limit_ji_lower_bound: official,
        verdict: verdict(pre, official),
        minimal_params: None,
        c_det,
        u1_margin: official.map(|_| u1),
        notes,
    })
}

/// The constant printed for the `k = 5` example, in closed form.
pub fn k5_printed_constant(a: f64, b: f64, alpha: f64, t: f64, r: f64) -> f64 {
    ((1.0 / 5.0) * alpha.powf(17.0 / 25.0) / a.powf(2.0 / 3.0)
        * (a - alpha / t).powf(1.0 / 5.0)
        * (a - alpha / r).powf(32.0 / 75.0)
        * (b + 1.0 / t).powf(-18.0 / 25.0))
    .ln()
}

pub fn certificate_general(inp: &GeneralInput) -> Result<CertificateReport> {
    let GeneralInput {
        tau1,
        tau2,
        a,
        b,
        beta,
        t,
        e_v,
        e_h,
    } = *inp;
    let l = l_general(tau1, tau2)?;
    if !(e_v > 0.0 && e_h > 0.0 && e_v.is_finite() && e_h.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "e_v and e_h must be positive, got {e_v}, {e_h}"
        )));
    }
    if [a, b, beta, t].iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidInput("a, b, beta, t must be positive".into()));
    }
    let coeff = general_coeff_log_t(tau1, tau2)?;
    let recomb = general_coeff_log_t_recombined(tau1, tau2)?;
    let lf = l.to_f64().unwrap();
    let d = (tau1 * tau2) as f64;
    let frac = half_floor(tau2 as i64) as f64 / tau2 as f64;
    let pre = t > inp.threshold();
    let mut notes = Vec::new();
    let (v, h, c_bound, lim, lim_rec) = if pre {
        let v_const = (e_v / beta).ln() + (d - 1.0) / d * (a - beta / t).ln();
        let h_const = e_h.ln() - (1.0 - frac) * (b + 1.0 / t).ln();
        let v = (d - 1.0) / d * t.ln() + v_const;
        let h = -(1.0 - frac) * t.ln() + h_const;
        let c_bound = lf * v_const + (1.0 - lf) * h_const;
        let lim = coeff.to_f64().unwrap() * t.ln() + c_bound;
        (
            Some(v),
            Some(h),
            Some(c_bound),
            Some(lim),
            Some(lf * v + (1.0 - lf) * h),
        )
    } else {
        (None, None, None, None, None)
    };
    if coeff != recomb {
        notes.push(format!(
            "displayed log t coefficient {} differs from L V + (1 - L) H coefficient {}; displayed value used",
            Exact::from(coeff),
            Exact::from(recomb)
        ));
    }
    let (c_det, u1) = c_det_and_u1((tau1 * tau2) as u64, lim.unwrap_or(f64::NAN));
    Ok(CertificateReport {
        input: CertificateInput::General(*inp),
        l: l.into(),
        c: None,
        e: None,
        coeff_log_t: coeff.into(),
        coeff_log_r: None,
        coeff_log_t_recombined: Some(recomb.into()),
        precondition_threshold: inp.threshold(),
        preconditions_met: pre,
        v,
        h,
        v_derived: v,
        h_derived: h,
        c1: None,
        c2: None,
        c_bound,
        limit_verbatim: lim,
        limit_derived: lim_rec,
        modes_agree: lim
            .zip(lim_rec)
            .map(|(x, y)| (x - y).abs() <= MODE_AGREEMENT_TOL),
        limit_ji_lower_bound: lim,
        verdict: verdict(pre, lim),
        minimal_params: None,
        c_det,
        u1_margin: lim.map(|_| u1),
        notes,
    })
}

/// `(D_y v)⁻¹ E⁻¹` at height `y2`.
fn pulled(e_inv: Mat2, tilde: &TrigPoly, y2: f64) -> Mat2 {
    Mat2::new(1.0, -tilde.derivative(y2), 0.0, 1.0).mul(e_inv)
}

/// Whether every `(D_y v)⁻¹ E⁻¹` maps the closed vertical cone of aperture
/// `beta` into the interior of the horizontal one, checked on `samples`
/// heights. The image of the vertical cone is spanned by the images of its
/// two edges and contains the image of `(0, 1)`.
pub fn beta_accepts(e_inv: Mat2, tilde: &TrigPoly, beta: f64, samples: usize) -> bool {
    let dirs = [[1.0, beta], [-1.0, beta], [0.0, 1.0]];
    (0..samples).all(|i| {
        let m = pulled(e_inv, tilde, i as f64 / samples as f64);
        dirs.iter().all(|u| {
            let w = m.apply(*u);
            w[1].abs() < beta * w[0].abs() * (1.0 - 1e-9)
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    /// Smallest accepted aperture found by bisection.
    pub threshold: f64,
    /// `threshold * BETA_SAFETY`.
    pub beta: f64,
}

pub const BETA_SAMPLES: usize = 4096;

pub fn estimate_beta(g: &IntMatrix, tilde: &TrigPoly, alpha: f64) -> Result<BetaEstimate> {
    let e_inv = g.inverse_mat2()?;
    let ok = |b: f64| beta_accepts(e_inv, tilde, b, BETA_SAMPLES);
    if ok(alpha) {
        return Ok(BetaEstimate {
            threshold: alpha,
            beta: alpha * BETA_SAFETY,
        });
    }
    if !ok(BETA_CAP) {
        return Err(Error::SearchFailure(format!(
            "no beta <= {BETA_CAP} makes the cone field invariant"
        )));
    }
    let (mut lo, mut hi) = (alpha, BETA_CAP);
    while (hi - lo) > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BetaEstimate {
        threshold: hi,
        beta: hi * BETA_SAFETY,
    })
}

/// Unit max-norm directions of the vertical cone (`|u2| > beta |u1|`), one
/// representative per line.
fn vertical_units(beta: f64, fan: usize) -> Vec<[f64; 2]> {
    (0..=fan)
        .map(|j| [(-1.0 + 2.0 * j as f64 / fan as f64) / beta, 1.0])
        .collect()
}

/// Unit max-norm directions of the horizontal cone, one per line.
fn horizontal_units(beta: f64, fan: usize) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = (0..=fan)
        .map(|j| [1.0, -1.0 + 2.0 * j as f64 / fan as f64])
        .collect();
    if beta > 1.0 {
        for j in 0..=fan {
            let s = 1.0 / beta + (1.0 - 1.0 / beta) * j as f64 / fan as f64;
            out.push([s, 1.0]);
            out.push([-s, 1.0]);
        }
    }
    out
}

/// Minimum of `|M u|` over the segment `p + s (q - p)`, `s ∈ [0, 1]`.
/// The function is convex and piecewise linear in `s`; its minimum sits at
/// an endpoint or where a component vanishes or the components tie.
fn segment_min(m: Mat2, p: [f64; 2], q: [f64; 2]) -> f64 {
    let wp = m.apply(p);
    let wq = m.apply(q);
    let at = |s: f64| vec_max_norm([wp[0] + s * (wq[0] - wp[0]), wp[1] + s * (wq[1] - wp[1])]);
    let mut best = at(0.0).min(at(1.0));
    let dx = wq[0] - wp[0];
    let dy = wq[1] - wp[1];
    let mut cand = |num: f64, den: f64| {
        if den != 0.0 {
            let s = num / den;
            if (0.0..=1.0).contains(&s) {
                best = best.min(at(s));
            }
        }
    };
    cand(-wp[0], dx);
    cand(-wp[1], dy);
    cand(wp[1] - wp[0], dx - dy);
    cand(-(wp[1] + wp[0]), dx + dy);
    best
}

/// `(e_v, e_h)`: infima of `|(D_x v)⁻¹ E⁻¹ u|` over unit `u` in the vertical
/// and horizontal cones, sampled over `samples` heights, times
/// `EXPANSION_SAFETY`.
pub fn estimate_ev_eh(
    g: &IntMatrix,
    tilde: &TrigPoly,
    beta: f64,
    samples: usize,
) -> Result<(f64, f64)> {
    let e_inv = g.inverse_mat2()?;
    let vert = vertical_units(beta, 1);
    let horiz = horizontal_units(beta, 1);
    let mut ev = f64::INFINITY;
    let mut eh = f64::INFINITY;
    for i in 0..samples {
        let m = pulled(e_inv, tilde, i as f64 / samples as f64);
        ev = ev.min(segment_min(m, vert[0], vert[1]));
        // horizontal unit sphere: the right edge and the two top segments
        eh = eh.min(segment_min(m, horiz[0], horiz[1]));
        if horiz.len() > 2 {
            eh = eh.min(segment_min(m, horiz[2], horiz[4]));
            eh = eh.min(segment_min(m, horiz[3], horiz[5]));
        }
    }
    Ok((ev * EXPANSION_SAFETY, eh * EXPANSION_SAFETY))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub t: f64,
    pub r: f64,
    pub verdict: Verdict,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub table: Vec<ScanEntry>,
    pub minimal: Option<(f64, f64)>,
    pub threshold: f64,
}

fn minimal_entry(table: &[ScanEntry]) -> Option<(f64, f64)> {
    table
        .iter()
        .filter(|e| e.verdict == Verdict::Certified)
        .map(|e| (e.t, e.r))
        .min_by(|x, y| {
            let kx = (x.0.max(x.1), x.0);
            let ky = (y.0.max(y.1), y.0);
            kx.partial_cmp(&ky).unwrap()
        })
}

/// Evaluate the homothety certificate on `ts × rs`.
pub fn scan_parameters(base: &HomothetyInput, ts: &[f64], rs: &[f64]) -> Result<ScanResult> {
    if ts.is_empty() || rs.is_empty() {
        return Err(Error::InvalidInput("empty scan grid".into()));
    }
    let pairs: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&t| rs.iter().map(move |&r| (t, r)))
        .collect();
    scan_pairs(base, &pairs)
}

/// Evaluate the homothety certificate at the given `(t, r)` pairs.
pub fn scan_pairs(base: &HomothetyInput, pairs: &[(f64, f64)]) -> Result<ScanResult> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("empty scan grid".into()));
    }
    let table = pairs
        .par_iter()
        .map(|&(t, r)| {
            let rep = limit_ji_bound_homothety(&HomothetyInput { t, r, ..*base })?;
            Ok(ScanEntry {
                t,
                r,
                verdict: rep.verdict,
                bound: rep.limit_ji_lower_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        minimal: minimal_entry(&table),
        threshold: base.threshold(),
        table,
    })
}

/// Evaluate the non-homothety certificate along `ts` (`r` is reported as 0).
pub fn scan_general(base: &GeneralInput, ts: &[f64]) -> Result<ScanResult> {
    if ts.is_empty() {
        return Err(Error::InvalidInput("empty scan grid".into()));
    }
    let table = ts
        .par_iter()
        .map(|&t| {
            let rep = certificate_general(&GeneralInput { t, ..*base })?;
            Ok(ScanEntry {
                t,
                r: 0.0,
                verdict: rep.verdict,
                bound: rep.limit_ji_lower_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        minimal: minimal_entry(&table),
        threshold: base.threshold(),
        table,
    })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shear::worked_example_a;
    use num_traits::Zero;
    use std::f64::consts::TAU;

    fn worked_input(t: f64, r: f64) -> HomothetyInput {
        HomothetyInput {
            k: 5,
            a: worked_example_a(),
            b: TAU,
            alpha: 1.1,
            t,
            r,
        }
    }

    #[test]
    fn l_values() {
        assert_eq!(l_homothety(5).unwrap(), q(2, 3));
        assert_eq!(l_homothety(2).unwrap(), q(0, 1));
        // c7 = 3: 3 * 10 / (13 + 3 * 9)
        assert_eq!(l_homothety(7).unwrap(), q(3, 4));
        assert!(l_homothety(1).is_err());
    }

    #[test]
    fn recursion() {
        let (c, e) = recursion_constants(5).unwrap();
        assert_eq!((c, e), (q(4, 25), q(14, 25)));
        assert_eq!(e / (Rational64::one() - c), q(2, 3));
        assert!(recursion_lower_bound(5, 0).unwrap().is_zero());
        let b = recursion_lower_bound(5, 40).unwrap().to_f64().unwrap();
        assert!((b - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn general_l_table() {
        let cases = [
            ((2, 4), q(2, 3)),
            ((3, 3), q(3, 4)),
            ((4, 4), q(4, 5)),
            ((1, 2), q(0, 1)),
            ((1, 3), q(1, 2)),
            ((1, 4), q(1, 2)),
            ((2, 2), q(0, 1)),
        ];
        for ((a, b), l) in cases {
            assert_eq!(l_general(a, b).unwrap(), l, "({a},{b})");
        }
    }

    #[test]
    fn k5_coefficients() {
        let co = homothety_coefficients(5).unwrap();
        assert_eq!(co.v_log_r, q(16, 25));
        assert_eq!(co.v_log_t, q(9, 25));
        assert_eq!(co.h_log_r, q(-17, 25));
        assert_eq!(co.limit_log_r, q(1, 5));
        assert_eq!(co.limit_log_t, q(1, 5));
        let co4 = homothety_coefficients(4).unwrap();
        assert!(co4.limit_log_t <= Rational64::zero());
    }

    #[test]
    fn general_coefficients() {
        assert_eq!(general_coeff_log_t(2, 4).unwrap(), q(1, 6));
        assert_eq!(general_coeff_log_t(1, 4).unwrap(), q(-1, 4));
        assert_eq!(general_coeff_log_t(3, 3).unwrap(), q(1, 3));
        assert_eq!(general_coeff_log_t_recombined(2, 4).unwrap(), q(1, 3));
    }

    #[test]
    fn limit_equals_weighted_bounds() {
        let inp = worked_input(7.0, 9.0);
        let b = v_h_bounds_homothety(&inp).unwrap();
        let rep = limit_ji_bound_homothety(&inp).unwrap();
        let l = 2.0 / 3.0;
        assert!((rep.limit_verbatim.unwrap() - (l * b.v + (1.0 - l) * b.h)).abs() < 1e-12);
        assert!(
            (rep.limit_derived.unwrap() - (l * b.v_derived + (1.0 - l) * b.h_derived)).abs()
                < 1e-12
        );
    }

    #[test]
    fn c1_limit() {
        let a = worked_example_a();
        let inp = worked_input(1e12, 1e12);
        let b = v_h_bounds_homothety(&inp).unwrap();
        let lim =
            (1.0 / (1.1 * 5.0) * a.powf(2.0 * 16.0 / 25.0) * TAU.powf(-(9.0 - 2.0) / 25.0)).ln();
        assert!((b.c1 - lim).abs() < 1e-9);
    }

    #[test]
    fn preconditions() {
        let rep = limit_ji_bound_homothety(&worked_input(1.0, 1.0)).unwrap();
        assert_eq!(rep.verdict, Verdict::PreconditionsUnmet);
        assert!(v_h_bounds_homothety(&worked_input(1.0, 5.0)).is_err());
        let json = rep.to_json();
        assert!(json.contains("preconditions-unmet"));
    }

    #[test]
    fn beta_without_tilde() {
        let g = IntMatrix::new(4, 2, 0, 2);
        let est = estimate_beta(&g, &TrigPoly::zero(), 4.04).unwrap();
        assert_eq!(est.beta, 4.04 * BETA_SAFETY);
        let (ev, eh) = estimate_ev_eh(&g, &TrigPoly::zero(), est.beta, 16).unwrap();
        // |G⁻¹(u1, 1)| >= 1/2 on the vertical cone; |G⁻¹(1, 1/3)| = 1/6
        assert!((ev - 0.5 * EXPANSION_SAFETY).abs() < 1e-12);
        assert!((eh - EXPANSION_SAFETY / 6.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_expansion() {
        // s~ = 0, diag(4, 2): e_v = min over vertical unit u of |(u1/4, u2/2)| = 1/2
        let g = IntMatrix::new(4, 0, 0, 2);
        let (ev, _) = estimate_ev_eh(&g, &TrigPoly::zero(), 5.0, 8).unwrap();
        assert!(ev >= 0.25 * EXPANSION_SAFETY);
    }

    #[test]
    fn scan_ordering() {
        let base = worked_input(0.0, 0.0);
        let ts = log_grid(2.0, 2000.0, 40);
        let s = scan_parameters(&base, &ts, &ts).unwrap();
        let (t, r) = s.minimal.unwrap();
        assert!(t <= r);
        // nothing certified with a smaller max(t, r)
        for e in &s.table {
            if e.verdict == Verdict::Certified {
                assert!(e.t.max(e.r) >= t.max(r));
            }
        }
        let low = scan_parameters(&base, &[1.0, 1.1], &[1.0]).unwrap();
        assert!(low
            .table
            .iter()
            .all(|e| e.verdict == Verdict::PreconditionsUnmet));
        assert!(scan_parameters(&base, &[], &[1.0]).is_err());
    }
}
