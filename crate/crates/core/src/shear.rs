//! Conservative shears of the torus and the profiles that drive them.
//!
//! `h_t(x1, x2) = (x1, x2 + t s(x1))` and `v_r(x1, x2) = (x1 + r s(x2), x2)`.
//! Profiles are trigonometric polynomials, so the validators below can
//! bound the error between sample points with an exact Lipschitz constant.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat2;
use crate::torus::{wrap_unchecked, RegionPartition, TorusPoint};
use crate::trig::{CircleFunction, TrigPoly};

/// Default sampling density (points per unit length) for validators.
pub const DEFAULT_SAMPLES_PER_UNIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearParams {
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearProfile {
    pub s: TrigPoly,
    pub a: f64,
    pub b: f64,
    pub partition: RegionPartition,
}

pub fn apply_h(t: f64, s: &TrigPoly, p: TorusPoint) -> TorusPoint {
    TorusPoint {
        x1: p.x1,
        x2: wrap_unchecked(p.x2 + t * s.value(p.x1)),
    }
}

pub fn apply_h_inv(t: f64, s: &TrigPoly, p: TorusPoint) -> TorusPoint {
    TorusPoint {
        x1: p.x1,
        x2: wrap_unchecked(p.x2 - t * s.value(p.x1)),
    }
}

pub fn apply_v(r: f64, s: &TrigPoly, p: TorusPoint) -> TorusPoint {
    TorusPoint {
        x1: wrap_unchecked(p.x1 + r * s.value(p.x2)),
        x2: p.x2,
    }
}

pub fn apply_v_inv(r: f64, s: &TrigPoly, p: TorusPoint) -> TorusPoint {
    TorusPoint {
        x1: wrap_unchecked(p.x1 - r * s.value(p.x2)),
        x2: p.x2,
    }
}

pub fn jacobian_h(t: f64, s: &TrigPoly, p: TorusPoint) -> Mat2 {
    Mat2::new(1.0, 0.0, t * s.derivative(p.x1), 1.0)
}

pub fn jacobian_v(r: f64, s: &TrigPoly, p: TorusPoint) -> Mat2 {
    Mat2::new(1.0, r * s.derivative(p.x2), 0.0, 1.0)
}

/// Outcome of one sampled condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    /// Worst sampled slack (positive = satisfied).
    pub sampled_margin: f64,
    /// Sampled margin minus the Lipschitz error between samples.
    pub certified_margin: f64,
    /// Location of the worst sample.
    pub worst_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub conditions: Vec<ConditionCheck>,
    pub samples_per_unit: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&ConditionCheck> {
        self.conditions.iter().filter(|c| !c.passed).collect()
    }
}

/// Grid points `j·h` strictly inside `(start, start + len)`, wrapped.
fn open_grid(start: f64, len: f64, h: f64) -> impl Iterator<Item = f64> {
    let first = (start / h).floor() as i64 + 1;
    let end = start + len;
    (first..)
        .map(move |j| j as f64 * h)
        .take_while(move |&p| p < end - 1e-15)
        .map(wrap_unchecked)
}

/// Closed interval sampling: grid points inside plus both endpoints.
fn closed_grid(start: f64, len: f64, h: f64) -> impl Iterator<Item = f64> {
    std::iter::once(start)
        .chain(open_grid(start, len, h))
        .chain(std::iter::once(wrap_unchecked(start + len)))
}

struct Worst {
    margin: f64,
    at: f64,
    ok: bool,
}

impl Worst {
    fn new() -> Self {
        Worst {
            margin: f64::INFINITY,
            at: f64::NAN,
            ok: true,
        }
    }
    fn push(&mut self, margin: f64, at: f64, ok: bool) {
        if margin < self.margin {
            self.margin = margin;
            self.at = at;
        }
        self.ok &= ok;
    }
    fn finish(self, name: &str, slack: f64) -> ConditionCheck {
        ConditionCheck {
            name: name.to_string(),
            passed: self.ok,
            sampled_margin: self.margin,
            certified_margin: self.margin - slack,
            worst_at: self.at,
        }
    }
}

/// Check the three slope conditions of a shear profile against a partition:
/// `a < s' <= b` on `I4`, `-b <= s' < -a` on `I2`, `|s'| <= b` on `I1 ∪ I3`.
pub fn validate_profile_fn<F: CircleFunction + ?Sized>(
    s: &F,
    a: f64,
    b: f64,
    partition: &RegionPartition,
    samples_per_unit: usize,
) -> Result<ValidationReport> {
    let lip = s.derivative_lipschitz().ok_or_else(|| {
        Error::CannotCertify("profile has no declared Lipschitz bound for s'".into())
    })?;
    let h = 1.0 / samples_per_unit as f64;
    let [i1, i2, i3, i4] = partition.intervals();

    let mut plus = Worst::new();
    for z in open_grid(i4.0, i4.1, h) {
        let d = s.derivative(z);
        plus.push((d - a).min(b - d), z, d > a && d <= b);
    }
    let mut minus = Worst::new();
    for z in open_grid(i2.0, i2.1, h) {
        let d = s.derivative(z);
        minus.push((-a - d).min(d + b), z, d < -a && d >= -b);
    }
    let mut crit = Worst::new();
    for z in closed_grid(i1.0, i1.1, h).chain(closed_grid(i3.0, i3.1, h)) {
        let d = s.derivative(z);
        crit.push(b - d.abs(), z, d.abs() <= b);
    }
    Ok(ValidationReport {
        conditions: vec![
            plus.finish("slope on I4 in (a, b]", lip * h),
            minus.finish("slope on I2 in [-b, -a)", lip * h),
            crit.finish("slope on I1 ∪ I3 bounded by b", lip * h),
        ],
        samples_per_unit,
    })
}

pub fn validate_profile(
    profile: &ShearProfile,
    samples_per_unit: usize,
) -> Result<ValidationReport> {
    validate_profile_fn(
        &profile.s,
        profile.a,
        profile.b,
        &profile.partition,
        samples_per_unit,
    )
}

/// `(a, b)` for a profile on a partition: `a` is the smallest `|s'|` over the
/// closures of the good intervals, `b` the coefficient bound on `|s'|`.
pub fn profile_bounds(s: &TrigPoly, partition: &RegionPartition) -> Result<(f64, f64)> {
    let [_, i2, _, i4] = partition.intervals();
    let ends = [i2.0, i2.0 + i2.1, i4.0, i4.0 + i4.1];
    let mut a = ends
        .iter()
        .map(|&z| s.derivative(wrap_unchecked(z)).abs())
        .fold(f64::INFINITY, f64::min);
    let h = 1.0 / DEFAULT_SAMPLES_PER_UNIT as f64;
    let lip = s.derivative_bound(2);
    let interior = open_grid(i2.0, i2.1, h)
        .chain(open_grid(i4.0, i4.1, h))
        .map(|z| s.derivative(z).abs())
        .fold(f64::INFINITY, f64::min);
    if interior < a {
        a = interior - lip * h;
    }
    if !(a > 0.0) {
        return Err(Error::Profile(
            "profile slope vanishes on a good interval".into(),
        ));
    }
    Ok((a, s.derivative_bound(1)))
}

/// `s(u) = sin(2πu)` with `a`, `b` read off the partition.
pub fn default_profile(partition: &RegionPartition) -> Result<ShearProfile> {
    let s = TrigPoly::sine();
    check_sign_pattern(&s, partition)?;
    let (a, b) = profile_bounds(&s, partition)?;
    Ok(ShearProfile {
        s,
        a,
        b,
        partition: partition.clone(),
    })
}

fn check_sign_pattern(s: &TrigPoly, partition: &RegionPartition) -> Result<()> {
    let [_, i2, _, i4] = partition.intervals();
    let mid4 = wrap_unchecked(i4.0 + i4.1 / 2.0);
    let mid2 = wrap_unchecked(i2.0 + i2.1 / 2.0);
    if s.derivative(mid4) <= 0.0 || s.derivative(mid2) >= 0.0 {
        return Err(Error::Profile(
            "partition incompatible with the sign pattern of s'".into(),
        ));
    }
    Ok(())
}

/// Built-in shear profile for grid divisor `n` and the centres of the
/// critical intervals (the zeros of `s'`).
///
/// Odd `n`: `sin(2πu)` with zeros of `s'` at `1/4`, `3/4` (half a grid step
/// apart modulo `1/n`). Even `n`: `sin(2πu) + κ sin(4πu)` with `κ` placing
/// the zeros at `u0`, `1 - u0`, `u0 = 1/4 - 1/(4n)`.
pub fn builtin_shear(divisor: u32) -> Result<(TrigPoly, (f64, f64))> {
    if divisor % 2 == 1 {
        return Ok((TrigPoly::sine(), (0.25, 0.75)));
    }
    if divisor < 4 {
        return Err(Error::Unsupported(format!(
            "no built-in shear profile for even divisor {divisor} < 4"
        )));
    }
    let u0 = 0.25 - 1.0 / (4.0 * divisor as f64);
    let kappa = -(TAU * u0).cos() / (2.0 * (2.0 * TAU * u0).cos());
    Ok((TrigPoly::sine().with(2, 0.0, kappa), (u0, 1.0 - u0)))
}

/// Profile `builtin_shear(divisor)` on a given partition.
pub fn builtin_profile(divisor: u32, partition: &RegionPartition) -> Result<ShearProfile> {
    let (s, _) = builtin_shear(divisor)?;
    check_sign_pattern(&s, partition)?;
    let (a, b) = profile_bounds(&s, partition)?;
    Ok(ShearProfile {
        s,
        a,
        b,
        partition: partition.clone(),
    })
}

/// Profile `s̃` for the vertical shear `v(x1, x2) = (x1 + s̃(x2), x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildeProfile {
    pub s: TrigPoly,
    /// Size of the critical intervals.
    pub l: f64,
    pub tau1: u32,
    pub tau2: u32,
    pub alpha: f64,
}

/// Conditions on `s̃`:
/// 1. `|s̃| < 1/tau2 - L`;
/// 2. for every `u`, `|s̃(u + j/tau1)| <= L` for at most one `j`;
/// 3. `|s̃'| < 1/(2 alpha)`.
pub fn validate_tilde_fn<F: CircleFunction + ?Sized>(
    s: &F,
    l: f64,
    tau1: u32,
    tau2: u32,
    alpha: f64,
    samples_per_unit: usize,
) -> Result<ValidationReport> {
    let (lip0, lip1) = match (s.value_lipschitz(), s.derivative_lipschitz()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::CannotCertify(
                "tilde profile has no declared Lipschitz bounds".into(),
            ))
        }
    };
    let h = 1.0 / samples_per_unit as f64;
    let n = samples_per_unit;

    let bound1 = 1.0 / tau2 as f64 - l;
    let mut c1 = Worst::new();
    let mut c3 = Worst::new();
    let bound3 = 1.0 / (2.0 * alpha);
    for i in 0..n {
        let u = i as f64 * h;
        let v = s.value(u).abs();
        let margin = bound1 - v;
        c1.push(margin, u, margin - lip0 * h / 2.0 > 0.0);
        let d = s.derivative(u).abs();
        let margin = bound3 - d;
        c3.push(margin, u, margin - lip1 * h / 2.0 > 0.0);
    }

    let mut c2 = Worst::new();
    let step = 1.0 / tau1 as f64;
    let slack = lip0 * h / 2.0;
    let per_coset = (n / tau1 as usize).max(1);
    let mut vals = vec![0.0; tau1 as usize];
    for i in 0..per_coset {
        let u = i as f64 * step / per_coset as f64;
        for (j, v) in vals.iter_mut().enumerate() {
            *v = s.value(u + j as f64 * step).abs();
        }
        if tau1 < 2 {
            c2.push(f64::INFINITY, u, true);
            continue;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // at most one small value <=> second smallest exceeds L
        let margin = vals[1] - l;
        c2.push(margin, u, margin - slack > 0.0);
    }

    let grid_h = step / per_coset as f64;
    Ok(ValidationReport {
        conditions: vec![
            c1.finish("|s~| < 1/tau2 - L", lip0 * h / 2.0),
            c2.finish("at most one translate with |s~| <= L", lip0 * grid_h / 2.0),
            c3.finish("|s~'| < 1/(2 alpha)", lip1 * h / 2.0),
        ],
        samples_per_unit,
    })
}

pub fn validate_tilde_profile(
    st: &TildeProfile,
    samples_per_unit: usize,
) -> Result<ValidationReport> {
    validate_tilde_fn(&st.s, st.l, st.tau1, st.tau2, st.alpha, samples_per_unit)
}

/// Smallest over `u` of the second-smallest `|s̃(u + j/tau1)|`.
fn second_smallest_min(s: &TrigPoly, tau1: u32, samples: usize) -> f64 {
    let step = 1.0 / tau1 as f64;
    let mut vals = vec![0.0; tau1 as usize];
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        let u = i as f64 * step / samples as f64;
        for (j, v) in vals.iter_mut().enumerate() {
            *v = s.value(u + j as f64 * step).abs();
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        worst = worst.min(vals[1]);
    }
    worst
}

/// Built-in `s̃ = A sin(2πu) + B cos(2π tau1 u)`, coefficients chosen by grid
/// search to maximise the margin of condition 2 within the bounds of
/// conditions 1 and 3.
pub fn default_tilde_profile(tau1: u32, tau2: u32, l: f64, alpha: f64) -> Result<TildeProfile> {
    if tau1 == 0 || tau2 == 0 {
        return Err(Error::InvalidInput("divisors must be positive".into()));
    }
    if !(l > 0.0) {
        return Err(Error::InvalidInput(format!(
            "critical size must be positive, got {l}"
        )));
    }
    if l >= 1.0 / tau2 as f64 {
        return Err(Error::Profile(format!(
            "L = {l} >= 1/tau2: condition 1 cannot hold"
        )));
    }
    let amp_cap = 0.95 * (1.0 / tau2 as f64 - l);
    let slope_cap = 0.95 / (2.0 * alpha);
    let s = if tau1 == 1 {
        let amp = 0.5 * amp_cap.min(slope_cap / TAU);
        TrigPoly::zero().with(1, 0.0, amp)
    } else {
        const STEPS: usize = 48;
        let w = TAU * tau1 as f64;
        let a_max = amp_cap.min(slope_cap / TAU);
        let mut best: Option<(f64, TrigPoly)> = None;
        for ia in 1..=STEPS {
            let a = a_max * ia as f64 / STEPS as f64;
            let b_max = (amp_cap - a).min((slope_cap - TAU * a) / w);
            if b_max <= 0.0 {
                continue;
            }
            for ib in 0..=STEPS {
                let b = b_max * ib as f64 / STEPS as f64;
                let cand = TrigPoly::zero().with(1, 0.0, a).with(tau1, b, 0.0);
                if cand.sup_bound() >= amp_cap || cand.derivative_bound(1) >= slope_cap {
                    continue;
                }
                let m = second_smallest_min(&cand, tau1, 512)
                    - cand.derivative_bound(1) / (512.0 * tau1 as f64);
                if best.as_ref().is_none_or(|(bm, _)| m > *bm) {
                    best = Some((m, cand));
                }
            }
        }
        match best {
            Some((m, s)) if m > l => s,
            _ => {
                return Err(Error::SearchFailure(format!(
                    "no built-in tilde profile for (tau1, tau2) = ({tau1}, {tau2}) with L = {l}, alpha = {alpha}"
                )))
            }
        }
    };
    let st = TildeProfile {
        s,
        l,
        tau1,
        tau2,
        alpha,
    };
    let report = validate_tilde_profile(&st, DEFAULT_SAMPLES_PER_UNIT)?;
    if !report.passed() {
        return Err(Error::SearchFailure(format!(
            "built-in tilde profile failed validation: {:?}",
            report.failures()
        )));
    }
    Ok(st)
}

/// Flat text record for profile exchange.
///
/// ```text
/// kind = shear
/// a = 1.9416
/// b = 6.2832
/// constant = 0
/// harmonic = 1, 0, 1
/// ```
/// A tilde record carries `L`, `tau1`, `tau2`, `alpha` instead of `a`, `b`.
/// Each `harmonic` line is `n, cos_coefficient, sin_coefficient`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileRecord {
    Shear {
        s: TrigPoly,
        a: f64,
        b: f64,
    },
    Tilde {
        s: TrigPoly,
        l: f64,
        tau1: u32,
        tau2: u32,
        alpha: f64,
    },
}

fn poly_lines(s: &TrigPoly, out: &mut String) {
    out.push_str(&format!("constant = {:?}\n", s.constant));
    for h in &s.harmonics {
        out.push_str(&format!("harmonic = {}, {:?}, {:?}\n", h.n, h.cos, h.sin));
    }
}

impl ProfileRecord {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            ProfileRecord::Shear { s, a, b } => {
                out.push_str("kind = shear\n");
                out.push_str(&format!("a = {a:?}\nb = {b:?}\n"));
                poly_lines(s, &mut out);
            }
            ProfileRecord::Tilde {
                s,
                l,
                tau1,
                tau2,
                alpha,
            } => {
                out.push_str("kind = tilde\n");
                out.push_str(&format!(
                    "L = {l:?}\ntau1 = {tau1}\ntau2 = {tau2}\nalpha = {alpha:?}\n"
                ));
                poly_lines(s, &mut out);
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Config {
            path: format!("profile:{line}"),
            msg: msg.to_string(),
        };
        let mut kind = None;
        let mut poly = TrigPoly::zero();
        let mut nums = std::collections::HashMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(ln + 1, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "kind" => kind = Some(value.to_string()),
                "constant" => {
                    poly.constant = value.parse().map_err(|_| bad(ln + 1, "bad number"))?
                }
                "harmonic" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(bad(ln + 1, "harmonic needs n, cos, sin"));
                    }
                    let n = parts[0]
                        .parse()
                        .map_err(|_| bad(ln + 1, "bad harmonic index"))?;
                    let c = parts[1]
                        .parse()
                        .map_err(|_| bad(ln + 1, "bad cos coefficient"))?;
                    let s = parts[2]
                        .parse()
                        .map_err(|_| bad(ln + 1, "bad sin coefficient"))?;
                    poly.harmonics
                        .push(crate::trig::Harmonic { n, cos: c, sin: s });
                }
                "a" | "b" | "L" | "tau1" | "tau2" | "alpha" => {
                    let v: f64 = value.parse().map_err(|_| bad(ln + 1, "bad number"))?;
                    nums.insert(key.to_string(), v);
                }
                other => return Err(bad(ln + 1, &format!("unknown key `{other}`"))),
            }
        }
        let get = |k: &str| {
            nums.get(k).copied().ok_or_else(|| Error::Config {
                path: format!("profile.{k}"),
                msg: "missing".into(),
            })
        };
        match kind.as_deref() {
            Some("shear") => Ok(ProfileRecord::Shear {
                s: poly,
                a: get("a")?,
                b: get("b")?,
            }),
            Some("tilde") => Ok(ProfileRecord::Tilde {
                s: poly,
                l: get("L")?,
                tau1: get("tau1")? as u32,
                tau2: get("tau2")? as u32,
                alpha: get("alpha")?,
            }),
            _ => Err(Error::Config {
                path: "profile.kind".into(),
                msg: "expected `shear` or `tilde`".into(),
            }),
        }
    }
}

/// `a` from the worked example: `2π sin(π/10)`.
pub fn worked_example_a() -> f64 {
    TAU * (PI / 10.0).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::homothety_partition;
    use crate::trig::Opaque;

    fn default_partition() -> RegionPartition {
        homothety_partition(0.045, 5, (0.25, 0.75), false).unwrap()
    }

    #[test]
    fn default_profile_on_worked_partition() {
        let part = homothety_partition(0.05, 5, (0.25, 0.75), true).unwrap();
        let p = default_profile(&part).unwrap();
        assert!((p.a - worked_example_a()).abs() < 1e-12, "{}", p.a);
        assert!((p.b - TAU).abs() < 1e-15);
    }

    #[test]
    fn default_profile_on_default_partition() {
        let p = default_profile(&default_partition()).unwrap();
        // min |cos| over the good closures is at z = 0.205
        let expect = TAU * (TAU * 0.205).cos().abs();
        assert!((p.a - expect).abs() < 1e-12);
        assert_eq!(p.s.value(0.0), 0.0);
        assert!((p.s.derivative(0.0) - TAU).abs() < 1e-12);
        let rep = validate_profile(&p, DEFAULT_SAMPLES_PER_UNIT).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn shifted_partition_fails() {
        let part = homothety_partition(0.045, 5, (0.5, 0.0), false).unwrap();
        assert!(default_profile(&part).is_err());
        let base = default_profile(&default_partition()).unwrap();
        let shifted = ShearProfile {
            partition: part,
            ..base
        };
        let rep = validate_profile(&shifted, 10_000).unwrap();
        assert!(!rep.conditions[0].passed);
    }

    #[test]
    fn constant_profile_fails() {
        let part = default_partition();
        let p = ShearProfile {
            s: TrigPoly {
                constant: 0.3,
                harmonics: vec![],
            },
            a: 1.0,
            b: 2.0,
            partition: part,
        };
        let rep = validate_profile(&p, 10_000).unwrap();
        assert!(!rep.conditions[0].passed && !rep.conditions[1].passed);
    }

    #[test]
    fn opaque_profile_cannot_certify() {
        let f = Opaque {
            value: |u: f64| (TAU * u).sin(),
            derivative: |u: f64| TAU * (TAU * u).cos(),
        };
        let err = validate_profile_fn(&f, 1.0, TAU, &default_partition(), 1000).unwrap_err();
        assert!(matches!(err, Error::CannotCertify(_)));
    }

    #[test]
    fn shear_maps() {
        let s = TrigPoly::sine();
        let p = TorusPoint::new(0.3, 0.7).unwrap();
        assert_eq!(apply_h(0.0, &s, p), p);
        let q = apply_h_inv(2.7, &s, apply_h(2.7, &s, p));
        assert!(q.dist(&p) < 1e-12);
        let q = apply_v_inv(2.7, &s, apply_v(2.7, &s, p));
        assert!(q.dist(&p) < 1e-12);
        let hp = apply_h(4.0, &s, TorusPoint::new(0.25, 0.0).unwrap());
        assert!(hp.x1 == 0.25 && (hp.x2 < 1e-12 || hp.x2 > 1.0 - 1e-12));
        assert_eq!(jacobian_h(0.0, &s, p), Mat2::IDENTITY);
        let j = jacobian_h(2.0, &s, TorusPoint::new(0.0, 0.4).unwrap());
        assert!((j.0[1][0] - 4.0 * PI).abs() < 1e-12);
        assert_eq!(j.det(), 1.0);
    }

    #[test]
    fn builtin_even_profile_zeros() {
        let (s, (c1, c3)) = builtin_shear(4).unwrap();
        assert!((c1 - 3.0 / 16.0).abs() < 1e-15);
        assert!(s.derivative(c1).abs() < 1e-12);
        assert!(s.derivative(c3).abs() < 1e-12);
        // exactly two sign changes of s'
        let mut changes = 0;
        let n = 10_000;
        for i in 0..n {
            let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            if s.derivative(a).signum() != s.derivative(b).signum() {
                changes += 1;
            }
        }
        assert_eq!(changes, 2);
        assert!(builtin_shear(2).is_err());
    }

    #[test]
    fn tilde_profiles() {
        let st = default_tilde_profile(2, 4, 1.0 / 32.0, 5.0);
        // L = 1/32 is far above the slope-limited amplitude; expect no profile
        assert!(st.is_err());
        let st = default_tilde_profile(2, 4, 0.001, 4.04).unwrap();
        assert!(validate_tilde_profile(&st, DEFAULT_SAMPLES_PER_UNIT)
            .unwrap()
            .passed());
        let one = default_tilde_profile(1, 5, 0.01, 6.0).unwrap();
        assert!(validate_tilde_profile(&one, 10_000).unwrap().passed());
        assert!(matches!(
            default_tilde_profile(2, 4, 0.25, 5.0),
            Err(Error::Profile(_))
        ));
    }

    #[test]
    fn tilde_failures() {
        let zero = TildeProfile {
            s: TrigPoly::zero(),
            l: 0.001,
            tau1: 2,
            tau2: 4,
            alpha: 5.0,
        };
        let rep = validate_tilde_profile(&zero, 10_000).unwrap();
        assert!(!rep.conditions[1].passed);
        let big = TildeProfile {
            s: TrigPoly::zero().with(1, 0.0, 0.3),
            ..zero
        };
        let rep = validate_tilde_profile(&big, 10_000).unwrap();
        assert!(!rep.conditions[0].passed);
    }

    #[test]
    fn record_round_trip() {
        let rec = ProfileRecord::Shear {
            s: TrigPoly::sine().with(2, 0.125, -0.5),
            a: 1.5,
            b: TAU,
        };
        assert_eq!(ProfileRecord::parse(&rec.to_text()).unwrap(), rec);
        let rec = ProfileRecord::Tilde {
            s: TrigPoly::zero().with(1, 0.0, 0.01).with(2, 0.004, 0.0),
            l: 0.001,
            tau1: 2,
            tau2: 4,
            alpha: 4.04,
        };
        assert_eq!(ProfileRecord::parse(&rec.to_text()).unwrap(), rec);
        assert!(ProfileRecord::parse("kind = shear\na = 1\n").is_err());
    }
}
