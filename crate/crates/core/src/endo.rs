//! The composed endomorphisms `f = E ∘ v ∘ h_t`.
//!
//! Two variants: `E = k·Id` with `v = v_r`, and a normalized non-homothety
//! `G` with `v(x) = (x1 + s̃(x2), x2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{elementary_divisors, has_normalized_lattice, IntMatrix, PreimageLattice};
use crate::mat::{vec_max_norm, Mat2};
use crate::shear::{ShearParams, ShearProfile, TildeProfile};
use crate::torus::{classify, ConeSpec, Orientation, RegionLabel, TorusPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    Homothety {
        k: u32,
        params: ShearParams,
        cone: ConeSpec,
    },
    General {
        g: IntMatrix,
        tilde: TildeProfile,
        t: f64,
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone)]
pub struct ComposedEndo {
    pub variant: Variant,
    /// Profile of `h_t` together with its partition.
    pub profile: ShearProfile,
    lattice: PreimageLattice,
    e: Mat2,
    e_inv: Mat2,
}

/// One point of `f⁻¹(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreimageRecord {
    pub y: TorusPoint,
    /// `h_t(y)`, where the derivative of `v` is read.
    pub mid: TorusPoint,
    pub h_label: RegionLabel,
    /// Vertical region of `mid`; homothety case only.
    pub v_label: Option<RegionLabel>,
    pub inv_jacobian: Mat2,
}

/// Bucket of a preimage relative to a tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bucket {
    A,
    B,
    Vh,
    C,
    D,
    Hh,
    /// General case, vertical `u`, `y ∈ G_h`.
    VGood,
    /// General case, vertical `u`, `y ∈ C_h`.
    VCritical,
    /// General case, horizontal `u`, `y ∈ G_h^{*_y(u)}`.
    HSigned,
    /// General case, horizontal `u`, the rest.
    HUnsigned,
}

impl Bucket {
    /// Whether the pulled-back vector is guaranteed to land in the vertical cone.
    pub fn lands_vertical(self) -> bool {
        matches!(
            self,
            Bucket::A | Bucket::B | Bucket::C | Bucket::D | Bucket::VGood | Bucket::HSigned
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub a: usize,
    pub b: usize,
    pub vh: usize,
    pub c: usize,
    pub d: usize,
    pub hh: usize,
    pub v_good: usize,
    pub v_critical: usize,
    pub h_signed: usize,
    pub h_unsigned: usize,
}

impl BucketCounts {
    pub fn add(&mut self, b: Bucket) {
        match b {
            Bucket::A => self.a += 1,
            Bucket::B => self.b += 1,
            Bucket::Vh => self.vh += 1,
            Bucket::C => self.c += 1,
            Bucket::D => self.d += 1,
            Bucket::Hh => self.hh += 1,
            Bucket::VGood => self.v_good += 1,
            Bucket::VCritical => self.v_critical += 1,
            Bucket::HSigned => self.h_signed += 1,
            Bucket::HUnsigned => self.h_unsigned += 1,
        }
    }

    /// Preimages whose pullback is guaranteed vertical.
    pub fn vertical_total(&self) -> usize {
        self.a + self.b + self.c + self.d + self.v_good + self.h_signed
    }

    pub fn total(&self) -> usize {
        self.vertical_total() + self.vh + self.hh + self.v_critical + self.h_unsigned
    }
}

/// Region counts of a preimage set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCounts {
    pub gh_plus: usize,
    pub gh_minus: usize,
    pub ch: usize,
    pub gv_plus: usize,
    pub gv_minus: usize,
    pub cv: usize,
}

impl RegionCounts {
    pub fn of(records: &[PreimageRecord]) -> Self {
        let mut c = RegionCounts::default();
        for r in records {
            match r.h_label {
                RegionLabel::GhPlus => c.gh_plus += 1,
                RegionLabel::GhMinus => c.gh_minus += 1,
                _ => c.ch += 1,
            }
            match r.v_label {
                Some(RegionLabel::GvPlus) => c.gv_plus += 1,
                Some(RegionLabel::GvMinus) => c.gv_minus += 1,
                Some(_) => c.cv += 1,
                None => {}
            }
        }
        c
    }
}

/// Pulled-back vector and its max-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pullback {
    pub vector: [f64; 2],
    pub norm: f64,
}

/// `*(u)`: `-sgn(u1/u2)`, or `-sgn(u2)` when `u1 = 0`.
pub fn sign_star(u: [f64; 2]) -> Result<i8> {
    if u[1] == 0.0 || !u[1].is_finite() || !u[0].is_finite() {
        return Err(Error::InvalidInput(
            "sign undefined for vectors with u2 = 0".into(),
        ));
    }
    let s = if u[0] != 0.0 {
        (u[0] / u[1]).signum()
    } else {
        u[1].signum()
    };
    Ok(if s > 0.0 { -1 } else { 1 })
}

fn neg_sgn(v: f64) -> i8 {
    if v > 0.0 {
        -1
    } else {
        1
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must be finite and >= 0, got {v}"
        )))
    }
}

impl ComposedEndo {
    pub fn homothety(
        k: u32,
        profile: ShearProfile,
        params: ShearParams,
        alpha: f64,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
        }
        check_positive("t", params.t)?;
        check_positive("r", params.r)?;
        let cone = ConeSpec::new(alpha)?;
        let m = IntMatrix::homothety(k as i64);
        let lattice = PreimageLattice::new(&m)?;
        Ok(Self {
            variant: Variant::Homothety { k, params, cone },
            profile,
            e: m.to_mat2(),
            e_inv: lattice.inverse(),
            lattice,
        })
    }

    pub fn general(
        g: IntMatrix,
        tilde: TildeProfile,
        profile: ShearProfile,
        t: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if g.is_homothety() {
            return Err(Error::InvalidInput(
                "general variant needs a non-homothety".into(),
            ));
        }
        let div = elementary_divisors(&g)?;
        if !has_normalized_lattice(&g, div) {
            return Err(Error::InvalidInput(format!(
                "matrix {:?} is not in normalized coordinates",
                g.0
            )));
        }
        if g.has_vertical_eigenvector() {
            return Err(Error::InvalidInput("(0,1) is an eigenvector".into()));
        }
        if (div.tau1 as u32, div.tau2 as u32) != (tilde.tau1, tilde.tau2) {
            return Err(Error::InvalidInput(format!(
                "tilde profile built for ({}, {}), matrix has divisors ({}, {})",
                tilde.tau1, tilde.tau2, div.tau1, div.tau2
            )));
        }
        check_positive("t", t)?;
        ConeSpec::new(alpha)?;
        ConeSpec::new(beta)?;
        let lattice = PreimageLattice::new(&g)?;
        Ok(Self {
            variant: Variant::General {
                g,
                tilde,
                t,
                alpha,
                beta,
            },
            profile,
            e: g.to_mat2(),
            e_inv: lattice.inverse(),
            lattice,
        })
    }

    pub fn degree(&self) -> usize {
        self.lattice.degree()
    }

    pub fn matrix(&self) -> IntMatrix {
        self.lattice.matrix
    }

    pub fn t(&self) -> f64 {
        match &self.variant {
            Variant::Homothety { params, .. } => params.t,
            Variant::General { t, .. } => *t,
        }
    }

    /// Cone used for classification: `alpha` (homothety) or `beta` (general).
    pub fn cone(&self) -> ConeSpec {
        match &self.variant {
            Variant::Homothety { cone, .. } => *cone,
            Variant::General { beta, .. } => ConeSpec { alpha: *beta },
        }
    }

    pub fn is_homothety(&self) -> bool {
        matches!(self.variant, Variant::Homothety { .. })
    }

    /// Horizontal displacement of `v` at height `x2`.
    fn v_shift(&self, x2: f64) -> f64 {
        match &self.variant {
            Variant::Homothety { params, .. } => params.r * self.profile.s.value(x2),
            Variant::General { tilde, .. } => tilde.s.value(x2),
        }
    }

    fn v_slope(&self, x2: f64) -> f64 {
        match &self.variant {
            Variant::Homothety { params, .. } => params.r * self.profile.s.derivative(x2),
            Variant::General { tilde, .. } => tilde.s.derivative(x2),
        }
    }

    pub fn apply_h(&self, p: TorusPoint) -> TorusPoint {
        crate::shear::apply_h(self.t(), &self.profile.s, p)
    }

    pub fn apply_v(&self, p: TorusPoint) -> TorusPoint {
        TorusPoint::wrapped(p.x1 + self.v_shift(p.x2), p.x2)
    }

    pub fn apply_f(&self, x: TorusPoint) -> TorusPoint {
        let w = self.apply_v(self.apply_h(x));
        let e = self.e.apply([w.x1, w.x2]);
        TorusPoint::wrapped(e[0], e[1])
    }

    /// `D_{h_t(x)} v`.
    pub fn jacobian_v(&self, mid: TorusPoint) -> Mat2 {
        Mat2::new(1.0, self.v_slope(mid.x2), 0.0, 1.0)
    }

    pub fn jacobian_h(&self, x: TorusPoint) -> Mat2 {
        Mat2::new(1.0, 0.0, self.t() * self.profile.s.derivative(x.x1), 1.0)
    }

    pub fn jacobian_f(&self, x: TorusPoint) -> Mat2 {
        let mid = self.apply_h(x);
        self.e.mul(self.jacobian_v(mid)).mul(self.jacobian_h(x))
    }

    /// `(D_mid v)⁻¹ E⁻¹`, shared by every preimage on the same horizontal line.
    pub fn inv_ve(&self, mid: TorusPoint) -> Mat2 {
        Mat2::new(1.0, -self.v_slope(mid.x2), 0.0, 1.0).mul(self.e_inv)
    }

    fn branch(&self, w: TorusPoint) -> (TorusPoint, TorusPoint, Mat2) {
        let mid = TorusPoint::wrapped(w.x1 - self.v_shift(w.x2), w.x2);
        let t = self.t();
        let y = crate::shear::apply_h_inv(t, &self.profile.s, mid);
        let inv_h = Mat2::new(1.0, 0.0, -t * self.profile.s.derivative(y.x1), 1.0);
        (y, mid, inv_h.mul(self.inv_ve(mid)))
    }

    fn record(&self, w: TorusPoint) -> PreimageRecord {
        let (y, mid, inv_jacobian) = self.branch(w);
        let part = &self.profile.partition;
        PreimageRecord {
            y,
            mid,
            h_label: classify(y, part, Orientation::Horizontal),
            v_label: self
                .is_homothety()
                .then(|| classify(mid, part, Orientation::Vertical)),
            inv_jacobian,
        }
    }

    /// Each preimage `y` of `x` with `(D_y f)⁻¹`, in the order of `preimages_f`.
    pub fn for_each_branch(&self, x: TorusPoint, mut f: impl FnMut(TorusPoint, Mat2)) {
        self.lattice.for_each_preimage(x, |w| {
            let (y, _, inv) = self.branch(w);
            f(y, inv)
        });
    }

    /// All `d` preimages of `x`, in lexicographic lattice-index order.
    pub fn preimages_f(&self, x: TorusPoint) -> Vec<PreimageRecord> {
        let mut out = Vec::with_capacity(self.degree());
        self.lattice
            .for_each_preimage(x, |w| out.push(self.record(w)));
        out
    }

    /// `*_y(u)` computed from `(w1, w2) = (D_mid v)⁻¹ E⁻¹ u`.
    pub fn sign_star_y(&self, rec: &PreimageRecord, u: [f64; 2]) -> i8 {
        let w = self.inv_ve(rec.mid).apply(u);
        assert!(
            w[0] != 0.0 || w[1] != 0.0,
            "zero vector under an invertible map"
        );
        if w[0] != 0.0 && w[1] != 0.0 {
            neg_sgn(w[0] / w[1])
        } else if w[1] != 0.0 {
            neg_sgn(w[1])
        } else {
            neg_sgn(w[0])
        }
    }

    pub fn bucket(&self, rec: &PreimageRecord, u: [f64; 2]) -> Result<Bucket> {
        if vec_max_norm(u) == 0.0 || !u[0].is_finite() || !u[1].is_finite() {
            return Err(Error::InvalidInput(
                "zero or non-finite tangent vector".into(),
            ));
        }
        let vertical = self.cone().is_vertical(u);
        let y_good = !rec.h_label.is_critical();
        let signed = || rec.h_label.sign() == self.sign_star_y(rec, u);
        Ok(match rec.v_label {
            None => match (vertical, y_good) {
                (true, true) => Bucket::VGood,
                (true, false) => Bucket::VCritical,
                (false, _) if y_good && signed() => Bucket::HSigned,
                (false, _) => Bucket::HUnsigned,
            },
            Some(vl) if vertical => {
                if y_good && !vl.is_critical() {
                    Bucket::A
                } else if y_good && vl.is_critical() && signed() {
                    Bucket::B
                } else {
                    Bucket::Vh
                }
            }
            Some(vl) => {
                // u2 = 0: both halves of G_v take u to the vertical cone
                let star = sign_star(u).ok();
                let in_c = y_good && !vl.is_critical() && star.is_none_or(|s| vl.sign() == s);
                let d_row = vl.is_critical() || star.is_some_and(|s| vl.sign() == -s);
                if in_c {
                    Bucket::C
                } else if y_good && d_row && signed() {
                    Bucket::D
                } else {
                    Bucket::Hh
                }
            }
        })
    }

    /// Buckets of every preimage of `x` for the tangent vector `u`.
    pub fn partition_preimages(
        &self,
        x: TorusPoint,
        u: [f64; 2],
    ) -> Result<(Vec<PreimageRecord>, Vec<Bucket>)> {
        let recs = self.preimages_f(x);
        let buckets = recs
            .iter()
            .map(|r| self.bucket(r, u))
            .collect::<Result<Vec<_>>>()?;
        Ok((recs, buckets))
    }

    pub fn bucket_counts(&self, x: TorusPoint, u: [f64; 2]) -> Result<BucketCounts> {
        let (_, buckets) = self.partition_preimages(x, u)?;
        let mut c = BucketCounts::default();
        buckets.into_iter().for_each(|b| c.add(b));
        Ok(c)
    }

    /// `(D_y f)⁻¹ u` for `u` rescaled to max-norm one.
    pub fn pullback(&self, rec: &PreimageRecord, u: [f64; 2]) -> Result<Pullback> {
        let n = vec_max_norm(u);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidInput(
                "zero or non-finite tangent vector".into(),
            ));
        }
        let v = rec.inv_jacobian.apply([u[0] / n, u[1] / n]);
        Ok(Pullback {
            vector: v,
            norm: vec_max_norm(v),
        })
    }
}

/// Constants entering the per-bucket lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchConstants {
    pub a: f64,
    pub b: f64,
    /// `alpha` (homothety) or `beta` (general).
    pub cone: f64,
    pub t: f64,
    /// Homothety only.
    pub r: f64,
    /// Homothety only.
    pub k: f64,
    /// General only.
    pub e_v: f64,
    /// General only.
    pub e_h: f64,
}

/// Strict lower bound on `|(D_y f)⁻¹ u|` for a unit `u` in the given bucket.
pub fn branch_lower_bound(bucket: Bucket, c: &BranchConstants) -> f64 {
    let BranchConstants {
        a,
        b,
        cone: al,
        t,
        r,
        k,
        e_v,
        e_h,
    } = *c;
    match bucket {
        Bucket::A => ((a - al / t) / al) * ((a - al / r) / al) * t * r / k,
        Bucket::B => 1.0 / (al * k),
        Bucket::Vh => 1.0 / ((b * t + 1.0) * al * k),
        Bucket::C => (a - al / t) * t / (al * k),
        Bucket::D => 1.0 / ((b * r + 1.0) * k),
        Bucket::Hh => 1.0 / ((b * t + 1.0) * (b * r + 1.0) * k),
        Bucket::VGood => e_v * (a - al / t) * t / al,
        Bucket::VCritical => e_v / al,
        Bucket::HSigned => e_h,
        Bucket::HUnsigned => e_h / (b * t + 1.0),
    }
}
