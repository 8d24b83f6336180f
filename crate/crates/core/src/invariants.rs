//! Hard invariants of the preimage structure, checked on random samples:
//! cardinality, round trip, region and bucket counts, branch bounds and
//! cone invariance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::endo::{branch_lower_bound, BranchConstants, ComposedEndo, RegionCounts, Variant};
use crate::error::Result;
use crate::mat::Mat2;
use crate::torus::TorusPoint;

pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// Violations kept verbatim in a tally; the rest are only counted.
pub const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantTally {
    pub samples: usize,
    pub violation_count: usize,
    pub violations: Vec<String>,
    pub max_round_trip: f64,
    pub max_critical: usize,
    pub min_good_plus: usize,
    pub min_good_minus: usize,
    /// Smallest number of vertical-landing preimages for vertical `u`.
    pub min_vertical_v: usize,
    /// Same for horizontal `u`.
    pub min_vertical_h: usize,
    /// Homothety: smallest `|B|` and `|D|` seen (reported, not asserted).
    pub min_b: Option<usize>,
    pub min_d: Option<usize>,
    /// Both co-occurrence patterns `y ∈ G_h, mid ∈ C_v` and `y ∈ C_h, mid ∈ G_v` were seen.
    pub mixed_patterns: Option<(bool, bool)>,
    /// Whether branch bounds and cone invariance were checked (they need the preconditions).
    pub bounds_checked: bool,
}

impl InvariantTally {
    fn new(samples: usize, bounds_checked: bool, homothety: bool) -> Self {
        InvariantTally {
            samples,
            violation_count: 0,
            violations: Vec::new(),
            max_round_trip: 0.0,
            max_critical: 0,
            min_good_plus: usize::MAX,
            min_good_minus: usize::MAX,
            min_vertical_v: usize::MAX,
            min_vertical_h: usize::MAX,
            min_b: homothety.then_some(usize::MAX),
            min_d: homothety.then_some(usize::MAX),
            mixed_patterns: homothety.then_some((false, false)),
            bounds_checked,
        }
    }

    fn fail(&mut self, msg: String) {
        self.violation_count += 1;
        if self.violations.len() < MAX_LISTED {
            self.violations.push(msg);
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Lower bounds the counts must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountBounds {
    pub degree: usize,
    pub good_each: usize,
    pub critical_max: usize,
    pub vertical_v: usize,
    pub vertical_h: usize,
}

pub fn count_bounds(f: &ComposedEndo) -> CountBounds {
    match &f.variant {
        Variant::Homothety { k, .. } => {
            let k = *k as usize;
            let c = (k - 1) / 2;
            CountBounds {
                degree: k * k,
                good_each: k * c,
                critical_max: k,
                vertical_v: (k - 1) * (k - 1) + c,
                vertical_h: c * (k + c),
            }
        }
        Variant::General { tilde, .. } => {
            let (t1, t2) = (tilde.tau1 as usize, tilde.tau2 as usize);
            let c = t1 * ((t2 - 1) / 2);
            CountBounds {
                degree: t1 * t2,
                good_each: c,
                critical_max: 1,
                vertical_v: t1 * t2 - 1,
                vertical_h: c,
            }
        }
    }
}

/// Constants for the per-bucket bounds, or `None` when the preconditions
/// (`t, r > 2 alpha / a`, resp. `t > 2 beta / a`) fail.
pub fn branch_constants(f: &ComposedEndo, e_v: f64, e_h: f64) -> Option<BranchConstants> {
    let a = f.profile.a;
    let b = f.profile.b;
    match &f.variant {
        Variant::Homothety { k, params, cone } => {
            let th = 2.0 * cone.alpha / a;
            (params.t > th && params.r > th).then_some(BranchConstants {
                a,
                b,
                cone: cone.alpha,
                t: params.t,
                r: params.r,
                k: *k as f64,
                e_v: 0.0,
                e_h: 0.0,
            })
        }
        Variant::General { t, beta, .. } => (*t > 2.0 * beta / a).then_some(BranchConstants {
            a,
            b,
            cone: *beta,
            t: *t,
            r: 0.0,
            k: 0.0,
            e_v,
            e_h,
        }),
    }
}

fn scale_rel_identity(inv: Mat2, j: Mat2) -> f64 {
    let scale = (inv.max_operator_norm() * j.max_operator_norm()).max(1.0);
    inv.mul(j).max_abs_diff(Mat2::IDENTITY) / scale
}

/// Checks at one point `x` that do not depend on `u`.
pub fn check_point(f: &ComposedEndo, x: TorusPoint, tally: &mut InvariantTally) {
    let cb = count_bounds(f);
    let recs = f.preimages_f(x);
    if recs.len() != cb.degree {
        tally.fail(format!("|f^-1({x:?})| = {} != {}", recs.len(), cb.degree));
    }
    for r in &recs {
        let err = f.apply_f(r.y).dist(&x);
        tally.max_round_trip = tally.max_round_trip.max(err);
        if err >= ROUND_TRIP_TOL {
            tally.fail(format!("round trip error {err:e} at {:?}", r.y));
        }
        let id = scale_rel_identity(r.inv_jacobian, f.jacobian_f(r.y));
        if id >= 1e-10 {
            tally.fail(format!("inverse Jacobian off by {id:e} at {:?}", r.y));
        }
    }
    let rc = RegionCounts::of(&recs);
    tally.max_critical = tally.max_critical.max(rc.ch);
    tally.min_good_plus = tally.min_good_plus.min(rc.gh_plus);
    tally.min_good_minus = tally.min_good_minus.min(rc.gh_minus);
    if rc.ch > cb.critical_max {
        tally.fail(format!(
            "{} critical preimages of {x:?} (max {})",
            rc.ch, cb.critical_max
        ));
    }
    if rc.gh_plus < cb.good_each || rc.gh_minus < cb.good_each {
        tally.fail(format!(
            "good counts ({}, {}) at {x:?} below {}",
            rc.gh_plus, rc.gh_minus, cb.good_each
        ));
    }
    if let Some((gc, cg)) = tally.mixed_patterns.as_mut() {
        for r in &recs {
            let vc = r.v_label.is_some_and(|l| l.is_critical());
            *gc |= !r.h_label.is_critical() && vc;
            *cg |= r.h_label.is_critical() && !vc;
        }
    }
}

/// Bucket counts, branch bounds and cone invariance at `(x, u)`.
pub fn check_direction(
    f: &ComposedEndo,
    x: TorusPoint,
    u: [f64; 2],
    consts: Option<&BranchConstants>,
    tally: &mut InvariantTally,
) -> Result<()> {
    let cb = count_bounds(f);
    let (recs, buckets) = f.partition_preimages(x, u)?;
    let vertical = f.cone().is_vertical(u);
    let mut counts = crate::endo::BucketCounts::default();
    buckets.iter().for_each(|b| counts.add(*b));
    let vt = counts.vertical_total();
    if vertical {
        tally.min_vertical_v = tally.min_vertical_v.min(vt);
        if vt < cb.vertical_v {
            tally.fail(format!(
                "vertical u {u:?} at {x:?}: {vt} < {}",
                cb.vertical_v
            ));
        }
    } else {
        tally.min_vertical_h = tally.min_vertical_h.min(vt);
        if vt < cb.vertical_h {
            tally.fail(format!(
                "horizontal u {u:?} at {x:?}: {vt} < {}",
                cb.vertical_h
            ));
        }
    }
    if let Variant::Homothety { k, .. } = &f.variant {
        let k = *k as usize;
        let c = (k - 1) / 2;
        if vertical {
            if counts.a < (k - 1) * (k - 1) {
                tally.fail(format!("|A| = {} < {}", counts.a, (k - 1) * (k - 1)));
            }
            let critical_row = recs
                .iter()
                .any(|r| r.v_label.is_some_and(|l| l.is_critical()));
            if critical_row && counts.b < c {
                tally.fail(format!("|B| = {} < {c} with a critical row", counts.b));
            }
            if counts.vh > 2 * k - 1 - c {
                tally.fail(format!("|V_h| = {} > {}", counts.vh, 2 * k - 1 - c));
            }
            tally.min_b = tally.min_b.map(|m| m.min(counts.b));
        } else {
            if counts.c < (k - 1) * c {
                tally.fail(format!("|C| = {} < {}", counts.c, (k - 1) * c));
            }
            tally.min_d = tally.min_d.map(|m| m.min(counts.d));
        }
    }
    if let Some(consts) = consts {
        for (rec, b) in recs.iter().zip(&buckets) {
            let p = f.pullback(rec, u)?;
            let lb = branch_lower_bound(*b, consts);
            if p.norm <= lb {
                tally.fail(format!(
                    "bucket {b:?}: |pullback| {} <= {lb} at {:?}",
                    p.norm, rec.y
                ));
            }
            if b.lands_vertical() && !f.cone().is_vertical(p.vector) {
                tally.fail(format!(
                    "bucket {b:?}: pullback {:?} left the vertical cone",
                    p.vector
                ));
            }
        }
    }
    Ok(())
}

/// Runs `check_point` and `check_direction` (one vertical, one horizontal
/// and one arbitrary `u`) at `samples` seeded random points.
pub fn invariant_suite(
    f: &ComposedEndo,
    samples: usize,
    seed: u64,
    consts: Option<&BranchConstants>,
) -> Result<InvariantTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = InvariantTally::new(samples, consts.is_some(), f.is_homothety());
    let cone = f.cone().alpha;
    for _ in 0..samples {
        let x = TorusPoint::wrapped(rng.gen(), rng.gen());
        check_point(f, x, &mut tally);
        let s: f64 = rng.gen_range(-1.0..1.0);
        let h: f64 = rng.gen_range(-0.999..0.999);
        let any = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        for u in [[s / cone, 1.0], [1.0, h * cone], any] {
            if u[0] == 0.0 && u[1] == 0.0 {
                continue;
            }
            check_direction(f, x, u, consts, &mut tally)?;
        }
    }
    Ok(tally)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shear::{default_profile, ShearParams};
    use crate::torus::homothety_partition;

    #[test]
    fn k5_suite_is_clean() {
        let part = homothety_partition(0.045, 5, (0.25, 0.75), false).unwrap();
        let f = ComposedEndo::homothety(
            5,
            default_profile(&part).unwrap(),
            ShearParams { t: 4.0, r: 4.0 },
            1.1,
        )
        .unwrap();
        let consts = branch_constants(&f, 0.0, 0.0).unwrap();
        let tally = invariant_suite(&f, 200, 1, Some(&consts)).unwrap();
        assert!(tally.passed(), "{:?}", tally.violations);
        assert!(tally.min_vertical_v >= 18 && tally.min_vertical_h >= 14);
        assert_eq!(tally.mixed_patterns, Some((true, true)));
    }

    #[test]
    fn linear_map_has_no_bounds() {
        let part = homothety_partition(0.045, 5, (0.25, 0.75), false).unwrap();
        let f = ComposedEndo::homothety(
            5,
            default_profile(&part).unwrap(),
            ShearParams { t: 0.0, r: 0.0 },
            1.1,
        )
        .unwrap();
        assert!(branch_constants(&f, 0.0, 0.0).is_none());
        let tally = invariant_suite(&f, 50, 2, None).unwrap();
        assert!(tally.passed(), "{:?}", tally.violations);
    }
}
