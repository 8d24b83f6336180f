//! Orchestration: config → normalized matrix → profiles → map → certificate
//! and empirical suites. Each verb fills a [`RunReport`] and returns an exit
//! code: 0 pass, 1 not certified or evidence negative, 2 invalid input,
//! 3 budget exceeded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificate::{
    certificate_general, estimate_beta, estimate_ev_eh, general_coeff_log_t,
    homothety_coefficients, l_general, l_homothety, limit_ji_bound_homothety, scan_general,
    scan_pairs, scan_parameters, BetaEstimate, CertificateReport, GeneralInput, HomothetyInput,
    Verdict, BETA_SAMPLES,
};
use crate::config::{Auto, Mode, ProfileSpec, RunConfig};
use crate::endo::{BranchConstants, ComposedEndo};
use crate::error::{Error, Result};
use crate::invariants::{branch_constants, invariant_suite};
use crate::lab::{
    cone_census, default_depth, direction_fan, grid_min_j, i_n_direct, i_n_recursive,
    log_sup_derivative, lyapunov_seeded, spatial_grid,
};
use crate::lattice::{
    elementary_divisors, min_alpha, normalize_coordinates, AlphaSearch, IntMatrix,
};
use crate::report::{CensusSection, Empirical, OracleCheck, RunReport};
use crate::shear::{
    builtin_shear, default_tilde_profile, profile_bounds, validate_profile, validate_tilde_profile,
    ShearParams, ShearProfile, TildeProfile, DEFAULT_SAMPLES_PER_UNIT,
};
use crate::torus::{general_partition, general_size_ceiling, homothety_partition, TorusPoint};
use crate::trig::TrigPoly;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const HOMOTHETY_DEFAULT_ALPHA: f64 = 1.1;
pub const ORACLE_TOL: f64 = 1e-8;
pub const ORACLE_SAMPLES: usize = 20;
pub const CENSUS_TOL: f64 = 1e-9;

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Budget { .. } => EXIT_BUDGET,
        _ => EXIT_INVALID,
    }
}

/// Which construction applies to the configured matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolved {
    Homothety(u32),
    General { tau1: u32, tau2: u32 },
}

pub fn resolve(cfg: &RunConfig) -> Result<(IntMatrix, Resolved)> {
    let m = cfg.matrix;
    let e = IntMatrix::new(m[0], m[1], m[2], m[3]);
    e.degree()?;
    let homothety = e.is_homothety();
    match (cfg.mode, homothety) {
        (Mode::Homothety, false) => {
            return Err(Error::Config {
                path: "map.mode".into(),
                msg: format!("mode = homothety but {:?} is not k Id", e.0),
            })
        }
        (Mode::General, true) => {
            return Err(Error::Config {
                path: "map.mode".into(),
                msg: "mode = general but the matrix is a homothety".into(),
            })
        }
        _ => {}
    }
    if homothety {
        let k = m[0];
        if k < 2 {
            return Err(Error::Unsupported(format!(
                "homothety factor must be >= 2, got {k}"
            )));
        }
        Ok((e, Resolved::Homothety(k as u32)))
    } else {
        let div = elementary_divisors(&e)?;
        Ok((
            e,
            Resolved::General {
                tau1: div.tau1 as u32,
                tau2: div.tau2 as u32,
            },
        ))
    }
}

/// Reason the closed-form coefficient cannot be positive, if any.
pub fn exclusion(r: Resolved) -> Result<Option<String>> {
    Ok(match r {
        Resolved::Homothety(k) => {
            let co = homothety_coefficients(k)?;
            (k < 5 || co.limit_log_t <= 0.into() || co.limit_log_r <= 0.into())
                .then(|| format!("k < 5: coefficient non-positive (k = {k})"))
        }
        Resolved::General { tau1, tau2 } => {
            let d = tau1 * tau2;
            (d <= 4 || general_coeff_log_t(tau1, tau2)? <= 0.into())
                .then(|| format!("(τ₁,τ₂)=({tau1},{tau2}) excluded, d ≤ 4"))
        }
    })
}

fn has_unit_eigenvalue(e: &IntMatrix) -> bool {
    let [[a, b], [c, d]] = e.0;
    let (tr, det) = (a + d, a * d - b * c);
    1 - tr + det == 0 || 1 + tr + det == 0
}

fn shear_poly(spec: &ProfileSpec, divisor: u32) -> Result<(TrigPoly, (f64, f64))> {
    let (builtin, centers) = builtin_shear(divisor)?;
    Ok(match spec {
        ProfileSpec::Builtin => (builtin, centers),
        ProfileSpec::Coefficients {
            constant,
            harmonics,
        } => {
            let mut p = TrigPoly::zero();
            p.constant = *constant;
            for (n, c, s) in harmonics {
                p = p.with(*n, *c, *s);
            }
            (p, centers)
        }
    })
}

/// Everything needed to run the map, plus the closed-form side data.
#[derive(Debug, Clone)]
pub struct Built {
    pub endo: ComposedEndo,
    pub alpha_search: Option<AlphaSearch>,
    pub beta: Option<BetaEstimate>,
    pub e_v: f64,
    pub e_h: f64,
}

/// Profile and its validation. The profile is returned even when it fails,
/// so the report can show the failing conditions.
pub fn build_profile(
    cfg: &RunConfig,
    r: Resolved,
    alpha: f64,
) -> Result<(ShearProfile, crate::shear::ValidationReport)> {
    let divisor = match r {
        Resolved::Homothety(k) => k,
        Resolved::General { tau2, .. } => tau2,
    };
    let (s, builtin_centers) = shear_poly(&cfg.profile, divisor)?;
    let centers = cfg.centers.or(builtin_centers);
    let part = match r {
        Resolved::Homothety(k) => {
            let delta = cfg.delta.or(0.9 / (4.0 * k as f64));
            homothety_partition(delta, k, centers, cfg.permissive)?
        }
        Resolved::General { tau2, .. } => {
            let l = cfg.l.or(0.8 * general_size_ceiling(tau2, alpha));
            general_partition(l, tau2, alpha, centers, cfg.permissive)?
        }
    };
    let (a_auto, b_auto) = match (cfg.a, cfg.b) {
        (Auto::Value(a), Auto::Value(b)) => (a, b),
        _ => profile_bounds(&s, &part)?,
    };
    let profile = ShearProfile {
        s,
        a: cfg.a.or(a_auto),
        b: cfg.b.or(b_auto),
        partition: part,
    };
    let report = validate_profile(&profile, DEFAULT_SAMPLES_PER_UNIT)?;
    Ok((profile, report))
}

fn profile_failure(v: &crate::shear::ValidationReport) -> Error {
    Error::Profile(
        v.failures()
            .iter()
            .map(|c| format!("{} (margin {:.3e})", c.name, c.sampled_margin))
            .collect::<Vec<_>>()
            .join("; "),
    )
}

/// Build the map in normalized coordinates, recording the closed-form side
/// data into `rep`. Errors on any failed validation.
pub fn build(cfg: &RunConfig, rep: &mut RunReport) -> Result<Built> {
    let (e, r) = resolve(cfg)?;
    rep.matrix = Some(e);
    rep.degree = Some(e.degree()?);
    rep.divisors = Some(elementary_divisors(&e)?);
    rep.eigenvalue_plus_minus_one = Some(has_unit_eigenvalue(&e));
    let cf = &mut rep.closed_form;
    match r {
        Resolved::Homothety(k) => {
            cf.l = Some(l_homothety(k)?.into());
            let co = homothety_coefficients(k)?;
            cf.coeff_log_t = Some(co.limit_log_t.into());
            cf.coeff_log_r = Some(co.limit_log_r.into());
            let alpha = cfg.alpha.or(HOMOTHETY_DEFAULT_ALPHA);
            cf.alpha = Some(alpha);
            let (profile, v) = build_profile(cfg, r, alpha)?;
            let ok = v.passed();
            cf.profile_validation = Some(v.clone());
            if !ok {
                return Err(profile_failure(&v));
            }
            let endo =
                ComposedEndo::homothety(k, profile, ShearParams { t: cfg.t, r: cfg.r }, alpha)?;
            Ok(Built {
                endo,
                alpha_search: None,
                beta: None,
                e_v: 0.0,
                e_h: 0.0,
            })
        }
        Resolved::General { tau1, tau2 } => {
            cf.l = Some(l_general(tau1, tau2)?.into());
            cf.coeff_log_t = Some(general_coeff_log_t(tau1, tau2)?.into());
            let cc = normalize_coordinates(&e)?;
            rep.normalization = Some(cc);
            let g = cc.g;
            let search = min_alpha(&g)?;
            let alpha = cfg.alpha.or(search.alpha);
            cf.alpha = Some(alpha);
            cf.alpha_search = Some(search);
            let (profile, v) = build_profile(cfg, r, alpha)?;
            let ok = v.passed();
            cf.profile_validation = Some(v.clone());
            if !ok {
                return Err(profile_failure(&v));
            }
            let l = profile.partition.critical_len();
            let tilde: TildeProfile = default_tilde_profile(tau1, tau2, l, alpha)?;
            let tv = validate_tilde_profile(&tilde, DEFAULT_SAMPLES_PER_UNIT)?;
            let tok = tv.passed();
            cf.tilde_validation = Some(tv.clone());
            if !tok {
                return Err(profile_failure(&tv));
            }
            let beta = estimate_beta(&g, &tilde.s, alpha)?;
            let (e_v, e_h) = estimate_ev_eh(&g, &tilde.s, beta.beta, BETA_SAMPLES)?;
            cf.beta = Some(beta);
            cf.e_v = Some(e_v);
            cf.e_h = Some(e_h);
            let endo = ComposedEndo::general(g, tilde, profile, cfg.t, alpha, beta.beta)?;
            Ok(Built {
                endo,
                alpha_search: Some(search),
                beta: Some(beta),
                e_v,
                e_h,
            })
        }
    }
}

/// Closed-form certificate at the configured `t` (and `r`). `None` when a
/// shear parameter is zero, which leaves the preconditions unmet.
pub fn certificate(b: &Built, t: f64, r: f64) -> Result<Option<CertificateReport>> {
    let p = &b.endo.profile;
    if t <= 0.0 || (b.endo.is_homothety() && r <= 0.0) {
        return Ok(None);
    }
    Ok(Some(match &b.endo.variant {
        crate::endo::Variant::Homothety { k, cone, .. } => {
            limit_ji_bound_homothety(&HomothetyInput {
                k: *k,
                a: p.a,
                b: p.b,
                alpha: cone.alpha,
                t,
                r,
            })?
        }
        crate::endo::Variant::General { tilde, beta, .. } => certificate_general(&GeneralInput {
            tau1: tilde.tau1,
            tau2: tilde.tau2,
            a: p.a,
            b: p.b,
            beta: *beta,
            t,
            e_v: b.e_v,
            e_h: b.e_h,
        })?,
    }))
}

fn verdict_of(c: &Option<CertificateReport>) -> Verdict {
    c.as_ref()
        .map_or(Verdict::PreconditionsUnmet, |c| c.verdict)
}

fn finish(rep: &mut RunReport, code: i32, outcome: &str) -> i32 {
    rep.summary.exit_code = code;
    rep.summary.outcome = outcome.to_string();
    code
}

fn fail(rep: &mut RunReport, e: &Error) -> i32 {
    rep.summary.reasons.push(e.to_string());
    let code = exit_code_for(e);
    finish(
        rep,
        code,
        if code == EXIT_BUDGET {
            "budget-exceeded"
        } else {
            "invalid-input"
        },
    )
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Certified => "certified",
        Verdict::NotCertified => "not-certified",
        Verdict::PreconditionsUnmet => "preconditions-unmet",
    }
}

fn excluded_early(cfg: &RunConfig, rep: &mut RunReport) -> Result<Option<i32>> {
    let (e, r) = resolve(cfg)?;
    let Some(reason) = exclusion(r)? else {
        return Ok(None);
    };
    rep.matrix = Some(e);
    rep.degree = Some(e.degree()?);
    rep.divisors = Some(elementary_divisors(&e)?);
    rep.eigenvalue_plus_minus_one = Some(has_unit_eigenvalue(&e));
    match r {
        Resolved::Homothety(k) => {
            rep.closed_form.l = Some(l_homothety(k)?.into());
            let co = homothety_coefficients(k)?;
            rep.closed_form.coeff_log_t = Some(co.limit_log_t.into());
            rep.closed_form.coeff_log_r = Some(co.limit_log_r.into());
        }
        Resolved::General { tau1, tau2 } => {
            rep.closed_form.l = Some(l_general(tau1, tau2)?.into());
            rep.closed_form.coeff_log_t = Some(general_coeff_log_t(tau1, tau2)?.into());
        }
    }
    rep.summary.reasons.push(reason);
    Ok(Some(finish(rep, EXIT_NEGATIVE, "not-certified")))
}

/// `certify`: closed-form pipeline only.
pub fn cmd_certify(cfg: &RunConfig, rep: &mut RunReport) -> i32 {
    match certify_inner(cfg, rep) {
        Ok(code) => code,
        Err(e) => fail(rep, &e),
    }
}

fn certify_inner(cfg: &RunConfig, rep: &mut RunReport) -> Result<i32> {
    if let Some(code) = excluded_early(cfg, rep)? {
        return Ok(code);
    }
    let b = build(cfg, rep)?;
    let cert = certificate(&b, cfg.t, cfg.r)?;
    let v = verdict_of(&cert);
    if let Some(c) = &cert {
        rep.summary.reasons.extend(c.notes.iter().cloned());
        if let Some(bound) = c.limit_ji_lower_bound {
            rep.summary
                .reasons
                .push(format!("lower bound on lim J_i: {bound:.6}"));
        }
    }
    if v == Verdict::PreconditionsUnmet {
        rep.summary
            .reasons
            .push("shear parameters at or below 2·cone/a".into());
    }
    rep.closed_form.certificate = cert;
    let code = if v == Verdict::Certified {
        EXIT_PASS
    } else {
        EXIT_NEGATIVE
    };
    Ok(finish(rep, code, verdict_name(v)))
}

fn depth(cfg: &RunConfig, b: &Built) -> usize {
    cfg.depth.or(default_depth(b.endo.degree()))
}

fn consts(b: &Built) -> Option<BranchConstants> {
    branch_constants(&b.endo, b.e_v, b.e_h)
}

/// `verify`: hard invariants, oracle equivalence, census, grid minimum and
/// Lyapunov exponents.
pub fn cmd_verify(cfg: &RunConfig, rep: &mut RunReport) -> i32 {
    match verify_inner(cfg, rep) {
        Ok(code) => code,
        Err(e) => fail(rep, &e),
    }
}

fn verify_inner(cfg: &RunConfig, rep: &mut RunReport) -> Result<i32> {
    if let Some(code) = excluded_early(cfg, rep)? {
        return Ok(code);
    }
    let b = build(cfg, rep)?;
    let f = &b.endo;
    let cert = certificate(&b, cfg.t, cfg.r)?;
    let certified = verdict_of(&cert) == Verdict::Certified;
    rep.closed_form.certificate = cert;
    let n = depth(cfg, &b);
    let bc = consts(&b);
    let mut emp = Empirical::new(cfg.seed);
    let mut reasons = Vec::new();

    let tally = invariant_suite(f, cfg.samples, cfg.seed, bc.as_ref())?;
    let mut hard_ok = tally.passed();
    if !tally.passed() {
        reasons.push(format!("{} invariant violations", tally.violation_count));
    }
    emp.invariants = Some(tally);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..ORACLE_SAMPLES {
        let x = TorusPoint::wrapped(rng.gen(), rng.gen());
        let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let rec = i_n_recursive(f, x, u, n)?.total();
        let dir = i_n_direct(f, x, u, n)?;
        worst = worst.max((rec - dir).abs());
    }
    let oracle_ok = worst < ORACLE_TOL;
    hard_ok &= oracle_ok;
    if !oracle_ok {
        reasons.push(format!("recursive and direct I differ by {worst:e}"));
    }
    emp.oracle = Some(OracleCheck {
        depth: n,
        samples: ORACLE_SAMPLES,
        max_abs_diff: worst,
        tolerance: ORACLE_TOL,
        passed: oracle_ok,
    });

    let census = census_section(f, cfg.seed, n, bc.is_some())?;
    if census.bound_applies {
        let m = census
            .vertical
            .min_margin()
            .min(census.horizontal.min_margin());
        if m < -CENSUS_TOL {
            hard_ok = false;
            reasons.push(format!("cone census below the recursion bound by {:e}", -m));
        }
    }
    emp.census = Some(census);

    let (w, h, dcount) = cfg.grid;
    let grid = grid_min_j(
        f,
        n,
        &spatial_grid(w, h),
        &direction_fan(f.cone().alpha, dcount),
    )?;
    let positive = grid.min_average > 0.0;
    reasons.push(format!(
        "empirical min (1/n) I = {:.6} at depth {n}",
        grid.min_average
    ));
    emp.grid_min_j = Some(grid);

    emp.lyapunov = lyapunov_runs(f, cfg)?;
    emp.log_sup_derivative = Some(log_sup_derivative(f));
    rep.empirical = Some(emp);

    if certified && !positive {
        reasons.push("certified but the empirical minimum is not positive".into());
    }
    rep.summary.reasons.extend(reasons);
    let code = if hard_ok && positive {
        EXIT_PASS
    } else {
        EXIT_NEGATIVE
    };
    let outcome = match (hard_ok, positive) {
        (true, true) => "evidence-positive",
        (true, false) => "evidence-absent",
        _ => "invariant-violation",
    };
    Ok(finish(rep, code, outcome))
}

fn census_section(
    f: &ComposedEndo,
    seed: u64,
    n: usize,
    bound_applies: bool,
) -> Result<CensusSection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = TorusPoint::wrapped(rng.gen(), rng.gen());
    Ok(CensusSection {
        vertical: cone_census(f, x, [0.0, 1.0], n)?,
        horizontal: cone_census(f, x, [1.0, 0.0], n)?,
        bound_applies,
        series: i_n_recursive(f, x, [0.0, 1.0], n)?,
    })
}

fn lyapunov_runs(f: &ComposedEndo, cfg: &RunConfig) -> Result<Vec<crate::lab::LyapunovEstimate>> {
    use rayon::prelude::*;
    (0..cfg.lyapunov_seeds as u64)
        .into_par_iter()
        .map(|i| lyapunov_seeded(f, cfg.seed.wrapping_add(i), cfg.lyapunov_steps, cfg.burn_in))
        .collect()
}

/// `scan`: certificate over the configured grids. Without `r_grid` the
/// homothety scan runs along the diagonal `t = r`.
pub fn cmd_scan(cfg: &RunConfig, rep: &mut RunReport) -> i32 {
    match scan_inner(cfg, rep) {
        Ok(code) => code,
        Err(e) => fail(rep, &e),
    }
}

fn scan_inner(cfg: &RunConfig, rep: &mut RunReport) -> Result<i32> {
    if cfg.t_grid.is_empty() {
        return Err(Error::Config {
            path: "shear.t_grid".into(),
            msg: "empty scan grid".into(),
        });
    }
    if cfg.t_grid.iter().chain(&cfg.r_grid).any(|x| *x <= 0.0) {
        return Err(Error::Config {
            path: "shear.t_grid".into(),
            msg: "scan values must be positive".into(),
        });
    }
    if let Some(code) = excluded_early(cfg, rep)? {
        return Ok(code);
    }
    let b = build(cfg, rep)?;
    let p = &b.endo.profile;
    let scan = match &b.endo.variant {
        crate::endo::Variant::Homothety { k, cone, .. } => {
            let base = HomothetyInput {
                k: *k,
                a: p.a,
                b: p.b,
                alpha: cone.alpha,
                t: 1.0,
                r: 1.0,
            };
            if cfg.r_grid.is_empty() {
                let pairs: Vec<(f64, f64)> = cfg.t_grid.iter().map(|t| (*t, *t)).collect();
                scan_pairs(&base, &pairs)?
            } else {
                scan_parameters(&base, &cfg.t_grid, &cfg.r_grid)?
            }
        }
        crate::endo::Variant::General { tilde, beta, .. } => scan_general(
            &GeneralInput {
                tau1: tilde.tau1,
                tau2: tilde.tau2,
                a: p.a,
                b: p.b,
                beta: *beta,
                t: 1.0,
                e_v: b.e_v,
                e_h: b.e_h,
            },
            &cfg.t_grid,
        )?,
    };
    rep.summary
        .reasons
        .push(format!("precondition threshold {:.6}", scan.threshold));
    let code = match scan.minimal {
        Some((t, r)) => {
            rep.summary
                .reasons
                .push(format!("minimal certified corner t = {t}, r = {r}"));
            EXIT_PASS
        }
        None => {
            rep.summary.reasons.push("no certified grid point".into());
            EXIT_NEGATIVE
        }
    };
    rep.closed_form.scan = Some(scan);
    Ok(finish(
        rep,
        code,
        if code == EXIT_PASS {
            "certified-region-found"
        } else {
            "not-certified"
        },
    ))
}

/// CSV of a scan table: `t, r, verdict, limitJiLowerBound`.
pub fn scan_csv(scan: &crate::certificate::ScanResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["t", "r", "verdict", "limitJiLowerBound"])
        .map_err(io)?;
    for e in &scan.table {
        w.write_record([
            e.t.to_string(),
            e.r.to_string(),
            verdict_name(e.verdict).to_string(),
            e.bound.map_or(String::new(), |b| b.to_string()),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// `census`: cone census and `J_i` series from one seeded point.
pub fn cmd_census(cfg: &RunConfig, rep: &mut RunReport) -> i32 {
    match census_inner(cfg, rep) {
        Ok(c) => c,
        Err(e) => fail(rep, &e),
    }
}

fn census_inner(cfg: &RunConfig, rep: &mut RunReport) -> Result<i32> {
    {
        let b = build(cfg, rep)?;
        let n = depth(cfg, &b);
        let census = census_section(&b.endo, cfg.seed, n, consts(&b).is_some())?;
        let margin = census
            .vertical
            .min_margin()
            .min(census.horizontal.min_margin());
        let ok = !census.bound_applies || margin >= -CENSUS_TOL;
        rep.summary
            .reasons
            .push(format!("smallest margin a_i - bound_i = {margin:.6}"));
        let mut emp = Empirical::new(cfg.seed);
        emp.census = Some(census);
        rep.empirical = Some(emp);
        Ok(finish(
            rep,
            if ok { EXIT_PASS } else { EXIT_NEGATIVE },
            if ok {
                "census-consistent"
            } else {
                "census-below-bound"
            },
        ))
    }
}

/// `lyapunov`: forward exponents from seeded starts.
pub fn cmd_lyapunov(cfg: &RunConfig, rep: &mut RunReport) -> i32 {
    match lyapunov_inner(cfg, rep) {
        Ok(c) => c,
        Err(e) => fail(rep, &e),
    }
}

fn lyapunov_inner(cfg: &RunConfig, rep: &mut RunReport) -> Result<i32> {
    {
        let b = build(cfg, rep)?;
        let runs = lyapunov_runs(&b.endo, cfg)?;
        let all_neg = runs.iter().all(|l| l.lambda_minus < 0.0);
        let worst = runs
            .iter()
            .map(|l| l.lambda_minus)
            .fold(f64::NEG_INFINITY, f64::max);
        rep.summary
            .reasons
            .push(format!("largest lambda_minus over seeds: {worst:.6}"));
        let mut emp = Empirical::new(cfg.seed);
        emp.lyapunov = runs;
        emp.log_sup_derivative = Some(log_sup_derivative(&b.endo));
        rep.empirical = Some(emp);
        Ok(finish(
            rep,
            if all_neg { EXIT_PASS } else { EXIT_NEGATIVE },
            if all_neg {
                "evidence-positive"
            } else {
                "evidence-absent"
            },
        ))
    }
}

/// `validate-profile`: exit 0 when every condition holds, 2 otherwise.
pub fn cmd_validate_profile(cfg: &RunConfig, rep: &mut RunReport) -> i32 {
    match build(cfg, rep) {
        Ok(_) => finish(rep, EXIT_PASS, "profile-valid"),
        Err(e) => fail(rep, &e),
    }
}

/// `normalize`: divisors, normalizing change of coordinates and cone aperture.
pub fn cmd_normalize(cfg: &RunConfig, rep: &mut RunReport) -> i32 {
    match normalize_inner(cfg, rep) {
        Ok(c) => c,
        Err(e) => fail(rep, &e),
    }
}

fn normalize_inner(cfg: &RunConfig, rep: &mut RunReport) -> Result<i32> {
    {
        let (e, r) = resolve(cfg)?;
        rep.matrix = Some(e);
        rep.degree = Some(e.degree()?);
        rep.divisors = Some(elementary_divisors(&e)?);
        rep.eigenvalue_plus_minus_one = Some(has_unit_eigenvalue(&e));
        match r {
            Resolved::Homothety(_) => {
                rep.summary
                    .reasons
                    .push("homothety: no change of coordinates applies".into());
            }
            Resolved::General { .. } => {
                let cc = normalize_coordinates(&e)?;
                let search = min_alpha(&cc.g)?;
                rep.normalization = Some(cc);
                rep.closed_form.alpha = Some(search.alpha);
                rep.closed_form.alpha_search = Some(search);
            }
        }
        Ok(finish(rep, EXIT_PASS, "normalized"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(cfg: &RunConfig, f: fn(&RunConfig, &mut RunReport) -> i32) -> (RunReport, i32) {
        let mut rep = RunReport::new("test", cfg.clone(), 0);
        let code = f(cfg, &mut rep);
        (rep, code)
    }

    #[test]
    fn exclusions() {
        let cfg = RunConfig {
            matrix: [3, 0, 0, 3],
            ..RunConfig::default()
        };
        let (rep, code) = run(&cfg, cmd_certify);
        assert_eq!(code, 1);
        assert!(rep.summary.reasons[0].contains("k < 5: coefficient non-positive"));
        let cfg = RunConfig {
            matrix: [1, 0, 0, 2],
            ..RunConfig::default()
        };
        let (rep, code) = run(&cfg, cmd_certify);
        assert_eq!(code, 1);
        assert!(rep.summary.reasons[0].contains("(τ₁,τ₂)=(1,2) excluded, d ≤ 4"));
    }

    #[test]
    fn invalid_inputs() {
        let cfg = RunConfig {
            matrix: [1, 2, 2, 4],
            ..RunConfig::default()
        };
        assert_eq!(run(&cfg, cmd_certify).1, 2);
        let cfg = RunConfig {
            a: Auto::Value(3.0),
            ..RunConfig::default()
        };
        let (rep, code) = run(&cfg, cmd_validate_profile);
        assert_eq!(code, 2);
        assert!(!rep.closed_form.profile_validation.unwrap().passed());
        let cfg = RunConfig {
            mode: Mode::General,
            ..RunConfig::default()
        };
        assert_eq!(run(&cfg, cmd_certify).1, 2);
    }

    #[test]
    fn default_k5_certify_runs() {
        let (rep, code) = run(&RunConfig::default(), cmd_certify);
        let c = rep.closed_form.certificate.unwrap();
        assert!(c.preconditions_met);
        assert_eq!(
            code,
            if c.verdict == Verdict::Certified {
                0
            } else {
                1
            }
        );
        let cfg = RunConfig {
            t: 300.0,
            r: 300.0,
            ..RunConfig::default()
        };
        assert_eq!(run(&cfg, cmd_certify).1, 0);
    }

    #[test]
    fn scan_small_grid() {
        let cfg = RunConfig {
            t_grid: vec![0.5, 0.8, 1.0],
            ..RunConfig::default()
        };
        let (rep, code) = run(&cfg, cmd_scan);
        assert_eq!(code, 1);
        let scan = rep.closed_form.scan.unwrap();
        assert!(scan
            .table
            .iter()
            .all(|e| e.verdict == Verdict::PreconditionsUnmet));
        assert!(scan_csv(&scan)
            .unwrap()
            .starts_with("t,r,verdict,limitJiLowerBound\n0.5,0.5,preconditions-unmet,\n"));
    }

    #[test]
    fn normalize_general() {
        let cfg = RunConfig {
            matrix: [2, 0, 0, 4],
            ..RunConfig::default()
        };
        let (rep, code) = run(&cfg, cmd_normalize);
        assert_eq!(code, 0);
        let cc = rep.normalization.unwrap();
        assert!(crate::lattice::check_coordinate_change(
            &IntMatrix::new(2, 0, 0, 4),
            &cc
        ));
        assert_eq!(rep.eigenvalue_plus_minus_one, Some(false));
    }

    #[test]
    fn unit_eigenvalue_flag() {
        assert!(has_unit_eigenvalue(&IntMatrix::new(1, 1, 0, 3)));
        assert!(has_unit_eigenvalue(&IntMatrix::new(-1, 0, 2, 5)));
        assert!(!has_unit_eigenvalue(&IntMatrix::homothety(5)));
    }
}
