//! JSON run report. Closed-form and empirical numbers live in separate
//! sections, each tagged with its provenance.

use serde::{Deserialize, Serialize};

use crate::certificate::{BetaEstimate, CertificateReport, Exact, ScanResult};
use crate::config::RunConfig;
use crate::invariants::InvariantTally;
use crate::lab::{ConeCensus, GridMinReport, IExpansionSeries, LyapunovEstimate};
use crate::lattice::{AlphaSearch, CoordinateChange, ElementaryDivisors, IntMatrix};
use crate::shear::ValidationReport;

pub const SCHEMA: &str = "nuh-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Exact or closed-form bounds: a certificate.
    ClosedForm,
    /// Finite-sample computation: evidence only.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub provenance: Provenance,
    pub l: Option<Exact>,
    pub coeff_log_t: Option<Exact>,
    pub coeff_log_r: Option<Exact>,
    pub profile_validation: Option<ValidationReport>,
    pub tilde_validation: Option<ValidationReport>,
    pub alpha: Option<f64>,
    pub alpha_search: Option<AlphaSearch>,
    pub beta: Option<BetaEstimate>,
    pub e_v: Option<f64>,
    pub e_h: Option<f64>,
    pub certificate: Option<CertificateReport>,
    pub scan: Option<ScanResult>,
}

impl Default for ClosedForm {
    fn default() -> Self {
        ClosedForm {
            provenance: Provenance::ClosedForm,
            l: None,
            coeff_log_t: None,
            coeff_log_r: None,
            profile_validation: None,
            tilde_validation: None,
            alpha: None,
            alpha_search: None,
            beta: None,
            e_v: None,
            e_h: None,
            certificate: None,
            scan: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub depth: usize,
    pub samples: usize,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusSection {
    pub vertical: ConeCensus,
    pub horizontal: ConeCensus,
    /// Whether the recursion bound applies (it needs the preconditions).
    pub bound_applies: bool,
    pub series: IExpansionSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Empirical {
    pub provenance: Provenance,
    pub seed: u64,
    pub invariants: Option<InvariantTally>,
    pub oracle: Option<OracleCheck>,
    pub census: Option<CensusSection>,
    pub grid_min_j: Option<GridMinReport>,
    pub lyapunov: Vec<LyapunovEstimate>,
    pub log_sup_derivative: Option<f64>,
}

impl Empirical {
    pub fn new(seed: u64) -> Self {
        Empirical {
            provenance: Provenance::Empirical,
            seed,
            invariants: None,
            oracle: None,
            census: None,
            grid_min_j: None,
            lyapunov: Vec::new(),
            log_sup_derivative: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub outcome: String,
    pub exit_code: i32,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    /// Seconds since the Unix epoch; 0 under `--fixed-clock`.
    pub generated_at: u64,
    pub config: RunConfig,
    pub matrix: Option<IntMatrix>,
    pub degree: Option<u64>,
    pub divisors: Option<ElementaryDivisors>,
    pub normalization: Option<CoordinateChange>,
    /// `E` has eigenvalue `1` or `-1`. Informational; never affects the exit code.
    pub eigenvalue_plus_minus_one: Option<bool>,
    pub closed_form: ClosedForm,
    pub empirical: Option<Empirical>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(command: &str, config: RunConfig, generated_at: u64) -> Self {
        RunReport {
            schema: SCHEMA.to_string(),
            command: command.to_string(),
            generated_at,
            config,
            matrix: None,
            degree: None,
            divisors: None,
            normalization: None,
            eigenvalue_plus_minus_one: None,
            closed_form: ClosedForm::default(),
            empirical: None,
            summary: Summary {
                outcome: String::new(),
                exit_code: 2,
                reasons: Vec::new(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
