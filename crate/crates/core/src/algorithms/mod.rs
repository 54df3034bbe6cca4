//! Splitting iterations, step-size admissibility, and the outer solve loop.

mod solve;
mod state;
mod steps;
mod stepsize;

use std::fmt;
use std::str::FromStr;

pub use solve::{solve, IterationView, SolveOptions, SolveOutcome};
pub use state::{OracleCounts, SolverState};
pub use steps::{
    afba_step, chambolle_pock_step, condat_vu_step, davis_yin_step, papc_step, pd3o_step,
    pd3o_step_reformulated, pdfp_step, relax, step,
};
pub use stepsize::{validate_stepsizes, Condition, StepSizeVerdict, StepSizes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    Pd3o,
    Pd3oReformulated,
    ChambollePock,
    Papc,
    DavisYin,
    Pdfp,
    CondatVu,
    Afba,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 8] = [
        AlgorithmId::Pd3o,
        AlgorithmId::Pd3oReformulated,
        AlgorithmId::ChambollePock,
        AlgorithmId::Papc,
        AlgorithmId::DavisYin,
        AlgorithmId::Pdfp,
        AlgorithmId::CondatVu,
        AlgorithmId::Afba,
    ];

    /// The four methods for the full three-term problem.
    pub const THREE_TERM: [AlgorithmId; 4] = [
        AlgorithmId::Pd3o,
        AlgorithmId::Pdfp,
        AlgorithmId::CondatVu,
        AlgorithmId::Afba,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Pd3o => "pd3o",
            AlgorithmId::Pd3oReformulated => "pd3o-reformulated",
            AlgorithmId::ChambollePock => "chambolle-pock",
            AlgorithmId::Papc => "papc",
            AlgorithmId::DavisYin => "davis-yin",
            AlgorithmId::Pdfp => "pdfp",
            AlgorithmId::CondatVu => "condat-vu",
            AlgorithmId::Afba => "afba",
        }
    }

    /// Whether the state carries the extrapolated point `x̄` instead of relying on `z`.
    pub fn uses_xbar(self) -> bool {
        !matches!(
            self,
            AlgorithmId::Pd3o | AlgorithmId::Papc | AlgorithmId::DavisYin
        )
    }

    /// Whether the fixed-point residual is measured on `(z, s)`; otherwise on `(x, s)`.
    pub fn residual_on_z(self) -> bool {
        matches!(
            self,
            AlgorithmId::Pd3o
                | AlgorithmId::Pd3oReformulated
                | AlgorithmId::ChambollePock
                | AlgorithmId::Papc
                | AlgorithmId::DavisYin
        )
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .or(match key.as_str() {
                "cp" => Some(AlgorithmId::ChambollePock),
                "cv" => Some(AlgorithmId::CondatVu),
                "dy" => Some(AlgorithmId::DavisYin),
                _ => None,
            })
            .ok_or_else(|| {
                let names: Vec<_> = AlgorithmId::ALL.iter().map(|a| a.name()).collect();
                format!("unknown algorithm '{s}' (expected one of {})", names.join(", "))
            })
    }
}
