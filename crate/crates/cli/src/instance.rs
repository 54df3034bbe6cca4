use pd3o::problems::{gen_elastic_net_strongly_convex, gen_fused_lasso, gen_toy_quadratic};
use pd3o::{ProblemSpec, Result};

use crate::config::{ProblemKind, RunConfig};

/// A generated problem together with the constants the step-size rules need.
pub struct Instance {
    pub spec: ProblemSpec<f64>,
    pub beta: f64,
    pub norm_aat: f64,
    /// Identifies the data for reference caching.
    pub hash: String,
}

pub fn build(cfg: &RunConfig) -> Result<Instance> {
    let pp = cfg.resolved();
    Ok(match cfg.problem {
        ProblemKind::FusedLasso => {
            let inst = gen_fused_lasso::<f64>(pp.n, pp.p, cfg.seed, pp.noise_var, pp.mu1, pp.mu2)?;
            Instance {
                hash: inst.data_hash(),
                beta: inst.beta,
                norm_aat: inst.norm_aat,
                spec: inst.spec,
            }
        }
        ProblemKind::ElasticNet => {
            let inst = gen_elastic_net_strongly_convex::<f64>(pp.n, pp.p, cfg.seed, pp.mu1, pp.mu2)?;
            Instance {
                hash: inst.data_hash(),
                beta: inst.beta,
                norm_aat: 1.0,
                spec: inst.spec,
            }
        }
        ProblemKind::ToyQuadratic => {
            let inst = gen_toy_quadratic::<f64>(pp.p, cfg.seed)?;
            Instance {
                hash: inst.data_hash(),
                beta: 1.0,
                norm_aat: 1.0,
                spec: inst.spec,
            }
        }
    })
}
