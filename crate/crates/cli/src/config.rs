use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::Serialize;
use sturmian_cocycle::alpha::AlphaSpec;
use sturmian_cocycle::ball::PrecisionPolicy;
use sturmian_cocycle::families::{AssembledCocycle, BFamily, FamilyKind, HermanParams};
use sturmian_cocycle::gaps::GapStructure;
use sturmian_cocycle::modulation::ModulationContext;
use sturmian_cocycle::staircase::StaircaseContext;

pub const PRECISION_ENV: &str = "STURMIAN_PRECISION";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Pure,
    Stress,
}

impl From<Family> for FamilyKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Pure => FamilyKind::PureRotation,
            Family::Stress => FamilyKind::MaxStress,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Args)]
pub struct GlobalArgs {
    /// Rotation number: `gold2`, `surd:a,b,c,d` for (a+b√d)/c, `cf:a0,a1,(p1,p2)`, or a decimal.
    #[arg(long, global = true, default_value = "gold2")]
    pub alpha: String,

    /// Working precision in bits for ball arithmetic.
    #[arg(long, global = true, env = PRECISION_ENV, default_value_t = 128)]
    pub precision: u32,

    #[arg(long, global = true, default_value_t = 0.1)]
    pub epsilon: f64,

    /// Herman's exponent `c = log((γ+γ⁻¹)/2)`; defaults to log(5/4).
    #[arg(long, global = true, conflicts_with = "gamma")]
    pub c: Option<f64>,

    /// Herman's `γ > 1`, as an alternative to `--c`.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,

    #[arg(long, global = true, value_enum, default_value = "stress")]
    pub family: Family,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
}

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub alpha: Arc<AlphaSpec>,
    pub alpha_text: String,
    pub precision: u32,
    pub epsilon: f64,
    pub c: f64,
    pub gamma: f64,
    pub family: FamilyKind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn from_args(g: &GlobalArgs) -> anyhow::Result<Self> {
        let alpha = Arc::new(AlphaSpec::parse(&g.alpha).with_context(|| format!("--alpha {}", g.alpha))?);
        if !(16..=1 << 16).contains(&g.precision) {
            bail!("--precision must lie in [16, 65536], got {}", g.precision);
        }
        let herman = match (g.c, g.gamma) {
            (_, Some(gamma)) => HermanParams::from_gamma(gamma, alpha.clone())?,
            (Some(c), None) => HermanParams::from_c(c, alpha.clone())?,
            (None, None) => HermanParams::from_c(1.25f64.ln(), alpha.clone())?,
        };
        let (c, epsilon) = (herman.c(), g.epsilon);
        if !(epsilon > 0.0 && c > epsilon) {
            bail!("parameters must satisfy c > ε > 0, got c = {c}, ε = {epsilon}");
        }
        Ok(RunConfig {
            alpha,
            alpha_text: g.alpha.clone(),
            precision: g.precision,
            epsilon,
            c,
            gamma: herman.gamma(),
            family: g.family.into(),
            seed: g.seed,
            out: g.out.clone(),
            format: g.format,
        })
    }

    pub fn herman(&self) -> anyhow::Result<HermanParams> {
        Ok(HermanParams::from_gamma(self.gamma, self.alpha.clone())?)
    }

    pub fn staircase(&self) -> StaircaseContext {
        StaircaseContext::with_policy(self.alpha.clone(), PrecisionPolicy::new(self.precision))
    }

    pub fn gaps(&self) -> Arc<GapStructure> {
        Arc::new(GapStructure::new(self.staircase()))
    }

    pub fn modulation(&self) -> anyhow::Result<Arc<ModulationContext>> {
        Ok(Arc::new(ModulationContext::new(self.gaps(), self.epsilon)?))
    }

    pub fn family(&self) -> anyhow::Result<BFamily> {
        Ok(BFamily::new(self.family, self.herman()?, self.modulation()?))
    }

    pub fn assembled(&self) -> anyhow::Result<AssembledCocycle> {
        Ok(AssembledCocycle::new(self.family()?))
    }

    /// `key: value` pairs echoed at the top of every output.
    pub fn metadata(&self, command: &str) -> Vec<(String, String)> {
        let mut m = vec![
            ("tool".to_string(), format!("sturmian-cocycle {}", env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), command.to_string()),
            ("alpha".to_string(), self.alpha_text.clone()),
            ("alpha_value".to_string(), sturmian_cocycle::alpha::describe(&self.alpha)),
            ("precision".to_string(), self.precision.to_string()),
            ("epsilon".to_string(), self.epsilon.to_string()),
            ("c".to_string(), self.c.to_string()),
            ("gamma".to_string(), self.gamma.to_string()),
            ("family".to_string(), self.family.name().to_string()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        m.retain(|(_, v)| !v.is_empty());
        m
    }
}
